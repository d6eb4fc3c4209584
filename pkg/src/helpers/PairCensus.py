"""
All-pairs censuses over the space of nonsingular conics.

Ψ is the set of ordered pairs of distinct nonsingular conics meeting
transversally and Γ ⊆ Ψ the pairs admitting a closed n-gon. At small q the
ratio |Γ|/|Ψ| is computed exactly; at larger q it is estimated from seeded
uniform draws. Work is split into shards whose counts are summed in shard
order, so totals do not depend on how many workers ran them.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cache
from typing import Iterable, Optional, Sequence

import numpy as np

from src.helpers.CayleyCriterion import N_RANGE, ngon_condition, ngon_conditions_batch
from src.helpers.Census import CensusError, lower_bound, upper_bound
from src.helpers.FiniteField import FieldCtx, field_new
from src.helpers.Pencil import (
    adjugate_upper_batch,
    char_cubic_batch,
    cubic_disc_batch,
    det_from_adjugate_batch,
    is_transversal,
)
from src.helpers.PonceletChain import OutcomeKind, start_outcomes
from src.helpers.ProjectivePlane import Conic
from src.helpers.datadog_instrumentation import (
    Metrics,
    get_statsd,
    record_census,
    trace_function,
)
from src.helpers.random_streams import sample_rng, shard_rng

logger = logging.getLogger(__name__)
statsd = get_statsd()

MIN_SAMPLES = 10_000
DEFAULT_SHARD_SIZE = 262_144
EXHAUSTIVE_BLOCK = 64


def divisors_in_range(n: int) -> list[int]:
    """m | n with 3 <= m < n."""
    return [m for m in N_RANGE if m < n and n % m == 0]


def _condition_set(n_values: Iterable[int]) -> list[int]:
    wanted = set(n_values)
    for n in list(wanted):
        wanted.update(divisors_in_range(n))
    return sorted(wanted)


@dataclass
class PairCounts:
    """Mergeable tallies for one or more n over a batch of pairs."""

    drawn: int = 0
    psi: int = 0
    gamma: dict = field(default_factory=dict)
    overlaps: dict = field(default_factory=dict)

    def merge(self, other: "PairCounts") -> "PairCounts":
        gamma = dict(self.gamma)
        for n, v in other.gamma.items():
            gamma[n] = gamma.get(n, 0) + v
        overlaps = dict(self.overlaps)
        for key, v in other.overlaps.items():
            overlaps[key] = overlaps.get(key, 0) + v
        return PairCounts(self.drawn + other.drawn, self.psi + other.psi, gamma, overlaps)


def tally_pairs(ops, ua: Sequence, ub: Sequence, n_values: Sequence[int], keep=None) -> PairCounts:
    """
    Count transversal pairs and their closures among broadcast upper triangles.

    Pairs with either conic singular are dropped; `keep` masks out further
    pairs (e.g. A = B) before anything is counted.
    """
    cubic = char_cubic_batch(ops, ua, ub)
    c0, _, _, c3 = cubic
    valid = (np.asarray(c0) != 0) & (np.asarray(c3) != 0)
    if keep is not None:
        valid = valid & keep
    valid = valid & (cubic_disc_batch(ops, cubic) != 0)

    conditions = _condition_set(n_values)
    masks = ngon_conditions_batch(ops, cubic, conditions)
    gamma = {n: int(np.count_nonzero(masks[n] & valid)) for n in n_values}
    overlaps = {
        (n, m): int(np.count_nonzero(masks[n] & masks[m] & valid))
        for n in n_values
        for m in divisors_in_range(n)
    }
    drawn = int(np.broadcast(*ua, *ub).size)
    return PairCounts(drawn, int(np.count_nonzero(valid)), gamma, overlaps)


@dataclass(frozen=True)
class GlobalCensus:
    q: int
    n: int
    psi_total: int
    gamma_total: int
    mode: str
    samples: Optional[int] = None
    seed: Optional[int] = None
    overlaps: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.gamma_total / self.psi_total if self.psi_total else 0.0

    @property
    def lower(self) -> float:
        return lower_bound(self.q)

    @property
    def upper(self) -> float:
        return upper_bound(self.q)

    @property
    def stderr(self) -> Optional[float]:
        """Binomial standard error of the ratio; None for exact counts."""
        if self.mode != "montecarlo" or not self.psi_total:
            return None
        r = self.ratio
        return math.sqrt(r * (1 - r) / self.psi_total)

    @property
    def tau_hat(self) -> float:
        return self.q * self.ratio

    def within_bounds(self, sigmas: float = 0.0) -> bool:
        """𝕃 <= ratio <= 𝕌, widened by `sigmas` standard errors for estimates."""
        slack = sigmas * (self.stderr or 0.0)
        return self.lower - slack <= self.ratio <= self.upper + slack

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "psi_total": self.psi_total,
            "gamma_total": self.gamma_total,
            "ratio": self.ratio,
            "lower": self.lower,
            "upper": self.upper if math.isfinite(self.upper) else None,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
            "stderr": self.stderr,
            "tau_hat": self.tau_hat,
            "overlaps": {str(m): v for (_, m), v in sorted(self.overlaps.items())},
        }


def _run_jobs(fn, jobs: list, workers: int) -> list:
    """Results of fn over jobs, in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as executor:
        return list(executor.map(fn, *zip(*jobs)))


def _reduce(results: list[PairCounts]) -> PairCounts:
    total = PairCounts()
    for part in results:
        total = total.merge(part)
    return total


@cache
def normalized_conic_uppers(p: int, r: int = 1) -> np.ndarray:
    """
    Upper triangles of every nonsingular conic, one row per projective class.

    Rows are index tuples whose first nonzero entry is the field's one, in
    lexicographic order.
    """
    ctx = field_new(p, r)
    q = ctx.q
    rows = np.indices((q,) * 6, dtype=np.int64).reshape(6, -1).T
    nonzero = rows != 0
    has_nonzero = nonzero.any(axis=1)
    lead = rows[np.arange(len(rows)), nonzero.argmax(axis=1)]
    rows = rows[has_nonzero & (lead == ctx.one.index)]

    ops = ctx.array_ops()
    u = [rows[:, k] for k in range(6)]
    det = det_from_adjugate_batch(ops, u, adjugate_upper_batch(ops, u))
    return rows[np.asarray(det) != 0]


def _exhaustive_block(p: int, r: int, start: int, stop: int, n_values: tuple) -> PairCounts:
    ctx = field_new(p, r)
    U = normalized_conic_uppers(p, r)
    ua = [U[start:stop, k][:, None] for k in range(6)]
    ub = [U[:, k][None, :] for k in range(6)]
    keep = np.arange(start, stop)[:, None] != np.arange(len(U))[None, :]
    return tally_pairs(ctx.array_ops(), ua, ub, n_values, keep=keep)


def exhaustive_counts(
    ctx: FieldCtx, n_values: Sequence[int], workers: int = 1, max_q: int = 9
) -> PairCounts:
    """
    Exact tallies over all ordered pairs of distinct nonsingular conics.

    Raises:
        CensusError: q above max_q; use the Monte-Carlo census instead.
    """
    if ctx.q > max_q:
        raise CensusError(
            f"Exhaustive census over {ctx} exceeds q <= {max_q}; use the Monte-Carlo census"
        )
    total_conics = len(normalized_conic_uppers(ctx.p, ctx.r))
    logger.info(f"Exhaustive census over {ctx}: {total_conics} nonsingular conics")
    jobs = [
        (ctx.p, ctx.r, start, min(start + EXHAUSTIVE_BLOCK, total_conics), tuple(n_values))
        for start in range(0, total_conics, EXHAUSTIVE_BLOCK)
    ]
    counts = _reduce(_run_jobs(_exhaustive_block, jobs, workers))
    statsd.increment(Metrics.CENSUS_SHARDS, len(jobs), tags=["kind:exhaustive"])
    return counts


@trace_function("census.exhaustive", resource="PairCensus")
def exhaustive_pair_census(
    ctx: FieldCtx, n: int, workers: int = 1, max_q: int = 9
) -> GlobalCensus:
    """
    Exact |Γ|/|Ψ| by enumeration of every ordered pair of distinct nonsingular conics.

    Raises:
        CensusError: q above max_q.
    """
    start = time.time()
    counts = exhaustive_counts(ctx, [n], workers=workers, max_q=max_q)
    census = GlobalCensus(
        q=ctx.q,
        n=n,
        psi_total=counts.psi,
        gamma_total=counts.gamma[n],
        mode="exhaustive",
        overlaps=counts.overlaps,
    )
    _record(census, start, "exhaustive")
    return census


def _mc_shard(p: int, r: int, seed: int, shard: int, size: int, n_values: tuple) -> PairCounts:
    ctx = field_new(p, r)
    rng = shard_rng(seed, shard)
    draws = rng.integers(0, ctx.q, size=(2, 6, size), dtype=np.int64)
    ua = [draws[0, k] for k in range(6)]
    ub = [draws[1, k] for k in range(6)]
    # coincident draws have a vanishing discriminant and drop out with the rest
    return tally_pairs(ctx.array_ops(), ua, ub, n_values)


def monte_carlo_counts(
    ctx: FieldCtx,
    n_values: Sequence[int],
    samples: int,
    seed: int,
    workers: int = 1,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> PairCounts:
    """
    Tallies over `samples` seeded uniform draws of upper-triangle pairs.

    Raises:
        CensusError: fewer than 10⁴ samples.
    """
    if samples < MIN_SAMPLES:
        raise CensusError(f"Monte-Carlo census needs at least {MIN_SAMPLES} samples, got {samples}")
    jobs = [
        (ctx.p, ctx.r, seed, shard, min(shard_size, samples - offset), tuple(n_values))
        for shard, offset in enumerate(range(0, samples, shard_size))
    ]
    logger.info(
        f"Monte-Carlo census over {ctx}: {samples} pairs in {len(jobs)} shards, "
        f"seed={seed}, workers={workers}"
    )
    counts = _reduce(_run_jobs(_mc_shard, jobs, workers))
    statsd.increment(Metrics.CENSUS_SHARDS, len(jobs), tags=["kind:montecarlo"])
    return counts


@trace_function("census.montecarlo", resource="PairCensus")
def monte_carlo_census(
    ctx: FieldCtx,
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> GlobalCensus:
    """Estimate |Γ|/|Ψ| and τ̂ = q·ratio from seeded random pairs."""
    start = time.time()
    counts = monte_carlo_counts(ctx, [n], samples, seed, workers, shard_size)
    census = GlobalCensus(
        q=ctx.q,
        n=n,
        psi_total=counts.psi,
        gamma_total=counts.gamma[n],
        mode="montecarlo",
        samples=samples,
        seed=seed,
        overlaps=counts.overlaps,
    )
    _record(census, start, "montecarlo")
    return census


def _record(census: GlobalCensus, start: float, kind: str):
    record_census(kind, census.q, census.n, census.psi_total, census.gamma_total, start)
    logger.info(
        f"{kind} census q={census.q} n={census.n}: |Ψ|={census.psi_total} "
        f"|Γ|={census.gamma_total} ratio={census.ratio:.6f} "
        f"bounds=[{census.lower:.6f}, {census.upper:.6f}]"
    )


@dataclass(frozen=True)
class TauTable:
    """τ̂ per (q, n) with standard errors and divisor-overlap counts."""

    q_values: tuple[int, ...]
    n_values: tuple[int, ...]
    censuses: dict

    def tau(self, q: int, n: int) -> float:
        return self.censuses[(q, n)].tau_hat

    def tau_stderr(self, q: int, n: int) -> float:
        return self.q_stat(q, n, "stderr")

    def q_stat(self, q: int, n: int, stat: str):
        census = self.censuses[(q, n)]
        if stat == "tau":
            return census.tau_hat
        if stat == "stderr":
            return q * (census.stderr or 0.0)
        if stat.startswith("overlap"):
            return census.overlaps.get((n, int(stat[len("overlap"):])), 0)
        raise KeyError(stat)

    def stats(self) -> list[str]:
        divisors = sorted({m for n in self.n_values for m in divisors_in_range(n)})
        return ["tau", "stderr", *(f"overlap{m}" for m in divisors)]


@trace_function("census.tau_table", resource="PairCensus")
def tau_table(
    ctxs: Sequence[FieldCtx],
    n_values: Sequence[int],
    samples: int,
    seed: int,
    workers: int = 1,
    shard_size: int = DEFAULT_SHARD_SIZE,
) -> TauTable:
    """
    τ̂_n over several fields; every n at a given q shares the same draws.

    Overlaps count pairs satisfying both the n- and the m-condition for
    m | n; they are reported and never subtracted from τ̂.
    """
    n_values = tuple(n_values)
    censuses = {}
    for ctx in ctxs:
        counts = monte_carlo_counts(ctx, n_values, samples, seed, workers, shard_size)
        for n in n_values:
            censuses[(ctx.q, n)] = GlobalCensus(
                q=ctx.q,
                n=n,
                psi_total=counts.psi,
                gamma_total=counts.gamma[n],
                mode="montecarlo",
                samples=samples,
                seed=seed,
                overlaps={k: v for k, v in counts.overlaps.items() if k[0] == n},
            )
            logger.info(f"q={ctx.q} n={n}: tau_hat={censuses[(ctx.q, n)].tau_hat:.4f}")
    return TauTable(tuple(ctx.q for ctx in ctxs), n_values, censuses)


def geometric_agreement(A: Conic, B: Conic, n: int, condition: bool) -> bool:
    """
    Whether every chain on (A, B) is consistent with the n-gon condition.

    A chain closing into an m-gon must have m | n exactly when the condition
    holds, and no chain may stay open when it holds.
    """
    for _, _, outcome in start_outcomes(A, B, max_steps=3 * n):
        if outcome.kind == OutcomeKind.OPEN and condition:
            return False
        if outcome.kind == OutcomeKind.CLOSED and (n % outcome.n == 0) != condition:
            return False
    return True


def random_nonsingular_conic(ctx: FieldCtx, rng: np.random.Generator) -> Conic:
    while True:
        upper = [ctx.element(int(i)) for i in rng.integers(0, ctx.q, size=6)]
        if any(upper):
            conic = Conic.from_upper(ctx, upper)
            if conic.nonsingular:
                return conic


@trace_function("census.geometric_cross_check", resource="PairCensus")
def geometric_cross_check(ctx: FieldCtx, n: int, pairs: int, seed: int) -> tuple[int, int]:
    """
    Compare the n-gon condition with the chain construction on random transversal pairs.

    Returns:
        (pairs checked, disagreements)
    """
    rng = sample_rng(seed, f"cross-check-{ctx.q}-{n}")
    checked = disagreements = 0
    while checked < pairs:
        A = random_nonsingular_conic(ctx, rng)
        B = random_nonsingular_conic(ctx, rng)
        if A == B or not is_transversal(A, B):
            continue
        checked += 1
        if not geometric_agreement(A, B, n, ngon_condition(A, B, n)):
            disagreements += 1
            logger.error(f"Chain construction disagrees with the {n}-gon condition on {A}, {B}")
    statsd.increment(Metrics.CHECK_PASS if not disagreements else Metrics.CHECK_FAIL)
    return checked, disagreements
