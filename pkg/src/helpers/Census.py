"""
Per-pencil closure censuses and the brute-force lemma checks.

For an eligible pencil every ordered pair of distinct nonsingular members is
tested against the n-gon condition with the vectorised kernels; the counts
are compared with the bounds q − 16 <= |Γ_π| <= q + 5.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.helpers.CayleyCriterion import (
    class3_reference_polys,
    ngon_conditions_batch,
    r_discriminant,
)
from src.helpers.FiniteField import FieldCtx, legendre
from src.helpers.Pencil import (
    DicksonClass,
    DicksonTag,
    Pencil,
    char_cubic_batch,
    class3_pencil,
    cubic_disc_batch,
    dickson_generators,
    valid_param_enumerator,
)
from src.helpers.ProjectivePlane import UPPER
from src.helpers.datadog_instrumentation import record_census, trace_function

logger = logging.getLogger(__name__)


class CensusError(ValueError):
    """Raised when a census is requested outside its supported range."""


def lower_bound(q: int) -> float:
    """𝕃 = (q − 16) / (q(q + 1))."""
    return (q - 16) / (q * (q + 1))


def upper_bound(q: int) -> float:
    """𝕌 = (q + 5) / ((q − 2)(q − 3)); unbounded below q = 5."""
    if q <= 3:
        return float("inf")
    return (q + 5) / ((q - 2) * (q - 3))


@dataclass(frozen=True)
class PencilCensus:
    tag: DicksonTag
    params: str
    q: int
    n: int
    sigma: int
    psi: int
    gamma: int
    roots_of_f: int
    root_pairs: Optional[int] = None
    non_transversal: int = 0

    @property
    def ratio(self) -> float:
        return self.gamma / self.psi if self.psi else 0.0

    @property
    def lower(self) -> float:
        return lower_bound(self.q)

    @property
    def upper(self) -> float:
        return upper_bound(self.q)

    def gamma_in_bounds(self) -> bool:
        """q − 16 <= gamma <= q + 5, and gamma <= q + 1 on the class (18) branch b² = 3c."""
        low, high = self.q - 16, self.q + 5
        if self.tag == DicksonTag.C18 and self.b_squared_is_3c:
            high = self.q + 1
        return low <= self.gamma <= high

    @property
    def b_squared_is_3c(self) -> bool:
        return "b2=3c" in self.params

    def as_row(self) -> dict:
        return {
            "class": self.tag.value,
            "q": self.q,
            "params": self.params,
            "n": self.n,
            "sigma": self.sigma,
            "psi": self.psi,
            "gamma": self.gamma,
            "ratio": self.ratio,
            "roots_of_f": self.roots_of_f,
            "root_pairs": self.root_pairs,
        }


def _census_pencil(cls: DicksonClass, ctx: FieldCtx) -> Pencil:
    if ctx.p == 3:
        if cls.tag != DicksonTag.C3:
            raise CensusError(f"Only class (3) is available in characteristic 3, got {cls}")
        return class3_pencil(ctx)
    return dickson_generators(cls, ctx)


def _params_label(cls: DicksonClass) -> str:
    label = cls.params_label()
    if cls.tag == DicksonTag.C18:
        b, c = cls.params
        if b * b == c * 3:
            label += ";b2=3c"
    return label


def member_uppers(pencil: Pencil) -> tuple[list, np.ndarray]:
    """Nonsingular parameters and their raw upper triangles as an index array."""
    etas = pencil.nonsingular_parameters()
    rows = []
    for eta in etas:
        m = pencil.member_matrix(eta)
        rows.append([m[i][j].index for i, j in UPPER])
    return etas, np.asarray(rows, dtype=np.int64).reshape(len(rows), 6)


@trace_function("census.pencil", resource="Census")
def pencil_census(cls: DicksonClass, ctx: FieldCtx, n: int) -> PencilCensus:
    """
    Count ordered pairs (A, B) of distinct nonsingular members satisfying the n-gon condition.

    Raises:
        PencilError: invalid class parameters.
        CensusError: a class other than (3) in characteristic 3.
    """
    start = time.time()
    pencil = _census_pencil(cls, ctx)
    ops = ctx.array_ops()
    etas, U = member_uppers(pencil)
    sigma = len(etas)

    ua = [U[:, k][:, None] for k in range(6)]
    ub = [U[:, k][None, :] for k in range(6)]
    cubic = char_cubic_batch(ops, ua, ub)
    transversal = cubic_disc_batch(ops, cubic) != 0
    closes = ngon_conditions_batch(ops, cubic, [n])[n]
    off_diagonal = ~np.eye(sigma, dtype=bool)

    gamma = int(np.count_nonzero(closes & transversal & off_diagonal))
    non_transversal = int(np.count_nonzero(~transversal & off_diagonal))
    if non_transversal:
        logger.warning(f"{cls} over {ctx}: {non_transversal} non-transversal member pairs")
    psi = sigma * (sigma - 1) - non_transversal

    root_pairs = None
    if ctx.p == 3:
        root_pairs = int(np.count_nonzero(closes & (transversal | ~off_diagonal)))

    roots_of_f = sum(1 for s in etas if not r_discriminant(pencil, s))

    census = PencilCensus(
        tag=cls.tag,
        params=_params_label(cls),
        q=ctx.q,
        n=n,
        sigma=sigma,
        psi=psi,
        gamma=gamma,
        roots_of_f=roots_of_f,
        root_pairs=root_pairs,
        non_transversal=non_transversal,
    )
    record_census(
        "pencil", ctx.q, n, psi, gamma, start, pairs=sigma * (sigma - 1), pencil_class=cls.tag.value
    )
    logger.debug(
        f"{cls} over {ctx}, n={n}: sigma={sigma} psi={psi} gamma={gamma} roots_of_f={roots_of_f}"
    )
    return census


def pencil_sweep(
    tag, ctx: FieldCtx, n: int, sample: Optional[int] = None, seed: int = 0
) -> list[PencilCensus]:
    """pencil_census over every (or a seeded sample of) valid parameter tuple."""
    results = [
        pencil_census(cls, ctx, n)
        for cls in valid_param_enumerator(tag, ctx, sample=sample, seed=seed)
    ]
    logger.info(f"Class {tag} over {ctx}, n={n}: {len(results)} pencils counted")
    return results


def s_set_expected(ctx: FieldCtx) -> int:
    """(q − 7)/2 when −3 is a square in F_q, (q − 5)/2 otherwise."""
    q = ctx.q
    return (q - 7) // 2 if legendre(ctx(-3)) == 1 else (q - 5) // 2


def s_set_size(ctx: FieldCtx) -> int:
    """
    Number of s outside {0, 1} with s² − s + 1 a nonzero square.

    Raises:
        CensusError: q is not a prime >= 7.
    """
    if ctx.r != 1 or ctx.p < 7:
        raise CensusError(f"The s-set count needs a prime field with q >= 7, got {ctx}")
    count = 0
    for s in ctx.elements():
        if s == 0 or s == 1:
            continue
        if legendre(s * s - s + 1) == 1:
            count += 1
    return count


def zphi_census(phi: tuple, ctx: FieldCtx) -> int:
    """
    |{s in F_q : φ(s) is a square}| for φ(s) = u0·s² + u1·s + u2, zero counting as a square.

    Raises:
        CensusError: φ not genuinely quadratic, or a constant multiple of a square.
    """
    u0, u1, u2 = (ctx(u) for u in phi)
    if not u0:
        raise CensusError(f"φ = {phi} is not quadratic")
    if not (u1 * u1 - u0 * u2 * 4):
        raise CensusError(f"φ = {phi} is a multiple of the square of a linear polynomial")
    return sum(1 for s in ctx.elements() if legendre((u0 * s + u1) * s + u2) >= 0)


def zphi_bounds(ctx: FieldCtx) -> tuple[int, int]:
    """((q − 1)/2, (q + 5)/2)."""
    return (ctx.q - 1) // 2, (ctx.q + 5) // 2


@trace_function("census.char3", resource="Census")
def char3_experiment(ctx: FieldCtx) -> PencilCensus:
    """
    Class (3) triangle census in characteristic 3.

    gamma counts ordered pairs of distinct members; root_pairs also counts
    the diagonal r = s, where the triangle condition vanishes identically
    in this characteristic, and is the count comparable with 2/q.

    Raises:
        CensusError: p ≠ 3 or q < 9.
    """
    if ctx.p != 3:
        raise CensusError(f"The characteristic-3 experiment needs p = 3, got {ctx}")
    if ctx.q < 9:
        raise CensusError(f"The characteristic-3 experiment needs q >= 9, got {ctx}")
    census = pencil_census(DicksonClass(DicksonTag.C3), ctx, 3)
    logger.info(
        f"char-3 census over {ctx}: gamma={census.gamma} root_pairs={census.root_pairs} "
        f"psi={census.psi} (2/q = {2 / ctx.q:.5f})"
    )
    return census


def char3_root_pair_ratio(census: PencilCensus) -> float:
    return census.root_pairs / census.psi


def char3_delta_always_square(ctx: FieldCtx) -> bool:
    """δ(s) from the sample pencil closed forms is a square for every s."""
    return all(legendre(class3_reference_polys(ctx.zero, s)[1]) >= 0 for s in ctx.elements())
