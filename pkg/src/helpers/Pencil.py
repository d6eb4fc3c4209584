"""
Pencils of conics over F_q.

The characteristic cubic det(tA + B) of a pair, transversality by its
discriminant (with an independent parametrisation-based oracle), and the
canonical generators of the five Dickson classes whose pencils consist of
nonsingular transversal pairs. Vectorised versions of the cubic and its
discriminant over arrays of upper-triangle entries feed the census kernels.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import StrEnum
from typing import Iterator, Optional, Sequence

import numpy as np

from src.helpers.FiniteField import (
    ArrayOps,
    FieldCtx,
    Fq,
    has_root,
    is_squarefree,
    legendre,
    poly_degree,
    poly_gcd,
    poly_derivative,
    poly_mul,
    poly_trim,
)
from src.helpers.ProjectivePlane import (
    UPPER,
    Conic,
    Matrix,
    hessian,
    matrix_det3,
    param_point,
    parametrization,
)
from src.helpers.random_streams import sample_rng

logger = logging.getLogger(__name__)

# Off-diagonal entries appear twice in tr(XY) for symmetric X, Y.
TRACE_WEIGHTS = (1, 2, 2, 1, 2, 1)


class PencilError(ValueError):
    """Raised for invalid pencil parameters or pair preconditions."""


@dataclass(frozen=True)
class CharCubic:
    """Δ(t) = c3·t³ + c2·t² + c1·t + c0 = det(tA + B)."""

    c0: Fq
    c1: Fq
    c2: Fq
    c3: Fq

    @property
    def coeffs(self) -> tuple[Fq, Fq, Fq, Fq]:
        return (self.c0, self.c1, self.c2, self.c3)

    def __call__(self, t: Fq) -> Fq:
        return ((self.c3 * t + self.c2) * t + self.c1) * t + self.c0

    def reversed(self) -> "CharCubic":
        return CharCubic(self.c3, self.c2, self.c1, self.c0)


def adjugate_upper(u: Sequence) -> tuple:
    """Upper triangle of adj(M) from the upper triangle of symmetric M."""
    a, b, c, d, e, f = u
    return (
        d * f - e * e,
        c * e - b * f,
        b * e - c * d,
        a * f - c * c,
        b * c - a * e,
        a * d - b * b,
    )


def char_cubic_from_matrices(MA: Sequence[Sequence[Fq]], MB: Sequence[Sequence[Fq]]) -> CharCubic:
    """det(t·MA + MB) for raw symmetric matrices, via adjugate traces."""
    ua = [MA[i][j] for i, j in UPPER]
    ub = [MB[i][j] for i, j in UPPER]
    adj_a = adjugate_upper(ua)
    adj_b = adjugate_upper(ub)
    c3 = matrix_det3(MA)
    c0 = matrix_det3(MB)
    c2 = sum((adj_a[k] * ub[k] * w for k, w in enumerate(TRACE_WEIGHTS)), start=c0 * 0)
    c1 = sum((ua[k] * adj_b[k] * w for k, w in enumerate(TRACE_WEIGHTS)), start=c0 * 0)
    return CharCubic(c0, c1, c2, c3)


def char_cubic(A: Conic, B: Conic) -> CharCubic:
    return char_cubic_from_matrices(A.mat, B.mat)


def cubic_disc(delta: CharCubic) -> Fq:
    c0, c1, c2, c3 = delta.coeffs
    return (
        c3 * c2 * c1 * c0 * 18
        - c2 * c2 * c2 * c0 * 4
        + c2 * c2 * c1 * c1
        - c3 * c1 * c1 * c1 * 4
        - c3 * c3 * c0 * c0 * 27
    )


def _check_pair(A: Conic, B: Conic):
    if not A.nonsingular or not B.nonsingular:
        raise PencilError(f"Transversality needs nonsingular conics, got {A} and {B}")
    if A == B:
        raise PencilError(f"Transversality of the conic {A} with itself")


def is_transversal(A: Conic, B: Conic) -> bool:
    """Four distinct common points over the closure, by the cubic discriminant."""
    _check_pair(A, B)
    return bool(cubic_disc(char_cubic(A, B)))


def pullback_quartic(A: Conic, B: Conic) -> list[Fq]:
    """
    B restricted to A's parametrisation: a binary quartic in (λ, μ).

    Returned as the coefficients of g(λ, 1), low degree first, length 5.
    A degree below 4 means roots at λ:μ = 1:0. Roots correspond to common
    points of A and B, with multiplicity equal to intersection multiplicity.
    """
    P0, U, V = parametrization(A)
    zero = A.ctx.zero
    # Each coordinate of param_point is a binary quadratic; sample it at
    # (λ, μ) = (0, 1), (1, 0) and (1, 1) to read off its coefficients.
    at_v = param_point(A, P0, V.coords)
    at_u = param_point(A, P0, U.coords)
    at_uv = param_point(A, P0, tuple(u + v for u, v in zip(U.coords, V.coords)))
    phi = [[at_v[k], at_uv[k] - at_u[k] - at_v[k], at_u[k]] for k in range(3)]
    g = [zero] * 5
    for i in range(3):
        for j in range(3):
            if B.mat[i][j]:
                prod = poly_mul(phi[i], phi[j])
                for k, c in enumerate(prod):
                    g[k] = g[k] + B.mat[i][j] * c
    return g


def transversality_oracle(A: Conic, B: Conic) -> bool:
    """Four distinct roots of the pullback quartic over the closure."""
    _check_pair(A, B)
    g = poly_trim(pullback_quartic(A, B))
    if poly_degree(g) < 3:
        return False
    return is_squarefree(g)


def common_point_count(A: Conic, B: Conic) -> int:
    """
    Distinct common points of A and B over the algebraic closure.

    Needs p >= 5 so that every root multiplicity (at most 4) is below p.
    """
    _check_pair(A, B)
    if A.ctx.p < 5:
        raise PencilError("Common point count needs characteristic at least 5")
    g = poly_trim(pullback_quartic(A, B))
    degree = poly_degree(g)
    repeated = poly_degree(poly_gcd(g, poly_derivative(g)))
    return degree - repeated + (1 if degree < 4 else 0)


class DicksonTag(StrEnum):
    C3 = "3"
    C14 = "14"
    C16 = "16"
    C18 = "18"
    C19 = "19"


PARAM_NAMES = {
    DicksonTag.C3: (),
    DicksonTag.C14: ("e",),
    DicksonTag.C16: ("e1", "e2"),
    DicksonTag.C18: ("b", "c"),
    DicksonTag.C19: ("nu", "rho", "sigma"),
}


@dataclass(frozen=True)
class DicksonClass:
    tag: DicksonTag
    params: tuple[Fq, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tag", DicksonTag(self.tag))
        expected = len(PARAM_NAMES[self.tag])
        if len(self.params) != expected:
            raise PencilError(
                f"Class {self.tag} takes {expected} parameters, got {len(self.params)}"
            )

    @classmethod
    def of(cls, ctx: FieldCtx, tag, *params) -> "DicksonClass":
        return cls(DicksonTag(str(tag)), tuple(ctx(v) for v in params))

    @property
    def named_params(self) -> dict[str, int]:
        return {n: int(v) for n, v in zip(PARAM_NAMES[self.tag], self.params)}

    def params_label(self) -> str:
        return ";".join(f"{n}={v}" for n, v in self.named_params.items())

    def __str__(self) -> str:
        return f"C{self.tag}({self.params_label()})"


def quadratic_irreducible(e: Fq) -> bool:
    """T² + T + e has no root in F_q."""
    return legendre(1 - e * 4) == -1


def class18_cubic(b: Fq, c: Fq) -> list[Fq]:
    """g(T) = T³ + bT² + cT + 1, low degree first."""
    one = b.ctx.one
    return [one, c, b, one]


def validate_params(cls: DicksonClass) -> Optional[str]:
    """Reason the parameters violate the class invariants, None if valid."""
    tag, params = cls.tag, cls.params
    if tag == DicksonTag.C14 and not quadratic_irreducible(params[0]):
        return "T^2 + T + e is reducible"
    if tag == DicksonTag.C16:
        if not quadratic_irreducible(params[0]):
            return "T^2 + T + e1 is reducible"
        if not quadratic_irreducible(params[1]):
            return "T^2 + T + e2 is reducible"
    if tag == DicksonTag.C18 and has_root(class18_cubic(*params)):
        return "g(T) = T^3 + bT^2 + cT + 1 has a root"
    if tag == DicksonTag.C19:
        nu, rho, sigma = params
        if legendre(nu) != -1:
            return "nu is not a non-square"
        if legendre(rho * rho - nu * sigma * sigma * 4) != -1:
            return "rho^2 - 4 nu sigma^2 is not a non-square"
    return None


@dataclass(frozen=True)
class Pencil:
    """
    Members η·F + G for η in F_q, and F for η = ∞ (passed as None).

    F and G are kept as raw matrices so that the η parametrisation of
    the members is exact.
    """

    F: Matrix
    G: Matrix
    dickson: Optional[DicksonClass] = None

    def __post_init__(self):
        if Conic(self.F) == Conic(self.G):
            raise PencilError("Pencil generators coincide projectively")

    @property
    def ctx(self) -> FieldCtx:
        return self.F[0][0].ctx

    def member_matrix(self, eta: Optional[Fq]) -> Matrix:
        if eta is None:
            return self.F
        return tuple(
            tuple(eta * f + g for f, g in zip(row_f, row_g))
            for row_f, row_g in zip(self.F, self.G)
        )

    def member(self, eta: Optional[Fq]) -> Conic:
        return Conic(self.member_matrix(eta))

    def parameters(self) -> Iterator[Optional[Fq]]:
        """η over F_q in index order, then ∞."""
        yield from self.ctx.elements()
        yield None

    def nonsingular_parameters(self) -> list[Optional[Fq]]:
        return [eta for eta in self.parameters() if matrix_det3(self.member_matrix(eta))]


def _generators(cls: DicksonClass, ctx: FieldCtx) -> tuple[Matrix, Matrix]:
    tag, params = cls.tag, cls.params
    if tag == DicksonTag.C3:
        return hessian(ctx, xy=1), hessian(ctx, zz=1, yz=1, xz=1)
    if tag == DicksonTag.C14:
        (e,) = params
        return hessian(ctx, xy=1), hessian(ctx, yy=1, yz=1, xz=1, zz=e)
    if tag == DicksonTag.C16:
        e1, e2 = params
        return hessian(ctx, xy=1), hessian(ctx, xx=e1, yy=e2, xz=1, yz=1, zz=1)
    if tag == DicksonTag.C18:
        b, c = params
        return hessian(ctx, yy=1, xz=-1), hessian(ctx, xx=1, yy=b, xy=c, yz=1)
    nu, rho, sigma = params
    return hessian(ctx, xx=1, yy=-nu), hessian(ctx, zz=1, yy=-rho, xy=sigma * 2)


def dickson_generators(cls: DicksonClass, ctx: FieldCtx) -> Pencil:
    """
    The canonical pencil of an eligible Dickson class.

    Raises:
        PencilError: characteristic below 5 or parameters violating the
            class invariants.
    """
    if ctx.p < 5:
        raise PencilError(f"Dickson pencils need characteristic at least 5, got {ctx.p}")
    reason = validate_params(cls)
    if reason:
        raise PencilError(f"Invalid parameters for {cls} over {ctx}: {reason}")
    F, G = _generators(cls, ctx)
    return Pencil(F, G, cls)


def class3_pencil(ctx: FieldCtx) -> Pencil:
    """Class (3) generators xy and z² + yz + xz, valid in every odd characteristic."""
    cls = DicksonClass(DicksonTag.C3)
    F, G = _generators(cls, ctx)
    return Pencil(F, G, cls)


def sample_pencil(ctx: FieldCtx) -> Pencil:
    """The class (3) pencil of C_α = αxy + (1−α)xz − yz, singular at α = 0, 1, ∞."""
    return Pencil(
        hessian(ctx, xy=1, xz=-1),
        hessian(ctx, xz=1, yz=-1),
        DicksonClass(DicksonTag.C3),
    )


def c_alpha(ctx: FieldCtx, alpha) -> Conic:
    return sample_pencil(ctx).member(ctx(alpha))


def nonsingular_members(pencil: Pencil) -> list[Conic]:
    return [pencil.member(eta) for eta in pencil.nonsingular_parameters()]


def _param_space(tag: DicksonTag, ctx: FieldCtx) -> Iterator[tuple[Fq, ...]]:
    arity = len(PARAM_NAMES[tag])
    for combo in itertools.product(range(ctx.q), repeat=arity):
        yield tuple(ctx.element(i) for i in combo)


def valid_param_enumerator(
    tag, ctx: FieldCtx, sample: Optional[int] = None, seed: int = 0
) -> Iterator[DicksonClass]:
    """
    Valid parameter tuples of a class.

    Without sample, every valid tuple in lexicographic index order. With
    sample, at most that many distinct valid tuples drawn with a seeded
    stream, returned in the same order.
    """
    tag = DicksonTag(str(tag))
    if ctx.p < 5:
        raise PencilError(f"Dickson pencils need characteristic at least 5, got {ctx.p}")
    arity = len(PARAM_NAMES[tag])
    space = ctx.q**arity

    def valid(params):
        return validate_params(DicksonClass(tag, params)) is None

    if sample is None or space <= 4 * sample:
        found = [DicksonClass(tag, params) for params in _param_space(tag, ctx) if valid(params)]
        if sample is not None and len(found) > sample:
            rng = sample_rng(seed, tag.value)
            picks = np.sort(rng.choice(len(found), size=sample, replace=False))
            found = [found[i] for i in picks]
        logger.debug(f"Class {tag} over {ctx}: {len(found)} parameter tuples")
        yield from found
        return

    rng = sample_rng(seed, tag.value)
    chosen = set()
    attempts = 0
    while len(chosen) < sample and attempts < 200 * sample:
        attempts += 1
        combo = tuple(int(i) for i in rng.integers(0, ctx.q, size=arity))
        if combo not in chosen and valid(tuple(ctx.element(i) for i in combo)):
            chosen.add(combo)
    if len(chosen) < sample:
        logger.warning(f"Class {tag} over {ctx}: only {len(chosen)} of {sample} tuples sampled")
    for combo in sorted(chosen):
        yield DicksonClass(tag, tuple(ctx.element(i) for i in combo))


# Vectorised kernels over upper-triangle entry arrays.


def adjugate_upper_batch(ops: ArrayOps, u: Sequence) -> tuple:
    a, b, c, d, e, f = u
    m, s = ops.mul, ops.sub
    return (
        s(m(d, f), m(e, e)),
        s(m(c, e), m(b, f)),
        s(m(b, e), m(c, d)),
        s(m(a, f), m(c, c)),
        s(m(b, c), m(a, e)),
        s(m(a, d), m(b, b)),
    )


def det_from_adjugate_batch(ops: ArrayOps, u: Sequence, adj: Sequence):
    return ops.sum(ops.mul(u[0], adj[0]), ops.mul(u[1], adj[1]), ops.mul(u[2], adj[2]))


def weighted_trace_batch(ops: ArrayOps, x: Sequence, y: Sequence):
    """tr(XY) for symmetric X, Y given by upper triangles."""
    terms = []
    for k, w in enumerate(TRACE_WEIGHTS):
        t = ops.mul(x[k], y[k])
        terms.append(t if w == 1 else ops.scale(w, t))
    return ops.sum(*terms)


def char_cubic_batch(ops: ArrayOps, ua: Sequence, ub: Sequence) -> tuple:
    """(c0, c1, c2, c3) arrays of det(tA + B) for broadcast upper triangles."""
    adj_a = adjugate_upper_batch(ops, ua)
    adj_b = adjugate_upper_batch(ops, ub)
    c3 = det_from_adjugate_batch(ops, ua, adj_a)
    c0 = det_from_adjugate_batch(ops, ub, adj_b)
    c2 = weighted_trace_batch(ops, adj_a, ub)
    c1 = weighted_trace_batch(ops, ua, adj_b)
    return c0, c1, c2, c3


def cubic_disc_batch(ops: ArrayOps, c: Sequence):
    c0, c1, c2, c3 = c
    m = ops.mul
    t1 = ops.scale(18, m(m(c3, c2), m(c1, c0)))
    t2 = ops.scale(4, m(m(c2, c2), m(c2, c0)))
    t3 = m(m(c2, c2), m(c1, c1))
    t4 = ops.scale(4, m(m(c3, c1), m(c1, c1)))
    t5 = ops.scale(27, m(m(c3, c3), m(c0, c0)))
    return ops.sub(ops.sub(ops.add(ops.sub(t1, t2), t3), t4), t5)
