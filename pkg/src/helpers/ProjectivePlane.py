"""
Points, lines and conics of the projective plane over a finite field.

Points and lines are coordinate triples normalised so that the first nonzero
entry is 1. A conic is stored as the Hessian matrix of its quadratic form
(diagonal = twice the square coefficient, off-diagonal = the full cross-term
coefficient), normalised so the first nonzero upper-triangle entry is 1.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

from src.helpers.FiniteField import FieldCtx, Fq, legendre, sqrt

logger = logging.getLogger(__name__)

# Row-major order of the upper triangle of a symmetric 3x3 matrix.
UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))

Matrix = tuple[tuple[Fq, Fq, Fq], tuple[Fq, Fq, Fq], tuple[Fq, Fq, Fq]]


class GeometryError(ValueError):
    """Raised when a geometric operation's precondition does not hold."""


def _normalize(values: Sequence[Fq]) -> tuple[Fq, ...]:
    for v in values:
        if v:
            scale = v.inverse()
            return tuple(x * scale for x in values)
    raise GeometryError("All-zero coordinates do not define a projective object")


@dataclass(frozen=True)
class _Triple:
    coords: tuple[Fq, Fq, Fq]

    def __post_init__(self):
        if len(self.coords) != 3:
            raise GeometryError(f"Expected 3 coordinates, got {len(self.coords)}")
        object.__setattr__(self, "coords", _normalize(self.coords))

    @classmethod
    def of(cls, ctx: FieldCtx, *values):
        return cls(tuple(ctx(v) for v in values))

    @property
    def ctx(self) -> FieldCtx:
        return self.coords[0].ctx

    @property
    def key(self) -> tuple:
        return tuple(c.key for c in self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __str__(self) -> str:
        return "[" + ",".join(str(c) for c in self.coords) + "]"


class PPoint(_Triple):
    """A point [x,y,z] of P^2(F_q)."""


class PLine(_Triple):
    """The line ux + vy + wz = 0, stored as [u,v,w]."""

    def contains(self, P: PPoint) -> bool:
        return not _dot(self.coords, P.coords)


def _dot(a: Sequence[Fq], b: Sequence[Fq]) -> Fq:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a: Sequence[Fq], b: Sequence[Fq]) -> tuple[Fq, Fq, Fq]:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def matrix_det3(m: Sequence[Sequence[Fq]]) -> Fq:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def matrix_mul(a: Sequence[Sequence[Fq]], b: Sequence[Sequence[Fq]]) -> Matrix:
    return tuple(
        tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j] for j in range(3))
        for i in range(3)
    )


def matrix_transpose(m: Sequence[Sequence[Fq]]) -> Matrix:
    return tuple(tuple(m[j][i] for j in range(3)) for i in range(3))


def symmetric_from_upper(upper: Sequence[Fq]) -> Matrix:
    a, b, c, d, e, f = upper
    return ((a, b, c), (b, d, e), (c, e, f))


def as_matrix(ctx: FieldCtx, rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(ctx(x) for x in row) for row in rows)


@dataclass(frozen=True)
class Conic:
    """A conic XᵀMX = 0 with M symmetric, normalised up to scalar."""

    mat: Matrix

    def __post_init__(self):
        m = self.mat
        if any(m[i][j] != m[j][i] for i in range(3) for j in range(i + 1, 3)):
            raise GeometryError("Conic matrix must be symmetric")
        upper = _normalize([m[i][j] for i, j in UPPER])
        object.__setattr__(self, "mat", symmetric_from_upper(upper))

    @classmethod
    def from_matrix(cls, ctx: FieldCtx, rows: Sequence[Sequence]) -> "Conic":
        return cls(as_matrix(ctx, rows))

    @classmethod
    def from_upper(cls, ctx: FieldCtx, upper: Sequence) -> "Conic":
        return cls(symmetric_from_upper([ctx(x) for x in upper]))

    @classmethod
    def from_form(cls, ctx: FieldCtx, xx=0, yy=0, zz=0, xy=0, xz=0, yz=0) -> "Conic":
        """Conic of xx·x² + yy·y² + zz·z² + xy·xy + xz·xz + yz·yz."""
        return cls(hessian(ctx, xx, yy, zz, xy, xz, yz))

    @property
    def ctx(self) -> FieldCtx:
        return self.mat[0][0].ctx

    @property
    def upper(self) -> tuple[Fq, ...]:
        return tuple(self.mat[i][j] for i, j in UPPER)

    @property
    def key(self) -> tuple:
        return tuple(x.key for x in self.upper)

    @cached_property
    def det(self) -> Fq:
        return matrix_det3(self.mat)

    @cached_property
    def nonsingular(self) -> bool:
        return bool(self.det)

    def bilinear(self, P: Sequence[Fq], Q: Sequence[Fq]) -> Fq:
        """PᵀMQ."""
        m = self.mat
        return sum(
            (P[i] * m[i][j] * Q[j] for i in range(3) for j in range(3)),
            start=self.ctx.zero,
        )

    def apply(self, P: Sequence[Fq]) -> tuple[Fq, Fq, Fq]:
        m = self.mat
        return tuple(m[i][0] * P[0] + m[i][1] * P[1] + m[i][2] * P[2] for i in range(3))

    def __str__(self) -> str:
        return "[" + ",".join(str(x) for x in self.upper) + "]"


def hessian(ctx: FieldCtx, xx=0, yy=0, zz=0, xy=0, xz=0, yz=0) -> Matrix:
    """Raw Hessian matrix of a ternary quadratic form, without normalisation."""
    xx, yy, zz, xy, xz, yz = (ctx(v) for v in (xx, yy, zz, xy, xz, yz))
    return (
        (xx * 2, xy, xz),
        (xy, yy * 2, yz),
        (xz, yz, zz * 2),
    )


def det3(C: Conic) -> Fq:
    return C.det


def on_conic(P: PPoint, C: Conic) -> bool:
    return not C.bilinear(P.coords, P.coords)


def polar_line(P: PPoint, C: Conic) -> PLine:
    if not C.nonsingular:
        raise GeometryError(f"Polar line with respect to singular conic {C}")
    return PLine(C.apply(P.coords))


def line_through(P: PPoint, Q: PPoint) -> PLine:
    if P == Q:
        raise GeometryError(f"Line through the single point {P}")
    return PLine(_cross(P.coords, Q.coords))


def meet(L: PLine, M: PLine) -> PPoint:
    if L == M:
        raise GeometryError(f"Intersection of the line {L} with itself")
    return PPoint(_cross(L.coords, M.coords))


def line_basis(L: PLine) -> tuple[PPoint, PPoint]:
    """Two distinct points spanning L."""
    ctx = L.ctx
    u, v, w = L.coords
    zero, one = ctx.zero, ctx.one
    if u:
        return PPoint((-v, one, zero)), PPoint((-w, zero, one))
    if v:
        return PPoint((one, zero, zero)), PPoint((zero, -w, one))
    return PPoint((one, zero, zero)), PPoint((zero, one, zero))


def line_points(L: PLine) -> list[PPoint]:
    """All q + 1 rational points of L in canonical order."""
    S, T = line_basis(L)
    ctx = L.ctx
    pts = {S}
    for t in ctx.elements():
        pts.add(PPoint(tuple(t * s + x for s, x in zip(S.coords, T.coords))))
    return sorted(pts, key=lambda P: P.key)


def _combine(lam: Fq, S: PPoint, mu: Fq, T: PPoint) -> PPoint:
    return PPoint(tuple(lam * s + mu * t for s, t in zip(S.coords, T.coords)))


def line_conic_intersect(L: PLine, C: Conic) -> list[PPoint]:
    """
    Rational points of L ∩ C in canonical order.

    L is parametrised by its basis points S, T and the binary quadratic
    a·λ² + 2b·λμ + c·μ² is solved over P^1. A line lying on a degenerate
    conic yields all of its q + 1 points.
    """
    S, T = line_basis(L)
    a = C.bilinear(S.coords, S.coords)
    b = C.bilinear(S.coords, T.coords)
    c = C.bilinear(T.coords, T.coords)
    one = L.ctx.one

    if not a and not b and not c:
        return line_points(L)

    pts = set()
    if not a:
        pts.add(S)
        if b:
            pts.add(_combine(-c, S, b * 2, T))
    else:
        disc = b * b - a * c
        if legendre(disc) >= 0:
            root = sqrt(disc)
            a_inv = a.inverse()
            for lam in ((-b + root) * a_inv, (-b - root) * a_inv):
                pts.add(_combine(lam, S, one, T))
    return sorted(pts, key=lambda P: P.key)


def second_intersection(P: PPoint, L: PLine, C: Conic) -> PPoint:
    """The other point of L ∩ C, or P itself when L is tangent to C at P."""
    if not on_conic(P, C) or not L.contains(P):
        raise GeometryError(f"{P} must lie on both the conic {C} and the line {L}")
    S, T = line_basis(L)
    Y = S if S != P else T
    py = C.bilinear(P.coords, Y.coords)
    yy = C.bilinear(Y.coords, Y.coords)
    if not yy:
        if not py:
            raise GeometryError(f"Line {L} lies on the conic {C}")
        return Y
    if not py:
        return P
    t = -(py * 2) / yy
    return PPoint(tuple(p + t * y for p, y in zip(P.coords, Y.coords)))


def plane_points(ctx: FieldCtx) -> Iterator[PPoint]:
    """All q² + q + 1 points of P^2 in canonical order."""
    zero, one = ctx.zero, ctx.one
    yield PPoint((zero, zero, one))
    for z in ctx.elements():
        yield PPoint((zero, one, z))
    for y in ctx.elements():
        for z in ctx.elements():
            yield PPoint((one, y, z))


def first_rational_point(C: Conic) -> PPoint:
    """First point of C in the canonical scan of P^2."""
    for P in plane_points(C.ctx):
        if on_conic(P, C):
            return P
    raise GeometryError(f"Conic {C} has no rational point")


def parametrization(C: Conic) -> tuple[PPoint, PPoint, PPoint]:
    """
    Base point P0 of C and two points U, V spanning a line missing P0.

    X = λU + μV runs over that line and param_point(C, P0, X) is the second
    intersection of the line P0X with C, giving a bijection P^1 -> C.
    """
    P0 = first_rational_point(C)
    ctx = C.ctx
    zero, one = ctx.zero, ctx.one
    e = [PPoint((one, zero, zero)), PPoint((zero, one, zero)), PPoint((zero, zero, one))]
    if P0.coords[0]:
        return P0, e[1], e[2]
    if P0.coords[1]:
        return P0, e[0], e[2]
    return P0, e[0], e[1]


def param_point(C: Conic, P0: PPoint, X: Sequence[Fq]) -> tuple[Fq, Fq, Fq]:
    """Unnormalised (XᵀMX)·P0 − 2(P0ᵀMX)·X, which lies on C."""
    xx = C.bilinear(X, X)
    px = C.bilinear(P0.coords, X) * 2
    return tuple(xx * p - px * x for p, x in zip(P0.coords, X))


def conic_points(C: Conic) -> list[PPoint]:
    """All q + 1 rational points of a nonsingular conic, in canonical order."""
    if not C.nonsingular:
        raise GeometryError(f"Point enumeration of singular conic {C}")
    P0, U, V = parametrization(C)
    ctx = C.ctx
    pts = {PPoint(param_point(C, P0, U.coords))}
    for t in ctx.elements():
        X = tuple(t * u + v for u, v in zip(U.coords, V.coords))
        pts.add(PPoint(param_point(C, P0, X)))
    return sorted(pts, key=lambda P: P.key)


def congruence_transform(C: Conic, M: Sequence[Sequence]) -> Conic:
    """The conic with matrix MᵀCM, i.e. the image of C under X -> M⁻¹X."""
    ctx = C.ctx
    M = as_matrix(ctx, M)
    if not matrix_det3(M):
        raise GeometryError("Congruence by a singular matrix")
    return Conic(matrix_mul(matrix_transpose(M), matrix_mul(C.mat, M)))
