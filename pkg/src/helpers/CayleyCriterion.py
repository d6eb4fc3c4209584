"""
Cayley's closure conditions for a pair of conics.

With Δ(t) = det(tA + B) and c0 = Δ(0) ≠ 0, the series
√(Δ(t)/c0) = 1 + h1·t + h2·t² + ... is computed entirely inside F_q. An
A∘B n-gon closes iff a Hankel determinant in the h_k vanishes:

    n = 2m + 1:  det[h_{i+j+2}], i, j < m
    n = 2m:      det[h_{i+j+3}], i, j < m - 1

The true Maclaurin coefficients of √Δ are √c0·h_k, so every such
determinant differs from the one here by a nonzero power of √c0.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

from src.helpers.FiniteField import ArrayOps, Fq
from src.helpers.Pencil import (
    CharCubic,
    Pencil,
    char_cubic,
    char_cubic_from_matrices,
    is_transversal,
)
from src.helpers.ProjectivePlane import Conic

logger = logging.getLogger(__name__)

SERIES_ORDER = 8
N_RANGE = range(3, 10)


class CayleyError(ValueError):
    """Raised when a closure condition is requested outside its domain."""


@dataclass(frozen=True)
class SqrtSeries:
    """Coefficients h1..h8 of √(Δ(t)/c0)."""

    h: tuple[Fq, ...]

    def __getitem__(self, k: int) -> Fq:
        """h_k for 1 <= k <= 8."""
        if not 1 <= k <= len(self.h):
            raise IndexError(f"Series coefficient h{k} out of range")
        return self.h[k - 1]

    def truncated_square(self) -> list[Fq]:
        """Coefficients of (1 + Σ h_k t^k)² modulo t^(order+1)."""
        one = self.h[0].ctx.one
        full = [one, *self.h]
        return [
            sum((full[i] * full[k - i] for i in range(k + 1)), start=one * 0)
            for k in range(len(full))
        ]


def hankel_shape(n: int) -> tuple[int, int]:
    """(first series index, size) of the n-gon Hankel determinant."""
    if n not in N_RANGE:
        raise CayleyError(f"Closure conditions are available for n in 3..9, got {n}")
    m, odd = divmod(n, 2)
    if odd:
        return 2, m
    return 3, m - 1


class _ScalarOps:
    """Scalar stand-in for ArrayOps so the determinant code is shared."""

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b


def _det(ops, m: Sequence[Sequence]):
    """Laplace expansion along the first row; sizes up to 4."""
    size = len(m)
    if size == 1:
        return m[0][0]
    if size == 2:
        return ops.sub(ops.mul(m[0][0], m[1][1]), ops.mul(m[0][1], m[1][0]))
    acc = None
    for j in range(size):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = ops.mul(m[0][j], _det(ops, minor))
        if acc is None:
            acc = term
        elif j % 2:
            acc = ops.sub(acc, term)
        else:
            acc = ops.add(acc, term)
    return acc


def hankel_det(h: Sequence, n: int, ops=_ScalarOps):
    """n-gon Hankel determinant from h with h[k] = h_k (h[0] unused)."""
    start, size = hankel_shape(n)
    m = [[h[start + i + j] for j in range(size)] for i in range(size)]
    return _det(ops, m)


def sqrt_series(delta: CharCubic, order: int = SERIES_ORDER) -> SqrtSeries:
    """
    Normalised square-root series of Δ.

    Raises:
        CayleyError: c0 = 0, i.e. B singular.
    """
    c0 = delta.c0
    if not c0:
        raise CayleyError("Square-root series needs Δ(0) = det(B) ≠ 0")
    ctx = c0.ctx
    c0_inv = c0.inverse()
    e = [ctx.one, delta.c1 * c0_inv, delta.c2 * c0_inv, delta.c3 * c0_inv]
    e += [ctx.zero] * (order + 1 - len(e))
    half = ctx(2).inverse()
    h = [ctx.one]
    for k in range(1, order + 1):
        acc = e[k]
        for i in range(1, k):
            acc = acc - h[i] * h[k - i]
        h.append(acc * half)
    return SqrtSeries(tuple(h[1:]))


def ngon_condition_from_cubic(delta: CharCubic, n: int) -> bool:
    series = sqrt_series(delta)
    return not hankel_det((None, *series.h), n)


def ngon_condition(A: Conic, B: Conic, n: int) -> bool:
    """
    Whether an A∘B n-gon closes, for 3 <= n <= 9.

    Raises:
        CayleyError: n out of range, or the pair is not transversal.
        PencilError: singular or coincident conics.
    """
    hankel_shape(n)
    if not is_transversal(A, B):
        raise CayleyError(f"Closure condition needs a transversal pair, got {A} and {B}")
    return ngon_condition_from_cubic(char_cubic(A, B), n)


def triangle_condition_fast(delta: CharCubic) -> bool:
    """4·c0·c2 − c1² = 0."""
    if not delta.c0:
        raise CayleyError("Triangle condition needs Δ(0) ≠ 0")
    return not (delta.c0 * delta.c2 * 4 - delta.c1 * delta.c1)


def tetragon_condition_fast(delta: CharCubic) -> bool:
    """8·c0²·c3 − 4·c0·c1·c2 + c1³ = 0."""
    if not delta.c0:
        raise CayleyError("Tetragon condition needs Δ(0) ≠ 0")
    c0, c1, c2, c3 = delta.coeffs
    return not (c0 * c0 * c3 * 8 - c0 * c1 * c2 * 4 + c1 * c1 * c1)


def class3_reference_polys(r: Fq, s: Fq) -> tuple[Fq, Fq, Fq, Fq]:
    """
    Closed forms on the pencil C_α = αxy + (1−α)xz − yz, for A = C_r, B = C_s.

    Returns:
        (H2, δ, e, f) with H2 = r² + (6s² − 4s³ − 4s)r + s⁴ the triangle
        condition, δ its discriminant in r, and δ = e·f where
        e = 16s²(s−1)² and f = s² − s + 1.
    """
    s2 = s * s
    H2 = r * r + (s2 * 6 - s2 * s * 4 - s * 4) * r + s2 * s2
    e = s2 * (s - 1) * (s - 1) * 16
    f = s2 - s + 1
    return H2, e * f, e, f


def class3_tetragon_poly(r: Fq, s: Fq) -> Fq:
    """s⁶ − (2r+2)s⁵ + 5rs⁴ − 5r²s² + (2r³+2r²)s − r³ on the C_α pencil."""
    s2 = s * s
    s4 = s2 * s2
    r2 = r * r
    return (
        s4 * s2
        - (r * 2 + 2) * s4 * s
        + r * s4 * 5
        - r2 * s2 * 5
        + (r2 * r * 2 + r2 * 2) * s
        - r2 * r
    )


def ngon_conditions_batch(ops: ArrayOps, c: Sequence, n_values: Sequence[int]) -> dict:
    """
    Vanishing masks of the Hankel determinants for arrays of cubics.

    Entries with c0 = 0 are meaningless; callers mask them out.
    """
    c0, c1, c2, c3 = c
    for n in n_values:
        hankel_shape(n)
    if list(n_values) == [3]:
        tri = ops.sub(ops.scale(4, ops.mul(c0, c2)), ops.mul(c1, c1))
        return {3: tri == 0}
    top = max(hankel_shape(n)[0] + 2 * hankel_shape(n)[1] - 2 for n in n_values)
    c0_inv = ops.inv(c0)
    e = [None, ops.mul(c1, c0_inv), ops.mul(c2, c0_inv), ops.mul(c3, c0_inv)]
    half = ops.inv(ops.const(2))
    h = [None]
    for k in range(1, top + 1):
        acc = e[k] if k <= 3 else 0
        for i in range(1, k):
            acc = ops.sub(acc, ops.mul(h[i], h[k - i]))
        h.append(ops.mul(acc, half))
    return {n: hankel_det(h, n, ops) == 0 for n in n_values}


def triangle_quadratic_in_r(pencil: Pencil, s: Fq) -> tuple[Fq, Fq, Fq]:
    """
    4c0c2 − c1² for A = rF + G, B = sF + G, as (k2, k1, k0) with value k2·r² + k1·r + k0.

    c0 does not depend on r, c1 is linear and c2 quadratic in r, so three
    evaluations determine the polynomial.
    """
    ctx = pencil.ctx
    B = pencil.member_matrix(s)

    def value(r: int) -> Fq:
        d = char_cubic_from_matrices(pencil.member_matrix(ctx(r)), B)
        return d.c0 * d.c2 * 4 - d.c1 * d.c1

    t0, t1, t2 = value(0), value(1), value(2)
    k2 = (t2 - t1 * 2 + t0) / 2
    k1 = t1 - t0 - k2
    return k2, k1, t0


def r_discriminant(pencil: Pencil, s: Fq) -> Fq:
    k2, k1, k0 = triangle_quadratic_in_r(pencil, s)
    return k1 * k1 - k2 * k0 * 4
