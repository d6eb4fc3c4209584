"""
Finite field arithmetic for odd q = p^r.

Prime fields store an integer representative in [0, p). Extension fields store
a tuple of r coefficients over F_p, low degree first, reduced modulo the
context's monic irreducible modulus. Every element also has an integer index
sum(a_i * p**i) in [0, q), which is what reports and traces print and what the
vectorised kernels in ArrayOps operate on.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cache, cached_property
from typing import Iterator, Optional, Sequence

import numpy as np
from sympy import factorint, isprime

logger = logging.getLogger(__name__)

WORD_LIMIT = 2**31
MAX_DEGREE = 4
TABLE_LIMIT = 2401


class FieldError(ValueError):
    """Raised for invalid field construction or undefined field operations."""


class FieldMismatchError(FieldError):
    """Raised when elements of different fields meet in one operation."""


def _poly_rem_p(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    """Remainder of a modulo the monic polynomial m over F_p."""
    rem = [x % p for x in a]
    dm = len(m) - 1
    for k in range(len(rem) - 1, dm - 1, -1):
        c = rem[k]
        if c:
            for i in range(dm + 1):
                rem[k - dm + i] = (rem[k - dm + i] - c * m[i]) % p
    return rem[:dm]


def is_irreducible_mod_p(f: Sequence[int], p: int) -> bool:
    """Trial division of the monic f by every monic polynomial of degree <= deg(f)/2."""
    degree = len(f) - 1
    for d in range(1, degree // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not any(_poly_rem_p(f, (*low, 1), p)):
                return False
    return True


def smallest_irreducible(p: int, r: int) -> tuple[int, ...]:
    """
    Lexicographically smallest monic irreducible polynomial of degree r over F_p.

    Coefficients are compared low degree first and returned in that order,
    leading 1 included.
    """
    if r == 1:
        return (0, 1)
    # product() varies the last coordinate fastest, so a_0 is most significant
    for low in itertools.product(range(p), repeat=r):
        if low[0] == 0:
            continue
        candidate = (*low, 1)
        if is_irreducible_mod_p(candidate, p):
            return candidate
    raise FieldError(f"No irreducible polynomial of degree {r} over F_{p}")


@dataclass(frozen=True)
class FieldCtx:
    """The field F_q, q = p^r, with its modulus (trivial for r = 1)."""

    p: int
    r: int
    modulus: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.p**self.r

    def __str__(self) -> str:
        return f"F_{self.q}"

    def __call__(self, value) -> "Fq":
        """Coerce an int (embedded via F_p), a coefficient vector or an Fq."""
        if isinstance(value, Fq):
            if value.ctx != self:
                raise FieldMismatchError(f"Element of {value.ctx} used in {self}")
            return value
        if isinstance(value, (int, np.integer)):
            value = int(value) % self.p
            if self.r == 1:
                return Fq(self, value)
            return Fq(self, (value,) + (0,) * (self.r - 1))
        if isinstance(value, (tuple, list)):
            if self.r == 1:
                if len(value) != 1:
                    raise FieldError(f"Coefficient vector {value} too long for {self}")
                return Fq(self, int(value[0]) % self.p)
            if len(value) > self.r:
                raise FieldError(f"Coefficient vector {value} too long for {self}")
            coeffs = tuple(int(c) % self.p for c in value)
            return Fq(self, coeffs + (0,) * (self.r - len(coeffs)))
        raise TypeError(f"Cannot coerce {type(value).__name__} into {self}")

    def element(self, index: int) -> "Fq":
        """Element with integer index sum(a_i * p**i)."""
        if not 0 <= index < self.q:
            raise FieldError(f"Index {index} out of range for {self}")
        if self.r == 1:
            return Fq(self, index)
        digits = []
        for _ in range(self.r):
            index, d = divmod(index, self.p)
            digits.append(d)
        return Fq(self, tuple(digits))

    def elements(self) -> Iterator["Fq"]:
        """All q elements in index order."""
        for i in range(self.q):
            yield self.element(i)

    @cached_property
    def zero(self) -> "Fq":
        return self(0)

    @cached_property
    def one(self) -> "Fq":
        return self(1)

    @cached_property
    def nonresidue(self) -> "Fq":
        """Smallest-index non-square."""
        for a in self.elements():
            if legendre(a) == -1:
                return a
        raise FieldError(f"{self} has no non-square")

    @cached_property
    def primitive(self) -> "Fq":
        """Smallest-index generator of the multiplicative group."""
        order = self.q - 1
        cofactors = [order // ell for ell in factorint(order)]
        for a in itertools.islice(self.elements(), 1, None):
            if all(a**k != self.one for k in cofactors):
                return a
        raise FieldError(f"{self} has no primitive element")

    def array_ops(self) -> "ArrayOps":
        return _array_ops(self)

    # Representation-level arithmetic

    def _add(self, a, b):
        if self.r == 1:
            return (a + b) % self.p
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def _neg(self, a):
        if self.r == 1:
            return -a % self.p
        return tuple(-x % self.p for x in a)

    def _mul(self, a, b):
        if self.r == 1:
            return a * b % self.p
        prod = [0] * (2 * self.r - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        rem = _poly_rem_p(prod, self.modulus, self.p)
        return tuple(rem) + (0,) * (self.r - len(rem))

    def _index(self, rep) -> int:
        if self.r == 1:
            return rep
        return sum(c * self.p**i for i, c in enumerate(rep))


class Fq:
    """An element of a FieldCtx."""

    __slots__ = ("ctx", "rep")

    def __init__(self, ctx: FieldCtx, rep):
        self.ctx = ctx
        self.rep = rep

    def _coerce(self, other) -> Optional["Fq"]:
        if isinstance(other, Fq):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise FieldMismatchError(
                    f"Mixed fields in one operation: {self.ctx} and {other.ctx}"
                )
            return other
        if isinstance(other, (int, np.integer)):
            return self.ctx(other)
        return None

    @property
    def index(self) -> int:
        return self.ctx._index(self.rep)

    @property
    def key(self):
        """Sort key: the integer for prime fields, the coefficient vector otherwise."""
        return self.rep

    def __int__(self) -> int:
        return self.index

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fq(self.ctx, self.ctx._add(self.rep, other.rep))

    __radd__ = __add__

    def __neg__(self):
        return Fq(self.ctx, self.ctx._neg(self.rep))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Fq(self.ctx, self.ctx._mul(self.rep, other.rep))

    __rmul__ = __mul__

    def inverse(self) -> "Fq":
        if not self:
            raise FieldError(f"Inverse of zero in {self.ctx}")
        return self ** (self.ctx.q - 2)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        if self.ctx.r == 1:
            return Fq(self.ctx, pow(self.rep, exponent, self.ctx.p))
        result = self.ctx.one.rep
        base = self.rep
        while exponent:
            if exponent & 1:
                result = self.ctx._mul(result, base)
            base = self.ctx._mul(base, base)
            exponent >>= 1
        return Fq(self.ctx, result)

    def __bool__(self) -> bool:
        if self.ctx.r == 1:
            return self.rep != 0
        return any(self.rep)

    def __eq__(self, other) -> bool:
        if isinstance(other, Fq):
            return self.ctx == other.ctx and self.rep == other.rep
        if isinstance(other, (int, np.integer)):
            return self.rep == self.ctx(other).rep
        return NotImplemented

    def __hash__(self) -> int:
        # equal to hash(n) for the canonical integer n in 0..p-1
        return hash(self.index)

    def __repr__(self) -> str:
        return f"Fq({self.index}, {self.ctx})"

    def __str__(self) -> str:
        return str(self.index)


@cache
def field_new(p: int, r: int = 1) -> FieldCtx:
    """
    Build F_q for q = p^r.

    Args:
        p: odd prime characteristic
        r: extension degree, 1 <= r <= 4

    Returns:
        The field context; identical arguments return the identical context.

    Raises:
        FieldError: p not an odd prime, r out of range, or q beyond the word budget.
    """
    if not isinstance(p, int) or not isprime(p):
        raise FieldError(f"Characteristic {p} is not prime")
    if p == 2:
        raise FieldError("Characteristic 2 is not supported")
    if not 1 <= r <= MAX_DEGREE:
        raise FieldError(f"Extension degree {r} outside 1..{MAX_DEGREE}")
    if p**r >= WORD_LIMIT:
        raise FieldError(f"Field order {p}^{r} exceeds the word budget")
    modulus = smallest_irreducible(p, r)
    ctx = FieldCtx(p, r, modulus)
    logger.debug(f"Constructed {ctx} with modulus {modulus}")
    return ctx


def legendre(a: Fq) -> int:
    """Quadratic character of a: 0, +1 for a nonzero square, -1 otherwise."""
    if not a:
        return 0
    return 1 if a ** ((a.ctx.q - 1) // 2) == 1 else -1


def sqrt(a: Fq) -> Optional[Fq]:
    """
    Canonical square root of a, or None when a is a non-square.

    Tonelli-Shanks; of the two roots the one with the smaller sort key is
    returned (for prime fields the representative <= (q-1)/2).
    """
    ctx = a.ctx
    if not a:
        return ctx.zero
    if legendre(a) != 1:
        return None
    Q, S = ctx.q - 1, 0
    while Q % 2 == 0:
        Q //= 2
        S += 1
    M = S
    c = ctx.nonresidue**Q
    t = a**Q
    R = a ** ((Q + 1) // 2)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2
            i += 1
        b = c ** (2 ** (M - i - 1))
        M = i
        c = b * b
        t = t * c
        R = R * b
    return min(R, -R, key=lambda x: x.key)


# Polynomials over F_q as lists of Fq, low degree first.


def poly_trim(f: Sequence[Fq]) -> list[Fq]:
    f = list(f)
    while f and not f[-1]:
        f.pop()
    return f


def poly_degree(f: Sequence[Fq]) -> int:
    """Degree of f, -1 for the zero polynomial."""
    return len(poly_trim(f)) - 1


def poly_eval(f: Sequence[Fq], x: Fq) -> Fq:
    acc = x.ctx.zero
    for c in reversed(f):
        acc = acc * x + c
    return acc


def poly_mul(f: Sequence[Fq], g: Sequence[Fq]) -> list[Fq]:
    if not f or not g:
        return []
    zero = (f[0] * 0) if f else None
    out = [zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = out[i + j] + a * b
    return poly_trim(out)


def poly_divmod(f: Sequence[Fq], g: Sequence[Fq]) -> tuple[list[Fq], list[Fq]]:
    g = poly_trim(g)
    if not g:
        raise FieldError("Polynomial division by zero")
    rem = poly_trim(f)
    if len(rem) < len(g):
        return [], rem
    lead_inv = g[-1].inverse()
    quot = [g[-1] * 0] * (len(rem) - len(g) + 1)
    while len(rem) >= len(g):
        shift = len(rem) - len(g)
        coeff = rem[-1] * lead_inv
        quot[shift] = coeff
        for i, b in enumerate(g):
            rem[shift + i] = rem[shift + i] - coeff * b
        rem = poly_trim(rem)
    return poly_trim(quot), rem


def poly_gcd(f: Sequence[Fq], g: Sequence[Fq]) -> list[Fq]:
    """Monic gcd; the zero polynomial only when both inputs are zero."""
    a, b = poly_trim(f), poly_trim(g)
    while b:
        a, b = b, poly_divmod(a, b)[1]
    if not a:
        return []
    lead_inv = a[-1].inverse()
    return [c * lead_inv for c in a]


def poly_derivative(f: Sequence[Fq]) -> list[Fq]:
    return poly_trim([c * k for k, c in enumerate(f)][1:])


def poly_powmod(base: Sequence[Fq], exponent: int, mod: Sequence[Fq]) -> list[Fq]:
    ctx = poly_trim(mod)[-1].ctx
    result = [ctx.one]
    base = poly_divmod(base, mod)[1]
    while exponent:
        if exponent & 1:
            result = poly_divmod(poly_mul(result, base), mod)[1]
        base = poly_divmod(poly_mul(base, base), mod)[1]
        exponent >>= 1
    return result


def has_root(f: Sequence[Fq]) -> bool:
    """Whether f (nonconstant) has a root in its field, via gcd(f, T^q - T)."""
    f = poly_trim(f)
    ctx = f[-1].ctx
    if poly_degree(f) < 1:
        return False
    t_q = poly_powmod([ctx.zero, ctx.one], ctx.q, f)
    t_q = t_q + [ctx.zero] * max(0, 2 - len(t_q))
    t_q[1] = t_q[1] - 1
    return poly_degree(poly_gcd(f, t_q)) >= 1


def is_squarefree(f: Sequence[Fq]) -> bool:
    """Square-free over the algebraic closure (F_q is perfect)."""
    f = poly_trim(f)
    if len(f) <= 2:
        return bool(f)
    return poly_degree(poly_gcd(f, poly_derivative(f))) == 0


class ArrayOps:
    """
    Element-wise field arithmetic on numpy int64 arrays of element indices.

    Prime fields use modular arithmetic directly. Extension fields use an
    addition table plus discrete log/exp tables, limited to q <= 2401.
    Scalars (python ints that are valid indices) broadcast like arrays.
    Index 0 is the zero element and const(k) the image of the integer k.
    """

    def __init__(self, ctx: FieldCtx):
        self.ctx = ctx
        self.p = ctx.p
        self.q = ctx.q
        self._inv_table = None
        if ctx.r == 1:
            if self.p <= 2**16:
                table = [0] + [pow(x, self.p - 2, self.p) for x in range(1, self.p)]
                self._inv_table = np.asarray(table, dtype=np.int64)
            return
        if self.q > TABLE_LIMIT:
            raise FieldError(f"Vectorised arithmetic over {ctx} exceeds {TABLE_LIMIT}")
        self._build_tables()

    def _build_tables(self):
        ctx, p, q, r = self.ctx, self.p, self.q, self.ctx.r
        idx = np.arange(q, dtype=np.int64)
        powers = p ** np.arange(r, dtype=np.int64)
        digits = (idx[:, None] // powers) % p
        add = np.zeros((q, q), dtype=np.int64)
        for k in range(r):
            add += ((digits[:, k][:, None] + digits[:, k][None, :]) % p) * powers[k]
        self._add = add.astype(np.int32)
        self._neg = (((-digits) % p) @ powers).astype(np.int64)

        exp = np.zeros(q - 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        g = ctx.primitive
        x = ctx.one
        for k in range(q - 1):
            exp[k] = x.index
            log[x.index] = k
            x = x * g
        self._exp = exp
        self._log = log

    def const(self, k: int) -> int:
        return int(k) % self.p

    def asarray(self, values) -> np.ndarray:
        return np.asarray([int(v) for v in values], dtype=np.int64)

    def add(self, a, b):
        if self.ctx.r == 1:
            return (a + b) % self.p
        return self._add[a, b].astype(np.int64)

    def neg(self, a):
        if self.ctx.r == 1:
            return (-a) % self.p
        return self._neg[a]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.ctx.r == 1:
            return (a * b) % self.p
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        prod = self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, prod)

    def square(self, a):
        return self.mul(a, a)

    def scale(self, k: int, a):
        return self.mul(self.const(k), a)

    def inv(self, a):
        """Inverse of every nonzero entry; zero entries map to zero."""
        if self.ctx.r == 1:
            if self._inv_table is not None:
                return self._inv_table[a]
            return self._pow(a, self.p - 2)
        a = np.asarray(a, dtype=np.int64)
        out = self._exp[(-self._log[a]) % (self.q - 1)]
        return np.where(a == 0, 0, out)

    def _pow(self, a, e: int):
        result = np.ones_like(np.asarray(a, dtype=np.int64))
        base = np.asarray(a, dtype=np.int64) % self.p
        while e:
            if e & 1:
                result = (result * base) % self.p
            base = (base * base) % self.p
            e >>= 1
        return result

    def sum(self, *terms):
        acc = terms[0]
        for t in terms[1:]:
            acc = self.add(acc, t)
        return acc


@cache
def _array_ops(ctx: FieldCtx) -> ArrayOps:
    return ArrayOps(ctx)
