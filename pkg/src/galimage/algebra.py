"""Exact arithmetic substrate.

Prime fields F_p, dense polynomials over a pluggable coefficient field,
arbitrary precision rationals, quadratic field elements a + b*sqrt(d),
CRT, modular square roots, and rational reconstruction.  Everything here
is exact; no floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import factorint, isprime

# Rationals are plain fractions.Fraction values throughout the package.
BigRational = Fraction


def sqrt_mod_p(a: int, p: int) -> int | None:
    """Square root of a mod p (p an odd prime), or None for a non-residue.

    Returns the root r normalized so that r <= p - r, which makes the
    choice of root reproducible across runs.
    """
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        return min(r, p - r)
    # Tonelli-Shanks.
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = (t * t) % p, 1
        while t2 != 1:
            t2 = (t2 * t2) % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, (b * b) % p
        t, r = (t * c) % p, (r * b) % p
    return min(r, p - r)


def crt(residues: list[int], moduli: list[int]) -> int:
    """The unique x mod prod(moduli) with x = r_i mod m_i.

    Moduli must be pairwise coprime; raises ValueError otherwise.
    """
    if len(residues) != len(moduli) or not moduli:
        raise ValueError("residues and moduli must be nonempty and equal length")
    x, m = residues[0] % moduli[0], moduli[0]
    for r, n in zip(residues[1:], moduli[1:]):
        g, inv, _ = _xgcd(m % n, n)
        if g != 1:
            raise ValueError(f"moduli not coprime: gcd({m}, {n}) > 1")
        x = (x + m * ((r - x) * inv % n)) % (m * n)
        m *= n
    return x


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, s, t) with g = gcd(a, b) = s*a + t*b."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def rational_reconstruct(
    r: int, M: int, num_bound: int, den_bound: int
) -> Fraction | None:
    """The unique a/b with |a| <= num_bound, 0 < b <= den_bound,
    gcd(b, M) = 1 and a = r*b mod M, or None if no such fraction exists.

    Requires M > 2 * num_bound * den_bound, which guarantees uniqueness.
    """
    if M <= 2 * num_bound * den_bound:
        raise ValueError("modulus too small for unique reconstruction")
    # Half-extended Euclid on (M, r); stop once the remainder is small
    # enough to be a numerator.
    r0, r1 = M, r % M
    t0, t1 = 0, 1
    while r1 > num_bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    a, b = r1, t1
    if b < 0:
        a, b = -a, -b
    if b == 0 or b > den_bound or abs(a) > num_bound:
        return None
    if math.gcd(b, M) != 1 or math.gcd(abs(a), b) != 1:
        return None
    if (a - r * b) % M != 0:
        return None
    return Fraction(a, b)


def squarefree_part(n: int) -> int:
    """The squarefree integer d with n = d * (square), preserving sign."""
    if n == 0:
        return 0
    sign = -1 if n < 0 else 1
    d = 1
    for q, e in factorint(abs(n)).items():
        if e % 2:
            d *= q
    return sign * d


# ---------------------------------------------------------------------------
# Coefficient fields.  A field object exposes exact arithmetic on raw
# payloads (ints for F_p, Fraction for Q, QuadFieldElement for Q(sqrt d));
# polynomials and the generic Jacobian arithmetic are written against this
# interface so one implementation serves all three coefficient domains.
# ---------------------------------------------------------------------------


class FpField:
    """The prime field F_p with elements stored as ints in [0, p)."""

    def __init__(self, p: int):
        if p < 2 or not isprime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.zero = 0
        self.one = 1 % p

    def of_int(self, n: int) -> int:
        return n % self.p

    def of_fraction(self, q: Fraction) -> int:
        den = q.denominator % self.p
        if den == 0:
            raise ZeroDivisionError(f"denominator divisible by {self.p}")
        return q.numerator * pow(den, -1, self.p) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.p)

    def div(self, a, b):
        return a * self.inv(b) % self.p

    def is_zero(self, a) -> bool:
        return a % self.p == 0

    def eq(self, a, b) -> bool:
        return (a - b) % self.p == 0

    def sqrt(self, a):
        return sqrt_mod_p(a % self.p, self.p)

    def __repr__(self):
        return f"FpField({self.p})"


class RationalField:
    """The field Q with elements stored as Fraction."""

    zero = Fraction(0)
    one = Fraction(1)

    def of_int(self, n: int) -> Fraction:
        return Fraction(n)

    def of_fraction(self, q: Fraction) -> Fraction:
        return q

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        return 1 / a

    def div(self, a, b):
        return a / b

    def is_zero(self, a) -> bool:
        return a == 0

    def eq(self, a, b) -> bool:
        return a == b

    def __repr__(self):
        return "QQ"


QQ = RationalField()


@dataclass(frozen=True)
class QuadFieldElement:
    """rational_part + surd_part * sqrt(d), with d squarefree, d != 0, 1."""

    rational_part: Fraction
    surd_part: Fraction
    d: int

    def conj(self) -> "QuadFieldElement":
        return QuadFieldElement(self.rational_part, -self.surd_part, self.d)

    def norm(self) -> Fraction:
        return self.rational_part**2 - self.d * self.surd_part**2

    def is_rational(self) -> bool:
        return self.surd_part == 0

    def __str__(self):
        return f"({self.rational_part})+({self.surd_part})*sqrt({self.d})"


class QuadField:
    """The quadratic field Q(sqrt(d)), d squarefree and not 0 or 1."""

    def __init__(self, d: int):
        if d in (0, 1) or squarefree_part(d) != d:
            raise ValueError(f"d must be squarefree and not 0 or 1, got {d}")
        self.d = d
        self.zero = QuadFieldElement(Fraction(0), Fraction(0), d)
        self.one = QuadFieldElement(Fraction(1), Fraction(0), d)
        self.sqrt_gen = QuadFieldElement(Fraction(0), Fraction(1), d)

    def of_int(self, n: int) -> QuadFieldElement:
        return QuadFieldElement(Fraction(n), Fraction(0), self.d)

    def of_fraction(self, q: Fraction) -> QuadFieldElement:
        return QuadFieldElement(q, Fraction(0), self.d)

    def elem(self, a, b) -> QuadFieldElement:
        return QuadFieldElement(Fraction(a), Fraction(b), self.d)

    def add(self, x, y):
        return QuadFieldElement(
            x.rational_part + y.rational_part, x.surd_part + y.surd_part, self.d
        )

    def sub(self, x, y):
        return QuadFieldElement(
            x.rational_part - y.rational_part, x.surd_part - y.surd_part, self.d
        )

    def mul(self, x, y):
        return QuadFieldElement(
            x.rational_part * y.rational_part + self.d * x.surd_part * y.surd_part,
            x.rational_part * y.surd_part + x.surd_part * y.rational_part,
            self.d,
        )

    def neg(self, x):
        return QuadFieldElement(-x.rational_part, -x.surd_part, self.d)

    def inv(self, x):
        n = x.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadFieldElement(x.rational_part / n, -x.surd_part / n, self.d)

    def div(self, x, y):
        return self.mul(x, self.inv(y))

    def is_zero(self, x) -> bool:
        return x.rational_part == 0 and x.surd_part == 0

    def eq(self, x, y) -> bool:
        return x.rational_part == y.rational_part and x.surd_part == y.surd_part

    def __repr__(self):
        return f"QuadField({self.d})"


@dataclass(frozen=True)
class PrimeFieldElement:
    """An element of F_p carrying its modulus; convenience wrapper over ints."""

    value: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            object.__setattr__(self, "value", self.value % self.modulus)

    def _check(self, other):
        if self.modulus != other.modulus:
            raise ValueError("mixed moduli")

    def __add__(self, other):
        self._check(other)
        return PrimeFieldElement((self.value + other.value) % self.modulus, self.modulus)

    def __sub__(self, other):
        self._check(other)
        return PrimeFieldElement((self.value - other.value) % self.modulus, self.modulus)

    def __mul__(self, other):
        self._check(other)
        return PrimeFieldElement((self.value * other.value) % self.modulus, self.modulus)

    def __neg__(self):
        return PrimeFieldElement(-self.value % self.modulus, self.modulus)

    def inverse(self):
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero")
        return PrimeFieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        return self * other.inverse()


# ---------------------------------------------------------------------------
# Dense polynomials.  Coefficients lowest degree first; the zero polynomial
# is the empty tuple.  Degrees in this package never exceed 6, so all
# algorithms are the naive ones.
# ---------------------------------------------------------------------------


class Poly:
    """Dense polynomial over a coefficient field object."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field, coeffs):
        self.field = field
        cs = list(coeffs)
        while cs and field.is_zero(cs[-1]):
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def from_ints(cls, field, ints):
        return cls(field, [field.of_int(c) for c in ints])

    @classmethod
    def zero(cls, field):
        return cls(field, [])

    @classmethod
    def const(cls, field, c):
        return cls(field, [c])

    @classmethod
    def x(cls, field):
        return cls(field, [field.zero, field.one])

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial having degree -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self):
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else self.field.zero

    def __eq__(self, other):
        return (
            isinstance(other, Poly)
            and len(self.coeffs) == len(other.coeffs)
            and all(self.field.eq(a, b) for a, b in zip(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        K = self.field
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(K, [K.add(self.coeff(i), other.coeff(i)) for i in range(n)])

    def __sub__(self, other):
        K = self.field
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(K, [K.sub(self.coeff(i), other.coeff(i)) for i in range(n)])

    def __neg__(self):
        K = self.field
        return Poly(K, [K.neg(c) for c in self.coeffs])

    def __mul__(self, other):
        K = self.field
        if self.is_zero() or other.is_zero():
            return Poly.zero(K)
        out = [K.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if K.is_zero(a):
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = K.add(out[i + j], K.mul(a, b))
        return Poly(K, out)

    def scale(self, c):
        K = self.field
        return Poly(K, [K.mul(c, a) for a in self.coeffs])

    def shift(self, k: int):
        """Multiply by x^k."""
        if self.is_zero():
            return self
        return Poly(self.field, [self.field.zero] * k + list(self.coeffs))

    def divmod(self, other):
        K = self.field
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly.zero(K), self
        inv_lead = K.inv(other.leading())
        quo = [K.zero] * (dq + 1)
        for k in range(dq, -1, -1):
            c = K.mul(rem[k + other.degree], inv_lead)
            quo[k] = c
            if not K.is_zero(c):
                for j, b in enumerate(other.coeffs):
                    rem[k + j] = K.sub(rem[k + j], K.mul(c, b))
        return Poly(K, quo), Poly(K, rem)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def monic(self):
        if self.is_zero():
            return self
        return self.scale(self.field.inv(self.leading()))

    def evaluate(self, x):
        K = self.field
        acc = K.zero
        for c in reversed(self.coeffs):
            acc = K.add(K.mul(acc, x), c)
        return acc

    def derivative(self):
        K = self.field
        return Poly(
            K,
            [K.mul(K.of_int(i), c) for i, c in enumerate(self.coeffs) if i > 0],
        )

    def __repr__(self):
        return f"Poly({self.coeffs})"


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic() if not a.is_zero() else a


def poly_xgcd(a: Poly, b: Poly) -> tuple[Poly, Poly, Poly]:
    """(g, s, t) with g = gcd monic and g = s*a + t*b."""
    K = a.field
    r0, r1 = a, b
    s0, s1 = Poly.const(K, K.one), Poly.zero(K)
    t0, t1 = Poly.zero(K), Poly.const(K, K.one)
    while not r1.is_zero():
        q, r = r0.divmod(r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    c = K.inv(r0.leading())
    return r0.scale(c), s0.scale(c), t0.scale(c)
