"""Genus-2 curve models over the rationals.

A curve is given by y^2 + h(x)y = f(x) with deg f <= 6 and deg h <= 3.
All arithmetic downstream happens on the simplified integral model
y^2 = F(x) obtained by completing the square and clearing squares from
the content, so F is determined up to the square-class of its content.
Point counts over prime fields, the affine Kummer chart, and naive
heights over the rationals and over quadratic fields live here; Mumford
arithmetic is in the jacobian module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from hashlib import blake2b

import numpy as np
from sympy import Poly as SymPoly, Symbol, factorint

from .algebra import QQ, FpField, QuadField, QuadFieldElement

__all__ = [
    "CurveInputError",
    "KummerDomainError",
    "GenusTwoCurve",
    "new_curve",
    "parse_curve_spec",
    "count_points_fp",
    "count_points_fp2",
    "kummer_coords",
    "naive_height",
    "inverted_model",
    "least_nonresidue",
]


class CurveInputError(ValueError):
    """Raised when curve data is malformed or defines a singular model."""


class KummerDomainError(ValueError):
    """Raised when a point lies outside the affine Kummer chart."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c.strip())
    raise CurveInputError(f"coefficient {c!r} is not rational")


def _poly_mul(a: tuple, b: tuple) -> tuple:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return tuple(out)


def _trim(coeffs) -> tuple:
    cs = list(coeffs)
    while cs and not cs[-1]:
        cs.pop()
    return tuple(cs)


@dataclass(frozen=True)
class GenusTwoCurve:
    """Immutable curve data: original (f, h) plus the integral model F."""

    f: tuple
    h: tuple
    F: tuple
    disc: int
    bad_primes: frozenset
    conductor: int | None = None
    label: str | None = None

    @property
    def degree(self) -> int:
        return len(self.F) - 1

    @property
    def model_key(self) -> str:
        tag = ",".join(str(c) for c in self.F)
        return "g2-" + blake2b(tag.encode(), digest_size=8).hexdigest()

    @property
    def curve_id(self) -> str:
        return self.label if self.label else self.model_key

    def F_padded(self) -> tuple:
        # always length 7, a_0..a_6
        return self.F + (0,) * (7 - len(self.F))

    def __repr__(self):
        return f"GenusTwoCurve({self.curve_id}, F={list(self.F)})"


def _discriminant(F: tuple) -> int:
    x = Symbol("x")
    p = SymPoly(list(reversed(F)), x)
    return int(p.discriminant())


def new_curve(f_coeffs, h_coeffs=(), conductor=None, label=None) -> GenusTwoCurve:
    """Validate (f, h) and build the simplified integral model.

    F is 4f + h^2 with denominators cleared by a square and the largest
    square factor of the content removed; rescaling y absorbs exactly
    these square factors, so Mumford points transfer unchanged.
    """
    f = _trim(_as_fraction(c) for c in f_coeffs)
    h = _trim(_as_fraction(c) for c in h_coeffs) if h_coeffs else ()
    if len(f) - 1 > 6 or (h and len(h) - 1 > 3):
        raise CurveInputError("deg f <= 6 and deg h <= 3 required")
    F0 = list(_poly_mul(h, h)) if h else []
    F0 += [Fraction(0)] * (7 - len(F0))
    for i, c in enumerate(f):
        F0[i] += 4 * c
    F0 = _trim(F0)
    deg = len(F0) - 1
    if deg not in (5, 6):
        raise CurveInputError(f"simplified model has degree {deg}, need 5 or 6")
    den = math.lcm(*(c.denominator for c in F0))
    G = [int(c * den * den) for c in F0]
    content = math.gcd(*G)
    sq = 1
    for q, e in factorint(content).items():
        sq *= q ** (e // 2)
    F = tuple(g // (sq * sq) for g in G)
    disc = _discriminant(F)
    if disc == 0:
        raise CurveInputError("singular model: discriminant vanishes")
    if conductor is not None:
        conductor = int(conductor)
        if conductor <= 0:
            raise CurveInputError("conductor must be positive")
        bad = set(factorint(conductor)) | {2, 5}
    else:
        bad = set(factorint(2 * abs(disc))) | {5}
    return GenusTwoCurve(
        f=f,
        h=h,
        F=F,
        disc=disc,
        bad_primes=frozenset(bad),
        conductor=conductor,
        label=label,
    )


def parse_curve_spec(text: str) -> GenusTwoCurve:
    """Parse 'f=[...];h=[...];conductor=...;label=...' into a curve.

    f is required; the other keys are optional.  Coefficient lists are
    comma-separated rationals, constant term first.
    """
    parts = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise CurveInputError(f"bad curve-spec fragment {chunk!r}")
        key, _, val = chunk.partition("=")
        parts[key.strip().lower()] = val.strip()
    if "f" not in parts:
        raise CurveInputError("curve spec must set f=[...]")

    def read_list(src: str):
        src = src.strip()
        if not (src.startswith("[") and src.endswith("]")):
            raise CurveInputError(f"expected a bracketed list, got {src!r}")
        body = src[1:-1].strip()
        if not body:
            return ()
        return tuple(_as_fraction(t) for t in body.split(","))

    f = read_list(parts["f"])
    h = read_list(parts["h"]) if "h" in parts else ()
    conductor = None
    if "conductor" in parts:
        try:
            conductor = int(parts["conductor"])
        except ValueError as exc:
            raise CurveInputError("conductor must be an integer") from exc
    return new_curve(f, h, conductor=conductor, label=parts.get("label"))


@lru_cache(maxsize=256)
def _square_table(p: int) -> np.ndarray:
    r = np.arange(p, dtype=np.int64)
    table = np.zeros(p, dtype=bool)
    table[(r * r) % p] = True
    return table


def least_nonresidue(p: int) -> int:
    table = _square_table(p)
    for n in range(2, p):
        if not table[n]:
            return n
    raise ValueError(f"no quadratic nonresidue mod {p}")


def _check_counting_prime(curve: GenusTwoCurve, p: int) -> None:
    if p < 3:
        raise CurveInputError("point counts need an odd prime")
    if p in curve.bad_primes:
        raise CurveInputError(f"{p} is a bad prime for this curve")


def count_points_fp(curve: GenusTwoCurve, p: int) -> int:
    """Number of points on the smooth projective model over F_p."""
    _check_counting_prime(curve, p)
    Fc = [c % p for c in curve.F]
    xs = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in reversed(Fc):
        acc = (acc * xs + c) % p
    table = _square_table(p)
    zero = acc == 0
    affine = 2 * int(np.count_nonzero(table[acc] & ~zero)) + int(np.count_nonzero(zero))
    if curve.degree == 5:
        inf = 1
    else:
        a6 = Fc[6]
        if a6 == 0:
            # degree drops mod p; smooth completion keeps one ramified point
            if Fc[5] == 0:
                raise CurveInputError(f"model degenerates too far mod {p}")
            inf = 1
        else:
            inf = 2 if table[a6] else 0
    return affine + inf


def count_points_fp2(curve: GenusTwoCurve, p: int, chunk: int = 1 << 21) -> int:
    """Exhaustive point count over F_{p^2}, chunked to bound memory.

    Elements are s + t*w with w^2 = n for a fixed nonresidue n; an
    element is a nonzero square exactly when its norm s^2 - n t^2 is a
    nonzero square mod p.
    """
    _check_counting_prime(curve, p)
    n = least_nonresidue(p)
    table = _square_table(p)
    Fc = [c % p for c in curve.F]
    affine = 0
    total = p * p
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        xr = idx // p
        xi = idx % p
        ar = np.zeros_like(xr)
        ai = np.zeros_like(xi)
        for c in reversed(Fc):
            ar, ai = (ar * xr + n * ((ai * xi) % p) + c) % p, (ar * xi + ai * xr) % p
        norm = (ar * ar - n * ((ai * ai) % p)) % p
        zero = (ar == 0) & (ai == 0)
        affine += 2 * int(np.count_nonzero(table[norm] & ~zero))
        affine += int(np.count_nonzero(zero))
    if curve.degree == 5:
        inf = 1
    else:
        a6 = Fc[6]
        if a6 == 0:
            if Fc[5] == 0:
                raise CurveInputError(f"model degenerates too far mod {p}")
            inf = 1
        else:
            inf = 2  # norm of a scalar is a square, so the leading term splits
    return affine + inf


def kummer_coords(curve: GenusTwoCurve, point) -> tuple:
    """Affine Kummer chart [1 : -alpha : beta : m] of a weight-2 point.

    For u = x^2 + alpha*x + beta and v = v1*x + v0 the last coordinate
    is (F0 - 2*y1*y2) / (x1 - x2)^2 expressed in the symmetric
    functions, with F0 the standard biquadratic form of the model; for
    repeated support x1 = x2 it is replaced by the limit value
    -a2 - 2*a3*x1 - 4*a4*x1^2 - 6*a5*x1^3 - 9*a6*x1^4 + F'(x1)^2/(4F(x1)).
    The identity maps to [0 : 0 : 0 : 1]; weight-1 points lie outside
    this chart.
    """
    u, v = point.u, point.v
    K = u.field
    du = u.degree
    if du <= 0 and v.degree < 0:
        return (K.zero, K.zero, K.zero, K.one)
    if du != 2:
        raise KummerDomainError("affine Kummer chart needs a weight-2 representative")
    one = K.one

    def cmul(k: int, x):
        return K.mul(K.of_int(k), x)

    alpha = u.coeff(1)
    beta = u.coeff(0)
    v1 = v.coeff(1)
    v0 = v.coeff(0)
    a = [K.of_int(c) for c in curve.F_padded()]
    disc = K.sub(K.mul(alpha, alpha), cmul(4, beta))
    if K.is_zero(disc):
        x1 = K.div(K.neg(alpha), K.of_int(2))
        fval = K.zero
        dval = K.zero
        for i in range(6, -1, -1):
            fval = K.add(K.mul(fval, x1), a[i])
            if i:
                dval = K.add(K.mul(dval, x1), cmul(i, a[i]))
        if K.is_zero(fval):
            raise KummerDomainError("repeated Weierstrass support is not a valid representative")
        x2 = K.mul(x1, x1)
        tail = K.neg(a[2])
        tail = K.sub(tail, cmul(2, K.mul(a[3], x1)))
        tail = K.sub(tail, cmul(4, K.mul(a[4], x2)))
        tail = K.sub(tail, cmul(6, K.mul(a[5], K.mul(x2, x1))))
        tail = K.sub(tail, cmul(9, K.mul(a[6], K.mul(x2, x2))))
        m = K.add(tail, K.div(K.mul(dval, dval), cmul(4, fval)))
        return (one, K.neg(alpha), beta, m)
    beta2 = K.mul(beta, beta)
    ab = K.mul(alpha, beta)
    form = cmul(2, a[0])
    form = K.sub(form, K.mul(a[1], alpha))
    form = K.add(form, cmul(2, K.mul(a[2], beta)))
    form = K.sub(form, K.mul(a[3], ab))
    form = K.add(form, cmul(2, K.mul(a[4], beta2)))
    form = K.sub(form, K.mul(a[5], K.mul(ab, beta)))
    form = K.add(form, cmul(2, K.mul(a[6], K.mul(beta2, beta))))
    yy = K.mul(K.mul(v1, v1), beta)
    yy = K.sub(yy, K.mul(K.mul(v1, v0), alpha))
    yy = K.add(yy, K.mul(v0, v0))
    m = K.div(K.sub(form, cmul(2, yy)), disc)
    return (one, K.neg(alpha), beta, m)


def _height_from_fractions(coords) -> float:
    den = math.lcm(*(c.denominator for c in coords))
    ints = [abs(int(c * den)) for c in coords]
    g = math.gcd(*ints)
    if g == 0:
        raise ValueError("zero projective vector has no height")
    return math.log(max(ints) // g)


def _quad_ideal_norm(pairs: list) -> int:
    # pairs: integer (m, n) coordinates in the ring basis (1, omega),
    # already closed under multiplication by omega; det of the HNF.
    rows = [r for r in pairs if r != (0, 0)]
    if not rows:
        raise ValueError("zero projective vector has no height")
    g2 = 0
    comb = (0, 0)
    for (m, n) in rows:
        if n == 0:
            continue
        if g2 == 0:
            g2, comb = abs(n), (m, n) if n > 0 else (-m, -n)
        else:
            g, s, t = _xgcd(g2, n)
            comb = (s * comb[0] + t * m, g)
            g2 = g
    if g2 == 0:
        raise ValueError("rank-deficient coordinate lattice")
    firsts = []
    for (m, n) in rows:
        q = n // g2
        firsts.append(m - q * comb[0])
    g1 = math.gcd(*firsts) if firsts else 0
    if g1 == 0:
        raise ValueError("rank-deficient coordinate lattice")
    return g1 * g2


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def naive_height(curve: GenusTwoCurve, point) -> float:
    """Logarithmic height of the point's Kummer image.

    Over the rationals this is log of the largest coprime integer
    coordinate.  Over a quadratic field the infinite places contribute
    the embedding maxima and the finite part is the norm of the
    coordinate ideal, computed from the Hermite form of its Z-lattice;
    the total is divided by the field degree.  Weight-1 points use the
    projective pair (1 : x1) instead of the Kummer chart.
    """
    u, v = point.u, point.v
    K = u.field
    if u.degree == 1:
        coords = (K.one, K.neg(u.coeff(0)))
    else:
        coords = kummer_coords(curve, point)
    if K is QQ:
        return _height_from_fractions([Fraction(c) for c in coords])
    if not isinstance(K, QuadField):
        raise ValueError("heights are defined over global fields only")
    d = K.d
    vals = []
    for c in coords:
        if not isinstance(c, QuadFieldElement):
            raise ValueError("coordinate outside the quadratic field")
        vals.append((c.rational_part, c.surd_part))
    if d % 4 == 1:
        # omega = (1 + sqrt d)/2, so r + s*sqrt d = (r - s) + 2s*omega
        mn = [(r - s, 2 * s) for (r, s) in vals]
    else:
        mn = [(r, s) for (r, s) in vals]
    den = math.lcm(*(x.denominator for pair in mn for x in pair))
    mn = [(int(m * den), int(n * den)) for (m, n) in mn]
    rows = []
    for (m, n) in mn:
        rows.append((m, n))
        if d % 4 == 1:
            rows.append((n * (d - 1) // 4, m + n))
        else:
            rows.append((n * d, m))
    norm = _quad_ideal_norm(rows)
    # scaled coordinates: x*den = m + n*omega
    if d > 0:
        sq = math.sqrt(d)
        emb1 = emb2 = 0.0
        for (r, s) in vals:
            x1 = abs(float(r) + float(s) * sq) * den
            x2 = abs(float(r) - float(s) * sq) * den
            emb1 = max(emb1, x1)
            emb2 = max(emb2, x2)
        arch = math.log(emb1) + math.log(emb2)
    else:
        best = 0
        for (r, s) in vals:
            nrm = (r * r - d * s * s) * den * den
            if nrm > best:
                best = nrm
        arch = math.log(best)
    return (arch - math.log(norm)) / 2


def inverted_model(F, a: int):
    """Coefficients of t^6 * F(a + 1/t), constant term first.

    Sends x = a to t = infinity and x = infinity to t = 0; the new
    leading coefficient is F(a).  Exact integer arithmetic.
    """
    Fp = list(F) + [0] * (7 - len(F))
    shifted = [0] * 7
    for k, c in enumerate(Fp):
        if c == 0:
            continue
        powa = 1
        # contribute c*(a + z)^k, highest binomial term first
        for i in range(k, -1, -1):
            shifted[i] += c * math.comb(k, i) * powa
            powa *= a
    return tuple(reversed(shifted))
