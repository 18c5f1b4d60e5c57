import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from galimage.algebra import (
    FpField,
    Poly,
    PrimeFieldElement,
    QQ,
    QuadField,
    crt,
    poly_gcd,
    poly_xgcd,
    rational_reconstruct,
    sqrt_mod_p,
    squarefree_part,
)

PRIMES = [3, 5, 7, 11, 13, 97, 101, 10007]


def test_sqrt_mod_p_pinned():
    assert sqrt_mod_p(0, 7) == 0
    assert sqrt_mod_p(5, 11) == 4
    assert sqrt_mod_p(2, 5) is None


def test_sqrt_mod_p_against_squaring():
    rng = random.Random(1)
    for p in PRIMES:
        squares = {(x * x) % p for x in range(p if p < 200 else 0)}
        for _ in range(200):
            a = rng.randrange(p)
            r = sqrt_mod_p(a, p)
            if r is not None:
                assert (r * r) % p == a % p
                assert 0 <= r <= p - r  # smaller root is returned
            elif p < 200:
                assert a % p not in squares


def test_crt_pinned():
    assert crt([2], [3]) == 2
    assert crt([2, 3], [3, 5]) == 8
    assert crt([0, 0, 0], [2, 3, 5]) == 0
    with pytest.raises(ValueError):
        crt([1, 2], [4, 6])
    with pytest.raises(ValueError):
        crt([], [])


def test_crt_roundtrip():
    rng = random.Random(2)
    moduli = [3, 5, 7, 11, 13]
    M = 15015
    for _ in range(500):
        x = rng.randrange(M)
        assert crt([x % m for m in moduli], moduli) == x


def test_rational_reconstruct_pinned():
    assert rational_reconstruct(0, 101, 5, 5) == 0
    assert rational_reconstruct(33, 97, 3, 3) == Fraction(2, 3)
    # 50*2 = 100 = 3 mod 97, so 3/2 is in bounds and unique by scan.
    assert rational_reconstruct(50, 97, 3, 3) == Fraction(3, 2)
    assert rational_reconstruct(51, 97, 3, 3) is None  # scan of |a|<=3, b<=3 finds none
    with pytest.raises(ValueError):
        rational_reconstruct(1, 49, 5, 5)  # modulus too small for the bounds


def test_rational_reconstruct_roundtrip():
    rng = random.Random(3)
    M = 2 * 10**9 + 33  # prime
    for _ in range(1200):
        num = rng.randint(-30000, 30000)
        den = rng.randint(1, 30000)
        q = Fraction(num, den)
        if q.denominator % M == 0:
            continue
        r = (q.numerator * pow(q.denominator, -1, M)) % M
        got = rational_reconstruct(r, M, 30000, 30000)
        assert got == q


def test_squarefree_part():
    assert squarefree_part(1) == 1
    assert squarefree_part(4) == 1
    assert squarefree_part(12) == 3
    assert squarefree_part(-18) == -2
    assert squarefree_part(45) == 5


def test_fp_field_axioms():
    # Field axioms on random triples; the workhorse check for FpField.
    rng = random.Random(4)
    for p in [2, 3, 5, 101]:
        F = FpField(p)
        for _ in range(2600):
            a, b, c = (F.of_int(rng.randrange(p)) for _ in range(3))
            assert F.add(a, F.add(b, c)) == F.add(F.add(a, b), c)
            assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
            assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
            assert F.add(a, F.neg(a)) == F.zero
            if not F.is_zero(b):
                assert F.mul(b, F.inv(b)) == F.one
                assert F.div(F.mul(a, b), b) == a


def test_prime_field_element_axioms():
    rng = random.Random(11)
    for p in [2, 3, 5, 997]:
        for _ in range(2600):
            a, b, c = (PrimeFieldElement(rng.randrange(p), p) for _ in range(3))
            assert a + (b + c) == (a + b) + c
            assert a * (b * c) == (a * b) * c
            assert a * (b + c) == a * b + a * c
            assert a + (-a) == PrimeFieldElement(0, p)
            if b.value != 0:
                assert b * b.inverse() == PrimeFieldElement(1, p)
                assert (a * b) / b == a
    with pytest.raises(ValueError):
        PrimeFieldElement(1, 3) + PrimeFieldElement(1, 5)
    with pytest.raises(ZeroDivisionError):
        PrimeFieldElement(0, 5).inverse()


def test_fp_field_of_fraction():
    F = FpField(7)
    assert F.of_fraction(Fraction(1, 2)) == F.of_int(4)
    with pytest.raises(ZeroDivisionError):
        F.of_fraction(Fraction(1, 7))
    with pytest.raises(ValueError):
        FpField(6)


def test_quad_field_basic():
    K = QuadField(5)
    r = K.sqrt_gen
    assert K.mul(r, r) == K.of_int(5)
    x = K.elem(Fraction(1, 2), Fraction(3))
    assert x.conj().surd_part == -3
    assert x.norm() == Fraction(1, 4) - 45
    y = K.inv(x)
    assert K.mul(x, y) == K.one
    with pytest.raises(ValueError):
        QuadField(12)  # not squarefree
    with pytest.raises(ValueError):
        QuadField(1)


def test_quad_field_axioms():
    rng = random.Random(5)
    for d in [-1, 2, 5, -7]:
        K = QuadField(d)
        for _ in range(2600):
            a = K.elem(Fraction(rng.randint(-9, 9), rng.randint(1, 9)),
                       Fraction(rng.randint(-9, 9), rng.randint(1, 9)))
            b = K.elem(Fraction(rng.randint(-9, 9)), Fraction(rng.randint(-9, 9)))
            assert K.mul(a, b) == K.mul(b, a)
            assert K.add(a, K.neg(a)) == K.zero
            if a != K.zero:
                assert K.mul(a, K.inv(a)) == K.one
            # norm is multiplicative
            assert K.mul(a, b).norm() == a.norm() * b.norm()


def test_poly_divmod_identity():
    rng = random.Random(6)
    F = FpField(13)
    for _ in range(600):
        a = Poly.from_ints(F, [rng.randrange(13) for _ in range(rng.randint(0, 7))])
        b = Poly.from_ints(F, [rng.randrange(13) for _ in range(rng.randint(1, 5))])
        if b.is_zero():
            continue
        q, r = a.divmod(b)
        assert q * b + r == a
        assert r.degree < b.degree


def test_poly_gcd_divides():
    rng = random.Random(7)
    F = FpField(5)
    for _ in range(400):
        a = Poly.from_ints(F, [rng.randrange(5) for _ in range(rng.randint(1, 6))])
        b = Poly.from_ints(F, [rng.randrange(5) for _ in range(rng.randint(1, 6))])
        if a.is_zero() or b.is_zero():
            continue
        g = poly_gcd(a, b)
        assert (a % g).is_zero() and (b % g).is_zero()
        gg, s, t = poly_xgcd(a, b)
        assert s * a + t * b == gg
        assert gg == g


def test_poly_over_rationals():
    x = Poly.x(QQ)
    f = x * x - Poly.const(QQ, Fraction(2))
    assert f.evaluate(Fraction(3)) == 7
    assert f.derivative() == x + x
    g = (x - Poly.const(QQ, Fraction(1))) * (x + Poly.const(QQ, Fraction(1)))
    assert g.coeff(0) == -1 and g.coeff(2) == 1 and g.coeff(1) == 0


@given(st.integers(min_value=-10**5, max_value=10**5), st.integers(min_value=1, max_value=10**3))
def test_reconstruct_roundtrip_hypothesis(num, den):
    M = 2000000011  # prime > 2 * 10^5 * 10^3
    q = Fraction(num, den)
    r = (q.numerator * pow(q.denominator, -1, M)) % M
    assert rational_reconstruct(r, M, 10**5, 10**3) == q


@given(st.lists(st.sampled_from([3, 5, 7, 11, 13, 17]), min_size=1, max_size=6, unique=True),
       st.integers(min_value=0, max_value=10**8))
def test_crt_roundtrip_hypothesis(moduli, x):
    prod = 1
    for m in moduli:
        prod *= m
    x %= prod
    assert crt([x % m for m in moduli], moduli) == x
