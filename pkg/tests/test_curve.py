import math
import random
from fractions import Fraction
from types import SimpleNamespace

import pytest

from galimage.algebra import FpField, Poly, QQ, QuadField
from galimage.curve import (
    CurveInputError,
    KummerDomainError,
    count_points_fp,
    count_points_fp2,
    inverted_model,
    kummer_coords,
    least_nonresidue,
    naive_height,
    new_curve,
    parse_curve_spec,
)


def brute_count_fp(F, p):
    total = 0
    for x in range(p):
        val = sum(c * pow(x, i, p) for i, c in enumerate(F)) % p
        if val == 0:
            total += 1
        elif pow(val, (p - 1) // 2, p) == 1:
            total += 2
    deg = len(F) - 1
    if deg == 5:
        total += 1
    else:
        a6 = F[6] % p
        if a6 == 0:
            total += 1
        elif pow(a6, (p - 1) // 2, p) == 1:
            total += 2
    return total


def point(field, u_ints, v_ints):
    return SimpleNamespace(
        u=Poly.from_ints(field, u_ints), v=Poly.from_ints(field, v_ints)
    )


def test_new_curve_simplified_model():
    c = new_curve([-4, 20, 5, -20, 0, 4], [], conductor=431250, label="431250.a")
    # content 4 of 4f is a square and gets cleared
    assert c.F == (-4, 20, 5, -20, 0, 4)
    assert c.degree == 5
    assert c.bad_primes == frozenset({2, 3, 5, 23})
    assert c.curve_id == "431250.a"

    d = new_curve([0, 1, 0, 0, 0, 1], [1])  # y^2 + y = x^5 + x
    assert d.F == (1, 4, 0, 0, 0, 4)


def test_new_curve_rejects_bad_degree_and_singular():
    with pytest.raises(CurveInputError):
        new_curve([1, 1], [0, 0, 1])  # 4f + h^2 has degree 4
    with pytest.raises(CurveInputError):
        new_curve([0, 0, 0, 0, 0, 1])  # x^5: repeated root
    with pytest.raises(CurveInputError):
        new_curve([1, 2, 1, 0, 0, 0, 0, 1])  # deg 7
    with pytest.raises(CurveInputError):
        new_curve([])


def test_new_curve_fractional_input():
    # y^2 = x^5/4 + 1/4 scales to y^2 = x^5 + 1
    c = new_curve([Fraction(1, 4), 0, 0, 0, 0, Fraction(1, 4)])
    assert c.F == (1, 0, 0, 0, 0, 1)
    d = new_curve(["1/4", 0, 0, 0, 0, "1/4"])
    assert d.F == c.F


def test_bad_primes_without_conductor():
    c = new_curve([1, 0, 0, 0, 0, 1])
    # disc(x^5+1) = 5^5, doubled for the model prime 2
    assert 2 in c.bad_primes and 5 in c.bad_primes
    assert all(p in (2, 5) for p in c.bad_primes)


def test_parse_curve_spec_roundtrip():
    c = parse_curve_spec("f=[-4,20,5,-20,0,4];h=[];conductor=431250;label=431250.a")
    assert c.F == (-4, 20, 5, -20, 0, 4)
    assert c.conductor == 431250
    assert c.label == "431250.a"
    d = parse_curve_spec("f=[1,0,0,0,0,1]")
    assert d.conductor is None
    with pytest.raises(CurveInputError):
        parse_curve_spec("h=[1]")
    with pytest.raises(CurveInputError):
        parse_curve_spec("f=1,2,3")
    with pytest.raises(CurveInputError):
        parse_curve_spec("f=[1,0,0,0,0,1];conductor=five")


def test_count_points_fp_pinned():
    c = new_curve([1, 0, 0, 0, 0, 1])
    assert count_points_fp(c, 3) == 4
    assert count_points_fp(c, 11) == 8


def test_count_points_fp_matches_bruteforce():
    curves = [
        new_curve([1, 0, 0, 0, 0, 1]),
        new_curve([-4, 20, 5, -20, 0, 4]),
        new_curve([3, 1, 0, 0, 0, 0, 5]),  # degree 6, leading coefficient 5
        new_curve([28, 0, 1, 0, -6, 0, 1], [], label="448.a"),
    ]
    for c in curves:
        for p in [7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]:
            if p in c.bad_primes:
                continue
            assert count_points_fp(c, p) == brute_count_fp(c.F, p)


def test_count_points_fp_rejects_bad_prime():
    c = new_curve([1, 0, 0, 0, 0, 1])
    with pytest.raises(CurveInputError):
        count_points_fp(c, 5)
    with pytest.raises(CurveInputError):
        count_points_fp(c, 2)


def test_count_points_fp_hasse_weil():
    c = new_curve([-4, 20, 5, -20, 0, 4])
    for p in [7, 11, 13, 101, 211, 401, 1009]:
        if p in c.bad_primes:
            continue
        n = count_points_fp(c, p)
        assert abs(n - p - 1) <= 4 * math.sqrt(p) + 1e-9


def brute_count_fp2(F, p):
    n = least_nonresidue(p)
    sq = {(a * a) % p for a in range(p)}
    total = 0
    for s in range(p):
        for t in range(p):
            ar, ai = 0, 0
            for c in reversed(F):
                ar, ai = (ar * s + n * ai * t + c) % p, (ar * t + ai * s) % p
            if ar == 0 and ai == 0:
                total += 1
            elif (ar * ar - n * ai * ai) % p in sq:
                total += 2
    deg = len(F) - 1
    if deg == 5:
        total += 1
    else:
        total += 1 if F[6] % p == 0 else 2
    return total


def test_count_points_fp2_matches_bruteforce():
    curves = [
        new_curve([1, 0, 0, 0, 0, 1]),
        new_curve([3, 1, 0, 0, 0, 0, 5]),
    ]
    for c in curves:
        for p in [7, 11, 13]:
            if p in c.bad_primes:
                continue
            assert count_points_fp2(c, p) == brute_count_fp2(c.F, p)


def test_count_points_fp2_consistency_with_fp():
    # #C(F_p) and #C(F_p^2) determine each other's parity constraints via
    # the zeta function; check the derived c2 lands in the Weil range.
    c = new_curve([-4, 20, 5, -20, 0, 4])
    for p in [7, 11, 13]:
        if p in c.bad_primes:
            continue
        c1 = count_points_fp(c, p) - p - 1
        n2 = count_points_fp2(c, p)
        c2, rem = divmod(n2 - p * p - 1 + c1 * c1, 2)
        assert rem == 0
        assert abs(c2) <= 6 * p


def test_kummer_coords_pinned_rational():
    c = new_curve([4, 4, 0, 0, 0, 1])
    P = point(QQ, [0, -1, 1], [2, 1])
    assert kummer_coords(c, P) == (
        Fraction(1),
        Fraction(1),
        Fraction(0),
        Fraction(0),
    )


def test_kummer_coords_identity_and_weight_one():
    c = new_curve([4, 4, 0, 0, 0, 1])
    ident = point(QQ, [1], [])
    assert kummer_coords(c, ident) == (0, 0, 0, 1)
    with pytest.raises(KummerDomainError):
        kummer_coords(c, point(QQ, [-2, 1], [4]))


def test_kummer_coords_repeated_support():
    # doubled point over Q(sqrt 5) on the rank-example curve
    c = new_curve([-4, 20, 5, -20, 0, 4])
    K = QuadField(5)
    u = Poly(K, [K.of_int(1), K.of_int(-2), K.of_int(1)])
    v = Poly(K, [K.elem(0, -2), K.elem(0, 1)])
    k = kummer_coords(c, SimpleNamespace(u=u, v=v))
    assert k == (K.of_int(1), K.of_int(2), K.of_int(1), K.of_int(16))


def test_kummer_repeated_support_mod_p():
    # tangent representative ((x-2)^2, 3) over F_7 on y^2 = x^5+4x+4;
    # the limit value -87/11 of the fourth coordinate reduces to 1 mod 7
    c = new_curve([4, 4, 0, 0, 0, 1])
    K = FpField(7)
    P = point(K, [4, -4, 1], [3])
    assert (P.v.evaluate(K.of_int(2)) ** 2 - 44) % 7 == 0
    k = kummer_coords(c, P)
    assert k == (1, 4, 4, 1)
    assert (-87 * pow(11, -1, 7)) % 7 == 1


def test_kummer_coords_mod_p():
    c = new_curve([4, 4, 0, 0, 0, 1])
    K = FpField(11)
    P = point(K, [0, 10, 1], [2, 1])  # the pinned point reduced mod 11
    assert kummer_coords(c, P) == (1, 1, 0, 0)


def test_naive_height_rational():
    c = new_curve([4, 4, 0, 0, 0, 1])
    assert naive_height(c, point(QQ, [0, -1, 1], [2, 1])) == 0.0
    assert naive_height(c, point(QQ, [1], [])) == 0.0
    # weight-1 point: projective pair (1 : 3/2)
    h = naive_height(c, point(QQ, [Fraction(-3, 2), Fraction(1)], [0]))
    assert math.isclose(h, math.log(3))


def test_naive_height_quadratic_witness():
    c = new_curve([-4, 20, 5, -20, 0, 4])
    K = QuadField(5)
    u = Poly(K, [K.of_int(1), K.of_int(-2), K.of_int(1)])
    v = Poly(K, [K.elem(0, -2), K.elem(0, 1)])
    h = naive_height(c, SimpleNamespace(u=u, v=v))
    assert math.isclose(h, math.log(16))


def test_naive_height_golden_ratio():
    # weight-1 point at x = (1+sqrt 5)/2: height of the golden ratio
    c = new_curve([-4, 20, 5, -20, 0, 4])
    K = QuadField(5)
    u = Poly(K, [K.elem(Fraction(-1, 2), Fraction(-1, 2)), K.of_int(1)])
    v = Poly(K, [K.of_int(0)])
    h = naive_height(c, SimpleNamespace(u=u, v=v))
    assert math.isclose(h, math.log((1 + math.sqrt(5)) / 2) / 2, rel_tol=1e-9)


def test_naive_height_nonnegative_random():
    c = new_curve([4, 4, 0, 0, 0, 1])
    rng = random.Random(7)
    for _ in range(50):
        x1 = Fraction(rng.randrange(-30, 30), rng.randrange(1, 12))
        h = naive_height(c, point(QQ, [-x1, Fraction(1)], [0]))
        assert h >= -1e-12


def test_inverted_model_identity():
    rng = random.Random(11)
    F = (3, 1, 0, 0, 0, 0, 5)
    for _ in range(40):
        a = rng.randrange(-5, 6)
        G = inverted_model(F, a)
        t = Fraction(rng.randrange(1, 40), rng.randrange(1, 17))
        lhs = sum(c * t**i for i, c in enumerate(G))
        x = a + 1 / t
        rhs = t**6 * sum(c * x**i for i, c in enumerate(F))
        assert lhs == rhs
    # leading coefficient is F(a)
    G = inverted_model(F, 2)
    assert G[6] == sum(c * 2**i for i, c in enumerate(F))


def test_least_nonresidue():
    assert least_nonresidue(3) == 2
    assert least_nonresidue(7) == 3
    for p in [11, 13, 17, 19, 23]:
        n = least_nonresidue(p)
        assert pow(n, (p - 1) // 2, p) == p - 1
