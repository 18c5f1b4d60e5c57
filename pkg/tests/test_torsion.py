from fractions import Fraction

import pytest

from galimage.curve import new_curve
from galimage.torsion import (
    TorsionWitness,
    candidate_quadratic_fields,
    find_simple_quadratic_torsion,
    has_rational_five_torsion,
    verify_torsion_witness,
)
import galimage.torsion as torsion

C431250 = new_curve([-4, 20, 5, -20, 0, 4], conductor=431250, label="431250.a")
C1573 = new_curve([-4, -12, -16, -12, -4, 0, 1], conductor=1573, label="1573.a")
C448 = new_curve([28, 0, 1, 0, -6, 0, 1], conductor=448, label="448.a")
C600000 = new_curve([-4, -8, 0, 20, 20, 8, 1], conductor=600000, label="600000.b")
X5P1 = new_curve([1, 0, 0, 0, 0, 1])  # y^2 = x^5 + 1, has [(0,1) - inf] of order 5


def test_candidate_fields_are_signed_squarefree_products():
    # empty elimination window keeps the whole initial list
    cs = candidate_quadratic_fields(C448, elimination_range=(3, 2))
    assert sorted(c for c in cs.ds) == cs.ds
    assert 1 not in cs.ds
    assert -1 in cs.ds
    assert set(cs.ds) == {
        s * d for s in (1, -1) for d in (1, 2, 5, 7, 10, 14, 35, 70)
    } - {1}
    for d in cs.ds:
        assert torsion.squarefree_part(d) == d


def test_candidate_fields_all_eliminated():
    cs = candidate_quadratic_fields(C448)
    assert cs.ds == []
    # every discarded field names the prime that killed it
    assert len(cs.elimination_log) == 15
    for d, primes in cs.elimination_log.items():
        assert primes
        p = primes[0]
        assert p not in C448.bad_primes
        assert pow(d % p, (p - 1) // 2, p) == 1


def test_candidate_fields_survivor():
    cs = candidate_quadratic_fields(C431250)
    assert cs.ds == [5]


def test_rational_torsion_found_on_x5_plus_1():
    res = has_rational_five_torsion(X5P1)
    assert res.status == "true"
    w = res.witness
    assert w is not None and w.verified and w.d == 1
    assert verify_torsion_witness(X5P1, w)


def test_rational_torsion_rejected():
    res = has_rational_five_torsion(C448)
    assert res.status == "false"
    assert res.witness is None
    assert "5 does not divide" in res.diagnostic


def test_quadratic_witness_431250():
    res = find_simple_quadratic_torsion(C431250)
    assert res.status == "true"
    w = res.witness
    assert w.d == 5 and w.verified
    assert w.u_string() == "x^2+(-2)x+1"
    assert w.v_string() == "(1)*sqrt(5)x+(-2)*sqrt(5)"
    assert verify_torsion_witness(C431250, w)


def test_quadratic_search_deterministic():
    a = find_simple_quadratic_torsion(C431250)
    b = find_simple_quadratic_torsion(C431250)
    assert a == b


def test_quadratic_false_when_every_field_dies():
    for curve in (C448, C600000):
        res = find_simple_quadratic_torsion(curve)
        assert res.status == "false"
        assert "eliminated" in res.diagnostic


def test_quadratic_exhaustion_is_maybe():
    # no good prime below the bound ever has class count prime to 5,
    # so nothing is eliminated and nothing is found: the only honest
    # answer is maybe
    res = find_simple_quadratic_torsion(C1573)
    assert res.status == "maybe"
    assert res.witness is None
    assert "exhausted" in res.diagnostic


def test_budget_cap_yields_maybe(monkeypatch):
    monkeypatch.setattr(torsion, "COMBO_CAP", 0)
    res = find_simple_quadratic_torsion(C431250)
    assert res.status == "maybe"


def test_result_refuses_bool():
    res = has_rational_five_torsion(C448)
    with pytest.raises(TypeError):
        bool(res)


def test_verify_witness_structural_checks():
    one = Fraction(1)
    good = TorsionWitness(u=(one, Fraction(-2), one), v=(Fraction(-2), one), d=5, verified=False)
    assert verify_torsion_witness(C431250, good)
    with pytest.raises(ValueError):
        verify_torsion_witness(C431250, TorsionWitness(u=(one,), v=(one,), d=5, verified=False))
    with pytest.raises(ValueError):
        # u must be monic
        verify_torsion_witness(
            C431250, TorsionWitness(u=(one, one, Fraction(2)), v=(one, one), d=5, verified=False)
        )
    with pytest.raises(ValueError):
        # d must be squarefree
        verify_torsion_witness(
            C431250, TorsionWitness(u=(one, Fraction(-2), one), v=(Fraction(-2), one), d=20, verified=False)
        )


def test_verify_witness_rejects_wrong_point():
    one = Fraction(1)
    bogus = TorsionWitness(u=(Fraction(3), Fraction(-2), one), v=(Fraction(-2), one), d=5, verified=False)
    assert not verify_torsion_witness(C431250, bogus)


def test_witness_strings():
    w = TorsionWitness(
        u=(Fraction(1, 2), Fraction(-3), Fraction(1)),
        v=(Fraction(4), Fraction(-1, 3)),
        d=-2,
        verified=True,
    )
    assert w.u_string() == "x^2+(-3)x+(1/2)"
    assert w.v_string() == "(-1/3)*sqrt(-2)x+(4)*sqrt(-2)"
    lin = TorsionWitness(u=(Fraction(0), Fraction(1)), v=(Fraction(1),), d=1, verified=True)
    assert lin.u_string() == "x+0"
    assert lin.v_string() == "(1)"
    assert lin.as_dict() == {"u": "x+0", "v": "(1)", "d": 1}
