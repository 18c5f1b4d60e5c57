"""Rational and simple quadratic 5-torsion searches on genus-2 Jacobians.

Local 5-torsion points at split primes are combined by CRT and lifted to
candidate rational coordinates, and every candidate is then verified by
exact arithmetic over the relevant field.  A returned witness is a
proof; a returned false always rests on a named eliminating prime or an
empty candidate field set, never on an exhausted search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import primerange

from .algebra import (
    Poly,
    QQ,
    QuadField,
    crt,
    rational_reconstruct,
    sqrt_mod_p,
    squarefree_part,
)
from .curve import GenusTwoCurve
from .jacobian import (
    UnsupportedLocalModel,
    arithmetic_model,
    enumerate_five_torsion,
    jacobian_order,
    model_point_from_x,
    scalar_mul,
    x_point_from_model,
)

ELIMINATION_BOUND = 200
SELECTION_BOUND = 1000
LOCAL_TUPLE_CAP = 312
COMBO_CAP = 500_000
MAX_RUNGS = 3

DEFAULT_HEIGHT_BOUND = 40.0
DEFAULT_MONTE_CARLO_K = 64
DEFAULT_SEED = 0


def _knob(config, name, fallback):
    return fallback if config is None else getattr(config, name, fallback)


@dataclass(frozen=True)
class TorsionWitness:
    """An exactly verified nontrivial point killed by 5.

    u holds the monic Mumford u-polynomial over QQ, lowest degree first.
    v holds the rational parts of v / sqrt(d), lowest degree first, so
    the actual second coordinate is (v[1]*x + v[0]) * sqrt(d); d = 1
    marks a rational point and the scaling drops away.
    """

    u: tuple
    v: tuple
    d: int
    verified: bool

    def u_string(self) -> str:
        deg = len(self.u) - 1
        parts = [f"x^{deg}" if deg > 1 else "x"]
        for k in range(deg - 1, 0, -1):
            parts.append(f"+({self.u[k]})x" + (f"^{k}" if k > 1 else ""))
        c = self.u[0]
        parts.append(f"+({c})" if (c < 0 or c.denominator != 1) else f"+{c}")
        return "".join(parts)

    def v_string(self) -> str:
        surd = f"*sqrt({self.d})" if self.d != 1 else ""
        parts = []
        for k in range(len(self.v) - 1, -1, -1):
            x = "x" if k == 1 else (f"x^{k}" if k > 1 else "")
            parts.append(f"({self.v[k]}){surd}{x}")
        return "+".join(parts)

    def as_dict(self) -> dict:
        return {"u": self.u_string(), "v": self.v_string(), "d": self.d}


@dataclass(frozen=True)
class TorsionSearchResult:
    status: str  # "true" | "false" | "maybe"
    witness: TorsionWitness | None
    diagnostic: str

    def __bool__(self):
        raise TypeError("three-valued result; compare .status explicitly")


@dataclass
class QuadraticCandidateSet:
    ds: list[int]
    elimination_log: dict[int, list[int]] = field(default_factory=dict)


def _initial_ds(curve: GenusTwoCurve) -> list[int]:
    primes = sorted(curve.bad_primes)
    ds = set()
    for mask in range(1 << len(primes)):
        val = 1
        for i, q in enumerate(primes):
            if mask >> i & 1:
                val *= q
        ds.add(val)
        ds.add(-val)
    ds.discard(1)
    return sorted(ds)


def candidate_quadratic_fields(
    curve: GenusTwoCurve,
    elimination_range: tuple[int, int] = (3, ELIMINATION_BOUND),
    seed: int = DEFAULT_SEED,
) -> QuadraticCandidateSet:
    """Quadratic fields that could still carry extra 5-torsion.

    Only fields ramified within the bad primes can; a good prime p with
    5 not dividing the class count kills every d that is a nonzero
    square mod p, because reduction at a degree-1 prime above p would
    embed the new torsion into a group of order prime to 5.
    """
    survivors = set(_initial_ds(curve))
    log: dict[int, list[int]] = {}
    lo, hi = elimination_range
    for p in primerange(max(lo, 3), hi + 1):
        if p in curve.bad_primes:
            continue
        if not survivors:
            break
        try:
            order = jacobian_order(curve, p, seed=seed)
        except UnsupportedLocalModel:
            continue
        if order % 5 == 0:
            continue
        for d in sorted(survivors):
            if pow(d % p, (p - 1) // 2, p) == 1:
                survivors.discard(d)
                log.setdefault(d, []).append(p)
    return QuadraticCandidateSet(sorted(survivors), log)


def _local_tuples(curve: GenusTwoCurve, p: int, d: int, k: int, seed: int):
    """Canonical tuple forms of the nonzero local 5-torsion at p.

    Weight-2 classes map to (u1, u0, a, b) with v = (a*x + b)*s for
    s = sqrt(d) mod p; weight-1 classes (odd models only) map to
    (x0, b) with y = b*s.  Each {P, -P} pair contributes one tuple,
    canonicalized by putting the first nonzero v-part in the lower
    half range.
    """
    model = arithmetic_model(curve, p)
    pts = enumerate_five_torsion(curve, p, k=k, seed=seed)
    s = sqrt_mod_p(d % p, p) if d != 1 else 1
    sinv = pow(s, -1, p)
    half = (p - 1) // 2
    w2, w1 = set(), set()
    for P in pts:
        if P.u.degree == 0:
            continue
        image = x_point_from_model(model, P)
        if image is None:
            continue
        ux, vx = image
        if ux.degree == 2:
            a = vx.coeff(1) * sinv % p
            b = vx.coeff(0) * sinv % p
            lead = a if a else b
            if lead > half:
                a, b = -a % p, -b % p
            w2.add((ux.coeff(1), ux.coeff(0), a, b))
        else:
            x0 = -ux.coeff(0) % p
            b = vx.coeff(0) * sinv % p
            if b > half:
                b = -b % p
            w1.add((x0, b))
    return sorted(w2), sorted(w1)


def _usable_primes(curve: GenusTwoCurve, d: int, k: int, seed: int):
    """Smallest good primes where sqrt(d) and local 5-torsion both live."""
    found = []
    for p in primerange(7, SELECTION_BOUND):
        if p in curve.bad_primes or d % p == 0:
            continue
        if d != 1 and pow(d % p, (p - 1) // 2, p) != 1:
            continue
        try:
            order = jacobian_order(curve, p, seed=seed)
        except UnsupportedLocalModel:
            continue
        if order % 5 != 0:
            # an eliminating prime: no 5-torsion can live over this d
            return [], p
        w2, w1 = _local_tuples(curve, p, d, k, seed)
        if not w2 and not w1:
            continue
        if len(w2) + len(w1) > LOCAL_TUPLE_CAP:
            continue
        found.append((p, w2, w1))
        if len(found) == MAX_RUNGS:
            break
    return found, None


def _signed_expansions(tuples, weight2: bool):
    out = []
    for t in tuples:
        if weight2:
            u1, u0, a, b = t
            out.append([t, (u1, u0, -a, -b)])
        else:
            x0, b = t
            out.append([t, (x0, -b)])
    return [alt for pair in out for alt in pair]


def _combine(curve, d, primes_data, weight2: bool, height_bound: float):
    """CRT ladder over 1..len(primes_data) primes; yields candidates."""
    seen = set()
    exhausted = None
    for rung in range(1, len(primes_data) + 1):
        rows = primes_data[:rung]
        pools = []
        count = 1
        for i, (p, w2, w1) in enumerate(rows):
            base = w2 if weight2 else w1
            pool = list(base) if i == 0 else _signed_expansions(base, weight2)
            if not pool:
                count = 0
                break
            pools.append(pool)
            count *= len(pool)
        if count == 0:
            continue
        if count > COMBO_CAP:
            exhausted = f"combination budget exceeded at rung {rung} for d={d}"
            break
        moduli = [p for p, _, _ in rows]
        M = math.prod(moduli)
        bound = math.isqrt((M - 1) // 2)
        bound = min(bound, int(math.exp(min(height_bound, 700.0))))
        if bound < 1:
            continue
        width = 4 if weight2 else 2
        for combo in itertools.product(*pools):
            coords = []
            for j in range(width):
                r = crt([t[j] for t in combo], moduli)
                q = rational_reconstruct(r, M, bound, bound)
                if q is None:
                    break
                coords.append(q)
            else:
                cand = tuple(coords)
                vpart = cand[2:] if weight2 else cand[1:]
                lead = next((c for c in vpart if c != 0), None)
                if lead is not None and lead < 0:
                    if weight2:
                        cand = (cand[0], cand[1], -cand[2], -cand[3])
                    else:
                        cand = (cand[0], -cand[1])
                if cand not in seen:
                    seen.add(cand)
                    yield rung, cand
    if exhausted:
        raise _BudgetExceeded(exhausted)


class _BudgetExceeded(Exception):
    pass


def _field_model(curve: GenusTwoCurve, d: int):
    if d == 1:
        return QQ, arithmetic_model(curve, "QQ")
    K = QuadField(d)
    return K, arithmetic_model(curve, ("quad", d))


def _verify_candidate(curve: GenusTwoCurve, d: int, cand: tuple, weight2: bool):
    """Exact check over Q(sqrt(d)); returns a verified witness or None."""
    Fq = Poly.from_ints(QQ, curve.F)
    if weight2:
        u1, u0, a, b = cand
        uq = Poly(QQ, [u0, u1, Fraction(1)])
        vv = Poly(QQ, [b, a])
        if not (((vv * vv).scale(Fraction(d)) - Fq) % uq).is_zero():
            return None
    else:
        x0, b = cand
        if Fq.evaluate(x0) != d * b * b:
            return None
        uq = Poly(QQ, [-x0, Fraction(1)])
    try:
        K, model = _field_model(curve, d)
    except UnsupportedLocalModel:
        return None
    if d == 1:
        u_K = uq
        v_K = Poly(QQ, [b, a]) if weight2 else Poly(QQ, [b])
    else:
        u_K = Poly(K, [K.of_fraction(c) for c in uq.coeffs])
        if weight2:
            v_K = Poly(K, [K.elem(0, b), K.elem(0, a)])
        else:
            v_K = Poly(K, [K.elem(0, b)])
    try:
        P = model_point_from_x(model, u_K, v_K)
    except (ValueError, ZeroDivisionError):
        return None
    if P.is_identity():
        return None
    if not scalar_mul(model, 5, P).is_identity():
        return None
    if weight2:
        return TorsionWitness(u=(cand[1], cand[0], Fraction(1)), v=(cand[3], cand[2]), d=d, verified=True)
    return TorsionWitness(u=(-cand[0], Fraction(1)), v=(cand[1],), d=d, verified=True)


def _search_over_field(curve: GenusTwoCurve, d: int, config) -> TorsionSearchResult:
    k = _knob(config, "monte_carlo_k", DEFAULT_MONTE_CARLO_K)
    seed = _knob(config, "seed", DEFAULT_SEED)
    B = _knob(config, "height_bound", DEFAULT_HEIGHT_BOUND)
    primes_data, killer = _usable_primes(curve, d, k, seed)
    if killer is not None:
        return TorsionSearchResult(
            "false", None, f"5 does not divide the class count at the good prime {killer}"
        )
    if not primes_data:
        return TorsionSearchResult(
            "maybe", None, f"no usable split primes below {SELECTION_BOUND} for d={d}"
        )
    shapes = [True] + ([False] if curve.degree == 5 else [])
    try:
        for weight2 in shapes:
            for rung, cand in _combine(curve, d, primes_data, weight2, B):
                W = _verify_candidate(curve, d, cand, weight2)
                if W is not None:
                    return TorsionSearchResult(
                        "true", W, f"witness over d={d} from {rung} prime(s)"
                    )
    except _BudgetExceeded as stop:
        return TorsionSearchResult("maybe", None, str(stop))
    return TorsionSearchResult(
        "maybe", None, f"search exhausted for d={d} up to {len(primes_data)} prime(s)"
    )


def has_rational_five_torsion(curve: GenusTwoCurve, config=None) -> TorsionSearchResult:
    """Decide whether J(Q)[5] is nontrivial, when the evidence is decisive.

    A good prime with class count prime to 5 proves false, because
    reduction is injective on torsion at odd good primes.  A candidate
    surviving exact verification proves true.  Anything else is maybe.
    """
    seed = _knob(config, "seed", DEFAULT_SEED)
    for p in primerange(3, ELIMINATION_BOUND):
        if p in curve.bad_primes:
            continue
        try:
            order = jacobian_order(curve, p, seed=seed)
        except UnsupportedLocalModel:
            continue
        if order % 5 != 0:
            return TorsionSearchResult(
                "false", None, f"5 does not divide the class count at the good prime {p}"
            )
    return _search_over_field(curve, 1, config)


def find_simple_quadratic_torsion(curve: GenusTwoCurve, config=None) -> TorsionSearchResult:
    """Search for 5-torsion of the shape (u rational, v rational * sqrt(d)).

    false is only ever returned when no quadratic field survives
    elimination; an exhausted search reports maybe, since the height
    bound is a working budget rather than a certificate.
    """
    seed = _knob(config, "seed", DEFAULT_SEED)
    cset = candidate_quadratic_fields(curve, seed=seed)
    if not cset.ds:
        return TorsionSearchResult(
            "false", None, "every quadratic field is eliminated by a good prime"
        )
    diagnostics = []
    for d in sorted(cset.ds, key=lambda x: (abs(x), x < 0)):
        result = _search_over_field(curve, d, config)
        if result.status == "true":
            return result
        diagnostics.append(result.diagnostic)
    return TorsionSearchResult("maybe", None, "; ".join(diagnostics))


def verify_torsion_witness(curve: GenusTwoCurve, W: TorsionWitness) -> bool:
    """Recheck a witness from scratch in exact arithmetic."""
    if not isinstance(W, TorsionWitness) or len(W.u) not in (2, 3) or not W.v:
        raise ValueError("malformed witness")
    if W.u[-1] != 1:
        raise ValueError("u must be monic")
    if W.d == 0 or squarefree_part(W.d) != W.d:
        raise ValueError("d must be a squarefree nonzero integer")
    coords = tuple(Fraction(c) for c in W.u[:-1]) + tuple(Fraction(c) for c in W.v)
    weight2 = len(W.u) == 3
    if weight2:
        u1, u0 = coords[1], coords[0]
        cand = (u1, u0, coords[3], coords[2])
    else:
        cand = (-coords[0], coords[1])
    return _verify_candidate(curve, W.d, cand, weight2) is not None
