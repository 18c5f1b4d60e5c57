"""Classification of mod-5 Galois images from Frobenius statistics.

The empirical distribution of (characteristic polynomial mod 5,
1-eigenspace dimension) pairs over sampled good primes is matched
against the stored per-class distributions in exact rational
arithmetic; the surviving bucket is then cut down by the rational and
simple-quadratic torsion filters.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import primerange

from .curve import GenusTwoCurve
from .gspfour import (
    LATTICE_CLASS_COUNT,
    SubgroupLattice,
    empirical_distance2,
    pair_sort_key,
)
from .jacobian import FrobeniusCache, frobenius_charpoly
from .torsion import find_simple_quadratic_torsion, has_rational_five_torsion


class InferenceError(ValueError):
    pass


def charpoly_string(coeffs) -> str:
    """Human form of a mod-5 characteristic polynomial, lowest-first input."""
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k] % 5
        if c == 0:
            continue
        if k == 0:
            terms.append(str(c))
        else:
            x = "x" if k == 1 else f"x^{k}"
            terms.append(x if c == 1 else f"{c}{x}")
    return "+".join(terms) if terms else "0"


def pair_string(pair) -> str:
    poly, dim = pair
    return f"{charpoly_string(poly)}|{dim}"


@dataclass
class EmpiricalDistribution:
    """Observed pair counts over the good primes of a closed range."""

    counts: dict
    total_sampled: int
    prime_range: tuple
    curve_id: str

    def __post_init__(self):
        if self.total_sampled <= 0:
            raise InferenceError("no good primes were sampled")
        if sum(self.counts.values()) != self.total_sampled:
            raise InferenceError("pair counts do not sum to the sample size")

    def proportions(self) -> dict:
        return {k: Fraction(n, self.total_sampled) for k, n in self.counts.items()}

    def support(self) -> frozenset:
        return frozenset(self.counts)


@dataclass(frozen=True)
class InferenceConfig:
    prime_floor: int = 10000
    prime_ceiling: int = 100000
    step: int = 10000
    nu: float = 30.0
    monte_carlo_k: int = 64
    height_bound: float = 40.0
    seed: int = 0
    threads: int = 1
    apply_global_filters: bool = True

    def __post_init__(self):
        if not 10000 <= self.prime_floor < self.prime_ceiling:
            raise InferenceError("prime window must satisfy 10000 <= floor < ceiling")
        if self.nu <= 0:
            raise InferenceError("nu must be positive")
        if self.step <= 0 or self.monte_carlo_k <= 0 or self.threads <= 0:
            raise InferenceError("step, monte_carlo_k and threads must be positive")


@dataclass
class ClassificationReport:
    curve_id: str
    survivors_after_pair_filter: list
    candidates: list
    eta: float
    error_bound: float
    rational_point: bool | None
    rational_witness: dict | None
    simple_quadratic_point: str | None
    quadratic_witness: dict | None
    quadratic_d: int | None
    final_possibilities: list
    primes_sampled: int
    prime_range: tuple
    low_confidence: bool
    empirical: dict = field(default_factory=dict)
    schema_version: str = "1"

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "curve_id": self.curve_id,
            "prime_range": list(self.prime_range),
            "primes_sampled": self.primes_sampled,
            "survivors_after_pair_filter": list(self.survivors_after_pair_filter),
            "candidates": list(self.candidates),
            "eta": self.eta,
            "error_bound": self.error_bound,
            "rational_point": self.rational_point,
            "rational_witness": self.rational_witness,
            "simple_quadratic_point": self.simple_quadratic_point,
            "quadratic_witness": self.quadratic_witness,
            "quadratic_d": self.quadratic_d,
            "final_possibilities": list(self.final_possibilities),
            "low_confidence": self.low_confidence,
            "empirical": dict(self.empirical),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def empirical_distribution(
    curve: GenusTwoCurve,
    a: int,
    b: int,
    cache: FrobeniusCache | None = None,
    k: int = 64,
    seed: int = 0,
    threads: int = 1,
) -> EmpiricalDistribution:
    """One observation per good prime of [a, b], bad primes excluded."""
    primes = [p for p in primerange(a, b + 1) if p not in curve.bad_primes]
    if not primes:
        raise InferenceError(f"no good primes in [{a}, {b}]")
    data = {}
    missing = []
    for p in primes:
        got = cache.get(curve, p) if cache is not None else None
        if got is not None:
            data[p] = got
        else:
            missing.append(p)
    if threads > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = pool.map(
                lambda p: frobenius_charpoly(curve, p, None, k=k, seed=seed), missing
            )
            for fd in rows:
                data[fd.p] = fd
    else:
        for p in missing:
            data[p] = frobenius_charpoly(curve, p, None, k=k, seed=seed)
    if cache is not None:
        for p in sorted(missing):
            cache.put(curve, data[p])
    counts: dict = {}
    for p in primes:
        pair = data[p].pair()
        counts[pair] = counts.get(pair, 0) + 1
    return EmpiricalDistribution(
        counts=counts,
        total_sampled=len(primes),
        prime_range=(a, b),
        curve_id=curve.curve_id,
    )


def filter_realized(possibilities, E: EmpiricalDistribution, lattice: SubgroupLattice):
    """Classes whose distribution support covers every observed pair."""
    observed = E.support()
    out = []
    for label in possibilities:
        rec = lattice.by_label.get(label)
        if rec is None:
            raise InferenceError(f"unknown class label {label}")
        if observed <= rec.distribution.support():
            out.append(label)
    return out


def nearest_distributions(possibilities, E: EmpiricalDistribution, lattice: SubgroupLattice):
    """Argmin bucket under exact squared distance, plus the runner-up gap."""
    if not possibilities:
        raise InferenceError("no possibilities to match against")
    d2 = {
        label: empirical_distance2(
            E.counts, E.total_sampled, lattice.by_label[label].distribution
        )
        for label in possibilities
    }
    best = min(d2.values())
    candidates = [label for label in possibilities if d2[label] == best]
    matched = {lattice.by_label[label].distribution for label in candidates}
    if len(matched) != 1:
        raise InferenceError("distinct distributions are exactly equidistant")
    matched_dist = next(iter(matched))
    rest = [
        d2[label]
        for label in possibilities
        if lattice.by_label[label].distribution != matched_dist
    ]
    gap = float(min(rest) - best) if rest else math.inf
    return candidates, gap


def log_likelihood_difference(E: EmpiricalDistribution, possibilities, lattice: SubgroupLattice) -> float:
    """Natural-log gap between the best and second-best explanations.

    Computed over the distinct distributions among the possibilities;
    the shared multinomial coefficient cancels and is omitted.  A
    distribution missing an observed pair scores -inf.
    """
    seen = {}
    for label in possibilities:
        seen.setdefault(lattice.by_label[label].distribution, None)
    dists = list(seen)
    if len(dists) < 2:
        return math.inf
    scores = []
    for q in dists:
        total = 0.0
        for pair, n in E.counts.items():
            mass = q.mass(pair)
            if mass == 0:
                total = -math.inf
                break
            total += n * math.log(mass)
        scores.append(total)
    scores.sort(reverse=True)
    if scores[0] == -math.inf:
        return 0.0
    return scores[0] - scores[1]


def bayes_error_bound(bucket_size: int, eta: float, total: int = LATTICE_CLASS_COUNT) -> float:
    """Posterior mass outside the matched bucket under a uniform prior."""
    if not 1 <= bucket_size <= total:
        raise InferenceError("bucket size out of range")
    if eta < 0:
        raise InferenceError("eta must be nonnegative")
    s = Fraction(bucket_size, total)
    w = math.exp(-eta)
    numerator = w * float((1 - s) ** 2)
    denominator = float(s) + w * float(1 - s)
    return numerator / denominator


def _empirical_json(E: EmpiricalDistribution) -> dict:
    items = sorted(E.counts.items(), key=lambda kv: pair_sort_key(kv[0]))
    return {pair_string(k): f"{n}/{E.total_sampled}" for k, n in items}


def run_imager(
    curve: GenusTwoCurve,
    config: InferenceConfig,
    lattice: SubgroupLattice,
    cache: FrobeniusCache | None = None,
) -> ClassificationReport:
    """Sample, filter, match, then cut by the global torsion filters.

    The prime window grows by config.step until the likelihood gap
    clears config.nu or the ceiling is reached; in the latter case the
    report is flagged low-confidence rather than failing.
    """
    possibilities = lattice.labels()
    floor = config.prime_floor
    upper = floor
    E = None
    eta = math.inf
    low_confidence = False
    while True:
        upper = min(upper + config.step, config.prime_ceiling)
        E = empirical_distribution(
            curve,
            floor,
            upper,
            cache=cache,
            k=config.monte_carlo_k,
            seed=config.seed,
            threads=config.threads,
        )
        possibilities = filter_realized(possibilities, E, lattice)
        if not possibilities:
            raise InferenceError("no admissible class realizes the observed pairs")
        candidates, _gap = nearest_distributions(possibilities, E, lattice)
        eta = log_likelihood_difference(E, possibilities, lattice)
        if eta > config.nu or upper >= config.prime_ceiling:
            low_confidence = not eta > config.nu
            break

    final = list(candidates)
    rational_flag = None
    rational_witness = None
    quad_status = None
    quad_witness = None
    quad_d = None
    if config.apply_global_filters:
        rat = has_rational_five_torsion(curve, config)
        if rat.status == "true":
            rational_flag = True
            rational_witness = rat.witness.as_dict()
            final = [l for l in final if lattice.by_label[l].flag_eig1]
        elif rat.status == "false":
            rational_flag = False
            final = [l for l in final if not lattice.by_label[l].flag_eig1]
        quad = find_simple_quadratic_torsion(curve, config)
        quad_status = quad.status
        if quad.status == "true":
            quad_witness = quad.witness.as_dict()
            quad_d = quad.witness.d
            final = [l for l in final if lattice.by_label[l].flag_pm]
        elif quad.status == "false":
            final = [l for l in final if not lattice.by_label[l].flag_pm]

    return ClassificationReport(
        curve_id=curve.curve_id,
        survivors_after_pair_filter=list(possibilities),
        candidates=list(candidates),
        eta=float(eta),
        error_bound=bayes_error_bound(len(candidates), eta),
        rational_point=rational_flag,
        rational_witness=rational_witness,
        simple_quadratic_point=quad_status,
        quadratic_witness=quad_witness,
        quadratic_d=quad_d,
        final_possibilities=final,
        primes_sampled=E.total_sampled,
        prime_range=(floor, upper),
        low_confidence=low_confidence,
        empirical=_empirical_json(E),
    )
