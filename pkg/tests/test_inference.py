import math
from fractions import Fraction

import pytest

from galimage.curve import new_curve
from galimage.gspfour import (
    LatticeRecord,
    LocalDistribution,
    SubgroupLattice,
    standard_generators,
)
from galimage.inference import (
    EmpiricalDistribution,
    InferenceConfig,
    InferenceError,
    bayes_error_bound,
    charpoly_string,
    empirical_distribution,
    filter_realized,
    log_likelihood_difference,
    nearest_distributions,
    pair_string,
    run_imager,
)
from galimage.jacobian import FrobeniusCache, FrobeniusData

PA = ((4, 0, 0, 0, 1), 1)
PB = ((1, 1, 1, 1, 1), 2)
PC = ((1, 0, 0, 0, 1), 0)

DIST_HALF = LocalDistribution({PA: Fraction(1, 2), PB: Fraction(1, 2)})
DIST_QUARTER = LocalDistribution({PA: Fraction(1, 4), PB: Fraction(3, 4)})
DIST_OTHER = LocalDistribution({PA: Fraction(1, 2), PC: Fraction(1, 2)})

GENS = standard_generators()


def fake_lattice():
    recs = [
        LatticeRecord("5.10.1", 10, 100, GENS, DIST_HALF, True, True),
        LatticeRecord("5.10.2", 10, 100, GENS, DIST_QUARTER, False, True),
        LatticeRecord("5.20.1", 20, 50, GENS, DIST_OTHER, False, False),
        LatticeRecord("5.30.1", 30, 40, GENS, DIST_HALF, False, False),
    ]
    return SubgroupLattice(recs)


def fake_empirical(counts, a=10000, b=10100):
    return EmpiricalDistribution(
        counts=dict(counts),
        total_sampled=sum(counts.values()),
        prime_range=(a, b),
        curve_id="t",
    )


def test_charpoly_string():
    assert charpoly_string((4, 0, 0, 0, 1)) == "x^4+4"
    assert charpoly_string((1, 1, 1, 1, 1)) == "x^4+x^3+x^2+x+1"
    assert charpoly_string((-1, 6, 0, 0, 1)) == "x^4+x+4"
    assert charpoly_string((0, 2, 3, 0, 1)) == "x^4+3x^2+2x"
    assert pair_string(PA) == "x^4+4|1"


def test_empirical_distribution_validates():
    with pytest.raises(InferenceError):
        fake_empirical({})
    with pytest.raises(InferenceError):
        EmpiricalDistribution(counts={PA: 3}, total_sampled=4, prime_range=(3, 5), curve_id="t")
    E = fake_empirical({PA: 30, PB: 20})
    assert E.proportions()[PA] == Fraction(3, 5)
    assert sum(E.proportions().values()) == 1
    assert E.support() == {PA, PB}


def test_filter_realized():
    lat = fake_lattice()
    E = fake_empirical({PA: 30, PB: 20})
    kept = filter_realized(lat.labels(), E, lat)
    assert kept == ["5.10.1", "5.10.2", "5.30.1"]
    with pytest.raises(InferenceError):
        filter_realized(["5.99.9"], E, lat)


def test_nearest_distributions():
    lat = fake_lattice()
    E = fake_empirical({PA: 30, PB: 20})
    cands, gap = nearest_distributions(["5.10.1", "5.10.2", "5.30.1"], E, lat)
    # 5.30.1 shares the winning distribution, so the tie is harmless
    assert cands == ["5.10.1", "5.30.1"]
    assert gap == pytest.approx(float(Fraction(49, 200) - Fraction(1, 50)))


def test_nearest_tie_between_distinct_distributions():
    lat = fake_lattice()
    E = fake_empirical({PA: 3, PB: 5})  # exactly between 1/2,1/2 and 1/4,3/4
    with pytest.raises(InferenceError):
        nearest_distributions(["5.10.1", "5.10.2"], E, lat)


def test_log_likelihood_difference():
    lat = fake_lattice()
    E = fake_empirical({PA: 30, PB: 20})
    eta = log_likelihood_difference(E, ["5.10.1", "5.10.2", "5.30.1"], lat)
    best = 50 * math.log(0.5)
    second = 30 * math.log(0.25) + 20 * math.log(0.75)
    assert eta == pytest.approx(best - second)
    # a single distinct distribution leaves nothing to compare against
    assert log_likelihood_difference(E, ["5.10.1", "5.30.1"], lat) == math.inf
    # zero observed mass sends a distribution to -inf, so the gap blows up
    E2 = fake_empirical({PA: 10, PC: 10})
    assert log_likelihood_difference(E2, ["5.10.1", "5.20.1"], lat) == math.inf


def test_bayes_error_bound():
    v = bayes_error_bound(1, 30.0)
    assert 1.0e-10 < v <= 1.051e-10
    assert bayes_error_bound(1, 40.0) < v
    assert bayes_error_bound(1125, 5.0) == 0.0
    # a wider bucket concentrates more prior mass on the match
    assert bayes_error_bound(2, 10.0) < bayes_error_bound(1, 10.0)
    with pytest.raises(InferenceError):
        bayes_error_bound(0, 1.0)
    with pytest.raises(InferenceError):
        bayes_error_bound(1126, 1.0)
    with pytest.raises(InferenceError):
        bayes_error_bound(1, -0.5)


def test_config_validation():
    with pytest.raises(InferenceError):
        InferenceConfig(prime_floor=100)
    with pytest.raises(InferenceError):
        InferenceConfig(prime_ceiling=9999)
    with pytest.raises(InferenceError):
        InferenceConfig(nu=0.0)
    with pytest.raises(InferenceError):
        InferenceConfig(step=0)


def seeded_cache(curve, pairs_by_prime):
    cache = FrobeniusCache(None)
    for p, (cp, dim) in pairs_by_prime.items():
        cache.put(curve, FrobeniusData(p=p, charpoly=cp, eig1dim=dim, order=cp[0]))
    return cache


def test_empirical_distribution_reads_cache():
    curve = new_curve([-4, 20, 5, -20, 0, 4], conductor=431250, label="431250.a")
    primes = [10007, 10009, 10037, 10039]
    cache = seeded_cache(
        curve,
        {p: (PA[0], PA[1]) if i % 2 == 0 else (PB[0], PB[1]) for i, p in enumerate(primes)},
    )
    E = empirical_distribution(curve, 10000, 10040, cache=cache)
    assert E.total_sampled == 4
    assert E.counts == {PA: 2, PB: 2}
    assert E.prime_range == (10000, 10040)
    with pytest.raises(InferenceError):
        empirical_distribution(curve, 10008, 10008, cache=cache)


def test_run_imager_synthetic():
    curve = new_curve([-4, 20, 5, -20, 0, 4], conductor=431250, label="431250.a")
    cache = seeded_cache(curve, {10007: (PA[0], PA[1]), 10009: (PB[0], PB[1])})
    lat = fake_lattice()
    config = InferenceConfig(
        prime_floor=10000, prime_ceiling=10010, step=10, apply_global_filters=False
    )
    report = run_imager(curve, config, lat, cache=cache)
    # observing both pairs drops 5.20.1, the empirical point sits on DIST_HALF
    assert report.candidates == ["5.10.1", "5.30.1"]
    assert report.final_possibilities == report.candidates
    assert report.low_confidence  # only two primes, eta is tiny
    assert report.eta == pytest.approx(math.log(Fraction(4, 3)))
    assert report.prime_range == (10000, 10010)
    assert report.primes_sampled == 2
    assert report.rational_point is None
    assert report.empirical == {"x^4+4|1": "1/2", "x^4+x^3+x^2+x+1|2": "1/2"}
    # byte-identical reruns
    again = run_imager(curve, config, lat, cache=cache)
    assert report.to_json() == again.to_json()
    assert '"schema_version": "1"' in report.to_json()
