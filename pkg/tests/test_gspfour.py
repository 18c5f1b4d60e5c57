import numpy as np
import pytest

from fractions import Fraction

from galimage import _f5linalg as f5
from galimage.gspfour import (
    GROUP_ORDER,
    SP_ORDER,
    GspElement,
    IDENTITY_ELEMENT,
    LatticeFormatError,
    LatticeRecord,
    LatticeVerificationError,
    LocalDistribution,
    ResourceError,
    Subgroup,
    SubgroupLattice,
    _embed_pair,
    _line_reps,
    build_named_subgroup,
    certified_full_group_generators,
    default_lattice_path,
    empirical_distance2,
    enumerate_subgroups_small,
    full_group_order,
    generate_subgroup,
    has_group_eigenspace,
    invariant_pair,
    is_admissible,
    line_orbit_stabilizer,
    load_lattice,
    local_distribution,
    save_lattice,
    similitude,
    standard_generators,
    subgroup_from_codes,
    verify_full_group_generators,
    verify_lattice,
)

ID_PAIR = ((1, 1, 1, 1, 1), 4)
NEG_PAIR = ((1, 4, 1, 4, 1), 0)


def _random_mats(n, seed):
    """Random-ish elements as products of long words in the generators."""
    rng = np.random.default_rng(seed)
    pool = np.stack([g.mat for g in standard_generators()])
    while pool.shape[0] < n:
        take = min(pool.shape[0], n)
        i = rng.integers(0, pool.shape[0], size=take)
        j = rng.integers(0, pool.shape[0], size=take)
        pool = np.concatenate([pool, f5.matmul(pool[i], pool[j])])
    return pool[:n]


def test_similitude_pinned():
    assert similitude(IDENTITY_ELEMENT) == 1
    assert similitude(GspElement(np.diag([1, 2, 2, 1]))) == 2
    assert similitude(GspElement(-np.eye(4, dtype=np.int64))) == 1
    with pytest.raises(ValueError):
        GspElement(np.diag([1, 1, 1, 2]))
    with pytest.raises(ValueError):
        GspElement(np.zeros((4, 4)))


def test_similitude_homomorphism():
    mats = _random_mats(20000, seed=101)
    a, b = mats[:10000], mats[10000:]
    lam_a = f5.similitude_batch(a)
    lam_b = f5.similitude_batch(b)
    lam_ab = f5.similitude_batch(f5.matmul(a, b))
    assert np.all(lam_ab == lam_a.astype(np.int64) * lam_b % 5)


def test_invariant_pair_pinned():
    assert invariant_pair(IDENTITY_ELEMENT) == ID_PAIR
    assert invariant_pair(GspElement(-np.eye(4, dtype=np.int64))) == NEG_PAIR
    # (x-1)^2 (x-2)^2 = x^4 + 4x^3 + 3x^2 + 3x + 4 over F_5
    poly, dim = invariant_pair(GspElement(np.diag([1, 2, 2, 1])))
    assert dim == 2
    assert poly == (4, 3, 3, 4, 1)


def test_invariant_pair_conjugation_invariant():
    mats = _random_mats(20000, seed=202)
    m, p = mats[:10000], mats[10000:]
    conj = f5.matmul(f5.matmul(p, m), np.stack([f5.mat_inv(x) for x in p]))
    assert np.all(
        f5.pair_codes(*f5.invariant_pairs_batch(conj))
        == f5.pair_codes(*f5.invariant_pairs_batch(m))
    )


def test_gsp_element_basics():
    g = GspElement(np.diag([1, 2, 2, 1]))
    assert GspElement.from_code(g.code()) == g
    assert g.order() == 4
    assert g ** 4 == IDENTITY_ELEMENT
    assert g ** 3 == g.inverse()
    assert g ** -1 == g.inverse()
    assert g * g.inverse() == IDENTITY_ELEMENT
    assert hash(g) == hash(GspElement.from_code(g.code()))
    assert IDENTITY_ELEMENT.order() == 1


def test_generate_subgroup_pinned():
    assert generate_subgroup([]).order == 1
    neg = GspElement(-np.eye(4, dtype=np.int64))
    assert generate_subgroup([neg]).order == 2
    assert generate_subgroup([GspElement(np.diag([1, 2, 2, 1]))]).order == 4
    with pytest.raises(ResourceError):
        generate_subgroup(certified_full_group_generators(), order_cap=1000)


def test_local_distribution_pinned():
    triv = local_distribution(generate_subgroup([]))
    assert triv.masses == {ID_PAIR: Fraction(1)}
    neg = GspElement(-np.eye(4, dtype=np.int64))
    pm = local_distribution(generate_subgroup([neg]))
    assert pm.mass(ID_PAIR) == Fraction(1, 2)
    assert pm.mass(NEG_PAIR) == Fraction(1, 2)
    assert sum(q for _, q in pm.canonical_items()) == 1
    # canonical order is lexicographic on (c0..c4), then dimension
    assert [p for p, _ in pm.canonical_items()] == [ID_PAIR, NEG_PAIR]


def test_local_distribution_validation():
    with pytest.raises(ValueError):
        LocalDistribution({ID_PAIR: Fraction(1, 2)})
    d = LocalDistribution.from_counts({ID_PAIR: 1, NEG_PAIR: 3}, 4)
    assert d.mass(NEG_PAIR) == Fraction(3, 4)


def test_distribution_distance():
    triv = LocalDistribution({ID_PAIR: Fraction(1)})
    pm = LocalDistribution({ID_PAIR: Fraction(1, 2), NEG_PAIR: Fraction(1, 2)})
    assert triv.distance2(pm) == Fraction(1, 2)
    assert triv.distance2(triv) == 0
    assert empirical_distance2({ID_PAIR: 1, NEG_PAIR: 1}, 2, pm) == 0
    assert empirical_distance2({ID_PAIR: 3, NEG_PAIR: 1}, 4, pm) == Fraction(1, 8)


def test_has_group_eigenspace_pinned():
    triv = generate_subgroup([])
    assert has_group_eigenspace(triv, {1})
    neg = GspElement(-np.eye(4, dtype=np.int64))
    pm = generate_subgroup([neg])
    assert not has_group_eigenspace(pm, {1})
    assert has_group_eigenspace(pm, {1, -1})
    tor = generate_subgroup([GspElement(np.diag([1, 2, 2, 1]))])
    assert has_group_eigenspace(tor, {1})
    with pytest.raises(ValueError):
        has_group_eigenspace(tor, {2})


def test_has_group_eigenspace_matches_bruteforce():
    rng = np.random.default_rng(7)
    mats = _random_mats(4000, seed=303)
    cases = 0
    while cases < 12:
        picks = mats[rng.integers(0, mats.shape[0], size=2)]
        try:
            sub = generate_subgroup([GspElement(m) for m in picks], order_cap=3000)
        except ResourceError:
            continue
        cases += 1
        elems = sub.element_matrices().astype(np.int64)
        for lams in ((1,), (1, 4)):
            found = False
            for line in _line_reps():
                imgs = elems @ line.astype(np.int64) % 5
                ok = np.zeros(elems.shape[0], dtype=bool)
                for lam in lams:
                    ok |= (imgs == lam * line.astype(np.int64) % 5).all(axis=1)
                if ok.all():
                    found = True
                    break
            assert has_group_eigenspace(sub, set(lams)) == found


def test_is_admissible_pinned():
    assert not is_admissible(generate_subgroup([]))
    full = Subgroup(certified_full_group_generators(), GROUP_ORDER)
    assert is_admissible(full)
    # transvections have similitude 1, so they stay inside Sp4
    sp_gens = [g for g in standard_generators() if g.similitude_value == 1]
    assert not is_admissible(Subgroup(sp_gens, SP_ORDER))


def test_standard_generators_certify():
    gens = standard_generators()
    assert len(gens) == 8
    assert verify_full_group_generators(gens)
    neg = GspElement(-np.eye(4, dtype=np.int64))
    assert not verify_full_group_generators([neg])


def test_line_orbit():
    gens = certified_full_group_generators()
    transversal, schreier = line_orbit_stabilizer(gens, (1, 0, 0, 0))
    assert len(transversal) == 156
    assert len(_line_reps()) == 156
    assert set(transversal) == {tuple(int(x) for x in v) for v in _line_reps()}
    assert schreier  # stabilizer generators come out nonempty


def test_full_group_order_closure():
    # The one brute-force full enumeration; everything else uses the
    # orbit-stabilizer certificate.
    assert full_group_order() == GROUP_ORDER


NAMED_ORDERS = {
    "5.156.1": 240_000,
    "5.312.1": 120_000,
    "5.624.1": 60_000,
    "5.624.3": 60_000,
    "5.650.1": 57_600,
    "5.3900.1": 9_600,
    "5.624.8": 60_000,
    "5.600.2": 62_400,
}


@pytest.fixture(scope="module")
def named_subgroups():
    return {name: build_named_subgroup(name) for name in NAMED_ORDERS}


def test_named_subgroup_orders(named_subgroups):
    for name, sub in named_subgroups.items():
        index = int(name.split(".")[1])
        assert sub.order == NAMED_ORDERS[name]
        assert index * sub.order == GROUP_ORDER
    with pytest.raises(ValueError):
        build_named_subgroup("5.0.0")


def test_named_subgroups_admissible(named_subgroups):
    for sub in named_subgroups.values():
        assert is_admissible(sub)


def test_named_subgroup_flags(named_subgroups):
    flags = {
        name: (has_group_eigenspace(s, {1}), has_group_eigenspace(s, {1, -1}))
        for name, s in named_subgroups.items()
    }
    assert flags["5.624.1"] == (True, True)
    assert flags["5.312.1"] == (False, True)
    assert flags["5.624.3"] == (False, False)
    assert flags["5.156.1"] == (False, False)
    assert flags["5.650.1"] == (False, False)
    assert flags["5.624.8"] == (False, False)
    assert flags["5.600.2"] == (False, False)


def test_klingen_fixes_line(named_subgroups):
    mats = named_subgroups["5.156.1"].element_matrices()
    # stabilizer of <e1>: images of e1 stay on the line
    assert np.all(mats[:, 1:, 0] == 0)
    assert set(np.unique(mats[:, 0, 0])) == {1, 2, 3, 4}
    # 5.624.1 fixes e1 itself
    mats1 = named_subgroups["5.624.1"].element_matrices()
    assert np.all(mats1[:, 0, 0] == 1)
    assert np.all(mats1[:, 1:, 0] == 0)


def test_golden_centralizer(named_subgroups):
    # seed with phi^2 = phi + 1: scalar 3 plus a nilpotent block
    seed = 3 * np.eye(4, dtype=np.int64)
    seed[0, 3], seed[1, 2] = 1, 4
    seed = seed.astype(np.uint8)
    assert np.array_equal(
        f5.matmul(seed[None], seed[None])[0],
        (seed.astype(np.int64) + np.eye(4, dtype=np.int64)).astype(np.uint8) % 5,
    )
    sub = named_subgroups["5.624.8"]
    elems = sub.element_matrices()
    left = f5.matmul(elems, seed[None])
    right = f5.matmul(seed[None], elems)
    assert np.all(left == right)
    # and it is the whole centralizer inside GSp4
    span = f5.span_elements(f5.solve_commutant([seed]))
    codes = np.unique(f5.pack(span[f5.is_gsp_batch(span)]))
    assert np.array_equal(codes, sub.elements)


def test_f25_scalar_subgroup(named_subgroups):
    # 5.600.2 is the centralizer of a multiplication-by-z map with
    # z^2 + z + 2 = 0 in F_25; every element commutes with the seed.
    sub = named_subgroups["5.600.2"]
    seed = np.array(
        [[2, 2, 0, 0], [1, 2, 0, 0], [0, 0, 2, 1], [0, 0, 2, 2]], dtype=np.uint8
    )
    sq = f5.matmul(seed[None], seed[None])[0].astype(np.int64)
    zero = (sq + seed + 2 * np.eye(4, dtype=np.int64)) % 5
    assert not zero.any()  # the seed satisfies x^2 + x + 2 = 0
    elems = sub.element_matrices()
    assert np.all(f5.matmul(elems, seed[None]) == f5.matmul(seed[None], elems))
    # the seed has charpoly (x^2 + x + 2)^2 but det z^2 outside F_5^*,
    # so it commutes with everything here without being a member
    assert tuple(f5.charpoly_batch(seed[None])[0]) == (4, 4, 0, 2, 1)
    assert not f5.is_gsp_batch(seed[None])[0]


def test_enumerate_subgroups_trivial_and_cyclic():
    triv = generate_subgroup([])
    reps = enumerate_subgroups_small(triv)
    assert len(reps) == 1 and reps[0].order == 1
    c4 = generate_subgroup([GspElement(np.diag([1, 2, 2, 1]))])
    reps = enumerate_subgroups_small(c4)
    assert [r.order for r in reps] == [1, 2, 4]


def test_enumerate_subgroups_dihedral():
    rot = np.array([[0, 4], [1, 0]])
    refl = np.array([[1, 0], [0, 4]])
    r = GspElement(_embed_pair(rot, rot))
    s = GspElement(_embed_pair(refl, refl))
    d4 = generate_subgroup([r, s])
    assert d4.order == 8
    reps = enumerate_subgroups_small(d4)
    assert len(reps) == 8
    assert sorted(x.order for x in reps) == [1, 2, 2, 2, 4, 4, 4, 8]
    # oracle: count all subgroups by brute force over subsets
    codes = [int(c) for c in d4.elements]
    total = 0
    for mask in range(1 << 8):
        subset = [codes[i] for i in range(8) if mask >> i & 1]
        if not subset:
            continue
        sset = set(subset)
        if IDENTITY_ELEMENT.code() not in sset:
            continue
        mats = f5.unpack(np.array(subset))
        prods = f5.pack(
            f5.matmul(np.repeat(mats, len(subset), axis=0), np.tile(mats, (len(subset), 1, 1)))
        )
        if set(int(x) for x in prods) <= sset:
            total += 1
    assert total == 10
    with pytest.raises(ResourceError):
        enumerate_subgroups_small(d4, order_cap=4)


def test_subgroup_from_codes_roundtrip():
    c4 = generate_subgroup([GspElement(np.diag([1, 2, 2, 1]))])
    again = subgroup_from_codes(c4.elements)
    assert again.order == 4
    assert np.array_equal(again.elements, c4.elements)
    closure = generate_subgroup(again.generators)
    assert np.array_equal(closure.elements, c4.elements)
    bad = np.array([IDENTITY_ELEMENT.code(), GspElement(np.diag([1, 2, 2, 1])).code()])
    with pytest.raises(ValueError):
        subgroup_from_codes(bad)  # not closed: missing the square


def test_lattice_roundtrip(tmp_path, named_subgroups):
    full_gens = certified_full_group_generators()
    kl = named_subgroups["5.156.1"]
    kl_dist = local_distribution(kl)
    records = [
        LatticeRecord(
            "5.1.1", 1, GROUP_ORDER, full_gens,
            LocalDistribution({ID_PAIR: Fraction(1)}), False, False,
        ),
        LatticeRecord("5.156.1", 156, kl.order, kl.generators, kl_dist, False, False),
    ]
    path = tmp_path / "two.lat"
    save_lattice(path, records)
    lat = load_lattice(path)
    assert lat.labels() == ["5.1.1", "5.156.1"]
    a, b = lat.records
    assert (a.index, a.order) == (1, GROUP_ORDER)
    assert b.distribution == kl_dist
    assert [g.code() for g in b.generators] == [g.code() for g in kl.generators]
    # bit-exact round trip
    path2 = tmp_path / "again.lat"
    save_lattice(path2, lat.records)
    assert path.read_bytes() == path2.read_bytes()
    assert lat.bucket_of("5.156.1") == ["5.156.1"]


def test_lattice_parse_errors(tmp_path):
    path = tmp_path / "bad.lat"
    head = "GSP4LAT 1 37440000\n"
    neg_code = "".join(str(x) for x in (-np.eye(4, dtype=np.int64) % 5).reshape(16))
    good = f"5.18720000.1|18720000|2|{neg_code}|11111:4:1;14141:0:1|0|1\n"

    path.write_text("NOPE 1 37440000\n")
    with pytest.raises(LatticeFormatError, match="line 1"):
        load_lattice(path)
    path.write_text(head + "5.2.1|2|18720000\n")
    with pytest.raises(LatticeFormatError, match="line 2"):
        load_lattice(path)
    path.write_text(head + good.replace("|2|", "|3|", 1).replace(".1|", ".1x|", 1))
    with pytest.raises(LatticeFormatError):
        load_lattice(path)
    # counts not summing to the order
    path.write_text(head + good.replace(":0:1", ":0:2"))
    with pytest.raises(LatticeFormatError, match="sum"):
        load_lattice(path)
    # non-monic charpoly
    path.write_text(head + good.replace("14141", "24141"))
    with pytest.raises(LatticeFormatError, match="monic"):
        load_lattice(path)
    path.write_text(head + good)
    lat = load_lattice(path)
    assert lat.records[0].order == 2
    with pytest.raises(FileNotFoundError):
        load_lattice(tmp_path / "missing.lat")


SHIPPED = default_lattice_path()


@pytest.mark.skipif(not SHIPPED.exists(), reason="lattice file not built yet")
def test_verify_lattice_basic_and_tamper():
    lat = load_lattice(SHIPPED)
    report = verify_lattice(lat, effort="basic")
    assert report["records"] == 1125
    assert report["max_bucket"] <= 8
    victim = lat.records[500]
    tampered = LatticeRecord(
        victim.label, victim.index, victim.order + 1, victim.generators,
        victim.distribution, victim.flag_eig1, victim.flag_pm,
    )
    broken = SubgroupLattice([tampered if r is victim else r for r in lat.records])
    with pytest.raises(LatticeVerificationError, match=victim.label.replace(".", r"\.")):
        verify_lattice(broken, effort="basic")
