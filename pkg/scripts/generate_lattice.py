#!/usr/bin/env python3
"""Generate the admissible-subgroup lattice file for GSp4(F5).

Every similitude-surjective subgroup H decomposes as U u Ut u Ut^2 u Ut^3
where U = H n Sp4(F5) and t is any element of similitude 2.  The
enumeration therefore runs in three stages:

1. containers: representatives of the maximal similitude-surjective
   subgroup classes (two parabolics, the plane-pair stabilizer, the
   quadratic-extension normalizer, the Lagrangian-pair stabilizer, the
   normalizer of the Galois-paired isotropic plane stabilizer, the 2.A6
   normalizer, the extraspecial 2-group normalizer, plus a small safety
   container).  Every proper admissible class has a conjugate inside one
   of these: reducibles fall to the parabolics, imprimitives to the two
   plane-pair groups, extension-field structures to the remaining
   geometric containers, and the two exceptional classes normalize their
   own perfect residuum.
2. per container M: all subgroup classes U of M n Sp4 by prime-index
   cyclic extension from perfect seeds, then all similitude-full
   extensions H = <U, t> with t in N_M(U), lambda(t) = 2, t^4 in U.
   Conjugacy inside M is decided exactly by orbits of element-set hashes
   (orbit size times subgroup order never exceeds |M|).
3. globally: candidates from all containers are merged up to
   GSp4-conjugacy (invariant fingerprints, then exact conjugator search
   via linear transporter equations), labels are assigned (construction-
   pinned names first, canonical distribution order for the rest), and
   the file is written and re-verified.

--selftest runs the same engine on an embedded GL2(F5) (A mapped to
(A, diag(det A, 1)), so det plays the similitude role) and compares
against brute-force subgroup enumeration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from itertools import product
from math import comb
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from galimage import _f5linalg as f5
from galimage import gspfour as gf

T0 = time.time()
WORK = Path(__file__).resolve().parent / "_lattice_work"
I4 = np.eye(4, dtype=np.int64)
I2 = np.eye(2, dtype=np.int64)


def log(msg: str) -> None:
    print(f"[{time.time() - T0:8.1f}s] {msg}", flush=True)


# ---------------------------------------------------------------------------
# Batched linear helpers.
# ---------------------------------------------------------------------------


def gsp_inv_batch(mats: np.ndarray) -> np.ndarray:
    """Inverses of GSp4 elements: g^-1 = lambda^-1 A^-1 g^T A."""
    lam = f5.similitude_batch(mats).astype(np.int64)
    lam_inv = np.array([0, 1, 3, 2, 4], dtype=np.int64)[lam]
    a = f5.FORM.astype(np.int64)
    ainv = (-a) % 5  # the form squares to -I
    out = ainv @ (mats.transpose(0, 2, 1).astype(np.int64) @ a % 5) % 5
    return (out * lam_inv[:, None, None] % 5).astype(np.uint8)


def member_mask(sorted_codes: np.ndarray, query: np.ndarray) -> np.ndarray:
    if sorted_codes.size == 0:
        return np.zeros(query.shape, dtype=bool)
    idx = np.searchsorted(sorted_codes, query)
    idx = np.minimum(idx, sorted_codes.size - 1)
    return sorted_codes[idx] == query


def pow_batch(mats: np.ndarray, n: int) -> np.ndarray:
    result = np.broadcast_to(f5.IDENTITY, mats.shape).copy()
    base = mats
    while n:
        if n & 1:
            result = f5.matmul(result, base)
        n >>= 1
        if n:
            base = f5.matmul(base, base)
    return result


def key_hash(codes: np.ndarray) -> bytes:
    return hashlib.blake2b(np.ascontiguousarray(codes).tobytes(), digest_size=16).digest()


def conjugate_set(codes: np.ndarray, g: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    mats = f5.unpack(codes)
    return np.sort(f5.pack(f5.matmul(f5.matmul(g[None], mats), g_inv[None])))


def transporter_basis(pairs: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Basis of {X : X a_i = b_i X for all i} as (k, n, n)."""
    n = pairs[0][0].shape[0]
    eye = np.eye(n, dtype=np.int64)
    blocks = []
    for a, b in pairs:
        a64 = a.astype(np.int64) % 5
        b64 = b.astype(np.int64) % 5
        blocks.append((np.kron(eye, a64.T) - np.kron(b64, eye)) % 5)
    return f5.nullspace(np.concatenate(blocks, axis=0)).reshape(-1, n, n)


def symplectic_change_of_basis(B: np.ndarray) -> np.ndarray:
    """T with T^T B T equal to the standard form, for nondegenerate alternating B."""
    B = B.astype(np.int64) % 5
    vecs = [v.copy() for v in I4]
    pairs = []
    while vecs:
        e = vecs.pop(0)
        fi = next(i for i, w in enumerate(vecs) if (e @ B @ w) % 5)
        f = vecs.pop(fi)
        f = f * pow(int(e @ B @ f % 5), -1, 5) % 5
        vecs = [(w - ((e @ B @ w) % 5) * f + ((f @ B @ w) % 5) * e) % 5 for w in vecs]
        pairs.append((e, f))
    T = np.stack([pairs[0][0], pairs[1][0], pairs[0][1], pairs[1][1]], axis=1) % 5
    assert np.array_equal(T.T @ B @ T % 5, f5.FORM.astype(np.int64) % 5)
    return T


# ---------------------------------------------------------------------------
# Group sets.
# ---------------------------------------------------------------------------


class GroupSet:
    """A subgroup as a sorted code array plus a small generating set."""

    __slots__ = ("codes", "gen_codes", "name")

    def __init__(self, codes: np.ndarray, gen_codes: list[int], name: str = ""):
        self.codes = np.sort(np.asarray(codes, dtype=np.int64))
        self.gen_codes = [int(g) for g in gen_codes]
        self.name = name

    @property
    def order(self) -> int:
        return int(self.codes.size)

    def gen_mats(self) -> np.ndarray:
        return f5.unpack(np.array(self.gen_codes, dtype=np.int64))

    def mats(self) -> np.ndarray:
        return f5.unpack(self.codes)


def group_from_gens(gen_mats: list[np.ndarray], name: str = "",
                    cap: int | None = None) -> GroupSet:
    stacked = np.stack([np.asarray(g, dtype=np.int64) % 5 for g in gen_mats]).astype(np.uint8)
    codes = f5.closure(stacked, order_cap=cap)
    return GroupSet(codes, [int(c) for c in f5.pack(stacked)], name)


def group_from_codes(codes: np.ndarray, name: str = "") -> GroupSet:
    sub = gf.subgroup_from_codes(np.asarray(codes, dtype=np.int64))
    return GroupSet(sub.elements, [g.code() for g in sub.generators], name)


def normalizer_within(M: GroupSet, U_codes: np.ndarray, U_gen_mats: np.ndarray,
                      M_mats: np.ndarray, M_invs: np.ndarray) -> np.ndarray:
    """Codes of {m in M : m U m^-1 = U}."""
    mask = np.ones(M.codes.size, dtype=bool)
    for g in U_gen_mats:
        conj = f5.matmul(f5.matmul(M_mats, np.broadcast_to(g, M_mats.shape)), M_invs)
        mask &= member_mask(U_codes, f5.pack(conj))
        if not mask.any():
            break
    return M.codes[mask]


def derived_subgroup_codes(G: GroupSet) -> np.ndarray:
    gens = G.gen_mats()
    invs = gsp_inv_batch(gens)
    seeds = []
    for i in range(len(gens)):
        for j in range(len(gens)):
            if i != j:
                c = f5.matmul(f5.matmul(gens[i][None], gens[j][None]),
                              f5.matmul(invs[i][None], invs[j][None]))
                seeds.append(c[0])
    if not seeds:
        return f5.pack(f5.IDENTITY[None])
    current = f5.closure(np.stack(seeds))
    while True:
        mats = f5.unpack(current)
        extra = [current]
        for g, gi in zip(gens, invs):
            extra.append(f5.pack(f5.matmul(f5.matmul(g[None], mats), gi[None])))
        merged = np.unique(np.concatenate(extra))
        if merged.size == current.size:
            return current
        current = f5.closure(f5.unpack(merged))


def perfect_residuum(G: GroupSet) -> GroupSet:
    cur = G
    while True:
        der = derived_subgroup_codes(cur)
        if der.size == cur.order:
            return cur
        cur = group_from_codes(der)


# ---------------------------------------------------------------------------
# Exact subgroup-conjugacy bookkeeping inside a container M: every class
# rep's full orbit of element-set hashes is indexed once.
# ---------------------------------------------------------------------------


class OrbitIndex:
    def __init__(self, M_gen_mats: np.ndarray):
        self.gens = M_gen_mats
        self.invs = gsp_inv_batch(M_gen_mats)
        self.lookup: dict[bytes, int] = {}
        self.reps: list[np.ndarray] = []

    def find(self, codes: np.ndarray) -> int | None:
        return self.lookup.get(key_hash(codes))

    def insert(self, codes: np.ndarray) -> int:
        cid = len(self.reps)
        self.reps.append(codes)
        self.lookup[key_hash(codes)] = cid
        frontier = [codes]
        while frontier:
            stacked = np.concatenate(frontier)
            sizes = [c.size for c in frontier]
            nxt = []
            for g, gi in zip(self.gens, self.invs):
                conj = f5.pack(f5.matmul(f5.matmul(g[None], f5.unpack(stacked)), gi[None]))
                pos = 0
                for s in sizes:
                    piece = np.sort(conj[pos:pos + s])
                    pos += s
                    h = key_hash(piece)
                    if h not in self.lookup:
                        self.lookup[h] = cid
                        nxt.append(piece)
            frontier = nxt
        return cid


# ---------------------------------------------------------------------------
# Explicit constructions.
# ---------------------------------------------------------------------------

SL2_GENS = [np.array([[0, 4], [1, 0]]), np.array([[1, 1], [0, 1]])]
GL2_GENS = SL2_GENS + [np.array([[2, 0], [0, 1]])]


def embed_pair(a, b) -> np.ndarray:
    return gf._embed_pair(a, b).astype(np.int64)


def det2(a) -> int:
    a = np.asarray(a, dtype=np.int64)
    return int((a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) % 5)


def inv2(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    adj = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=np.int64)
    return adj * pow(det2(a), -1, 5) % 5


def det_matched_gens(a_gens: list[np.ndarray]) -> list[np.ndarray]:
    """Generators of the det-matched pair group over <a_gens>."""
    gens = [embed_pair(I2, s) for s in SL2_GENS]
    for a in a_gens:
        gens.append(embed_pair(a, np.diag([det2(a), 1])))
    return gens


def lagrangian_block(a: np.ndarray) -> np.ndarray:
    """diag(A, A^-T) preserving the Lagrangian pair <e1,e2>, <f1,f2>."""
    m = np.zeros((4, 4), dtype=np.int64)
    m[:2, :2] = np.asarray(a, dtype=np.int64) % 5
    m[2:, 2:] = inv2(a).T
    return m


def klingen_container() -> GroupSet:
    sub = gf._klingen()
    return GroupSet(sub.elements, [g.code() for g in sub.generators], "klingen")


def siegel_container() -> GroupSet:
    gens = [lagrangian_block(a) for a in GL2_GENS]
    gens.append(np.diag([1, 1, 2, 2]))
    for b in (np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 1]]),
              np.array([[0, 1], [1, 0]])):
        m = I4.copy()
        m[:2, 2:] = b
        gens.append(m)
    G = group_from_gens(gens, "siegel")
    assert G.order == 240_000, G.order
    return G


def pair_stabilizer_container() -> GroupSet:
    gens = det_matched_gens([np.asarray(g, dtype=np.int64) for g in GL2_GENS])
    swap = np.zeros((4, 4), dtype=np.int64)
    swap[0, 1] = swap[1, 0] = swap[2, 3] = swap[3, 2] = 1
    gens.append(swap)
    G = group_from_gens(gens, "plane_pair")
    assert G.order == 115_200, G.order
    return G


F25_SEED = np.array([[2, 2, 0, 0], [1, 2, 0, 0], [0, 0, 2, 1], [0, 0, 2, 2]],
                    dtype=np.uint8)


def f25_linear_group() -> GroupSet:
    sub = gf.build_named_subgroup("5.600.2")
    return GroupSet(sub.elements, [g.code() for g in sub.generators], "f25_linear")


def field_ext_container(f25: GroupSet) -> GroupSet:
    # adjoin an element that conjugates multiplication by z to
    # multiplication by the conjugate root -1-z
    target = ((4 * I4 + 4 * F25_SEED.astype(np.int64)) % 5).astype(np.uint8)
    basis = transporter_basis([(F25_SEED, target)])
    cands = f5.span_elements(basis)
    keep = f5.is_gsp_batch(cands)
    assert keep.any()
    frob = cands[keep][0].astype(np.int64)
    gens = [m.astype(np.int64) for m in f25.gen_mats()] + [frob]
    G = group_from_gens(gens, "field_ext")
    assert G.order == 124_800, G.order
    return G


def lagrangian_pair_container() -> GroupSet:
    gens = [lagrangian_block(a) for a in GL2_GENS]
    gens.append(np.diag([1, 1, 2, 2]))
    gens.append(f5.FORM.astype(np.int64) % 5)  # swaps the two Lagrangians
    G = group_from_gens(gens, "lagrangian_pair")
    assert G.order == 3_840, G.order
    return G


def isotropic_pair_group() -> GroupSet:
    """Joint stabilizer of two conjugate isotropic planes over F25.

    J below acts with eigenvalue w (w^2 = w + 3) on the isotropic plane
    spanned by e1 + w*e2 and f2 - w*f1, and with the conjugate
    eigenvalue on the conjugate plane, so its centralizer inside the
    similitude group preserves each plane individually.  The pair is
    Galois-stable but neither member is rational.
    """
    J = np.zeros((4, 4), dtype=np.int64)
    J[:2, :2] = np.array([[0, 1], [3, 1]])
    J[2:, 2:] = np.array([[1, 2], [4, 0]])
    com = f5.solve_commutant([J])
    cands = f5.span_elements(com)
    mats = cands[f5.is_gsp_batch(cands)]
    G = group_from_codes(f5.pack(mats), "iso_pair")
    assert G.order == 2_880, G.order
    return G


def sym3_matrix(g: np.ndarray) -> np.ndarray:
    """Action of g on binary cubics, basis x^3, x^2 y, x y^2, y^3."""
    a, b, c, d = (int(x) % 5 for x in np.asarray(g).reshape(4))
    cols = []
    for k in range(4):
        coeffs = [0, 0, 0, 0]
        for i in range(3 - k + 1):
            for j in range(k + 1):
                term = comb(3 - k, i) * comb(k, j)
                term = term * pow(a, 3 - k - i, 5) * pow(c, i, 5) % 5
                term = term * pow(b, k - j, 5) * pow(d, j, 5) % 5
                coeffs[i + j] = (coeffs[i + j] + term) % 5
        cols.append(coeffs)
    return np.array(cols, dtype=np.int64).T % 5


def sym3_copy() -> GroupSet:
    """An irreducibly acting SL2(5), aligned with the standard form."""
    raw = [sym3_matrix(g) for g in SL2_GENS]
    rows = [(np.kron(m.T, m.T) - np.eye(16, dtype=np.int64)) % 5 for m in raw]
    forms = f5.nullspace(np.concatenate(rows, axis=0).astype(np.uint8))
    B = None
    for v in forms:
        cand = v.astype(np.int64).reshape(4, 4)
        if np.array_equal(cand.T % 5, (-cand) % 5) and f5.nullspace(cand.astype(np.uint8)).shape[0] == 0:
            B = cand
            break
    assert B is not None, "no invariant alternating form"
    T = symplectic_change_of_basis(B)
    Tinv = f5.mat_inv(T.astype(np.uint8)).astype(np.int64)
    gens = [Tinv @ m @ T % 5 for m in raw]
    G = group_from_gens(gens, "sym3")
    assert G.order == 120, G.order
    assert f5.is_gsp_batch(G.gen_mats()).all()
    return G


def extraspecial_group() -> GroupSet:
    i2m = np.array([[0, 4], [1, 0]])
    j2m = np.array([[2, 0], [0, 3]])
    rot = np.array([[0, 4], [1, 0]])
    refl = np.array([[1, 0], [0, 4]])
    gens = [np.kron(i2m, I2), np.kron(j2m, I2), np.kron(I2, rot), np.kron(I2, refl)]
    E = group_from_gens(gens, "E32")
    assert E.order == 32, E.order
    return E


def find_2a6(sym3: GroupSet) -> GroupSet:
    """The 720-element perfect overgroup of the irreducible SL2(5).

    That SL2(5) copy is maximal in it, so adjoining any outside element
    of the right centralizer generates the whole group; the centralizer
    of an order-3 element is small enough to scan exhaustively.
    """
    mats = sym3.mats()
    p3 = pow_batch(mats, 3)
    isid = (mats == f5.IDENTITY).all(axis=(1, 2))
    ord3 = (p3 == f5.IDENTITY).all(axis=(1, 2)) & ~isid
    u = mats[ord3][0]
    com = f5.solve_commutant([u.astype(np.int64)])
    cands = f5.span_elements(com)
    cands = cands[f5.is_gsp_batch(cands)]
    cands = cands[f5.similitude_batch(cands) == 1]
    outside = ~member_mask(sym3.codes, f5.pack(cands))
    base = sym3.gen_mats()
    for t in cands[outside]:
        try:
            codes = f5.closure(np.concatenate([base, t[None]]), order_cap=1_440)
        except RuntimeError:
            continue
        if codes.size == 720:
            G = GroupSet(codes,
                         [int(c) for c in f5.pack(base)] + [int(f5.pack(t[None])[0])],
                         "two_a6")
            if perfect_residuum(G).order == 720:
                return G
    raise RuntimeError("no 720-element perfect overgroup found")


def normalizer_in_gsp(U: GroupSet, name: str) -> GroupSet:
    """N_GSp4(U) by orbit-stabilizer with Schreier generators."""
    gens = gf.certified_full_group_generators()
    gen_mats = np.stack([g.mat for g in gens])
    gen_invs = gsp_inv_batch(gen_mats)
    start = np.sort(U.codes)
    lookup = {key_hash(start): 0}
    reps = [start]
    words: list[tuple[int, int]] = [(-1, -1)]
    schreier: list[tuple[int, int, int]] = []
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            cur = reps[idx]
            for gi in range(gen_mats.shape[0]):
                img = conjugate_set(cur, gen_mats[gi], gen_invs[gi])
                h = key_hash(img)
                if h in lookup:
                    schreier.append((idx, gi, lookup[h]))
                else:
                    lookup[h] = len(reps)
                    nxt.append(len(reps))
                    words.append((idx, gi))
                    reps.append(img)
        frontier = nxt
    orbit = len(reps)
    assert gf.GROUP_ORDER % orbit == 0
    n_order = gf.GROUP_ORDER // orbit

    def word_mat(idx: int) -> np.ndarray:
        path = []
        while idx != 0:
            parent, gi = words[idx]
            path.append(gi)
            idx = parent
        m = f5.IDENTITY.copy()
        for gi in reversed(path):
            m = f5.matmul(gen_mats[gi][None], m[None])[0]
        return m

    rng = np.random.default_rng(11)
    order_list = rng.permutation(len(schreier))
    collected = [m for m in f5.unpack(np.array(U.gen_codes, dtype=np.int64))]
    for pos in range(0, len(order_list), 4):
        for oi in order_list[pos:pos + 4]:
            a, gi, b = schreier[oi]
            wa = word_mat(a)
            wb = word_mat(b)
            # stabilizer element w_b^-1 g w_a
            cand = f5.matmul(gsp_inv_batch(wb[None]),
                             f5.matmul(gen_mats[gi][None], wa[None]))[0]
            collected.append(cand)
        codes = f5.closure(np.stack(collected), order_cap=n_order)
        if codes.size == n_order:
            G = group_from_codes(codes, name)
            log(f"  {name}: order {n_order} (orbit {orbit})")
            return G
    raise RuntimeError(f"stabilizer generation for {name} stalled")


# ---------------------------------------------------------------------------
# Stage 2: subgroup classes of M n Sp4, then similitude-full extensions.
# ---------------------------------------------------------------------------

PRIMES = (2, 3, 5, 13)


def random_gsp_pool(seed: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pool = np.stack([g.mat for g in gf.standard_generators()])
    while pool.shape[0] < size:
        i = rng.integers(0, pool.shape[0], size=pool.shape[0])
        j = rng.integers(0, pool.shape[0], size=pool.shape[0])
        pool = np.concatenate([pool, f5.matmul(pool[i], pool[j])])
    pool = pool[:size]
    for _ in range(6):  # extra mixing rounds so early entries are long words too
        i = rng.permutation(size)
        j = rng.permutation(size)
        pool = f5.matmul(pool[i], pool[j])
    return pool


def seed_copies_in(M: GroupSet, P: GroupSet, pool: np.ndarray,
                   pool_invs: np.ndarray) -> list[np.ndarray]:
    """Element sets of a few conjugates of P lying inside M."""
    if M.order % P.order:
        return []
    ok = np.ones(pool.shape[0], dtype=bool)
    for g in P.gen_mats():
        conj = f5.pack(f5.matmul(f5.matmul(pool, np.broadcast_to(g, pool.shape)),
                                 pool_invs))
        ok &= member_mask(M.codes, conj)
        if not ok.any():
            return []
    hits: list[np.ndarray] = []
    seen: set[bytes] = set()
    for idx in np.where(ok)[0][:400]:
        codes = conjugate_set(P.codes, pool[idx], pool_invs[idx])
        h = key_hash(codes)
        if h not in seen:
            seen.add(h)
            hits.append(codes)
    return hits


def enumerate_sp_classes(M: GroupSet, perfect_pool: list[GroupSet],
                         conj_pool: tuple[np.ndarray, np.ndarray] | None = None,
                         ) -> list[dict]:
    """All subgroup classes of the similitude-1 part of M, up to M-conjugacy."""
    M_mats = M.mats()
    M_invs = gsp_inv_batch(M_mats)
    lam = f5.similitude_batch(M_mats).astype(np.int64)
    M0_codes = np.sort(M.codes[lam == 1])
    index = OrbitIndex(M.gen_mats())
    nodes: list[dict] = []

    def register(codes: np.ndarray) -> None:
        codes = np.sort(codes)
        if index.find(codes) is None:
            index.insert(codes)
            nodes.append({"codes": codes})

    register(f5.pack(f5.IDENTITY[None]))
    for P in perfect_pool:
        if P.order > M0_codes.size:
            continue
        if member_mask(M0_codes, P.codes).all():
            register(P.codes)
        if conj_pool is not None:
            for copy in seed_copies_in(M, P, *conj_pool):
                if member_mask(M0_codes, copy).all():
                    register(copy)

    qi = 0
    while qi < len(nodes):
        node = nodes[qi]
        qi += 1
        U_codes = node["codes"]
        U_group = group_from_codes(U_codes)
        node["gen_codes"] = U_group.gen_codes
        U_gen_mats = U_group.gen_mats()
        N_codes = normalizer_within(M, U_codes, U_gen_mats, M_mats, M_invs)
        node["normalizer"] = np.sort(N_codes)
        N_sp = N_codes[member_mask(M0_codes, N_codes)]
        if N_sp.size == U_codes.size:
            continue
        n_mats = f5.unpack(N_sp)
        in_u = member_mask(U_codes, N_sp)
        U_mats = f5.unpack(U_codes)
        for q in PRIMES:
            if (N_sp.size // U_codes.size) % q:
                continue
            pq = f5.pack(pow_batch(n_mats, q))
            cands = N_sp[member_mask(U_codes, pq) & ~in_u]
            while cands.size:
                x = f5.unpack(cands[:1])[0]
                powers = [x]
                for _ in range(q - 2):
                    powers.append(f5.matmul(powers[-1][None], x[None])[0])
                pieces = [U_codes]
                for p in powers:
                    pieces.append(f5.pack(f5.matmul(U_mats, p[None])))
                child = np.sort(np.concatenate(pieces))
                assert child.size == U_codes.size * q
                register(child)
                coset = np.sort(f5.pack(f5.matmul(U_mats, x[None])))
                cands = cands[~member_mask(coset, cands)]
        if qi % 250 == 0:
            log(f"  {M.name}: {qi}/{len(nodes)} nodes processed")
    log(f"  {M.name}: {len(nodes)} classes in the similitude-1 part")
    return nodes


def lambda_full_extensions(M: GroupSet, nodes: list[dict]) -> list[np.ndarray]:
    """Admissible H = <U, t> with lambda(t) = 2, t^4 in U, up to M-conjugacy."""
    index = OrbitIndex(M.gen_mats())
    out: list[np.ndarray] = []
    for node in nodes:
        U_codes = node["codes"]
        N_codes = node["normalizer"]
        n_mats = f5.unpack(N_codes)
        t_pool = N_codes[f5.similitude_batch(n_mats) == 2]
        if not t_pool.size:
            continue
        t_mats = f5.unpack(t_pool)
        t_pool = t_pool[member_mask(U_codes, f5.pack(pow_batch(t_mats, 4)))]
        U_mats = f5.unpack(U_codes)
        while t_pool.size:
            t = f5.unpack(t_pool[:1])[0]
            t2 = f5.matmul(t[None], t[None])[0]
            t3 = f5.matmul(t2[None], t[None])[0]
            pieces = [U_codes] + [f5.pack(f5.matmul(U_mats, p[None])) for p in (t, t2, t3)]
            H = np.sort(np.concatenate(pieces))
            assert H.size == U_codes.size * 4
            if index.find(H) is None:
                index.insert(H)
                if admissible_codes(H):
                    out.append(H)
            coset = np.sort(f5.pack(f5.matmul(U_mats, t[None])))
            t_pool = t_pool[~member_mask(coset, t_pool)]
    log(f"  {M.name}: {len(out)} admissible extension classes")
    return out


def admissible_codes(codes: np.ndarray) -> bool:
    mats = f5.unpack(codes)
    lam = f5.similitude_batch(mats)
    sq = f5.matmul(mats, mats)
    invol = (sq == f5.IDENTITY).all(axis=(1, 2)) & ~(mats == f5.IDENTITY).all(axis=(1, 2))
    return bool(np.any(invol & (lam == 4)))


# ---------------------------------------------------------------------------
# Stage 3: global merge up to GSp4-conjugacy.
# ---------------------------------------------------------------------------


def element_invariants(mats: np.ndarray) -> np.ndarray:
    cps, dims = f5.invariant_pairs_batch(mats)
    pair = f5.pair_codes(cps, dims).astype(np.int64)
    lam = f5.similitude_batch(mats).astype(np.int64)
    return pair * 5 + lam


def element_orders(mats: np.ndarray, cap: int = 1600) -> np.ndarray:
    """Multiplicative order of every matrix, vectorized over the batch."""
    n = mats.shape[0]
    out = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    cur = mats
    for t in range(1, cap + 1):
        is_id = (cur == f5.IDENTITY).all(axis=(1, 2))
        out[active[is_id]] = t
        if is_id.all():
            return out
        active = active[~is_id]
        cur = f5.matmul(cur[~is_id], mats[active])
    raise AssertionError("element order exceeded the cap")


def fingerprint(codes: np.ndarray) -> bytes:
    """Conjugation-invariant hash of a subgroup's element set.

    Layers: invariant-pair histogram, element-order histogram, and (for
    sets of at most 600 elements) the invariant histogram over all
    pairwise products.  Conjugate sets always collide; the extra layers
    only separate non-conjugate sets the plain histogram cannot, which
    keeps them away from the expensive transporter search.
    """
    mats = f5.unpack(codes)
    h = hashlib.blake2b(digest_size=16)
    h.update(np.bincount(element_invariants(mats), minlength=15_625).tobytes())
    h.update(codes.size.to_bytes(8, "little"))
    h.update(np.bincount(element_orders(mats), minlength=1601).tobytes())
    if codes.size <= 600:
        n = codes.size
        prods = f5.matmul(np.repeat(mats, n, axis=0), np.tile(mats, (n, 1, 1)))
        h.update(np.bincount(element_invariants(prods), minlength=15_625).tobytes())
    return h.digest()


def conjugate_in_gsp(H1: np.ndarray, H2: np.ndarray) -> np.ndarray | None:
    """A GSp4 element conjugating set H1 onto set H2, or None."""
    if H1.size != H2.size:
        return None
    mats1 = f5.unpack(H1)
    mats2 = f5.unpack(H2)
    inv1 = element_invariants(mats1)
    inv2 = element_invariants(mats2)
    if not np.array_equal(np.sort(inv1), np.sort(inv2)):
        return None
    counts: dict[int, int] = {}
    for v in inv1:
        counts[int(v)] = counts.get(int(v), 0) + 1
    order_idx = np.argsort(np.array([counts[int(v)] for v in inv1]), kind="stable")
    gens_idx: list[int] = []
    span = f5.pack(f5.IDENTITY[None])
    for idx in order_idx:
        if span.size == H1.size:
            break
        if member_mask(span, H1[idx:idx + 1])[0]:
            continue
        gens_idx.append(int(idx))
        span = f5.closure(f5.unpack(H1[np.array(gens_idx, dtype=np.int64)]))
    assert span.size == H1.size
    if len(gens_idx) == 1 and H1.size > 2:
        # a second generator cuts the transporter space down to size
        for idx in order_idx:
            i = int(idx)
            if i not in gens_idx and not np.array_equal(mats1[i], f5.IDENTITY):
                gens_idx.append(i)
                break
    cand_lists = [np.where(inv2 == inv1[i])[0] for i in gens_idx]
    a_mats = [mats1[i] for i in gens_idx]

    def try_assignment(chosen: list[int]) -> np.ndarray | None:
        basis = transporter_basis([(a_mats[k], mats2[chosen[k]])
                                   for k in range(len(chosen))])
        if basis.shape[0] == 0 or basis.shape[0] > 8:
            return None
        cands = f5.span_elements(basis)
        cands = cands[f5.is_gsp_batch(cands)]
        for X in cands:
            Xi = gsp_inv_batch(X[None])[0]
            if np.array_equal(conjugate_set(H1, X, Xi), H2):
                return X
        return None

    k = len(gens_idx)
    if k == 1:
        for c0 in cand_lists[0]:
            res = try_assignment([int(c0)])
            if res is not None:
                return res
        return None
    want01 = int(element_invariants(f5.matmul(a_mats[0][None], a_mats[1][None]))[0])
    for c0 in cand_lists[0]:
        prods = f5.matmul(np.broadcast_to(mats2[c0], (cand_lists[1].size, 4, 4)),
                          mats2[cand_lists[1]])
        pmask = element_invariants(prods) == want01
        for c1 in cand_lists[1][pmask]:
            if k == 2:
                res = try_assignment([int(c0), int(c1)])
                if res is not None:
                    return res
                continue
            for rest in product(*[cand_lists[i] for i in range(2, k)]):
                res = try_assignment([int(c0), int(c1)] + [int(r) for r in rest])
                if res is not None:
                    return res
    return None


def global_merge(cands: list[dict]) -> list[dict]:
    log(f"global merge over {len(cands)} candidates")
    buckets: dict[tuple[int, bytes], list[int]] = {}
    for i, c in enumerate(cands):
        c["fp"] = fingerprint(c["codes"])
        buckets.setdefault((c["codes"].size, c["fp"]), []).append(i)
        if (i + 1) % 500 == 0:
            log(f"  fingerprinted {i + 1}/{len(cands)}")
    widths = sorted((len(v) for v in buckets.values()), reverse=True)
    log(f"  {len(buckets)} fingerprint buckets, widest {widths[:5]}")
    keep: list[dict] = []
    tested = 0
    done = 0
    t_beat = time.time()
    for key in sorted(buckets):
        reps: list[int] = []
        for i in buckets[key]:
            matched = False
            for r in reps:
                if np.array_equal(cands[i]["codes"], cands[r]["codes"]):
                    matched = True
                    break
                tested += 1
                if conjugate_in_gsp(cands[r]["codes"], cands[i]["codes"]) is not None:
                    matched = True
                    break
            if not matched:
                reps.append(i)
            done += 1
            if time.time() - t_beat > 60:
                log(f"  merged {done}/{len(cands)} candidates"
                    f" ({tested} conjugacy tests, about {len(keep) + len(reps)} classes)")
                t_beat = time.time()
        keep.extend(cands[i] for i in reps)
    log(f"global merge: {len(keep)} classes ({tested} exact conjugacy tests)")
    return keep


# ---------------------------------------------------------------------------
# Pinned labels.
# ---------------------------------------------------------------------------


def split_cartan_normalizer_gens() -> list[np.ndarray]:
    return [np.diag([2, 1]), np.diag([1, 2]), np.array([[0, 1], [1, 0]])]


def nonsplit_cartan_normalizer_gens() -> list[np.ndarray]:
    zeta = np.array([[0, 3], [1, 1]], dtype=np.int64)  # root of x^2 - x - 3
    zeta5 = np.linalg.matrix_power(zeta, 5) % 5
    basis = transporter_basis([(zeta.astype(np.uint8), zeta5.astype(np.uint8))])
    frob = next(v.astype(np.int64) for v in basis if det2(v))
    return [zeta, frob]


def order16_mixed_gens() -> list[np.ndarray]:
    # diagonals of square determinant plus antidiagonals of nonsquare one
    return [np.diag([2, 3]), np.array([[0, 2], [1, 0]])]


def _gl2_closure(gens: list[np.ndarray], cap: int) -> list[np.ndarray] | None:
    seen = {np.eye(2, dtype=np.int64).tobytes(): np.eye(2, dtype=np.int64)}
    frontier = list(seen.values())
    while frontier:
        nxt = []
        for m in frontier:
            for g in gens:
                p = m @ g % 5
                k = p.tobytes()
                if k not in seen:
                    if len(seen) >= cap:
                        return None
                    seen[k] = p
                    nxt.append(p)
        frontier = nxt
    return list(seen.values())


def exceptional_gl2_gens() -> list[np.ndarray]:
    """The order-96 maximal subgroup of GL2(F5) over the split torus normalizer."""
    base = split_cartan_normalizer_gens()
    for entries in product(range(5), repeat=4):
        g = np.array(entries, dtype=np.int64).reshape(2, 2)
        if det2(g) == 0:
            continue
        grp = _gl2_closure(base + [g], cap=97)
        if grp is not None and len(grp) == 96:
            return base + [g]
    raise RuntimeError("no order-96 overgroup found")


def det_matched_codes(a_gens: list[np.ndarray], expected: int) -> np.ndarray:
    G = group_from_gens(det_matched_gens(a_gens), "det_matched", cap=2 * expected)
    assert G.order == expected, (G.order, expected)
    return G.codes


def build_pins(containers: dict[str, GroupSet]) -> dict[str, np.ndarray]:
    pins: dict[str, np.ndarray] = {}
    for name in ("5.156.1", "5.312.1", "5.624.1", "5.624.3", "5.650.1",
                 "5.3900.1", "5.624.8", "5.600.2"):
        pins[name] = np.sort(gf.build_named_subgroup(name).elements)
    pins["5.156.2"] = containers["siegel"].codes
    pins["5.325.1"] = containers["plane_pair"].codes
    pins["5.300.1"] = containers["field_ext"].codes
    pins["5.9750.1"] = containers["lagrangian_pair"].codes
    pins["5.6500.1"] = containers["n_iso_pair"].codes
    pins["5.13000.5"] = containers["_iso_pair"].codes
    pins["5.3250.1"] = det_matched_codes(exceptional_gl2_gens(), 11_520)
    K = gf._klingen()
    kcodes = np.asarray(K.elements, dtype=np.int64)
    kmats = f5.unpack(kcodes)
    klam = f5.similitude_batch(kmats).astype(np.int64)
    m00 = kmats[:, 0, 0].astype(np.int64)
    m22 = kmats[:, 2, 2].astype(np.int64)
    pins["5.312.2"] = np.sort(kcodes[(m22 == 1) | (m22 == 4)])
    pins["5.624.2"] = np.sort(kcodes[m00 == klam * klam % 5])
    pins["5.624.4"] = np.sort(kcodes[m00 == klam * klam % 5 * klam % 5])
    pins["5.15600.3"] = np.intersect1d(pins["5.624.1"], pins["5.650.1"])
    pins["5.15600.5"] = np.intersect1d(pins["5.624.3"], pins["5.650.1"])
    pins["5.9750.2"] = det_matched_codes(split_cartan_normalizer_gens(), 3_840)
    pins["5.6500.2"] = det_matched_codes(nonsplit_cartan_normalizer_gens(), 5_760)
    pins["5.19500.7"] = det_matched_codes(order16_mixed_gens(), 1_920)
    for label, codes in pins.items():
        index = int(label.split(".")[1])
        assert index * codes.size == gf.GROUP_ORDER, (label, codes.size)
        assert admissible_codes(codes), label
    return pins


# ---------------------------------------------------------------------------
# Final assembly.
# ---------------------------------------------------------------------------


def finalize(classes: list[dict], containers: dict[str, GroupSet],
             out_path: Path) -> None:
    log("computing distributions and flags")
    records_data = []
    for c in classes:
        codes = c["codes"]
        order = int(codes.size)
        assert gf.GROUP_ORDER % order == 0, order
        sub = gf.subgroup_from_codes(codes)
        records_data.append({
            "codes": codes, "order": order, "index": gf.GROUP_ORDER // order,
            "gens": sub.generators,
            "dist_counts": gf.distribution_counts(codes),
            "f1": gf.has_group_eigenspace(sub, {1}),
            "fpm": gf.has_group_eigenspace(sub, {1, -1}),
            "fp": c.get("fp") or fingerprint(codes),
            "container": c.get("container", ""),
        })
    log("streaming the full-group distribution")
    records_data.append({
        "codes": None, "order": gf.GROUP_ORDER, "index": 1,
        "gens": gf.certified_full_group_generators(),
        "dist_counts": gf.stream_invariant_pairs(),
        "f1": False, "fpm": False, "fp": b"", "container": "full",
    })

    log("assigning labels")
    pins = build_pins(containers)
    pin_of: dict[int, str] = {}
    for label in sorted(pins):
        codes = pins[label]
        fp = fingerprint(codes)
        found = None
        for i, rd in enumerate(records_data):
            if rd["codes"] is None or rd["order"] != codes.size or rd["fp"] != fp:
                continue
            if np.array_equal(rd["codes"], codes) or \
                    conjugate_in_gsp(codes, rd["codes"]) is not None:
                found = i
                break
        assert found is not None, f"pinned class {label} missing from enumeration"
        assert found not in pin_of, f"{label} collides with {pin_of[found]}"
        pin_of[found] = label
    pin_of[len(records_data) - 1] = "5.1.1"

    by_index: dict[int, list[int]] = {}
    for i, rd in enumerate(records_data):
        by_index.setdefault(rd["index"], []).append(i)
    records = []
    stats: dict[str, dict] = {}
    for index, idxs in by_index.items():
        used = {int(pin_of[i].split(".")[2]) for i in idxs if i in pin_of}

        def canon_key(i: int) -> tuple:
            rd = records_data[i]
            dist = gf.LocalDistribution.from_counts(rd["dist_counts"], rd["order"])
            return (tuple(dist.canonical_items()), not rd["f1"], not rd["fpm"], i)

        j = 1
        for i in sorted((x for x in idxs if x not in pin_of), key=canon_key):
            while j in used:
                j += 1
            used.add(j)
            pin_of[i] = f"5.{index}.{j}"
        for i in idxs:
            rd = records_data[i]
            dist = gf.LocalDistribution.from_counts(rd["dist_counts"], rd["order"])
            records.append(gf.LatticeRecord(pin_of[i], rd["index"], rd["order"],
                                            list(rd["gens"]), dist,
                                            rd["f1"], rd["fpm"]))
            stats[pin_of[i]] = {"order": rd["order"], "container": rd["container"]}

    log(f"{len(records)} records; validating")
    WORK.mkdir(exist_ok=True)
    (WORK / "stats.json").write_text(json.dumps(stats, indent=1, sort_keys=True))
    count_note = f"expected {gf.LATTICE_CLASS_COUNT}, got {len(records)}"
    assert len(records) == gf.LATTICE_CLASS_COUNT, count_note
    lat = gf.SubgroupLattice(records)
    assert max(len(v) for v in lat.buckets.values()) <= gf.MAX_BUCKET_SIZE
    d = lat.by_label["5.624.2"].distribution
    assert d.mass(((4, 0, 0, 0, 1), 1)) == Fraction(1, 8)
    assert d.mass(((4, 2, 3, 1, 1), 0)) == Fraction(1, 16)
    assert d.mass(((1, 1, 1, 1, 1), 3)) == Fraction(125, 60_000)
    assert d.mass(((1, 1, 1, 1, 1), 4)) == Fraction(1, 60_000)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    gf.save_lattice(out_path, records)
    log(f"saved {out_path}")
    report = gf.verify_lattice(gf.load_lattice(out_path), effort="full-small")
    log(f"verification report: {report}")


def build_containers() -> dict[str, GroupSet]:
    log("building containers")
    out: dict[str, GroupSet] = {}
    out["klingen"] = klingen_container()
    out["siegel"] = siegel_container()
    out["plane_pair"] = pair_stabilizer_container()
    f25 = f25_linear_group()
    out["field_ext"] = field_ext_container(f25)
    out["lagrangian_pair"] = lagrangian_pair_container()
    iso_pair = isotropic_pair_group()
    out["n_iso_pair"] = normalizer_in_gsp(iso_pair, "n_iso_pair")
    assert out["n_iso_pair"].order == 5_760, out["n_iso_pair"].order
    sym3 = sym3_copy()
    two_a6 = find_2a6(sym3)
    out["n_2a6"] = normalizer_in_gsp(two_a6, "n_2a6")
    assert out["n_2a6"].order == 2_880, out["n_2a6"].order
    E = extraspecial_group()
    out["n_extraspecial"] = normalizer_in_gsp(E, "n_extraspecial")
    out["n_sym3"] = normalizer_in_gsp(sym3, "n_sym3")
    out["_iso_pair"] = iso_pair
    out["_sym3"] = sym3
    out["_2a6"] = two_a6
    out["_f25"] = f25
    for name in ("klingen", "siegel", "plane_pair", "field_ext", "lagrangian_pair",
                 "n_iso_pair", "n_2a6", "n_extraspecial", "n_sym3"):
        G = out[name]
        lam_img = sorted(set(int(x) for x in np.unique(f5.similitude_batch(G.mats()))))
        log(f"  {name}: order {G.order}, similitude image {lam_img}")
        assert lam_img == [1, 2, 3, 4], name
    return out


def perfect_seed_pool(containers: dict[str, GroupSet]) -> list[GroupSet]:
    log("building perfect seed pool")
    pool: list[GroupSet] = []

    def add(G: GroupSet, name: str, expected: int) -> None:
        assert G.order == expected, (name, G.order, expected)
        assert perfect_residuum(G).order == G.order, (name, "not perfect")
        G.name = name
        pool.append(G)
        log(f"  seed {name}: order {G.order}")

    a, b = (np.asarray(g, dtype=np.int64) for g in SL2_GENS)
    add(group_from_gens([embed_pair(a, I2), embed_pair(b, I2)]), "sl2_factor", 120)
    add(group_from_gens([embed_pair(a, a), embed_pair(b, b)]), "sl2_diag", 120)
    gam, gami = np.diag([2, 1]), np.diag([3, 1])
    add(group_from_gens([embed_pair(a, gam @ a @ gami % 5),
                         embed_pair(b, gam @ b @ gami % 5)]), "sl2_twist", 120)
    add(containers["_sym3"], "sl2_sym3", 120)
    add(group_from_gens([embed_pair(a, I2), embed_pair(b, I2),
                         embed_pair(I2, a), embed_pair(I2, b)]), "sl2_sq", 14_400)
    f25 = containers["_f25"]
    lam = f5.similitude_batch(f25.mats())
    add(group_from_codes(np.sort(f25.codes[lam == 1])), "sl2_25", 15_600)
    add(containers["_2a6"], "two_a6", 720)
    kl = containers["klingen"]
    km = kl.mats()
    unip = (f5.charpoly_batch(km) == np.array([1, 1, 1, 1, 1], dtype=np.uint8)).all(axis=1)
    fix_e1 = (km[:, :, 0] == np.array([1, 0, 0, 0], dtype=np.uint8)).all(axis=1)
    e2col = (km[:, :, 1].astype(np.int64) - np.array([0, 1, 0, 0])) % 5
    f2col = (km[:, :, 3].astype(np.int64) - np.array([0, 0, 0, 1])) % 5
    triv = (e2col[:, 1:] == 0).all(axis=1) & (f2col[:, 1:] == 0).all(axis=1)
    rad = np.sort(kl.codes[unip & fix_e1 & triv])
    assert rad.size == 125, rad.size
    rad_gens = [m.astype(np.int64) for m in group_from_codes(rad).gen_mats()]
    add(group_from_gens(rad_gens + [embed_pair(I2, a), embed_pair(I2, b)]),
        "heis_sl2", 15_000)
    sg = [lagrangian_block(g) for g in (a, b)]
    for bsym in (np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 1]]),
                 np.array([[0, 1], [1, 0]])):
        m = I4.copy()
        m[:2, 2:] = bsym
        sg.append(m)
    add(group_from_gens(sg), "abelian_sl2", 15_000)
    ne = containers["n_extraspecial"]
    lam = f5.similitude_batch(ne.mats())
    res = perfect_residuum(group_from_codes(np.sort(ne.codes[lam == 1])))
    res.name = "extraspecial_a5"
    pool.append(res)
    log(f"  seed extraspecial_a5: order {res.order}")
    return pool


CONTAINER_NAMES = ("klingen", "siegel", "plane_pair", "field_ext",
                   "lagrangian_pair", "n_iso_pair", "n_2a6",
                   "n_extraspecial", "n_sym3")


def run_containers(containers: dict[str, GroupSet],
                   pool: list[GroupSet]) -> list[dict]:
    WORK.mkdir(exist_ok=True)
    conj_pool = random_gsp_pool(20260816, 250_000)
    conj_invs = gsp_inv_batch(conj_pool)
    cands: list[dict] = []
    for name in CONTAINER_NAMES:
        M = containers[name]
        cache = WORK / f"cand_{name}.npz"
        if cache.exists():
            data = np.load(cache)
            pos = 0
            for s in data["sizes"]:
                cands.append({"codes": data["codes"][pos:pos + s], "container": name})
                pos += s
            log(f"container {name}: {data['sizes'].size} candidates (cached)")
            continue
        log(f"container {name}: order {M.order}")
        nodes = enumerate_sp_classes(M, pool, (conj_pool, conj_invs))
        hs = lambda_full_extensions(M, nodes)
        np.savez_compressed(
            cache, sizes=np.array([h.size for h in hs], dtype=np.int64),
            codes=np.concatenate(hs) if hs else np.zeros(0, dtype=np.int64))
        for h in hs:
            cands.append({"codes": h, "container": name})
    return cands


# ---------------------------------------------------------------------------
# Self test on GL2(F5) embedded with det as the similitude.
# ---------------------------------------------------------------------------


def selftest() -> None:
    log("selftest: embedded GL2(F5), det as similitude")
    gl2 = group_from_gens(
        [embed_pair(np.asarray(g, np.int64), np.diag([det2(g), 1])) for g in GL2_GENS],
        "gl2")
    assert gl2.order == 480, gl2.order
    lam = f5.similitude_batch(gl2.mats())
    sl2_codes = np.sort(gl2.codes[lam == 1])
    sl2 = group_from_codes(sl2_codes, "sl2_part")
    assert perfect_residuum(sl2).order == 120
    pool = random_gsp_pool(7, 30_000)
    nodes = enumerate_sp_classes(gl2, [sl2], (pool, gsp_inv_batch(pool)))
    hs = lambda_full_extensions(gl2, nodes)
    engine = sorted(int(h.size) for h in hs)
    merged = global_merge([{"codes": h, "container": "gl2"} for h in hs])
    assert len(merged) <= len(hs)

    oracle_sub = gf.Subgroup([gf.GspElement.from_code(c) for c in gl2.gen_codes],
                             480, elements=gl2.codes)
    reps = gf.enumerate_subgroups_small(oracle_sub, order_cap=480)
    oracle = []
    for r in reps:
        lams = set(int(x) for x in np.unique(f5.similitude_batch(r.element_matrices())))
        if lams == {1, 2, 3, 4} and admissible_codes(r.elements):
            oracle.append(int(r.order))
    oracle.sort()
    log(f"selftest: engine {len(engine)} classes, orders {engine}")
    log(f"selftest: oracle {len(oracle)} classes, orders {oracle}")
    assert engine == oracle, "selftest mismatch"
    log(f"selftest: {len(merged)} classes after global merge")
    log("selftest passed")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--selftest", action="store_true")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent
                                         / "src" / "galimage" / "data" / "gsp4_f5.lat"))
    args = ap.parse_args()
    if args.selftest:
        selftest()
        return
    containers = build_containers()
    pool = perfect_seed_pool(containers)
    cands = run_containers(containers, pool)
    classes = global_merge(cands)
    finalize(classes, containers, Path(args.out))
    log("done")


if __name__ == "__main__":
    main()
