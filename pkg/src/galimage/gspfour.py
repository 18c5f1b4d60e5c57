"""GSp4(F5): elements, subgroups, local distributions, and the subgroup
lattice with its verification machinery.

Matrices are 4x4 over F_5 preserving the symplectic form
A = [[0, I2], [-I2, 0]] up to a scalar (the similitude).  Subgroup element
sets are stored as sorted arrays of packed base-5 codes; all bulk work is
vectorized in numpy (see _f5linalg).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _f5linalg as f5

GROUP_ORDER = 37_440_000
SP_ORDER = GROUP_ORDER // 4
LATTICE_CLASS_COUNT = 1125
MAX_BUCKET_SIZE = 8

FORM = f5.FORM


class ResourceError(RuntimeError):
    """An enumeration exceeded its configured cap."""


class LatticeFormatError(ValueError):
    """Malformed lattice file."""


class LatticeVerificationError(RuntimeError):
    """A lattice record failed recomputation."""


# ---------------------------------------------------------------------------
# Elements.
# ---------------------------------------------------------------------------


class GspElement:
    """A matrix in GSp4(F5) with its similitude cached.

    Construction validates membership and raises ValueError otherwise.
    """

    __slots__ = ("mat", "similitude_value")

    def __init__(self, entries):
        m = np.asarray(entries, dtype=np.int64) % 5
        if m.shape != (4, 4):
            raise ValueError("expected a 4x4 matrix")
        m = m.astype(np.uint8)
        lam = f5.similitude_batch(m[None, :, :], check=True)[0]
        self.mat = m
        self.mat.setflags(write=False)
        self.similitude_value = int(lam)

    @classmethod
    def from_code(cls, code: int) -> "GspElement":
        return cls(f5.unpack(np.array([code]))[0])

    def code(self) -> int:
        return int(f5.pack(self.mat[None, :, :])[0])

    def __mul__(self, other: "GspElement") -> "GspElement":
        return GspElement(f5.matmul(self.mat[None, :, :], other.mat[None, :, :])[0])

    def inverse(self) -> "GspElement":
        return GspElement(f5.mat_inv(self.mat))

    def __pow__(self, n: int) -> "GspElement":
        if n < 0:
            return self.inverse() ** (-n)
        acc = GspElement(f5.IDENTITY)
        base = self
        while n:
            if n & 1:
                acc = acc * base
            base = base * base
            n >>= 1
        return acc

    def order(self) -> int:
        n, m = 1, self
        ident = f5.IDENTITY
        while not np.array_equal(m.mat, ident):
            m = m * self
            n += 1
            if n > GROUP_ORDER:
                raise RuntimeError("order computation runaway")
        return n

    def __eq__(self, other):
        return isinstance(other, GspElement) and np.array_equal(self.mat, other.mat)

    def __hash__(self):
        return hash(self.code())

    def __repr__(self):
        return f"GspElement({self.mat.tolist()}, similitude={self.similitude_value})"


IDENTITY_ELEMENT = GspElement(f5.IDENTITY)


def similitude(M: GspElement) -> int:
    """The scalar lambda with M^T A M = lambda A."""
    return M.similitude_value


def invariant_pair(M: GspElement) -> tuple[tuple[int, int, int, int, int], int]:
    """(characteristic polynomial mod 5, dim of the 1-eigenspace).

    The polynomial is det(xI - M), coefficients lowest degree first.
    """
    cp = f5.charpoly_batch(M.mat[None, :, :])[0]
    dim = int(f5.eig1dim_batch(M.mat[None, :, :])[0])
    return tuple(int(c) for c in cp), dim


# ---------------------------------------------------------------------------
# Local distributions.
# ---------------------------------------------------------------------------

Pair = tuple[tuple[int, int, int, int, int], int]


def pair_sort_key(pair: Pair):
    """Canonical embedding order: lexicographic on (c0..c4), then dimension."""
    poly, dim = pair
    return (poly, dim)


class LocalDistribution:
    """Sparse exact probability mass function on (charpoly, eig1dim) pairs."""

    __slots__ = ("masses", "_key")

    def __init__(self, masses: dict[Pair, Fraction]):
        total = sum(masses.values())
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        self.masses = {p: q for p, q in masses.items() if q != 0}
        self._key = tuple(sorted(self.masses.items(), key=lambda kv: pair_sort_key(kv[0])))

    @classmethod
    def from_counts(cls, counts: dict[Pair, int], order: int) -> "LocalDistribution":
        return cls({p: Fraction(c, order) for p, c in counts.items()})

    def support(self) -> frozenset:
        return frozenset(self.masses)

    def canonical_items(self) -> list[tuple[Pair, Fraction]]:
        return list(self._key)

    def mass(self, pair: Pair) -> Fraction:
        return self.masses.get(pair, Fraction(0))

    def distance2(self, other: "LocalDistribution") -> Fraction:
        """Exact squared Euclidean distance in the pair embedding."""
        keys = set(self.masses) | set(other.masses)
        return sum(
            (self.mass(k) - other.mass(k)) ** 2 for k in keys
        ) or Fraction(0)

    def __eq__(self, other):
        return isinstance(other, LocalDistribution) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"LocalDistribution({len(self.masses)} pairs)"


def empirical_distance2(counts: dict[Pair, int], total: int, dist: LocalDistribution) -> Fraction:
    """Squared distance between counts/total and a stored distribution."""
    keys = set(counts) | set(dist.masses)
    return sum(
        (Fraction(counts.get(k, 0), total) - dist.mass(k)) ** 2 for k in keys
    ) or Fraction(0)


# ---------------------------------------------------------------------------
# Subgroups.
# ---------------------------------------------------------------------------


@dataclass
class Subgroup:
    """A subgroup given by generators, with optional enumerated elements."""

    generators: list[GspElement]
    order: int
    label: str | None = None
    elements: np.ndarray | None = None
    _distribution: LocalDistribution | None = field(default=None, repr=False)

    def element_matrices(self) -> np.ndarray:
        if self.elements is None:
            raise ValueError("subgroup has no enumerated elements")
        return f5.unpack(self.elements)

    def contains_code(self, code: int) -> bool:
        if self.elements is None:
            raise ValueError("subgroup has no enumerated elements")
        i = np.searchsorted(self.elements, code)
        return i < self.elements.size and self.elements[i] == code


def generate_subgroup(generators: list[GspElement], order_cap: int | None = None) -> Subgroup:
    """Closure of the generators; raises ResourceError past order_cap."""
    if not generators:
        codes = np.array([IDENTITY_ELEMENT.code()], dtype=np.int64)
        return Subgroup([], 1, elements=codes)
    mats = np.stack([g.mat for g in generators])
    try:
        codes = f5.closure(mats, order_cap=order_cap)
    except RuntimeError as e:
        raise ResourceError(str(e)) from None
    return Subgroup(list(generators), int(codes.size), elements=codes)


def subgroup_from_codes(
    codes: np.ndarray, label: str | None = None, seed: int = 0
) -> Subgroup:
    """Wrap an explicit element set, finding a small generating set."""
    codes = np.unique(np.asarray(codes, dtype=np.int64))
    rng = random.Random(f"{seed}:{codes[0]}:{codes[-1]}:{codes.size}")
    if codes.size == 1:
        return Subgroup([], 1, label=label, elements=codes)
    gens: list[int] = []
    reached = 1
    for _ in range(64):
        gens.append(int(codes[rng.randrange(codes.size)]))
        closed = f5.closure(f5.unpack(np.array(gens)))
        if not np.isin(closed, codes, assume_unique=True).all():
            raise ValueError("element set is not closed under multiplication")
        if closed.size == codes.size:
            return Subgroup(
                [GspElement.from_code(c) for c in gens],
                int(codes.size),
                label=label,
                elements=codes,
            )
        if closed.size == reached:
            gens.pop()  # redundant pick
        reached = max(reached, int(closed.size))
    raise RuntimeError("failed to find a generating set")


def local_distribution(G: Subgroup, order_cap: int | None = None) -> LocalDistribution:
    """Exact distribution of (charpoly, eig1dim) over the subgroup."""
    if G._distribution is not None:
        return G._distribution
    if G.elements is None:
        enumerated = generate_subgroup(G.generators, order_cap=order_cap)
        G.elements = enumerated.elements
        if G.order != enumerated.order:
            raise ValueError(f"declared order {G.order} but closure has {enumerated.order}")
    counts = distribution_counts(G.elements)
    G._distribution = LocalDistribution.from_counts(counts, int(G.elements.size))
    return G._distribution


def distribution_counts(codes: np.ndarray, chunk: int = 1 << 19) -> dict[Pair, int]:
    """Exact (charpoly, eig1dim) counts over an element-code array."""
    totals = np.zeros(3125, dtype=np.int64)
    for start in range(0, codes.size, chunk):
        mats = f5.unpack(codes[start : start + chunk])
        cps, dims = f5.invariant_pairs_batch(mats)
        pcodes = f5.pair_codes(cps, dims)
        totals += np.bincount(pcodes, minlength=3125)
    return {
        f5.decode_pair(int(c)): int(totals[c]) for c in np.nonzero(totals)[0]
    }


def _lines_with_eigenvalue(mat: np.ndarray, lams: tuple[int, ...]) -> set[tuple[int, ...]]:
    """Normalized eigenline representatives of a matrix for the given eigenvalues."""
    lines: set[tuple[int, ...]] = set()
    for lam in lams:
        shifted = (mat.astype(np.int64) - lam * np.eye(4, dtype=np.int64)) % 5
        basis = f5.nullspace(shifted)
        if basis.shape[0] == 0:
            continue
        for vec in _span_vectors(basis):
            v = tuple(int(x) for x in vec)
            if any(v):
                lines.add(_normalize_line(v))
    return lines


def _span_vectors(basis: np.ndarray) -> np.ndarray:
    k = basis.shape[0]
    coeffs = np.indices((5,) * k).reshape(k, -1).T.astype(np.int64)
    return coeffs @ basis.astype(np.int64) % 5


def _normalize_line(v: tuple[int, ...]) -> tuple[int, ...]:
    for x in v:
        if x:
            inv = pow(x, -1, 5)
            return tuple((inv * y) % 5 for y in v)
    raise ValueError("zero vector")


def has_group_eigenspace(G: Subgroup, lam_set) -> bool:
    """True iff some line is an eigenline of every element with eigenvalue
    in lam_set.  lam_set must be a subgroup of F_5^* ({1} or {1, -1} here),
    so checking the generators suffices.
    """
    lams = tuple(sorted(x % 5 for x in lam_set))
    if lams not in ((1,), (1, 4)):
        raise ValueError("lam_set must be {1} or {1, -1}")
    if not G.generators:
        return True
    candidates = _lines_with_eigenvalue(G.generators[0].mat, lams)
    for g in G.generators[1:]:
        if not candidates:
            return False
        candidates &= _lines_with_eigenvalue(g.mat, lams)
    return bool(candidates)


def _lambda_image(generators: list[GspElement]) -> set[int]:
    image = {1}
    frontier = {1}
    lams = {g.similitude_value for g in generators}
    while frontier:
        nxt = {(a * b) % 5 for a in frontier for b in lams} - image
        image |= nxt
        frontier = nxt
    return image


def is_admissible(G: Subgroup) -> bool:
    """Surjective similitude plus an order-2 element of similitude -1."""
    if _lambda_image(G.generators) != {1, 2, 3, 4}:
        return False
    if G.order == GROUP_ORDER:
        # The full group; diag(1,1,-1,-1) is its witness.
        return True
    if G.elements is None:
        enumerated = generate_subgroup(G.generators)
        G.elements = enumerated.elements
    mats = f5.unpack(G.elements)
    lams = f5.similitude_batch(mats)
    squares = f5.matmul(mats, mats)
    is_invol = (squares == f5.IDENTITY).all(axis=(1, 2)) & ~(
        mats == f5.IDENTITY
    ).all(axis=(1, 2))
    return bool(np.any(is_invol & (lams == 4)))


# ---------------------------------------------------------------------------
# Full-group machinery: generators, streaming pair enumeration.
# ---------------------------------------------------------------------------


def _transvection(v: np.ndarray) -> np.ndarray:
    """Symplectic transvection x -> x + <x, v> v."""
    v = np.asarray(v, dtype=np.int64) % 5
    pairing = (f5.FORM.astype(np.int64) @ v) % 5  # <x, v> = x . (A v)
    m = (np.eye(4, dtype=np.int64) + np.outer(v, pairing)) % 5
    return m.astype(np.uint8)


def standard_generators() -> list[GspElement]:
    """Generators of GSp4(F5): a few symplectic transvections plus a
    similitude torus element.  Certified by orbit_stabilizer_certificate.
    """
    vs = [
        (1, 0, 0, 0),
        (0, 1, 0, 0),
        (0, 0, 1, 0),
        (0, 0, 0, 1),
        (1, 0, 1, 0),
        (0, 1, 0, 1),
        (1, 1, 1, 1),
    ]
    gens = [GspElement(_transvection(np.array(v))) for v in vs]
    gens.append(GspElement(np.diag([1, 1, 2, 2])))
    return gens


def _line_reps() -> np.ndarray:
    """All 156 projective-line representatives of F_5^4, first nonzero = 1."""
    vecs = []
    for code in range(1, 625):
        v = [(code // 5**i) % 5 for i in range(4)]
        lead = next(x for x in v if x)
        if lead == 1:
            vecs.append(v)
    assert len(vecs) == 156
    return np.array(vecs, dtype=np.uint8)


def line_orbit_stabilizer(
    gens: list[GspElement], start: tuple[int, ...]
) -> tuple[dict[tuple[int, ...], GspElement], list[GspElement]]:
    """Orbit of a projective line with transversal, plus Schreier generators
    of the stabilizer of the start line.
    """
    start = _normalize_line(start)
    transversal = {start: IDENTITY_ELEMENT}
    frontier = [start]
    schreier: list[GspElement] = []
    seen_schreier: set[int] = set()
    while frontier:
        nxt = []
        for line in frontier:
            u = transversal[line]
            for g in gens:
                img_vec = tuple(
                    int(x) for x in (g.mat.astype(np.int64) @ np.array(line)) % 5
                )
                img = _normalize_line(img_vec)
                gu = g * u
                if img not in transversal:
                    transversal[img] = gu
                    nxt.append(img)
                else:
                    s = transversal[img].inverse() * gu
                    c = s.code()
                    if c not in seen_schreier:
                        seen_schreier.add(c)
                        schreier.append(s)
        frontier = nxt
    return transversal, schreier


_CERTIFIED_GENS: list[GspElement] | None = None
_KLINGEN_CACHE: Subgroup | None = None


def certified_full_group_generators() -> list[GspElement]:
    """Generators verified to generate all of GSp4(F5).

    Certificate: the line orbit has size 156 and the Schreier stabilizer
    closes to order 240000, so the generated group has order
    156 * 240000 = 37440000 = |GSp4(F5)|.
    """
    global _CERTIFIED_GENS, _KLINGEN_CACHE
    if _CERTIFIED_GENS is not None:
        return _CERTIFIED_GENS
    gens = standard_generators()
    stab = _line_stabilizer_subgroup(gens, (1, 0, 0, 0), expected_order=240_000)
    assert stab.order == 240_000
    _CERTIFIED_GENS = gens
    _KLINGEN_CACHE = stab
    return gens


def _line_stabilizer_subgroup(
    gens: list[GspElement], line: tuple[int, ...], expected_order: int
) -> Subgroup:
    transversal, schreier = line_orbit_stabilizer(gens, line)
    if len(transversal) != 156:
        raise RuntimeError(f"line orbit has size {len(transversal)}, expected 156")
    rng = random.Random(17)
    pool = list(schreier)
    rng.shuffle(pool)
    picked: list[GspElement] = []
    for s in pool:
        picked.append(s)
        if len(picked) < 3:
            continue
        sub = generate_subgroup(picked)
        if sub.order == expected_order:
            return sub
    raise RuntimeError("stabilizer generators did not close to the expected order")


def verify_full_group_generators(gens: list[GspElement]) -> bool:
    """Orbit-stabilizer certificate that <gens> = GSp4(F5)."""
    try:
        _line_stabilizer_subgroup(gens, (1, 0, 0, 0), expected_order=240_000)
        return True
    except RuntimeError:
        return False


_FULL_ORDER_CACHE: int | None = None


def full_group_order(chunk: int = 1 << 21, progress=None) -> int:
    """Order of <standard_generators()> by brute-force BFS closure.

    Stores every element as a packed 48-bit code in a sorted int64 array;
    peak memory stays near 1 GB because frontier products are taken in
    chunks.  One run takes a few minutes and the result is cached for the
    process, so repeated calls are free.  The everyday fast check is
    certified_full_group_generators().
    """
    global _FULL_ORDER_CACHE
    if _FULL_ORDER_CACHE is not None:
        return _FULL_ORDER_CACHE
    gens = np.stack([g.mat for g in standard_generators()])
    seen = f5.pack(f5.IDENTITY[None, :, :])
    frontier = seen.copy()
    while frontier.size:
        parts = []
        for lo in range(0, frontier.size, chunk):
            mats = f5.unpack(frontier[lo : lo + chunk])
            for g in gens:
                parts.append(f5.pack(f5.matmul(mats, g[None, :, :])))
        codes = np.unique(np.concatenate(parts))
        del parts
        new = codes[~np.isin(codes, seen, assume_unique=True)]
        del codes
        if new.size == 0:
            break
        seen = np.union1d(seen, new)
        frontier = new
        if progress is not None:
            progress(int(seen.size))
    _FULL_ORDER_CACHE = int(seen.size)
    return _FULL_ORDER_CACHE


def stream_invariant_pairs(progress=None) -> dict[Pair, int]:
    """Exact (charpoly, eig1dim) counts over all 37,440,000 elements.

    Streams the whole group without storing elements: matrices are built
    column by column from the symplectic conditions, 15000 at a time.
    """
    form = f5.FORM.astype(np.int64)
    totals = np.zeros(3125, dtype=np.int64)
    built = 0
    nonzero = [np.array([(c // 5**i) % 5 for i in range(4)], dtype=np.int64) for c in range(1, 625)]
    for idx, c1 in enumerate(nonzero):
        # <c1, x> = c1^T A x; solve <c1, w> = 1 with a unit-vector w.
        row_c1 = (c1 @ form) % 5
        j = int(np.nonzero(row_c1)[0][0])
        w = np.zeros(4, dtype=np.int64)
        w[j] = pow(int(row_c1[j]), -1, 5)
        # U = perp of span(c1, w).
        row_w = (w @ form) % 5
        basis = f5.nullspace(np.stack([row_c1, row_w]).astype(np.uint8)).astype(np.int64)
        assert basis.shape[0] == 2
        b1, b2 = basis
        mu = int((b1 @ form @ b2) % 5)
        assert mu != 0
        b2 = b2 * pow(mu, -1, 5) % 5
        # U-vectors in coordinates (x, y): u = x b1 + y b2; pairing is x1 y2 - x2 y1.
        xs, ys = np.divmod(np.arange(25), 5)
        uvec = (xs[:, None] * b1[None, :] + ys[:, None] * b2[None, :]) % 5  # (25, 4)
        # Dual vectors: for u' != 0 pick uhat with <u', uhat> = 1.
        uhat_xy = np.zeros((25, 2), dtype=np.int64)
        for t in range(1, 25):
            x, y = int(xs[t]), int(ys[t])
            if x:
                uhat_xy[t] = (0, pow(x, -1, 5))
            else:
                uhat_xy[t] = ((-pow(y, -1, 5)) % 5, 0)
        pair_uu = (xs[:, None] * ys[None, :] - ys[:, None] * xs[None, :]) % 5  # (25,25)
        for lam in (1, 2, 3, 4):
            lam_inv = pow(lam, -1, 5)
            # c3[alpha, t] = lam w + alpha c1 + u_t.
            alphas = np.arange(5)
            c3 = (lam * w[None, None, :] + alphas[:, None, None] * c1[None, None, :] + uvec[None, :, :]) % 5
            # c2[t2, t] = u'_{t2} - lam_inv <u'_{t2}, u_t> c1, t2 in 1..24.
            beta = (-lam_inv * pair_uu[1:, :]) % 5  # (24, 25)
            c2 = (uvec[1:, None, :] + beta[:, :, None] * c1[None, None, :]) % 5  # (24,25,4)
            # u''[t2, s] = lam uhat_{t2} + s u'_{t2} in U-coords.
            s_range = np.arange(5)
            u2x = (lam * uhat_xy[1:, 0][:, None] + s_range[None, :] * xs[1:, None]) % 5  # (24,5)
            u2y = (lam * uhat_xy[1:, 1][:, None] + s_range[None, :] * ys[1:, None]) % 5
            u2vec = (u2x[..., None] * b1[None, None, :] + u2y[..., None] * b2[None, None, :]) % 5
            # gamma[t, t2, s] = lam_inv <u_t, u''_{t2,s}> with <,> = x1 y2 - x2 y1.
            gamma = (
                lam_inv
                * (xs[:, None, None] * u2y[None, :, :] - ys[:, None, None] * u2x[None, :, :])
            ) % 5  # (25, 24, 5)
            c4 = (gamma[..., None] * c1[None, None, None, :] + u2vec[None, :, :, :]) % 5  # (25,24,5,4)
            # Assemble (alpha, t, t2, s) -> matrix with columns c1, c2, c3, c4.
            mats = np.empty((5, 25, 24, 5, 4, 4), dtype=np.uint8)
            mats[..., 0] = c1.astype(np.uint8)
            mats[..., 1] = np.broadcast_to(
                c2.transpose(1, 0, 2)[None, :, :, None, :], (5, 25, 24, 5, 4)
            ).astype(np.uint8)
            mats[..., 2] = np.broadcast_to(
                c3[:, :, None, None, :], (5, 25, 24, 5, 4)
            ).astype(np.uint8)
            mats[..., 3] = np.broadcast_to(
                c4[None, :, :, :, :], (5, 25, 24, 5, 4)
            ).astype(np.uint8)
            flat = mats.reshape(-1, 4, 4)
            cps, dims = f5.invariant_pairs_batch(flat)
            totals += np.bincount(f5.pair_codes(cps, dims), minlength=3125)
            built += flat.shape[0]
        if progress is not None and idx % 64 == 0:
            progress(built, GROUP_ORDER)
    if built != GROUP_ORDER:
        raise RuntimeError(f"streamed {built} matrices, expected {GROUP_ORDER}")
    return {f5.decode_pair(int(c)): int(totals[c]) for c in np.nonzero(totals)[0]}


# ---------------------------------------------------------------------------
# Named subgroups.
# ---------------------------------------------------------------------------


def _embed_pair(a, b) -> np.ndarray:
    """Embed (A, B) in GL2 x GL2 acting on (e1, f1) and (e2, f2).

    The blocks sit at coordinates (0, 2) and (1, 3); the 2x2 similitude is
    the determinant, so det A = det B lands the pair inside GSp4.
    """
    a = np.asarray(a, dtype=np.int64) % 5
    b = np.asarray(b, dtype=np.int64) % 5
    m = np.zeros((4, 4), dtype=np.int64)
    m[0, 0], m[0, 2], m[2, 0], m[2, 2] = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
    m[1, 1], m[1, 3], m[3, 1], m[3, 3] = b[0, 0], b[0, 1], b[1, 0], b[1, 1]
    return m.astype(np.uint8)


_SL2_GENS = [np.array([[0, 4], [1, 0]]), np.array([[1, 1], [0, 1]])]
_I2 = np.eye(2, dtype=np.int64)


def _klingen() -> Subgroup:
    certified_full_group_generators()
    assert _KLINGEN_CACHE is not None
    return _KLINGEN_CACHE


def _klingen_entry_filter(allowed_scalars: set[int], entry: tuple[int, int], expected: int) -> Subgroup:
    k = _klingen()
    mats = k.element_matrices()
    mask = np.isin(mats[:, entry[0], entry[1]], list(allowed_scalars))
    codes = k.elements[mask]
    sub = subgroup_from_codes(codes)
    assert sub.order == expected, (sub.order, expected)
    return sub


def _centralizer_subgroup(seed: np.ndarray, expected: int) -> Subgroup:
    basis = f5.solve_commutant([seed])
    cands = f5.span_elements(basis)
    keep = f5.is_gsp_batch(cands)
    codes = np.unique(f5.pack(cands[keep]))
    sub = subgroup_from_codes(codes)
    assert sub.order == expected, (sub.order, expected)
    return sub


def _det_matched_pair_subgroup(a_gens: list[np.ndarray], expected: int) -> Subgroup:
    """<(A, B) : A in <a_gens>, det B = det A>, via explicit generators."""
    gens = []
    for s in _SL2_GENS:
        gens.append(GspElement(_embed_pair(_I2, s)))
    for a in a_gens:
        d = int(a[0][0] * a[1][1] - a[0][1] * a[1][0]) % 5
        b = np.array([[d, 0], [0, 1]])
        gens.append(GspElement(_embed_pair(np.asarray(a), b)))
    sub = generate_subgroup(gens)
    assert sub.order == expected, (sub.order, expected)
    return sub


def build_named_subgroup(name: str) -> Subgroup:
    """Concrete representatives for a fixed set of named subgroup classes.

    Supported: 5.156.1, 5.312.1, 5.624.1, 5.624.3, 5.650.1, 5.3900.1,
    5.624.8, 5.600.2.
    """
    if name == "5.156.1":
        # Stabilizer of the line <e1>: block upper triangular (1, 2, 1).
        sub = _klingen()
        out = Subgroup(sub.generators, sub.order, label=name, elements=sub.elements)
        return out
    if name == "5.312.1":
        # Klingen elements acting on <e1> by +-1.
        sub = _klingen_entry_filter({1, 4}, (0, 0), 120_000)
    elif name == "5.624.1":
        # Klingen elements fixing e1.
        sub = _klingen_entry_filter({1}, (0, 0), 60_000)
    elif name == "5.624.3":
        # Klingen elements acting trivially on the f1-quotient line.
        sub = _klingen_entry_filter({1}, (2, 2), 60_000)
    elif name == "5.650.1":
        # Pairs (A, B) on perpendicular symplectic planes with det A = det B.
        sub = _det_matched_pair_subgroup(
            [np.asarray(m) for m in _SL2_GENS] + [np.array([[2, 0], [0, 1]])], 57_600
        )
    elif name == "5.3900.1":
        k = _klingen()
        d = build_named_subgroup("5.650.1")
        codes = np.intersect1d(k.elements, d.elements, assume_unique=True)
        sub = subgroup_from_codes(codes)
        assert sub.order == 9_600
    elif name == "5.624.8":
        # GL4-centralizer, intersected with GSp4, of a matrix satisfying the
        # golden-ratio relation x^2 = x + 1 with two 2x2 Jordan blocks.  The
        # nilpotent part is placed antisymmetrically so the centralizer meets
        # GSp4 in a full Levi GL2 over the Siegel radical: order 480 * 125.
        seed = (3 * np.eye(4, dtype=np.int64)) % 5
        seed[0, 3], seed[1, 2] = 1, 4
        sub = _centralizer_subgroup(seed.astype(np.uint8), 60_000)
    elif name == "5.600.2":
        # F_25-linear maps with determinant in F_5^*: the centralizer of
        # multiplication by z0 = 2 + w (w^2 = 2, z0^2 + z0 + 2 = 0) on an
        # F_25-symplectic plane whose trace form is the standard form.  Its
        # eigenplanes are nondegenerate, unlike a perpendicular-pair seed.
        seed = np.array(
            [[2, 2, 0, 0], [1, 2, 0, 0], [0, 0, 2, 1], [0, 0, 2, 2]],
            dtype=np.uint8,
        )
        sub = _centralizer_subgroup(seed, 62_400)
    else:
        raise ValueError(f"unsupported named subgroup: {name}")
    sub.label = name
    return sub


# ---------------------------------------------------------------------------
# Small-group subgroup enumeration (test oracle).
# ---------------------------------------------------------------------------


def enumerate_subgroups_small(
    G: Subgroup, order_cap: int = 10_000, max_subgroups: int = 250_000
) -> list[Subgroup]:
    """All subgroups of G up to G-conjugacy, by breadth-first closure growth.

    Brute force; intended for |G| <= order_cap only.
    """
    if G.order > order_cap:
        raise ResourceError(f"group order {G.order} exceeds cap {order_cap}")
    if G.elements is None:
        G.elements = generate_subgroup(G.generators).elements
    codes = [int(c) for c in G.elements]
    mats = {c: f5.unpack(np.array([c]))[0] for c in codes}
    ident = IDENTITY_ELEMENT.code()

    def close(seed: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(int(c) for c in f5.closure(f5.unpack(np.array(seed))))

    all_subs: set[tuple[int, ...]] = {(ident,)}
    frontier = [(ident,)]
    while frontier:
        nxt = []
        for h in frontier:
            hset = set(h)
            for g in codes:
                if g in hset:
                    continue
                k = close(tuple(sorted(hset | {g})))
                if k not in all_subs:
                    all_subs.add(k)
                    if len(all_subs) > max_subgroups:
                        raise ResourceError("subgroup count exceeded cap")
                    nxt.append(k)
        frontier = nxt

    # Conjugacy classes via orbits of element-set keys under G-conjugation.
    gen_mats = [(mats[c], f5.mat_inv(mats[c])) for c in codes]
    remaining = set(all_subs)
    reps: list[Subgroup] = []
    while remaining:
        h = min(remaining)
        orbit = {h}
        queue = [h]
        while queue:
            cur = queue.pop()
            cur_m = f5.unpack(np.array(cur))
            for gm, gmi in gen_mats:
                conj = f5.matmul(f5.matmul(gm[None, :, :], cur_m), gmi[None, :, :])
                key = tuple(int(x) for x in np.sort(f5.pack(conj)))
                if key not in orbit:
                    orbit.add(key)
                    queue.append(key)
        remaining -= orbit
        reps.append(subgroup_from_codes(np.array(h, dtype=np.int64)))
    reps.sort(key=lambda s: (s.order, tuple(int(c) for c in s.elements)))
    return reps


# ---------------------------------------------------------------------------
# Lattice file format, loading, verification.
# ---------------------------------------------------------------------------

LATTICE_MAGIC = "GSP4LAT"
LATTICE_VERSION = 1


@dataclass
class LatticeRecord:
    label: str
    index: int
    order: int
    generators: list[GspElement]
    distribution: LocalDistribution
    flag_eig1: bool
    flag_pm: bool

    def as_subgroup(self) -> Subgroup:
        return Subgroup(list(self.generators), self.order, label=self.label)


class SubgroupLattice:
    """The ingested lattice: records, label index, distribution buckets."""

    def __init__(self, records: list[LatticeRecord]):
        self.records = records
        self.by_label = {r.label: r for r in records}
        if len(self.by_label) != len(records):
            raise LatticeFormatError("duplicate labels in lattice")
        buckets: dict[LocalDistribution, list[str]] = {}
        for r in records:
            buckets.setdefault(r.distribution, []).append(r.label)
        self.buckets = buckets

    def labels(self) -> list[str]:
        return [r.label for r in self.records]

    def bucket_of(self, label: str) -> list[str]:
        return self.buckets[self.by_label[label].distribution]


def _format_gens(gens: list[GspElement]) -> str:
    out = []
    for g in gens:
        flat = g.mat.reshape(16)
        out.append("".join(str(int(x)) for x in flat))
    return ";".join(out)


def _parse_gens(text: str, lineno: int) -> list[GspElement]:
    gens = []
    for part in text.split(";"):
        if len(part) != 16 or not part.isdigit() or any(c > "4" for c in part):
            raise LatticeFormatError(f"line {lineno}: bad generator string {part!r}")
        mat = np.array([int(c) for c in part], dtype=np.uint8).reshape(4, 4)
        try:
            gens.append(GspElement(mat))
        except ValueError as e:
            raise LatticeFormatError(f"line {lineno}: generator not in GSp4: {e}") from None
    return gens


def _format_dist(dist: LocalDistribution, order: int) -> str:
    parts = []
    for (poly, dim), mass in dist.canonical_items():
        count = mass * order
        if count.denominator != 1:
            raise ValueError("distribution not exact over the given order")
        poly_str = "".join(str(c) for c in reversed(poly))
        parts.append(f"{poly_str}:{dim}:{count.numerator}")
    return ";".join(parts)


def _parse_dist(text: str, order: int, lineno: int) -> LocalDistribution:
    counts: dict[Pair, int] = {}
    total = 0
    for part in text.split(";"):
        fields = part.split(":")
        if len(fields) != 3:
            raise LatticeFormatError(f"line {lineno}: bad distribution entry {part!r}")
        poly_str, dim_str, count_str = fields
        if len(poly_str) != 5 or any(c not in "01234" for c in poly_str):
            raise LatticeFormatError(f"line {lineno}: bad charpoly {poly_str!r}")
        poly = tuple(int(c) for c in reversed(poly_str))
        if poly[4] != 1:
            raise LatticeFormatError(f"line {lineno}: charpoly not monic: {poly_str!r}")
        dim = int(dim_str)
        count = int(count_str)
        if not 0 <= dim <= 4 or count <= 0:
            raise LatticeFormatError(f"line {lineno}: bad distribution entry {part!r}")
        pair = (poly, dim)
        if pair in counts:
            raise LatticeFormatError(f"line {lineno}: repeated pair {part!r}")
        counts[pair] = count
        total += count
    if total != order:
        raise LatticeFormatError(f"line {lineno}: distribution counts sum to {total}, not {order}")
    return LocalDistribution.from_counts(counts, order)


def save_lattice(path, records: list[LatticeRecord]) -> None:
    lines = [f"{LATTICE_MAGIC} {LATTICE_VERSION} {GROUP_ORDER}"]
    for r in sorted(records, key=lambda r: (r.index, _label_j(r.label))):
        lines.append(
            "|".join(
                [
                    r.label,
                    str(r.index),
                    str(r.order),
                    _format_gens(r.generators),
                    _format_dist(r.distribution, r.order),
                    "1" if r.flag_eig1 else "0",
                    "1" if r.flag_pm else "0",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _label_j(label: str) -> int:
    return int(label.split(".")[2])


def default_lattice_path() -> Path:
    """Path of the lattice file shipped inside the package."""
    return Path(__file__).parent / "data" / "gsp4_f5.lat"


def load_lattice(path) -> SubgroupLattice:
    """Parse a lattice file; raises LatticeFormatError with the line number."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"lattice file not found: {path}")
    records: list[LatticeRecord] = []
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != LATTICE_MAGIC:
            raise LatticeFormatError("line 1: bad header")
        if int(header[1]) != LATTICE_VERSION or int(header[2]) != GROUP_ORDER:
            raise LatticeFormatError("line 1: unsupported version or group order")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split("|")
            if len(fields) != 7:
                raise LatticeFormatError(f"line {lineno}: expected 7 fields, got {len(fields)}")
            label, index_s, order_s, gens_s, dist_s, f1_s, fpm_s = fields
            parts = label.split(".")
            if len(parts) != 3 or parts[0] != "5" or not parts[1].isdigit() or not parts[2].isdigit():
                raise LatticeFormatError(f"line {lineno}: bad label {label!r}")
            index, order = int(index_s), int(order_s)
            if index != int(parts[1]):
                raise LatticeFormatError(f"line {lineno}: label index mismatch")
            if f1_s not in "01" or fpm_s not in "01":
                raise LatticeFormatError(f"line {lineno}: bad flags")
            gens = _parse_gens(gens_s, lineno)
            dist = _parse_dist(dist_s, order, lineno)
            records.append(
                LatticeRecord(label, index, order, gens, dist, f1_s == "1", fpm_s == "1")
            )
    return SubgroupLattice(records)


def verify_lattice(
    lattice: SubgroupLattice,
    effort: str = "full-small",
    dist_order_cap: int = 1_000_000,
    progress=None,
) -> dict:
    """Check the ingested lattice against recomputation.

    effort "basic": structural checks only (orders multiply out, buckets,
    class count).  "full-small": also re-enumerate every subgroup of order
    <= dist_order_cap and recompute order, admissibility, distribution and
    eigenspace flags.  "full": additionally verify the full-group record's
    distribution by streaming enumeration.

    Raises LatticeVerificationError naming the offending label.
    """
    if effort not in ("basic", "full-small", "full"):
        raise ValueError(f"unknown effort {effort!r}")
    report = {
        "records": len(lattice.records),
        "admissible": len(lattice.records),
        "max_bucket": max(len(v) for v in lattice.buckets.values()),
        "distributions_checked": 0,
        "effort": effort,
    }
    if len(lattice.records) != LATTICE_CLASS_COUNT:
        raise LatticeVerificationError(
            f"lattice has {len(lattice.records)} classes, expected {LATTICE_CLASS_COUNT}"
        )
    if report["max_bucket"] > MAX_BUCKET_SIZE:
        raise LatticeVerificationError(f"a distribution bucket exceeds size {MAX_BUCKET_SIZE}")
    seen_full_group = False
    for r in lattice.records:
        if r.index * r.order != GROUP_ORDER:
            raise LatticeVerificationError(f"{r.label}: index * order != {GROUP_ORDER}")
        if _lambda_image(r.generators) != {1, 2, 3, 4}:
            raise LatticeVerificationError(f"{r.label}: similitude not surjective")
        if r.order == GROUP_ORDER:
            seen_full_group = True
            if not verify_full_group_generators(r.generators):
                raise LatticeVerificationError(f"{r.label}: generators do not generate GSp4")
    if not seen_full_group:
        raise LatticeVerificationError("no full-group record present")
    if effort == "basic":
        return report

    for i, r in enumerate(lattice.records):
        if progress is not None:
            progress(i, len(lattice.records), r.label)
        if r.order > dist_order_cap:
            continue
        sub = generate_subgroup(r.generators, order_cap=r.order * 2)
        if sub.order != r.order:
            raise LatticeVerificationError(
                f"{r.label}: closure has order {sub.order}, stored {r.order}"
            )
        if not is_admissible(sub):
            raise LatticeVerificationError(f"{r.label}: not admissible")
        dist = local_distribution(sub)
        if dist != r.distribution:
            raise LatticeVerificationError(f"{r.label}: stored distribution mismatch")
        if has_group_eigenspace(sub, {1}) != r.flag_eig1:
            raise LatticeVerificationError(f"{r.label}: eig1 flag mismatch")
        if has_group_eigenspace(sub, {1, -1}) != r.flag_pm:
            raise LatticeVerificationError(f"{r.label}: pm flag mismatch")
        report["distributions_checked"] += 1

    if effort == "full":
        counts = stream_invariant_pairs(progress=None)
        full_dist = LocalDistribution.from_counts(counts, GROUP_ORDER)
        for r in lattice.records:
            if r.order == GROUP_ORDER and r.distribution != full_dist:
                raise LatticeVerificationError(f"{r.label}: full-group distribution mismatch")
        report["distributions_checked"] += 1
    return report
