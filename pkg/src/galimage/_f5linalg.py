"""Vectorized linear algebra over F_5 for batches of 4x4 matrices.

Matrices travel as numpy arrays of shape (n, 4, 4) with uint8 entries in
[0, 5), or packed as int64 codes (base-5 digits, row-major).  All batch
functions are branch-free so they stay inside numpy.
"""

from __future__ import annotations

import numpy as np

# Base-5 place values for packing, entry (r, c) at digit 4*r + c.
_POW5 = (5 ** np.arange(16, dtype=np.int64)).reshape(4, 4)

# The fixed symplectic form: A = [[0, I], [-I, 0]] in 2x2 blocks.
FORM = np.array(
    [
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [4, 0, 0, 0],
        [0, 4, 0, 0],
    ],
    dtype=np.uint8,
)

IDENTITY = np.eye(4, dtype=np.uint8)


def pack(mats: np.ndarray) -> np.ndarray:
    """(n,4,4) uint8 -> (n,) int64 codes."""
    return np.tensordot(mats.astype(np.int64), _POW5, axes=([1, 2], [0, 1]))


def unpack(codes: np.ndarray) -> np.ndarray:
    """(n,) int64 codes -> (n,4,4) uint8."""
    codes = np.asarray(codes, dtype=np.int64).reshape(-1, 1, 1)
    return ((codes // _POW5) % 5).astype(np.uint8)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched matrix product mod 5; broadcasts like numpy matmul."""
    return (np.matmul(a.astype(np.int32), b.astype(np.int32)) % 5).astype(np.uint8)


def mat_inv(m: np.ndarray) -> np.ndarray:
    """Inverse of a single 4x4 matrix mod 5 via Gauss-Jordan."""
    a = m.astype(np.int64) % 5
    aug = np.concatenate([a, np.eye(4, dtype=np.int64)], axis=1)
    for col in range(4):
        piv = next(r for r in range(col, 4) if aug[r, col] % 5)
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] * pow(int(aug[col, col]), -1, 5) % 5
        for r in range(4):
            if r != col and aug[r, col] % 5:
                aug[r] = (aug[r] - aug[r, col] * aug[col]) % 5
    return aug[:, 4:].astype(np.uint8)


def _det2(m, r0, r1, c0, c1):
    m = m.astype(np.int64)
    return m[:, r0, c0] * m[:, r1, c1] - m[:, r0, c1] * m[:, r1, c0]


_ROWS3 = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]


def _det3(m, rows, cols):
    m = m.astype(np.int64)
    (r0, r1, r2), (c0, c1, c2) = rows, cols
    return (
        m[:, r0, c0] * (m[:, r1, c1] * m[:, r2, c2] - m[:, r1, c2] * m[:, r2, c1])
        - m[:, r0, c1] * (m[:, r1, c0] * m[:, r2, c2] - m[:, r1, c2] * m[:, r2, c0])
        + m[:, r0, c2] * (m[:, r1, c0] * m[:, r2, c1] - m[:, r1, c1] * m[:, r2, c0])
    )


def det_batch(mats: np.ndarray) -> np.ndarray:
    """Determinants mod 5, shape (n,)."""
    m = mats.astype(np.int64)
    acc = np.zeros(m.shape[0], dtype=np.int64)
    sign = 1
    for c in range(4):
        acc += sign * m[:, 0, c] * _det3(m, _ROWS3[0], tuple(x for x in range(4) if x != c))
        sign = -sign
    return acc % 5


def charpoly_batch(mats: np.ndarray) -> np.ndarray:
    """Characteristic polynomials det(xI - M) mod 5.

    Returns (n, 5) uint8, coefficients lowest degree first; the leading
    entry is always 1.
    """
    m = mats.astype(np.int64)
    n = m.shape[0]
    t1 = m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2] + m[:, 3, 3]
    t2 = np.zeros(n, dtype=np.int64)
    for i in range(4):
        for j in range(i + 1, 4):
            t2 += _det2(m, i, j, i, j)
    t3 = np.zeros(n, dtype=np.int64)
    for idx in range(4):
        rows = _ROWS3[idx]
        t3 += _det3(m, rows, rows)
    t4 = det_batch(mats).astype(np.int64)
    out = np.empty((n, 5), dtype=np.uint8)
    out[:, 4] = 1
    out[:, 3] = (-t1) % 5
    out[:, 2] = t2 % 5
    out[:, 1] = (-t3) % 5
    out[:, 0] = t4 % 5
    return out


def rank_batch(mats: np.ndarray) -> np.ndarray:
    """Ranks over F_5, shape (n,) uint8, via largest nonvanishing minor."""
    m = mats.astype(np.int64) % 5
    n = m.shape[0]
    nz1 = (m != 0).any(axis=(1, 2))
    nz2 = np.zeros(n, dtype=bool)
    for r0 in range(4):
        for r1 in range(r0 + 1, 4):
            for c0 in range(4):
                for c1 in range(c0 + 1, 4):
                    nz2 |= _det2(m, r0, r1, c0, c1) % 5 != 0
    nz3 = np.zeros(n, dtype=bool)
    triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    for rows in triples:
        for cols in triples:
            nz3 |= _det3(m, rows, cols) % 5 != 0
    nz4 = det_batch(mats) != 0
    return (
        nz1.astype(np.uint8) + nz2.astype(np.uint8) + nz3.astype(np.uint8) + nz4.astype(np.uint8)
    )


def eig1dim_batch(mats: np.ndarray) -> np.ndarray:
    """dim ker(M - I) over F_5 for each matrix."""
    shifted = (mats.astype(np.int64) - IDENTITY.astype(np.int64)) % 5
    return (4 - rank_batch(shifted.astype(np.uint8))).astype(np.uint8)


def similitude_batch(mats: np.ndarray, check: bool = False) -> np.ndarray:
    """Similitude factors: the lambda with M^T A M = lambda A.

    With check=True, raises ValueError if any matrix fails the identity.
    """
    mt = np.swapaxes(mats, -1, -2)
    g = matmul(matmul(mt, FORM[None, :, :]), mats)
    lam = g[:, 0, 2].copy()
    if check:
        expected = (lam[:, None, None].astype(np.int64) * FORM.astype(np.int64)) % 5
        ok = (g == expected).all(axis=(1, 2)) & (lam != 0)
        if not ok.all():
            raise ValueError("matrix outside GSp4(F5)")
    return lam


def is_gsp_batch(mats: np.ndarray) -> np.ndarray:
    """Boolean mask of membership in GSp4(F5)."""
    mt = np.swapaxes(mats, -1, -2)
    g = matmul(matmul(mt, FORM[None, :, :]), mats)
    lam = g[:, 0, 2]
    expected = (lam[:, None, None].astype(np.int64) * FORM.astype(np.int64)) % 5
    return (g == expected).all(axis=(1, 2)) & (lam != 0)


def invariant_pairs_batch(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(charpoly (n,5), eig1dim (n,)) for a batch."""
    return charpoly_batch(mats), eig1dim_batch(mats)


def pair_codes(charpolys: np.ndarray, dims: np.ndarray) -> np.ndarray:
    """Encode (charpoly, eig1dim) as small ints for fast counting.

    Code = dim + 5 * (c0 + 5*c1 + 25*c2 + 125*c3); c4 = 1 always.
    """
    c = charpolys.astype(np.int64)
    poly_code = c[:, 0] + 5 * c[:, 1] + 25 * c[:, 2] + 125 * c[:, 3]
    return dims.astype(np.int64) + 5 * poly_code


def decode_pair(code: int) -> tuple[tuple[int, int, int, int, int], int]:
    dim = code % 5
    poly = code // 5
    c0, poly = poly % 5, poly // 5
    c1, poly = poly % 5, poly // 5
    c2, c3 = poly % 5, poly // 5
    return (c0, c1, c2, c3, 1), dim


def closure(generator_mats: np.ndarray, order_cap: int | None = None) -> np.ndarray:
    """Sorted packed codes of the subgroup generated by the given matrices.

    BFS closure under right multiplication by the generators.  Raises
    RuntimeError with a partial count when order_cap is exceeded.
    """
    gens = generator_mats.reshape(-1, 4, 4)
    seen = np.array([pack(IDENTITY[None, :, :])[0]], dtype=np.int64)
    frontier = IDENTITY[None, :, :]
    while frontier.shape[0]:
        prods = [matmul(frontier, g[None, :, :]) for g in gens]
        codes = np.unique(np.concatenate([pack(p) for p in prods])) if prods else seen
        new = codes[~np.isin(codes, seen, assume_unique=True)]
        if new.size == 0:
            break
        seen = np.union1d(seen, new)
        if order_cap is not None and seen.size > order_cap:
            raise RuntimeError(f"closure exceeded cap {order_cap}: at least {seen.size} elements")
        frontier = unpack(new)
    return seen


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis of the right nullspace of an (r, c) matrix over F_5.

    Returns (k, c) uint8 with k the nullity.
    """
    a = mat.astype(np.int64) % 5
    rows, cols = a.shape
    a = a.copy()
    pivots = []
    r = 0
    for c in range(cols):
        piv = None
        for rr in range(r, rows):
            if a[rr, c] % 5:
                piv = rr
                break
        if piv is None:
            continue
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, 5) % 5
        for rr in range(rows):
            if rr != r and a[rr, c] % 5:
                a[rr] = (a[rr] - a[rr, c] * a[r]) % 5
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-a[i, fc]) % 5
    return basis


def solve_commutant(seeds: list[np.ndarray]) -> np.ndarray:
    """Basis of {X : X S_i = S_i X for all i} inside 4x4 matrices over F_5.

    Returns (k, 4, 4) uint8.
    """
    blocks = []
    for s in seeds:
        s64 = s.astype(np.int64) % 5
        # Row-major vec: vec(AXB) = (A (x) B^T) vec(X), so
        # vec(XS - SX) = (I (x) S^T - S (x) I) vec(X).
        op = (np.kron(np.eye(4, dtype=np.int64), s64.T) - np.kron(s64, np.eye(4, dtype=np.int64))) % 5
        blocks.append(op)
    system = np.concatenate(blocks, axis=0)
    basis_flat = nullspace(system)
    return basis_flat.reshape(-1, 4, 4)


def span_elements(basis: np.ndarray) -> np.ndarray:
    """All F_5-linear combinations of the given (k,4,4) basis, as (5^k,4,4).

    Intended for k <= 9.
    """
    k = basis.shape[0]
    if k == 0:
        return np.zeros((1, 4, 4), dtype=np.uint8)
    if 5**k > 2_500_000:
        raise RuntimeError(f"span too large: 5^{k}")
    coeffs = np.indices((5,) * k).reshape(k, -1).T.astype(np.int64)
    flat = coeffs @ basis.reshape(k, 16).astype(np.int64) % 5
    return flat.reshape(-1, 4, 4).astype(np.uint8)
