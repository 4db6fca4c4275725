"""Shared test helpers: dense oracles and random matrix generators.

The oracles deliberately avoid the library's own kernels: dense LU, dense
Schur complements, and fill-level computations are written against plain
ndarrays so that agreement between the two paths is meaningful evidence.
"""

from __future__ import annotations

import numpy as np
import pytest

from ddilu.sparse import CsrMatrix, csr_from_coo, csr_from_dense


# ---------------------------------------------------------------------------
# dense oracles


def dense_lu_nopivot(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Plain no-pivoting LU; L has unit diagonal."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    lo = np.eye(n)
    up = a.copy()
    for k in range(n):
        for i in range(k + 1, n):
            lo[i, k] = up[i, k] / up[k, k]
            up[i, k:] -= lo[i, k] * up[k, k:]
            up[i, k] = 0.0
    return lo, up


def dense_schur(a: np.ndarray, n1: int) -> np.ndarray:
    """Exact Schur complement of the leading n1-by-n1 block."""
    b = a[:n1, :n1]
    f = a[:n1, n1:]
    e = a[n1:, :n1]
    c = a[n1:, n1:]
    return c - e @ np.linalg.solve(b, f)


def fill_levels_dense(pattern: np.ndarray) -> np.ndarray:
    """Fill levels by explicit shortest-path search (small n only).

    The level of position (i, j) is one less than the length of the shortest
    path from i to j through vertices all smaller than min(i, j); original
    entries are level 0 and unreachable positions a large sentinel.
    """
    n = pattern.shape[0]
    big = n * n
    lev = np.full((n, n), big, dtype=np.int64)
    adj = [np.nonzero(pattern[i])[0] for i in range(n)]
    for i in range(n):
        lev[i, i] = 0
        for j in range(n):
            if j == i:
                continue
            lim = min(i, j)
            # breadth-first search from i through vertices < lim only
            dist = {i: 0}
            frontier = [i]
            while frontier and j not in dist:
                nxt = []
                for u in frontier:
                    for v in adj[u]:
                        v = int(v)
                        if v in dist:
                            continue
                        if v == j or v < lim:
                            dist[v] = dist[u] + 1
                            nxt.append(v)
                frontier = nxt
            if j in dist:
                lev[i, j] = dist[j] - 1
    return lev


def bandwidth(a: CsrMatrix) -> int:
    rows = np.repeat(np.arange(a.n_rows), np.diff(a.row_ptr))
    if len(rows) == 0:
        return 0
    return int(np.max(np.abs(rows - a.col_idx)))


# ---------------------------------------------------------------------------
# generators


def random_pattern_symmetric(rng: np.random.Generator, n: int,
                             extra: int | None = None,
                             dominant: bool = True) -> CsrMatrix:
    """Random matrix with a symmetric pattern and full diagonal.

    With ``dominant`` the diagonal exceeds the absolute row sums, so no
    elimination pivot can come near zero and factorizations stay clean.
    """
    if extra is None:
        extra = 2 * n
    rows = rng.integers(0, n, size=extra)
    cols = rng.integers(0, n, size=extra)
    mask = rows != cols
    rows, cols = rows[mask], cols[mask]
    dense = np.zeros((n, n))
    dense[rows, cols] = rng.standard_normal(len(rows))
    sym = (dense != 0) | (dense.T != 0)
    dense[sym & (dense == 0)] = rng.standard_normal(int(np.sum(sym & (dense == 0))))
    if dominant:
        np.fill_diagonal(dense, np.sum(np.abs(dense), axis=1) + rng.uniform(1.0, 2.0, n))
    else:
        np.fill_diagonal(dense, rng.uniform(1.0, 2.0, n))
    return csr_from_dense(dense)


def random_spd_dense(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m @ m.T + n * np.eye(n)


def periodic_laplacian2d(nx: int, ny: int) -> CsrMatrix:
    """Five-point Laplacian on a torus: every row sums to zero.

    Needs ``nx, ny >= 3`` so wraparound neighbors stay distinct.
    """
    assert nx >= 3 and ny >= 3
    n = nx * ny
    idx = np.arange(n)
    x, y = idx % nx, idx // nx
    rows = [idx] * 5
    cols = [
        idx,
        (x + 1) % nx + nx * y,
        (x - 1) % nx + nx * y,
        x + nx * ((y + 1) % ny),
        x + nx * ((y - 1) % ny),
    ]
    vals = [np.full(n, 4.0)] + [np.full(n, -1.0)] * 4
    return csr_from_coo(n, n, np.concatenate(rows), np.concatenate(cols),
                        np.concatenate(vals))


def dense_block_problem(rng: np.random.Generator, block_sizes: list[int],
                        cross_pairs: list[tuple[int, int]]) -> tuple[CsrMatrix, np.ndarray]:
    """Diagonally dominant matrix with dense diagonal blocks.

    Within each block every position is nonzero, so a level-0 factorization
    of a block (in any symmetric reordering) creates no fill outside the
    stored pattern and is exact.  ``cross_pairs`` adds symmetric couplings
    between blocks.  Returns the matrix and the block owner array.
    """
    n = sum(block_sizes)
    owner = np.repeat(np.arange(len(block_sizes)), block_sizes)
    d = np.zeros((n, n))
    start = 0
    for size in block_sizes:
        blk = rng.uniform(-1.0, 1.0, (size, size))
        d[start:start + size, start:start + size] = blk + blk.T
        start += size
    for i, j in cross_pairs:
        v = rng.uniform(0.2, 1.0)
        d[i, j] = d[j, i] = -v
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, np.sum(np.abs(d), axis=1) + rng.uniform(1.0, 2.0, n))
    return csr_from_dense(d), owner


def path_graph(n: int, order: np.ndarray | None = None) -> CsrMatrix:
    """Laplacian-like matrix of a path, optionally relabeled by ``order``."""
    lab = np.arange(n) if order is None else np.asarray(order)
    rows, cols, vals = [], [], []
    for i in range(n):
        rows.append(lab[i]); cols.append(lab[i]); vals.append(2.0)
        if i + 1 < n:
            rows.append(lab[i]); cols.append(lab[i + 1]); vals.append(-1.0)
            rows.append(lab[i + 1]); cols.append(lab[i]); vals.append(-1.0)
    return csr_from_coo(n, n, np.array(rows), np.array(cols),
                        np.array(vals, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
