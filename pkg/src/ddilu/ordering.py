"""Domain partitioning and orderings.

A matrix is split into ``p`` domains; each domain's nodes are classified as
interior (all neighbors in the same domain) or exterior (coupled across a
domain boundary).  Reordering all interiors first, domain by domain, followed
by all exteriors, gives the two-by-two block form used by the Schur and
coarse-correction preconditioners: the interior-interior block is block
diagonal over domains.

Classification uses the symmetrized pattern, so one-sided couplings still
mark both endpoints exterior.  A reverse Cuthill-McKee ordering is provided
for the per-domain interior blocks; its tie rules are fixed (increasing
degree, then smaller original index) so factorizations are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .sparse import CsrMatrix, Permutation, csr_transpose

__all__ = ["DomainLayout", "partition", "row_block_owner", "classify_and_order", "rcm"]


# ---------------------------------------------------------------------------
# symmetrized adjacency


@njit(cache=True)
def _sym_merge_count(n, rp, ci, trp, tci, counts):
    for i in range(n):
        a, ae = rp[i], rp[i + 1]
        b, be = trp[i], trp[i + 1]
        c = 0
        while a < ae or b < be:
            if a < ae and (b >= be or ci[a] <= tci[b]):
                j = ci[a]
                if b < be and tci[b] == j:
                    b += 1
                a += 1
            else:
                j = tci[b]
                b += 1
            if j != i:
                c += 1
        counts[i] = c


@njit(cache=True)
def _sym_merge_fill(n, rp, ci, trp, tci, out_rp, out_ci):
    for i in range(n):
        a, ae = rp[i], rp[i + 1]
        b, be = trp[i], trp[i + 1]
        p = out_rp[i]
        while a < ae or b < be:
            if a < ae and (b >= be or ci[a] <= tci[b]):
                j = ci[a]
                if b < be and tci[b] == j:
                    b += 1
                a += 1
            else:
                j = tci[b]
                b += 1
            if j != i:
                out_ci[p] = j
                p += 1


def _sym_adjacency(a: CsrMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Union of the pattern of ``a`` and its transpose, diagonal removed."""
    t = csr_transpose(a)
    counts = np.empty(a.n_rows, dtype=np.int64)
    _sym_merge_count(a.n_rows, a.row_ptr, a.col_idx, t.row_ptr, t.col_idx, counts)
    rp = np.zeros(a.n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=rp[1:])
    ci = np.empty(rp[-1], dtype=np.int64)
    _sym_merge_fill(a.n_rows, a.row_ptr, a.col_idx, t.row_ptr, t.col_idx, rp, ci)
    return rp, ci


# ---------------------------------------------------------------------------
# partitioning


@njit(cache=True)
def _mark_exterior(n, rp, ci, owner, exterior):
    for i in range(n):
        for k in range(rp[i], rp[i + 1]):
            if owner[ci[k]] != owner[i]:
                exterior[i] = True
                break


@njit(cache=True)
def _grow_regions(n, rp, ci, sizes, owner):
    queue = np.empty(n, dtype=np.int64)
    queued = np.full(n, -1, dtype=np.int64)
    scan = 0
    for d in range(len(sizes)):
        need = sizes[d]
        count = 0
        head = 0
        tail = 0
        while count < need:
            if head == tail:
                while owner[scan] >= 0:
                    scan += 1
                queue[tail] = scan
                tail += 1
                queued[scan] = d
            u = queue[head]
            head += 1
            if owner[u] >= 0:
                continue
            owner[u] = d
            count += 1
            if count == need:
                break
            for k in range(rp[u], rp[u + 1]):
                v = ci[k]
                if owner[v] < 0 and queued[v] != d:
                    queued[v] = d
                    queue[tail] = v
                    tail += 1


def _box_factors(dims: tuple[int, ...], p: int) -> list[int]:
    """Split ``p`` into one factor per axis, longest axes taking the largest."""
    factors = [1] * len(dims)
    primes = []
    q, f = p, 2
    while f * f <= q:
        while q % f == 0:
            primes.append(f)
            q //= f
        f += 1
    if q > 1:
        primes.append(q)
    for f in sorted(primes, reverse=True):
        ax = max(range(len(dims)), key=lambda a: (dims[a] / factors[a], -a))
        factors[ax] *= f
    return factors


def partition(a: CsrMatrix, p: int, grid_hint: tuple[int, ...] | None = None) -> np.ndarray:
    """Assign each node to one of ``p`` domains; returns the owner array.

    With ``grid_hint`` (the grid dimensions of a generated stencil problem,
    x fastest) the split is a structured box decomposition.  Without a hint,
    domains are grown greedily by breadth-first search over the symmetrized
    pattern, seeded at the lowest-index unassigned node; neighbor visits are
    in increasing index order, so the result is deterministic.

    Domain sizes stay within ``max(1, 0.1 * n / p)`` of ``n / p``; if a box
    split of an uneven grid would violate that, the breadth-first fallback
    is used instead.
    """
    n = a.n_rows
    if a.n_rows != a.n_cols:
        raise ValueError("partition requires a square matrix")
    if p < 1:
        raise ValueError("need at least one domain")
    if p > n:
        raise ValueError(f"more domains ({p}) than nodes ({n})")
    if p == 1:
        return np.zeros(n, dtype=np.int64)

    if grid_hint is not None:
        dims = tuple(int(d) for d in grid_hint)
        if int(np.prod(dims)) != n:
            raise ValueError("grid hint does not match matrix size")
        factors = _box_factors(dims, p)
        splits = [np.array_split(np.arange(d), f) for d, f in zip(dims, factors)]
        bounds = [np.array([c[0] for c in s] + [dims[i]]) for i, s in enumerate(splits)]
        idx = np.arange(n)
        owner = np.zeros(n, dtype=np.int64)
        stride = 1
        dstride = 1
        for ax, (d, f) in enumerate(zip(dims, factors)):
            coord = (idx // stride) % d
            chunk = np.searchsorted(bounds[ax], coord, side="right") - 1
            owner += chunk * dstride
            stride *= d
            dstride *= f
        sizes = np.bincount(owner, minlength=p)
        if np.max(np.abs(sizes - n / p)) <= max(1.0, 0.1 * n / p):
            return owner

    base, rem = divmod(n, p)
    sizes = np.full(p, base, dtype=np.int64)
    sizes[:rem] += 1
    rp, ci = _sym_adjacency(a)
    owner = np.full(n, -1, dtype=np.int64)
    _grow_regions(n, rp, ci, sizes, owner)
    return owner


def row_block_owner(n: int, p: int) -> np.ndarray:
    """Owner array for ``p`` contiguous index blocks of near-equal size.

    This is the layout a matrix gets when its rows are dealt out evenly
    across processes in index order; the first ``n % p`` blocks are one
    row longer.  On a lexicographically ordered grid the blocks are slabs
    perpendicular to the slowest axis.
    """
    if p < 1:
        raise ValueError("need at least one domain")
    if p > n:
        raise ValueError(f"more domains ({p}) than nodes ({n})")
    base, rem = divmod(n, p)
    sizes = np.full(p, base, dtype=np.int64)
    sizes[:rem] += 1
    return np.repeat(np.arange(p, dtype=np.int64), sizes)


# ---------------------------------------------------------------------------
# layout


@dataclass
class DomainLayout:
    """Result of partitioning plus the interior/exterior ordering.

    ``global_perm`` maps original indices to the order
    ``[interiors of domain 0, 1, ...  | exteriors of domain 0, 1, ...]``.
    ``interior_starts`` and ``exterior_starts`` give each domain's slice
    boundaries in the two sections (exterior positions are offset by
    ``n_interior``).
    """

    n: int
    p: int
    owner: np.ndarray
    interior_of: list[np.ndarray]
    exterior_of: list[np.ndarray]
    global_perm: Permutation
    n_interior: int
    interior_starts: np.ndarray
    exterior_starts: np.ndarray

    @property
    def n_exterior(self) -> int:
        return self.n - self.n_interior

    def domain_nodes(self, d: int) -> np.ndarray:
        """Original indices of domain ``d`` in local order (interior first)."""
        return np.concatenate([self.interior_of[d], self.exterior_of[d]])


def classify_and_order(a: CsrMatrix, owner: np.ndarray, p: int | None = None) -> DomainLayout:
    """Classify nodes as interior or exterior and build the global reordering.

    A node is exterior when the symmetrized pattern couples it to a node
    owned by another domain; everything else is interior.  Index order is
    preserved inside each class of each domain.
    """
    n = a.n_rows
    owner = np.asarray(owner, dtype=np.int64)
    if owner.shape != (n,):
        raise ValueError("owner array has wrong length")
    if p is None:
        p = int(owner.max()) + 1 if n else 1
    if n and (owner.min() < 0 or owner.max() >= p):
        raise ValueError("owner values out of range")

    rp, ci = _sym_adjacency(a)
    exterior = np.zeros(n, dtype=np.bool_)
    _mark_exterior(n, rp, ci, owner, exterior)

    interior_of = []
    exterior_of = []
    for d in range(p):
        mine = owner == d
        interior_of.append(np.where(mine & ~exterior)[0].astype(np.int64))
        exterior_of.append(np.where(mine & exterior)[0].astype(np.int64))
    int_sizes = np.array([len(s) for s in interior_of], dtype=np.int64)
    ext_sizes = np.array([len(s) for s in exterior_of], dtype=np.int64)
    interior_starts = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(int_sizes, out=interior_starts[1:])
    exterior_starts = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(ext_sizes, out=exterior_starts[1:])

    order = np.concatenate(interior_of + exterior_of) if n else np.empty(0, dtype=np.int64)
    return DomainLayout(
        n=n,
        p=p,
        owner=owner,
        interior_of=interior_of,
        exterior_of=exterior_of,
        global_perm=Permutation.from_order(order),
        n_interior=int(interior_starts[-1]),
        interior_starts=interior_starts,
        exterior_starts=exterior_starts,
    )


# ---------------------------------------------------------------------------
# reverse Cuthill-McKee


@njit(cache=True)
def _bfs_ecc(rp, ci, root, dist, stamp, mark, q):
    """Level BFS; returns (eccentricity, index of last-level min-degree node)."""
    head = 0
    tail = 0
    q[tail] = root
    tail += 1
    mark[root] = stamp
    dist[root] = 0
    ecc = 0
    while head < tail:
        u = q[head]
        head += 1
        du = dist[u]
        if du > ecc:
            ecc = du
        for k in range(rp[u], rp[u + 1]):
            v = ci[k]
            if mark[v] != stamp:
                mark[v] = stamp
                dist[v] = du + 1
                q[tail] = v
                tail += 1
    # min-degree node in the last level, ties toward smaller index
    best = -1
    best_deg = np.int64(2**62)
    for t in range(tail):
        u = q[t]
        if dist[u] == ecc:
            deg = rp[u + 1] - rp[u]
            if best == -1 or deg < best_deg or (deg == best_deg and u < best):
                best = u
                best_deg = deg
    return ecc, best


@njit(cache=True)
def _rcm_order(n, rp, ci, order):
    visited = np.zeros(n, dtype=np.uint8)
    dist = np.empty(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    q = np.empty(n, dtype=np.int64)
    nbrs = np.empty(n, dtype=np.int64)
    pos = 0
    scan = 0
    stamp = 0
    while pos < n:
        while visited[scan]:
            scan += 1
        # pseudo-peripheral root by repeated level BFS
        root = scan
        ecc_root, cand = _bfs_ecc(rp, ci, root, dist, stamp, mark, q)
        stamp += 1
        while True:
            ecc_cand, nxt = _bfs_ecc(rp, ci, cand, dist, stamp, mark, q)
            stamp += 1
            if ecc_cand > ecc_root:
                root = cand
                ecc_root = ecc_cand
                cand = nxt
            else:
                break
        # Cuthill-McKee breadth-first sweep from root
        head = pos
        visited[root] = 1
        order[pos] = root
        pos += 1
        while head < pos:
            u = order[head]
            head += 1
            cnt = 0
            for k in range(rp[u], rp[u + 1]):
                v = ci[k]
                if not visited[v]:
                    visited[v] = 1
                    nbrs[cnt] = v
                    cnt += 1
            # insertion sort by (degree, index)
            for i in range(1, cnt):
                v = nbrs[i]
                dv = rp[v + 1] - rp[v]
                j = i - 1
                while j >= 0:
                    w = nbrs[j]
                    dw = rp[w + 1] - rp[w]
                    if dw > dv or (dw == dv and w > v):
                        nbrs[j + 1] = w
                        j -= 1
                    else:
                        break
                nbrs[j + 1] = v
            for i in range(cnt):
                order[pos] = nbrs[i]
                pos += 1


def rcm(a: CsrMatrix) -> Permutation:
    """Reverse Cuthill-McKee ordering of the symmetrized pattern.

    Each connected component is swept breadth first from a pseudo-peripheral
    node (George-Liu iteration); neighbors are visited in increasing degree
    with ties toward the smaller original index, and the final order is
    reversed.  Components are taken up in order of their smallest index.
    """
    if a.n_rows != a.n_cols:
        raise ValueError("rcm requires a square matrix")
    n = a.n_rows
    if n == 0:
        return Permutation.identity(0)
    rp, ci = _sym_adjacency(a)
    order = np.empty(n, dtype=np.int64)
    _rcm_order(n, rp, ci, order)
    return Permutation.from_order(order[::-1].copy())
