"""Compressed sparse row matrices and the small set of kernels built on them.

Everything downstream (orderings, incomplete factorizations, preconditioners,
Krylov solvers) works on the :class:`CsrMatrix` container defined here.  The
kernels are deliberately plain: serial numba loops with a fixed left-to-right
summation order, so that repeated runs produce bitwise-identical results and
iteration counts are stable enough to assert on in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "CsrMatrix",
    "Permutation",
    "csr_from_coo",
    "csr_from_dense",
    "csr_identity",
    "csr_transpose",
    "spmv",
    "tri_solve_lower",
    "tri_solve_upper",
    "permute_symmetric",
    "extract_block",
    "take_submatrix",
    "sparse_matmul",
    "vdot",
    "vnorm2",
]


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class CsrMatrix:
    """Sparse matrix in compressed sparse row form.

    Invariants (enforced by :func:`csr_from_arrays` and preserved by every
    kernel in this package):

    * ``row_ptr`` has length ``n_rows + 1``, starts at 0, ends at ``nnz`` and
      is nondecreasing; empty rows are allowed.
    * column indices are strictly increasing within each row, so there are no
      duplicate entries.
    * explicitly stored zeros are kept; patterns are meaningful on their own.

    Instances are treated as immutable.  Code in this package never writes to
    the arrays of an existing matrix.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def to_dense(self) -> np.ndarray:
        """Expand to a dense ``(n_rows, n_cols)`` array (test oracles)."""
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[lo:hi]] = self.values[lo:hi]
        return out

    def with_values(self, values: np.ndarray) -> "CsrMatrix":
        """Same pattern, new values (no copy of the index arrays)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError("value array does not match pattern size")
        return CsrMatrix(self.n_rows, self.n_cols, self.row_ptr, self.col_idx, values)


def csr_from_arrays(
    n_rows: int,
    n_cols: int,
    row_ptr: np.ndarray,
    col_idx: np.ndarray,
    values: np.ndarray,
) -> CsrMatrix:
    """Validating constructor; raises ``ValueError`` on malformed input."""
    row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
    col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if n_rows < 0 or n_cols < 0:
        raise ValueError("negative dimension")
    if row_ptr.shape != (n_rows + 1,):
        raise ValueError("row_ptr has wrong length")
    if row_ptr[0] != 0 or row_ptr[-1] != len(col_idx) or len(col_idx) != len(values):
        raise ValueError("row_ptr endpoints inconsistent with entry arrays")
    if np.any(np.diff(row_ptr) < 0):
        raise ValueError("row_ptr must be nondecreasing")
    if len(col_idx) and (col_idx.min() < 0 or col_idx.max() >= n_cols):
        raise ValueError("column index out of range")
    for i in range(n_rows):
        cols = col_idx[row_ptr[i] : row_ptr[i + 1]]
        if len(cols) > 1 and np.any(np.diff(cols) <= 0):
            raise ValueError(f"columns of row {i} not strictly increasing")
    return CsrMatrix(n_rows, n_cols, row_ptr, col_idx, values)


def csr_from_coo(
    n_rows: int,
    n_cols: int,
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
) -> CsrMatrix:
    """Build a CSR matrix from coordinate triples.

    Entries are sorted by (row, column).  Duplicate coordinates are an error;
    callers that want summing semantics should combine entries themselves.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("coordinate arrays must have equal length")
    if len(rows):
        if rows.min() < 0 or rows.max() >= n_rows:
            raise ValueError("row index out of range")
        if cols.min() < 0 or cols.max() >= n_cols:
            raise ValueError("column index out of range")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows) > 1:
        same = (np.diff(rows) == 0) & (np.diff(cols) == 0)
        if np.any(same):
            k = int(np.argmax(same))
            raise ValueError(f"duplicate entry at ({rows[k]}, {cols[k]})")
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(row_ptr, rows + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    return CsrMatrix(n_rows, n_cols, row_ptr, cols.copy(), vals.copy())


def csr_from_dense(a: np.ndarray, keep_zeros: bool = False) -> CsrMatrix:
    """Compress a dense array, dropping exact zeros unless ``keep_zeros``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    if keep_zeros:
        rows, cols = np.indices(a.shape)
        rows, cols = rows.ravel(), cols.ravel()
    else:
        rows, cols = np.nonzero(a)
    return csr_from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])


def csr_identity(n: int) -> CsrMatrix:
    idx = np.arange(n + 1, dtype=np.int64)
    return CsrMatrix(n, n, idx, idx[:n].copy(), np.ones(n))


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``{0, ..., n-1}`` with both directions stored.

    ``forward[old] = new`` and ``inverse[new] = old``; the two arrays are
    checked to compose to the identity.
    """

    forward: np.ndarray
    inverse: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        fwd = np.ascontiguousarray(self.forward, dtype=np.int64)
        object.__setattr__(self, "forward", fwd)
        if self.inverse is None:
            inv = np.empty_like(fwd)
            inv[fwd] = np.arange(len(fwd), dtype=np.int64)
            object.__setattr__(self, "inverse", inv)
        else:
            inv = np.ascontiguousarray(self.inverse, dtype=np.int64)
            object.__setattr__(self, "inverse", inv)
        n = len(fwd)
        if len(self.inverse) != n:
            raise ValueError("forward and inverse must have equal length")
        if n and (np.bincount(fwd, minlength=n).max() != 1 or fwd.min() < 0 or fwd.max() >= n):
            raise ValueError("forward is not a bijection")
        if np.any(self.inverse[fwd] != np.arange(n)):
            raise ValueError("inverse does not invert forward")

    @property
    def n(self) -> int:
        return len(self.forward)

    @staticmethod
    def identity(n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return Permutation(idx, idx.copy())

    @staticmethod
    def from_order(order: np.ndarray) -> "Permutation":
        """Permutation that places old index ``order[k]`` at new position ``k``."""
        order = np.ascontiguousarray(order, dtype=np.int64)
        fwd = np.empty_like(order)
        fwd[order] = np.arange(len(order), dtype=np.int64)
        return Permutation(fwd, order)


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _spmv(row_ptr, col_idx, values, x, out):
    for i in range(len(out)):
        s = 0.0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            s += values[k] * x[col_idx[k]]
        out[i] = s


@njit(cache=True)
def _lower_solve(row_ptr, col_idx, values, b, x, unit_diag):
    # Forward substitution; returns -1 on success, else the failing row.
    n = len(b)
    for i in range(n):
        s = b[i]
        diag = 1.0
        seen = False
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            if j < i:
                s -= values[k] * x[j]
            elif j == i:
                diag = values[k]
                seen = True
        if unit_diag:
            x[i] = s
        else:
            if not seen or abs(diag) < 1e-300:
                return i
            x[i] = s / diag
    return -1


@njit(cache=True)
def _upper_solve(row_ptr, col_idx, values, b, x, unit_diag):
    n = len(b)
    for i in range(n - 1, -1, -1):
        s = b[i]
        diag = 1.0
        seen = False
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            if j > i:
                s -= values[k] * x[j]
            elif j == i:
                diag = values[k]
                seen = True
        if unit_diag:
            x[i] = s
        else:
            if not seen or abs(diag) < 1e-300:
                return i
            x[i] = s / diag
    return -1


@njit(cache=True)
def _vdot(a, b):
    s = 0.0
    for i in range(len(a)):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def _permute(row_ptr, col_idx, values, fwd, new_rp, new_ci, new_v):
    n = len(fwd)
    fill = new_rp[:-1].copy()
    for i in range(n):
        ni = fwd[i]
        for k in range(row_ptr[i], row_ptr[i + 1]):
            p = fill[ni]
            new_ci[p] = fwd[col_idx[k]]
            new_v[p] = values[k]
            fill[ni] += 1
    # restore sorted columns within each row
    for i in range(n):
        lo, hi = new_rp[i], new_rp[i + 1]
        if hi - lo > 1:
            order = np.argsort(new_ci[lo:hi])
            new_ci[lo:hi] = new_ci[lo:hi][order]
            new_v[lo:hi] = new_v[lo:hi][order]


@njit(cache=True)
def _gather_rows_count(row_ptr, col_idx, rows, colmap, counts):
    for r in range(len(rows)):
        i = rows[r]
        c = 0
        for k in range(row_ptr[i], row_ptr[i + 1]):
            if colmap[col_idx[k]] >= 0:
                c += 1
        counts[r] = c


@njit(cache=True)
def _gather_rows_fill(row_ptr, col_idx, values, rows, colmap, out_rp, out_ci, out_v, resort):
    for r in range(len(rows)):
        i = rows[r]
        p = out_rp[r]
        for k in range(row_ptr[i], row_ptr[i + 1]):
            m = colmap[col_idx[k]]
            if m >= 0:
                out_ci[p] = m
                out_v[p] = values[k]
                p += 1
        if resort:
            lo, hi = out_rp[r], out_rp[r + 1]
            if hi - lo > 1:
                order = np.argsort(out_ci[lo:hi])
                out_ci[lo:hi] = out_ci[lo:hi][order]
                out_v[lo:hi] = out_v[lo:hi][order]


@njit(cache=True)
def _spgemm_count(a_rp, a_ci, b_rp, b_ci, n_rows, n_cols, counts):
    marker = np.full(n_cols, -1, dtype=np.int64)
    for i in range(n_rows):
        c = 0
        for ka in range(a_rp[i], a_rp[i + 1]):
            k = a_ci[ka]
            for kb in range(b_rp[k], b_rp[k + 1]):
                j = b_ci[kb]
                if marker[j] != i:
                    marker[j] = i
                    c += 1
        counts[i] = c


@njit(cache=True)
def _spgemm_fill(a_rp, a_ci, a_v, b_rp, b_ci, b_v, n_rows, n_cols, out_rp, out_ci, out_v):
    marker = np.full(n_cols, -1, dtype=np.int64)
    acc = np.zeros(n_cols)
    for i in range(n_rows):
        p = out_rp[i]
        for ka in range(a_rp[i], a_rp[i + 1]):
            k = a_ci[ka]
            av = a_v[ka]
            for kb in range(b_rp[k], b_rp[k + 1]):
                j = b_ci[kb]
                if marker[j] != i:
                    marker[j] = i
                    acc[j] = av * b_v[kb]
                    out_ci[p] = j
                    p += 1
                else:
                    acc[j] += av * b_v[kb]
        lo, hi = out_rp[i], out_rp[i + 1]
        if hi - lo > 1:
            out_ci[lo:hi] = np.sort(out_ci[lo:hi])
        for k in range(lo, hi):
            out_v[k] = acc[out_ci[k]]


@njit(cache=True)
def _transpose(row_ptr, col_idx, values, n_rows, n_cols, out_rp, out_ci, out_v):
    fill = out_rp[:-1].copy()
    for i in range(n_rows):
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            p = fill[j]
            out_ci[p] = i
            out_v[p] = values[k]
            fill[j] += 1


# ---------------------------------------------------------------------------
# public operations


def spmv(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product ``a @ x``.

    Each output entry is accumulated left to right over the stored entries of
    its row, so the result is reproducible bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n_cols,):
        raise ValueError("vector length does not match matrix columns")
    out = np.empty(a.n_rows)
    _spmv(a.row_ptr, a.col_idx, a.values, x, out)
    return out


def tri_solve_lower(l: CsrMatrix, b: np.ndarray, unit_diag: bool = False) -> np.ndarray:
    """Forward substitution with a lower-triangular matrix.

    With ``unit_diag`` the stored pattern is strictly lower and the diagonal
    is taken as one.  Otherwise the diagonal must be stored and nonzero.
    """
    b = np.asarray(b, dtype=np.float64)
    if l.n_rows != l.n_cols or b.shape != (l.n_rows,):
        raise ValueError("shape mismatch in triangular solve")
    x = np.empty_like(b)
    bad = _lower_solve(l.row_ptr, l.col_idx, l.values, b, x, unit_diag)
    if bad >= 0:
        raise ZeroDivisionError(f"zero or missing diagonal at row {bad}")
    return x


def tri_solve_upper(u: CsrMatrix, b: np.ndarray, unit_diag: bool = False) -> np.ndarray:
    """Backward substitution with an upper-triangular matrix."""
    b = np.asarray(b, dtype=np.float64)
    if u.n_rows != u.n_cols or b.shape != (u.n_rows,):
        raise ValueError("shape mismatch in triangular solve")
    x = np.empty_like(b)
    bad = _upper_solve(u.row_ptr, u.col_idx, u.values, b, x, unit_diag)
    if bad >= 0:
        raise ZeroDivisionError(f"zero or missing diagonal at row {bad}")
    return x


def permute_symmetric(a: CsrMatrix, perm: Permutation) -> CsrMatrix:
    """Apply the same permutation to rows and columns: ``B[p(i), p(j)] = A[i, j]``."""
    if a.n_rows != a.n_cols or perm.n != a.n_rows:
        raise ValueError("permutation size does not match matrix")
    fwd = perm.forward
    new_rp = np.zeros(a.n_rows + 1, dtype=np.int64)
    new_rp[fwd + 1] = np.diff(a.row_ptr)
    np.cumsum(new_rp, out=new_rp)
    new_ci = np.empty(a.nnz, dtype=np.int64)
    new_v = np.empty(a.nnz)
    _permute(a.row_ptr, a.col_idx, a.values, fwd, new_rp, new_ci, new_v)
    return CsrMatrix(a.n_rows, a.n_cols, new_rp, new_ci, new_v)


def _gather(a: CsrMatrix, rows: np.ndarray, colmap: np.ndarray, n_sub_cols: int, resort: bool) -> CsrMatrix:
    counts = np.empty(len(rows), dtype=np.int64)
    _gather_rows_count(a.row_ptr, a.col_idx, rows, colmap, counts)
    out_rp = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum(counts, out=out_rp[1:])
    out_ci = np.empty(out_rp[-1], dtype=np.int64)
    out_v = np.empty(out_rp[-1])
    _gather_rows_fill(a.row_ptr, a.col_idx, a.values, rows, colmap, out_rp, out_ci, out_v, resort)
    return CsrMatrix(len(rows), n_sub_cols, out_rp, out_ci, out_v)


def extract_block(a: CsrMatrix, rows: np.ndarray, cols: np.ndarray) -> CsrMatrix:
    """Submatrix ``A[rows, cols]`` for sorted index sets.

    ``rows`` and ``cols`` must be strictly increasing; the result keeps the
    induced ordering.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    for name, idx, bound in (("rows", rows, a.n_rows), ("cols", cols, a.n_cols)):
        if len(idx) and (idx.min() < 0 or idx.max() >= bound):
            raise ValueError(f"{name} out of range")
        if len(idx) > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError(f"{name} must be strictly increasing")
    colmap = np.full(a.n_cols, -1, dtype=np.int64)
    colmap[cols] = np.arange(len(cols), dtype=np.int64)
    return _gather(a, rows, colmap, len(cols), resort=False)


def take_submatrix(a: CsrMatrix, rows: np.ndarray, cols: np.ndarray) -> CsrMatrix:
    """Like :func:`extract_block` but the index sets may be in any order.

    Used to build per-domain matrices whose local ordering interleaves the
    original indices; columns are re-sorted after the gather.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    colmap = np.full(a.n_cols, -1, dtype=np.int64)
    colmap[cols] = np.arange(len(cols), dtype=np.int64)
    return _gather(a, rows, colmap, len(cols), resort=True)


def sparse_matmul(a: CsrMatrix, b: CsrMatrix) -> CsrMatrix:
    """Sparse product ``a @ b`` with the exact structural pattern.

    Entries whose values cancel to zero are retained, so patterns compose
    predictably.
    """
    if a.n_cols != b.n_rows:
        raise ValueError("inner dimensions do not match")
    counts = np.empty(a.n_rows, dtype=np.int64)
    _spgemm_count(a.row_ptr, a.col_idx, b.row_ptr, b.col_idx, a.n_rows, b.n_cols, counts)
    out_rp = np.zeros(a.n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=out_rp[1:])
    out_ci = np.empty(out_rp[-1], dtype=np.int64)
    out_v = np.empty(out_rp[-1])
    _spgemm_fill(
        a.row_ptr, a.col_idx, a.values, b.row_ptr, b.col_idx, b.values,
        a.n_rows, b.n_cols, out_rp, out_ci, out_v,
    )
    return CsrMatrix(a.n_rows, b.n_cols, out_rp, out_ci, out_v)


def csr_transpose(a: CsrMatrix) -> CsrMatrix:
    out_rp = np.zeros(a.n_cols + 1, dtype=np.int64)
    if a.nnz:
        np.add.at(out_rp, a.col_idx + 1, 1)
    np.cumsum(out_rp, out=out_rp)
    out_ci = np.empty(a.nnz, dtype=np.int64)
    out_v = np.empty(a.nnz)
    _transpose(a.row_ptr, a.col_idx, a.values, a.n_rows, a.n_cols, out_rp, out_ci, out_v)
    return CsrMatrix(a.n_cols, a.n_rows, out_rp, out_ci, out_v)


def vdot(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product accumulated strictly left to right (reproducible)."""
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return _vdot(a, b)


def vnorm2(a: np.ndarray) -> float:
    """Euclidean norm via the fixed-order dot product."""
    return float(np.sqrt(_vdot(a, a)))
