"""Matrix Market coordinate files (read and write).

Only ``coordinate real`` files with ``general`` or ``symmetric`` symmetry are
accepted.  Symmetric files store one triangle on disk and are expanded to the
full pattern on read.  Indices are 1-based on disk, 0-based in memory.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.io
import scipy.sparse

from .sparse import CsrMatrix, csr_from_coo, csr_transpose

__all__ = ["read_matrix_market", "write_matrix_market"]


def read_matrix_market(path: str | os.PathLike) -> CsrMatrix:
    """Read a coordinate real Matrix Market file into a :class:`CsrMatrix`.

    Raises ``ValueError`` for malformed headers, non-real fields, array
    (dense) files, unsupported symmetries, out-of-range indices, and
    duplicate entries; missing files raise ``FileNotFoundError``.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        rows, cols, _entries, fmt, field, symmetry = scipy.io.mminfo(path)
    except Exception as exc:  # scipy raises ValueError on bad headers
        raise ValueError(f"malformed Matrix Market header in {path}: {exc}") from exc
    if fmt != "coordinate":
        raise ValueError(f"{path}: only coordinate format is supported, got {fmt!r}")
    if field not in ("real", "integer"):
        raise ValueError(f"{path}: only real-valued matrices are supported, got {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise ValueError(f"{path}: unsupported symmetry {symmetry!r}")
    try:
        coo = scipy.io.mmread(path)
    except Exception as exc:
        raise ValueError(f"failed to read {path}: {exc}") from exc
    coo = coo.tocoo()
    try:
        return csr_from_coo(rows, cols, coo.row, coo.col, coo.data)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def write_matrix_market(path: str | os.PathLike, a: CsrMatrix, symmetric: bool = False) -> None:
    """Write ``a`` in coordinate real format.

    With ``symmetric`` the matrix must be numerically symmetric; only the
    lower triangle is stored and the header says so.
    """
    if symmetric:
        if a.n_rows != a.n_cols:
            raise ValueError("symmetric write requires a square matrix")
        t = csr_transpose(a)
        same = (
            np.array_equal(t.row_ptr, a.row_ptr)
            and np.array_equal(t.col_idx, a.col_idx)
            and np.allclose(t.values, a.values, rtol=0.0, atol=0.0)
        )
        if not same:
            raise ValueError("matrix is not symmetric; refusing symmetric header")
    m = scipy.sparse.csr_matrix(
        (a.values, a.col_idx, a.row_ptr), shape=(a.n_rows, a.n_cols)
    )
    scipy.io.mmwrite(
        path, m, field="real", symmetry="symmetric" if symmetric else "general", precision=17
    )
