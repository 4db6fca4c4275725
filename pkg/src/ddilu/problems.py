"""Deterministic model-problem generators.

Finite-difference stencils on regular grids with Dirichlet boundaries folded
in, unit mesh scaling (the h^2 factor is absorbed, so the Laplacian diagonal
is 4 in 2D and 6 in 3D).  Nodes are numbered x fastest, then y, then z,
which is the ordering the grid-hint partitioner assumes.  The right-hand
side convention is b = A*1 so the exact solution of every generated system
is the all-ones vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mmio import read_matrix_market
from .sparse import CsrMatrix, csr_from_arrays, spmv

__all__ = [
    "ProblemSpec",
    "poisson2d",
    "poisson3d",
    "convdiff3d",
    "default_rhs",
]


def _stencil_csr(dims: tuple[int, ...], axis_coeffs, diag: float) -> CsrMatrix:
    """Assemble a grid stencil matrix.

    ``axis_coeffs[d] = (minus, plus)`` gives the coefficients of the
    neighbors at -1 and +1 along axis ``d``; boundary neighbors are simply
    absent.  Entries are produced in column order directly.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"grid dimensions must be at least 1, got {dims}")
    n = int(np.prod(dims))
    idx = np.arange(n)
    strides = np.cumprod((1,) + dims[:-1])
    coord = [(idx // strides[d]) % dims[d] for d in range(len(dims))]

    # neighbor list sorted by column offset: -z, -y, -x, diag, +x, +y, +z
    below = [(-strides[d], coord[d] > 0, axis_coeffs[d][0])
             for d in reversed(range(len(dims)))]
    above = [(strides[d], coord[d] < dims[d] - 1, axis_coeffs[d][1])
             for d in range(len(dims))]

    counts = np.ones(n, dtype=np.int64)
    for _, mask, _ in below + above:
        counts += mask
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    col_idx = np.empty(row_ptr[-1], dtype=np.int64)
    values = np.empty(row_ptr[-1])
    pos = row_ptr[:-1].copy()
    for off, mask, coef in below:
        r = idx[mask]
        col_idx[pos[r]] = r + off
        values[pos[r]] = coef
        pos[r] += 1
    col_idx[pos] = idx
    values[pos] = diag
    pos += 1
    for off, mask, coef in above:
        r = idx[mask]
        col_idx[pos[r]] = r + off
        values[pos[r]] = coef
        pos[r] += 1
    return csr_from_arrays(n, n, row_ptr, col_idx, values)


def poisson2d(nx: int, ny: int) -> CsrMatrix:
    """Five-point Laplacian on an nx-by-ny grid."""
    return _stencil_csr((nx, ny), [(-1.0, -1.0)] * 2, 4.0)


def poisson3d(nx: int, ny: int, nz: int) -> CsrMatrix:
    """Seven-point Laplacian on an nx-by-ny-by-nz grid."""
    return _stencil_csr((nx, ny, nz), [(-1.0, -1.0)] * 3, 6.0)


def convdiff3d(nx: int, ny: int, nz: int,
               velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> CsrMatrix:
    """Convection-diffusion stencil: seven-point Laplacian plus centered
    differences of the convection term.

    Along axis d with velocity component b_d and mesh width
    h_d = 1/(n_d + 1), the neighbor coefficients become -1 - b_d*h_d/2
    (upstream) and -1 + b_d*h_d/2 (downstream), so the matrix is
    nonsymmetric whenever the velocity is nonzero and transposing it flips
    the velocity sign.
    """
    dims = (nx, ny, nz)
    coeffs = []
    for d in range(3):
        shift = 0.5 * float(velocity[d]) / (dims[d] + 1)
        coeffs.append((-1.0 - shift, -1.0 + shift))
    return _stencil_csr(dims, coeffs, 6.0)


def default_rhs(a: CsrMatrix) -> np.ndarray:
    """Right-hand side with exact solution all ones."""
    return spmv(a, np.ones(a.n_cols))


@dataclass(frozen=True)
class ProblemSpec:
    """Recipe for a benchmark matrix.

    ``kind`` selects a generator or a Matrix Market file; ``dims`` are the
    grid dimensions for generated problems, ``velocity`` the convection
    coefficients, ``path`` the file location.  ``build`` returns the matrix
    together with the grid hint the partitioner can use (``None`` for
    files).
    """

    kind: str
    dims: tuple[int, ...] = ()
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    path: str = ""

    _KINDS = ("poisson2d", "poisson3d", "convdiff3d", "file")
    _NDIMS = {"poisson2d": 2, "poisson3d": 3, "convdiff3d": 3}

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "file":
            if not self.path:
                raise ValueError("file problems need a path")
        else:
            want = self._NDIMS[self.kind]
            if len(self.dims) != want:
                raise ValueError(
                    f"{self.kind} needs {want} grid dimensions, got {self.dims}"
                )
            if any(d < 1 for d in self.dims):
                raise ValueError(f"grid dimensions must be at least 1, got {self.dims}")

    def build(self) -> tuple[CsrMatrix, tuple[int, ...] | None]:
        if self.kind == "poisson2d":
            return poisson2d(*self.dims), self.dims
        if self.kind == "poisson3d":
            return poisson3d(*self.dims), self.dims
        if self.kind == "convdiff3d":
            return convdiff3d(*self.dims, self.velocity), self.dims
        return read_matrix_market(self.path), None

    def label(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        return f"{self.kind}:{'x'.join(str(d) for d in self.dims)}"
