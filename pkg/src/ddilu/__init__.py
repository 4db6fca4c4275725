"""Domain-decomposition ILU preconditioners for restarted GMRES.

The package splits a sparse matrix into domains, orders each domain
interior first, and builds one of three preconditioner families on top of
incomplete LU factorizations: independent block solves, an additive variant
with an interface Schur complement correction, and a multiplicative variant
with a Galerkin-style coarse space read off the factors.  A benchmark
driver (``ddilu-bench``) runs the standard grid problems end to end.
"""

from .bench import REPORT_SCHEMA, RunConfig, run, sweep, to_csv, to_json
from .factor import (
    DIAG_SAFEGUARD,
    FillRule,
    IluFactors,
    MiluVectors,
    PartialIluFactors,
    TwoLevelBlocks,
    extract_two_level_blocks,
    factorize,
    ilu0,
    iluk,
    ilut,
    milu0,
    partial_ilu,
)
from .krylov import KrylovConfig, SolveReport, fgmres, fixed_gmres, gmres
from .mmio import read_matrix_market, write_matrix_market
from .ordering import DomainLayout, classify_and_order, partition, rcm, row_block_owner
from .precond import (
    BjIluPrecond,
    RapIluPrecond,
    SchurIluPrecond,
    bj_setup,
    make_preconditioner,
    rap_matvec,
    rap_setup,
    schur_matvec,
    schur_setup,
)
from .problems import ProblemSpec, convdiff3d, default_rhs, poisson2d, poisson3d
from .sparse import (
    CsrMatrix,
    Permutation,
    csr_from_arrays,
    csr_from_coo,
    csr_from_dense,
    csr_identity,
    csr_transpose,
    extract_block,
    permute_symmetric,
    sparse_matmul,
    spmv,
    take_submatrix,
    tri_solve_lower,
    tri_solve_upper,
    vdot,
    vnorm2,
)

__version__ = "0.1.0"
