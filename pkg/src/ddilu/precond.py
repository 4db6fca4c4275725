"""Domain-decomposition preconditioners built on incomplete factorizations.

Three families, all applied through ``.apply(r)``:

* Block Jacobi (``bj_setup``): independent ILU solves on the per-domain
  blocks.  The l1 variant adds each row's off-domain absolute sum to the
  diagonal before factorizing, which restores a convergence guarantee for
  symmetric problems at the price of a weaker block solve.

* Additive Schur (``schur_setup``): a partial factorization per domain
  exposes an approximate interface Schur complement; each application solves
  the reduced interface system with a few inner GMRES iterations and back
  substitutes into the interiors.  Interface coupling between domains is
  taken verbatim from the matrix.

* Multiplicative coarse correction (``rap_setup``): one block-Jacobi
  smoothing pass followed by a Galerkin-style correction on the interface
  space.  Interpolation and restriction come from the blocks of a full
  per-domain factorization, with modified ILU by default so that constant
  vectors are preserved by the coarse operator; the smoother keeps its own
  plain ILU(0) factors.  Restriction, interpolation, and the coarse operator
  are never assembled: each coarse matvec costs two triangular sweeps and
  one product with the full matrix.

Every domain's local system is ordered interior first (reverse
Cuthill-McKee within the interior block), exterior last, matching the
partial factorizations.  With one domain there is no interface and all
three preconditioners collapse to the same ILU solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .factor import (
    FillRule,
    IluFactors,
    MiluVectors,
    PartialIluFactors,
    TwoLevelBlocks,
    extract_two_level_blocks,
    factorize,
    ilu0,
    milu0,
    partial_ilu,
)
from .krylov import fixed_gmres
from .ordering import DomainLayout, rcm
from .sparse import (
    CsrMatrix,
    Permutation,
    csr_from_coo,
    extract_block,
    permute_symmetric,
    spmv,
    take_submatrix,
    tri_solve_lower,
    tri_solve_upper,
)

__all__ = [
    "BjIluPrecond",
    "SchurIluPrecond",
    "RapIluPrecond",
    "bj_setup",
    "schur_setup",
    "rap_setup",
    "schur_matvec",
    "rap_matvec",
    "make_preconditioner",
    "PRECONDITIONER_NAMES",
]

PRECONDITIONER_NAMES = ("bj", "l1bj", "schur", "rap", "rap-milu", "none")


# ---------------------------------------------------------------------------
# shared per-domain plumbing


@njit(cache=True)
def _l1_row_shifts(rp, ci, vals, owner, rows, dom, out):
    for k in range(len(rows)):
        r = rows[k]
        s = 0.0
        for t in range(rp[r], rp[r + 1]):
            if owner[ci[t]] != dom:
                s += abs(vals[t])
        out[k] = s


@njit(cache=True)
def _diag_slots(rp, ci, slots):
    for i in range(len(slots)):
        slots[i] = -1
        for t in range(rp[i], rp[i + 1]):
            if ci[t] == i:
                slots[i] = t
                break


def _add_to_diagonal(m: CsrMatrix, shifts: np.ndarray) -> CsrMatrix:
    """Return ``m`` with ``shifts`` added to the diagonal, inserting missing
    diagonal entries if needed."""
    slots = np.empty(m.n_rows, dtype=np.int64)
    _diag_slots(m.row_ptr, m.col_idx, slots)
    missing = np.where((slots < 0) & (shifts != 0.0))[0]
    if len(missing) == 0:
        vals = m.values.copy()
        have = slots >= 0
        vals[slots[have]] += shifts[have]
        return m.with_values(vals)
    rows = np.repeat(np.arange(m.n_rows), np.diff(m.row_ptr))
    rows = np.concatenate([rows, missing])
    cols = np.concatenate([m.col_idx, missing])
    vals = np.concatenate([m.values, np.zeros(len(missing))])
    full = csr_from_coo(m.n_rows, m.n_cols, rows, cols, vals)
    slots = np.empty(full.n_rows, dtype=np.int64)
    _diag_slots(full.row_ptr, full.col_idx, slots)
    newvals = full.values.copy()
    newvals[slots] += shifts
    return full.with_values(newvals)


@dataclass
class _DomainOrdering:
    """Global node lists of one domain in its local order."""

    interior_nodes: np.ndarray  # interior nodes, reverse Cuthill-McKee order
    exterior_nodes: np.ndarray  # exterior nodes, original order
    nodes: np.ndarray           # concatenation of the two


def _domain_orderings(a: CsrMatrix, layout: DomainLayout, use_rcm: bool) -> list[_DomainOrdering]:
    out = []
    for d in range(layout.p):
        ints = layout.interior_of[d]
        if use_rcm and len(ints) > 1:
            block = extract_block(a, ints, ints)
            perm = rcm(block)
            ints = ints[perm.inverse]
        exts = layout.exterior_of[d]
        out.append(_DomainOrdering(ints, exts, np.concatenate([ints, exts])))
    return out


def _local_matrix(a: CsrMatrix, dom: _DomainOrdering) -> CsrMatrix:
    return take_submatrix(a, dom.nodes, dom.nodes)


@njit(cache=True)
def _keep_cross_block(rp, ci, block_of, keep):
    for i in range(len(rp) - 1):
        bi = block_of[i]
        for t in range(rp[i], rp[i + 1]):
            keep[t] = block_of[ci[t]] != bi


def _strip_diagonal_blocks(m: CsrMatrix, block_of: np.ndarray) -> CsrMatrix:
    """Drop entries whose row and column fall in the same block."""
    keep = np.empty(m.nnz, dtype=np.bool_)
    _keep_cross_block(m.row_ptr, m.col_idx, block_of, keep)
    idx = np.repeat(np.arange(m.n_rows), np.diff(m.row_ptr))
    counts = np.bincount(idx[keep], minlength=m.n_rows)
    rp = np.zeros(m.n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=rp[1:])
    return CsrMatrix(m.n_rows, m.n_cols, rp, m.col_idx[keep], m.values[keep])


# ---------------------------------------------------------------------------
# block Jacobi


@dataclass
class BjIluPrecond:
    """One ILU solve per domain; domains do not communicate."""

    layout: DomainLayout
    domains: list[_DomainOrdering]
    factors: list[IluFactors]
    rule: FillRule
    l1: bool

    def apply(self, r: np.ndarray) -> np.ndarray:
        z = np.empty_like(r)
        for dom, f in zip(self.domains, self.factors):
            z[dom.nodes] = f.solve(r[dom.nodes])
        return z


def bj_setup(
    a: CsrMatrix,
    layout: DomainLayout,
    rule: FillRule = FillRule("ilu0"),
    l1: bool = False,
    use_rcm: bool = True,
) -> BjIluPrecond:
    """Factor each domain block; with ``l1``, shift diagonals by the
    off-domain absolute row sums first."""
    domains = _domain_orderings(a, layout, use_rcm)
    factors = []
    for d, dom in enumerate(domains):
        local = _local_matrix(a, dom)
        if l1:
            shifts = np.empty(len(dom.nodes))
            _l1_row_shifts(
                a.row_ptr, a.col_idx, a.values, layout.owner, dom.nodes, d, shifts
            )
            local = _add_to_diagonal(local, shifts)
        factors.append(factorize(local, rule))
    return BjIluPrecond(layout, domains, factors, rule, l1)


# ---------------------------------------------------------------------------
# additive Schur


@dataclass
class SchurIluPrecond:
    """Interface Schur complement solve between interior sweeps.

    Each application runs ``inner_iters`` GMRES steps on the reduced
    interface system, whose diagonal blocks are preconditioned by the
    per-domain Schur factors; the off-diagonal interface coupling
    ``coupling`` is the exterior-exterior part of A with the per-domain
    blocks removed.
    """

    layout: DomainLayout
    domains: list[_DomainOrdering]
    partial: list[PartialIluFactors]
    coupling: CsrMatrix
    inner_iters: int
    rule: FillRule

    def _schur_solve(self, t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        starts = self.layout.exterior_starts
        for d, pf in enumerate(self.partial):
            sl = slice(starts[d], starts[d + 1])
            out[sl] = pf.schur.solve(t[sl])
        return out

    def reduced_matvec(self, y: np.ndarray) -> np.ndarray:
        """Matvec of the preconditioned interface system: ``y + S~^-1 (E_off y)``."""
        return y + self._schur_solve(spmv(self.coupling, y))

    def apply(self, r: np.ndarray) -> np.ndarray:
        starts = self.layout.exterior_starts
        fps = []
        ghat = np.empty(self.layout.n_exterior)
        for d, (dom, pf) in enumerate(zip(self.domains, self.partial)):
            fp = tri_solve_lower(pf.interior.lower, r[dom.interior_nodes], unit_diag=True)
            fps.append(fp)
            ghat[starts[d] : starts[d + 1]] = r[dom.exterior_nodes] - spmv(pf.w_block, fp)
        y = fixed_gmres(self.reduced_matvec, self._schur_solve(ghat), self.inner_iters)
        z = np.empty_like(r)
        for d, (dom, pf) in enumerate(zip(self.domains, self.partial)):
            yd = y[starts[d] : starts[d + 1]]
            z[dom.interior_nodes] = tri_solve_upper(
                pf.interior.upper, fps[d] - spmv(pf.z_block, yd)
            )
            z[dom.exterior_nodes] = yd
        return z


def schur_setup(
    a: CsrMatrix,
    layout: DomainLayout,
    rule: FillRule = FillRule("ilu0"),
    inner_iters: int = 3,
    schur_drop_tol: float = 0.0,
    use_rcm: bool = True,
) -> SchurIluPrecond:
    """Partial factorization per domain plus the interface coupling blocks."""
    domains = _domain_orderings(a, layout, use_rcm)
    partial = []
    for dom in domains:
        local = _local_matrix(a, dom)
        partial.append(
            partial_ilu(local, len(dom.interior_nodes), rule,
                        schur_drop_tol=schur_drop_tol, factor_schur=True)
        )
    ext_all = np.concatenate([dom.exterior_nodes for dom in domains]) \
        if layout.n_exterior else np.empty(0, dtype=np.int64)
    ext_block = take_submatrix(a, ext_all, ext_all)
    block_of = np.repeat(np.arange(layout.p), np.diff(layout.exterior_starts))
    coupling = _strip_diagonal_blocks(ext_block, block_of)
    return SchurIluPrecond(layout, domains, partial, coupling, inner_iters, rule)


def schur_matvec(m: SchurIluPrecond, y: np.ndarray) -> np.ndarray:
    """Module-level alias for :meth:`SchurIluPrecond.reduced_matvec`."""
    return m.reduced_matvec(y)


# ---------------------------------------------------------------------------
# multiplicative coarse correction


@dataclass
class RapIluPrecond:
    """Block-Jacobi smoothing plus an interface coarse correction.

    ``smoother`` holds plain ILU(0) factors of each full domain block.
    ``blocks`` holds the interpolation/restriction ingredients (L_B, U_B, W,
    Z, and the interface factors) extracted from a second factorization,
    modified ILU(0) when ``modified`` is set.  ``a_perm`` is the matrix in
    the global interior-first ordering used by every coarse matvec.
    """

    layout: DomainLayout
    domains: list[_DomainOrdering]
    smoother: list[IluFactors]
    blocks: list[TwoLevelBlocks]
    a_perm: CsrMatrix
    perm: Permutation
    inner_iters: int
    modified: bool

    def _interior_slice(self, d: int) -> slice:
        s = self.layout.interior_starts
        return slice(s[d], s[d + 1])

    def _exterior_slice(self, d: int) -> slice:
        s = self.layout.exterior_starts
        n1 = self.layout.n_interior
        return slice(n1 + s[d], n1 + s[d + 1])

    def _coarse_slice(self, d: int) -> slice:
        s = self.layout.exterior_starts
        return slice(s[d], s[d + 1])

    def interpolate(self, v: np.ndarray) -> np.ndarray:
        """Prolongate an interface vector: ``P v = [-U_B^-1 (Z v); v]``."""
        out = np.empty(self.layout.n)
        for d, blk in enumerate(self.blocks):
            vd = v[self._coarse_slice(d)]
            out[self._interior_slice(d)] = -tri_solve_upper(
                blk.interior.upper, spmv(blk.z_tilde, vd)
            )
            out[self._exterior_slice(d)] = vd
        return out

    def restrict(self, t: np.ndarray) -> np.ndarray:
        """Restrict a fine vector: ``R t = t_ext - W (L_B^-1 t_int)``."""
        out = np.empty(self.layout.n_exterior)
        for d, blk in enumerate(self.blocks):
            s = tri_solve_lower(blk.interior.lower, t[self._interior_slice(d)],
                                unit_diag=True)
            out[self._coarse_slice(d)] = t[self._exterior_slice(d)] - spmv(blk.w_tilde, s)
        return out

    def coarse_matvec(self, v: np.ndarray) -> np.ndarray:
        """Galerkin product ``R (A (P v))``: two triangular sweeps and one spmv."""
        return self.restrict(spmv(self.a_perm, self.interpolate(v)))

    def _coarse_precond(self, t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        for d, blk in enumerate(self.blocks):
            sl = self._coarse_slice(d)
            out[sl] = blk.schur.solve(t[sl])
        return out

    def apply(self, r: np.ndarray) -> np.ndarray:
        b = r[self.perm.inverse]
        xhat = np.empty(self.layout.n)
        for d, f in enumerate(self.smoother):
            isl = self._interior_slice(d)
            esl = self._exterior_slice(d)
            local = np.concatenate([b[isl], b[esl]])
            sol = f.solve(local)
            n1 = isl.stop - isl.start
            xhat[isl] = sol[:n1]
            xhat[esl] = sol[n1:]
        res = b - spmv(self.a_perm, xhat)
        v = fixed_gmres(self.coarse_matvec, self.restrict(res), self.inner_iters,
                        apply_m=self._coarse_precond)
        x = xhat + self.interpolate(v) if len(v) else xhat
        z = np.empty_like(r)
        z[self.perm.inverse] = x
        return z


def rap_setup(
    a: CsrMatrix,
    layout: DomainLayout,
    modified: bool = True,
    vecs: MiluVectors | None = None,
    inner_iters: int = 3,
    use_rcm: bool = True,
) -> RapIluPrecond:
    """Build smoother and coarse-construction factors for each domain.

    With ``modified`` the coarse ingredients come from a modified ILU(0)
    whose compensation targets ``vecs`` (constant vectors by default, given
    in the layout's interior/exterior ordering), stored separately from the
    smoother's plain ILU(0); without it both roles share one factorization.
    """
    domains = _domain_orderings(a, layout, use_rcm)
    smoother = []
    blocks = []
    for d, dom in enumerate(domains):
        local = _local_matrix(a, dom)
        n1 = len(dom.interior_nodes)
        plain = ilu0(local)
        smoother.append(plain)
        if modified:
            if vecs is None:
                local_vecs = MiluVectors.ones(len(dom.nodes), len(dom.exterior_nodes))
            else:
                isl = slice(layout.interior_starts[d], layout.interior_starts[d + 1])
                esl = slice(layout.exterior_starts[d], layout.exterior_starts[d + 1])
                ints = layout.interior_of[d]
                lookup = {node: k for k, node in enumerate(ints)}
                reorder = np.array(
                    [lookup[node] for node in dom.interior_nodes], dtype=np.int64
                )
                local_vecs = MiluVectors(
                    y=np.asarray(vecs.y)[isl][reorder],
                    z=np.asarray(vecs.z)[esl],
                    w=np.asarray(vecs.w)[isl][reorder],
                )
            coarse = milu0(local, local_vecs)
        else:
            coarse = plain
        blocks.append(extract_two_level_blocks(coarse, n1))
    order = np.concatenate(
        [dom.interior_nodes for dom in domains] + [dom.exterior_nodes for dom in domains]
    )
    perm = Permutation.from_order(order)
    a_perm = permute_symmetric(a, perm)
    return RapIluPrecond(
        layout, domains, smoother, blocks, a_perm, perm, inner_iters, modified
    )


def rap_matvec(m: RapIluPrecond, v: np.ndarray) -> np.ndarray:
    """Module-level alias for :meth:`RapIluPrecond.coarse_matvec`."""
    return m.coarse_matvec(v)


# ---------------------------------------------------------------------------
# factory


def make_preconditioner(
    name: str,
    a: CsrMatrix,
    layout: DomainLayout,
    rule: FillRule = FillRule("ilu0"),
    inner_iters: int = 3,
):
    """Build a preconditioner by CLI name; returns ``None`` for ``"none"``.

    The coarse-correction variants always use level-0 factors for their
    smoother and interpolation blocks regardless of ``rule``.
    """
    if name == "none":
        return None
    if name == "bj":
        return bj_setup(a, layout, rule)
    if name == "l1bj":
        return bj_setup(a, layout, rule, l1=True)
    if name == "schur":
        return schur_setup(a, layout, rule, inner_iters=inner_iters)
    if name == "rap":
        return rap_setup(a, layout, modified=False, inner_iters=inner_iters)
    if name == "rap-milu":
        return rap_setup(a, layout, modified=True, inner_iters=inner_iters)
    raise ValueError(f"unknown preconditioner {name!r}")
