"""Incomplete LU factorizations.

All variants share one row-wise elimination scheme (the IKJ ordering): row i
is loaded into a sparse accumulator, pivots k < i are applied in increasing
column order, and the surviving entries become row i of the factors.  The
variants differ only in which positions survive:

* ``ilu0``     keeps the pattern of A (plus the diagonal),
* ``iluk``     keeps positions whose fill level does not exceed k,
* ``ilut``     drops by magnitude and caps the number of entries per row,
* ``milu0``    is ``ilu0`` with the dropped mass of each row moved onto the
  diagonal so that ``(L U) y = A y - w`` holds exactly for a chosen vector
  ``y`` (by default the vector of ones with ``w = 0``, which preserves row
  sums).

``partial_ilu`` stops the elimination at a given row boundary: rows past the
boundary are only eliminated against pivots before it.  For a matrix in
interior/exterior block form this produces the factors of the interior
block, the coupling blocks ``W ~= E U_B^-1`` and ``Z ~= L_B^-1 F``, and an
approximate Schur complement ``S~ = C - W Z`` of the exterior block.

Small pivots are safeguarded everywhere: a diagonal entry with magnitude
below ``delta * max|row of A|`` is replaced by that bound, keeping its sign
(+ if zero).  There is no pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .sparse import CsrMatrix, extract_block, spmv, tri_solve_lower, tri_solve_upper

__all__ = [
    "FillRule",
    "IluFactors",
    "MiluVectors",
    "PartialIluFactors",
    "TwoLevelBlocks",
    "ilu0",
    "iluk",
    "ilut",
    "milu0",
    "factorize",
    "partial_ilu",
    "extract_two_level_blocks",
    "DIAG_SAFEGUARD",
]

DIAG_SAFEGUARD = 1e-6


# ---------------------------------------------------------------------------
# configuration and result types


@dataclass(frozen=True)
class FillRule:
    """Which entries an incomplete factorization keeps.

    ``kind`` is one of ``"ilu0"``, ``"iluk"``, ``"ilut"``.  ``level`` applies
    to iluk; ``tau`` and ``maxfill`` to ilut (drop tolerance relative to the
    2-norm of the row of A, and the per-row entry cap for each of the L and
    U parts).
    """

    kind: str
    level: int = 0
    tau: float = 0.0
    maxfill: int = 0

    def __post_init__(self):
        if self.kind not in ("ilu0", "iluk", "ilut"):
            raise ValueError(f"unknown fill rule {self.kind!r}")
        if self.kind == "iluk" and self.level < 0:
            raise ValueError("iluk level must be nonnegative")
        if self.kind == "ilut":
            if self.tau < 0:
                raise ValueError("ilut tau must be nonnegative")
            if self.maxfill < 1:
                raise ValueError("ilut maxfill must be at least 1")

    @staticmethod
    def parse(text: str) -> "FillRule":
        """Parse ``ilu0``, ``iluk:K``, or ``ilut:TAU,MAXFILL``."""
        head, _, rest = text.partition(":")
        if head == "ilu0" and not rest:
            return FillRule("ilu0")
        if head == "iluk" and rest:
            return FillRule("iluk", level=int(rest))
        if head == "ilut" and rest:
            tau_s, _, fill_s = rest.partition(",")
            if not fill_s:
                raise ValueError(f"ilut needs tau and maxfill, got {text!r}")
            return FillRule("ilut", tau=float(tau_s), maxfill=int(fill_s))
        raise ValueError(f"cannot parse fill rule {text!r}")

    def __str__(self) -> str:
        if self.kind == "iluk":
            return f"iluk:{self.level}"
        if self.kind == "ilut":
            return f"ilut:{self.tau:g},{self.maxfill}"
        return "ilu0"


@dataclass(frozen=True)
class IluFactors:
    """Unit lower factor (diagonal implicit) and upper factor (diagonal stored).

    ``kind`` records how the factors were built ("ilu0", "milu0", "iluk:K",
    or "ilut:TAU,MAXFILL").
    """

    lower: CsrMatrix
    upper: CsrMatrix
    kind: str = "ilu0"

    @property
    def n(self) -> int:
        return self.lower.n_rows

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Apply ``(L U)^-1`` by two triangular sweeps."""
        return tri_solve_upper(self.upper, tri_solve_lower(self.lower, b, unit_diag=True))

    def lu_matvec(self, y: np.ndarray) -> np.ndarray:
        """Product ``(L U) y`` (for residual checks against A)."""
        t = spmv(self.upper, y)
        return t + spmv(self.lower, t)


@dataclass(frozen=True)
class MiluVectors:
    """Target vectors of the modified factorization.

    The compensation enforces ``(L U) u = A u - w_full`` row by row, where
    ``u`` is the concatenation of ``y`` (interior part) and ``z`` (exterior
    part) and ``w_full`` extends ``w`` with zeros on the exterior rows.  For
    an unsplit matrix ``z`` is empty and ``y``/``w`` span all rows.
    """

    y: np.ndarray
    z: np.ndarray
    w: np.ndarray

    @staticmethod
    def ones(n: int, n_exterior: int = 0) -> "MiluVectors":
        return MiluVectors(
            y=np.ones(n - n_exterior),
            z=np.ones(n_exterior),
            w=np.zeros(n - n_exterior),
        )

    def full_target(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.y, dtype=np.float64),
                               np.asarray(self.z, dtype=np.float64)])

    def full_w(self, n: int) -> np.ndarray:
        w = np.asarray(self.w, dtype=np.float64)
        return np.concatenate([w, np.zeros(n - len(w))])


@dataclass(frozen=True)
class PartialIluFactors:
    """Result of stopping the elimination at the interior/exterior boundary.

    ``interior`` holds L_B, U_B.  ``w_block`` is the exterior-row part of the
    lower factor (approximates ``E U_B^-1``); ``z_block`` the exterior-column
    part of the upper factor (approximates ``L_B^-1 F``).  ``s_tilde`` is the
    approximate Schur complement ``C - W Z`` under the fill rule, and
    ``schur`` its factorization when requested.
    """

    interior: IluFactors
    w_block: CsrMatrix
    z_block: CsrMatrix
    s_tilde: CsrMatrix
    schur: IluFactors | None
    n_interior: int


@dataclass(frozen=True)
class TwoLevelBlocks:
    """Block view of a full factorization of an interior/exterior-ordered matrix."""

    interior: IluFactors
    w_tilde: CsrMatrix
    z_tilde: CsrMatrix
    schur: IluFactors


# ---------------------------------------------------------------------------
# pattern construction (level-0: pattern of A plus diagonal)


@njit(cache=True)
def _split_counts(n, a_rp, a_ci, n_elim, pc, kc):
    for i in range(n):
        lim = i if i < n_elim else n_elim
        npv = 0
        nk = 0
        has_diag = False
        for s in range(a_rp[i], a_rp[i + 1]):
            j = a_ci[s]
            if j < lim:
                npv += 1
            else:
                nk += 1
                if j == i:
                    has_diag = True
        if not has_diag:
            nk += 1
        pc[i] = npv
        kc[i] = nk


@njit(cache=True)
def _split_fill(n, a_rp, a_ci, a_v, n_elim, p_rp, p_ci, p_v, k_rp, k_ci, k_v):
    for i in range(n):
        lim = i if i < n_elim else n_elim
        pp = p_rp[i]
        kp = k_rp[i]
        placed = False
        for s in range(a_rp[i], a_rp[i + 1]):
            j = a_ci[s]
            if j < lim:
                p_ci[pp] = j
                p_v[pp] = a_v[s]
                pp += 1
            else:
                if not placed and j > i:
                    k_ci[kp] = i
                    k_v[kp] = 0.0
                    kp += 1
                    placed = True
                if j == i:
                    placed = True
                k_ci[kp] = j
                k_v[kp] = a_v[s]
                kp += 1
        if not placed:
            k_ci[kp] = i
            k_v[kp] = 0.0
            kp += 1


def _level0_split(a: CsrMatrix, n_elim: int):
    n = a.n_rows
    pc = np.empty(n, dtype=np.int64)
    kc = np.empty(n, dtype=np.int64)
    _split_counts(n, a.row_ptr, a.col_idx, n_elim, pc, kc)
    p_rp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(pc, out=p_rp[1:])
    k_rp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(kc, out=k_rp[1:])
    p_ci = np.empty(p_rp[-1], dtype=np.int64)
    p_v = np.empty(p_rp[-1])
    k_ci = np.empty(k_rp[-1], dtype=np.int64)
    k_v = np.empty(k_rp[-1])
    _split_fill(n, a.row_ptr, a.col_idx, a.values, n_elim, p_rp, p_ci, p_v, k_rp, k_ci, k_v)
    return p_rp, p_ci, p_v, k_rp, k_ci, k_v


# ---------------------------------------------------------------------------
# symbolic phase for iluk


@njit(cache=True)
def _iluk_symbolic(n, a_rp, a_ci, n_elim, klevel):
    cap_p = a_rp[-1] + 16
    cap_k = a_rp[-1] + n + 16
    p_rp = np.zeros(n + 1, dtype=np.int64)
    p_ci = np.empty(cap_p, dtype=np.int64)
    k_rp = np.zeros(n + 1, dtype=np.int64)
    k_ci = np.empty(cap_k, dtype=np.int64)
    k_lev = np.empty(cap_k, dtype=np.int64)
    nxt = np.empty(n + 1, dtype=np.int64)
    lev = np.empty(n, dtype=np.int64)
    for i in range(n):
        lim = i if i < n_elim else n_elim
        # load row i of A plus the diagonal into a sorted linked list
        head = n
        last = -1
        placed = False
        for s in range(a_rp[i], a_rp[i + 1]):
            j = a_ci[s]
            if not placed and j >= i:
                if j > i:
                    if last < 0:
                        head = i
                    else:
                        nxt[last] = i
                    nxt[i] = n
                    lev[i] = 0
                    last = i
                placed = True
            if last < 0:
                head = j
            else:
                nxt[last] = j
            nxt[j] = n
            lev[j] = 0
            last = j
        if not placed:
            if last < 0:
                head = i
            else:
                nxt[last] = i
            nxt[i] = n
            lev[i] = 0
        # eliminate: merge the upper rows of all pivots before the boundary
        k = head
        while k < lim:
            lk = lev[k]
            cursor = k
            for t in range(k_rp[k] + 1, k_rp[k + 1]):
                j = k_ci[t]
                nl = lk + k_lev[t] + 1
                if nl <= klevel:
                    while nxt[cursor] <= j:
                        cursor = nxt[cursor]
                    if cursor == j:
                        if nl < lev[j]:
                            lev[j] = nl
                    else:
                        nxt[j] = nxt[cursor]
                        nxt[cursor] = j
                        lev[j] = nl
            k = nxt[k]
        # count and emit
        cp = 0
        ck = 0
        j = head
        while j < n:
            if j < lim:
                cp += 1
            else:
                ck += 1
            j = nxt[j]
        if p_rp[i] + cp > cap_p:
            cap_p = max(2 * cap_p, p_rp[i] + cp)
            tmp = np.empty(cap_p, dtype=np.int64)
            tmp[: p_rp[i]] = p_ci[: p_rp[i]]
            p_ci = tmp
        if k_rp[i] + ck > cap_k:
            cap_k = max(2 * cap_k, k_rp[i] + ck)
            tmp = np.empty(cap_k, dtype=np.int64)
            tmp[: k_rp[i]] = k_ci[: k_rp[i]]
            k_ci = tmp
            tmp2 = np.empty(cap_k, dtype=np.int64)
            tmp2[: k_rp[i]] = k_lev[: k_rp[i]]
            k_lev = tmp2
        pp = p_rp[i]
        kp = k_rp[i]
        j = head
        while j < n:
            if j < lim:
                p_ci[pp] = j
                pp += 1
            else:
                k_ci[kp] = j
                k_lev[kp] = lev[j]
                kp += 1
            j = nxt[j]
        p_rp[i + 1] = pp
        k_rp[i + 1] = kp
    return p_rp, p_ci[: p_rp[n]], k_rp, k_ci[: k_rp[n]]


@njit(cache=True)
def _prefill(n, a_rp, a_ci, a_v, rp, ci, v, n_elim, upper_part):
    # copy A's values into the matching slots of a superset pattern (two
    # sorted pointers per row); fill positions keep their zero initialization
    for i in range(n):
        lim = i if i < n_elim else n_elim
        t = rp[i]
        te = rp[i + 1]
        for s in range(a_rp[i], a_rp[i + 1]):
            j = a_ci[s]
            if upper_part == 0 and j >= lim:
                break
            if upper_part == 1 and j < lim:
                continue
            while t < te and ci[t] < j:
                t += 1
            if t < te and ci[t] == j:
                v[t] = a_v[s]
                t += 1


# ---------------------------------------------------------------------------
# numeric elimination on a fixed split pattern


@njit(cache=True)
def _factor_split(n, p_rp, p_ci, p_v, k_rp, k_ci, k_v, n_elim,
                  milu, target, wvec, delta, rownorm):
    where = np.zeros(n, dtype=np.int64)  # +s: kept slot s-1, -s: pivot slot s-1
    for i in range(n):
        for s in range(p_rp[i], p_rp[i + 1]):
            where[p_ci[s]] = -(s + 1)
        for s in range(k_rp[i], k_rp[i + 1]):
            where[k_ci[s]] = s + 1
        hy = 0.0
        for s in range(p_rp[i], p_rp[i + 1]):
            k = p_ci[s]
            lik = p_v[s] / k_v[k_rp[k]]
            p_v[s] = lik
            for t in range(k_rp[k] + 1, k_rp[k + 1]):
                j = k_ci[t]
                upd = lik * k_v[t]
                w = where[j]
                if w > 0:
                    k_v[w - 1] -= upd
                elif w < 0:
                    p_v[-w - 1] -= upd
                elif milu:
                    hy -= upd * target[j]
        if i < n_elim:
            sd = k_rp[i]
            if milu:
                k_v[sd] += (hy - wvec[i]) / target[i]
            rn = rownorm[i]
            d = k_v[sd]
            if abs(d) < delta * rn:
                k_v[sd] = delta * rn if d >= 0.0 else -delta * rn
        for s in range(p_rp[i], p_rp[i + 1]):
            where[p_ci[s]] = 0
        for s in range(k_rp[i], k_rp[i + 1]):
            where[k_ci[s]] = 0


@njit(cache=True)
def _row_inf_norms(n, a_rp, a_v, out):
    for i in range(n):
        m = 0.0
        for s in range(a_rp[i], a_rp[i + 1]):
            v = abs(a_v[s])
            if v > m:
                m = v
        out[i] = m if m > 0.0 else 1.0


def _factor_on_pattern(a, splits, n_elim, milu, target, wvec, safeguard):
    p_rp, p_ci, p_v, k_rp, k_ci, k_v = splits
    n = a.n_rows
    rownorm = np.empty(n)
    _row_inf_norms(n, a.row_ptr, a.values, rownorm)
    if target is None:
        target = np.empty(0)
        wvec = np.empty(0)
    _factor_split(n, p_rp, p_ci, p_v, k_rp, k_ci, k_v, n_elim,
                  milu, target, wvec, safeguard, rownorm)
    lower = CsrMatrix(n, n, p_rp, p_ci, p_v)
    upper = CsrMatrix(n, n, k_rp, k_ci, k_v)
    return lower, upper


# ---------------------------------------------------------------------------
# ilut (threshold dropping, dynamic pattern)


@njit(cache=True)
def _select_largest(cols, vals, count, keep, selected):
    # mark the ``keep`` largest magnitudes; scanning in ascending column
    # order with a strict comparison breaks ties toward the smaller column
    for s in range(count):
        selected[s] = False
    m = keep if keep < count else count
    for _ in range(m):
        best = -1
        bestv = -1.0
        for s in range(count):
            if not selected[s] and abs(vals[s]) > bestv:
                best = s
                bestv = abs(vals[s])
        selected[best] = True


@njit(cache=True)
def _ilut_factor(n, a_rp, a_ci, a_v, n_elim, tau, maxfill, tau_s, delta):
    cap_l = 4 * a_rp[-1] + 16
    cap_u = 4 * a_rp[-1] + 16
    l_rp = np.zeros(n + 1, dtype=np.int64)
    l_ci = np.empty(cap_l, dtype=np.int64)
    l_v = np.empty(cap_l)
    u_rp = np.zeros(n + 1, dtype=np.int64)
    u_ci = np.empty(cap_u, dtype=np.int64)
    u_v = np.empty(cap_u)
    udiag = np.empty(n)
    nxt = np.empty(n + 1, dtype=np.int64)
    w = np.zeros(n)
    cand_c = np.empty(n, dtype=np.int64)
    cand_v = np.empty(n)
    sel = np.empty(n, dtype=np.bool_)
    for i in range(n):
        lim = i if i < n_elim else n_elim
        # row 2-norm of A and infinity norm for the safeguard
        nrm = 0.0
        mx = 0.0
        for s in range(a_rp[i], a_rp[i + 1]):
            v = a_v[s]
            nrm += v * v
            if abs(v) > mx:
                mx = abs(v)
        nrm = np.sqrt(nrm)
        thresh = tau * nrm if nrm > 0.0 else 0.0
        if mx == 0.0:
            mx = 1.0
        # load the row (plus diagonal) into a sorted linked list
        head = n
        last = -1
        placed = False
        for s in range(a_rp[i], a_rp[i + 1]):
            j = a_ci[s]
            if not placed and j >= i:
                if j > i:
                    if last < 0:
                        head = i
                    else:
                        nxt[last] = i
                    nxt[i] = n
                    w[i] = 0.0
                    last = i
                placed = True
            if last < 0:
                head = j
            else:
                nxt[last] = j
            nxt[j] = n
            w[j] = a_v[s]
            last = j
        if not placed:
            if last < 0:
                head = i
            else:
                nxt[last] = i
            nxt[i] = n
            w[i] = 0.0
        # eliminate pivots in increasing column order
        k = head
        while k < lim:
            lik = w[k] / udiag[k]
            if abs(lik) < thresh:
                w[k] = 0.0
            else:
                w[k] = lik
                cursor = k
                for t in range(u_rp[k], u_rp[k + 1]):
                    j = u_ci[t]
                    if j == k:
                        continue
                    upd = lik * u_v[t]
                    while nxt[cursor] <= j:
                        cursor = nxt[cursor]
                    if cursor == j:
                        w[j] -= upd
                    else:
                        nxt[j] = nxt[cursor]
                        nxt[cursor] = j
                        w[j] = -upd
            k = nxt[k]
        # gather candidates for the two parts
        nl = 0
        j = head
        while j < lim:
            if abs(w[j]) >= thresh and w[j] != 0.0:
                cand_c[nl] = j
                cand_v[nl] = w[j]
                nl += 1
            j = nxt[j]
        _select_largest(cand_c, cand_v, nl, maxfill, sel)
        cl = 0
        for s in range(nl):
            if sel[s]:
                cl += 1
        if l_rp[i] + cl > cap_l:
            cap_l = max(2 * cap_l, l_rp[i] + cl)
            tc = np.empty(cap_l, dtype=np.int64)
            tc[: l_rp[i]] = l_ci[: l_rp[i]]
            l_ci = tc
            tv = np.empty(cap_l)
            tv[: l_rp[i]] = l_v[: l_rp[i]]
            l_v = tv
        pp = l_rp[i]
        for s in range(nl):
            if sel[s]:
                l_ci[pp] = cand_c[s]
                l_v[pp] = cand_v[s]
                pp += 1
        l_rp[i + 1] = pp
        # upper / kept part
        nu = 0
        j = head
        while j < n:
            if j >= lim:
                cand_c[nu] = j
                cand_v[nu] = w[j]
                nu += 1
            j = nxt[j]
        if i < n_elim:
            # magnitude threshold (diagonal exempt), then cap, diagonal forced
            nc = 0
            for s in range(nu):
                if cand_c[s] == i or abs(cand_v[s]) >= thresh:
                    cand_c[nc] = cand_c[s]
                    cand_v[nc] = cand_v[s]
                    nc += 1
            _select_largest(cand_c, cand_v, nc, maxfill, sel)
            for s in range(nc):
                if cand_c[s] == i:
                    sel[s] = True
            cu = 0
            for s in range(nc):
                if sel[s]:
                    cu += 1
        else:
            # Schur row: own tolerance, no cap, diagonal kept
            snrm = 0.0
            for s in range(nu):
                snrm += cand_v[s] * cand_v[s]
            snrm = np.sqrt(snrm)
            sth = tau_s * snrm
            nc = 0
            for s in range(nu):
                if cand_c[s] == i or abs(cand_v[s]) >= sth:
                    cand_c[nc] = cand_c[s]
                    cand_v[nc] = cand_v[s]
                    nc += 1
            for s in range(nc):
                sel[s] = True
            cu = nc
        if u_rp[i] + cu > cap_u:
            cap_u = max(2 * cap_u, u_rp[i] + cu)
            tc = np.empty(cap_u, dtype=np.int64)
            tc[: u_rp[i]] = u_ci[: u_rp[i]]
            u_ci = tc
            tv = np.empty(cap_u)
            tv[: u_rp[i]] = u_v[: u_rp[i]]
            u_v = tv
        kp = u_rp[i]
        for s in range(nc):
            if sel[s]:
                if cand_c[s] == i and i < n_elim:
                    d = cand_v[s]
                    if abs(d) < delta * mx:
                        d = delta * mx if d >= 0.0 else -delta * mx
                    cand_v[s] = d
                    udiag[i] = d
                u_ci[kp] = cand_c[s]
                u_v[kp] = cand_v[s]
                kp += 1
        u_rp[i + 1] = kp
    return l_rp, l_ci[: l_rp[n]], l_v[: l_rp[n]], u_rp, u_ci[: u_rp[n]], u_v[: u_rp[n]]


# ---------------------------------------------------------------------------
# public factorizations


def _check_square(a: CsrMatrix):
    if a.n_rows != a.n_cols:
        raise ValueError("factorization requires a square matrix")


def ilu0(a: CsrMatrix, safeguard: float = DIAG_SAFEGUARD) -> IluFactors:
    """Incomplete LU confined to the pattern of ``a`` (diagonal added if absent).

    The residual ``A - L U`` vanishes on every stored position; everything
    dropped lands outside the pattern.
    """
    _check_square(a)
    splits = _level0_split(a, a.n_rows)
    lower, upper = _factor_on_pattern(a, splits, a.n_rows, False, None, None, safeguard)
    return IluFactors(lower, upper, "ilu0")


def milu0(a: CsrMatrix, vecs: MiluVectors | None = None,
          safeguard: float = DIAG_SAFEGUARD) -> IluFactors:
    """Modified ILU(0): dropped entries are compensated on the diagonal.

    Row i's diagonal is shifted by ``(H[i, :] u - w_i) / u_i`` where
    ``H = A - L U`` before the shift, so that afterwards ``(L U) u = A u - w``
    holds to roundoff.  The default target (ones, ``w = 0``) preserves row
    sums.  Entries of the target vector must be nonzero.
    """
    _check_square(a)
    n = a.n_rows
    if vecs is None:
        vecs = MiluVectors.ones(n)
    target = vecs.full_target()
    if len(target) != n:
        raise ValueError("milu target vector has wrong length")
    if np.any(target == 0.0):
        raise ValueError("milu target vector must have no zero entries")
    wfull = vecs.full_w(n)
    splits = _level0_split(a, n)
    lower, upper = _factor_on_pattern(a, splits, n, True, target, wfull, safeguard)
    return IluFactors(lower, upper, "milu0")


def iluk(a: CsrMatrix, level: int, safeguard: float = DIAG_SAFEGUARD) -> IluFactors:
    """Level-of-fill ILU: keep positions reachable by elimination paths of
    level at most ``level``.  Level 0 coincides with :func:`ilu0`."""
    _check_square(a)
    if level < 0:
        raise ValueError("level must be nonnegative")
    n = a.n_rows
    if level == 0:
        return ilu0(a, safeguard)
    p_rp, p_ci, k_rp, k_ci = _iluk_symbolic(n, a.row_ptr, a.col_idx, n, level)
    p_v = np.zeros(p_rp[-1])
    k_v = np.zeros(k_rp[-1])
    _prefill(n, a.row_ptr, a.col_idx, a.values, p_rp, p_ci, p_v, n, 0)
    _prefill(n, a.row_ptr, a.col_idx, a.values, k_rp, k_ci, k_v, n, 1)
    splits = (p_rp, p_ci, p_v, k_rp, k_ci, k_v)
    lower, upper = _factor_on_pattern(a, splits, n, False, None, None, safeguard)
    return IluFactors(lower, upper, str(FillRule("iluk", level=level)))


def ilut(a: CsrMatrix, tau: float, maxfill: int,
         safeguard: float = DIAG_SAFEGUARD) -> IluFactors:
    """Threshold ILU with dual dropping.

    During elimination, multipliers smaller than ``tau`` times the 2-norm of
    the row of A are discarded; afterwards each row keeps at most ``maxfill``
    entries in the L part and ``maxfill`` in the U part (largest magnitudes,
    ties toward the smaller column, diagonal always kept).  ``tau = 0`` with
    ``maxfill >= n`` reproduces the exact no-pivoting LU.
    """
    _check_square(a)
    FillRule("ilut", tau=tau, maxfill=maxfill)  # validates arguments
    n = a.n_rows
    l_rp, l_ci, l_v, u_rp, u_ci, u_v = _ilut_factor(
        n, a.row_ptr, a.col_idx, a.values, n, tau, maxfill, 0.0, safeguard
    )
    return IluFactors(CsrMatrix(n, n, l_rp, l_ci, l_v), CsrMatrix(n, n, u_rp, u_ci, u_v),
                      str(FillRule("ilut", tau=tau, maxfill=maxfill)))


def factorize(a: CsrMatrix, rule: FillRule, safeguard: float = DIAG_SAFEGUARD) -> IluFactors:
    """Dispatch on a :class:`FillRule`."""
    if rule.kind == "ilu0":
        return ilu0(a, safeguard)
    if rule.kind == "iluk":
        return iluk(a, rule.level, safeguard)
    return ilut(a, rule.tau, rule.maxfill, safeguard)


# ---------------------------------------------------------------------------
# partial factorization


@njit(cache=True)
def _col_split_counts(rp, ci, r0, r1, csplit, lo_counts):
    for r in range(r0, r1):
        lo = 0
        for s in range(rp[r], rp[r + 1]):
            if ci[s] < csplit:
                lo += 1
        lo_counts[r - r0] = lo


@njit(cache=True)
def _col_split_fill(rp, ci, v, r0, r1, csplit,
                    lo_rp, lo_ci, lo_v, hi_rp, hi_ci, hi_v):
    for r in range(r0, r1):
        lp = lo_rp[r - r0]
        hp = hi_rp[r - r0]
        for s in range(rp[r], rp[r + 1]):
            j = ci[s]
            if j < csplit:
                lo_ci[lp] = j
                lo_v[lp] = v[s]
                lp += 1
            else:
                hi_ci[hp] = j - csplit
                hi_v[hp] = v[s]
                hp += 1


def _csr_rows_colsplit(m: CsrMatrix, r0: int, r1: int, csplit: int):
    """Split rows [r0, r1) of ``m`` into the column ranges [0, csplit) and
    [csplit, n_cols), shifting the second block's columns to start at 0."""
    nr = r1 - r0
    lo_c = np.empty(nr, dtype=np.int64)
    _col_split_counts(m.row_ptr, m.col_idx, r0, r1, csplit, lo_c)
    total = np.diff(m.row_ptr[r0 : r1 + 1])
    lo_rp = np.zeros(nr + 1, dtype=np.int64)
    np.cumsum(lo_c, out=lo_rp[1:])
    hi_rp = np.zeros(nr + 1, dtype=np.int64)
    np.cumsum(total - lo_c, out=hi_rp[1:])
    lo_ci = np.empty(lo_rp[-1], dtype=np.int64)
    lo_v = np.empty(lo_rp[-1])
    hi_ci = np.empty(hi_rp[-1], dtype=np.int64)
    hi_v = np.empty(hi_rp[-1])
    _col_split_fill(m.row_ptr, m.col_idx, m.values, r0, r1, csplit,
                    lo_rp, lo_ci, lo_v, hi_rp, hi_ci, hi_v)
    lo = CsrMatrix(nr, csplit, lo_rp, lo_ci, lo_v)
    hi = CsrMatrix(nr, m.n_cols - csplit, hi_rp, hi_ci, hi_v)
    return lo, hi


def _drop_small_rows(m: CsrMatrix, tol: float) -> CsrMatrix:
    """Drop entries below ``tol`` times the row 2-norm (diagonal kept)."""
    if tol <= 0.0 or m.nnz == 0:
        return m
    keep = np.ones(m.nnz, dtype=bool)
    counts = np.zeros(m.n_rows, dtype=np.int64)
    for r in range(m.n_rows):
        s0, s1 = int(m.row_ptr[r]), int(m.row_ptr[r + 1])
        vals = m.values[s0:s1]
        nrm = np.sqrt(float(np.dot(vals, vals)))
        small = np.abs(vals) < tol * nrm
        small &= m.col_idx[s0:s1] != r
        keep[s0:s1] = ~small
        counts[r] = int(np.count_nonzero(~small))
    new_rp = np.zeros(m.n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=new_rp[1:])
    return CsrMatrix(m.n_rows, m.n_cols, new_rp, m.col_idx[keep], m.values[keep])


def partial_ilu(
    a: CsrMatrix,
    n_interior: int,
    rule: FillRule,
    schur_drop_tol: float = 0.0,
    factor_schur: bool = True,
    safeguard: float = DIAG_SAFEGUARD,
) -> PartialIluFactors:
    """Eliminate only the first ``n_interior`` rows and columns.

    Rows past the boundary are reduced against interior pivots only, which
    leaves their trailing block equal to the approximate Schur complement
    ``C - W Z`` under the fill rule.  ``schur_drop_tol`` optionally thins the
    Schur rows (relative to their 2-norm, diagonal kept); with
    ``factor_schur`` the Schur block is factorized with the same fill rule.
    """
    _check_square(a)
    n = a.n_rows
    if not 0 <= n_interior <= n:
        raise ValueError("interior size out of range")

    if rule.kind == "ilut":
        l_rp, l_ci, l_v, u_rp, u_ci, u_v = _ilut_factor(
            n, a.row_ptr, a.col_idx, a.values, n_interior,
            rule.tau, rule.maxfill, schur_drop_tol, safeguard,
        )
        lower = CsrMatrix(n, n, l_rp, l_ci, l_v)
        upper = CsrMatrix(n, n, u_rp, u_ci, u_v)
        drop_tol = 0.0  # already applied inside the kernel
    else:
        if rule.kind == "iluk" and rule.level > 0:
            p_rp, p_ci, k_rp, k_ci = _iluk_symbolic(
                n, a.row_ptr, a.col_idx, n_interior, rule.level
            )
            p_v = np.zeros(p_rp[-1])
            k_v = np.zeros(k_rp[-1])
            _prefill(n, a.row_ptr, a.col_idx, a.values, p_rp, p_ci, p_v, n_interior, 0)
            _prefill(n, a.row_ptr, a.col_idx, a.values, k_rp, k_ci, k_v, n_interior, 1)
            splits = (p_rp, p_ci, p_v, k_rp, k_ci, k_v)
        else:
            splits = _level0_split(a, n_interior)
        lower, upper = _factor_on_pattern(a, splits, n_interior, False, None, None, safeguard)
        drop_tol = schur_drop_tol

    l_b, _ = _csr_rows_colsplit(lower, 0, n_interior, n_interior)
    u_b, z_blk = _csr_rows_colsplit(upper, 0, n_interior, n_interior)
    w_blk, _ = _csr_rows_colsplit(lower, n_interior, n, n_interior)
    _, s_tilde = _csr_rows_colsplit(upper, n_interior, n, n_interior)
    if drop_tol > 0.0:
        s_tilde = _drop_small_rows(s_tilde, drop_tol)
    schur = factorize(s_tilde, rule, safeguard) if factor_schur else None
    return PartialIluFactors(
        interior=IluFactors(l_b, u_b, str(rule)),
        w_block=w_blk,
        z_block=z_blk,
        s_tilde=s_tilde,
        schur=schur,
        n_interior=n_interior,
    )


def extract_two_level_blocks(f: IluFactors, n_interior: int) -> TwoLevelBlocks:
    """Carve a full factorization into its interior/exterior blocks.

    Returns L_B, U_B, the coupling blocks W (exterior rows of L) and Z
    (exterior columns of U), and L_S, U_S (the trailing blocks, which act as
    an incomplete factorization of the Schur complement).
    """
    n = f.n
    ints = np.arange(n_interior)
    exts = np.arange(n_interior, n)
    l_b = extract_block(f.lower, ints, ints)
    u_b = extract_block(f.upper, ints, ints)
    w_t = extract_block(f.lower, exts, ints)
    z_t = extract_block(f.upper, ints, exts)
    l_s = extract_block(f.lower, exts, exts)
    u_s = extract_block(f.upper, exts, exts)
    return TwoLevelBlocks(
        interior=IluFactors(l_b, u_b, f.kind),
        w_tilde=w_t,
        z_tilde=z_t,
        schur=IluFactors(l_s, u_s, f.kind),
    )
