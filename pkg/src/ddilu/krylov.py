"""Restarted GMRES and FGMRES, right preconditioned.

Both solvers run modified Gram-Schmidt Arnoldi with Givens rotations for the
least-squares update.  The Givens machinery gives a cheap residual estimate
every iteration; the true residual is recomputed from scratch at every
restart boundary and convergence is only declared on the recomputed value.
FGMRES additionally stores the preconditioned basis vectors, so the
preconditioner may change from step to step (the two-level preconditioners
in this package embed an inner iteration and are nonlinear).

All reductions go through the fixed-order kernels of :mod:`ddilu.sparse`,
which makes solves reproducible bit for bit and iteration counts stable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .sparse import CsrMatrix, spmv, vdot, vnorm2

__all__ = ["KrylovConfig", "SolveReport", "gmres", "fgmres", "fixed_gmres"]

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KrylovConfig:
    """Restart length, relative tolerance, and iteration budget.

    With ``record_history`` cleared the report's residual history comes back
    empty; recording costs one float per iteration, so it is on by default.
    """

    restart: int = 50
    rtol: float = 1e-8
    max_iters: int = 20000
    happy_tol: float = 1e-14
    record_history: bool = True

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart length must be positive")
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residual_history[k]`` is the relative residual after k iterations
    (entry 0 belongs to the initial guess); within a restart cycle these are
    the Givens estimates, which decrease monotonically.  ``final_relres`` is
    recomputed from scratch as ``|b - A x| / |b|`` and is the value the
    ``converged`` flag is based on.
    """

    iterations: int
    converged: bool
    residual_history: np.ndarray
    final_relres: float
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0


@njit(cache=True)
def _axpy(alpha, v, w):
    for i in range(len(w)):
        w[i] += alpha * v[i]


def _as_operator(a) -> Operator:
    if isinstance(a, CsrMatrix):
        return lambda v: spmv(a, v)
    return a


def _back_substitute(h: np.ndarray, g: np.ndarray, k: int) -> np.ndarray:
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = g[i]
        for j in range(i + 1, k):
            s -= h[i, j] * y[j]
        y[i] = s / h[i, i] if h[i, i] != 0.0 else 0.0
    return y


def _restarted(apply_a, apply_m, b, x0, cfg: KrylovConfig, flexible: bool):
    n = len(b)
    bnorm = vnorm2(b)
    scale = bnorm if bnorm > 0.0 else 1.0

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.array(x0, dtype=np.float64)
        r = b - apply_a(x)
    beta = vnorm2(r)
    history = [beta / scale]
    final_rel = beta / scale
    converged = final_rel <= cfg.rtol
    its = 0

    m = cfg.restart
    v_basis = np.empty((m + 1, n))
    z_basis = np.empty((m, n)) if flexible else None
    h = np.zeros((m + 1, m))
    cs = np.empty(m)
    sn = np.empty(m)
    g = np.empty(m + 1)

    while not converged and its < cfg.max_iters:
        np.divide(r, beta, out=v_basis[0])
        g[:] = 0.0
        g[0] = beta
        k = 0
        for j in range(m):
            z = apply_m(v_basis[j]) if apply_m is not None else v_basis[j]
            if flexible:
                z_basis[j] = z
            w = apply_a(z)
            for i in range(j + 1):
                hij = vdot(v_basis[i], w)
                h[i, j] = hij
                _axpy(-hij, v_basis[i], w)
            hnext = vnorm2(w)
            h[j + 1, j] = hnext
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            denom = math.hypot(h[j, j], hnext)
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j] = h[j, j] / denom
                sn[j] = hnext / denom
            h[j, j] = cs[j] * h[j, j] + sn[j] * hnext
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            its += 1
            k = j + 1
            est = abs(g[j + 1]) / scale
            history.append(est)
            if hnext < cfg.happy_tol:
                break
            np.divide(w, hnext, out=v_basis[j + 1])
            if est <= cfg.rtol or its >= cfg.max_iters:
                break
        y = _back_substitute(h, g, k)
        if flexible:
            for i in range(k):
                _axpy(y[i], z_basis[i], x)
        else:
            u = np.zeros(n)
            for i in range(k):
                _axpy(y[i], v_basis[i], u)
            _axpy(1.0, apply_m(u) if apply_m is not None else u, x)
        r = b - apply_a(x)
        beta = vnorm2(r)
        final_rel = beta / scale
        if final_rel <= cfg.rtol:
            converged = True

    return x, SolveReport(
        iterations=its,
        converged=converged,
        residual_history=np.array(history if cfg.record_history else []),
        final_relres=final_rel,
    )


def gmres(a, b: np.ndarray, m=None, x0: np.ndarray | None = None,
          cfg: KrylovConfig | None = None) -> tuple[np.ndarray, SolveReport]:
    """Right-preconditioned restarted GMRES.

    ``a`` is a :class:`CsrMatrix` or a callable; ``m`` (optional) applies the
    preconditioner to a vector and must be a fixed linear operator here, as
    it is applied once to the assembled correction of each restart cycle.
    """
    cfg = cfg or KrylovConfig()
    apply_a = _as_operator(a)
    apply_m = _as_operator(m) if m is not None else None
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    x, report = _restarted(apply_a, apply_m, b, x0, cfg, flexible=False)
    report.solve_seconds = time.perf_counter() - t0
    return x, report


def fgmres(a, b: np.ndarray, m=None, x0: np.ndarray | None = None,
           cfg: KrylovConfig | None = None) -> tuple[np.ndarray, SolveReport]:
    """Flexible restarted GMRES; the preconditioner may vary per iteration."""
    cfg = cfg or KrylovConfig()
    apply_a = _as_operator(a)
    apply_m = _as_operator(m) if m is not None else None
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    x, report = _restarted(apply_a, apply_m, b, x0, cfg, flexible=True)
    report.solve_seconds = time.perf_counter() - t0
    return x, report


def fixed_gmres(apply_a: Operator, b: np.ndarray, iters: int,
                apply_m: Operator | None = None,
                happy_tol: float = 1e-14) -> np.ndarray:
    """Non-restarted GMRES run for a fixed number of iterations.

    Zero initial guess, no convergence test, right preconditioned by the
    fixed linear operator ``apply_m``.  Used as the inner solver of the
    two-level preconditioners; stopping early only on Arnoldi breakdown
    keeps the operation count of every application identical.
    """
    n = len(b)
    if n == 0 or iters <= 0:
        return np.zeros(n)
    beta = vnorm2(b)
    if beta == 0.0:
        return np.zeros(n)
    m = min(iters, n)
    v_basis = np.empty((m + 1, n))
    h = np.zeros((m + 1, m))
    cs = np.empty(m)
    sn = np.empty(m)
    g = np.zeros(m + 1)
    np.divide(b, beta, out=v_basis[0])
    g[0] = beta
    k = 0
    for j in range(m):
        z = apply_m(v_basis[j]) if apply_m is not None else v_basis[j]
        w = apply_a(z)
        for i in range(j + 1):
            hij = vdot(v_basis[i], w)
            h[i, j] = hij
            _axpy(-hij, v_basis[i], w)
        hnext = vnorm2(w)
        h[j + 1, j] = hnext
        for i in range(j):
            t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
            h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
            h[i, j] = t
        denom = math.hypot(h[j, j], hnext)
        if denom == 0.0:
            cs[j], sn[j] = 1.0, 0.0
        else:
            cs[j] = h[j, j] / denom
            sn[j] = hnext / denom
        h[j, j] = cs[j] * h[j, j] + sn[j] * hnext
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        if hnext < happy_tol:
            break
        np.divide(w, hnext, out=v_basis[j + 1])
    y = _back_substitute(h, g, k)
    u = np.zeros(n)
    for i in range(k):
        _axpy(y[i], v_basis[i], u)
    return apply_m(u) if apply_m is not None else u
