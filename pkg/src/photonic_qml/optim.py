"""Solvers used by the classifiers.

Global search: a seeded basin-hopping loop with derivative-free local steps,
and generalized simulated annealing (SciPy's dual annealing engine with its
built-in local search switched off) followed by one Nelder-Mead polish.
Linear algebra: minimum-norm least squares and Cholesky ridge solves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ConfigError, NotPositiveDefiniteError, NumericalError

logger = logging.getLogger(__name__)

NM_XATOL = 1e-9
NM_FEV_PER_DIM = 500
RIDGE_RESIDUAL_TOL = 1e-8


@dataclass
class ObjectiveHandle:
    """Scalar loss over a real parameter vector, with optional box bounds."""

    fun: Callable[[np.ndarray], float]
    dim: int
    bounds: Optional[Sequence[tuple[float, float]]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"objective dimension must be >= 1, got {self.dim}")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float)
            if b.shape != (self.dim, 2):
                raise ConfigError(f"bounds must have shape ({self.dim}, 2), got {b.shape}")
            if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
                raise ConfigError("bounds must be finite with lower < upper")
            self.bounds = [(float(lo), float(hi)) for lo, hi in b]

    def clip(self, x: np.ndarray) -> np.ndarray:
        if self.bounds is None:
            return x
        b = np.asarray(self.bounds)
        return np.clip(x, b[:, 0], b[:, 1])


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    nfev: int
    best_restart: int
    restart_losses: list = field(default_factory=list)


class _Counted:
    def __init__(self, fun):
        self.fun = fun
        self.nfev = 0

    def __call__(self, x):
        self.nfev += 1
        val = float(self.fun(np.asarray(x, dtype=float)))
        return val if np.isfinite(val) else np.inf


def _nelder_mead(f: _Counted, x: np.ndarray, obj: ObjectiveHandle) -> tuple[np.ndarray, float]:
    # fatol=inf: only the simplex size decides convergence.
    res = scipy.optimize.minimize(
        f,
        x,
        method="Nelder-Mead",
        bounds=obj.bounds,
        options={"xatol": NM_XATOL, "fatol": np.inf, "maxfev": NM_FEV_PER_DIM * obj.dim},
    )
    xr = obj.clip(np.asarray(res.x, dtype=float))
    return xr, f(xr)


def basin_hopping(
    obj: ObjectiveHandle,
    x0,
    niter: int = 10,
    niter_basin: int = 10,
    step_scale: float = 0.5,
    seed: int = 0,
) -> OptimResult:
    """Seeded basin hopping.

    ``niter_basin`` independent outer runs each perform ``niter`` hops: the
    incumbent is perturbed by uniform noise in ``[-step_scale, step_scale]``
    and polished by Nelder-Mead; improvements are kept. The first run starts
    at ``x0``, later runs at a uniform draw inside the bounds (or a perturbed
    ``x0`` when unbounded).
    """
    if niter < 1 or niter_basin < 1:
        raise ConfigError("niter and niter_basin must be >= 1")
    if step_scale <= 0:
        raise ConfigError("step_scale must be > 0")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (obj.dim,):
        raise ConfigError(f"x0 must have length {obj.dim}")
    f = _Counted(obj.fun)
    if not np.isfinite(obj.fun(x0)):
        raise NumericalError("objective is not finite at the starting point")

    rng = np.random.default_rng(seed)
    best_x, best_f, best_idx = None, np.inf, 0
    restart_losses = []
    for b in range(niter_basin):
        if b == 0:
            start = obj.clip(x0)
        elif obj.bounds is not None:
            lo, hi = np.asarray(obj.bounds).T
            start = rng.uniform(lo, hi)
        else:
            start = x0 + rng.uniform(-step_scale, step_scale, obj.dim)
        inc_x, inc_f = _nelder_mead(f, start, obj)
        for _ in range(niter):
            trial = obj.clip(inc_x + rng.uniform(-step_scale, step_scale, obj.dim))
            tx, tf = _nelder_mead(f, trial, obj)
            if tf < inc_f:
                inc_x, inc_f = tx, tf
        restart_losses.append(inc_f)
        if inc_f < best_f:
            best_x, best_f, best_idx = inc_x, inc_f, b
        logger.debug("basin %d: loss %.6g (best %.6g)", b, inc_f, best_f)
    return OptimResult(best_x, f(best_x), f.nfev, best_idx, restart_losses)


def dual_annealing(
    obj: ObjectiveHandle,
    bounds: Optional[Sequence[tuple[float, float]]] = None,
    max_iter: int = 1000,
    seed: int = 0,
    initial_temp: float = 5230.0,
    x0=None,
    local_refine: bool = True,
) -> OptimResult:
    """Generalized simulated annealing inside a box, then one Nelder-Mead polish."""
    bounds = bounds if bounds is not None else obj.bounds
    if not bounds:
        raise ConfigError("dual annealing needs finite bounds on every dimension")
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    boxed = ObjectiveHandle(obj.fun, obj.dim, bounds)
    f = _Counted(obj.fun)
    res = scipy.optimize.dual_annealing(
        f,
        boxed.bounds,
        maxiter=max_iter,
        initial_temp=initial_temp,
        rng=np.random.default_rng(seed),
        no_local_search=True,
        x0=None if x0 is None else boxed.clip(np.asarray(x0, dtype=float)),
    )
    best_x = boxed.clip(np.asarray(res.x, dtype=float))
    best_f = f(best_x)
    if local_refine:
        rx, rf = _nelder_mead(f, best_x, boxed)
        if rf < best_f:
            best_x, best_f = rx, rf
    return OptimResult(best_x, best_f, f.nfev, 0, [best_f])


def solve_least_squares(a, y) -> np.ndarray:
    """Minimum-norm solution of ``min ||a c - y||_2`` (SVD based)."""
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ConfigError(f"design matrix must be 2-D and non-empty, got shape {a.shape}")
    if a.shape[0] != y.shape[0]:
        raise ConfigError(f"{a.shape[0]} rows but {y.shape[0]} targets")
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return coef


def solve_ridge(k, y, alpha: float, sym_tol: float = 1e-9, allow_indefinite: bool = False) -> np.ndarray:
    """Solve ``(k + alpha I) beta = y`` by Cholesky with one refinement step.

    A system that is not positive definite raises
    :class:`NotPositiveDefiniteError` unless ``allow_indefinite`` is set, in
    which case a symmetric indefinite (Bunch-Kaufman) factorisation is used.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ConfigError(f"kernel matrix must be square, got shape {k.shape}")
    if k.shape[0] != y.shape[0]:
        raise ConfigError(f"{k.shape[0]} rows but {y.shape[0]} targets")
    if alpha < 0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    if np.max(np.abs(k - k.T), initial=0.0) > sym_tol:
        raise ConfigError("kernel matrix is not symmetric")
    system = k + alpha * np.eye(k.shape[0])
    try:
        factor = scipy.linalg.cho_factor(system, lower=True)
    except np.linalg.LinAlgError as exc:
        if not allow_indefinite:
            raise NotPositiveDefiniteError(
                f"K + alpha*I is not positive definite at alpha={alpha}; increase alpha"
            ) from exc
        logger.info("K + alpha*I is indefinite at alpha=%g; using a symmetric indefinite solve", alpha)
        try:
            beta = scipy.linalg.solve(system, y, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc2:
            raise NumericalError(f"K + alpha*I is singular at alpha={alpha}") from exc2
        beta += scipy.linalg.solve(system, y - system @ beta, assume_a="sym")
    else:
        beta = scipy.linalg.cho_solve(factor, y)
        beta += scipy.linalg.cho_solve(factor, y - system @ beta)
    residual = float(np.max(np.abs(system @ beta - y), initial=0.0))
    if not np.isfinite(residual) or residual >= RIDGE_RESIDUAL_TOL:
        raise NumericalError(f"ridge residual {residual:.3e} too large; increase alpha")
    return beta
