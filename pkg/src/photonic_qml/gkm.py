"""Gaussian kernel method on the two-mode interferometer.

The squared distance between two points is written into the phase shifter of
an MZI fed with ``|n, 0>``; a trained diagonal observable turns the output
distribution into an approximation of ``exp(-delta / 2 sigma^2)``. Classification
is kernel ridge regression with that quantum kernel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev

from . import optim
from .errors import ConfigError, RankDeficientError
from .fock import (
    DiagonalObservable,
    FockState,
    batch_probabilities,
    compile_batch,
    enumerate_fock,
    mzi_circuit,
)
from .metrics import sign

logger = logging.getLogger(__name__)

# Regularisation weights per photon number used when none is given.
DEFAULT_ALPHAS = {1: 2.0, 2: 3.0, 4: 3.0, 5: 2.0, 6: 2.5, 7: 2.0, 8: 4.0, 10: 4.0}
DEFAULT_SIGMA = 1.0
DELTA_RANGE = (0.0, 3.0)
DEFAULT_DELTA_COUNT = 1000
DEFAULT_DELTA_SEED = 7
LAMBDA_BOX = 10.0


def gaussian_target(delta, sigma: float = DEFAULT_SIGMA):
    d = np.asarray(delta, dtype=float)
    if np.any(d < 0):
        raise ConfigError("squared distance must be >= 0")
    if sigma <= 0:
        raise ConfigError("sigma must be > 0")
    out = np.exp(-d / (2.0 * sigma**2))
    return float(out) if out.ndim == 0 else out


def default_alpha(n: int) -> float:
    try:
        return DEFAULT_ALPHAS[n]
    except KeyError:
        raise ConfigError(f"no default alpha for n={n}; pass alpha explicitly") from None


def output_states(n: int) -> list[FockState]:
    """Two-mode outcomes of ``|n, 0>``; index ``m`` holds ``m`` photons in mode 2."""
    return enumerate_fock(2, n)


def mzi_probabilities(n: int, deltas) -> np.ndarray:
    """Simulated outcome probabilities, shape ``(len(deltas), n + 1)``."""
    phases = np.atleast_1d(np.asarray(deltas, dtype=float))
    unitaries = compile_batch(mzi_circuit(), {"phi": phases})
    return batch_probabilities(unitaries, (n, 0), output_states(n))


def _check_observable(obs: DiagonalObservable) -> int:
    if obs.modes not in (None, 2):
        raise ConfigError("the kernel circuit has two modes")
    if obs.photons is None:
        raise ConfigError("observable has no coefficients")
    return obs.photons


def kernel_model_output(delta, obs: DiagonalObservable):
    """Expectation of ``obs`` after the MZI with phase ``delta`` on ``|n, 0>``."""
    n = _check_observable(obs)
    d = np.asarray(delta, dtype=float)
    if np.any(d < 0):
        raise ConfigError("squared distance must be >= 0")
    vals = mzi_probabilities(n, d.ravel()) @ obs.vector(output_states(n))
    return float(vals[0]) if d.ndim == 0 else vals.reshape(d.shape)


class QuantumKernel:
    """``f(delta)`` of a trained observable, evaluated in bulk.

    Every outcome probability is a degree-``n`` polynomial in ``cos(delta)``,
    so ``n + 1`` simulator evaluations at Chebyshev nodes determine ``f``
    exactly; bulk evaluation then uses the Chebyshev series.
    """

    def __init__(self, obs: DiagonalObservable):
        self.observable = obs
        self.n = _check_observable(obs)
        nodes = np.pi * (np.arange(self.n + 1) + 0.5) / (self.n + 1)
        values = kernel_model_output(nodes, obs)
        self.coefficients = chebyshev.chebfit(np.cos(nodes), values, self.n)

    def __call__(self, delta):
        d = np.asarray(delta, dtype=float)
        return chebyshev.chebval(np.cos(d), self.coefficients)


def sample_deltas(count: int = DEFAULT_DELTA_COUNT, seed: int = DEFAULT_DELTA_SEED,
                  low: float = DELTA_RANGE[0], high: float = DELTA_RANGE[1]) -> np.ndarray:
    return np.random.default_rng(seed).uniform(low, high, count)


def fit_loss(obs: DiagonalObservable, deltas, sigma: float = DEFAULT_SIGMA) -> float:
    """Mean half squared error between the circuit output and the Gaussian."""
    d = np.asarray(deltas, dtype=float)
    r = kernel_model_output(d, obs) - gaussian_target(d, sigma)
    return float(np.dot(r, r) / (2 * d.size))


def _design(n: int, sigma: float, deltas) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(deltas, dtype=float).ravel()
    if d.size == 0:
        raise ConfigError("need at least one training delta")
    if np.any(d < 0):
        raise ConfigError("squared distance must be >= 0")
    if n < 1:
        raise ConfigError("need at least one photon")
    return mzi_probabilities(n, d), gaussian_target(d, sigma)


def fit_observable_ls(n: int, sigma: float = DEFAULT_SIGMA, deltas=None) -> DiagonalObservable:
    """Exact least-squares fit of the observable (the loss is linear in lambda)."""
    deltas = sample_deltas() if deltas is None else deltas
    p, y = _design(n, sigma, deltas)
    if np.linalg.matrix_rank(p) < p.shape[1]:
        raise RankDeficientError(
            f"design matrix has rank {np.linalg.matrix_rank(p)} < {p.shape[1]}; spread the deltas"
        )
    lam = optim.solve_least_squares(p, y)
    return DiagonalObservable.from_vector(output_states(n), lam)


def fit_observable_bh(
    n: int,
    sigma: float = DEFAULT_SIGMA,
    deltas=None,
    niter: int = 10,
    niter_basin: int = 10,
    step_scale: float = 0.5,
    seed: int = 0,
) -> DiagonalObservable:
    """Fit the observable by basin hopping over ``lambda`` in ``[-10, 10]^(n+1)``."""
    deltas = sample_deltas() if deltas is None else deltas
    p, y = _design(n, sigma, deltas)
    scale = 1.0 / (2 * y.size)

    def loss(lam):
        r = p @ lam - y
        return scale * np.dot(r, r)

    dim = n + 1
    obj = optim.ObjectiveHandle(loss, dim, [(-LAMBDA_BOX, LAMBDA_BOX)] * dim)
    x0 = np.random.default_rng(seed).uniform(-LAMBDA_BOX, LAMBDA_BOX, dim)
    res = optim.basin_hopping(obj, x0, niter=niter, niter_basin=niter_basin,
                              step_scale=step_scale, seed=seed)
    logger.info("basin hopping n=%d: loss %.3e after %d evaluations", n, res.fun, res.nfev)
    return DiagonalObservable.from_vector(output_states(n), res.x)


def pairwise_sq_dists(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _as_kernel(obs) -> QuantumKernel:
    return obs if isinstance(obs, QuantumKernel) else QuantumKernel(obs)


def _warn_extrapolation(d: np.ndarray) -> None:
    top = float(d.max(initial=0.0))
    if top > DELTA_RANGE[1]:
        logger.info("squared distances up to %.3f exceed the fitted range [0, %.1f]",
                    top, DELTA_RANGE[1])


def kernel_matrix(x, obs, y=None) -> np.ndarray:
    """Quantum kernel between the rows of ``x`` (and ``y`` if given)."""
    kern = _as_kernel(obs)
    d = pairwise_sq_dists(x, x if y is None else y)
    _warn_extrapolation(d)
    return kern(d)


@dataclass
class GkmModel:
    observable: DiagonalObservable
    sigma: float
    alpha: float
    train_x: np.ndarray
    beta: np.ndarray
    label_convention: dict = field(default_factory=lambda: {"VIS": 1, "NIR": -1})
    seeds: dict = field(default_factory=dict)

    kind = "gkm"

    def __post_init__(self):
        self.train_x = np.asarray(self.train_x, dtype=float).reshape(-1, 2)
        self.beta = np.asarray(self.beta, dtype=float).ravel()
        if self.beta.size != self.train_x.shape[0]:
            raise ConfigError("one beta per training point required")
        if self.sigma <= 0 or self.alpha < 0:
            raise ConfigError("need sigma > 0 and alpha >= 0")
        self._kernel = QuantumKernel(self.observable)

    @property
    def photons(self) -> int:
        return self.observable.photons

    def decision_function(self, x, chunk: int = 4096) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(x.shape[0])
        for start in range(0, x.shape[0], chunk):
            block = x[start:start + chunk]
            out[start:start + chunk] = self._kernel(pairwise_sq_dists(block, self.train_x)) @ self.beta
        return out

    def predict(self, x) -> np.ndarray:
        return sign(self.decision_function(x))


def train_gkm(x, y, obs: DiagonalObservable, alpha: Optional[float] = None,
              sigma: float = DEFAULT_SIGMA, seeds: Optional[dict] = None,
              label_convention: Optional[dict] = None, allow_indefinite: bool = True) -> GkmModel:
    """Kernel ridge regression: solve ``(K + alpha I) beta = y``.

    The quantum kernel is only fitted for squared distances up to 3, so kernel
    matrices over the full square are generally indefinite. By default such
    systems are solved with a symmetric indefinite factorisation; pass
    ``allow_indefinite=False`` to insist on Cholesky.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be +1 or -1")
    if alpha is None:
        alpha = default_alpha(obs.photons)
    k = kernel_matrix(x, obs)
    beta = optim.solve_ridge(k, y, alpha, allow_indefinite=allow_indefinite)
    return GkmModel(obs, sigma, float(alpha), x, beta,
                    label_convention or {"VIS": 1, "NIR": -1}, dict(seeds or {}))


def gkm_decision(x: Sequence[float], model: GkmModel) -> float:
    return float(model.decision_function(np.asarray(x, dtype=float).reshape(1, 2))[0])


def gkm_classify(x: Sequence[float], model: GkmModel) -> int:
    return 1 if gkm_decision(x, model) >= 0 else -1
