"""Quantum-enhanced random kitchen sinks.

The two-mode interferometer with a trained observable outputs
``sqrt(2) cos(k * phase)``; feeding it randomised phases built from each data
point gives random Fourier features, and a linear least-squares model on
those features is the classifier.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import optim
from .errors import ConfigError, NumericalError
from .fock import DiagonalObservable
from .gkm import LAMBDA_BOX, mzi_probabilities, output_states
from .metrics import sign

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.1
DEFAULT_FREQUENCY = 1
DEFAULT_R = 100
CHI2_DOF = 2
DISTRIBUTIONS = ("gaussian", "chi2")
# "outer": phase = gamma * (w . x) + b ; "inner": phase = gamma * (w . x + b)
PLACEMENTS = ("outer", "inner")
COSINE_GRID = np.linspace(0.0, 2.0 * np.pi, 201)
_ROW_CHUNK = 2048


def sample_random_features(r: int, d: int = 2, dist: str = "gaussian", seed: int = 0,
                           chi2_dof: float = CHI2_DOF) -> tuple[np.ndarray, np.ndarray]:
    """Random directions ``W`` (r x d) and offsets ``b`` uniform on [0, 2 pi]."""
    if r < 1:
        raise ConfigError(f"R must be >= 1, got {r}")
    rng = np.random.default_rng(seed)
    if dist == "gaussian":
        w = rng.standard_normal((r, d))
    elif dist == "chi2":
        w = rng.chisquare(chi2_dof, (r, d))
    else:
        raise ConfigError(f"unknown distribution {dist!r}; expected one of {DISTRIBUTIONS}")
    b = rng.uniform(0.0, 2.0 * np.pi, r)
    return w, b


def cosine_target(phase, k: int = DEFAULT_FREQUENCY):
    return math.sqrt(2.0) * np.cos(k * np.asarray(phase, dtype=float))


def train_cosine_observable(n: int = 1, k: int = DEFAULT_FREQUENCY, method: str = "ls",
                            seed: int = 0, niter: int = 10, niter_basin: int = 10) -> DiagonalObservable:
    """Fit ``lambda`` so the ``|n, 0>`` interferometer outputs ``sqrt(2) cos(k phase)``.

    ``method="ls"`` solves the linear least-squares problem on a phase grid;
    ``method="bh"`` minimises the same quadratic loss by basin hopping.
    """
    p = mzi_probabilities(n, COSINE_GRID)
    y = cosine_target(COSINE_GRID, k)
    if method == "ls":
        lam = optim.solve_least_squares(p, y)
    elif method == "bh":
        scale = 1.0 / (2 * y.size)

        def loss(v):
            r = p @ v - y
            return scale * np.dot(r, r)

        obj = optim.ObjectiveHandle(loss, n + 1, [(-LAMBDA_BOX, LAMBDA_BOX)] * (n + 1))
        x0 = np.random.default_rng(seed).uniform(-LAMBDA_BOX, LAMBDA_BOX, n + 1)
        lam = optim.basin_hopping(obj, x0, niter=niter, niter_basin=niter_basin, seed=seed).x
    else:
        raise ConfigError(f"unknown fitting method {method!r}")
    resid = float(np.max(np.abs(p @ lam - y)))
    if method == "ls" and resid > 1e-8:
        raise NumericalError(f"|{n},0> cannot represent sqrt(2) cos({k} x): residual {resid:.2e}")
    return DiagonalObservable.from_vector(output_states(n), lam)


def rks_phases(x, w, b, gamma: float, placement: str = "outer") -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    proj = x @ np.asarray(w).T
    if placement == "outer":
        return gamma * proj + b
    if placement == "inner":
        return gamma * (proj + b)
    raise ConfigError(f"unknown phase placement {placement!r}; expected one of {PLACEMENTS}")


@dataclass
class RksModel:
    r: int
    gamma: float
    k: int
    w: np.ndarray
    b: np.ndarray
    dist: str
    observable: DiagonalObservable
    c: Optional[np.ndarray] = None
    seed: int = 0
    placement: str = "outer"
    ridge: float = 0.0
    meta: dict = field(default_factory=dict)

    kind = "rks"

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(self.r, -1)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.r < 1 or self.gamma <= 0:
            raise ConfigError("need R >= 1 and gamma > 0")
        if self.b.size != self.r or np.any((self.b < 0) | (self.b > 2 * np.pi)):
            raise ConfigError("b needs R entries in [0, 2 pi]")
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float).ravel()
            if self.c.size != self.r:
                raise ConfigError("c needs R entries")
        self._lam = self.observable.vector(output_states(self.observable.photons))

    @property
    def photons(self) -> int:
        return self.observable.photons

    def features(self, x) -> np.ndarray:
        """Circuit-evaluated features ``z(x)``, shape ``(N, R)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((x.shape[0], self.r))
        for start in range(0, x.shape[0], _ROW_CHUNK):
            ph = self.k * rks_phases(x[start:start + _ROW_CHUNK], self.w, self.b, self.gamma, self.placement)
            vals = mzi_probabilities(self.photons, ph.ravel()) @ self._lam
            out[start:start + _ROW_CHUNK] = vals.reshape(ph.shape)
        return out / math.sqrt(self.r)

    def features_closed_form(self, x) -> np.ndarray:
        ph = rks_phases(x, self.w, self.b, self.gamma, self.placement)
        return cosine_target(ph, self.k) / math.sqrt(self.r)

    def decision_function(self, x) -> np.ndarray:
        if self.c is None:
            raise ConfigError("model has not been trained")
        return self.features(x) @ self.c

    def predict(self, x) -> np.ndarray:
        return sign(self.decision_function(x))


def feature_map(x, model: RksModel) -> np.ndarray:
    """``z(x)`` for one point (shape ``(R,)``) or many (shape ``(N, R)``)."""
    arr = np.asarray(x, dtype=float)
    z = model.features(arr)
    return z[0] if arr.ndim == 1 else z


def train_rks(x, y, r: int = DEFAULT_R, gamma: float = DEFAULT_GAMMA, dist: str = "gaussian",
              seed: int = 0, n: int = 1, k: int = DEFAULT_FREQUENCY, placement: str = "outer",
              ridge: float = 0.0, observable: Optional[DiagonalObservable] = None) -> RksModel:
    """Ordinary least squares on the ``N x R`` feature matrix (``ridge > 0``
    switches to an ``R x R`` ridge solve)."""
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be +1 or -1")
    if ridge < 0:
        raise ConfigError("ridge must be >= 0")
    obs = observable if observable is not None else train_cosine_observable(n, k)
    w, b = sample_random_features(r, x.shape[1], dist, seed)
    model = RksModel(r, gamma, k, w, b, dist, obs, None, seed, placement, ridge)
    z = model.features(x)
    if ridge == 0.0:
        model.c = optim.solve_least_squares(z, y)
    else:
        model.c = optim.solve_ridge(z.T @ z, z.T @ y, ridge)
    return model


def rks_decision(x, model: RksModel) -> float:
    return float(model.decision_function(np.asarray(x, dtype=float).reshape(1, -1))[0])


def rks_classify(x, model: RksModel) -> int:
    return 1 if rks_decision(x, model) >= 0 else -1


def kernel_approximation_rms(x, xp, r: int, gamma: float = DEFAULT_GAMMA, seeds=range(200),
                             dist: str = "gaussian", observable: Optional[DiagonalObservable] = None) -> float:
    """RMS of ``z(x).z(x') - exp(-gamma^2 |x - x'|^2 / 2)`` over point pairs and feature seeds.

    For a single seed the error is strongly correlated across pairs, so the
    estimate averages over many independent feature draws.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xp = np.atleast_2d(np.asarray(xp, dtype=float))
    obs = observable if observable is not None else train_cosine_observable(1)
    exact = np.exp(-gamma**2 * np.sum((x - xp) ** 2, axis=1) / 2)
    sq = []
    for s in seeds:
        w, b = sample_random_features(r, x.shape[1], dist, s)
        m = RksModel(r, gamma, 1, w, b, dist, obs, seed=s)
        sq.append(np.mean((np.sum(m.features(x) * m.features(xp), axis=1) - exact) ** 2))
    return float(np.sqrt(np.mean(sq)))
