"""Variational quantum classifier on three modes.

The circuit is ``W2(theta2) S(x) W1(theta1)``: two trainable triangular MZI
meshes around a data-encoding layer of phase shifters. Mesh phases and the
diagonal observable are trained together by dual annealing, repeated over
several seeded restarts.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import optim
from .errors import ConfigError, DataError
from .fock import (
    BeamSplitter,
    CircuitSpec,
    DiagonalObservable,
    FockState,
    ModeUnitary,
    PhaseShifter,
    batch_probabilities,
    compile_batch,
    enumerate_fock,
)
from .metrics import accuracy, sign

logger = logging.getLogger(__name__)

MODES = 3
MESH_PHASES = 6
DEFAULT_ALPHA = 1e-4
DEFAULT_RESTARTS = 8
DEFAULT_SEED = 7
DEFAULT_MAX_ITER = 1000
DEFAULT_INPUTS = ("1,0,0", "1,1,1", "2,2,1")
LAMBDA_BOX = 10.0
TWO_PI = 2.0 * np.pi
# (internal, external) phase indices and mode pair of each mesh MZI, in order of application
_MESH_LAYOUT = ((0, 1, (0, 1)), (2, 3, (1, 2)), (4, 5, (0, 1)))


def _mesh_spec() -> CircuitSpec:
    els = []
    for internal, external, (a, b) in _MESH_LAYOUT:
        els += [PhaseShifter(a, f"t{external}"), BeamSplitter(a, b),
                PhaseShifter(a, f"t{internal}"), BeamSplitter(a, b)]
    return CircuitSpec(MODES, els)


MESH_SPEC = _mesh_spec()


def _mesh_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != MESH_PHASES:
        raise ConfigError(f"a mesh takes {MESH_PHASES} phases, got {theta.size}")
    return compile_batch(MESH_SPEC, {f"t{i}": theta[i] for i in range(MESH_PHASES)})[0]


def mesh_unitary(theta) -> ModeUnitary:
    """Triangular mesh of three MZIs on modes (0,1), (1,2), (0,1).

    Each MZI is ``BS . PS(internal) . BS . PS(external)`` with ``theta[2j]``
    internal and ``theta[2j+1]`` external.
    """
    return ModeUnitary(_mesh_matrix(theta))


@dataclass(frozen=True)
class AffineTransform:
    """Per-feature ``a * x + t`` applied before phase encoding."""

    scale: tuple = (1.0, 1.0)
    shift: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        object.__setattr__(self, "shift", tuple(float(v) for v in self.shift))
        if len(self.scale) != 2 or len(self.shift) != 2:
            raise ConfigError("affine transform needs two scales and two shifts")

    @property
    def is_identity(self) -> bool:
        return self.scale == (1.0, 1.0) and self.shift == (0.0, 0.0)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) * np.asarray(self.scale) + np.asarray(self.shift)


IDENTITY = AffineTransform()


def _check_inputs(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != 2:
        raise ConfigError(f"expected 2-D inputs, got {x.shape[1]} features")
    if np.any(np.abs(x) > 1.0) or not np.all(np.isfinite(x)):
        raise ConfigError("inputs must lie in [-1, 1]^2")
    return x


def _encoding_phases(x, transform: AffineTransform) -> np.ndarray:
    """Diagonal of ``S(x)`` for each row, shape ``(N, 3)``."""
    ph = transform(_check_inputs(x))
    diag = np.ones((ph.shape[0], MODES), dtype=complex)
    diag[:, :2] = np.exp(1j * ph)
    return diag


def encoding_unitary(x, transform: AffineTransform = IDENTITY) -> ModeUnitary:
    """``diag(exp(i(a1 x1 + t1)), exp(i(a2 x2 + t2)), 1)``."""
    return ModeUnitary(np.diag(_encoding_phases(np.reshape(x, (1, 2)), transform)[0]))


def output_states(inp: FockState) -> list[FockState]:
    return enumerate_fock(MODES, inp.photons)


def _batch_probabilities(w1, w2, diag, inp: FockState, states) -> np.ndarray:
    if inp.photons == 1:
        # one photon in mode j: P(i) = |U[i, j]|^2, so only column j is needed
        j = inp.index(1)
        col = (diag * w1[None, :, j]) @ w2.T
        amp = col[:, [s.index(1) for s in states]]
        return amp.real**2 + amp.imag**2
    u = (w2[None, :, :] * diag[:, None, :]) @ w1  # W2 S(x) W1 per row
    return batch_probabilities(u, inp, states)


def _probabilities(theta1, theta2, inp, x, transform) -> np.ndarray:
    inp = FockState(inp)
    return _batch_probabilities(_mesh_matrix(theta1), _mesh_matrix(theta2),
                                _encoding_phases(x, transform), inp, output_states(inp))


@dataclass
class VqcModel:
    input_state: FockState
    theta1: np.ndarray
    theta2: np.ndarray
    lam: np.ndarray
    alpha: float = DEFAULT_ALPHA
    transform: AffineTransform = IDENTITY
    seeds: list = field(default_factory=list)
    restart_losses: list = field(default_factory=list)
    restart_scores: list = field(default_factory=list)
    retained: int = 0
    meta: dict = field(default_factory=dict)

    kind = "vqc"

    def __post_init__(self):
        self.input_state = FockState(self.input_state)
        if self.input_state.modes != MODES:
            raise ConfigError(f"input state must have {MODES} modes")
        if self.input_state.photons < 1:
            raise ConfigError("input state carries no photons")
        self.theta1 = np.mod(np.asarray(self.theta1, dtype=float).ravel(), TWO_PI)
        self.theta2 = np.mod(np.asarray(self.theta2, dtype=float).ravel(), TWO_PI)
        self.lam = np.asarray(self.lam, dtype=float).ravel()
        if self.theta1.size != MESH_PHASES or self.theta2.size != MESH_PHASES:
            raise ConfigError(f"each mesh needs {MESH_PHASES} phases")
        if self.lam.size != lambda_size(self.input_state.photons):
            raise ConfigError(f"lambda needs {lambda_size(self.input_state.photons)} entries, got {self.lam.size}")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")

    @property
    def photons(self) -> int:
        return self.input_state.photons

    @property
    def observable(self) -> DiagonalObservable:
        return DiagonalObservable.from_vector(output_states(self.input_state), self.lam)

    @property
    def retained_loss(self) -> Optional[float]:
        return self.restart_losses[self.retained] if self.restart_losses else None

    def decision_function(self, x, chunk: int = 8192) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(x.shape[0])
        for start in range(0, x.shape[0], chunk):
            p = _probabilities(self.theta1, self.theta2, self.input_state,
                               x[start:start + chunk], self.transform)
            out[start:start + chunk] = p @ self.lam
        return out

    def predict(self, x) -> np.ndarray:
        return sign(self.decision_function(x))


def lambda_size(n: int) -> int:
    return math.comb(n + MODES - 1, MODES - 1)


def vqc_output(x, model: VqcModel):
    """Expectation of the observable for one point (float) or many (array)."""
    arr = np.asarray(x, dtype=float)
    vals = model.decision_function(arr)
    return float(vals[0]) if arr.ndim == 1 else vals


def vqc_loss(theta1, theta2, lam, x, y, alpha: float = DEFAULT_ALPHA,
             inp: Sequence[int] = (1, 0, 0), transform: AffineTransform = IDENTITY) -> float:
    """``(1/2N) sum (y - f)^2 + alpha * lam . lam``."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise DataError("cannot evaluate the loss on an empty set")
    lam = np.asarray(lam, dtype=float).ravel()
    f = _probabilities(theta1, theta2, FockState(inp), x, transform) @ lam
    r = y - f
    return float(np.dot(r, r) / (2 * y.size) + alpha * np.dot(lam, lam))


class _Objective:
    """Loss over the packed vector ``[theta1, theta2, lambda]``."""

    def __init__(self, x, y, inp: FockState, alpha: float, transform: AffineTransform):
        self.inp = inp
        self.y = np.asarray(y, dtype=float).ravel()
        self.alpha = alpha
        self.states = output_states(inp)
        self.diag = _encoding_phases(x, transform)

    def probabilities(self, params) -> np.ndarray:
        return _batch_probabilities(_mesh_matrix(params[:MESH_PHASES]),
                                    _mesh_matrix(params[MESH_PHASES:2 * MESH_PHASES]),
                                    self.diag, self.inp, self.states)

    def __call__(self, params) -> float:
        lam = params[2 * MESH_PHASES:]
        r = self.y - self.probabilities(params) @ lam
        return float(np.dot(r, r) / (2 * self.y.size) + self.alpha * np.dot(lam, lam))


def default_seeds(restarts: int = DEFAULT_RESTARTS, seed: int = DEFAULT_SEED) -> list[int]:
    return [seed + r for r in range(restarts)]


def train_vqc(x, y, input_state: Sequence[int] = (1, 0, 0), alpha: float = DEFAULT_ALPHA,
              restarts: int = DEFAULT_RESTARTS, seeds: Optional[Sequence[int]] = None,
              max_iter: int = DEFAULT_MAX_ITER, x_val=None, y_val=None,
              transform: AffineTransform = IDENTITY, polish: bool = True) -> VqcModel:
    """Train by dual annealing from ``restarts`` seeds and keep the best run.

    Runs are ranked by training loss, then by validation score when
    validation data is given. ``polish=False`` skips the final Nelder-Mead
    refinement of each run.
    """
    inp = FockState(input_state)
    if inp.modes != MODES or inp.photons < 1:
        raise ConfigError(f"input state must have {MODES} modes and at least one photon")
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise DataError("empty training set")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be +1 or -1")
    if restarts < 1:
        raise ConfigError("need at least one restart")
    seeds = list(seeds) if seeds is not None else default_seeds(restarts)
    if len(seeds) != restarts:
        raise ConfigError(f"{restarts} restarts but {len(seeds)} seeds")

    obj_fun = _Objective(x, y, inp, alpha, transform)
    dim_lam = lambda_size(inp.photons)
    bounds = [(0.0, TWO_PI)] * (2 * MESH_PHASES) + [(-LAMBDA_BOX, LAMBDA_BOX)] * dim_lam
    handle = optim.ObjectiveHandle(obj_fun, len(bounds), bounds)

    runs = []
    for r, s in enumerate(seeds):
        res = optim.dual_annealing(handle, max_iter=max_iter, seed=int(s), local_refine=polish)
        p = res.x
        cand = VqcModel(inp, p[:MESH_PHASES], p[MESH_PHASES:2 * MESH_PHASES],
                        p[2 * MESH_PHASES:], alpha, transform)
        val = accuracy(cand.predict(x_val), y_val) if x_val is not None else float("nan")
        logger.info("restart %d (seed %d): loss %.6f, validation %.4f, %d evaluations",
                    r, s, res.fun, val, res.nfev)
        runs.append((float(res.fun), val, cand))

    losses = [l for l, _, _ in runs]
    scores = [v for _, v, _ in runs]
    best = min(range(restarts),
               key=lambda i: (losses[i], -scores[i] if not math.isnan(scores[i]) else 0.0, i))
    model = runs[best][2]
    model.seeds = [int(s) for s in seeds]
    model.restart_losses = losses
    model.restart_scores = scores
    model.retained = best
    return model


def vqc_classify(x, model: VqcModel) -> int:
    return 1 if vqc_output(np.asarray(x, dtype=float).reshape(2), model) >= 0 else -1


def fit_affine_transform(model: VqcModel, x_held, y_held,
                         scales: Sequence[float] = (1.0, 0.5, 1.5, 2.0, 3.0),
                         shifts: Sequence[float] = (0.0, -0.5, 0.5)) -> AffineTransform:
    """Grid search of per-feature scale and shift on held-out data.

    ``x_held`` must not overlap the training data. Mesh phases and
    observable stay fixed; the candidate with the best held-out accuracy
    wins, earlier grid entries (identity first) on ties.
    """
    x_held = _check_inputs(x_held)
    y_held = np.asarray(y_held).ravel()
    if y_held.size == 0:
        raise DataError("held-out set is empty")
    best, best_acc = IDENTITY, -1.0
    for a1, a2, t1, t2 in itertools.product(scales, scales, shifts, shifts):
        tr = AffineTransform((a1, a2), (t1, t2))
        probe = VqcModel(model.input_state, model.theta1, model.theta2, model.lam, model.alpha, tr)
        acc = accuracy(probe.predict(x_held), y_held)
        if acc > best_acc:
            best, best_acc = tr, acc
    return best
