"""Linear-optical simulation over bosonic Fock states.

Conventions
-----------
A circuit acts on column vectors of mode amplitudes, so a compiled unitary is
the product of element matrices in reverse application order and a single
photon entering mode ``i`` leaves mode ``j`` with amplitude ``U[j, i]``.

The 50-50 beam splitter is the symmetric ``(1/sqrt 2) [[1, i], [i, 1]]``
element. With a phase shifter on the first mode between two of them the
two-mode interferometer reads::

    [[(e^{i phi} - 1) / 2,  i (e^{i phi} + 1) / 2],
     [i (e^{i phi} + 1) / 2, -(e^{i phi} - 1) / 2]]
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError, NumericalError

MAX_PHOTONS = 20
MAX_MODES = 8
UNITARITY_ATOL = 1e-12

_FACTORIALS = np.array([math.factorial(k) for k in range(MAX_PHOTONS + 1)], dtype=float)
_RYSER_CHUNK = 1 << 14


class FockState(tuple):
    """Photon occupation numbers, one entry per spatial mode.

    Behaves as a plain tuple, so ``FockState((1, 0)) == (1, 0)`` and either
    form can be used as a dictionary key.
    """

    def __new__(cls, occupations: Iterable[int]) -> "FockState":
        raw = tuple(occupations)
        occ = tuple(int(v) for v in raw)
        if any(o != v for o, v in zip(occ, raw)):
            raise ConfigError(f"occupations must be integers, got {raw}")
        if not occ:
            raise ConfigError("a Fock state needs at least one mode")
        if any(v < 0 for v in occ):
            raise ConfigError(f"negative occupation in {occ}")
        return super().__new__(cls, occ)

    @property
    def modes(self) -> int:
        return len(self)

    @property
    def photons(self) -> int:
        return sum(self)

    def __repr__(self) -> str:
        return "|" + ",".join(str(v) for v in self) + ">"

    @classmethod
    def parse(cls, text: str) -> "FockState":
        """Read ``"2,2,1"``, ``"|2,2,1>"`` or ``"221"`` (single-digit modes)."""
        body = text.strip().strip("|>⟩ ").strip()
        if "," in body:
            parts = [p for p in body.split(",") if p.strip()]
        else:
            parts = list(body)
        try:
            return cls(int(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"cannot parse Fock state {text!r}") from exc


def enumerate_fock(m: int, n: int) -> list[FockState]:
    """All occupation vectors of ``n`` photons in ``m`` modes.

    Ordered lexicographically descending, i.e. ``(n, 0, ...)`` comes first.
    """
    if m < 1:
        raise ConfigError(f"mode count must be >= 1, got {m}")
    if n < 0:
        raise ConfigError(f"photon count must be >= 0, got {n}")

    def _gen(modes: int, photons: int):
        if modes == 1:
            yield (photons,)
            return
        for first in range(photons, -1, -1):
            for rest in _gen(modes - 1, photons - first):
                yield (first,) + rest

    return [FockState(occ) for occ in _gen(m, n)]


# --------------------------------------------------------------------------
# permanents


def permanent(matrix) -> complex:
    """Matrix permanent by Ryser's inclusion-exclusion formula."""
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    if k > MAX_PHOTONS:
        raise ConfigError(f"permanent limited to {MAX_PHOTONS}x{MAX_PHOTONS}")
    cols = np.arange(k)
    total = 0.0 + 0.0j
    n_subsets = 1 << k
    for start in range(1, n_subsets, _RYSER_CHUNK):
        masks = np.arange(start, min(start + _RYSER_CHUNK, n_subsets))
        bits = ((masks[:, None] >> cols) & 1).astype(float)
        row_sums = bits @ a.T
        signs = np.where((k - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
        total += np.sum(signs * np.prod(row_sums, axis=1))
    return complex(total)


def permanent_naive(matrix) -> complex:
    """Permutation-sum permanent. Exponential in k! time; for checking only."""
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(k)):
        term = 1.0 + 0.0j
        for i, j in enumerate(perm):
            term *= a[i, j]
        total += term
    return complex(total)


def transition_submatrix(u, inp: Sequence[int], out: Sequence[int]) -> np.ndarray:
    """The n x n matrix whose permanent is the ``inp -> out`` amplitude
    (up to normalisation): row ``i`` of ``U`` repeated ``out[i]`` times,
    column ``j`` repeated ``inp[j]`` times."""
    u = np.asarray(u, dtype=complex)
    rows = np.repeat(np.arange(len(out)), list(out))
    cols = np.repeat(np.arange(len(inp)), list(inp))
    return u[np.ix_(rows, cols)]


# --------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class PhaseShifter:
    """Multiplies the amplitude of ``mode`` by ``exp(i*phase)``.

    ``phase`` is either a fixed value in radians or the name of a phase source
    resolved at compile time.
    """

    mode: int
    phase: Union[str, float]


@dataclass(frozen=True)
class BeamSplitter:
    """Symmetric 50-50 beam splitter on two distinct modes."""

    mode_a: int
    mode_b: int


Element = Union[PhaseShifter, BeamSplitter]


@dataclass(frozen=True)
class CircuitSpec:
    modes: int
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 1 <= self.modes <= MAX_MODES:
            raise ConfigError(f"mode count must be in [1, {MAX_MODES}], got {self.modes}")
        for el in self.elements:
            if isinstance(el, PhaseShifter):
                idx = (el.mode,)
            elif isinstance(el, BeamSplitter):
                idx = (el.mode_a, el.mode_b)
                if el.mode_a == el.mode_b:
                    raise ConfigError(f"beam splitter needs two distinct modes: {el}")
            else:
                raise ConfigError(f"unknown circuit element {el!r}")
            if any(not 0 <= i < self.modes for i in idx):
                raise ConfigError(f"{el} references a mode outside 0..{self.modes - 1}")

    def phase_sources(self) -> list[str]:
        seen: list[str] = []
        for el in self.elements:
            if isinstance(el, PhaseShifter) and isinstance(el.phase, str) and el.phase not in seen:
                seen.append(el.phase)
        return seen

    def then(self, other: "CircuitSpec") -> "CircuitSpec":
        """This circuit followed by ``other`` on the same modes."""
        if other.modes != self.modes:
            raise ConfigError("cannot chain circuits with different mode counts")
        return CircuitSpec(self.modes, self.elements + other.elements)


def mzi_circuit(phase: Union[str, float] = "phi") -> CircuitSpec:
    """Beam splitter, phase shifter on mode 0, beam splitter."""
    return CircuitSpec(2, (BeamSplitter(0, 1), PhaseShifter(0, phase), BeamSplitter(0, 1)))


class ModeUnitary:
    """Immutable ``m x m`` unitary acting on mode amplitudes.

    Unitarity is checked on construction against ``atol``.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix, atol: float = UNITARITY_ATOL):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigError(f"unitary must be square, got shape {mat.shape}")
        err = unitarity_error(mat)
        if err >= atol:
            raise NumericalError(f"matrix is not unitary: max |U^H U - I| = {err:.3e}")
        mat.setflags(write=False)
        self._matrix = mat

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def modes(self) -> int:
        return self._matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._matrix if dtype is None else self._matrix.astype(dtype)

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        return ModeUnitary(self._matrix @ np.asarray(other))

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeUnitary) and np.array_equal(self._matrix, other._matrix)

    __hash__ = None

    def __repr__(self) -> str:
        return f"ModeUnitary({self._matrix!r})"


def unitarity_error(u) -> float:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye)))


def _resolve_phase(el: PhaseShifter, phases: Mapping[str, object]):
    if isinstance(el.phase, str):
        try:
            return phases[el.phase]
        except KeyError:
            raise ConfigError(f"no value supplied for phase source {el.phase!r}") from None
    return el.phase


def compile_batch(spec: CircuitSpec, phases: Mapping[str, object] | None = None) -> np.ndarray:
    """Compile ``spec`` for every entry of (broadcast) array-valued phases.

    Returns a ``(B, m, m)`` complex array; scalar phases give ``B == 1``.
    """
    phases = phases or {}
    resolved = []
    for el in spec.elements:
        if isinstance(el, PhaseShifter):
            resolved.append(np.atleast_1d(np.asarray(_resolve_phase(el, phases), dtype=float)))
    batch = int(np.broadcast_shapes(*(r.shape for r in resolved))[0]) if resolved else 1

    m = spec.modes
    u = np.broadcast_to(np.eye(m, dtype=complex), (batch, m, m)).copy()
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    it = iter(resolved)
    for el in spec.elements:
        if isinstance(el, PhaseShifter):
            u[:, el.mode, :] *= np.exp(1j * next(it))[:, None]
        else:
            ra = u[:, el.mode_a, :].copy()
            rb = u[:, el.mode_b, :]
            u[:, el.mode_a, :] = inv_sqrt2 * (ra + 1j * rb)
            u[:, el.mode_b, :] = inv_sqrt2 * (1j * ra + rb)
    return u


def compile_circuit(spec: CircuitSpec, phases: Mapping[str, float] | None = None) -> ModeUnitary:
    """Compile a circuit with scalar phase values into its mode unitary."""
    u = compile_batch(spec, phases)
    if u.shape[0] != 1:
        raise ConfigError("compile_circuit takes scalar phases; use compile_batch for arrays")
    return ModeUnitary(u[0])


# --------------------------------------------------------------------------
# transition probabilities


def _check_photons(n: int, m: int) -> None:
    if n > MAX_PHOTONS:
        raise ConfigError(f"at most {MAX_PHOTONS} photons supported, got {n}")
    if m > MAX_MODES:
        raise ConfigError(f"at most {MAX_MODES} modes supported, got {m}")


def batch_permanents(unitaries, inp: Sequence[int], outputs: Sequence[Sequence[int]]) -> np.ndarray:
    """Permanents of ``transition_submatrix(U, inp, t)`` for a batch of ``U``
    and every output pattern ``t``.

    Ryser's formula with repeated input columns collapses to a sum over
    ``k_j in 0..inp[j]``, weighted by binomial multiplicities, so the cost is
    ``prod(inp[j] + 1)`` terms instead of ``2^n``.
    Returns a ``(B, K)`` complex array.
    """
    u = np.asarray(unitaries, dtype=complex)
    if u.ndim == 2:
        u = u[None]
    s = tuple(int(v) for v in inp)
    t = np.asarray(outputs, dtype=int).reshape(-1, len(s))
    n = sum(s)
    batch, k_out = u.shape[0], t.shape[0]
    if n == 0:
        return np.ones((batch, k_out), dtype=complex)

    modes = np.arange(len(s))
    total = np.zeros((batch, k_out), dtype=complex)
    for ks in itertools.product(*(range(v + 1) for v in s)):
        size = sum(ks)
        if size == 0:
            continue
        weight = math.prod(math.comb(sj, kj) for sj, kj in zip(s, ks))
        if (n - size) % 2:
            weight = -weight
        v = u @ np.asarray(ks, dtype=float)  # (B, m): row sums over the chosen columns
        powers = np.empty((n + 1,) + v.shape, dtype=complex)
        powers[0] = 1.0
        for p in range(1, n + 1):
            powers[p] = powers[p - 1] * v
        # powers[t[k, i], :, i] -> (K, m, B); product over output modes
        terms = powers[t, :, modes[None, :]]
        total += weight * np.prod(terms, axis=1).T
    return total


def batch_probabilities(unitaries, inp: Sequence[int], outputs: Sequence[Sequence[int]]) -> np.ndarray:
    """``|<t|U|s>|^2`` for a batch of unitaries and a list of outputs, shape ``(B, K)``."""
    s = FockState(inp)
    t = np.asarray(outputs, dtype=int).reshape(-1, len(s))
    _check_photons(s.photons, s.modes)
    if np.any(t.sum(axis=1) != s.photons):
        raise ConfigError("output states must carry the input photon number")
    norm = np.prod(_FACTORIALS[list(s)]) * np.prod(_FACTORIALS[t], axis=1)
    per = batch_permanents(unitaries, s, t)
    return (per.real**2 + per.imag**2) / norm[None, :]


def transition_probability(u, inp: Sequence[int], out: Sequence[int]) -> float:
    """Probability of detecting ``out`` when ``inp`` enters the circuit ``u``."""
    s, t = FockState(inp), FockState(out)
    mat = np.asarray(u)
    if s.modes != t.modes or mat.shape[-1] != s.modes:
        raise ConfigError(f"mode mismatch: U is {mat.shape}, states {s} -> {t}")
    if s.photons != t.photons:
        raise ConfigError(f"photon-number mismatch: {s} has {s.photons}, {t} has {t.photons}")
    return float(batch_probabilities(mat, s, [t])[0, 0])


@dataclass(frozen=True)
class OutputDistribution:
    """Exact detection probabilities over every Fock state reachable from an input."""

    states: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "states", tuple(FockState(s) for s in self.states))

    def __getitem__(self, state) -> float:
        try:
            return float(self.probabilities[self.states.index(tuple(state))])
        except ValueError:
            return 0.0

    def __iter__(self):
        return iter(zip(self.states, self.probabilities))

    def __len__(self) -> int:
        return len(self.states)

    def as_dict(self) -> dict:
        return {s: float(p) for s, p in zip(self.states, self.probabilities)}

    def total(self) -> float:
        return float(np.sum(self.probabilities))


def output_distribution(u, inp: Sequence[int]) -> OutputDistribution:
    s = FockState(inp)
    mat = np.asarray(u)
    if mat.shape != (s.modes, s.modes):
        raise ConfigError(f"unitary shape {mat.shape} does not match {s.modes} modes")
    states = enumerate_fock(s.modes, s.photons)
    probs = batch_probabilities(mat, s, states)[0]
    return OutputDistribution(tuple(states), probs)


def mzi_closed_form(n: int, m_out: int, phi):
    """Analytic probability of ``m_out`` photons in the second mode when
    ``|n, 0>`` enters the two-mode interferometer with phase ``phi``."""
    if not 0 <= m_out <= n:
        raise ConfigError(f"m_out must lie in [0, {n}], got {m_out}")
    half = np.asarray(phi, dtype=float) / 2.0
    return math.comb(n, m_out) * np.cos(half) ** (2 * m_out) * np.sin(half) ** (2 * (n - m_out))


# --------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class DiagonalObservable:
    """Operator diagonal in the Fock basis: ``sum_s lambda_s |s><s|``.

    States absent from ``coefficients`` have coefficient 0. The effective
    coefficient is ``scale * lambda``.
    """

    coefficients: Mapping
    scale: float = 1.0

    def __post_init__(self):
        coeffs = {FockState(k): float(v) for k, v in dict(self.coefficients).items()}
        shapes = {(s.modes, s.photons) for s in coeffs}
        if len(shapes) > 1:
            raise ConfigError(f"observable mixes mode/photon sectors: {sorted(shapes)}")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_vector(cls, states: Sequence, values, scale: float = 1.0) -> "DiagonalObservable":
        values = np.asarray(values, dtype=float).ravel()
        if len(values) != len(states):
            raise ConfigError(f"{len(values)} coefficients for {len(states)} states")
        return cls({FockState(s): float(v) for s, v in zip(states, values)}, scale)

    @property
    def modes(self) -> int | None:
        return next(iter(self.coefficients)).modes if self.coefficients else None

    @property
    def photons(self) -> int | None:
        return next(iter(self.coefficients)).photons if self.coefficients else None

    def coefficient(self, state) -> float:
        return self.scale * self.coefficients.get(tuple(state), 0.0)

    def vector(self, states: Sequence) -> np.ndarray:
        return np.array([self.coefficient(s) for s in states], dtype=float)

    def __add__(self, other: "DiagonalObservable") -> "DiagonalObservable":
        keys = list(self.coefficients) + [k for k in other.coefficients if k not in self.coefficients]
        return DiagonalObservable({k: self.coefficient(k) + other.coefficient(k) for k in keys})

    def __neg__(self) -> "DiagonalObservable":
        return DiagonalObservable({k: -v for k, v in self.coefficients.items()}, self.scale)


def expectation(observable: DiagonalObservable, dist: OutputDistribution) -> float:
    return float(np.dot(observable.vector(dist.states), dist.probabilities))
