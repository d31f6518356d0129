"""Run configuration.

Settings come from a flat INI file with a single ``[run]`` section, then from
``PHOTONIC_QML_<KEY>`` environment variables, then from command-line flags;
later sources win. Unknown keys are rejected.

Schema (key = type, default)::

    method       = gkm | rks | vqc        (gkm)
    photons      = int or "default"       (default: 4 for GKM, 1 for QE-RKS)
    input_state  = Fock state, e.g. 1,0,0 (1,0,0)  VQC input
    sigma        = float                  (1.0)
    alpha        = float or "default"     (default: per-n table for GKM, 1e-4 for VQC)
    gamma        = float                  (0.1)
    k            = int                    (1)
    R            = int                    (100)
    dist         = gaussian | chi2        (gaussian)
    placement    = outer | inner          (outer)
    ridge        = float                  (0.0)
    fit          = ls | bh                (ls)     GKM observable fit
    delta_count  = int                    (1000)
    delta_seed   = int                    (7)
    niter        = int                    (10)     basin hopping
    niter_basin  = int                    (10)
    restarts     = int                    (8)      VQC
    max_iter     = int                    (1000)   VQC dual annealing
    polish       = bool                   (true)
    split_ratios = a,b,c                  (80,10,10)
    split_seed   = int                    (7)
    stratified   = bool                   (true)
    seed         = int                    (7)      model randomness
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from .errors import ConfigError
from .fock import FockState

SECTION = "run"
ENV_PREFIX = "PHOTONIC_QML_"
METHODS = ("gkm", "rks", "vqc")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("", "default", "none") else conv(text)
    return parse


def _ratios(text: str) -> tuple:
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != 3 or any(v < 0 for v in vals) or sum(vals) <= 0:
        raise ValueError("need three non-negative ratios")
    return vals


def _state(text: str) -> str:
    return ",".join(str(v) for v in FockState.parse(text))


def _choice(*options):
    def conv(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {options}")
        return text
    return conv


@dataclass
class RunConfig:
    method: str = "gkm"
    photons: Optional[int] = None
    input_state: str = "1,0,0"
    sigma: float = 1.0
    alpha: Optional[float] = None
    gamma: float = 0.1
    k: int = 1
    R: int = 100
    dist: str = "gaussian"
    placement: str = "outer"
    ridge: float = 0.0
    fit: str = "ls"
    delta_count: int = 1000
    delta_seed: int = 7
    niter: int = 10
    niter_basin: int = 10
    restarts: int = 8
    max_iter: int = 1000
    polish: bool = True
    split_ratios: tuple = (80.0, 10.0, 10.0)
    split_seed: int = 7
    stratified: bool = True
    seed: int = 7

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.photons is not None and self.photons < 1:
            raise ConfigError("photons must be >= 1")
        for name in ("R", "delta_count", "niter", "niter_basin", "restarts", "max_iter", "k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.sigma <= 0 or self.gamma <= 0:
            raise ConfigError("sigma and gamma must be > 0")
        if (self.alpha is not None and self.alpha < 0) or self.ridge < 0:
            raise ConfigError("alpha and ridge must be >= 0")

    @property
    def n_photons(self) -> int:
        if self.photons is not None:
            return self.photons
        return {"gkm": 4, "rks": 1}.get(self.method, FockState.parse(self.input_state).photons)

    def as_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v, tuple) else v)
                for f in fields(self) for v in [getattr(self, f.name)]}

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp[SECTION] = {f.name: _format(getattr(self, f.name)) for f in fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_CONVERTERS = {
    "method": _choice(*METHODS),
    "photons": _optional(int),
    "input_state": _state,
    "sigma": float,
    "alpha": _optional(float),
    "gamma": float,
    "k": int,
    "R": int,
    "dist": _choice("gaussian", "chi2"),
    "placement": _choice("outer", "inner"),
    "ridge": float,
    "fit": _choice("ls", "bh"),
    "delta_count": int,
    "delta_seed": int,
    "niter": int,
    "niter_basin": int,
    "restarts": int,
    "max_iter": int,
    "polish": _bool,
    "split_ratios": _ratios,
    "split_seed": int,
    "stratified": _bool,
    "seed": int,
}


def _format(value) -> str:
    if value is None:
        return "default"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key: str, text: str, source: str):
    try:
        conv = _CONVERTERS[key]
    except KeyError:
        raise ConfigError(f"{source}: unknown setting {key!r}") from None
    try:
        return conv(text)
    except ValueError as exc:
        raise ConfigError(f"{source}: bad value for {key}: {exc}") from None


def parse_ini(text: str, source: str = "<config>") -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    extra = [s for s in cp.sections() if s != SECTION]
    if extra:
        raise ConfigError(f"{source}: only a [{SECTION}] section is allowed, found {extra}")
    if not cp.has_section(SECTION):
        return {}
    return {k: _convert(k, v, source) for k, v in cp[SECTION].items()}


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, text in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):]
            match = next((k for k in _CONVERTERS if k.lower() == key.lower()), key)
            out[match] = _convert(match, text, f"${name}")
    return out


def load_config(path=None, flags: Optional[Mapping] = None,
                environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Merge defaults, file, environment and flags (``None`` flags are ignored)."""
    values: dict = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        values.update(parse_ini(text, str(p)))
    values.update(env_overrides(environ))
    values.update({k: v for k, v in (flags or {}).items() if v is not None})
    return RunConfig(**values)
