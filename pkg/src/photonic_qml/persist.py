"""JSON model files.

Every file carries ``format_version`` and ``kind`` (gkm, rks or vqc). Floats
are written with ``repr`` precision, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fock import DiagonalObservable, FockState
from .gkm import GkmModel
from .qerks import RksModel
from .vqc import AffineTransform, VqcModel

FORMAT_VERSION = 1
KINDS = ("gkm", "rks", "vqc")


def _state_str(s) -> str:
    return ",".join(str(v) for v in s)


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _nullable(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def observable_to_json(obs: DiagonalObservable) -> dict:
    states = sorted(obs.coefficients, reverse=True)
    return {
        "states": [_state_str(s) for s in states],
        "lambda": [obs.coefficients[s] for s in states],
        "scale": float(obs.scale),
    }


def observable_from_json(obj: dict) -> DiagonalObservable:
    return DiagonalObservable.from_vector([FockState.parse(s) for s in obj["states"]],
                                          obj["lambda"], obj.get("scale", 1.0))


def model_to_json(model) -> dict:
    if isinstance(model, GkmModel):
        body = {
            "observable": observable_to_json(model.observable),
            "sigma": float(model.sigma),
            "alpha": float(model.alpha),
            "train_x": [_floats(r) for r in model.train_x],
            "beta": _floats(model.beta),
            "label_convention": dict(model.label_convention),
            "seeds": dict(model.seeds),
        }
    elif isinstance(model, RksModel):
        body = {
            "R": model.r,
            "gamma": float(model.gamma),
            "k": int(model.k),
            "dist": model.dist,
            "seed": int(model.seed),
            "placement": model.placement,
            "ridge": float(model.ridge),
            "W": [_floats(r) for r in model.w],
            "b": _floats(model.b),
            "c": None if model.c is None else _floats(model.c),
            "observable": observable_to_json(model.observable),
        }
    elif isinstance(model, VqcModel):
        body = {
            "input_state": _state_str(model.input_state),
            "theta1": _floats(model.theta1),
            "theta2": _floats(model.theta2),
            "lambda": _floats(model.lam),
            "alpha": float(model.alpha),
            "transform": {"scale": list(model.transform.scale), "shift": list(model.transform.shift)},
            "seeds": list(model.seeds),
            "restart_losses": [_nullable(v) for v in model.restart_losses],
            "restart_scores": [_nullable(v) for v in model.restart_scores],
            "retained": int(model.retained),
        }
    else:
        raise ConfigError(f"cannot serialise {type(model).__name__}")
    return {"format_version": FORMAT_VERSION, "kind": model.kind, **body}


def model_from_json(obj: dict):
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported model format_version {version!r}")
    kind = obj.get("kind")
    try:
        if kind == "gkm":
            return GkmModel(observable_from_json(obj["observable"]), obj["sigma"], obj["alpha"],
                            np.array(obj["train_x"], dtype=float), np.array(obj["beta"], dtype=float),
                            obj["label_convention"], obj["seeds"])
        if kind == "rks":
            return RksModel(obj["R"], obj["gamma"], obj["k"], np.array(obj["W"], dtype=float),
                            np.array(obj["b"], dtype=float), obj["dist"],
                            observable_from_json(obj["observable"]),
                            None if obj["c"] is None else np.array(obj["c"], dtype=float),
                            obj["seed"], obj["placement"], obj["ridge"])
        if kind == "vqc":
            nan = float("nan")
            return VqcModel(FockState.parse(obj["input_state"]), obj["theta1"], obj["theta2"],
                            obj["lambda"], obj["alpha"],
                            AffineTransform(obj["transform"]["scale"], obj["transform"]["shift"]),
                            obj["seeds"], [nan if v is None else v for v in obj["restart_losses"]],
                            [nan if v is None else v for v in obj["restart_scores"]], obj["retained"])
    except KeyError as exc:
        raise ConfigError(f"{kind} model file is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def save_model(model, path) -> None:
    Path(path).write_text(dumps(model_to_json(model)), encoding="utf-8")


def load_model(path):
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a model file ({exc})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: not a model file")
    return model_from_json(obj)
