"""Polymer data preparation and 2-D feature datasets.

Covers character-level SMILES encoding, band-gap classes, the length and
outlier filters, stratified seeded splits, the 2-D vector CSV format and a
synthetic two-cloud generator standing in for extracted features.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

ENCODED_LENGTH = 139
CRITICAL_LENGTH = 140
OUTLIER_K = 3.0
DEFAULT_RATIOS = (80, 10, 10)
DEFAULT_CONVENTION = {"VIS": 1, "NIR": -1}

# Gap class edges in eV: MIR [0.025, 0.4], NIR (0.4, 1.6], VIS (1.6, 4.0].
GAP_MIN, MIR_MAX, NIR_MAX, GAP_MAX = 0.025, 0.4, 1.6, 4.0


# --------------------------------------------------------------------------
# SMILES encoding


@dataclass(frozen=True)
class CharDictionary:
    """Character -> index map.

    With ``reserve_padding`` the characters are numbered from 1 so that index
    0 only ever means padding.
    """

    index: dict
    reserve_padding: bool = False

    @classmethod
    def from_corpus(cls, corpus: Iterable[str], reserve_padding: bool = False) -> "CharDictionary":
        chars: set[str] = set()
        count = 0
        for smiles in corpus:
            chars.update(smiles)
            count += 1
        if count == 0:
            raise DataError("cannot build a dictionary from an empty corpus")
        offset = 1 if reserve_padding else 0
        return cls({c: i + offset for i, c in enumerate(sorted(chars))}, reserve_padding)

    @property
    def size(self) -> int:
        return len(self.index) + (1 if self.reserve_padding else 0)

    def inverse(self) -> dict:
        return {i: c for c, i in self.index.items()}

    def to_json(self) -> dict:
        return {"reserve_padding": self.reserve_padding, "index": dict(self.index)}

    @classmethod
    def from_json(cls, obj: dict) -> "CharDictionary":
        return cls({str(k): int(v) for k, v in obj["index"].items()}, bool(obj.get("reserve_padding", False)))


def build_dictionary(corpus: Iterable[str], reserve_padding: bool = False) -> CharDictionary:
    """Unique characters sorted by code point, numbered from 0."""
    d = CharDictionary.from_corpus(corpus, reserve_padding)
    if not reserve_padding and 0 in d.index.values():
        pad_char = next(c for c, i in d.index.items() if i == 0)
        warnings.warn(
            f"padding index 0 collides with character {pad_char!r}; "
            "use reserve_padding=True for an unambiguous encoding",
            stacklevel=2,
        )
    return d


def encode_smiles(smiles: str, dictionary: CharDictionary, length: int = ENCODED_LENGTH) -> np.ndarray:
    if len(smiles) > length:
        raise DataError(f"SMILES of length {len(smiles)} exceeds the encoded length {length}")
    out = np.zeros(length, dtype=np.int64)
    for pos, ch in enumerate(smiles):
        try:
            out[pos] = dictionary.index[ch]
        except KeyError:
            raise DataError(f"unknown character {ch!r} at position {pos} in {smiles!r}") from None
    return out


def decode_smiles(vector: Sequence[int], dictionary: CharDictionary, length: Optional[int] = None) -> str:
    """Inverse of :func:`encode_smiles`.

    When 0 is both a character and the padding value the original length must
    be supplied; otherwise trailing zeros are stripped.
    """
    inv = dictionary.inverse()
    vals = [int(v) for v in vector]
    if length is not None:
        vals = vals[:length]
    else:
        while vals and vals[-1] == 0:
            vals.pop()
    return "".join(inv[v] for v in vals)


# --------------------------------------------------------------------------
# polymer records


def label_gap(gap: float) -> str:
    """Spectral class of a band gap in eV."""
    if not GAP_MIN <= gap <= GAP_MAX:
        raise DataError(f"gap {gap} eV outside [{GAP_MIN}, {GAP_MAX}]")
    if gap <= MIR_MAX:
        return "MIR"
    if gap <= NIR_MAX:
        return "NIR"
    return "VIS"


@dataclass
class PolymerRecord:
    smiles: str
    gap: float
    label: Optional[str] = None
    encoded: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.gap > 0:
            raise DataError(f"gap must be positive, got {self.gap}")
        if self.label is not None and self.label != label_gap(self.gap):
            raise DataError(f"label {self.label} inconsistent with gap {self.gap} eV")
        if self.encoded is not None and len(self.encoded) != ENCODED_LENGTH:
            raise DataError(f"encoded vector must have length {ENCODED_LENGTH}")


def read_polymer_csv(path) -> list[PolymerRecord]:
    """Rows of ``smiles,gap_ev``."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"smiles", "gap_ev"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header 'smiles,gap_ev'")
        for row_no, row in enumerate(reader, start=2):
            try:
                records.append(PolymerRecord(row["smiles"].strip(), float(row["gap_ev"])))
            except (TypeError, ValueError, AttributeError) as exc:
                raise DataError(f"{path}: malformed row {row_no}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: no records")
    return records


def filter_length(records: Sequence[PolymerRecord], critical_length: int = CRITICAL_LENGTH) -> list[PolymerRecord]:
    """Keep SMILES strictly shorter than ``critical_length``."""
    return [r for r in records if len(r.smiles) < critical_length]


def filter_outliers(records: Sequence[PolymerRecord], k: float = OUTLIER_K) -> list[PolymerRecord]:
    """Drop records whose standardized gap lies more than ``k`` deviations out."""
    if len(records) < 2:
        raise ConfigError("outlier filtering needs at least two records")
    gaps = np.array([r.gap for r in records])
    std = gaps.std()
    if std == 0:
        return list(records)
    z = np.abs(gaps - gaps.mean()) / std
    return [r for r, zi in zip(records, z) if zi <= k]


def label_records(records: Sequence[PolymerRecord]) -> list[PolymerRecord]:
    return [PolymerRecord(r.smiles, r.gap, label_gap(r.gap), r.encoded) for r in records]


# --------------------------------------------------------------------------
# splits


def largest_remainder(total: int, ratios: Sequence[float]) -> list[int]:
    weights = np.asarray(ratios, dtype=float)
    exact = total * weights / weights.sum()
    sizes = np.floor(exact).astype(int)
    short = total - sizes.sum()
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:short]:
        sizes[i] += 1
    return sizes.tolist()


@dataclass
class SplitAssignment:
    train: list
    validation: list
    test: list
    ratios: tuple = DEFAULT_RATIOS
    seed: int = 0
    stratified: bool = True

    def sets(self) -> dict:
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "kind": "split_manifest",
            "seed": self.seed,
            "ratios": list(self.ratios),
            "stratified": self.stratified,
            **{k: list(map(int, v)) for k, v in self.sets().items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitAssignment":
        return cls(obj["train"], obj["validation"], obj["test"], tuple(obj["ratios"]),
                   int(obj["seed"]), bool(obj["stratified"]))


def split_dataset(labels: Sequence, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0,
                  stratified: bool = True) -> SplitAssignment:
    """Seeded train/validation/test assignment of indices ``0..len(labels)-1``.

    Stratification shuffles each class, interleaves the classes at their
    global rate and cuts the sequence into consecutive blocks, so every block
    carries the global class mix up to one sample per class.
    """
    labels = list(labels)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 100.0):
        raise ConfigError(f"ratios must be three non-negative numbers summing to 100, got {ratios}")
    if not labels:
        raise DataError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    n = len(labels)
    if stratified:
        classes = sorted(set(labels), key=str)
        if len(classes) < 2:
            raise DataError(f"class absent: stratified split needs two classes, found {classes}")
        keyed = []
        for ci, c in enumerate(classes):
            members = rng.permutation([i for i, lab in enumerate(labels) if lab == c])
            cnt = len(members)
            keyed.extend(((rank + 0.5) / cnt, ci, int(idx)) for rank, idx in enumerate(members))
        order = [idx for _, _, idx in sorted(keyed)]
    else:
        order = rng.permutation(n).tolist()
    sizes = largest_remainder(n, ratios)
    cuts = np.cumsum([0] + sizes)
    parts = [sorted(order[cuts[i]:cuts[i + 1]]) for i in range(3)]
    return SplitAssignment(parts[0], parts[1], parts[2], tuple(ratios), int(seed), stratified)


# --------------------------------------------------------------------------
# 2-D feature datasets


@dataclass
class Dataset2D:
    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1, 2)
        self.y = np.asarray(self.y, dtype=int).ravel()
        if self.x.shape[0] != self.y.shape[0]:
            raise DataError("one label per point required")

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, indices) -> "Dataset2D":
        idx = np.asarray(indices, dtype=int)
        return Dataset2D(self.x[idx], self.y[idx], dict(self.meta))


def parse_label(token: str, convention: Optional[dict] = None) -> int:
    convention = convention or DEFAULT_CONVENTION
    tok = token.strip()
    if tok.upper() in convention:
        return int(convention[tok.upper()])
    try:
        val = float(tok)
    except ValueError:
        raise DataError(f"unknown label {token!r}") from None
    if val not in (1.0, -1.0):
        raise DataError(f"numeric labels must be +1 or -1, got {token!r}")
    return int(val)


def load_2d_vectors(path, convention: Optional[dict] = None) -> Dataset2D:
    """Read the ``x1,x2,label`` CSV; features outside [-1, 1] are rejected."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != ["x1", "x2", "label"]:
            raise DataError(f"{path}: expected header 'x1,x2,label', got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}: malformed row {row_no}: {row}")
            try:
                x1, x2 = float(row[0]), float(row[1])
            except ValueError:
                raise DataError(f"{path}: malformed row {row_no}: {row}") from None
            if not (-1.0 <= x1 <= 1.0 and -1.0 <= x2 <= 1.0):
                raise DataError(f"{path}: row {row_no} has a feature outside [-1, 1]: {row}")
            try:
                ys.append(parse_label(row[2], convention))
            except DataError as exc:
                raise DataError(f"{path}: row {row_no}: {exc}") from None
            xs.append((x1, x2))
    if not xs:
        raise DataError(f"{path}: no data rows")
    return Dataset2D(np.array(xs), np.array(ys))


def save_2d_vectors(ds: Dataset2D, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "label"])
        for (x1, x2), lab in zip(ds.x, ds.y):
            w.writerow([repr(float(x1)), repr(float(x2)), int(lab)])


# --------------------------------------------------------------------------
# synthetic stand-in for extracted features

SYNTH_CENTER = 0.5
SYNTH_SPREAD_MIN = 0.05
SYNTH_SPREAD_SLOPE = 1.5


def synth_spread(overlap: float) -> float:
    """Per-coordinate standard deviation of each cloud."""
    if not 0.0 <= overlap <= 1.0:
        raise ConfigError(f"overlap must lie in [0, 1], got {overlap}")
    return SYNTH_SPREAD_MIN + SYNTH_SPREAD_SLOPE * overlap


def synth_dataset(n: int, overlap: float, seed: int = 7) -> Dataset2D:
    """Two isotropic Gaussian clouds centred at ``+-(0.5, 0.5)``, truncated to
    the square; class +1 sits at the positive centre.

    The optimal boundary is the diagonal ``x1 + x2 = 0``. With ``overlap == 0``
    samples on the wrong side of it are also rejected, so the classes are
    linearly separable.
    """
    if n < 4 or n % 2:
        raise ConfigError(f"n must be an even number >= 4, got {n}")
    spread = synth_spread(overlap)
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for label in (1, -1):
        center = label * SYNTH_CENTER
        kept = np.empty((0, 2))
        while kept.shape[0] < n // 2:
            draw = rng.normal(center, spread, size=(n, 2))
            ok = np.all(np.abs(draw) <= 1.0, axis=1)
            if overlap == 0:
                ok &= label * draw.sum(axis=1) > 0
            kept = np.vstack([kept, draw[ok]])
        xs.append(kept[: n // 2])
        ys.append(np.full(n // 2, label))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(n)
    return Dataset2D(x[perm], y[perm], {"overlap": overlap, "seed": seed, "spread": spread})


def synth_bayes_accuracy(overlap: float) -> float:
    """Accuracy of the optimal classifier on :func:`synth_dataset` data, by
    numerical integration of the truncated cloud density."""
    spread = synth_spread(overlap)
    if overlap == 0:
        return 1.0

    def density(x2, x1):
        return norm.pdf(x1, SYNTH_CENTER, spread) * norm.pdf(x2, SYNTH_CENTER, spread)

    opts = {"epsabs": 1e-12, "epsrel": 1e-10}
    inside, _ = integrate.dblquad(density, -1.0, 1.0, -1.0, 1.0, **opts)
    correct, _ = integrate.dblquad(density, -1.0, 1.0, lambda x1: -x1, 1.0, **opts)
    return correct / inside
