import numpy as np

from .errors import DataError


def sign(values) -> np.ndarray:
    """Class labels from decision values; exact zeros map to +1."""
    return np.where(np.asarray(values, dtype=float) >= 0.0, 1, -1)


def score(model, x, y) -> float:
    """Fraction of points whose predicted sign matches the label."""
    y = np.asarray(y).ravel()
    if y.size == 0:
        raise DataError("cannot score an empty set")
    return float(np.mean(model.predict(x) == y))


def accuracy(pred, y) -> float:
    y = np.asarray(y).ravel()
    if y.size == 0:
        raise DataError("cannot score an empty set")
    return float(np.mean(np.asarray(pred).ravel() == y))
