"""Decision-boundary grids, PPM heatmaps and kernel-fit curves."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .gkm import DELTA_RANGE, gaussian_target, kernel_model_output
from .metrics import sign

MIN_RESOLUTION = 16
KERNEL_GRID_POINTS = 200
# RGB colours: class +1, class -1, test points
PLUS_RGB = (230, 159, 0)
MINUS_RGB = (86, 86, 160)
POINT_RGB = (173, 216, 230)
POINT_RADIUS = 2


def grid_axis(resolution: int) -> np.ndarray:
    if resolution < MIN_RESOLUTION:
        raise ConfigError(f"grid resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    return np.linspace(-1.0, 1.0, resolution)


def boundary_grid(model, resolution: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Grid points (rows with ``x1`` varying fastest) and decision values."""
    axis = grid_axis(resolution)
    x1, x2 = np.meshgrid(axis, axis)
    pts = np.column_stack([x1.ravel(), x2.ravel()])
    return pts, np.asarray(model.decision_function(pts), dtype=float)


def write_grid_csv(path, points: np.ndarray, decision: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "decision", "sign"])
        for (a, b), d, s in zip(points, decision, sign(decision)):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(d)), int(s)])


def _to_pixel(v: np.ndarray, resolution: int) -> np.ndarray:
    return np.rint((v + 1.0) / 2.0 * (resolution - 1)).astype(int)


def sign_image(decision: np.ndarray, resolution: int, points: Optional[np.ndarray] = None) -> np.ndarray:
    """RGB image of the predicted sign; row 0 is the top edge ``x2 = 1``."""
    s = sign(decision).reshape(resolution, resolution)[::-1]
    img = np.where((s > 0)[..., None], np.array(PLUS_RGB, np.uint8), np.array(MINUS_RGB, np.uint8))
    if points is not None and len(points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        cols = _to_pixel(pts[:, 0], resolution)
        rows = resolution - 1 - _to_pixel(pts[:, 1], resolution)
        r = POINT_RADIUS
        dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
        ring = (dx**2 + dy**2 <= r * r) & (dx**2 + dy**2 >= (r - 1) ** 2)
        for oy, ox in zip(dy[ring], dx[ring]):
            rr, cc = rows + oy, cols + ox
            ok = (rr >= 0) & (rr < resolution) & (cc >= 0) & (cc < resolution)
            img[rr[ok], cc[ok]] = POINT_RGB
    return img


def write_ppm(path, image: np.ndarray) -> None:
    """Binary (P6) PPM."""
    h, w, _ = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6" or int(parts[3]) != 255:
        raise ConfigError(f"{path}: not an 8-bit binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)


def kernel_fit_curve(obs, sigma: float = 1.0, points: int = KERNEL_GRID_POINTS):
    """``(delta, target, model)`` on a uniform grid over the fitted range."""
    delta = np.linspace(DELTA_RANGE[0], DELTA_RANGE[1], points)
    return delta, gaussian_target(delta, sigma), kernel_model_output(delta, obs)


def write_kernel_csv(path, delta, target, model_vals) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "target", "model"])
        for row in zip(delta, target, model_vals):
            w.writerow([repr(float(v)) for v in row])

