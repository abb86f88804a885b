"""Indicator maps and image comparison metrics."""

from dataclasses import dataclass, field

import numpy as np

from .forward import Circle, Contour
from .solver import group_norms

DB_FLOOR = -60.0


@dataclass(frozen=True)
class IndicatorMap:
    """Per-pixel nonnegative image on an imaging grid.

    kind is one of 'MMV', 'LSM', 'improved-LSM'; scale is 'linear' or 'db'.
    """

    values: np.ndarray
    grid: object
    kind: str
    scale: str = "linear"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_pixels:
            raise ValueError("value count does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("indicator values must be finite")
        if self.scale == "linear" and np.any(v < 0):
            raise ValueError("linear indicator values must be nonnegative")
        object.__setattr__(self, "values", v)

    def as_image(self):
        """Values reshaped to (ny, nx), row iy = 0 at y_min."""
        return self.values.reshape(self.grid.ny, self.grid.nx)


def image_mmv(j, groups, grid, kind="MMV"):
    """Per-pixel energy of the contrast sources summed over transmitters
    and group rows."""
    v = group_norms(j, groups) ** 2
    if v.size != grid.n_pixels:
        raise ValueError("group count does not match the grid")
    return IndicatorMap(v, grid, kind)


def db_scale(imap, floor_db=DB_FLOOR):
    """Normalize to the map maximum and convert to decibels.

    The maximum maps to exactly 0 dB; zero pixels are clamped to floor_db.
    """
    if imap.scale != "linear":
        raise ValueError("db_scale expects a linear-scale map")
    v = imap.values
    vmax = v.max()
    if not vmax > 0:
        raise ValueError("db_scale needs a positive maximum")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(v / vmax)
    db = np.where(v > 0, db, floor_db)
    meta = dict(imap.meta)
    meta["db_floor"] = floor_db
    return IndicatorMap(db, imap.grid, imap.kind, scale="db", meta=meta)


def corr_coeff(ref, img):
    """Pearson correlation of two pixel images, clipped to [0, 1].

    Accepts IndicatorMap or raw arrays defined on the same grid.
    """
    a = ref.values if isinstance(ref, IndicatorMap) else np.asarray(ref, dtype=float).ravel()
    b = img.values if isinstance(img, IndicatorMap) else np.asarray(img, dtype=float).ravel()
    if isinstance(ref, IndicatorMap) and isinstance(img, IndicatorMap):
        if ref.grid != img.grid:
            raise ValueError("images live on different grids")
    if a.size != b.size:
        raise ValueError("images have different sizes")
    da = a - a.mean()
    db = b - b.mean()
    na = np.linalg.norm(da)
    nb = np.linalg.norm(db)
    if na == 0 or nb == 0:
        raise ValueError("correlation of a constant image is undefined")
    r = float(np.dot(da, db) / (na * nb))
    return max(r, 0.0)


def boundary_distance(points, targets):
    """Distance from each point to the nearest target boundary."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    best = np.full(pts.shape[0], np.inf)
    for t in targets:
        if isinstance(t, Circle):
            d = np.abs(np.hypot(pts[:, 0] - t.center[0], pts[:, 1] - t.center[1]) - t.radius)
        elif isinstance(t, Contour):
            d = _polyline_distance(pts, t.points)
        else:
            raise TypeError(f"unsupported target type {type(t).__name__}")
        best = np.minimum(best, d)
    return best


def _polyline_distance(pts, verts):
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a  # (M, 2)
    ap = pts[:, None, :] - a[None, :, :]  # (Np, M, 2)
    denom = np.sum(ab * ab, axis=1)
    t = np.clip(np.sum(ap * ab[None, :, :], axis=2) / denom[None, :], 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.hypot(pts[:, None, 0] - proj[:, :, 0], pts[:, None, 1] - proj[:, :, 1])
    return d.min(axis=1)


def boundary_energy_fraction(imap, scene, halo=2):
    """Fraction of the map's total value lying near the true boundaries.

    A pixel belongs to the halo region when its center is within
    (halo + 1) * dx of some target boundary (halo=0 keeps exactly the
    boundary cells).
    """
    if imap.scale != "linear":
        raise ValueError("boundary_energy_fraction expects a linear-scale map")
    targets = list(scene) if isinstance(scene, (list, tuple)) else [scene]
    total = imap.values.sum()
    if not total > 0:
        raise ValueError("map has no energy")
    d = boundary_distance(imap.grid.centers(), targets)
    near = d <= (halo + 1) * imap.grid.dx
    return float(imap.values[near].sum() / total)
