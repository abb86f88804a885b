"""Imaging grids, circular transceiver layouts, and the CV receiver split.

All angles are stored in radians; degrees appear only at the CLI boundary.
"""

import enum
from dataclasses import dataclass, replace

import numpy as np


class PolarizationMode(enum.Enum):
    """Field polarization; fixes the channel count per receiver and the
    number of matrix rows per image pixel (group size)."""

    TM = "TM"
    TE = "TE"

    @property
    def channels_per_receiver(self):
        return 1 if self is PolarizationMode.TM else 2

    @property
    def group_size(self):
        # rows of the contrast-source matrix per pixel
        return self.channels_per_receiver


@dataclass(frozen=True)
class ImagingGrid:
    """Uniform rectangular pixel grid over the inversion domain.

    Pixels are indexed linearly as n = iy * nx + ix with cell centers at
    (x_min + (ix + 0.5) dx, y_min + (iy + 0.5) dx).
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    dx: float
    nx: int
    ny: int

    @property
    def n_pixels(self):
        return self.nx * self.ny

    def centers(self):
        """(N, 2) array of cell centers in linear-index order."""
        xs = self.x_min + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.y_min + (np.arange(self.ny) + 0.5) * self.dx
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def center(self, n):
        iy, ix = divmod(int(n), self.nx)
        return (self.x_min + (ix + 0.5) * self.dx, self.y_min + (iy + 0.5) * self.dx)

    def linear_index(self, ix, iy):
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise ValueError("pixel index out of range")
        return iy * self.nx + ix

    def rowcol(self, n):
        if not (0 <= n < self.n_pixels):
            raise ValueError("linear index out of range")
        iy, ix = divmod(int(n), self.nx)
        return ix, iy

    def contains(self, points):
        """Boolean mask of points lying inside the grid bounding box."""
        p = np.atleast_2d(points)
        return (
            (p[:, 0] >= self.x_min)
            & (p[:, 0] <= self.x_max)
            & (p[:, 1] >= self.y_min)
            & (p[:, 1] <= self.y_max)
        )


def build_grid(bounds, dx):
    """Build an ImagingGrid over bounds = (x_min, x_max, y_min, y_max).

    dx must divide both extents within 1e-6 * dx.
    """
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if not (x_max > x_min and y_max > y_min):
        raise ValueError("empty grid bounds")
    if not dx > 0:
        raise ValueError("dx must be positive")
    counts = []
    for lo, hi, name in ((x_min, x_max, "x"), (y_min, y_max, "y")):
        extent = hi - lo
        n = int(round(extent / dx))
        if n < 1 or abs(n * dx - extent) > 1e-6 * dx:
            raise ValueError(
                f"dx={dx!r} does not divide the {name} extent {extent!r} "
                f"(nearest count {n}, mismatch {abs(n * dx - extent):.3g})"
            )
        counts.append(n)
    return ImagingGrid(x_min, x_max, y_min, y_max, float(dx), counts[0], counts[1])


@dataclass(frozen=True)
class TransceiverLayout:
    """Transmitter/receiver positions with CV roles and dead-zone masks.

    active[p, q] is False when receiver q sits inside the angular dead zone
    of transmitter p; masked channels carry no measurement.
    """

    tx: np.ndarray  # (P, 2)
    rx: np.ndarray  # (Q, 2)
    rx_is_cv: np.ndarray  # (Q,) bool
    active: np.ndarray  # (P, Q) bool

    def __post_init__(self):
        object.__setattr__(self, "tx", np.asarray(self.tx, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "rx", np.asarray(self.rx, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "rx_is_cv", np.asarray(self.rx_is_cv, dtype=bool).ravel())
        object.__setattr__(self, "active", np.asarray(self.active, dtype=bool))
        if self.tx.shape[0] < 1 or self.rx.shape[0] < 1:
            raise ValueError("layout needs at least one transmitter and one receiver")
        if self.rx_is_cv.shape[0] != self.rx.shape[0]:
            raise ValueError("rx_is_cv length mismatch")
        if self.active.shape != (self.tx.shape[0], self.rx.shape[0]):
            raise ValueError("active mask shape mismatch")

    @property
    def n_tx(self):
        return self.tx.shape[0]

    @property
    def n_rx(self):
        return self.rx.shape[0]

    @property
    def tx_angles(self):
        return np.arctan2(self.tx[:, 1], self.tx[:, 0])

    @property
    def rx_angles(self):
        return np.arctan2(self.rx[:, 1], self.rx[:, 0])

    @property
    def cv_indices(self):
        return np.flatnonzero(self.rx_is_cv)

    @property
    def recon_indices(self):
        return np.flatnonzero(~self.rx_is_cv)


def _angular_distance(a, b):
    d = np.abs(np.mod(a - b + np.pi, 2.0 * np.pi) - np.pi)
    return d


def build_circular_layout(
    radius_tx,
    radius_rx,
    n_tx,
    rx_step_deg,
    dead_zone_deg,
    tx_start_deg=0.0,
    rx_start_deg=0.0,
):
    """Equally spaced transmitters and a full receiver ring on circular orbits.

    The receiver ring is sampled every rx_step_deg; receivers closer than
    dead_zone_deg to a transmitter (symmetrically on both sides) are masked
    for that transmitter.
    """
    if radius_tx <= 0 or radius_rx <= 0:
        raise ValueError("orbit radii must be positive")
    if n_tx < 1:
        raise ValueError("need at least one transmitter")
    if not (0.0 <= dead_zone_deg < 180.0):
        raise ValueError("dead zone must lie in [0, 180) degrees")
    n_rx = int(round(360.0 / rx_step_deg))
    if n_rx < 1 or abs(n_rx * rx_step_deg - 360.0) > 1e-9 * 360.0:
        raise ValueError(f"rx step {rx_step_deg!r} deg does not divide the full circle")

    tx_ang = np.deg2rad(tx_start_deg) + 2.0 * np.pi * np.arange(n_tx) / n_tx
    rx_ang = np.deg2rad(rx_start_deg) + np.deg2rad(rx_step_deg) * np.arange(n_rx)
    tx = radius_tx * np.column_stack([np.cos(tx_ang), np.sin(tx_ang)])
    rx = radius_rx * np.column_stack([np.cos(rx_ang), np.sin(rx_ang)])

    dead = np.deg2rad(dead_zone_deg)
    dist = _angular_distance(tx_ang[:, None], rx_ang[None, :])
    # strict comparison: a receiver exactly at the dead-zone edge stays active
    active = dist >= dead - 1e-12
    if np.any(~active.any(axis=1)):
        raise ValueError("dead zone leaves a transmitter with no active receivers")
    return TransceiverLayout(tx, rx, np.zeros(n_rx, dtype=bool), active)


def split_cv(layout, cv_fraction, arc_len, offset_deg=0.0):
    """Assign contiguous receiver arcs to the cross-validation role.

    Arcs of round(arc_len / receiver spacing) contiguous receivers are
    distributed evenly around the ring so that the CV set holds about
    cv_fraction of the receivers. Deterministic in its inputs.
    """
    if not (0.0 < cv_fraction < 0.5):
        raise ValueError("cv_fraction must lie in (0, 0.5)")
    if arc_len <= 0:
        raise ValueError("arc_len must be positive")
    q = layout.n_rx
    radius = float(np.mean(np.hypot(layout.rx[:, 0], layout.rx[:, 1])))
    order = np.argsort(layout.rx_angles)
    ang_sorted = layout.rx_angles[order]
    if q > 1:
        gaps = np.diff(np.concatenate([ang_sorted, [ang_sorted[0] + 2.0 * np.pi]]))
        step = float(np.median(gaps))
    else:
        step = 2.0 * np.pi
    ring_len = q * radius * step
    if arc_len > ring_len:
        raise ValueError("arc_len exceeds the total receiver arc")

    per_arc = max(1, int(round(arc_len / (radius * step))))
    total = int(round(cv_fraction * q))
    n_arcs = max(1, int(round(total / per_arc)))

    offset = int(round(np.deg2rad(offset_deg) / step)) % q
    is_cv = np.zeros(q, dtype=bool)
    for i in range(n_arcs):
        start = (int(round(i * q / n_arcs)) + offset) % q
        for k in range(per_arc):
            is_cv[order[(start + k) % q]] = True
    if is_cv.all() or not is_cv.any():
        raise ValueError("cv split left no reconstruction receivers")
    return replace(layout, rx_is_cv=is_cv)
