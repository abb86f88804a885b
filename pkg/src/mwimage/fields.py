"""Free-space dipole field kernels and the analytic sensing matrix.

The scalar (out-of-plane) kernel and the 2x2 in-plane kernel are evaluated
exactly as H^(1) functions of negative real argument via the analytic
continuation in :mod:`mwimage.bessel`; the exp(+i omega t) time convention
is implied throughout.
"""

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_jy
from .geometry import PolarizationMode

C_LIGHT = 299792458.0
MU_0 = 4.0e-7 * np.pi
EPS_0 = 1.0 / (MU_0 * C_LIGHT * C_LIGHT)


@dataclass(frozen=True)
class Wavenumber:
    """Angular frequency and free-space wavenumber for a working frequency."""

    frequency: float

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    @property
    def omega(self):
        return 2.0 * np.pi * self.frequency

    @property
    def k(self):
        return self.omega * np.sqrt(MU_0 * EPS_0)

    @property
    def wavelength(self):
        return C_LIGHT / self.frequency


def h1neg_table(nmax, x):
    """H_n^(1)(-x) for n = 0..nmax on a positive array, via continuation."""
    j, y = bessel_jy(nmax, x)
    h2 = j - 1j * y
    signs = np.array([-1.0 if n % 2 == 0 else 1.0 for n in range(nmax + 1)])
    return signs.reshape((nmax + 1,) + (1,) * x.ndim) * h2


def _pair_distance(x_s, x_r, r_min):
    s = np.asarray(x_s, dtype=float)
    r = np.asarray(x_r, dtype=float)
    d = r - s
    dist = np.hypot(d[..., 0], d[..., 1])
    if np.any(dist < max(r_min, 1e-300)):
        raise ValueError(f"source/receiver separation below r_min={r_min!r}")
    return d, dist


def dipole_field_tm(x_s, x_r, w, r_min=0.0):
    """Out-of-plane E-field at x_r of a unit z-directed electric dipole at x_s.

    Accepts single points or broadcastable arrays of points (last axis 2);
    returns a complex scalar or array.
    """
    _, dist = _pair_distance(x_s, x_r, r_min)
    scalar = dist.ndim == 0
    dist = np.atleast_1d(dist)
    h0 = h1neg_table(0, w.k * dist)[0]
    out = 0.25 * w.omega * MU_0 * h0
    return complex(out[0]) if scalar else out


def dipole_field_te(x_s, x_r, w, r_min=0.0):
    """In-plane 2x2 dipole kernel: entry (i, j) is the x_i field component at
    x_r of a unit electric dipole at x_s polarized along x_j.

    For array input of shape (..., 2) the result has shape (..., 2, 2).
    The matrix is symmetric; the off-diagonal entries share one evaluation.
    """
    d, dist = _pair_distance(x_s, x_r, r_min)
    scalar = dist.ndim == 0
    dist = np.atleast_1d(dist)
    d = d.reshape(dist.shape + (2,))
    k = w.k
    h = h1neg_table(2, k * dist)
    h1, h2 = h[1], h[2]
    c = -k / (4.0 * w.omega * EPS_0)
    rr = dist * dist
    e11 = c * (h1 / dist + k * d[..., 1] ** 2 / rr * h2)
    e22 = c * (h1 / dist + k * d[..., 0] ** 2 / rr * h2)
    e12 = (k * k * d[..., 0] * d[..., 1]) / (4.0 * w.omega * EPS_0 * rr) * h2
    out = np.empty(dist.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = e11
    out[..., 0, 1] = e12
    out[..., 1, 0] = e12
    out[..., 1, 1] = e22
    return out[0] if scalar else out


@dataclass(frozen=True)
class SensingMatrix:
    """Dense operator mapping contrast-source pixels to receiver channels.

    Columns are grouped per pixel (1 column for TM, 2 interleaved columns
    for TE); rows follow rx_indices, with the two field components of a TE
    receiver interleaved. Entries come from the analytic free-space kernels.
    """

    entries: np.ndarray
    polarization: PolarizationMode
    rx_indices: np.ndarray
    n_pixels: int
    provenance: str = "analytic_free_space"

    @property
    def group_size(self):
        return self.entries.shape[1] // self.n_pixels

    @property
    def n_rows(self):
        return self.entries.shape[0]


def build_sensing_matrix(grid, layout, pol, w, rx_indices=None, r_min=None,
                         component_projection=None):
    """Assemble the sensing matrix for the given grid and receiver subset.

    Each column block is the dipole kernel from a pixel center to a receiver
    scaled by the cell area (midpoint quadrature). A single matrix serves
    every transmitter; per-transmitter dead-zone masks are applied to
    residuals at solve time, not here.

    component_projection='tangential' reduces TE blocks to the single field
    component along the receiver's ring tangent (one row per receiver), for
    data sets that measure only that component.
    """
    if rx_indices is None:
        rx_indices = np.arange(layout.n_rx)
    rx_indices = np.asarray(rx_indices, dtype=int)
    rx = layout.rx[rx_indices]
    if np.any(grid.contains(rx)):
        raise ValueError("receivers must lie strictly outside the grid")
    if r_min is None:
        r_min = grid.dx / 10.0
    centers = grid.centers()
    n = grid.n_pixels
    q = rx.shape[0]
    scale = grid.dx * grid.dx

    if pol is PolarizationMode.TM:
        vals = dipole_field_tm(centers[None, :, :], rx[:, None, :], w, r_min=r_min)
        entries = vals * scale
        if component_projection is not None:
            raise ValueError("component projection applies to TE only")
        return SensingMatrix(entries, pol, rx_indices, n)

    blocks = dipole_field_te(centers[None, :, :], rx[:, None, :], w, r_min=r_min)
    blocks = blocks * scale
    if component_projection is None:
        entries = np.empty((2 * q, 2 * n), dtype=complex)
        entries[0::2, 0::2] = blocks[:, :, 0, 0]
        entries[0::2, 1::2] = blocks[:, :, 0, 1]
        entries[1::2, 0::2] = blocks[:, :, 1, 0]
        entries[1::2, 1::2] = blocks[:, :, 1, 1]
    elif component_projection == "tangential":
        ang = layout.rx_angles[rx_indices]
        t_hat = np.column_stack([-np.sin(ang), np.cos(ang)])
        entries = np.empty((q, 2 * n), dtype=complex)
        entries[:, 0::2] = t_hat[:, 0, None] * blocks[:, :, 0, 0] + t_hat[:, 1, None] * blocks[:, :, 1, 0]
        entries[:, 1::2] = t_hat[:, 0, None] * blocks[:, :, 0, 1] + t_hat[:, 1, None] * blocks[:, :, 1, 1]
    else:
        raise ValueError(f"unknown component projection {component_projection!r}")
    return SensingMatrix(entries, pol, rx_indices, n)
