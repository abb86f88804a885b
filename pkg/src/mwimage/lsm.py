"""Linear sampling method baseline and its higher-order improved variant.

Both solve the far-field operator equation per sampling point through one
shared SVD with Tikhonov-style regularization; the improved variant
multiplies normalized indicator ratios obtained from higher-order
multipole right-hand sides.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import MU_0, Wavenumber, dipole_field_te, dipole_field_tm, h1neg_table
from .geometry import PolarizationMode
from .imaging import IndicatorMap, db_scale

REGULARIZATION_FACTOR = 0.01


@dataclass(frozen=True)
class LsmOperator:
    """Measurement data arranged as the far-field operator, with its SVD.

    For TM (and single-component TE) the matrix is receivers x transmitters;
    full TE data forms 2x2 diagonal blocks per pair. Dead-zone entries are
    zero-filled and counted in meta['zero_filled'].
    """

    matrix: np.ndarray
    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray
    reg: float
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_measurements(cls, mset):
        y = mset.y
        if not np.any(y):
            raise ValueError("all-zero measurement matrix")
        if mset.polarization is PolarizationMode.TE and mset.component == "full":
            q2, p = y.shape
            mat = np.zeros((q2, 2 * p), dtype=complex)
            mat[0::2, 0::2] = y[0::2, :]
            mat[1::2, 1::2] = y[1::2, :]
        else:
            mat = y.copy()
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        reg = REGULARIZATION_FACTOR * s[0]
        zero_filled = int(np.count_nonzero(~mset.channel_mask()))
        return cls(mat, u, s, vh, reg, meta={"zero_filled": zero_filled})

    def gnorm2(self, rhs):
        """Squared norm of the regularized indicator solution.

        rhs holds right-hand-side columns stacked along the leading axis
        compatible with the operator rows; extra trailing axes (sampling
        points, dipole orientations) are summed over orientations only.
        """
        w = (self.s / (self.s**2 + self.reg**2)) ** 2
        proj = np.tensordot(self.u.conj().T, rhs, axes=1)
        out = np.abs(proj) ** 2
        out = np.tensordot(w, out, axes=1)
        if out.ndim == 2:  # orientation axis first, sampling axis last
            out = out.sum(axis=0)
        return out

    def solve(self, rhs):
        """Explicit regularized solution g (for diagnostics and tests)."""
        coef = self.s / (self.s**2 + self.reg**2)
        return self.vh.conj().T @ (coef[:, None] * (self.u.conj().T @ rhs))


def _tm_rhs(layout, grid, w):
    return dipole_field_tm(grid.centers()[None, :, :], layout.rx[:, None, :], w)


def _saturate(gn2, grid, kind, meta):
    sat = gn2 <= 0
    vals = np.empty_like(gn2)
    with np.errstate(divide="ignore"):
        vals[~sat] = 1.0 / gn2[~sat]
    if np.all(sat):
        raise ValueError("indicator norm vanished everywhere")
    if np.any(sat):
        vals[sat] = vals[~sat].max()
        meta = dict(meta, saturated_pixels=np.flatnonzero(sat))
    return IndicatorMap(vals, grid, kind, meta=meta)


def lsm_indicator(mset, grid):
    """Plain LSM indicator map (linear scale) on the grid's cell centers."""
    op = LsmOperator.from_measurements(mset)
    w = Wavenumber(mset.frequency)
    layout = mset.layout
    if mset.polarization is PolarizationMode.TM:
        gn2 = op.gnorm2(_tm_rhs(layout, grid, w))
    else:
        blocks = dipole_field_te(grid.centers()[None, :, :], layout.rx[:, None, :], w)
        q, n = blocks.shape[:2]
        if mset.component == "full":
            rhs = np.empty((2 * q, 2, n), dtype=complex)
            rhs[0::2, 0, :] = blocks[:, :, 0, 0]
            rhs[0::2, 1, :] = blocks[:, :, 0, 1]
            rhs[1::2, 0, :] = blocks[:, :, 1, 0]
            rhs[1::2, 1, :] = blocks[:, :, 1, 1]
        else:
            ang = layout.rx_angles
            t_hat = np.column_stack([-np.sin(ang), np.cos(ang)])
            rhs = np.empty((q, 2, n), dtype=complex)
            for jdx in range(2):
                rhs[:, jdx, :] = (
                    t_hat[:, 0, None] * blocks[:, :, 0, jdx]
                    + t_hat[:, 1, None] * blocks[:, :, 1, jdx]
                )
        gn2 = op.gnorm2(rhs)
    return _saturate(gn2, grid, "LSM", op.meta)


def ilsm_order(k, radius_a):
    """Multipole order of the improved indicator: round(k * radius_a)."""
    if radius_a <= 0:
        raise ValueError("covering radius must be positive")
    order = int(round(k * radius_a))
    if order < 1:
        raise ValueError("target too small for the improved indicator (order 0)")
    return order


def estimate_covering_radius(lsm_map, threshold_db=-3.0):
    """Covering-ball radius estimate: half the diagonal of the bounding box
    of the thresholded plain-LSM image."""
    db = db_scale(lsm_map)
    mask = db.values >= threshold_db
    pts = lsm_map.grid.centers()[mask]
    span = pts.max(axis=0) - pts.min(axis=0)
    return 0.5 * float(np.hypot(span[0], span[1]))


def combine_order_ratios(ratios):
    """Geometric combination of indicator ratios: (prod ratios)^(1/len)."""
    r = np.asarray(ratios, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(r)
    return np.exp(np.mean(logs, axis=0))


def improved_lsm_indicator(mset, grid, radius_a=None, threshold_db=-3.0):
    """Improved LSM indicator (scalar-field data only).

    Higher-order right-hand sides use order-i Hankel kernels modulated by
    cos/sin of i times the receiver/sampling polar-angle difference, up to
    the order set by the covering-ball radius (estimated from the plain LSM
    image when radius_a is not given).
    """
    if mset.polarization is not PolarizationMode.TM:
        raise ValueError("improved LSM is defined for TM data only")
    op = LsmOperator.from_measurements(mset)
    w = Wavenumber(mset.frequency)
    layout = mset.layout
    centers = grid.centers()

    base = op.gnorm2(_tm_rhs(layout, grid, w))
    if radius_a is None:
        radius_a = estimate_covering_radius(_saturate(base, grid, "LSM", op.meta), threshold_db)
    order = ilsm_order(w.k, radius_a)

    d = layout.rx[:, None, :] - centers[None, :, :]
    dist = np.hypot(d[..., 0], d[..., 1])
    h = h1neg_table(order, w.k * dist)
    dphi = np.arctan2(layout.rx[:, 1], layout.rx[:, 0])[:, None] - np.arctan2(
        centers[:, 1], centers[:, 0]
    )[None, :]
    amp = 0.25 * w.omega * MU_0

    good = base > 0
    ratios = np.empty((2 * order, grid.n_pixels))
    for i in range(1, order + 1):
        kern = amp * h[i]
        gx = op.gnorm2(kern * np.cos(i * dphi))
        gy = op.gnorm2(kern * np.sin(i * dphi))
        ratios[2 * (i - 1)] = np.divide(gx, base, out=np.zeros_like(base), where=good)
        ratios[2 * i - 1] = np.divide(gy, base, out=np.zeros_like(base), where=good)

    vals = combine_order_ratios(ratios)
    meta = dict(op.meta, order=order, radius_a=float(radius_a))
    if np.any(~good):
        vals[~good] = vals[good].max() if np.any(good) else 0.0
        meta["saturated_pixels"] = np.flatnonzero(~good)
    return IndicatorMap(vals, grid, "improved-LSM", meta=meta)
