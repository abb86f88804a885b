"""Synthetic scattering data for PEC targets from boundary-method solvers.

Single circles are handled by the classical cylindrical-harmonic series;
everything else (including multi-target scenes, with full inter-target
coupling) goes through a point-matching EFIE solver on the boundary
contours. The inversion-side sensing matrix is never used to generate
data, which keeps synthetic studies clear of the inverse crime.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bessel import EULER_GAMMA, bessel_jy
from .errors import NumericalError
from .fields import EPS_0, MU_0, dipole_field_tm
from .geometry import PolarizationMode

_SERIES_TAIL_REL = 1e-10


@dataclass(frozen=True)
class Circle:
    """PEC circular cylinder cross-section."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    def max_extent(self):
        return float(np.hypot(*self.center) + self.radius)


@dataclass(frozen=True)
class Contour:
    """PEC cylinder with an arbitrary closed cross-section boundary.

    points is an (M, 2) vertex array; the polygon is implicitly closed from
    the last vertex back to the first. At least 16 segments, no repeated
    vertices, no self-intersections.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 16:
            raise ValueError("contour needs at least 16 vertices of shape (M, 2)")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if pts.shape[0] < 16:
            raise ValueError("contour needs at least 16 segments")
        seg = np.roll(pts, -1, axis=0) - pts
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) <= 0):
            raise ValueError("contour has zero-length segments")
        if _self_intersects(pts):
            raise ValueError("contour is self-intersecting")
        object.__setattr__(self, "points", pts)

    def max_extent(self):
        return float(np.max(np.hypot(self.points[:, 0], self.points[:, 1])))


def _self_intersects(pts):
    """True when any two non-adjacent edges of the closed polygon cross."""
    m = pts.shape[0]
    a = pts
    b = np.roll(pts, -1, axis=0)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (
            q[..., 1] - p[..., 1]
        ) * (r[..., 0] - p[..., 0])

    for i in range(m - 2):
        js = np.arange(i + 2, m if i > 0 else m - 1)
        o1 = orient(a[i], b[i], a[js])
        o2 = orient(a[i], b[i], b[js])
        o3 = orient(a[js], b[js], a[i])
        o4 = orient(a[js], b[js], b[i])
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


@dataclass(frozen=True)
class MeasurementSet:
    """Scattered-field data matrix with its acquisition context.

    y has one row per receiver channel (two interleaved rows per receiver
    for full TE) and one column per transmitter. component='tangential'
    marks TE data where only the field component along the receiver ring
    tangent was measured (one row per receiver). Entries masked by the dead
    zone are stored as zeros and excluded from norms via channel_mask().
    """

    y: np.ndarray
    polarization: PolarizationMode
    frequency: float
    layout: object
    snr_db: float = None
    seed: int = None
    engine: str = "measured"
    component: str = "full"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.component not in ("full", "tangential"):
            raise ValueError(f"unknown component kind {self.component!r}")
        if self.component == "tangential" and self.polarization is not PolarizationMode.TE:
            raise ValueError("tangential component applies to TE data only")
        y = np.asarray(self.y, dtype=complex)
        c = self.channels_per_receiver
        if y.shape != (c * self.layout.n_rx, self.layout.n_tx):
            raise ValueError("measurement matrix shape does not match layout")
        if not np.all(np.isfinite(y)):
            raise ValueError("measurement matrix has non-finite entries")
        object.__setattr__(self, "y", y)

    @property
    def channels_per_receiver(self):
        if self.component == "tangential":
            return 1
        return self.polarization.channels_per_receiver

    def channel_mask(self):
        """(channels, P) bool array; True marks a measured (active) entry."""
        return np.repeat(self.layout.active.T, self.channels_per_receiver, axis=0)


def _series_orders(ka, n_terms):
    min_terms = int(np.ceil(ka)) + 15
    if n_terms is None:
        return min_terms
    if n_terms < min_terms:
        raise ValueError(f"n_terms must be >= ceil(ka) + 15 = {min_terms}")
    return int(n_terms)


def _check_outside(circle, pts, who):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = np.hypot(pts[:, 0] - circle.center[0], pts[:, 1] - circle.center[1])
    # the exterior expansion is valid on the boundary itself
    if np.any(d < circle.radius * (1.0 - 1e-12)):
        raise ValueError(f"{who} must not lie inside the circle")
    return d


def _h2_table(nmax, x):
    j, y = bessel_jy(nmax, np.asarray(x, dtype=float))
    return j - 1j * y


def _tail_check(partial, last_term, what):
    tail = np.max(np.abs(last_term))
    ref = np.max(np.abs(partial))
    if not np.isfinite(tail) or tail > _SERIES_TAIL_REL * max(ref, 1e-300):
        raise NumericalError(
            f"{what} series did not converge: tail {tail:.3g} vs partial {ref:.3g}; "
            "increase n_terms"
        )


def scatter_circle_tm(circle, tx, rx, w, n_terms=None):
    """Scattered out-of-plane E-field of a PEC circle under line-source
    illumination, via the cylindrical-harmonic series.

    rx may be a single point or an (Q, 2) array; the incident field is the
    same unit line-source kernel used elsewhere in the package.
    """
    tx = np.asarray(tx, dtype=float)
    rx_arr = np.atleast_2d(np.asarray(rx, dtype=float))
    scalar = np.asarray(rx, dtype=float).ndim == 1
    k = w.k
    a = circle.radius
    m_max = _series_orders(k * a, n_terms)

    rho_t = _check_outside(circle, tx, "transmitter")[0]
    rho_r = _check_outside(circle, rx_arr, "receivers")
    c = np.asarray(circle.center)
    phi_t = np.arctan2(tx[1] - c[1], tx[0] - c[0])
    phi_r = np.arctan2(rx_arr[:, 1] - c[1], rx_arr[:, 0] - c[0])

    ja, _ = bessel_jy(m_max, np.array([k * a]))
    h2a = _h2_table(m_max, np.array([k * a]))
    h2t = _h2_table(m_max, np.array([k * rho_t]))
    h2r = _h2_table(m_max, k * rho_r)

    orders = np.arange(m_max + 1)
    eps = np.where(orders == 0, 1.0, 2.0)
    coef = eps * (ja[:, 0] / h2a[:, 0]) * h2t[:, 0]
    terms = coef[:, None] * h2r * np.cos(orders[:, None] * (phi_r - phi_t)[None, :])
    total = 0.25 * w.omega * MU_0 * terms.sum(axis=0)
    _tail_check(total, 0.25 * w.omega * MU_0 * terms[-1], "TM circle")
    return complex(total[0]) if scalar else total


def _deriv(table, x):
    """Derivative of a cylinder-function table C_0..C_n at argument x."""
    d = np.empty_like(table)
    d[0] = -table[1]
    n = np.arange(1, table.shape[0])
    d[1:] = table[:-1] - (n[:, None] / x) * table[1:]
    return d


def incident_field_te(tx, pts, w):
    """In-plane E-field of the z-directed magnetic line source at tx."""
    tx = np.asarray(tx, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = pts - tx
    r = np.hypot(d[:, 0], d[:, 1])
    h1 = _h2_table(1, w.k * r)[1]
    pref = (0.25 * w.omega * EPS_0) * w.k / (1j * w.omega * EPS_0)
    return pref * (h1 / r)[:, None] * np.column_stack([d[:, 1], -d[:, 0]])


def scatter_circle_te(circle, tx, rx, w, n_terms=None):
    """Scattered in-plane E-field (E1, E2) of a PEC circle illuminated by a
    z-directed magnetic line source at tx.

    Returns an (Q, 2) array for (Q, 2) rx input, or a length-2 vector for a
    single receiver point.
    """
    tx = np.asarray(tx, dtype=float)
    rx_arr = np.atleast_2d(np.asarray(rx, dtype=float))
    scalar = np.asarray(rx, dtype=float).ndim == 1
    k = w.k
    a = circle.radius
    m_max = _series_orders(k * a, n_terms)

    rho_t = _check_outside(circle, tx, "transmitter")[0]
    rho_r = _check_outside(circle, rx_arr, "receivers")
    c = np.asarray(circle.center)
    phi_t = np.arctan2(tx[1] - c[1], tx[0] - c[0])
    phi_r = np.arctan2(rx_arr[:, 1] - c[1], rx_arr[:, 0] - c[0])
    dphi = phi_r - phi_t

    x_a = np.array([k * a])
    ja, ya = bessel_jy(m_max, x_a)
    jpa = _deriv(ja, x_a)
    h2a = ja - 1j * ya
    h2pa = _deriv(h2a, x_a)
    h2t = _h2_table(m_max, np.array([k * rho_t]))
    h2r = _h2_table(m_max, k * rho_r)
    h2pr = _deriv(h2r, k * rho_r)

    km = 0.25 * w.omega * EPS_0
    b = km * h2t[:, 0] * (jpa[:, 0] / h2pa[:, 0])

    orders = np.arange(1, m_max + 1)
    sin_t = np.sin(orders[:, None] * dphi[None, :])
    cos_t = np.cos(orders[:, None] * dphi[None, :])
    e_rho_terms = (2j * orders[:, None] / (w.omega * EPS_0 * rho_r[None, :])) * (
        b[1:, None] * h2r[1:] * sin_t
    )
    e_rho = e_rho_terms.sum(axis=0)
    e_phi_terms = (1j * k / (w.omega * EPS_0)) * b[1:, None] * h2pr[1:] * cos_t * 2.0
    e_phi = (1j * k / (w.omega * EPS_0)) * b[0] * h2pr[0] + e_phi_terms.sum(axis=0)

    _tail_check(
        np.concatenate([e_rho, e_phi]),
        np.concatenate([e_rho_terms[-1], e_phi_terms[-1]]),
        "TE circle",
    )
    e1 = e_rho * np.cos(phi_r) - e_phi * np.sin(phi_r)
    e2 = e_rho * np.sin(phi_r) + e_phi * np.cos(phi_r)
    out = np.column_stack([e1, e2])
    return out[0] if scalar else out


def circle_contour(circle, n_segments):
    """Polygonal sampling of a circle boundary (vertices, CCW)."""
    t = 2.0 * np.pi * np.arange(n_segments) / n_segments
    return np.column_stack(
        [circle.center[0] + circle.radius * np.cos(t), circle.center[1] + circle.radius * np.sin(t)]
    )


def resample_closed(points, n):
    """Resample a closed polyline to n equal-arclength vertices."""
    pts = np.asarray(points, dtype=float)
    loop = np.vstack([pts, pts[:1]])
    seg = np.diff(loop, axis=0)
    ds = np.hypot(seg[:, 0], seg[:, 1])
    s = np.concatenate([[0.0], np.cumsum(ds)])
    total = s[-1]
    target = total * np.arange(n) / n
    x = np.interp(target, s, loop[:, 0])
    y = np.interp(target, s, loop[:, 1])
    return np.column_stack([x, y])


def _segment_midpoints(vertices):
    nxt = np.roll(vertices, -1, axis=0)
    mid = 0.5 * (vertices + nxt)
    dl = np.hypot(*(nxt - vertices).T)
    return mid, dl


def _discretize_targets(targets, w, segments_per_wavelength):
    mids = []
    lens = []
    lam = w.wavelength
    for t in targets:
        if isinstance(t, Circle):
            per = 2.0 * np.pi * t.radius
            n = max(16, int(np.ceil(per / lam * segments_per_wavelength)))
            verts = circle_contour(t, n)
        elif isinstance(t, Contour):
            verts = t.points
            loop = np.vstack([verts, verts[:1]])
            per = float(np.sum(np.hypot(*np.diff(loop, axis=0).T)))
            n = max(verts.shape[0], int(np.ceil(per / lam * segments_per_wavelength)))
            if n > verts.shape[0]:
                verts = resample_closed(verts, n)
        else:
            raise TypeError(f"unsupported target type {type(t).__name__}")
        m, dl = _segment_midpoints(verts)
        mids.append(m)
        lens.append(dl)
    return np.vstack(mids), np.concatenate(lens)


class _MomSystem:
    """Point-matching EFIE system on pulse segments of PEC boundaries."""

    def __init__(self, midpoints, lengths, w, max_condition=1e12):
        self.mid = midpoints
        self.dl = lengths
        self.w = w
        amp = 0.25 * w.omega * MU_0
        d = midpoints[:, None, :] - midpoints[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        np.fill_diagonal(r, 1.0)
        z = -amp * _h2_table(0, w.k * r)[0] * lengths[None, :]
        diag = -amp * lengths * (
            1.0 - 2j / np.pi * (np.log(w.k * lengths / 4.0) + EULER_GAMMA - 1.0)
        )
        np.fill_diagonal(z, diag)
        cond = np.linalg.cond(z)
        if not np.isfinite(cond) or cond > max_condition:
            raise NumericalError(f"MoM impedance matrix is ill-conditioned (cond={cond:.3g})")
        self._lu = scipy.linalg.lu_factor(z)

    def currents(self, tx):
        rhs = -dipole_field_tm(np.asarray(tx, dtype=float), self.mid, self.w)
        return scipy.linalg.lu_solve(self._lu, rhs)

    def radiate(self, rx, currents):
        rx = np.atleast_2d(np.asarray(rx, dtype=float))
        kern = dipole_field_tm(self.mid[None, :, :], rx[:, None, :], self.w)
        return kern @ (currents * self.dl)


def scatter_mom_tm(targets, tx, rx_list, w, segments_per_wavelength=30):
    """Scattered E3 at rx_list from PEC target boundaries, by the EFIE
    method of moments (pulse basis, point matching, full coupling).

    targets may be a single Circle/Contour or a list of them.
    """
    if isinstance(targets, (Circle, Contour)):
        targets = [targets]
    if segments_per_wavelength < 10:
        raise ValueError("need at least 10 segments per wavelength")
    mid, dl = _discretize_targets(targets, w, segments_per_wavelength)
    sys = _MomSystem(mid, dl, w)
    return sys.radiate(rx_list, sys.currents(tx))


def sim1_scene():
    """Two PEC circles of radius 0.2 m centered at (-0.45, 0.6) and (0.45, 0.6)."""
    return [Circle((-0.45, 0.6), 0.2), Circle((0.45, 0.6), 0.2)]


def crescent_points(n=256):
    """Crescent boundary: circle A(0,0) r=0.6 minus circle B(0.4,0) r=0.6."""
    ra = rb = 0.6
    ca = np.array([0.0, 0.0])
    cb = np.array([0.4, 0.0])
    # intersection points of the two circles
    half = 0.5 * np.linalg.norm(cb - ca)
    y = np.sqrt(ra * ra - half * half)
    cut_a = np.arctan2(y, half)  # on A: +-cut_a
    cut_b = np.pi - np.arctan2(y, half)  # on B: +-cut_b

    n_a = max(16, int(round(n * 0.6)))
    n_b = max(16, n - n_a)
    # outer arc of A (counterclockwise through the far side), then back
    # along the inner arc of B (clockwise through the cavity)
    ta = np.linspace(cut_a, 2.0 * np.pi - cut_a, n_a, endpoint=False)
    arc_a = ca + ra * np.column_stack([np.cos(ta), np.sin(ta)])
    tb = np.linspace(2.0 * np.pi - cut_b, cut_b, n_b, endpoint=False)
    arc_b = cb + rb * np.column_stack([np.cos(tb), np.sin(tb)])
    return np.vstack([arc_a, arc_b])


def sim2_scene(n=256):
    """Crescent-shaped PEC cylinder scene."""
    return [Contour(crescent_points(n))]


def synth_dataset(scene, layout, pol, w, snr_db=None, seed=0,
                  segments_per_wavelength=30, engine=None):
    """Assemble the measurement matrix for a scene over a layout.

    Single TM circles use the harmonic series; all other TM scenes use the
    coupled MoM solver. TE supports single-circle scenes only. Complex white
    Gaussian noise is scaled so that the realized Frobenius SNR equals
    snr_db exactly; (seed, snr_db) are recorded for reproducibility.
    """
    targets = list(scene) if isinstance(scene, (list, tuple)) else [scene]
    orbit = min(np.min(np.hypot(*layout.tx.T)), np.min(np.hypot(*layout.rx.T)))
    for t in targets:
        if t.max_extent() >= orbit:
            raise ValueError("targets must lie strictly inside the measurement orbit")

    c = pol.channels_per_receiver
    y = np.zeros((c * layout.n_rx, layout.n_tx), dtype=complex)
    if pol is PolarizationMode.TM:
        use_series = len(targets) == 1 and isinstance(targets[0], Circle) and engine != "mom"
        if use_series:
            for p in range(layout.n_tx):
                y[:, p] = scatter_circle_tm(targets[0], layout.tx[p], layout.rx, w)
            engine = "series"
        else:
            mid, dl = _discretize_targets(targets, w, segments_per_wavelength)
            sys = _MomSystem(mid, dl, w)
            for p in range(layout.n_tx):
                y[:, p] = sys.radiate(layout.rx, sys.currents(layout.tx[p]))
            engine = "mom"
    else:
        if len(targets) != 1 or not isinstance(targets[0], Circle):
            raise ValueError("TE synthesis supports a single circle target only")
        for p in range(layout.n_tx):
            e = scatter_circle_te(targets[0], layout.tx[p], layout.rx, w)
            y[0::2, p] = e[:, 0]
            y[1::2, p] = e[:, 1]
        engine = "series"

    mask = np.repeat(layout.active.T, c, axis=0)
    y[~mask] = 0.0
    used_seed = None
    if snr_db is not None:
        used_seed = int(seed)
        rng = np.random.default_rng(used_seed)
        u = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        u[~mask] = 0.0
        signal = np.linalg.norm(y)
        u *= signal * 10.0 ** (-snr_db / 20.0) / np.linalg.norm(u)
        y = y + u
    return MeasurementSet(
        y=y,
        polarization=pol,
        frequency=w.frequency,
        layout=layout,
        snr_db=snr_db,
        seed=used_seed,
        engine=engine,
    )
