"""Group-sparse spectral projected gradient solver.

Minimizes the masked Frobenius data misfit subject to a mixed-norm budget
(sum over pixel groups of the group Frobenius norm), probes the Pareto
curve of optimal misfit versus budget with Newton root-finding, and offers
a cross-validation stopping rule for unknown noise levels.
"""

import collections
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

_TINY_REL = 1e-14


@dataclass(frozen=True)
class GroupStructure:
    """Partition of contrast-source rows into per-pixel groups.

    size is the number of consecutive rows per group (1 for scalar fields,
    2 for the in-plane two-component case); count is the number of groups.
    """

    size: int
    count: int

    def __post_init__(self):
        if self.size < 1 or self.count < 1:
            raise ValueError("invalid group structure")

    @property
    def n_rows(self):
        return self.size * self.count


def _groups_for(rows, groups):
    if isinstance(groups, GroupStructure):
        g = groups
    else:
        size = int(groups)
        if rows % size:
            raise ValueError("row count is not a multiple of the group size")
        g = GroupStructure(size, rows // size)
    if g.n_rows != rows:
        raise ValueError(f"group structure covers {g.n_rows} rows, matrix has {rows}")
    return g


def _as_matrix(j):
    j = np.asarray(j)
    return (j[:, None], True) if j.ndim == 1 else (j, False)


def group_norms(j, groups):
    """Euclidean norm of each group's rows stacked across all columns."""
    j, _ = _as_matrix(j)
    g = _groups_for(j.shape[0], groups)
    sq = np.abs(np.ascontiguousarray(j)) ** 2
    return np.sqrt(sq.reshape(g.count, g.size * j.shape[1]).sum(axis=1))


def group_norm_12(j, groups):
    """Mixed (1,2)-norm: sum of group norms."""
    return float(group_norms(j, groups).sum())


def group_norm_inf2(z, groups):
    """Dual mixed norm: maximum group norm."""
    n = group_norms(z, groups)
    return float(n.max()) if n.size else 0.0


def _project_l1_nonneg(v, tau):
    """Project a nonnegative vector with sum(v) > tau onto the l1 ball."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    cand = (css - tau) / idx
    rho = np.nonzero(u > cand)[0][-1]
    return np.maximum(v - cand[rho], 0.0)


def project_group_l1(j, groups, tau):
    """Euclidean projection onto the mixed-norm ball of radius tau.

    The group-norm vector is projected onto the real l1 ball by the
    sorted-threshold rule and each group is rescaled by the ratio of
    projected to original norm (zero groups stay zero).
    """
    if tau < 0:
        raise ValueError("projection radius must be >= 0")
    jm, was_vec = _as_matrix(j)
    g = _groups_for(jm.shape[0], groups)
    if tau == 0:
        out = np.zeros_like(jm, dtype=complex)
        return out[:, 0] if was_vec else out
    v = group_norms(jm, g)
    if v.sum() <= tau:
        out = jm.astype(complex).copy()
        return out[:, 0] if was_vec else out
    w = _project_l1_nonneg(v, tau)
    scale = np.divide(w, v, out=np.zeros_like(w), where=v > 0)
    out = jm * np.repeat(scale, g.size)[:, None]
    return out[:, 0] if was_vec else out


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs of the projected-gradient engine.

    eps_gap_rel and the initial subproblem tolerance are relative to the
    data norm; eps_root is relative to max(1, data norm). sigma=None selects
    cross-validation mode in the high-level drivers.
    """

    alpha_min: float = 1e-16
    alpha_max: float = 1e16
    gamma: float = 1e-4
    history: int = 3
    eps_gap_rel: float = 1e-6
    eps_root: float = 1e-5
    patience: int = 30
    max_iters: int = 600
    sigma: float = None
    max_newton: int = 60
    subtol_start_rel: float = 1e-1
    subtol_factor: float = 0.1
    max_backtracks: int = 50

    def __post_init__(self):
        if not (0 < self.alpha_min < self.alpha_max):
            raise ValueError("need 0 < alpha_min < alpha_max")
        if not (0 < self.gamma < 0.5):
            raise ValueError("gamma must lie in (0, 0.5)")
        if self.history < 1:
            raise ValueError("line-search history must be >= 1")


@dataclass
class SolveTrace:
    """Per-iteration solve record plus the Newton-level Pareto samples."""

    iteration: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    r_rec: list = field(default_factory=list)
    r_cv: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    # nonmonotone line-search bookkeeping of the step that produced each
    # iterate: reference max of recent squared residuals and the projected
    # descent inner product (nan for the initial iterate of a subproblem)
    ref_res2: list = field(default_factory=list)
    descent: list = field(default_factory=list)
    newton_taus: list = field(default_factory=list)
    newton_phis: list = field(default_factory=list)
    exit_reason: str = "running"
    patience_triggered: bool = False

    @property
    def n_iterations(self):
        return len(self.iteration)

    @property
    def n_opt(self):
        vals = np.asarray(self.r_cv, dtype=float)
        if vals.size == 0 or np.all(np.isnan(vals)):
            return None
        return int(np.nanargmin(vals))

    def save(self, path):
        """Write the delimited iteration log (iteration, tau, r_rec, r_cv, gap)."""
        with open(path, "w") as f:
            f.write("iteration\ttau\tr_rec\tr_cv\tgap\n")
            for i in range(self.n_iterations):
                f.write(
                    "%d\t%.17g\t%.17g\t%.17g\t%.17g\n"
                    % (self.iteration[i], self.tau[i], self.r_rec[i], self.r_cv[i], self.gap[i])
                )


class _Problem:
    """Masked least-squares data term ||mask o (Y - Phi J)||_F."""

    def __init__(self, phi, y, mask=None):
        self.phi = np.ascontiguousarray(phi)
        y = np.asarray(y, dtype=complex)
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(y))):
            raise ValueError("operator and data must be finite")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != y.shape:
                raise ValueError("mask shape must match data shape")
            y = np.where(mask, y, 0.0)
        self.mask = mask
        self.y = y
        self.y_norm = float(np.linalg.norm(y))
        if phi.shape[0] != y.shape[0]:
            raise ValueError("operator and data row counts differ")

    def residual(self, j):
        r = self.y - self.phi @ j
        if self.mask is not None:
            r = np.where(self.mask, r, 0.0)
        return r

    def grad(self, r):
        return -(self.phi.conj().T @ r)


class _Recorder:
    """Collects the iteration log and drives CV bookkeeping and budgets."""

    def __init__(self, cfg, trace, budget, cv_problem=None):
        self.cfg = cfg
        self.trace = trace
        self.budget = budget
        self.cv = cv_problem
        self.count = 0
        self.best_j = None
        self.best_cv = np.inf
        self.best_idx = 0

    def record(self, j, tau, r_rec, gap, alpha, backtracks, feas, ref, descent):
        t = self.trace
        r_cv = np.nan
        if self.cv is not None:
            r_cv = float(np.linalg.norm(self.cv.residual(j)))
            if r_cv < self.best_cv:
                self.best_cv = r_cv
                self.best_j = j.copy()
                self.best_idx = self.count
        t.iteration.append(self.count)
        t.tau.append(float(tau))
        t.r_rec.append(float(r_rec))
        t.r_cv.append(r_cv)
        t.gap.append(float(gap))
        t.alpha.append(float(alpha))
        t.backtracks.append(int(backtracks))
        t.feasibility.append(float(feas))
        t.ref_res2.append(float(ref))
        t.descent.append(float(descent))
        self.count += 1
        if self.cv is not None and self.count - 1 > self.best_idx + self.cfg.patience:
            t.patience_triggered = True
            return "patience"
        if self.count >= self.budget:
            return "budget"
        return None


def _spg(problem, j_init, tau, groups, cfg, gap_tol, recorder):
    """Inner projected-gradient loop for one mixed-norm budget tau."""
    j = project_group_l1(j_init, groups, tau)
    r = problem.residual(j)
    g = problem.grad(r)
    tiny = _TINY_REL * max(1.0, problem.y_norm)

    g0 = group_norm_inf2(problem.grad(problem.residual(np.zeros_like(j))), groups)
    alpha = tau / g0 if (tau > 0 and g0 > 0) else 1.0
    alpha = min(cfg.alpha_max, max(cfg.alpha_min, alpha))

    recent = collections.deque(maxlen=cfg.history)
    last_alpha, last_bt = alpha, 0
    last_ref, last_descent = np.nan, np.nan
    while True:
        r_norm = float(np.linalg.norm(r))
        if r_norm <= tiny:
            gap = 0.0
        else:
            dual = (np.real(np.vdot(problem.y, r)) - tau * group_norm_inf2(g, groups)) / r_norm
            gap = abs(r_norm - dual)
        stop = recorder.record(j, tau, r_norm, gap, last_alpha, last_bt,
                               group_norm_12(j, groups), last_ref, last_descent)
        if stop is not None:
            return j, r, stop
        if r_norm <= tiny:
            return j, r, "zero"
        if gap <= gap_tol:
            return j, r, "gap"

        recent.append(r_norm * r_norm)
        ref = max(recent)
        a = alpha
        accepted = False
        for bt in range(cfg.max_backtracks + 1):
            j_bar = project_group_l1(j - a * g, groups, tau)
            r_bar = problem.residual(j_bar)
            descent = float(np.real(np.vdot(j_bar - j, g)))
            if np.linalg.norm(r_bar) ** 2 <= ref + cfg.gamma * descent:
                accepted = True
                break
            a *= 0.5
        if not accepted:
            return j, r, "linesearch"
        last_alpha, last_bt = a, bt
        last_ref, last_descent = ref, descent

        g_bar = problem.grad(r_bar)
        dj = j_bar - j
        dg = g_bar - g
        denom = float(np.real(np.vdot(dj, dg)))
        if denom <= 0:
            alpha = cfg.alpha_max
        else:
            alpha = min(cfg.alpha_max, max(cfg.alpha_min, float(np.real(np.vdot(dj, dj))) / denom))
        j, r, g = j_bar, r_bar, g_bar
        if not (np.all(np.isfinite(j)) and np.all(np.isfinite(r))):
            err = NumericalError("solver produced non-finite iterates")
            err.trace = recorder.trace
            raise err


def spg_solve_lstau(phi, y, j_init, tau, groups, config=None, mask=None):
    """Solve one mixed-norm-constrained least-squares problem.

    Returns (J, R, trace) where R = Y - Phi J on the masked channels and J
    satisfies the budget within 1e-9.
    """
    cfg = config or SolverConfig()
    if tau < 0:
        raise ValueError("tau must be >= 0")
    ym, was_vec = _as_matrix(np.asarray(y, dtype=complex))
    problem = _Problem(phi, ym, mask)
    g = _groups_for(phi.shape[1], groups)
    if j_init is None:
        j_init = np.zeros((phi.shape[1], ym.shape[1]), dtype=complex)
    else:
        j_init, _ = _as_matrix(np.asarray(j_init, dtype=complex))
    trace = SolveTrace()
    rec = _Recorder(cfg, trace, cfg.max_iters)
    gap_tol = cfg.eps_gap_rel * problem.y_norm
    j, r, reason = _spg(problem, j_init, tau, g, cfg, gap_tol, rec)
    trace.exit_reason = reason
    if was_vec:
        return j[:, 0], r[:, 0], trace
    return j, r, trace


def pareto_value_and_slope(phi, y, j_tau, groups, mask=None):
    """Misfit phi(tau) and its derivative at an LS_tau solution.

    Returns (phi, slope); slope is None when the misfit is (numerically)
    zero, signalling that the root of the Pareto curve has been reached.
    """
    ym, _ = _as_matrix(np.asarray(y, dtype=complex))
    jm, _ = _as_matrix(np.asarray(j_tau, dtype=complex))
    problem = _Problem(phi, ym, mask)
    g = _groups_for(phi.shape[1], groups)
    r = problem.residual(jm)
    phi_val = float(np.linalg.norm(r))
    if phi_val <= _TINY_REL * max(1.0, problem.y_norm):
        return phi_val, None
    slope = -group_norm_inf2(problem.grad(r), g) / phi_val
    return phi_val, slope


def _newton_spg(problem, sigma, groups, cfg, cv_problem=None):
    """Newton root-finding on the Pareto curve with SPG subproblem solves."""
    n_cols = problem.y.shape[1]
    j = np.zeros((problem.phi.shape[1], n_cols), dtype=complex)
    trace = SolveTrace()
    rec = _Recorder(cfg, trace, cfg.max_iters, cv_problem)
    y_norm = problem.y_norm
    root_tol = cfg.eps_root * max(1.0, y_norm)
    tiny = _TINY_REL * max(1.0, y_norm)

    if sigma >= y_norm:
        trace.exit_reason = "root"
        trace.newton_taus.append(0.0)
        trace.newton_phis.append(y_norm)
        return j, trace

    tau = 0.0
    sub_tol = cfg.subtol_start_rel * y_norm
    gap_floor = cfg.eps_gap_rel * y_norm
    reason = "newton_budget"
    for _ in range(cfg.max_newton):
        r = problem.residual(j)
        phi_val = float(np.linalg.norm(r))
        trace.newton_taus.append(tau)
        trace.newton_phis.append(phi_val)
        if abs(phi_val - sigma) <= root_tol or phi_val <= tiny:
            reason = "root"
            break
        slope = -group_norm_inf2(problem.grad(r), groups) / phi_val
        if not slope < 0:
            err = NumericalError("nonnegative Pareto slope encountered")
            err.trace = trace
            raise err
        tau = tau + (sigma - phi_val) / slope
        if not np.isfinite(tau) or tau < 0:
            err = NumericalError("Newton update produced an invalid budget")
            err.trace = trace
            raise err
        j, _, reason = _spg(problem, j, tau, groups, cfg, max(gap_floor, sub_tol), rec)
        sub_tol *= cfg.subtol_factor
        if reason in ("patience", "budget", "zero", "linesearch"):
            break
    trace.exit_reason = reason
    if cv_problem is not None and rec.best_j is not None:
        return rec.best_j, trace
    return j, trace


def newton_root_bpsigma(phi, y, sigma, groups, config=None, mask=None):
    """Solve the noise-constrained problem: smallest mixed norm such that
    the masked misfit does not exceed sigma.

    Each budget subproblem is warm-started from the previous solution and
    solved to a geometrically tightening gap tolerance.
    """
    cfg = config or SolverConfig()
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    ym, was_vec = _as_matrix(np.asarray(y, dtype=complex))
    problem = _Problem(phi, ym, mask)
    g = _groups_for(phi.shape[1], groups)
    j, trace = _newton_spg(problem, float(sigma), g, cfg)
    return (j[:, 0], trace) if was_vec else (j, trace)


def cv_spgl1(phi_full, y_full, layout, groups, config=None, mask_full=None,
             channels_per_receiver=None):
    """Noise-blind inversion: drive the misfit toward zero on the
    reconstruction receivers and stop by the cross-validation residual.

    Rows of phi_full/y_full are receiver channels; the layout's CV
    receivers are removed from the operator seen by the solver and only
    score candidate solutions. Returns the iterate with the smallest CV
    residual and the full trace.
    """
    cfg = config or SolverConfig()
    g = _groups_for(phi_full.shape[1], groups)
    ym, was_vec = _as_matrix(np.asarray(y_full, dtype=complex))
    c = g.size if channels_per_receiver is None else int(channels_per_receiver)
    if phi_full.shape[0] != c * layout.n_rx:
        raise ValueError("operator rows do not match layout receivers")
    cv_idx = layout.cv_indices
    if cv_idx.size == 0:
        raise ValueError("layout has no cross-validation receivers")
    rec_rows = np.repeat(layout.recon_indices * c, c) + np.tile(np.arange(c), layout.recon_indices.size)
    cv_rows = np.repeat(cv_idx * c, c) + np.tile(np.arange(c), cv_idx.size)

    def sub(idx):
        m = None if mask_full is None else np.asarray(mask_full, dtype=bool)[idx]
        return _Problem(phi_full[idx], ym[idx], m)

    problem = sub(rec_rows)
    cv_problem = sub(cv_rows)
    j, trace = _newton_spg(problem, 0.0, g, cfg, cv_problem=cv_problem)
    return (j[:, 0], trace) if was_vec else (j, trace)
