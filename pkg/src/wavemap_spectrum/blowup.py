"""Nonlinear evolution of the radial wave-map equation to blowup.

Solves ``u_tt = u_rr + 2 u_r / r - sin(2u) / r^2`` on a uniform grid in
``r`` and extracts the approach to the self-similar profile ``2 arctan(rho)``.
Second-order centred differences are used for ``u_rr`` and ``u_r``; both are
exact on ``u = a r``, so at the first node the ``2a/r`` terms cancel against
the potential and the origin needs nothing beyond ``u(t, 0) = 0``.  Time
stepping is classical RK4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

logger = logging.getLogger(__name__)

TRUST = 0.5
MIN_SCALE = 5.0


@dataclass
class WaveState:
    r: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    t: float = 0.0

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    def copy(self) -> WaveState:
        return WaveState(self.r.copy(), self.u.copy(), self.ut.copy(), self.t)


def grid(R: float, n: int) -> np.ndarray:
    """``n + 1`` nodes on ``[0, R]``."""
    return np.linspace(0.0, R, n + 1)


def _smoothstep(x):
    """C^2 step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x * x)


def make_initial_data(kind: str, R: float = 4.0, n: int = 4000, **params) -> WaveState:
    """Initial data ``(u, u_t)`` at ``t = 0``.

    Parameters
    ----------
    kind : {"exact-self-similar", "truncated", "gaussian-lump", "zero"}
        ``exact-self-similar`` is ``2 arctan(r / T)`` with its time derivative;
        ``truncated`` multiplies both by a C^2 cutoff that is 1 on ``r <= 2T``
        and 0 on ``r >= 3T``; ``gaussian-lump`` is the odd profile
        ``a r exp(-r^2/w^2)`` with ``u_t = 0`` (``ingoing=True`` instead sets
        ``u_t = u_r + u / r``).
    R, n : float, int
        Outer radius and number of cells.
    **params
        ``T`` (> 0) for the self-similar kinds; ``amplitude`` and ``width``
        (> 0) for the lump.

    Raises
    ------
    ValueError
        On unknown kinds, bad parameters, or data whose gradient is not
        resolved (``max|u_r| h > 0.1``).
    """
    r = grid(R, n)
    if kind == "zero":
        u, ut = np.zeros_like(r), np.zeros_like(r)
    elif kind in ("exact-self-similar", "truncated"):
        T = float(params.get("T", 1.0))
        if T <= 0:
            raise ValueError("T must be positive")
        u = 2 * np.arctan(r / T)
        ut = 2 * r / (T * T + r * r)
        if kind == "truncated":
            chi = 1 - _smoothstep((r - 2 * T) / T)
            u, ut = u * chi, ut * chi
    elif kind == "gaussian-lump":
        a = float(params.get("amplitude", 1.0))
        w = float(params.get("width", 1.0))
        if w <= 0:
            raise ValueError("width must be positive")
        g = np.exp(-(r * r) / (w * w))
        u = a * r * g
        if params.get("ingoing", False):
            ut = a * g * (2 - 2 * r * r / (w * w))
        else:
            ut = np.zeros_like(r)
    else:
        raise ValueError(f"unknown initial data kind {kind!r}")
    h = r[1] - r[0]
    if np.max(np.abs(np.diff(u))) > 0.1:
        raise ValueError(f"initial data not resolved: max|u_r| h = {np.max(np.abs(np.diff(u))):.3g}")
    u[0] = 0.0
    ut[0] = 0.0
    return WaveState(r, u.astype(float), ut.astype(float), 0.0)


class _Operator:
    """Right-hand side ``u_tt = L u`` on the interior nodes ``1..n-1``."""

    def __init__(self, r: np.ndarray):
        h = r[1] - r[0]
        ri = r[1:-1]
        self.cp = 1 / (h * h) + 1 / (h * ri)
        self.cm = 1 / (h * h) - 1 / (h * ri)
        self.c0 = 2 / (h * h)
        self.inv_r2 = 1 / (ri * ri)

    def accel(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        ui = u[1:-1]
        out[1:-1] = self.cp * u[2:] - self.c0 * ui + self.cm * u[:-2] - np.sin(2 * ui) * self.inv_r2
        return out


def energy(state: WaveState) -> float:
    """Discrete energy, the integral of ``(u_t^2 + u_r^2 + 2 sin^2 u / r^2) r^2``.

    ``sum h r_j^2 u_t^2 + sum h r_{j+1/2}^2 (D u)^2 + sum 2 h sin^2 u_j`` with
    gradients on cell midpoints; second-order accurate.
    """
    r, u, ut, h = state.r, state.u, state.ut, state.h
    rh = r[:-1] + h / 2
    kin = h * np.sum(r[1:-1] ** 2 * ut[1:-1] ** 2)
    grad = np.sum(rh**2 * np.diff(u) ** 2) / h
    pot = 2 * h * np.sum(np.sin(u[1:-1]) ** 2)
    return float(kin + grad + pot)


def central_slope(u: np.ndarray, h: float) -> float:
    """``u_r(0)`` from ``u = a r + b r^3``: ``a = (8 u_1 - u_2) / (6 h)``."""
    return (8 * u[1] - u[2]) / (6 * h)


@dataclass
class Trajectory:
    """Snapshots, diagnostics and the stop reason of one evolution.

    ``status`` is ``"completed"`` (reached ``t_end``), ``"resolution-limit"``
    (``max|u_r| h`` exceeded the trust bound, the expected end of a blowup
    run) or ``"unstable"`` (NaN or energy explosion of the scheme).
    """

    snapshots: list
    times: np.ndarray
    slopes: np.ndarray
    gradient_h: np.ndarray
    energy_times: np.ndarray
    energies: np.ndarray
    status: str
    cfl: float
    params: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return self.snapshots[0].h

    def energy_drift(self) -> float:
        """Largest relative deviation of the energy from its initial value."""
        e0 = self.energies[0]
        if e0 == 0:
            return float(np.max(np.abs(self.energies)))
        return float(np.max(np.abs(self.energies - e0)) / abs(e0))


def evolve(
    s0: WaveState,
    cfl: float = 0.5,
    t_end: float = 1.0,
    snapshot_every: int = 10,
    trust: float = TRUST,
    explode: float = 10.0,
) -> Trajectory:
    """RK4 evolution with ``dt = cfl h`` until ``t_end`` or loss of resolution.

    The origin node is pinned to 0 and the outer node keeps its initial value
    (a reflecting wall); the outer radius should be beyond causal reach of the
    region of interest.
    The run stops once ``max|u_r| h > trust`` or the energy leaves
    ``[E0/explode, E0*explode]``.
    """
    if not 0 < cfl <= 0.9:
        raise ValueError("cfl must lie in (0, 0.9]")
    h = s0.h
    op = _Operator(s0.r)
    dt = cfl * h
    n_steps = int(math.ceil((t_end - s0.t) / dt - 1e-9))
    u, v, t = s0.u.copy(), s0.ut.copy(), s0.t
    v[0] = v[-1] = 0.0
    e0 = energy(s0)
    snaps, times, slopes, grads, et, es = [s0.copy()], [t], [central_slope(u, h)], [np.max(np.abs(np.diff(u)))], [t], [e0]
    status = "completed"
    for step in range(1, n_steps + 1):
        dt_k = min(dt, t_end - t)
        k1u, k1v = v, op.accel(u)
        k2u, k2v = v + 0.5 * dt_k * k1v, op.accel(u + 0.5 * dt_k * k1u)
        k3u, k3v = v + 0.5 * dt_k * k2v, op.accel(u + 0.5 * dt_k * k2u)
        k4u, k4v = v + dt_k * k3v, op.accel(u + dt_k * k3u)
        u = u + dt_k / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + dt_k / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t = s0.t + step * dt if dt_k == dt else t_end
        gh = float(np.max(np.abs(np.diff(u))))
        if not np.isfinite(gh):
            status = "unstable"
            break
        times.append(t)
        slopes.append(central_slope(u, h))
        grads.append(gh)
        state = WaveState(s0.r, u, v, t)
        if step % snapshot_every == 0 or step == n_steps or gh > trust:
            e = energy(state)
            et.append(t)
            es.append(e)
            snaps.append(state.copy())
            if e0 > 0 and not e0 / explode < e < e0 * explode:
                status = "unstable"
                break
        if gh > trust:
            status = "resolution-limit"
            break
    logger.debug("evolve: %s at t=%.6g after %d steps", status, t, len(times) - 1)
    return Trajectory(
        snaps,
        np.array(times),
        np.array(slopes),
        np.array(grads),
        np.array(et),
        np.array(es),
        status,
        cfl,
    )


@dataclass(frozen=True)
class BlowupEstimate:
    blowup: bool
    T: float
    uncertainty: float
    n_points: int
    window: tuple

    def as_dict(self):
        return {
            "blowup": self.blowup,
            "T": self.T,
            "uncertainty": self.uncertainty,
            "n_points": self.n_points,
            "window": list(self.window),
        }


NO_BLOWUP = BlowupEstimate(False, math.nan, math.nan, 0, (math.nan, math.nan))


def detect_blowup(traj: Trajectory, decade: float = 10.0, trust: float = TRUST) -> BlowupEstimate:
    """Blowup time from ``1 / u_r(t, 0) = (T - t) / 2`` over the last decade of growth.

    A linear regression of ``1/slope`` on ``t`` is made over the resolved
    samples whose slope lies within a factor ``decade`` of the final one;
    ``T`` is where the line crosses zero.  Runs that did not end by loss of
    resolution, or whose slope did not grow by ``decade`` monotonically over
    that tail, return ``NO_BLOWUP``.
    """
    if traj.status != "resolution-limit":
        return NO_BLOWUP
    ok = traj.gradient_h <= trust
    t, s = traj.times[ok], traj.slopes[ok]
    if len(s) < 3 or s[-1] <= 0:
        return NO_BLOWUP
    start = len(s) - 1
    while start > 0 and s[start - 1] >= s[-1] / decade:
        start -= 1
    if start == 0 and s[0] >= s[-1] / decade:
        return NO_BLOWUP
    t, y = t[start:], 1 / s[start:]
    if len(t) < 3 or np.any(np.diff(y) >= 0):
        return NO_BLOWUP
    A = np.vstack([np.ones_like(t), t]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    a, b = coef
    T = -a / b
    dof = max(len(t) - 2, 1)
    sigma2 = float(np.sum((A @ coef - y) ** 2)) / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    grad = np.array([-1 / b, a / b**2])
    unc = float(np.sqrt(max(grad @ cov @ grad, 0.0)))
    return BlowupEstimate(True, float(T), unc, len(t), (float(t[0]), float(t[-1])))


@dataclass(frozen=True)
class Frame:
    t: float
    tau: float
    rho: np.ndarray
    U: np.ndarray


def similarity_frame(traj: Trajectory, T: float, rho=None, min_scale: float = MIN_SCALE) -> list:
    """Snapshots as profiles ``U(tau, rho) = u(t, (T - t) rho)`` on ``rho`` in ``[0, 1]``.

    Cubic-spline interpolation in ``r``; snapshots with ``T - t < min_scale h``
    (or past ``T``) are dropped.
    """
    if rho is None:
        rho = np.linspace(0.0, 1.0, 101)
    rho = np.asarray(rho, dtype=float)
    frames = []
    for s in traj.snapshots:
        L = T - s.t
        if L < min_scale * s.h:
            continue
        r_max = L * rho[-1]
        m = min(len(s.r), int(np.searchsorted(s.r, r_max)) + 4)
        spline = CubicSpline(s.r[:m], s.u[:m])
        U = spline(L * rho)
        U[rho == 0] = 0.0
        frames.append(Frame(s.t, -math.log(L), rho, U))
    return frames


def thin_frames(frames, dtau: float) -> list:
    """Keep frames at least ``dtau`` apart in ``tau`` (the first is kept)."""
    out = []
    for f in frames:
        if not out or f.tau - out[-1].tau >= dtau:
            out.append(f)
    return out


def self_similar_profile(rho):
    return 2 * np.arctan(rho)


@dataclass
class FitResult:
    """Least-damped mode fitted to the deviation ``U - U0``.

    ``lam_fit`` comes from the log-slope of the per-frame amplitudes,
    ``lam_global`` / ``c1`` from a single fit of ``c1 exp(lam tau)`` to them.
    """

    c1: float
    lam_fit: float
    lam_fit_err: float
    lam_global: float
    tau_window: tuple
    residual_norm: float
    shape_residuals: np.ndarray
    amplitudes: np.ndarray
    taus: np.ndarray
    mode: np.ndarray
    rho: np.ndarray
    gauge: np.ndarray | None = None
    n_frames: int = 0

    def as_dict(self):
        return {
            "c1": self.c1,
            "lam_fit": self.lam_fit,
            "lam_fit_err": self.lam_fit_err,
            "lam_global": self.lam_global,
            "tau_window": list(self.tau_window),
            "residual_norm": self.residual_norm,
            "n_frames": self.n_frames,
            "max_shape_residual": float(np.max(self.shape_residuals)) if len(self.shape_residuals) else None,
        }


def gauge_profile(rho):
    """``rho U0'(rho) = 2 rho / (1 + rho^2)``: the shift-of-``T`` direction divided by ``e^tau``."""
    return 2 * rho / (1 + rho * rho)


def normalized_mode(v_over_rho: np.ndarray) -> np.ndarray:
    """Scale so that the maximum over the grid of ``v1 / rho`` equals 1."""
    m = v_over_rho[np.argmax(np.abs(v_over_rho))]
    return v_over_rho / m


class FitError(ValueError):
    pass


def fit_mode(
    frames,
    mode,
    rho_window=(0.05, 0.95),
    max_shape_residual: float = 0.3,
    gauge: bool = False,
    tau_min: float | None = None,
    min_frames: int = 5,
) -> FitResult:
    """Fit ``U - U0 ~ A(tau) mode(rho)`` frame by frame and the rate of ``A``.

    Parameters
    ----------
    frames : sequence of Frame
        Similarity-frame profiles on a common ``rho`` grid.
    mode : array
        ``v1 / rho`` on that grid, normalised with :func:`normalized_mode`.
    rho_window : tuple
        The L^2 norm (weight ``rho^2``) is taken on this range.
    max_shape_residual : float
        Frames whose relative distance from their projection exceeds this are
        outside the trust window and are dropped.
    gauge : bool
        Also project out the ``rho U0'`` direction each frame.  A small error
        ``dT`` in the blowup time puts ``dT e^tau rho U0'`` into ``U - U0``.
    tau_min : float, optional
        Ignore frames before this ``tau``.

    Raises
    ------
    FitError
        Fewer than ``min_frames`` frames survive the window rules.
    """
    frames = [f for f in frames if tau_min is None or f.tau >= tau_min]
    if not frames:
        raise FitError("no frames")
    rho = frames[0].rho
    sel = (rho >= rho_window[0]) & (rho <= rho_window[1])
    w = np.sqrt(rho[sel] ** 2)
    mode = np.asarray(mode, dtype=float)
    basis = [mode[sel]]
    if gauge:
        basis.append(gauge_profile(rho[sel]))
    B = np.array(basis).T * w[:, None]
    taus, amps, gs, shapes = [], [], [], []
    for f in frames:
        d = (f.U - self_similar_profile(rho))[sel] * w
        coef, *_ = np.linalg.lstsq(B, d, rcond=None)
        proj = B @ coef
        nd = np.linalg.norm(d)
        shape = float(np.linalg.norm(d - proj) / nd) if nd > 0 else 0.0
        if shape > max_shape_residual:
            continue
        taus.append(f.tau)
        amps.append(coef[0])
        gs.append(coef[1] if gauge else 0.0)
        shapes.append(shape)
    if len(taus) < min_frames:
        raise FitError(f"only {len(taus)} frames pass the shape-residual rule (need {min_frames})")
    taus, amps, shapes = np.array(taus), np.array(amps), np.array(shapes)
    if np.any(amps == 0) or np.any(np.sign(amps) != np.sign(amps[0])):
        raise FitError("amplitude changes sign inside the window")
    y = np.log(np.abs(amps))
    A = np.vstack([np.ones_like(taus), taus]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(taus) - 2, 1)
    sigma2 = float(np.sum((A @ coef - y) ** 2)) / dof
    lam_err = float(np.sqrt(sigma2 * np.linalg.inv(A.T @ A)[1, 1]))
    lam_fit = float(coef[1])
    lam_g, c1 = _global_fit(taus, amps, lam_fit, math.copysign(math.exp(coef[0]), amps[0]))
    model = c1 * np.exp(lam_g * taus)
    resid = float(np.linalg.norm(amps - model) / np.linalg.norm(amps))
    return FitResult(
        float(c1),
        lam_fit,
        lam_err,
        float(lam_g),
        (float(taus[0]), float(taus[-1])),
        resid,
        shapes,
        amps,
        taus,
        mode,
        rho,
        np.array(gs) if gauge else None,
        len(taus),
    )


def _global_fit(taus, amps, lam0, c0):
    def res(p):
        return p[1] * np.exp(p[0] * taus) - amps

    sol = least_squares(res, [lam0, c0], method="lm")
    return sol.x[0], sol.x[1]


def advance_window(frames, mode, step: float = 0.5, tol: float = 2.5e-4, tau_start: float | None = None, **kw) -> FitResult:
    """Move the start of the fit window to later ``tau`` until the rate settles.

    Higher modes bias the log-slope by a term decaying like
    ``exp((lam_k - lam_1) tau_min)``.  Windows start at ``tau_start`` (default
    the first frame) and advance by ``step``; the fit of the first window
    whose estimate differs from the previous one by less than ``tol`` is
    returned.  ``kw`` goes to :func:`fit_mode`.

    Windows that fail :func:`fit_mode` (too few frames passing the shape
    rule, or a sign change of the amplitude) are skipped.

    Raises
    ------
    FitError
        The frames run out before two consecutive estimates agree.
    """
    tau = frames[0].tau if tau_start is None else tau_start
    min_frames = kw.get("min_frames", 5)
    prev = None
    while sum(f.tau >= tau for f in frames) >= min_frames:
        try:
            fit = fit_mode(frames, mode, tau_min=tau, **kw)
        except FitError:
            fit = None
        if fit is not None and prev is not None and abs(fit.lam_fit - prev.lam_fit) < tol:
            return fit
        prev = fit
        tau += step
    raise FitError(f"fit window did not settle before the frames ran out (tau = {tau:.3g})")


def refine_blowup_time(traj: Trajectory, T: float, mode, rho, tau_min: float, min_scale: float = 20.0,
                       dtau: float = 0.05, iterations: int = 5, tol: float = 1e-10):
    """Correct ``T`` with the gauge component of the late frames.

    Evaluating the frames with ``T + dT`` adds ``dT exp(tau) rho U0'`` to
    ``U - U0``.  The per-frame gauge coefficient ``g`` therefore gives
    ``dT = g exp(-tau)``; its median over the last third of the window is
    subtracted until the update falls below ``tol``.  Returns ``(T, fit)``.
    """
    fit = None
    for _ in range(iterations):
        frames = thin_frames(similarity_frame(traj, T, rho, min_scale=min_scale), dtau)
        fit = fit_mode(frames, mode, gauge=True, tau_min=tau_min)
        dT = fit.gauge * np.exp(-fit.taus)
        k = max(len(dT) // 3, 1)
        shift = float(np.median(dT[-k:]))
        T -= shift
        if abs(shift) < tol:
            break
    return T, fit


def synthetic_frames(taus, mode, rho, c1=0.1, lam1=-0.5424663534, extra=()):
    """Manufactured frames ``U0 + c1 e^{lam1 tau} mode + sum c e^{lam tau} shape``.

    ``extra`` is a sequence of ``(c, lam, shape)`` triples.
    """
    frames = []
    for tau in taus:
        U = self_similar_profile(rho) + c1 * math.exp(lam1 * tau) * mode
        for c, lam, shape in extra:
            U = U + c * math.exp(lam * tau) * shape
        frames.append(Frame(math.nan, float(tau), rho, U))
    return frames


def figure_rows(frames, fit: FitResult, T: float, lam1: float, select=None):
    """Rows ``(tau, rho, U - U0, c1 (T - t)^{-lam1} v1 / rho)`` for plotting."""
    rows = []
    for f in frames if select is None else [frames[i] for i in select]:
        dev = f.U - self_similar_profile(f.rho)
        model = fit.c1 * math.exp(lam1 * f.tau) * fit.mode
        for rr, d, m in zip(f.rho, dev, model):
            rows.append((f.tau, float(rr), float(d), float(m)))
    return rows


def mode_profile(lam: float, rho) -> np.ndarray:
    """``v / rho`` of the eigenmode at ``lam`` on ``rho``, normalised to max 1."""
    from .contfrac import eigenmode

    rho = np.asarray(rho, dtype=float)
    v = eigenmode(lam, rho)
    out = np.zeros_like(rho)
    nz = rho > 0
    out[nz] = v[nz] / rho[nz]
    return normalized_mode(out)


def deviation_norms(frames, rho_max: float = 0.9, gauge=None) -> np.ndarray:
    """Sup-norm of ``U - U0`` on ``[0, rho_max]`` per frame, gauge coefficients removed if given."""
    out = []
    for i, f in enumerate(frames):
        d = f.U - self_similar_profile(f.rho)
        if gauge is not None:
            d = d - gauge[i] * gauge_profile(f.rho)
        out.append(np.max(np.abs(d[f.rho <= rho_max])))
    return np.array(out)


@dataclass
class BlowupAnalysis:
    estimate: BlowupEstimate
    T: float
    fit: FitResult
    fit_gauge: FitResult
    frames: list
    deviation: np.ndarray
    monotone: bool

    def as_dict(self):
        return {
            "blowup": self.estimate.as_dict(),
            "T_refined": self.T,
            "fit": self.fit.as_dict(),
            "fit_gauge": self.fit_gauge.as_dict(),
            "deviation_monotone": self.monotone,
        }


def analyze(traj: Trajectory, lam1: float, rho=None, tau_min: float = 3.0, min_scale: float = 20.0,
            dtau: float = 0.05) -> BlowupAnalysis:
    """Blowup time, refined ``T``, mode fit and deviation history of a blowup run.

    ``fit`` is the single-mode fit on frames built with the refined ``T``;
    ``fit_gauge`` also projects out the ``rho U0'`` direction per frame.

    The fit window is ``tau >= tau_min`` with ``T - t >= min_scale h``.  The
    frame transform itself only needs ``5 h``, but discretisation errors of
    size ``(h / (T - t))^2`` reach the level of the decaying mode well before
    that.
    """
    est = detect_blowup(traj)
    if not est.blowup:
        raise FitError("trajectory does not blow up")
    if rho is None:
        rho = np.linspace(0.0, 1.0, 101)
    mode = mode_profile(lam1, rho)
    T, fit_gauge = refine_blowup_time(traj, est.T, mode, rho, tau_min, min_scale, dtau)
    frames = [f for f in thin_frames(similarity_frame(traj, T, rho, min_scale=min_scale), dtau) if f.tau >= tau_min]
    fit = fit_mode(frames, mode, gauge=False)
    dev = deviation_norms(frames)
    return BlowupAnalysis(est, T, fit, fit_gauge, frames, dev, bool(np.all(np.diff(dev) < 0)))
