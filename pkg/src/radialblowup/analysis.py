"""Regression and comparison tools for simulated blowup trajectories and profiles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BumpNotResolvedError,
    DomainError,
    FitError,
    InsufficientDataError,
)
from .fields import ModelKind
from .geodesic import (
    CutoffFitParams,
    GeodesicTrajectory,
    ParabolaParams,
    predicted_profile_ansatz,
)
from .integrator import ProfileSnapshot, RunResult, SimulationConfig, TimeSeries, run

logger = logging.getLogger(__name__)

# Relative noise floor (times f0) below which profile features count as unresolved.
NOISE_FLOOR_REL = 1e-5


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residual_rms: float
    window: tuple[int, int]
    n_points: int = 0

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "residual_rms": self.residual_rms, "window": list(self.window),
                "n_points": self.n_points}


@dataclass(frozen=True)
class EllipseBumpParams:
    a: float
    b: float
    k: float

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        inside = np.clip(1.0 - (r / self.a) ** 2, 0.0, None)
        return self.k + self.b * np.sqrt(inside)


@dataclass(frozen=True)
class HyperbolaBumpParams:
    a_h: float
    b_h: float
    k_h: float
    residual_rms: float = float("nan")
    depth: float = float("nan")
    plateau: float = float("nan")
    r_transition: float = float("nan")
    iterations: int = 0

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return self.k_h - self.b_h * np.sqrt(1.0 + (r / self.a_h) ** 2)


@dataclass(frozen=True)
class ParabolicProfileParams:
    rho: float
    h: float


def linear_fit(x, y, window: tuple[int, int] | None = None) -> LinearFit:
    """Ordinary least-squares line; ``residual_rms`` over the fitted points only."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (0, x.size)
    xs, ys = x[window[0]:window[1]], y[window[0]:window[1]]
    if xs.size < 2:
        raise InsufficientDataError(f"need at least 2 points for a line, got {xs.size}")
    if np.ptp(xs) == 0:
        raise FitError("degenerate abscissae: all x values coincide")
    A = np.column_stack([xs, np.ones_like(xs)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - (slope * xs + intercept)
    return LinearFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))),
                     (int(window[0]), int(window[1])), int(xs.size))


# ---------------------------------------------------------------- trajectories

def decimate(series: TimeSeries, min_spacing: float | None) -> TimeSeries:
    """Keep every k-th sample so that the spacing is at least ``min_spacing``."""
    if min_spacing is None or len(series) < 2:
        return series
    spacing = float(series.times[1] - series.times[0])
    k = max(1, int(math.ceil(min_spacing / spacing - 1e-9)))
    return TimeSeries(series.times[::k], series.f_origin[::k])


def estimate_origin_velocity(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Centred-difference ``d_t f(0, t)`` at the interior samples."""
    if len(series) < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {len(series)}")
    t, f = series.times, series.f_origin
    return t[1:-1].copy(), (f[2:] - f[:-2]) / (t[2:] - t[:-2])


def cutoff_scatter(series: TimeSeries, min_spacing: float | None = None):
    """``(f, ln f, 1/(d_t f)^2)`` at interior samples with ``f > 0`` and ``d_t f < 0``."""
    s = decimate(series, min_spacing)
    _, v = estimate_origin_velocity(s)
    f = s.f_origin[1:-1]
    ok = (f > 0) & (v < 0)
    return f[ok], np.log(f[ok]), 1.0 / v[ok] ** 2


def default_cutoff_window(f0: float, dr: float | None = None) -> tuple[float, float]:
    """``(max(5 dr, 0.05 f0), 0.8 f0)``; below a few grid cells the lump is unresolved."""
    lo = 0.05 * f0 if dr is None else max(5.0 * dr, 0.05 * f0)
    return lo, 0.8 * f0


def fit_cutoff_params(series: TimeSeries, window: tuple[float, float] | None = None,
                      min_spacing: float | None = None,
                      dr: float | None = None) -> tuple[CutoffFitParams, LinearFit]:
    """Fit ``1/(d_t f)^2 = (2 ln R - 1)/c^2 - (2/c^2) ln f`` on ``f`` in ``window``.

    ``window`` defaults to :func:`default_cutoff_window` of the first sample
    and the grid spacing ``dr`` (if given).
    """
    if window is None:
        window = default_cutoff_window(float(series.f_origin[0]), dr)
    lo, hi = window
    f, x, y = cutoff_scatter(series, min_spacing)
    sel = (f >= lo) & (f <= hi)
    if np.count_nonzero(sel) < 10:
        raise InsufficientDataError(
            f"only {np.count_nonzero(sel)} shrinking samples with f in [{lo:g}, {hi:g}]")
    idx = np.nonzero(sel)[0]
    fit = linear_fit(x[sel], y[sel])
    fit = LinearFit(fit.slope, fit.intercept, fit.residual_rms, (int(idx[0]), int(idx[-1]) + 1), fit.n_points)
    if not fit.slope < 0:
        raise FitError(f"non-negative slope {fit.slope:g}: data not in the cutoff regime", best=fit)
    c = math.sqrt(-2.0 / fit.slope)
    R = math.exp((fit.intercept * c * c + 1.0) / 2.0)
    return CutoffFitParams(c, R), fit


def fit_r_vs_inverse_v0(table: Iterable[tuple[float, float]]) -> LinearFit:
    """Regress the cutoff radius on ``1/|v0|``."""
    rows = [(float(v), float(R)) for v, R in table]
    if len(rows) < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {len(rows)}")
    if any(v == 0 for v, _ in rows):
        raise DomainError("v0 = 0 has no finite inverse")
    x = np.array([1.0 / abs(v) for v, _ in rows])
    y = np.array([R for _, R in rows])
    return linear_fit(x, y)


def fit_trajectory_parabola(series: TimeSeries, window_fraction: float = 0.5) -> ParabolaParams:
    """Fit ``f = p (t - t0)^2`` through a line in ``sqrt(f)`` on the trailing samples."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    n = len(series)
    m = max(3, int(math.ceil(window_fraction * n)))
    if n < 3:
        raise InsufficientDataError(f"need at least 3 samples, got {n}")
    t, f = series.times[-m:], series.f_origin[-m:]
    if np.any(np.diff(f) >= 0) or np.any(f <= 0):
        raise FitError("f(0,t) is not positive and strictly decreasing over the fit window")
    fit = linear_fit(t, np.sqrt(f))
    if not fit.slope < 0:
        raise FitError("sqrt(f) does not decrease over the window", best=fit)
    return ParabolaParams(p=fit.slope ** 2, t0=-fit.intercept / fit.slope)


def speed_ratio(series: TimeSeries, min_spacing: float | None = None) -> float:
    """Mean ``|d_t f(0,t)|`` over the final quarter of samples divided by the first quarter.

    Below one the approach to the singularity slows down (slow blowup);
    above one it speeds up.
    """
    _, v = estimate_origin_velocity(decimate(series, min_spacing))
    q = max(1, v.size // 4)
    return float(np.mean(np.abs(v[-q:])) / np.mean(np.abs(v[:q])))


# ---------------------------------------------------------------- profiles

def _plateau(snapshot: ProfileSnapshot, lo: float = 1.2, hi: float = 1.5) -> float:
    r = snapshot.field.radii
    f = snapshot.field.values
    T = snapshot.T
    sel = (r >= lo * T) & (r <= hi * T)
    if not np.any(sel):
        # window beyond the grid: fall back to the outermost tenth
        sel = r >= 0.9 * r[-1]
    return float(np.median(f[sel]))


def _noise(snapshot: ProfileSnapshot, f0: float | None, noise_floor: float | None) -> float:
    if noise_floor is not None:
        return float(noise_floor)
    scale = abs(f0) if f0 else max(abs(float(np.max(snapshot.field.values))), 1.0)
    return NOISE_FLOOR_REL * scale


def fit_ellipse_bump(snapshot: ProfileSnapshot, v0: float, f0: float = 1.0,
                     noise_floor: float | None = None) -> EllipseBumpParams:
    """Fit ``(r/a)^2 + ((y-k)/b)^2 = 1`` to the bump that forms at the origin.

    ``k`` is the far-field plateau (median over ``r`` in ``[1.2T, 1.5T]``) and
    ``b = f(0,T) - k``; ``a^2`` is the mean of ``r^2/(1 - ((y-k)/b)^2)`` over the
    points with ``(y-k)/b`` in ``[0.2, 0.95]``. ``v0`` is accepted for symmetry
    with the predicted law ``(T, v0^2 T^2/4, f0 + v0 T)`` but does not enter
    the fit.
    """
    T = snapshot.T
    if not T > 0:
        raise DomainError("snapshot time must be positive")
    r = snapshot.field.radii
    y = snapshot.field.values
    k = _plateau(snapshot)
    b = float(y[0]) - k
    noise = _noise(snapshot, f0, noise_floor)
    if abs(b) < 4.0 * noise:
        raise BumpNotResolvedError(f"bump height {b:.3g} below 4x noise floor {noise:.3g}")
    u = (y - k) / b
    sel = (u >= 0.2) & (u <= 0.95) & (r > 0)
    if np.count_nonzero(sel) < 3:
        raise BumpNotResolvedError("fewer than 3 points inside the bump window")
    a = math.sqrt(float(np.mean(r[sel] ** 2 / (1.0 - u[sel] ** 2))))
    params = EllipseBumpParams(a=a, b=b, k=k)
    if not 0.8 * T <= a <= 1.2 * T:
        raise FitError(f"fitted semi-axis a={a:.4g} outside [0.8T, 1.2T] for T={T:g}", best=params)
    return params


def damped_gauss_newton(residual, jacobian, p0, max_iter: int = 200, tol: float = 1e-12,
                        feasible=None):
    """Levenberg-damped Gauss-Newton minimisation of ``sum(residual(p)^2)``.

    Returns ``(p, iterations, converged)``. ``feasible(p)`` may reject steps.
    """
    p = np.asarray(p0, dtype=float)
    res = residual(p)
    cost = float(res @ res)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        g = J.T @ res
        H = J.T @ J
        improved = False
        while lam < 1e16:
            step = np.linalg.solve(H + lam * np.diag(np.diag(H) + 1e-300), -g)
            trial = p + step
            if feasible is None or feasible(trial):
                res_t = residual(trial)
                cost_t = float(res_t @ res_t)
                if cost_t <= cost:
                    improved = True
                    break
            lam *= 10.0
        if not improved:
            return p, it, True
        rel = abs(cost - cost_t) / max(cost, 1e-300)
        small_step = np.all(np.abs(step) <= tol * (np.abs(p) + tol))
        p, res, cost = trial, res_t, cost_t
        lam = max(lam / 10.0, 1e-12)
        if small_step or rel < tol or cost == 0.0:
            return p, it, True
    return p, max_iter, False


def fit_hyperbola_bump(snapshot: ProfileSnapshot, f0: float | None = None,
                       noise_floor: float | None = None, max_iter: int = 200,
                       window: float = 0.9) -> HyperbolaBumpParams:
    """Fit ``y = k_h - b_h sqrt(1 + r^2/a_h^2)`` on ``r <= window * T``.

    ``r_transition`` is the first radius at which the fitted curve comes
    within the noise floor of the far-field plateau.
    """
    T = snapshot.T
    r_all = snapshot.field.radii
    y_all = snapshot.field.values
    if f0 is None:
        f0 = float(np.max(y_all))
    plateau = _plateau(snapshot) if T > 0 else float(np.median(y_all))
    noise = _noise(snapshot, f0, noise_floor)
    depth = float(y_all[0]) - plateau
    if abs(depth) < 4.0 * noise or not T > 0:
        raise BumpNotResolvedError(f"origin feature {depth:.3g} below 4x noise floor {noise:.3g}")
    sel = r_all <= window * T
    r, y = r_all[sel], y_all[sel]
    if r.size < 5:
        raise BumpNotResolvedError("fewer than 5 points in the fit window")

    # seeds: outer part ~ asymptote k - (b/a) r, origin value k - b
    outer = r >= 0.5 * r[-1]
    lf = linear_fit(r[outer], y[outer])
    k_seed = lf.intercept
    b_seed = k_seed - float(y[0])
    if b_seed <= 0 or lf.slope >= 0:
        b_seed = abs(depth) if abs(depth) > 0 else 1e-3
        k_seed = float(y[0]) + b_seed
        slope = abs(lf.slope) if lf.slope != 0 else b_seed / max(r[-1], 1e-12)
    else:
        slope = -lf.slope
    a_seed = b_seed / slope

    def resid(p):
        a, b, k = p
        return k - b * np.sqrt(1.0 + (r / a) ** 2) - y

    def jac(p):
        a, b, k = p
        S = np.sqrt(1.0 + (r / a) ** 2)
        return np.column_stack([b * r * r / (a ** 3 * S), -S, np.ones_like(r)])

    p0 = np.array([a_seed, b_seed, k_seed])
    p, iters, converged = damped_gauss_newton(
        resid, jac, p0, max_iter=max_iter, feasible=lambda q: q[0] > 0 and q[1] > 0)
    a, b, k = (float(v) for v in p)
    rms = float(np.sqrt(np.mean(resid(p) ** 2)))
    curve = HyperbolaBumpParams(a, b, k, rms, depth, plateau, float("nan"), iters)
    if not converged:
        raise FitError(f"hyperbola fit did not converge in {max_iter} iterations", best=curve)
    r_fine = np.linspace(0.0, r_all[-1], 20 * r_all.size)
    gap = np.sign(depth) * (curve.evaluate(r_fine) - plateau)
    hit = np.nonzero(gap <= noise)[0]
    r_tr = float(r_fine[hit[0]]) if hit.size else float("nan")
    return HyperbolaBumpParams(a, b, k, rms, depth, plateau, r_tr, iters)


def fit_parabolic_profile(snapshot: ProfileSnapshot, r_window: float) -> ParabolicProfileParams:
    """Least-squares ``y = rho r^2 + h`` over ``0 <= r <= r_window``."""
    grid = snapshot.field.grid
    if r_window > grid.r_max / 2 + 1e-12:
        raise DomainError(f"r_window={r_window:g} exceeds R_max/2={grid.r_max / 2:g}")
    r = snapshot.field.radii
    sel = r <= r_window + 1e-12
    if np.count_nonzero(sel) < 5:
        raise InsufficientDataError("fewer than 5 points in the profile window")
    fit = linear_fit(r[sel] ** 2, snapshot.field.values[sel])
    return ParabolicProfileParams(rho=fit.slope, h=fit.intercept)


# ---------------------------------------------------------------- ansatz residual

def ansatz_residual(model: ModelKind | str, v0: float, r, t):
    """Continuum ``d_tt f - RHS(f)`` on ``f = -(v0^2/8) r^2 + (v0^2/4)(t - 2/|v0|)^2``.

    Charge two: ``-(v0^4/8) f r^2 / (f^2 + r^4)``.
    Yang-Mills: ``-(v0^4/8) r^2 / (f + r^2)``.
    """
    model = ModelKind.parse(model)
    f = predicted_profile_ansatz(model, v0, r, t)
    r = np.asarray(r, dtype=float)
    v4 = v0 ** 4
    if model is ModelKind.CHARGE_TWO:
        out = -(v4 / 8.0) * f * r * r / (f * f + r ** 4)
    else:
        out = -(v4 / 8.0) * r * r / (f + r * r)
    return float(out) if np.ndim(out) == 0 else out


def ansatz_residual_cleared(model: ModelKind | str, v0: float, r, t):
    """Residual with the model denominator cleared.

    Multiplying by ``f^2 + r^4`` (charge two) gives
    ``v0^6 r^4/64 - (v0^6/32) r^2 (t - 2/|v0|)^2``; multiplying by ``-(f + r^2)``
    (Yang-Mills) gives ``2 (v0^2/4)^2 r^2``.
    """
    model = ModelKind.parse(model)
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if model is ModelKind.CHARGE_TWO:
        out = v0 ** 6 * r ** 4 / 64.0 - (v0 ** 6 / 32.0) * r * r * (t - 2.0 / abs(v0)) ** 2
    elif model is ModelKind.YANG_MILLS:
        out = 2.0 * (v0 * v0 / 4.0) ** 2 * r * r + 0.0 * t
    else:
        raise DomainError("no closed-form profile ansatz for the charge-one model")
    return float(out) if np.ndim(out) == 0 else out


def residual_normalization(model: ModelKind | str, v0: float, r, t):
    """Factor ``N`` with ``ansatz_residual * N == ansatz_residual_cleared``."""
    model = ModelKind.parse(model)
    f = predicted_profile_ansatz(model, v0, r, t)
    r = np.asarray(r, dtype=float)
    return f * f + r ** 4 if model is ModelKind.CHARGE_TWO else -(f + r * r)


# ---------------------------------------------------------------- studies

@dataclass
class ConvergenceRow:
    dr: float
    report: object
    series: TimeSeries | None
    error: str | None = None
    deviation_at_blowup: float | None = None
    deviation_at_level: float | None = None
    max_deviation: float | None = None


@dataclass
class ConvergenceStudy:
    rows: list[ConvergenceRow]
    reference_dr: float
    reference_blowup: float | None
    level: float
    common_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    deviations: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "reference_dr": self.reference_dr,
            "reference_blowup": self.reference_blowup,
            "level": self.level,
            "rows": [
                {"dr": row.dr, "error": row.error,
                 "blowup": None if row.report is None else row.report.t_star,
                 "deviation_at_blowup": row.deviation_at_blowup,
                 "deviation_at_level": row.deviation_at_level,
                 "max_deviation": row.max_deviation}
                for row in self.rows
            ],
        }


def _value_at(series: TimeSeries, t: float) -> float:
    """Linear interpolation inside the series, linear extrapolation past its end."""
    ts, fs = series.times, series.f_origin
    if t <= ts[-1]:
        return float(np.interp(t, ts, fs))
    slope = (fs[-1] - fs[-2]) / (ts[-1] - ts[-2])
    return float(fs[-1] + slope * (t - ts[-1]))


def _time_at_level(series: TimeSeries, level: float) -> float | None:
    f = series.f_origin
    below = np.nonzero(f <= level)[0]
    if below.size == 0 or below[0] == 0:
        return None
    j = below[0]
    t1, t2, f1, f2 = series.times[j - 1], series.times[j], f[j - 1], f[j]
    return float(t1 + (t2 - t1) * (f1 - level) / (f1 - f2))


def convergence_study(base: SimulationConfig, dr_list: Sequence[float], level: float = 0.1,
                      runner=run) -> ConvergenceStudy:
    """Repeat ``base`` at each grid spacing (fixed ``dt``) and compare ``f(0,t)``.

    Runs stop when ``f(0,t)`` reaches zero. Each row is compared with the
    finest grid at the finest run's zero crossing (rows that stopped earlier
    are extrapolated linearly from their last two samples), at the time the
    row itself reaches ``level``, and in sup norm over the common samples.
    """
    from .fields import GridSpec

    rows: list[ConvergenceRow] = []
    for dr in sorted(dr_list, reverse=True):
        try:
            cfg = base.with_(grid=GridSpec(float(dr), base.grid.r_max), f_stop=0.0)
            res = runner(cfg)
            rows.append(ConvergenceRow(float(dr), res.report, res.series))
        except Exception as exc:  # per-row failures are kept in the table
            logger.warning("convergence run dr=%g failed: %s", dr, exc)
            rows.append(ConvergenceRow(float(dr), None, None, error=f"{type(exc).__name__}: {exc}"))
    ok = [row for row in rows if row.series is not None]
    if not ok:
        return ConvergenceStudy(rows, float("nan"), None, level)
    ref = min(ok, key=lambda row: row.dr)
    t_ref = ref.report.t_star if ref.report.blew_up else None
    t_end = t_ref if t_ref is not None else float(ref.series.times[-1])
    common = ref.series.times[ref.series.times <= t_end]
    deviations = {}
    for row in ok:
        dev = np.array([_value_at(row.series, t) for t in common]) - ref.series.f_origin[:common.size]
        deviations[row.dr] = dev
        row.max_deviation = float(np.max(np.abs(dev))) if dev.size else 0.0
        if t_ref is not None:
            row.deviation_at_blowup = abs(_value_at(row.series, t_ref) - 0.0)
        t_lvl = _time_at_level(row.series, level)
        if t_lvl is not None:
            row.deviation_at_level = abs(_value_at(ref.series, t_lvl) - level)
    return ConvergenceStudy(rows, ref.dr, t_ref, level, common, deviations)


@dataclass
class DeviationReport:
    times: np.ndarray
    simulated: np.ndarray
    predicted: np.ndarray

    @property
    def deviations(self) -> np.ndarray:
        return self.simulated - self.predicted

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.deviations)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.deviations ** 2)))

    def to_dict(self) -> dict:
        return {"max_abs": self.max_abs, "rms": self.rms, "n_samples": int(self.times.size),
                "t_first": float(self.times[0]), "t_last": float(self.times[-1])}


def compare_to_prediction(series: TimeSeries,
                          prediction: GeodesicTrajectory | ParabolaParams) -> DeviationReport:
    """Evaluate ``prediction`` at the series' sample times and report ``f`` deviations."""
    t = series.times
    if isinstance(prediction, ParabolaParams):
        keep = t <= prediction.t0
        if not np.any(keep):
            raise DomainError("series lies entirely after the predicted blowup time")
        tt = t[keep]
        return DeviationReport(tt, series.f_origin[keep], prediction.evaluate(tt))
    lo, hi = prediction.t_range
    keep = (t >= lo) & (t <= hi)
    if not np.any(keep):
        raise DomainError(f"time ranges are disjoint: series [{t[0]:g}, {t[-1]:g}], prediction [{lo:g}, {hi:g}]")
    tt = t[keep]
    return DeviationReport(tt, series.f_origin[keep], np.asarray(prediction.evaluate(tt), dtype=float))
