import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radialblowup import (
    BumpNotResolvedError,
    CutoffFitParams,
    DomainError,
    FitError,
    GridSpec,
    InitialProfile,
    InsufficientDataError,
    ProfileSnapshot,
    RadialField,
    SimulationConfig,
    TimeSeries,
    cutoff_trajectory,
    parabola_prediction,
)
from radialblowup.analysis import (
    compare_to_prediction,
    convergence_study,
    cutoff_scatter,
    decimate,
    estimate_origin_velocity,
    fit_cutoff_params,
    fit_ellipse_bump,
    fit_hyperbola_bump,
    fit_parabolic_profile,
    fit_r_vs_inverse_v0,
    fit_trajectory_parabola,
    linear_fit,
    speed_ratio,
)


def snapshot_of(T, func, dr=0.05, r_max=None):
    grid = GridSpec(dr, r_max if r_max is not None else 2 * T)
    return ProfileSnapshot(T, RadialField(grid, func(grid.radii), T))


def trajectory_series(params, f0=1.0, n=3000, f_floor=1e-3):
    traj = cutoff_trajectory(f0, params, f_floor=f_floor, n_samples=n, rel_tol=1e-11)
    return TimeSeries(traj.times, traj.f)


# ---------------------------------------------------------------- velocity

def test_velocity_of_linear_series():
    s = TimeSeries([0.0, 1.0, 2.0, 3.0], [1.0, 0.9, 0.8, 0.7])
    t, v = estimate_origin_velocity(s)
    assert np.allclose(v, -0.1, rtol=1e-13)
    assert np.allclose(t, [1.0, 2.0])
    with pytest.raises(InsufficientDataError):
        estimate_origin_velocity(TimeSeries([0.0, 1.0], [1.0, 0.9]))


def test_velocity_of_quadratic_series_is_exact_at_interior_samples():
    t = np.linspace(0, 10, 41)
    s = TimeSeries(t, 3 - 0.02 * t ** 2)
    tm, v = estimate_origin_velocity(s)
    assert np.allclose(v, -0.04 * tm, rtol=1e-12)


def test_decimate_enforces_spacing():
    s = TimeSeries(np.arange(0, 10.0, 0.1), np.linspace(1, 0, 100))
    d = decimate(s, 0.5)
    assert np.all(np.diff(d.times) >= 0.5 - 1e-12)
    assert decimate(s, None) is s


# ---------------------------------------------------------------- cutoff regression

@pytest.mark.parametrize("c,R", [(0.05, 40.0), (0.0267, 62.1), (0.1, 15.0)])
def test_cutoff_fit_round_trip(c, R):
    params, fit = fit_cutoff_params(trajectory_series(CutoffFitParams(c, R)))
    assert params.c == pytest.approx(c, rel=0.01)
    assert params.R == pytest.approx(R, rel=0.01)
    assert fit.residual_rms < 1e-3 * abs(fit.intercept)


def test_cutoff_scatter_is_linear_in_log_f():
    c, R = 0.05, 40.0
    f, x, y = cutoff_scatter(trajectory_series(CutoffFitParams(c, R)))
    sel = f < 0.1 * R
    assert np.allclose(np.exp(x), f)
    # for f << R the law reduces to 1/v^2 = (2 ln R - 1 - 2 ln f)/c^2
    expected = (2 * math.log(R) - 1 - 2 * x[sel]) / c ** 2
    assert np.allclose(y[sel], expected, rtol=1e-3)


def test_cutoff_fit_rejects_growing_data():
    t = np.linspace(0, 10, 200)
    with pytest.raises(InsufficientDataError):
        fit_cutoff_params(TimeSeries(t, 1 + 0.01 * t))


def test_cutoff_fit_rejects_wrong_regime():
    t = np.linspace(0, 9.9, 300)
    # accelerating collapse: 1/v^2 grows with ln f, so the slope is positive
    with pytest.raises(FitError):
        fit_cutoff_params(TimeSeries(t, 1 - 0.01 * t ** 2))


def test_radius_regression_through_two_points_is_exact():
    fit = fit_r_vs_inverse_v0([(-0.01, 60.0), (-0.02, 35.0)])
    assert fit.slope == pytest.approx(0.5, rel=1e-12)
    assert fit.intercept == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(InsufficientDataError):
        fit_r_vs_inverse_v0([(-0.01, 60.0)])
    with pytest.raises(DomainError):
        fit_r_vs_inverse_v0([(0.0, 60.0), (-0.01, 60.0)])


# ---------------------------------------------------------------- parabola fits

def test_parabola_fit_exact_data():
    t = np.linspace(0, 49, 500)
    params = fit_trajectory_parabola(TimeSeries(t, 1e-4 * (t - 50.0) ** 2))
    assert params.p == pytest.approx(1e-4, rel=1e-11)
    assert params.t0 == pytest.approx(50.0, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(p=st.floats(1e-6, 1e-1), t0=st.floats(1.0, 500.0), frac=st.floats(0.1, 1.0))
def test_parabola_fit_exact_recovery(p, t0, frac):
    t = np.linspace(0, 0.95 * t0, 200)
    params = fit_trajectory_parabola(TimeSeries(t, p * (t - t0) ** 2), window_fraction=frac)
    assert params.p == pytest.approx(p, rel=1e-8)
    assert params.t0 == pytest.approx(t0, rel=1e-9)


def test_parabola_fit_rejects_non_monotone():
    t = np.linspace(0, 10, 50)
    with pytest.raises(FitError):
        fit_trajectory_parabola(TimeSeries(t, 1 + 0.1 * np.sin(t)))


def test_speed_ratio_discriminates_profiles():
    t = np.linspace(0, 49.5, 400)
    parabola = TimeSeries(t, 1e-4 * (t - 50) ** 2 / 0.25)
    slow = trajectory_series(CutoffFitParams(0.0267, 62.1), f_floor=1e-2)
    linear = TimeSeries(t, 1 - 0.01 * t)
    assert speed_ratio(parabola) < 0.5
    assert speed_ratio(slow) < 0.8
    assert speed_ratio(linear) == pytest.approx(1.0, rel=1e-10)


# ---------------------------------------------------------------- profiles

def test_ellipse_exact_recovery():
    a, b, k = 10.0, 0.5, 1.0
    snap = snapshot_of(10.0, lambda r: k + b * np.sqrt(np.clip(1 - (r / a) ** 2, 0, None)), dr=0.01)
    params = fit_ellipse_bump(snap, v0=-0.01)
    assert (params.a, params.b, params.k) == pytest.approx((a, b, k), rel=1e-9)
    assert params.evaluate(0.0) == pytest.approx(k + b)


def test_ellipse_requires_resolved_bump():
    snap = snapshot_of(10.0, lambda r: 1.0 + 1e-7 * np.exp(-r * r))
    with pytest.raises(BumpNotResolvedError):
        fit_ellipse_bump(snap, v0=-0.001)


def test_ellipse_rejects_semi_axis_outside_light_cone():
    snap = snapshot_of(10.0, lambda r: 1 + 0.5 * np.sqrt(np.clip(1 - (r / 5.0) ** 2, 0, None)))
    with pytest.raises(FitError) as info:
        fit_ellipse_bump(snap, v0=-0.01)
    assert info.value.best.a == pytest.approx(5.0, rel=1e-6)


def test_hyperbola_exact_recovery():
    a, b, k, T = 5.0, 0.2, 1.0, 20.0

    def curve(r):
        y = k - b * np.sqrt(1 + (r / a) ** 2)
        return np.where(r <= T, y, k - b * math.sqrt(1 + (T / a) ** 2))

    params = fit_hyperbola_bump(snapshot_of(T, curve, dr=0.05, r_max=40.0), f0=1.0)
    assert (params.a_h, params.b_h, params.k_h) == pytest.approx((a, b, k), rel=1e-8)
    assert params.residual_rms < 1e-12


def test_hyperbola_flat_profile_not_resolved():
    with pytest.raises(BumpNotResolvedError):
        fit_hyperbola_bump(snapshot_of(10.0, np.ones_like), f0=1.0)


@settings(max_examples=30, deadline=None)
@given(rho=st.floats(-1e-3, -1e-7), h=st.floats(0.1, 2.0), window=st.floats(2.0, 20.0))
def test_parabolic_profile_exact_recovery(rho, h, window):
    snap = snapshot_of(5.0, lambda r: rho * r * r + h, dr=0.05, r_max=40.0)
    params = fit_parabolic_profile(snap, window)
    assert params.rho == pytest.approx(rho, rel=1e-8)
    assert params.h == pytest.approx(h, rel=1e-12)


def test_parabolic_profile_window_limits():
    snap = snapshot_of(5.0, lambda r: 1 - 1e-3 * r * r, dr=0.05, r_max=40.0)
    with pytest.raises(DomainError):
        fit_parabolic_profile(snap, 25.0)
    with pytest.raises(InsufficientDataError):
        fit_parabolic_profile(snap, 0.1)


# ---------------------------------------------------------------- comparison

def test_series_against_its_own_parabola():
    params = parabola_prediction(1.0, -0.04)
    t = np.linspace(0, 60, 601)
    s = TimeSeries(t, params.evaluate(t))
    report = compare_to_prediction(s, params)
    assert report.max_abs == 0.0
    assert report.times[-1] <= params.t0


def test_comparison_with_trajectory_uses_overlap():
    params = CutoffFitParams(0.0267, 62.1)
    traj = cutoff_trajectory(1.0, params)
    t = np.linspace(0, traj.times[-1] * 1.5, 300)
    s = TimeSeries(t, np.interp(t, traj.times, traj.f))
    report = compare_to_prediction(s, traj)
    assert report.times[-1] <= traj.times[-1]
    assert report.max_abs < 1e-3
    with pytest.raises(DomainError):
        compare_to_prediction(TimeSeries(t + 1e4, s.f_origin), traj)


def test_linear_fit_basics():
    fit = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert (fit.slope, fit.intercept) == pytest.approx((2.0, 1.0))
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(FitError):
        linear_fit([1, 1, 1], [1, 2, 3])


# ---------------------------------------------------------------- convergence driver

def test_convergence_with_identical_grids_has_zero_deviation():
    base = SimulationConfig(model="charge2", grid=GridSpec(0.1, 40.0), dt=0.01,
                            initial=InitialProfile(1.0, -0.05), t_max=60.0)
    study = convergence_study(base, [0.1, 0.1])
    assert len(study.rows) == 2
    for row in study.rows:
        assert row.max_deviation == 0.0
        assert row.deviation_at_level == pytest.approx(0.0, abs=1e-15)
        # the blowup time falls between stored samples, so this is an extrapolation
        assert row.deviation_at_blowup < 1e-6


def test_convergence_keeps_failed_rows():
    base = SimulationConfig(model="charge2", grid=GridSpec(0.1, 40.0), dt=0.01,
                            initial=InitialProfile(1.0, -0.05), t_max=60.0)
    study = convergence_study(base, [0.1, 0.03])  # 0.03 does not tile R_max = 40
    bad = [row for row in study.rows if row.error]
    assert len(bad) == 1 and "ConfigurationError" in bad[0].error
    assert study.reference_dr == 0.1


# ---------------------------------------------------------------- worked examples

TABLE_ONE = [(-0.005, 115), (-0.00667, 89), (-0.01, 53), (-0.0133, 49),
             (-0.02, 34), (-0.03, 25), (-0.05, 17), (-0.06, 15)]


def test_radius_regression_on_published_table():
    fit = fit_r_vs_inverse_v0(TABLE_ONE)
    assert fit.slope == pytest.approx(0.54, rel=0.15)
    assert fit.intercept == pytest.approx(6.0, rel=0.15)


def test_radius_regression_two_point_example():
    fit = fit_r_vs_inverse_v0([(-0.01, 60.0), (-0.005, 114.0)])
    assert (fit.slope, fit.intercept) == pytest.approx((0.54, 6.0), rel=1e-12)


def test_velocity_of_sampled_parabola():
    s = TimeSeries([0.0, 1.0, 2.0], [2.5e-5 * (t - 200) ** 2 for t in (0.0, 1.0, 2.0)])
    _, v = estimate_origin_velocity(s)
    assert v[0] == pytest.approx(-9.95e-3, rel=1e-12)
    _, v = estimate_origin_velocity(TimeSeries(np.arange(5.0), np.full(5, 0.7)))
    assert np.all(v == 0.0)


def test_default_cutoff_window_respects_grid():
    from radialblowup.analysis import default_cutoff_window
    assert default_cutoff_window(1.0) == (0.05, 0.8)
    assert default_cutoff_window(1.0, dr=0.05) == (0.25, 0.8)
    assert default_cutoff_window(1.0, dr=0.001) == (0.05, 0.8)
