import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radialblowup import (
    CutoffFitParams,
    DomainError,
    GeodesicTrajectory,
    cutoff_trajectory,
    cutoff_velocity,
    parabola_prediction,
    predicted_profile_ansatz,
)
from radialblowup.geodesic import cutoff_bracket, cutoff_time
from radialblowup.quadrature import composite_simpson


def mp_velocity(f, c, R):
    with mpmath.workdps(60):
        f, R = mpmath.mpf(f), mpmath.mpf(R)
        return c / mpmath.sqrt(mpmath.log(1 + R ** 2 / f ** 2) - R ** 2 / (f ** 2 + R ** 2))


def chord_deviation(traj, f_lo=0.1):
    """Largest gap between the curve and the straight chord over f in [f_lo, f0], relative to f0."""
    keep = traj.f >= f_lo
    t, f = traj.times[keep], traj.f[keep]
    chord = f[0] + (f[-1] - f[0]) * (t - t[0]) / (t[-1] - t[0])
    return float(np.max(np.abs(f - chord)) / f[0])


# ---------------------------------------------------------------- velocity law

def test_velocity_at_unit_level():
    v = cutoff_velocity(1.0, CutoffFitParams(1.0, 100.0))
    assert v == pytest.approx(float(mp_velocity(1, 1, 100)), rel=1e-13)
    assert v == pytest.approx(0.349, abs=5e-4)


def test_velocity_at_the_cutoff_radius():
    for R in (1.0, 7.5, 300.0):
        assert cutoff_velocity(R, CutoffFitParams(1.0, R)) == pytest.approx(
            1 / math.sqrt(math.log(2) - 0.5), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(f=st.floats(1e-8, 1e3), c=st.floats(1e-3, 10), R=st.floats(0.5, 1e4),
       scale=st.floats(0.1, 10))
def test_velocity_is_linear_in_c_and_matches_high_precision(f, c, R, scale):
    v = cutoff_velocity(f, CutoffFitParams(c, R))
    assert cutoff_velocity(f, CutoffFitParams(scale * c, R)) == pytest.approx(scale * v, rel=1e-13)
    assert v == pytest.approx(float(mp_velocity(f, c, R)), rel=1e-9)


def test_bracket_is_positive():
    f = np.geomspace(1e-12, 1e6, 200)
    assert np.all(cutoff_bracket(f, 10.0) > 0)


def test_velocity_rejects_nonpositive_level():
    with pytest.raises(DomainError):
        cutoff_velocity(0.0, CutoffFitParams(1.0, 10.0))
    with pytest.raises(DomainError):
        CutoffFitParams(-1.0, 10.0)


@pytest.mark.parametrize("R", [10.0, 62.1, 100.0, 200.0])
def test_slow_blowup_speed_decays_toward_zero(R):
    params = CutoffFitParams(1.0, R)
    levels = np.geomspace(1.0, 1e-100, 60)
    v = np.array([cutoff_velocity(f, params) for f in levels])
    assert np.all(np.diff(v) < 0)
    # only a logarithmic decay: still above half speed at f = 1e-6
    ratio_mid = cutoff_velocity(1e-6, params) / cutoff_velocity(0.1, params)
    assert 0.45 < ratio_mid < 0.7
    assert cutoff_velocity(1e-100, params) < 0.25 * cutoff_velocity(0.1, params)


# ---------------------------------------------------------------- trajectory

def test_trajectory_starts_at_f0_and_is_concave():
    traj = cutoff_trajectory(1.0, CutoffFitParams(0.0267, 62.1))
    assert traj.times[0] == 0.0 and traj.f[0] == 1.0
    assert np.all(np.diff(traj.times) > 0) and np.all(np.diff(traj.f) < 0)
    assert chord_deviation(traj) > 0.01
    # speed falls as f decreases, so f(t) is convex and sags below its chord
    keep = traj.f >= 0.1
    t, f = traj.times[keep], traj.f[keep]
    chord = f[0] + (f[-1] - f[0]) * (t - t[0]) / (t[-1] - t[0])
    assert np.all(f[1:-1] <= chord[1:-1])


def test_elapsed_time_matches_independent_quadratures():
    params = CutoffFitParams(0.0267, 62.1)
    slowness = lambda s: 1 / cutoff_velocity(s, params)  # noqa: E731
    ref_simpson = composite_simpson(slowness, 0.5, 1.0, 20000)
    ref_mp = mpmath.quad(lambda s: 1 / mp_velocity(s, 0.0267, 62.1), [0.5, 1])
    t = cutoff_time(0.5, 1.0, params)
    assert t == pytest.approx(ref_simpson, rel=1e-6)
    assert t == pytest.approx(float(ref_mp), rel=1e-8)
    traj = cutoff_trajectory(1.0, params, f_floor=0.5, n_samples=50)
    assert traj.times[-1] == pytest.approx(float(ref_mp), rel=1e-8)


def test_finite_difference_velocity_matches_law():
    params = CutoffFitParams(0.0267, 62.1)
    traj = cutoff_trajectory(1.0, params, f_floor=1e-3, n_samples=200)
    fd = -np.diff(traj.f) / np.diff(traj.times)
    mid = np.sqrt(traj.f[1:] * traj.f[:-1])
    law = np.array([cutoff_velocity(f, params) for f in mid])
    assert np.max(np.abs(fd / law - 1)) < 1e-3


def test_large_cutoff_radius_straightens_the_curve():
    devs = [chord_deviation(cutoff_trajectory(1.0, CutoffFitParams(1.0, R), f_floor=0.1, n_samples=200))
            for R in (1e2, 1e3, 1e6, 1e12)]
    assert all(a > b for a, b in zip(devs, devs[1:]))
    # the approach to a straight line is logarithmically slow
    assert devs[2] * math.log(1e6) == pytest.approx(devs[3] * math.log(1e12), rel=0.05)


def test_trajectory_interpolation():
    traj = cutoff_trajectory(1.0, CutoffFitParams(0.0267, 62.1), n_samples=300)
    assert traj.evaluate(traj.times[17]) == pytest.approx(traj.f[17], rel=1e-14)
    assert np.isnan(traj.evaluate(traj.times[-1] + 1.0))
    with pytest.raises(ValueError):
        GeodesicTrajectory([0.0, 1.0], [1.0, 2.0])


def test_trajectory_argument_checks():
    with pytest.raises(DomainError):
        cutoff_trajectory(1.0, CutoffFitParams(1.0, 10.0), f_floor=2.0)


# ---------------------------------------------------------------- parabola law

@pytest.mark.parametrize("v0,t0,p", [(-0.01, 200.0, 2.5e-5), (-0.04, 50.0, 4e-4)])
def test_parabola_prediction_unit_start(v0, t0, p):
    params = parabola_prediction(1.0, v0)
    assert params.t0 == pytest.approx(t0, rel=1e-14)
    assert params.p == pytest.approx(p, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(f0=st.floats(0.01, 100), v0=st.floats(-10, -1e-4))
def test_parabola_passes_through_initial_data(f0, v0):
    params = parabola_prediction(f0, v0)
    assert params.evaluate(0.0) == pytest.approx(f0, rel=1e-12)
    slope = -2 * params.p * params.t0
    assert slope == pytest.approx(v0, rel=1e-12)
    assert params.evaluate(params.t0) == 0.0


def test_fast_blowup_signature():
    params = parabola_prediction(1.0, -0.04)
    t = params.t0 - np.geomspace(10, 1e-4, 40)
    f = params.evaluate(t)
    speed = 2 * params.p * np.abs(t - params.t0)
    assert np.allclose(speed, 2 * np.sqrt(params.p * f), rtol=1e-10)
    assert np.allclose(speed / (params.t0 - t), 2 * params.p, rtol=1e-10)
    sqrt_slope = np.diff(np.sqrt(f)) / np.diff(t)
    assert np.allclose(sqrt_slope, -math.sqrt(params.p), rtol=1e-8)


def test_parabola_needs_negative_velocity():
    with pytest.raises(DomainError):
        parabola_prediction(1.0, 0.01)
    with pytest.raises(DomainError):
        parabola_prediction(0.0, -0.01)


def test_profile_ansatz_values():
    v0 = -0.01
    assert predicted_profile_ansatz("ym", v0, 0.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert predicted_profile_ansatz("charge2", v0, 10.0, 200.0) == pytest.approx(-1.25e-3, rel=1e-14)
    with pytest.raises(DomainError):
        predicted_profile_ansatz("charge1", v0, 1.0, 1.0)
