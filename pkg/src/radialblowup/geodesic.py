"""Geodesic-approximation trajectories.

Charge one: with the kinetic integral cut off at radius ``R`` the conserved
energy gives ``|d_t f| = c / sqrt(ln(1 + R^2/f^2) - R^2/(f^2 + R^2))`` and the
elapsed time to reach level ``f`` is the integral of the reciprocal.

Charge two and Yang-Mills: the effective kinetic term is ``~ (d_t f)^2 / f``, so
``sqrt(f)`` is linear in time and ``f(0, t) = p (t - t0)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, DomainError
from .fields import ModelKind
from .quadrature import adaptive_simpson


@dataclass(frozen=True)
class CutoffFitParams:
    c: float
    R: float

    def __post_init__(self):
        if not (self.c > 0 and self.R > 0):
            raise DomainError(f"cutoff parameters must be positive, got c={self.c}, R={self.R}")


@dataclass(frozen=True)
class ParabolaParams:
    p: float
    t0: float

    def evaluate(self, t):
        return self.p * (np.asarray(t, dtype=float) - self.t0) ** 2


@dataclass
class GeodesicTrajectory:
    """Samples of a predicted ``f(0, t)``; ``f`` strictly decreasing in ``t``."""

    times: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.times.shape != self.f.shape:
            raise ValueError("times and f must have equal length")
        if self.times.size > 1 and not (np.all(np.diff(self.times) > 0) and np.all(np.diff(self.f) < 0)):
            raise ValueError("trajectory must have increasing t and decreasing f")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.f.tolist()))

    @property
    def t_range(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def evaluate(self, t):
        """Monotone (PCHIP) interpolation of ``f`` at times inside the sampled range."""
        return PchipInterpolator(self.times, self.f, extrapolate=False)(t)


_SERIES_CUTOFF = 0.1
# sum_{k>=2} (-1)^k (k-1)/k q^k; 24 terms reach double precision for q <= 0.1
_SERIES_COEFFS = np.array([(-1) ** k * (k - 1) / k for k in range(2, 26)])


def cutoff_bracket(f, R: float):
    """``ln(1 + R^2/f^2) - R^2/(f^2 + R^2)``, positive for all ``f, R > 0``.

    For ``f >> R`` the two terms cancel, so small ``q = R^2/f^2`` uses the
    power series instead.
    """
    f = np.asarray(f, dtype=float)
    q = (R / f) ** 2
    direct = np.log1p(q) - q / (1.0 + q)
    small = q < _SERIES_CUTOFF
    if np.any(small):
        qs = np.atleast_1d(q)[np.atleast_1d(small)]
        series = qs * qs * np.polyval(_SERIES_COEFFS[::-1], qs)
        if direct.ndim == 0:
            return series[0]
        direct = direct.copy()
        direct[small] = series
    return direct


def cutoff_velocity(f: float, params: CutoffFitParams) -> float:
    """Speed ``|d_t f|`` on the cutoff geodesic at level ``f``."""
    if not f > 0:
        raise DomainError(f"f must be positive, got {f}")
    return float(params.c / math.sqrt(cutoff_bracket(f, params.R)))


def _slowness(R: float):
    R2 = R * R

    def g(s: float) -> float:
        q = R2 / (s * s)
        if q < _SERIES_CUTOFF:
            return math.sqrt(float(cutoff_bracket(s, R)))
        return math.sqrt(math.log1p(q) - q / (1.0 + q))

    return g


def cutoff_time(f: float, f0: float, params: CutoffFitParams, rel_tol: float = 1e-8) -> float:
    """Time for the cutoff geodesic started at ``f0`` to reach level ``f``."""
    if not (0 < f <= f0):
        raise DomainError(f"need 0 < f <= f0, got f={f}, f0={f0}")
    return adaptive_simpson(_slowness(params.R), f, f0, rel_tol=rel_tol) / params.c


def cutoff_trajectory(f0: float, params: CutoffFitParams, f_floor: float = 1e-3,
                      n_samples: int = 400, rel_tol: float = 1e-8) -> GeodesicTrajectory:
    """Sample the cutoff geodesic at geometrically spaced levels from ``f0`` to ``f_floor``."""
    if not (0 < f_floor < f0):
        raise DomainError(f"need 0 < f_floor < f0, got f_floor={f_floor}, f0={f0}")
    if n_samples < 2:
        raise ConfigurationError("n_samples must be >= 2")
    levels = np.geomspace(f0, f_floor, n_samples)
    levels[0], levels[-1] = f0, f_floor
    g = _slowness(params.R)
    elapsed = np.zeros(n_samples)
    for j in range(1, n_samples):
        elapsed[j] = elapsed[j - 1] + adaptive_simpson(g, levels[j], levels[j - 1], rel_tol=rel_tol)
    return GeodesicTrajectory(elapsed / params.c, levels)


def parabola_prediction(f0: float, v0: float) -> ParabolaParams:
    """Parabola ``p (t - t0)^2`` through ``(0, f0)`` with initial slope ``v0 < 0``."""
    if not f0 > 0:
        raise DomainError(f"f0 must be positive, got {f0}")
    if not v0 < 0:
        raise DomainError(f"v0 must be negative for blowup, got {v0}")
    return ParabolaParams(p=v0 * v0 / (4.0 * f0), t0=2.0 * f0 / abs(v0))


def predicted_profile_ansatz(model: ModelKind | str, v0: float, r, t):
    """Parabolic profile ``-(v0^2/8) r^2 + (v0^2/4) (t - 2/|v0|)^2``."""
    model = ModelKind.parse(model)
    if model is ModelKind.CHARGE_ONE:
        raise DomainError("no closed-form profile ansatz for the charge-one model")
    if v0 == 0:
        raise DomainError("v0 must be non-zero")
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    out = -(v0 * v0 / 8.0) * r * r + (v0 * v0 / 4.0) * (t - 2.0 / abs(v0)) ** 2
    return float(out) if out.ndim == 0 else out
