"""Radial field types and the discrete model right-hand sides.

All three models evolve a single radial profile ``f(r, t)``:

* charge-one sigma model, ``u = f/z``   -> radial power ``n = 3``
* charge-two sigma model, ``u = f/z^2`` -> radial power ``n = 5``
* (4+1)-d Yang-Mills, connection ``~ 1/(f + r^2)`` -> radial power ``n = 5``

The combination ``d_rr f + (n/r) d_r f`` is discretised with the flux-form
stencil ``r^-n [ (r+dr/2)^n D+ f - (r-dr/2)^n D- f ] / dr``; every other
spatial derivative is a plain centred difference.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SingularEvaluationError

DENOMINATOR_FLOOR = 1e-30


class ModelKind(str, enum.Enum):
    CHARGE_ONE = "charge1"
    CHARGE_TWO = "charge2"
    YANG_MILLS = "ym"

    @property
    def power(self) -> int:
        """Radial power ``n`` of the operator ``r^-n d_r r^n d_r``."""
        return 3 if self is ModelKind.CHARGE_ONE else 5

    @property
    def code(self) -> int:
        return {ModelKind.CHARGE_ONE: 1, ModelKind.CHARGE_TWO: 2, ModelKind.YANG_MILLS: 3}[self]

    @classmethod
    def parse(cls, value: "str | ModelKind") -> "ModelKind":
        if isinstance(value, ModelKind):
            return value
        aliases = {
            "charge1": cls.CHARGE_ONE, "charge-one": cls.CHARGE_ONE, "c1": cls.CHARGE_ONE,
            "charge2": cls.CHARGE_TWO, "charge-two": cls.CHARGE_TWO, "c2": cls.CHARGE_TWO,
            "ym": cls.YANG_MILLS, "yang-mills": cls.YANG_MILLS, "yangmills": cls.YANG_MILLS,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ConfigurationError(f"unknown model {value!r}") from None


@dataclass(frozen=True)
class GridSpec:
    """Uniform radial grid ``r_i = i * dr`` for ``i = 0 .. n_points - 1``."""

    dr: float
    r_max: float

    def __post_init__(self):
        if not (self.dr > 0 and math.isfinite(self.dr)):
            raise ConfigurationError(f"dr must be positive, got {self.dr}")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ConfigurationError(f"r_max must be positive, got {self.r_max}")
        ratio = self.r_max / self.dr
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise ConfigurationError(
                f"r_max={self.r_max} is not an integer multiple of dr={self.dr}")
        if self.n_points < 4:
            raise ConfigurationError(f"grid needs at least 4 points, got {self.n_points}")

    @property
    def n_points(self) -> int:
        return int(round(self.r_max / self.dr)) + 1

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dr


@dataclass
class RadialField:
    """Profile ``f(r_i)`` on ``grid`` at time ``time``."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"expected {self.grid.n_points} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("field values must be finite")

    @property
    def radii(self) -> np.ndarray:
        return self.grid.radii

    @property
    def origin(self) -> float:
        return float(self.values[0])

    def copy(self) -> "RadialField":
        return RadialField(self.grid, self.values.copy(), self.time)


@dataclass(frozen=True)
class InitialProfile:
    """Initial data ``f(r, 0) = f0 [+ rho0 r^2]`` and ``d_t f(r, 0) = v0``."""

    f0: float
    v0: float = 0.0
    rho0: float | None = None

    def __post_init__(self):
        if not self.f0 > 0:
            raise ConfigurationError(f"f0 must be positive, got {self.f0}")

    def values(self, grid: GridSpec) -> np.ndarray:
        r = grid.radii
        f = np.full(grid.n_points, float(self.f0))
        if self.rho0 is not None:
            f = f + self.rho0 * r * r
        if np.any(f <= 0):
            bad = int(np.argmax(f <= 0))
            raise ConfigurationError(
                f"initial profile is non-positive at r={r[bad]:g} (f={f[bad]:g})")
        return f


def _check_index(field: RadialField, i: int) -> None:
    if not 1 <= i <= field.grid.n_points - 2:
        raise IndexError(f"grid index {i} outside interior range 1..{field.grid.n_points - 2}")


def conservative_radial_operator(field: RadialField, n: int, i: int) -> float:
    """Flux-form discretisation of ``d_rr f + (n/r) d_r f`` at interior point ``i``."""
    if n not in (3, 5):
        raise ValueError(f"radial power must be 3 or 5, got {n}")
    _check_index(field, i)
    f = field.values
    dr = field.grid.dr
    r = i * dr
    outer = (r + 0.5 * dr) ** n * (f[i + 1] - f[i]) / dr
    inner = (r - 0.5 * dr) ** n * (f[i] - f[i - 1]) / dr
    return float((outer - inner) / dr / r ** n)


def _local(field: RadialField, dfdt: Sequence[float], i: int):
    f = field.values
    dr = field.grid.dr
    return f[i], (f[i + 1] - f[i - 1]) / (2.0 * dr), float(dfdt[i]), i * dr


def _guard(den: float, i: int, time: float) -> None:
    if not abs(den) >= DENOMINATOR_FLOOR:
        raise SingularEvaluationError(f"denominator {den:g} at grid index {i}", index=i, time=time)


def rhs_charge1(field: RadialField, dfdt: Sequence[float], i: int) -> float:
    """``d_tt f`` of the charge-one sigma model at interior point ``i``."""
    lap = conservative_radial_operator(field, 3, i)
    f, fr, ft, r = _local(field, dfdt, i)
    den = f * f + r * r
    _guard(den, i, field.time)
    return float(lap - 4.0 * r * fr / den + 2.0 * f * (ft * ft - fr * fr) / den)


def rhs_charge2(field: RadialField, dfdt: Sequence[float], i: int) -> float:
    """``d_tt f`` of the charge-two sigma model at interior point ``i``."""
    lap = conservative_radial_operator(field, 5, i)
    f, fr, ft, r = _local(field, dfdt, i)
    r2 = r * r
    den = f * f + r2 * r2
    _guard(den, i, field.time)
    return float(lap - 8.0 * r2 * r * fr / den + 2.0 * f * (ft * ft - fr * fr) / den)


def rhs_yangmills(field: RadialField, dfdt: Sequence[float], i: int) -> float:
    """``d_tt f`` of the rotationally symmetric Yang-Mills reduction at point ``i``.

    The denominator is ``f + r^2`` (first power) and the quadratic term
    carries no factor of ``f``.
    """
    lap = conservative_radial_operator(field, 5, i)
    f, fr, ft, r = _local(field, dfdt, i)
    den = f + r * r
    _guard(den, i, field.time)
    return float(lap - 8.0 * r * fr / den + 2.0 * (ft * ft - fr * fr) / den)


_SCALAR_RHS = {
    ModelKind.CHARGE_ONE: rhs_charge1,
    ModelKind.CHARGE_TWO: rhs_charge2,
    ModelKind.YANG_MILLS: rhs_yangmills,
}


def model_rhs(model: ModelKind | str):
    """Return the per-point right-hand side for ``model``."""
    return _SCALAR_RHS[ModelKind.parse(model)]


def stencil_weights(grid: GridSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Outer/inner flux weights of the conservative stencil at every grid point.

    ``L f_i = w_out[i] (f[i+1] - f[i]) - w_in[i] (f[i] - f[i-1])``; entry 0 is
    unused (the origin is fixed by the boundary condition) and set to zero.
    """
    dr = grid.dr
    r = grid.radii
    w_out = np.zeros_like(r)
    w_in = np.zeros_like(r)
    ri = r[1:]
    w_out[1:] = ((ri + 0.5 * dr) / ri) ** n / (dr * dr)
    w_in[1:] = ((ri - 0.5 * dr) / ri) ** n / (dr * dr)
    return w_out, w_in


def rhs_interior(model: ModelKind | str, values: np.ndarray, dfdt: np.ndarray,
                 grid: GridSpec) -> np.ndarray:
    """Vectorised right-hand side on interior points ``1 .. n_points-2``.

    Returns an array of length ``n_points - 2``. Raises
    :class:`SingularEvaluationError` if any denominator hits the floor.
    """
    model = ModelKind.parse(model)
    f = np.asarray(values, dtype=float)
    ft = np.asarray(dfdt, dtype=float)[1:-1]
    w_out, w_in = stencil_weights(grid, model.power)
    fc = f[1:-1]
    r = grid.radii[1:-1]
    lap = w_out[1:-1] * (f[2:] - fc) - w_in[1:-1] * (fc - f[:-2])
    fr = (f[2:] - f[:-2]) / (2.0 * grid.dr)
    quad = ft * ft - fr * fr
    if model is ModelKind.CHARGE_ONE:
        den = fc * fc + r * r
        fric, nonlin = 4.0 * r * fr, 2.0 * fc * quad
    elif model is ModelKind.CHARGE_TWO:
        den = fc * fc + r ** 4
        fric, nonlin = 8.0 * r ** 3 * fr, 2.0 * fc * quad
    else:
        den = fc + r * r
        fric, nonlin = 8.0 * r * fr, 2.0 * quad
    small = ~(np.abs(den) >= DENOMINATOR_FLOOR)
    if np.any(small):
        i = int(np.argmax(small)) + 1
        raise SingularEvaluationError(f"denominator {den[i - 1]:g} at grid index {i}", index=i)
    return lap + (nonlin - fric) / den
