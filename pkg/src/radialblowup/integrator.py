"""Iterated explicit three-level time stepping with origin/outer boundary closure.

Each step predicts ``f+ = 2f - f-`` and then repeats
``f+ = 2f - f- + dt^2 * rhs(f, (f+ - f-)/(2 dt))`` a fixed number of times,
after which the origin value is set from the quadratic extrapolation
``f(0) = (4 f(dr) - f(2 dr)) / 3`` and the outer value from the chosen
Neumann-type condition.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigurationError, IntegrationDivergedError, SingularEvaluationError
from .fields import (
    DENOMINATOR_FLOOR,
    GridSpec,
    InitialProfile,
    ModelKind,
    RadialField,
    rhs_interior,
    stencil_weights,
)

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.5


class BoundaryMode(str, enum.Enum):
    NEUMANN_FLAT = "flat"
    NEUMANN_PARABOLA = "parabola"

    @property
    def code(self) -> int:
        return _kernels.BOUNDARY_FLAT if self is BoundaryMode.NEUMANN_FLAT else _kernels.BOUNDARY_PARABOLA

    @classmethod
    def parse(cls, value: "str | BoundaryMode") -> "BoundaryMode":
        if isinstance(value, BoundaryMode):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown boundary mode {value!r}") from None


class StopReason(str, enum.Enum):
    REACHED_F_STOP = "ReachedFStop"
    REACHED_T_MAX = "ReachedTMax"
    SINGULAR_DENOMINATOR = "SingularDenominator"


@dataclass
class SimulationConfig:
    model: ModelKind
    grid: GridSpec
    dt: float
    initial: InitialProfile
    t_max: float
    boundary: BoundaryMode = BoundaryMode.NEUMANN_FLAT
    picard_iterations: int = 3
    f_stop: float | None = None
    sample_stride: int = 10
    snapshot_times: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self):
        self.model = ModelKind.parse(self.model)
        self.boundary = BoundaryMode.parse(self.boundary)
        if self.f_stop is None:
            self.f_stop = self.grid.dr
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)
        self.validate()

    def validate(self) -> None:
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.dt > CFL_LIMIT * self.grid.dr * (1 + 1e-12):
            raise ConfigurationError(
                f"CFL guard violated: dt={self.dt:g} > {CFL_LIMIT} * dr = {CFL_LIMIT * self.grid.dr:g}")
        if int(self.picard_iterations) < 1:
            raise ConfigurationError("picard_iterations must be >= 1")
        if int(self.sample_stride) < 1:
            raise ConfigurationError("sample_stride must be >= 1")
        if not self.f_stop >= 0:
            raise ConfigurationError(f"f_stop must be >= 0, got {self.f_stop}")
        if not self.t_max > 0:
            raise ConfigurationError(f"t_max must be positive, got {self.t_max}")
        if any(t < 0 for t in self.snapshot_times):
            raise ConfigurationError("snapshot times must be non-negative")
        # positivity of the initial profile on the whole grid
        self.initial.values(self.grid)

    def with_(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)


@dataclass
class TimeSeries:
    """Samples ``(t_k, f(0, t_k))``."""

    times: np.ndarray
    f_origin: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.f_origin = np.asarray(self.f_origin, dtype=float)
        if self.times.shape != self.f_origin.shape or self.times.ndim != 1:
            raise ValueError("times and f_origin must be 1-d arrays of equal length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)

    def between(self, t_lo: float, t_hi: float) -> "TimeSeries":
        keep = (self.times >= t_lo) & (self.times <= t_hi)
        return TimeSeries(self.times[keep], self.f_origin[keep])


@dataclass
class ProfileSnapshot:
    T: float
    field: RadialField


@dataclass
class BlowupReport:
    blew_up: bool
    t_star: float | None
    t_zero: float | None
    terminal_f_origin: float
    steps_taken: int
    final_time: float
    stop_reason: StopReason
    causality_warning: bool = False

    def to_dict(self) -> dict:
        return {
            "blew_up": self.blew_up,
            "t_star": self.t_star,
            "t_zero": self.t_zero,
            "terminal_f_origin": self.terminal_f_origin,
            "steps_taken": self.steps_taken,
            "final_time": self.final_time,
            "stop_reason": self.stop_reason.value,
            "causality_warning": self.causality_warning,
        }


class RunResult(NamedTuple):
    series: TimeSeries
    snapshots: list[ProfileSnapshot]
    report: BlowupReport


def apply_boundary_conditions(values: np.ndarray, grid: GridSpec, boundary: BoundaryMode) -> None:
    """Set the origin (zero-slope extrapolation) and outer-edge values in place."""
    values[0] = (4.0 * values[1] - values[2]) / 3.0
    if boundary is BoundaryMode.NEUMANN_FLAT:
        values[-1] = values[-2]
    else:
        r_out = grid.r_max
        values[-1] = values[-2] + (values[-2] - values[-3]) * r_out / (r_out - grid.dr)


def initialize(config: SimulationConfig) -> tuple[RadialField, RadialField]:
    """Return ``(field_prev, field_curr)`` for the first step.

    ``field_prev`` is a ghost level at ``t = -dt`` chosen so that the first
    iterated step reproduces ``f(dt) = f + v0 dt + dt^2/2 * rhs``, i.e. the
    centred velocity at ``t = 0`` equals ``v0``.
    """
    grid = config.grid
    f = config.initial.values(grid)
    v0 = float(config.initial.v0)
    dt = config.dt
    accel = rhs_interior(config.model, f, np.full_like(f, v0), grid)
    ghost = f - v0 * dt
    ghost[1:-1] += 0.5 * dt * dt * accel
    apply_boundary_conditions(ghost, grid, config.boundary)
    return RadialField(grid, ghost, -dt), RadialField(grid, f, 0.0)


class _Stepper:
    """Holds the precomputed stencil weights for repeated kernel calls."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.w_out, self.w_in = stencil_weights(config.grid, config.model.power)
        self.args = (config.model.code, config.grid.dr, config.dt,
                     int(config.picard_iterations), config.boundary.code, DENOMINATOR_FLOOR)

    def __call__(self, prev: np.ndarray, curr: np.ndarray, out: np.ndarray, time: float) -> None:
        status, index = _kernels.step_kernel(prev, curr, out, self.w_out, self.w_in, *self.args)
        if status == _kernels.STATUS_SINGULAR:
            raise SingularEvaluationError(
                f"denominator below floor at grid index {index}, t={time:g}", index=index, time=time)
        if status == _kernels.STATUS_NONFINITE:
            raise IntegrationDivergedError(f"non-finite value at grid index {index}, t={time:g}")


def step(field_prev: RadialField, field_curr: RadialField, config: SimulationConfig) -> RadialField:
    """Advance one time step; returns the new level at ``field_curr.time + dt``."""
    if field_prev.grid != field_curr.grid:
        raise ValueError("fields live on different grids")
    out = np.empty_like(field_curr.values)
    _Stepper(config)(field_prev.values, field_curr.values, out, field_curr.time)
    return RadialField(field_curr.grid, out, field_curr.time + config.dt)


def _zero_crossing(model: ModelKind, t_hist: np.ndarray, f_hist: np.ndarray) -> float | None:
    """Extrapolated time at which ``f(0, t)`` vanishes."""
    if t_hist.size < 2:
        return None
    if model is ModelKind.CHARGE_ONE:
        (t1, t2), (f1, f2) = t_hist[-2:], f_hist[-2:]
        if f2 <= 0:
            return float(t1 + (t2 - t1) * f1 / (f1 - f2)) if f1 > 0 else float(t2)
        slope = (f2 - f1) / (t2 - t1)
        return float(t2 - f2 / slope) if slope < 0 else None
    # quadratic vanishing: sqrt(f) is linear in t near t0
    pos = f_hist > 0
    t_pos, s_pos = t_hist[pos], np.sqrt(f_hist[pos])
    m = max(3, int(math.ceil(0.1 * t_pos.size)))
    if t_pos.size < 3:
        return None
    slope, intercept = np.polyfit(t_pos[-m:], s_pos[-m:], 1)
    return float(-intercept / slope) if slope < 0 else None


def run(config: SimulationConfig) -> RunResult:
    """Integrate until ``f(0,t) <= f_stop``, ``t >= t_max`` or a singular denominator."""
    grid = config.grid
    dt = config.dt
    stride = int(config.sample_stride)
    stepper = _Stepper(config)
    prev_field, curr_field = initialize(config)
    prev = prev_field.values.copy()
    curr = curr_field.values.copy()
    nxt = np.empty_like(curr)

    snap_steps: dict[int, list[float]] = {}
    for T in config.snapshot_times:
        snap_steps.setdefault(int(round(T / dt)), []).append(T)
    snapshots: list[ProfileSnapshot] = []

    def take_snapshots(k: int, values: np.ndarray) -> None:
        for T in snap_steps.get(k, ()):
            snapshots.append(ProfileSnapshot(T, RadialField(grid, values.copy(), k * dt)))

    times = [0.0]
    origin = [curr[0]]
    take_snapshots(0, curr)
    n_max = int(math.ceil(config.t_max / dt - 1e-9))
    stop = StopReason.REACHED_T_MAX
    k = 0
    last_t, last_f = 0.0, float(curr[0])
    prev_t, prev_f = last_t, last_f
    while k < n_max:
        t_new = (k + 1) * dt
        try:
            stepper(prev, curr, nxt, k * dt)
        except SingularEvaluationError as exc:
            logger.info("singular denominator: %s", exc)
            stop = StopReason.SINGULAR_DENOMINATOR
            break
        k += 1
        prev, curr, nxt = curr, nxt, prev
        f_new = float(curr[0])
        if k % stride == 0:
            times.append(t_new)
            origin.append(f_new)
        take_snapshots(k, curr)
        last_t, last_f, prev_t, prev_f = t_new, f_new, last_t, last_f
        if f_new <= config.f_stop:
            stop = StopReason.REACHED_F_STOP
            break

    series = TimeSeries(np.array(times), np.array(origin))
    t_star = t_zero = None
    blew_up = stop is not StopReason.REACHED_T_MAX
    if stop is StopReason.REACHED_F_STOP:
        if k >= 1 and prev_f > last_f:
            t_star = prev_t + (last_t - prev_t) * (prev_f - config.f_stop) / (prev_f - last_f)
        else:
            t_star = last_t
    elif stop is StopReason.SINGULAR_DENOMINATOR:
        t_star = k * dt
    if blew_up:
        t_hist = np.append(series.times, last_t) if series.times[-1] < last_t else series.times
        f_hist = np.append(series.f_origin, last_f) if series.times[-1] < last_t else series.f_origin
        t_zero = _zero_crossing(config.model, t_hist, f_hist)
    causal = False
    estimate = t_zero if t_zero is not None else t_star
    if estimate is not None and 2.0 * grid.r_max < estimate:
        causal = True
        warnings.warn(
            f"2*R_max={2 * grid.r_max:g} < blowup time {estimate:g}: reflections from the outer "
            "boundary may have reached the origin", RuntimeWarning, stacklevel=2)
    report = BlowupReport(
        blew_up=blew_up,
        t_star=None if t_star is None else float(t_star),
        t_zero=t_zero,
        terminal_f_origin=float(curr[0]),
        steps_taken=k,
        final_time=k * dt,
        stop_reason=stop,
        causality_warning=causal,
    )
    return RunResult(series, snapshots, report)
