"""Compiled inner loop of the iterated three-level update."""

from __future__ import annotations

import math

import numba
import numpy as np

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_NONFINITE = 2

BOUNDARY_FLAT = 0
BOUNDARY_PARABOLA = 1


@numba.njit(cache=True)
def step_kernel(prev, curr, out, w_out, w_in, model, dr, dt, iterations, boundary, floor):
    """Write ``f(t+dt)`` into ``out``; return ``(status, offending_index)``.

    ``model``: 1 charge-one, 2 charge-two, 3 Yang-Mills.
    """
    n = curr.shape[0]
    dt2 = dt * dt
    inv2dt = 0.5 / dt
    inv2dr = 0.5 / dr
    for i in range(n):
        out[i] = 2.0 * curr[i] - prev[i]
    for _ in range(iterations):
        for i in range(1, n - 1):
            f = curr[i]
            r = i * dr
            lap = w_out[i] * (curr[i + 1] - f) - w_in[i] * (f - curr[i - 1])
            fr = (curr[i + 1] - curr[i - 1]) * inv2dr
            ft = (out[i] - prev[i]) * inv2dt
            quad = ft * ft - fr * fr
            if model == 1:
                den = f * f + r * r
                acc = lap + (2.0 * f * quad - 4.0 * r * fr) / den if abs(den) >= floor else 0.0
            elif model == 2:
                r2 = r * r
                den = f * f + r2 * r2
                acc = lap + (2.0 * f * quad - 8.0 * r2 * r * fr) / den if abs(den) >= floor else 0.0
            else:
                den = f + r * r
                acc = lap + (2.0 * quad - 8.0 * r * fr) / den if abs(den) >= floor else 0.0
            if not abs(den) >= floor:
                return STATUS_SINGULAR, i
            out[i] = 2.0 * f - prev[i] + dt2 * acc
    out[0] = (4.0 * out[1] - out[2]) / 3.0
    last = n - 1
    if boundary == BOUNDARY_FLAT:
        out[last] = out[last - 1]
    else:
        r_out = last * dr
        out[last] = out[last - 1] + (out[last - 1] - out[last - 2]) * r_out / (r_out - dr)
    for i in range(n):
        if not math.isfinite(out[i]):
            return STATUS_NONFINITE, i
    return STATUS_OK, -1


def warm_up() -> None:
    """Trigger compilation on a tiny grid."""
    a = np.ones(8)
    w = np.ones(8)
    step_kernel(a, a, np.empty(8), w, w, 1, 0.1, 0.01, 1, 0, 1e-30)
