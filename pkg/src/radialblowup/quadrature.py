"""Adaptive and fixed-order Simpson quadrature."""

from __future__ import annotations

from typing import Callable

from .errors import QuadratureError


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(func: Callable[[float], float], a: float, b: float,
                     rel_tol: float = 1e-8, max_depth: int = 60) -> float:
    """Integrate ``func`` over ``[a, b]`` by recursive interval bisection.

    The absolute target is ``rel_tol`` times the magnitude of the coarse
    estimate (floored at ``rel_tol`` itself for near-zero integrals) and is
    halved on each bisection. Raises :class:`QuadratureError` naming the
    subinterval that still fails the local test at ``max_depth``.
    """
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(func, b, a, rel_tol, max_depth)
    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = _simpson(fa, fm, fb, b - a)
    tol = rel_tol * abs(whole) if whole != 0 else rel_tol

    total = 0.0
    # explicit stack: (a, b, fa, fm, fb, estimate, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = func(lm), func(rm)
        left = _simpson(flo, flm, fmid, mid - lo)
        right = _simpson(fmid, frm, fhi, hi - mid)
        delta = left + right - est
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{lo!r}, {hi!r}] at depth {depth}",
                interval=(lo, hi))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return total


def composite_simpson(func: Callable[[float], float], a: float, b: float, n: int) -> float:
    """Fixed composite Simpson rule with ``n`` (rounded up to even) panels."""
    if n < 2:
        n = 2
    if n % 2:
        n += 1
    h = (b - a) / n
    s = func(a) + func(b)
    s += 4.0 * sum(func(a + (2 * j - 1) * h) for j in range(1, n // 2 + 1))
    s += 2.0 * sum(func(a + 2 * j * h) for j in range(1, n // 2))
    return s * h / 3.0
