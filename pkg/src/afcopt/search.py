"""One-dimensional maximization by coarse scan plus golden-section refinement."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import OptimizationFailure

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-8,
                       max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]`` to an interval of width ``tol``.

    Returns ``(x_best, f_best)`` over every point evaluated, endpoints excluded.
    """
    if not a < b:
        raise OptimizationFailure(f"empty search interval [{a}, {b}]")
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc >= fd else (d, fd)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            if fc > best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            if fd > best[1]:
                best = (d, fd)
    else:
        raise OptimizationFailure(f"golden section did not reach tol={tol} in {max_iter} steps")
    if not math.isfinite(best[1]):
        raise OptimizationFailure("objective is not finite at the optimum")
    return best


def scan_then_golden(f: Callable[[float], float], a: float, b: float, n_scan: int = 64,
                     tol: float = 1e-8, scan_values=None) -> tuple[float, float]:
    """Bracket the maximum on an ``n_scan`` grid, then refine by golden section.

    ``scan_values`` may carry precomputed objective values on the grid
    ``np.linspace(a, b, n_scan)``.
    """
    grid = np.linspace(a, b, n_scan)
    values = np.array([f(x) for x in grid]) if scan_values is None else np.asarray(scan_values)
    if not np.all(np.isfinite(values)):
        raise OptimizationFailure("objective is not finite on the bracketing grid")
    k = int(np.argmax(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, n_scan - 1)]
    x, fx = golden_section_max(f, lo, hi, tol)
    if values[k] > fx:
        return float(grid[k]), float(values[k])
    return float(x), float(fx)
