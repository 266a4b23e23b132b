"""One-dimensional minimization helpers: grid scan plus golden-section refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_PHI = (math.sqrt(5) - 1) / 2
TIE_TOL = 1e-12


def theta_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("a grid needs at least two points")
    if not hi > lo:
        raise ValueError("grid upper end must exceed the lower end")
    return np.linspace(lo, hi, points)


def golden_section(f, a: float, b: float, tol: float = 1e-8,
                   max_iter: int = 200) -> tuple[float, float, int]:
    """Minimum of a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x), evaluations)``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while abs(b - a) > tol and evals < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    return (c, fc, evals) if fc <= fd else (d, fd, evals)


def best_sample(thetas: np.ndarray, values: np.ndarray) -> int:
    """Index of the lowest sample; near-ties go to the one closest to zero."""
    lowest = values.min()
    tied = np.flatnonzero(values <= lowest + TIE_TOL * max(1.0, abs(lowest)))
    return int(tied[np.argmin(np.abs(thetas[tied]))])


@dataclass
class ScanResult:
    theta: float
    value: float
    thetas: np.ndarray
    values: np.ndarray
    evaluations: int


def refine_scan(f, thetas: np.ndarray, values: np.ndarray, tol: float = 1e-8) -> ScanResult:
    """Golden-section search in the grid cell pair around the sampled minimum.

    The returned value never exceeds the best sample. Samples tied with the
    minimum (to ``TIE_TOL`` relative) resolve to the one nearest zero.
    """
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    i = best_sample(thetas, values)
    lo = thetas[max(i - 1, 0)]
    hi = thetas[min(i + 1, thetas.size - 1)]
    x, fx, n = golden_section(f, lo, hi, tol)
    if values[i] < fx:
        x, fx = float(thetas[i]), float(values[i])
    return ScanResult(float(x), float(fx), thetas, values, n)


def scan(f, thetas: np.ndarray, tol: float = 1e-8) -> ScanResult:
    values = np.array([f(t) for t in thetas])
    res = refine_scan(f, thetas, values, tol)
    res.evaluations += thetas.size
    return res


def count_local_minima(values: np.ndarray) -> int:
    """Strict interior local minima of a sampled curve (plateaus count once)."""
    v = np.asarray(values, dtype=float)
    # collapse runs of equal samples
    keep = np.concatenate([[True], np.diff(v) != 0])
    v = v[keep]
    if v.size < 3:
        return 0
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return int(inner.sum())


def has_unique_interior_minimum(values: np.ndarray) -> bool:
    v = np.asarray(values, dtype=float)
    i = int(np.argmin(v))
    return count_local_minima(v) == 1 and 0 < i < v.size - 1
