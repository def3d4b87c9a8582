"""Separable least squares with a budget and gap domains ``x_l <= 0 or x_l >= 1``."""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import TooLargeError
from ..model import KnownOptimum, MpocProblem, SmoothFn, VectorFn

MAX_BRUTEFORCE_N = 12


def _validate(a, n):
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size != n:
        raise ValueError(f"a has {a.size} entries, expected {n}")
    if np.any(np.diff(a) < 0):
        raise ValueError("a must be sorted ascending")
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("entries of a must lie in [0, 1]")
    return a


def gap_closed_form(a, budget: float) -> tuple:
    """Top ``k = floor(budget)`` entries at one, the rest at zero, and the resulting value.

    Valid as a global value only when moving lower variables below zero
    never pays off; :func:`gap_domain_global` gives the exact value.
    """
    a = np.asarray(a, dtype=float)
    k = int(np.floor(budget + 1e-12))
    k = min(k, a.size)
    x = np.zeros(a.size)
    x[a.size - k :] = 1.0
    return float(np.sum((x - a) ** 2)), x


def _water_fill(a_up, a_low, budget):
    """Minimize ``sum (x - a)^2`` with ``x_up >= 1``, ``x_low <= 0`` and ``sum x <= budget``.

    Returns ``(value, x_up, x_low)`` or ``None`` if infeasible. The solution is
    ``clamp(a - theta)`` for the smallest ``theta >= 0`` meeting the budget.
    """

    def total(theta):
        return np.sum(np.maximum(1.0, a_up - theta)) + np.sum(np.minimum(0.0, a_low - theta))

    if a_low.size == 0 and a_up.size > budget + 1e-12:
        return None
    if total(0.0) <= budget:
        theta = 0.0
    else:
        # total is piecewise linear and nonincreasing; locate the piece holding the budget.
        bps = np.unique(np.concatenate([a_up - 1.0, a_low]))
        bps = bps[bps > 0.0]
        lo = 0.0
        theta = None
        for hi in bps:
            if total(hi) <= budget:
                theta = _linear_root(total, lo, hi, budget)
                break
            lo = hi
        if theta is None:
            # Beyond the last breakpoint every lower variable moves with slope -1.
            slope = a_low.size
            theta = lo + (total(lo) - budget) / slope
    x_up = np.maximum(1.0, a_up - theta)
    x_low = np.minimum(0.0, a_low - theta)
    value = float(np.sum((x_up - a_up) ** 2) + np.sum((x_low - a_low) ** 2))
    return value, x_up, x_low


def _linear_root(fn, lo, hi, level):
    flo, fhi = fn(lo), fn(hi)
    if flo == fhi:
        return lo
    return lo + (flo - level) * (hi - lo) / (flo - fhi)


def _pattern_value(a, upper_mask, budget):
    res = _water_fill(a[upper_mask], a[~upper_mask], budget)
    if res is None:
        return None
    value, x_up, x_low = res
    x = np.empty(a.size)
    x[upper_mask] = x_up
    x[~upper_mask] = x_low
    return value, x


def gap_domain_bruteforce(n: int, budget: float, a) -> tuple:
    """Exact global minimum by enumerating all ``2^n`` branches (``n <= 12``)."""
    if n > MAX_BRUTEFORCE_N:
        raise TooLargeError(f"brute force limited to n <= {MAX_BRUTEFORCE_N}, got {n}")
    a = np.asarray(a, dtype=float).reshape(-1)
    best = None
    for bits in itertools.product((False, True), repeat=n):
        res = _pattern_value(a, np.array(bits, dtype=bool), budget)
        if res is not None and (best is None or res[0] < best[0]):
            best = res
    if best is None:
        raise ValueError("no branch is feasible")
    return best


def gap_domain_global(budget: float, a) -> tuple:
    """Exact global minimum for sorted ``a``; some optimal branch puts the largest entries up.

    Swapping an upper and a lower assignment never increases the objective
    when the larger ``a`` goes up, so only ``n + 1`` branches need solving.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    best = None
    for k in range(a.size + 1):
        mask = np.zeros(a.size, dtype=bool)
        mask[a.size - k :] = True
        res = _pattern_value(a, mask, budget)
        if res is not None and (best is None or res[0] < best[0]):
            best = res
    return best


def build_gap_domain(n: int, budget: float, a) -> MpocProblem:
    """``min sum (x_l - a_l)^2`` s.t. ``sum x <= budget`` and ``x_l <= 0 or x_l >= 1``.

    Or-pairs are ``(x_l, 1 - x_l)``. The known optimum is the exact global value.
    """
    a = _validate(a, n)
    f = SmoothFn(n, lambda x: float(np.sum((x - a) ** 2)), lambda x: 2.0 * (x - a), "f")
    g = VectorFn.affine(np.ones((1, n)), [-float(budget)])
    eye = np.eye(n)
    G = VectorFn.affine(eye, np.zeros(n))
    H = VectorFn.affine(-eye, np.ones(n))
    value, x = gap_domain_global(budget, a)
    return MpocProblem(n, f, g, VectorFn.empty(n), G, H, f"gap-domain-{n}", KnownOptimum(value, x))


def sample_gap_vector(rng: np.random.Generator, n: int, min_upper: int) -> np.ndarray:
    """Sorted uniform draw on ``[0, 1]^n`` with at least ``min_upper`` entries above one half."""
    while True:
        a = np.sort(rng.uniform(0.0, 1.0, size=n))
        if np.sum(a > 0.5) >= min_upper:
            return a


def sample_gap_starts(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    return rng.uniform(-1.0, 2.0, size=(count, n))
