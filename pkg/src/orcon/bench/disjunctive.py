"""Minimization over a union of two nonconvex sets, written with one or-pair.

Variables are ``(x1, x2, x3, u, v)``; the slack ``u`` relaxes the first set
and ``v`` the second, so ``u <= 0 or v <= 0`` selects a set.
"""

from __future__ import annotations

import numpy as np

from ..model import KnownOptimum, MpocProblem, SmoothFn, VectorFn

#: Global minimizer; any ``u >= 4`` works, ``u = 4`` makes the first set's bound active.
GLOBAL_MINIMIZER = np.array([0.0, 0.0, 0.0, 4.0, 0.0])
F_MIN = 9.0


def _objective() -> SmoothFn:
    c = np.array([1.0, 2.0, -2.0])

    def value(w):
        return float(np.sum((w[:3] - c) ** 2))

    def gradient(w):
        out = np.zeros(5)
        out[:3] = 2.0 * (w[:3] - c)
        return out

    return SmoothFn(5, value, gradient, "f")


def _inequalities() -> VectorFn:
    def value(w):
        x1, x2, x3, u, v = w
        return np.array([
            4.0 - x1 - u,
            5.0 - x1 - (x2 - 2.0) ** 2 - (x3 + 2.0) ** 2 - u,
            x1**2 + x2**2 - x3 - v,
            1.0 - (x1 - 1.0) ** 2 - x2**2 - x3 - v,
            x2 - v,
        ])

    def jacobian(w):
        x1, x2, x3, _, _ = w
        return np.array([
            [-1.0, 0.0, 0.0, -1.0, 0.0],
            [-1.0, -2.0 * (x2 - 2.0), -2.0 * (x3 + 2.0), -1.0, 0.0],
            [2.0 * x1, 2.0 * x2, -1.0, 0.0, -1.0],
            [-2.0 * (x1 - 1.0), -2.0 * x2, -1.0, 0.0, -1.0],
            [0.0, 1.0, 0.0, 0.0, -1.0],
        ])

    return VectorFn(5, 5, value, jacobian, ("g1", "g2", "g3", "g4", "g5"))


def _select(k: int) -> VectorFn:
    row = np.zeros((1, 5))
    row[0, k] = 1.0
    return VectorFn.affine(row, [0.0])


def build_disjunctive() -> MpocProblem:
    return MpocProblem(
        5, _objective(), _inequalities(), VectorFn.empty(5), _select(3), _select(4),
        "disjunctive", KnownOptimum(F_MIN, GLOBAL_MINIMIZER.copy()),
    )


def sample_disjunctive_starts(rng: np.random.Generator, count: int) -> np.ndarray:
    """``x`` uniform on ``[0, 4]^3`` and ``(u, v)`` uniform on ``[-1, 0]^2``."""
    x = rng.uniform(0.0, 4.0, size=(count, 3))
    uv = rng.uniform(-1.0, 0.0, size=(count, 2))
    return np.hstack([x, uv])
