"""Two-variable or-constrained programs with ``x1 <= 0 or x2 <= 0``."""

from __future__ import annotations

import numpy as np

from ..model import KnownOptimum, MpocProblem, SmoothFn, VectorFn


def _coordinate(k: int) -> VectorFn:
    row = np.zeros((1, 2))
    row[0, k] = 1.0
    return VectorFn.affine(row, [0.0])


def build_toy_branch() -> MpocProblem:
    """Minimize ``(x1 - 1)^2``; global minimizers ``(1, x2)`` with ``x2 <= 0``."""
    f = SmoothFn(
        2,
        lambda x: float((x[0] - 1.0) ** 2),
        lambda x: np.array([2.0 * (x[0] - 1.0), 0.0]),
        "f",
    )
    return MpocProblem(
        2, f, VectorFn.empty(2), VectorFn.empty(2), _coordinate(0), _coordinate(1),
        "toy-branch", KnownOptimum(0.0, np.array([1.0, 0.0])),
    )


def build_toy_symmetric() -> MpocProblem:
    """Minimize ``((x1 - 1)^2 + (x2 - 1)^2) / 2``; minimizers ``(1, 0)`` and ``(0, 1)``."""
    f = SmoothFn(
        2,
        lambda x: float(0.5 * np.sum((x - 1.0) ** 2)),
        lambda x: x - 1.0,
        "f",
    )
    return MpocProblem(
        2, f, VectorFn.empty(2), VectorFn.empty(2), _coordinate(0), _coordinate(1),
        "toy-symmetric", KnownOptimum(0.5, np.array([1.0, 0.0])),
    )
