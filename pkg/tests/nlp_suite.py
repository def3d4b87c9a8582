"""Ten smooth convex programs with independently computed solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, nnls

from orcon.model import SmoothFn, VectorFn
from orcon.nlp import NlpSpec


@dataclass
class Reference:
    spec: NlpSpec
    start: np.ndarray
    x_star: np.ndarray


def _quadratic(Q, q):
    Q, q = np.asarray(Q, float), np.asarray(q, float)
    return SmoothFn(q.size, lambda x: float(0.5 * x @ Q @ x + q @ x), lambda x: Q @ x + q)


def _ball(center, radius):
    c = np.asarray(center, float)
    n = c.size
    return VectorFn(
        n, 1, lambda x: np.array([(x - c) @ (x - c) - radius**2]), lambda x: 2.0 * (x - c)[None, :]
    )


def _stack(parts, n):
    return VectorFn.stack(parts, n)


def reference_problems():
    out = []

    # 1. unconstrained scalar quadratic
    f = SmoothFn(1, lambda x: float((x[0] - 1.0) ** 2), lambda x: np.array([2.0 * (x[0] - 1.0)]))
    out.append(Reference(NlpSpec(1, f, VectorFn.empty(1), VectorFn.empty(1), name="scalar"), np.array([5.0]), np.array([1.0])))

    # 2. linear objective over the unit disk
    f = SmoothFn(2, lambda x: float(x[0] + x[1]), lambda x: np.ones(2))
    s = np.sqrt(0.5)
    out.append(Reference(NlpSpec(2, f, _ball([0, 0], 1.0), VectorFn.empty(2), name="circle"), np.array([1.0, 1.0]), np.array([-s, -s])))

    # 3. distance to a point over a box: the clip
    c = np.array([2.0, -3.0, 0.5])
    f = _quadratic(np.eye(3) * 2.0, -2.0 * c)
    spec = NlpSpec(3, f, VectorFn.empty(3), VectorFn.empty(3), -np.ones(3), np.ones(3), "box-projection")
    out.append(Reference(spec, np.zeros(3), np.clip(c, -1.0, 1.0)))

    # 4. equality-constrained least squares, solved through its KKT matrix
    rng = np.random.default_rng(4)
    A, b = rng.normal(size=(6, 4)), rng.normal(size=6)
    C, d = rng.normal(size=(2, 4)), rng.normal(size=2)
    f = _quadratic(2.0 * A.T @ A, -2.0 * A.T @ b)
    K = np.block([[2.0 * A.T @ A, C.T], [C, np.zeros((2, 2))]])
    x_star = np.linalg.solve(K, np.concatenate([2.0 * A.T @ b, d]))[:4]
    spec = NlpSpec(4, f, VectorFn.empty(4), VectorFn.affine(C, -d), name="eq-lsq")
    out.append(Reference(spec, np.zeros(4), x_star))

    # 5. linear objective over a box: a vertex
    w = np.array([1.0, -2.0, 3.0])
    f = SmoothFn(3, lambda x: float(w @ x), lambda x: w)
    spec = NlpSpec(3, f, VectorFn.empty(3), VectorFn.empty(3), np.zeros(3), np.ones(3), "box-lp")
    out.append(Reference(spec, np.full(3, 0.5), np.array([0.0, 1.0, 0.0])))

    # 6. projection onto a half-plane
    f = _quadratic(2.0 * np.eye(2), [-4.0, -4.0])
    spec = NlpSpec(2, f, VectorFn.affine([[1.0, 1.0]], [-2.0]), VectorFn.empty(2), name="half-plane")
    out.append(Reference(spec, np.array([-3.0, 5.0]), np.array([1.0, 1.0])))

    # 7. projection onto the unit ball in four dimensions
    p = np.array([2.0, -1.0, 0.5, 3.0])
    f = _quadratic(2.0 * np.eye(4), -2.0 * p)
    spec = NlpSpec(4, f, _ball(np.zeros(4), 1.0), VectorFn.empty(4), name="ball-projection")
    out.append(Reference(spec, np.zeros(4), p / np.linalg.norm(p)))

    # 8. sum of exponentials on a hyperplane; the dual scalar comes from a bracketing root finder
    wts = np.array([3.0, 2.0, 1.5])
    f = SmoothFn(3, lambda x: float(np.sum(np.exp(x)) - wts @ x), lambda x: np.exp(x) - wts)
    rho = brentq(lambda r: np.sum(np.log(wts - r)) - 1.0, -50.0, wts.min() - 1e-12)
    spec = NlpSpec(3, f, VectorFn.empty(3), VectorFn.affine([[1.0, 1.0, 1.0]], [-1.0]), name="exp-simplex")
    out.append(Reference(spec, np.zeros(3), np.log(wts - rho)))

    # 9. leftmost point of the intersection of two disks
    f = SmoothFn(2, lambda x: float(x[0]), lambda x: np.array([1.0, 0.0]))
    spec = NlpSpec(2, f, _stack([_ball([1.0, 0.0], 1.0), _ball([-0.5, 0.0], 1.0)], 2), VectorFn.empty(2), name="two-disks")
    out.append(Reference(spec, np.array([0.3, 0.2]), np.zeros(2)))

    # 10. nonnegative least squares, checked against scipy's solver
    rng = np.random.default_rng(10)
    A, b = rng.normal(size=(8, 5)), rng.normal(size=8)
    f = _quadratic(2.0 * A.T @ A, -2.0 * A.T @ b)
    spec = NlpSpec(5, f, VectorFn.empty(5), VectorFn.empty(5), np.zeros(5), None, "nnls")
    out.append(Reference(spec, np.ones(5), nnls(A, b)[0]))

    return out
