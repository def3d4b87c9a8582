"""Or-constrained programs: data functions, feasibility and gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError

#: Default feasibility tolerance, also the global stopping tolerance of the methods.
FEAS_TOL = 1e-4


@dataclass(frozen=True)
class SmoothFn:
    """A continuously differentiable ``R^n -> R`` with an analytic gradient."""

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True)
class VectorFn:
    """A stack of ``size`` smooth functions evaluated together.

    ``value(x)`` returns shape ``(size,)`` and ``jacobian(x)`` shape
    ``(size, dim)``. Builders use this to keep evaluations vectorized.
    """

    dim: int
    size: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    names: tuple = ()

    def __call__(self, x):
        return self.value(x)

    @classmethod
    def empty(cls, dim: int) -> "VectorFn":
        return cls(dim, 0, lambda x: np.zeros(0), lambda x: np.zeros((0, dim)))

    @classmethod
    def from_scalars(cls, fns: Sequence[SmoothFn], dim: int) -> "VectorFn":
        fns = tuple(fns)
        for k, fn in enumerate(fns):
            if fn.dim != dim:
                raise DimensionMismatchError(f"function {k} has dim {fn.dim}, expected {dim}")
        if not fns:
            return cls.empty(dim)
        return cls(
            dim,
            len(fns),
            lambda x: np.array([fn.value(x) for fn in fns], dtype=float),
            lambda x: np.array([fn.gradient(x) for fn in fns], dtype=float).reshape(len(fns), dim),
            tuple(fn.name for fn in fns),
        )

    @classmethod
    def affine(cls, A, b) -> "VectorFn":
        """``x -> A @ x + b``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(A.shape[0])
        return cls(A.shape[1], A.shape[0], lambda x: A @ x + b, lambda x: A)

    @classmethod
    def stack(cls, parts: Sequence["VectorFn"], dim: int) -> "VectorFn":
        parts = [p for p in parts if p.size > 0]
        for p in parts:
            if p.dim != dim:
                raise DimensionMismatchError(f"stacked block has dim {p.dim}, expected {dim}")
        if not parts:
            return cls.empty(dim)
        if len(parts) == 1:
            return parts[0]
        return cls(
            dim,
            sum(p.size for p in parts),
            lambda x: np.concatenate([p.value(x) for p in parts]),
            lambda x: np.vstack([p.jacobian(x) for p in parts]),
            sum((p.names or ("",) * p.size for p in parts), ()),
        )

    def component(self, k: int) -> SmoothFn:
        name = self.names[k] if self.names else f"[{k}]"
        return SmoothFn(
            self.dim, lambda x: float(self.value(x)[k]), lambda x: self.jacobian(x)[k], name
        )


@dataclass(frozen=True)
class KnownOptimum:
    f_min: float
    minimizer: Optional[np.ndarray] = None


@dataclass(frozen=True)
class MpocProblem:
    """Minimize ``f`` subject to ``g <= 0``, ``h = 0`` and ``G_l <= 0 or H_l <= 0``."""

    n: int
    f: SmoothFn
    g: VectorFn
    h: VectorFn
    G: VectorFn
    H: VectorFn
    name: str = ""
    known_optimum: Optional[KnownOptimum] = None

    def __post_init__(self):
        for label, fn in (("f", self.f), ("g", self.g), ("h", self.h), ("G", self.G), ("H", self.H)):
            if fn.dim != self.n:
                raise DimensionMismatchError(f"{label} has dim {fn.dim}, problem has n={self.n}")
        if self.G.size != self.H.size:
            raise DimensionMismatchError("G and H must have the same number of components")

    @classmethod
    def from_functions(
        cls,
        n: int,
        f: SmoothFn,
        g: Sequence[SmoothFn] = (),
        h: Sequence[SmoothFn] = (),
        or_pairs: Sequence[tuple] = (),
        name: str = "",
        known_optimum: Optional[KnownOptimum] = None,
    ) -> "MpocProblem":
        return cls(
            n,
            f,
            VectorFn.from_scalars(g, n),
            VectorFn.from_scalars(h, n),
            VectorFn.from_scalars([p[0] for p in or_pairs], n),
            VectorFn.from_scalars([p[1] for p in or_pairs], n),
            name,
            known_optimum,
        )

    @property
    def m(self) -> int:
        return self.g.size

    @property
    def p(self) -> int:
        return self.h.size

    @property
    def q(self) -> int:
        return self.G.size

    @property
    def or_pairs(self) -> list:
        return [(self.G.component(k), self.H.component(k)) for k in range(self.q)]

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n:
            raise DimensionMismatchError(f"point has dimension {x.shape[0]}, expected {self.n}")
        return x


@dataclass(frozen=True)
class FeasibilityReport:
    g_violation: np.ndarray
    h_violation: np.ndarray
    or_violation: np.ndarray
    max_violation: float = field(init=False)

    def __post_init__(self):
        parts = [v for v in (self.g_violation, self.h_violation, self.or_violation) if v.size]
        object.__setattr__(self, "max_violation", float(max((v.max() for v in parts), default=0.0)))

    @property
    def max_or_violation(self) -> float:
        return float(self.or_violation.max(initial=0.0))

    @property
    def max_standard_violation(self) -> float:
        return float(max(self.g_violation.max(initial=0.0), self.h_violation.max(initial=0.0)))

    def feasible(self, eps: float = FEAS_TOL) -> bool:
        return self.max_violation <= eps


def feasibility(problem: MpocProblem, x) -> FeasibilityReport:
    x = problem.check_point(x)
    G, H = problem.G(x), problem.H(x)
    return FeasibilityReport(
        np.maximum(0.0, problem.g(x)),
        np.abs(problem.h(x)),
        np.maximum(0.0, np.minimum(G, H)),
    )


# -- gradient checking -------------------------------------------------------


@dataclass
class GradCheckReport:
    errors: dict
    worst: float

    def passed(self, tol: float = 1e-5) -> bool:
        return self.worst <= tol


def fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central differences with step ``1e-6 * max(1, |x_i|)``; columns are partials."""
    cols = []
    for i in range(x.size):
        h = 1e-6 * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(fn(xp), dtype=float) - np.asarray(fn(xm), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def check_gradients(
    functions: Sequence[tuple], dim: int, probes: int = 20, seed: int = 0, box: float = 2.0
) -> GradCheckReport:
    """Compare analytic gradients with central differences at random points.

    ``functions`` holds ``(label, fn)`` pairs where ``fn`` is a
    :class:`SmoothFn` or a :class:`VectorFn`. Errors are relative,
    ``|analytic - fd| / max(1, |fd|)``, taken as a sup over components.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    points = rng.uniform(-box, box, size=(probes, dim))
    errors: dict = {}
    for label, fn in functions:
        if isinstance(fn, VectorFn):
            worst = np.zeros(fn.size)
            for x in points:
                fd = fd_jacobian(fn.value, x).reshape(fn.size, dim)
                an = np.asarray(fn.jacobian(x), dtype=float).reshape(fn.size, dim)
                rel = np.abs(an - fd) / np.maximum(1.0, np.abs(fd))
                worst = np.maximum(worst, rel.max(axis=1, initial=0.0))
            errors.update({f"{label}[{k}]": float(w) for k, w in enumerate(worst)})
        else:
            worst = 0.0
            for x in points:
                fd = fd_jacobian(fn.value, x)
                an = np.asarray(fn.gradient(x), dtype=float)
                worst = max(worst, float(np.max(np.abs(an - fd) / np.maximum(1.0, np.abs(fd)), initial=0.0)))
            errors[label] = worst
    return GradCheckReport(errors, max(errors.values(), default=0.0))


def grad_check(problem: MpocProblem, probes: int = 20, seed: int = 0) -> GradCheckReport:
    """Worst relative gradient error for every constituent function of ``problem``."""
    return check_gradients(
        [("f", problem.f), ("g", problem.g), ("h", problem.h), ("G", problem.G), ("H", problem.H)],
        problem.n,
        probes,
        seed,
    )
