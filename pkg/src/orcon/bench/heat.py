"""Optimal control of the 2-D heat equation with two controls and ``u(t) >= 0 or v(t) >= 0``.

The state lives on a tensor grid over ``(-1, 1)^2`` with a 5-point Neumann
Laplacian and implicit Euler in time. Controls are nodal values on the time
grid. Since the control-to-state map is linear, the objective is assembled
once as an explicit quadratic in ``c = (u, v)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from ..errors import TooLargeError
from ..model import KnownOptimum, MpocProblem, SmoothFn, VectorFn

HORIZON = 6.0
SOURCE_SCALE = 0.1


@dataclass(frozen=True)
class HeatGridConfig:
    nodes: int = 8
    steps: int = 24
    alpha: float = 1e-6
    beta: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError("need at least 3 nodes per axis")
        if self.steps < 4:
            raise ValueError("need at least 4 time steps")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")

    @property
    def dt(self) -> float:
        return HORIZON / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, HORIZON, self.steps + 1)


def desired_controls(times) -> tuple:
    t = np.asarray(times, dtype=float)
    return -20.0 * np.sin(np.pi * t / 3.0), 10.0 * np.cos(np.pi * t / 2.0)


def _neumann_laplacian_1d(N: int, h: float) -> np.ndarray:
    L = np.zeros((N, N))
    for i in range(N):
        L[i, i] = -2.0
        if i > 0:
            L[i, i - 1] += 1.0
        if i < N - 1:
            L[i, i + 1] += 1.0
    # Reflected ghost nodes double the inward neighbour at the ends.
    L[0, 1] = 2.0
    L[N - 1, N - 2] = 2.0
    return L / h**2


def _trapezoid_weights(N: int, h: float) -> np.ndarray:
    w = np.full(N, h)
    w[0] = w[-1] = h / 2.0
    return w


class HeatModel:
    """Discrete state operator and quadrature for a :class:`HeatGridConfig`."""

    def __init__(self, cfg: HeatGridConfig):
        self.cfg = cfg
        N = cfg.nodes
        self.coords = np.linspace(-1.0, 1.0, N)
        h = self.coords[1] - self.coords[0]
        L1 = _neumann_laplacian_1d(N, h)
        eye = np.eye(N)
        self.laplacian = np.kron(L1, eye) + np.kron(eye, L1)
        # Node (i, j) has x1 = coords[i]; Omega_u is x1 <= 0.
        x1 = np.repeat(self.coords, N)
        self.chi_u = (x1 <= 0.0).astype(float)
        self.chi_v = 1.0 - self.chi_u
        w1 = _trapezoid_weights(N, h)
        self.space_weights = np.kron(w1, w1)
        K = cfg.steps
        self.time_weights = np.full(K + 1, cfg.dt)
        self.time_weights[0] = self.time_weights[-1] = cfg.dt / 2.0
        self.system = scipy.linalg.lu_factor(np.eye(N * N) - cfg.dt * self.laplacian)

    @property
    def n_time(self) -> int:
        return self.cfg.steps + 1

    def simulate(self, u, v) -> np.ndarray:
        """State trajectory, shape ``(steps + 1, nodes^2)``, from ``y(0) = 0``."""
        K, dt = self.cfg.steps, self.cfg.dt
        y = np.zeros((K + 1, self.laplacian.shape[0]))
        for k in range(K):
            rhs = y[k] + dt * SOURCE_SCALE * (self.chi_u * u[k + 1] + self.chi_v * v[k + 1])
            y[k + 1] = scipy.linalg.lu_solve(self.system, rhs)
        return y

    def state_l2(self, y) -> float:
        """Squared discrete ``L^2(I x Omega)`` norm (trapezoid in time and space)."""
        return float(self.time_weights @ ((y * y) @ self.space_weights))

    def regularizer(self, u, v) -> float:
        cfg = self.cfg
        l2 = self.time_weights @ (u * u + v * v)
        h1 = (np.sum(np.diff(u) ** 2) + np.sum(np.diff(v) ** 2)) / cfg.dt
        return float(0.5 * cfg.alpha * l2 + 0.5 * cfg.beta * h1)

    def objective_by_simulation(self, c, y_d) -> float:
        """Simulate-then-evaluate objective; independent of the assembled quadratic."""
        T = self.n_time
        u, v = c[:T], c[T:]
        return 0.5 * self.state_l2(self.simulate(u, v) - y_d) + self.regularizer(u, v)


@dataclass(frozen=True)
class HeatQuadratic:
    """``f(c) = c^T A c / 2 - b^T c + const`` for ``c = (u, v)``."""

    A: np.ndarray
    b: np.ndarray
    const: float
    c_desired: np.ndarray
    y_desired: np.ndarray

    def value(self, c) -> float:
        return float(0.5 * c @ self.A @ c - self.b @ c + self.const)

    def gradient(self, c) -> np.ndarray:
        return self.A @ c - self.b

    def to_csv(self, path) -> None:
        """Write ``[A | b]`` row by row; the constant goes in a trailing comment line."""
        data = np.hstack([self.A, self.b[:, None]])
        np.savetxt(path, data, delimiter=",", fmt="%.17g", footer=f"const={self.const!r}")


def assemble_heat_quadratic(model: HeatModel) -> HeatQuadratic:
    T = model.n_time
    times = model.cfg.times
    u_d, v_d = desired_controls(times)
    c_d = np.concatenate([u_d, v_d])
    # Unit responses give the linear state map column by column.
    responses = []
    zeros = np.zeros(T)
    for k in range(2 * T):
        e = np.zeros(T)
        e[k % T] = 1.0
        y = model.simulate(e, zeros) if k < T else model.simulate(zeros, e)
        responses.append(y.reshape(-1))
    S = np.array(responses).T
    weights = np.kron(model.time_weights, model.space_weights)
    tracking = S.T @ (weights[:, None] * S)
    cfg = model.cfg
    D = np.diff(np.eye(T), axis=0)
    reg_block = cfg.alpha * np.diag(model.time_weights) + cfg.beta * (D.T @ D) / cfg.dt
    R = np.kron(np.eye(2), reg_block)
    A = tracking + R
    A = 0.5 * (A + A.T)
    b = tracking @ c_d
    const = float(0.5 * c_d @ tracking @ c_d)
    y_d = (S @ c_d).reshape(T, -1)
    return HeatQuadratic(A, b, const, c_d, y_d)


def build_heat_control(cfg: Optional[HeatGridConfig] = None, known_f_min: Optional[float] = None) -> MpocProblem:
    """Discretized control problem; or-pairs ``(-u(t_i), -v(t_i))`` at every time node."""
    cfg = cfg or HeatGridConfig()
    model = HeatModel(cfg)
    quad = assemble_heat_quadratic(model)
    T = model.n_time
    n = 2 * T
    f = SmoothFn(n, quad.value, quad.gradient, "f")
    eye = np.eye(T)
    G = VectorFn.affine(np.hstack([-eye, np.zeros((T, T))]), np.zeros(T))
    H = VectorFn.affine(np.hstack([np.zeros((T, T)), -eye]), np.zeros(T))
    known = None if known_f_min is None else KnownOptimum(known_f_min)
    problem = MpocProblem(n, f, VectorFn.empty(n), VectorFn.empty(n), G, H, "heat", known)
    object.__setattr__(problem, "_heat", (model, quad))
    return problem


def heat_data(problem: MpocProblem) -> tuple:
    """``(HeatModel, HeatQuadratic)`` attached to a problem from :func:`build_heat_control`."""
    return problem.__dict__["_heat"]


def sample_heat_starts(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    return rng.uniform(-10.0, 10.0, size=(count, n))


class CoarseEstimate(NamedTuple):
    f_estimate: float
    controls: np.ndarray
    coarse_value: float
    patterns: int


def _repair(c, T):
    """Zero the smaller-magnitude control wherever both are negative."""
    u, v = c[:T].copy(), c[T:].copy()
    both = (u < 0) & (v < 0)
    pick_u = both & (np.abs(u) <= np.abs(v))
    u[pick_u] = 0.0
    v[both & ~pick_u] = 0.0
    return np.concatenate([u, v])


def heat_coarse_global_estimate(
    cfg: HeatGridConfig, coarse_steps: int = 4, cap_patterns: int = 1 << 17, tol: float = 1e-8
) -> CoarseEstimate:
    """Solve every branch of a coarse-in-time problem and lift the best to ``cfg``'s grid.

    Each branch fixes, per coarse node, whether ``u >= 0`` or ``v >= 0`` and
    is a convex quadratic program solved by :func:`orcon.nlp.solve_nlp`.
    Interpolated controls that become jointly negative between two nodes
    of different branches are repaired by zeroing the smaller one.
    """
    from ..nlp import NlpSpec, solve_nlp

    coarse_cfg = HeatGridConfig(cfg.nodes, coarse_steps, cfg.alpha, cfg.beta, cfg.seed)
    nodes = coarse_steps + 1
    if 2**nodes > cap_patterns:
        raise TooLargeError(f"{2 ** nodes} branch patterns exceed the cap {cap_patterns}")
    coarse = build_heat_control(coarse_cfg)
    n = 2 * nodes
    best = None
    for pattern in itertools.product((0, 1), repeat=nodes):
        lower = np.full(n, -np.inf)
        for k, p in enumerate(pattern):
            lower[k if p == 0 else nodes + k] = 0.0
        spec = NlpSpec(n, coarse.f, VectorFn.empty(n), VectorFn.empty(n), lower=lower, name="heat-branch")
        sol = solve_nlp(spec, np.ones(n), tol=tol)
        if best is None or sol.f_value < best.f_value:
            best = sol
    fine = build_heat_control(cfg)
    T = cfg.steps + 1
    c = best.x
    lifted = np.concatenate([
        np.interp(cfg.times, coarse_cfg.times, c[:nodes]),
        np.interp(cfg.times, coarse_cfg.times, c[nodes:]),
    ])
    lifted = _repair(lifted, T)
    return CoarseEstimate(float(fine.f(lifted)), lifted, float(best.f_value), 2**nodes)
