"""The five solution methods and a parallel driver over (method, start) pairs.

The direct method solves the Kanzow-Schwartz reformulation once. The four
relaxation methods solve a sequence of relaxed programs with parameters
``t_k = t_factor^k``, warm-starting each stage from the previous solution,
until the or-constraints are met or ``t_k`` falls below ``t_min``.
"""

from __future__ import annotations

import enum
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .analysis import Stationarity, StationarityCertificate, certify_mpoc
from .errors import (
    BiactiveOverflowError,
    EvaluationError,
    InfeasibleResultError,
    InnerSolverError,
)
from .model import MpocProblem, feasibility
from .nlp import NlpSolution, solve_nlp
from .reformulate import (
    cc_start,
    direct_relax,
    ncp_reformulate,
    sc_start,
    scholtes_cc_relax,
    scholtes_sc_relax,
    to_mpcc,
    to_mpsc,
)


class MethodId(str, enum.Enum):
    DirectNcpKS = "DirectNcpKS"
    RelaxSC = "RelaxSC"
    RelaxCC = "RelaxCC"
    RelaxFB = "RelaxFB"
    RelaxKS = "RelaxKS"


ALL_METHODS = tuple(MethodId)


@dataclass(frozen=True)
class HomotopyConfig:
    t_initial: float = 0.01
    t_factor: float = 0.01
    t_min: float = 1e-8
    or_tol: float = 1e-4
    inner_tol: float = 1e-6
    direct_tol: float = 1e-4
    max_stages: int = 50
    max_inner_iter: int = 500

    def __post_init__(self):
        if not 0.0 < self.t_factor < 1.0:
            raise ValueError("t_factor must lie in (0, 1)")
        if self.t_min <= 0 or self.t_initial <= 0:
            raise ValueError("t_initial and t_min must be positive")
        if self.or_tol <= 0 or self.inner_tol <= 0 or self.direct_tol <= 0:
            raise ValueError("tolerances must be positive")

    def schedule(self) -> list:
        """Relaxation parameters of all stages that may run, in order."""
        ts = []
        for k in range(1, self.max_stages + 1):
            if self.t_initial == self.t_factor:
                t = self.t_factor**k
            else:
                t = self.t_initial * self.t_factor ** (k - 1)
            if t < self.t_min:
                break
            ts.append(t)
        return ts


@dataclass
class StageRecord:
    t: Optional[float]
    status: str
    iterations: int
    f_value: float
    kkt_residual: float
    point: np.ndarray


@dataclass
class RunResult:
    method: MethodId
    start: np.ndarray
    final_x: np.ndarray
    f_value: float
    max_or_violation: float
    max_violation: float
    feasible: bool
    stages: list = field(default_factory=list)
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def success(self) -> bool:
        return self.feasible


def _solve_stage(spec, start, tol, cfg, stage) -> NlpSolution:
    try:
        return solve_nlp(spec, start, tol=tol, max_iter=cfg.max_inner_iter)
    except EvaluationError as exc:
        raise InnerSolverError(stage, exc) from exc


def run_method(
    problem: MpocProblem, method, start, cfg: Optional[HomotopyConfig] = None, lifted_start=None
) -> RunResult:
    """Run one method from ``start``.

    Parameters
    ----------
    problem : MpocProblem
    method : MethodId or str
    start : array_like, shape (n,)
    cfg : HomotopyConfig, optional
    lifted_start : array_like, optional
        Full ``(x, y, z)`` start for the switching/complementarity methods;
        by default the slacks are derived from ``start``.

    Raises
    ------
    InnerSolverError
        If the inner solver hits a non-finite evaluation, with the stage index.
    """
    cfg = cfg or HomotopyConfig()
    method = MethodId(method)
    x0 = problem.check_point(start)
    t0 = time.perf_counter()
    stages: list = []

    if method is MethodId.DirectNcpKS:
        sol = _solve_stage(ncp_reformulate(problem), x0, cfg.direct_tol, cfg, 1)
        stages.append(StageRecord(None, sol.status, sol.iterations, sol.f_value, sol.kkt_residual, sol.x))
        x = sol.x
    else:
        if method is MethodId.RelaxSC:
            inst = to_mpsc(problem)
            build = lambda t: scholtes_sc_relax(inst, t)  # noqa: E731
            w = sc_start(problem, x0) if lifted_start is None else np.asarray(lifted_start, float)
        elif method is MethodId.RelaxCC:
            inst = to_mpcc(problem)
            build = lambda t: scholtes_cc_relax(inst, t)  # noqa: E731
            w = cc_start(problem, x0, cfg.t_initial) if lifted_start is None else np.asarray(lifted_start, float)
        else:
            variant = "fb" if method is MethodId.RelaxFB else "ks"
            build = lambda t: direct_relax(problem, variant, t)  # noqa: E731
            w = x0.copy()
        failures = 0
        for k, t in enumerate(cfg.schedule(), start=1):
            sol = _solve_stage(build(t), w, cfg.inner_tol, cfg, k)
            stages.append(StageRecord(t, sol.status, sol.iterations, sol.f_value, sol.kkt_residual, sol.x))
            w = sol.x
            if feasibility(problem, w[: problem.n]).max_violation <= cfg.or_tol:
                break
            failures = 0 if sol.converged else failures + 1
            if failures >= 2:
                break
        x = w[: problem.n]

    rep = feasibility(problem, x)
    return RunResult(
        method,
        x0.copy(),
        np.array(x, dtype=float),
        float(problem.f(x)),
        rep.max_or_violation,
        rep.max_violation,
        rep.max_violation <= cfg.or_tol,
        stages,
        time.perf_counter() - t0,
    )


@dataclass
class RunCertificates:
    strongest: Optional[str]
    certificates: list


def certify_run(
    problem: MpocProblem, result: RunResult, eps_act: float = 1e-4, eps_stat: Optional[float] = None
) -> RunCertificates:
    """Try S, then M, then W at the final point; report the strongest class that holds.

    The default stationarity tolerance is ``1e-3 * max(1, ||grad f||)``: the
    final point is only ``O(1e-4)`` accurate, and the gradients move with it.
    """
    if not result.feasible:
        raise InfeasibleResultError("certification requires a feasible run result")
    x = result.final_x
    if eps_stat is None:
        eps_stat = 1e-3 * max(1.0, float(np.linalg.norm(problem.f.gradient(x))))
    certs: list[StationarityCertificate] = []
    strongest = None
    for cls in (Stationarity.S, Stationarity.M, Stationarity.W):
        try:
            cert = certify_mpoc(problem, x, cls.value, eps_act, eps_stat)
        except BiactiveOverflowError:
            continue
        certs.append(cert)
        if cert.holds and strongest is None:
            strongest = cls.value
    return RunCertificates(strongest, certs)


# -- run matrix --------------------------------------------------------------------

_WORKER_PROBLEM: dict = {}


def _worker_problem(factory):
    key = repr(factory)
    if key not in _WORKER_PROBLEM:
        _WORKER_PROBLEM.clear()
        _WORKER_PROBLEM[key] = factory()
    return _WORKER_PROBLEM[key]


def _run_task(args):
    factory, method, start, cfg = args
    problem = _worker_problem(factory)
    t0 = time.perf_counter()
    try:
        return run_method(problem, method, start, cfg)
    except InnerSolverError as exc:
        return RunResult(
            method, start.copy(), start.copy(), math.nan, math.inf, math.inf, False, [],
            time.perf_counter() - t0, str(exc),
        )


def default_workers() -> int:
    env = os.environ.get("ORCON_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_matrix(
    factory: Callable[[], MpocProblem],
    methods: Sequence,
    starts: np.ndarray,
    cfg: Optional[HomotopyConfig] = None,
    workers: Optional[int] = None,
) -> list:
    """Run every method from every start; results ordered by ``(method, start index)``.

    A run whose inner solver breaks down is returned as infeasible with its
    ``error`` field set instead of aborting the whole matrix.

    ``factory`` must be picklable (for example a ``functools.partial`` of a
    module-level builder) so that worker processes can rebuild the problem.
    """
    cfg = cfg or HomotopyConfig()
    tasks = [(factory, MethodId(m), np.asarray(s, float), cfg) for m in methods for s in starts]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
