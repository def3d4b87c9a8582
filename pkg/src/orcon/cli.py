"""Command line entry point: ``orcon bench | verify | gradcheck | profile``.

Exit codes: 0 success, 1 a check or run failed, 2 bad input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import functools
import json
import math
import os
import sys
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import profile as prof
from .analysis import DEFAULT_EPS_ACT, active_pattern, certify_mpoc, check_cq
from .bench import (
    HeatGridConfig,
    build_disjunctive,
    build_gap_domain,
    build_heat_control,
    build_toy_branch,
    build_toy_symmetric,
    sample_disjunctive_starts,
    sample_gap_starts,
    sample_gap_vector,
    sample_heat_starts,
)
from .errors import OrconError
from .homotopy import ALL_METHODS, HomotopyConfig, MethodId, certify_run, default_workers, run_matrix
from .model import FEAS_TOL, feasibility, grad_check

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3
SCHEMA_VERSION = 1
GRADCHECK_TOL = 1e-5


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DisjunctiveBench(_Strict):
    id: Literal["disjunctive"]


class GapBench(_Strict):
    id: Literal["gap"]
    n: int = Field(50, ge=1)
    budget: float = 15.0
    min_upper: int = Field(15, ge=0)


class HeatBench(_Strict):
    id: Literal["heat"]
    nodes: int = Field(8, ge=3)
    steps: int = Field(24, ge=4)
    alpha: float = Field(1e-6, gt=0)
    beta: float = Field(1e-5, gt=0)
    known_f_min: Optional[float] = None


BENCHMARK_IDS = ("disjunctive", "gap", "heat")
DEFAULT_DELTA = {"disjunctive": 1.0, "gap": 1.0, "heat": 0.0}


class HomotopyOverrides(_Strict):
    t_initial: Optional[float] = None
    t_factor: Optional[float] = None
    t_min: Optional[float] = None
    or_tol: Optional[float] = None
    inner_tol: Optional[float] = None
    direct_tol: Optional[float] = None
    max_stages: Optional[int] = None
    max_inner_iter: Optional[int] = None

    def build(self) -> HomotopyConfig:
        return HomotopyConfig(**{k: v for k, v in self.model_dump().items() if v is not None})


class ExperimentConfig(_Strict):
    """Batch experiment read from JSON; unknown keys are rejected."""

    schema_version: Literal[1] = Field(SCHEMA_VERSION, alias="schema")
    benchmark: Annotated[Union[DisjunctiveBench, GapBench, HeatBench], Field(discriminator="id")]
    methods: list[MethodId] = Field(default_factory=lambda: list(ALL_METHODS), min_length=1)
    num_starts: int = Field(100, ge=1)
    seed: int = 0
    homotopy: HomotopyOverrides = HomotopyOverrides()
    delta: Optional[float] = Field(None, ge=0)
    feas_tol: float = Field(1e-4, gt=0)
    output: str = "orcon-out"
    workers: Optional[int] = Field(None, ge=1)
    svg: bool = True


class ConfigError(ValueError):
    pass


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate a JSON config; ``overrides`` replace top-level keys."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    bench = raw.get("benchmark")
    bench_id = bench.get("id") if isinstance(bench, dict) else None
    if bench_id not in BENCHMARK_IDS:
        raise ConfigError(f"unknown benchmark id {bench_id!r}; valid ids: {', '.join(BENCHMARK_IDS)}")
    raw.update(overrides or {})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path}:\n{exc}") from exc


def prepare_benchmark(cfg: ExperimentConfig) -> tuple:
    """``(factory, starts)`` for the configured benchmark; all randomness flows from ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    b = cfg.benchmark
    if isinstance(b, DisjunctiveBench):
        return build_disjunctive, sample_disjunctive_starts(rng, cfg.num_starts)
    if isinstance(b, GapBench):
        a = sample_gap_vector(rng, b.n, b.min_upper)
        factory = functools.partial(build_gap_domain, b.n, b.budget, a)
        return factory, sample_gap_starts(rng, cfg.num_starts, b.n)
    grid = HeatGridConfig(b.nodes, b.steps, b.alpha, b.beta)
    factory = functools.partial(build_heat_control, grid, b.known_f_min)
    return factory, sample_heat_starts(rng, cfg.num_starts, 2 * (b.steps + 1))


def run_bench(cfg: ExperimentConfig, out_dir, workers: Optional[int] = None) -> tuple:
    """Run the configured matrix and write its artifacts; returns ``(results, paths)``."""
    factory, starts = prepare_benchmark(cfg)
    problem = factory()
    hcfg = cfg.homotopy.build()
    if workers is None and os.environ.get("ORCON_THREADS"):
        workers = default_workers()
    workers = workers or cfg.workers or default_workers()
    results = run_matrix(factory, cfg.methods, starts, hcfg, workers)
    idx = [i for _ in cfg.methods for i in range(len(starts))]
    rows = [prof.result_row(r, i) for r, i in zip(results, idx)]

    known = problem.known_optimum.f_min if problem.known_optimum is not None else None
    f_min, source = prof.resolve_f_min(rows, known, cfg.feas_tol)
    delta = cfg.delta if cfg.delta is not None else DEFAULT_DELTA[cfg.benchmark.id]
    table = prof.build_table(rows, f_min, delta, cfg.feas_tol)

    out_dir = Path(out_dir)
    paths = prof.emit(table, rows, out_dir, svg=cfg.svg, title=f"{problem.name}, delta = {delta:g}")
    cert_rows = []
    for r, i in zip(results, idx):
        strongest = ""
        if r.feasible:
            strongest = certify_run(problem, r).strongest or "none"
        cert_rows.append((r.method.value, i, strongest, r.error or ""))
    paths["certificates"] = out_dir / "certificates.csv"
    prof.write_csv(("method", "start", "strongest", "error"), cert_rows, paths["certificates"])
    paths["timings"] = out_dir / "timings.csv"
    prof.write_timings_csv([r.method.value for r in results], idx, [r.wall_time for r in results], paths["timings"])
    meta = {
        "benchmark": cfg.benchmark.model_dump(),
        "seed": cfg.seed,
        "num_starts": cfg.num_starts,
        "methods": [m.value for m in cfg.methods],
        "f_min": f_min,
        "f_min_source": source,
        "delta": delta,
        "feas_tol": cfg.feas_tol,
    }
    paths["meta"] = out_dir / "meta.json"
    prof.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", paths["meta"])
    return results, paths


def cmd_bench(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.starts is not None:
        overrides["num_starts"] = args.starts
    if args.methods:
        overrides["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or cfg.output)
    try:
        results, paths = run_bench(cfg, out)
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    errors = [r for r in results if r.error]
    for m in cfg.methods:
        mine = [r for r in results if r.method is m]
        print(f"{m.value:12s} feasible {sum(r.feasible for r in mine)}/{len(mine)}")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    if errors:
        print(f"{len(errors)} runs aborted by inner solver failures", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


PROBLEMS = {
    "toy-branch": build_toy_branch,
    "toy-symmetric": build_toy_symmetric,
    "disjunctive": build_disjunctive,
    "heat": build_heat_control,
}


def read_point(path) -> np.ndarray:
    """One whitespace-separated row of decimals."""
    text = Path(path).read_text(encoding="utf-8").strip()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ValueError("point file must hold exactly one row")
    return np.array([float(v) for v in lines[0].split()], dtype=float)


def cmd_verify(args) -> int:
    if args.problem not in PROBLEMS:
        print(f"unknown problem {args.problem!r}; valid ids: {', '.join(PROBLEMS)}", file=sys.stderr)
        return EXIT_INPUT
    problem = PROBLEMS[args.problem]()
    try:
        x = problem.check_point(read_point(args.point))
    except (OSError, ValueError) as exc:
        print(f"malformed point file {args.point}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rep = feasibility(problem, x)
    if rep.max_violation > args.eps_act:
        print(f"point is infeasible: max violation {rep.max_violation:.3e}", file=sys.stderr)
        return EXIT_FAIL
    pat = active_pattern(problem, x, args.eps_act)
    print("active pattern:")
    for name in ("active_g", "i0P", "iP0", "i00", "i0M", "iM0", "iMM", "iMP", "iPM"):
        print(f"  {name}: {list(getattr(pat, name))}")
    cq = check_cq(problem, x, args.eps_act)
    print(f"MPOC-LICQ: {cq.mpoc_licq}  MPOC-MFCQ: {cq.mpoc_mfcq}  sigma_min: {cq.smallest_singular_value:.3e}")
    try:
        cert = certify_mpoc(problem, x, args.cls, args.eps_act, args.eps_stat)
    except OrconError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"class {args.cls}: {cert.verdict} (residual {cert.residual_norm:.3e}, tolerance {cert.eps_stat:.1e})")
    with np.printoptions(precision=6, suppress=True):
        print(f"  lambda = {cert.lam}\n  rho = {cert.rho}\n  mu = {cert.mu}\n  nu = {cert.nu}")
    return EXIT_OK if cert.holds else EXIT_FAIL


def gradcheck_problem(bench: str, n: int = 10, seed: int = 0):
    if bench == "gap":
        a = sample_gap_vector(np.random.default_rng(seed), n, min(n, max(1, n // 3)))
        return build_gap_domain(n, n / 3.0, a)
    if bench in PROBLEMS:
        return PROBLEMS[bench]()
    raise KeyError(bench)


def run_gradcheck(problem, seed: int = 0) -> tuple:
    report = grad_check(problem, seed=seed)
    return report.passed(GRADCHECK_TOL), report


def cmd_gradcheck(args) -> int:
    try:
        problem = gradcheck_problem(args.benchmark, args.n, args.seed)
    except KeyError:
        valid = ", ".join(["gap", *PROBLEMS])
        print(f"unknown benchmark {args.benchmark!r}; valid ids: {valid}", file=sys.stderr)
        return EXIT_INPUT
    ok, report = run_gradcheck(problem, args.seed)
    worst = max(report.errors, key=report.errors.get) if report.errors else "-"
    print(f"{problem.name}: worst relative error {report.worst:.3e} ({worst}); tolerance {GRADCHECK_TOL:g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_profile(args) -> int:
    src = Path(args.results)
    meta_path = src.parent / "meta.json"
    meta = {}
    try:
        rows = prof.read_results_csv(src)
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"malformed results: {exc}", file=sys.stderr)
        return EXIT_INPUT
    feas_tol = args.feas_tol if args.feas_tol is not None else meta.get("feas_tol", FEAS_TOL)
    delta = args.delta if args.delta is not None else meta.get("delta", 1.0)
    if args.f_min is not None:
        f_min = args.f_min
    elif "f_min" in meta and meta["f_min"] is not None and not math.isnan(meta["f_min"]):
        f_min = meta["f_min"]
    else:
        f_min, _ = prof.resolve_f_min(rows, None, feas_tol)
    try:
        table = prof.build_table(rows, f_min, delta, feas_tol)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or src.parent)
    tau, curves = prof.profile_curves(table)
    try:
        prof.write_profile_csv(tau, curves, out / "profile.csv")
        prof.write_svg(tau, curves, out / "profile.svg", f"delta = {delta:g}")
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    for m, rho in curves.items():
        print(f"{m:12s} rho(1) = {rho[0]:.3f}  rho(max) = {rho[-1]:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orcon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a benchmark matrix from a JSON config")
    b.add_argument("--config", required=True, help="experiment config (JSON)")
    b.add_argument("--out", help="output directory; overrides the config")
    b.add_argument("--seed", type=int, help="override the config seed")
    b.add_argument("--starts", type=int, help="override the number of starts")
    b.add_argument("--methods", help="comma-separated method ids")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="certify a point of a built-in problem")
    v.add_argument("problem", help=f"one of: {', '.join(PROBLEMS)}")
    v.add_argument("point", help="file with one whitespace-separated row of decimals")
    v.add_argument("cls", choices=["W", "M", "S"], help="stationarity class")
    v.add_argument("--eps-act", type=float, default=DEFAULT_EPS_ACT)
    v.add_argument("--eps-stat", type=float, default=None)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gradcheck", help="compare benchmark gradients with finite differences")
    g.add_argument("benchmark", help=f"one of: gap, {', '.join(PROBLEMS)}")
    g.add_argument("--n", type=int, default=10, help="dimension of the gap-domain instance")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gradcheck)

    r = sub.add_parser("profile", help="recompute profiles from a results CSV")
    r.add_argument("results", help="results.csv written by 'bench'")
    r.add_argument("--out", help="output directory; defaults to the results directory")
    r.add_argument("--delta", type=float)
    r.add_argument("--f-min", type=float)
    r.add_argument("--feas-tol", type=float)
    r.set_defaults(func=cmd_profile)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
