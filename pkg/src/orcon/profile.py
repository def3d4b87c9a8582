"""Performance profiles over a method-by-start table of shifted objective values.

A run scores ``Q = f(x) - f_min + delta`` when its final point is feasible
within ``feas_tol`` and ``+inf`` otherwise. Ratios divide each row by its best
score and ``rho_a(tau)`` is the fraction of starts where method ``a`` is
within a factor ``tau`` of the best.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

NEGATIVE_SLACK = 1e-8
TAU_POINTS = 200
TAU_CAP = 1e6
RESULT_FIELDS = ("method", "start", "f_value", "max_or_violation", "max_violation", "feasible", "stages")
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass(frozen=True)
class ResultRow:
    """The part of a run result a profile needs; one row of the results CSV."""

    method: str
    start: int
    f_value: float
    max_or_violation: float
    max_violation: float
    feasible: bool
    stages: int


@dataclass
class ProfileTable:
    """Scores ``q_values[s, a]`` of method ``methods[a]`` from start ``starts[s]``."""

    methods: list
    starts: list
    q_values: np.ndarray
    delta: float
    f_min: float
    feas_tol: float

    def __post_init__(self):
        self.q_values = np.asarray(self.q_values, dtype=float)
        if self.q_values.shape != (len(self.starts), len(self.methods)):
            raise ValueError(
                f"q_values has shape {self.q_values.shape}, expected {(len(self.starts), len(self.methods))}"
            )
        finite = self.q_values[np.isfinite(self.q_values)]
        if finite.size and finite.min() < self.delta - NEGATIVE_SLACK:
            raise ValueError(
                f"score {finite.min():.3e} lies below delta = {self.delta:g}; f_min is not a lower bound"
            )


def q_metric(result, f_min: float, delta: float, feas_tol: float) -> float:
    """Score of one run: ``f - f_min + delta`` if feasible within ``feas_tol``, else ``+inf``.

    ``result`` may be a :class:`~orcon.homotopy.RunResult` or a :class:`ResultRow`;
    feasibility covers the or-pairs and the ordinary constraints alike.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if result.max_or_violation > feas_tol or result.max_violation > feas_tol:
        return math.inf
    return float(result.f_value) - f_min + delta


def result_row(result, start: int) -> ResultRow:
    """Reduce a :class:`~orcon.homotopy.RunResult` to its CSV row."""
    method = getattr(result.method, "value", result.method)
    return ResultRow(
        str(method),
        int(start),
        float(result.f_value),
        float(result.max_or_violation),
        float(result.max_violation),
        bool(result.feasible),
        len(result.stages),
    )


def resolve_f_min(rows: Sequence, known: Optional[float], feas_tol: float) -> tuple:
    """Reference value for the scores and where it came from.

    The known optimum is used unless a feasible run undercuts it, in which case
    the best feasible value takes over so that every score stays at least
    ``delta``. Without a known optimum the best feasible value is used.
    """
    feasible = [r.f_value for r in rows if max(r.max_or_violation, r.max_violation) <= feas_tol]
    best = min(feasible) if feasible else None
    if known is not None and (best is None or known <= best):
        return float(known), "known"
    if best is None:
        return math.nan, "none"
    return float(best), "best-feasible"


def build_table(rows: Sequence, f_min: float, delta: float, feas_tol: float) -> ProfileTable:
    """Arrange result rows into a :class:`ProfileTable`.

    Methods keep the order of first appearance; starts are sorted.
    """
    methods: list = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    starts = sorted({r.start for r in rows})
    q = np.full((len(starts), len(methods)), math.inf)
    filled = np.zeros(q.shape, dtype=bool)
    s_index = {s: i for i, s in enumerate(starts)}
    for r in rows:
        i, j = s_index[r.start], methods.index(r.method)
        if filled[i, j]:
            raise ValueError(f"duplicate result for method {r.method} and start {r.start}")
        filled[i, j] = True
        q[i, j] = q_metric(r, f_min, delta, feas_tol) if math.isfinite(f_min) else math.inf
    if not filled.all():
        raise ValueError("results do not cover every (method, start) pair")
    return ProfileTable(methods, starts, q, delta, f_min, feas_tol)


def ratios(table) -> np.ndarray:
    """Performance ratios: each row divided by its minimum.

    Rows without any finite score are all ``+inf`` (see :func:`unsolved_rows`).
    When a row minimum is zero, which needs ``delta = 0``, entries attaining
    it get ratio one and all others ``+inf``.
    """
    q = np.asarray(getattr(table, "q_values", table), dtype=float)
    if q.ndim != 2 or q.shape[1] < 1:
        raise ValueError("need a 2-D table with at least one method")
    best = q.min(axis=1, keepdims=True)
    r = np.full(q.shape, math.inf)
    ok = np.isfinite(best[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        r[ok] = q[ok] / best[ok]
    zero = ok & (best[:, 0] == 0.0)
    r[zero] = np.where(q[zero] == 0.0, 1.0, math.inf)
    return r


def unsolved_rows(table) -> np.ndarray:
    """Mask of starts on which no method produced a feasible point."""
    q = np.asarray(getattr(table, "q_values", table), dtype=float)
    return ~np.isfinite(q).any(axis=1)


def tau_grid(r: np.ndarray, points: int = TAU_POINTS, cap: float = TAU_CAP) -> np.ndarray:
    """Geometric grid from one to the largest finite ratio, capped at ``cap``."""
    finite = r[np.isfinite(r)]
    top = float(finite.max()) if finite.size else 1.0
    top = min(max(top, 1.0), cap)
    if top <= 1.0:
        top = 2.0
    return np.geomspace(1.0, top, points)


def rho_curve(r: np.ndarray, column: int, tau: np.ndarray) -> np.ndarray:
    """Fraction of starts with ``r[s, column] <= tau`` for each ``tau``."""
    tau = np.asarray(tau, dtype=float)
    if tau.size and (tau.min() < 1.0 or np.any(np.diff(tau) < 0)):
        raise ValueError("tau grid must be nondecreasing and start at or above 1")
    col = np.asarray(r, dtype=float)[:, column]
    if col.size == 0:
        return np.zeros(tau.size)
    return np.array([np.count_nonzero(col <= t) for t in tau], dtype=float) / col.size


def profile_curves(table: ProfileTable, tau: Optional[np.ndarray] = None) -> tuple:
    """``(tau, {method: rho})`` for every method of ``table``."""
    r = ratios(table)
    tau = tau_grid(r) if tau is None else np.asarray(tau, dtype=float)
    return tau, {m: rho_curve(r, j, tau) for j, m in enumerate(table.methods)}


# -- emission ------------------------------------------------------------------


def _fmt(v: float) -> str:
    # repr round-trips exactly through float().
    return repr(float(v))


def write_text(text: str, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_csv(header, rows, path) -> None:
    """RFC 4180 CSV with ``\\n`` line ends, UTF-8."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    write_text(buf.getvalue(), path)


def write_results_csv(rows: Sequence, path) -> None:
    """One line per run, ordered as given."""
    body = [
        (r.method, r.start, _fmt(r.f_value), _fmt(r.max_or_violation), _fmt(r.max_violation), int(r.feasible), r.stages)
        for r in rows
    ]
    write_csv(RESULT_FIELDS, body, path)


def read_results_csv(path) -> list:
    """Inverse of :func:`write_results_csv`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_FIELDS:
            raise ValueError(f"{path}: expected columns {','.join(RESULT_FIELDS)}")
        return [
            ResultRow(
                d["method"],
                int(d["start"]),
                float(d["f_value"]),
                float(d["max_or_violation"]),
                float(d["max_violation"]),
                bool(int(d["feasible"])),
                int(d["stages"]),
            )
            for d in reader
        ]


def write_timings_csv(methods: Sequence, starts: Sequence, times: Sequence, path) -> None:
    """Wall-clock seconds per run; kept apart so the other outputs stay byte-stable."""
    body = [(m, s, f"{t:.6f}") for m, s, t in zip(methods, starts, times)]
    write_csv(("method", "start", "wall_time"), body, path)


def write_profile_csv(tau: np.ndarray, curves: dict, path) -> None:
    """Columns ``tau`` followed by one ``rho`` column per method, in order."""
    names = list(curves)
    body = [[_fmt(t)] + [_fmt(curves[m][i]) for m in names] for i, t in enumerate(tau)]
    write_csv(["tau"] + names, body, path)


def read_profile_csv(path) -> tuple:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    return data[:, 0], {m: data[:, j + 1] for j, m in enumerate(header[1:])}


def svg_profile(tau: np.ndarray, curves: dict, title: str = "") -> str:
    """Static step chart of ``rho(tau)`` on a logarithmic ``tau`` axis."""
    W, H = 640, 420
    left, right, top, bottom = 60, 170, 30, 50
    pw, ph = W - left - right, H - top - bottom
    lo, hi = 0.0, math.log10(float(tau[-1])) if len(tau) else 1.0
    if hi <= lo:
        hi = lo + 1.0

    def px(t):
        return left + pw * (math.log10(t) - lo) / (hi - lo)

    def py(v):
        return top + ph * (1.0 - v)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="{top - 10}" font-family="sans-serif" font-size="14">{_escape(title)}</text>')
    for k in range(6):
        v = k / 5
        out.append(
            f'<text x="{left - 8}" y="{py(v) + 4:.2f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{v:.1f}</text>'
        )
    for e in range(int(math.floor(lo)), int(math.ceil(hi)) + 1):
        if lo <= e <= hi:
            out.append(
                f'<text x="{px(10.0 ** e):.2f}" y="{top + ph + 16}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">1e{e}</text>'
            )
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">tau</text>'
    )
    for j, (name, rho) in enumerate(curves.items()):
        color = _PALETTE[j % len(_PALETTE)]
        pts = []
        for i, t in enumerate(tau):
            if i:
                pts.append(f"{px(t):.2f},{py(rho[i - 1]):.2f}")
            pts.append(f"{px(t):.2f},{py(rho[i]):.2f}")
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = top + 16 + 18 * j
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw + 42}" y="{ly + 4}" font-family="sans-serif" font-size="12">{_escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(tau: np.ndarray, curves: dict, path, title: str = "") -> None:
    write_text(svg_profile(tau, curves, title), path)


def emit(table: ProfileTable, rows: Sequence, out_dir, svg: bool = True, title: str = "") -> dict:
    """Write ``results.csv``, ``profile.csv`` and optionally ``profile.svg`` into ``out_dir``.

    Returns the written paths keyed by kind.
    """
    out_dir = Path(out_dir)
    tau, curves = profile_curves(table)
    paths = {"results": out_dir / "results.csv", "profile": out_dir / "profile.csv"}
    write_results_csv(rows, paths["results"])
    write_profile_csv(tau, curves, paths["profile"])
    if svg:
        paths["svg"] = out_dir / "profile.svg"
        write_svg(tau, curves, paths["svg"], title)
    return paths


__all__ = [
    "ProfileTable",
    "ResultRow",
    "build_table",
    "emit",
    "profile_curves",
    "q_metric",
    "ratios",
    "read_profile_csv",
    "read_results_csv",
    "resolve_f_min",
    "result_row",
    "rho_curve",
    "svg_profile",
    "tau_grid",
    "unsolved_rows",
    "write_csv",
    "write_profile_csv",
    "write_results_csv",
    "write_svg",
    "write_text",
    "write_timings_csv",
]
