"""Active patterns, constraint qualifications and stationarity certificates.

Multipliers are recovered by nonnegative least squares: the stationarity
equation is a linear system in the multipliers, sign restrictions become
nonnegativity of selected coefficients, and product restrictions on
biactive indices are handled by enumerating branches.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BiactiveOverflowError, DimensionMismatchError, InfeasiblePointError
from .model import MpocProblem, feasibility

DEFAULT_EPS_ACT = 1e-6
MAX_BIACTIVE = 20


# -- NNLS kernel -------------------------------------------------------------


def _lawson_hanson(A: np.ndarray, b: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """Solve ``min ||A x - b||`` subject to ``x >= 0`` by the Lawson-Hanson method."""
    m, k = A.shape
    x = np.zeros(k)
    if k == 0:
        return x
    passive = np.zeros(k, dtype=bool)
    scale = max(1.0, float(np.abs(A).max(initial=0.0)) * max(1.0, float(np.abs(b).max(initial=0.0))))
    tol = 10.0 * np.finfo(float).eps * scale * max(m, k)
    max_iter = max_iter or 3 * k + 30
    w = A.T @ (b - A @ x)
    for _ in range(max_iter):
        candidates = ~passive & (w > tol)
        if not np.any(candidates):
            break
        # np.argmax picks the lowest index among ties.
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        while True:
            idx = np.flatnonzero(passive)
            z = np.zeros(k)
            z[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if np.all(z[idx] > 0):
                x = z
                break
            neg = idx[z[idx] <= 0]
            steps = x[neg] / (x[neg] - z[neg])
            alpha = float(np.min(steps))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
        w = A.T @ (b - A @ x)
    return x


def nnls_residual(columns_nonneg, columns_free, target) -> tuple:
    """Minimize ``||target + V alpha + W beta||`` over ``alpha >= 0`` and free ``beta``.

    Parameters
    ----------
    columns_nonneg : array_like, shape (n, k)
        Columns ``v_i`` whose coefficients must be nonnegative.
    columns_free : array_like, shape (n, r)
        Columns ``w_j`` with unrestricted coefficients.
    target : array_like, shape (n,)

    Returns
    -------
    coeffs : tuple of ndarray
        ``(alpha, beta)``.
    residual : float
        The attained Euclidean norm.
    """
    t = np.asarray(target, dtype=float).reshape(-1)
    n = t.size
    V = np.asarray(columns_nonneg, dtype=float).reshape(n, -1)
    W = np.asarray(columns_free, dtype=float).reshape(n, -1)
    if W.shape[1]:
        U, s, _ = np.linalg.svd(W, full_matrices=False)
        rank = int(np.sum(s > s.max(initial=0.0) * max(W.shape) * np.finfo(float).eps))
        Q = U[:, :rank]

        def project(M):
            return M - Q @ (Q.T @ M)

    else:

        def project(M):
            return M

    alpha = _lawson_hanson(project(V), -project(t))
    rest = t + V @ alpha
    if W.shape[1]:
        beta = np.linalg.lstsq(W, -rest, rcond=None)[0]
        rest = rest + W @ beta
    else:
        beta = np.zeros(0)
    return (alpha, beta), float(np.linalg.norm(rest))


# -- active patterns -----------------------------------------------------------


@dataclass(frozen=True)
class OrActivePattern:
    """Partition of the or-pairs by the signs of ``(G_l, H_l)``; indices are 0-based."""

    iM0: tuple
    i0M: tuple
    iMP: tuple
    iPM: tuple
    i0P: tuple
    iP0: tuple
    iMM: tuple
    i00: tuple
    active_g: tuple
    tol: float

    @property
    def I(self) -> tuple:
        return tuple(sorted(self.i0P + self.iP0 + self.i00))

    def label(self, l: int) -> str:
        for name in ("iM0", "i0M", "iMP", "iPM", "i0P", "iP0", "iMM", "i00"):
            if l in getattr(self, name):
                return name
        raise IndexError(l)


def _sign(v: float, eps: float) -> int:
    if abs(v) <= eps:
        return 0
    return 1 if v > 0 else -1


_PATTERN_NAMES = {
    (-1, 0): "iM0", (0, -1): "i0M", (-1, 1): "iMP", (1, -1): "iPM",
    (0, 1): "i0P", (1, 0): "iP0", (-1, -1): "iMM", (0, 0): "i00",
}


def _require_feasible(problem: MpocProblem, x, eps: float):
    rep = feasibility(problem, x)
    if not rep.feasible(eps):
        raise InfeasiblePointError(rep.max_violation, eps)


def active_pattern(problem: MpocProblem, x, eps: float = DEFAULT_EPS_ACT) -> OrActivePattern:
    """Classify every or-pair at a feasible ``x``; values within ``eps`` of zero count as zero."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = problem.check_point(x)
    _require_feasible(problem, x, eps)
    G, H = problem.G(x), problem.H(x)
    sets = {name: [] for name in _PATTERN_NAMES.values()}
    for l in range(problem.q):
        sets[_PATTERN_NAMES[(_sign(G[l], eps), _sign(H[l], eps))]].append(l)
    active_g = tuple(int(i) for i in np.flatnonzero(np.abs(problem.g(x)) <= eps))
    return OrActivePattern(**{k: tuple(v) for k, v in sets.items()}, active_g=active_g, tol=eps)


# -- certificates --------------------------------------------------------------


class Stationarity(str, enum.Enum):
    W = "W"
    C = "C"
    M = "M"
    S = "S"


@dataclass
class StationarityCertificate:
    """Outcome of a stationarity test.

    ``lam``, ``rho``, ``mu`` and ``nu`` are full-length vectors with zeros
    outside the relevant active sets. For MPCC problems ``mu`` and ``nu`` carry
    the complementarity sign convention (they enter with a minus sign).
    ``branch`` maps each biactive index to the decision taken for it.
    """

    problem_class: str
    claimed_class: str
    lam: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    residual_norm: float
    eps_stat: float
    branch: Optional[dict] = None
    holds: bool = False

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"


def _default_eps_stat(grad_f: np.ndarray) -> float:
    return 1e-6 * max(1.0, float(np.linalg.norm(grad_f)))


@dataclass
class _System:
    """Stationarity data ``grad_f + sum c_k * col_k = 0`` with coefficient slots."""

    grad_f: np.ndarray
    nonneg: list = field(default_factory=list)  # (column, slot)
    free: list = field(default_factory=list)

    def solve(self):
        n = self.grad_f.size
        V = np.array([c for c, _ in self.nonneg], dtype=float).reshape(-1, n).T
        W = np.array([c for c, _ in self.free], dtype=float).reshape(-1, n).T
        (alpha, beta), res = nnls_residual(V, W, self.grad_f)
        values = [(slot, a) for (_, slot), a in zip(self.nonneg, alpha)]
        values += [(slot, b) for (_, slot), b in zip(self.free, beta)]
        return values, res


def _best_over_branches(build, choices_per_index, biactive):
    """Solve ``build(branch)`` for every branch and keep the smallest residual."""
    if len(biactive) > MAX_BIACTIVE:
        raise BiactiveOverflowError(
            f"{len(biactive)} biactive indices exceed the enumeration cap {MAX_BIACTIVE}"
        )
    best = None
    for combo in itertools.product(choices_per_index, repeat=len(biactive)):
        branch = dict(zip(biactive, combo))
        values, res = build(branch).solve()
        if best is None or res < best[2]:
            best = (values, branch, res)
    return best


def _unpack(values, m, p, q, sign=1.0):
    lam, rho, mu, nu = np.zeros(m), np.zeros(p), np.zeros(q), np.zeros(q)
    target = {"lam": lam, "rho": rho, "mu": mu, "nu": nu}
    for (kind, idx, s), v in values:
        target[kind][idx] += s * v
    return lam, rho, mu, nu


def certify_mpoc(
    problem: MpocProblem,
    x,
    cls: str,
    eps_act: float = DEFAULT_EPS_ACT,
    eps_stat: Optional[float] = None,
) -> StationarityCertificate:
    """Test W-, M- or S-stationarity of a feasible point of an or-constrained program.

    W uses nonnegative multipliers on the active ``g``, on ``G_l`` for
    ``I^{0+} ∪ I^{00}`` and on ``H_l`` for ``I^{+0} ∪ I^{00}``; S drops the
    biactive columns; M enumerates which of the two biactive columns to drop.
    """
    cls = Stationarity(cls)
    if cls is Stationarity.C:
        raise ValueError("C-stationarity is only defined for complementarity problems")
    x = problem.check_point(x)
    pat = active_pattern(problem, x, eps_act)
    gf = np.asarray(problem.f.gradient(x), dtype=float)
    eps_stat = _default_eps_stat(gf) if eps_stat is None else eps_stat
    Jg, Jh = problem.g.jacobian(x), problem.h.jacobian(x)
    JG, JH = problem.G.jacobian(x), problem.H.jacobian(x)

    def build(branch):
        sys = _System(gf)
        sys.nonneg += [(Jg[i], ("lam", i, 1.0)) for i in pat.active_g]
        sys.free += [(Jh[j], ("rho", j, 1.0)) for j in range(problem.p)]
        sys.nonneg += [(JG[l], ("mu", l, 1.0)) for l in pat.i0P]
        sys.nonneg += [(JH[l], ("nu", l, 1.0)) for l in pat.iP0]
        for l in pat.i00:
            choice = branch.get(l, "both")
            if choice in ("both", "G"):
                sys.nonneg.append((JG[l], ("mu", l, 1.0)))
            if choice in ("both", "H"):
                sys.nonneg.append((JH[l], ("nu", l, 1.0)))
        return sys

    biactive = list(pat.i00)
    if cls is Stationarity.W:
        best = _best_over_branches(build, ["both"], [])
    elif cls is Stationarity.S:
        best = _best_over_branches(build, ["none"], biactive)
    else:
        best = _best_over_branches(build, ["G", "H"], biactive)
    values, branch, res = best
    lam, rho, mu, nu = _unpack(values, problem.m, problem.p, problem.q)
    ok = res <= eps_stat and _mpoc_side_conditions(cls, pat, lam, mu, nu)
    return StationarityCertificate(
        "MPOC", cls.value, lam, rho, mu, nu, res, eps_stat, branch or None, ok
    )


def _mpoc_side_conditions(cls, pat, lam, mu, nu) -> bool:
    if np.any(lam < 0) or np.any(mu < 0) or np.any(nu < 0):
        return False
    if cls is Stationarity.M:
        return all(mu[l] * nu[l] == 0.0 for l in pat.i00)
    if cls is Stationarity.S:
        return all(mu[l] == 0.0 and nu[l] == 0.0 for l in pat.i00)
    return True


# -- lifted switching / complementarity instances ------------------------------


def _pair_sets(Gv, Hv, eps):
    """Return index lists ``(G-only zero, H-only zero, both zero)``."""
    g0 = np.abs(Gv) <= eps
    h0 = np.abs(Hv) <= eps
    return (
        [int(l) for l in np.flatnonzero(g0 & ~h0)],
        [int(l) for l in np.flatnonzero(~g0 & h0)],
        [int(l) for l in np.flatnonzero(g0 & h0)],
    )


def _check_pairs_feasible(inst, w, eps, kind):
    g, h = inst.g(w), inst.h(w)
    Gv, Hv = inst.G(w), inst.H(w)
    viol = [np.maximum(g, 0.0), np.abs(h)]
    if kind == "SC":
        viol.append(np.minimum(np.abs(Gv), np.abs(Hv)))
    else:
        viol += [np.maximum(-Gv, 0.0), np.maximum(-Hv, 0.0), np.minimum(np.abs(Gv), np.abs(Hv))]
    worst = max((float(v.max()) for v in viol if v.size), default=0.0)
    if worst > eps:
        raise InfeasiblePointError(worst, eps)


def _pairs_certificate(inst, w, cls, eps_act, eps_stat, kind):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != inst.n:
        raise DimensionMismatchError(f"point has dimension {w.size}, expected {inst.n}")
    _check_pairs_feasible(inst, w, eps_act, kind)
    gf = np.asarray(inst.f.gradient(w), dtype=float)
    eps_stat = _default_eps_stat(gf) if eps_stat is None else eps_stat
    m, p, q = inst.g.size, inst.h.size, inst.G.size
    active_g = np.flatnonzero(np.abs(inst.g(w)) <= eps_act)
    Jg, Jh = inst.g.jacobian(w), inst.h.jacobian(w)
    JG, JH = inst.G.jacobian(w), inst.H.jacobian(w)
    iG, iH, iGH = _pair_sets(inst.G(w), inst.H(w), eps_act)
    # CC multipliers enter with a minus sign: column -grad for a slot value +1.
    sgn = 1.0 if kind == "SC" else -1.0

    def build(branch):
        sys = _System(gf)
        sys.nonneg += [(Jg[i], ("lam", int(i), 1.0)) for i in active_g]
        sys.free += [(Jh[j], ("rho", j, 1.0)) for j in range(p)]
        sys.free += [(sgn * JG[l], ("mu", l, 1.0)) for l in iG]
        sys.free += [(sgn * JH[l], ("nu", l, 1.0)) for l in iH]
        for l in iGH:
            choice = branch.get(l, "free")
            if choice == "free":
                sys.free += [(sgn * JG[l], ("mu", l, 1.0)), (sgn * JH[l], ("nu", l, 1.0))]
            elif choice == "G":
                sys.free.append((sgn * JG[l], ("mu", l, 1.0)))
            elif choice == "H":
                sys.free.append((sgn * JH[l], ("nu", l, 1.0)))
            elif choice == "pos":
                sys.nonneg += [(sgn * JG[l], ("mu", l, 1.0)), (sgn * JH[l], ("nu", l, 1.0))]
            elif choice == "neg":
                sys.nonneg += [(-sgn * JG[l], ("mu", l, -1.0)), (-sgn * JH[l], ("nu", l, -1.0))]
        return sys

    cls = Stationarity(cls)
    if kind == "SC":
        choices = {
            Stationarity.W: ["free"],
            Stationarity.M: ["G", "H"],
            Stationarity.S: ["none"],
        }.get(cls)
        if choices is None:
            raise ValueError("C-stationarity is only defined for complementarity problems")
    else:
        choices = {
            Stationarity.W: ["free"],
            Stationarity.C: ["pos", "neg"],
            Stationarity.M: ["G", "H", "pos"],
            Stationarity.S: ["pos"],
        }[cls]
    values, branch, res = _best_over_branches(build, choices, iGH)
    lam, rho, mu, nu = _unpack(values, m, p, q)
    ok = res <= eps_stat and bool(np.all(lam >= 0)) and _pair_side_conditions(kind, cls, iGH, mu, nu)
    return StationarityCertificate(
        "MPSC" if kind == "SC" else "MPCC", cls.value, lam, rho, mu, nu, res, eps_stat, branch or None, ok
    )


def _pair_side_conditions(kind, cls, iGH, mu, nu) -> bool:
    for l in iGH:
        a, b = mu[l], nu[l]
        if cls is Stationarity.S and kind == "SC" and not (a == 0.0 and b == 0.0):
            return False
        if cls is Stationarity.S and kind == "CC" and not (a >= 0 and b >= 0):
            return False
        if cls is Stationarity.M and kind == "SC" and a * b != 0.0:
            return False
        if cls is Stationarity.M and kind == "CC" and not (a * b == 0.0 or (a > 0 and b > 0)):
            return False
        if cls is Stationarity.C and not a * b >= 0:
            return False
    return True


def certify_mpsc(inst, w, cls: str, eps_act: float = DEFAULT_EPS_ACT, eps_stat: Optional[float] = None):
    """Test W/M/S stationarity of a switching-constrained instance.

    ``inst`` exposes ``n``, ``f``, ``g``, ``h`` and the pair maps ``G``, ``H``
    with ``G_l(w) H_l(w) = 0``. Multipliers on the pairs are free.
    """
    return _pairs_certificate(inst, w, cls, eps_act, eps_stat, "SC")


def certify_mpcc(inst, w, cls: str, eps_act: float = DEFAULT_EPS_ACT, eps_stat: Optional[float] = None):
    """Test W/C/M/S stationarity of a complementarity-constrained instance.

    ``inst`` exposes ``n``, ``f``, ``g``, ``h`` and ``G``, ``H`` with
    ``0 <= G_l(w)``, ``0 <= H_l(w)`` and ``G_l(w) H_l(w) = 0``.
    """
    return _pairs_certificate(inst, w, cls, eps_act, eps_stat, "CC")


# -- constraint qualifications ---------------------------------------------------


@dataclass
class CqReport:
    mpoc_licq: bool
    mpoc_mfcq: bool
    smallest_singular_value: float
    pld_witness: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mpoc_licq and not self.mpoc_mfcq:
            raise AssertionError("LICQ holds but MFCQ fails")


def _cq_family(problem: MpocProblem, x, eps_act):
    x = problem.check_point(x)
    pat = active_pattern(problem, x, eps_act)
    Jg, JG, JH = problem.g.jacobian(x), problem.G.jacobian(x), problem.H.jacobian(x)
    nonneg = [Jg[i] for i in pat.active_g]
    nonneg += [JG[l] for l in sorted(pat.i0P + pat.i00)]
    nonneg += [JH[l] for l in sorted(pat.iP0 + pat.i00)]
    n = problem.n
    V = np.array(nonneg, dtype=float).reshape(-1, n).T
    W = np.asarray(problem.h.jacobian(x), dtype=float).reshape(-1, n).T
    return V, W


def _licq(V, W):
    A = np.hstack([V, W])
    if A.shape[1] == 0:
        return True, float("inf")
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[1] > A.shape[0]:
        return False, 0.0
    return bool(s.min() > 1e-8 * s.max()), float(s.min())


def positive_linear_dependence(V: np.ndarray, W: np.ndarray, tol: float = 1e-8) -> Optional[np.ndarray]:
    """A nonzero ``(alpha >= 0, beta)`` with ``V alpha + W beta = 0``, or ``None``.

    Each nonnegative coefficient is in turn fixed to one and the rest are
    fitted by :func:`nnls_residual`; a vanishing residual exposes a dependence.
    The free block alone is tested by its rank. Witnesses are scaled to
    sup-norm one.
    """
    k, r = V.shape[1], W.shape[1]
    scale = max(1.0, float(np.abs(np.hstack([V, W])).max(initial=0.0)))
    if r:
        _, s, vt = np.linalg.svd(W, full_matrices=True)
        rank = int(np.sum(s > 1e-8 * max(s.max(initial=0.0), 1e-300)))
        if rank < r:
            beta = vt[-1]
            out = np.concatenate([np.zeros(k), beta])
            return out / np.abs(out).max()
    for i in range(k):
        others = np.delete(V, i, axis=1)
        (alpha, beta), res = nnls_residual(others, W, V[:, i])
        if res <= tol * scale:
            coeffs = np.concatenate([np.insert(alpha, i, 1.0), beta])
            if np.abs(coeffs).max() >= 1e-8:
                return coeffs / np.abs(coeffs).max()
    return None


def check_cq(problem: MpocProblem, x, eps_act: float = DEFAULT_EPS_ACT) -> CqReport:
    """MPOC-LICQ and MPOC-MFCQ at a feasible point."""
    V, W = _cq_family(problem, x, eps_act)
    licq, smin = _licq(V, W)
    witness = None if licq else positive_linear_dependence(V, W)
    return CqReport(licq, witness is None, smin, witness)


def check_mpoc_licq(problem: MpocProblem, x, eps_act: float = DEFAULT_EPS_ACT) -> CqReport:
    return check_cq(problem, x, eps_act)


def check_mpoc_mfcq(problem: MpocProblem, x, eps_act: float = DEFAULT_EPS_ACT) -> CqReport:
    return check_cq(problem, x, eps_act)
