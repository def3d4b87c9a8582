"""Dense primal-dual interior-point solver for smooth nonlinear programs.

Solves ``min f(x)`` subject to ``c_I(x) <= 0`` and ``c_E(x) = 0``. Inequalities
are turned into ``c_I(x) + s = 0`` with slacks ``s > 0`` and a log barrier.
Only first derivatives are required from the caller; the Hessian of the
Lagrangian is approximated by forward differences of its gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, EvaluationError
from .model import SmoothFn, VectorFn, check_gradients

FRACTION_TO_BOUNDARY = 0.995
BARRIER_FACTOR = 5.0
KAPPA_EPS = 10.0
KAPPA_SIGMA = 1e10
ARMIJO = 1e-4
MIN_STEP = 1e-12
PATTERN_PROBES = 3
# Linear barrier damping; keeps slacks and flat variables from drifting.
KAPPA_D = 1e-2
NU_MIN = 1.0
LM_RETRIES = 3
LM_START = 1e-4
LM_MAX = 1e6


@dataclass(frozen=True)
class NlpSpec:
    """A smooth NLP. Optional bounds are appended to ``ineq`` as extra rows."""

    n: int
    objective: SmoothFn
    ineq: VectorFn
    eq: VectorFn
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        for label, fn in (("objective", self.objective), ("ineq", self.ineq), ("eq", self.eq)):
            if fn.dim != self.n:
                raise DimensionMismatchError(f"{label} has dim {fn.dim}, expected {self.n}")

    @property
    def constraints(self) -> VectorFn:
        """All inequality rows: ``ineq``, then ``lower - x``, then ``x - upper``."""
        blocks = [self.ineq]
        eye = np.eye(self.n)
        if self.lower is not None:
            idx = np.flatnonzero(np.isfinite(self.lower))
            blocks.append(VectorFn.affine(-eye[idx], self.lower[idx]))
        if self.upper is not None:
            idx = np.flatnonzero(np.isfinite(self.upper))
            blocks.append(VectorFn.affine(eye[idx], -self.upper[idx]))
        return VectorFn.stack(blocks, self.n)

    def grad_check(self, probes: int = 20, seed: int = 0):
        return check_gradients(
            [("objective", self.objective), ("ineq", self.ineq), ("eq", self.eq)], self.n, probes, seed
        )


@dataclass
class NlpSolution:
    x: np.ndarray
    lam: np.ndarray
    rho: np.ndarray
    kkt_residual: float
    status: str
    iterations: int
    f_value: float
    slacks: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def kkt_residual(spec: NlpSpec, x, lam, rho) -> float:
    """Sup-norm KKT error of ``(x, lam, rho)`` for ``spec``.

    Maximum of the stationarity error, the constraint violations, the
    complementarity products and the negative parts of ``lam``. ``lam`` covers
    the rows of ``spec.constraints`` (bound rows included).
    """
    x = np.asarray(x, dtype=float)
    cons = spec.constraints
    lam = np.asarray(lam, dtype=float).reshape(cons.size)
    rho = np.asarray(rho, dtype=float).reshape(spec.eq.size)
    c, ce = cons.value(x), spec.eq.value(x)
    stat = spec.objective.gradient(x) + cons.jacobian(x).T @ lam + spec.eq.jacobian(x).T @ rho
    return float(
        max(
            np.max(np.abs(stat), initial=0.0),
            np.max(np.maximum(c, 0.0), initial=0.0),
            np.max(np.abs(ce), initial=0.0),
            np.max(np.abs(lam * c), initial=0.0),
            np.max(np.maximum(-lam, 0.0), initial=0.0),
        )
    )


class _Evaluator:
    """Evaluates and caches problem data at one point."""

    def __init__(self, spec: NlpSpec, cons: VectorFn):
        self.spec = spec
        self.cons = cons
        self._pattern = None
        self._groups = None

    def values(self, x):
        f = float(self.spec.objective.value(x))
        c = np.asarray(self.cons.value(x), dtype=float)
        ce = np.asarray(self.spec.eq.value(x), dtype=float)
        return f, c, ce

    def derivatives(self, x):
        gf = np.asarray(self.spec.objective.gradient(x), dtype=float)
        J = np.asarray(self.cons.jacobian(x), dtype=float).reshape(self.cons.size, x.size)
        Je = np.asarray(self.spec.eq.jacobian(x), dtype=float).reshape(self.spec.eq.size, x.size)
        return gf, J, Je

    def _gradient_fd_pattern(self, x):
        """Nonzero pattern of a forward-difference objective Hessian at ``x``."""
        n = x.size
        g0 = np.asarray(self.spec.objective.gradient(x), dtype=float)
        P = np.zeros((n, n), dtype=bool)
        for i in range(n):
            xp = x.copy()
            xp[i] += 1e-6 * max(1.0, abs(x[i]))
            P[:, i] = np.asarray(self.spec.objective.gradient(xp), dtype=float) != g0
        return P

    def hessian_pattern(self, x):
        """Conservative sparsity pattern of the Lagrangian Hessian.

        A constraint whose Jacobian row moves under a random perturbation counts
        as nonlinear and contributes the square of its row support; the
        objective contributes its observed difference pattern. Everything is
        unioned over ``x`` and a few seeded probe points.
        """
        if self._pattern is not None:
            return self._pattern
        n = x.size
        rng = np.random.default_rng(0)
        points = [x] + [x + rng.uniform(-1.0, 1.0, n) for _ in range(PATTERN_PROBES)]
        P = np.eye(n, dtype=bool)
        m = self.cons.size + self.spec.eq.size
        support = np.zeros((m, n), dtype=bool)
        nonlinear = np.zeros(m, dtype=bool)
        for pt in points:
            _, J, Je = self.derivatives(pt)
            _, J2, Je2 = self.derivatives(pt + 1e-4 * rng.uniform(0.5, 1.0, n))
            A, B = np.vstack([J, Je]), np.vstack([J2, Je2])
            if _finite(A, B):
                support |= (A != 0.0) | (B != 0.0)
                nonlinear |= np.any(A != B, axis=1)
            Pf = self._gradient_fd_pattern(pt)
            P |= Pf | Pf.T
        rows = support & nonlinear[:, None]
        R = rows.astype(float)
        P |= (R.T @ R) > 0.0
        self._pattern = P
        # Greedy column colouring: columns sharing a colour never meet in a row.
        conflict = (P.astype(float) @ P.astype(float)) > 0.0
        colour = -np.ones(n, dtype=int)
        for j in range(n):
            used = set(colour[conflict[j] & (colour >= 0)])
            k = 0
            while k in used:
                k += 1
            colour[j] = k
        self._groups = [np.flatnonzero(colour == k) for k in range(colour.max() + 1)]
        return P

    def lagrangian_hessian(self, x, gf, J, Je, lam, rho):
        """Forward-difference Hessian of the Lagrangian from gradients only.

        Columns are grouped by a colouring of the sparsity pattern so that one
        gradient evaluation recovers several columns at once.
        """
        n = x.size
        P = self.hessian_pattern(x)
        base = gf + J.T @ lam + Je.T @ rho
        W = np.zeros((n, n))
        for group in self._groups:
            h = 1.5e-8 * np.maximum(1.0, np.abs(x[group]))
            xp = x.copy()
            xp[group] += h
            h = xp[group] - x[group]
            g2, J2, Je2 = self.derivatives(xp)
            diff = g2 + J2.T @ lam + Je2.T @ rho - base
            for j, hj in zip(group, h):
                rows = P[:, j]
                W[rows, j] = diff[rows] / hj
        W = 0.5 * (W + W.T)
        if not np.all(np.isfinite(W)):
            raise EvaluationError("Hessian approximation", x)
        return W


def _finite(*arrays) -> bool:
    return all(np.all(np.isfinite(a)) for a in arrays)


def _max_step(v, dv, tau):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-tau * v[neg] / dv[neg])))


class _KktSystem:
    """Symmetric quasi-definite primal-dual matrix ``[[W + dw I, A^T], [A, -D]]``.

    ``A`` stacks the inequality and equality Jacobians and ``D`` holds
    ``s / z`` for inequalities and ``dc`` for equalities. The factorization is
    a dense Bunch-Kaufman ``LDL^T``; :meth:`factor` reports whether the
    inertia is the one a descent direction needs.
    """

    def __init__(self, W, J, Je, sigma_inv):
        self.n = W.shape[0]
        self.W, self.J, self.Je, self.sigma_inv = W, J, Je, sigma_inv

    def factor(self, delta_w: float, delta_c: float) -> str:
        n, mI, mE = self.n, self.J.shape[0], self.Je.shape[0]
        K = np.zeros((n + mI + mE, n + mI + mE))
        K[:n, :n] = self.W + delta_w * np.eye(n)
        K[n : n + mI, :n] = self.J
        K[n + mI :, :n] = self.Je
        K[:n, n:] = K[n:, :n].T
        K[np.arange(n, n + mI), np.arange(n, n + mI)] = -self.sigma_inv
        K[np.arange(n + mI, n + mI + mE), np.arange(n + mI, n + mI + mE)] = -delta_c
        if not np.all(np.isfinite(K)):
            return "singular"
        lu, d, perm = scipy.linalg.ldl(K, lower=True, check_finite=False)
        pos, neg, zero = _inertia(d)
        if zero:
            return "singular"
        if pos != n:
            return "wrong-inertia"
        self.factors = (lu[perm], d, perm)
        return "ok"

    def solve(self, rhs_x, rhs_i, rhs_e):
        Lp, d, perm = self.factors
        b = np.concatenate([rhs_x, rhs_i, rhs_e])
        v = scipy.linalg.solve_triangular(Lp, b[perm], lower=True, unit_diagonal=True, check_finite=False)
        u = _block_solve(d, v)
        sol = np.empty_like(b)
        sol[perm] = scipy.linalg.solve_triangular(Lp.T, u, lower=False, unit_diagonal=True, check_finite=False)
        n, mI = self.n, self.J.shape[0]
        return sol[:n], sol[n : n + mI], sol[n + mI :]


def _blocks(d):
    """Yield the ``(start, size)`` of each 1x1 or 2x2 block of ``D``."""
    N = d.shape[0]
    i = 0
    while i < N:
        size = 2 if i + 1 < N and d[i + 1, i] != 0.0 else 1
        yield i, size
        i += size


def _block_solve(d, v):
    u = np.empty_like(v)
    for i, size in _blocks(d):
        if size == 1:
            u[i] = v[i] / d[i, i]
        else:
            u[i : i + 2] = np.linalg.solve(d[i : i + 2, i : i + 2], v[i : i + 2])
    return u


def _inertia(d) -> tuple:
    """Counts of positive, negative and zero eigenvalues of a block-diagonal ``D``."""
    pos = neg = zero = 0
    for i, size in _blocks(d):
        if size == 2:
            ev = np.linalg.eigvalsh(d[i : i + 2, i : i + 2])
        else:
            ev = (d[i, i],)
        for e in ev:
            if e == 0.0:
                zero += 1
            elif e > 0:
                pos += 1
            else:
                neg += 1
    return pos, neg, zero


def solve_nlp(spec: NlpSpec, start, tol: float = 1e-6, max_iter: int = 500) -> NlpSolution:
    """Find an approximate KKT point of ``spec`` starting from ``start``.

    Parameters
    ----------
    spec : NlpSpec
        Problem data.
    start : array_like, shape (n,)
        Initial primal point; need not be feasible.
    tol : float
        Required sup-norm KKT residual, see :func:`kkt_residual`.
    max_iter : int
        Iteration budget.

    Returns
    -------
    NlpSolution
        ``status`` is one of ``converged``, ``iteration-limit``,
        ``line-search-failure`` or ``diverged``.

    Raises
    ------
    EvaluationError
        If a problem function is non-finite at the start point or in the
        Hessian approximation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.array(start, dtype=float).reshape(-1)
    if x.size != spec.n:
        raise DimensionMismatchError(f"start has dimension {x.size}, expected {spec.n}")
    cons = spec.constraints
    ev = _Evaluator(spec, cons)
    mI, mE = cons.size, spec.eq.size

    f, c, ce = ev.values(x)
    if not _finite(f, c, ce):
        raise EvaluationError("problem functions at the start point", x.copy())
    gf, J, Je = ev.derivatives(x)
    if not _finite(gf, J, Je):
        raise EvaluationError("derivatives at the start point", x.copy())

    s = np.maximum(-c, 1.0)
    z = np.ones(mI)
    rho = np.zeros(mE)
    mu_min = tol / 10.0
    mu = max(0.1 * float(np.mean(s * z)) if mI else mu_min, mu_min)
    lam = z - KAPPA_D * mu
    nu = 1.0
    delta_lm = 0.0
    delta_w_last = 0.0
    status = "iteration-limit"
    it = 0

    def merit(fv, cv, cev, sv, mu_, nu_):
        return fv - mu_ * np.sum(np.log(sv)) + KAPPA_D * mu_ * np.sum(sv) + nu_ * (np.sum(np.abs(cv + sv)) + np.sum(np.abs(cev)))

    for it in range(max_iter + 1):
        lam = z - KAPPA_D * mu
        grad_lag = gf + J.T @ lam + Je.T @ rho
        # Original-problem residual decides convergence.
        res = max(
            np.max(np.abs(grad_lag), initial=0.0),
            np.max(np.maximum(c, 0.0), initial=0.0),
            np.max(np.abs(ce), initial=0.0),
            np.max(np.abs(lam * c), initial=0.0),
        )
        if res <= tol:
            status = "converged"
            break
        if it == max_iter:
            break
        if np.max(np.abs(x)) > 1e20:
            status = "diverged"
            break

        def barrier_error(mu_):
            return max(
                np.max(np.abs(grad_lag - KAPPA_D * (mu_ - mu) * np.sum(J, axis=0)), initial=0.0),
                np.max(np.abs(c + s), initial=0.0),
                np.max(np.abs(ce), initial=0.0),
                np.max(np.abs(s * z - mu_), initial=0.0),
            )

        mu_old = mu
        while mu > mu_min and barrier_error(mu) <= KAPPA_EPS * mu:
            mu = max(mu_min, mu / BARRIER_FACTOR)
        if mu != mu_old:
            lam = z - KAPPA_D * mu
            grad_lag = gf + J.T @ lam + Je.T @ rho

        W = ev.lagrangian_hessian(x, gf, J, Je, lam, rho)
        sigma = z / s
        kkt = _KktSystem(W, J, Je, s / z)
        r_p = c + s
        infeas = float(np.sum(np.abs(r_p)) + np.sum(np.abs(ce)))
        factored = {}

        def factorize(delta_min):
            # Inertia correction: raise delta_w until W + delta_w I is positive
            # definite on the null space of the active linearization.
            delta_w, delta_c = delta_min, 0.0
            while True:
                state = kkt.factor(delta_w, delta_c)
                if state == "ok":
                    return delta_w
                if state == "singular" and mE and delta_c == 0.0:
                    delta_c = 1e-8 * max(mu, 1e-8) ** 0.25
                    continue
                delta_w = max(1e-8, delta_w_last / 3.0) if delta_w == 0.0 else 10.0 * delta_w
                if delta_w > 1e20:
                    raise EvaluationError("regularized KKT system", x.copy())

        def step(r_i, r_e):
            dx, dlam_, drho = kkt.solve(-grad_lag, -r_i - (mu / s - z) / sigma, -r_e)
            return dx, drho, -r_i - J @ dx, dlam_

        def direction(delta_min):
            delta_w = factorize(delta_min)
            dx, drho, ds, dlam_ = step(r_p, ce)
            factored["dlam"] = dlam_
            return dx, drho, ds, delta_w

        def merit_model(dx, ds, delta_w, nu_):
            grad_phi = float(gf @ dx - mu * np.sum(ds / s) + KAPPA_D * mu * np.sum(ds))
            if infeas > 0.0:
                Jdx = J @ dx
                curv = float(dx @ W @ dx + delta_w * dx @ dx + Jdx @ (sigma * Jdx))
                need = (grad_phi + 0.5 * max(curv, 0.0)) / (0.9 * infeas)
                nu_ = max(NU_MIN, need + 1.0)
            return nu_, grad_phi - nu_ * infeas

        def trial(dx, ds, alpha, nu_):
            xt, st = x + alpha * dx, s + alpha * ds
            ft, ct, cet = ev.values(xt)
            if not _finite(ft, ct, cet):
                return None
            return xt, st, ft, ct, cet, merit(ft, ct, cet, st, mu, nu_)

        def acceptable(phit, phi0, D, a):
            return phit <= phi0 + ARMIJO * a * min(D, 0.0) or (D >= 0 and phit <= phi0)

        def second_order(tr, a, phi0, D, delta_w, nu_):
            # Re-aim the step at the constraint values seen at the rejected trial.
            _, st, _, ct, cet, _ = tr
            dxc, drc, dsc, dlc = step(a * r_p + (ct + st), a * ce + cet)
            tc = trial(dxc, dsc, _max_step(s, dsc, FRACTION_TO_BOUNDARY), nu_)
            if tc is None or not acceptable(tc[5], phi0, D, a):
                return None
            factored["dlam"] = dlc
            return tc, drc

        # Full steps first; a rejected full step raises the primal regularization
        # (shrinking the step like a trust region) before falling back to backtracking.
        delta_min = delta_lm
        accepted = None
        for attempt in range(LM_RETRIES + 1):
            dx, drho, ds, delta_w = direction(delta_min)
            nu_try, D = merit_model(dx, ds, delta_w, nu)
            phi0 = merit(f, c, ce, s, mu, nu_try)
            alpha_max = _max_step(s, ds, FRACTION_TO_BOUNDARY)
            tr = trial(dx, ds, alpha_max, nu_try)
            if tr is not None and acceptable(tr[5], phi0, D, alpha_max):
                accepted, alpha = tr, alpha_max
                break
            if tr is not None:
                soc = second_order(tr, alpha_max, phi0, D, delta_w, nu_try)
                if soc is not None:
                    (accepted, drho), alpha = soc, alpha_max
                    break
            if attempt == LM_RETRIES:
                break
            if delta_w >= LM_MAX:
                break
            delta_min = max(LM_START, 10.0 * delta_w)
        nu = nu_try
        if accepted is None:
            alpha = alpha_max * 0.5
            while alpha >= MIN_STEP:
                tr = trial(dx, ds, alpha, nu)
                if tr is not None and acceptable(tr[5], phi0, D, alpha):
                    accepted = tr
                    break
                alpha *= 0.5
        if accepted is None:
            status = "line-search-failure"
            break
        xt, st, ft, ct, cet, _ = accepted
        if alpha >= alpha_max and delta_min == delta_lm:
            delta_lm = 0.0 if delta_lm <= LM_START else delta_lm / 10.0
        else:
            delta_lm = min(delta_min, LM_MAX)
        delta_w_last = delta_w
        dlam = factored["dlam"]
        alpha_dual = _max_step(z, dlam, FRACTION_TO_BOUNDARY)

        x, f, c, ce = xt, ft, ct, cet
        s = np.maximum(st, -c)
        s = np.maximum(s, 1e-300)
        z = np.clip(z + alpha_dual * dlam, mu / (KAPPA_SIGMA * s), KAPPA_SIGMA * mu / s)
        rho = rho + alpha * drho
        gf, J, Je = ev.derivatives(x)
        if not _finite(gf, J, Je):
            raise EvaluationError("derivatives", x.copy())

    res = kkt_residual(spec, x, lam, rho)
    if status == "converged" and res > tol:
        status = "iteration-limit"
    return NlpSolution(x, lam, rho, res, status, it, f, s)
