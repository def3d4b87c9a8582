"""Smooth surrogate programs built from an or-constrained program.

Five families are provided: the Kanzow-Schwartz NCP reformulation, the
switching and complementarity lifts with their Scholtes relaxations, and
the two direct relaxations by the smoothed Fischer-Burmeister and offset
Kanzow-Schwartz functions.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .analysis import active_pattern
from .model import MpocProblem, SmoothFn, VectorFn
from .ncp import phi_fb_t, phi_fb_t_grad, phi_ks, phi_ks_grad
from .nlp import NlpSpec


def _compose_pair(G: VectorFn, H: VectorFn, phi, dphi, name: str) -> VectorFn:
    """The vector map ``x -> phi(G(x), H(x))`` with its chain-rule Jacobian."""

    def value(x):
        return np.atleast_1d(np.asarray(phi(G.value(x), H.value(x)), dtype=float))

    def jacobian(x):
        da, db = dphi(G.value(x), H.value(x))
        da = np.atleast_1d(np.asarray(da, dtype=float))
        db = np.atleast_1d(np.asarray(db, dtype=float))
        return da[:, None] * G.jacobian(x) + db[:, None] * H.jacobian(x)

    return VectorFn(G.dim, G.size, value, jacobian, tuple(f"{name}[{l}]" for l in range(G.size)))


def ks_constraints(problem: MpocProblem) -> VectorFn:
    """``phi_KS(G_l(x), H_l(x))`` for every or-pair."""
    return _compose_pair(problem.G, problem.H, phi_ks, phi_ks_grad, "ks")


def ncp_reformulate(problem: MpocProblem) -> NlpSpec:
    """Replace each or-pair by ``phi_KS(G_l, H_l) <= 0``; the result is an equivalent smooth NLP."""
    ineq = VectorFn.stack([problem.g, ks_constraints(problem)], problem.n)
    return NlpSpec(problem.n, problem.f, ineq, problem.h, name=f"{problem.name}:ncp-ks")


def direct_relax(problem: MpocProblem, variant: str, t: float) -> NlpSpec:
    """Relax each or-pair to ``phi^t(G_l, H_l) <= 0`` with ``phi^t`` smoothed FB or offset KS."""
    if t < 0:
        raise ValueError("relaxation parameter must be nonnegative")
    if variant == "fb":
        phi = lambda a, b: phi_fb_t(a, b, t)  # noqa: E731
        dphi = lambda a, b: phi_fb_t_grad(a, b, t)  # noqa: E731
    elif variant == "ks":
        phi = lambda a, b: np.asarray(phi_ks(a, b)) - t  # noqa: E731
        dphi = phi_ks_grad
    else:
        raise ValueError(f"unknown variant {variant!r}; expected 'fb' or 'ks'")
    relaxed = _compose_pair(problem.G, problem.H, phi, dphi, f"{variant}_t")
    ineq = VectorFn.stack([problem.g, relaxed], problem.n)
    return NlpSpec(problem.n, problem.f, ineq, problem.h, name=f"{problem.name}:{variant}({t:g})")


# -- lifted programs -----------------------------------------------------------


def _lift_scalar(fn: SmoothFn, n: int, dim: int) -> SmoothFn:
    def gradient(w):
        out = np.zeros(dim)
        out[:n] = fn.gradient(w[:n])
        return out

    return SmoothFn(dim, lambda w: fn.value(w[:n]), gradient, fn.name)


def _lift_vector(fn: VectorFn, n: int, dim: int) -> VectorFn:
    def jacobian(w):
        out = np.zeros((fn.size, dim))
        out[:, :n] = fn.jacobian(w[:n])
        return out

    return VectorFn(dim, fn.size, lambda w: fn.value(w[:n]), jacobian, fn.names)


def _slack_map(n: int, q: int, offset: int, sign: float) -> VectorFn:
    """``w -> sign * w[n + offset : n + offset + q]``."""
    A = np.zeros((q, n + 2 * q))
    A[np.arange(q), n + offset + np.arange(q)] = sign
    return VectorFn.affine(A, np.zeros(q))


def _minus_slack(fn: VectorFn, n: int, q: int, offset: int) -> VectorFn:
    """``w -> fn(x) - w[n + offset : n + offset + q]``."""
    dim = n + 2 * q
    lifted = _lift_vector(fn, n, dim)
    cols = n + offset + np.arange(q)
    rows = np.arange(q)

    def value(w):
        return lifted.value(w) - w[cols]

    def jacobian(w):
        J = lifted.jacobian(w)
        J[rows, cols] -= 1.0
        return J

    return VectorFn(dim, q, value, jacobian)


@dataclass(frozen=True)
class LiftedInstance:
    """A program over ``w = (x, y, z)`` whose pair maps are ``(G, H)``.

    ``g``, ``h``, ``G`` and ``H`` are stated in ``w``. For the switching lift
    the pair constraint reads ``G_l(w) H_l(w) = 0``; for the complementarity
    lift it reads ``0 <= G_l(w) ⊥ H_l(w) >= 0``.
    """

    base: MpocProblem
    kind: str
    n: int
    f: SmoothFn
    g: VectorFn
    h: VectorFn
    G: VectorFn
    H: VectorFn

    @property
    def q(self) -> int:
        return self.base.q

    def split(self, w) -> tuple:
        w = np.asarray(w, dtype=float).reshape(-1)
        n, q = self.base.n, self.base.q
        return w[:n], w[n : n + q], w[n + q :]

    def join(self, x, y, z) -> np.ndarray:
        return np.concatenate([np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)])


class MpscInstance(LiftedInstance):
    pass


class MpccInstance(LiftedInstance):
    pass


def to_mpsc(problem: MpocProblem) -> MpscInstance:
    """Switching lift: ``y, z <= 0`` and ``(G_l(x) - y_l)(H_l(x) - z_l) = 0``.

    ``g`` holds the original inequalities followed by ``y`` and ``z``.
    """
    n, q = problem.n, problem.q
    dim = n + 2 * q
    g = VectorFn.stack(
        [_lift_vector(problem.g, n, dim), _slack_map(n, q, 0, 1.0), _slack_map(n, q, q, 1.0)], dim
    )
    return MpscInstance(
        problem, "SC", dim, _lift_scalar(problem.f, n, dim), g,
        _lift_vector(problem.h, n, dim), _minus_slack(problem.G, n, q, 0), _minus_slack(problem.H, n, q, q),
    )


def to_mpcc(problem: MpocProblem) -> MpccInstance:
    """Complementarity lift: ``G(x) - y <= 0``, ``H(x) - z <= 0`` and ``0 <= y ⊥ z >= 0``.

    ``g`` holds the original inequalities followed by ``G - y`` and ``H - z``;
    the pair maps are the slacks themselves.
    """
    n, q = problem.n, problem.q
    dim = n + 2 * q
    g = VectorFn.stack(
        [_lift_vector(problem.g, n, dim), _minus_slack(problem.G, n, q, 0), _minus_slack(problem.H, n, q, q)],
        dim,
    )
    return MpccInstance(
        problem, "CC", dim, _lift_scalar(problem.f, n, dim), g,
        _lift_vector(problem.h, n, dim), _slack_map(n, q, 0, 1.0), _slack_map(n, q, q, 1.0),
    )


def _product(inst: LiftedInstance, sign: float, t: float) -> VectorFn:
    """``w -> sign * G(w) H(w) - t``."""
    G, H = inst.G, inst.H

    def value(w):
        return sign * G.value(w) * H.value(w) - t

    def jacobian(w):
        return sign * (H.value(w)[:, None] * G.jacobian(w) + G.value(w)[:, None] * H.jacobian(w))

    return VectorFn(inst.n, G.size, value, jacobian)


def scholtes_sc_relax(inst: MpscInstance, t: float) -> NlpSpec:
    """Relax the switching products to ``-t <= G_l H_l <= t``; ``m + 4q`` inequalities."""
    if t < 0:
        raise ValueError("relaxation parameter must be nonnegative")
    ineq = VectorFn.stack([inst.g, _product(inst, 1.0, t), _product(inst, -1.0, t)], inst.n)
    return NlpSpec(inst.n, inst.f, ineq, inst.h, name=f"{inst.base.name}:sc({t:g})")


def scholtes_cc_relax(inst: MpccInstance, t: float) -> NlpSpec:
    """Relax complementarity to ``y_l z_l <= t``, ``y, z >= 0``; ``m + 5q`` inequalities."""
    if t < 0:
        raise ValueError("relaxation parameter must be nonnegative")
    n, q = inst.base.n, inst.base.q
    ineq = VectorFn.stack(
        [inst.g, _product(inst, 1.0, t), _slack_map(n, q, 0, -1.0), _slack_map(n, q, q, -1.0)], inst.n
    )
    return NlpSpec(inst.n, inst.f, ineq, inst.h, name=f"{inst.base.name}:cc({t:g})")


# -- slack values ----------------------------------------------------------------


def cc_slack_lift(problem: MpocProblem, x, eps: float = 1e-6) -> tuple:
    """Slacks ``(y, z)`` making ``(x, y, z)`` feasible for the complementarity lift.

    ``y_l`` is ``1`` on ``I^{0-}``, ``2 G_l(x)`` on ``I^{+-} ∪ I^{+0}`` and zero
    otherwise; ``z_l`` is defined symmetrically.
    """
    pat = active_pattern(problem, x, eps)
    x = problem.check_point(x)
    G, H = problem.G(x), problem.H(x)
    y, z = np.zeros(problem.q), np.zeros(problem.q)
    for l in pat.i0M:
        y[l] = 1.0
    for l in pat.iPM + pat.iP0:
        y[l] = 2.0 * G[l]
    for l in pat.iM0:
        z[l] = 1.0
    for l in pat.iMP + pat.i0P:
        z[l] = 2.0 * H[l]
    return y, z


def sc_start(problem: MpocProblem, x0, shift: float = 1.0) -> np.ndarray:
    """Lifted start ``(x0, G(x0) - shift, H(x0) - shift)`` for the switching lift.

    Both shifted factors ``G - y`` and ``H - z`` start at ``shift``, so neither
    branch of a pair is favoured.
    """
    x0 = problem.check_point(x0)
    return np.concatenate([x0, problem.G(x0) - shift, problem.H(x0) - shift])


def cc_start(problem: MpocProblem, x0, t: float = 0.01) -> np.ndarray:
    """Lifted start ``(x0, sqrt(t), sqrt(t))`` for the complementarity lift.

    The slack pairs sit on the symmetric point of ``y z <= t``, so neither
    branch of a pair is favoured.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x0 = problem.check_point(x0)
    r = np.sqrt(t) * np.ones(problem.q)
    return np.concatenate([x0, r, r])


def relaxed_feasible(spec: NlpSpec, x, tol: float = 0.0) -> bool:
    """Membership of ``x`` in the feasible set of ``spec`` up to ``tol``."""
    x = np.asarray(x, dtype=float)
    c, ce = spec.constraints.value(x), spec.eq.value(x)
    return bool(np.all(c <= tol) and np.all(np.abs(ce) <= tol))


__all__ = [
    "LiftedInstance",
    "MpccInstance",
    "MpscInstance",
    "cc_slack_lift",
    "cc_start",
    "direct_relax",
    "ks_constraints",
    "ncp_reformulate",
    "relaxed_feasible",
    "sc_start",
    "scholtes_cc_relax",
    "scholtes_sc_relax",
    "to_mpcc",
    "to_mpsc",
]
