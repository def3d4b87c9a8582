"""NCP functions used to encode or-constraints, plus their smoothed variants.

All scalar functions accept floats or numpy arrays and broadcast elementwise.
Gradient helpers return the pair of partial derivatives ``(d/da, d/db)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InconsistentSignsError, PointNotInComplementaritySetError

#: Absolute tolerance for membership in the complementarity set and for sign tests.
SIGN_TOL = 1e-12


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def phi_min(a, b):
    """Minimum function ``min(a, b)``."""
    return _out(np.minimum(a, b))


def phi_fb(a, b):
    """Fischer-Burmeister function ``a + b - sqrt(a^2 + b^2)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(a + b - np.hypot(a, b))


def phi_ks(a, b):
    """Kanzow-Schwartz function: ``ab`` on ``a + b >= 0``, else ``-(a^2 + b^2)/2``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(np.where(a + b >= 0.0, a * b, -0.5 * (a * a + b * b)))


def phi_fb_t(a, b, t):
    """Smoothed Fischer-Burmeister function ``a + b - sqrt(a^2 + b^2 + 2t)``."""
    if t < 0:
        raise ValueError("smoothing parameter must be nonnegative")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _out(a + b - np.sqrt(a * a + b * b + 2.0 * t))


def phi_ks_t(a, b, t):
    """Offset Kanzow-Schwartz function ``phi_ks(a, b) - t``."""
    if t < 0:
        raise ValueError("offset must be nonnegative")
    return _out(np.asarray(phi_ks(a, b)) - t)


# -- gradients ---------------------------------------------------------------


def phi_min_grad(a, b):
    """Gradient of ``phi_min``; ``None`` on the diagonal ``a == b`` (scalars only)."""
    if a == b:
        return None
    return (1.0, 0.0) if a < b else (0.0, 1.0)


def phi_fb_grad(a, b):
    """Gradient of ``phi_fb``; ``None`` at the origin (scalars only)."""
    r = math.hypot(a, b)
    if r == 0.0:
        return None
    return (1.0 - a / r, 1.0 - b / r)


def phi_ks_grad(a, b):
    """Gradient of ``phi_ks``, continuous across the seam ``a + b = 0``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = a + b >= 0.0
    da = np.where(upper, b, -a)
    db = np.where(upper, a, -b)
    return _out(da), _out(db)


def phi_fb_t_grad(a, b, t):
    """Gradient of ``phi_fb_t``; requires ``t > 0`` or a point off the origin."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r = np.sqrt(a * a + b * b + 2.0 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = 1.0 - a / r
        db = 1.0 - b / r
    return _out(da), _out(db)


phi_ks_t_grad = phi_ks_grad


@dataclass(frozen=True)
class Scalar2Fn:
    """A function of two real arguments with an optional gradient.

    ``grad`` returns ``None`` where the function is not differentiable.
    """

    eval: Callable[[float, float], float]
    grad: Callable[[float, float], Optional[tuple]] = field(default=lambda a, b: None)
    name: str = ""

    def __call__(self, a, b):
        return self.eval(a, b)

    def negated(self) -> "Scalar2Fn":
        def grad(a, b):
            g = self.grad(a, b)
            return None if g is None else (-g[0], -g[1])

        return Scalar2Fn(lambda a, b: -self.eval(a, b), grad, f"-{self.name}")


PHI_MIN = Scalar2Fn(phi_min, phi_min_grad, "min")
PHI_FB = Scalar2Fn(phi_fb, phi_fb_grad, "fb")
PHI_KS = Scalar2Fn(phi_ks, lambda a, b: tuple(map(float, phi_ks_grad(a, b))), "ks")


def smoothed_fb(t: float) -> Scalar2Fn:
    return Scalar2Fn(
        lambda a, b: phi_fb_t(a, b, t),
        lambda a, b: tuple(map(float, phi_fb_t_grad(a, b, t))),
        f"fb_t({t:g})",
    )


def offset_ks(t: float) -> Scalar2Fn:
    return Scalar2Fn(
        lambda a, b: phi_ks_t(a, b, t),
        lambda a, b: tuple(map(float, phi_ks_grad(a, b))),
        f"ks_t({t:g})",
    )


# -- classification ------------------------------------------------------------


class NcpClass(str, enum.Enum):
    NCP1 = "NCP1"  # positive on A and B
    NCP2 = "NCP2"  # negative on A and B
    NCP3 = "NCP3"  # negative on A, positive on B
    NCP4 = "NCP4"  # positive on A, negative on B (or-compatible)
    NOT_NCP = "not-an-NCP-function"


_PATTERNS = {
    (1, 1): NcpClass.NCP1,
    (-1, -1): NcpClass.NCP2,
    (-1, 1): NcpClass.NCP3,
    (1, -1): NcpClass.NCP4,
}


def in_complementarity_set(a: float, b: float, tol: float = SIGN_TOL) -> bool:
    return a >= -tol and b >= -tol and min(abs(a), abs(b)) <= tol


def _sample_region(rng, count, member):
    pts = []
    while len(pts) < count:
        cand = rng.uniform(-10.0, 10.0, size=(2 * count, 2))
        keep = cand[member(cand[:, 0], cand[:, 1])]
        pts.extend(keep[: count - len(pts)])
    return np.asarray(pts)


def classify_ncp(fn: Scalar2Fn, samples: int = 10_000, seed: int = 0) -> NcpClass:
    """Determine which sign pattern a candidate NCP function exhibits.

    Samples the open regions ``A = {a > 0, b > 0}`` and ``B = {a < 0 or b < 0}``
    uniformly on ``[-10, 10]^2`` together with points of the complementarity
    set ``C``. Returns ``NOT_NCP`` if the zero-level test fails anywhere; raises
    :class:`InconsistentSignsError` if a region shows both signs.
    """
    if samples < 100:
        raise ValueError("classify_ncp needs at least 100 samples")
    rng = np.random.default_rng(seed)
    pts_a = _sample_region(rng, samples, lambda a, b: (a > 0) & (b > 0))
    pts_b = _sample_region(rng, samples, lambda a, b: (a < 0) | (b < 0))
    half = samples // 2
    comp = np.zeros((samples, 2))
    comp[:half, 1] = rng.uniform(0.0, 10.0, size=half)
    comp[half:, 0] = rng.uniform(0.0, 10.0, size=samples - half)

    def values(pts):
        return np.array([fn(float(a), float(b)) for a, b in pts])

    if np.any(np.abs(values(comp)) > SIGN_TOL):
        return NcpClass.NOT_NCP
    signs = []
    for region, pts in (("A", pts_a), ("B", pts_b)):
        v = values(pts)
        if np.any(np.abs(v) <= SIGN_TOL):
            return NcpClass.NOT_NCP
        pos, neg = bool(np.all(v > 0)), bool(np.all(v < 0))
        if not (pos or neg):
            raise InconsistentSignsError(f"{fn.name or 'function'} changes sign on region {region}")
        signs.append(1 if pos else -1)
    return _PATTERNS[tuple(signs)]


# -- subdifferentials on the complementarity set -----------------------------


@dataclass(frozen=True)
class SubdiffSet:
    """A subdifferential given by generating points or by a center and radius.

    ``kind`` is one of ``singleton``, ``finite-pair``, ``segment``, ``disk``,
    ``circle``. Points are stored for the first three; ``center``/``radius``
    for the last two.
    """

    kind: str
    points: tuple = ()
    center: Optional[tuple] = None
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind in ("disk", "circle"):
            if self.radius is None or self.radius <= 0:
                raise ValueError("disk/circle needs a positive radius")
        elif len(set(self.points)) != len(self.points):
            raise ValueError("generating points must be distinct")

    def contains(self, v: Sequence[float], tol: float = 1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        if self.kind in ("singleton", "finite-pair"):
            return any(np.linalg.norm(v - np.asarray(p)) <= tol for p in self.points)
        if self.kind == "segment":
            p, q = (np.asarray(p, dtype=float) for p in self.points)
            d = q - p
            s = np.clip(np.dot(v - p, d) / np.dot(d, d), 0.0, 1.0)
            return bool(np.linalg.norm(p + s * d - v) <= tol)
        dist = np.linalg.norm(v - np.asarray(self.center))
        if self.kind == "disk":
            return bool(dist <= self.radius + tol)
        return bool(abs(dist - self.radius) <= tol)


_E1 = (1.0, 0.0)
_E2 = (0.0, 1.0)


def subdiff(phi_id: str, rule: str, a: float, b: float) -> SubdiffSet:
    """Clarke or Mordukhovich subdifferential of ``phi_min``/``phi_fb`` on ``C``."""
    if phi_id not in ("min", "fb") or rule not in ("clarke", "mordukhovich"):
        raise ValueError(f"unsupported combination {phi_id!r}/{rule!r}")
    if not in_complementarity_set(a, b):
        raise PointNotInComplementaritySetError((a, b))
    a_zero, b_zero = abs(a) <= SIGN_TOL, abs(b) <= SIGN_TOL
    if a_zero and not b_zero:
        return SubdiffSet("singleton", (_E1,))
    if b_zero and not a_zero:
        return SubdiffSet("singleton", (_E2,))
    if phi_id == "min":
        kind = "segment" if rule == "clarke" else "finite-pair"
        return SubdiffSet(kind, (_E1, _E2))
    return SubdiffSet("disk" if rule == "clarke" else "circle", center=(1.0, 1.0), radius=1.0)


def fb_multiplier_lift(mu: float, nu: float) -> tuple:
    """Map nonnegative multipliers ``(mu, nu)`` to ``(xi, alpha, beta)``.

    ``(alpha, beta)`` lies on the unit circle around ``(1, 1)`` and
    ``xi * (alpha, beta) == (mu, nu)`` whenever ``xi > 0``.
    """
    if mu < 0 or nu < 0:
        raise ValueError("multipliers must be nonnegative")
    xi = mu + nu + math.sqrt(2.0) * math.sqrt(mu) * math.sqrt(nu)
    if xi == 0.0:
        c = 1.0 - math.sqrt(2.0) / 2.0
        return 0.0, c, c
    # Work with the ratio so that tiny or huge multipliers keep full precision.
    big, small = (mu, nu) if mu >= nu else (nu, mu)
    r = small / big
    first = 1.0 / (1.0 + r + math.sqrt(2.0 * r))
    second = r * first
    return (xi, first, second) if mu >= nu else (xi, second, first)
