"""Seeded small or-constrained programs with a prescribed point and multipliers.

Each instance has a point ``x_bar`` whose or-pair sign pattern is drawn at
random, and an objective whose gradient at ``x_bar`` is built from chosen
multipliers so that a target stationarity type holds there by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from orcon.model import MpocProblem, SmoothFn, VectorFn

# (sign of G, sign of H) for the eight feasible pair patterns.
PATTERNS = {
    "iM0": (-1, 0),
    "i0M": (0, -1),
    "iMP": (-1, 1),
    "iPM": (1, -1),
    "i0P": (0, 1),
    "iP0": (1, 0),
    "iMM": (-1, -1),
    "i00": (0, 0),
}


@dataclass
class Instance:
    problem: MpocProblem
    x_bar: np.ndarray
    labels: list
    target: str


def _quadratic_vector(A, curv, offsets, x_bar):
    """``x -> A (x - x_bar) + 0.5 curv |x - x_bar|^2 + offsets`` row-wise."""
    A = np.asarray(A, float).reshape(len(offsets), -1)
    curv = np.asarray(curv, float)
    offsets = np.asarray(offsets, float)
    n = A.shape[1]

    def value(x):
        d = x - x_bar
        return A @ d + 0.5 * curv * (d @ d) + offsets

    def jacobian(x):
        d = x - x_bar
        return A + curv[:, None] * d[None, :]

    return VectorFn(n, len(offsets), value, jacobian)


def random_instance(rng: np.random.Generator, target: str = "S", allowed=None) -> Instance:
    """Draw an instance whose ``x_bar`` is ``target``-stationary by construction.

    ``target`` is ``S``, ``M``, ``W`` or ``none``; for ``none`` the gradient of
    ``f`` is random. ``allowed`` restricts the pair patterns.
    """
    allowed = list(allowed or PATTERNS)
    n = int(rng.integers(2, 6))
    q = int(rng.integers(1, 4))
    m = int(rng.integers(0, 3))
    p = int(rng.integers(0, 2))
    x_bar = rng.normal(size=n)

    labels = [allowed[int(rng.integers(len(allowed)))] for _ in range(q)]
    if target in ("M", "W") and "i00" in allowed and "i00" not in labels:
        labels[0] = "i00"
    Gs, Hs = [], []
    for lab in labels:
        sg, sh = PATTERNS[lab]
        Gs.append(sg * rng.uniform(0.5, 2.0))
        Hs.append(sh * rng.uniform(0.5, 2.0))
    AG, AH = rng.normal(size=(q, n)), rng.normal(size=(q, n))
    G = _quadratic_vector(AG, rng.normal(size=q), Gs, x_bar)
    H = _quadratic_vector(AH, rng.normal(size=q), Hs, x_bar)

    g_active = rng.random(m) < 0.5
    g_off = np.where(g_active, 0.0, -rng.uniform(0.5, 2.0, size=m))
    Ag = rng.normal(size=(m, n))
    g = _quadratic_vector(Ag, rng.normal(size=m), g_off, x_bar) if m else VectorFn.empty(n)
    Ah = rng.normal(size=(p, n))
    h = VectorFn.affine(Ah, -Ah @ x_bar) if p else VectorFn.empty(n)

    if target == "none":
        d = rng.normal(size=n)
    else:
        d = np.zeros(n)
        for i in range(m):
            if g_active[i]:
                d -= rng.uniform(0.0, 2.0) * Ag[i]
        for j in range(p):
            d -= rng.normal() * Ah[j]
        for l, lab in enumerate(labels):
            if lab == "i0P":
                d -= rng.uniform(0.1, 2.0) * AG[l]
            elif lab == "iP0":
                d -= rng.uniform(0.1, 2.0) * AH[l]
            elif lab == "i00":
                if target == "M":
                    d -= rng.uniform(0.1, 2.0) * (AG[l] if rng.random() < 0.5 else AH[l])
                elif target == "W":
                    d -= rng.uniform(0.1, 2.0) * AG[l] + rng.uniform(0.1, 2.0) * AH[l]
    kappa = rng.uniform(0.5, 2.0)

    f = SmoothFn(
        n,
        lambda x: float(0.5 * kappa * np.sum((x - x_bar) ** 2) + d @ (x - x_bar)),
        lambda x: kappa * (x - x_bar) + d,
        "f",
    )
    problem = MpocProblem(n, f, g, h, G, H, f"random-{target}")
    return Instance(problem, x_bar, labels, target)
