"""Discretizations of the space of oriented boundary-to-boundary geodesics.

A geodesic is charted by its entry arclength ``s`` on the boundary and
``u = sin(theta)`` for the entry angle.  In these coordinates the measure
``|cos theta| dtheta ds`` becomes ``du ds`` on ``[0, L) x (-1, 1)``, so
uniform sampling is Liouville sampling and every weight is constant in u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geodesic import GRAZING_EPS
from .metric import ConformalMetric

U_RULES = ("gauss", "midpoint")


@dataclass(frozen=True, eq=False)
class GammaScheme:
    s: np.ndarray
    u: np.ndarray
    weights: np.ndarray
    kind: str  # "montecarlo" | "quadrature"
    total_mass: float
    seed: int | None = None
    n_s: int | None = None
    n_u: int | None = None
    u_rule: str | None = None

    def __len__(self) -> int:
        return len(self.s)

    @property
    def theta(self) -> np.ndarray:
        return np.arcsin(self.u)

    def info(self) -> dict:
        if self.kind == "montecarlo":
            return {"kind": self.kind, "n": len(self), "seed": self.seed}
        return {"kind": self.kind, "n_s": self.n_s, "n_u": self.n_u, "u_rule": self.u_rule}


def _clamp(u):
    return np.clip(u, -1.0 + GRAZING_EPS, 1.0 - GRAZING_EPS)


def sample_liouville(metric: ConformalMetric, n: int, seed: int) -> GammaScheme:
    """n i.i.d. Liouville-distributed geodesics, each carrying weight 2L/n."""
    if n < 1:
        raise ValueError("need at least one sample")
    L = metric.total_boundary_length
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, L, n)
    u = _clamp(rng.uniform(-1.0, 1.0, n))
    return GammaScheme(
        s=s,
        u=u,
        weights=np.full(n, 2.0 * L / n),
        kind="montecarlo",
        total_mass=2.0 * L,
        seed=seed,
    )


def quadrature_scheme(
    metric: ConformalMetric, n_s: int, n_u: int, u_rule: str = "gauss"
) -> GammaScheme:
    """Tensor grid: midpoint rule in s times Gauss-Legendre (or midpoint) in u.

    Gauss-Legendre suits integrands smooth in u such as geodesic length.
    Crossing counts are piecewise constant in u; there the midpoint rule's
    O(1/n_u) error is smaller than the oscillating Gauss-Legendre error.
    """
    if n_s < 8 or n_u < 8:
        raise ValueError("quadrature needs n_s, n_u >= 8")
    if u_rule not in U_RULES:
        raise ValueError(f"u_rule must be one of {U_RULES}, got {u_rule!r}")
    L = metric.total_boundary_length
    s_nodes = (np.arange(n_s) + 0.5) * (L / n_s)
    if u_rule == "gauss":
        u_nodes, u_weights = np.polynomial.legendre.leggauss(n_u)
    else:
        u_nodes = -1.0 + (np.arange(n_u) + 0.5) * (2.0 / n_u)
        u_weights = np.full(n_u, 2.0 / n_u)
    S, U = np.meshgrid(s_nodes, _clamp(u_nodes), indexing="ij")
    W = np.outer(np.full(n_s, L / n_s), u_weights)
    weights = W.ravel()
    return GammaScheme(
        s=S.ravel(),
        u=U.ravel(),
        weights=weights,
        kind="quadrature",
        total_mass=float(weights.sum()),
        n_s=n_s,
        n_u=n_u,
        u_rule=u_rule,
    )
