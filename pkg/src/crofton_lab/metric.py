"""Conformal metrics rho(x, y)^2 (dx^2 + dy^2) on the closed unit disc."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr

TWO_PI = 2.0 * np.pi

# Gauss-Legendre points per boundary-table panel
_PANEL_ORDER = 8


class MetricError(ValueError):
    """The metric could not be built (parse failure or non-positive scale)."""


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    source: str
    rho: expr.Expr
    rho_x: expr.Expr
    rho_y: expr.Expr
    grid_n: int
    rho_min: float
    # boundary table: panel edges in coordinate angle and cumulative g-arclength
    table_angles: np.ndarray = field(repr=False)
    table_arclength: np.ndarray = field(repr=False)

    @property
    def total_boundary_length(self) -> float:
        return float(self.table_arclength[-1])

    def scale(self, x, y):
        return expr.evaluate(self.rho, x, y)

    def __str__(self) -> str:
        return f"rho = {self.source}"


def build_metric(rho_source: str, grid_n: int = 256) -> ConformalMetric:
    """Parse ``rho_source``, check positivity on a polar grid and tabulate the boundary.

    Positivity is verified by sampling only: ``grid_n`` radii (0 and 1
    included) times ``grid_n`` angles.  A scale that dips below zero between
    samples is not detected.
    """
    if grid_n < 64:
        raise MetricError(f"grid_n must be >= 64, got {grid_n}")
    try:
        rho = expr.parse(rho_source)
    except expr.ParseError as exc:
        raise MetricError(f"cannot parse metric.rho: {exc}") from exc
    rho_x = expr.differentiate(rho, "x")
    rho_y = expr.differentiate(rho, "y")

    r = np.linspace(0.0, 1.0, grid_n)
    a = np.linspace(0.0, TWO_PI, grid_n, endpoint=False)
    R, A = np.meshgrid(r, a, indexing="ij")
    X, Y = R * np.cos(A), R * np.sin(A)
    try:
        values = expr.evaluate(rho, X, Y)
        expr.evaluate(rho_x, X, Y)
        expr.evaluate(rho_y, X, Y)
    except expr.DomainError as exc:
        raise MetricError(f"metric.rho is not defined on the closed disc: {exc}") from exc
    k = int(np.argmin(values))
    rho_min = float(values.flat[k])
    if not rho_min > 0.0:
        raise MetricError(
            f"metric.rho must be positive on the closed disc; rho = {rho_min:.6g} "
            f"at (x, y) = ({X.flat[k]:.6g}, {Y.flat[k]:.6g})"
        )

    n_panels = 4 * grid_n
    edges = np.linspace(0.0, TWO_PI, n_panels + 1)
    panel = _panel_integrals(rho, edges[:-1], edges[1:])
    cumulative = np.concatenate([[0.0], np.cumsum(panel)])
    return ConformalMetric(
        source=rho_source,
        rho=rho,
        rho_x=rho_x,
        rho_y=rho_y,
        grid_n=grid_n,
        rho_min=rho_min,
        table_angles=edges,
        table_arclength=cumulative,
    )


def _panel_integrals(rho, lo, hi):
    """Integral of rho(cos a, sin a) da over [lo, hi], elementwise."""
    nodes, weights = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    angles = mid[..., None] + half[..., None] * nodes
    values = expr.evaluate(rho, np.cos(angles), np.sin(angles))
    return half * (values @ weights)


def boundary_length(metric: ConformalMetric) -> float:
    """g-length of the unit circle."""
    return metric.total_boundary_length


def area(metric: ConformalMetric, n_r: int = 64, n_t: int = 256) -> float:
    """g-area of the disc: Gauss-Legendre in r times the trapezoid rule in angle."""
    if n_r < 16 or n_t < 16:
        raise ValueError("area quadrature needs n_r, n_t >= 16")
    u, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (u + 1.0)
    wr = 0.5 * w
    a = np.arange(n_t) * (TWO_PI / n_t)
    R, A = np.meshgrid(r, a, indexing="ij")
    rho = expr.evaluate(metric.rho, R * np.cos(A), R * np.sin(A))
    radial = (rho * rho).sum(axis=1) * (TWO_PI / n_t)
    return float(np.dot(wr * r, radial))


def arclength_at_angle(metric: ConformalMetric, angle):
    """Boundary g-arclength from angle 0 counterclockwise to ``angle``."""
    a = np.mod(np.asarray(angle, dtype=float), TWO_PI)
    edges = metric.table_angles
    k = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, len(edges) - 2)
    s = metric.table_arclength[k] + _panel_integrals(metric.rho, edges[k], a)
    return s if np.ndim(s) else float(s)


def angle_at_arclength(metric: ConformalMetric, s):
    """Inverse of :func:`arclength_at_angle` on [0, L)."""
    s = np.asarray(s, dtype=float)
    L = metric.total_boundary_length
    if np.any((s < 0.0) | (s >= L)):
        raise ValueError(f"boundary arclength out of range [0, {L})")
    table = metric.table_arclength
    edges = metric.table_angles
    k = np.clip(np.searchsorted(table, s, side="right") - 1, 0, len(edges) - 2)
    lo, hi = edges[k], edges[k + 1]
    frac = (s - table[k]) / (table[k + 1] - table[k])
    a = lo + frac * (hi - lo)
    for _ in range(50):
        f = table[k] + _panel_integrals(metric.rho, lo, a) - s
        step = f / expr.evaluate(metric.rho, np.cos(a), np.sin(a))
        a = np.clip(a - step, lo, hi)
        if np.all(np.abs(step) <= 1e-15):
            break
    return a if np.ndim(a) else float(a)


def boundary_point(metric: ConformalMetric, s):
    """Boundary point at g-arclength ``s`` (s = 0 at angle 0, counterclockwise).

    Returns ``(x, y, normal, tangent)``: ``normal`` points into the disc and
    ``tangent`` along the positive orientation, both with unit g-norm.
    Accepts scalars or arrays; vectors have shape ``(..., 2)``.
    """
    a = angle_at_arclength(metric, s)
    c, sn = np.cos(a), np.sin(a)
    inv = 1.0 / expr.evaluate(metric.rho, c, sn)
    normal = np.stack([-c * inv, -sn * inv], axis=-1)
    tangent = np.stack([-sn * inv, c * inv], axis=-1)
    return c, sn, normal, tangent


def geodesic_rhs(metric: ConformalMetric, state):
    """Unit-speed geodesic field for the state ``(x, y, vx, vy)`` (last axis).

    With phi = log rho the Christoffel symbols of a conformal metric give
    a = |v|^2 grad(phi) - 2 (grad(phi) . v) v.
    """
    state = np.asarray(state, dtype=float)
    x, y, vx, vy = state[..., 0], state[..., 1], state[..., 2], state[..., 3]
    rho = expr.evaluate(metric.rho, x, y)
    px = expr.evaluate(metric.rho_x, x, y) / rho
    py = expr.evaluate(metric.rho_y, x, y) / rho
    v2 = vx * vx + vy * vy
    dot = px * vx + py * vy
    ax = v2 * px - 2.0 * dot * vx
    ay = v2 * py - 2.0 * dot * vy
    return np.stack([vx, vy, ax, ay], axis=-1)


def g_norm(metric: ConformalMetric, points, vectors):
    """g-norm of coordinate vectors attached at ``points`` (both shape (..., 2))."""
    points = np.asarray(points, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    rho = expr.evaluate(metric.rho, points[..., 0], points[..., 1])
    return rho * np.hypot(vectors[..., 0], vectors[..., 1])


def polyline_length(metric: ConformalMetric, vertices, closed: bool = False) -> float:
    """g-length of a polyline, integrating rho along each straight segment."""
    p = np.asarray(vertices, dtype=float)
    if closed:
        p = np.vstack([p, p[:1]])
    a, b = p[:-1], p[1:]
    nodes, weights = np.polynomial.legendre.leggauss(4)
    t = 0.5 * (nodes + 1.0)
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    rho = expr.evaluate(metric.rho, pts[..., 0], pts[..., 1])
    seg = np.hypot(*(b - a).T)
    return float(np.sum(seg * (rho @ (0.5 * weights))))
