"""Boundary-to-boundary geodesics of a conformal disc metric.

Geodesics are integrated in g-arclength with an embedded Dormand-Prince
5(4) pair.  Many shots are advanced together as numpy lanes, each lane
with its own step size, so a batch of ten thousand geodesics costs about
as many Python-level steps as a single one.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import expr
from .metric import (
    TWO_PI,
    ConformalMetric,
    arclength_at_angle,
    boundary_point,
)

# grazing clamp: |sin(theta)| <= 1 - GRAZING_EPS
GRAZING_EPS = 1e-6

# lanes per chunk; fixed so results never depend on the worker count
CHUNK = 4096

THREADS_ENV = "CROFTON_LAB_THREADS"


class Status(str, enum.Enum):
    EXITED = "Exited"
    MAX_LENGTH_EXCEEDED = "MaxLengthExceeded"
    NUMERICAL_FAILURE = "NumericalFailure"


class GeodesicError(RuntimeError):
    """A shot did not reach the boundary."""

    def __init__(self, message: str, status: Status, index: int | None = None):
        self.status = status
        self.index = index
        super().__init__(message)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_length: float | None = None  # None: 100 * L(boundary) / pi
    max_segment_length: float = 1e-2
    max_steps: int = 200_000
    min_step: float = 1e-13

    def resolved_max_length(self, metric: ConformalMetric) -> float:
        if self.max_length is not None:
            return float(self.max_length)
        return 100.0 * metric.total_boundary_length / np.pi


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    vertices: np.ndarray  # (k, 2) coordinates
    tangents: np.ndarray  # (k, 2) coordinate velocities, unit g-norm
    times: np.ndarray  # (k,) g-arclength at each vertex
    length: float
    entry: tuple[float, float]
    exit: tuple[float, float] | None
    status: Status

    @property
    def exited(self) -> bool:
        return self.status is Status.EXITED


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = np.append(_B, 0.0) - _B_LOW


def _field(metric, y):
    """geodesic_rhs without domain checks: invalid points give nan lanes."""
    x0, x1, vx, vy = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    with np.errstate(all="ignore"):
        rho = expr.evaluate(metric.rho, x0, x1, strict=False)
        px = expr.evaluate(metric.rho_x, x0, x1, strict=False) / rho
        py = expr.evaluate(metric.rho_y, x0, x1, strict=False) / rho
        v2 = vx * vx + vy * vy
        dot = px * vx + py * vy
        out = np.empty_like(y)
        out[:, 0] = vx
        out[:, 1] = vy
        out[:, 2] = v2 * px - 2.0 * dot * vx
        out[:, 3] = v2 * py - 2.0 * dot * vy
    return out


def _rk_step(metric, y, k1, h):
    """One Dormand-Prince step; returns (y_new, stages k1..k6)."""
    hh = h[:, None]
    ks = [k1]
    for i in range(1, 6):
        acc = sum(a * k for a, k in zip(_A[i], ks))
        ks.append(_field(metric, y + hh * acc))
    y_new = y + hh * sum(b * k for b, k in zip(_B, ks))
    return y_new, ks


def _locate_exit(metric, y0, k1, h):
    """Fraction sigma in (0, 1] of the step where |x|^2 = 1 (Illinois method)."""
    lo = np.zeros(len(h))
    hi = np.ones(len(h))
    f_lo = y0[:, 0] ** 2 + y0[:, 1] ** 2 - 1.0
    y_hi, _ = _rk_step(metric, y0, k1, h)
    f_hi = y_hi[:, 0] ** 2 + y_hi[:, 1] ** 2 - 1.0
    sigma = hi.copy()
    y_best = y_hi
    side = np.zeros(len(h), dtype=int)
    for _ in range(100):
        with np.errstate(all="ignore"):
            sigma = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        bad = ~np.isfinite(sigma) | (sigma <= lo) | (sigma >= hi)
        sigma = np.where(bad, 0.5 * (lo + hi), sigma)
        y_mid, _ = _rk_step(metric, y0, k1, sigma * h)
        f_mid = y_mid[:, 0] ** 2 + y_mid[:, 1] ** 2 - 1.0
        y_best = y_mid
        inside = f_mid <= 0.0
        lo = np.where(inside, sigma, lo)
        hi = np.where(inside, hi, sigma)
        # Illinois: halve the stale endpoint value after two moves on one side
        f_hi = np.where(inside & (side == 1), 0.5 * f_hi, f_hi)
        f_lo = np.where(~inside & (side == -1), 0.5 * f_lo, f_lo)
        f_lo = np.where(inside, f_mid, f_lo)
        f_hi = np.where(inside, f_hi, f_mid)
        side = np.where(inside, 1, -1)
        if np.all((hi - lo <= 1e-12) | (np.abs(f_mid) <= 4e-16)):
            break
    return sigma, y_best


def initial_state(metric: ConformalMetric, s, theta):
    """(x, y, vx, vy) leaving boundary arclength ``s`` at angle ``theta`` to the inward normal."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    limit = np.arcsin(1.0 - GRAZING_EPS)
    theta = np.clip(theta, -limit, limit)
    x, y, normal, tangent = boundary_point(metric, s)
    v = np.cos(theta)[:, None] * normal + np.sin(theta)[:, None] * tangent
    return np.column_stack([x, y, v]), theta


def _integrate(metric, s, theta, opts, max_length, record):
    m = len(s)
    y, theta = initial_state(metric, s, theta)
    rho0 = 1.0 / np.hypot(y[:, 2], y[:, 3])
    h = rho0 * np.minimum(0.5 * np.cos(theta), min(opts.max_segment_length, 0.05))
    t = np.zeros(m)
    k1 = _field(metric, y)
    status = np.full(m, "", dtype="<U20")
    on_boundary = np.ones(m, dtype=bool)
    active = np.arange(m)
    tol = opts.tol
    max_seg = opts.max_segment_length
    log = [(active.copy(), t.copy(), y.copy())] if record else None
    steps = 0
    while active.size:
        steps += 1
        ya, ka, ha = y[active], k1[active], h[active]
        y_new, ks = _rk_step(metric, ya, ka, ha)
        k7 = _field(metric, y_new)
        err = ha[:, None] * (sum(e * k for e, k in zip(_E, ks)) + _E[6] * k7)
        scale = tol + tol * np.maximum(np.abs(ya), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err_norm = np.max(np.abs(err) / scale, axis=1)
        finite = np.isfinite(err_norm) & np.all(np.isfinite(k7), axis=1)
        err_norm = np.where(finite, err_norm, np.inf)
        accept = err_norm <= 1.0
        with np.errstate(divide="ignore"):
            factor = np.clip(0.9 * err_norm ** -0.2, 0.2, 5.0)
        factor = np.where(finite, factor, 0.25)
        factor = np.where(accept, factor, np.minimum(factor, 0.9))
        h_next = ha * factor

        disp = np.hypot(y_new[:, 0] - ya[:, 0], y_new[:, 1] - ya[:, 1])
        if record:
            too_long = disp > max_seg
            accept &= ~too_long
            with np.errstate(divide="ignore", invalid="ignore"):
                cap = 0.95 * max_seg * ha / disp
            h_next = np.where(finite & (disp > 0), np.minimum(h_next, cap), h_next)

        r2 = y_new[:, 0] ** 2 + y_new[:, 1] ** 2
        outside = r2 > 1.0
        # a first step that leaves again has skipped the whole chord
        first_out = accept & outside & on_boundary[active]
        accept &= ~first_out
        h_next = np.where(first_out, 0.5 * ha, h_next)

        crossing = accept & outside
        moved = accept & ~outside

        idx = active[moved]
        y[idx] = y_new[moved]
        k1[idx] = k7[moved]
        t[idx] += ha[moved]
        on_boundary[idx] = False
        if record and idx.size:
            log.append((idx, t[idx].copy(), y[idx].copy()))

        if crossing.any():
            cidx = active[crossing]
            sigma, y_exit = _locate_exit(metric, ya[crossing], ka[crossing], ha[crossing])
            y[cidx] = y_exit
            t[cidx] += sigma * ha[crossing]
            status[cidx] = Status.EXITED.value
            if record:
                log.append((cidx, t[cidx].copy(), y[cidx].copy()))

        h[active] = h_next
        over = (t[active] > max_length) & (status[active] == "")
        status[active[over]] = Status.MAX_LENGTH_EXCEEDED.value
        tiny = (h[active] < opts.min_step) & (status[active] == "")
        status[active[tiny]] = Status.NUMERICAL_FAILURE.value
        if steps >= opts.max_steps:
            status[active[status[active] == ""]] = Status.NUMERICAL_FAILURE.value
        active = active[status[active] == ""]

    out = {"s": np.asarray(s, dtype=float), "theta": theta, "state": y, "length": t,
           "status": status}
    if record:
        lanes = np.concatenate([e[0] for e in log])
        times = np.concatenate([e[1] for e in log])
        states = np.concatenate([e[2] for e in log])
        order = np.argsort(lanes, kind="stable")
        out["times"] = times[order]
        out["states"] = states[order]
        out["offsets"] = np.concatenate([[0], np.cumsum(np.bincount(lanes, minlength=m))])
    return out


def _workers() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(eq=False)
class GeodesicBatch:
    """Results of many shots, stored as flat arrays."""

    metric: ConformalMetric
    s: np.ndarray
    theta: np.ndarray
    lengths: np.ndarray
    status: np.ndarray
    final_state: np.ndarray
    s_exit: np.ndarray
    theta_exit: np.ndarray
    times: np.ndarray | None = None
    states: np.ndarray | None = None
    offsets: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.s)

    @property
    def all_exited(self) -> bool:
        return bool(np.all(self.status == Status.EXITED.value))

    def check(self) -> None:
        """Raise :class:`GeodesicError` for the first shot that did not exit."""
        bad = np.flatnonzero(self.status != Status.EXITED.value)
        if bad.size:
            i = int(bad[0])
            st = Status(self.status[i])
            raise GeodesicError(
                f"{st.value} for geodesic {i} (s={self.s[i]:.12g}, theta={self.theta[i]:.12g}, "
                f"length so far {self.lengths[i]:.6g}); {bad.size} of {len(self)} shots failed",
                st,
                i,
            )

    def polyline(self, i: int) -> np.ndarray:
        a, b = self.offsets[i], self.offsets[i + 1]
        return self.states[a:b, :2]

    def polylines(self) -> list[np.ndarray]:
        if self.states is None:
            raise ValueError("batch was shot without recording vertices")
        return [self.polyline(i) for i in range(len(self))]

    def path(self, i: int) -> GeodesicPath:
        st = Status(self.status[i])
        ext = (float(self.s_exit[i]), float(self.theta_exit[i])) if st is Status.EXITED else None
        if self.states is not None:
            a, b = self.offsets[i], self.offsets[i + 1]
            verts, tans, times = self.states[a:b, :2], self.states[a:b, 2:], self.times[a:b]
        else:
            y0, _ = initial_state(self.metric, self.s[i], self.theta[i])
            verts = np.vstack([y0[:, :2], self.final_state[i, :2]])
            tans = np.vstack([y0[:, 2:], self.final_state[i, 2:]])
            times = np.array([0.0, self.lengths[i]])
        return GeodesicPath(
            vertices=verts,
            tangents=tans,
            times=times,
            length=float(self.lengths[i]),
            entry=(float(self.s[i]), float(self.theta[i])),
            exit=ext,
            status=st,
        )


def shoot_batch(
    metric: ConformalMetric,
    s,
    theta,
    opts: SolverOptions | None = None,
    record: bool = True,
    workers: int | None = None,
) -> GeodesicBatch:
    """Shoot geodesics from boundary arclengths ``s`` at entry angles ``theta``.

    Lanes are processed in fixed chunks of :data:`CHUNK`, optionally on a
    thread pool, so results are bit-identical for any worker count.
    """
    opts = opts or SolverOptions()
    s = np.atleast_1d(np.asarray(s, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if s.shape != theta.shape:
        raise ValueError("s and theta must have the same shape")
    if np.any(np.abs(theta) >= np.pi / 2):
        raise ValueError("entry angles must lie strictly inside (-pi/2, pi/2)")
    max_length = opts.resolved_max_length(metric)
    chunks = [slice(i, min(i + CHUNK, len(s))) for i in range(0, len(s), CHUNK)]
    workers = workers or _workers()

    def run(sl):
        return _integrate(metric, s[sl], theta[sl], opts, max_length, record)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(sl) for sl in chunks]

    state = np.concatenate([p["state"] for p in parts])
    status = np.concatenate([p["status"] for p in parts])
    s_exit, theta_exit = exit_parameters_from_state(metric, state)
    failed = status != Status.EXITED.value
    s_exit[failed] = np.nan
    theta_exit[failed] = np.nan
    batch = GeodesicBatch(
        metric=metric,
        s=s,
        theta=np.concatenate([p["theta"] for p in parts]),
        lengths=np.concatenate([p["length"] for p in parts]),
        status=status,
        final_state=state,
        s_exit=s_exit,
        theta_exit=theta_exit,
    )
    if record:
        batch.times = np.concatenate([p["times"] for p in parts])
        batch.states = np.concatenate([p["states"] for p in parts])
        offsets = [np.zeros(1, dtype=np.int64)]
        base = 0
        for p in parts:
            offsets.append(p["offsets"][1:] + base)
            base += p["offsets"][-1]
        batch.offsets = np.concatenate(offsets)
    return batch


def shoot(metric: ConformalMetric, s: float, theta: float, opts: SolverOptions | None = None):
    """Shoot one geodesic; see :func:`shoot_batch`."""
    return shoot_batch(metric, [s], [theta], opts, record=True, workers=1).path(0)


def exit_parameters_from_state(metric: ConformalMetric, state):
    state = np.atleast_2d(state)
    x, y, vx, vy = state.T
    a = np.arctan2(y, x)
    s_exit = np.atleast_1d(arclength_at_angle(metric, np.mod(a, TWO_PI))).astype(float)
    L = metric.total_boundary_length
    s_exit = np.where(s_exit >= L, s_exit - L, s_exit)
    c, sn = np.cos(a), np.sin(a)
    # reversed tangent against the inward normal (-c, -sn) and tangent (-sn, c)
    along_normal = vx * c + vy * sn
    along_tangent = vx * sn - vy * c
    theta_exit = np.arctan2(along_tangent, along_normal)
    return s_exit, theta_exit


def exit_parameters(metric: ConformalMetric, path: GeodesicPath) -> tuple[float, float]:
    """Boundary chart coordinates ``(s_exit, theta_exit)`` of an exited path.

    Shooting from them retraces ``path`` backwards.
    """
    if path.status is not Status.EXITED:
        raise GeodesicError(f"path did not exit ({path.status.value})", path.status)
    state = np.concatenate([path.vertices[-1], path.tangents[-1]])
    s_exit, theta_exit = exit_parameters_from_state(metric, state)
    return float(s_exit[0]), float(theta_exit[0])
