"""Estimators for the integral-geometric identities of a disc metric.

Single-geodesic integrals (total mass, length, crossings with a fixed
curve) run on a :class:`~crofton_lab.gamma.GammaScheme`, usually a
quadrature grid.  Pair integrals over Gamma x Gamma use Monte Carlo
samples; their standard errors come from the variance of a degree-2
U-statistic, since all pairs of one sample are not independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metric as metric_mod
from .gamma import GammaScheme, sample_liouville
from .geodesic import GeodesicBatch, SolverOptions, shoot_batch
from .intersect import DEFAULT_TOL, PairCounts, count_against, count_all_pairs
from .metric import ConformalMetric

# quadrature used for Area(M) on the right-hand sides
AREA_NODES = (64, 256)

# hypothesis check: at most one interior intersection per pair
HYPOTHESIS_FRACTION = 1e-3

# relative slack under which L^2 and 2 pi A count as equal
EQUALITY_RTOL = 1e-10


@dataclass
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    scheme_info: dict
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @classmethod
    def make(cls, name, lhs, rhs, scheme_info, details=None, passed=None, elapsed=0.0):
        lhs, rhs = float(lhs), float(rhs)
        abs_err = abs(lhs - rhs)
        rel_err = abs_err / max(abs(lhs), abs(rhs), 1e-300)
        return cls(name, lhs, rhs, abs_err, rel_err, dict(scheme_info), bool(passed),
                   dict(details or {}), elapsed)

    def to_dict(self) -> dict:
        """Deterministic content only; ``elapsed`` lives in the metadata block."""
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "passed": self.passed,
            "scheme_info": self.scheme_info,
            "details": self.details,
        }


@dataclass
class CharacterizationReport:
    name: str
    lengths: np.ndarray
    length_histogram: tuple[np.ndarray, np.ndarray]  # (counts, bin edges)
    length_mean: float
    length_stddev: float
    pair_count_histogram: np.ndarray  # unordered pairs with 0, 1, 2, ... interior points
    fraction_zero: float
    fraction_one: float
    fraction_many: float
    scheme_info: dict
    elapsed: float = 0.0

    @property
    def hemisphere_signature(self) -> bool:
        return self.length_stddev / self.length_mean <= 1e-3 and self.fraction_one >= 0.999

    @property
    def passed(self) -> bool:
        # diagnostics only; the one hard requirement is a consistent partition
        return abs(self.fraction_zero + self.fraction_one + self.fraction_many - 1.0) <= 1e-12

    def to_dict(self) -> dict:
        counts, edges = self.length_histogram
        return {
            "name": self.name,
            "length_mean": self.length_mean,
            "length_stddev": self.length_stddev,
            "length_histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
            "pair_count_histogram": self.pair_count_histogram.tolist(),
            "fraction_zero": self.fraction_zero,
            "fraction_one": self.fraction_one,
            "fraction_many": self.fraction_many,
            "hemisphere_signature": self.hemisphere_signature,
            "passed": self.passed,
            "scheme_info": self.scheme_info,
        }


@dataclass(eq=False)
class PairSample:
    """Monte Carlo geodesics with their all-pairs intersection counts."""

    scheme: GammaScheme
    batch: GeodesicBatch
    counts: PairCounts
    tol: float

    @property
    def n(self) -> int:
        return len(self.scheme)

    def hypothesis_fraction(self) -> float:
        """Fraction of pairs meeting at two or more interior points."""
        return float(np.sum(self.counts.interior >= 2) / self.counts.n_pairs)

    def info(self) -> dict:
        return {**self.scheme.info(), "n_pairs": self.counts.n_pairs, "tol": self.tol}


def pair_sample(
    metric: ConformalMetric,
    n: int,
    seed: int,
    opts: SolverOptions | None = None,
    tol: float = DEFAULT_TOL,
) -> PairSample:
    if n < 2:
        raise ValueError("pair statistics need n >= 2")
    scheme = sample_liouville(metric, n, seed)
    batch = shoot_batch(metric, scheme.s, scheme.theta, opts, record=True)
    batch.check()
    return PairSample(scheme, batch, count_all_pairs(batch.polylines(), tol), tol)


def u_statistic(counts: PairCounts, values: np.ndarray, default: float = 0.0):
    """Mean and standard error of a symmetric pair kernel over all pairs.

    ``values`` holds the kernel for the pairs listed in ``counts``; every
    other pair takes ``default``.  Uses the Hoeffding variance
    (4 (n-2) zeta1 + 2 zeta2) / (n (n-1)).
    """
    n = counts.n_paths
    n_pairs = counts.n_pairs
    values = np.asarray(values, dtype=float)
    excess = values - default
    total = default * n_pairs + excess.sum()
    mean = total / n_pairs
    rows = default * (n - 1) + counts.row_sums(excess)
    row_means = rows / (n - 1)
    zeta1 = float(np.var(row_means, ddof=1))
    second = (default**2 * (n_pairs - len(values)) + np.sum(values**2)) / n_pairs
    zeta2 = max(second - mean**2, 0.0)
    var = (4.0 * (n - 2) * zeta1 + 2.0 * zeta2) / (n * (n - 1))
    return float(mean), float(np.sqrt(max(var, 0.0)))


def _area(metric):
    return metric_mod.area(metric, *AREA_NODES)


def verify_vol_gamma(metric: ConformalMetric, scheme: GammaScheme, rtol: float = 1e-12):
    t0 = time.perf_counter()
    lhs = scheme.total_mass
    rhs = 2.0 * metric_mod.boundary_length(metric)
    rep = IdentityReport.make("vol_gamma", lhs, rhs, scheme.info(),
                              {"weight_sum": float(scheme.weights.sum())})
    rep.passed = rep.rel_err <= rtol
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_santalo(
    metric: ConformalMetric,
    scheme: GammaScheme,
    opts: SolverOptions | None = None,
    rtol: float = 5e-3,
):
    """Integral of geodesic length over Gamma against 2 pi Area(M)."""
    t0 = time.perf_counter()
    batch = shoot_batch(metric, scheme.s, scheme.theta, opts, record=False)
    batch.check()
    lhs = float(np.dot(scheme.weights, batch.lengths))
    area = _area(metric)
    rep = IdentityReport.make(
        "santalo",
        lhs,
        2.0 * np.pi * area,
        scheme.info(),
        {
            "area": area,
            "total_mass": scheme.total_mass,
            "boundary_length": metric.total_boundary_length,
            "length_min": float(batch.lengths.min()),
            "length_max": float(batch.lengths.max()),
        },
    )
    rep.passed = rep.rel_err <= rtol
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_crofton(
    metric: ConformalMetric,
    tau,
    scheme: GammaScheme,
    opts: SolverOptions | None = None,
    rtol: float = 1e-2,
    tol: float = DEFAULT_TOL,
    chunk: int = 4096,
):
    """Crossing-weighted measure of geodesics meeting ``tau`` against 4 L(tau)."""
    t0 = time.perf_counter()
    tau = np.asarray(tau, dtype=float)
    if np.any(np.hypot(tau[:, 0], tau[:, 1]) > 1.0 + tol):
        raise ValueError("test curve must lie in the closed unit disc")
    crossings = np.zeros(len(scheme), dtype=np.int64)
    boundary_hits = 0
    theta = scheme.theta
    for a in range(0, len(scheme), chunk):
        sl = slice(a, a + chunk)
        batch = shoot_batch(metric, scheme.s[sl], theta[sl], opts, record=True)
        batch.check()
        interior, boundary = count_against(tau, batch.polylines(), tol)
        crossings[sl] = interior + boundary
        boundary_hits += int(boundary.sum())
    lhs = float(np.dot(scheme.weights, crossings))
    tau_length = metric_mod.polyline_length(metric, tau)
    rep = IdentityReport.make(
        "crofton",
        lhs,
        4.0 * tau_length,
        scheme.info(),
        {
            "tau_length": tau_length,
            "tau_vertices": len(tau),
            "crossing_histogram": np.bincount(crossings).tolist(),
            "boundary_crossings": boundary_hits,
        },
    )
    rep.passed = rep.rel_err <= rtol
    rep.elapsed = time.perf_counter() - t0
    return rep


def _mc_passed(rep, stderr, rtol, nsigma, atol):
    within_sigma = rep.abs_err <= nsigma * stderr + atol
    within_rel = rep.rel_err <= rtol or rep.abs_err <= atol
    return bool(within_sigma and within_rel)


def verify_proposition(
    metric: ConformalMetric,
    n: int = 2000,
    seed: int = 42,
    opts: SolverOptions | None = None,
    rtol: float = 1.5e-2,
    nsigma: float = 3.0,
    sample: PairSample | None = None,
):
    """Integral of i(g1, g2) over Gamma x Gamma against 8 pi Area(M)."""
    t0 = time.perf_counter()
    if n < 100:
        raise ValueError("verify_proposition needs n >= 100")
    sample = sample or pair_sample(metric, n, seed, opts)
    L = metric.total_boundary_length
    mean, se = u_statistic(sample.counts, sample.counts.interior)
    volume = (2.0 * L) ** 2
    area = _area(metric)
    rep = IdentityReport.make(
        "proposition",
        volume * mean,
        8.0 * np.pi * area,
        {**sample.info(), "stderr": volume * se},
        {
            "area": area,
            "pair_mean": mean,
            "pair_mean_stderr": se,
            "intersection_probability": float(np.sum(sample.counts.interior > 0))
            / sample.counts.n_pairs,
            "hypothesis_fraction": sample.hypothesis_fraction(),
        },
    )
    rep.passed = _mc_passed(rep, volume * se, rtol, nsigma, 1e-9 * volume)
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_inequality(
    metric: ConformalMetric,
    n: int = 2000,
    seed: int = 42,
    opts: SolverOptions | None = None,
    sample: PairSample | None = None,
):
    """L(boundary)^2 against 2 pi Area(M), with the at-most-once hypothesis check.

    A violated inequality only fails the report when the sampled pairs
    look like they satisfy the hypothesis (an implementation alarm).
    """
    t0 = time.perf_counter()
    sample = sample or pair_sample(metric, n, seed, opts)
    L = metric.total_boundary_length
    area = _area(metric)
    lhs, rhs = L * L, 2.0 * np.pi * area
    frac = sample.hypothesis_fraction()
    satisfied = lhs >= rhs * (1.0 - EQUALITY_RTOL)
    alarm = not satisfied and frac < HYPOTHESIS_FRACTION
    rep = IdentityReport.make(
        "inequality",
        lhs,
        rhs,
        sample.info(),
        {
            "verdict": "satisfied" if satisfied else "violated",
            "equality": abs(lhs - rhs) <= EQUALITY_RTOL * max(lhs, rhs),
            "hypothesis_fraction": frac,
            "hypothesis_holds": frac < HYPOTHESIS_FRACTION,
            "alarm": alarm,
            "boundary_length": L,
            "area": area,
        },
    )
    rep.passed = not alarm
    rep.elapsed = time.perf_counter() - t0
    return rep


def deficit_report(
    metric: ConformalMetric,
    n: int = 2000,
    seed: int = 42,
    opts: SolverOptions | None = None,
    rtol: float = 1e-2,
    nsigma: float = 3.0,
    sample: PairSample | None = None,
):
    """L^2 - 2 pi A against a quarter of the measure of non-intersecting pairs."""
    t0 = time.perf_counter()
    sample = sample or pair_sample(metric, n, seed, opts)
    L = metric.total_boundary_length
    area = _area(metric)
    counts = sample.counts
    # kernel 1{no interior intersection}: 0 on listed pairs with interior > 0
    zero_kernel = (counts.interior == 0).astype(float)
    frac0, se = u_statistic(counts, zero_kernel, default=1.0)
    volume = (2.0 * L) ** 2
    frac = sample.hypothesis_fraction()
    details = {
        "area": area,
        "fraction_zero": frac0,
        "fraction_zero_stderr": se,
        "hypothesis_fraction": frac,
    }
    if frac >= HYPOTHESIS_FRACTION:
        details["warning"] = (
            f"{frac:.3g} of sampled pairs meet more than once; the deficit identity "
            "assumes at most one interior intersection"
        )
    rep = IdentityReport.make(
        "deficit",
        L * L - 2.0 * np.pi * area,
        0.25 * volume * frac0,
        {**sample.info(), "stderr": 0.25 * volume * se},
        details,
    )
    rep.passed = _mc_passed(rep, 0.25 * volume * se, rtol, nsigma, 1e-9 * L * L)
    rep.elapsed = time.perf_counter() - t0
    return rep


def characterize(
    metric: ConformalMetric,
    n: int = 2000,
    seed: int = 42,
    opts: SolverOptions | None = None,
    bins: int = 40,
    sample: PairSample | None = None,
):
    """Length spread and pair-intersection structure of Liouville-random geodesics."""
    t0 = time.perf_counter()
    if n < 100:
        raise ValueError("characterize needs n >= 100")
    sample = sample or pair_sample(metric, n, seed, opts)
    lengths = sample.batch.lengths.copy()
    hist = sample.counts.histogram()
    total = hist.sum()
    f0 = hist[0] / total
    f1 = hist[1] / total
    fm = hist[2:].sum() / total
    counts, edges = np.histogram(lengths, bins=bins)
    return CharacterizationReport(
        name="characterize",
        lengths=lengths,
        length_histogram=(counts, edges),
        length_mean=float(lengths.mean()),
        length_stddev=float(lengths.std(ddof=1)),
        pair_count_histogram=hist,
        fraction_zero=float(f0),
        fraction_one=float(f1),
        fraction_many=float(fm),
        scheme_info=sample.info(),
        elapsed=time.perf_counter() - t0,
    )
