"""Numerical integral geometry of conformal metrics on the unit disc."""

__version__ = "0.1.0"

from .expr import DomainError, ParseError, UnknownIdentifierError, differentiate, evaluate, parse
from .gamma import GammaScheme, quadrature_scheme, sample_liouville
from .geodesic import (
    GeodesicError,
    GeodesicPath,
    SolverOptions,
    Status,
    exit_parameters,
    shoot,
    shoot_batch,
)
from .intersect import IntersectionCount, count_all_pairs, count_intersections
from .metric import (
    ConformalMetric,
    area,
    boundary_length,
    boundary_point,
    build_metric,
    geodesic_rhs,
)
from .verify import (
    CharacterizationReport,
    IdentityReport,
    characterize,
    deficit_report,
    verify_crofton,
    verify_inequality,
    verify_proposition,
    verify_santalo,
    verify_vol_gamma,
)

__all__ = [
    "DomainError",
    "ParseError",
    "UnknownIdentifierError",
    "differentiate",
    "evaluate",
    "parse",
    "GammaScheme",
    "quadrature_scheme",
    "sample_liouville",
    "GeodesicError",
    "GeodesicPath",
    "SolverOptions",
    "Status",
    "exit_parameters",
    "shoot",
    "shoot_batch",
    "IntersectionCount",
    "count_all_pairs",
    "count_intersections",
    "ConformalMetric",
    "area",
    "boundary_length",
    "boundary_point",
    "build_metric",
    "geodesic_rhs",
    "CharacterizationReport",
    "IdentityReport",
    "characterize",
    "deficit_report",
    "verify_crofton",
    "verify_inequality",
    "verify_proposition",
    "verify_santalo",
    "verify_vol_gamma",
]
