"""Run configuration: an INI-style file with [metric], [solver], ... sections.

Keys are addressed as ``section.key`` (``metric.rho``, ``gamma.seed``);
command-line flags override file values.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    rho: str = "2/(1+x^2+y^2)"
    grid_n: int = 256
    tol: float = 1e-9
    max_length: float | None = None
    max_segment_length: float = 1e-2
    samples: int = 2000
    seed: int = 42
    n_s: int = 256
    n_u: int = 128
    crofton_u_rule: str = "midpoint"
    tau: str = "circle r=0.5"
    intersect_tol: float = 1e-7
    output_dir: str = "results"
    output_format: str = "both"
    plots: bool = True
    santalo_rtol: float = 5e-3
    crofton_rtol: float = 1e-2
    proposition_rtol: float = 1.5e-2
    deficit_rtol: float = 1e-2
    nsigma: float = 3.0
    extra: dict = field(default_factory=dict, compare=False)


# dotted key -> (field name, type)
KEYS = {
    "metric.rho": ("rho", str),
    "metric.grid_n": ("grid_n", int),
    "solver.tol": ("tol", float),
    "solver.max_length": ("max_length", float),
    "solver.max_segment_length": ("max_segment_length", float),
    "gamma.samples": ("samples", int),
    "gamma.seed": ("seed", int),
    "gamma.n_s": ("n_s", int),
    "gamma.n_u": ("n_u", int),
    "gamma.crofton_u_rule": ("crofton_u_rule", str),
    "crofton.tau": ("tau", str),
    "intersect.tol": ("intersect_tol", float),
    "output.dir": ("output_dir", str),
    "output.format": ("output_format", str),
    "output.plots": ("plots", bool),
    "tolerance.santalo": ("santalo_rtol", float),
    "tolerance.crofton": ("crofton_rtol", float),
    "tolerance.proposition": ("proposition_rtol", float),
    "tolerance.deficit": ("deficit_rtol", float),
    "tolerance.nsigma": ("nsigma", float),
}

_POSITIVE = {
    "grid_n", "tol", "max_length", "max_segment_length", "samples", "n_s", "n_u",
    "intersect_tol", "santalo_rtol", "crofton_rtol", "proposition_rtol", "deficit_rtol",
    "nsigma",
}


def _convert(key, kind, raw):
    text = str(raw).strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind.__name__}") from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read ``path`` (if given), apply ``overrides`` (dotted keys) and validate."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                dotted = f"{section}.{key}"
                if dotted not in KEYS:
                    raise ConfigError(f"unknown config key {dotted!r}")
                if section == "solver" and key == "max_length" and raw.strip() in ("", "auto"):
                    continue
                name, kind = KEYS[dotted]
                values[name] = _convert(dotted, kind, raw)
    for dotted, raw in (overrides or {}).items():
        if raw is None:
            continue
        if dotted not in KEYS:
            raise ConfigError(f"unknown config key {dotted!r}")
        name, kind = KEYS[dotted]
        values[name] = _convert(dotted, kind, raw)
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for f in fields(cfg):
        if f.name not in _POSITIVE:
            continue
        value = getattr(cfg, f.name)
        if value is not None and not value > 0:
            raise ConfigError(f"{f.name} must be positive, got {value}")
    if cfg.seed < 0:
        raise ConfigError("gamma.seed must be a non-negative integer")
    if cfg.output_format not in ("json", "csv", "both"):
        raise ConfigError("output.format must be json, csv or both")
    if cfg.crofton_u_rule not in ("gauss", "midpoint"):
        raise ConfigError("gamma.crofton_u_rule must be gauss or midpoint")
    parse_tau(cfg.tau)


_CIRCLE = re.compile(
    r"^\s*circle\s+r\s*=\s*([0-9.eE+-]+)(?:\s+n\s*=\s*(\d+))?"
    r"(?:\s+center\s*=\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+))?\s*$"
)


def circle_polyline(radius: float, n: int = 2048, center=(0.0, 0.0)) -> np.ndarray:
    """Closed regular n-gon inscribed in a circle (first vertex repeated at the end)."""
    a = np.arange(n) * (2.0 * np.pi / n)
    pts = np.column_stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)])
    return np.vstack([pts, pts[:1]])


def parse_tau(text: str) -> np.ndarray:
    """Test curve for Crofton runs.

    ``circle r=<radius> [n=<vertices>] [center=<x>,<y>]`` or an inline
    polyline ``x0,y0; x1,y1; ...``.
    """
    m = _CIRCLE.match(text)
    try:
        if m:
            radius = float(m.group(1))
            n = int(m.group(2)) if m.group(2) else 2048
            center = (float(m.group(3)), float(m.group(4))) if m.group(3) else (0.0, 0.0)
            if radius <= 0 or n < 3:
                raise ConfigError("crofton.tau circle needs r > 0 and n >= 3")
            pts = circle_polyline(radius, n, center)
        else:
            pts = np.array(
                [[float(v) for v in item.split(",")] for item in text.split(";") if item.strip()]
            )
    except ValueError:
        raise ConfigError(f"cannot parse crofton.tau {text!r}") from None
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ConfigError(f"crofton.tau needs at least two x,y vertices, got {text!r}")
    if np.any(np.hypot(pts[:, 0], pts[:, 1]) > 1.0 + 1e-12):
        raise ConfigError("crofton.tau must lie in the closed unit disc")
    return pts


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    out = replace(cfg, **kw)
    validate(out)
    return out
