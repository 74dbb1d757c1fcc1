"""JSON and CSV emission for reports, histograms and paths."""

from __future__ import annotations

import csv
import datetime as _dt
import json
from pathlib import Path

import numpy as np

from . import __version__

CSV_FIELDS = (
    "name", "lhs", "rhs", "abs_err", "rel_err", "passed", "kind", "n", "seed", "n_s", "n_u",
    "stderr",
)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def report_json(report) -> str:
    """Report body plus a separate metadata block holding the run-dependent fields."""
    payload = {
        "report": _plain(report.to_dict()),
        "metadata": {
            "elapsed_seconds": report.elapsed,
            "written_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "version": __version__,
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_json(report, out_dir: Path) -> Path:
    path = Path(out_dir) / f"{report.name}.json"
    path.write_text(report_json(report), encoding="utf-8")
    return path


def csv_row(report) -> dict:
    d = report.to_dict()
    info = d.get("scheme_info", {})
    row = {k: d.get(k, "") for k in CSV_FIELDS}
    for k in ("kind", "n", "seed", "n_s", "n_u", "stderr"):
        row[k] = info.get(k, "")
    if "lhs" not in d:  # characterization report
        row.update(lhs=d["fraction_one"], rhs="", abs_err="", rel_err="")
    return row


def write_csv_rows(reports, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rep in reports:
            writer.writerow({k: _fmt(v) for k, v in csv_row(rep).items()})
    return path


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_histogram(path: Path, counts, edges, value_name: str = "count") -> Path:
    """One row per bin: left edge, right edge, count."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", value_name])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    return path


def write_pair_histogram(path: Path, hist) -> Path:
    """Unordered pair counts by number of interior intersection points."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["interior_intersections", "pairs", "fraction"])
        total = int(np.sum(hist))
        for k, c in enumerate(hist):
            writer.writerow([k, int(c), repr(float(c) / total)])
    return path


def path_rows(path) -> list[tuple[float, float, float]]:
    return [(float(t), float(x), float(y)) for t, (x, y) in zip(path.times, path.vertices)]


def write_path_csv(fh, path) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "x", "y"])
    for t, x, y in path_rows(path):
        writer.writerow([repr(t), repr(x), repr(y)])
