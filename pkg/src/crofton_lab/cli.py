"""Command line interface: ``crofton-lab [options] COMMAND``.

Exit status: 0 when every report meets its tolerance, 1 on a tolerance
failure, 2 for configuration or metric errors, 3 when a geodesic fails to
reach the boundary.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import verify
from .config import ConfigError, RunConfig, load_config, parse_tau
from .gamma import quadrature_scheme
from .geodesic import GeodesicError, SolverOptions, shoot, shoot_batch
from .metric import MetricError, build_metric
from .reports import (
    write_csv_rows,
    write_histogram,
    write_json,
    write_pair_histogram,
    write_path_csv,
)

log = logging.getLogger("crofton_lab")

COMMANDS = ("santalo", "crofton", "proposition", "inequality", "deficit", "characterize",
            "shoot", "all")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def solver_options(cfg: RunConfig) -> SolverOptions:
    return SolverOptions(
        tol=cfg.tol, max_length=cfg.max_length, max_segment_length=cfg.max_segment_length
    )


class Runner:
    def __init__(self, cfg: RunConfig, stdout=None):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.stdout = stdout or sys.stdout
        self.metric = build_metric(cfg.rho, cfg.grid_n)
        self.opts = solver_options(cfg)
        self._sample = None
        self.reports = []

    @property
    def sample(self):
        if self._sample is None:
            cfg = self.cfg
            log.info("shooting %d Liouville samples (seed %d)", cfg.samples, cfg.seed)
            self._sample = verify.pair_sample(
                self.metric, cfg.samples, cfg.seed, self.opts, cfg.intersect_tol
            )
        return self._sample

    def run(self, command: str, s: float = 0.0, theta: float = 0.0) -> int:
        self.out.mkdir(parents=True, exist_ok=True)
        if command == "shoot":
            return self.shoot(s, theta)
        todo = COMMANDS[:6] if command == "all" else (command,)
        for name in todo:
            rep = getattr(self, f"do_{name}")()
            self.reports.append(rep)
            self.emit(rep)
            status = "pass" if rep.passed else "FAIL"
            print(self.summary_line(rep, status), file=self.stdout)
        self.finish()
        failed = [r.name for r in self.reports if not r.passed]
        if failed:
            print(f"tolerance failure: {', '.join(failed)}", file=sys.stderr)
            return EXIT_TOLERANCE
        return EXIT_OK

    @staticmethod
    def summary_line(rep, status):
        if isinstance(rep, verify.CharacterizationReport):
            return (
                f"{rep.name:<13} {status}  length mean={rep.length_mean:.10g} "
                f"sd={rep.length_stddev:.3g}  zero={rep.fraction_zero:.6f} "
                f"one={rep.fraction_one:.6f} many={rep.fraction_many:.6f}"
            )
        return (
            f"{rep.name:<13} {status}  lhs={rep.lhs:.10g} rhs={rep.rhs:.10g} "
            f"rel_err={rep.rel_err:.3e}"
        )

    # ---- report producers

    def do_santalo(self):
        cfg = self.cfg
        scheme = quadrature_scheme(self.metric, cfg.n_s, cfg.n_u, "gauss")
        rep = verify.verify_santalo(self.metric, scheme, self.opts, rtol=cfg.santalo_rtol)
        vol = verify.verify_vol_gamma(self.metric, scheme)
        rep.details["vol_gamma_rel_err"] = vol.rel_err
        rep.passed = rep.passed and vol.passed
        return rep

    def do_crofton(self):
        cfg = self.cfg
        tau = parse_tau(cfg.tau)
        scheme = quadrature_scheme(self.metric, cfg.n_s, cfg.n_u, cfg.crofton_u_rule)
        rep = verify.verify_crofton(
            self.metric, tau, scheme, self.opts, rtol=cfg.crofton_rtol, tol=cfg.intersect_tol
        )
        rep.details["tau"] = cfg.tau
        if cfg.plots:
            from . import plotting

            pick = np.linspace(0, len(scheme) - 1, 97).astype(int)
            batch = shoot_batch(self.metric, scheme.s[pick], scheme.theta[pick], self.opts)
            plotting.plot_geodesics(batch.polylines(), self.out / "crofton.png", tau=tau,
                                    title=f"test curve: {cfg.tau}")
        return rep

    def do_proposition(self):
        cfg = self.cfg
        return verify.verify_proposition(
            self.metric, cfg.samples, cfg.seed, self.opts,
            rtol=cfg.proposition_rtol, nsigma=cfg.nsigma, sample=self.sample,
        )

    def do_inequality(self):
        cfg = self.cfg
        return verify.verify_inequality(
            self.metric, cfg.samples, cfg.seed, self.opts, sample=self.sample
        )

    def do_deficit(self):
        cfg = self.cfg
        return verify.deficit_report(
            self.metric, cfg.samples, cfg.seed, self.opts,
            rtol=cfg.deficit_rtol, nsigma=cfg.nsigma, sample=self.sample,
        )

    def do_characterize(self):
        cfg = self.cfg
        return verify.characterize(self.metric, cfg.samples, cfg.seed, self.opts,
                                   sample=self.sample)

    # ---- output

    def emit(self, rep):
        fmt = self.cfg.output_format
        if fmt in ("json", "both"):
            write_json(rep, self.out)
        if fmt in ("csv", "both"):
            write_csv_rows([rep], self.out / f"{rep.name}.csv")
        if isinstance(rep, verify.CharacterizationReport):
            counts, edges = rep.length_histogram
            write_histogram(self.out / "lengths.csv", counts, edges, "geodesics")
            write_pair_histogram(self.out / "pair_hist.csv", rep.pair_count_histogram)
            if self.cfg.plots:
                from . import plotting

                plotting.plot_length_histogram(counts, edges, self.out / "lengths.png",
                                               title=str(self.metric))
                plotting.plot_pair_histogram(rep.pair_count_histogram,
                                             self.out / "pair_hist.png", title=str(self.metric))
                plotting.plot_geodesics(self.sample.batch.polylines(),
                                        self.out / "geodesics.png", title=str(self.metric))

    def finish(self):
        if self.cfg.output_format in ("csv", "both"):
            write_csv_rows(self.reports, self.out / "reports.csv")
        identities = [r for r in self.reports if isinstance(r, verify.IdentityReport)]
        if self.cfg.plots and identities:
            from . import plotting

            plotting.plot_identity_errors(identities, self.out / "identities.png")

    def shoot(self, s: float, theta: float) -> int:
        L = self.metric.total_boundary_length
        path = shoot(self.metric, float(s) % L, theta, self.opts)
        with open(self.out / "path.csv", "w", newline="", encoding="utf-8") as fh:
            write_path_csv(fh, path)
        write_path_csv(self.stdout, path)
        if self.cfg.plots:
            from . import plotting

            plotting.plot_path(path, self.out / "path.png")
        if not path.exited:
            raise GeodesicError(
                f"shot from s={s}, theta={theta} ended with {path.status.value} "
                f"after g-length {path.length:.6g}",
                path.status,
                0,
            )
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("-c", "--config", help="INI config file ([metric], [solver], ...)")
    common.add_argument("--rho", help="conformal scale rho(x, y), overrides metric.rho")
    common.add_argument("--seed", type=int, help="overrides gamma.seed")
    common.add_argument("--samples", type=int, help="overrides gamma.samples")
    common.add_argument("-o", "--out", help="overrides output.dir")
    common.add_argument("--format", choices=("json", "csv", "both"),
                        help="overrides output.format")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    # no prefix matching: "--s" would otherwise be read as --seed/--samples
    parser = argparse.ArgumentParser(
        prog="crofton-lab",
        allow_abbrev=False,
        description="Trace geodesics of a conformal disc metric and check integral-geometric "
        "identities numerically.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=_HELP[name],
                           allow_abbrev=False)
        if name == "shoot":
            p.add_argument("--s", type=float, default=0.0, help="boundary arclength of the entry")
            p.add_argument("--theta", type=float, default=0.0,
                           help="entry angle to the inward normal, in (-pi/2, pi/2)")
    return parser


_HELP = {
    "santalo": "integral of geodesic length over Gamma vs 2 pi Area",
    "crofton": "crossing-weighted measure of geodesics meeting a curve vs 4 L(curve)",
    "proposition": "pair intersection integral vs 8 pi Area",
    "inequality": "L^2 >= 2 pi Area with the at-most-once hypothesis check",
    "deficit": "L^2 - 2 pi Area vs quarter measure of non-intersecting pairs",
    "characterize": "length spread and pair-intersection fractions",
    "shoot": "trace one geodesic and print it as CSV (t, x, y)",
    "all": "run the six identity reports",
}


def main(argv=None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if vars(args).get("verbose") else logging.WARNING,
                        format="%(levelname)s %(message)s")
    opt = vars(args)
    overrides = {
        "metric.rho": opt.get("rho"),
        "gamma.seed": opt.get("seed"),
        "gamma.samples": opt.get("samples"),
        "output.dir": opt.get("out"),
        "output.format": opt.get("format"),
        "output.plots": "false" if opt.get("no_plots") else None,
    }
    try:
        cfg = load_config(opt.get("config"), overrides)
        runner = Runner(cfg, stdout=stdout)
        if args.command == "shoot" and not abs(opt.get("theta", 0.0)) < np.pi / 2:
            raise ConfigError("--theta must lie strictly inside (-pi/2, pi/2)")
        return runner.run(args.command, opt.get("s", 0.0), opt.get("theta", 0.0))
    except (ConfigError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeodesicError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
