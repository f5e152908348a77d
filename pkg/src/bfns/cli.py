"""Command-line entry point.

Subcommands: simulate, energy-audit, stability-sweep, kneser-sweep,
attractor, export.  Exit codes: 0 success, 1 usage/config/io problems,
2 numerical failure (blow-up, every sweep member failing, or an audit
exceeding its tolerance).  Report subcommands write a CSV whose first line
embeds the resolved config as a comment, plus a PNG figure next to it
unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import attractor as at
from . import config as cf
from . import energy, figures, io, kneser, stability
from .dynamics import SimConfig
from .errors import (
    BfnsError,
    BlowUpError,
    ConfigError,
    ParameterError,
    TrajectoryFormatError,
)
from .integrate import simulate
from .util import effective_jobs


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract here
    reserves 2 for numerical failures, so remap usage problems to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _say(msg):
    print(msg)


def _complain(msg):
    print(f"bfns: {msg}", file=sys.stderr)


def _figure_path(out):
    return os.path.splitext(out)[0] + ".png"


def _config_comment(doc):
    return json.dumps(doc, sort_keys=True)


def _load(path):
    doc = cf.load_config(path)
    return doc, cf.build_sim_config(doc), cf.build_initial(doc)


def cmd_simulate(args):
    doc, cfg, u0 = _load(args.config)
    try:
        traj = simulate(u0, cfg)
    except BlowUpError as exc:
        partial_path = args.out + ".partial"
        if exc.partial is not None and exc.partial.states:
            io.write_trajectory(exc.partial, partial_path)
            _complain(f"blow-up at t={exc.time:g}; partial trajectory in {partial_path}")
        else:
            _complain(f"blow-up at t={exc.time:g} before any snapshot was stored")
        return 2
    io.write_trajectory(traj, args.out)
    _say(f"wrote {len(traj.states)} snapshots to {args.out}")
    return 0


def _cfg_for_file(traj, doc):
    """Run parameters for a trajectory read back from disk: header values
    plus the snapshot time grid, with forcing and quadrature grid supplied
    by an optional config document (zero forcing otherwise)."""
    p = traj.params
    times = traj.snap_times
    if len(times) < 2:
        raise ParameterError("need at least two snapshots to audit a file")
    forcing = None
    grid_m = 0
    if doc is not None:
        disc = doc["discretization"]
        if disc["d"] != p["d"] or disc["k_modes"] != p["K"]:
            raise ConfigError("config dimensions do not match the trajectory header")
        forcing = cf.build_forcing(doc)
        grid_m = disc.get("grid_m", 0)
    return SimConfig(
        d=p["d"], K=p["K"], mu=p["mu"], alpha=p["alpha"], beta=p["beta"],
        n_cut=p["n_cut"], dt=float(times[1] - times[0]),
        t_end=float(times[-1]), tau=float(times[0]), grid_m=grid_m,
        forcing=forcing,
    )


def _ledger_from_file(path, config_path):
    doc = cf.load_config(config_path) if config_path else None
    traj = io.read_trajectory(path)
    cfg = _cfg_for_file(traj, doc)
    full = energy.rebuild_diagnostics(traj, cfg)
    return doc, energy.build_ledger(full)


def cmd_energy_audit(args):
    doc, ledger = _ledger_from_file(args.trajectory, args.config)
    figure_ok = not args.no_figures
    if energy.equality_regime(ledger.beta, ledger.n_cut):
        halved = None
        if args.halved:
            halved = _ledger_from_file(args.halved, args.config)[1]
        res = energy.audit_energy_equality(ledger, halved)
        _say(f"mode: equality; max drift {res['max_drift']:.6e}")
        if halved is not None:
            _say(f"drift ratio {res['drift_ratio']:.3f} "
                 f"(order estimate {res['order_estimate']:.2f})")
        bad = res["max_drift"] > args.tolerance
    else:
        res = energy.audit_energy_inequality(ledger)
        _say(f"mode: inequality; max violation {res['max_violation']:.6e}")
        bad = False
    jm = energy.monotone_j(ledger)
    _say(f"largest J increment per step {jm['max_increment']:.3e}")
    if args.csv:
        io.export_csv(args.csv, energy.LEDGER_CSV_HEADER, ledger.csv_rows(),
                      _config_comment(doc) if doc else None)
        if figure_ok:
            figures.ledger_figure(ledger, _figure_path(args.csv))
    if bad:
        _complain(f"equality drift exceeds tolerance {args.tolerance:g}")
        return 2
    return 0


def cmd_export(args):
    doc, ledger = _ledger_from_file(args.trajectory, args.config)
    io.export_csv(args.out, energy.LEDGER_CSV_HEADER, ledger.csv_rows(),
                  _config_comment(doc) if doc else None)
    if not args.no_figures:
        figures.ledger_figure(ledger, _figure_path(args.out))
    _say(f"wrote ledger with {len(ledger.t)} rows to {args.out}")
    return 0


def cmd_stability(args):
    doc, cfg, u0 = _load(args.config)
    block = cf.experiment_block(doc, "stability")
    report = stability.continuity_sweep(
        cfg, u0,
        block.get("eps_grid", []), block.get("delta_grid", []),
        block.get("eta_grid", []),
        direction_seed=block.get("direction_seed", 0),
        include_mixed=block.get("include_mixed", True),
        jobs=effective_jobs(args.jobs),
    )
    rows = report["rows"]
    io.export_csv(args.out, stability.STABILITY_CSV_HEADER,
                  stability.csv_rows(rows), _config_comment(doc))
    if not args.no_figures:
        figures.stability_figure(rows, _figure_path(args.out))
    _say(f"{len(rows)} rows ({report['n_failed']} failed); "
         f"max ratio {report['max_ratio']:.6e}; rate {report['gamma_hat']:.4f}")
    if report["n_failed"] == len(rows):
        _complain("every sweep member blew up")
        return 2
    return 0


def cmd_kneser(args):
    doc, cfg, u0 = _load(args.config)
    block = cf.experiment_block(doc, "kneser")
    try:
        result = kneser.endpoint_sweep(
            cfg, u0,
            levels=block.get("levels", 3),
            base_cells=block.get("base_cells", 4),
            t_star=block.get("t_star"),
            jobs=effective_jobs(args.jobs),
        )
    except BlowUpError as exc:
        _complain(f"a switched run blew up at t={exc.time:g}")
        return 2
    io.export_csv(args.out, kneser.KNESER_CSV_HEADER,
                  kneser.csv_rows(result, cfg), _config_comment(doc))
    if not args.no_figures:
        figures.kneser_figure(result, _figure_path(args.out))
    gaps = ", ".join(f"{g:.3e}" for g in result["level_gaps"])
    ratios = ", ".join(f"{r:.3f}" for r in result["ratios"])
    _say(f"level gaps [{gaps}]; refinement ratios [{ratios}]")
    return 0


def cmd_attractor(args):
    doc, cfg, u0 = _load(args.config)
    block = cf.experiment_block(doc, "attractor")
    jobs = effective_jobs(args.jobs)
    if block["n_snapshots"] > 1 and "t_sample" not in block:
        raise ConfigError("attractor block needs t_sample when n_snapshots > 1")
    seeds = at.seed_set(cfg, block["n_seeds"], block.get("seed", 0),
                        block.get("seed_h_norm", 1.0))
    est = at.estimate_attractor(
        seeds, cfg, block["t_transient"], block.get("t_sample", 0.0),
        block["n_snapshots"], jobs=jobs,
    )
    if not est["cloud"]:
        _complain("every seed blew up; no cloud to measure against")
        return 2
    n_blown = sum(1 for s in est["per_seed"] if s["blew_up"])
    _say(f"cloud of {len(est['cloud'])} states from {len(seeds) - n_blown} seeds; "
         f"radius^2 {est['radius_sq']:.6e}; "
         f"post-transient max |u|^2 {est['post_transient_max_h2']:.6e}")
    probes = at.seed_set(cfg, block.get("probe_count", 3),
                         block.get("probe_seed", block.get("seed", 0) + 1000),
                         block.get("probe_h_norm", 1.0))
    series = at.distance_decay(probes, est["cloud"], cfg, block["t_grid"], jobs=jobs)
    io.export_csv(args.out, at.ATTRACTOR_CSV_HEADER,
                  at.decay_csv_rows(series), _config_comment(doc))
    if not args.no_figures:
        figures.decay_figure(series, _figure_path(args.out))
    finite = series["dist_h"][np.isfinite(series["dist_h"])]
    if finite.size:
        _say(f"dist_H first {finite[0]:.6e} last {finite[-1]:.6e}")
    if series["n_blown"] == len(probes):
        _complain("every probe member blew up")
        return 2
    return 0


def build_parser():
    parser = _Parser(prog="bfns",
                     description="Spectral solver and experiment harness for "
                                 "damped incompressible flow with a norm cutoff")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one trajectory and store it")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("energy-audit", help="audit the energy identity of a stored run")
    p.add_argument("trajectory")
    p.add_argument("--config", help="config supplying forcing and quadrature grid")
    p.add_argument("--halved", help="companion run at half the step, for the drift ratio")
    p.add_argument("--csv", help="also export the ledger")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_energy_audit)

    p = sub.add_parser("export", help="export a stored run's ledger as CSV")
    p.add_argument("trajectory")
    p.add_argument("--config", help="config supplying forcing and quadrature grid")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_export)

    for name, func in (("stability-sweep", cmd_stability),
                       ("kneser-sweep", cmd_kneser),
                       ("attractor", cmd_attractor)):
        p = sub.add_parser(name, help=f"run the {name.split('-')[0]} experiment")
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--no-figures", action="store_true")
        p.set_defaults(func=func)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except BlowUpError as exc:
        _complain(f"numerical blow-up at t={exc.time}")
        return 2
    except (ConfigError, ParameterError, TrajectoryFormatError) as exc:
        _complain(str(exc))
        return 1
    except BfnsError as exc:
        _complain(str(exc))
        return 1
    except OSError as exc:
        _complain(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
