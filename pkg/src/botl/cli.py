"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 numerical or degeneracy
failure.  Data goes to the output file (or stdout); diagnostics go to
stderr.  Flags take kilometers and degrees; everything internal is
meters and radians.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import (
    ClusterSettings,
    cluster_by_bearing,
    cluster_by_polarization,
    truth_matrix,
)
from .errors import BotlError
from .estimators import (
    BearingStream,
    crlb_paper,
    crlb_position,
    nls_localize,
    ov_localize,
    tls_localize,
)
from .experiments import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    PRESETS,
    default_spec,
    run_monte_carlo,
)
from .measurement import NoiseModel, generate_observations, observations_to_csv
from .scenario import load_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    env = os.environ.get("BOTL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            print(f"warning: ignoring non-integer BOTL_SEED={env!r}",
                  file=sys.stderr)
    return DEFAULT_SEED


@contextmanager
def _out_stream(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_common(sp, trials=False):
    sp.add_argument("--seed", type=int, default=None,
                    help="master seed (default: BOTL_SEED env var or "
                         f"{DEFAULT_SEED}; fixed, never time-derived)")
    sp.add_argument("-o", "--output", default=None,
                    help="output CSV path (default: stdout)")
    if trials:
        sp.add_argument("--trials", type=int, default=1,
                        help="number of independent trials (default 1)")


def build_parser() -> _Parser:
    parser = _Parser(prog="botl",
                     description="Bearing-only multi-target localization toolkit")
    parser.add_argument("--version", action="version", version=f"botl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[], help="scenario -> observations CSV")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--sigma-bearing-deg", type=float, default=2.0,
                   help="bearing noise std [degrees] (default 2)")
    p.add_argument("--sigma-pol-deg", type=float, default=None,
                   help="polarization noise std [degrees] "
                        "(default: same as bearing)")
    p.add_argument("--reveal-labels", action="store_true",
                   help="emit the hidden truth_label column")
    _add_common(p, trials=True)

    p = sub.add_parser("localize", help="bearing-stream CSV -> position estimate")
    p.add_argument("--method", choices=("nls", "ov", "tls"), default="nls",
                   help="estimator to run (default nls)")
    p.add_argument("--input", required=True,
                   help="CSV with columns x_r_m, y_r_m, theta_rad")
    p.add_argument("-o", "--output", default=None,
                   help="output CSV path (default: stdout)")

    p = sub.add_parser("cluster",
                       help="scenario -> label assignments + position estimates")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--algorithm", choices=("bearing", "polarization"),
                   default="bearing", help="association algorithm (default bearing)")
    p.add_argument("--sigma-bearing-deg", type=float, default=2.0,
                   help="bearing noise std [degrees] (default 2)")
    p.add_argument("--sigma-pol-deg", type=float, default=None,
                   help="polarization noise std [degrees] "
                        "(default: same as bearing)")
    p.add_argument("--estimates-out", default=None,
                   help="write per-target estimates CSV here "
                        "(default: <output>_estimates.csv, or appended to stdout)")
    _add_common(p)

    p = sub.add_parser("experiment", help="run a figure-preset Monte Carlo campaign")
    p.add_argument("preset", choices=PRESETS, help="campaign preset")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads, 0 = auto (default 1)")
    p.add_argument("--per-trial", default=None,
                   help="also write a long-format per-trial CSV here")
    p.add_argument("--figure", nargs="?", const="", default=None,
                   help="render a PNG figure (optional path; default derives "
                        "from the output path)")
    p.add_argument("--sigma-bearing-deg", type=float, default=2.0,
                   help="bearing noise std [degrees] where the preset holds it "
                        "fixed (default 2)")
    _add_common(p)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS,
                   help=f"Monte Carlo trials per sweep point (default {DEFAULT_TRIALS})")

    p = sub.add_parser("crlb", help="scenario -> both lower bounds per target")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    p.add_argument("--sigma-deg", type=float, default=2.0,
                   help="bearing noise std [degrees] (default 2)")
    p.add_argument("-o", "--output", default=None,
                   help="output CSV path (default: stdout)")
    return parser


def _cmd_simulate(args) -> int:
    track, targets = load_scenario(args.scenario)
    sigma_b = np.deg2rad(args.sigma_bearing_deg)
    sigma_p = sigma_b if args.sigma_pol_deg is None else np.deg2rad(args.sigma_pol_deg)
    noise = NoiseModel(sigma_b, sigma_p, seed=args.seed)
    runs = [(t, generate_observations(track, targets, noise, trial=t))
            for t in range(args.trials)]
    with _out_stream(args.output) as fh:
        observations_to_csv(runs, fh, reveal_labels=args.reveal_labels)
    return EXIT_OK


def _read_bearing_csv(path) -> BearingStream:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        receivers, theta = [], []
        for row in reader:
            try:
                receivers.append([float(row["x_r_m"]), float(row["y_r_m"])])
                theta.append(float(row["theta_rad"]))
            except (KeyError, ValueError) as exc:
                raise BotlError(
                    f"bad bearing CSV row (need x_r_m,y_r_m,theta_rad): {exc}"
                ) from exc
    return BearingStream(np.array(receivers), np.array(theta))


def _cmd_localize(args) -> int:
    stream = _read_bearing_csv(args.input)
    solver = {"nls": nls_localize, "ov": ov_localize, "tls": tls_localize}
    est = solver[args.method](stream)
    with _out_stream(args.output) as fh:
        fh.write("x_m,y_m,final_cost,iterations,converged\n")
        fh.write(f"{est.position[0]:.17g},{est.position[1]:.17g},"
                 f"{est.final_cost:.17g},{est.iterations},{int(est.converged)}\n")
    return EXIT_OK


def _write_labels(fh, assigned, truth) -> None:
    fh.write("trial,step,slot,assigned_target,true_target\n")
    for step in range(assigned.shape[0]):
        for slot in range(assigned.shape[1]):
            fh.write(f"0,{step},{slot},{assigned[step, slot]},{truth[step, slot]}\n")


def _write_estimates(fh, estimates) -> None:
    fh.write("target,x_m,y_m,final_cost,iterations,converged\n")
    for ell, est in enumerate(estimates):
        fh.write(f"{ell},{est.position[0]:.17g},{est.position[1]:.17g},"
                 f"{est.final_cost:.17g},{est.iterations},{int(est.converged)}\n")


def _cmd_cluster(args) -> int:
    track, targets = load_scenario(args.scenario)
    sigma_b = np.deg2rad(args.sigma_bearing_deg)
    sigma_p = sigma_b if args.sigma_pol_deg is None else np.deg2rad(args.sigma_pol_deg)
    noise = NoiseModel(sigma_b, sigma_p, seed=args.seed)
    frames = generate_observations(track, targets, noise, trial=0)
    settings = ClusterSettings(seed=args.seed)
    if args.algorithm == "bearing":
        assigned, estimates = cluster_by_bearing(frames, track, settings)
    else:
        assigned, estimates = cluster_by_polarization(frames, track, settings)
    truth = truth_matrix(frames)

    if args.output is None or args.output == "-":
        _write_labels(sys.stdout, assigned, truth)
        sys.stdout.write("\n")
        _write_estimates(sys.stdout, estimates)
    else:
        with open(args.output, "w", newline="") as fh:
            _write_labels(fh, assigned, truth)
        est_path = args.estimates_out or (
            str(Path(args.output).with_suffix("")) + "_estimates.csv")
        with open(est_path, "w", newline="") as fh:
            _write_estimates(fh, estimates)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    spec = default_spec(args.preset, trials=args.trials, seed=args.seed,
                        sigma_bearing=np.deg2rad(args.sigma_bearing_deg))
    table = run_monte_carlo(spec, threads=args.threads)
    with _out_stream(args.output) as fh:
        table.to_csv(fh)
    if args.per_trial:
        with open(args.per_trial, "w", newline="") as fh:
            table.per_trial_to_csv(fh)
    if args.figure is not None:
        from .report import render_figure

        if args.figure:
            fig_path = args.figure
        elif args.output and args.output != "-":
            fig_path = str(Path(args.output).with_suffix(".png"))
        else:
            fig_path = f"{args.preset}.png"
        render_figure(table, fig_path)
        print(f"figure written to {fig_path}", file=sys.stderr)
    return EXIT_OK


def _cmd_crlb(args) -> int:
    track, targets = load_scenario(args.scenario)
    sigma = np.deg2rad(args.sigma_deg)
    with _out_stream(args.output) as fh:
        fh.write("target,crlb_position_m,crlb_paper\n")
        for ell in range(targets.n_targets):
            pos = targets.positions[ell]
            fh.write(f"{ell},{crlb_position(track.positions, pos, sigma):.17g},"
                     f"{crlb_paper(track.positions, pos, sigma):.17g}\n")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "localize": _cmd_localize,
    "cluster": _cmd_cluster,
    "experiment": _cmd_experiment,
    "crlb": _cmd_crlb,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return _COMMANDS[args.command](args)
    except BotlError as exc:
        print(f"botl {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"botl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
