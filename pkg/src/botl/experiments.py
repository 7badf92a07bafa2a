"""Monte Carlo harness and the five figure-preset campaigns.

Each preset aggregates seeded independent trials into a ResultTable that
serializes to CSV with a ``# meta:`` header block.  Aggregation is
keyed by (sweep index, trial index), so tables are byte-identical for a
given master seed regardless of thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import __version__
from .clustering import (
    ClusterSettings,
    cluster_by_bearing,
    cluster_by_polarization,
    clustering_error,
    truth_matrix,
)
from .errors import BotlError, InvalidInputError
from .estimators import (
    BearingStream,
    crlb_paper,
    crlb_position,
    nls_localize,
    ov_localize,
    tls_localize,
)
from .measurement import NoiseModel, generate_observations
from .rng import substream
from .scenario import ReceiverTrack, TargetSet, TrajectoryPreset, generate_track

DEFAULT_SEED = 1729
DEFAULT_TRIALS = 500
DEFAULT_SIGMA_BEARING = np.deg2rad(2.0)

# Two-target polarization assignment: gamma and eta both separated by
# 40 degrees, as in the noise-sweep scenario description.
TWO_TARGET_GAMMA = np.deg2rad([30.0, 70.0])
TWO_TARGET_ETA = np.deg2rad([-20.0, 20.0])

PRESETS = (
    "y-sweep",
    "x-sweep",
    "estimator-comparison",
    "orientation-bearing",
    "orientation-polarization",
    "noise-sweep",
)


def canonical_track(samples: int = 100) -> ReceiverTrack:
    """Linear track from (0, 0) to (30 km, 0)."""
    return generate_track(TrajectoryPreset(
        kind="linear", samples=samples, start=(0.0, 0.0), end=(30000.0, 0.0)
    ))


def derived_seed(master: int, *idx: int) -> int:
    """64-bit substream seed from the master seed and structural indices."""
    seq = np.random.SeedSequence([master & 0xFFFFFFFFFFFFFFFF, *idx])
    return int(seq.generate_state(1, np.uint64)[0])


def rmse(estimates, truth) -> float:
    """Root mean squared position error over repetitions, in meters."""
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    if estimates.size == 0:
        raise InvalidInputError("rmse of an empty estimate list is undefined")
    truth = np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean(np.sum((estimates - truth) ** 2, axis=1))))


def bootstrap_se(values, seed: int, n_boot: int = 1000, root: bool = False) -> float:
    """Standard error of the mean (or root-mean) via seeded resampling."""
    values = np.asarray(values, dtype=float)
    m = values.size
    if m < 2:
        return float("nan")
    rng = substream(seed, 0xB007)
    idx = rng.integers(0, m, size=(n_boot, m))
    stats = values[idx].mean(axis=1)
    if root:
        stats = np.sqrt(stats)
    return float(stats.std(ddof=1))


@dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    sweep: tuple
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    sigma_bearing: float = DEFAULT_SIGMA_BEARING
    sigma_polarization: Optional[float] = None  # None: tied to sigma_bearing
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if not self.sweep:
            raise InvalidInputError("sweep must be nonempty")
        if self.preset not in PRESETS:
            raise InvalidInputError(f"unknown preset {self.preset!r}")


@dataclass
class ResultTable:
    meta: dict
    columns: list
    rows: list
    per_trial_columns: list = field(default_factory=list)
    per_trial_rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_csv(self, stream) -> None:
        for key, value in self.meta.items():
            stream.write(f"# meta: {key}={value}\n")
        stream.write(",".join(self.columns) + "\n")
        for row in self.rows:
            stream.write(",".join(_fmt(v) for v in row) + "\n")

    def per_trial_to_csv(self, stream) -> None:
        stream.write(",".join(self.per_trial_columns) + "\n")
        for row in self.per_trial_rows:
            stream.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _run_trials(fn: Callable[[int], dict], n: int, threads: int) -> list:
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _matched_sq_errors(estimates, true_positions) -> np.ndarray:
    """Squared errors after the best cluster-to-target matching."""
    est = np.array([e.position for e in estimates])
    d2 = np.sum((est[:, None, :] - true_positions[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(d2)
    return d2[rows, cols]


def _single_target_trial(track, target, spec, sweep_idx, trial, methods):
    sigma_p = (spec.sigma_polarization
               if spec.sigma_polarization is not None else None)
    sigma_b = target["sigma"]
    noise = NoiseModel(
        sigma_bearing=sigma_b,
        sigma_polarization=sigma_p if sigma_p is not None else sigma_b,
        seed=derived_seed(spec.seed, sweep_idx),
    )
    targets = TargetSet(
        np.array([target["pos"]]),
        np.array([np.deg2rad(50.0)]),
        np.array([0.0]),
    )
    frames = generate_observations(track, targets, noise, trial)
    stream = BearingStream(
        track.positions, np.array([f.theta_hat[0] for f in frames])
    )
    rec = {"failed": 0}
    solvers = {"nls": nls_localize, "ov": ov_localize, "tls": tls_localize}
    for name in methods:
        try:
            est = solvers[name](stream)
            rec[f"sq_{name}"] = float(np.sum((est.position - target["pos"]) ** 2))
            if name == "nls":
                rec["iterations"] = est.iterations
        except BotlError:
            rec["failed"] = 1
            return rec
    return rec


def _aggregate_single(spec, track, points, methods, threads, extra_cols=()):
    columns = list(extra_cols)
    for name in methods:
        columns += [f"rmse_{name}_m", f"rmse_{name}_se_m"]
    columns += ["crlb_position_m", "crlb_paper", "trials", "mean_nls_iterations",
                "failures"]
    rows = []
    pt_cols = ["sweep_index", "trial"] + [f"sq_{m}" for m in methods] + ["failed"]
    pt_rows = []
    for sweep_idx, point in enumerate(points):
        recs = _run_trials(
            lambda i: _single_target_trial(track, point, spec, sweep_idx, i, methods),
            spec.trials, threads,
        )
        ok = [r for r in recs if not r["failed"]]
        row = list(point.get("extra", ()))
        for name in methods:
            sq = np.array([r[f"sq_{name}"] for r in ok])
            row.append(np.sqrt(sq.mean()) if sq.size else np.nan)
            row.append(bootstrap_se(sq, derived_seed(spec.seed, sweep_idx, 1),
                                    root=True))
        row.append(crlb_position(track.positions, point["pos"], point["sigma"])
                   if point["sigma"] > 0 else 0.0)
        row.append(crlb_paper(track.positions, point["pos"], point["sigma"]))
        row.append(len(ok))
        iters = [r["iterations"] for r in ok if "iterations" in r]
        row.append(float(np.mean(iters)) if iters else np.nan)
        row.append(len(recs) - len(ok))
        rows.append(row)
        for i, r in enumerate(recs):
            pt_rows.append([sweep_idx, i]
                           + [r.get(f"sq_{m}", np.nan) for m in methods]
                           + [r["failed"]])
    return columns, rows, pt_cols, pt_rows


def _meta(spec, **extra) -> dict:
    meta = {
        "preset": spec.preset,
        "version": __version__,
        "seed": spec.seed,
        "trials": spec.trials,
        "sigma_bearing_rad": _fmt(spec.sigma_bearing),
        "sigma_polarization_rad": _fmt(
            spec.sigma_bearing if spec.sigma_polarization is None
            else spec.sigma_polarization),
    }
    meta.update(extra)
    return meta


def _two_target_trial(spec, track, targets, sweep_idx, trial, sigma, algorithms):
    noise = NoiseModel(
        sigma_bearing=sigma,
        sigma_polarization=(spec.sigma_polarization
                            if spec.sigma_polarization is not None else sigma),
        seed=derived_seed(spec.seed, sweep_idx),
    )
    frames = generate_observations(track, targets, noise, trial)
    truth = truth_matrix(frames)
    rec = {"failed": 0}
    for name in algorithms:
        settings = ClusterSettings(seed=derived_seed(spec.seed, sweep_idx, trial, 2))
        try:
            if name == "bearing":
                assigned, estimates = cluster_by_bearing(frames, track, settings)
            else:
                assigned, estimates = cluster_by_polarization(frames, track, settings)
            rec[f"cluster_err_{name}"] = clustering_error(assigned, truth)
            rec[f"sq_{name}"] = float(
                _matched_sq_errors(estimates, targets.positions).mean()
            )
        except BotlError:
            rec["failed"] = 1
            return rec
    return rec


def run_monte_carlo(spec: ExperimentSpec, threads: int = 1) -> ResultTable:
    """Run a preset campaign and return its aggregated table."""
    if spec.preset == "y-sweep":
        return _run_y_sweep(spec, threads)
    if spec.preset == "x-sweep":
        return _run_x_sweep(spec, threads)
    if spec.preset == "estimator-comparison":
        return _run_estimator_comparison(spec, threads)
    if spec.preset in ("orientation-bearing", "orientation-polarization"):
        return _run_orientation(spec, threads)
    if spec.preset == "noise-sweep":
        return _run_noise_sweep(spec, threads)
    raise InvalidInputError(f"unknown preset {spec.preset!r}")


def _run_y_sweep(spec, threads):
    track = canonical_track()
    points = [
        {"pos": np.array([15000.0, y]), "sigma": spec.sigma_bearing, "extra": (y,)}
        for y in spec.sweep
    ]
    cols, rows, ptc, ptr = _aggregate_single(
        spec, track, points, ("nls",), threads, extra_cols=("target_y_m",)
    )
    return ResultTable(_meta(spec, target_x_m=15000.0), cols, rows, ptc, ptr)


def _run_x_sweep(spec, threads):
    track = canonical_track()
    points = [
        {"pos": np.array([x, 15000.0]), "sigma": spec.sigma_bearing, "extra": (x,)}
        for x in spec.sweep
    ]
    cols, rows, ptc, ptr = _aggregate_single(
        spec, track, points, ("nls",), threads, extra_cols=("target_x_m",)
    )
    return ResultTable(_meta(spec, target_y_m=15000.0), cols, rows, ptc, ptr)


def _run_estimator_comparison(spec, threads):
    track = canonical_track()
    target = np.array([15000.0, 15000.0])
    points = [
        {"pos": target, "sigma": s, "extra": (s,)}
        for s in spec.sweep
    ]
    cols, rows, ptc, ptr = _aggregate_single(
        spec, track, points, ("nls", "ov", "tls"), threads,
        extra_cols=("sigma_rad",),
    )
    return ResultTable(
        _meta(spec, target_x_m=target[0], target_y_m=target[1]),
        cols, rows, ptc, ptr,
    )


def _orientation_targets(orientation_rad, center, radius) -> TargetSet:
    u = np.array([np.cos(orientation_rad), np.sin(orientation_rad)])
    positions = np.vstack([center + radius * u, center - radius * u])
    return TargetSet(positions, TWO_TARGET_GAMMA, TWO_TARGET_ETA)


def _run_orientation(spec, threads):
    algorithm = "bearing" if spec.preset == "orientation-bearing" else "polarization"
    track = canonical_track()
    center = np.asarray(spec.params.get("center", (17500.0, 15000.0)), dtype=float)
    radius = float(spec.params.get("radius", 3000.0))
    columns = ["orientation_deg", "rmse_m", "rmse_se_m",
               "clustering_error", "clustering_error_se", "trials", "failures"]
    rows, pt_rows = [], []
    for sweep_idx, deg in enumerate(spec.sweep):
        targets = _orientation_targets(np.deg2rad(deg), center, radius)
        recs = _run_trials(
            lambda i: _two_target_trial(spec, track, targets, sweep_idx, i,
                                        spec.sigma_bearing, (algorithm,)),
            spec.trials, threads,
        )
        ok = [r for r in recs if not r["failed"]]
        sq = np.array([r[f"sq_{algorithm}"] for r in ok])
        err = np.array([r[f"cluster_err_{algorithm}"] for r in ok])
        rows.append([
            deg,
            np.sqrt(sq.mean()) if sq.size else np.nan,
            bootstrap_se(sq, derived_seed(spec.seed, sweep_idx, 1), root=True),
            err.mean() if err.size else np.nan,
            bootstrap_se(err, derived_seed(spec.seed, sweep_idx, 3)),
            len(ok),
            len(recs) - len(ok),
        ])
        for i, r in enumerate(recs):
            pt_rows.append([sweep_idx, i, r.get(f"sq_{algorithm}", np.nan),
                            r.get(f"cluster_err_{algorithm}", np.nan), r["failed"]])
    meta = _meta(spec, algorithm=algorithm,
                 center_m=f"[{center[0]};{center[1]}]", radius_m=radius)
    return ResultTable(meta, columns, rows,
                       ["sweep_index", "trial", "sq_err", "cluster_err", "failed"],
                       pt_rows)


def _run_noise_sweep(spec, threads):
    track = canonical_track()
    positions = np.array([[14500.0, 15000.0], [20500.0, 15000.0]])
    targets = TargetSet(positions, TWO_TARGET_GAMMA, TWO_TARGET_ETA)
    columns = ["sigma_rad",
               "cluster_err_bearing", "cluster_err_bearing_se", "rmse_bearing_m",
               "cluster_err_polarization", "cluster_err_polarization_se",
               "rmse_polarization_m", "trials", "failures"]
    rows, pt_rows = [], []
    for sweep_idx, sigma in enumerate(spec.sweep):
        recs = _run_trials(
            lambda i: _two_target_trial(spec, track, targets, sweep_idx, i,
                                        sigma, ("bearing", "polarization")),
            spec.trials, threads,
        )
        ok = [r for r in recs if not r["failed"]]
        row = [sigma]
        for name in ("bearing", "polarization"):
            err = np.array([r[f"cluster_err_{name}"] for r in ok])
            sq = np.array([r[f"sq_{name}"] for r in ok])
            row += [
                err.mean() if err.size else np.nan,
                bootstrap_se(err, derived_seed(spec.seed, sweep_idx, 3)),
                np.sqrt(sq.mean()) if sq.size else np.nan,
            ]
        row += [len(ok), len(recs) - len(ok)]
        rows.append(row)
        for i, r in enumerate(recs):
            pt_rows.append([
                sweep_idx, i,
                r.get("cluster_err_bearing", np.nan),
                r.get("cluster_err_polarization", np.nan),
                r["failed"],
            ])
    meta = _meta(spec, target_0="[14500;15000]", target_1="[20500;15000]")
    return ResultTable(meta, columns, rows,
                       ["sweep_index", "trial", "cluster_err_bearing",
                        "cluster_err_polarization", "failed"],
                       pt_rows)


def default_spec(preset: str, trials: int = DEFAULT_TRIALS,
                 seed: int = DEFAULT_SEED, **overrides) -> ExperimentSpec:
    """Spec with the documented default sweep for a named preset."""
    sweeps = {
        "y-sweep": tuple(np.logspace(3, 5, 8)),                 # 1 km .. 100 km
        "x-sweep": tuple(np.linspace(15000.0, 40000.0, 11)),
        "estimator-comparison": tuple(np.deg2rad([0.5, 1.0, 2.0, 4.0, 8.0])),
        "orientation-bearing": tuple(float(d) for d in range(0, 180, 10)),
        "orientation-polarization": tuple(float(d) for d in range(0, 180, 10)),
        "noise-sweep": tuple(np.deg2rad([0.25, 0.5, 1.0, 2.0, 4.0])),
    }
    if preset not in sweeps:
        raise InvalidInputError(f"unknown preset {preset!r}")
    kwargs = dict(preset=preset, sweep=sweeps[preset], trials=trials, seed=seed)
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)


def preset_y_sweep(**kw) -> ResultTable:
    threads = kw.pop("threads", 1)
    return run_monte_carlo(default_spec("y-sweep", **kw), threads)


def preset_x_sweep(**kw) -> ResultTable:
    threads = kw.pop("threads", 1)
    return run_monte_carlo(default_spec("x-sweep", **kw), threads)


def preset_estimator_comparison(**kw) -> ResultTable:
    threads = kw.pop("threads", 1)
    return run_monte_carlo(default_spec("estimator-comparison", **kw), threads)


def preset_orientation_sweep(algorithm: str = "bearing", **kw) -> ResultTable:
    threads = kw.pop("threads", 1)
    return run_monte_carlo(default_spec(f"orientation-{algorithm}", **kw), threads)


def preset_noise_sweep(**kw) -> ResultTable:
    threads = kw.pop("threads", 1)
    return run_monte_carlo(default_spec("noise-sweep", **kw), threads)
