"""Scenario definition: receiver tracks, target sets, observability checks.

All quantities are in meters and radians.  Kilometer/degree conversion
happens only at the CLI boundary.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, InvalidPresetError, ScenarioFileError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COLINEARITY_RTOL = 1e-9


def _frozen_array(values, shape_hint: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{shape_hint} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ReceiverTrack:
    """Ordered receiver positions over time steps 1..T (meters)."""

    positions: np.ndarray  # (T, 2)

    def __post_init__(self):
        arr = _frozen_array(self.positions, "track positions")
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InvalidInputError("track positions must be a (T, 2) array")
        if arr.shape[0] < 2:
            raise InvalidInputError("track needs at least two positions")
        # Assumption 1 (two distinct positions) is reported by
        # check_observability rather than enforced here, so degenerate
        # tracks can still be diagnosed.
        object.__setattr__(self, "positions", arr)

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class TargetSet:
    """Static planar emitters with per-target polarization parameters."""

    positions: np.ndarray  # (N, 2) meters
    gamma: np.ndarray      # (N,) radians, in [0, pi/2]
    eta: np.ndarray        # (N,) radians, in (-pi, pi]

    def __post_init__(self):
        pos = _frozen_array(self.positions, "target positions")
        gamma = _frozen_array(np.atleast_1d(self.gamma), "gamma")
        eta = _frozen_array(np.atleast_1d(self.eta), "eta")
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise InvalidInputError("target positions must be a (N, 2) array, N >= 1")
        n = pos.shape[0]
        if gamma.shape != (n,) or eta.shape != (n,):
            raise InvalidInputError("gamma/eta must have one entry per target")
        if np.any(gamma < 0) or np.any(gamma > np.pi / 2):
            raise InvalidInputError("gamma must lie in [0, pi/2]")
        if np.any(eta <= -np.pi) or np.any(eta > np.pi):
            raise InvalidInputError("eta must lie in (-pi, pi]")
        for i in range(n):
            for j in range(i + 1, n):
                if np.array_equal(pos[i], pos[j]):
                    raise InvalidInputError(f"targets {i} and {j} coincide")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "eta", eta)

    @property
    def n_targets(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class TrajectoryPreset:
    """Parametric receiver path: straight segment or circular arc."""

    kind: str                      # "linear" or "circular"
    samples: int
    start: Optional[tuple] = None  # linear
    end: Optional[tuple] = None
    center: Optional[tuple] = None  # circular
    radius: float = 0.0
    arc_start: float = 0.0         # radians
    arc_stop: float = 0.0


def generate_track(preset: TrajectoryPreset) -> ReceiverTrack:
    """Sample `preset.samples` evenly spaced positions along the path."""
    t = preset.samples
    if t < 2:
        raise InvalidPresetError("samples must be at least 2")
    if preset.kind == "linear":
        if preset.start is None or preset.end is None:
            raise InvalidPresetError("linear preset requires start and end")
        start = np.asarray(preset.start, dtype=float)
        end = np.asarray(preset.end, dtype=float)
        if np.array_equal(start, end):
            raise InvalidPresetError("linear preset has zero length")
        pts = np.linspace(start, end, t)
    elif preset.kind == "circular":
        if preset.center is None:
            raise InvalidPresetError("circular preset requires a center")
        if preset.radius <= 0:
            raise InvalidPresetError("circular preset requires radius > 0")
        if preset.arc_start == preset.arc_stop:
            raise InvalidPresetError("circular preset has zero arc length")
        ang = np.linspace(preset.arc_start, preset.arc_stop, t)
        center = np.asarray(preset.center, dtype=float)
        pts = center + preset.radius * np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        raise InvalidPresetError(f"unknown trajectory kind {preset.kind!r}")
    if not np.all(np.isfinite(pts)):
        raise InvalidPresetError("preset parameters are not finite")
    return ReceiverTrack(pts)


@dataclass(frozen=True)
class ObservabilityReport:
    """Per-assumption pass/fail diagnostics for a scenario."""

    assumption1_ok: bool
    assumption2_ok: tuple  # one flag per target

    @property
    def ok(self) -> bool:
        return self.assumption1_ok and all(self.assumption2_ok)


def _is_colinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0.0:
        return True
    return sv[-1] < COLINEARITY_RTOL * sv[0]


def check_observability(track: ReceiverTrack, targets: TargetSet) -> ObservabilityReport:
    """Check that the geometry admits triangulation for every target.

    Assumption 1: more than one unique measurement location.
    Assumption 2: receiver positions are not colinear with any target.
    Never raises; returns a report.
    """
    a1 = bool(np.any(np.ptp(track.positions, axis=0) > 0))
    a2 = []
    for tgt in targets.positions:
        cloud = np.vstack([track.positions, tgt[None, :]])
        a2.append(not _is_colinear(cloud))
    return ObservabilityReport(assumption1_ok=a1, assumption2_ok=tuple(a2))


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ScenarioFileError(f"missing key {key!r} in {context}")
    return table[key]


def _point(table: dict, key: str, context: str) -> tuple:
    value = _require(table, key, context)
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ScenarioFileError(f"key {key!r} in {context} must be a pair of numbers")
    return (float(value[0]), float(value[1]))


def load_scenario(path) -> tuple[ReceiverTrack, TargetSet]:
    """Parse a TOML scenario file into a track and target set.

    Schema::

        [track]
        kind = "linear"            # or "circular"
        samples = 100
        start_m = [0.0, 0.0]       # linear
        end_m = [30000.0, 0.0]
        center_m = [0.0, 0.0]      # circular
        radius_m = 1000.0
        arc_start_deg = 0.0
        arc_stop_deg = 180.0

        [[targets]]
        x_m = 15000.0
        y_m = 15000.0
        gamma_deg = 30.0
        eta_deg = -20.0
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioFileError(f"invalid TOML in {path}: {exc}") from exc

    track_tbl = _require(doc, "track", "scenario file")
    kind = _require(track_tbl, "kind", "[track]")
    samples = _require(track_tbl, "samples", "[track]")
    if not isinstance(samples, int) or samples < 2:
        raise ScenarioFileError("key 'samples' in [track] must be an integer >= 2")
    if kind == "linear":
        preset = TrajectoryPreset(
            kind="linear",
            samples=samples,
            start=_point(track_tbl, "start_m", "[track]"),
            end=_point(track_tbl, "end_m", "[track]"),
        )
    elif kind == "circular":
        preset = TrajectoryPreset(
            kind="circular",
            samples=samples,
            center=_point(track_tbl, "center_m", "[track]"),
            radius=float(_require(track_tbl, "radius_m", "[track]")),
            arc_start=np.deg2rad(float(_require(track_tbl, "arc_start_deg", "[track]"))),
            arc_stop=np.deg2rad(float(_require(track_tbl, "arc_stop_deg", "[track]"))),
        )
    else:
        raise ScenarioFileError(f"key 'kind' in [track] must be 'linear' or 'circular', got {kind!r}")
    try:
        track = generate_track(preset)
    except InvalidPresetError as exc:
        raise ScenarioFileError(f"[track] is degenerate: {exc}") from exc

    target_tbls = _require(doc, "targets", "scenario file")
    if not isinstance(target_tbls, list) or not target_tbls:
        raise ScenarioFileError("key 'targets' must be a non-empty array of tables")
    pos, gamma, eta = [], [], []
    for idx, tbl in enumerate(target_tbls):
        ctx = f"[[targets]] #{idx}"
        pos.append([float(_require(tbl, "x_m", ctx)), float(_require(tbl, "y_m", ctx))])
        gamma.append(np.deg2rad(float(_require(tbl, "gamma_deg", ctx))))
        eta.append(np.deg2rad(float(_require(tbl, "eta_deg", ctx))))
    try:
        targets = TargetSet(np.array(pos), np.array(gamma), np.array(eta))
    except InvalidInputError as exc:
        raise ScenarioFileError(f"invalid [[targets]]: {exc}") from exc
    return track, targets
