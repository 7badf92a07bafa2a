"""Synthetic unlabeled DoA observations.

Each time step yields one 4-D measurement tuple per target: azimuth
bearing plus auxiliary polarization angle and polarization phase
difference.  Bearings are measured counterclockwise from the +x axis and
always wrapped to (-pi, pi].  Measurement order within a frame is
shuffled so downstream association can never exploit list position as a
label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError, ObservabilityError
from .rng import substream
from .scenario import ReceiverTrack, TargetSet, check_observability

TWO_PI = 2.0 * np.pi


def wrap_angle(a):
    """Wrap angle(s) to the interval (-pi, pi]."""
    return np.pi - np.remainder(np.pi - np.asarray(a, dtype=float), TWO_PI)


def true_bearing(receiver, target):
    """Four-quadrant angle of (target - receiver), in (-pi, pi].

    Broadcasts over leading dimensions; raises if any pair coincides.
    """
    receiver = np.asarray(receiver, dtype=float)
    target = np.asarray(target, dtype=float)
    delta = target - receiver
    dx = delta[..., 0]
    dy = delta[..., 1]
    if np.any((dx == 0) & (dy == 0)):
        raise DegenerateGeometryError("receiver and target coincide")
    return wrap_angle(np.arctan2(dy, dx))


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian perturbations applied to each measurement."""

    sigma_bearing: float
    sigma_polarization: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_bearing < 0 or self.sigma_polarization < 0:
            raise InvalidInputError("noise standard deviations must be >= 0")


@dataclass(frozen=True)
class ObservationFrame:
    """One time step of N unlabeled measurement tuples.

    ``truth_labels[slot]`` is the target index that produced the
    measurement in that slot.  It exists for scoring only; clustering
    code must never read it.
    """

    step: int
    theta_hat: np.ndarray   # (N,) radians in (-pi, pi]
    gamma_hat: Optional[np.ndarray]  # (N,) radians in [0, pi/2], or None
    eta_hat: Optional[np.ndarray]    # (N,) radians in (-pi, pi], or None
    truth_labels: np.ndarray  # (N,) ints, permutation of 0..N-1

    def __post_init__(self):
        for name in ("theta_hat", "gamma_hat", "eta_hat", "truth_labels"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.theta_hat.shape[0]
        if sorted(self.truth_labels.tolist()) != list(range(n)):
            raise InvalidInputError("truth_labels must be a permutation of 0..N-1")

    @property
    def n_measurements(self) -> int:
        return self.theta_hat.shape[0]


def generate_observations(
    track: ReceiverTrack,
    targets: TargetSet,
    noise: NoiseModel,
    trial: int = 0,
) -> list[ObservationFrame]:
    """Simulate one trial of unlabeled noisy observations.

    Deterministic given (noise.seed, trial): frame i draws from its own
    counter-based substream keyed (seed, trial, i), so frame content is
    independent of query order and of other frames.
    """
    report = check_observability(track, targets)
    if not report.assumption1_ok:
        raise ObservabilityError(
            "Assumption 1 violated: need more than one unique receiver position"
        )
    n = targets.n_targets
    frames = []
    for i, receiver in enumerate(track.positions):
        rng = substream(noise.seed, trial, i)
        theta = true_bearing(receiver[None, :], targets.positions)
        # noise is always drawn so the stream layout does not depend on
        # the sigmas; zero-sigma values pass through bit-exactly
        bearing_noise = rng.normal(0.0, 1.0, n) * noise.sigma_bearing
        gamma_noise = rng.normal(0.0, 1.0, n) * noise.sigma_polarization
        eta_noise = rng.normal(0.0, 1.0, n) * noise.sigma_polarization
        theta_hat = theta if noise.sigma_bearing == 0 else wrap_angle(theta + bearing_noise)
        if noise.sigma_polarization == 0:
            gamma_hat = targets.gamma
            eta_hat = targets.eta
        else:
            gamma_hat = np.clip(targets.gamma + gamma_noise, 0.0, np.pi / 2)
            eta_hat = wrap_angle(targets.eta + eta_noise)
        perm = rng.permutation(n)  # slot s holds target perm[s]
        frames.append(ObservationFrame(
            step=i,
            theta_hat=theta_hat[perm],
            gamma_hat=gamma_hat[perm],
            eta_hat=eta_hat[perm],
            truth_labels=perm,
        ))
    return frames


def observations_to_csv(
    trials: Iterable[tuple[int, list[ObservationFrame]]],
    stream,
    reveal_labels: bool = False,
) -> None:
    """Write (trial, frames) sequences as CSV rows to a text stream."""
    writer = csv.writer(stream, lineterminator="\n")
    header = ["trial", "step", "slot", "theta_hat_rad", "gamma_hat_rad", "eta_hat_rad"]
    if reveal_labels:
        header.append("truth_label")
    writer.writerow(header)
    for trial, frames in trials:
        for frame in frames:
            for slot in range(frame.n_measurements):
                row = [
                    trial,
                    frame.step,
                    slot,
                    format(frame.theta_hat[slot], ".17g"),
                    format(frame.gamma_hat[slot], ".17g"),
                    format(frame.eta_hat[slot], ".17g"),
                ]
                if reveal_labels:
                    row.append(int(frame.truth_labels[slot]))
                writer.writerow(row)
