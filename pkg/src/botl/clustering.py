"""Data association: label each frame's unlabeled measurements by target.

Two algorithms are provided.  The iterative one predicts bearings from
the previous position estimates and matches them to the new frame with
the Hungarian algorithm, re-localizing after every frame.  The
non-iterative one clusters polarization features with K-means in a
single pass, then localizes each cluster once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .estimators import (
    BearingStream,
    PositionEstimate,
    SolverSettings,
    nls_localize,
)
from .measurement import ObservationFrame, true_bearing, wrap_angle
from .rng import substream
from .scenario import ReceiverTrack


def angular_distance(a, b):
    """Wrapped circular distance between angles, in [0, pi]."""
    w = np.abs(wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return np.minimum(w, 2.0 * np.pi - w)


def predict_bearings(prev_estimates, receiver) -> np.ndarray:
    """Bearing from the receiver to each previous position estimate."""
    prev = np.atleast_2d(np.asarray(prev_estimates, dtype=float))
    return np.atleast_1d(true_bearing(np.asarray(receiver, dtype=float)[None, :], prev))


def _lsa_cost(cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def assign(cost) -> np.ndarray:
    """Minimum-cost perfect matching of rows to columns.

    Returns perm with perm[m] = column assigned to row m.  Among optimal
    matchings, the lexicographically smallest permutation is returned so
    results are deterministic under ties.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise InvalidInputError("cost matrix must be square")
    if np.any(cost < 0) or not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix must be finite and nonnegative")
    n = cost.shape[0]
    best = _lsa_cost(cost)
    tol = 1e-9 * (1.0 + abs(best))
    perm = np.empty(n, dtype=int)
    free = list(range(n))
    fixed = 0.0
    for row in range(n):
        for col in free:
            rest_rows = list(range(row + 1, n))
            rest_cols = [c for c in free if c != col]
            rest = _lsa_cost(cost[np.ix_(rest_rows, rest_cols)]) if rest_rows else 0.0
            if fixed + cost[row, col] + rest <= best + tol:
                perm[row] = col
                fixed += cost[row, col]
                free.remove(col)
                break
        else:  # pragma: no cover - optimality guarantees a feasible column
            raise AssertionError("no column completes an optimal assignment")
    return perm


def _kmeans_pp_seed(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total == 0:
            centroids[j] = points[rng.integers(n)]
        else:
            centroids[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int = 300):
    labels = None
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        nearest = d2[np.arange(points.shape[0]), new_labels]
        for j in range(centroids.shape[0]):
            mask = new_labels == j
            if np.any(mask):
                centroids[j] = points[mask].mean(axis=0)
            else:
                # repair: reseed the empty centroid at the point farthest
                # from its current centroid
                far = int(np.argmax(nearest))
                centroids[j] = points[far]
                nearest[far] = 0.0
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(points.shape[0]), labels].sum())
    return labels, centroids, inertia


def kmeans(points, k: int, seed: int = 0, n_restarts: int = 10):
    """K-means with k-means++ seeding and restarts; best inertia kept.

    Deterministic given seed.  Returns (labels, centroids, inertia).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.ndim != 2:
        raise InvalidInputError("points must be a 2-D array")
    if k < 1 or points.shape[0] < k:
        raise InvalidInputError("need at least k points and k >= 1")
    best = None
    for restart in range(n_restarts):
        rng = substream(seed, restart)
        centroids = _kmeans_pp_seed(points, k, rng)
        labels, centroids, inertia = _lloyd(points, centroids)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia)
    return best


@dataclass(frozen=True)
class ClusterSettings:
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0
    init_window: int = 5   # frames used by the self-start
    stride: int = 1        # re-localize every `stride` frames

    def __post_init__(self):
        if self.init_window < 1 or self.stride < 1:
            raise InvalidInputError("init_window and stride must be >= 1")


def _stream_for_target(frames, track, assigned, target: int, upto: int) -> BearingStream:
    receivers, thetas = [], []
    for j in range(upto + 1):
        slots = np.nonzero(assigned[j] == target)[0]
        if slots.size:
            receivers.append(track.positions[j])
            thetas.append(frames[j].theta_hat[slots[0]])
    return BearingStream(np.array(receivers), np.array(thetas))


def _bootstrap_labels(frames, settings: ClusterSettings, n: int, w: int):
    """Self-start: K-means on the first w frames' bearings on the unit circle."""
    theta = np.concatenate([frames[j].theta_hat for j in range(w)])
    feats = np.column_stack([np.cos(theta), np.sin(theta)])
    _, centroids, _ = kmeans(feats, n, seed=settings.seed)
    assigned = np.empty((w, n), dtype=int)
    for j in range(w):
        f = np.column_stack([np.cos(frames[j].theta_hat), np.sin(frames[j].theta_hat)])
        d = np.linalg.norm(centroids[:, None, :] - f[None, :, :], axis=2)
        perm = assign(d)  # cluster c -> slot perm[c]
        for c in range(n):
            assigned[j, perm[c]] = c
    return assigned


def cluster_by_bearing(
    frames: list[ObservationFrame],
    track: ReceiverTrack,
    settings: Optional[ClusterSettings] = None,
    init_estimates=None,
) -> tuple[np.ndarray, list[PositionEstimate]]:
    """Iterative association: predict, match, append, re-localize.

    Returns (assigned, estimates) where assigned[j, slot] is the target
    index given to that measurement and estimates holds one
    PositionEstimate per target.
    """
    settings = settings or ClusterSettings()
    if len(frames) != len(track):
        raise InvalidInputError("frames and track must have the same length")
    t = len(frames)
    n = frames[0].n_measurements

    if n == 1:
        stream = BearingStream(
            track.positions, np.array([f.theta_hat[0] for f in frames])
        )
        est = nls_localize(stream, settings.solver)
        return np.zeros((t, 1), dtype=int), [est]

    assigned = np.full((t, n), -1, dtype=int)
    if init_estimates is None:
        w = settings.init_window
        if w > t:
            raise InvalidInputError("init window exceeds the number of frames")
        assigned[:w] = _bootstrap_labels(frames, settings, n, w)
        estimates = [
            nls_localize(_stream_for_target(frames, track, assigned, ell, w - 1),
                         settings.solver)
            for ell in range(n)
        ]
        start = w
    else:
        estimates = [
            PositionEstimate(np.asarray(p, dtype=float), np.nan, 0, True)
            for p in np.atleast_2d(np.asarray(init_estimates, dtype=float))
        ]
        if len(estimates) != n:
            raise InvalidInputError("need one initial estimate per target")
        start = 0

    positions = np.array([e.position for e in estimates])
    for j in range(start, t):
        pred = predict_bearings(positions, track.positions[j])
        cost = angular_distance(pred[:, None], frames[j].theta_hat[None, :])
        perm = assign(cost)  # target ell -> slot perm[ell]
        for ell in range(n):
            assigned[j, perm[ell]] = ell
        if j >= 1 and ((j - start) % settings.stride == 0 or j == t - 1):
            estimates = [
                nls_localize(
                    _stream_for_target(frames, track, assigned, ell, j),
                    settings.solver,
                )
                for ell in range(n)
            ]
            positions = np.array([e.position for e in estimates])
    return assigned, estimates


def polarization_features(gamma, eta) -> np.ndarray:
    """Embed (gamma, eta) for K-means: gamma scaled to [0, 1], eta on a circle."""
    gamma = np.asarray(gamma, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.column_stack([
        gamma * (2.0 / np.pi),
        0.5 * np.cos(eta),
        0.5 * np.sin(eta),
    ])


def cluster_by_polarization(
    frames: list[ObservationFrame],
    track: ReceiverTrack,
    settings: Optional[ClusterSettings] = None,
) -> tuple[np.ndarray, list[PositionEstimate]]:
    """Non-iterative association via K-means on polarization features.

    All measurements are pooled and clustered once; a per-frame
    assignment against the centroids enforces the one-measurement-per-
    target bijection; each cluster is then localized on its full
    history.
    """
    settings = settings or ClusterSettings()
    if len(frames) != len(track):
        raise InvalidInputError("frames and track must have the same length")
    if any(f.gamma_hat is None or f.eta_hat is None for f in frames):
        raise InvalidInputError("frames lack polarization measurements")
    t = len(frames)
    n = frames[0].n_measurements

    pooled = polarization_features(
        np.concatenate([f.gamma_hat for f in frames]),
        np.concatenate([f.eta_hat for f in frames]),
    )
    _, centroids, _ = kmeans(pooled, n, seed=settings.seed)
    # canonical cluster ids: sort centroids lexicographically so labels do
    # not depend on the pooling order of the frames
    centroids = centroids[np.lexsort(centroids.T[::-1])]

    assigned = np.empty((t, n), dtype=int)
    for j in range(t):
        feats = polarization_features(frames[j].gamma_hat, frames[j].eta_hat)
        d = np.linalg.norm(centroids[:, None, :] - feats[None, :, :], axis=2)
        perm = assign(d)  # cluster c -> slot perm[c]
        for c in range(n):
            assigned[j, perm[c]] = c
    estimates = [
        nls_localize(_stream_for_target(frames, track, assigned, ell, t - 1),
                     settings.solver)
        for ell in range(n)
    ]
    return assigned, estimates


def clustering_error(assigned, truth) -> float:
    """Fraction of misassigned measurements, minimized over relabelings.

    Cluster identities are arbitrary, so the score is taken after the
    best bijective map from clusters to targets.
    """
    assigned = np.asarray(assigned, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if assigned.shape != truth.shape:
        raise InvalidInputError("assignment and truth shapes differ")
    k = int(max(assigned.max(), truth.max())) + 1
    contingency = np.zeros((k, k))
    for c, tgt in zip(assigned.ravel(), truth.ravel()):
        contingency[c, tgt] += 1
    rows, cols = linear_sum_assignment(-contingency)
    matched = contingency[rows, cols].sum()
    return float(1.0 - matched / assigned.size)


def truth_matrix(frames: list[ObservationFrame]) -> np.ndarray:
    """Stack hidden truth labels into the same (T, N) layout as assignments."""
    return np.array([f.truth_labels for f in frames], dtype=int)
