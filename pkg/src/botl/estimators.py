"""Single-target localization from a labeled bearing stream.

Provides the nonlinear least-squares solver (Levenberg-Marquardt on
wrapped bearing residuals), two closed-form linear baselines (Orthogonal
Vector and Total Least Squares), and two Cramer-Rao bound evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateTLSError,
    InvalidInputError,
    NonIdentifiableError,
)
from .measurement import true_bearing, wrap_angle

_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class BearingStream:
    """Receiver positions paired with the bearings measured there."""

    receivers: np.ndarray  # (M, 2) meters
    theta: np.ndarray      # (M,) radians

    def __post_init__(self):
        rec = np.asarray(self.receivers, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        if rec.ndim != 2 or rec.shape[1] != 2:
            raise InvalidInputError("receivers must be a (M, 2) array")
        if theta.shape != (rec.shape[0],):
            raise InvalidInputError("one bearing per receiver position required")
        if rec.shape[0] < 2:
            raise InvalidInputError("need at least two bearings")
        if not np.any(np.ptp(rec, axis=0) > 0):
            raise InvalidInputError("need at least two distinct receiver positions")
        rec.flags.writeable = False
        theta.flags.writeable = False
        object.__setattr__(self, "receivers", rec)
        object.__setattr__(self, "theta", theta)

    def __len__(self) -> int:
        return self.receivers.shape[0]


@dataclass(frozen=True)
class PositionEstimate:
    position: np.ndarray  # (2,) meters
    final_cost: float     # sum of squared wrapped residuals, radians^2
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SolverSettings:
    max_iterations: int = 100
    cost_tol: float = 1e-10   # relative cost decrease
    step_tol: float = 1e-8    # meters
    damping_init: float = 1e-3
    damping_scale: float = 10.0
    damping_min: float = 1e-12
    damping_max: float = 1e12

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if min(self.cost_tol, self.step_tol) <= 0:
            raise InvalidInputError("tolerances must be > 0")


def bearing_cost(stream: BearingStream, point) -> float:
    """Sum of squared wrapped bearing residuals at a candidate position."""
    r = bearing_residuals(stream, point)
    return float(r @ r)


def bearing_residuals(stream: BearingStream, point) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    theta = true_bearing(stream.receivers, point[None, :])
    return wrap_angle(stream.theta - theta)


def bearing_jacobian(stream: BearingStream, point) -> np.ndarray:
    """Analytic Jacobian of the residual vector wrt the candidate position.

    With theta = atan2(y - y_r, x - x_r) the residual is
    wrap(theta_hat - theta), so d r / d p = -d theta / d p
    = [dy / d^2, -dx / d^2].
    """
    point = np.asarray(point, dtype=float)
    delta = point[None, :] - stream.receivers
    d2 = np.sum(delta * delta, axis=1)
    if np.any(d2 == 0):
        raise NonIdentifiableError("candidate position coincides with a receiver")
    return np.column_stack([delta[:, 1] / d2, -delta[:, 0] / d2])


def _rank2(jac: np.ndarray, rtol: float = _RANK_RTOL) -> bool:
    sv = np.linalg.svd(jac, compute_uv=False)
    return sv[0] > 0 and sv[-1] >= rtol * sv[0]


def _check_identifiable(stream: BearingStream) -> None:
    """Reject streams whose geometry cannot triangulate.

    If all receivers lie on a line and every measured bearing points
    along that same line (mod pi), the target sits on the line and its
    range is unobservable -- the Assumption 2 failure mode.
    """
    centered = stream.receivers - stream.receivers.mean(axis=0)
    sv, vt = np.linalg.svd(centered, compute_uv=True)[1:]
    if sv[-1] >= 1e-9 * sv[0]:
        return
    track_angle = np.arctan2(vt[0, 1], vt[0, 0])
    off_axis = np.abs(wrap_angle(stream.theta - track_angle))
    off_axis = np.minimum(off_axis, np.pi - off_axis)
    if np.all(off_axis < 1e-9):
        raise NonIdentifiableError(
            "Assumption 2 violated: receivers and target are colinear"
        )


def _fallback_init(stream: BearingStream) -> np.ndarray:
    centered = stream.receivers - stream.receivers.mean(axis=0)
    _, _, vt = np.linalg.svd(centered)
    perp = np.array([-vt[0, 1], vt[0, 0]])
    return stream.receivers.mean(axis=0) + perp  # 1 m off the track line


def nls_localize(
    stream: BearingStream,
    settings: Optional[SolverSettings] = None,
    init=None,
) -> PositionEstimate:
    """Levenberg-Marquardt minimization of the wrapped-residual cost.

    Initialization defaults to the OV estimate, falling back to the
    receiver centroid offset 1 m perpendicular to the track when OV is
    singular.  Only a local minimum is guaranteed.
    """
    settings = settings or SolverSettings()
    _check_identifiable(stream)
    if init is None:
        try:
            init = ov_localize(stream).position
        except NonIdentifiableError:
            init = _fallback_init(stream)
    p = np.asarray(init, dtype=float).copy()

    r = bearing_residuals(stream, p)
    jac = bearing_jacobian(stream, p)
    cost = float(r @ r)
    lam = settings.damping_init
    any_full_rank = _rank2(jac)
    converged = False
    iterations = 0

    for iterations in range(1, settings.max_iterations + 1):
        h = jac.T @ jac
        g = jac.T @ r
        step = np.linalg.solve(h + lam * np.eye(2), -g)
        p_new = p + step
        try:
            r_new = bearing_residuals(stream, p_new)
        except Exception:
            r_new = None
        cost_new = float(r_new @ r_new) if r_new is not None else np.inf

        if cost_new <= cost:
            rel_drop = (cost - cost_new) / cost if cost > 0 else 0.0
            p, r, cost = p_new, r_new, cost_new
            jac = bearing_jacobian(stream, p)
            any_full_rank = any_full_rank or _rank2(jac)
            lam = max(lam / settings.damping_scale, settings.damping_min)
            if rel_drop < settings.cost_tol or np.linalg.norm(step) < settings.step_tol:
                converged = True
                break
        else:
            lam = lam * settings.damping_scale
            if lam > settings.damping_max:
                break

    if not any_full_rank:
        raise NonIdentifiableError(
            "Assumption 2 violated: Jacobian rank-deficient at every iterate"
        )
    return PositionEstimate(
        position=p, final_cost=cost, iterations=iterations, converged=converged
    )


def _linear_system(stream: BearingStream) -> tuple[np.ndarray, np.ndarray]:
    """Rows <(-sin t, cos t), X> = <(-sin t, cos t), X_r> of the OV system."""
    s = np.sin(stream.theta)
    c = np.cos(stream.theta)
    a = np.column_stack([-s, c])
    b = np.sum(a * stream.receivers, axis=1)
    return a, b


def ov_localize(stream: BearingStream) -> PositionEstimate:
    """Orthogonal Vector closed-form linear least squares.

    final_cost reports the nonlinear wrapped-residual cost at the OV
    position so estimates are comparable with nls_localize.
    """
    a, b = _linear_system(stream)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0 or sv[-1] < _RANK_RTOL * sv[0]:
        raise NonIdentifiableError(
            "Assumption 2 violated: OV normal matrix is singular (parallel bearings)"
        )
    pos, *_ = np.linalg.lstsq(a, b, rcond=None)
    return PositionEstimate(
        position=pos,
        final_cost=bearing_cost(stream, pos),
        iterations=0,
        converged=True,
    )


def tls_localize(stream: BearingStream) -> PositionEstimate:
    """Total least squares on the OV linear system.

    Solves the errors-in-variables problem: the position is read off the
    right singular vector of [A | b] with smallest singular value,
    normalized by its last component.
    """
    a, b = _linear_system(stream)
    aug = np.column_stack([a, b])
    _, s, vt = np.linalg.svd(aug)
    # pad implicit zero singular values when there are fewer rows than columns
    if s.size < 3:
        s = np.concatenate([s, np.zeros(3 - s.size)])
    if s[0] > 0 and (s[-2] - s[-1]) < 1e-12 * s[0]:
        raise DegenerateTLSError("smallest singular value is not unique")
    v = vt[-1]
    if abs(v[-1]) < 1e-15:
        raise DegenerateTLSError("TLS solution lies at infinity (zero last component)")
    pos = -v[:2] / v[-1]
    # [A|b] v = 0 with v = (x, -1) scaling gives A x = b; the sign flip
    # above absorbs the normalization convention.
    pos = np.asarray(pos, dtype=float)
    return PositionEstimate(
        position=pos,
        final_cost=bearing_cost(stream, pos),
        iterations=0,
        converged=True,
    )


def crlb_paper(receivers, target, sigma: float, as_printed: bool = False) -> float:
    """Bearing-domain lower bound sigma*sqrt(T)/sqrt(det terms).

    The default uses the determinant-consistent (sum cos sin)^2 term;
    as_printed=True evaluates the sum of squared products instead.
    Returns +inf when the denominator is not positive.
    """
    receivers = np.asarray(receivers, dtype=float)
    theta = true_bearing(receivers, np.asarray(target, dtype=float)[None, :])
    c, s = np.cos(theta), np.sin(theta)
    cross = np.sum((c * s) ** 2) if as_printed else np.sum(c * s) ** 2
    denom = np.sum(c * c) * np.sum(s * s) - cross
    if denom <= 1e-15:
        return float("inf")
    t = receivers.shape[0]
    return float(sigma * np.sqrt(t) / np.sqrt(denom))


def crlb_position(receivers, target, sigma: float) -> float:
    """Position-domain bound sqrt(trace(F^-1)) in meters.

    Fisher information for the bearing mean function:
    F = (1/sigma^2) sum_j u_j u_j^T / r_j^2 with u_j perpendicular to
    the line of bearing at step j.
    """
    if sigma <= 0:
        raise InvalidInputError("sigma must be > 0")
    receivers = np.asarray(receivers, dtype=float)
    target = np.asarray(target, dtype=float)
    delta = target[None, :] - receivers
    r2 = np.sum(delta * delta, axis=1)
    if np.any(r2 == 0):
        raise NonIdentifiableError("a receiver coincides with the target")
    theta = true_bearing(receivers, target[None, :])
    u = np.column_stack([-np.sin(theta), np.cos(theta)])
    f = (u.T * (1.0 / r2)) @ u / sigma**2
    sv = np.linalg.svd(f, compute_uv=False)
    if sv[0] == 0 or sv[-1] < _RANK_RTOL * sv[0]:
        raise NonIdentifiableError("singular Fisher information (colinear geometry)")
    return float(np.sqrt(np.trace(np.linalg.inv(f))))
