"""Distance-station ranging and position fixing.

Each station transmits at a known time; the UAV receiver timestamps arrival
with its own (biased) clock, so every pseudorange is ``c * (t_i - beta - s_i)``.
With at least four stations the 3-D position and the clock bias are solved
jointly by iterative linearization with a line search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
#: Local minima whose residual RMS is within this factor of the best are
#: treated as equally plausible fits; the one nearest the stations wins.
COMPARABLE_FIT = 5.0


class PositioningError(ValueError):
    pass


class InsufficientStationsError(PositioningError):
    pass


class DegenerateGeometryError(PositioningError):
    pass


class ConvergenceError(PositioningError):
    pass


@dataclass(frozen=True)
class DistanceStation:
    id: Hashable
    position: tuple[float, float, float]
    transmit_time: float = 0.0


@dataclass(frozen=True)
class RangeMeasurement:
    station: Hashable
    receive_time: float
    derived_range: float


@dataclass(frozen=True)
class PositionFix:
    position: np.ndarray
    clock_bias: float
    residual_rms: float
    iterations: int


def range_from_timing(t_i: float, s_i: float, beta: float) -> float:
    travel = t_i - beta - s_i
    if travel < 0:
        raise PositioningError(f"negative propagation time {travel!r} s")
    return travel * SPEED_OF_LIGHT


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def _residuals(p, bias_m, stations, pseudo):
    rho = np.sqrt(((stations - p) ** 2).sum(axis=1))
    return pseudo - (rho + bias_m), rho


def _lorentz(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] - a[3] * b[3])


def bancroft_candidates(stations_xyz: np.ndarray, pseudo: np.ndarray) -> list:
    """Closed-form (position, bias_m) candidates for ``pseudo = rho + bias``.

    Up to two candidates; with exactly four stations both can fit exactly.
    """
    B = np.column_stack([stations_xyz, pseudo])
    try:
        pinv = np.linalg.pinv(B)
    except np.linalg.LinAlgError:
        return []
    a = np.array([_lorentz(row, row) / 2.0 for row in B])
    u = pinv @ np.ones(len(B))
    v = pinv @ a
    c2, c1, c0 = _lorentz(u, u), 2.0 * (_lorentz(u, v) - 1.0), _lorentz(v, v)
    if c2 == 0.0:
        roots = [-c0 / c1] if c1 != 0.0 else []
    else:
        disc = c1 * c1 - 4.0 * c2 * c0
        sq = np.sqrt(max(disc, 0.0))
        roots = [(-c1 + sq) / (2.0 * c2), (-c1 - sq) / (2.0 * c2)]
    out = []
    for lam in roots:
        sol = v + lam * u
        if np.all(np.isfinite(sol)):
            out.append((sol[:3].copy(), -float(sol[3])))
    return out


def _newton_step(jac, r, rho):
    """Full Newton step for the sum of squares, or None if its Hessian is not positive definite.

    Plain Gauss-Newton drops the residual curvature term and only converges
    linearly once range noise leaves sizeable residuals at the optimum.
    """
    u = jac[:, :3]
    hess = jac.T @ jac
    for ri, ui, rhoi in zip(r, u, rho):
        hess[:3, :3] -= ri * (np.eye(3) - np.outer(ui, ui)) / rhoi
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    return np.linalg.solve(hess, jac.T @ r)


def _line_search(p, b, step, pos, pseudo, cost):
    """Pick a step length along a descent direction.

    With noisy ranges the full step tends to overshoot and the iteration
    zig-zags; a parabola through scales 0, 1/2 and 1 recovers a near-optimal
    length. Falls back to halving while the cost still increases.
    """
    def trial(scale):
        pn, bn = p + scale * step[:3], b + scale * step[3]
        rn, rhon = _residuals(pn, bn, pos, pseudo)
        return pn, bn, rn, rhon, float(rn @ rn)

    full, half = trial(1.0), trial(0.5)
    best = min((full, half), key=lambda t: t[4])
    curv = 2.0 * (full[4] - 2.0 * half[4] + cost)  # second-order coefficient
    if curv > 0.0:
        opt = (4.0 * half[4] - full[4] - 3.0 * cost) / (-2.0 * curv)
        if 0.0 < opt < 1.0 and opt != 0.5:
            cand = trial(opt)
            if cand[4] < best[4]:
                best = cand
    scale = 0.25
    while best[4] > cost and scale >= 1e-6:
        best = trial(scale)
        scale *= 0.5
    return best


def _refine(p, b, pos, pseudo, tol, max_iter):
    r, rho = _residuals(p, b, pos, pseudo)
    cost = float(r @ r)
    for it in range(1, max_iter + 1):
        if np.any(rho == 0.0):
            raise DegenerateGeometryError("receiver estimate coincides with a station")
        jac = np.empty((len(pos), 4))
        jac[:, :3] = (p - pos) / rho[:, None]
        jac[:, 3] = 1.0
        sv = np.linalg.svd(jac, compute_uv=False)
        singular = sv[-1] <= sv[0] * 1e-10
        if singular and it == 1:
            raise DegenerateGeometryError("station geometry is rank deficient at the starting estimate")
        # Newton handles curved, ill-conditioned valleys; Gauss-Newton is the fallback
        step = None if singular else _newton_step(jac, r, rho)
        trial = _line_search(p, b, step, pos, pseudo, cost) if step is not None else None
        if trial is None or trial[4] > cost:
            # inconsistent 4-station data can put the optimum where the
            # linearization is singular; a truncated step still descends
            step, *_ = np.linalg.lstsq(jac, r, rcond=1e-10 if singular else None)
            trial = _line_search(p, b, step, pos, pseudo, cost)
        p_new, b_new, r_new, rho_new, cost_new = trial
        if cost_new > cost:
            # no descent in either direction: already at the minimum
            return p, b, _rms(r), it
        moved = float(np.linalg.norm(p_new - p))
        p, b, r, rho, cost = p_new, b_new, r_new, rho_new, cost_new
        if moved < tol:
            return p, b, _rms(r), it
    raise ConvergenceError(f"no convergence after {max_iter} iterations")


def solve_position(
    stations: Sequence[DistanceStation],
    receive_times: Sequence[float],
    *,
    initial: Optional[Sequence[float]] = None,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> PositionFix:
    """Least-squares position and clock bias from station timings.

    The system is linearized repeatedly from the station centroid with zero
    bias, stopping once the position update is below ``tol`` meters. Each
    step is a Newton step when the Hessian is positive definite and a
    Gauss-Newton step otherwise, and a line search keeps every iterate at or
    below the starting residual. Because the problem has more
    than one basin (and two exact solutions with four stations), it is also
    run from the closed-form Bancroft candidates. Among the local minima
    found, those fitting about as well as the best (``COMPARABLE_FIT``) are
    kept and the one nearest the station centroid is returned: with noisy
    ranges a spurious far-off minimum can fit slightly better than the fix
    near the receiver.

    With ``initial`` given, only that starting point is used (warm start).
    """
    if len(stations) < 4:
        raise InsufficientStationsError(
            f"need at least 4 stations for position + clock bias, got {len(stations)}"
        )
    if len(receive_times) != len(stations):
        raise PositioningError("one receive time per station is required")
    pos = np.array([s.position for s in stations], dtype=float)
    sent = np.array([s.transmit_time for s in stations], dtype=float)
    # pseudoranges in meters; the bias is carried as c * beta for conditioning
    pseudo = (np.asarray(receive_times, dtype=float) - sent) * SPEED_OF_LIGHT
    centroid = pos.mean(axis=0)

    if initial is not None:
        starts = [(np.asarray(initial, dtype=float).copy(), 0.0)]
    else:
        starts = [(centroid.copy(), 0.0)] + bancroft_candidates(pos, pseudo)
    fixes = []
    error = None
    for p0, b0 in starts:
        try:
            p, b, rms, its = _refine(p0, b0, pos, pseudo, tol, max_iter)
        except PositioningError as exc:
            error = error or exc
            continue
        fixes.append((float(np.linalg.norm(p - centroid)), rms, PositionFix(p, b / SPEED_OF_LIGHT, rms, its)))
    if not fixes:
        raise error
    best_rms = min(rms for _, rms, _ in fixes)
    comparable = [f for f in fixes if f[1] <= COMPARABLE_FIT * best_rms + 1e-6]
    return min(comparable, key=lambda f: (f[0], f[1]))[2]


def synthesize_receive_times(
    stations: Sequence[DistanceStation],
    position: Sequence[float],
    clock_bias: float = 0.0,
    range_noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Receive timestamps a receiver at ``position`` would record."""
    pos = np.array([s.position for s in stations], dtype=float)
    sent = np.array([s.transmit_time for s in stations], dtype=float)
    rho = np.sqrt(((pos - np.asarray(position, dtype=float)) ** 2).sum(axis=1))
    if range_noise is not None:
        rho = rho + range_noise
    return sent + clock_bias + rho / SPEED_OF_LIGHT


@dataclass
class PositioningConfig:
    """Replace GPS readout with distance-station fixes inside the mission loop."""

    enabled: bool = False
    stations: list = field(default_factory=list)
    range_noise_std: float = 0.0
    clock_bias: float = 0.0

    def __post_init__(self):
        if self.enabled and len(self.stations) < 4:
            raise InsufficientStationsError("positioning needs at least 4 stations")
        if self.range_noise_std < 0:
            raise PositioningError("range_noise_std must be >= 0")

    def track(self, true_track: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Fix every row of ``true_track``; each solve is warm-started from the previous fix."""
        n = len(true_track)
        noise = rng.standard_normal((n, len(self.stations))) * self.range_noise_std
        out = np.empty_like(true_track)
        guess = None
        for k in range(n):
            times = synthesize_receive_times(self.stations, true_track[k], self.clock_bias, noise[k])
            fix = solve_position(self.stations, times, initial=guess)
            out[k] = fix.position
            guess = fix.position
        return out
