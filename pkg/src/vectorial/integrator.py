"""Explicit Runge-Kutta integrators: fixed-step RK4 and adaptive Dormand-Prince 5(4)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IntegrationError",
    "TimeGrid",
    "Trajectory",
    "integrate_dp45",
    "integrate_rk4",
    "resample",
    "sample",
]

RHS = Callable[[float, np.ndarray], np.ndarray]
Projection = Callable[[np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (t = {t!r})")
        self.t = t


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    tf: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.tf)) or self.tf <= self.t0:
            raise ValueError(f"need finite t0 < tf, got t0={self.t0!r}, tf={self.tf!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_step(cls, t0: float, tf: float, h: float) -> "TimeGrid":
        """Uniform grid whose step is as close to ``h`` as possible without exceeding it."""
        if not h > 0:
            raise ValueError(f"step must be > 0, got {h!r}")
        n = max(1, math.ceil((tf - t0) / h - 1e-9))
        return cls(t0, tf, n)

    @property
    def h(self) -> float:
        return (self.tf - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        t = self.t0 + self.h * np.arange(self.n_steps + 1)
        t[-1] = self.tf
        return t


@dataclass
class Trajectory:
    """Sampled solution: ``t`` has shape (n,), ``y`` has shape (n, d).

    ``u`` optionally carries one control value per sample.
    """

    t: np.ndarray
    y: np.ndarray
    u: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.t.ndim != 1 or self.t.size < 1 or self.y.shape[0] != self.t.size:
            raise ValueError(f"need one state per time, got t {self.t.shape} and y {self.y.shape}")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=float)
            if self.u.shape != self.t.shape:
                raise ValueError(f"control shape {self.u.shape} does not match times {self.t.shape}")

    def __len__(self):
        return self.t.size

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def tf(self) -> float:
        return float(self.t[-1])

    def component(self, i: int) -> np.ndarray:
        return self.y[:, i]


def _checked(y: np.ndarray, t: float, project: Projection | None) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite state", t)
    if project is not None:
        try:
            y = project(y)
        except ValueError as exc:
            raise IntegrationError(str(exc), t) from exc
    return y


def rk4_step(f: RHS, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(f: RHS, y0, grid: TimeGrid, project: Projection | None = None) -> Trajectory:
    """Classical fourth-order Runge-Kutta on a uniform grid.

    ``project`` (optional) is applied to every new state, e.g. to clamp
    round-off negatives; a ``ValueError`` from it aborts the integration.
    """
    t = grid.times
    y = np.empty((t.size, np.size(y0)))
    y[0] = _checked(np.atleast_1d(np.asarray(y0, dtype=float)), t[0], project)
    for k in range(grid.n_steps):
        y_next = rk4_step(f, t[k], y[k], t[k + 1] - t[k])
        y[k + 1] = _checked(y_next, t[k + 1], project)
    return Trajectory(t, y, meta={"method": "rk4", "n_steps": grid.n_steps, "h": grid.h})


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


def _initial_step(f, t0, y0, f0, tf, rel_tol, abs_tol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = np.maximum(rel_tol * np.abs(y0), abs_tol)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, tf - t0)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, tf - t0)


def integrate_dp45(
    f: RHS,
    y0,
    t0: float,
    tf: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-8,
    h0: float | None = None,
    project: Projection | None = None,
) -> Trajectory:
    """Adaptive embedded Dormand-Prince 5(4) integration from ``t0`` to ``tf``.

    A step is accepted when every component of the embedded error estimate
    satisfies ``|err_i| <= max(rel_tol*|y_i|, abs_tol)``, with ``|y_i|`` the
    larger of the old and new magnitudes. The fifth-order solution is
    propagated. Returns every accepted step; ``meta["error_ratios"]`` holds the
    scaled error norm of each accepted step (all <= 1).
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    if not tf > t0:
        raise ValueError(f"need tf > t0, got t0={t0!r}, tf={tf!r}")
    span = tf - t0
    h_min = 1e-10 * span

    t = float(t0)
    y = _checked(np.atleast_1d(np.asarray(y0, dtype=float)), t, project)
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    h = _initial_step(f, t, y, k[0], tf, rel_tol, abs_tol) if h0 is None else float(h0)

    ts, ys, ratios = [t], [y.copy()], []
    n_rejected = 0
    rejected_last = False
    while t < tf:
        if tf - t <= h_min:
            break
        h = min(h, tf - t)
        if h < h_min:
            raise IntegrationError(f"step size {h!r} fell below h_min = {h_min!r}", t)
        for s in range(1, 7):
            ys_stage = y + h * np.dot(_A[s], k[:s])
            k[s] = f(t + _C[s] * h, ys_stage)
        y_new = ys_stage  # stage 7 is evaluated at the fifth-order solution
        err = h * np.dot(_E, k)
        scale = np.maximum(rel_tol * np.maximum(np.abs(y), np.abs(y_new)), abs_tol)
        ratio = float(np.max(np.abs(err) / scale))
        if not math.isfinite(ratio):
            if not np.all(np.isfinite(y_new)):
                ratio = math.inf
            else:
                raise IntegrationError("non-finite error estimate", t)

        if ratio <= 1.0:
            t_new = tf if tf - (t + h) <= h_min else t + h
            y = _checked(y_new, t_new, project)
            t = t_new
            ts.append(t)
            ys.append(y.copy())
            ratios.append(ratio)
            k[0] = k[6] if project is None else f(t, y)
            factor = MAX_FACTOR if ratio == 0.0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * ratio ** -0.2))
            if rejected_last:
                factor = min(factor, 1.0)
            rejected_last = False
        else:
            n_rejected += 1
            factor = MIN_FACTOR if not math.isfinite(ratio) else max(MIN_FACTOR, SAFETY * ratio ** -0.2)
            rejected_last = True
        h *= factor

    ts[-1] = float(tf)
    return Trajectory(
        np.array(ts),
        np.array(ys),
        meta={
            "method": "dp45",
            "rel_tol": rel_tol,
            "abs_tol": abs_tol,
            "n_accepted": len(ratios),
            "n_rejected": n_rejected,
            "error_ratios": np.array(ratios),
        },
    )


def sample(traj: Trajectory, t: float) -> np.ndarray:
    """State at ``t`` by linear interpolation between the bracketing samples."""
    t = float(t)
    if not traj.t[0] <= t <= traj.t[-1]:
        raise ValueError(f"t = {t!r} outside the trajectory span [{traj.t[0]!r}, {traj.t[-1]!r}]")
    i = int(np.searchsorted(traj.t, t, side="right")) - 1
    if i >= len(traj.t) - 1 or traj.t[i] == t:
        return traj.y[min(i, len(traj.t) - 1)].copy()
    w = (t - traj.t[i]) / (traj.t[i + 1] - traj.t[i])
    return traj.y[i] + w * (traj.y[i + 1] - traj.y[i])


def resample(traj: Trajectory, times) -> Trajectory:
    """Linearly interpolate ``traj`` (and its control, if any) onto ``times``."""
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < traj.t[0] or times[-1] > traj.t[-1]):
        raise ValueError("resampling times leave the trajectory span")
    y = np.column_stack([np.interp(times, traj.t, traj.y[:, j]) for j in range(traj.y.shape[1])])
    u = None if traj.u is None else np.interp(times, traj.t, traj.u)
    return Trajectory(times, y, u, meta=dict(traj.meta, resampled=True))
