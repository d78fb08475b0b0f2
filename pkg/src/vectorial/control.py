"""Insecticide optimal control by Pontryagin's minimum principle.

The objective is

    C(u) = integral over [0, t_f] of  gamma_D * I_h(t) + gamma_S * u(t)**2  dt

subject to the controlled model, ``0 <= u <= 1``. The adjoint equations are
the negative state gradient of the Hamiltonian below (running cost plus the
costate-weighted controlled field), with ``lambda(t_f) = 0``. The optimal
control minimizes the Hamiltonian pointwise:

    u* = clip((lambda_4 * S_m + lambda_5 * I_m) / (2 * gamma_S), 0, 1)

and for ``gamma_S = 0`` the bang-bang rule ``u* = 1`` where the switching
function ``lambda_4 * S_m + lambda_5 * I_m`` is positive, else 0.

The solver is the forward-backward sweep: RK4 forward for the states under
the current control, RK4 backward for the costates, relaxed control update.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .integrator import IntegrationError, TimeGrid, Trajectory
from .model import ModelError, ModelParameters, StateVector, check_nonnegative, rhs_controlled

__all__ = [
    "AdjointVector",
    "ControlWeights",
    "DivergenceError",
    "FbsmOptions",
    "FbsmResult",
    "adjoint_rhs",
    "characterize_control",
    "cost",
    "fbsm_solve",
    "hamiltonian",
    "simulate_control",
]

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (sweep iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class ControlWeights:
    gamma_D: float = 1.0
    gamma_S: float = 1.0

    def __post_init__(self):
        gd, gs = float(self.gamma_D), float(self.gamma_S)
        if not (math.isfinite(gd) and math.isfinite(gs)) or gd < 0 or gs < 0:
            raise ModelError(f"cost weights must be finite and >= 0, got ({self.gamma_D!r}, {self.gamma_S!r})")
        if gd == 0 and gs == 0:
            raise ModelError("gamma_D and gamma_S cannot both be zero")
        object.__setattr__(self, "gamma_D", gd)
        object.__setattr__(self, "gamma_S", gs)


class AdjointVector(NamedTuple):
    """Costates paired with ``(S_h, I_h, R_h, S_m, I_m)``."""

    lambda_1: float
    lambda_2: float
    lambda_3: float
    lambda_4: float
    lambda_5: float


@dataclass(frozen=True)
class FbsmOptions:
    """Sweep settings.

    ``relaxation`` is the initial (and largest) weight of the new
    characterization in the control update. When ``adaptive`` is set, the
    weight is multiplied by ``shrink`` (not below ``min_relaxation``) each time
    the sweep residual grows and by ``grow`` (not above ``relaxation``) each
    time it falls. Plain relaxation cycles on this problem whenever the
    control straddles the level that pushes the reproduction number below one.
    """

    relaxation: float = 0.5
    tol: float = 1e-4
    max_iter: int = 200
    grid: TimeGrid = TimeGrid(0.0, 365.0, 3650)
    adaptive: bool = True
    shrink: float = 0.7
    grow: float = 1.1
    min_relaxation: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation!r}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink!r}")
        if not self.grow >= 1.0:
            raise ValueError(f"grow must be >= 1, got {self.grow!r}")
        if not 0.0 < self.min_relaxation <= self.relaxation:
            raise ValueError("min_relaxation must lie in (0, relaxation]")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")


@dataclass
class FbsmResult:
    control: np.ndarray
    states: Trajectory
    adjoint: Trajectory
    cost: float
    iterations: int
    converged: bool
    weights: ControlWeights
    history: list = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return self.states.t


def cost(states: Trajectory, u, w: ControlWeights) -> float:
    """Trapezoidal quadrature of ``gamma_D*I_h + gamma_S*u**2`` over the trajectory grid."""
    u = np.asarray(u, dtype=float)
    if u.shape != states.t.shape:
        raise ValueError(f"control has shape {u.shape} but the trajectory has {states.t.size} samples")
    integrand = w.gamma_D * states.y[:, 1] + w.gamma_S * u**2
    return float(np.trapezoid(integrand, states.t))


def _check_u(u: float) -> float:
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise ModelError(f"control must lie in [0, 1], got {u!r}")
    return u


def hamiltonian(state, adj, u: float, w: ControlWeights, params: ModelParameters) -> float:
    u = _check_u(u)
    I_h = float(state[1])
    field_ = rhs_controlled(state, params, u)
    return w.gamma_D * I_h + w.gamma_S * u * u + float(np.dot(np.asarray(adj, dtype=float), field_))


def adjoint_rhs(state, adj, u: float, w: ControlWeights, params: ModelParameters) -> np.ndarray:
    """Costate derivatives, ``-dH/d(state)``."""
    S_h, I_h, R_h, S_m, I_m = (float(v) for v in state)
    l1, l2, l3, l4, l5 = (float(v) for v in adj)
    p = params
    bite_mh = p.B * p.beta_mh / p.N_h
    bite_hm = p.B * p.beta_hm / p.N_h
    out = np.array(
        [
            (l1 - l2) * bite_mh * I_m + l1 * p.mu_h,
            -w.gamma_D + (l4 - l5) * bite_hm * S_m + l2 * (p.eta_h + p.mu_h) - l3 * p.eta_h,
            l3 * p.mu_h,
            (l4 - l5) * bite_hm * I_h + l4 * (p.mu_m + u),
            (l1 - l2) * bite_mh * S_h + l5 * (p.mu_m + u),
        ]
    )
    if not np.all(np.isfinite(out)):
        raise ModelError("non-finite adjoint derivative")
    return out


def switching_function(state, adj) -> float:
    return float(adj[3]) * float(state[3]) + float(adj[4]) * float(state[4])


def characterize_control(state, adj, gamma_S: float) -> float:
    """Pointwise minimizer of the Hamiltonian over ``[0, 1]``."""
    sigma = switching_function(state, adj)
    if gamma_S == 0:
        return 1.0 if sigma > 0 else 0.0
    return min(max(0.0, sigma / (2.0 * gamma_S)), 1.0)


def _characterize_all(x: np.ndarray, lam: np.ndarray, gamma_S: float) -> np.ndarray:
    sigma = lam[:, 3] * x[:, 3] + lam[:, 4] * x[:, 4]
    if gamma_S == 0:
        return np.where(sigma > 0, 1.0, 0.0)
    return np.clip(sigma / (2.0 * gamma_S), 0.0, 1.0)


def _forward(params: ModelParameters, y0, u: list, t: list) -> list:
    # scalar RK4 kernel for the controlled field; u is linear between nodes
    p = params
    N_h = p.N_h
    bite_mh, bite_hm = p.B * p.beta_mh / N_h, p.B * p.beta_hm / N_h
    mu_h, eta_h, mu_m = p.mu_h, p.eta_h, p.mu_m
    birth_h, birth_m, out_h = mu_h * N_h, mu_m * p.N_m, eta_h + mu_h

    def f(S_h, I_h, R_h, S_m, I_m, uu):
        new_h = bite_mh * I_m * S_h
        new_m = bite_hm * I_h * S_m
        loss_m = mu_m + uu
        return (
            birth_h - new_h - mu_h * S_h,
            new_h - out_h * I_h,
            eta_h * I_h - mu_h * R_h,
            birth_m - new_m - loss_m * S_m,
            new_m - loss_m * I_m,
        )

    S_h, I_h, R_h, S_m, I_m = (float(v) for v in y0)
    out = [(S_h, I_h, R_h, S_m, I_m)]
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        hh, h6 = 0.5 * h, h / 6.0
        um = 0.5 * (u[k] + u[k + 1])
        a = f(S_h, I_h, R_h, S_m, I_m, u[k])
        b = f(S_h + hh * a[0], I_h + hh * a[1], R_h + hh * a[2], S_m + hh * a[3], I_m + hh * a[4], um)
        c = f(S_h + hh * b[0], I_h + hh * b[1], R_h + hh * b[2], S_m + hh * b[3], I_m + hh * b[4], um)
        d = f(S_h + h * c[0], I_h + h * c[1], R_h + h * c[2], S_m + h * c[3], I_m + h * c[4], u[k + 1])
        S_h += h6 * (a[0] + 2.0 * (b[0] + c[0]) + d[0])
        I_h += h6 * (a[1] + 2.0 * (b[1] + c[1]) + d[1])
        R_h += h6 * (a[2] + 2.0 * (b[2] + c[2]) + d[2])
        S_m += h6 * (a[3] + 2.0 * (b[3] + c[3]) + d[3])
        I_m += h6 * (a[4] + 2.0 * (b[4] + c[4]) + d[4])
        out.append((S_h, I_h, R_h, S_m, I_m))
    return out


def _backward(params: ModelParameters, w: ControlWeights, x: list, u: list, t: list) -> list:
    # scalar RK4 kernel for adjoint_rhs in reversed time from lambda(t_f) = 0;
    # states and control enter linearly interpolated at the half step
    p = params
    bite_mh, bite_hm = p.B * p.beta_mh / p.N_h, p.B * p.beta_hm / p.N_h
    mu_h, eta_h, mu_m = p.mu_h, p.eta_h, p.mu_m
    out_h, gamma_D = eta_h + mu_h, w.gamma_D

    def g(xs, l1, l2, l3, l4, l5, uu):
        S_h, I_h, _, S_m, I_m = xs
        d12, d45 = (l1 - l2) * bite_mh, (l4 - l5) * bite_hm
        loss_m = mu_m + uu
        return (
            d12 * I_m + l1 * mu_h,
            -gamma_D + d45 * S_m + l2 * out_h - l3 * eta_h,
            l3 * mu_h,
            d45 * I_h + l4 * loss_m,
            d12 * S_h + l5 * loss_m,
        )

    n = len(t)
    lam = [None] * n
    l1 = l2 = l3 = l4 = l5 = 0.0
    lam[-1] = (l1, l2, l3, l4, l5)
    for k in range(n - 1, 0, -1):
        h = t[k] - t[k - 1]
        hh, h6 = 0.5 * h, h / 6.0
        xk, xk1 = x[k], x[k - 1]
        xm = tuple(0.5 * (a_ + b_) for a_, b_ in zip(xk, xk1))
        um = 0.5 * (u[k] + u[k - 1])
        a = g(xk, l1, l2, l3, l4, l5, u[k])
        b = g(xm, l1 - hh * a[0], l2 - hh * a[1], l3 - hh * a[2], l4 - hh * a[3], l5 - hh * a[4], um)
        c = g(xm, l1 - hh * b[0], l2 - hh * b[1], l3 - hh * b[2], l4 - hh * b[3], l5 - hh * b[4], um)
        d = g(xk1, l1 - h * c[0], l2 - h * c[1], l3 - h * c[2], l4 - h * c[3], l5 - h * c[4], u[k - 1])
        l1 -= h6 * (a[0] + 2.0 * (b[0] + c[0]) + d[0])
        l2 -= h6 * (a[1] + 2.0 * (b[1] + c[1]) + d[1])
        l3 -= h6 * (a[2] + 2.0 * (b[2] + c[2]) + d[2])
        l4 -= h6 * (a[3] + 2.0 * (b[3] + c[3]) + d[3])
        l5 -= h6 * (a[4] + 2.0 * (b[4] + c[4]) + d[4])
        lam[k - 1] = (l1, l2, l3, l4, l5)
    return lam


def simulate_control(params: ModelParameters, y0, u, grid: TimeGrid) -> Trajectory:
    """RK4 states under a control given at the grid nodes, linear in between.

    ``u`` may be a scalar (constant control) or one value per node.
    """
    t = grid.times
    u = np.broadcast_to(np.asarray(u, dtype=float), t.shape).copy()
    if not np.all(np.isfinite(u)) or np.any((u < 0) | (u > 1)):
        raise ModelError("control values must lie in [0, 1]")
    y0 = check_nonnegative(np.asarray(y0, dtype=float), params.N_h)
    x = np.array(_forward(params, y0, u.tolist(), t.tolist()))
    bad = ~np.all(np.isfinite(x), axis=1)
    if bad.any():
        raise IntegrationError("non-finite state", float(t[np.argmax(bad)]))
    try:
        x = check_nonnegative(x, params.N_h)
    except ValueError as exc:
        raise IntegrationError(str(exc)) from exc
    return Trajectory(t, x, u, meta={"method": "rk4", "variant": "controlled", "h": grid.h})


def backward_sweep(params: ModelParameters, w: ControlWeights, states: Trajectory, u) -> Trajectory:
    """Costates by reversed-time RK4 from ``lambda(t_f) = 0`` along ``states``."""
    u = np.broadcast_to(np.asarray(u, dtype=float), states.t.shape)
    lam = np.array(_backward(params, w, states.y.tolist(), u.tolist(), states.t.tolist()))
    return Trajectory(states.t, lam, meta={"method": "rk4", "direction": "backward"})


def fbsm_solve(
    params: ModelParameters,
    y0,
    w: ControlWeights,
    opts: FbsmOptions | None = None,
    u0=0.0,
) -> FbsmResult:
    """Forward-backward sweep for the insecticide control problem.

    Starting from ``u0`` (default: no control), each sweep integrates the
    states forward, the costates backward from zero, and moves the control a
    fraction of the way toward its characterization ``u_char``. Iteration
    stops when the sweep residual ``max|u_char - u_old|`` drops to
    ``tol * max(1, max|u_char|)``; this bounds the relaxed change
    ``max|u_new - u_old|`` by the same quantity for any relaxation weight.

    The result carries the states and costates of the last sweep together
    with the unrelaxed characterization computed from them, so the control
    minimizes the Hamiltonian exactly at every stored node. The states were
    integrated under the previous iterate, which on convergence lies within
    ``tol`` of the returned control in sup-norm. ``converged`` is False when
    ``max_iter`` sweeps were not enough.
    """
    opts = opts if opts is not None else FbsmOptions()
    grid = opts.grid
    u = np.broadcast_to(np.asarray(u0, dtype=float), grid.times.shape).copy()
    y0 = np.asarray(y0, dtype=float)
    omega = opts.relaxation
    history = []
    converged = False
    iteration = 0
    previous = math.inf

    def sweep(u_now: np.ndarray, it: int) -> tuple[Trajectory, Trajectory]:
        try:
            states = simulate_control(params, y0, u_now, grid)
            adjoint = backward_sweep(params, w, states, u_now)
        except (IntegrationError, ModelError) as exc:
            raise DivergenceError(str(exc), it) from exc
        if not np.all(np.isfinite(adjoint.y)):
            raise DivergenceError("non-finite costate", it)
        return states, adjoint

    while iteration < opts.max_iter:
        iteration += 1
        states, adjoint = sweep(u, iteration)
        u_char = _characterize_all(states.y, adjoint.y, w.gamma_S)
        residual = float(np.max(np.abs(u_char - u)))
        history.append(residual)
        log.debug("sweep %d: residual %.3e, relaxation %.3g", iteration, residual, omega)
        if residual <= opts.tol * max(1.0, float(np.max(np.abs(u_char)))):
            converged = True
            break
        if opts.adaptive:
            if residual > previous:
                omega = max(omega * opts.shrink, opts.min_relaxation)
            else:
                omega = min(omega * opts.grow, opts.relaxation)
        previous = residual
        u = (1.0 - omega) * u + omega * u_char

    u_star = u_char
    states.u = u_star
    if converged:
        log.info("sweep converged after %d iterations", iteration)
    else:
        log.warning("forward-backward sweep did not converge in %d iterations", opts.max_iter)
    return FbsmResult(
        control=u_star,
        states=states,
        adjoint=adjoint,
        cost=cost(states, u_star, w),
        iterations=iteration,
        converged=converged,
        weights=w,
        history=history,
    )


def adjoint_at(result: FbsmResult, k: int) -> AdjointVector:
    return AdjointVector(*result.adjoint.y[k])


def state_at(result: FbsmResult, k: int) -> StateVector:
    return StateVector.from_array(result.states.y[k])
