"""Closed-form analysis: reproduction number, equilibria, threshold, sensitivity indices."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import ModelError, ModelParameters, ScenarioPreset, StateVector, rhs_constant

__all__ = [
    "SENSITIVITY_PARAMETERS",
    "EquilibriumSet",
    "ReportedValueWarning",
    "ReproductionMetrics",
    "SensitivityTable",
    "Threshold",
    "classify_threshold",
    "compare_reported",
    "equilibria",
    "reproduction_metrics",
    "sensitivity_index_fd",
    "sensitivity_indices",
]

SENSITIVITY_PARAMETERS = ("B", "beta_mh", "beta_hm", "mu_h", "eta_h", "mu_m")

# |r0_squared - 1| at or below this counts as the threshold itself
CRITICAL_BAND = 1e-12


class ReportedValueWarning(UserWarning):
    """A computed quantity disagrees with the value published for a preset."""


@dataclass(frozen=True)
class ReproductionMetrics:
    r0: float
    r0_squared: float


def reproduction_metrics(params: ModelParameters) -> ReproductionMetrics:
    """Basic reproduction number of the constant-population model.

    ``r0_squared`` is the product of the human-to-mosquito and
    mosquito-to-human generation terms; ``r0`` is its square root.
    """
    p = params
    r0_squared = (p.B**2 * p.beta_hm * p.beta_mh * p.N_m) / ((p.eta_h + p.mu_h) * p.mu_m * p.N_h)
    return ReproductionMetrics(math.sqrt(r0_squared), r0_squared)


def compare_reported(preset: ScenarioPreset, rel_tol: float = 1e-4) -> ReproductionMetrics:
    """Compute the metrics of a preset and warn if they miss its published value."""
    metrics = reproduction_metrics(preset.params)
    reported = preset.reported_r0_squared
    if reported is not None and not math.isclose(metrics.r0_squared, reported, rel_tol=rel_tol):
        warnings.warn(
            f"scenario {preset.id}: computed r0_squared = {metrics.r0_squared:.4f} "
            f"does not reproduce the published {reported:.4f}",
            ReportedValueWarning,
            stacklevel=2,
        )
    return metrics


class Threshold(str, enum.Enum):
    DIES_OUT = "dies_out"
    ENDEMIC = "endemic"
    CRITICAL = "critical"

    def __str__(self):
        return self.value


def classify_threshold(params: ModelParameters) -> Threshold:
    r0_squared = reproduction_metrics(params).r0_squared
    if abs(r0_squared - 1.0) <= CRITICAL_BAND:
        return Threshold.CRITICAL
    return Threshold.DIES_OUT if r0_squared < 1.0 else Threshold.ENDEMIC


@dataclass(frozen=True)
class SensitivityTable:
    """Normalized forward sensitivity indices ``(dR0/dp) * p / R0``."""

    B: float
    beta_mh: float
    beta_hm: float
    mu_h: float
    eta_h: float
    mu_m: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in SENSITIVITY_PARAMETERS}

    def __getitem__(self, name: str) -> float:
        if name not in SENSITIVITY_PARAMETERS:
            raise KeyError(name)
        return getattr(self, name)


def sensitivity_indices(params: ModelParameters) -> SensitivityTable:
    # B enters squared, the betas and mu_m to the first power under the root
    if reproduction_metrics(params).r0 == 0.0:
        raise ModelError("sensitivity indices are undefined when r0 = 0")
    recovery = 2.0 * (params.eta_h + params.mu_h)
    return SensitivityTable(
        B=1.0,
        beta_mh=0.5,
        beta_hm=0.5,
        mu_h=-params.mu_h / recovery,
        eta_h=-params.eta_h / recovery,
        mu_m=-0.5,
    )


def sensitivity_index_fd(params: ModelParameters, which: str, rel_step: float = 1e-6) -> float:
    """Central difference estimate of the index from perturbed R0 evaluations."""
    if which not in SENSITIVITY_PARAMETERS:
        raise KeyError(f"no sensitivity index for {which!r}; choose from {SENSITIVITY_PARAMETERS}")
    if not 0.0 < rel_step <= 1e-2:
        raise ValueError(f"rel_step must lie in (0, 1e-2], got {rel_step!r}")
    base = reproduction_metrics(params).r0
    if base == 0.0:
        raise ModelError("sensitivity indices are undefined when r0 = 0")
    value = getattr(params, which)
    try:
        up = reproduction_metrics(params.replace(**{which: value * (1.0 + rel_step)})).r0
        down = reproduction_metrics(params.replace(**{which: value * (1.0 - rel_step)})).r0
    except ModelError as exc:
        raise ModelError(f"perturbing {which} by {rel_step:g} leaves its valid range: {exc}") from exc
    return (up - down) / (2.0 * rel_step * base)


@dataclass(frozen=True)
class EquilibriumSet:
    dfe: StateVector
    endemic: StateVector
    feasible: bool

    def residuals(self, params: ModelParameters) -> tuple[float, float]:
        """Max-norm of the vector field at the disease-free and endemic points."""
        return (
            float(np.max(np.abs(rhs_constant(self.dfe, params)))),
            float(np.max(np.abs(rhs_constant(self.endemic, params)))),
        )


def equilibria(params: ModelParameters) -> EquilibriumSet:
    """Disease-free point and the closed-form endemic point.

    The endemic components are returned even when infeasible (negative
    infected counts when r0 < 1); ``feasible`` is True only when all five are
    strictly positive.
    """
    p = params
    N_h, N_m, B = p.N_h, p.N_m, p.B
    recovery = p.eta_h + p.mu_h
    gap = p.mu_m * N_h * recovery - B**2 * p.beta_hm * p.beta_mh * N_m
    mos_pressure = B * p.beta_mh * N_m + p.mu_h * N_h
    hum_pressure = B * p.beta_hm * p.mu_h + p.mu_m * recovery

    S_h = N_h**2 * hum_pressure / (B * p.beta_hm * mos_pressure)
    I_h = -p.mu_h * N_h * gap / (B * p.beta_hm * recovery * mos_pressure)
    R_h = -p.eta_h * N_h * gap / (B * p.beta_hm * recovery * mos_pressure)
    S_m = p.mu_m * recovery * mos_pressure / (B * p.beta_mh * hum_pressure)
    I_m = -p.mu_h * gap / (B * p.beta_mh * hum_pressure)

    endemic = StateVector(S_h, I_h, R_h, S_m, I_m)
    return EquilibriumSet(
        dfe=StateVector(N_h, 0.0, 0.0, N_m, 0.0),
        endemic=endemic,
        feasible=all(v > 0.0 for v in endemic),
    )
