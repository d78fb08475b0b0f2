"""Dengue transmission between humans and Aedes mosquitoes.

Submodules: ``model`` (parameters and vector fields), ``analysis``
(reproduction number, equilibria, sensitivity), ``integrator`` (RK4 and
Dormand-Prince), ``control`` (insecticide optimal control), ``cli``.
"""

from .analysis import (
    EquilibriumSet,
    ReproductionMetrics,
    SensitivityTable,
    Threshold,
    classify_threshold,
    equilibria,
    reproduction_metrics,
    sensitivity_index_fd,
    sensitivity_indices,
)
from .control import (
    AdjointVector,
    ControlWeights,
    FbsmOptions,
    FbsmResult,
    adjoint_rhs,
    characterize_control,
    cost,
    fbsm_solve,
    hamiltonian,
    simulate_control,
)
from .integrator import TimeGrid, Trajectory, integrate_dp45, integrate_rk4, resample, sample
from .model import (
    DEFAULT_INITIAL_STATE,
    SCENARIOS,
    ModelParameters,
    ScenarioPreset,
    SeasonalForcing,
    StateVector,
    get_scenario,
    rhs_constant,
    rhs_controlled,
    rhs_seasonal,
    vector_field,
)

__version__ = "0.1.0"
