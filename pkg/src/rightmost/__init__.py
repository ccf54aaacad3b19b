"""Subcritical oriented percolation seen from its rightmost point."""
__version__ = "0.1.0"

from .lattice import (
    Boundary, BondLayer, ContractError, Environment, LevelConfig, SimParams,
    WindowOverflowError, backward_reach, coupled_step, coupling_check, forward_reach,
    sample_environment, sample_uniforms, step_forward,
)
from .view import (
    EMPTY, AnchoredConfig, CylinderPattern, DepthError, InitialCondition,
    SurvivalRecord, anchor, project, run_zeta_chain,
)
from .tables import DistributionTable, tv_distance
from .estimators import DecayFit, fit_log_linear, to_distribution, wilson_ci
from .qsd import (
    Kernel, TruncatedStateSpace, build_kernel, conditional_law_mc,
    convergence_experiment, yaglom, yaglom_sequence,
)
from .renewal import (
    NOT_REACHING, Cone, RenewalTrace, TailReport, compute_trace,
    estimate_beta, tail_statistics,
)
