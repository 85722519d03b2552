"""Boundary PI control of a reaction-diffusion equation with state delay.

The package splits the workflow into four layers:

* :mod:`delaypi.spectral`  -- Sturm-Liouville eigenstructure of the open
  loop plant and the boundary-lift coupling coefficients.
* :mod:`delaypi.synthesis` -- finite-dimensional reduced model, integrator
  augmentation, pole placement and the design admissibility gates.
* :mod:`delaypi.simulate`  -- exponential time differencing integrator for
  the closed-loop delay system, with delay-mismatch support.
* :mod:`delaypi.analysis`  -- boundary traces, field reconstruction,
  decay-rate fits and regulation metrics.

``delaypi.cli`` wires these into the ``delaypi`` command-line tool.
"""

from .analysis import (
    DecayFit,
    RegulationReport,
    boundary_trace,
    field_on_grid,
    fit_decay_rate,
    regulation_metrics,
    with_boundary_trace,
)
from .quadrature import QuadratureError, adaptive_simpson
from .signals import (
    Constant,
    Piecewise,
    Ramp,
    Signal,
    SignalRangeError,
    Sinusoid,
    Smoothstep,
    Table,
    as_signal,
    signal_from_dict,
)
from .simulate import (
    CallableField,
    DivergenceError,
    HistoryBuffer,
    ModalField,
    Scenario,
    ScenarioError,
    SeparableField,
    SpaceProfile,
    Trajectory,
    ZeroField,
    compat_zeta0,
    initial_field_from_dict,
    project_initial,
    run,
)
from .spectral import (
    AlphaResult,
    ModeData,
    PlantParams,
    RootSolverError,
    SpectralBasis,
    TailConvergenceError,
    build_basis,
    compute_alpha,
    eigenfunction_matrix,
    eigenfunction_value,
    find_root_rn,
    inner_product,
    inner_products,
    trace_tail,
)
from .synthesis import (
    AugmentedModel,
    Design,
    DesignGateError,
    EigenSolverError,
    Equilibrium,
    InsufficientModesError,
    PlacementResult,
    TruncatedModel,
    assemble_augmented,
    assemble_truncated,
    compute_equilibrium,
    default_poles,
    design_feedback,
    kalman_check,
    place_poles,
    select_mode_count,
    verify_spectrum,
    with_gain,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaResult",
    "AugmentedModel",
    "CallableField",
    "Constant",
    "DecayFit",
    "Design",
    "DesignGateError",
    "DivergenceError",
    "EigenSolverError",
    "Equilibrium",
    "HistoryBuffer",
    "InsufficientModesError",
    "ModalField",
    "ModeData",
    "Piecewise",
    "PlacementResult",
    "PlantParams",
    "QuadratureError",
    "Ramp",
    "RegulationReport",
    "RootSolverError",
    "Scenario",
    "ScenarioError",
    "SeparableField",
    "Signal",
    "SignalRangeError",
    "Sinusoid",
    "Smoothstep",
    "SpaceProfile",
    "SpectralBasis",
    "Table",
    "TailConvergenceError",
    "Trajectory",
    "TruncatedModel",
    "ZeroField",
    "adaptive_simpson",
    "as_signal",
    "assemble_augmented",
    "assemble_truncated",
    "boundary_trace",
    "build_basis",
    "compat_zeta0",
    "compute_alpha",
    "compute_equilibrium",
    "default_poles",
    "design_feedback",
    "eigenfunction_matrix",
    "eigenfunction_value",
    "field_on_grid",
    "find_root_rn",
    "fit_decay_rate",
    "initial_field_from_dict",
    "inner_product",
    "inner_products",
    "kalman_check",
    "place_poles",
    "project_initial",
    "regulation_metrics",
    "run",
    "select_mode_count",
    "signal_from_dict",
    "trace_tail",
    "verify_spectrum",
    "with_gain",
    "with_boundary_trace",
]
