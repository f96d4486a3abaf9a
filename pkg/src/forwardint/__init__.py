"""Integral-action forwarding feedback for conservative systems.

The package has two legs.  ``abstract_core`` plus ``integrator`` treat the
finite-dimensional closed loop: a conservative plant, a monotone actuator
nonlinearity, an output integrator, and the forwarding feedback that
stabilizes the pair.  ``wave_sim`` plus ``diagnostics`` instantiate the
same loop on a boundary-controlled string and reproduce its simulation
study.  ``cli`` exposes both as commands.
"""

from .abstract_core import (
    AbstractSystem,
    AssumptionReport,
    ExtendedState,
    ForwardingDesign,
    NormBounds,
    ProbeResult,
    abstract_system,
    closed_loop_field,
    control,
    dissipativity_probe,
    forwarding_operator,
    gain,
    load_matrix,
    lyap_inner,
    norm_equivalence,
    quad_form_matrix,
    state_from_vector,
    validate_assumptions,
)
from .diagnostics import (
    SweepSummary,
    monotonicity_audit,
    saturation_intervals,
    settle_time,
    summarize,
    sweep,
)
from .integrator import IntegratorConfig, Trajectory, integrate
from .nonlinearity import (
    Nonlinearity,
    PropertyReport,
    from_config,
    identity,
    saturation,
    scaled_sigmoid,
    verify_properties,
)
from .wave_sim import (
    DiagnosticsRow,
    WaveConfig,
    WaveState,
    analytic_mode,
    energy,
    init,
    lyapunov,
    m_functional,
    rows_to_arrays,
    simulate,
    step,
)
from .wave_sim import control as wave_control

__version__ = "0.1.0"

__all__ = [
    "AbstractSystem",
    "AssumptionReport",
    "DiagnosticsRow",
    "ExtendedState",
    "ForwardingDesign",
    "IntegratorConfig",
    "Nonlinearity",
    "NormBounds",
    "ProbeResult",
    "PropertyReport",
    "SweepSummary",
    "Trajectory",
    "WaveConfig",
    "WaveState",
    "abstract_system",
    "analytic_mode",
    "closed_loop_field",
    "control",
    "dissipativity_probe",
    "energy",
    "forwarding_operator",
    "from_config",
    "gain",
    "identity",
    "init",
    "integrate",
    "load_matrix",
    "lyap_inner",
    "lyapunov",
    "m_functional",
    "monotonicity_audit",
    "norm_equivalence",
    "quad_form_matrix",
    "rows_to_arrays",
    "saturation",
    "saturation_intervals",
    "scaled_sigmoid",
    "settle_time",
    "simulate",
    "state_from_vector",
    "step",
    "summarize",
    "sweep",
    "validate_assumptions",
    "verify_properties",
    "wave_control",
]
