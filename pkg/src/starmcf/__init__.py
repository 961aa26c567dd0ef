"""Mean curvature flow of star-shaped radial graphs and numerical checks of its
gradient estimate and blow-up-time lower bound."""

from .geometry import (
    DegenerateShapeError, GeometryFields, StarShape, compute_fields, diameter,
    laplace_beltrami, make_shape,
)
from .flow import FlowConfig, FlowSeries, estimate_blowup_time, rhs, run, step
from .kernel import (
    KernelPoint, check_identity, check_monotonicity, q_bound_constant, q_value, rho,
    verify_case_inequalities, weighted_integrals,
)
from .estimates import (
    BarrierCubic, Constants, barrier_analysis, barrier_h, compute_constants, phi_monitor,
    residual_A_evolution, residual_f_evolution, theorem1_T, theorem2_lower_bound,
    verify_gradient_bound,
)
from .harness import ExperimentConfig, emit_outputs, parse_config, run_experiment

__version__ = "0.1.0"
