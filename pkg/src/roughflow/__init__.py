"""Simulation and certification toolkit for driven dynamical systems.

Layers: sampled paths and norms (`paths`), driver generators (`noise`),
two-level rough drivers (`rough`), vector field systems (`fields`),
one-step solvers with blow-up semantics (`solvers`), growth certificates
and crossing audits (`certificates`), worked examples (`gallery`), and the
``roughflow`` command line front end (`cli`).
"""

from .paths import (SampledPath, TwoParamProcess, holder_exponent_estimate,
                    holder_norm, holder_profile, p_variation,
                    p_variation_bruteforce, two_param_holder_norm)
from .noise import DriverSpec, brownian, fbm, generate, levy
from .rough import (ControlledPath, RoughPath, chen_defect,
                    controlled_from_driver, ito_lift, level2_reconstruct,
                    pure_quadratic_lift, remainder_norms, rough_integral)
from .fields import (PolynomialField, VectorFieldSystem, check_derivatives,
                     load_polynomial_system, system_from_polynomial)
from .solvers import (BLOWN_UP, COMPLETED, STEP_FLOOR, FlowPointSummary,
                      StepControl, Trajectory, derivative_flow, flow_grid,
                      localize_solve, ode_solve, rde_solve, young_solve)
from .certificates import (CertificateReport, CompletenessReport,
                           EnergyCheckRecord, EscapeEnvelope, GrowthSpec,
                           LevelRecord, PropagationReport, PvarAuditReport,
                           ViolationRecord, audit_batch, base_radius,
                           check_orthogonal_growth, check_radial_growth,
                           check_rde_growth, crossing_audit,
                           difference_energy_check, escape_time_envelope,
                           estimate_K, growth_control, hq_value,
                           level_time_scale, merge_reports,
                           one_point_propagation_audit, positivity_margin,
                           pvar_audit, strong_completeness_check)
from .gallery import (GalleryEntry, SharpCounterexample,
                      comparison_blowup_bound, registry, sharp_counterexample)

__version__ = "0.1.0"

__all__ = [
    "SampledPath", "TwoParamProcess", "holder_exponent_estimate",
    "holder_norm", "holder_profile", "p_variation", "p_variation_bruteforce",
    "two_param_holder_norm",
    "DriverSpec", "brownian", "fbm", "generate", "levy",
    "ControlledPath", "RoughPath", "chen_defect", "controlled_from_driver",
    "ito_lift", "level2_reconstruct", "pure_quadratic_lift",
    "remainder_norms", "rough_integral",
    "PolynomialField", "VectorFieldSystem", "check_derivatives",
    "load_polynomial_system", "system_from_polynomial",
    "BLOWN_UP", "COMPLETED", "STEP_FLOOR", "FlowPointSummary", "StepControl",
    "Trajectory", "derivative_flow", "flow_grid", "localize_solve",
    "ode_solve", "rde_solve", "young_solve",
    "CertificateReport", "CompletenessReport", "EnergyCheckRecord",
    "EscapeEnvelope", "GrowthSpec", "LevelRecord", "PropagationReport",
    "PvarAuditReport", "ViolationRecord", "audit_batch", "base_radius",
    "check_orthogonal_growth", "check_radial_growth", "check_rde_growth",
    "crossing_audit", "difference_energy_check", "escape_time_envelope",
    "estimate_K", "growth_control", "hq_value", "level_time_scale",
    "merge_reports", "one_point_propagation_audit", "positivity_margin",
    "pvar_audit", "strong_completeness_check",
    "GalleryEntry", "SharpCounterexample", "comparison_blowup_bound",
    "registry", "sharp_counterexample",
    "__version__",
]
