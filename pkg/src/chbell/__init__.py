"""Clauser-Horne Bell-test toolkit for non-maximally entangled photon pairs.

Predicts coincidence statistics of the two-photon state
(|HH> + f e^{i phi} |VV>)/sqrt(1+f^2) behind two polarizers, evaluates the
Clauser-Horne sum in probability, count, and detection-efficiency form,
certifies its local-realistic bound by vertex enumeration, optimizes analyzer
angles, computes critical detection efficiencies, and runs seeded Monte Carlo
coincidence-counting experiments.
"""

from .errors import DomainError, InternalConsistencyError
from .inequality import (
    CHResult,
    CountsTable,
    LHVMaximum,
    LHVStrategy,
    Outcome,
    all_coincidence_strategies,
    ch_from_counts,
    ch_probability_sum,
    ch_with_efficiency,
    lhv_maximum,
)
from .model import (
    NO_POLARIZER,
    AnalyzerSetting,
    EntangledState,
    JointOutcome,
    SettingsQuad,
    as_setting,
    coincidence_probability,
    joint_outcome_distribution,
    make_state,
    single_probability,
)
from .montecarlo import (
    CHExperimentResult,
    DetectionModel,
    LHVMixture,
    RunRecord,
    VisibilityScanResult,
    cell_seed,
    simulate_cell,
    simulate_ch_experiment,
    simulate_lhv_source,
    visibility_scan,
)
from .optimize import (
    EfficiencyCurvePoint,
    OptimizationReport,
    canonical_quad,
    critical_efficiency,
    efficiency_curve,
    optimize_angles,
    quad_distance_deg,
    quad_orbit_distance_deg,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyzerSetting",
    "CHExperimentResult",
    "CHResult",
    "CountsTable",
    "DetectionModel",
    "DomainError",
    "EfficiencyCurvePoint",
    "EntangledState",
    "InternalConsistencyError",
    "JointOutcome",
    "LHVMaximum",
    "LHVMixture",
    "LHVStrategy",
    "NO_POLARIZER",
    "OptimizationReport",
    "Outcome",
    "RunRecord",
    "SettingsQuad",
    "VisibilityScanResult",
    "all_coincidence_strategies",
    "as_setting",
    "canonical_quad",
    "cell_seed",
    "ch_from_counts",
    "ch_probability_sum",
    "ch_with_efficiency",
    "coincidence_probability",
    "critical_efficiency",
    "efficiency_curve",
    "joint_outcome_distribution",
    "lhv_maximum",
    "make_state",
    "optimize_angles",
    "quad_distance_deg",
    "quad_orbit_distance_deg",
    "simulate_cell",
    "simulate_ch_experiment",
    "simulate_lhv_source",
    "single_probability",
    "visibility_scan",
    "__version__",
]
