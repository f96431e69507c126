"""rbstc: inter-event time analysis for linear sampled-data systems under
region-based self-triggered control.

The state space is split into conic regions, each firing with a fixed
inter-event time; the direction of the state at events then evolves under a
normalized jump map whose eigenstructure decides whether, where and how the
inter-event times settle to a constant or a periodic sequence.
"""

from .calibrate import calibrate_sigma
from .config import AnalysisConfig, ConfigError, load_config, parse_config
from .errors import (AssumptionViolationError, CalibrationError,
                     HypothesisViolationError, InvalidArgumentError,
                     NumericalFailureError, UnsupportedFormError)
from .gamma import (IETTrace, SteadyState, detect_steady_state, gamma_step,
                    simulate, trace_to_dict, write_trace_csv)
from .invariants import (PISCandidate, SMuReport, dominant_limit_set,
                         find_invariant_subspaces, find_pirs,
                         find_union_of_rays, reig, s_mu, screen_pis_without_pir,
                         screen_region)
from .numkit import (Spectrum, Subspace, Tolerances, eig, expm,
                     generalized_eigenspace, rspan, subspace_distance)
from .periodic import (PatternReport, PeriodicPattern, analyze_pattern,
                       pattern_matrix, pattern_membership)
from .pipeline import analyze, build_partition
from .regions import (Partition, RelativeTrigger, build_cone_partition,
                      build_polyhedral_partition, build_trigger_partition,
                      estimate_tau_bounds, membership, sample_region,
                      tau_e_relative, whole_space_partition)
from .stability import (SpectralPartition, StabilityVerdict, classify,
                        classify_general, empirical_probe)
from .system import (A1Report, LinearSystem, TransitionMatrix,
                     check_assumption_A1, pole_place_companion,
                     transition_matrix)

__version__ = "0.1.0"
