"""idealconv: densities, ideals on the positive integers, and cluster
points of randomly selected subsequences, verified at desk scale.

The hot kernels (counter-based bit generation, compensated weighted
prefix sums, checkpointed counting) run on a compiled extension when it
is installed and on a numpy fallback otherwise; `kernel_backend()` tells
which one is active.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as _KERNEL_BACKEND
from ._kernels import available_backends
from .densities import (CheckpointSchedule, CheckpointValue, DensityEstimate,
                        WeightFunction, addlimit_check, alpha_density_upper,
                        alpha_vs_polya_diagnostic, asymptotic_density,
                        default_schedule, erdos_ulam_ratio, log_density_upper,
                        parse_weight, polya_upper, weight_sum)
from .errors import (AllUndecided, BeyondHorizon, GeneratorExhausted,
                     GridEpsilonMismatch, GridTooCoarse, IdealconvError,
                     InsufficientWindow, ScheduleBeyondHorizon,
                     SelectorExhausted, ZeroTotalWeight)
from .experiments import (ExperimentConfig, ExperimentReport, TrialRecord,
                          parse_config_file, run_convergence_theorem,
                          run_counterexample, run_main_theorem,
                          run_thinnability_suite, write_report)
from .ideals import (Decision, IdealSpec, PropertyReport, SetGenerator,
                     Verdict, Violation, alpha_ideal, counterexample_ideal,
                     default_roster, erdos_ulam_ideal, even_fin, fin,
                     member, parse_ideal_spec, polya_ideal, summable_ideal,
                     test_invariant, test_stretchable, test_thinnable,
                     test_weakly_thinnable, thin_extended, zero_density)
from .sampler import (SubsequenceSelector, complement_selector, derive_seed,
                      explicit_selector, index_trace, restrict,
                      sample_selector, selector_frequency)
from .sequences import (ClusterReport, RealSequence, auto_grid,
                        cluster_points, default_epsilon, escape_set,
                        evaluate, hit_set, ideal_converges,
                        parse_sequence_spec)
from .subsets import (DominanceCheck, SetRule, SubsetWindow, blocks,
                      bernoulli_window, canonical_enumerate, counting,
                      dominates, evens, multiples, naturals, odds,
                      parse_set_rule, parse_set_spec, progression, squares,
                      stretch, thin, window_complement, window_union)


def kernel_backend() -> str:
    """Name of the kernel backend selected at import: compiled or python."""
    return _KERNEL_BACKEND
