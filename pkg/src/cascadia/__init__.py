"""Question selection and sequencing under the cascade browse model."""

__version__ = "0.1.0"

from .model import (Instance, Question, Sequence, agg_continuation,
                    instance_from_json, instance_to_json, kappa_answer_rate,
                    model_variant, reachability, validate_instance, zero_pna)
from .utility import (CallbackUtility, EntropyCoverage, MnlRevenue,
                      ModularUtility, UtilityFunction, build_utility,
                      check_monotone_submodular, eval_entropy, eval_mnl_revenue,
                      eval_modular)
from .evaluator import (BernoulliPanel, ComputeCapError, EvalReport,
                        IndependentInclusionTable, eval_exact, eval_monte_carlo,
                        eval_u, eval_v, expected_utility_independent)
from .solvers import (ConstraintSet, SolverResult, brute_force_subset,
                      greedy_knapsack, greedy_matroid_knapsack, greedy_partition)
from .policies import (InnerConfig, PolicyOutput, PolicySpec, RHO_SWEEP_DEFAULT,
                       alg1_no_pna, alg2_general, alg3_decay_no_pna,
                       alg4_decay_pna, alg5_pna_decision, alg6_scrolling,
                       apply_pna_choices, baseline_max_ent, baseline_random,
                       exact_optimal, solve)
from .assortment import (Catalog, Product, catalog_from_json,
                         catalog_to_instance, optimize_assortment)
from .harness import (CellParams, ExperimentConfig, ResultRow, SuiteResult,
                      adversarial_instance, apply_kappa, emit,
                      generate_instance, render_csv, render_json, run_suite)
