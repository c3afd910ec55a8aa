"""Wasserstein dataset compression for distributionally robust data-enabled
predictive control."""

from .compress import (CompressionConfig, SyntheticDataset, WassersteinCompressor,
                       compress, eta_curve, in_convex_hull, recompute_eta)
from .deepc import (AmbiguitySpec, ControlSolution, CostSpec, RobustProblem,
                    ambiguity_radius, build_robust, conjugate_bound,
                    deterministic_deepc, soften, solve_robust, solve_softened)
from .hankel import (HankelBlocks, HankelMatrix, InitialWindow, build_hankel,
                     is_persistently_exciting, min_data_length, span_residual,
                     split_blocks, stacked_hankel)
from .harness import (ExperimentConfig, ReferenceSpec, RunLog,
                      collect_training_data, compare_runs,
                      double_integrator_model, figure8_reference,
                      run_receding_horizon)
from .lp import LinearProgram, LpOptions, LpSolution, solve_lp
from .lti import (NoiseModel, SystemRealization, Trajectory, load_model,
                  quadcopter_model, save_model, simulate, step)
from .transport import (CostMatrix, DiscreteDistribution, TransportPlan,
                        cost_matrix, sinkhorn, solve_exact_ot, wasserstein)

__version__ = "0.1.0"
