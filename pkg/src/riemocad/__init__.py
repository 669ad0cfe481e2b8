"""GNSS carrier-phase ambiguity resolution and attitude determination
with Riemannian optimization on the Stiefel manifold."""

from .costs import (CostContext, bound_lower, bound_upper, cost_c,
                    decompose_at_point)
from .floats import (DegenerateGeometryError, FloatSolutionAC, FloatSolutionUC,
                     RieMFloat, conditional_n, conditional_r, conditional_x,
                     solve_float_ac, solve_float_riemannian, solve_float_uc,
                     weighted_procrustes)
from .harness import (CampaignConfig, CampaignResult, MethodSummary,
                      TrialRecord, run_campaign, run_trial)
from .ils import (CandidateSet, IlsProblem, Method, SolverReport, decorrelate,
                  enumerate_candidates, solve_ac_ils, solve_ils, solve_mc_lambda,
                  solve_riemocad_lf, solve_riemocad_tf, solve_uc_ils)
from .model import (ObservationSet, Scenario, build_covariance,
                    build_design_matrices, objective_value, sample_scenario,
                    simulate_observations)
from .stiefel import (OptimizerConfig, StiefelPoint, TangentVector, minimize,
                      project_tangent, random_stiefel, retract_polar,
                      retract_qr, riemannian_hessian, riemannian_gradient)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
