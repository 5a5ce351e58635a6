"""Mixed interior penalty DG methods for 1D fully nonlinear second order PDEs.

The unknown ``u`` is paired with three discrete second derivatives built from
left, central and right numerical fluxes, and the nonlinear operator is
replaced by a generalized monotone numerical operator with a numerical moment.
"""
from .mesh import Mesh, build_uniform_mesh
from .space import DGFunction, DGSpace, QuadratureRule, error_norms, l2_project, modified_l2_project
from .forms import AssembledForms, PenaltyConfig, assemble
from .operators import (DifferentialOperator, MomentOperator, NonFiniteOperatorError,
                        check_g_monotonicity, evaluate_fhat, implicit_euler_operator)
from .elliptic import (EllipticProblem, NewtonConfig, NewtonReport, NonConvergence, SolverState,
                       residual, secant_initial_guess, solve, solve_reduced)
from .parabolic import (ParabolicProblem, TimeGrid, TransientResult, Unstable, backward_euler_step,
                        discrete_second_derivatives, forward_euler_step, run_transient)
from .splitting import NoConvergence, SweepReport, split_solve
from .problems import TestCase, get
from .study import (ConvergenceTable, StudyConfig, expected_spatial_order, run_selectivity,
                    run_study)

__version__ = "0.1.0"
