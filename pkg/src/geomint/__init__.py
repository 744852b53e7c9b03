"""Structure-preserving integrators built from retraction and discretization maps.

Symplectic one-step methods on T*Q, Lie-Poisson methods on the dual of a Lie
algebra, Poisson methods on action groupoids and trivial principal bundles,
composition methods, and a verification harness for the geometric invariants
the constructions guarantee.
"""

from .algebra import (
    AlgebraElement,
    CoAlgebraElement,
    GroupElement,
    LieAlgebra,
    ad_star,
    adjoint,
    bracket,
    coadjoint,
    hat,
    so3,
    vee,
)
from .compose import (
    StepMap,
    action_step_map,
    adjoint_step,
    canonical_step_map,
    compose_with_coeffs,
    lp_step_map,
    solve_order3_coeffs,
    strang_pair,
    triple_jump,
)
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    GeomintError,
    GroupMembershipError,
    LinearSolveError,
    ParameterError,
    RetractionDomainError,
    UnsupportedRealizationError,
)
from .retractions import (
    AxiomReport,
    RetractionMap,
    VectorDiscretizationMap,
    adjoint_map,
    cayley_retraction,
    check_axioms,
    cotangent_exchange,
    cotangent_exchange_inverse,
    cotangent_lift,
    exp_retraction,
    is_symmetric,
    tangent_lift,
    theta_map,
)
from .solvers import SolverConfig, StepInfo, newton_solve

__version__ = "0.1.0"
