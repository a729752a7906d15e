"""
``twist_orbits.framework``
==========================
Numerical framework for periodic orbits of symplectic twist maps.

A twist map of the cotangent bundle of the n-torus is given by a generating
function `S(q, Q)`. Its `(m, d)`-orbits are the critical points of the
discrete action of `(m, d)`-configurations, which are located by Newton's
method and counted modulo the symmetries of the configuration space. Time-1
maps of optical Hamiltonian flows are decomposed into chains of short-time
twist maps, and convex twist maps are suspended into Hamiltonian isotopies.

The framework is separated into modules as listed below.

Modules
-------
- `utils`
- `core`
- `genfun`
- `twistmap`
- `action`
- `orbits`
- `hamflow`
- `suspension`
- `serialisation`

"""

from .utils import (
    Matrix,
    Vector,
    as_vector,
    fd_jacobian,
    newton_solve,
    opnorm,
    relative_error,
    rk4,
    sym
)
from .core import (
    CoverPoint,
    DeckTranslation,
    OrbitClass,
    PhasePoint,
    SymplecticMatrixJ,
    deck_translate,
    reduce_to_torus,
    torus_distance
)
from .genfun import (
    DerivativeReport,
    FourierPotential,
    GeneratingFunction,
    LowerBoundCert,
    SamplingGrid,
    TwistConstants,
    catalog_genfun,
    certify_convexity,
    check_periodicity,
    fd_derivative_check,
    integrable_genfun,
    lower_bound_cert,
    standard_family_map,
    standard_genfun
)
from .twistmap import (
    MapChain,
    TwistMap,
    check_symplectic,
    compose,
    deck_equivariance_residual,
    twist_margin
)
from .action import (
    ActionEvaluator,
    CanonicalForm,
    Configuration,
    OrbitVerification,
    action_gradient,
    action_hessian,
    action_value,
    canonicalize,
    config_to_orbit,
    critical_residual,
    gaps,
    reconstruct,
    same_orbit,
    shift_points,
    verify_orbit
)
from .orbits import (
    DEGENERATE,
    OrbitCountReport,
    OrbitRecord,
    SearchBudget,
    critical_levels,
    distinct,
    find_critical_points,
    minimize_action,
    morse_census,
    morse_index,
    orbit_table
)
from .hamflow import (
    DecompositionPlan,
    FlowTwistMap,
    GronwallReport,
    HamiltonianModel,
    NumericGeneratingFunction,
    OpticalBounds,
    TangentFlowResult,
    TwistBlockReport,
    catalog_model,
    choose_N,
    decompose,
    estimate_optical_bounds,
    expression_model,
    flow,
    flow_fixed_point,
    flow_twist_map,
    free_model,
    gronwall_check,
    orbit_action,
    pendulum_model,
    short_time_genfun,
    tangent_flow,
    twist_block,
    verify_md_point
)
from .suspension import (
    CutoffFunction,
    SuspensionCheck,
    SuspensionFamily,
    convexity_audit,
    family_genfun,
    hamiltonian,
    inverse_isotopy_map,
    isotopy_map,
    make_cutoff,
    primitive,
    suspension_family,
    vector_field,
    verify_suspension
)
from .serialisation import (
    decode_document,
    encode_document
)
