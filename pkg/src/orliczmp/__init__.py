"""orliczmp: anisotropic Orlicz-Sobolev norms and a numerical mountain-pass solver."""

from .gfunction import (
    AxiomReport,
    ConjugateOpts,
    ConjugateTable,
    Delta2Report,
    GFunctionSpec,
    GrowthReport,
    Nabla2Report,
    SamplingPlan,
    SimonenkoIndices,
    check_axioms,
    check_delta2,
    check_nabla2,
    compare_growth,
    conjugate_batch,
    conjugate_gfunction,
    fenchel_conjugate,
    make_gfunction,
    radial_minorant_inverse,
    recommended_plan,
    registered_gfunctions,
    simonenko_indices,
)
from .orlicz_space import (
    PeriodicGridFunction,
    SpaceReport,
    derivative,
    embedding_constant,
    holder_pairing,
    joint_norm,
    luxemburg_norm,
    modular,
    read_csv,
    rho,
    sobolev_norm,
    space_report,
    write_csv,
)
from .functional import (
    ProblemSpec,
    action,
    action_gradient,
    builtin_problem,
    el_residual,
    registered_problems,
    tent_function,
)
from .hypotheses import (
    HypothesisReport,
    Verdict,
    check_A3,
    check_A4,
    check_A5,
    check_A6,
    check_A7,
    check_all,
    check_theorem1,
    check_theorem2,
    theorem_inputs,
)
from .mountain_pass import (
    CertReport,
    MountainPassConfig,
    RimReport,
    SolveReport,
    certify,
    find_endpoint,
    newton_polish,
    solve,
    verify_rim,
)

__version__ = "0.1.0"
