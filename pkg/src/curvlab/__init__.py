"""Curvature-tensor workbench: cone membership, algebraic verification,
and reaction-flow experiments for Riemannian and Kahler curvature models.
"""

from .errors import BlowUpError, IntegrityError, InvalidInputError, SamplerError
from .tensors import (
    CONSTRUCTION_TOL,
    KAHLER_REACTION_REALIFY_SCALE,
    Frame,
    KahlerTensor,
    RiemannTensor,
    bianchi_residual,
    conjugate,
    curvature_operator,
    frame_value,
    make_kahler,
    make_riemann,
    norm,
    reaction_kahler,
    reaction_riemann,
    realify,
    ricci,
    ricci_eigenvalues,
    scalar,
    scale_of,
)
from .cones import (
    ConeReport,
    NobRank1Report,
    OptimizerConfig,
    cone_spec,
    defect,
    nob_rank1,
    nob_shift,
    oracle_defect,
    oracle_discretization_bound,
    shift_slope,
    witness_basis,
)
from .samplers import (
    SamplerConfig,
    direct_sum,
    fixture,
    flat,
    fubini_study,
    product,
    random_kahler,
    random_riemann,
    random_tensor,
    sample_in_cone,
    sphere,
)
from .verifiers import (
    VerifierReport,
    claim_ids,
    reevaluate,
    registry_csv,
    resolve_claim,
    verify,
    verify_all,
    verify_conditional,
    verify_identity,
)
from .flow import (
    FlowTrace,
    InequalityReport,
    InvarianceReport,
    StepControl,
    differential_inequality_check,
    fd_derivative,
    functional_value,
    integrate,
    invariance_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "IntegrityError",
    "InvalidInputError",
    "SamplerError",
    "CONSTRUCTION_TOL",
    "KAHLER_REACTION_REALIFY_SCALE",
    "Frame",
    "KahlerTensor",
    "RiemannTensor",
    "bianchi_residual",
    "conjugate",
    "curvature_operator",
    "frame_value",
    "make_kahler",
    "make_riemann",
    "norm",
    "reaction_kahler",
    "reaction_riemann",
    "realify",
    "ricci",
    "ricci_eigenvalues",
    "scalar",
    "scale_of",
    "ConeReport",
    "NobRank1Report",
    "OptimizerConfig",
    "cone_spec",
    "defect",
    "nob_rank1",
    "nob_shift",
    "oracle_defect",
    "oracle_discretization_bound",
    "shift_slope",
    "witness_basis",
    "SamplerConfig",
    "direct_sum",
    "fixture",
    "product",
    "flat",
    "fubini_study",
    "random_kahler",
    "random_riemann",
    "random_tensor",
    "sample_in_cone",
    "sphere",
    "VerifierReport",
    "claim_ids",
    "reevaluate",
    "registry_csv",
    "resolve_claim",
    "verify",
    "verify_all",
    "verify_conditional",
    "verify_identity",
    "FlowTrace",
    "InequalityReport",
    "InvarianceReport",
    "StepControl",
    "differential_inequality_check",
    "fd_derivative",
    "functional_value",
    "integrate",
    "invariance_experiment",
    "__version__",
]
