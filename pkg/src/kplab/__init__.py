"""Numerical laboratory for non-localized KP-I solutions.

Three tiers of the same field, each an oracle for the next: a Nystrom
solve of the spectral-plane integral equation (exact), a finite
determinant reduction (degenerate kernel), and closed-form soliton-train
asymptotics.  A validation layer ties all of them back to the PDE.
"""

from .asymptotics import (
    TrainParams,
    delta_N,
    gamma_matrix,
    intervals_In,
    R_n,
    ridge_curves,
    soliton_train,
    train_params,
    u_theta,
)
from .domain import (
    BoundarySpec,
    QuadratureRule,
    SpectralDomain,
    WeightSpec,
    boundary_point,
    build_quadrature,
    curvature_at,
    default_domain,
    validate_domain,
)
from .fredholm import (
    DiscreteOperator,
    PsiSolution,
    assemble_A,
    check_positivity,
    inner_psi_e,
    solve_psi,
    u_exact,
)
from .phase import (
    FrameCache,
    MinimizerFrame,
    find_k0,
    frame_at,
    log_E,
    phase_f,
)
from .reduction import (
    CoefficientMatrix,
    MomentMatrix,
    SubdomainSpec,
    c_matrix,
    layered_rule,
    moments,
    psiN_inner_logdet,
    psiN_inner_rowrep,
    subdomain_spec,
    u_degenerate,
)
from .validation import (
    FieldGrid,
    compare_fields,
    kp_residual,
    marchenko_F,
    marchenko_residual,
)

__all__ = [
    "BoundarySpec", "QuadratureRule", "SpectralDomain", "WeightSpec",
    "boundary_point", "build_quadrature", "curvature_at", "default_domain",
    "validate_domain",
    "FrameCache", "MinimizerFrame", "find_k0", "frame_at", "log_E", "phase_f",
    "DiscreteOperator", "PsiSolution", "assemble_A", "check_positivity",
    "inner_psi_e", "solve_psi", "u_exact",
    "CoefficientMatrix", "MomentMatrix", "SubdomainSpec", "c_matrix",
    "layered_rule", "moments", "psiN_inner_logdet", "psiN_inner_rowrep",
    "subdomain_spec", "u_degenerate",
    "TrainParams", "delta_N", "gamma_matrix", "intervals_In", "R_n",
    "ridge_curves", "soliton_train", "train_params", "u_theta",
    "FieldGrid", "compare_fields", "kp_residual", "marchenko_F",
    "marchenko_residual",
]

__version__ = "0.1.0"
