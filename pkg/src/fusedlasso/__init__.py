"""Exact 1-D fused lasso (total-variation denoising) for change-point detection."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    Segmentation,
    SignChange,
    Signal,
    StepModel,
    as_signal,
    compress,
    eps_sign_consistent,
    expand,
    set_distance,
)
from .errors import (
    CertificateError,
    ConfigError,
    ConvergenceError,
    DegenerateVarianceError,
    DomainError,
    FusedLassoError,
    InputError,
)
from .extensions import (
    TrendFit,
    VarianceSegmentation,
    trend_admm,
    trend_solve,
    trend_verify_kkt,
    variance_solve,
)
from .lasso import (
    IrrepProfile,
    LassoEquivalent,
    exact_recovery_failure_rate,
    irrep_profile,
    lasso_solve,
    lemma10_witness,
    normal_matrix,
    strong_irrep_holds,
    to_lasso,
)
from .path import LambdaPath, PathEvent, trace_path, validate_nesting
from .solver import (
    DualCertificate,
    KktReport,
    dual_variables,
    lambda_max,
    oracle_solve,
    polish,
    segment_means,
    solve,
    verify_kkt,
)

__all__ = [name for name in dir() if not name.startswith("_")]
