"""Closed-form modified maximum likelihood estimators for the gamma,
Nakagami-m, Wilson-Hilferty and beta distributions."""

__version__ = "0.1.0"

from mmle.distributions import (
    BetaParams,
    GammaParams,
    GeneralizedBetaParams,
    GeneralizedGammaParams,
    NakagamiParams,
    SampleBatch,
    derive_seed,
    sample_beta,
    sample_gamma,
    sample_generalized_gamma,
    sample_nakagami,
    sample_wilson_hilferty,
)
from mmle.errors import DegenerateSample, DomainError, NonConvergence, QuadratureError, SingularMatrix
from mmle.estimators import (
    EstimateReport,
    MatrixPair,
    beta_avar,
    beta_q,
    jk_matrices_beta,
    jk_matrices_power_gamma,
    mmle_beta,
    mmle_gamma,
    mmle_nakagami,
    mmle_power_gamma,
    mmle_wilson_hilferty,
    modified_eq_residuals,
    sandwich_covariance,
    verify_score_zero,
)
from mmle.mle import SolverConfig, mle_beta, mle_gamma, mle_nakagami, mle_power_gamma, mle_wilson_hilferty
from mmle.montecarlo import ExperimentConfig, ExperimentResult, normality_check, run_experiment
