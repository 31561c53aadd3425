//! Parameter estimation: forward-backward posteriors, EM, the least-squares
//! baseline and likelihood-based model comparison.

pub mod compare;
pub mod em;
pub mod forward_backward;

pub use compare::{
    chi_square_critical, likelihood_ratio_from_statistic, likelihood_ratio_test, mse_fit,
    test_log_likelihood, LikelihoodRatio, MseFit, DEFAULT_EXTRA_PARAMS,
};
pub use em::{
    default_init, em_fit, em_fit_default, m_step, EmConfig, FitReport, MixtureWeightUpdate,
    ModelKind, RIDGE,
};
pub use forward_backward::{
    brute_force_likelihood, forward_backward, gmm_responsibilities, PosteriorTables,
    Responsibilities, BRUTE_FORCE_LIMIT,
};
