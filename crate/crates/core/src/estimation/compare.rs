//! The i.i.d. Gaussian baseline and held-out model comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::em::{e_step, prepare, weighted_beta, FitReport, ModelKind};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelParams, Standardization, VARIANCE_FLOOR};

/// Extra parameter count used by default in the likelihood-ratio test.
pub const DEFAULT_EXTRA_PARAMS: usize = 10;

/// Unweighted least squares `beta` and the mean squared residual.
pub(crate) fn least_squares(dataset: &Dataset, standardization: &Standardization) -> Result<(Vec<f64>, f64)> {
    let data = prepare(dataset, standardization)?;
    let (beta, n) = weighted_beta(&data, |_, _| 1.0)?;
    let mut sse = 0.0;
    for p in &data {
        for (phi, &y) in p.design.iter().zip(p.targets) {
            let r = y - crate::model::dot(&beta, phi);
            sse += r * r;
        }
    }
    Ok((beta, sse / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseFit {
    pub beta: Vec<f64>,
    /// Mean squared residual (the Gaussian noise MLE).
    pub sigma_sq: f64,
}

impl MseFit {
    /// The fit as a member of the latent model: never distracted.
    pub fn as_params(&self) -> ModelParams {
        ModelParams::iid_gaussian(self.beta.clone(), self.sigma_sq.max(VARIANCE_FLOOR))
    }

    /// Wraps the fit into the common model file format.
    pub fn into_report(self, dataset: &Dataset) -> Result<FitReport> {
        let theta_star = self.as_params();
        let ll = test_log_likelihood(&theta_star, dataset, &dataset.standardization)?;
        Ok(FitReport {
            kind: ModelKind::Mse,
            theta_star,
            standardization: dataset.standardization.clone(),
            ll_trace: vec![ll],
            iterations: 0,
            converged: true,
        })
    }
}

/// Ordinary least squares on the basis; errors on a rank-deficient design.
pub fn mse_fit(dataset: &Dataset) -> Result<MseFit> {
    let (beta, sigma_sq) = least_squares(dataset, &dataset.standardization)?;
    Ok(MseFit { beta, sigma_sq })
}

/// Sum over sequences of the forward-pass log-likelihood `log p(y | x, theta)`,
/// with features mapped through `standardization` (the one the model was
/// fitted with).
pub fn test_log_likelihood(theta: &ModelParams, test: &Dataset, standardization: &Standardization) -> Result<f64> {
    theta.ensure_valid()?;
    let data = prepare(test, standardization)?;
    Ok(e_step(theta, &data)?.iter().map(|p| p.log_likelihood).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatio {
    pub lambda: f64,
    pub extra_params: usize,
    pub alpha: f64,
    /// Upper-`alpha` quantile of the chi-square distribution.
    pub critical_value: f64,
    pub p_value: f64,
    /// `lambda > critical_value`.
    pub reject_null: bool,
}

/// Likelihood-ratio test from the two maximized log-likelihoods.
///
/// `lambda = 2 (ll_proposed - ll_baseline)`; the nested baseline is rejected
/// when `lambda` strictly exceeds the chi-square critical value. A negative
/// `lambda` beyond rounding slack means the richer fit failed.
pub fn likelihood_ratio_test(
    ll_proposed: f64,
    ll_baseline: f64,
    extra_params: usize,
    alpha: f64,
) -> Result<LikelihoodRatio> {
    let lambda = 2.0 * (ll_proposed - ll_baseline);
    let slack = 1e-9 * (1.0 + ll_baseline.abs().max(ll_proposed.abs()));
    if lambda < -slack || lambda.is_nan() {
        return Err(Error::NegativeLikelihoodRatio { lambda });
    }
    likelihood_ratio_from_statistic(lambda.max(0.0), extra_params, alpha)
}

pub fn likelihood_ratio_from_statistic(lambda: f64, extra_params: usize, alpha: f64) -> Result<LikelihoodRatio> {
    if extra_params == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "likelihood-ratio test needs r >= 1 and 0 < alpha < 1 (got r = {extra_params}, alpha = {alpha})"
        )));
    }
    let dist = ChiSquared::new(extra_params as f64)
        .map_err(|e| Error::InvalidConfig(format!("chi-square distribution: {e}")))?;
    let critical_value = chi_square_critical(extra_params, alpha)?;
    Ok(LikelihoodRatio {
        lambda,
        extra_params,
        alpha,
        critical_value,
        p_value: dist.sf(lambda),
        reject_null: lambda > critical_value,
    })
}

/// `chi^2_{r, alpha}`: the value exceeded with probability `alpha`.
pub fn chi_square_critical(extra_params: usize, alpha: f64) -> Result<f64> {
    let dist = ChiSquared::new(extra_params as f64)
        .map_err(|e| Error::InvalidConfig(format!("chi-square distribution: {e}")))?;
    Ok(dist.inverse_cdf(1.0 - alpha))
}
