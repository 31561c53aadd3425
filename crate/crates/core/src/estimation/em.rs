//! Expectation-maximization for the latent-attention model.
//!
//! Each sequence is an independent chain sharing one parameter set. The E
//! step runs per sequence (in parallel); the M step pools the expected
//! sufficient statistics of all sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward_backward::{posteriors_from_predictions, PosteriorTables};
use crate::error::{Error, Result};
use crate::linalg::WeightedLeastSquares;
use crate::model::{
    Dataset, MixtureComponent, ModelParams, Standardization, BASIS_DIM, VARIANCE_FLOOR,
};

/// Ridge added to the weighted normal equations when the attentive posterior
/// mass is smaller than the number of coefficients.
pub const RIDGE: f64 = 1e-8;

/// How the mixture weights are re-estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureWeightUpdate {
    /// Average of the exact marginal posterior of the mixture label,
    /// `gamma_attentive * c_old + gamma_distracted * r`. An exact EM step.
    #[default]
    ExactMarginal,
    /// Average of the responsibilities `r` alone, treating the label as
    /// independent of the attention state given the sample. Not an exact EM
    /// step; the likelihood is not guaranteed to increase.
    Factorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once `|ll_new - ll_old| <= rel_tol * |ll_old|`.
    pub rel_tol: f64,
    /// Number of mixture components.
    pub k: usize,
    /// Seed for the random initial mixture means.
    pub seed: u64,
    #[serde(default)]
    pub weight_update: MixtureWeightUpdate,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-8,
            k: 2,
            seed: 0,
            weight_update: MixtureWeightUpdate::ExactMarginal,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Latent-attention model fitted by EM.
    Hmm,
    /// i.i.d. Gaussian regression (least squares).
    Mse,
}

/// Outcome of a fit; also the on-disk model format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: ModelKind,
    pub theta_star: ModelParams,
    pub standardization: Standardization,
    /// Train log-likelihood of every visited parameter set, starting with the
    /// initial one.
    pub ll_trace: Vec<f64>,
    /// Number of M steps taken.
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.ll_trace.last().expect("trace is never empty")
    }
}

/// Sequence designs evaluated once per fit.
pub(crate) struct Prepared<'a> {
    pub subject_id: &'a str,
    pub design: Vec<[f64; BASIS_DIM]>,
    pub targets: &'a [f64],
}

pub(crate) fn prepare<'a>(dataset: &'a Dataset, standardization: &Standardization) -> Result<Vec<Prepared<'a>>> {
    dataset
        .sequences
        .par_iter()
        .map(|s| {
            Ok(Prepared {
                subject_id: &s.subject_id,
                design: s.design(standardization)?,
                targets: &s.targets,
            })
        })
        .collect()
}

pub(crate) fn e_step(theta: &ModelParams, data: &[Prepared<'_>]) -> Result<Vec<PosteriorTables>> {
    data.par_iter()
        .map(|p| {
            let preds: Vec<f64> = p.design.iter().map(|phi| theta.predict(phi)).collect();
            posteriors_from_predictions(theta, p.subject_id, &preds, p.targets)
        })
        .collect()
}

/// Least-squares fit of `y` on the basis, weighting sample `n` of sequence
/// `s` by `weight(s, n)`. Sequences are factored in parallel and merged in
/// index order, so the result does not depend on the thread count.
pub(crate) fn weighted_beta<W>(data: &[Prepared<'_>], weight: W) -> Result<(Vec<f64>, f64)>
where
    W: Fn(usize, usize) -> f64 + Sync,
{
    let parts: Vec<WeightedLeastSquares> = data
        .par_iter()
        .enumerate()
        .map(|(s, p)| {
            let mut wls = WeightedLeastSquares::new(BASIS_DIM);
            for (n, (phi, &y)) in p.design.iter().zip(p.targets).enumerate() {
                wls.push(phi, y, weight(s, n));
            }
            wls
        })
        .collect();
    let wls = parts
        .into_iter()
        .reduce(WeightedLeastSquares::merge)
        .unwrap_or_else(|| WeightedLeastSquares::new(BASIS_DIM));
    let mass = wls.total_weight();
    if !(mass > 0.0) {
        return Err(Error::SingularSystem(
            "no attentive posterior mass: every sample is explained by distraction".into(),
        ));
    }
    let ridge = if mass < BASIS_DIM as f64 { RIDGE } else { 0.0 };
    Ok((wls.solve(ridge)?, mass))
}

/// Maximizer of the expected complete-data log-likelihood.
///
/// `posteriors[s]` must come from the E step of `dataset.sequences[s]` under
/// `theta_old`.
pub fn m_step(
    posteriors: &[PosteriorTables],
    dataset: &Dataset,
    theta_old: &ModelParams,
    weight_update: MixtureWeightUpdate,
) -> Result<ModelParams> {
    let data = prepare(dataset, &dataset.standardization)?;
    m_step_prepared(posteriors, &data, theta_old, weight_update)
}

pub(crate) fn m_step_prepared(
    posteriors: &[PosteriorTables],
    data: &[Prepared<'_>],
    theta_old: &ModelParams,
    weight_update: MixtureWeightUpdate,
) -> Result<ModelParams> {
    if posteriors.len() != data.len() || posteriors.is_empty() {
        return Err(Error::InvalidDataset(format!(
            "{} posterior tables for {} sequences",
            posteriors.len(),
            data.len()
        )));
    }
    let k = theta_old.mixture.len();

    // Initial distribution, averaged over sequences.
    let mut pi1 = [0.0; 2];
    for post in posteriors {
        pi1[0] += post.gamma[0][0];
        pi1[1] += post.gamma[0][1];
    }
    let s = pi1[0] + pi1[1];
    let pi1 = [pi1[0] / s, pi1[1] / s];

    // Transitions, pooled expected counts.
    let mut counts = [[0.0; 2]; 2];
    for post in posteriors {
        for x in &post.xi {
            for i in 0..2 {
                for j in 0..2 {
                    counts[i][j] += x[i][j];
                }
            }
        }
    }
    let mut transition = theta_old.transition;
    for i in 0..2 {
        let row = counts[i][0] + counts[i][1];
        // A state that is never left keeps its old row.
        if row > 0.0 {
            transition[i] = [counts[i][0] / row, counts[i][1] / row];
        }
    }

    // Regression coefficients: least squares weighted by the attentive posterior.
    let (beta, attentive_mass) = weighted_beta(data, |s, n| posteriors[s].gamma[n][0])?;

    let mut sse = 0.0;
    for (p, post) in data.iter().zip(posteriors) {
        for ((phi, &y), g) in p.design.iter().zip(p.targets).zip(&post.gamma) {
            let r = y - crate::model::dot(&beta, phi);
            sse += g[0] * r * r;
        }
    }
    let sigma_sq = (sse / attentive_mass).max(VARIANCE_FLOOR);

    // Mixture: weights, then means, then variances around the new means.
    let total_steps: usize = data.iter().map(|p| p.targets.len()).sum();
    let mut label_mass = vec![0.0; k];
    let mut mass = vec![0.0; k];
    let mut first = vec![0.0; k];
    for (p, post) in data.iter().zip(posteriors) {
        for ((&y, g), r) in p.targets.iter().zip(&post.gamma).zip(&post.resp) {
            for c in 0..k {
                let joint = g[1] * r[c];
                label_mass[c] += match weight_update {
                    MixtureWeightUpdate::ExactMarginal => g[0] * theta_old.mixture[c].weight + joint,
                    MixtureWeightUpdate::Factorized => r[c],
                };
                mass[c] += joint;
                first[c] += joint * y;
            }
        }
    }
    let mut mixture: Vec<MixtureComponent> = theta_old.mixture.clone();
    for c in 0..k {
        mixture[c].weight = label_mass[c] / total_steps as f64;
        if mass[c] > 0.0 {
            mixture[c].mean = first[c] / mass[c];
        }
    }
    let label_total: f64 = mixture.iter().map(|m| m.weight).sum();
    for m in &mut mixture {
        m.weight /= label_total;
    }
    let mut second = vec![0.0; k];
    for (p, post) in data.iter().zip(posteriors) {
        for ((&y, g), r) in p.targets.iter().zip(&post.gamma).zip(&post.resp) {
            for c in 0..k {
                let dev = y - mixture[c].mean;
                second[c] += g[1] * r[c] * dev * dev;
            }
        }
    }
    for c in 0..k {
        if mass[c] > 0.0 {
            mixture[c].variance = (second[c] / mass[c]).max(VARIANCE_FLOOR);
        }
    }

    Ok(ModelParams {
        beta,
        sigma_sq,
        pi1,
        transition,
        mixture,
    })
}

/// Initial parameters: least-squares `beta`, `sigma = 0.5`, uniform chain and
/// weights, unit component variances and means drawn uniformly from `[-1, 1]`.
pub fn default_init(dataset: &Dataset, k: usize, seed: u64) -> Result<ModelParams> {
    if k < 1 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let (beta, _) = super::compare::least_squares(dataset, &dataset.standardization)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixture = (0..k)
        .map(|_| MixtureComponent {
            weight: 1.0 / k as f64,
            mean: rng.random_range(-1.0..=1.0),
            variance: 1.0,
        })
        .collect();
    Ok(ModelParams {
        beta,
        sigma_sq: 0.25,
        pi1: [0.5, 0.5],
        transition: [[0.5, 0.5], [0.5, 0.5]],
        mixture,
    })
}

/// Alternates E and M steps from `theta0` until the relative change of the
/// train log-likelihood drops below `config.rel_tol` or `config.max_iters`
/// M steps have been taken.
pub fn em_fit(dataset: &Dataset, theta0: &ModelParams, config: &EmConfig) -> Result<FitReport> {
    config.validate()?;
    theta0.ensure_valid()?;
    if theta0.mixture.len() != config.k {
        return Err(Error::InvalidConfig(format!(
            "initial parameters have {} components, config asks for {}",
            theta0.mixture.len(),
            config.k
        )));
    }
    let data = prepare(dataset, &dataset.standardization)?;
    let wrap = |iteration: usize| move |e: Error| Error::Iteration {
        iteration,
        source: Box::new(e),
    };

    let mut theta = theta0.clone();
    let mut ll_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let posts = e_step(&theta, &data).map_err(wrap(iterations))?;
        let ll: f64 = posts.iter().map(|p| p.log_likelihood).sum();
        if let Some(&prev) = ll_trace.last() {
            let prev: f64 = prev;
            if (ll - prev).abs() <= config.rel_tol * prev.abs() {
                converged = true;
            }
        }
        ll_trace.push(ll);
        if converged || iterations == config.max_iters {
            break;
        }
        theta = m_step_prepared(&posts, &data, &theta, config.weight_update).map_err(wrap(iterations))?;
        iterations += 1;
    }

    Ok(FitReport {
        kind: ModelKind::Hmm,
        theta_star: theta,
        standardization: dataset.standardization.clone(),
        ll_trace,
        iterations,
        converged,
    })
}

/// [`em_fit`] from [`default_init`] with the config's seed and `K`.
pub fn em_fit_default(dataset: &Dataset, config: &EmConfig) -> Result<FitReport> {
    let theta0 = default_init(dataset, config.k, config.seed)?;
    em_fit(dataset, &theta0, config)
}
