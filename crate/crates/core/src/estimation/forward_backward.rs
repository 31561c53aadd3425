//! E-step quantities: state posteriors by scaled forward-backward, mixture
//! responsibilities, and an exhaustive-enumeration likelihood for small
//! sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gaussian_log_pdf, gaussian_pdf, log_sum_exp, ModelParams, ObservationSequence, Standardization};

/// Posterior tables of one sequence.
///
/// `xi[m][i][j]` is the joint posterior of state `i` at step `m` and state `j`
/// at step `m + 1`, so it has one entry fewer than `gamma`. State index 0 is
/// attentive, 1 is distracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTables {
    pub gamma: Vec<[f64; 2]>,
    pub xi: Vec<[[f64; 2]; 2]>,
    pub resp: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    /// Steps whose responsibilities fell back to uniform.
    pub resp_fallbacks: usize,
}

/// Mixture responsibilities of one target value.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub weights: Vec<f64>,
    /// Set when every component density vanished and the uniform split was used.
    pub fallback: bool,
}

/// `c_k N(y | mu_k, s_k^2) / sum_j c_j N(y | mu_j, s_j^2)`, evaluated in log space.
pub fn gmm_responsibilities(theta: &ModelParams, y: f64) -> Responsibilities {
    let logs: Vec<f64> = theta
        .mixture
        .iter()
        .map(|c| c.weight.ln() + gaussian_log_pdf(y, c.mean, c.variance))
        .collect();
    let total = log_sum_exp(logs.iter().copied());
    if !total.is_finite() {
        let k = theta.mixture.len();
        return Responsibilities {
            weights: vec![1.0 / k as f64; k],
            fallback: true,
        };
    }
    Responsibilities {
        weights: logs.iter().map(|l| (l - total).exp()).collect(),
        fallback: false,
    }
}

/// Runs the E step for `seq` under `theta`.
pub fn forward_backward(
    theta: &ModelParams,
    seq: &ObservationSequence,
    standardization: &Standardization,
) -> Result<PosteriorTables> {
    let design = seq.design(standardization)?;
    let predictions: Vec<f64> = design.iter().map(|phi| theta.predict(phi)).collect();
    posteriors_from_predictions(theta, &seq.subject_id, &predictions, &seq.targets)
}

/// Forward-backward with per-step normalization.
///
/// The forward variables are kept normalized to sum to one and the log of
/// every normalizer is accumulated into the sequence log-likelihood, which is
/// exactly `log sum_i a(z_N = i)` of the unscaled recursion.
pub(crate) fn posteriors_from_predictions(
    theta: &ModelParams,
    subject_id: &str,
    predictions: &[f64],
    targets: &[f64],
) -> Result<PosteriorTables> {
    let n_steps = targets.len();
    if n_steps == 0 || predictions.len() != n_steps {
        return Err(Error::InvalidSequence {
            subject_id: subject_id.to_string(),
            reason: "empty sequence or prediction length mismatch".into(),
        });
    }
    let a = &theta.transition;
    let log_a = a.map(|row| row.map(f64::ln));

    let log_e: Vec<[f64; 2]> = targets
        .iter()
        .zip(predictions)
        .map(|(&y, &f)| theta.log_emissions(y, f))
        .collect();

    let underflow = |step: usize| Error::EmissionUnderflow {
        subject_id: subject_id.to_string(),
        step,
    };

    // Forward pass.
    let mut alpha = vec![[0.0; 2]; n_steps];
    let mut log_c = vec![0.0; n_steps];
    for n in 0..n_steps {
        let log_prior: [f64; 2] = if n == 0 {
            theta.pi1.map(f64::ln)
        } else {
            let prev = alpha[n - 1];
            std::array::from_fn(|j| (prev[0] * a[0][j] + prev[1] * a[1][j]).ln())
        };
        let u = [log_prior[0] + log_e[n][0], log_prior[1] + log_e[n][1]];
        let lc = log_sum_exp(u);
        if !lc.is_finite() {
            return Err(underflow(n));
        }
        log_c[n] = lc;
        alpha[n] = u.map(|v| (v - lc).exp());
    }
    let log_likelihood: f64 = log_c.iter().sum();

    // Backward pass; rescaled to max 1 each step, which the normalizations of
    // gamma and xi below absorb.
    let mut beta = vec![[1.0; 2]; n_steps];
    for n in (0..n_steps.saturating_sub(1)).rev() {
        let shift = log_e[n + 1][0].max(log_e[n + 1][1]);
        let e = log_e[n + 1].map(|v| (v - shift).exp());
        let next = beta[n + 1];
        let mut b = [0.0; 2];
        for i in 0..2 {
            for j in 0..2 {
                if a[i][j] > 0.0 {
                    b[i] += a[i][j] * e[j] * next[j];
                }
            }
        }
        let m = b[0].max(b[1]);
        if !(m > 0.0) || !m.is_finite() {
            return Err(underflow(n + 1));
        }
        beta[n] = [b[0] / m, b[1] / m];
    }

    let mut gamma = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let g = [alpha[n][0] * beta[n][0], alpha[n][1] * beta[n][1]];
        let s = g[0] + g[1];
        if !(s > 0.0) || !s.is_finite() {
            return Err(underflow(n));
        }
        gamma.push([g[0] / s, g[1] / s]);
    }

    let mut xi = Vec::with_capacity(n_steps.saturating_sub(1));
    for n in 1..n_steps {
        let shift = log_e[n][0].max(log_e[n][1]);
        let mut t = [[0.0; 2]; 2];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                if a[i][j] > 0.0 {
                    let v = alpha[n - 1][i] * (log_a[i][j] + log_e[n][j] - shift).exp() * beta[n][j];
                    t[i][j] = v;
                    s += v;
                }
            }
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(underflow(n));
        }
        for row in &mut t {
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        xi.push(t);
    }

    let mut resp_fallbacks = 0;
    let resp = targets
        .iter()
        .map(|&y| {
            let r = gmm_responsibilities(theta, y);
            resp_fallbacks += r.fallback as usize;
            r.weights
        })
        .collect();

    Ok(PosteriorTables {
        gamma,
        xi,
        resp,
        log_likelihood,
        resp_fallbacks,
    })
}

/// Largest number of joint `(z, w)` paths [`brute_force_likelihood`] will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// `p(y | x, theta)` by summing the complete-data likelihood over every
/// attention path and every mixture-label path.
///
/// Exponential in the sequence length; intended as a reference for short
/// sequences.
pub fn brute_force_likelihood(
    theta: &ModelParams,
    seq: &ObservationSequence,
    standardization: &Standardization,
) -> Result<f64> {
    let n = seq.len();
    let k = theta.mixture.len();
    let terms = 2u128
        .checked_pow(n as u32)
        .and_then(|a| (k as u128).checked_pow(n as u32).and_then(|b| a.checked_mul(b)))
        .unwrap_or(u128::MAX);
    if terms > BRUTE_FORCE_LIMIT {
        return Err(Error::EnumerationTooLarge {
            terms,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let preds: Vec<f64> = seq
        .design(standardization)?
        .iter()
        .map(|phi| phi.iter().zip(&theta.beta).map(|(p, b)| p * b).sum())
        .collect();

    let mut z = vec![0usize; n];
    let mut w = vec![0usize; n];
    let mut total = 0.0;
    loop {
        loop {
            let mut p = theta.pi1[z[0]];
            for t in 1..n {
                p *= theta.transition[z[t - 1]][z[t]];
            }
            for t in 0..n {
                let comp = &theta.mixture[w[t]];
                p *= comp.weight;
                p *= if z[t] == 0 {
                    gaussian_pdf(seq.targets[t] - preds[t], 0.0, theta.sigma_sq)
                } else {
                    gaussian_pdf(seq.targets[t], comp.mean, comp.variance)
                };
            }
            total += p;
            if !odometer(&mut w, k) {
                break;
            }
        }
        if !odometer(&mut z, 2) {
            break;
        }
    }
    Ok(total)
}

/// Advances a base-`radix` counter; false once it wraps to all zeros.
fn odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}
