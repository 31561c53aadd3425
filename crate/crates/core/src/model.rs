//! Types of the latent-attention arousal model: robot-state features, the
//! cubic feature basis, the linear predictor and the per-state emission
//! densities.
//!
//! The observed arousal `y` is explained either by the robot
//! (`y = f(x) + noise`, attentive state) or by an independent Gaussian
//! mixture (distracted state). Which branch produced a sample is hidden and
//! follows a two-state Markov chain.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of raw robot-state features.
pub const FEATURE_DIM: usize = 8;

/// Length of the basis vector: a bias plus `x`, `x^2`, `x^3` for every feature.
pub const BASIS_DIM: usize = 1 + 3 * FEATURE_DIM;

/// Lower bound applied to every variance estimate.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const SUM_TOLERANCE: f64 = 1e-9;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["d", "d_dot", "x", "y", "z", "x_dot", "y_dot", "z_dot"];

/// Robot state relative to the observer, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Robot-to-human distance.
    pub d: f64,
    /// Range rate; negative while closing in.
    pub d_dot: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub z_dot: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.d, self.d_dot, self.x, self.y, self.z, self.x_dot, self.y_dot, self.z_dot,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        Self {
            d: a[0],
            d_dot: a[1],
            x: a[2],
            y: a[3],
            z: a[4],
            x_dot: a[5],
            y_dot: a[6],
            z_dot: a[7],
        }
    }

    /// Returns an error naming the first non-finite entry.
    pub fn check_finite(&self) -> Result<()> {
        for (name, value) in FEATURE_NAMES.iter().zip(self.to_array()) {
            if !value.is_finite() {
                return Err(Error::NonFiniteFeature { dim: name, value });
            }
        }
        Ok(())
    }
}

/// Per-dimension affine map applied to features before basis expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; FEATURE_DIM],
    pub scale: [f64; FEATURE_DIM],
}

impl Standardization {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_DIM],
            scale: [1.0; FEATURE_DIM],
        }
    }

    /// z-score statistics of `features`. Dimensions without spread (for
    /// example the altitude of a constant-height flight) get scale 1, which
    /// maps them to exactly zero.
    pub fn fit<'a, I>(features: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let mut count = 0usize;
        let mut mean = [0.0; FEATURE_DIM];
        let mut m2 = [0.0; FEATURE_DIM];
        // Welford
        for f in features {
            f.check_finite()?;
            count += 1;
            for (i, v) in f.to_array().into_iter().enumerate() {
                let delta = v - mean[i];
                mean[i] += delta / count as f64;
                m2[i] += delta * (v - mean[i]);
            }
        }
        if count == 0 {
            return Err(Error::InvalidDataset(
                "cannot standardize an empty feature set".into(),
            ));
        }
        let mut scale = [1.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            let sd = (m2[i] / count as f64).sqrt();
            if sd > 1e-12 * mean[i].abs().max(1.0) {
                scale[i] = sd;
            }
        }
        Ok(Self { mean, scale })
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..FEATURE_DIM {
            if !self.mean[i].is_finite() || !(self.scale[i] > 0.0) || !self.scale[i].is_finite() {
                return Err(Error::InvalidDataset(format!(
                    "standardization for `{}` has mean {} and scale {}",
                    FEATURE_NAMES[i], self.mean[i], self.scale[i]
                )));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &FeatureVector) -> Result<[f64; FEATURE_DIM]> {
        x.check_finite()?;
        let mut out = x.to_array();
        for i in 0..FEATURE_DIM {
            out[i] = (out[i] - self.mean[i]) / self.scale[i];
        }
        Ok(out)
    }
}

/// Basis of already standardized features:
/// `[1, z1, z1^2, z1^3, z2, z2^2, z2^3, ...]`.
pub fn basis_from_standardized(z: &[f64; FEATURE_DIM]) -> [f64; BASIS_DIM] {
    let mut phi = [0.0; BASIS_DIM];
    phi[0] = 1.0;
    for (i, &v) in z.iter().enumerate() {
        let sq = v * v;
        phi[1 + 3 * i] = v;
        phi[2 + 3 * i] = sq;
        phi[3 + 3 * i] = sq * v;
    }
    phi
}

/// Standardizes `x` and expands it into the cubic per-coordinate basis.
pub fn basis_eval(x: &FeatureVector, standardization: &Standardization) -> Result<[f64; BASIS_DIM]> {
    Ok(basis_from_standardized(&standardization.apply(x)?))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Predicted arousal `beta . phi(x)`.
pub fn predict_arousal(beta: &[f64], x: &FeatureVector, standardization: &Standardization) -> Result<f64> {
    if beta.len() != BASIS_DIM {
        return Err(Error::DimensionMismatch {
            expected: BASIS_DIM,
            actual: beta.len(),
        });
    }
    let phi = basis_eval(x, standardization)?;
    Ok(dot(beta, &phi))
}

/// Density of `N(x | mean, variance)`.
pub fn gaussian_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    gaussian_log_pdf(x, mean, variance).exp()
}

pub fn gaussian_log_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let r = x - mean;
    -0.5 * ((2.0 * PI * variance).ln() + r * r / variance)
}

/// Hidden attention state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttentionState {
    /// Arousal is driven by the robot.
    Attentive,
    /// Arousal comes from an unrelated source.
    Distracted,
}

impl AttentionState {
    pub const ALL: [AttentionState; 2] = [AttentionState::Attentive, AttentionState::Distracted];

    pub fn index(self) -> usize {
        match self {
            AttentionState::Attentive => 0,
            AttentionState::Distracted => 1,
        }
    }

    /// 1 = attentive, 2 = distracted.
    pub fn tag(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl TryFrom<u8> for AttentionState {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(AttentionState::Attentive),
            2 => Ok(AttentionState::Distracted),
            other => Err(Error::InvalidStateTag(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    #[serde(rename = "c")]
    pub weight: f64,
    #[serde(rename = "mu")]
    pub mean: f64,
    #[serde(rename = "sigma_sq")]
    pub variance: f64,
}

/// Full parameter set of the latent-attention model.
///
/// The attentive branch has zero-mean noise with variance `sigma_sq`; the
/// distracted branch is the Gaussian mixture in `mixture`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: Vec<f64>,
    pub sigma_sq: f64,
    pub pi1: [f64; 2],
    #[serde(rename = "A")]
    pub transition: [[f64; 2]; 2],
    pub mixture: Vec<MixtureComponent>,
}

impl ModelParams {
    /// The i.i.d. Gaussian regression model embedded in the latent model:
    /// the chain starts attentive and never leaves.
    pub fn iid_gaussian(beta: Vec<f64>, sigma_sq: f64) -> Self {
        Self {
            beta,
            sigma_sq,
            pi1: [1.0, 0.0],
            transition: [[1.0, 0.0], [0.0, 1.0]],
            mixture: vec![MixtureComponent {
                weight: 1.0,
                mean: 0.0,
                variance: 1.0,
            }],
        }
    }

    pub fn k(&self) -> usize {
        self.mixture.len()
    }

    pub fn predict(&self, basis: &[f64]) -> f64 {
        dot(&self.beta, basis)
    }

    /// `log sum_k c_k N(y | mu_k, sigma_k^2)`.
    pub fn mixture_log_density(&self, y: f64) -> f64 {
        log_sum_exp(
            self.mixture
                .iter()
                .map(|c| c.weight.ln() + gaussian_log_pdf(y, c.mean, c.variance)),
        )
    }

    /// Log emission densities `[attentive, distracted]` given the prediction
    /// `f = beta . phi(x)`.
    pub fn log_emissions(&self, y: f64, prediction: f64) -> [f64; 2] {
        [
            gaussian_log_pdf(y - prediction, 0.0, self.sigma_sq),
            self.mixture_log_density(y),
        ]
    }

    /// `p(y | state, x)` for a basis vector `phi(x)`.
    pub fn emission_density(&self, y: f64, basis: &[f64], state: AttentionState) -> f64 {
        match state {
            AttentionState::Attentive => gaussian_pdf(y - self.predict(basis), 0.0, self.sigma_sq),
            AttentionState::Distracted => self
                .mixture
                .iter()
                .map(|c| c.weight * gaussian_pdf(y, c.mean, c.variance))
                .sum(),
        }
    }

    /// Same as [`ModelParams::emission_density`] with a raw state tag.
    pub fn emission_density_tagged(&self, y: f64, basis: &[f64], tag: u8) -> Result<f64> {
        Ok(self.emission_density(y, basis, AttentionState::try_from(tag)?))
    }

    /// Checks every parameter invariant and reports all violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<ParamViolation>> {
        let mut v = Vec::new();
        if self.beta.len() != BASIS_DIM {
            v.push(ParamViolation::BetaLength(self.beta.len()));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            v.push(ParamViolation::NonFinite("beta".into()));
        }
        check_variance(&mut v, "sigma_sq", self.sigma_sq);

        check_distribution(&mut v, &self.pi1, ParamViolation::InitialSum, |i, p| {
            ParamViolation::NegativeProbability(format!("pi1[{}] = {p}", i + 1))
        });
        for (r, row) in self.transition.iter().enumerate() {
            check_distribution(
                &mut v,
                row,
                |sum| ParamViolation::TransitionRowSum { row: r + 1, sum },
                |c, p| ParamViolation::NegativeProbability(format!("A[{}][{}] = {p}", r + 1, c + 1)),
            );
        }

        if self.mixture.is_empty() {
            v.push(ParamViolation::EmptyMixture);
        } else {
            let weights: Vec<f64> = self.mixture.iter().map(|c| c.weight).collect();
            check_distribution(&mut v, &weights, ParamViolation::MixtureSum, |k, p| {
                ParamViolation::NegativeProbability(format!("c[{}] = {p}", k + 1))
            });
            for (k, c) in self.mixture.iter().enumerate() {
                if !c.mean.is_finite() {
                    v.push(ParamViolation::NonFinite(format!("mu[{}]", k + 1)));
                }
                check_variance(&mut v, &format!("sigma_sq[{}]", k + 1), c.variance);
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidParams)
    }
}

/// Free function form of [`ModelParams::validate`].
pub fn validate_params(theta: &ModelParams) -> std::result::Result<(), Vec<ParamViolation>> {
    theta.validate()
}

fn check_variance(v: &mut Vec<ParamViolation>, name: &str, value: f64) {
    if !value.is_finite() {
        v.push(ParamViolation::NonFinite(name.to_string()));
    } else if value < VARIANCE_FLOOR {
        v.push(ParamViolation::VarianceBelowFloor {
            name: name.to_string(),
            value,
        });
    }
}

fn check_distribution(
    v: &mut Vec<ParamViolation>,
    probs: &[f64],
    bad_sum: impl Fn(f64) -> ParamViolation,
    negative: impl Fn(usize, f64) -> ParamViolation,
) {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            v.push(negative(i, p));
        }
    }
    let sum: f64 = probs.iter().sum();
    if !((sum - 1.0).abs() <= SUM_TOLERANCE) {
        v.push(bad_sum(sum));
    }
}

/// One broken invariant of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    BetaLength(usize),
    NonFinite(String),
    VarianceBelowFloor { name: String, value: f64 },
    NegativeProbability(String),
    InitialSum(f64),
    TransitionRowSum { row: usize, sum: f64 },
    MixtureSum(f64),
    EmptyMixture,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::BetaLength(n) => {
                write!(f, "beta has {n} coefficients, expected {BASIS_DIM}")
            }
            ParamViolation::NonFinite(name) => write!(f, "{name} is not finite"),
            ParamViolation::VarianceBelowFloor { name, value } => {
                write!(f, "{name} = {value}: variance below floor {VARIANCE_FLOOR}")
            }
            ParamViolation::NegativeProbability(what) => {
                write!(f, "probability {what} is negative or not finite")
            }
            ParamViolation::InitialSum(s) => write!(f, "pi1 sums to {s}"),
            ParamViolation::TransitionRowSum { row, sum } => {
                write!(f, "transition row {row} sums to {sum}")
            }
            ParamViolation::MixtureSum(s) => write!(f, "mixture weights sum to {s}"),
            ParamViolation::EmptyMixture => write!(f, "mixture has no components"),
        }
    }
}

/// Numerically safe `log(sum(exp(v)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let vals: Vec<f64> = values.into_iter().collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + vals.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// One subject's time-aligned features and arousal targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    pub subject_id: String,
    pub times: Vec<f64>,
    pub features: Vec<FeatureVector>,
    pub targets: Vec<f64>,
}

impl ObservationSequence {
    pub fn new(
        subject_id: impl Into<String>,
        times: Vec<f64>,
        features: Vec<FeatureVector>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let fail = |reason: String| Error::InvalidSequence {
            subject_id: subject_id.clone(),
            reason,
        };
        if features.is_empty() {
            return Err(fail("sequence is empty".into()));
        }
        if features.len() != targets.len() || times.len() != targets.len() {
            return Err(fail(format!(
                "{} times, {} feature rows and {} targets",
                times.len(),
                features.len(),
                targets.len()
            )));
        }
        if let Some(n) = targets.iter().position(|y| !y.is_finite()) {
            return Err(fail(format!("target at step {n} is not finite")));
        }
        for (n, f) in features.iter().enumerate() {
            f.check_finite().map_err(|e| fail(format!("step {n}: {e}")))?;
        }
        Ok(Self {
            subject_id,
            times,
            features,
            targets,
        })
    }

    /// Convenience constructor with times `0, 1, 2, ...`.
    pub fn from_samples(
        subject_id: impl Into<String>,
        features: Vec<FeatureVector>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        let times = (0..features.len()).map(|n| n as f64).collect();
        Self::new(subject_id, times, features, targets)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Basis vectors of every step under `standardization`.
    pub fn design(&self, standardization: &Standardization) -> Result<Vec<[f64; BASIS_DIM]>> {
        self.features
            .iter()
            .map(|f| basis_eval(f, standardization))
            .collect()
    }

    /// z-scores the targets of this sequence in place.
    pub fn normalize_targets(&mut self) {
        let n = self.targets.len() as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        let var = self.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for y in &mut self.targets {
            *y = (*y - mean) / sd;
        }
    }
}

/// Sequences sharing one feature standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<ObservationSequence>,
    pub standardization: Standardization,
}

impl Dataset {
    /// Builds a dataset standardized with its own feature statistics.
    pub fn new(sequences: Vec<ObservationSequence>) -> Result<Self> {
        let standardization = Standardization::fit(sequences.iter().flat_map(|s| s.features.iter()))?;
        Self::with_standardization(sequences, standardization)
    }

    pub fn with_standardization(
        sequences: Vec<ObservationSequence>,
        standardization: Standardization,
    ) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::InvalidDataset("dataset has no sequences".into()));
        }
        standardization.validate()?;
        Ok(Self {
            sequences,
            standardization,
        })
    }

    pub fn total_len(&self) -> usize {
        self.sequences.iter().map(|s| s.len()).sum()
    }
}
