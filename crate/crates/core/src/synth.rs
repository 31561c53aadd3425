//! Synthetic fly-by sessions and observations drawn from the attention model.
//!
//! The layout is a three-way intersection: a road along `y = junction.y`
//! and a stem leaving the junction in `+y`. The observer stands a few meters
//! short of the junction. A session is a sequence of fly-by events, each
//! followed by a pause with the robot parked at the end of its path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    basis_eval, AttentionState, Dataset, FeatureVector, MixtureComponent, ModelParams,
    ObservationSequence, Standardization, BASIS_DIM,
};

/// Path shapes through the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Along the road, passing the observer sideways.
    Straight,
    /// Down the stem toward the observer, then left.
    ApproachLeft,
    /// Down the stem toward the observer, then right.
    ApproachRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Template {
    pub shape: Shape,
    pub reversed: bool,
}

impl Template {
    /// The three shapes and their reverses.
    pub const ALL: [Template; 6] = [
        Template { shape: Shape::Straight, reversed: false },
        Template { shape: Shape::ApproachLeft, reversed: false },
        Template { shape: Shape::ApproachRight, reversed: false },
        Template { shape: Shape::Straight, reversed: true },
        Template { shape: Shape::ApproachLeft, reversed: true },
        Template { shape: Shape::ApproachRight, reversed: true },
    ];

    pub fn waypoints(&self, config: &ScenarioConfig) -> Vec<[f64; 2]> {
        let [jx, jy] = config.junction;
        let l = config.arm_length;
        let mut pts = match self.shape {
            Shape::Straight => vec![[jx - l, jy], [jx + l, jy]],
            Shape::ApproachLeft => vec![[jx, jy + l], [jx, jy], [jx - l, jy]],
            Shape::ApproachRight => vec![[jx, jy + l], [jx, jy], [jx + l, jy]],
        };
        if self.reversed {
            pts.reverse();
        }
        pts
    }
}

/// Fly-by generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Events per session.
    pub events: usize,
    /// Cruise speed range in m/s.
    pub speed_range: [f64; 2],
    /// Pause after each event in s.
    pub pause_range: [f64; 2],
    pub altitude: f64,
    /// Samples per second.
    pub sample_rate: f64,
    /// Observer head position.
    pub human_position: [f64; 3],
    pub junction: [f64; 2],
    pub arm_length: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            events: 30,
            speed_range: [2.0, 6.0],
            pause_range: [30.0, 40.0],
            altitude: 1.6,
            sample_rate: 2.0,
            human_position: [0.0, 0.0, 1.2],
            junction: [0.0, 3.0],
            arm_length: 40.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return bad("sample rate must be positive");
        }
        let [lo, hi] = self.speed_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("speed range must be positive and ordered");
        }
        let [lo, hi] = self.pause_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return bad("pause range must be nonnegative and ordered");
        }
        if !(self.arm_length > 0.0) {
            return bad("arm length must be positive");
        }
        if self.events == 0 {
            return bad("at least one event is required");
        }
        let finite = self.human_position.iter().chain(&self.junction).all(|v| v.is_finite());
        if !finite || !self.altitude.is_finite() {
            return bad("positions must be finite");
        }
        Ok(())
    }

    fn draw_event(&self, rng: &mut ChaCha8Rng) -> Event {
        let template = Template::ALL[rng.random_range(0..Template::ALL.len())];
        let speed = draw_in(rng, self.speed_range);
        let pause = draw_in(rng, self.pause_range);
        Event::new(template, speed, pause, self)
    }
}

fn draw_in(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One fly-by: constant-speed motion along a template, then a pause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub template: Template,
    pub speed: f64,
    pub pause: f64,
    waypoints: Vec<[f64; 2]>,
    altitude: f64,
    human: [f64; 3],
}

impl Event {
    pub fn new(template: Template, speed: f64, pause: f64, config: &ScenarioConfig) -> Self {
        Self {
            template,
            speed,
            pause,
            waypoints: template.waypoints(config),
            altitude: config.altitude,
            human: config.human_position,
        }
    }

    pub fn path_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| seg_len(w[0], w[1])).sum()
    }

    pub fn travel_time(&self) -> f64 {
        self.path_length() / self.speed
    }

    pub fn duration(&self) -> f64 {
        self.travel_time() + self.pause
    }

    /// Planar position and velocity `t` seconds after the event starts.
    pub fn state_at(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let mut s = t.max(0.0) * self.speed;
        for w in self.waypoints.windows(2) {
            let len = seg_len(w[0], w[1]);
            if s < len {
                let u = [(w[1][0] - w[0][0]) / len, (w[1][1] - w[0][1]) / len];
                let p = [w[0][0] + s * u[0], w[0][1] + s * u[1]];
                return (p, [self.speed * u[0], self.speed * u[1]]);
            }
            s -= len;
        }
        (*self.waypoints.last().expect("template has waypoints"), [0.0, 0.0])
    }

    pub fn features_at(&self, t: f64) -> FeatureVector {
        let (p, v) = self.state_at(t);
        features_from_state([p[0], p[1], self.altitude], [v[0], v[1], 0.0], self.human)
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Range and range rate to `human` plus the raw state. At zero range the
/// range rate is the speed.
pub fn features_from_state(position: [f64; 3], velocity: [f64; 3], human: [f64; 3]) -> FeatureVector {
    let r = [position[0] - human[0], position[1] - human[1], position[2] - human[2]];
    let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let d_dot = if d > 0.0 {
        (r[0] * velocity[0] + r[1] * velocity[1] + r[2] * velocity[2]) / d
    } else {
        (velocity[0].powi(2) + velocity[1].powi(2) + velocity[2].powi(2)).sqrt()
    };
    FeatureVector {
        d,
        d_dot,
        x: position[0],
        y: position[1],
        z: position[2],
        x_dot: velocity[0],
        y_dot: velocity[1],
        z_dot: velocity[2],
    }
}

/// One event sampled on its own time grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub event: Event,
    pub times: Vec<f64>,
    pub features: Vec<FeatureVector>,
}

/// Sampled features of a whole session.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub subject_id: String,
    pub times: Vec<f64>,
    pub features: Vec<FeatureVector>,
}

/// `config.events` fly-bys drawn from `config.seed`, each sampled at the
/// configured rate over its travel and pause.
pub fn simulate_flyby(config: &ScenarioConfig) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dt = 1.0 / config.sample_rate;
    Ok((0..config.events)
        .map(|_| {
            let event = config.draw_event(&mut rng);
            let n = (event.duration() * config.sample_rate).ceil() as usize;
            let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
            let features = times.iter().map(|&t| event.features_at(t)).collect();
            Trajectory { event, times, features }
        })
        .collect())
}

/// Back-to-back events on one uniform time grid. With `samples` set, events
/// are drawn until the session is that long and the tail is cut; otherwise
/// exactly `config.events` events are used. `stream` selects an independent
/// random stream so sessions can be generated in any order.
pub fn simulate_session(
    config: &ScenarioConfig,
    subject_id: impl Into<String>,
    samples: Option<usize>,
    stream: u64,
) -> Result<Session> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let dt = 1.0 / config.sample_rate;
    let mut times = Vec::new();
    let mut features = Vec::new();
    let mut start = 0.0;
    let mut events = 0;
    loop {
        let done = match samples {
            Some(n) => times.len() >= n,
            None => events == config.events,
        };
        if done {
            break;
        }
        let event = config.draw_event(&mut rng);
        let end = start + event.duration();
        loop {
            let t = times.len() as f64 * dt;
            if t >= end || samples.is_some_and(|n| times.len() >= n) {
                break;
            }
            times.push(t);
            features.push(event.features_at(t - start));
        }
        start = end;
        events += 1;
    }
    Ok(Session {
        subject_id: subject_id.into(),
        times,
        features,
    })
}

/// `subjects` independent sessions named `s001`, `s002`, ...
pub fn simulate_sessions(config: &ScenarioConfig, subjects: usize, samples: Option<usize>) -> Result<Vec<Session>> {
    (0..subjects)
        .into_par_iter()
        .map(|i| simulate_session(config, format!("s{:03}", i + 1), samples, i as u64))
        .collect()
}

/// Attention and mixture-component labels of one generated sequence.
/// `w` is 0 for attentive samples and the 1-based component otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTrace {
    pub subject_id: String,
    pub times: Vec<f64>,
    pub z: Vec<AttentionState>,
    pub w: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub traces: Vec<LatentTrace>,
    pub theta_true: ModelParams,
}

/// Parameters used for synthetic experiments. Arousal falls with distance
/// (cubic in the normalized range) and rises with closing speed.
pub fn default_theta() -> ModelParams {
    let mut beta = vec![0.0; BASIS_DIM];
    beta[0] = -0.3;
    beta[1] = -0.5;
    beta[3] = -0.1;
    beta[4] = -0.3;
    ModelParams {
        beta,
        sigma_sq: 0.09,
        pi1: [0.5, 0.5],
        transition: [[0.95, 0.05], [0.10, 0.90]],
        mixture: vec![
            MixtureComponent { weight: 0.7, mean: 0.0, variance: 0.09 },
            MixtureComponent { weight: 0.3, mean: 1.5, variance: 0.36 },
        ],
    }
}

/// Draws attention chains and targets for each session. Features are
/// standardized with statistics of all sessions together, and targets are
/// produced directly on the scale of `theta_true`.
pub fn sample_observations(
    sessions: &[Session],
    theta_true: &ModelParams,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    theta_true.ensure_valid()?;
    let standardization = Standardization::fit(sessions.iter().flat_map(|s| s.features.iter()))?;
    let drawn: Vec<(ObservationSequence, LatentTrace)> = sessions
        .par_iter()
        .enumerate()
        .map(|(i, s)| sample_sequence(s, theta_true, &standardization, seed, i as u64))
        .collect::<Result<_>>()?;
    let (sequences, traces) = drawn.into_iter().unzip();
    let dataset = Dataset::with_standardization(sequences, standardization)?;
    Ok((
        dataset,
        GroundTruth {
            traces,
            theta_true: theta_true.clone(),
        },
    ))
}

fn sample_sequence(
    session: &Session,
    theta: &ModelParams,
    standardization: &Standardization,
    seed: u64,
    stream: u64,
) -> Result<(ObservationSequence, LatentTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let component = WeightedIndex::new(theta.mixture.iter().map(|c| c.weight))
        .map_err(|e| Error::InvalidConfig(format!("mixture weights: {e}")))?;
    let n = session.features.len();
    let mut z = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut state = draw_state(&mut rng, theta.pi1);
    for (step, x) in session.features.iter().enumerate() {
        if step > 0 {
            state = draw_state(&mut rng, theta.transition[state.index()]);
        }
        let y = match state {
            AttentionState::Attentive => {
                w.push(0);
                theta.predict(&basis_eval(x, standardization)?) + theta.sigma_sq.sqrt() * noise.sample(&mut rng)
            }
            AttentionState::Distracted => {
                let k = component.sample(&mut rng);
                w.push(k as u8 + 1);
                let c = &theta.mixture[k];
                c.mean + c.variance.sqrt() * noise.sample(&mut rng)
            }
        };
        z.push(state);
        targets.push(y);
    }
    let sequence = ObservationSequence::new(
        session.subject_id.clone(),
        session.times.clone(),
        session.features.clone(),
        targets,
    )?;
    let trace = LatentTrace {
        subject_id: session.subject_id.clone(),
        times: session.times.clone(),
        z,
        w,
    };
    Ok((sequence, trace))
}

fn draw_state(rng: &mut ChaCha8Rng, probs: [f64; 2]) -> AttentionState {
    if rng.random::<f64>() < probs[0] {
        AttentionState::Attentive
    } else {
        AttentionState::Distracted
    }
}

/// Sessions plus observations in one call.
pub fn generate(
    config: &ScenarioConfig,
    subjects: usize,
    samples: Option<usize>,
    theta_true: &ModelParams,
) -> Result<(Dataset, GroundTruth)> {
    let sessions = simulate_sessions(config, subjects, samples)?;
    // Observation noise uses a stream family separate from the trajectories.
    sample_observations(&sessions, theta_true, config.seed ^ 0x5eed_0b5e_7a71_0000)
}

/// Splits whole sequences into train and test parts. The number of training
/// sequences is `round(fraction * len)`; both parts keep the source
/// standardization and their original order.
pub fn split_dataset(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = dataset.sequences.len();
    if n < 2 {
        return Err(Error::InvalidSplit(format!("{n} sequence(s) cannot be split")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidSplit(format!(
            "fraction {train_fraction} of {n} sequences leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = dataset
        .sequences
        .iter()
        .cloned()
        .zip(in_train)
        .partition(|(_, t)| *t);
    let strip = |v: Vec<(ObservationSequence, bool)>| v.into_iter().map(|(s, _)| s).collect();
    Ok((
        Dataset::with_standardization(strip(train), dataset.standardization.clone())?,
        Dataset::with_standardization(strip(test), dataset.standardization.clone())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::forward_backward;

    fn template(shape: Shape, reversed: bool) -> Template {
        Template { shape, reversed }
    }

    #[test]
    fn head_on_approach_closes_in() {
        let cfg = ScenarioConfig::default();
        let ev = Event::new(template(Shape::ApproachLeft, false), 4.0, 30.0, &cfg);
        let t_closest = cfg.arm_length / 4.0;
        let mut prev = f64::INFINITY;
        let mut t = 0.0;
        while t < t_closest {
            let f = ev.features_at(t);
            assert!(f.d < prev);
            assert!(f.d_dot < 0.0);
            prev = f.d;
            t += 0.25;
        }
        let parked = ev.features_at(ev.travel_time() + 1.0);
        assert_eq!(parked.d_dot, 0.0);
        assert_eq!([parked.x, parked.y], [-40.0, 3.0]);
    }

    #[test]
    fn reversal_mirrors_range() {
        let cfg = ScenarioConfig::default();
        for shape in [Shape::Straight, Shape::ApproachLeft, Shape::ApproachRight] {
            let fwd = Event::new(template(shape, false), 3.0, 0.0, &cfg);
            let rev = Event::new(template(shape, true), 3.0, 0.0, &cfg);
            let tt = fwd.travel_time();
            assert!((tt - rev.travel_time()).abs() < 1e-12);
            for i in (1..50).filter(|&i| i != 25) {
                let t = tt * i as f64 / 50.0;
                let a = fwd.features_at(t);
                let b = rev.features_at(tt - t);
                assert!((a.d - b.d).abs() < 1e-9);
                assert!((a.d_dot + b.d_dot).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn range_rate_matches_finite_differences() {
        let cfg = ScenarioConfig::default();
        let h = 1e-5;
        for tpl in Template::ALL {
            let ev = Event::new(tpl, 5.0, 10.0, &cfg);
            let corner = if tpl.shape == Shape::Straight { f64::NAN } else { cfg.arm_length / 5.0 };
            for i in 0..200 {
                let t = 0.01 + ev.travel_time() * i as f64 / 200.0;
                if (t - corner).abs() < 1e-3 || (t - ev.travel_time()).abs() < 1e-3 {
                    continue;
                }
                let fd = (ev.features_at(t + h).d - ev.features_at(t - h).d) / (2.0 * h);
                assert!((fd - ev.features_at(t).d_dot).abs() < 1e-6, "{tpl:?} t={t}");
            }
        }
    }

    #[test]
    fn zero_range_uses_speed() {
        let f = features_from_state([1.0, 2.0, 3.0], [3.0, 4.0, 0.0], [1.0, 2.0, 3.0]);
        assert_eq!(f.d, 0.0);
        assert_eq!(f.d_dot, 5.0);
        let g = features_from_state([3.0, 4.0, 1.2], [0.0, 0.0, 0.0], [0.0, 0.0, 1.2]);
        assert_eq!((g.d, g.d_dot), (5.0, 0.0));
    }

    #[test]
    fn flyby_is_deterministic_and_sampled_at_rate() {
        let cfg = ScenarioConfig { events: 6, seed: 11, ..Default::default() };
        let a = simulate_flyby(&cfg).unwrap();
        assert_eq!(a, simulate_flyby(&cfg).unwrap());
        for tr in &a {
            assert!(tr.times.windows(2).all(|w| (w[1] - w[0] - 0.5).abs() < 1e-12));
            assert!(tr.features.iter().all(|f| f.z == 1.6 && f.z_dot == 0.0));
            assert!((tr.event.pause - 35.0).abs() <= 5.0);
            assert!(tr.event.speed >= 2.0 && tr.event.speed < 6.0);
        }
        let bad = ScenarioConfig { sample_rate: 0.0, ..Default::default() };
        assert!(simulate_flyby(&bad).is_err());
    }

    #[test]
    fn sessions_truncate_to_length() {
        let cfg = ScenarioConfig::default();
        let s = simulate_session(&cfg, "a", Some(777), 3).unwrap();
        assert_eq!(s.times.len(), 777);
        assert_eq!(s.features.len(), 777);
        assert_eq!(s.times[776], 776.0 * 0.5);
        let other = simulate_session(&cfg, "b", Some(777), 4).unwrap();
        assert_ne!(s.features, other.features);
        let by_events = simulate_session(&ScenarioConfig { events: 2, ..cfg }, "c", None, 0).unwrap();
        assert!(by_events.times.len() > 100);
    }

    fn sessions(n: usize, len: usize) -> Vec<Session> {
        simulate_sessions(&ScenarioConfig::default(), n, Some(len)).unwrap()
    }

    #[test]
    fn identity_chain_is_pure_regression() {
        let mut theta = default_theta();
        theta.pi1 = [1.0, 0.0];
        theta.transition = [[1.0, 0.0], [0.0, 1.0]];
        let (data, truth) = sample_observations(&sessions(5, 4000), &theta, 1).unwrap();
        let mut resid = Vec::new();
        for (seq, tr) in data.sequences.iter().zip(&truth.traces) {
            assert!(tr.z.iter().all(|z| *z == AttentionState::Attentive));
            assert!(tr.w.iter().all(|w| *w == 0));
            for (x, y) in seq.features.iter().zip(&seq.targets) {
                resid.push(y - theta.predict(&basis_eval(x, &data.standardization).unwrap()));
            }
        }
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 * 0.3 / n.sqrt());
        assert!((var / 0.09 - 1.0).abs() < 0.1);
        let within_one = resid.iter().filter(|r| r.abs() < 0.3).count() as f64 / n;
        assert!((within_one - 0.6827).abs() < 0.02);
    }

    #[test]
    fn pure_mixture_branch() {
        let mut theta = default_theta();
        theta.pi1 = [0.0, 1.0];
        theta.transition = [[0.9, 0.1], [0.0, 1.0]];
        theta.mixture = vec![MixtureComponent { weight: 1.0, mean: 0.7, variance: 0.25 }];
        let (data, truth) = sample_observations(&sessions(2, 3000), &theta, 2).unwrap();
        let ys: Vec<f64> = data.sequences.iter().flat_map(|s| s.targets.iter().copied()).collect();
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        assert!((mean - 0.7).abs() < 4.0 * 0.5 / n.sqrt());
        assert!(truth.traces.iter().all(|t| t.w.iter().all(|w| *w == 1)));
    }

    #[test]
    fn transition_frequencies_match() {
        let theta = default_theta();
        let (_, truth) = sample_observations(&sessions(1, 100_000), &theta, 3).unwrap();
        let z = &truth.traces[0].z;
        let mut counts = [[0.0f64; 2]; 2];
        for w in z.windows(2) {
            counts[w[0].index()][w[1].index()] += 1.0;
        }
        for i in 0..2 {
            let row = counts[i][0] + counts[i][1];
            for j in 0..2 {
                assert!((counts[i][j] / row - theta.transition[i][j]).abs() < 0.01);
            }
        }
    }

    #[test]
    fn generated_data_is_deterministic_and_scorable() {
        let cfg = ScenarioConfig { seed: 5, ..Default::default() };
        let (a, ta) = generate(&cfg, 3, Some(300), &default_theta()).unwrap();
        let (b, _) = generate(&cfg, 3, Some(300), &default_theta()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.traces.len(), 3);
        assert_eq!(ta.traces[1].z.len(), a.sequences[1].len());
        let fb = forward_backward(&default_theta(), &a.sequences[0], &a.standardization).unwrap();
        assert!(fb.log_likelihood.is_finite());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let (data, _) = generate(&ScenarioConfig::default(), 56, Some(20), &default_theta()).unwrap();
        let (train, test) = split_dataset(&data, 38.0 / 56.0, 9).unwrap();
        assert_eq!((train.sequences.len(), test.sequences.len()), (38, 18));
        let (train2, _) = split_dataset(&data, 38.0 / 56.0, 9).unwrap();
        assert_eq!(train, train2);
        let mut ids: Vec<&str> = train
            .sequences
            .iter()
            .chain(&test.sequences)
            .map(|s| s.subject_id.as_str())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 56);
        assert_eq!(train.standardization, data.standardization);
        assert!(split_dataset(&data, 1.0, 0).is_err());
        assert!(split_dataset(&data, 0.001, 0).is_err());
    }
}
