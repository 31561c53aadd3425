//! Arousal-aware minimum-time paths.
//!
//! A path is a Bernstein curve at constant altitude from `start` to `goal`.
//! Its cost is `J = t_f + gamma * integral max(0, f(x(t)) - b_a)^2 dt`, with
//! `f` the fitted arousal predictor and the integral taken by LGL
//! quadrature. Collision, speed and acceleration constraints are checked on
//! control points, which is conservative by the convex hull property.

mod bfgs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::FitReport;
use crate::geometry::{
    bernstein_basis, convex_hull, hull_clearance, lgl_quadrature, lgl_rule, BernsteinCurve, Circle, LglRule,
    Point2,
};
use crate::model::{dot, basis_eval, FeatureVector, Standardization, BASIS_DIM};
use crate::synth::features_from_state;

/// Subdivision depth used to certify obstacle clearance.
pub const SUBDIVISION_DEPTH: u32 = 4;

fn default_altitude() -> f64 {
    1.6
}
fn default_degree() -> usize {
    8
}
fn default_margin() -> f64 {
    0.2
}
fn default_gamma() -> f64 {
    50.0
}
fn default_b_a() -> f64 {
    0.3
}
fn default_t_min() -> f64 {
    0.1
}
fn default_t_max() -> f64 {
    600.0
}

/// Planning problem; the JSON form uses these field names in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningScenario {
    pub human_position: [f64; 3],
    #[serde(default = "default_altitude")]
    pub flight_altitude: f64,
    pub start: Point2,
    pub goal: Point2,
    #[serde(default)]
    pub obstacles: Vec<Circle>,
    pub v_max: f64,
    pub a_max: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_b_a")]
    pub b_a: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_margin")]
    pub safety_margin: f64,
}

impl PlanningScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let finite = self.human_position.iter().all(|v| v.is_finite())
            && [self.start.x, self.start.y, self.goal.x, self.goal.y, self.flight_altitude]
                .iter()
                .all(|v| v.is_finite());
        if !finite {
            return bad("positions must be finite".into());
        }
        if self.start == self.goal {
            return bad("start and goal coincide".into());
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) || !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return bad(format!("v_max {} and a_max {} must be positive", self.v_max, self.a_max));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) || !(self.b_a >= 0.0 && self.b_a.is_finite()) {
            return bad(format!("gamma {} and b_a {} must be nonnegative", self.gamma, self.b_a));
        }
        if self.degree < 2 {
            return bad(format!("degree {} leaves no free control point", self.degree));
        }
        if !(self.t_min > 0.0 && self.t_max >= self.t_min && self.t_max.is_finite()) {
            return bad(format!("time bounds [{}, {}] are invalid", self.t_min, self.t_max));
        }
        if !(self.safety_margin >= 0.0) {
            return bad("safety margin must be nonnegative".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) || !o.center.x.is_finite() || !o.center.y.is_finite() {
                return bad(format!("obstacle {i} is malformed"));
            }
            let reach = o.radius + self.safety_margin;
            if (self.start - o.center).norm() <= reach || (self.goal - o.center).norm() <= reach {
                return bad(format!("obstacle {i} covers the start or goal"));
            }
        }
        Ok(())
    }

    pub fn distance(&self) -> f64 {
        (self.goal - self.start).norm()
    }

    /// Shortest duration any admissible curve can have: the velocity control
    /// points average to `(goal - start) / t_f`.
    pub fn minimum_time(&self) -> f64 {
        self.distance() / self.v_max
    }
}

/// The part of a fitted model the planner needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArousalModel {
    pub beta: Vec<f64>,
    pub standardization: Standardization,
}

impl ArousalModel {
    pub fn new(beta: Vec<f64>, standardization: Standardization) -> Result<Self> {
        if beta.len() != BASIS_DIM {
            return Err(Error::DimensionMismatch { expected: BASIS_DIM, actual: beta.len() });
        }
        standardization.validate()?;
        Ok(Self { beta, standardization })
    }

    pub fn from_report(report: &FitReport) -> Result<Self> {
        Self::new(report.theta_star.beta.clone(), report.standardization.clone())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        Ok(dot(&self.beta, &basis_eval(x, &self.standardization)?))
    }
}

/// Features of the robot at planar `p` moving with planar velocity `v`.
pub fn build_features(p: Point2, v: Point2, scenario: &PlanningScenario) -> FeatureVector {
    features_from_state(
        [p.x, p.y, scenario.flight_altitude],
        [v.x, v.y, 0.0],
        scenario.human_position,
    )
}

/// `1 + gamma max(0, f - b_a)^2`.
pub fn running_cost(model: &ArousalModel, x: &FeatureVector, gamma: f64, b_a: f64) -> Result<f64> {
    Ok(1.0 + gamma * excess_sq(model.predict(x)?, b_a))
}

fn excess_sq(f: f64, b_a: f64) -> f64 {
    let e = (f - b_a).max(0.0);
    e * e
}

/// Precomputed transforms for curves of one degree.
struct Evaluator {
    rule: LglRule,
    /// Degree-n basis at the nodes.
    pos: Vec<Vec<f64>>,
    /// Degree-(n-1) basis at the nodes.
    vel: Vec<Vec<f64>>,
}

impl Evaluator {
    fn new(degree: usize) -> Result<Self> {
        let rule = lgl_rule(degree)?;
        let s: Vec<f64> = rule.nodes.iter().map(|eta| 0.5 * (eta + 1.0)).collect();
        let pos = s.iter().map(|&s| (0..=degree).map(|j| bernstein_basis(degree, j, s)).collect()).collect();
        let vel = s
            .iter()
            .map(|&s| (0..degree).map(|j| bernstein_basis(degree - 1, j, s)).collect())
            .collect();
        Ok(Self { rule, pos, vel })
    }

    fn penalty_integral(&self, cps: &[Point2], t_f: f64, scenario: &PlanningScenario, model: &ArousalModel) -> Result<f64> {
        let n = cps.len() - 1;
        let scale = n as f64 / t_f;
        let hodo: Vec<Point2> = cps.windows(2).map(|w| (w[1] - w[0]) * scale).collect();
        let values = self
            .pos
            .iter()
            .zip(&self.vel)
            .map(|(bp, bv)| {
                let p: Point2 = cps.iter().zip(bp).map(|(c, b)| c * *b).sum();
                let v: Point2 = hodo.iter().zip(bv).map(|(c, b)| c * *b).sum();
                Ok(excess_sq(model.predict(&build_features(p, v, scenario))?, scenario.b_a))
            })
            .collect::<Result<Vec<f64>>>()?;
        lgl_quadrature(&values, &self.rule, t_f)
    }

    fn total_cost(&self, cps: &[Point2], t_f: f64, scenario: &PlanningScenario, model: &ArousalModel) -> Result<f64> {
        if scenario.gamma == 0.0 {
            return Ok(t_f);
        }
        Ok(t_f + scenario.gamma * self.penalty_integral(cps, t_f, scenario, model)?)
    }
}

/// `J = t_f + gamma * LGL integral of max(0, f - b_a)^2` using the rule of
/// the curve's degree.
pub fn total_cost(curve: &BernsteinCurve, scenario: &PlanningScenario, model: &ArousalModel) -> Result<f64> {
    if curve.degree() == 0 {
        return Err(Error::InvalidCurve("cost needs a curve of degree at least 1".into()));
    }
    Evaluator::new(curve.degree())?.total_cost(curve.control_points(), curve.t_f(), scenario, model)
}

/// Largest violation per constraint family; a value `<= 0` is satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `margin - clearance` over all subdivision hulls and obstacles;
    /// absent without obstacles.
    pub collision: Option<f64>,
    /// Largest velocity control-point norm minus `v_max`.
    pub velocity: f64,
    /// Largest acceleration control-point norm minus `a_max`.
    pub acceleration: f64,
    /// Distance of `t_f` outside `[t_min, t_max]`.
    pub time: f64,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        [self.collision.unwrap_or(f64::NEG_INFINITY), self.velocity, self.acceleration, self.time]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

impl std::fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.collision {
            Some(c) => write!(f, "collision {c:.4} m, ")?,
            None => write!(f, "no obstacles, ")?,
        }
        write!(
            f,
            "velocity {:.4} m/s, acceleration {:.4} m/s^2, time {:.4} s",
            self.velocity, self.acceleration, self.time
        )
    }
}

fn max_norm_excess(points: &[Point2], bound: f64) -> f64 {
    points.iter().map(|p| p.norm() - bound).fold(f64::NEG_INFINITY, f64::max)
}

/// Worst `margin - clearance` over the depth-4 subdivision hulls.
pub fn collision_violation(curve: &BernsteinCurve, obstacles: &[Circle], margin: f64) -> Option<f64> {
    if obstacles.is_empty() {
        return None;
    }
    let mut worst = f64::NEG_INFINITY;
    for piece in curve.subdivide(SUBDIVISION_DEPTH) {
        let hull = convex_hull(piece.control_points());
        for o in obstacles {
            worst = worst.max(margin - hull_clearance(&hull, o));
        }
    }
    Some(worst)
}

pub fn constraint_eval(curve: &BernsteinCurve, scenario: &PlanningScenario) -> ConstraintReport {
    let vel = curve.derivative();
    let acc = vel.derivative();
    let t_f = curve.t_f();
    ConstraintReport {
        collision: collision_violation(curve, &scenario.obstacles, scenario.safety_margin),
        velocity: max_norm_excess(vel.control_points(), scenario.v_max),
        acceleration: max_norm_excess(acc.control_points(), scenario.a_max),
        time: (scenario.t_min - t_f).max(t_f - scenario.t_max),
    }
}

/// Smallest 3D distance to the observer over `samples + 1` evenly spaced
/// times.
pub fn min_human_distance(curve: &BernsteinCurve, scenario: &PlanningScenario, samples: usize) -> f64 {
    let h = scenario.human_position;
    (0..=samples)
        .map(|i| {
            let p = curve.eval_unit(i as f64 / samples as f64);
            let dz = scenario.flight_altitude - h[2];
            ((p.x - h[0]).powi(2) + (p.y - h[1]).powi(2) + dz * dz).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Independent starts; the first is the straight line.
    pub starts: usize,
    /// Penalty stages, each multiplying the weight by `growth`.
    pub stages: usize,
    pub initial_weight: f64,
    pub growth: f64,
    /// Extra clearance demanded inside the optimizer.
    pub backoff: f64,
    /// Standard deviation of start perturbations relative to the distance.
    pub perturbation: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            stages: 4,
            initial_weight: 10.0,
            growth: 10.0,
            backoff: 0.05,
            perturbation: 0.15,
            max_iters: 400,
            seed: 0,
        }
    }
}

/// Tolerance for reporting a repaired path as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Quasi-Newton iterations of the returned start, over all stages.
    pub iterations: usize,
    pub restarts: usize,
    pub feasible_starts: usize,
    /// Index of the returned start.
    pub best_start: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub curve: BernsteinCurve,
    pub cost: f64,
    pub constraints: ConstraintReport,
    pub min_human_distance: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Samples used for [`PlanResult::min_human_distance`].
pub const DISTANCE_SAMPLES: usize = 1000;

struct Problem<'a> {
    scenario: &'a PlanningScenario,
    model: &'a ArousalModel,
    config: &'a PlannerConfig,
    eval: Evaluator,
    /// Position scale: the start-goal distance.
    length: f64,
    /// Time scale: the minimum time.
    time: f64,
}

struct Candidate {
    curve: BernsteinCurve,
    cost: f64,
    constraints: ConstraintReport,
    iterations: usize,
    converged: bool,
}

impl<'a> Problem<'a> {
    fn n(&self) -> usize {
        self.scenario.degree
    }

    fn line_point(&self, k: usize) -> Point2 {
        let s = k as f64 / self.n() as f64;
        self.scenario.start * (1.0 - s) + self.scenario.goal * s
    }

    /// Interior offsets from the straight line in units of `length`, then
    /// `t_f / time`.
    fn decode(&self, x: &[f64]) -> (Vec<Point2>, f64) {
        let n = self.n();
        let mut cps = Vec::with_capacity(n + 1);
        cps.push(self.scenario.start);
        for k in 1..n {
            cps.push(self.line_point(k) + Point2::new(x[2 * (k - 1)], x[2 * (k - 1) + 1]) * self.length);
        }
        cps.push(self.scenario.goal);
        (cps, x[2 * (n - 1)] * self.time)
    }

    fn encode(&self, cps: &[Point2], t_f: f64) -> Vec<f64> {
        let n = self.n();
        let mut x = Vec::with_capacity(2 * n - 1);
        for k in 1..n {
            let off = (cps[k] - self.line_point(k)) / self.length;
            x.push(off.x);
            x.push(off.y);
        }
        x.push(t_f / self.time);
        x
    }

    fn violation_sq(&self, curve: &BernsteinCurve) -> f64 {
        let s = self.scenario;
        let mut total = 0.0;
        let sq = |v: f64| if v > 0.0 { v * v } else { 0.0 };
        let vel = curve.derivative();
        let acc = vel.derivative();
        total += vel.control_points().iter().map(|q| sq(q.norm() - s.v_max)).sum::<f64>();
        total += acc.control_points().iter().map(|a| sq(a.norm() - s.a_max)).sum::<f64>();
        total += sq(s.t_min - curve.t_f()) + sq(curve.t_f() - s.t_max);
        if !s.obstacles.is_empty() {
            let want = s.safety_margin + self.config.backoff;
            for piece in curve.subdivide(SUBDIVISION_DEPTH) {
                let hull = convex_hull(piece.control_points());
                for o in &s.obstacles {
                    total += sq(want - hull_clearance(&hull, o));
                }
            }
        }
        total
    }

    fn objective(&self, x: &[f64], weight: f64) -> f64 {
        let (cps, t_f) = self.decode(x);
        if !(t_f > 0.0) {
            return f64::NAN;
        }
        let Ok(curve) = BernsteinCurve::new(cps, t_f) else {
            return f64::NAN;
        };
        let cost = self
            .eval
            .total_cost(curve.control_points(), t_f, self.scenario, self.model)
            .unwrap_or(f64::NAN);
        cost + weight * self.violation_sq(&curve)
    }

    /// Scales time so speed and acceleration bounds hold exactly.
    fn repair(&self, curve: BernsteinCurve) -> Result<BernsteinCurve> {
        let s = self.scenario;
        let vel = curve.derivative();
        let v = vel.control_points().iter().map(|q| q.norm()).fold(0.0, f64::max);
        let a = vel.derivative().control_points().iter().map(|q| q.norm()).fold(0.0, f64::max);
        let factor = 1.0f64.max(v / s.v_max).max((a / s.a_max).sqrt());
        let t_f = (curve.t_f() * factor * (1.0 + 1e-12)).max(s.t_min);
        BernsteinCurve::new(curve.control_points().to_vec(), t_f)
    }

    fn solve_start(&self, index: usize) -> Result<Candidate> {
        let n = self.n();
        let dim = 2 * (n - 1) + 1;
        let mut x = vec![0.0; dim];
        x[dim - 1] = 1.3f64.clamp(self.scenario.t_min / self.time, self.scenario.t_max / self.time);
        if index > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(index as u64);
            let normal = Normal::new(0.0, self.config.perturbation).expect("positive deviation");
            for v in &mut x[..dim - 1] {
                *v = normal.sample(&mut rng);
            }
        }
        self.solve_from(x)
    }

    fn solve_from(&self, mut x: Vec<f64>) -> Result<Candidate> {
        let mut weight = self.config.initial_weight;
        let mut iterations = 0;
        let mut converged = false;
        for _ in 0..self.config.stages {
            let out = bfgs::minimize(
                |v| self.objective(v, weight),
                &x,
                bfgs::BfgsOptions { max_iters: self.config.max_iters, ..Default::default() },
            );
            iterations += out.iterations;
            converged = out.converged;
            x = out.x;
            weight *= self.config.growth;
        }
        let (cps, t_f) = self.decode(&x);
        let curve = self.repair(BernsteinCurve::new(cps, t_f.max(self.scenario.t_min))?)?;
        let cost = self.eval.total_cost(curve.control_points(), curve.t_f(), self.scenario, self.model)?;
        let constraints = constraint_eval(&curve, self.scenario);
        Ok(Candidate { curve, cost, constraints, iterations, converged })
    }
}

fn pick_best(candidates: Vec<(usize, Candidate)>) -> (usize, Candidate, usize) {
    let feasible = candidates.iter().filter(|(_, c)| c.constraints.is_feasible(FEASIBILITY_TOL)).count();
    let key = |c: &Candidate| {
        let v = c.constraints.max_violation();
        if v <= FEASIBILITY_TOL {
            (0, c.cost)
        } else {
            (1, v)
        }
    };
    let (i, best) = candidates
        .into_iter()
        .min_by(|(ia, a), (ib, b)| {
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ia.cmp(ib))
        })
        .expect("at least one start");
    (i, best, feasible)
}

fn finish(
    scenario: &PlanningScenario,
    candidates: Vec<(usize, Candidate)>,
) -> Result<PlanResult> {
    let restarts = candidates.len();
    let (index, best, feasible_starts) = pick_best(candidates);
    let ok = best.constraints.is_feasible(FEASIBILITY_TOL);
    let result = PlanResult {
        min_human_distance: min_human_distance(&best.curve, scenario, DISTANCE_SAMPLES),
        cost: best.cost,
        constraints: best.constraints,
        diagnostics: SolverDiagnostics {
            iterations: best.iterations,
            restarts,
            feasible_starts,
            best_start: index,
            converged: best.converged && ok,
        },
        curve: best.curve,
    };
    if ok {
        Ok(result)
    } else {
        Err(Error::Infeasible {
            restarts,
            violations: result.constraints.to_string(),
            best: Box::new(result),
        })
    }
}

fn problem<'a>(
    scenario: &'a PlanningScenario,
    model: &'a ArousalModel,
    config: &'a PlannerConfig,
) -> Result<Problem<'a>> {
    scenario.validate()?;
    if config.starts == 0 || config.stages == 0 || !(config.growth >= 1.0) || !(config.initial_weight > 0.0) {
        return Err(Error::InvalidConfig("planner needs at least one start and stage and growth >= 1".into()));
    }
    if scenario.minimum_time() > scenario.t_max {
        return Err(Error::InvalidScenario(format!(
            "the straight line needs {:.3} s at v_max but t_max is {}",
            scenario.minimum_time(),
            scenario.t_max
        )));
    }
    Ok(Problem {
        scenario,
        model,
        config,
        eval: Evaluator::new(scenario.degree)?,
        length: scenario.distance(),
        time: scenario.minimum_time().max(scenario.t_min),
    })
}

/// Optimizes interior control points and `t_f` with `start` and `goal`
/// pinned. Starts run in parallel and the cheapest feasible result wins;
/// the outcome depends only on the inputs and `config.seed`.
pub fn plan(scenario: &PlanningScenario, model: &ArousalModel, config: &PlannerConfig) -> Result<PlanResult> {
    plan_with_seeds(scenario, model, config, &[])
}

/// [`plan`] with extra starting curves (for example a neighbouring solution)
/// tried after the regular starts.
pub fn plan_with_seeds(
    scenario: &PlanningScenario,
    model: &ArousalModel,
    config: &PlannerConfig,
    seeds: &[BernsteinCurve],
) -> Result<PlanResult> {
    let prob = problem(scenario, model, config)?;
    let mut inits: Vec<Vec<f64>> = Vec::new();
    for c in seeds {
        if c.degree() != scenario.degree || c.start() != scenario.start || c.end() != scenario.goal {
            return Err(Error::InvalidCurve("seed curve does not match the scenario".into()));
        }
        inits.push(prob.encode(c.control_points(), c.t_f()));
    }
    let regular = config.starts;
    let candidates: Vec<(usize, Candidate)> = (0..regular + inits.len())
        .into_par_iter()
        .map(|i| {
            let cand = if i < regular {
                prob.solve_start(i)
            } else {
                prob.solve_from(inits[i - regular].clone())
            }?;
            Ok((i, cand))
        })
        .collect::<Result<_>>()?;
    finish(scenario, candidates)
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b_a: f64,
    pub min_human_distance: f64,
    pub t_f: f64,
    pub cost: f64,
}

/// Plans for each threshold in descending order, each solve also seeded with
/// the previous solution. Rows come back in the order of `thresholds`.
pub fn sweep_threshold(
    scenario: &PlanningScenario,
    model: &ArousalModel,
    config: &PlannerConfig,
    thresholds: &[f64],
) -> Result<Vec<(SweepRow, PlanResult)>> {
    let mut order: Vec<usize> = (0..thresholds.len()).collect();
    order.sort_by(|&a, &b| thresholds[b].total_cmp(&thresholds[a]));
    let mut out: Vec<Option<(SweepRow, PlanResult)>> = vec![None; thresholds.len()];
    let mut previous: Option<BernsteinCurve> = None;
    for i in order {
        let sc = PlanningScenario { b_a: thresholds[i], ..scenario.clone() };
        let seeds: Vec<BernsteinCurve> = previous.iter().cloned().collect();
        let res = plan_with_seeds(&sc, model, config, &seeds)?;
        previous = Some(res.curve.clone());
        out[i] = Some((
            SweepRow {
                b_a: thresholds[i],
                min_human_distance: res.min_human_distance,
                t_f: res.curve.t_f(),
                cost: res.cost,
            },
            res,
        ));
    }
    Ok(out.into_iter().map(|r| r.expect("every threshold planned")).collect())
}
