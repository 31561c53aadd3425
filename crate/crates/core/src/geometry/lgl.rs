//! Legendre-Gauss-Lobatto nodes and weights, quadrature on `[0, t_f]`, and
//! the change of basis between Bernstein control points and values at the
//! Lobatto time nodes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::bernstein::{bernstein_basis, BernsteinCurve};
use super::Point2;
use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

/// `n + 1` Lobatto nodes on `[-1, 1]` (both endpoints included) with weights.
/// Exact for polynomials up to degree `2n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LglRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LglRule {
    /// Polynomial order `n` (one less than the node count).
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes mapped to times in `[0, t_f]`.
    pub fn times(&self, t_f: f64) -> Vec<f64> {
        self.nodes.iter().map(|eta| 0.5 * t_f * (eta + 1.0)).collect()
    }

    /// Integral over `[0, t_f]` from values at the mapped nodes.
    pub fn integrate(&self, values: &[f64], t_f: f64) -> Result<f64> {
        lgl_quadrature(values, self, t_f)
    }
}

/// Nodes are the roots of `(1 - x^2) P_n'(x)`, found by Newton iteration on
/// the Legendre recurrence starting from the Chebyshev-Lobatto points; the
/// weights are `2 / (n (n + 1) P_n(x_k)^2)`.
pub fn lgl_rule(n: usize) -> Result<LglRule> {
    if n == 0 {
        return Err(Error::LglNonConvergence(0));
    }
    let mut x: Vec<f64> = (0..=n)
        .map(|k| -(std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    x[0] = -1.0;
    x[n] = 1.0;

    let mut p_n = vec![0.0; n + 1];
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITERS {
        let mut max_step: f64 = 0.0;
        for (k, xk) in x.iter_mut().enumerate() {
            let (pn, pn1) = legendre_pair(n, *xk);
            p_n[k] = pn;
            if k == 0 || k == n {
                continue;
            }
            let step = (*xk * pn - pn1) / ((n + 1) as f64 * pn);
            *xk -= step;
            max_step = max_step.max(step.abs());
        }
        if max_step < NEWTON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::LglNonConvergence(n));
    }

    // Enforce exact mirror symmetry.
    for k in 0..=n / 2 {
        let m = n - k;
        if k == m {
            x[k] = 0.0;
        } else {
            let v = 0.5 * (x[m] - x[k]);
            x[k] = -v;
            x[m] = v;
        }
    }
    let scale = 2.0 / (n * (n + 1)) as f64;
    let mut w: Vec<f64> = x
        .iter()
        .map(|&xk| {
            let (pn, _) = legendre_pair(n, xk);
            scale / (pn * pn)
        })
        .collect();
    for k in 0..=n / 2 {
        let m = n - k;
        let avg = 0.5 * (w[k] + w[m]);
        w[k] = avg;
        w[m] = avg;
    }
    if x.windows(2).any(|p| !(p[1] > p[0])) || w.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::LglNonConvergence(n));
    }
    Ok(LglRule { nodes: x, weights: w })
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    for k in 2..=n {
        let next = ((2 * k - 1) as f64 * x * cur - (k - 1) as f64 * prev) / k as f64;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(t_f / 2) sum_k w_k v_k`: the integral over `[0, t_f]` of a function
/// sampled at the nodes mapped by `t = t_f (eta + 1) / 2`.
pub fn lgl_quadrature(values: &[f64], rule: &LglRule, t_f: f64) -> Result<f64> {
    if values.len() != rule.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.weights.len(),
            actual: values.len(),
        });
    }
    Ok(0.5 * t_f * values.iter().zip(&rule.weights).map(|(v, w)| v * w).sum::<f64>())
}

/// Matrix `B[k][j] = b_j^n(s_k)` with `s_k = (eta_k + 1) / 2`.
pub fn bernstein_vandermonde(rule: &LglRule) -> DMatrix<f64> {
    let n = rule.order();
    DMatrix::from_fn(n + 1, n + 1, |k, j| {
        bernstein_basis(n, j, 0.5 * (rule.nodes[k] + 1.0))
    })
}

/// Curve positions at the mapped Lobatto times.
pub fn bernstein_to_interpolation(curve: &BernsteinCurve, rule: &LglRule) -> Result<Vec<Point2>> {
    if rule.order() != curve.degree() {
        return Err(Error::DimensionMismatch {
            expected: curve.degree(),
            actual: rule.order(),
        });
    }
    let b = bernstein_vandermonde(rule);
    let cps = curve.control_points();
    Ok((0..cps.len())
        .map(|k| (0..cps.len()).map(|j| cps[j] * b[(k, j)]).sum())
        .collect())
}

/// Inverse of [`bernstein_to_interpolation`].
pub fn interpolation_to_bernstein(points: &[Point2], rule: &LglRule, t_f: f64) -> Result<BernsteinCurve> {
    if points.len() != rule.nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.nodes.len(),
            actual: points.len(),
        });
    }
    let lu = bernstein_vandermonde(rule).lu();
    let rhs = DMatrix::from_fn(points.len(), 2, |k, c| points[k][c]);
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidCurve("singular Bernstein-Lobatto transform".into()))?;
    let cps = (0..points.len()).map(|j| Point2::new(sol[(j, 0)], sol[(j, 1)])).collect();
    BernsteinCurve::new(cps, t_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_orders() {
        let r1 = lgl_rule(1).unwrap();
        assert_eq!(r1.nodes, vec![-1.0, 1.0]);
        assert_eq!(r1.weights, vec![1.0, 1.0]);
        let r2 = lgl_rule(2).unwrap();
        assert_eq!(r2.nodes, vec![-1.0, 0.0, 1.0]);
        for (w, e) in r2.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() <= 1e-14);
        }
        let r4 = lgl_rule(4).unwrap();
        let s = (3.0f64 / 7.0).sqrt();
        assert!((r4.nodes[1] + s).abs() < 1e-15);
        assert!((r4.weights[2] - 32.0 / 45.0).abs() < 1e-14);
        assert!(lgl_rule(0).is_err());
    }

    #[test]
    fn symmetry_and_weight_sum() {
        for n in 1..=20 {
            let r = lgl_rule(n).unwrap();
            assert_eq!(r.nodes[0], -1.0);
            assert_eq!(r.nodes[n], 1.0);
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 2.0).abs() <= 1e-12, "n={n}");
            for k in 0..=n {
                assert_eq!(r.nodes[k], -r.nodes[n - k]);
                assert_eq!(r.weights[k], r.weights[n - k]);
            }
        }
    }

    #[test]
    fn exact_up_to_degree_2n_minus_1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=20 {
            let r = lgl_rule(n).unwrap();
            let deg = 2 * n - 1;
            let coef: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let vals: Vec<f64> = r
                .nodes
                .iter()
                .map(|&x| coef.iter().rev().fold(0.0, |acc, c| acc * x + c))
                .collect();
            let approx = lgl_quadrature(&vals, &r, 2.0).unwrap();
            // Antiderivative on [-1, 1]: odd powers vanish.
            let exact: f64 = coef
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == 0)
                .map(|(i, c)| 2.0 * c / (i + 1) as f64)
                .sum();
            assert!((approx - exact).abs() <= 1e-10, "n={n}: {approx} vs {exact}");
        }
    }

    #[test]
    fn quadrature_on_time_interval() {
        let r = lgl_rule(5).unwrap();
        assert!((lgl_quadrature(&[2.0; 6], &r, 3.0).unwrap() - 6.0).abs() < 1e-14);
        let t_f = 7.5;
        let vals = r.times(t_f);
        assert!((lgl_quadrature(&vals, &r, t_f).unwrap() - t_f * t_f / 2.0).abs() < 1e-12);
        assert!(lgl_quadrature(&[1.0; 4], &r, 1.0).is_err());
    }

    #[test]
    fn transform_matches_evaluation_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=10 {
            let rule = lgl_rule(n).unwrap();
            let cps: Vec<Point2> = (0..=n)
                .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect();
            let curve = BernsteinCurve::new(cps.clone(), 4.0).unwrap();
            let pts = bernstein_to_interpolation(&curve, &rule).unwrap();
            for (p, t) in pts.iter().zip(rule.times(4.0)) {
                assert!((p - curve.eval(t).unwrap()).norm() <= 1e-12);
            }
            assert_eq!(pts[0], cps[0]);
            assert!((pts[n] - cps[n]).norm() < 1e-15);
            let back = interpolation_to_bernstein(&pts, &rule, 4.0).unwrap();
            for (a, b) in back.control_points().iter().zip(&cps) {
                assert!((a - b).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn order_mismatch() {
        let curve = BernsteinCurve::new(vec![Point2::zeros(); 4], 1.0).unwrap();
        assert!(bernstein_to_interpolation(&curve, &lgl_rule(2).unwrap()).is_err());
    }
}
