use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Point2;

/// Planar polynomial path in Bernstein form over `[0, t_f]`.
///
/// `p(t) = sum_k P_k b_k^n(t / t_f)` with `b_k^n(s) = C(n, k) (1 - s)^(n - k) s^k`.
/// The path starts at the first control point, ends at the last, and stays
/// inside the convex hull of all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveFile", into = "CurveFile")]
pub struct BernsteinCurve {
    control_points: Vec<Point2>,
    t_f: f64,
}

/// Serialized layout `{degree, t_f, control_points}`.
#[derive(Serialize, Deserialize)]
struct CurveFile {
    degree: usize,
    t_f: f64,
    control_points: Vec<Point2>,
}

impl TryFrom<CurveFile> for BernsteinCurve {
    type Error = Error;

    fn try_from(f: CurveFile) -> Result<Self> {
        if f.control_points.len() != f.degree + 1 {
            return Err(Error::InvalidCurve(format!(
                "degree {} needs {} control points, got {}",
                f.degree,
                f.degree + 1,
                f.control_points.len()
            )));
        }
        BernsteinCurve::new(f.control_points, f.t_f)
    }
}

impl From<BernsteinCurve> for CurveFile {
    fn from(c: BernsteinCurve) -> Self {
        CurveFile {
            degree: c.degree(),
            t_f: c.t_f,
            control_points: c.control_points,
        }
    }
}

impl BernsteinCurve {
    /// A curve needs at least one control point; hodographs of lines are
    /// degree-zero curves.
    pub fn new(control_points: Vec<Point2>, t_f: f64) -> Result<Self> {
        if control_points.is_empty() {
            return Err(Error::InvalidCurve("no control points".into()));
        }
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(Error::InvalidCurve(format!("duration {t_f} must be positive and finite")));
        }
        if control_points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidCurve("non-finite control point".into()));
        }
        Ok(Self { control_points, t_f })
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control_points
    }

    pub fn start(&self) -> Point2 {
        self.control_points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.control_points.last().unwrap()
    }

    /// Position at time `t` by De Casteljau's recurrence.
    pub fn eval(&self, t: f64) -> Result<Point2> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_f: self.t_f });
        }
        Ok(self.eval_unit(t / self.t_f))
    }

    /// Position at normalized parameter `s` in `[0, 1]`.
    pub fn eval_unit(&self, s: f64) -> Point2 {
        let mut work = self.control_points.clone();
        let n = work.len();
        for level in 1..n {
            for i in 0..n - level {
                work[i] = work[i] * (1.0 - s) + work[i + 1] * s;
            }
        }
        work[0]
    }

    /// Velocity curve: degree `n - 1`, control points `n (P_{k+1} - P_k) / t_f`.
    pub fn derivative(&self) -> BernsteinCurve {
        let n = self.degree();
        let pts = if n == 0 {
            vec![Point2::zeros()]
        } else {
            let scale = n as f64 / self.t_f;
            self.control_points
                .windows(2)
                .map(|w| (w[1] - w[0]) * scale)
                .collect()
        };
        BernsteinCurve {
            control_points: pts,
            t_f: self.t_f,
        }
    }

    /// Splits at `tau * t_f` into curves covering `[0, tau t_f]` and
    /// `[tau t_f, t_f]`, both of the original degree.
    pub fn split(&self, tau: f64) -> Result<(BernsteinCurve, BernsteinCurve)> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::SplitOutOfRange(tau));
        }
        let n = self.control_points.len();
        let mut work = self.control_points.clone();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        left.push(work[0]);
        right.push(work[n - 1]);
        for level in 1..n {
            for i in 0..n - level {
                work[i] = work[i] * (1.0 - tau) + work[i + 1] * tau;
            }
            left.push(work[0]);
            right.push(work[n - 1 - level]);
        }
        right.reverse();
        Ok((
            BernsteinCurve {
                control_points: left,
                t_f: self.t_f * tau,
            },
            BernsteinCurve {
                control_points: right,
                t_f: self.t_f * (1.0 - tau),
            },
        ))
    }

    /// `2^depth` pieces from repeated halving, in time order.
    pub fn subdivide(&self, depth: u32) -> Vec<BernsteinCurve> {
        let mut pieces = vec![self.clone()];
        for _ in 0..depth {
            pieces = pieces
                .iter()
                .flat_map(|c| {
                    let (l, r) = c.split(0.5).expect("0.5 is a valid split");
                    [l, r]
                })
                .collect();
        }
        pieces
    }
}

/// `C(n, k) (1 - s)^(n - k) s^k`.
pub fn bernstein_basis(n: usize, k: usize, s: f64) -> f64 {
    binomial(n, k) * (1.0 - s).powi((n - k) as i32) * s.powi(k as i32)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn random_curve(rng: &mut ChaCha8Rng, degree: usize) -> BernsteinCurve {
        let pts = (0..=degree)
            .map(|_| p(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
            .collect();
        BernsteinCurve::new(pts, rng.random_range(0.5..20.0)).unwrap()
    }

    #[test]
    fn endpoints_and_constant() {
        let c = BernsteinCurve::new(vec![p(1.0, 2.0), p(5.0, -3.0), p(0.0, 7.0)], 4.0).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), p(1.0, 2.0));
        assert_eq!(c.eval(4.0).unwrap(), p(0.0, 7.0));
        let k = BernsteinCurve::new(vec![p(3.0, -1.0); 6], 2.0).unwrap();
        for i in 0..=10 {
            let q = k.eval(0.2 * i as f64).unwrap();
            assert!((q - p(3.0, -1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn quadratic_midpoint() {
        let c = BernsteinCurve::new(vec![p(0.0, 0.0), p(1.0, 2.0), p(2.0, 0.0)], 3.0).unwrap();
        let m = c.eval(1.5).unwrap();
        assert!((m - p(1.0, 1.0)).norm() < 1e-15);
        // Same point from the explicit basis (0.25, 0.5, 0.25).
        let direct: Point2 = (0..3).map(|k| c.control_points()[k] * bernstein_basis(2, k, 0.5)).sum();
        assert!((direct - m).norm() < 1e-15);
    }

    #[test]
    fn out_of_range_time() {
        let c = BernsteinCurve::new(vec![p(0.0, 0.0), p(1.0, 0.0)], 1.0).unwrap();
        assert!(matches!(c.eval(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(c.eval(-1e-9).is_err());
        assert!(c.eval(f64::NAN).is_err());
    }

    #[test]
    fn invalid_curves() {
        assert!(BernsteinCurve::new(vec![], 1.0).is_err());
        assert!(BernsteinCurve::new(vec![p(0.0, 0.0)], 0.0).is_err());
        assert!(BernsteinCurve::new(vec![p(f64::NAN, 0.0)], 1.0).is_err());
    }

    #[test]
    fn derivative_basics() {
        let k = BernsteinCurve::new(vec![p(1.0, 1.0); 4], 2.0).unwrap();
        assert!(k.derivative().control_points().iter().all(|q| q.norm() == 0.0));
        let line = BernsteinCurve::new(vec![p(0.0, 0.0), p(6.0, 8.0)], 2.0).unwrap();
        let v = line.derivative();
        assert_eq!(v.degree(), 0);
        assert_eq!(v.eval(1.3).unwrap(), p(3.0, 4.0));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_curve(&mut rng, 4);
        let d = c.derivative();
        let h = 1e-5 * c.t_f();
        for i in 0..20 {
            let t = c.t_f() * (0.02 + 0.96 * i as f64 / 19.0);
            let fd = (c.eval(t + h).unwrap() - c.eval(t - h).unwrap()) / (2.0 * h);
            let an = d.eval(t).unwrap();
            assert!((fd - an).norm() <= 1e-6 * an.norm().max(1.0), "{fd} {an}");
        }
    }

    #[test]
    fn second_derivative_matches_second_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let c = random_curve(&mut rng, 6);
            let dd = c.derivative().derivative();
            assert_eq!(dd.degree(), 4);
            let n = 6.0;
            let scale = n * (n - 1.0) / (c.t_f() * c.t_f());
            let h = 1e-3 * c.t_f();
            for i in 0..10 {
                let t = c.t_f() * (0.05 + 0.9 * i as f64 / 9.0);
                let s = t / c.t_f();
                // Second derivative of each basis polynomial written out directly.
                let cps = c.control_points();
                let mut exact = Point2::zeros();
                for k in 0..=4 {
                    exact += (cps[k + 2] - cps[k + 1] * 2.0 + cps[k]) * (scale * bernstein_basis(4, k, s));
                }
                let an = dd.eval(t).unwrap();
                assert!((exact - an).norm() <= 1e-9 * an.norm().max(1.0), "{exact} {an}");
                let e = |k: f64| c.eval(t + k * h).unwrap();
                let fd = (-e(2.0) + e(1.0) * 16.0 - e(0.0) * 30.0 + e(-1.0) * 16.0 - e(-2.0)) / (12.0 * h * h);
                assert!((fd - an).norm() <= 1e-6 * an.norm().max(1.0), "{fd} {an}");
            }
        }
    }

    #[test]
    fn split_straight_segment() {
        let c = BernsteinCurve::new(vec![p(0.0, 0.0), p(4.0, 2.0)], 2.0).unwrap();
        let (l, r) = c.split(0.5).unwrap();
        assert_eq!(l.control_points(), &[p(0.0, 0.0), p(2.0, 1.0)]);
        assert_eq!(r.control_points(), &[p(2.0, 1.0), p(4.0, 2.0)]);
        assert_eq!(l.t_f(), 1.0);
        assert!(c.split(0.0).is_err());
        assert!(c.split(1.0).is_err());
    }

    #[test]
    fn split_pieces_match_original() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let c = random_curve(&mut rng, 5);
            let tau = rng.random_range(0.05..0.95);
            let (l, r) = c.split(tau).unwrap();
            let cut = c.eval(tau * c.t_f()).unwrap();
            assert!((l.end() - cut).norm() < 1e-12);
            assert!((r.start() - cut).norm() < 1e-12);
            for _ in 0..50 {
                let t = rng.random_range(0.0..c.t_f());
                let piece = if t <= l.t_f() {
                    l.eval(t.min(l.t_f())).unwrap()
                } else {
                    r.eval((t - l.t_f()).clamp(0.0, r.t_f())).unwrap()
                };
                assert!((piece - c.eval(t).unwrap()).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn json_layout() {
        let c = BernsteinCurve::new(vec![p(0.0, 1.0), p(2.0, 3.0)], 1.5).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"degree":1,"t_f":1.5,"control_points":[[0.0,1.0],[2.0,3.0]]}"#);
        let back: BernsteinCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<BernsteinCurve>(r#"{"degree":2,"t_f":1.5,"control_points":[[0,1],[2,3]]}"#).is_err());
    }
}
