use serde::{Deserialize, Serialize};

use super::Point2;

/// Convex polygon with counterclockwise vertices and no collinear vertices.
///
/// One vertex means all inputs coincided; two mean they were collinear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull {
    vertices: Vec<Point2>,
}

/// Circular planar obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Points on hull edges are dropped.
///
/// # Panics
///
/// If `points` is empty or contains non-finite coordinates.
pub fn convex_hull(points: &[Point2]) -> ConvexHull {
    assert!(!points.is_empty(), "convex hull of no points");
    assert!(points.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return ConvexHull { vertices: pts };
    }

    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // Collinear input collapses to its two extremes.
        let first = pts[0];
        let last = pts[pts.len() - 1];
        return ConvexHull {
            vertices: vec![first, last],
        };
    }
    ConvexHull { vertices: lower }
}

impl ConvexHull {
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// True for point and segment hulls.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Euclidean distance from `p` to the hull; zero inside.
    pub fn distance(&self, p: Point2) -> f64 {
        match self.vertices.len() {
            1 => (p - self.vertices[0]).norm(),
            2 => point_segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => {
                if self.edges().all(|(a, b)| cross(a, b, p) >= 0.0) {
                    0.0
                } else {
                    self.edges()
                        .map(|(a, b)| point_segment_distance(p, a, b))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_margin(&self, p: Point2) -> f64 {
        if self.is_degenerate() {
            return -self.distance(p);
        }
        let d = self.distance(p);
        if d > 0.0 {
            return -d;
        }
        self.edges()
            .map(|(a, b)| cross(a, b, p) / (b - a).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from the obstacle's center to the hull minus its radius;
/// positive when the hull clears the obstacle.
pub fn hull_clearance(hull: &ConvexHull, obstacle: &Circle) -> f64 {
    hull.distance(obstacle.center) - obstacle.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit_square() -> ConvexHull {
        convex_hull(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.5, 0.5)])
    }

    #[test]
    fn square_drops_center() {
        let h = unit_square();
        assert_eq!(h.vertices().len(), 4);
        assert!(!h.vertices().contains(&p(0.5, 0.5)));
        // Counterclockwise.
        let v = h.vertices();
        for i in 0..4 {
            assert!(cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4]) > 0.0);
        }
    }

    #[test]
    fn collinear_and_single() {
        let h = convex_hull(&[p(0.0, 0.0), p(2.0, 2.0), p(1.0, 1.0)]);
        assert!(h.is_degenerate());
        assert_eq!(h.vertices(), &[p(0.0, 0.0), p(2.0, 2.0)]);
        let s = convex_hull(&[p(3.0, 4.0), p(3.0, 4.0)]);
        assert_eq!(s.vertices(), &[p(3.0, 4.0)]);
        assert_eq!(s.distance(p(0.0, 0.0)), 5.0);
    }

    #[test]
    fn edge_points_dropped() {
        let h = convex_hull(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)]);
        assert_eq!(h.vertices().len(), 4);
    }

    #[test]
    fn random_points_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let pts: Vec<Point2> = (0..100)
                .map(|_| p(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect();
            let h = convex_hull(&pts);
            for q in &pts {
                assert!(h.signed_margin(*q) >= -1e-12);
                assert_eq!(h.distance(*q), 0.0);
            }
            for v in h.vertices() {
                assert!(pts.contains(v));
            }
        }
    }

    #[test]
    fn clearance_cases() {
        let h = unit_square();
        let inside = Circle { center: p(0.5, 0.5), radius: 0.3 };
        assert_eq!(hull_clearance(&h, &inside), -0.3);
        let right = Circle { center: p(3.0, 0.0), radius: 1.0 };
        assert_eq!(hull_clearance(&h, &right), 1.0);
        let tangent = Circle { center: p(2.0, 0.5), radius: 1.0 };
        assert_eq!(hull_clearance(&h, &tangent), 0.0);
    }

    #[test]
    fn segment_distance() {
        assert_eq!(point_segment_distance(p(0.0, 1.0), p(-1.0, 0.0), p(1.0, 0.0)), 1.0);
        assert_eq!(point_segment_distance(p(3.0, 4.0), p(0.0, 0.0), p(0.0, 0.0)), 5.0);
        assert_eq!(point_segment_distance(p(4.0, 4.0), p(0.0, 0.0), p(1.0, 0.0)), 5.0);
    }
}
