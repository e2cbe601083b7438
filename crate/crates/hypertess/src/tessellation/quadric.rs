use crate::geometry::KleinPoint;
use crate::numeric::{dot, norm_sq};

/// The Klein image of a hyperbolic ball B(center, rho): a Euclidean ellipsoid,
/// represented by the quadratic form
///   Q(x) = cosh^2(rho) (1 - |c|^2)(1 - |x|^2) - (1 - <x, c>)^2,
/// which is positive exactly on the open ball (from cosh d(x,c) < cosh rho).
#[derive(Clone, Debug)]
pub struct BallQuadric {
    center: Vec<f64>,
    /// cosh^2(rho) * (1 - |c|^2)
    scale: f64,
}

impl BallQuadric {
    pub fn new(center: &KleinPoint, rho: f64) -> Self {
        assert!(rho > 0.0);
        let c = center.coords().to_vec();
        let scale = rho.cosh().powi(2) * (1.0 - norm_sq(&c));
        Self { center: c, scale }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let lin = 1.0 - dot(x, &self.center);
        self.scale * (1.0 - norm_sq(x)) - lin * lin
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.value(x) > 0.0
    }

    /// Parameters s in (0, 1) where Q(a + s (b - a)) = 0, ascending.
    /// Empty when the segment does not cross the ellipsoid boundary.
    pub fn segment_roots(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        // Q along the segment is a quadratic q2 s^2 + q1 s + q0.
        let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let ca = 1.0 - dot(a, &self.center);
        let cd = dot(&d, &self.center);
        let q0 = self.scale * (1.0 - norm_sq(a)) - ca * ca;
        let q1 = -2.0 * self.scale * dot(a, &d) + 2.0 * ca * cd;
        let q2 = -self.scale * norm_sq(&d) - cd * cd;
        // q2 < 0 always (ellipsoid): roots bracket the inside interval.
        let disc = q1 * q1 - 4.0 * q2 * q0;
        if disc <= 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        // Numerically stable pair.
        let r1 = (-q1 + sq) / (2.0 * q2);
        let r2 = (-q1 - sq) / (2.0 * q2);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [lo, hi]
            .into_iter()
            .filter(|s| *s > 1e-13 && *s < 1.0 - 1e-13)
            .collect()
    }

    /// True iff the open segment (a, b) meets the open ball.
    pub fn segment_intersects(&self, a: &[f64], b: &[f64]) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        // Both endpoints outside: the inside interval, if any, lies strictly
        // between two roots in (0, 1).
        self.segment_roots(a, b).len() == 2
    }
}
