use crate::error::{Error, Result};
use crate::numeric::{self, dot};

use super::{KleinPoint, SIDE_TOL};

/// A hyperplane of hyperbolic space in Klein form: the chord H(u, t) cut from
/// the unit ball by the Euclidean hyperplane with unit normal `u` at offset
/// `t` in direction `u`.
///
/// Canonical form: t >= 0, and for t = 0 the first nonzero normal coordinate
/// is positive, so each geometric hyperplane has exactly one representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Build from a (near-)unit normal and an offset in (-1, 1); the pair is
    /// renormalized and canonicalized.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.len() < 2 {
            return Err(Error::Usage(format!(
                "dimension must be >= 2, got {}",
                normal.len()
            )));
        }
        let n = numeric::norm(&normal);
        if !n.is_finite() || (n - 1.0).abs() > SIDE_TOL {
            return Err(Error::Usage(format!(
                "normal must be a unit vector within {SIDE_TOL:.0e}, got norm {n}"
            )));
        }
        if !(offset.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "offset must satisfy |t| < 1, got {offset}"
            )));
        }
        let mut normal: Vec<f64> = normal.iter().map(|c| c / n).collect();
        let mut offset = offset;
        let flip = if offset < 0.0 {
            true
        } else if offset == 0.0 {
            match normal.iter().find(|c| **c != 0.0) {
                Some(c) => *c < 0.0,
                None => return Err(Error::Usage("zero normal".into())),
            }
        } else {
            false
        };
        if flip {
            for c in &mut normal {
                *c = -*c;
            }
            offset = -offset;
        }
        Ok(Self { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed side of a point: sign of <normal, x> - offset, with values
    /// within SIDE_TOL of the plane reported as 0.
    pub fn side(&self, x: &KleinPoint) -> i8 {
        self.side_coords(x.coords())
    }

    pub fn side_coords(&self, x: &[f64]) -> i8 {
        let v = dot(&self.normal, x) - self.offset;
        if v.abs() <= SIDE_TOL {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Raw signed offset <normal, x> - offset.
    pub fn signed_value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    /// True iff the closed Euclidean segment [x, y] meets the hyperplane.
    /// Endpoints on the plane count as crossing.
    pub fn segment_crosses(&self, x: &KleinPoint, y: &KleinPoint) -> bool {
        self.segment_crosses_coords(x.coords(), y.coords())
    }

    pub fn segment_crosses_coords(&self, x: &[f64], y: &[f64]) -> bool {
        i32::from(self.side_coords(x)) * i32::from(self.side_coords(y)) <= 0
    }

    /// True iff the ray [o, w) toward the ideal point w (|w| = 1) meets the
    /// hyperplane; equivalently w lies in the boundary cap of the plane.
    pub fn ray_hits(&self, w: &[f64]) -> bool {
        debug_assert!((numeric::norm(w) - 1.0).abs() < 1e-9);
        dot(w, &self.normal).clamp(-1.0, 1.0).acos() < self.offset.acos()
    }

    /// Ideal-boundary trace of the half-space cut off from o: cap(u, arccos t).
    pub fn boundary_cap(&self) -> Cap {
        Cap::new(self.normal.clone(), self.offset.acos()).expect("arccos t in (0, pi]")
    }

    /// Points of the sphere of hyperbolic radius r cut off from o, as a cap on
    /// the ideal boundary directions: cap(u, arccos(t / tanh r)) when the
    /// plane meets B(o, r), otherwise None.
    pub fn cut_cap_at_radius(&self, r: f64) -> Option<Cap> {
        assert!(r > 0.0);
        let th = r.tanh();
        if self.offset < th {
            Some(Cap::new(self.normal.clone(), (self.offset / th).acos()).unwrap())
        } else {
            None
        }
    }

    /// True iff the hyperplane meets the hyperbolic ball B(center, rho).
    ///
    /// Decided by mapping the ball center to the origin with a hyperbolic
    /// translation; the image ball is round and the test reduces to
    /// offset < tanh(rho).
    pub fn hits_ball(&self, center: &KleinPoint, rho: f64) -> bool {
        assert!(rho > 0.0);
        if center.norm() == 0.0 {
            return self.offset < rho.tanh();
        }
        let g = super::Isometry::translation_to_origin(center);
        g.apply_hyperplane(self).offset < rho.tanh()
    }
}

/// An open spherical cap on the ideal boundary sphere S^{d-1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Cap {
    center: Vec<f64>,
    radius: f64,
}

impl Cap {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = numeric::norm(&center);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Usage(format!(
                "cap center must be a unit vector, got norm {n}"
            )));
        }
        if !(radius > 0.0 && radius <= std::f64::consts::PI) {
            return Err(Error::Usage(format!(
                "cap radius must lie in (0, pi], got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership test: arccos <u, center> < radius.
    pub fn contains(&self, u: &[f64]) -> bool {
        dot(u, &self.center).clamp(-1.0, 1.0).acos() < self.radius
    }

    /// Spherical distance from the cap center to a unit vector.
    pub fn angular_dist(&self, u: &[f64]) -> f64 {
        dot(u, &self.center).clamp(-1.0, 1.0).acos()
    }
}
