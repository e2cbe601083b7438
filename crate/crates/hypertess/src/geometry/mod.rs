//! Exact Klein-model primitives.
//!
//! Hyperbolic d-space is identified with the open Euclidean unit ball; geodesics
//! and totally geodesic subspaces are chords and flat sections of the ball, so
//! side/crossing predicates are plain linear algebra. Distances and isometries
//! go through the hyperboloid embedding x -> (1, x) / sqrt(1 - |x|^2), where the
//! metric is the restriction of the Minkowski form diag(-1, 1, .., 1).

mod hyperplane;
mod isometry;

pub use hyperplane::{Cap, Hyperplane};
pub use isometry::Isometry;

use crate::error::{Error, Result};
use crate::numeric::{self, adaptive_simpson, sphere_surface_area};

/// Strict tolerance for "on the hyperplane" and other degeneracy decisions.
pub const SIDE_TOL: f64 = 1e-12;

/// A point of hyperbolic d-space in Klein coordinates (Euclidean norm < 1).
#[derive(Clone, Debug, PartialEq)]
pub struct KleinPoint {
    coords: Vec<f64>,
}

impl KleinPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Usage(format!(
                "dimension must be >= 2, got {}",
                coords.len()
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        let n = numeric::norm(&coords);
        if n >= 1.0 {
            return Err(Error::Domain(format!(
                "Klein coordinates must have norm < 1, got {n}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(d: usize) -> Self {
        assert!(d >= 2);
        Self {
            coords: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        numeric::norm(&self.coords)
    }

    /// Hyperbolic distance, via the hyperboloid lift:
    /// dist = arcosh((1 - <x,y>) / sqrt((1-|x|^2)(1-|y|^2))).
    ///
    /// Reduces to artanh(|v|) for distances from the origin.
    pub fn dist(&self, other: &KleinPoint) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Usage(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(dist_coords(&self.coords, &other.coords))
    }
}

/// Distance between raw Klein coordinate slices (both of norm < 1).
pub(crate) fn dist_coords(x: &[f64], y: &[f64]) -> f64 {
    let num = 1.0 - numeric::dot(x, y);
    let den = ((1.0 - numeric::norm_sq(x)) * (1.0 - numeric::norm_sq(y))).sqrt();
    // num/den >= 1 up to rounding; clamp so coincident points give exactly 0.
    (num / den).max(1.0).acosh()
}

/// Lift Klein coordinates to the upper hyperboloid sheet.
pub(crate) fn lift(x: &[f64]) -> Vec<f64> {
    let s = 1.0 / (1.0 - numeric::norm_sq(x)).sqrt();
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(s);
    v.extend(x.iter().map(|&c| c * s));
    v
}

/// Project a hyperboloid point back to Klein coordinates.
pub(crate) fn project(v: &[f64]) -> Vec<f64> {
    debug_assert!(v[0] > 0.0);
    v[1..].iter().map(|&c| c / v[0]).collect()
}

/// Hyperbolic volume of the ball B(o, r) in dimension d.
///
/// vol = omega_d * integral of sinh^{d-1} over [0, r]; closed form for d = 2,
/// adaptive quadrature at relative tolerance 1e-10 otherwise.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    assert!(d >= 2, "dimension must be >= 2");
    assert!(r >= 0.0, "radius must be nonnegative");
    if r == 0.0 {
        return 0.0;
    }
    if d == 2 {
        return 2.0 * std::f64::consts::PI * (r.cosh() - 1.0);
    }
    let n = (d - 1) as i32;
    let scale = numeric::integral_sinh_pow(n as u32, r).max(f64::MIN_POSITIVE);
    let integral = adaptive_simpson(&|t: f64| t.sinh().powi(n), 0.0, r, 1e-10 * scale)
        .expect("sinh^{d-1} quadrature converges on bounded intervals");
    sphere_surface_area(d as u32) * integral
}
