use rand::Rng;
use rand_distr::StandardNormal;

use crate::numeric::{self, dot};

use super::{lift, project, Hyperplane, KleinPoint};

/// An isometry of hyperbolic d-space as a (d+1)x(d+1) Lorentz matrix acting on
/// the hyperboloid model: M^T J M = J with J = diag(-1, 1, .., 1) and entry
/// (0,0) > 0 (the upper sheet is preserved). Klein points are lifted, mapped
/// and projected back; hyperplanes are mapped through their spacelike poles.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    dim: usize,       // hyperbolic dimension d
    m: Vec<f64>,      // (d+1)^2 entries, row-major
}

impl Isometry {
    fn from_matrix(dim: usize, m: Vec<f64>) -> Self {
        debug_assert_eq!(m.len(), (dim + 1) * (dim + 1));
        let iso = Self { dim, m };
        debug_assert!(iso.minkowski_defect() < 1e-9, "not a Lorentz matrix");
        debug_assert!(iso.m[0] > 0.0, "not orthochronous");
        iso
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 2);
        let n = dim + 1;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Self { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hyperbolic translation by signed distance `s` along coordinate axis
    /// `axis` (0-based): maps o to (tanh s) e_axis.
    pub fn translation_along_axis(dim: usize, axis: usize, s: f64) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let n = dim + 1;
        let mut iso = Self::identity(dim);
        let (c, sh) = (s.cosh(), s.sinh());
        iso.m[0] = c;
        iso.m[axis + 1] = sh;
        iso.m[(axis + 1) * n] = sh;
        iso.m[(axis + 1) * n + axis + 1] = c;
        iso
    }

    /// The translation along the geodesic through o and `c` that maps `c` to o.
    pub fn translation_to_origin(c: &KleinPoint) -> Self {
        let d = c.dim();
        let nc = c.norm();
        if nc == 0.0 {
            return Self::identity(d);
        }
        let s = nc.atanh();
        let w: Vec<f64> = c.coords().iter().map(|x| x / nc).collect();
        let n = d + 1;
        let mut m = vec![0.0; n * n];
        let (ch, sh) = (s.cosh(), s.sinh());
        m[0] = ch;
        for i in 0..d {
            m[i + 1] = -sh * w[i];
            m[(i + 1) * n] = -sh * w[i];
            for j in 0..d {
                m[(i + 1) * n + j + 1] = (ch - 1.0) * w[i] * w[j] + if i == j { 1.0 } else { 0.0 };
            }
        }
        Self::from_matrix(d, m)
    }

    /// Rotation by `angle` in the spatial coordinate plane (i, j), 0-based.
    pub fn rotation_in_plane(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        assert!(i < dim && j < dim && i != j);
        let n = dim + 1;
        let mut iso = Self::identity(dim);
        let (c, s) = (angle.cos(), angle.sin());
        iso.m[(i + 1) * n + i + 1] = c;
        iso.m[(i + 1) * n + j + 1] = -s;
        iso.m[(j + 1) * n + i + 1] = s;
        iso.m[(j + 1) * n + j + 1] = c;
        iso
    }

    /// An orthogonal map fixing o that takes the unit vector `from` to the
    /// coordinate axis e_axis (a Householder reflection, so determinant -1).
    pub fn align_to_axis(from: &[f64], axis: usize) -> Self {
        let d = from.len();
        assert!(axis < d);
        debug_assert!((numeric::norm(from) - 1.0).abs() < 1e-9);
        let mut v = from.to_vec();
        v[axis] -= 1.0;
        let vv = numeric::norm_sq(&v);
        let n = d + 1;
        let mut iso = Self::identity(d);
        if vv < 1e-24 {
            return iso;
        }
        for i in 0..d {
            for j in 0..d {
                iso.m[(i + 1) * n + j + 1] -= 2.0 * v[i] * v[j] / vv;
            }
        }
        iso
    }

    /// Haar-ish random rotation about o via Gram-Schmidt of a Gaussian matrix.
    pub fn random_rotation<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
        while rows.len() < dim {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            for r in &rows {
                let p = dot(&v, r);
                for (vi, ri) in v.iter_mut().zip(r) {
                    *vi -= p * ri;
                }
            }
            let nv = numeric::norm(&v);
            if nv < 1e-9 {
                continue;
            }
            for vi in &mut v {
                *vi /= nv;
            }
            rows.push(v);
        }
        let n = dim + 1;
        let mut iso = Self::identity(dim);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..dim {
                iso.m[(i + 1) * n + j + 1] = row[j];
            }
        }
        iso
    }

    /// Composition: (self o other)(x) = self(other(x)).
    pub fn compose(&self, other: &Isometry) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim + 1;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.m[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[i * n + j] += a * other.m[k * n + j];
                }
            }
        }
        Self { dim: self.dim, m }
    }

    /// Lorentz inverse J M^T J.
    pub fn inverse(&self) -> Self {
        let n = self.dim + 1;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let sign = if (i == 0) != (j == 0) { -1.0 } else { 1.0 };
                m[i * n + j] = sign * self.m[j * n + i];
            }
        }
        Self { dim: self.dim, m }
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim + 1;
        debug_assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = dot(&self.m[i * n..(i + 1) * n], v);
        }
        out
    }

    pub fn apply(&self, x: &KleinPoint) -> KleinPoint {
        assert_eq!(self.dim, x.dim());
        KleinPoint::new(self.apply_coords(x.coords())).expect("isometries preserve the ball")
    }

    pub fn apply_coords(&self, x: &[f64]) -> Vec<f64> {
        project(&self.mat_vec(&lift(x)))
    }

    /// Map a hyperplane through its unit spacelike pole (t, u)/sqrt(1 - t^2).
    pub fn apply_hyperplane(&self, h: &Hyperplane) -> Hyperplane {
        assert_eq!(self.dim, h.dim());
        let t = h.offset();
        let scale = 1.0 / (1.0 - t * t).sqrt();
        let mut pole = Vec::with_capacity(self.dim + 1);
        pole.push(t * scale);
        pole.extend(h.normal().iter().map(|&u| u * scale));
        let img = self.mat_vec(&pole);
        let spatial_norm = numeric::norm(&img[1..]);
        let normal: Vec<f64> = img[1..].iter().map(|&c| c / spatial_norm).collect();
        // <n', n'>_L = 1 forces |t'| < 1.
        Hyperplane::new(normal, img[0] / spatial_norm).expect("pole image stays spacelike")
    }

    /// max |M^T J M - J|: zero for exact Lorentz matrices.
    pub fn minkowski_defect(&self) -> f64 {
        let n = self.dim + 1;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for k in 0..n {
                    let sign = if k == 0 { -1.0 } else { 1.0 };
                    v += sign * self.m[k * n + i] * self.m[k * n + j];
                }
                let target = if i != j {
                    0.0
                } else if i == 0 {
                    -1.0
                } else {
                    1.0
                };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}
