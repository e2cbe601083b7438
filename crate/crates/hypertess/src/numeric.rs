//! Quadrature, special-function helpers, seeded sub-stream derivation and
//! small statistics used throughout the crate.

use crate::error::{Error, Result};

/// Surface area of the unit sphere S^{j-1} in R^j: 2 pi^{j/2} / Gamma(j/2).
pub fn sphere_surface_area(j: u32) -> f64 {
    assert!(j >= 1, "sphere dimension index must be >= 1");
    let a = 0.5 * j as f64;
    2.0 * (a * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(a)).exp()
}

/// Natural log of the Gamma function, accurate to ~1e-13 relative.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// integral of cosh^n over [0, x], by the standard power reduction.
pub fn integral_cosh_pow(n: u32, x: f64) -> f64 {
    match n {
        0 => x,
        1 => x.sinh(),
        _ => {
            (x.cosh().powi(n as i32 - 1) * x.sinh() + (n as f64 - 1.0) * integral_cosh_pow(n - 2, x))
                / n as f64
        }
    }
}

/// integral of sinh^n over [0, x].
pub fn integral_sinh_pow(n: u32, x: f64) -> f64 {
    match n {
        0 => x,
        1 => x.cosh() - 1.0,
        _ => {
            (x.sinh().powi(n as i32 - 1) * x.cosh() - (n as f64 - 1.0) * integral_sinh_pow(n - 2, x))
                / n as f64
        }
    }
}

/// Solve integral_cosh_pow(n, tau) = target for tau in [0, upper].
///
/// Newton iteration with a bisection safeguard; the derivative cosh^n is
/// strictly positive so the bracket never stalls. Terminates at |step| <=
/// 1e-12 * (1 + tau).
pub fn invert_cosh_cdf(n: u32, upper: f64, target: f64) -> f64 {
    debug_assert!(upper > 0.0 && target >= 0.0);
    let total = integral_cosh_pow(n, upper);
    debug_assert!(target <= total * (1.0 + 1e-12));
    let mut lo = 0.0;
    let mut hi = upper;
    let mut tau = upper * (target / total).clamp(0.0, 1.0);
    for _ in 0..200 {
        let g = integral_cosh_pow(n, tau) - target;
        if g > 0.0 {
            hi = tau;
        } else {
            lo = tau;
        }
        let mut next = tau - g / tau.cosh().powi(n as i32);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - tau).abs() <= 1e-12 * (1.0 + tau.abs()) {
            return next;
        }
        tau = next;
    }
    tau
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        // Floor the panel tolerance at a few ulps of the panel value; below
        // that, refinement only shuffles rounding noise.
        let tol = tol.max(4.0 * f64::EPSILON * whole.abs());
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numeric(format!(
                "quadrature stalled on [{a:.6}, {b:.6}], achieved tolerance {:.3e} (requested {:.3e})",
                delta.abs() / 15.0,
                tol
            )));
        }
        Ok(rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 52)
}

/// Deterministic sub-stream seed for replicate `index`; splitmix64 finalizer.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Kolmogorov-Smirnov sup distance between a sample and a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_pvalue(stat: f64, dof: f64) -> f64 {
    statrs::function::gamma::gamma_ur(0.5 * dof, 0.5 * stat)
}

/// Welford accumulator for mean and standard error.
#[derive(Clone, Debug, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.n > 1 {
            (self.variance() / self.n as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p_hat: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p_hat * (1.0 - p_hat) / n as f64).sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}
