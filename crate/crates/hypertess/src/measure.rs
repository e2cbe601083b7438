//! The invariant hyperplane measure in Klein form and exact seeded sampling of
//! the Poisson hyperplane process restricted to a window.
//!
//! In Klein coordinates the isometry-invariant measure on hyperplanes is
//! 2 (1 - t^2)^{-(d+1)/2} dt sigma(du) with sigma the uniform probability
//! measure on the normal sphere. Substituting t = tanh(tau) turns the offset
//! density into cosh^{d-1}(tau) d tau, which is what the sampler inverts; a
//! hyperplane H(u, t) meets the ball B(o, r) exactly when t < tanh(r), so the
//! total mass of window-hitting hyperplanes is 2 * integral of cosh^{d-1}
//! over [0, r].

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{Hyperplane, Isometry, KleinPoint};
use crate::numeric::{
    self, adaptive_simpson, integral_cosh_pow, invert_cosh_cdf, ln_gamma,
};

/// mu_{d-1} mass of hyperplanes hitting B(o, r): 2 * int_0^r cosh^{d-1}.
///
/// Closed form 2 sinh r for d = 2.
pub fn mu_hit_ball(d: usize, r: f64) -> f64 {
    assert!(d >= 2, "dimension must be >= 2");
    assert!(r >= 0.0, "radius must be nonnegative");
    2.0 * integral_cosh_pow((d - 1) as u32, r)
}

/// Per-unit-length separating mass: the mu mass of hyperplanes crossing a
/// geodesic segment of length 1 is this constant (a Crofton ratio; it equals
/// the k = 1 section constant omega_{d+1} omega_1 / (omega_d omega_2)).
pub fn separating_mass_per_length(d: usize) -> f64 {
    assert!(d >= 2);
    (ln_gamma(0.5 * d as f64) - 0.5 * std::f64::consts::PI.ln() - ln_gamma(0.5 * (d as f64 + 1.0)))
        .exp()
}

/// mu_{d-1} mass of hyperplanes separating x from y.
///
/// Proportional to dist(x, y) by invariance; the constant for this crate's
/// normalization is `separating_mass_per_length` (2/pi in the plane, 1/2 for
/// d = 3), verified against direct quadrature of the Klein density. The
/// two-point function of the process is exp(-gamma * mu_separating).
pub fn mu_separating(x: &KleinPoint, y: &KleinPoint) -> Result<f64> {
    Ok(separating_mass_per_length(x.dim()) * x.dist(y)?)
}

/// One realization of the window-restricted Poisson hyperplane process.
///
/// Every listed hyperplane hits B(o, window_radius); the list order is the
/// generation order and is reproducible from (seed, d, gamma, window_radius).
#[derive(Clone, Debug)]
pub struct ProcessSample {
    pub d: usize,
    pub gamma: f64,
    pub window_radius: f64,
    pub seed: u64,
    pub hyperplanes: Vec<Hyperplane>,
}

/// A realization of the coupled (marked) process at intensity `gamma_max`:
/// each hyperplane carries a uniform mark in [0, gamma_max], and restricting
/// to marks <= gamma yields the process at intensity gamma. Used for exactly
/// monotone intensity sweeps.
#[derive(Clone, Debug)]
pub struct MarkedProcessSample {
    pub d: usize,
    pub gamma_max: f64,
    pub window_radius: f64,
    pub seed: u64,
    /// (hyperplane, mark), sorted by increasing mark.
    pub marked: Vec<(Hyperplane, f64)>,
}

impl MarkedProcessSample {
    /// The sub-process of marks <= gamma.
    pub fn restrict(&self, gamma: f64) -> ProcessSample {
        assert!(gamma <= self.gamma_max);
        let idx = self.marked.partition_point(|(_, m)| *m <= gamma);
        ProcessSample {
            d: self.d,
            gamma,
            window_radius: self.window_radius,
            seed: self.seed,
            hyperplanes: self.marked[..idx].iter().map(|(h, _)| h.clone()).collect(),
        }
    }
}

fn check_process_params(d: usize, gamma: f64, window_radius: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::Usage(format!("dimension must be >= 2, got {d}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Usage(format!("intensity must be > 0, got {gamma}")));
    }
    if !(window_radius > 0.0 && window_radius.is_finite()) {
        return Err(Error::Usage(format!(
            "window radius must be > 0, got {window_radius}"
        )));
    }
    Ok(())
}

fn uniform_sphere(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = numeric::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Draw one window-hitting hyperplane: uniform normal, offset t = tanh(tau)
/// with tau inverse-CDF sampled from cosh^{d-1} on [0, window_radius).
fn draw_hyperplane(d: usize, window_radius: f64, rng: &mut ChaCha8Rng) -> Hyperplane {
    let normal = uniform_sphere(d, rng);
    let total = integral_cosh_pow((d - 1) as u32, window_radius);
    let q: f64 = rng.gen();
    let tau = invert_cosh_cdf((d - 1) as u32, window_radius, q * total);
    Hyperplane::new(normal, tau.tanh()).expect("sampled offset lies in [0, tanh R)")
}

/// Sample the Poisson hyperplane process with intensity `gamma` restricted to
/// hyperplanes hitting B(o, window_radius). Deterministic per seed.
pub fn sample_process(
    d: usize,
    gamma: f64,
    window_radius: f64,
    seed: u64,
) -> Result<ProcessSample> {
    check_process_params(d, gamma, window_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = gamma * mu_hit_ball(d, window_radius);
    let count = Poisson::new(mean)
        .map_err(|e| Error::Usage(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let hyperplanes = (0..count)
        .map(|_| draw_hyperplane(d, window_radius, &mut rng))
        .collect();
    Ok(ProcessSample {
        d,
        gamma,
        window_radius,
        seed,
        hyperplanes,
    })
}

/// Sample the coupled process at `gamma_max` with uniform marks.
pub fn sample_marked_process(
    d: usize,
    gamma_max: f64,
    window_radius: f64,
    seed: u64,
) -> Result<MarkedProcessSample> {
    check_process_params(d, gamma_max, window_radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = gamma_max * mu_hit_ball(d, window_radius);
    let count = Poisson::new(mean)
        .map_err(|e| Error::Usage(format!("invalid Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let mut marked: Vec<(Hyperplane, f64)> = (0..count)
        .map(|_| {
            let h = draw_hyperplane(d, window_radius, &mut rng);
            let mark = rng.gen_range(0.0..gamma_max);
            (h, mark)
        })
        .collect();
    marked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(MarkedProcessSample {
        d,
        gamma_max,
        window_radius,
        seed,
        marked,
    })
}

/// A restricted set of hyperplanes: normals within an epsilon-cap around a
/// center direction, offsets in (a, b).
#[derive(Clone, Debug)]
pub struct WallSet {
    pub center: Vec<f64>,
    pub cap_radius: f64,
    pub offset_low: f64,
    pub offset_high: f64,
}

impl WallSet {
    pub fn new(center: Vec<f64>, cap_radius: f64, offset_low: f64, offset_high: f64) -> Result<Self> {
        let n = numeric::norm(&center);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Usage("wall center must be a unit vector".into()));
        }
        if !(0.0 < cap_radius && cap_radius < std::f64::consts::PI) {
            return Err(Error::Usage(format!(
                "cap radius must lie in (0, pi), got {cap_radius}"
            )));
        }
        if !(0.0 < offset_low && offset_low < offset_high && offset_high < 1.0) {
            return Err(Error::Usage(format!(
                "offsets must satisfy 0 < a < b < 1, got a = {offset_low}, b = {offset_high}"
            )));
        }
        Ok(Self {
            center,
            cap_radius,
            offset_low,
            offset_high,
        })
    }
}

/// Draw one hyperplane with distribution mu restricted to the wall set:
/// rejection sampling on the normal cap, inverse-CDF on the offset.
pub fn sample_wall(d: usize, wall: &WallSet, seed: u64) -> Result<Hyperplane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_wall_with(d, wall, &mut rng)
}

pub fn sample_wall_with(d: usize, wall: &WallSet, rng: &mut ChaCha8Rng) -> Result<Hyperplane> {
    if wall.center.len() != d {
        return Err(Error::Usage("wall center dimension mismatch".into()));
    }
    let normal = loop {
        let u = uniform_sphere(d, rng);
        if numeric::dot(&u, &wall.center).clamp(-1.0, 1.0).acos() < wall.cap_radius {
            break u;
        }
    };
    let n = (d - 1) as u32;
    let (lo, hi) = (wall.offset_low.atanh(), wall.offset_high.atanh());
    let (ilo, ihi) = (integral_cosh_pow(n, lo), integral_cosh_pow(n, hi));
    let q: f64 = rng.gen();
    let tau = invert_cosh_cdf(n, hi, ilo + q * (ihi - ilo));
    Hyperplane::new(normal, tau.tanh())
}

/// mu mass of hyperplanes hitting both B(x, r) and B(y, r).
///
/// By invariance this depends only on s = dist(x, y); the pair is mapped so
/// the centers sit at +- tanh(s/2) e_1 and the integral reduces to one
/// dimension: for a normal with first coordinate z, the offsets hitting both
/// balls form an explicit interval, integrated in closed form, and the
/// normal marginal of z has density proportional to (1 - z^2)^{(d-3)/2}.
pub fn mu_joint_balls(d: usize, x: &KleinPoint, y: &KleinPoint, r: f64) -> Result<f64> {
    if x.dim() != d || y.dim() != d {
        return Err(Error::Usage("point dimension mismatch".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Usage(format!("ball radius must be > 0, got {r}")));
    }
    mu_joint_balls_at_separation(d, x.dist(y)?, r)
}

/// Same as `mu_joint_balls` for centers at hyperbolic distance `s`.
pub fn mu_joint_balls_at_separation(d: usize, s: f64, r: f64) -> Result<f64> {
    assert!(d >= 2 && s >= 0.0 && r > 0.0);
    let n = (d - 1) as u32;
    let m = 0.5 * s;
    let c1 = m.tanh();
    // K = sinh(r) * sqrt(1 - c1^2) = sinh(r)/cosh(m).
    let k = r.sinh() / m.cosh();
    // Offset interval of hyperplanes hitting both balls, for |<u, e1>| = |z|:
    // nonempty exactly when |z| c1 < K, i.e. |z| < sinh(r)/sinh(m).
    let both = move |z: f64| -> f64 {
        let p = (z * c1).abs();
        let root = k * (1.0 + k * k - p * p).max(0.0).sqrt();
        let lower = ((p - root) / (1.0 + k * k)).max(0.0);
        let upper = (root - p) / (1.0 + k * k);
        if upper <= lower {
            return 0.0;
        }
        2.0 * (integral_cosh_pow(n, upper.atanh()) - integral_cosh_pow(n, lower.atanh()))
    };
    // Density of z = <u, e1> for u uniform on S^{d-1}.
    let half = 0.5 * (d - 1) as f64;
    let log_c = ln_gamma(0.5 * d as f64) - 0.5 * std::f64::consts::PI.ln() - ln_gamma(half);
    let c_z = log_c.exp();
    let z_support = if c1 == 0.0 { 1.0 } else { (r.sinh() / m.sinh()).min(1.0) };
    let tol = 1e-11 * mu_hit_ball(d, r).max(1.0);
    let value = if z_support >= 1.0 {
        // Substitute z = cos(phi): the weight becomes sin^{d-2}(phi), smooth.
        let f = |phi: f64| c_z * phi.sin().powi(d as i32 - 2) * both(phi.cos());
        adaptive_simpson(&f, 0.0, std::f64::consts::PI, tol)?
    } else {
        // Support is strictly interior; integrate z directly (even integrand).
        let f = |z: f64| c_z * (1.0 - z * z).powf(half - 1.0) * both(z);
        2.0 * adaptive_simpson(&f, 0.0, z_support, tol)?
    };
    Ok(value)
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

impl ProcessSample {
    /// Line-oriented text record: a header `d gamma R seed count`, then one
    /// hyperplane per line as `u_1 .. u_d t` with 17 significant digits.
    /// Lines starting with `#` are comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {:.16e} {:.16e} {} {}\n",
            self.d,
            self.gamma,
            self.window_radius,
            self.seed,
            self.hyperplanes.len()
        ));
        for h in &self.hyperplanes {
            for u in h.normal() {
                out.push_str(&format!("{u:.16e} "));
            }
            out.push_str(&format!("{:.16e}\n", h.offset()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty sample file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "header must be 'd gamma R seed count', got '{header}'"
            )));
        }
        let bad = |what: &str| Error::Parse(format!("bad {what} in header '{header}'"));
        let d: usize = fields[0].parse().map_err(|_| bad("dimension"))?;
        let gamma: f64 = fields[1].parse().map_err(|_| bad("gamma"))?;
        let window_radius: f64 = fields[2].parse().map_err(|_| bad("window radius"))?;
        let seed: u64 = fields[3].parse().map_err(|_| bad("seed"))?;
        let count: usize = fields[4].parse().map_err(|_| bad("count"))?;
        let mut hyperplanes = Vec::with_capacity(count);
        for line in lines {
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad hyperplane line '{line}'")))?;
            if nums.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "hyperplane line has {} fields, expected {}",
                    nums.len(),
                    d + 1
                )));
            }
            hyperplanes.push(Hyperplane::new(nums[..d].to_vec(), nums[d])?);
        }
        if hyperplanes.len() != count {
            return Err(Error::Parse(format!(
                "header promised {count} hyperplanes, found {}",
                hyperplanes.len()
            )));
        }
        Ok(Self {
            d,
            gamma,
            window_radius,
            seed,
            hyperplanes,
        })
    }
}

/// Sample a point uniformly (w.r.t. hyperbolic volume) in B(o, radius).
pub fn sample_point_in_ball(d: usize, radius: f64, rng: &mut ChaCha8Rng) -> KleinPoint {
    // Radius CDF proportional to the sphere-area density sinh^{d-1}.
    let n = (d - 1) as u32;
    let total = numeric::integral_sinh_pow(n, radius);
    let q: f64 = rng.gen();
    // Invert int_0^rho sinh^{d-1} = q * total by safeguarded Newton.
    let target = q * total;
    let mut lo = 0.0;
    let mut hi = radius;
    let mut rho = radius * q;
    for _ in 0..200 {
        let g = numeric::integral_sinh_pow(n, rho) - target;
        if g > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        let deriv = rho.sinh().powi(n as i32).max(f64::MIN_POSITIVE);
        let mut next = rho - g / deriv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= 1e-12 * (1.0 + rho.abs()) {
            rho = next;
            break;
        }
        rho = next;
    }
    let dir = uniform_sphere(d, rng);
    KleinPoint::new(dir.into_iter().map(|c| c * rho.tanh()).collect())
        .expect("tanh(rho) < 1 keeps the point inside the ball")
}

/// Poisson number of points for intensity `lambda` per unit volume in B(o, R).
pub fn sample_poisson_points(
    d: usize,
    lambda: f64,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<KleinPoint> {
    let mean = lambda * crate::geometry::ball_volume(d, radius);
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng) as usize
    } else {
        0
    };
    (0..count)
        .map(|_| sample_point_in_ball(d, radius, rng))
        .collect()
}

/// Monte Carlo estimate of the mu mass of {H : H hits the hyperbolic ball
/// B(center, rho)}, using `n` hyperplanes drawn in the window B(o, window_radius).
///
/// Returns (estimate, standard error). The window must contain the ball.
pub fn mu_hit_ball_monte_carlo(
    center: &KleinPoint,
    rho: f64,
    window_radius: f64,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    let d = center.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = mu_hit_ball(d, window_radius);
    let g = Isometry::translation_to_origin(center);
    let th = rho.tanh();
    let mut hits = 0u64;
    for _ in 0..n {
        let h = draw_hyperplane(d, window_radius, &mut rng);
        if g.apply_hyperplane(&h).offset() < th {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    (total * p, total * numeric::binomial_se(p, n as u64))
}

/// Density of the z = <u, e1> marginal on S^{d-1}; exposed for tests that
/// integrate against the normal marginal directly.
pub fn sphere_coordinate_density(d: usize, z: f64) -> f64 {
    let half = 0.5 * (d - 1) as f64;
    let log_c = ln_gamma(0.5 * d as f64) - 0.5 * std::f64::consts::PI.ln() - ln_gamma(half);
    log_c.exp() * (1.0 - z * z).powf(half - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mu_hit_ball_matches_closed_forms() {
        assert_eq!(mu_hit_ball(2, 0.0), 0.0);
        assert_relative_eq!(mu_hit_ball(2, 1.0), 2.350_402_387_287_603, epsilon = 1e-12);
        assert_relative_eq!(mu_hit_ball(2, 1.0), 2.0 * 1.0f64.sinh(), epsilon = 1e-15);
        // d = 3: 2 int cosh^2 = r + sinh(2r)/2.
        assert_relative_eq!(mu_hit_ball(3, 1.0), 2.813_430_203_923_509, epsilon = 1e-12);
        assert_relative_eq!(
            mu_hit_ball(3, 1.0),
            1.0 + 2.0f64.sinh() / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mu_hit_ball_matches_klein_density_quadrature() {
        // Independent route: integrate 2 (1 - t^2)^{-(d+1)/2} over [0, tanh r].
        for d in [2usize, 3, 5] {
            for &r in &[0.5f64, 1.0, 2.0] {
                let q = adaptive_simpson(
                    &|t: f64| 2.0 * (1.0 - t * t).powf(-0.5 * (d as f64 + 1.0)),
                    0.0,
                    r.tanh(),
                    1e-11 * mu_hit_ball(d, r),
                )
                .unwrap();
                assert_relative_eq!(mu_hit_ball(d, r), q, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn separating_mass_is_proportional_to_distance() {
        let o = KleinPoint::origin(2);
        assert_eq!(mu_separating(&o, &o).unwrap(), 0.0);
        let c2 = separating_mass_per_length(2);
        assert_relative_eq!(c2, 2.0 / std::f64::consts::PI, epsilon = 1e-13);
        assert_relative_eq!(separating_mass_per_length(3), 0.5, epsilon = 1e-13);
        let x = KleinPoint::new(vec![1.0f64.tanh(), 0.0]).unwrap();
        assert_relative_eq!(mu_separating(&o, &x).unwrap(), c2, epsilon = 1e-12);
        let y = KleinPoint::new(vec![0.5, 0.0]).unwrap();
        assert_relative_eq!(
            mu_separating(&o, &y).unwrap(),
            c2 * 0.549_306_144_334_054_8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sample_counts_have_poisson_mean() {
        // Mean count over replicates within 3 SE of gamma * 2 sinh R.
        let (gamma, r) = (1.0, 1.0);
        let n = 10_000;
        let mut total = 0usize;
        for i in 0..n {
            total += sample_process(2, gamma, r, numeric::sub_seed(42, i))
                .unwrap()
                .hyperplanes
                .len();
        }
        let mean = total as f64 / n as f64;
        let target = gamma * mu_hit_ball(2, r);
        let se = (target / n as f64).sqrt();
        assert!(
            (mean - target).abs() < 3.0 * se,
            "mean {mean} vs target {target} (se {se})"
        );
    }

    #[test]
    fn sampled_offsets_stay_in_window_and_reproduce() {
        let s = sample_process(3, 2.0, 1.5, 7).unwrap();
        let th = 1.5f64.tanh();
        assert!(s.hyperplanes.iter().all(|h| h.offset() < th));
        let s2 = sample_process(3, 2.0, 1.5, 7).unwrap();
        assert_eq!(s.hyperplanes.len(), s2.hyperplanes.len());
        for (a, b) in s.hyperplanes.iter().zip(&s2.hyperplanes) {
            assert_eq!(a, b); // P-M4: bit-identical
        }
    }

    #[test]
    fn offset_marginal_matches_derived_cdf() {
        // d = 2, R = 1: density prop to (1-t^2)^{-3/2}, CDF t/sqrt(1-t^2)/sinh(1).
        // (Derived by substituting t = tanh tau; verified by quadrature here.)
        let r = 1.0f64;
        let norm = r.sinh();
        let cdf = |t: f64| t / (1.0 - t * t).sqrt() / norm;
        let q = adaptive_simpson(
            &|t: f64| (1.0 - t * t).powf(-1.5),
            0.0,
            0.5f64,
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(cdf(0.5), q / norm, epsilon = 1e-9);

        let mut offsets = Vec::new();
        let mut i = 0;
        while offsets.len() < 10_000 {
            let s = sample_process(2, 1.0, r, numeric::sub_seed(3, i)).unwrap();
            offsets.extend(s.hyperplanes.iter().map(|h| h.offset()));
            i += 1;
        }
        offsets.truncate(10_000);
        let d = numeric::ks_statistic(&mut offsets, cdf);
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn marked_restriction_is_monotone_and_matches_full_sample_law() {
        let m = sample_marked_process(2, 4.0, 2.0, 11).unwrap();
        let lo = m.restrict(1.0);
        let hi = m.restrict(3.0);
        assert!(lo.hyperplanes.len() <= hi.hyperplanes.len());
        // Every low-intensity plane appears in the higher restriction.
        for h in &lo.hyperplanes {
            assert!(hi.hyperplanes.contains(h));
        }
    }

    #[test]
    fn wall_samples_respect_support() {
        let wall = WallSet::new(vec![1.0, 0.0], 0.3, 0.4, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let h = sample_wall_with(2, &wall, &mut rng).unwrap();
            assert!(h.offset() > 0.4 && h.offset() < 0.7);
            let ang = numeric::dot(h.normal(), &wall.center).clamp(-1.0, 1.0).acos();
            assert!(ang < 0.3);
        }
    }

    #[test]
    fn wall_offset_marginal_matches_restricted_density() {
        let wall = WallSet::new(vec![1.0, 0.0], 0.5, 0.3, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut offsets: Vec<f64> = (0..10_000)
            .map(|_| sample_wall_with(2, &wall, &mut rng).unwrap().offset())
            .collect();
        let density = |t: f64| (1.0 - t * t).powf(-1.5);
        let total = adaptive_simpson(&density, 0.3, 0.8, 1e-12).unwrap();
        let cdf = |t: f64| adaptive_simpson(&density, 0.3, t, 1e-12).unwrap() / total;
        let d = numeric::ks_statistic(&mut offsets, cdf);
        assert!(d < 0.03, "KS distance {d}");
    }

    #[test]
    fn joint_hitting_mass_reduces_to_single_ball() {
        let x = KleinPoint::new(vec![0.2, 0.1]).unwrap();
        assert_relative_eq!(
            mu_joint_balls(2, &x, &x, 1.0).unwrap(),
            mu_hit_ball(2, 1.0),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            mu_joint_balls_at_separation(3, 0.0, 0.7).unwrap(),
            mu_hit_ball(3, 0.7),
            max_relative = 1e-8
        );
    }

    #[test]
    fn joint_hitting_mass_decays_and_vanishes_at_separation_20() {
        let mut prev = f64::INFINITY;
        for &s in &[0.0, 2.0, 4.0, 8.0, 16.0] {
            let v = mu_joint_balls_at_separation(2, s, 1.0).unwrap();
            assert!(v < prev, "not strictly decreasing at separation {s}");
            prev = v;
        }
        let far = mu_joint_balls_at_separation(2, 20.0, 1.0).unwrap();
        assert!(far < 1e-3, "mu at separation 20 is {far}");
    }

    #[test]
    fn joint_hitting_mass_is_symmetric_and_monotone_on_points() {
        let x = KleinPoint::new(vec![0.4, 0.0]).unwrap();
        let y = KleinPoint::new(vec![-0.3, 0.2]).unwrap();
        let a = mu_joint_balls(2, &x, &y, 0.8).unwrap();
        let b = mu_joint_balls(2, &y, &x, 0.8).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn joint_mass_matches_direct_predicate_monte_carlo() {
        // Independent oracle: sample window hyperplanes, test both-ball hits
        // via the isometry predicate, scale by the window mass.
        let d = 2;
        let s = 1.5f64;
        let r = 1.0;
        let x = KleinPoint::new(vec![(s / 2.0).tanh(), 0.0]).unwrap();
        let y = KleinPoint::new(vec![-(s / 2.0f64).tanh(), 0.0]).unwrap();
        let window = s / 2.0 + r + 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 200_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let h = draw_hyperplane(d, window, &mut rng);
            if h.hits_ball(&x, r) && h.hits_ball(&y, r) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let est = p * mu_hit_ball(d, window);
        let se = mu_hit_ball(d, window) * numeric::binomial_se(p, n);
        let exact = mu_joint_balls(d, &x, &y, r).unwrap();
        assert!(
            (est - exact).abs() < 4.0 * se,
            "MC {est} +- {se} vs quadrature {exact}"
        );
    }

    /// P-M2: the measure of hyperplanes crossing a geodesic segment of length
    /// s equals separating_mass_per_length(d) * s (Crofton), checked by an
    /// independent rejection-sampling Monte Carlo of the Klein density.
    #[test]
    fn crofton_segment_mass_monte_carlo() {
        for d in [2usize, 3] {
            for &s in &[0.5f64, 1.0, 2.0] {
                let window = s + 0.3;
                let x = KleinPoint::origin(d);
                let mut yc = vec![0.0; d];
                yc[0] = s.tanh();
                let y = KleinPoint::new(yc).unwrap();
                // Normalizer by quadrature (independent of integral_cosh_pow).
                let mass = adaptive_simpson(
                    &|t: f64| 2.0 * (1.0 - t * t).powf(-0.5 * (d as f64 + 1.0)),
                    0.0,
                    window.tanh(),
                    1e-10,
                )
                .unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(numeric::sub_seed(77, d as u64));
                let tmax: f64 = window.tanh();
                let env = (1.0 - tmax * tmax).powf(-0.5 * (d as f64 + 1.0));
                let n = 2_000_000;
                let mut crossing = 0u64;
                for _ in 0..n {
                    // Rejection sampler for the offset density.
                    let t = loop {
                        let cand = rng.gen_range(0.0..tmax);
                        let acc = (1.0 - cand * cand).powf(-0.5 * (d as f64 + 1.0)) / env;
                        if rng.gen::<f64>() < acc {
                            break cand;
                        }
                    };
                    let u = uniform_sphere(d, &mut rng);
                    let h = Hyperplane::new(u, t).unwrap();
                    if h.segment_crosses(&x, &y) {
                        crossing += 1;
                    }
                }
                let p = crossing as f64 / n as f64;
                let est = p * mass;
                let target = separating_mass_per_length(d) * s;
                assert!(
                    (est - target).abs() / target < 0.01,
                    "d={d} s={s}: estimate {est} vs {target}, off by more than 1%"
                );
            }
        }
    }

    /// P-M1: hitting mass of an isometry-moved unit ball equals mu_hit_ball.
    #[test]
    fn hitting_mass_is_isometry_invariant() {
        for d in [2usize, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(numeric::sub_seed(31, d as u64));
            for rep in 0..3 {
                let rot = Isometry::random_rotation(d, &mut rng);
                let tr = Isometry::translation_along_axis(d, 0, rng.gen_range(-1.2..1.2));
                let g = rot.compose(&tr);
                let center = g.apply(&KleinPoint::origin(d));
                let window = KleinPoint::origin(d).dist(&center).unwrap() + 1.0 + 0.3;
                let (est, se) = mu_hit_ball_monte_carlo(
                    &center,
                    1.0,
                    window,
                    100_000,
                    numeric::sub_seed(99, rep),
                );
                let target = mu_hit_ball(d, 1.0);
                assert!(
                    (est - target).abs() < 3.0 * se,
                    "d={d}: {est} +- {se} vs {target}"
                );
            }
        }
    }

    /// P-M3: superposition of independent processes matches the summed
    /// intensity in distribution (chi-square on counts).
    #[test]
    fn superposition_matches_summed_intensity() {
        let (g1, g2, r) = (0.7, 1.3, 1.0);
        let n = 4000;
        let mean = (g1 + g2) * mu_hit_ball(2, r);
        let mut counts = std::collections::HashMap::<usize, u64>::new();
        for i in 0..n {
            let a = sample_process(2, g1, r, numeric::sub_seed(1001, i)).unwrap();
            let b = sample_process(2, g2, r, numeric::sub_seed(2002, i)).unwrap();
            *counts.entry(a.hyperplanes.len() + b.hyperplanes.len()).or_default() += 1;
        }
        // Bin k = 0..kmax with a pooled tail; expected from Poisson(mean).
        let kmax = (mean + 6.0 * mean.sqrt()) as usize;
        let mut expected = vec![0.0; kmax + 2];
        let mut pmf = (-mean).exp();
        for (k, e) in expected.iter_mut().enumerate().take(kmax + 1) {
            *e = pmf * n as f64;
            pmf *= mean / (k as f64 + 1.0);
        }
        expected[kmax + 1] = (n as f64- expected[..=kmax].iter().sum::<f64>()).max(0.0);
        let mut observed = vec![0.0; kmax + 2];
        for (&k, &c) in &counts {
            observed[k.min(kmax + 1)] += c as f64;
        }
        // Pool bins with expected < 5.
        let mut chi2 = 0.0;
        let mut dof: i64 = -1;
        let (mut oe, mut ee) = (0.0, 0.0);
        for (o, e) in observed.iter().zip(&expected) {
            oe += o;
            ee += e;
            if ee >= 5.0 {
                chi2 += (oe - ee) * (oe - ee) / ee;
                dof += 1;
                oe = 0.0;
                ee = 0.0;
            }
        }
        if ee > 0.0 {
            chi2 += (oe - ee) * (oe - ee) / ee;
            dof += 1;
        }
        let p = numeric::chi_square_pvalue(chi2, dof.max(1) as f64);
        assert!(p > 0.01, "chi2 = {chi2}, dof = {dof}, p = {p}");
    }

    #[test]
    fn text_round_trip_is_exact() {
        let s = sample_process(3, 1.5, 1.2, 99).unwrap();
        let text = s.to_text();
        let back = ProcessSample::from_text(&text).unwrap();
        assert_eq!(s.d, back.d);
        assert_eq!(s.seed, back.seed);
        assert_eq!(s.hyperplanes.len(), back.hyperplanes.len());
        for (a, b) in s.hyperplanes.iter().zip(&back.hyperplanes) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uniform_ball_points_follow_radial_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = 2.0f64;
        let mut radii: Vec<f64> = (0..20_000)
            .map(|_| {
                KleinPoint::origin(2)
                    .dist(&sample_point_in_ball(2, r, &mut rng))
                    .unwrap()
            })
            .collect();
        let total = r.cosh() - 1.0;
        let d = numeric::ks_statistic(&mut radii, |x| (x.cosh() - 1.0) / total);
        assert!(d < 0.02, "KS {d}");
    }
}
