//! Student distributions `N [1 + b (x-mu)^T S^{-1} (x-mu)]_+^(1/(a-1))`.
//!
//! The order `a` and the degrees of freedom `nu` are tied by
//! `a = 1 - 2/(nu + d)`, and `b = 1/nu`. Positive `nu` gives the usual
//! heavy-tailed distribution; `nu < min(0, 2-d)` gives compact support.

use std::sync::Arc;

use libm::lgamma;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, StandardNormal};

use super::spec::{FamilyKind, PowerLawFamilySpec, SupportRule};
use super::{log_det_spd, log_elliptical_integral, ParametricFamily};
use crate::error::{Error, Result};
use crate::quad::{Frame, Support};

/// `b_a = (1 - a) / (2 - d (1 - a))`.
pub fn b_alpha(alpha: f64, d: usize) -> f64 {
    (1.0 - alpha) / (2.0 - d as f64 * (1.0 - alpha))
}

/// Degrees of freedom `nu = 2/(1-a) - d`.
pub fn nu_of_alpha(alpha: f64, d: usize) -> f64 {
    2.0 / (1.0 - alpha) - d as f64
}

/// Order `a = 1 - 2/(nu + d)`.
pub fn alpha_of_nu(nu: f64, d: usize) -> f64 {
    1.0 - 2.0 / (nu + d as f64)
}

/// Orders for which the Student density exists in dimension `d`.
pub fn student_admissible(alpha: f64, d: usize) -> bool {
    let edge = (d as f64 - 2.0) / d as f64;
    alpha.is_finite() && alpha != 1.0 && (alpha > edge || alpha < edge.min(0.0))
}

/// Flat parameter layout: `mu_1..mu_d` then `sigma_ij` for `i <= j`.
pub fn pack_theta(mu: &[f64], sigma: &DMatrix<f64>) -> Vec<f64> {
    let d = mu.len();
    let mut t = mu.to_vec();
    for i in 0..d {
        for j in i..d {
            t.push(sigma[(i, j)]);
        }
    }
    t
}

pub fn unpack_theta(theta: &[f64], d: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if theta.len() != d * (d + 3) / 2 {
        return Err(Error::InvalidInput(format!(
            "expected {} location-scale parameters, got {}",
            d * (d + 3) / 2,
            theta.len()
        )));
    }
    let mu = theta[..d].to_vec();
    let mut sigma = DMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        for j in i..d {
            sigma[(i, j)] = theta[k];
            sigma[(j, i)] = theta[k];
            k += 1;
        }
    }
    Ok((mu, sigma))
}

/// Names matching [`pack_theta`], 1-based.
pub fn theta_names(d: usize) -> Vec<String> {
    let mut n: Vec<String> = (1..=d).map(|i| format!("mu[{i}]")).collect();
    for i in 1..=d {
        for j in i..=d {
            n.push(format!("sigma[{i},{j}]"));
        }
    }
    n
}

/// A Student distribution with location `mu` and scale matrix `sigma`.
#[derive(Debug, Clone)]
pub struct StudentParams {
    mu: Vec<f64>,
    sigma: DMatrix<f64>,
    alpha: f64,
    nu: f64,
    b: f64,
    sigma_inv: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
    log_norm: f64,
}

impl StudentParams {
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>, alpha: f64) -> Result<Self> {
        let d = mu.len();
        if d == 0 || sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::InvalidInput("location and scale dimensions disagree".into()));
        }
        if !student_admissible(alpha, d) {
            return Err(Error::Domain(format!("order {alpha} is not admissible for a Student in dimension {d}")));
        }
        if (sigma.clone() - sigma.transpose()).abs().max() > 1e-12 * (1.0 + sigma.abs().max()) {
            return Err(Error::ParameterSpace("scale matrix is not symmetric".into()));
        }
        let (log_det, sigma_inv, chol) = log_det_spd(&sigma)?;
        let nu = nu_of_alpha(alpha, d);
        let b = b_alpha(alpha, d);
        let df = d as f64;
        let log_norm = if nu > 0.0 {
            lgamma((nu + df) / 2.0) - lgamma(nu / 2.0) - df / 2.0 * (nu * std::f64::consts::PI).ln()
        } else {
            lgamma(1.0 - nu / 2.0) - lgamma(1.0 - (nu + df) / 2.0) - df / 2.0 * (-nu * std::f64::consts::PI).ln()
        } - 0.5 * log_det;
        Ok(Self { mu, sigma, alpha, nu, b, sigma_inv, chol, log_det, log_norm })
    }

    /// Builds from degrees of freedom. `nu = -d` has no finite order and is rejected.
    pub fn from_nu(mu: Vec<f64>, sigma: DMatrix<f64>, nu: f64) -> Result<Self> {
        let d = mu.len();
        if nu + d as f64 == 0.0 || nu == 0.0 || !nu.is_finite() {
            return Err(Error::Domain(format!("degrees of freedom {nu} are not admissible")));
        }
        Self::new(mu, sigma, alpha_of_nu(nu, d))
    }

    pub fn from_theta(theta: &[f64], d: usize, alpha: f64) -> Result<Self> {
        let (mu, sigma) = unpack_theta(theta, d)?;
        Self::new(mu, sigma, alpha)
    }

    pub fn theta(&self) -> Vec<f64> {
        pack_theta(&self.mu, &self.sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn log_det_sigma(&self) -> f64 {
        self.log_det
    }

    pub fn normalizer(&self) -> f64 {
        self.log_norm.exp()
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_norm
    }

    /// `(x - mu)^T sigma^{-1} (x - mu)`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        quad_form(&self.sigma_inv, &self.mu, x)
    }

    /// `1 + b Q(x)`.
    pub fn bracket(&self, x: &[f64]) -> f64 {
        1.0 + self.b * self.quad_form(x)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let br = self.bracket(x);
        if br <= 0.0 {
            return 0.0;
        }
        (self.log_norm + br.ln() / (self.alpha - 1.0)).exp()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let br = self.bracket(x);
        if br <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_norm + br.ln() / (self.alpha - 1.0)
    }

    /// Covariance `nu/(nu-2) sigma`, defined for `nu > 2` or compact support.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.nu > 0.0 && self.nu <= 2.0 {
            return Err(Error::Domain(format!("covariance is infinite for nu = {}", self.nu)));
        }
        Ok(&self.sigma * (self.nu / (self.nu - 2.0)))
    }

    pub fn support(&self) -> Support {
        if self.nu > 0.0 {
            Support::FullSpace { dim: self.dim() }
        } else {
            Support::Ellipsoid { center: self.mu.clone(), shape: self.sigma.clone(), radius_sq: -self.nu }
        }
    }

    /// Frame that turns the bracket into `sec^2` on each axis in one dimension.
    pub fn frame(&self) -> Frame {
        Frame { center: self.mu.clone(), chol: self.chol.clone(), scale: self.nu.abs().sqrt() }
    }

    /// `int p^gamma dx` in closed form.
    pub fn power_integral(&self, gamma: f64) -> Result<f64> {
        let e = gamma / (self.alpha - 1.0);
        let log_j = log_elliptical_integral(self.dim(), self.b, e)?;
        Ok((gamma * self.log_norm + 0.5 * self.log_det + log_j).exp())
    }

    /// Gradient of `log p` in the packed parameters.
    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let br = self.bracket(x);
        if br <= 0.0 {
            return Err(Error::ParameterSpace("score undefined outside the support".into()));
        }
        let diff = DVector::from_iterator(d, x.iter().zip(&self.mu).map(|(a, m)| a - m));
        let v = &self.sigma_inv * diff;
        let c = self.b / ((self.alpha - 1.0) * br);
        let mut g: Vec<f64> = v.iter().map(|vi| -2.0 * c * vi).collect();
        for i in 0..d {
            for j in i..d {
                let mult = if i == j { 1.0 } else { 2.0 };
                g.push(-0.5 * mult * self.sigma_inv[(i, j)] - c * mult * v[i] * v[j]);
            }
        }
        Ok(g)
    }

    /// Draws one observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        sample_elliptical(&self.mu, &self.chol, self.b, 1.0 / (self.alpha - 1.0), rng)
    }
}

pub(crate) fn quad_form(inv: &DMatrix<f64>, mu: &[f64], x: &[f64]) -> f64 {
    let d = mu.len();
    let mut q = 0.0;
    for i in 0..d {
        let di = x[i] - mu[i];
        for j in 0..d {
            q += di * inv[(i, j)] * (x[j] - mu[j]);
        }
    }
    q
}

/// Draws from the density proportional to `[1 + b |z|^2]_+^e`, `x = mu + L z`.
pub(crate) fn sample_elliptical<R: Rng + ?Sized>(
    mu: &[f64],
    chol: &DMatrix<f64>,
    b: f64,
    e: f64,
    rng: &mut R,
) -> Vec<f64> {
    let d = mu.len();
    let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let z: Vec<f64> = if b > 0.0 {
        // Multivariate t with nu' = -2e - d degrees of freedom, rescaled.
        let nu_t = -2.0 * e - d as f64;
        let w: f64 = ChiSquared::new(nu_t).expect("positive degrees of freedom").sample(rng);
        let s = (nu_t / w).sqrt() / (b * nu_t).sqrt();
        g.iter().map(|v| v * s).collect()
    } else {
        // Radius squared (in units of 1/|b|) is Beta(d/2, e+1); direction is uniform.
        let r2: f64 = Beta::new(d as f64 / 2.0, e + 1.0).expect("valid beta").sample(rng);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = (r2 / -b).sqrt() / norm;
        g.iter().map(|v| v * s).collect()
    };
    (0..d)
        .map(|i| mu[i] + (0..=i).map(|j| chol[(i, j)] * z[j]).sum::<f64>())
        .collect()
}

/// Location-scale Student family with closed-form power integrals and scores.
#[derive(Debug, Clone, Copy)]
pub struct StudentFamily {
    pub dim: usize,
    pub alpha: f64,
}

impl StudentFamily {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if !student_admissible(alpha, dim) {
            return Err(Error::Domain(format!("order {alpha} is not admissible in dimension {dim}")));
        }
        Ok(Self { dim, alpha })
    }

    pub fn params(&self, theta: &[f64]) -> Result<StudentParams> {
        StudentParams::from_theta(theta, self.dim, self.alpha)
    }
}

impl ParametricFamily for StudentFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn theta_dim(&self) -> usize {
        self.dim * (self.dim + 3) / 2
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.params(theta)?.density(x))
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.params(theta)?.log_density(x))
    }

    fn support(&self, theta: &[f64]) -> Result<Support> {
        Ok(self.params(theta)?.support())
    }

    fn fixed_support(&self) -> bool {
        self.alpha < 1.0 && nu_of_alpha(self.alpha, self.dim) > 0.0
    }

    fn frame(&self, theta: &[f64]) -> Option<Frame> {
        self.params(theta).ok().map(|p| p.frame())
    }

    fn expect(&self, theta: &[f64], m: usize, g: &mut dyn FnMut(&[f64], &mut [f64])) -> Result<Vec<f64>> {
        let p = self.params(theta)?;
        let frame = p.frame();
        let mut buf = vec![0.0; m];
        crate::quad::integrate_support(&p.support(), Some(&frame), &self.quad_settings(), m, |x, out| {
            let dens = p.density(x);
            g(x, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o = if dens > 0.0 { dens * b } else { 0.0 };
            }
        })
    }

    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        self.params(theta)?.power_integral(gamma)
    }

    fn score(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.params(theta)?.score(x)
    }
}

fn stats_upper(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut f = x.to_vec();
    for i in 0..d {
        for j in i..d {
            f.push(if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] });
        }
    }
    f
}

fn student_support_rule(d: usize, alpha: f64) -> SupportRule {
    if nu_of_alpha(alpha, d) > 0.0 {
        SupportRule::Fixed(Support::FullSpace { dim: d })
    } else {
        SupportRule::ParameterDependent(Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
            Ok(p) => p.support(),
            Err(_) => Support::Atoms(vec![]),
        }))
    }
}

fn theta_ok(d: usize, alpha: f64) -> super::spec::AdmissibleFn {
    Arc::new(move |t: &[f64]| StudentParams::from_theta(t, d, alpha).is_ok())
}

fn frame_fn(d: usize, alpha: f64) -> super::spec::FrameFn {
    Arc::new(move |t: &[f64]| StudentParams::from_theta(t, d, alpha).ok().map(|p| p.frame()))
}

/// Characterizing weights `[-2 c S^{-1} mu, c (S^{-1})_{ij}]` with scale factor `c`.
fn student_weights(p: &StudentParams, c: f64) -> Vec<f64> {
    let d = p.dim();
    let mu = DVector::from_column_slice(p.mu());
    let sm = p.sigma_inv() * mu;
    let mut w: Vec<f64> = sm.iter().map(|v| -2.0 * c * v).collect();
    for i in 0..d {
        for j in i..d {
            w.push(c * p.sigma_inv()[(i, j)]);
        }
    }
    w
}

/// Student in the `B^(a)` form with `h = 1` and `f = (x, x_i x_j)`.
pub fn student_balpha_spec(d: usize, alpha: f64) -> Result<PowerLawFamilySpec> {
    StudentFamily::new(d, alpha)?;
    let k = d * (d + 3) / 2;
    let w = Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
        Ok(p) => student_weights(&p, p.b() * ((alpha - 1.0) * p.log_normalizer()).exp()),
        Err(_) => vec![f64::NAN; k],
    });
    let big_f = Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
        Ok(p) => {
            let na = ((alpha - 1.0) * p.log_normalizer()).exp();
            na * (1.0 + p.b() * p.quad_form(&vec![0.0; d])) - 1.0
        }
        Err(_) => f64::NAN,
    });
    Ok(PowerLawFamilySpec::new(
        format!("student-B(d={d}, alpha={alpha})"),
        FamilyKind::Balpha,
        alpha,
        d,
        k,
        k,
        Arc::new(|_: &[f64]| 1.0),
        Arc::new(stats_upper),
        w,
        big_f,
        student_support_rule(d, alpha),
    )?
    .with_admissible(theta_ok(d, alpha))
    .with_frame(frame_fn(d, alpha)))
}

fn malpha_pieces(d: usize, alpha: f64, cauchy_exponent: Option<f64>) -> (super::spec::VectorFn, super::spec::ScalarFn) {
    let k = d * (d + 3) / 2;
    let w = Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
        Ok(p) => {
            let s = 1.0 + p.b() * p.quad_form(&vec![0.0; d]);
            student_weights(&p, p.b() / s)
        }
        Err(_) => vec![f64::NAN; k],
    });
    let z = Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
        Ok(p) => {
            let s = 1.0 + p.b() * p.quad_form(&vec![0.0; d]);
            match cauchy_exponent {
                None => (p.log_normalizer() + s.ln() / (alpha - 1.0)).exp(),
                Some(e) => {
                    let log_j = log_elliptical_integral(d, p.b(), e).unwrap_or(f64::NAN);
                    (-(log_j + 0.5 * p.log_det_sigma()) + e * s.ln()).exp()
                }
            }
        }
        Err(_) => f64::NAN,
    });
    (w, z)
}

/// Student in the `M^(a)` form `Z [1 + w^T f]^(1/(a-1))`.
pub fn student_malpha_spec(d: usize, alpha: f64) -> Result<PowerLawFamilySpec> {
    StudentFamily::new(d, alpha)?;
    let k = d * (d + 3) / 2;
    let (w, z) = malpha_pieces(d, alpha, None);
    Ok(PowerLawFamilySpec::new(
        format!("student-M(d={d}, alpha={alpha})"),
        FamilyKind::Malpha,
        alpha,
        d,
        k,
        k,
        Arc::new(|_: &[f64]| 1.0),
        Arc::new(stats_upper),
        w,
        z,
        student_support_rule(d, alpha),
    )?
    .with_admissible(theta_ok(d, alpha))
    .with_frame(frame_fn(d, alpha)))
}

/// The same Student family written in the `E^(2-a)` form.
pub fn student_ealpha_spec(d: usize, alpha: f64) -> Result<PowerLawFamilySpec> {
    let mut s = student_malpha_spec(d, alpha)?;
    s.kind = FamilyKind::Ealpha;
    s.alpha = 2.0 - alpha;
    s.name = format!("student-E(d={d}, alpha={})", 2.0 - alpha);
    Ok(s)
}

pub(crate) fn cauchy_pieces(d: usize, alpha: f64) -> (super::spec::VectorFn, super::spec::ScalarFn) {
    malpha_pieces(d, alpha, Some(alpha / (alpha - 1.0)))
}

pub(crate) fn student_frame_fn(d: usize, alpha: f64) -> super::spec::FrameFn {
    frame_fn(d, alpha)
}

pub(crate) fn student_theta_ok(d: usize, alpha: f64) -> super::spec::AdmissibleFn {
    theta_ok(d, alpha)
}

pub(crate) fn student_stats(x: &[f64]) -> Vec<f64> {
    stats_upper(x)
}

/// One-dimensional location family with fixed scale written in the `M^(a)`
/// form with `h = 1 + b x^2 / s2` and `f = (1, x)`. It has two characterizing
/// functions for one parameter and is therefore not regular.
pub fn student_location_malpha_spec(alpha: f64, sigma2: f64) -> Result<PowerLawFamilySpec> {
    let p0 = StudentParams::new(vec![0.0], DMatrix::from_element(1, 1, sigma2), alpha)?;
    let b = p0.b() / sigma2;
    let n = p0.normalizer();
    let nu = p0.nu();
    let support = if nu > 0.0 {
        SupportRule::Fixed(Support::FullSpace { dim: 1 })
    } else {
        let half = (-nu * sigma2).sqrt();
        SupportRule::ParameterDependent(Arc::new(move |t: &[f64]| Support::Intervals(vec![(t[0] - half, t[0] + half)])))
    };
    Ok(PowerLawFamilySpec::new(
        format!("student-location-M(alpha={alpha})"),
        FamilyKind::Malpha,
        alpha,
        1,
        1,
        2,
        Arc::new(move |x: &[f64]| 1.0 + b * x[0] * x[0]),
        Arc::new(|x: &[f64]| vec![1.0, x[0]]),
        Arc::new(move |t: &[f64]| vec![b * t[0] * t[0], -2.0 * b * t[0]]),
        Arc::new(move |_: &[f64]| n),
        support,
    )?
    .with_frame(Arc::new(move |t: &[f64]| {
        Some(Frame { center: vec![t[0]], chol: DMatrix::from_element(1, 1, sigma2.sqrt()), scale: nu.abs().sqrt() })
    })))
}

/// The same location family as a regular `B^(a)` family in `f = x`.
pub fn student_location_balpha_spec(alpha: f64, sigma2: f64) -> Result<PowerLawFamilySpec> {
    let m = student_location_malpha_spec(alpha, sigma2)?;
    let p0 = StudentParams::new(vec![0.0], DMatrix::from_element(1, 1, sigma2), alpha)?;
    let b = p0.b() / sigma2;
    let na = ((alpha - 1.0) * p0.log_normalizer()).exp();
    Ok(PowerLawFamilySpec {
        name: format!("student-location-B(alpha={alpha})"),
        kind: FamilyKind::Balpha,
        stat_dim: 1,
        h: Arc::new(move |x: &[f64]| na * (1.0 + b * x[0] * x[0])),
        f: Arc::new(|x: &[f64]| vec![x[0]]),
        w: Arc::new(move |t: &[f64]| vec![-2.0 * na * b * t[0]]),
        normalizer: Arc::new(move |t: &[f64]| na * b * t[0] * t[0]),
        ..m
    })
}
