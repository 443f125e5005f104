//! Cauchy distributions: escorts of Student distributions.
//!
//! With `a = 1/beta`, `q = M [1 + b_a (x-mu)^T S^{-1} (x-mu)]_+^(a/(a-1))`
//! and the `beta`-escort of `q` is the Student density with order `a`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::spec::{FamilyKind, PowerLawFamilySpec, SupportRule};
use super::student::{cauchy_pieces, sample_elliptical, student_frame_fn, student_stats, student_theta_ok};
use super::{log_elliptical_integral, ParametricFamily, StudentParams};
use crate::error::{Error, Result};
use crate::quad::{Frame, Support};

/// `beta` in `(d/(d-2), 0) u (0, 1) u (1, (d+2)/d)`; the lower end is `-inf` for `d >= 2`.
pub fn cauchy_admissible(beta: f64, d: usize) -> bool {
    let df = d as f64;
    let lower = if d >= 2 { f64::NEG_INFINITY } else { df / (df - 2.0) };
    beta.is_finite() && beta != 0.0 && beta != 1.0 && beta > lower && beta < (df + 2.0) / df
}

/// Full support holds exactly for `beta` in `(1, (d+2)/d)`.
pub fn cauchy_full_support(beta: f64, d: usize) -> bool {
    beta > 1.0 && beta < (d as f64 + 2.0) / d as f64
}

/// A Cauchy distribution indexed by `beta`, location `mu` and scale `sigma`.
#[derive(Debug, Clone)]
pub struct CauchyParams {
    beta: f64,
    student: StudentParams,
    log_m: f64,
}

impl CauchyParams {
    pub fn new(mu: Vec<f64>, sigma: DMatrix<f64>, beta: f64) -> Result<Self> {
        let d = mu.len();
        if !cauchy_admissible(beta, d) {
            return Err(Error::Domain(format!("beta = {beta} is not admissible in dimension {d}")));
        }
        let student = StudentParams::new(mu, sigma, 1.0 / beta)?;
        let e = Self::exponent_of(beta);
        let log_m = -(log_elliptical_integral(d, student.b(), e)? + 0.5 * student.log_det_sigma());
        Ok(Self { beta, student, log_m })
    }

    pub fn from_theta(theta: &[f64], d: usize, beta: f64) -> Result<Self> {
        let (mu, sigma) = super::unpack_theta(theta, d)?;
        Self::new(mu, sigma, beta)
    }

    fn exponent_of(beta: f64) -> f64 {
        1.0 / (1.0 - beta)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The Student distribution whose `1/beta`-escort this is.
    pub fn student(&self) -> &StudentParams {
        &self.student
    }

    pub fn dim(&self) -> usize {
        self.student.dim()
    }

    pub fn normalizer(&self) -> f64 {
        self.log_m.exp()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let br = self.student.bracket(x);
        if br <= 0.0 {
            return 0.0;
        }
        (self.log_m + Self::exponent_of(self.beta) * br.ln()).exp()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let br = self.student.bracket(x);
        if br <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_m + Self::exponent_of(self.beta) * br.ln()
    }

    pub fn support(&self) -> Support {
        self.student.support()
    }

    pub fn frame(&self) -> Frame {
        let s = self.student.b().abs().sqrt().recip();
        Frame { scale: s, ..self.student.frame() }
    }

    pub fn power_integral(&self, gamma: f64) -> Result<f64> {
        let e = gamma * Self::exponent_of(self.beta);
        let log_j = log_elliptical_integral(self.dim(), self.student.b(), e)?;
        Ok((gamma * self.log_m + 0.5 * self.student.log_det_sigma() + log_j).exp())
    }

    /// Covariance of `q`; finite only when the tails allow it.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let d = self.dim() as f64;
        let b = self.student.b();
        let e = Self::exponent_of(self.beta);
        if b > 0.0 {
            // Multivariate t with nu' = -2e - d degrees of freedom.
            let nu_t = -2.0 * e - d;
            if nu_t <= 2.0 {
                return Err(Error::Domain("Cauchy covariance is infinite".into()));
            }
            Ok(self.student.sigma() / (b * (nu_t - 2.0)))
        } else {
            // E|z|^2 for the radial Beta(d/2, e+1) law, in units of 1/|b|.
            let m2 = (d / 2.0) / (d / 2.0 + e + 1.0);
            Ok(self.student.sigma() * (m2 / (d * -b)))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let l = self.student.frame().chol;
        sample_elliptical(self.student.mu(), &l, self.student.b(), Self::exponent_of(self.beta), rng)
    }

    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        // Same structure as the Student score with exponent 1/(1-beta).
        let s = self.student.score(x)?;
        let d = self.dim();
        let ratio = Self::exponent_of(self.beta) * (self.student.alpha() - 1.0);
        let mut g: Vec<f64> = s[..d].iter().map(|v| v * ratio).collect();
        let mut k = d;
        for i in 0..d {
            for j in i..d {
                let mult = if i == j { 1.0 } else { 2.0 };
                let logdet_part = -0.5 * mult * self.student.sigma_inv()[(i, j)];
                g.push(logdet_part + (s[k] - logdet_part) * ratio);
                k += 1;
            }
        }
        Ok(g)
    }
}

/// Location-scale Cauchy family in the packed parameter layout.
#[derive(Debug, Clone, Copy)]
pub struct CauchyFamily {
    pub dim: usize,
    pub beta: f64,
}

impl CauchyFamily {
    pub fn new(dim: usize, beta: f64) -> Result<Self> {
        if !cauchy_admissible(beta, dim) {
            return Err(Error::Domain(format!("beta = {beta} is not admissible in dimension {dim}")));
        }
        Ok(Self { dim, beta })
    }

    pub fn params(&self, theta: &[f64]) -> Result<CauchyParams> {
        CauchyParams::from_theta(theta, self.dim, self.beta)
    }
}

impl ParametricFamily for CauchyFamily {
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
        cauchy_full_support(self.beta, self.dim)
    }

    fn frame(&self, theta: &[f64]) -> Option<Frame> {
        self.params(theta).ok().map(|p| p.frame())
    }

    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        self.params(theta)?.power_integral(gamma)
    }

    fn score(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.params(theta)?.score(x)
    }
}

/// Cauchy family in the `E^(beta)` form with `h = 1` and `f = (x, x_i x_j)`.
pub fn cauchy_ealpha_spec(d: usize, beta: f64) -> Result<PowerLawFamilySpec> {
    CauchyFamily::new(d, beta)?;
    let alpha = 1.0 / beta;
    let k = d * (d + 3) / 2;
    let (w, z) = cauchy_pieces(d, alpha);
    let support = if cauchy_full_support(beta, d) {
        SupportRule::Fixed(Support::FullSpace { dim: d })
    } else {
        SupportRule::ParameterDependent(Arc::new(move |t: &[f64]| match StudentParams::from_theta(t, d, alpha) {
            Ok(p) => p.support(),
            Err(_) => Support::Atoms(vec![]),
        }))
    };
    let frame = student_frame_fn(d, alpha);
    Ok(PowerLawFamilySpec::new(
        format!("cauchy-E(d={d}, beta={beta})"),
        FamilyKind::Ealpha,
        beta,
        d,
        k,
        k,
        Arc::new(|_: &[f64]| 1.0),
        Arc::new(student_stats),
        w,
        z,
        support,
    )?
    .with_admissible(student_theta_ok(d, alpha))
    .with_frame(Arc::new(move |t: &[f64]| {
        frame(t).map(|fr| {
            let b = super::b_alpha(alpha, d);
            Frame { scale: b.abs().sqrt().recip(), ..fr }
        })
    })))
}
