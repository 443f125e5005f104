//! Power-law families: exponential, `B^(a)`, `M^(a)` and `E^(a)` forms,
//! the Student and Cauchy distributions, conversions and regularity checks.

mod cauchy;
mod convert;
mod gaussian;
mod regularity;
mod spec;
mod student;

pub use cauchy::{cauchy_admissible, cauchy_ealpha_spec, cauchy_full_support, CauchyFamily, CauchyParams};
pub use convert::{convert, escort_family_map, Conversion};
pub use gaussian::{gaussian_exponential_spec, GaussianFamily};
pub use regularity::{regularity_check, Condition, RegularityReport, DEPENDENCE_TOL};
pub use spec::{
    AdmissibleFn, FamilyKind, FrameFn, PowerLawFamilySpec, ScalarFn, SupportFn, SupportRule, VectorFn,
};
pub use student::{
    alpha_of_nu, b_alpha, nu_of_alpha, pack_theta, student_admissible, student_balpha_spec,
    student_ealpha_spec, student_location_balpha_spec, student_location_malpha_spec, student_malpha_spec,
    theta_names, unpack_theta, StudentFamily, StudentParams,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quad::{integrate_support, Frame, QuadSettings, Support};

/// A parametric density model `theta -> p_theta`.
pub trait ParametricFamily: Send + Sync {
    /// Dimension of the observations.
    fn dim(&self) -> usize;

    /// Number of parameters.
    fn theta_dim(&self) -> usize;

    /// Density at `x`; zero outside the support.
    fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64>;

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.density(theta, x)?.ln())
    }

    fn support(&self, theta: &[f64]) -> Result<Support>;

    /// Whether the support is the same for every parameter.
    fn fixed_support(&self) -> bool {
        true
    }

    /// Quadrature frame locating the mass of `p_theta`.
    fn frame(&self, _theta: &[f64]) -> Option<Frame> {
        None
    }

    fn quad_settings(&self) -> QuadSettings {
        QuadSettings::default()
    }

    /// `E_theta[g(X)]` for an `m`-vector valued `g`.
    fn expect(&self, theta: &[f64], m: usize, g: &mut dyn FnMut(&[f64], &mut [f64])) -> Result<Vec<f64>> {
        let support = self.support(theta)?;
        let frame = self.frame(theta);
        let mut buf = vec![0.0; m];
        let mut err = None;
        let out = integrate_support(&support, frame.as_ref(), &self.quad_settings(), m, |x, out| {
            match self.density(theta, x) {
                Ok(p) if p > 0.0 => {
                    g(x, &mut buf);
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o = p * b;
                    }
                }
                Ok(_) => out.iter_mut().for_each(|o| *o = 0.0),
                Err(e) => {
                    err.get_or_insert(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// `int p_theta^gamma dx`.
    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        let support = self.support(theta)?;
        if gamma <= 0.0 && !matches!(support, Support::Atoms(_)) {
            return Err(Error::Domain(format!("power integral with exponent {gamma} needs a finite support")));
        }
        let frame = self.frame(theta);
        let mut err = None;
        let v = integrate_support(&support, frame.as_ref(), &self.quad_settings(), 1, |x, out| {
            out[0] = match self.density(theta, x) {
                Ok(p) if p > 0.0 => p.powf(gamma),
                Ok(_) => 0.0,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(v[0]),
        }
    }

    /// Gradient of `log p_theta(x)` in `theta` by central differences.
    fn score(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut t = theta.to_vec();
        let mut g = Vec::with_capacity(theta.len());
        for r in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[r].abs());
            t[r] = theta[r] + h;
            let up = self.log_density(&t, x)?;
            t[r] = theta[r] - h;
            let dn = self.log_density(&t, x)?;
            t[r] = theta[r];
            if !(up.is_finite() && dn.is_finite()) {
                return Err(Error::ParameterSpace("score undefined outside the support".into()));
            }
            g.push((up - dn) / (2.0 * h));
        }
        Ok(g)
    }
}

/// `e_a(r) = max(1 + (1 - a) r, 0)^(1 / (1 - a))`, and `exp(r)` at `a = 1`.
pub fn alpha_exponential(r: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return r.exp();
    }
    let base = 1.0 + (1.0 - alpha) * r;
    if base <= 0.0 {
        // The negative-exponent branch blows up rather than vanishing.
        return if alpha > 1.0 { f64::INFINITY } else { 0.0 };
    }
    base.powf(1.0 / (1.0 - alpha))
}

/// `log_e ∫ [1 + b z^T z]_+^e dz` over `R^d` for the identity shape matrix.
pub(crate) fn log_elliptical_integral(d: usize, b: f64, e: f64) -> Result<f64> {
    use libm::lgamma;
    let hd = d as f64 / 2.0;
    if b > 0.0 {
        if -e <= hd {
            return Err(Error::Domain(format!("integral of (1 + b|z|^2)^{e} diverges in dimension {d}")));
        }
        Ok(hd * (std::f64::consts::PI / b).ln() + lgamma(-e - hd) - lgamma(-e))
    } else if b < 0.0 {
        if e <= -1.0 {
            return Err(Error::Domain(format!("integral of (1 - |b||z|^2)_+^{e} diverges")));
        }
        Ok(hd * (std::f64::consts::PI / -b).ln() + lgamma(e + 1.0) - lgamma(e + 1.0 + hd))
    } else {
        Err(Error::Domain("zero quadratic coefficient".into()))
    }
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
    let ch = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::ParameterSpace("scale matrix is not symmetric positive definite".into()))?;
    let l = ch.l();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((log_det, ch.inverse(), l))
}
