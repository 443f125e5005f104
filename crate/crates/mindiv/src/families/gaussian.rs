use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::spec::{FamilyKind, PowerLawFamilySpec, SupportRule};
use super::ParametricFamily;
use crate::error::{Error, Result};
use crate::quad::{Frame, Support};

/// Univariate normal family with `theta = (mu, variance)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianFamily;

fn check(theta: &[f64]) -> Result<(f64, f64)> {
    if theta.len() != 2 {
        return Err(Error::InvalidInput("normal family expects (mu, variance)".into()));
    }
    if !(theta[1] > 0.0) {
        return Err(Error::ParameterSpace(format!("variance {} must be positive", theta[1])));
    }
    Ok((theta[0], theta[1]))
}

impl ParametricFamily for GaussianFamily {
    fn dim(&self) -> usize {
        1
    }

    fn theta_dim(&self) -> usize {
        2
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.log_density(theta, x)?.exp())
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        let (m, v) = check(theta)?;
        Ok(-0.5 * (2.0 * PI * v).ln() - (x[0] - m) * (x[0] - m) / (2.0 * v))
    }

    fn support(&self, _theta: &[f64]) -> Result<Support> {
        Ok(Support::FullSpace { dim: 1 })
    }

    fn frame(&self, theta: &[f64]) -> Option<Frame> {
        let (m, v) = check(theta).ok()?;
        Some(Frame { center: vec![m], chol: DMatrix::from_element(1, 1, v.sqrt()), scale: 3.0 })
    }

    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        let (_, v) = check(theta)?;
        if gamma <= 0.0 {
            return Err(Error::Domain("power integral of a normal density needs a positive exponent".into()));
        }
        Ok((2.0 * PI * v).powf(0.5 * (1.0 - gamma)) / gamma.sqrt())
    }

    fn score(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let (m, v) = check(theta)?;
        let r = x[0] - m;
        Ok(vec![r / v, -0.5 / v + r * r / (2.0 * v * v)])
    }
}

/// The normal family as an exponential family with `f = (x, x^2)`.
pub fn gaussian_exponential_spec() -> Result<PowerLawFamilySpec> {
    Ok(PowerLawFamilySpec::new(
        "normal",
        FamilyKind::Exponential,
        1.0,
        1,
        2,
        2,
        Arc::new(|_: &[f64]| 0.0),
        Arc::new(|x: &[f64]| vec![x[0], x[0] * x[0]]),
        Arc::new(|t: &[f64]| vec![t[0] / t[1], -0.5 / t[1]]),
        Arc::new(|t: &[f64]| -t[0] * t[0] / (2.0 * t[1]) - 0.5 * (2.0 * PI * t[1]).ln()),
        SupportRule::Fixed(Support::FullSpace { dim: 1 }),
    )?
    .with_admissible(Arc::new(|t: &[f64]| t.len() == 2 && t[1] > 0.0))
    .with_frame(Arc::new(|t: &[f64]| {
        (t[1] > 0.0).then(|| Frame { center: vec![t[0]], chol: DMatrix::from_element(1, 1, t[1].sqrt()), scale: 3.0 })
    })))
}
