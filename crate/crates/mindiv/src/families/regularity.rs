use nalgebra::DMatrix;
use serde::Serialize;

use super::spec::{FamilyKind, PowerLawFamilySpec, SupportRule};
use crate::error::{Error, Result};
use crate::linalg::column_scaled_singular_ratio;

/// Singular-value ratio below which functions count as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// The support does not move with the parameter.
    FixedSupport,
    /// As many characterizing functions as parameters.
    DimensionsMatch,
    /// `1, w_1, ..., w_s` are linearly independent on the parameter space.
    WeightsIndependent,
    /// `1, f_1, ..., f_s` (or `f_1, ..., f_s` for M and E forms) are linearly independent on the support.
    StatisticsIndependent,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub failing: Vec<Condition>,
    pub weight_ratio: f64,
    pub statistic_ratio: f64,
}

impl RegularityReport {
    pub fn holds(&self, c: Condition) -> bool {
        !self.failing.contains(&c)
    }
}

/// Numerical regularity test on sampled parameters and support points.
///
/// Needs at least `s + 1` parameter samples and `s + 1` support points.
pub fn regularity_check(
    spec: &PowerLawFamilySpec,
    thetas: &[Vec<f64>],
    xs: &[Vec<f64>],
) -> Result<RegularityReport> {
    let s = spec.stat_dim;
    if thetas.len() < s + 1 || xs.len() < s + 1 {
        return Err(Error::InvalidInput(format!(
            "regularity check needs at least {} parameter samples and support points",
            s + 1
        )));
    }
    let mut failing = Vec::new();
    if matches!(spec.support, SupportRule::ParameterDependent(_)) {
        failing.push(Condition::FixedSupport);
    }
    if s != spec.theta_dim {
        failing.push(Condition::DimensionsMatch);
    }
    let mut wm = DMatrix::zeros(thetas.len(), s + 1);
    for (r, t) in thetas.iter().enumerate() {
        let w = (spec.w)(t);
        if w.len() != s || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterSpace(format!("weights undefined at {t:?}")));
        }
        wm[(r, 0)] = 1.0;
        for i in 0..s {
            wm[(r, i + 1)] = w[i];
        }
    }
    let weight_ratio = column_scaled_singular_ratio(&wm);
    if weight_ratio < DEPENDENCE_TOL {
        failing.push(Condition::WeightsIndependent);
    }
    let with_one = matches!(spec.kind, FamilyKind::Exponential | FamilyKind::Balpha);
    let off = usize::from(with_one);
    let mut fm = DMatrix::zeros(xs.len(), s + off);
    for (r, x) in xs.iter().enumerate() {
        let f = (spec.f)(x);
        if with_one {
            fm[(r, 0)] = 1.0;
        }
        for i in 0..s {
            fm[(r, i + off)] = f[i];
        }
    }
    let statistic_ratio = column_scaled_singular_ratio(&fm);
    if statistic_ratio < DEPENDENCE_TOL {
        failing.push(Condition::StatisticsIndependent);
    }
    Ok(RegularityReport { regular: failing.is_empty(), failing, weight_ratio, statistic_ratio })
}
