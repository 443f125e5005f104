//! Generalized sufficiency: canonical statistics per family form and
//! numerical factorization and minimality checks on parameter grids.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergences::Likelihood;
use crate::error::{Error, Result};
use crate::families::{regularity_check, FamilyKind, ParametricFamily, PowerLawFamilySpec, SupportRule};
use crate::kde::UniformKde;
use crate::prob::Sample;
use crate::quad::{Frame, QuadSettings, Support};

/// Statistics closer than this (relative) count as equal.
pub const STATISTIC_TOL: f64 = 1e-10;
/// Relative spread of `Delta(theta)` allowed for "independent of theta".
pub const CONSTANT_TOL: f64 = 1e-8;
/// Spread of `Delta(theta)` required for "varies with theta".
pub const VARIES_TOL: f64 = 1e-6;

const KDE_NODES: usize = 8;

pub type StatisticFn = Arc<dyn Fn(&Sample) -> Result<Vec<f64>> + Send + Sync>;

/// `[X-bar, mean X_i X_j for i <= j]`.
pub fn moment_statistic(sample: &Sample) -> Vec<f64> {
    let mut t = sample.mean();
    let m = sample.second_moment();
    for i in 0..sample.dim() {
        for j in i..sample.dim() {
            t.push(m[(i, j)]);
        }
    }
    t
}

/// Statistic entering the estimating equation of the family's own form:
/// `f-bar` for exponential and `B^(a)`, `f-bar / h-bar` for `M^(a)`, and the
/// same ratio under the `a`-escort of the uniform-kernel estimate for `E^(a)`.
pub fn canonical_statistic(spec: &PowerLawFamilySpec) -> Result<StatisticFn> {
    if matches!(spec.support, SupportRule::ParameterDependent(_)) {
        return Err(Error::Hypothesis(format!(
            "{} has a parameter-dependent support, so no fixed canonical statistic exists",
            spec.name
        )));
    }
    let (f, h, s, a) = (spec.f.clone(), spec.h.clone(), spec.stat_dim, spec.alpha);
    Ok(match spec.kind {
        FamilyKind::Exponential | FamilyKind::Balpha => Arc::new(move |x: &Sample| {
            let n = x.n() as f64;
            let mut t = vec![0.0; s];
            for r in x.rows() {
                t.iter_mut().zip(f(r)).for_each(|(a, b)| *a += b / n);
            }
            Ok(t)
        }),
        FamilyKind::Malpha => Arc::new(move |x: &Sample| {
            let mut t = vec![0.0; s];
            let mut hb = 0.0;
            for r in x.rows() {
                t.iter_mut().zip(f(r)).for_each(|(a, b)| *a += b);
                hb += h(r);
            }
            Ok(t.into_iter().map(|v| v / hb).collect())
        }),
        FamilyKind::Ealpha => Arc::new(move |x: &Sample| {
            let kde = UniformKde::new(x);
            let hb = kde.integrate_powered(a, KDE_NODES, |y| h(y))?;
            (0..s).map(|i| Ok(kde.integrate_powered(a, KDE_NODES, |y| f(y)[i])? / hb)).collect()
        }),
    })
}

/// A family with trailing parameters held fixed.
#[derive(Clone)]
pub struct FixedTail {
    inner: Arc<dyn ParametricFamily>,
    tail: Vec<f64>,
}

impl FixedTail {
    pub fn new(inner: Arc<dyn ParametricFamily>, tail: Vec<f64>) -> Result<Self> {
        if tail.len() >= inner.theta_dim() {
            return Err(Error::InvalidInput("at least one parameter must stay free".into()));
        }
        Ok(Self { inner, tail })
    }

    fn full(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().chain(&self.tail).copied().collect()
    }
}

impl ParametricFamily for FixedTail {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn theta_dim(&self) -> usize {
        self.inner.theta_dim() - self.tail.len()
    }
    fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.inner.density(&self.full(theta), x)
    }
    fn log_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.inner.log_density(&self.full(theta), x)
    }
    fn support(&self, theta: &[f64]) -> Result<Support> {
        self.inner.support(&self.full(theta))
    }
    fn fixed_support(&self) -> bool {
        self.inner.fixed_support()
    }
    fn frame(&self, theta: &[f64]) -> Option<Frame> {
        self.inner.frame(&self.full(theta))
    }
    fn quad_settings(&self) -> QuadSettings {
        self.inner.quad_settings()
    }
    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        self.inner.power_integral(&self.full(theta), gamma)
    }
}

/// What to check: a statistic, a generalized likelihood and a parameter grid.
#[derive(Clone)]
pub struct SufficiencySpec {
    pub statistic: StatisticFn,
    pub likelihood: Likelihood,
    pub alpha: f64,
    pub family: Arc<dyn ParametricFamily>,
    pub theta_grid: Vec<Vec<f64>>,
}

impl SufficiencySpec {
    pub fn new(
        statistic: StatisticFn,
        likelihood: Likelihood,
        alpha: f64,
        family: Arc<dyn ParametricFamily>,
        theta_grid: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut distinct: Vec<&Vec<f64>> = Vec::new();
        for t in &theta_grid {
            if t.len() != family.theta_dim() {
                return Err(Error::InvalidInput("grid point has the wrong parameter dimension".into()));
            }
            if !distinct.contains(&t) {
                distinct.push(t);
            }
        }
        if distinct.len() < 5 {
            return Err(Error::InvalidInput("the parameter grid needs at least five distinct points".into()));
        }
        Ok(Self { statistic, likelihood, alpha, family, theta_grid })
    }

    fn value(&self, x: &Sample, theta: &[f64]) -> Result<f64> {
        let kde = (self.likelihood == Likelihood::L1).then(|| UniformKde::new(x));
        self.likelihood.evaluate(self.family.as_ref(), theta, x, kde.as_ref(), self.alpha)
    }

    /// `Delta(theta) = L(X; theta) - L(Y; theta)` over the grid.
    pub fn delta(&self, x: &Sample, y: &Sample) -> Result<Vec<f64>> {
        self.theta_grid.iter().map(|t| Ok(self.value(x, t)? - self.value(y, t)?)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub statistic_equal: bool,
    pub statistic_gap: f64,
    pub delta_mean: f64,
    pub delta_spread: f64,
    /// `Delta` is constant over the grid within the relative tolerance.
    pub constant: bool,
    /// `Delta` moves by more than the variation threshold.
    pub varies: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub pairs: Vec<PairReport>,
    /// Every pair with equal statistic has constant `Delta`.
    pub passes: bool,
    pub statistic_tol: f64,
    pub constant_tol: f64,
}

fn pair_report(spec: &SufficiencySpec, x: &Sample, y: &Sample) -> Result<PairReport> {
    if x.n() != y.n() || x.dim() != y.dim() {
        return Err(Error::InvalidInput("paired samples must have equal size and dimension".into()));
    }
    let tx = (spec.statistic)(x)?;
    let ty = (spec.statistic)(y)?;
    let gap = tx.iter().zip(&ty).map(|(a, b)| (a - b).abs() / (1.0 + a.abs().max(b.abs()))).fold(0.0, f64::max);
    let d = spec.delta(x, y)?;
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let spread = d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PairReport {
        statistic_equal: gap <= STATISTIC_TOL,
        statistic_gap: gap,
        delta_mean: mean,
        delta_spread: spread,
        constant: spread <= CONSTANT_TOL * (1.0 + mean.abs()),
        varies: spread > VARIES_TOL,
    })
}

/// Checks that `L(X; .) - L(Y; .)` is constant whenever `T(X) = T(Y)`.
pub fn factorization_check(spec: &SufficiencySpec, pairs: &[(Sample, Sample)]) -> Result<FactorizationReport> {
    let pairs: Vec<PairReport> = pairs.iter().map(|(x, y)| pair_report(spec, x, y)).collect::<Result<_>>()?;
    let passes = pairs.iter().filter(|p| p.statistic_equal).all(|p| p.constant);
    Ok(FactorizationReport { pairs, passes, statistic_tol: STATISTIC_TOL, constant_tol: CONSTANT_TOL })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub pairs: Vec<PairReport>,
    /// Equal statistic gives constant `Delta`.
    pub forward: bool,
    /// Different statistic gives `Delta` varying with `theta`.
    pub converse: bool,
    pub varies_tol: f64,
}

/// Both directions of the minimality criterion. Refuses families that fail
/// the regularity check on the grid and the pooled sample points.
pub fn minimality_check(
    spec: &SufficiencySpec,
    family: &PowerLawFamilySpec,
    pairs: &[(Sample, Sample)],
) -> Result<MinimalityReport> {
    let xs: Vec<Vec<f64>> =
        pairs.iter().flat_map(|(x, y)| x.rows().chain(y.rows()).map(<[f64]>::to_vec).collect::<Vec<_>>()).collect();
    let reg = regularity_check(family, &spec.theta_grid, &xs)?;
    if !reg.regular {
        return Err(Error::Hypothesis(format!("{} is not regular: fails {:?}", family.name, reg.failing)));
    }
    let pairs: Vec<PairReport> = pairs.iter().map(|(x, y)| pair_report(spec, x, y)).collect::<Result<_>>()?;
    let forward = pairs.iter().filter(|p| p.statistic_equal).all(|p| p.constant);
    let converse = pairs.iter().filter(|p| !p.statistic_equal).all(|p| p.varies);
    Ok(MinimalityReport { pairs, forward, converse, varies_tol: VARIES_TOL })
}

/// A different sample with the same mean and second-moment matrix: rows
/// `idx` are rotated by `angle` about the all-ones direction in sample space,
/// an orthogonal map that fixes the ones vector.
pub fn moment_matched_partner(sample: &Sample, idx: [usize; 3], angle: f64) -> Result<Sample> {
    let n = sample.n();
    if idx.iter().any(|&i| i >= n) || idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
        return Err(Error::InvalidInput("need three distinct row indices".into()));
    }
    let u = 1.0 / 3f64.sqrt();
    let (c, s) = (angle.cos(), angle.sin());
    // Rodrigues rotation about the unit axis (u, u, u).
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -u, u, u, 0.0, -u, -u, u, 0.0]);
    let r = DMatrix::identity(3, 3) * c + &k * s + DMatrix::from_element(3, 3, u * u) * (1.0 - c);
    let mut rows: Vec<Vec<f64>> = sample.rows().map(<[f64]>::to_vec).collect();
    let old: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
    for (a, &i) in idx.iter().enumerate() {
        for col in 0..sample.dim() {
            rows[i][col] = (0..3).map(|b| r[(a, b)] * old[b][col]).sum();
        }
    }
    Sample::from_rows(&rows)
}
