//! Estimating-equation residuals and solvers for maximum likelihood,
//! Basu et al. (density power), Jones et al. (log density power) and
//! generalized Hellinger estimation, plus closed forms for the Student and
//! Cauchy families.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::divergences::Likelihood;
use crate::error::{Error, Result};
use crate::families::{
    convert, nu_of_alpha, pack_theta, regularity_check, theta_names, Conversion, FamilyKind, ParametricFamily,
    PowerLawFamilySpec, SupportRule,
};
use crate::kde::{KdeRegime, UniformKde};
use crate::optim::{damped_newton, nelder_mead, newton_polish};
use crate::prob::Sample;

/// Nodes per KDE cell for escort averages of `f` and `h`.
const KDE_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Basu,
    Jones,
    Hellinger,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Self::Mle),
            "basu" => Ok(Self::Basu),
            "jones" => Ok(Self::Jones),
            "hellinger" => Ok(Self::Hellinger),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

impl Method {
    /// Family form whose estimating equation this method is written for.
    pub fn native_kind(self) -> FamilyKind {
        match self {
            Self::Mle => FamilyKind::Exponential,
            Self::Basu => FamilyKind::Balpha,
            Self::Jones => FamilyKind::Malpha,
            Self::Hellinger => FamilyKind::Ealpha,
        }
    }

    /// Likelihood maximized by the method.
    pub fn likelihood(self) -> Likelihood {
        match self {
            Self::Mle => Likelihood::Log,
            Self::Basu => Likelihood::L2,
            Self::Jones => Likelihood::L3,
            Self::Hellinger => Likelihood::L1,
        }
    }
}

/// Whether the reduced (regular-family) or the general equations are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Reduced,
    General,
}

/// Data entering an estimating equation.
#[derive(Debug, Clone, Copy)]
pub enum Data<'a> {
    Sample(&'a Sample),
    Kde(&'a UniformKde),
}

impl Data<'_> {
    fn dim(&self) -> usize {
        match self {
            Data::Sample(s) => s.dim(),
            Data::Kde(k) => k.dim(),
        }
    }

    fn points(&self) -> Vec<Vec<f64>> {
        match self {
            Data::Sample(s) => s.rows().map(<[f64]>::to_vec).collect(),
            Data::Kde(k) => k.sample().rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// Averages `(f-bar, h-bar)` of the statistics under the data; for Hellinger
/// they are taken under the `a`-escort of the density estimate.
pub fn data_averages(spec: &PowerLawFamilySpec, data: Data<'_>, escort: Option<f64>) -> Result<(Vec<f64>, f64)> {
    let s = spec.stat_dim;
    match (data, escort) {
        (Data::Sample(sample), None) => {
            let mut fb = vec![0.0; s];
            let mut hb = 0.0;
            for x in sample.rows() {
                let f = (spec.f)(x);
                for i in 0..s {
                    fb[i] += f[i];
                }
                hb += (spec.h)(x);
            }
            let n = sample.n() as f64;
            Ok((fb.into_iter().map(|v| v / n).collect(), hb / n))
        }
        (Data::Kde(kde), Some(a)) => {
            let mass = kde.power_integral(a);
            let mut fb = Vec::with_capacity(s);
            for i in 0..s {
                fb.push(kde.integrate_powered(a, KDE_NODES, |x| (spec.f)(x)[i])? / mass);
            }
            let hb = kde.integrate_powered(a, KDE_NODES, |x| (spec.h)(x))? / mass;
            Ok((fb, hb))
        }
        (Data::Sample(_), Some(_)) => Err(Error::InvalidInput("escort averages need a density estimate".into())),
        (Data::Kde(_), None) => Err(Error::InvalidInput("this method uses the raw sample".into())),
    }
}

/// Rewrites the family in the form native to `method` where a conversion exists.
pub fn native_form(spec: &PowerLawFamilySpec, method: Method) -> Result<PowerLawFamilySpec> {
    let want = method.native_kind();
    if spec.kind == want {
        return Ok(spec.clone());
    }
    match (spec.kind, want) {
        (FamilyKind::Malpha, FamilyKind::Balpha) => convert(spec, Conversion::MalphaToBalpha, &[]),
        (FamilyKind::Balpha, FamilyKind::Malpha) => convert(spec, Conversion::BalphaToMalphaShifted, &[]),
        (FamilyKind::Ealpha, FamilyKind::Malpha) => convert(spec, Conversion::EalphaToMalpha, &[]),
        (FamilyKind::Malpha, FamilyKind::Ealpha) => convert(spec, Conversion::MalphaToEalpha, &[]),
        (k, w) => Err(Error::Conversion(format!("{method:?} is written for {w:?} families, got {k:?}"))),
    }
}

fn check_hypothesis(spec: &PowerLawFamilySpec) -> Result<()> {
    if matches!(spec.support, SupportRule::ParameterDependent(_)) {
        return Err(Error::Hypothesis(format!(
            "{} has a parameter-dependent support; maximize the likelihood piecewise instead",
            spec.name
        )));
    }
    Ok(())
}

fn jacobian_w(spec: &PowerLawFamilySpec, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut t = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for r in 0..theta.len() {
        let h = 1e-6 * (1.0 + theta[r].abs());
        t[r] = theta[r] + h;
        let up = (spec.w)(&t);
        t[r] = theta[r] - h;
        let dn = (spec.w)(&t);
        t[r] = theta[r];
        let d: Vec<f64> = up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterSpace(format!("weights not differentiable at {theta:?}")));
        }
        out.push(d);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Left minus right side of the method's estimating equation at `theta`.
///
/// The family must already be in the method's native form (see [`native_form`]).
/// `Reduced` gives the `s` moment equations valid for regular families;
/// `General` gives the `k` equations that hold whenever the support is fixed.
pub fn estimating_residual(
    method: Method,
    spec: &PowerLawFamilySpec,
    theta: &[f64],
    data: Data<'_>,
    reduction: Reduction,
) -> Result<Vec<f64>> {
    check_hypothesis(spec)?;
    if spec.kind != method.native_kind() {
        return Err(Error::InvalidInput(format!(
            "{method:?} residual needs a {:?} family, got {:?}",
            method.native_kind(),
            spec.kind
        )));
    }
    if data.dim() != spec.dim {
        return Err(Error::InvalidInput("data and family dimensions differ".into()));
    }
    let escort = (method == Method::Hellinger).then_some(spec.alpha);
    let (fbar, hbar) = data_averages(spec, data, escort)?;
    residual_from_averages(method, spec, theta, &fbar, hbar, reduction)
}

fn residual_from_averages(
    method: Method,
    spec: &PowerLawFamilySpec,
    theta: &[f64],
    fbar: &[f64],
    hbar: f64,
    reduction: Reduction,
) -> Result<Vec<f64>> {
    let escort = (method == Method::Hellinger).then_some(spec.alpha);
    let (ef, eh) = match escort {
        Some(a) => spec.escort_expected_stats(theta, a)?,
        None => spec.expected_stats(theta)?,
    };
    let ratio = matches!(method, Method::Jones | Method::Hellinger);
    match reduction {
        Reduction::Reduced => Ok(if ratio {
            ef.iter().zip(fbar).map(|(e, f)| e / eh - f / hbar).collect()
        } else {
            ef.iter().zip(fbar).map(|(e, f)| e - f).collect()
        }),
        Reduction::General => {
            let dw = jacobian_w(spec, theta)?;
            if !ratio {
                return Ok(dw.iter().map(|d| dot(d, &ef) - dot(d, fbar)).collect());
            }
            let w = (spec.w)(theta);
            let model_den = eh + dot(&w, &ef);
            let data_den = hbar + dot(&w, fbar);
            Ok(dw.iter().map(|d| dot(d, &ef) / model_den - dot(d, fbar) / data_den).collect())
        }
    }
}

/// Outcome of an estimation run.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    /// Order `a` (or `beta` for Cauchy Hellinger) used.
    pub order: f64,
    pub theta_hat: Vec<f64>,
    pub theta_names: Vec<String>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<Reduction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kde_regime: Option<KdeRegime>,
    /// Named auxiliary quantities such as uncorrected values.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, Vec<f64>>,
}

fn generic_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("theta[{i}]")).collect()
}

fn names_for(spec: &PowerLawFamilySpec) -> Vec<String> {
    if (spec.name.starts_with("student") || spec.name.starts_with("cauchy"))
        && spec.theta_dim == spec.dim * (spec.dim + 3) / 2 {
            return theta_names(spec.dim);
        }
    generic_names(spec.theta_dim)
}

/// Picks reduced equations when the family passes the regularity check near `theta0`.
fn choose_reduction(spec: &PowerLawFamilySpec, theta0: &[f64], data: Data<'_>) -> Reduction {
    if spec.stat_dim != spec.theta_dim {
        return Reduction::General;
    }
    let k = theta0.len();
    let mut thetas = vec![theta0.to_vec()];
    for i in 0..=k {
        let mut t = theta0.to_vec();
        for (j, v) in t.iter_mut().enumerate() {
            let bump = 0.05 * (1.0 + v.abs()) * (((i + 1) * (j + 2)) as f64).sin();
            *v += if i == k { 0.5 * bump } else if j == i { bump } else { 0.0 };
        }
        thetas.push(t);
    }
    thetas.retain(|t| spec.admissible.as_ref().is_none_or(|a| a(t)));
    let xs = data.points();
    match regularity_check(spec, &thetas, &xs) {
        Ok(r) if r.regular => Reduction::Reduced,
        _ => Reduction::General,
    }
}

/// Solves the estimating equation of `method` by damped Newton from `theta0`.
pub fn solve_projection_equations(
    method: Method,
    spec: &PowerLawFamilySpec,
    data: Data<'_>,
    theta0: &[f64],
    reduction: Option<Reduction>,
) -> Result<EstimateReport> {
    let native = native_form(spec, method)?;
    check_hypothesis(&native)?;
    let red = reduction.unwrap_or_else(|| choose_reduction(&native, theta0, data));
    if data.dim() != native.dim {
        return Err(Error::InvalidInput("data and family dimensions differ".into()));
    }
    let (fbar, hbar) = data_averages(&native, data, (method == Method::Hellinger).then_some(native.alpha))?;
    let scale = 1.0 + fbar.iter().chain(std::iter::once(&hbar)).map(|v| v.abs()).fold(0.0, f64::max);
    let rep = damped_newton(
        |t| residual_from_averages(method, &native, t, &fbar, hbar, red),
        theta0,
        1e-10 * scale,
        100,
    )?;
    Ok(EstimateReport {
        method,
        order: native.alpha,
        theta_hat: rep.x,
        theta_names: names_for(&native),
        residual_norm: rep.residual_norm,
        iterations: rep.iterations,
        converged: rep.converged,
        reduction: Some(red),
        kde_regime: match data {
            Data::Kde(k) => Some(k.regime()),
            Data::Sample(_) => None,
        },
        extras: BTreeMap::new(),
    })
}

fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut v = Vec::new();
    for i in 0..d {
        for j in i..d {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn require_pd(k: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = k.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ok = k.clone().cholesky().is_some() && k.symmetric_eigenvalues().iter().all(|&e| e > 1e-12 * scale.max(1e-300));
    if ok {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("{what} is not positive definite")))
    }
}

/// Closed-form Basu and Jones estimator for Student distributions with
/// `a in (d/(d+2), 1)`: `mu = X-bar`, `K = mean X X^T - mu mu^T`,
/// `Sigma = (nu - 2)/nu K`.
pub fn student_moment_estimator(sample: &Sample, alpha: f64) -> Result<EstimateReport> {
    let d = sample.dim();
    let lo = d as f64 / (d as f64 + 2.0);
    if alpha > 1.0 {
        return Err(Error::WrongRegime(format!(
            "order {alpha} > 1 gives a parameter-dependent support; use the piecewise maximizer"
        )));
    }
    if !(alpha > lo && alpha < 1.0) {
        return Err(Error::Domain(format!("closed form needs order in ({lo}, 1), got {alpha}")));
    }
    if sample.n() < d + 1 {
        return Err(Error::InvalidInput(format!("need at least {} observations", d + 1)));
    }
    let mu = sample.mean();
    let k = sample.second_moment() - DMatrix::from_fn(d, d, |i, j| mu[i] * mu[j]);
    let nu = nu_of_alpha(alpha, d);
    let sigma = &k * ((nu - 2.0) / nu);
    let mut extras = BTreeMap::new();
    extras.insert("k_hat".to_string(), upper_triangle(&k));
    extras.insert("nu".to_string(), vec![nu]);
    require_pd(&k, "the sample covariance")?;
    Ok(EstimateReport {
        method: Method::Basu,
        order: alpha,
        theta_hat: pack_theta(&mu, &sigma),
        theta_names: theta_names(d),
        residual_norm: 0.0,
        iterations: 0,
        converged: true,
        reduction: Some(Reduction::Reduced),
        kde_regime: None,
        extras,
    })
}

/// `1/(3 n^(1/d))`, the diagonal moment correction of the uniform kernel.
pub fn kde_correction(n: usize, d: usize) -> f64 {
    1.0 / (3.0 * (n as f64).powf(1.0 / d as f64))
}

fn cauchy_range(beta: f64, d: usize) -> Result<f64> {
    let hi = (d as f64 + 2.0) / d as f64;
    if beta > 0.0 && beta < 1.0 {
        return Err(Error::WrongRegime(format!(
            "beta = {beta} < 1 gives a parameter-dependent support; use the piecewise Hellinger routine"
        )));
    }
    if !(beta > 1.0 && beta < hi) {
        return Err(Error::Domain(format!("closed form needs beta in (1, {hi}), got {beta}")));
    }
    Ok(nu_of_alpha(1.0 / beta, d))
}

/// Generalized Hellinger estimator for Cauchy distributions with the uniform kernel:
/// `mu = X-bar`, `k_ij = mean X_i X_j - mu_i mu_j + eps_n [i = j]`, `Sigma = k (nu - 2)/nu`.
///
/// Both the corrected and uncorrected `k` are reported.
pub fn hellinger_estimator_cauchy(sample: &Sample, beta: f64) -> Result<EstimateReport> {
    let d = sample.dim();
    let nu = cauchy_range(beta, d)?;
    let n = sample.n();
    let mu = sample.mean();
    let raw = sample.second_moment() - DMatrix::from_fn(d, d, |i, j| mu[i] * mu[j]);
    let eps = kde_correction(n, d);
    let k = &raw + DMatrix::identity(d, d) * eps;
    let f = (nu - 2.0) / nu;
    let mut extras = BTreeMap::new();
    extras.insert("epsilon_n".to_string(), vec![eps]);
    extras.insert("k_hat".to_string(), upper_triangle(&k));
    extras.insert("k_hat_uncorrected".to_string(), upper_triangle(&raw));
    extras.insert("sigma_hat_uncorrected".to_string(), upper_triangle(&(&raw * f)));
    extras.insert("nu".to_string(), vec![nu]);
    require_pd(&k, "the corrected covariance")?;
    Ok(EstimateReport {
        method: Method::Hellinger,
        order: beta,
        theta_hat: pack_theta(&mu, &(k * f)),
        theta_names: theta_names(d),
        residual_norm: 0.0,
        iterations: 0,
        converged: true,
        reduction: Some(Reduction::Reduced),
        kde_regime: Some(UniformKde::new(sample).regime()),
        extras,
    })
}

/// The same estimator from explicit escort moments of a density estimate.
pub fn hellinger_estimator_cauchy_kde(kde: &UniformKde, beta: f64) -> Result<EstimateReport> {
    let d = kde.dim();
    let nu = cauchy_range(beta, d)?;
    let m = kde.escort_moments(beta)?;
    let k = m.covariance();
    require_pd(&k, "the escort covariance")?;
    let mut extras = BTreeMap::new();
    extras.insert("k_hat".to_string(), upper_triangle(&k));
    Ok(EstimateReport {
        method: Method::Hellinger,
        order: beta,
        theta_hat: pack_theta(&m.mean, &(k * ((nu - 2.0) / nu))),
        theta_names: theta_names(d),
        residual_norm: 0.0,
        iterations: 0,
        converged: true,
        reduction: Some(Reduction::Reduced),
        kde_regime: Some(m.regime),
        extras,
    })
}

/// Maximizes a likelihood numerically: Nelder-Mead, then Newton polishing.
pub fn maximize_likelihood(
    likelihood: Likelihood,
    family: &dyn ParametricFamily,
    sample: &Sample,
    kde: Option<&UniformKde>,
    alpha: f64,
    theta0: &[f64],
) -> Result<EstimateReport> {
    let obj = |t: &[f64]| match likelihood.evaluate(family, t, sample, kde, alpha) {
        Ok(v) if v.is_finite() => -v,
        _ => f64::INFINITY,
    };
    if !obj(theta0).is_finite() {
        return Err(Error::ParameterSpace(format!("likelihood undefined at the start {theta0:?}")));
    }
    let step: Vec<f64> = theta0.iter().map(|v| 0.1 * (1.0 + v.abs())).collect();
    let nm = nelder_mead(obj, theta0, &step, 1e-14, 20_000);
    let pol = newton_polish(obj, &nm.x, 25);
    let method = match likelihood {
        Likelihood::Log => Method::Mle,
        Likelihood::L1 => Method::Hellinger,
        Likelihood::L2 => Method::Basu,
        Likelihood::L3 => Method::Jones,
    };
    Ok(EstimateReport {
        method,
        order: alpha,
        theta_hat: pol.x,
        theta_names: generic_names(theta0.len()),
        residual_norm: 0.0,
        iterations: nm.iterations + pol.iterations,
        converged: nm.iterations < 20_000,
        reduction: None,
        kde_regime: kde.map(UniformKde::regime),
        extras: BTreeMap::from([("objective".to_string(), vec![-pol.value])]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{student_balpha_spec, GaussianFamily, StudentFamily};

    fn small_sample() -> Sample {
        Sample::from_values(&[-1.3, -0.4, 0.1, 0.2, 0.9, 1.7, 2.2, -0.8, 0.5, 0.05]).unwrap()
    }

    #[test]
    fn moment_estimator_hand_values() {
        let s = Sample::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let r = student_moment_estimator(&s, 0.9).unwrap();
        assert_eq!(r.theta_hat[0], 2.0);
        assert!((r.extras["k_hat"][0] - 2.0 / 3.0).abs() < 1e-15);
        let nu = nu_of_alpha(0.9, 1);
        assert!((r.theta_hat[1] - 2.0 / 3.0 * (nu - 2.0) / nu).abs() < 1e-15);
        let c = Sample::from_values(&[4.0, 4.0, 4.0]).unwrap();
        assert!(matches!(student_moment_estimator(&c, 0.9), Err(Error::Degenerate(_))));
        assert!(matches!(student_moment_estimator(&s, 2.0), Err(Error::WrongRegime(_))));
        assert!(matches!(student_moment_estimator(&s, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn cauchy_hand_values() {
        let s = Sample::from_values(&[-1.0, 1.0]).unwrap();
        let r = hellinger_estimator_cauchy(&s, 1.5).unwrap();
        assert_eq!(r.theta_hat[0], 0.0);
        assert!((r.extras["k_hat"][0] - 7.0 / 6.0).abs() < 1e-15);
        assert!((r.extras["k_hat_uncorrected"][0] - 1.0).abs() < 1e-15);
        assert!(matches!(hellinger_estimator_cauchy(&s, 0.5), Err(Error::WrongRegime(_))));
        assert!(matches!(hellinger_estimator_cauchy(&s, 3.5), Err(Error::Domain(_))));
    }

    #[test]
    fn kde_route_matches_closed_form_on_disjoint_boxes() {
        let s = Sample::from_values(&[-3.0, -1.5, 0.0, 1.2, 2.9]).unwrap();
        let kde = UniformKde::new(&s);
        assert_eq!(kde.regime(), KdeRegime::Disjoint);
        let a = hellinger_estimator_cauchy(&s, 1.5).unwrap();
        let b = hellinger_estimator_cauchy_kde(&kde, 1.5).unwrap();
        for (x, y) in a.theta_hat.iter().zip(&b.theta_hat) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn student_basu_equations_recover_closed_form() {
        let s = small_sample();
        let spec = student_balpha_spec(1, 0.9).unwrap();
        let closed = student_moment_estimator(&s, 0.9).unwrap();
        let r = solve_projection_equations(Method::Basu, &spec, Data::Sample(&s), &[0.0, 1.0], None).unwrap();
        assert_eq!(r.reduction, Some(Reduction::Reduced));
        for (x, y) in r.theta_hat.iter().zip(&closed.theta_hat) {
            assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", r.theta_hat, closed.theta_hat);
        }
        let g = estimating_residual(Method::Basu, &spec, &r.theta_hat, Data::Sample(&s), Reduction::General).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }

    #[test]
    fn parameter_dependent_support_is_refused() {
        let spec = student_balpha_spec(1, 2.0).unwrap();
        let s = small_sample();
        let e = estimating_residual(Method::Basu, &spec, &[0.0, 1.0], Data::Sample(&s), Reduction::Reduced);
        assert!(matches!(e, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn gaussian_mle_by_maximization() {
        let s = small_sample();
        let r = maximize_likelihood(Likelihood::Log, &GaussianFamily, &s, None, 1.0, &[0.0, 1.0]).unwrap();
        let m = s.mean()[0];
        let v = s.second_moment()[(0, 0)] - m * m;
        assert!((r.theta_hat[0] - m).abs() < 1e-6 && (r.theta_hat[1] - v).abs() < 1e-6, "{:?}", r.theta_hat);
    }

    #[test]
    fn l2_maximizer_is_the_sample_mean() {
        let s = small_sample();
        let f = StudentFamily::new(1, 0.9).unwrap();
        let r = maximize_likelihood(Likelihood::L2, &f, &s, None, 0.9, &[0.0, 1.0]).unwrap();
        assert!((r.theta_hat[0] - s.mean()[0]).abs() < 1e-3);
    }
}
