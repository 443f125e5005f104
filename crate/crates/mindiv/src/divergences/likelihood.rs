use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::kde::UniformKde;
use crate::prob::Sample;

/// Gauss-Legendre nodes per KDE cell in `l1_likelihood`.
const CELL_NODES: usize = 48;

/// Which likelihood to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Likelihood {
    /// Mean log-density.
    Log,
    /// Matched with the Rényi divergence; needs a KDE.
    L1,
    /// Matched with the density-power divergence.
    L2,
    /// Matched with the log-density-power divergence.
    L3,
}

impl Likelihood {
    pub fn evaluate(
        self,
        family: &dyn ParametricFamily,
        theta: &[f64],
        sample: &Sample,
        kde: Option<&UniformKde>,
        alpha: f64,
    ) -> Result<f64> {
        match self {
            Self::Log => log_likelihood(family, theta, sample),
            Self::L1 => {
                let kde = kde.ok_or_else(|| Error::InvalidInput("L1 needs a density estimate".into()))?;
                l1_likelihood(family, theta, kde, alpha)
            }
            Self::L2 => l2_likelihood(family, theta, sample, alpha),
            Self::L3 => l3_likelihood(family, theta, sample, alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite() && alpha != 1.0) {
        return Err(Error::Domain(format!("likelihood order must be positive and not one, got {alpha}")));
    }
    Ok(())
}

/// Densities at the sample points. Zeros are allowed when `a > 1`, where `p^(a-1)` vanishes.
fn densities(family: &dyn ParametricFamily, theta: &[f64], sample: &Sample, alpha: f64) -> Result<Vec<f64>> {
    sample
        .rows()
        .map(|x| {
            let p = family.density(theta, x)?;
            if p.is_finite() && (p > 0.0 || (p == 0.0 && alpha > 1.0)) {
                Ok(p)
            } else {
                Err(Error::NonFinite { at: x.to_vec() })
            }
        })
        .collect()
}

/// `(1/n) sum log p_theta(X_j)`.
pub fn log_likelihood(family: &dyn ParametricFamily, theta: &[f64], sample: &Sample) -> Result<f64> {
    let mut s = 0.0;
    for x in sample.rows() {
        let l = family.log_density(theta, x)?;
        if !l.is_finite() {
            return Err(Error::NonFinite { at: x.to_vec() });
        }
        s += l;
    }
    Ok(s / sample.n() as f64)
}

fn kde_cross(family: &dyn ParametricFamily, theta: &[f64], kde: &UniformKde, alpha: f64) -> Result<f64> {
    let mut err = None;
    let v = kde.integrate_powered(alpha, CELL_NODES, |x| match family.density(theta, x) {
        Ok(p) if p > 0.0 => p.powf(1.0 - alpha),
        Ok(_) => {
            if alpha > 1.0 {
                f64::INFINITY
            } else {
                0.0
            }
        }
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `1/(1-a) log int p~^a p_theta^(1-a)`, integrated cell by cell over the KDE.
pub fn l1_likelihood(family: &dyn ParametricFamily, theta: &[f64], kde: &UniformKde, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = kde_cross(family, theta, kde, alpha)?;
    if s == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !(s > 0.0) {
        return Err(Error::NonFinite { at: vec![] });
    }
    Ok(s.ln() / (1.0 - alpha))
}

/// The value `l1_likelihood` tends to as `a -> 1`: `E_p~[log p_theta] + H(p~)`.
pub fn l1_limit(family: &dyn ParametricFamily, theta: &[f64], kde: &UniformKde) -> Result<f64> {
    let mut err = None;
    let v = kde.integrate_powered(1.0, CELL_NODES, |x| match family.log_density(theta, x) {
        Ok(l) if l.is_finite() => l,
        Ok(_) => f64::NEG_INFINITY,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v? + kde.entropy())
}

/// `(1/n) sum (a p^(a-1) - 1)/(a-1) - int p^a`.
pub fn l2_likelihood(family: &dyn ParametricFamily, theta: &[f64], sample: &Sample, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = densities(family, theta, sample, alpha)?;
    let m = p.iter().map(|v| (alpha * v.powf(alpha - 1.0) - 1.0) / (alpha - 1.0)).sum::<f64>() / p.len() as f64;
    Ok(m - family.power_integral(theta, alpha)?)
}

/// `a/(a-1) log[(1/n) sum p^(a-1)] - log int p^a`.
pub fn l3_likelihood(family: &dyn ParametricFamily, theta: &[f64], sample: &Sample, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = densities(family, theta, sample, alpha)?;
    let m = p.iter().map(|v| v.powf(alpha - 1.0)).sum::<f64>() / p.len() as f64;
    if !(m > 0.0) {
        return Err(Error::NonFinite { at: sample.row(0).to_vec() });
    }
    Ok(alpha / (alpha - 1.0) * m.ln() - family.power_integral(theta, alpha)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::GaussianFamily;

    fn sample20() -> Sample {
        let v: Vec<f64> = (0..20).map(|i| ((i * 37) % 20) as f64 / 7.0 - 1.3 + 0.01 * (i as f64).sin()).collect();
        Sample::from_values(&v).unwrap()
    }

    #[test]
    fn generalized_likelihoods_approach_log_likelihood() {
        let g = GaussianFamily;
        let s = sample20();
        let kde = UniformKde::new(&s);
        let theta = [0.2, 1.6];
        let l = log_likelihood(&g, &theta, &s).unwrap();
        let lim = l1_limit(&g, &theta, &kde).unwrap();
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            assert!((l2_likelihood(&g, &theta, &s, a).unwrap() - l).abs() < 1e-3);
            assert!((l3_likelihood(&g, &theta, &s, a).unwrap() - l).abs() < 1e-3);
            assert!((l1_likelihood(&g, &theta, &kde, a).unwrap() - lim).abs() < 1e-3);
        }
    }

    #[test]
    fn mle_stationary_at_sample_mean() {
        let g = GaussianFamily;
        let s = sample20();
        let m = s.mean()[0];
        let h = 1e-5;
        let d = (log_likelihood(&g, &[m + h, 1.3], &s).unwrap() - log_likelihood(&g, &[m - h, 1.3], &s).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-8, "{d}");
    }

    #[test]
    fn l3_fixed_value() {
        // p = N(0,1) at x in {0, 1}, a = 2: 2 log[mean p] - log(1/(2 sqrt(pi))).
        let g = GaussianFamily;
        let s = Sample::from_values(&[0.0, 1.0]).unwrap();
        let phi = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let want = 2.0 * (0.5 * (phi(0.0) + phi(1.0))).ln() + (2.0 * std::f64::consts::PI.sqrt()).ln();
        assert!((l3_likelihood(&g, &[0.0, 1.0], &s, 2.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_density_is_an_error() {
        let f = crate::families::StudentFamily::new(1, 2.0).unwrap();
        let s = Sample::from_values(&[0.0, 40.0]).unwrap();
        assert!(matches!(log_likelihood(&f, &[0.0, 1.0], &s), Err(Error::NonFinite { .. })));
        // Above order one the point outside the support just drops out.
        let p0 = f.density(&[0.0, 1.0], &[0.0]).unwrap();
        let want = 0.5 * (2.0 * p0 - 1.0) + -0.5 - f.power_integral(&[0.0, 1.0], 2.0).unwrap();
        assert!((l2_likelihood(&f, &[0.0, 1.0], &s, 2.0).unwrap() - want).abs() < 1e-12);
        let far = Sample::from_values(&[40.0]).unwrap();
        assert!(matches!(l3_likelihood(&f, &[0.0, 1.0], &far, 2.0), Err(Error::NonFinite { .. })));
        let g = crate::families::StudentFamily::new(1, 0.9).unwrap();
        assert!(l2_likelihood(&g, &[0.0, 1.0], &s, 0.9).is_ok());
        assert!(l3_likelihood(&GaussianFamily, &[0.0, 1.0], &s, 0.0).is_err());
    }
}
