//! Rényi, density-power (`B_a`), log-density-power (`I_a`) and
//! Kullback-Leibler divergences, plus the likelihoods they induce.
//!
//! Conventions: `0 log 0 = 0`, and a divergence is `+inf` when the power
//! sums it needs diverge, e.g. KL without absolute continuity.

mod likelihood;

pub use likelihood::{
    l1_likelihood, l1_limit, l2_likelihood, l3_likelihood, log_likelihood, Likelihood,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::DiscreteDistribution;
use crate::quad::{integrate_vec, QuadratureGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    Kl,
    Renyi,
    DensityPower,
    LogDensityPower,
}

impl std::str::FromStr for DivergenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Self::Kl),
            "renyi" => Ok(Self::Renyi),
            "dpd" | "density-power" | "b" => Ok(Self::DensityPower),
            "ldpd" | "log-density-power" | "i" => Ok(Self::LogDensityPower),
            other => Err(Error::InvalidInput(format!("unknown divergence '{other}'"))),
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("divergence order must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// Sums `sum p log(p/q)`, `sum p^a q^(1-a)`, `sum p q^(a-1)`, `sum p^a`, `sum q^a`
/// accumulated pointwise with the zero conventions above.
#[derive(Debug, Clone, Copy, Default)]
struct PowerSums {
    kl: f64,
    cross_renyi: f64,
    cross_power: f64,
    p_power: f64,
    q_power: f64,
}

const NSUMS: usize = 5;

fn pair_terms(p: f64, q: f64, alpha: f64, out: &mut [f64]) {
    out[0] = if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    };
    out[1] = if p == 0.0 {
        0.0
    } else if q == 0.0 {
        if alpha < 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (alpha * p.ln() + (1.0 - alpha) * q.ln()).exp()
    };
    out[2] = if p == 0.0 {
        0.0
    } else if q == 0.0 {
        if alpha < 1.0 {
            f64::INFINITY
        } else if alpha == 1.0 {
            p
        } else {
            0.0
        }
    } else {
        p * ((alpha - 1.0) * q.ln()).exp()
    };
    out[3] = if p == 0.0 { 0.0 } else { p.powf(alpha) };
    out[4] = if q == 0.0 { 0.0 } else { q.powf(alpha) };
}

impl PowerSums {
    fn from_slice(v: &[f64]) -> Self {
        Self { kl: v[0], cross_renyi: v[1], cross_power: v[2], p_power: v[3], q_power: v[4] }
    }

    fn discrete(p: &[f64], q: &[f64], alpha: f64) -> Self {
        let mut acc = [0.0; NSUMS];
        let mut buf = [0.0; NSUMS];
        for (&a, &b) in p.iter().zip(q) {
            pair_terms(a, b, alpha, &mut buf);
            for k in 0..NSUMS {
                acc[k] += buf[k];
            }
        }
        Self::from_slice(&acc)
    }

    fn evaluate(&self, kind: DivergenceKind, alpha: f64) -> f64 {
        if kind == DivergenceKind::Kl || alpha == 1.0 {
            return self.kl;
        }
        match kind {
            DivergenceKind::Kl => unreachable!(),
            DivergenceKind::Renyi => {
                if self.cross_renyi == f64::INFINITY {
                    f64::INFINITY
                } else {
                    self.cross_renyi.ln() / (alpha - 1.0)
                }
            }
            DivergenceKind::DensityPower => {
                if self.cross_power == f64::INFINITY {
                    return f64::INFINITY;
                }
                alpha / (1.0 - alpha) * self.cross_power - self.p_power / (1.0 - alpha) + self.q_power
            }
            DivergenceKind::LogDensityPower => {
                if self.cross_power == f64::INFINITY {
                    return f64::INFINITY;
                }
                if self.cross_power == 0.0 {
                    // Disjoint supports with a > 1: the first term is +inf.
                    return f64::INFINITY;
                }
                alpha / (1.0 - alpha) * self.cross_power.ln() - self.p_power.ln() / (1.0 - alpha)
                    + self.q_power.ln()
            }
        }
    }
}

/// Divergence between two distributions on the same labelled support.
pub fn divergence(kind: DivergenceKind, p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    p.check_same_support(q)?;
    if kind != DivergenceKind::Kl {
        check_order(alpha)?;
    }
    Ok(PowerSums::discrete(p.weights(), q.weights(), alpha).evaluate(kind, alpha))
}

pub fn kl(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    divergence(DivergenceKind::Kl, p, q, 1.0)
}

pub fn renyi(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    divergence(DivergenceKind::Renyi, p, q, alpha)
}

pub fn density_power(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    divergence(DivergenceKind::DensityPower, p, q, alpha)
}

pub fn log_density_power(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    divergence(DivergenceKind::LogDensityPower, p, q, alpha)
}

/// `B_a` on raw weight vectors; used by the projection solvers.
pub fn density_power_weights(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    PowerSums::discrete(p, q, alpha).evaluate(DivergenceKind::DensityPower, alpha)
}

/// Divergence between two densities, with integrals on a box grid.
pub fn divergence_continuous(
    kind: DivergenceKind,
    p: impl Fn(&[f64]) -> f64,
    q: impl Fn(&[f64]) -> f64,
    alpha: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if kind != DivergenceKind::Kl {
        check_order(alpha)?;
    }
    let mut inf = [false; NSUMS];
    let v = integrate_vec(
        NSUMS,
        |x, out| {
            pair_terms(p(x), q(x), alpha, out);
            for k in 0..NSUMS {
                if out[k] == f64::INFINITY {
                    inf[k] = true;
                    out[k] = 0.0;
                }
            }
        },
        grid,
    )?;
    let mut v = v;
    for k in 0..NSUMS {
        if inf[k] {
            v[k] = f64::INFINITY;
        }
    }
    Ok(PowerSums::from_slice(&v).evaluate(kind, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dd(w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn kl_of_two_coins() {
        let v = kl(&dd(&[0.5, 0.5]), &dd(&[0.25, 0.75])).unwrap();
        let want = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.1438410362258904).abs() < 1e-15);
    }

    #[test]
    fn renyi_order_two_closed_form() {
        let v = renyi(&dd(&[0.5, 0.5]), &dd(&[0.25, 0.75]), 2.0).unwrap();
        let want = (0.25f64 / 0.25 + 0.25 / 0.75).ln();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn density_power_two_is_squared_distance() {
        let p = dd(&[0.1, 0.6, 0.3]);
        let q = dd(&[0.3, 0.3, 0.4]);
        let want: f64 = p.weights().iter().zip(q.weights()).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((density_power(&p, &q, 2.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn kl_infinite_without_absolute_continuity() {
        assert_eq!(kl(&dd(&[0.5, 0.5]), &dd(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert_eq!(kl(&dd(&[1.0, 0.0]), &dd(&[0.5, 0.5])).unwrap(), 2f64.ln());
        assert_eq!(density_power(&dd(&[0.5, 0.5]), &dd(&[1.0, 0.0]), 0.5).unwrap(), f64::INFINITY);
        assert_eq!(renyi(&dd(&[0.5, 0.5]), &dd(&[1.0, 0.0]), 2.0).unwrap(), f64::INFINITY);
        assert!(density_power(&dd(&[0.5, 0.5]), &dd(&[1.0, 0.0]), 2.0).unwrap().is_finite());
    }

    #[test]
    fn domain_and_support_errors() {
        let p = dd(&[0.5, 0.5]);
        assert!(matches!(renyi(&p, &p, -0.5), Err(Error::Domain(_))));
        let q = DiscreteDistribution::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
        assert!(matches!(kl(&p, &q), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn continuous_kl_of_normals() {
        let g = QuadratureGrid::cube(1, -20.0, 20.0, 512).unwrap();
        let n = |m: f64, s: f64| move |x: &[f64]| (-(x[0] - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let v = divergence_continuous(DivergenceKind::Kl, n(0.0, 1.0), n(1.0, 2.0), 1.0, &g).unwrap();
        let want = (2.0f64).ln() + (1.0 + 1.0) / 8.0 - 0.5;
        assert!((v - want).abs() < 1e-10);
        let r = divergence_continuous(DivergenceKind::Renyi, n(0.0, 1.0), n(1.0, 1.0), 2.0, &g).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
    }

    fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        let s = || prop::collection::vec(0.02f64..1.0, n).prop_map(|v| {
            let t: f64 = v.iter().sum();
            v.into_iter().map(|x| x / t).collect::<Vec<_>>()
        });
        (s(), s())
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_on_diagonal((p, q) in (2usize..7).prop_flat_map(pair), a in 0.1f64..4.0) {
            let (p, q) = (dd(&p), dd(&q));
            for k in [DivergenceKind::Kl, DivergenceKind::Renyi, DivergenceKind::DensityPower, DivergenceKind::LogDensityPower] {
                prop_assert!(divergence(k, &p, &q, a).unwrap() >= -1e-12);
                prop_assert!(divergence(k, &p, &p, a).unwrap().abs() <= 1e-12);
            }
        }

        #[test]
        fn log_density_power_is_scale_invariant((p, q) in (2usize..7).prop_flat_map(pair), a in 0.1f64..4.0, c in 0.1f64..10.0) {
            let pc: Vec<f64> = p.iter().map(|v| v * c).collect();
            let direct = |p: &[f64]| {
                let s = PowerSums::discrete(p, &q, a);
                s.evaluate(DivergenceKind::LogDensityPower, a)
            };
            prop_assert!((direct(&p) - direct(&pc)).abs() < 1e-9);
        }

        #[test]
        fn continuity_at_order_one((p, q) in (2usize..7).prop_flat_map(pair)) {
            let (p, q) = (dd(&p), dd(&q));
            let k = kl(&p, &q).unwrap();
            for kind in [DivergenceKind::Renyi, DivergenceKind::DensityPower, DivergenceKind::LogDensityPower] {
                for a in [1.0 - 1e-5, 1.0 + 1e-5] {
                    prop_assert!((divergence(kind, &p, &q, a).unwrap() - k).abs() <= 1e-3 * (1.0 + k));
                }
            }
        }
    }
}
