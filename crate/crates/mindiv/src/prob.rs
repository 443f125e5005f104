//! Discrete distributions, escort transforms and samples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass before renormalisation.
pub const MASS_TOL: f64 = 1e-9;

/// Probability vector on a finite labelled support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution, renormalising masses that sum to one within [`MASS_TOL`].
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty support".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::InvalidInput("label and weight counts differ".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidInput(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        let mut seen = std::collections::HashSet::new();
        if !labels.iter().all(|l| seen.insert(l)) {
            return Err(Error::InvalidInput("duplicate support labels".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { labels, weights })
    }

    /// Distribution with labels `1..=n`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let labels = (1..=weights.len()).map(|i| i.to_string()).collect();
        Self::new(labels, weights)
    }

    /// Normalises arbitrary non-negative masses.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidInput("masses must have a positive finite sum".into()));
        }
        Self::from_weights(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Indices of atoms with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Expectation of a function given by its values on the atoms.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Errors unless both distributions live on the same labelled atoms.
    pub fn check_same_support(&self, other: &Self) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::InvalidInput("distributions are defined on different supports".into()));
        }
        Ok(())
    }

    /// Escort distribution `p^a / sum p^a`.
    pub fn escort(&self, alpha: f64) -> Result<Self> {
        Ok(Self { labels: self.labels.clone(), weights: escort_weights(&self.weights, alpha)? })
    }
}

/// Escort transform of raw weights. Zero masses stay zero for `alpha > 0`.
pub fn escort_weights(weights: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::Domain(format!("escort exponent must be finite and non-zero, got {alpha}")));
    }
    if alpha < 0.0 && weights.contains(&0.0) {
        return Err(Error::Domain("negative escort exponent with a zero mass".into()));
    }
    // Work relative to the largest mass so that large exponents do not underflow.
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    if wmax <= 0.0 {
        return Err(Error::InvalidInput("all masses are zero".into()));
    }
    let raised: Vec<f64> = weights
        .iter()
        .map(|&w| if w == 0.0 { 0.0 } else { (alpha * (w / wmax).ln()).exp() })
        .collect();
    let total: f64 = raised.iter().sum();
    Ok(raised.into_iter().map(|r| r / total).collect())
}

/// Observations `X_1..X_n` in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput("sample must be a non-empty n x d table".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample contains a non-finite value".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("ragged sample rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    /// Flat row-major values.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b / n;
            }
        }
        m
    }

    /// Raw second moments `(1/n) sum X X^T`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let n = self.n() as f64;
        let d = self.dim;
        let mut s = DMatrix::zeros(d, d);
        for r in self.rows() {
            for i in 0..d {
                for j in 0..d {
                    s[(i, j)] += r[i] * r[j] / n;
                }
            }
        }
        s
    }

    /// Average of a function over the observations.
    pub fn average(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.rows().map(f).sum::<f64>() / self.n() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn escort_of_three_atoms() {
        let p = DiscreteDistribution::from_weights(vec![0.5, 0.25, 0.25]).unwrap();
        let e = p.escort(2.0).unwrap();
        let want = [0.25 / 0.375, 0.0625 / 0.375, 0.0625 / 0.375];
        for (a, b) in e.weights().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn escort_rejects_zero_and_negative_exponent_on_zero_mass() {
        let p = DiscreteDistribution::from_weights(vec![1.0, 0.0]).unwrap();
        assert!(matches!(p.escort(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.escort(-1.0), Err(Error::Domain(_))));
        assert_eq!(p.escort(3.0).unwrap().weights(), &[1.0, 0.0]);
    }

    #[test]
    fn construction_checks() {
        assert!(DiscreteDistribution::from_weights(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::from_weights(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::from_weights(vec![]).is_err());
        let p = DiscreteDistribution::from_weights(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sample_moments() {
        let s = Sample::from_values(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean(), vec![2.0]);
        assert!((s.second_moment()[(0, 0)] - 14.0 / 3.0).abs() < 1e-15);
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn escort_composes(w in (2usize..8).prop_flat_map(simplex), a in 0.2f64..3.0, b in 0.2f64..3.0) {
            let p = DiscreteDistribution::from_weights(w).unwrap();
            let lhs = p.escort(a).unwrap().escort(b).unwrap();
            let rhs = p.escort(a * b).unwrap();
            for (x, y) in lhs.weights().iter().zip(rhs.weights()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn escort_is_a_distribution(w in (2usize..8).prop_flat_map(simplex), a in -3.0f64..3.0) {
            prop_assume!(a.abs() > 1e-3);
            let e = escort_weights(&w, a).unwrap();
            prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(e.iter().all(|x| *x >= 0.0));
        }
    }
}
