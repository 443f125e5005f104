//! Seeded draws from contaminated models `(1 - eps) p + eps delta`.
//!
//! All randomness comes from `ChaCha8Rng`. Replicate `r` of a run with
//! master seed `s` uses stream `r` of the generator seeded with `s`, so
//! replicates are independent and their order never matters.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{CauchyParams, StudentParams};
use crate::prob::Sample;

/// Name and version of the generator, for run manifests.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng 0.9";

/// One mixture component. Matrices are given row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Component {
    Normal { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    Student { alpha: f64, mu: Vec<f64>, sigma: Vec<Vec<f64>> },
    Cauchy { beta: f64, mu: Vec<f64>, sigma: Vec<Vec<f64>> },
    Point { at: Vec<f64> },
}

fn matrix(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput(format!("expected a {d} x {d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

enum Sampler {
    Normal { mean: Vec<f64>, chol: DMatrix<f64> },
    Student(StudentParams),
    Cauchy(CauchyParams),
    Point(Vec<f64>),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Sampler::Normal { mean, chol } => {
                let z: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
                (0..mean.len()).map(|i| mean[i] + (0..=i).map(|j| chol[(i, j)] * z[j]).sum::<f64>()).collect()
            }
            Sampler::Student(p) => p.sample(rng),
            Sampler::Cauchy(p) => p.sample(rng),
            Sampler::Point(x) => x.clone(),
        }
    }
}

impl Component {
    pub fn dim(&self) -> usize {
        match self {
            Component::Normal { mean, .. } => mean.len(),
            Component::Student { mu, .. } | Component::Cauchy { mu, .. } => mu.len(),
            Component::Point { at } => at.len(),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        let d = self.dim();
        Ok(match self {
            Component::Normal { mean, cov } => {
                let chol = matrix(cov, d)?
                    .cholesky()
                    .ok_or_else(|| Error::InvalidInput("normal covariance is not positive definite".into()))?
                    .l();
                Sampler::Normal { mean: mean.clone(), chol }
            }
            Component::Student { alpha, mu, sigma } => {
                Sampler::Student(StudentParams::new(mu.clone(), matrix(sigma, d)?, *alpha)?)
            }
            Component::Cauchy { beta, mu, sigma } => {
                Sampler::Cauchy(CauchyParams::new(mu.clone(), matrix(sigma, d)?, *beta)?)
            }
            Component::Point { at } => Sampler::Point(at.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub inlier: Component,
    pub outlier: Component,
    pub epsilon: f64,
}

impl MixtureSpec {
    pub fn pure(inlier: Component) -> Self {
        let outlier = Component::Point { at: vec![0.0; inlier.dim()] };
        Self { inlier, outlier, epsilon: 0.0 }
    }
}

/// Draws and the outlier flag of each.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub sample: Sample,
    pub outlier: Vec<bool>,
}

/// Generator for replicate `stream` of a run with the given master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` draws from `(1 - eps) inlier + eps outlier` using `rng`.
pub fn sample_mixture_with(spec: &MixtureSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    if !(0.0..1.0).contains(&spec.epsilon) {
        return Err(Error::Domain(format!("contamination must lie in [0, 1), got {}", spec.epsilon)));
    }
    let d = spec.inlier.dim();
    if d == 0 || spec.outlier.dim() != d {
        return Err(Error::InvalidInput("components must share a positive dimension".into()));
    }
    let (inl, out) = (spec.inlier.sampler()?, spec.outlier.sampler()?);
    let mut data = Vec::with_capacity(n * d);
    let mut flags = Vec::with_capacity(n);
    for _ in 0..n {
        let bad = spec.epsilon > 0.0 && rng.random::<f64>() < spec.epsilon;
        data.extend(if bad { out.draw(rng) } else { inl.draw(rng) });
        flags.push(bad);
    }
    Ok(LabeledSample { sample: Sample::new(d, data)?, outlier: flags })
}

/// `n` draws with the generator seeded by `seed` (stream 0).
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Sample> {
    Ok(sample_mixture_with(spec, n, &mut stream_rng(seed, 0))?.sample)
}

/// `replicates` independent samples, one stream each.
pub fn replicate_samples(spec: &MixtureSpec, n: usize, seed: u64, replicates: usize) -> Result<Vec<Sample>> {
    (0..replicates as u64).map(|r| Ok(sample_mixture_with(spec, n, &mut stream_rng(seed, r))?.sample)).collect()
}
