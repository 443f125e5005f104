//! Exact maximization when the support moves with the location parameter.
//!
//! For one-dimensional Student distributions with `a > 1` the Jones
//! likelihood in `mu` is `l(mu) = sum_i [1 + b (X_i - mu)^2]_+`, a concave
//! quadratic on every interval where the set of active points is fixed.
//! The same sweep handles the Hellinger objective for Cauchy `beta < 1`,
//! where the density estimate is piecewise constant.
//!
//! Here `sigma` is the standard deviation. The support half-width is
//! `c = sigma sqrt(2 - nu)` with `nu = (1 + a)/(1 - a)`, so `c = sqrt 5` at `a = 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{nu_of_alpha, CauchyParams};
use crate::kde::{KdeMoments, UniformKde};
use crate::prob::Sample;

/// Twenty draws from `0.8 t + 0.2 N(10, 1)` where `t` is Student with `a = 2`, one per line.
pub const MIXTURE_SAMPLE_CSV: &str = include_str!("../data/mixture_sample.csv");

/// The bundled twenty-point sample.
pub fn mixture_sample() -> Sample {
    let v: Vec<f64> = MIXTURE_SAMPLE_CSV.lines().skip(1).filter_map(|l| l.trim().parse().ok()).collect();
    Sample::from_values(&v).expect("bundled sample is valid")
}

/// Support half-width `c` for order `a > 1` and standard deviation `sigma`.
pub fn half_width(alpha: f64, sigma: f64) -> f64 {
    sigma * (2.0 - nu_of_alpha(alpha, 1)).sqrt()
}

/// One piece of the decomposition: on `[lo, hi]` exactly the sorted
/// points `k..=j` (zero based, after merging ties) are within `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub k: usize,
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalDecomposition {
    /// Distinct sorted sample values.
    pub points: Vec<f64>,
    /// Multiplicity of each distinct value.
    pub weights: Vec<f64>,
    pub half_width: f64,
    pub pieces: Vec<Piece>,
}

fn merge_sorted(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for x in xs {
        match points.last() {
            Some(&p) if p == x => *weights.last_mut().unwrap() += 1.0,
            _ => {
                points.push(x);
                weights.push(1.0);
            }
        }
    }
    (points, weights)
}

fn one_dim(sample: &Sample) -> Result<()> {
    if sample.dim() != 1 {
        return Err(Error::InvalidInput("the interval sweep is one-dimensional".into()));
    }
    if sample.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sample contains non-finite values".into()));
    }
    Ok(())
}

/// Splits the union of `[X_i - c, X_i + c]` into pieces with a fixed active set.
pub fn decompose(sample: &Sample, alpha: f64, sigma: f64) -> Result<IntervalDecomposition> {
    if !(alpha > 1.0) {
        return Err(Error::WrongRegime(format!(
            "order {alpha} <= 1 has a fixed support; use the closed-form estimators"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    one_dim(sample)?;
    let c = half_width(alpha, sigma);
    let (points, weights) = merge_sorted(sample.values());
    let mut ends: Vec<f64> = points.iter().flat_map(|&x| [x - c, x + c]).collect();
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let mut pieces: Vec<Piece> = Vec::new();
    for w in ends.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        // Active points form a contiguous run in sorted order.
        let k = points.partition_point(|&x| x < mid - c);
        let j = points.partition_point(|&x| x <= mid + c);
        if k >= j {
            continue;
        }
        match pieces.last_mut() {
            Some(p) if p.k == k && p.j == j - 1 && p.hi == w[0] => p.hi = w[1],
            _ => pieces.push(Piece { k, j: j - 1, lo: w[0], hi: w[1] }),
        }
    }
    Ok(IntervalDecomposition { points, weights, half_width: c, pieces })
}

impl IntervalDecomposition {
    /// `l(mu) = sum_i w_i [1 + b (X_i - mu)^2]_+` with `b = -1/c^2`.
    pub fn likelihood(&self, mu: f64) -> f64 {
        let c2 = self.half_width * self.half_width;
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * (1.0 - (x - mu) * (x - mu) / c2).max(0.0)).sum()
    }

    /// Maximizer of the piece's quadratic: its mean clamped to `[lo, hi]`.
    pub fn local_maximizer(&self, piece: &Piece) -> f64 {
        let (mut s, mut m) = (0.0, 0.0);
        for i in piece.k..=piece.j {
            s += self.weights[i] * self.points[i];
            m += self.weights[i];
        }
        (s / m).clamp(piece.lo, piece.hi)
    }

    /// Total length of the pieces.
    pub fn covered_length(&self) -> f64 {
        self.pieces.iter().map(|p| p.hi - p.lo).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMaximum {
    pub piece: Piece,
    pub mu: f64,
    pub likelihood: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PiecewiseEstimate {
    pub mu_hat: f64,
    pub likelihood: f64,
    pub sample_mean: f64,
    pub local: Vec<LocalMaximum>,
    pub decomposition: IntervalDecomposition,
}

/// Global maximizer of the Jones likelihood in `mu`. Ties go to the smallest `mu`.
pub fn global_maximizer(sample: &Sample, alpha: f64, sigma: f64) -> Result<PiecewiseEstimate> {
    let dec = decompose(sample, alpha, sigma)?;
    let local: Vec<LocalMaximum> = dec
        .pieces
        .iter()
        .map(|p| {
            let mu = dec.local_maximizer(p);
            LocalMaximum { piece: *p, mu, likelihood: dec.likelihood(mu) }
        })
        .collect();
    let mut best = &local[0];
    for l in &local[1..] {
        if l.likelihood > best.likelihood {
            best = l;
        }
    }
    let (mu_hat, likelihood) = (best.mu, best.likelihood);
    Ok(PiecewiseEstimate { mu_hat, likelihood, sample_mean: sample.mean()[0], local, decomposition: dec })
}

#[derive(Debug, Clone, Serialize)]
pub struct HellingerLowBeta {
    pub mu_hat: f64,
    pub objective: f64,
    /// Mean of the `beta`-escort of the density estimate, for comparison.
    pub escort_mean: f64,
    pub candidates: usize,
}

/// Objective `int p~^beta q_mu^(1-beta)` for a one-dimensional Cauchy model with
/// `0 < beta < 1`, whose `q^(1-beta)` is `M^(1-beta) [1 - (x-mu)^2/c^2]_+`.
#[derive(Debug, Clone)]
pub struct CauchyOverlap {
    cells: Vec<(f64, f64, f64)>,
    c: f64,
    scale: f64,
}

impl CauchyOverlap {
    pub fn new(kde: &UniformKde, beta: f64, sigma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("this routine needs beta in (0, 1), got {beta}")));
        }
        if kde.dim() != 1 {
            return Err(Error::InvalidInput("the interval sweep is one-dimensional".into()));
        }
        let alpha = 1.0 / beta;
        let c = half_width(alpha, sigma);
        let shape = c * c / -nu_of_alpha(alpha, 1);
        let q = CauchyParams::new(vec![0.0], nalgebra::DMatrix::from_element(1, 1, shape), beta)?;
        let cells =
            kde.cells().iter().filter(|cell| cell.value > 0.0).map(|cell| (cell.lo[0], cell.hi[0], cell.value.powf(beta))).collect();
        Ok(Self { cells, c, scale: q.normalizer().powf(1.0 - beta) })
    }

    pub fn half_width(&self) -> f64 {
        self.c
    }

    pub fn value(&self, mu: f64) -> f64 {
        let c2 = self.c * self.c;
        let mut s = 0.0;
        for &(lo, hi, v) in &self.cells {
            let a = lo.max(mu - self.c);
            let b = hi.min(mu + self.c);
            if b > a {
                s += v * ((b - a) - ((b - mu).powi(3) - (a - mu).powi(3)) / (3.0 * c2));
            }
        }
        self.scale * s
    }

    /// Values of `mu` where some cell edge meets the support boundary.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.cells.iter().flat_map(|&(lo, hi, _)| [lo - self.c, lo + self.c, hi - self.c, hi + self.c]).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Stationary points inside `(a, b)`, where the derivative is a fixed quadratic.
    fn stationary(&self, a: f64, b: f64) -> Vec<f64> {
        let mid = 0.5 * (a + b);
        let c2 = self.c * self.c;
        let (mut k0, mut k1, mut k2) = (0.0, 0.0, 0.0);
        for &(lo, hi, v) in &self.cells {
            for (e, s) in [(lo, 1.0), (hi, -1.0)] {
                if (e - mid).abs() < self.c {
                    k0 += s * v * (1.0 - e * e / c2);
                    k1 += s * v * 2.0 * e / c2;
                    k2 -= s * v / c2;
                }
            }
        }
        let scale = k0.abs() + k1.abs() * mid.abs().max(1.0) + k2.abs() * mid * mid;
        let mut roots = Vec::new();
        if k2.abs() <= 1e-14 * scale {
            if k1.abs() > 1e-14 * scale {
                roots.push(-k0 / k1);
            }
        } else {
            let disc = k1 * k1 - 4.0 * k2 * k0;
            if disc >= 0.0 {
                let q = -0.5 * (k1 + k1.signum() * disc.sqrt());
                roots.push(q / k2);
                if q != 0.0 {
                    roots.push(k0 / q);
                }
            }
        }
        roots.retain(|&r| r > a && r < b);
        roots
    }
}

/// Hellinger estimate of a Cauchy location for `0 < beta < 1` with known `sigma`.
///
/// Enumerates breakpoints and in-piece stationary points; ties go to the smallest `mu`.
pub fn hellinger_cauchy_low_beta(kde: &UniformKde, beta: f64, sigma: f64) -> Result<HellingerLowBeta> {
    let obj = CauchyOverlap::new(kde, beta, sigma)?;
    let bp = obj.breakpoints();
    let mut cands = bp.clone();
    for w in bp.windows(2) {
        cands.extend(obj.stationary(w[0], w[1]));
    }
    cands.sort_by(f64::total_cmp);
    let mut best = (cands[0], obj.value(cands[0]));
    for &m in &cands[1..] {
        let v = obj.value(m);
        if v > best.1 {
            best = (m, v);
        }
    }
    let KdeMoments { mean, .. } = kde.escort_moments(beta)?;
    Ok(HellingerLowBeta { mu_hat: best.0, objective: best.1, escort_mean: mean[0], candidates: cands.len() })
}
