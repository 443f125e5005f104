//! Uniform-kernel density estimate with bandwidth `h_n = n^(-1/(2d))`.
//!
//! Each observation carries a box of half-width `h_n` and height
//! `1/(n (2 h_n)^d) = n^(-1/2) 2^(-d)`. When boxes are disjoint the estimate
//! is uniform on their union, so every escort of it equals it.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Sample;

/// A box where the estimate is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Number of kernel boxes covering the cell.
    pub count: usize,
    /// Density value on the cell.
    pub value: f64,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Whether kernel boxes overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KdeRegime {
    Disjoint,
    Overlapping,
}

/// First and second moments of a (possibly escorted) estimate.
#[derive(Debug, Clone)]
pub struct KdeMoments {
    pub mean: Vec<f64>,
    pub second: DMatrix<f64>,
    pub regime: KdeRegime,
}

impl KdeMoments {
    /// `second - mean mean^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.mean.len();
        DMatrix::from_fn(d, d, |i, j| self.second[(i, j)] - self.mean[i] * self.mean[j])
    }
}

#[derive(Debug, Clone)]
pub struct UniformKde {
    sample: Sample,
    h: f64,
    cells: OnceLock<Vec<Cell>>,
}

impl UniformKde {
    pub fn new(sample: &Sample) -> Self {
        let n = sample.n() as f64;
        let h = n.powf(-1.0 / (2.0 * sample.dim() as f64));
        Self { sample: sample.clone(), h, cells: OnceLock::new() }
    }

    pub fn with_bandwidth(sample: &Sample, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth {h} must be positive")));
        }
        Ok(Self { sample: sample.clone(), h, cells: OnceLock::new() })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn n(&self) -> usize {
        self.sample.n()
    }

    pub fn dim(&self) -> usize {
        self.sample.dim()
    }

    /// Height contributed by one box.
    pub fn box_height(&self) -> f64 {
        1.0 / (self.n() as f64 * (2.0 * self.h).powi(self.dim() as i32))
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let c = self
            .sample
            .rows()
            .filter(|r| r.iter().zip(x).all(|(a, b)| (a - b).abs() <= self.h))
            .count();
        c as f64 * self.box_height()
    }

    fn overlaps(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.sample.row(i), self.sample.row(j));
        a.iter().zip(b).all(|(u, v)| (u - v).abs() < 2.0 * self.h)
    }

    pub fn regime(&self) -> KdeRegime {
        let n = self.n();
        if self.dim() == 1 {
            let mut v = self.sample.values().to_vec();
            v.sort_by(f64::total_cmp);
            if v.windows(2).all(|w| w[1] - w[0] >= 2.0 * self.h) {
                return KdeRegime::Disjoint;
            }
            return KdeRegime::Overlapping;
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.overlaps(i, j) {
                    return KdeRegime::Overlapping;
                }
            }
        }
        KdeRegime::Disjoint
    }

    /// Disjoint cells on which the estimate is constant, built on first use.
    pub fn cells(&self) -> &[Cell] {
        self.cells.get_or_init(|| self.build_cells())
    }

    fn build_cells(&self) -> Vec<Cell> {
        let hb = self.box_height();
        if self.dim() == 1 {
            let mut ev: Vec<(f64, i32)> = Vec::with_capacity(2 * self.n());
            for &x in self.sample.values() {
                ev.push((x - self.h, 1));
                ev.push((x + self.h, -1));
            }
            ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut cells = Vec::new();
            let mut count = 0i32;
            for k in 0..ev.len() {
                count += ev[k].1;
                if k + 1 < ev.len() && count > 0 && ev[k + 1].0 > ev[k].0 {
                    cells.push(Cell {
                        lo: vec![ev[k].0],
                        hi: vec![ev[k + 1].0],
                        count: count as usize,
                        value: count as f64 * hb,
                    });
                }
            }
            return cells;
        }
        // Split each box at the faces of overlapping neighbours; a sub-cell is
        // emitted by the lowest-index box that covers it.
        let n = self.n();
        let d = self.dim();
        let mut cells = Vec::new();
        for i in 0..n {
            let xi = self.sample.row(i);
            let nb: Vec<usize> = (0..n).filter(|&j| j == i || self.overlaps(i, j)).collect();
            let cuts: Vec<Vec<f64>> = (0..d)
                .map(|k| {
                    let (lo, hi) = (xi[k] - self.h, xi[k] + self.h);
                    let mut c = vec![lo, hi];
                    for &j in &nb {
                        for e in [self.sample.row(j)[k] - self.h, self.sample.row(j)[k] + self.h] {
                            if e > lo && e < hi {
                                c.push(e);
                            }
                        }
                    }
                    c.sort_by(f64::total_cmp);
                    c.dedup();
                    c
                })
                .collect();
            let mut idx = vec![0usize; d];
            'walk: loop {
                let lo: Vec<f64> = (0..d).map(|k| cuts[k][idx[k]]).collect();
                let hi: Vec<f64> = (0..d).map(|k| cuts[k][idx[k] + 1]).collect();
                let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let covering: Vec<usize> = nb
                    .iter()
                    .copied()
                    .filter(|&j| self.sample.row(j).iter().zip(&mid).all(|(a, b)| (a - b).abs() < self.h))
                    .collect();
                if covering.iter().min() == Some(&i) {
                    let c = covering.len();
                    cells.push(Cell { lo, hi, count: c, value: c as f64 * hb });
                }
                let mut k = 0;
                loop {
                    if k == d {
                        break 'walk;
                    }
                    idx[k] += 1;
                    if idx[k] + 1 < cuts[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        }
        cells
    }

    /// Exact moments: the mean is `X-bar` and the diagonal picks up `h^2/3`.
    pub fn moments(&self) -> KdeMoments {
        let d = self.dim();
        let mut second = self.sample.second_moment();
        for i in 0..d {
            second[(i, i)] += self.h * self.h / 3.0;
        }
        KdeMoments { mean: self.sample.mean(), second, regime: self.regime() }
    }

    /// Moments of the escort `p^beta / int p^beta`, computed cell by cell.
    pub fn escort_moments(&self, beta: f64) -> Result<KdeMoments> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Domain(format!("escort exponent must be non-zero, got {beta}")));
        }
        let d = self.dim();
        let mut mass = 0.0;
        let mut mean = vec![0.0; d];
        let mut second = DMatrix::zeros(d, d);
        for c in self.cells() {
            let w = c.value.powf(beta) * c.volume();
            mass += w;
            let mid: Vec<f64> = c.lo.iter().zip(&c.hi).map(|(a, b)| 0.5 * (a + b)).collect();
            for i in 0..d {
                mean[i] += w * mid[i];
                for j in 0..d {
                    let e = if i == j {
                        (c.lo[i] * c.lo[i] + c.lo[i] * c.hi[i] + c.hi[i] * c.hi[i]) / 3.0
                    } else {
                        mid[i] * mid[j]
                    };
                    second[(i, j)] += w * e;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= mass);
        second /= mass;
        Ok(KdeMoments { mean, second, regime: self.regime() })
    }

    /// `int p^gamma dx`.
    pub fn power_integral(&self, gamma: f64) -> f64 {
        self.cells().iter().map(|c| c.value.powf(gamma) * c.volume()).sum()
    }

    /// Differential entropy `-int p log p`.
    pub fn entropy(&self) -> f64 {
        -self.cells().iter().map(|c| c.value * c.value.ln() * c.volume()).sum::<f64>()
    }

    /// `int p(x)^gamma g(x) dx` with Gauss-Legendre on every cell.
    pub fn integrate_powered(&self, gamma: f64, nodes: usize, mut g: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        let rule = crate::quad::gauss_legendre(nodes);
        let d = self.dim();
        let mut total = 0.0;
        let mut x = vec![0.0; d];
        for c in self.cells() {
            let vg = c.value.powf(gamma);
            let mut idx = vec![0usize; d];
            let mut acc = 0.0;
            'walk: loop {
                let mut w = 1.0;
                for k in 0..d {
                    let half = 0.5 * (c.hi[k] - c.lo[k]);
                    x[k] = 0.5 * (c.hi[k] + c.lo[k]) + half * rule.nodes[idx[k]];
                    w *= half * rule.weights[idx[k]];
                }
                let v = g(&x);
                if !v.is_finite() {
                    if v == f64::INFINITY {
                        return Ok(f64::INFINITY);
                    }
                    return Err(Error::NonFinite { at: x.clone() });
                }
                acc += w * v;
                let mut k = 0;
                loop {
                    if k == d {
                        break 'walk;
                    }
                    idx[k] += 1;
                    if idx[k] < nodes {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
            total += vg * acc;
        }
        Ok(total)
    }
}
