//! Small dense linear programs `max c^T x` subject to `A x = b`, `x >= 0`,
//! solved by the two-phase simplex method with Bland's rule.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1); last column is the right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        for i in 0..self.rows {
            if i != r {
                let f = self.t[i * w + c];
                if f != 0.0 {
                    for k in 0..w {
                        self.t[i * w + k] -= f * self.t[r * w + k];
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj^T x` over the allowed columns from the current basis.
    fn run(&mut self, obj: &[f64], allowed: usize) -> bool {
        for _ in 0..10_000 {
            // reduced cost r_j = obj_j - obj_B^T B^-1 a_j
            let mut enter = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = obj[j];
                for i in 0..self.rows {
                    r -= obj[self.basis[i]] * self.at(i, j);
                }
                if r > PIVOT_TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, j);
                if a > PIVOT_TOL {
                    let ratio = self.at(i, self.cols) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-14 || (ratio <= best + 1e-14 && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((i, _)) => self.pivot(i, j),
            }
        }
        true
    }
}

/// Solves `max c^T x` subject to `A x = b`, `x >= 0`, with `A` given row-wise.
pub fn linprog(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("linear program dimensions disagree".into()));
    }
    let cols = n + m;
    let mut t = vec![0.0; m * (cols + 1)];
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * (cols + 1) + j] = s * a[i][j];
        }
        t[i * (cols + 1) + n + i] = 1.0;
        t[i * (cols + 1) + cols] = s * b[i];
    }
    let mut tab = Tableau { rows: m, cols, t, basis: (n..n + m).collect() };
    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = -1.0);
    tab.run(&phase1, cols);
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.at(i, cols)).sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > FEAS_TOL * scale {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.basis.contains(&j) && tab.at(i, j).abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }
    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    // Artificials left in the basis sit at zero on redundant rows; keep them out of the pricing.
    if !tab.run(&obj, n) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.at(i, cols).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}
