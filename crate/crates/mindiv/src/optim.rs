//! Scalar root finding, golden-section search, Nelder-Mead and damped
//! Newton iterations with finite-difference derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, rcond};

/// Brent's method for a sign-changing bracket `[a, b]`.
pub fn brent_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidInput(format!("root not bracketed on [{a}, {b}]")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NonConvergence { iterations: 200, residual: fb.abs(), best: vec![b] })
}

/// Minimizes a unimodal `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead minimization. `f` may return `+inf` outside its domain.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: &[f64], tol: f64, max_iter: usize) -> Minimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| nan_to_inf(f(p))).collect();
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = pts[1..].iter().map(|p| dist(p, &pts[0])).fold(0.0, f64::max);
        if spread <= tol * (1.0 + vals[0].abs()) && size <= tol.sqrt() * (1.0 + norm(&pts[0])) {
            break;
        }
        let mut cen = vec![0.0; n];
        for p in &pts[..n] {
            for k in 0..n {
                cen[k] += p[k] / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| cen[k] + t * (pts[n][k] - cen[k])).collect() };
        let xr = along(-1.0);
        let fr = nan_to_inf(f(&xr));
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = nan_to_inf(f(&xe));
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fcv) = if fr < vals[n] {
                let x = along(-0.5);
                let v = nan_to_inf(f(&x));
                (x, v)
            } else {
                let x = along(0.5);
                let v = nan_to_inf(f(&x));
                (x, v)
            };
            if fcv < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fcv;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = (0..n).map(|k| pts[0][k] + 0.5 * (pts[i][k] - pts[0][k])).collect();
                    vals[i] = nan_to_inf(f(&p));
                    pts[i] = p;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], iterations: it }
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Refines a minimizer by Newton steps on finite-difference gradient and Hessian.
pub fn newton_polish(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], steps: usize) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut it = 0;
    for _ in 0..steps {
        it += 1;
        let h: Vec<f64> = x.iter().map(|v| 1e-4 * (1.0 + v.abs())).collect();
        let mut g = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut e = x.clone();
        for i in 0..n {
            e[i] = x[i] + h[i];
            let fp = f(&e);
            e[i] = x[i] - h[i];
            let fm = f(&e);
            e[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h[i]);
            hess[(i, i)] = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
            for j in 0..i {
                let mut q = |si: f64, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * h[i];
                    y[j] += sj * h[j];
                    f(&y)
                };
                let v = (q(1.0, 1.0) - q(1.0, -1.0) - q(-1.0, 1.0) + q(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        if !g.iter().all(|v| v.is_finite()) || !hess.iter().all(|v| v.is_finite()) {
            break;
        }
        let step = lstsq_min_norm(&hess, &(-&g), 1e-12);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let y: Vec<f64> = (0..n).map(|k| x[k] + t * step[k]).collect();
            let fy = f(&y);
            if fy.is_finite() && fy <= fx {
                moved = fy < fx || t == 1.0;
                x = y;
                fx = fy;
                break;
            }
            t *= 0.5;
        }
        if !moved || step.norm() * t < 1e-13 * (1.0 + norm(&x)) {
            break;
        }
    }
    Minimum { x, value: fx, iterations: it }
}

/// Outcome of a damped Newton root search.
#[derive(Debug, Clone)]
pub struct RootReport {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton for `r(x) = 0` with a central-difference Jacobian and
/// backtracking on `|r|`.
pub fn damped_newton(
    mut r: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<RootReport> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut rx = r(&x)?;
    let m = rx.len();
    let mut nr = norm(&rx);
    for it in 0..max_iter {
        if nr <= tol {
            return Ok(RootReport { x, residual_norm: nr, iterations: it, converged: true });
        }
        let mut jac = DMatrix::zeros(m, n);
        let mut e = x.clone();
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            e[j] = x[j] + h;
            let up = r(&e)?;
            e[j] = x[j] - h;
            let dn = r(&e)?;
            e[j] = x[j];
            for i in 0..m {
                jac[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
            }
        }
        let rc = rcond(&jac);
        if !(rc > 1e-14) {
            return Err(Error::SingularJacobian { rcond: rc });
        }
        let step = lstsq_min_norm(&jac, &(-DVector::from_vec(rx.clone())), 1e-14);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let y: Vec<f64> = (0..n).map(|k| x[k] + t * step[k]).collect();
            if let Ok(ry) = r(&y) {
                let ny = norm(&ry);
                if ny.is_finite() && ny < (1.0 - 1e-4 * t) * nr {
                    x = y;
                    rx = ry;
                    nr = ny;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if nr <= tol {
        return Ok(RootReport { x, residual_norm: nr, iterations: max_iter, converged: true });
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: nr, best: x })
}
