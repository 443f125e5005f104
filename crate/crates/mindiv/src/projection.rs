//! Forward `B_a`-projections of a discrete `q` onto linear families, the
//! Pythagorean gap, the canonical `B^(a)` family generated by `q`, and the
//! reverse projection obtained through the forward one.
//!
//! The solver maximizes the concave dual in `(F, theta)`, where
//! `p(x) = [q(x)^(a-1) + F + theta^T f(x)]_+^(1/(a-1))`, with damped Newton
//! steps. For `a < 1` it works on `Supp(L)` only, found by one LP per atom.
//! For `a > 1` a failed Newton run falls back to enumerating zero sets.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergences::density_power_weights;
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;
use crate::lp::{linprog, LpOutcome};
use crate::optim::brent_root;
use crate::prob::DiscreteDistribution;

pub const MAX_ITER: usize = 500;
pub const KKT_TOL: f64 = 1e-10;
/// Brackets above this value count as strictly positive.
pub const CLOSURE_TOL: f64 = 1e-12;
/// LP optimum above which an atom belongs to `Supp(L)`.
const SUPPORT_LP_TOL: f64 = 1e-10;
const MAX_ENUMERATION: usize = 12;

/// `{p : sum_x p(x) f_i(x) = a_i}` on a finite support.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFamilySpec {
    /// One row per constraint, one column per atom.
    pub functions: Vec<Vec<f64>>,
    pub constants: Vec<f64>,
}

impl LinearFamilySpec {
    pub fn new(functions: Vec<Vec<f64>>, constants: Vec<f64>) -> Result<Self> {
        if functions.len() != constants.len() {
            return Err(Error::InvalidInput("one constant per constraint function is required".into()));
        }
        if let Some(n) = functions.first().map(Vec::len) {
            if n == 0 || functions.iter().any(|f| f.len() != n) {
                return Err(Error::InvalidInput("constraint functions must share one non-empty support".into()));
            }
        }
        if functions.iter().flatten().chain(&constants).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("constraint data must be finite".into()));
        }
        Ok(Self { functions, constants })
    }

    /// The whole simplex on `n` atoms.
    pub fn unconstrained(n: usize) -> Self {
        let _ = n;
        Self { functions: vec![], constants: vec![] }
    }

    /// The family `{p : sum p f_i = sum p_ref f_i}` through a given member.
    pub fn through(functions: Vec<Vec<f64>>, p: &[f64]) -> Result<Self> {
        let a = functions.iter().map(|f| f.iter().zip(p).map(|(u, v)| u * v).sum()).collect();
        Self::new(functions, a)
    }

    pub fn k(&self) -> usize {
        self.functions.len()
    }

    fn check_atoms(&self, n: usize) -> Result<()> {
        if self.functions.iter().any(|f| f.len() != n) {
            return Err(Error::InvalidInput(format!("constraints are tabulated on a different number of atoms than {n}")));
        }
        Ok(())
    }

    /// Largest constraint violation of `p`, including the mass constraint.
    pub fn violation(&self, p: &[f64]) -> f64 {
        let mass = (p.iter().sum::<f64>() - 1.0).abs();
        self.functions
            .iter()
            .zip(&self.constants)
            .map(|(f, a)| (f.iter().zip(p).map(|(u, v)| u * v).sum::<f64>() - a).abs())
            .fold(mass, f64::max)
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.iter().all(|&v| v >= -tol) && self.violation(p) <= tol
    }

    fn lp_rows(&self, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rows = vec![vec![1.0; n]];
        rows.extend(self.functions.iter().cloned());
        let mut b = vec![1.0];
        b.extend(&self.constants);
        (rows, b)
    }

    /// A feasible point, or an `Infeasible` error.
    pub fn feasible_point(&self, n: usize) -> Result<Vec<f64>> {
        self.check_atoms(n)?;
        let (rows, b) = self.lp_rows(n);
        match linprog(&vec![0.0; n], &rows, &b)? {
            LpOutcome::Optimal { x, .. } => Ok(x),
            _ => Err(Error::Infeasible("no distribution satisfies the constraints".into())),
        }
    }

    /// `max c^T p` over the family; used to sample vertices.
    pub fn vertex(&self, c: &[f64]) -> Result<Vec<f64>> {
        let n = c.len();
        self.check_atoms(n)?;
        let (rows, b) = self.lp_rows(n);
        match linprog(c, &rows, &b)? {
            LpOutcome::Optimal { x, .. } => Ok(x),
            _ => Err(Error::Infeasible("no distribution satisfies the constraints".into())),
        }
    }

    /// Atoms that some member of the family charges, by one LP per atom.
    pub fn support(&self, n: usize) -> Result<Vec<usize>> {
        self.check_atoms(n)?;
        let (rows, b) = self.lp_rows(n);
        let mut out = Vec::new();
        for j in 0..n {
            let mut c = vec![0.0; n];
            c[j] = 1.0;
            match linprog(&c, &rows, &b)? {
                LpOutcome::Optimal { value, .. } => {
                    if value > SUPPORT_LP_TOL {
                        out.push(j);
                    }
                }
                _ => return Err(Error::Infeasible("no distribution satisfies the constraints".into())),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub p_star: DiscreteDistribution,
    pub dual_theta: Vec<f64>,
    #[serde(rename = "dual_F")]
    pub dual_f: f64,
    /// Atoms where `p*` vanishes.
    pub active_zero_set: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl ProjectionResult {
    /// `q(x)^(a-1) + F + theta^T f(x)` at every atom.
    pub fn brackets(&self, q: &[f64], l: &LinearFamilySpec, alpha: f64) -> Vec<f64> {
        bracket_values(q, l, alpha, self.dual_f, &self.dual_theta)
    }

    /// Largest gap between `p*` and its bracket representation on `Supp(p*)`
    /// (and, for `a > 1`, the clipped representation everywhere).
    pub fn reconstruction_error(&self, q: &[f64], l: &LinearFamilySpec, alpha: f64) -> f64 {
        let b = self.brackets(q, l, alpha);
        let p = self.p_star.weights();
        let mut worst: f64 = 0.0;
        for x in 0..p.len() {
            if alpha < 1.0 && p[x] == 0.0 {
                continue;
            }
            let rep = if b[x] > 0.0 { b[x].powf(1.0 / (alpha - 1.0)) } else { 0.0 };
            worst = worst.max((rep - p[x]).abs());
        }
        worst
    }
}

fn bracket_values(q: &[f64], l: &LinearFamilySpec, alpha: f64, f0: f64, theta: &[f64]) -> Vec<f64> {
    (0..q.len())
        .map(|x| {
            q[x].powf(alpha - 1.0) + f0 + l.functions.iter().zip(theta).map(|(f, t)| t * f[x]).sum::<f64>()
        })
        .collect()
}

/// Dual of the projection restricted to a set of atoms.
struct Dual<'a> {
    alpha: f64,
    atoms: &'a [usize],
    base: Vec<f64>,
    /// `(1, f_1(x), ..., f_k(x))` per atom.
    g: Vec<Vec<f64>>,
    target: Vec<f64>,
    /// Clip non-positive brackets to zero mass (`a > 1`); otherwise they are infeasible.
    clip: bool,
}

impl<'a> Dual<'a> {
    fn new(q: &[f64], l: &LinearFamilySpec, alpha: f64, atoms: &'a [usize], clip: bool) -> Self {
        let base = atoms.iter().map(|&x| q[x].powf(alpha - 1.0)).collect();
        let g = atoms
            .iter()
            .map(|&x| {
                let mut v = vec![1.0];
                v.extend(l.functions.iter().map(|f| f[x]));
                v
            })
            .collect();
        let mut target = vec![1.0];
        target.extend(&l.constants);
        Self { alpha, atoms, base, g, target, clip }
    }

    fn brackets(&self, lam: &[f64]) -> Vec<f64> {
        self.g
            .iter()
            .zip(&self.base)
            .map(|(g, b)| b + g.iter().zip(lam).map(|(u, v)| u * v).sum::<f64>())
            .collect()
    }

    fn mass(&self, u: f64) -> f64 {
        if u > 0.0 {
            u.powf(1.0 / (self.alpha - 1.0))
        } else {
            0.0
        }
    }

    /// Dual objective to maximize; `-inf` outside its domain.
    fn value(&self, lam: &[f64]) -> f64 {
        let a = self.alpha;
        let s = if a > 1.0 { 1.0 } else { -1.0 };
        let mut acc = 0.0;
        for u in self.brackets(lam) {
            if u > 0.0 {
                acc += u.powf(a / (a - 1.0));
            } else if !self.clip {
                return f64::NEG_INFINITY;
            }
        }
        let lin: f64 = self.target.iter().zip(lam).map(|(u, v)| u * v).sum();
        s * (lin - (a - 1.0) / a * acc)
    }

    /// `sum p g - target`.
    fn residual(&self, lam: &[f64]) -> Vec<f64> {
        let u = self.brackets(lam);
        let mut r: Vec<f64> = self.target.iter().map(|t| -t).collect();
        for (g, &ux) in self.g.iter().zip(&u) {
            let p = self.mass(ux);
            for (ri, gi) in r.iter_mut().zip(g) {
                *ri += p * gi;
            }
        }
        r
    }

    fn solve(&self, max_iter: usize) -> std::result::Result<(Vec<f64>, usize), (Vec<f64>, f64)> {
        let m = self.target.len();
        let s = if self.alpha > 1.0 { 1.0 } else { -1.0 };
        let mut lam = vec![0.0; m];
        let mut val = self.value(&lam);
        let scale = 1.0 + self.target.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for it in 0..max_iter {
            let r = self.residual(&lam);
            let rn = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if rn <= 1e-13 * scale {
                return Ok((lam, it));
            }
            let u = self.brackets(&lam);
            let mut h = DMatrix::zeros(m, m);
            for (g, &ux) in self.g.iter().zip(&u) {
                if ux > 0.0 {
                    let w = self.mass(ux) / ((self.alpha - 1.0).abs() * ux);
                    for i in 0..m {
                        for j in 0..m {
                            h[(i, j)] += w * g[i] * g[j];
                        }
                    }
                }
            }
            let grad: Vec<f64> = r.iter().map(|v| -s * v).collect();
            let gv = DVector::from_vec(grad.clone());
            let mut dir = lstsq_min_norm(&h, &gv, 1e-14);
            if !(dir.dot(&gv) > 0.0) || !dir.iter().all(|v| v.is_finite()) {
                dir = gv.clone();
            }
            let slope = dir.dot(&gv);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = (0..m).map(|i| lam[i] + t * dir[i]).collect();
                let v = self.value(&cand);
                if !v.is_finite() {
                    t *= 0.5;
                    continue;
                }
                // Near the optimum the objective stops resolving the step, so a
                // sufficient drop in the residual is accepted as well.
                let cn = self.residual(&cand).iter().map(|v| v.abs()).fold(0.0, f64::max);
                if v >= val + 1e-4 * t * slope && v > val || cn <= (1.0 - 1e-4 * t) * rn {
                    lam = cand;
                    val = v;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                // Stalled at machine precision: accept if the residual is already tiny.
                if rn <= 1e-10 * scale {
                    return Ok((lam, it));
                }
                return Err((lam, rn));
            }
        }
        let rn = self.residual(&lam).iter().map(|v| v.abs()).fold(0.0, f64::max);
        if rn <= 1e-10 * scale {
            Ok((lam, max_iter))
        } else {
            Err((lam, rn))
        }
    }

    fn primal(&self, lam: &[f64], n: usize) -> Vec<f64> {
        let mut p = vec![0.0; n];
        for (&x, u) in self.atoms.iter().zip(self.brackets(lam)) {
            p[x] = self.mass(u);
        }
        p
    }
}

fn finish(
    q: &[f64],
    l: &LinearFamilySpec,
    alpha: f64,
    mut p: Vec<f64>,
    newton_dual: Option<&[f64]>,
    iterations: usize,
    labels: &[String],
) -> Result<ProjectionResult> {
    let n = q.len();
    if alpha > 1.0 {
        for v in p.iter_mut() {
            if *v < 1e-13 {
                *v = 0.0;
            }
        }
    }
    let support: Vec<usize> = (0..n).filter(|&x| p[x] > 0.0).collect();
    let zero: Vec<usize> = (0..n).filter(|&x| p[x] == 0.0).collect();
    // Least-squares refit of (F, theta) on Supp(p*).
    let k = l.k();
    let mut a = DMatrix::zeros(support.len(), k + 1);
    let mut b = DVector::zeros(support.len());
    for (r, &x) in support.iter().enumerate() {
        a[(r, 0)] = 1.0;
        for i in 0..k {
            a[(r, i + 1)] = l.functions[i][x];
        }
        b[r] = p[x].powf(alpha - 1.0) - q[x].powf(alpha - 1.0);
    }
    let fit = lstsq_min_norm(&a, &b, 1e-12);
    let mut cands: Vec<Vec<f64>> = vec![fit.iter().cloned().collect()];
    if let Some(d) = newton_dual {
        cands.push(d.to_vec());
    }
    let (best, kkt) = cands
        .into_iter()
        .map(|lam| {
            let r = kkt_residual(q, l, alpha, &p, lam[0], &lam[1..], &support);
            (lam, r)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("at least one candidate");
    let total: f64 = p.iter().sum();
    let p_star = DiscreteDistribution::new(labels.to_vec(), p.iter().map(|v| v / total).collect())?;
    Ok(ProjectionResult {
        p_star,
        dual_theta: best[1..].to_vec(),
        dual_f: best[0],
        active_zero_set: zero,
        kkt_residual: kkt,
        iterations,
    })
}

/// Stationarity on the support, primal feasibility, and for `a > 1` the sign
/// condition on vanishing atoms. Stationarity is measured relative to `p^(a-1)`.
fn kkt_residual(q: &[f64], l: &LinearFamilySpec, alpha: f64, p: &[f64], f0: f64, theta: &[f64], support: &[usize]) -> f64 {
    let b = bracket_values(q, l, alpha, f0, theta);
    let mut worst = l.violation(p);
    for (x, &px) in p.iter().enumerate() {
        if support.contains(&x) {
            let lhs = px.powf(alpha - 1.0);
            worst = worst.max((lhs - b[x]).abs() / lhs.abs().max(1.0));
        } else if alpha > 1.0 {
            worst = worst.max(b[x].max(0.0));
        }
    }
    worst
}

/// Forward `B_a`-projection of `q` onto `L`.
pub fn forward_projection(q: &DiscreteDistribution, l: &LinearFamilySpec, alpha: f64) -> Result<ProjectionResult> {
    if !(alpha > 0.0 && alpha.is_finite() && alpha != 1.0) {
        return Err(Error::Domain(format!("projection order must be positive and not one, got {alpha}")));
    }
    let qw = q.weights();
    let n = qw.len();
    if qw.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("the reference distribution must charge every atom".into()));
    }
    l.check_atoms(n)?;
    let supp = l.support(n)?;
    if alpha < 1.0 {
        let dual = Dual::new(qw, l, alpha, &supp, false);
        return match dual.solve(MAX_ITER) {
            Ok((lam, it)) => {
                let p = dual.primal(&lam, n);
                let r = finish(qw, l, alpha, p, Some(&lam), it, q.labels())?;
                check_kkt(r)
            }
            Err((lam, res)) => Err(Error::NonConvergence { iterations: MAX_ITER, residual: res, best: dual.primal(&lam, n) }),
        };
    }
    let all: Vec<usize> = (0..n).collect();
    let dual = Dual::new(qw, l, alpha, &all, true);
    let first = dual.solve(MAX_ITER);
    if let Ok((lam, it)) = &first {
        let r = finish(qw, l, alpha, dual.primal(lam, n), Some(lam), *it, q.labels())?;
        if r.kkt_residual <= KKT_TOL {
            return Ok(r);
        }
    }
    // Active-set fallback: try candidate supports inside Supp(L), largest first.
    if supp.len() <= MAX_ENUMERATION {
        let mut subsets: Vec<Vec<usize>> = (1u32..(1 << supp.len()))
            .map(|mask| supp.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &x)| x).collect())
            .collect();
        subsets.sort_by_key(|s: &Vec<usize>| std::cmp::Reverse(s.len()));
        let mut best: Option<ProjectionResult> = None;
        for t in &subsets {
            let d = Dual::new(qw, l, alpha, t, false);
            if let Ok((lam, it)) = d.solve(200) {
                let r = finish(qw, l, alpha, d.primal(&lam, n), None, it, q.labels())?;
                if r.kkt_residual <= KKT_TOL {
                    return Ok(r);
                }
                if best.as_ref().is_none_or(|b| r.kkt_residual < b.kkt_residual) {
                    best = Some(r);
                }
            }
        }
        if let Some(b) = best {
            return check_kkt(b);
        }
    }
    match first {
        Ok((lam, it)) => check_kkt(finish(qw, l, alpha, dual.primal(&lam, n), Some(&lam), it, q.labels())?),
        Err((lam, res)) => Err(Error::NonConvergence { iterations: MAX_ITER, residual: res, best: dual.primal(&lam, n) }),
    }
}

fn check_kkt(r: ProjectionResult) -> Result<ProjectionResult> {
    if r.kkt_residual <= KKT_TOL {
        Ok(r)
    } else {
        Err(Error::NonConvergence { iterations: r.iterations, residual: r.kkt_residual, best: r.p_star.weights().to_vec() })
    }
}

/// `B_a(p, q) - B_a(p, p*) - B_a(p*, q)`.
pub fn pythagorean_gap(p: &DiscreteDistribution, p_star: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    p.check_same_support(p_star)?;
    p.check_same_support(q)?;
    let (p, s, q) = (p.weights(), p_star.weights(), q.weights());
    Ok(density_power_weights(p, q, alpha) - density_power_weights(p, s, alpha) - density_power_weights(s, q, alpha))
}

/// Whether `Supp(p*) = Supp(L)`.
pub fn support_condition_check(result: &ProjectionResult, l: &LinearFamilySpec) -> Result<bool> {
    let n = result.p_star.len();
    let supp = l.support(n)?;
    let ps: Vec<usize> = (0..n).filter(|x| !result.active_zero_set.contains(x)).collect();
    Ok(ps == supp)
}

/// The `B^(a)` family `p_theta(x) = [q(x)^(a-1) + F(theta) + theta^T f(x)]^(1/(a-1))`
/// generated by a strictly positive reference `q`.
#[derive(Debug, Clone)]
pub struct CanonicalBalphaFamily {
    pub q: DiscreteDistribution,
    pub functions: Vec<Vec<f64>>,
    pub alpha: f64,
}

/// Outcome of intersecting `L` with the closure of a canonical family.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// Parameter solving the membership equation (possibly outside the parameter space).
    pub theta: Vec<f64>,
    pub in_family: bool,
    pub in_closure: bool,
    pub min_bracket: f64,
}

impl CanonicalBalphaFamily {
    pub fn new(q: DiscreteDistribution, functions: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha != 1.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("family order must be positive and not one, got {alpha}")));
        }
        if q.weights().iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput("the reference distribution must charge every atom".into()));
        }
        LinearFamilySpec::new(functions.clone(), vec![0.0; functions.len()])?.check_atoms(q.len())?;
        Ok(Self { q, functions, alpha })
    }

    fn base(&self, theta: &[f64]) -> Vec<f64> {
        let q = self.q.weights();
        (0..q.len())
            .map(|x| q[x].powf(self.alpha - 1.0) + self.functions.iter().zip(theta).map(|(f, t)| t * f[x]).sum::<f64>())
            .collect()
    }

    fn mass_at(&self, base: &[f64], f0: f64) -> f64 {
        base.iter().map(|b| (b + f0).max(0.0).powf(1.0 / (self.alpha - 1.0))).sum()
    }

    /// `F(theta)`, or `None` when no strictly positive member has this `theta`.
    pub fn normalizer(&self, theta: &[f64]) -> Option<f64> {
        let base = self.base(theta);
        let n = base.len() as f64;
        let lo = -base.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.alpha == 2.0 {
            let f0 = (1.0 - base.iter().sum::<f64>()) / n;
            return (f0 > lo + CLOSURE_TOL).then_some(f0);
        }
        let g = |f0: f64| self.mass_at(&base, f0) - 1.0;
        if self.alpha > 1.0 {
            if g(lo) >= 0.0 {
                return None;
            }
            let mut hi = lo + 1.0;
            while g(hi) < 0.0 {
                hi = lo + 2.0 * (hi - lo);
            }
            brent_root(g, lo, hi, 1e-15).ok()
        } else {
            let mut near = lo + 1.0;
            while g(near) < 0.0 {
                near = lo + 0.5 * (near - lo);
            }
            let mut far = lo + 1.0;
            while g(far) > 0.0 {
                far = lo + 2.0 * (far - lo);
            }
            brent_root(g, near, far, 1e-15).ok()
        }
    }

    pub fn contains_theta(&self, theta: &[f64]) -> bool {
        self.normalizer(theta).is_some()
    }

    pub fn member(&self, theta: &[f64]) -> Result<DiscreteDistribution> {
        let f0 = self
            .normalizer(theta)
            .ok_or_else(|| Error::ParameterSpace(format!("theta = {theta:?} is outside the parameter space")))?;
        let w = self.base(theta).iter().map(|b| (b + f0).powf(1.0 / (self.alpha - 1.0))).collect();
        DiscreteDistribution::from_unnormalized(w)
    }

    /// Parameter interval for one-parameter families (open; endpoints form the closure).
    pub fn parameter_interval(&self) -> Result<(f64, f64)> {
        if self.functions.len() != 1 {
            return Err(Error::InvalidInput("parameter interval is defined for one-parameter families".into()));
        }
        if self.alpha < 1.0 {
            return Ok((f64::NEG_INFINITY, f64::INFINITY));
        }
        let inside = |t: f64| self.contains_theta(&[t]);
        let edge = |dir: f64| -> f64 {
            let mut out = 1.0;
            while inside(dir * out) {
                out *= 2.0;
                if out > 1e12 {
                    return dir * f64::INFINITY;
                }
            }
            let mut inn = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (inn + out);
                if inside(dir * mid) {
                    inn = mid;
                } else {
                    out = mid;
                }
            }
            dir * 0.5 * (inn + out)
        };
        Ok((edge(-1.0), edge(1.0)))
    }

    /// Solves `sum_x p_theta(x) f(x) = a` for the affine extension of the family at order two,
    /// and reports whether the solution lies in the family or its closure.
    ///
    /// For other orders the intersection is read off the forward projection of `q` onto `L`.
    pub fn closure_intersection(&self, l: &LinearFamilySpec) -> Result<ClosureReport> {
        let q = self.q.weights();
        let n = q.len();
        if self.alpha == 2.0 {
            let k = self.functions.len();
            let nf = n as f64;
            let sums: Vec<f64> = self.functions.iter().map(|f| f.iter().sum()).collect();
            // sum_x (q + F + theta f) f_i = a_i with F = -theta^T sums / n.
            let mut m = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for i in 0..k {
                let fi = &l.functions[i];
                rhs[i] = l.constants[i] - q.iter().zip(fi).map(|(a, b)| a * b).sum::<f64>();
                for j in 0..k {
                    let dot: f64 = self.functions[j].iter().zip(fi).map(|(a, b)| a * b).sum();
                    m[(i, j)] = dot - sums[j] * fi.iter().sum::<f64>() / nf;
                }
            }
            let theta = m
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Degenerate("membership system is singular".into()))?;
            let theta: Vec<f64> = theta.iter().cloned().collect();
            let f0 = -theta.iter().zip(&sums).map(|(t, s)| t * s).sum::<f64>() / nf;
            let base = self.base(&theta);
            let min_bracket = base.iter().map(|b| b + f0).fold(f64::INFINITY, f64::min);
            return Ok(ClosureReport {
                theta,
                in_family: min_bracket > CLOSURE_TOL,
                in_closure: min_bracket >= -CLOSURE_TOL,
                min_bracket,
            });
        }
        let r = forward_projection(&self.q, l, self.alpha)?;
        let min_bracket = r.brackets(q, l, self.alpha).into_iter().fold(f64::INFINITY, f64::min);
        let exact = r.reconstruction_error(q, l, self.alpha) <= 1e-8
            && r.active_zero_set.iter().all(|&x| r.brackets(q, l, self.alpha)[x].abs() <= 1e-8);
        Ok(ClosureReport {
            theta: r.dual_theta.clone(),
            in_family: exact && min_bracket > CLOSURE_TOL,
            in_closure: exact,
            min_bracket,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReverseProjection {
    pub projection: ProjectionResult,
    /// Family parameter of `p*`.
    pub theta: Vec<f64>,
    pub in_family: bool,
    /// False for `a > 1` when `p*` loses atoms; then `p*` only lies in the closure.
    pub positivity_ok: bool,
}

/// Reverse `B_a`-projection of `p_n` on a canonical family, obtained as the forward
/// projection of its reference `q` onto `{p : sum p f_i = mean of f_i under p_n}`.
pub fn reverse_projection_via_forward(p_n: &DiscreteDistribution, family: &CanonicalBalphaFamily) -> Result<ReverseProjection> {
    p_n.check_same_support(&family.q)?;
    let l = LinearFamilySpec::through(family.functions.clone(), p_n.weights())?;
    let r = forward_projection(&family.q, &l, family.alpha)?;
    let q = family.q.weights();
    let min_bracket = r.brackets(q, &l, family.alpha).into_iter().fold(f64::INFINITY, f64::min);
    let positivity_ok = r.active_zero_set.is_empty();
    Ok(ReverseProjection {
        theta: r.dual_theta.clone(),
        in_family: min_bracket > CLOSURE_TOL && positivity_ok,
        positivity_ok,
        projection: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_weights(w.to_vec()).unwrap()
    }

    fn example_family() -> LinearFamilySpec {
        LinearFamilySpec::new(vec![vec![1.0, -3.0, -5.0, -6.0]], vec![0.0]).unwrap()
    }

    #[test]
    fn order_two_example_loses_two_atoms() {
        let u = DiscreteDistribution::uniform(4).unwrap();
        let r = forward_projection(&u, &example_family(), 2.0).unwrap();
        let want = [0.75, 0.25, 0.0, 0.0];
        for (a, b) in r.p_star.weights().iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{:?}", r.p_star.weights());
        }
        assert_eq!(r.active_zero_set, vec![2, 3]);
        assert!(!support_condition_check(&r, &example_family()).unwrap());
        assert!(r.reconstruction_error(u.weights(), &example_family(), 2.0) < 1e-12);
        let p = dd(&[471.0 / 600.0, 97.0 / 600.0, 12.0 / 600.0, 20.0 / 600.0]);
        assert!(example_family().contains(p.weights(), 1e-12));
        assert!(pythagorean_gap(&p, &r.p_star, &u, 2.0).unwrap() > 1e-6);
    }

    #[test]
    fn member_of_l_projects_to_itself() {
        let q = dd(&[0.1, 0.2, 0.3, 0.4]);
        let f = vec![vec![1.0, 2.0, 3.0, 4.0]];
        let l = LinearFamilySpec::through(f, q.weights()).unwrap();
        for a in [0.5, 2.0, 3.0] {
            let r = forward_projection(&q, &l, a).unwrap();
            for (x, y) in r.p_star.weights().iter().zip(q.weights()) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!(r.dual_theta[0].abs() < 1e-8 && r.dual_f.abs() < 1e-8);
        }
        let whole = LinearFamilySpec::unconstrained(4);
        let r = forward_projection(&q, &whole, 0.5).unwrap();
        assert!(support_condition_check(&r, &whole).unwrap());
    }

    #[test]
    fn infeasible_constraints() {
        let q = DiscreteDistribution::uniform(3).unwrap();
        let l = LinearFamilySpec::new(vec![vec![1.0, 2.0, 3.0]], vec![7.0]).unwrap();
        assert!(matches!(forward_projection(&q, &l, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn restricted_support_for_small_order() {
        // p(1) = 0 is forced: every member lives on atoms 2..4.
        let q = DiscreteDistribution::uniform(4).unwrap();
        let l = LinearFamilySpec::new(vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 2.0, 3.0]], vec![0.0, 1.5]).unwrap();
        assert_eq!(l.support(4).unwrap(), vec![1, 2, 3]);
        let r = forward_projection(&q, &l, 0.5).unwrap();
        assert_eq!(r.active_zero_set, vec![0]);
        assert!(support_condition_check(&r, &l).unwrap());
        assert!(r.kkt_residual <= KKT_TOL);
    }

    #[test]
    fn order_two_family_interval_and_empty_closure() {
        let u = DiscreteDistribution::uniform(4).unwrap();
        let fam = CanonicalBalphaFamily::new(u, vec![vec![1.0, -3.0, -5.0, -6.0]], 2.0).unwrap();
        let (lo, hi) = fam.parameter_interval().unwrap();
        assert!((lo + 1.0 / 17.0).abs() < 1e-12 && (hi - 1.0 / 11.0).abs() < 1e-12, "{lo} {hi}");
        assert!((fam.normalizer(&[0.05]).unwrap() - 13.0 * 0.05 / 4.0).abs() < 1e-15);
        let c = fam.closure_intersection(&example_family()).unwrap();
        assert!((c.theta[0] - 13.0 / 115.0).abs() < 1e-12);
        assert!(!c.in_closure && !c.in_family);
    }

    #[test]
    fn canonical_members_normalize() {
        let q = dd(&[0.1, 0.2, 0.3, 0.4]);
        for a in [0.4, 0.7, 1.5, 3.0] {
            let fam = CanonicalBalphaFamily::new(q.clone(), vec![vec![0.0, 1.0, 2.0, 3.0]], a).unwrap();
            for t in [-0.01, 0.0, 0.005] {
                let m = fam.member(&[t]).unwrap();
                let f0 = fam.normalizer(&[t]).unwrap();
                let raw: f64 = fam.base(&[t]).iter().map(|b| (b + f0).powf(1.0 / (a - 1.0))).sum();
                assert!((raw - 1.0).abs() < 1e-12, "a={a} t={t} {raw}");
                assert_eq!(m.len(), 4);
            }
        }
    }

    #[test]
    fn reverse_projection_of_a_member_is_itself() {
        let q = dd(&[0.1, 0.2, 0.3, 0.4]);
        let fam = CanonicalBalphaFamily::new(q, vec![vec![0.0, 1.0, 2.0, 3.0]], 0.6).unwrap();
        let pn = fam.member(&[0.2]).unwrap();
        let r = reverse_projection_via_forward(&pn, &fam).unwrap();
        assert!((r.theta[0] - 0.2).abs() < 1e-8, "{:?}", r.theta);
        assert!(r.in_family);
    }
}
