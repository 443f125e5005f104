//! Tensor-product quadrature on boxes and integration over family supports.
//!
//! Box grids use Gauss-Legendre or trapezoid rules. Unbounded supports are
//! handled by the substitution `z = s * tan(pi t / 2)` in whitened coordinates,
//! which maps polynomial tails onto smooth integrands on `(-1, 1)` as long as
//! they decay at least like `|x|^-2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One-dimensional rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_cache() -> &'static Mutex<HashMap<usize, Arc<Rule1d>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule1d>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed once per order.
pub fn gauss_legendre(n: usize) -> Arc<Rule1d> {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    if let Some(rule) = legendre_cache().lock().expect("cache poisoned").get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    legendre_cache()
        .lock()
        .expect("cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

fn compute_gauss_legendre(n: usize) -> Rule1d {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule1d { nodes, weights }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn trapezoid(n: usize) -> Rule1d {
    assert!(n >= 2, "trapezoid rule needs at least two nodes");
    let h = 2.0 / (n - 1) as f64;
    let nodes = (0..n).map(|i| -1.0 + h * i as f64).collect();
    let weights = (0..n)
        .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
        .collect();
    Rule1d { nodes, weights }
}

/// Quadrature rule used on each axis of a box grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    GaussLegendre,
    Trapezoid,
}

/// Tensor-product grid on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
    pub rule: RuleKind,
}

impl QuadratureGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes: Vec<usize>, rule: RuleKind) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != nodes.len() {
            return Err(Error::InvalidInput("grid bounds and node counts must share one positive dimension".into()));
        }
        for ((lo, hi), n) in lower.iter().zip(&upper).zip(&nodes) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("bad grid bounds [{lo}, {hi}]")));
            }
            let min_nodes = if rule == RuleKind::Trapezoid { 2 } else { 1 };
            if *n < min_nodes {
                return Err(Error::InvalidInput("too few quadrature nodes".into()));
            }
        }
        Ok(Self { lower, upper, nodes, rule })
    }

    /// Same interval and node count on every axis, Gauss-Legendre rule.
    pub fn cube(dim: usize, lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim], vec![nodes; dim], RuleKind::GaussLegendre)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn axis_rules(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.dim())
            .map(|k| {
                let base = match self.rule {
                    RuleKind::GaussLegendre => (*gauss_legendre(self.nodes[k])).clone(),
                    RuleKind::Trapezoid => trapezoid(self.nodes[k]),
                };
                let half = 0.5 * (self.upper[k] - self.lower[k]);
                let mid = 0.5 * (self.upper[k] + self.lower[k]);
                let x = base.nodes.iter().map(|t| mid + half * t).collect();
                let w = base.weights.iter().map(|w| half * w).collect();
                (x, w)
            })
            .collect()
    }

    /// All grid points with their tensor weights.
    pub fn points(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let axes = self.axis_rules();
        tensor_walk(&axes, |x, w| {
            pts.push(x.to_vec());
            wts.push(w);
        });
        (pts, wts)
    }
}

fn tensor_walk(axes: &[(Vec<f64>, Vec<f64>)], mut visit: impl FnMut(&[f64], f64)) {
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for k in 0..d {
            x[k] = axes[k].0[idx[k]];
            w *= axes[k].1[idx[k]];
        }
        visit(&x, w);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < axes[k].0.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Integrates a scalar function over a box grid.
pub fn integrate(f: impl Fn(&[f64]) -> f64, grid: &QuadratureGrid) -> Result<f64> {
    let v = integrate_vec(1, |x, out| out[0] = f(x), grid)?;
    Ok(v[0])
}

/// Integrates an `m`-vector valued function over a box grid.
pub fn integrate_vec(
    m: usize,
    mut f: impl FnMut(&[f64], &mut [f64]),
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; m];
    let mut buf = vec![0.0; m];
    let mut bad: Option<Vec<f64>> = None;
    tensor_walk(&grid.axis_rules(), |x, w| {
        if bad.is_some() {
            return;
        }
        f(x, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            if !b.is_finite() {
                bad = Some(x.to_vec());
                return;
            }
            *a += w * b;
        }
    });
    match bad {
        Some(at) => Err(Error::NonFinite { at }),
        None => Ok(acc),
    }
}

/// Where a density lives.
#[derive(Debug, Clone)]
pub enum Support {
    /// All of `R^d`.
    FullSpace { dim: usize },
    /// `{x : (x - c)^T A^{-1} (x - c) < r2}` for a positive definite `A`.
    Ellipsoid { center: Vec<f64>, shape: DMatrix<f64>, radius_sq: f64 },
    /// Union of disjoint closed intervals on the real line.
    Intervals(Vec<(f64, f64)>),
    /// A finite set of points, integrated against counting measure.
    Atoms(Vec<Vec<f64>>),
}

impl Support {
    pub fn dim(&self) -> usize {
        match self {
            Support::FullSpace { dim } => *dim,
            Support::Ellipsoid { center, .. } => center.len(),
            Support::Intervals(_) => 1,
            Support::Atoms(a) => a.first().map_or(0, |x| x.len()),
        }
    }

    /// Membership test with the shape factorisation done once.
    pub fn membership(&self) -> Box<dyn Fn(&[f64]) -> bool + Send + Sync> {
        match self.clone() {
            Support::Ellipsoid { center, shape, radius_sq } => match shape.try_inverse() {
                Some(inv) => Box::new(move |x: &[f64]| {
                    let d = center.len();
                    let mut q = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            q += (x[i] - center[i]) * inv[(i, j)] * (x[j] - center[j]);
                        }
                    }
                    q < radius_sq
                }),
                None => Box::new(|_: &[f64]| false),
            },
            Support::FullSpace { .. } => Box::new(|_: &[f64]| true),
            other => Box::new(move |x: &[f64]| other.contains(x)),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Support::FullSpace { .. } => true,
            Support::Ellipsoid { center, shape, radius_sq } => {
                let diff = nalgebra::DVector::from_iterator(x.len(), x.iter().zip(center).map(|(a, b)| a - b));
                match shape.clone().cholesky() {
                    Some(ch) => diff.dot(&ch.solve(&diff)) < *radius_sq,
                    None => false,
                }
            }
            Support::Intervals(iv) => iv.iter().any(|(a, b)| x[0] >= *a && x[0] <= *b),
            Support::Atoms(pts) => pts.iter().any(|p| p.as_slice() == x),
        }
    }
}

/// Affine frame `x = center + L z` with an axis scale for the tangent map.
#[derive(Debug, Clone)]
pub struct Frame {
    pub center: Vec<f64>,
    pub chol: DMatrix<f64>,
    pub scale: f64,
}

impl Frame {
    pub fn identity(dim: usize) -> Self {
        Self { center: vec![0.0; dim], chol: DMatrix::identity(dim, dim), scale: 1.0 }
    }

    /// Frame centred at `center` and whitened by the Cholesky factor of `shape`.
    pub fn whitening(center: &[f64], shape: &DMatrix<f64>, scale: f64) -> Result<Self> {
        let ch = shape
            .clone()
            .cholesky()
            .ok_or_else(|| Error::ParameterSpace("shape matrix is not positive definite".into()))?;
        Ok(Self { center: center.to_vec(), chol: ch.l(), scale })
    }

    fn map(&self, z: &[f64], out: &mut [f64]) {
        let d = z.len();
        for i in 0..d {
            let mut s = self.center[i];
            for j in 0..=i {
                s += self.chol[(i, j)] * z[j];
            }
            out[i] = s;
        }
    }

    fn jacobian(&self) -> f64 {
        self.chol.diagonal().iter().product::<f64>().abs()
    }
}

/// Node counts and optional fixed truncation bounds for support integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub nodes: usize,
    pub bounds: Option<(f64, f64)>,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { nodes: 256, bounds: None }
    }
}

/// Integrates an `m`-vector valued function over a support.
///
/// `frame` locates the mass of the integrand; it only affects accuracy.
pub fn integrate_support(
    support: &Support,
    frame: Option<&Frame>,
    settings: &QuadSettings,
    m: usize,
    mut f: impl FnMut(&[f64], &mut [f64]),
) -> Result<Vec<f64>> {
    let d = support.dim();
    let ident;
    let frame = match frame {
        Some(fr) => fr,
        None => {
            ident = Frame::identity(d.max(1));
            &ident
        }
    };
    let mut acc = vec![0.0; m];
    let mut buf = vec![0.0; m];
    let mut x = vec![0.0; d];
    let mut add = |x: &[f64], w: f64, acc: &mut [f64], buf: &mut [f64]| -> Result<()> {
        if w == 0.0 {
            return Ok(());
        }
        f(x, buf);
        for (a, b) in acc.iter_mut().zip(buf.iter()) {
            if !b.is_finite() {
                return Err(Error::NonFinite { at: x.to_vec() });
            }
            *a += w * b;
        }
        Ok(())
    };
    match support {
        Support::Atoms(points) => {
            for p in points {
                add(p, 1.0, &mut acc, &mut buf)?;
            }
        }
        Support::Intervals(iv) => {
            let rule = gauss_legendre(settings.nodes);
            for &(a, b) in iv {
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    x[0] = mid + half * t;
                    add(&x, half * w, &mut acc, &mut buf)?;
                }
            }
        }
        Support::FullSpace { .. } => {
            if let Some((lo, hi)) = settings.bounds {
                let grid = QuadratureGrid::cube(d, lo, hi, settings.nodes)?;
                let (pts, wts) = grid.points();
                for (p, w) in pts.iter().zip(&wts) {
                    add(p, *w, &mut acc, &mut buf)?;
                }
            } else {
                let rule = gauss_legendre(settings.nodes);
                let s = frame.scale;
                let axis: Vec<f64> = rule.nodes.iter().map(|t| s * (0.5 * PI * t).tan()).collect();
                let jac: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| {
                        let c = (0.5 * PI * t).cos();
                        w * s * 0.5 * PI / (c * c)
                    })
                    .collect();
                let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d).map(|_| (axis.clone(), jac.clone())).collect();
                let det = frame.jacobian();
                let mut res = Ok(());
                tensor_walk(&axes, |z, w| {
                    if res.is_err() {
                        return;
                    }
                    frame.map(z, &mut x);
                    res = add(&x, w * det, &mut acc, &mut buf);
                });
                res?;
            }
        }
        Support::Ellipsoid { center, shape, radius_sq } => {
            let fr = Frame::whitening(center, shape, 1.0)?;
            let r = radius_sq.sqrt();
            let det = fr.jacobian();
            let rule = gauss_legendre(settings.nodes);
            // Sine substitutions absorb the (1 - |z|^2)^p edge behaviour.
            match d {
                1 => {
                    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                        let u = 0.5 * PI * t;
                        fr.map(&[r * u.sin()], &mut x);
                        add(&x, w * r * 0.5 * PI * u.cos() * det, &mut acc, &mut buf)?;
                    }
                }
                2 => {
                    let na = settings.nodes.max(8);
                    let dphi = 2.0 * PI / na as f64;
                    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                        let u = 0.25 * PI * (t + 1.0);
                        let rho = r * u.sin();
                        let wr = w * r * 0.25 * PI * u.cos() * rho;
                        for k in 0..na {
                            let phi = dphi * k as f64;
                            fr.map(&[rho * phi.cos(), rho * phi.sin()], &mut x);
                            add(&x, wr * dphi * det, &mut acc, &mut buf)?;
                        }
                    }
                }
                _ => {
                    let grid = QuadratureGrid::cube(d, -r, r, settings.nodes)?;
                    let (pts, wts) = grid.points();
                    for (z, w) in pts.iter().zip(&wts) {
                        if z.iter().map(|v| v * v).sum::<f64>() < *radius_sq {
                            fr.map(z, &mut x);
                            add(&x, w * det, &mut acc, &mut buf)?;
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Scalar form of [`integrate_support`].
pub fn integrate_support_scalar(
    support: &Support,
    frame: Option<&Frame>,
    settings: &QuadSettings,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    Ok(integrate_support(support, frame, settings, 1, |x, out| out[0] = f(x))?[0])
}
