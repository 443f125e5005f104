use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ParametricFamily;
use crate::error::{Error, Result};
use crate::quad::{integrate_support, Frame, QuadSettings, Support};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type SupportFn = Arc<dyn Fn(&[f64]) -> Support + Send + Sync>;
pub type FrameFn = Arc<dyn Fn(&[f64]) -> Option<Frame> + Send + Sync>;
pub type AdmissibleFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Functional form of a power-law family.
///
/// * `Exponential`: `exp(h + Z + w^T f)`
/// * `Balpha`: `(h + F + w^T f)^(1/(a-1))`
/// * `Malpha`: `Z (h + w^T f)^(1/(a-1))`
/// * `Ealpha`: `Z (h + w^T f)^(1/(1-a))`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Exponential,
    Balpha,
    Malpha,
    Ealpha,
}

#[derive(Clone)]
pub enum SupportRule {
    Fixed(Support),
    ParameterDependent(SupportFn),
}

/// A family given by its characterizing functions and normalizer.
///
/// `normalizer` is `F(theta)` for `Balpha` and `Z(theta)` otherwise.
#[derive(Clone)]
pub struct PowerLawFamilySpec {
    pub name: String,
    pub kind: FamilyKind,
    pub alpha: f64,
    pub dim: usize,
    pub theta_dim: usize,
    pub stat_dim: usize,
    pub h: ScalarFn,
    pub f: VectorFn,
    pub w: VectorFn,
    pub normalizer: ScalarFn,
    pub support: SupportRule,
    pub frame: Option<FrameFn>,
    pub admissible: Option<AdmissibleFn>,
    pub quad: QuadSettings,
}

impl fmt::Debug for PowerLawFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PowerLawFamilySpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("dim", &self.dim)
            .field("theta_dim", &self.theta_dim)
            .field("stat_dim", &self.stat_dim)
            .finish_non_exhaustive()
    }
}

impl PowerLawFamilySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        kind: FamilyKind,
        alpha: f64,
        dim: usize,
        theta_dim: usize,
        stat_dim: usize,
        h: ScalarFn,
        f: VectorFn,
        w: VectorFn,
        normalizer: ScalarFn,
        support: SupportRule,
    ) -> Result<Self> {
        if kind != FamilyKind::Exponential && (alpha == 1.0 || !alpha.is_finite()) {
            return Err(Error::Domain(format!("power-law order must be finite and differ from 1, got {alpha}")));
        }
        if dim == 0 || theta_dim == 0 || stat_dim == 0 {
            return Err(Error::InvalidInput("family dimensions must be positive".into()));
        }
        let alpha = if kind == FamilyKind::Exponential { 1.0 } else { alpha };
        Ok(Self {
            name: name.into(),
            kind,
            alpha,
            dim,
            theta_dim,
            stat_dim,
            h,
            f,
            w,
            normalizer,
            support,
            frame: None,
            admissible: None,
            quad: QuadSettings::default(),
        })
    }

    pub fn with_frame(mut self, frame: FrameFn) -> Self {
        self.frame = Some(frame);
        self
    }

    pub fn with_admissible(mut self, adm: AdmissibleFn) -> Self {
        self.admissible = Some(adm);
        self
    }

    pub fn with_quad(mut self, quad: QuadSettings) -> Self {
        self.quad = quad;
        self
    }

    pub fn support_at(&self, theta: &[f64]) -> Support {
        match &self.support {
            SupportRule::Fixed(s) => s.clone(),
            SupportRule::ParameterDependent(g) => g(theta),
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta_dim {
            return Err(Error::InvalidInput(format!(
                "{} expects {} parameters, got {}",
                self.name,
                self.theta_dim,
                theta.len()
            )));
        }
        if let Some(adm) = &self.admissible {
            if !adm(theta) {
                return Err(Error::ParameterSpace(format!("{theta:?} is not admissible for {}", self.name)));
            }
        }
        Ok(())
    }

    /// `h(x) + w(theta)^T f(x)`, without the normalizer.
    pub fn linear_part(&self, theta: &[f64], x: &[f64]) -> f64 {
        let w = (self.w)(theta);
        let f = (self.f)(x);
        (self.h)(x) + w.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Exponent applied to the bracket.
    pub fn exponent(&self) -> f64 {
        match self.kind {
            FamilyKind::Exponential => 1.0,
            FamilyKind::Balpha | FamilyKind::Malpha => 1.0 / (self.alpha - 1.0),
            FamilyKind::Ealpha => 1.0 / (1.0 - self.alpha),
        }
    }

    fn powered(&self, bracket: f64, x: &[f64]) -> Result<f64> {
        let e = self.exponent();
        if bracket > 0.0 {
            Ok(bracket.powf(e))
        } else if bracket == 0.0 && e > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::ParameterSpace(format!(
                "{}: bracket {bracket:.3e} is not positive at x = {x:?}",
                self.name
            )))
        }
    }

    /// Precomputes `w(theta)`, the normalizer and the support of a member.
    pub fn member(&self, theta: &[f64]) -> Result<Member<'_>> {
        self.check_theta(theta)?;
        let c = (self.normalizer)(theta);
        if !c.is_finite() {
            return Err(Error::ParameterSpace(format!("{}: normalizer is not finite at {theta:?}", self.name)));
        }
        let support = self.support_at(theta);
        let inside = support.membership();
        Ok(Member { spec: self, w: (self.w)(theta), c, support, inside })
    }

    /// Density of the member `theta` at `x`.
    pub fn eval_density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.member(theta)?.density(x)
    }

    /// `(E_theta f, E_theta h)`.
    pub fn expected_stats(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.escort_expected_stats(theta, 1.0)
    }

    /// `(E f, E h)` under the escort `p_theta^a / int p_theta^a`.
    pub fn escort_expected_stats(&self, theta: &[f64], a: f64) -> Result<(Vec<f64>, f64)> {
        let s = self.stat_dim;
        let member = self.member(theta)?;
        let frame = self.frame.as_ref().and_then(|fr| fr(theta));
        let mut err = None;
        let v = integrate_support(&member.support, frame.as_ref(), &self.quad, s + 2, |x, out| {
            match member.density(x) {
                Ok(p) if p > 0.0 => {
                    let pa = if a == 1.0 { p } else { p.powf(a) };
                    let f = (self.f)(x);
                    for i in 0..s {
                        out[i] = pa * f[i];
                    }
                    out[s] = pa * (self.h)(x);
                    out[s + 1] = pa;
                }
                Ok(_) => out.iter_mut().for_each(|o| *o = 0.0),
                Err(e) => {
                    err.get_or_insert(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        let mass = v[s + 1];
        if !(mass > 0.0) {
            return Err(Error::ParameterSpace(format!("{}: member has no mass at {theta:?}", self.name)));
        }
        Ok((v[..s].iter().map(|x| x / mass).collect(), v[s] / mass))
    }
}

impl ParametricFamily for PowerLawFamilySpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    fn density(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.eval_density(theta, x)
    }

    fn support(&self, theta: &[f64]) -> Result<Support> {
        Ok(self.support_at(theta))
    }

    fn fixed_support(&self) -> bool {
        matches!(self.support, SupportRule::Fixed(_))
    }

    fn frame(&self, theta: &[f64]) -> Option<Frame> {
        self.frame.as_ref().and_then(|f| f(theta))
    }

    fn quad_settings(&self) -> QuadSettings {
        self.quad
    }

    fn expect(&self, theta: &[f64], m: usize, g: &mut dyn FnMut(&[f64], &mut [f64])) -> Result<Vec<f64>> {
        let member = self.member(theta)?;
        let frame = self.frame(theta);
        let mut buf = vec![0.0; m];
        let mut err = None;
        let out = integrate_support(&member.support, frame.as_ref(), &self.quad, m, |x, out| {
            match member.density(x) {
                Ok(p) if p > 0.0 => {
                    g(x, &mut buf);
                    for (o, b) in out.iter_mut().zip(&buf) {
                        *o = p * b;
                    }
                }
                Ok(_) => out.iter_mut().for_each(|o| *o = 0.0),
                Err(e) => {
                    err.get_or_insert(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        })?;
        err.map_or(Ok(out), Err)
    }

    fn power_integral(&self, theta: &[f64], gamma: f64) -> Result<f64> {
        let member = self.member(theta)?;
        if gamma <= 0.0 && !matches!(member.support, Support::Atoms(_)) {
            return Err(Error::Domain(format!("power integral with exponent {gamma} needs a finite support")));
        }
        let frame = self.frame(theta);
        let mut err = None;
        let v = integrate_support(&member.support, frame.as_ref(), &self.quad, 1, |x, out| {
            out[0] = match member.density(x) {
                Ok(p) if p > 0.0 => p.powf(gamma),
                Ok(_) => 0.0,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        })?;
        err.map_or(Ok(v[0]), Err)
    }
}

/// A family member with its parameter-dependent pieces evaluated.
pub struct Member<'a> {
    spec: &'a PowerLawFamilySpec,
    w: Vec<f64>,
    c: f64,
    support: Support,
    inside: Box<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl Member<'_> {
    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn linear_part(&self, x: &[f64]) -> f64 {
        let f = (self.spec.f)(x);
        (self.spec.h)(x) + self.w.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if !(self.inside)(x) {
            return Ok(0.0);
        }
        let lin = self.linear_part(x);
        match self.spec.kind {
            FamilyKind::Exponential => Ok((lin + self.c).exp()),
            FamilyKind::Balpha => self.spec.powered(lin + self.c, x),
            FamilyKind::Malpha | FamilyKind::Ealpha => Ok(self.c * self.spec.powered(lin, x)?),
        }
    }
}
