//! Rewriting a family in another power-law form, and the escort map
//! `E^(a) -> M^(1/a)`.

use std::sync::Arc;

use super::spec::{FamilyKind, PowerLawFamilySpec};
use super::ParametricFamily;
use crate::error::{Error, Result};

/// Available rewrites. The density of every member is unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    /// `Z [h + w^T f]^(1/(a-1))` as `[1 - 1 + Z^(a-1) h + Z^(a-1) w^T f]^(1/(a-1))`.
    MalphaToBalpha,
    /// Absorb `F` as a weight on the constant statistic, with `Z = 1`.
    BalphaToMalphaShifted,
    /// Factor `F` out: `Z = F^(1/(a-1))`, weights `(1/F, w/F)` on `(h, f)`. Needs `F > 0`.
    BalphaToMalphaScaled,
    /// `E^(a)` is `M^(2-a)` with the same entities.
    EalphaToMalpha,
    /// `M^(a)` is `E^(2-a)` with the same entities.
    MalphaToEalpha,
}

fn prepend(first: f64, rest: Vec<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(rest.len() + 1);
    v.push(first);
    v.extend(rest);
    v
}

/// Applies a conversion. `probes` are parameters at which preconditions are checked.
pub fn convert(spec: &PowerLawFamilySpec, conv: Conversion, probes: &[Vec<f64>]) -> Result<PowerLawFamilySpec> {
    let need = |k: FamilyKind| -> Result<()> {
        if spec.kind != k {
            return Err(Error::Conversion(format!("{conv:?} needs a {k:?} family, got {:?}", spec.kind)));
        }
        Ok(())
    };
    let a = spec.alpha;
    let mut out = spec.clone();
    match conv {
        Conversion::MalphaToBalpha => {
            need(FamilyKind::Malpha)?;
            let (h, f, w, z) = (spec.h.clone(), spec.f.clone(), spec.w.clone(), spec.normalizer.clone());
            out.kind = FamilyKind::Balpha;
            out.stat_dim = spec.stat_dim + 1;
            out.h = Arc::new(|_: &[f64]| 1.0);
            out.f = Arc::new(move |x: &[f64]| prepend(h(x), f(x)));
            out.w = Arc::new(move |t: &[f64]| {
                let c = z(t).powf(a - 1.0);
                prepend(c, w(t).into_iter().map(|v| c * v).collect())
            });
            out.normalizer = Arc::new(|_: &[f64]| -1.0);
        }
        Conversion::BalphaToMalphaShifted => {
            need(FamilyKind::Balpha)?;
            let (f, w, big_f) = (spec.f.clone(), spec.w.clone(), spec.normalizer.clone());
            out.kind = FamilyKind::Malpha;
            out.stat_dim = spec.stat_dim + 1;
            out.f = Arc::new(move |x: &[f64]| prepend(1.0, f(x)));
            out.w = Arc::new(move |t: &[f64]| prepend(big_f(t), w(t)));
            out.normalizer = Arc::new(|_: &[f64]| 1.0);
        }
        Conversion::BalphaToMalphaScaled => {
            need(FamilyKind::Balpha)?;
            for t in probes {
                let v = (spec.normalizer)(t);
                if !(v > 0.0) {
                    return Err(Error::Conversion(format!("F({t:?}) = {v} is not positive")));
                }
            }
            let (h, f, w, big_f) = (spec.h.clone(), spec.f.clone(), spec.w.clone(), spec.normalizer.clone());
            let big_f2 = big_f.clone();
            out.kind = FamilyKind::Malpha;
            out.stat_dim = spec.stat_dim + 1;
            out.h = Arc::new(|_: &[f64]| 1.0);
            out.f = Arc::new(move |x: &[f64]| prepend(h(x), f(x)));
            out.w = Arc::new(move |t: &[f64]| {
                let c = big_f(t);
                prepend(1.0 / c, w(t).into_iter().map(|v| v / c).collect())
            });
            out.normalizer = Arc::new(move |t: &[f64]| {
                let c = big_f2(t);
                if c > 0.0 {
                    c.powf(1.0 / (a - 1.0))
                } else {
                    f64::NAN
                }
            });
        }
        Conversion::EalphaToMalpha => {
            need(FamilyKind::Ealpha)?;
            out.kind = FamilyKind::Malpha;
            out.alpha = 2.0 - a;
        }
        Conversion::MalphaToEalpha => {
            need(FamilyKind::Malpha)?;
            out.kind = FamilyKind::Ealpha;
            out.alpha = 2.0 - a;
        }
    }
    out.name = format!("{} via {conv:?}", spec.name);
    Ok(out)
}

/// Maps an `E^(a)` family to the `M^(1/a)` family of its `a`-escorts.
///
/// The exponential family (order one) maps to itself.
pub fn escort_family_map(spec: &PowerLawFamilySpec) -> Result<PowerLawFamilySpec> {
    match spec.kind {
        FamilyKind::Exponential => Ok(spec.clone()),
        FamilyKind::Ealpha => {
            let a = spec.alpha;
            if a == 0.0 {
                return Err(Error::Domain("escort order must be non-zero".into()));
            }
            let base = Arc::new(spec.clone());
            let mut out = spec.clone();
            out.kind = FamilyKind::Malpha;
            out.alpha = 1.0 / a;
            out.name = format!("escort of {}", spec.name);
            out.normalizer = Arc::new(move |t: &[f64]| {
                let z = (base.normalizer)(t);
                match base.power_integral(t, a) {
                    Ok(m) if m > 0.0 => z.powf(a) / m,
                    _ => f64::NAN,
                }
            });
            Ok(out)
        }
        k => Err(Error::Conversion(format!("escort map is defined on E-form families, got {k:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{student_balpha_spec, student_ealpha_spec, student_malpha_spec, student_location_balpha_spec};
    use nalgebra::DMatrix;

    fn theta2() -> Vec<f64> {
        crate::families::pack_theta(&[0.2, -0.3], &DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 0.6]))
    }

    fn pts() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [0.4, -0.5], [-0.7, 0.3], [1.1, 0.9]]
    }

    #[test]
    fn round_trips_preserve_density() {
        let t = theta2();
        let m = student_malpha_spec(2, 0.8).unwrap();
        let b = student_balpha_spec(2, 0.8).unwrap();
        let mb = convert(&m, Conversion::MalphaToBalpha, &[]).unwrap();
        let bm1 = convert(&b, Conversion::BalphaToMalphaShifted, &[]).unwrap();
        let e = convert(&m, Conversion::MalphaToEalpha, &[]).unwrap();
        let em = convert(&e, Conversion::EalphaToMalpha, &[]).unwrap();
        for x in pts() {
            let want = m.eval_density(&t, &x).unwrap();
            for s in [&mb, &bm1, &e, &em] {
                let got = s.eval_density(&t, &x).unwrap();
                assert!((got - want).abs() < 1e-10 * (1.0 + want), "{}", s.name);
            }
        }
        assert_eq!(e.alpha, 1.2);
        assert_eq!(mb.stat_dim, m.stat_dim + 1);
    }

    #[test]
    fn scaled_route_needs_positive_f() {
        // For the location family F = c mu^2 >= 0, so it fails at mu = 0 and works elsewhere.
        let b = student_location_balpha_spec(0.8, 1.0).unwrap();
        assert!(matches!(convert(&b, Conversion::BalphaToMalphaScaled, &[vec![0.0]]), Err(Error::Conversion(_))));
        let s = convert(&b, Conversion::BalphaToMalphaScaled, &[vec![0.5]]).unwrap();
        for x in [-1.0, 0.2, 1.4] {
            let want = b.eval_density(&[0.5], &[x]).unwrap();
            assert!((s.eval_density(&[0.5], &[x]).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_source_kind_is_rejected() {
        let b = student_balpha_spec(1, 0.8).unwrap();
        assert!(convert(&b, Conversion::MalphaToBalpha, &[]).is_err());
        assert!(escort_family_map(&b).is_err());
    }

    #[test]
    fn escort_map_matches_numerical_escort() {
        let e = student_ealpha_spec(1, 0.8).unwrap();
        let m = escort_family_map(&e).unwrap();
        let a = e.alpha;
        let t = [0.3, 1.4];
        let z = e.power_integral(&t, a).unwrap();
        for x in [-2.0, 0.0, 0.3, 1.0, 5.0] {
            let want = e.eval_density(&t, &[x]).unwrap().powf(a) / z;
            assert!((m.eval_density(&t, &[x]).unwrap() - want).abs() < 1e-12);
        }
        assert!((m.alpha - 1.0 / a).abs() < 1e-15);
    }
}
