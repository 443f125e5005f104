use std::path::Path;

use mindiv::divergences::{divergence as eval_divergence, DivergenceKind};
use mindiv::estimators::{
    hellinger_estimator_cauchy, hellinger_estimator_cauchy_kde, maximize_likelihood, solve_projection_equations, student_moment_estimator, Data,
    EstimateReport, Method,
};
use mindiv::families::{
    nu_of_alpha, student_balpha_spec, student_ealpha_spec, theta_names, CauchyFamily, GaussianFamily, ParametricFamily, StudentFamily,
};
use mindiv::kde::UniformKde;
use mindiv::piecewise::{global_maximizer, hellinger_cauchy_low_beta, mixture_sample};
use mindiv::prob::{DiscreteDistribution, Sample};
use mindiv::projection::{forward_projection, pythagorean_gap, LinearFamilySpec};
use mindiv::report::{envelope, num, nums, value};
use mindiv::simulate::{sample_mixture_with, stream_rng, MixtureSpec, GENERATOR};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::input::{read_distribution, read_json, read_replicates, read_sample};
use crate::{CliError, EstimateArgs};

pub fn divergence(p: &Path, q: &Path, kind: DivergenceKind, alpha: Option<f64>) -> Result<Value, CliError> {
    let (p, q) = (read_distribution(p)?, read_distribution(q)?);
    let alpha = match (kind, alpha) {
        (DivergenceKind::Kl, a) => a.unwrap_or(1.0),
        (_, Some(a)) => a,
        (_, None) => return Err(CliError::Usage(format!("--alpha is required for {kind:?}"))),
    };
    if kind == DivergenceKind::Kl && alpha != 1.0 {
        return Err(CliError::Usage("the KL divergence takes no order other than 1".into()));
    }
    if kind != DivergenceKind::Kl && alpha == 1.0 {
        return Err(CliError::Usage("order 1 is the KL divergence; use --kind kl".into()));
    }
    let v = eval_divergence(kind, &p, &q, alpha)?;
    Ok(envelope("divergence", json!({ "kind": kind, "alpha": num(alpha), "value": num(v) })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Constraints {
    functions: Vec<Vec<f64>>,
    constants: Vec<f64>,
}

/// Members of `L` used to check `B(p, q) = B(p, p*) + B(p*, q)`: LP vertices
/// along each coordinate direction and their centroid.
fn family_points(l: &LinearFamilySpec, n: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[i] = s;
            if let Ok(v) = l.vertex(&c) {
                if !pts.iter().any(|p| p.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12)) {
                    pts.push(v);
                }
            }
        }
    }
    if pts.len() > 1 {
        let m = pts.len() as f64;
        pts.push((0..n).map(|x| pts.iter().map(|p| p[x]).sum::<f64>() / m).collect());
    }
    pts
}

pub fn project(q: &Path, constraints: &Path, alpha: f64) -> Result<Value, CliError> {
    let q = read_distribution(q)?;
    let c: Constraints = read_json(constraints)?;
    let l = LinearFamilySpec::new(c.functions, c.constants)?;
    let r = forward_projection(&q, &l, alpha)?;
    let mut gaps = Vec::new();
    for p in family_points(&l, q.len()) {
        let w: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = w.iter().sum();
        let pd = DiscreteDistribution::new(q.labels().to_vec(), w.iter().map(|v| v / total).collect())?;
        let gap = pythagorean_gap(&pd, &r.p_star, &q, alpha)?;
        gaps.push(json!({ "p": nums(pd.weights()), "gap": num(gap) }));
    }
    Ok(envelope(
        "project",
        json!({
            "alpha": num(alpha),
            "labels": q.labels(),
            "p_star": nums(r.p_star.weights()),
            "theta": nums(&r.dual_theta),
            "F": num(r.dual_f),
            "active_zero_set": r.active_zero_set,
            "kkt_residual": num(r.kkt_residual),
            "iterations": r.iterations,
            "gap_samples": gaps,
        }),
    ))
}

/// Family descriptor. `mu` and `sigma` (shape matrix) are optional starting values.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    mu: Option<Vec<f64>>,
    sigma: Option<Vec<Vec<f64>>>,
}

fn start_theta(fam: &FamilyFile, s: &Sample, scale: f64) -> Result<Vec<f64>, CliError> {
    let d = s.dim();
    let mean = s.mean();
    let m2 = s.second_moment();
    let mu = fam.mu.clone().unwrap_or_else(|| mean.clone());
    if mu.len() != d {
        return Err(CliError::Data(format!("descriptor mu has length {}, sample dimension is {d}", mu.len())));
    }
    let mut t = mu;
    for i in 0..d {
        for j in i..d {
            t.push(match &fam.sigma {
                Some(rows) => *rows
                    .get(i)
                    .and_then(|r| r.get(j))
                    .ok_or_else(|| CliError::Data(format!("descriptor sigma must be {d} x {d}")))?,
                None => scale * (m2[(i, j)] - mean[i] * mean[j]),
            });
        }
    }
    Ok(t)
}

fn required(v: Option<f64>, what: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{what} is required (flag or descriptor)")))
}

fn likelihood_order(method: Method, alpha: Option<f64>) -> Result<f64, CliError> {
    match method {
        Method::Mle => Ok(1.0),
        _ => required(alpha, "--alpha"),
    }
}

fn named(mut r: EstimateReport, names: Vec<String>) -> EstimateReport {
    r.theta_names = names;
    r
}

fn fit(
    method: Method,
    family: &dyn ParametricFamily,
    s: &Sample,
    alpha: f64,
    theta0: &[f64],
) -> Result<EstimateReport, CliError> {
    let kde = (method == Method::Hellinger).then(|| UniformKde::new(s));
    Ok(maximize_likelihood(method.likelihood(), family, s, kde.as_ref(), alpha, theta0)?)
}

pub fn estimate(args: &EstimateArgs) -> Result<Value, CliError> {
    let fam: FamilyFile = read_json(&args.family)?;
    let mut v = if args.replicates {
        let groups = read_replicates(&args.sample)?;
        let mut fits = Vec::with_capacity(groups.len());
        for (id, s) in &groups {
            let mut body = fit_sample(args, &fam, s)?;
            body["replicate"] = json!(id);
            body["n"] = json!(s.n());
            fits.push(body);
        }
        let dim = groups[0].1.dim();
        let mut v = envelope("estimate", json!({ "replicates": fits }));
        v["dim"] = json!(dim);
        v
    } else {
        let s = read_sample(&args.sample)?;
        let mut v = envelope("estimate", fit_sample(args, &fam, &s)?);
        v["n"] = json!(s.n());
        v["dim"] = json!(s.dim());
        v
    };
    v["family"] = json!(fam.kind);
    if let Some(seed) = args.seed {
        v["seed"] = json!(seed);
    }
    Ok(v)
}

fn fit_sample(args: &EstimateArgs, fam: &FamilyFile, s: &Sample) -> Result<Value, CliError> {
    let d = s.dim();
    let quad = args.quad.settings()?;
    let body = match fam.kind.as_str() {
        "student" => {
            let alpha = required(args.alpha.or(fam.alpha), "alpha")?;
            if alpha > 1.0 {
                return Err(CliError::Usage(format!(
                    "a Student family with order {alpha} > 1 has a parameter-dependent bounded support, so the \
                     estimating equations do not apply; use `mindiv appendix-c --alpha {alpha}` for the exact \
                     piecewise maximizer in one dimension"
                )));
            }
            let nu = nu_of_alpha(alpha, d);
            let theta0 = start_theta(fam, s, if nu > 2.0 { (nu - 2.0) / nu } else { 1.0 })?;
            let family = StudentFamily::new(d, alpha)?;
            let rep = match args.method {
                Method::Basu | Method::Jones if args.equations => {
                    let spec = student_balpha_spec(d, alpha)?.with_quad(quad);
                    solve_projection_equations(args.method, &spec, Data::Sample(s), &theta0, None)?
                }
                Method::Basu | Method::Jones => {
                    let mut r = student_moment_estimator(s, alpha)?;
                    r.method = args.method;
                    r
                }
                Method::Hellinger => {
                    let kde = UniformKde::new(s);
                    let spec = student_ealpha_spec(d, alpha)?.with_quad(quad);
                    solve_projection_equations(Method::Hellinger, &spec, Data::Kde(&kde), &theta0, None)?
                }
                Method::Mle => named(fit(Method::Mle, &family, s, alpha, &theta0)?, theta_names(d)),
            };
            value(&rep)?
        }
        "cauchy" => {
            let beta = required(args.beta.or(fam.beta), "beta")?;
            match args.method {
                Method::Hellinger if beta > 1.0 && args.equations => {
                    value(&hellinger_estimator_cauchy_kde(&UniformKde::new(s), beta)?)?
                }
                Method::Hellinger if beta > 1.0 => value(&hellinger_estimator_cauchy(s, beta)?)?,
                Method::Hellinger if beta < 1.0 => {
                    if d != 1 {
                        return Err(CliError::Usage("the Cauchy fit with beta below one is one-dimensional".into()));
                    }
                    let sigma = required(args.sigma, "--sigma")?;
                    let r = hellinger_cauchy_low_beta(&UniformKde::new(s), beta, sigma)?;
                    let mut v = value(&r)?;
                    v["method"] = json!(Method::Hellinger);
                    v["order"] = num(beta);
                    v
                }
                m => {
                    let alpha = likelihood_order(m, args.alpha)?;
                    let family = CauchyFamily::new(d, beta)?;
                    value(&named(fit(m, &family, s, alpha, &start_theta(fam, s, 1.0)?)?, theta_names(d)))?
                }
            }
        }
        "gaussian" => {
            if d != 1 {
                return Err(CliError::Usage("the Gaussian family is one-dimensional".into()));
            }
            let alpha = likelihood_order(args.method, args.alpha)?;
            let r = fit(args.method, &GaussianFamily, s, alpha, &start_theta(fam, s, 1.0)?)?;
            value(&named(r, vec!["mu".into(), "variance".into()]))?
        }
        other => return Err(CliError::Usage(format!("unknown family kind '{other}'"))),
    };
    Ok(body)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    mixture: MixtureSpec,
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    replicates: usize,
}

fn one() -> usize {
    1
}

pub fn simulate(config: &Path, samples: &Path, seed: Option<u64>) -> Result<Value, CliError> {
    let cfg: SimulateConfig = read_json(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    if cfg.replicates == 0 {
        return Err(CliError::Usage("replicates must be positive".into()));
    }
    let d = cfg.mixture.inlier.dim();
    let mut w = csv::Writer::from_path(samples).map_err(|e| CliError::Data(format!("{}: {e}", samples.display())))?;
    let io = |e: csv::Error| CliError::Data(format!("{}: {e}", samples.display()));
    let many = cfg.replicates > 1;
    let mut header: Vec<String> = if many { vec!["replicate".into()] } else { vec![] };
    header.extend((1..=d).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(io)?;
    let mut outliers = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates {
        let l = sample_mixture_with(&cfg.mixture, cfg.n, &mut stream_rng(seed, r as u64))?;
        for row in l.sample.rows() {
            let mut rec: Vec<String> = if many { vec![r.to_string()] } else { vec![] };
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(io)?;
        }
        outliers.push(l.outlier.iter().filter(|f| **f).count());
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", samples.display())))?;
    Ok(envelope(
        "simulate",
        json!({
            "generator": GENERATOR,
            "library_version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "n": cfg.n,
            "dim": d,
            "replicates": cfg.replicates,
            "mixture": value(&cfg.mixture)?,
            "samples": samples.display().to_string(),
            "outlier_counts": outliers,
        }),
    ))
}

pub fn appendix_c(sample: Option<&Path>, alpha: f64, sigma: f64) -> Result<Value, CliError> {
    let s = match sample {
        Some(p) => read_sample(p)?,
        None => mixture_sample(),
    };
    if s.dim() != 1 {
        return Err(CliError::Data(format!("expected one column, found {}", s.dim())));
    }
    let g = global_maximizer(&s, alpha, sigma)?;
    let locals: Vec<Value> = g
        .local
        .iter()
        .map(|l| {
            json!({
                "mu": num(l.mu),
                "likelihood": num(l.likelihood),
                "interval": nums(&[l.piece.lo, l.piece.hi]),
                "active": [l.piece.k, l.piece.j],
            })
        })
        .collect();
    Ok(envelope(
        "appendix-c",
        json!({
            "alpha": num(alpha),
            "sigma": num(sigma),
            "half_width": num(g.decomposition.half_width),
            "local_maximizers": locals,
            "global": { "mu": num(g.mu_hat), "likelihood": num(g.likelihood) },
            "sample_mean": num(g.sample_mean),
        }),
    ))
}
