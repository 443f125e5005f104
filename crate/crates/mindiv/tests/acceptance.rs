//! Acceptance suite: one line per criterion. Run with `cargo test --test acceptance`.
//!
//! A criterion listed in `KNOWN_RED` is reported as FAIL but does not fail the
//! run; its failure is checked to be exactly the documented one instead.

use std::sync::Arc;
use std::time::{Duration, Instant};

use mindiv::divergences::{divergence, kl, l1_likelihood, l1_limit, l2_likelihood, l3_likelihood, log_likelihood, DivergenceKind, Likelihood};
use mindiv::estimators::{
    estimating_residual, hellinger_estimator_cauchy, hellinger_estimator_cauchy_kde, kde_correction, maximize_likelihood,
    native_form, student_moment_estimator, Data, Method, Reduction,
};
use mindiv::families::{
    cauchy_ealpha_spec, student_balpha_spec, CauchyFamily, CauchyParams, GaussianFamily, ParametricFamily, StudentFamily,
    StudentParams,
};
use mindiv::kde::{KdeRegime, UniformKde};
use mindiv::optim::golden_section;
use mindiv::piecewise::{global_maximizer, mixture_sample};
use mindiv::prob::{escort_weights, DiscreteDistribution, Sample};
use mindiv::projection::{
    forward_projection, pythagorean_gap, reverse_projection_via_forward, support_condition_check, CanonicalBalphaFamily,
    LinearFamilySpec,
};
use mindiv::quad::gauss_legendre;
use mindiv::simulate::{sample_mixture, Component, MixtureSpec};
use mindiv::suffstat::{
    canonical_statistic, factorization_check, minimality_check, moment_matched_partner, FixedTail, SufficiencySpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

/// Criteria whose published numbers cannot all be reproduced.
const KNOWN_RED: &[usize] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g = Gamma::new(1.0, 1.0).unwrap();
    let v: Vec<f64> = (0..n).map(|_| g.sample(rng) + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn dd(w: Vec<f64>) -> DiscreteDistribution {
    DiscreteDistribution::from_weights(w).unwrap()
}

const FIRST_BLOCK: [f64; 16] = [
    -3.4122, -3.2958, -2.5597, -2.4701, -1.7655, -1.7649, -1.6926, -1.6052, -1.4828, -1.4341, -1.3124, -1.0967,
    -0.7988, -0.7010, -0.5420, 0.3674,
];
const SINGLE_PIECES: [f64; 15] = [
    0.5074, 1.0600, 1.1764, 1.9125, 2.0021, 2.7067, 2.7073, 2.7796, 2.8670, 2.9894, 3.0389, 3.1598, 3.3755, 3.6734,
    3.7712,
];
const SECOND_BLOCK: [f64; 4] = [8.4893, 9.6878, 10.7150, 10.8862];
const TAIL: [f64; 3] = [12.1766, 12.9615, 15.0055];

fn c1_golden() -> Outcome {
    let start = Instant::now();
    let g = global_maximizer(&mixture_sample(), 2.0, 1.0).unwrap();
    let elapsed = start.elapsed();
    let published: Vec<f64> =
        FIRST_BLOCK.iter().chain(&SINGLE_PIECES).chain(&SECOND_BLOCK).chain(&TAIL).copied().collect();
    let mut misses = Vec::new();
    if g.local.len() != published.len() {
        misses.push(format!("{} local maximizers, expected {}", g.local.len(), published.len()));
    }
    for (l, p) in g.local.iter().zip(&published) {
        if (l.mu - p).abs() > 1e-4 {
            misses.push(format!("local {:.4} vs {p:.4}", l.mu));
        }
    }
    if (g.mu_hat - 0.3674).abs() > 1e-4 {
        misses.push(format!("global {:.4}", g.mu_hat));
    }
    if (g.sample_mean - 1.2940).abs() > 1e-4 {
        misses.push(format!("sample mean {:.5} vs 1.2940", g.sample_mean));
    }
    if elapsed > Duration::from_secs(1) {
        misses.push(format!("runtime {elapsed:?}"));
    }
    let detail = format!(
        "global {:.4}, {}/{} locals within 1e-4, {:?}{}",
        g.mu_hat,
        g.local.iter().zip(&published).filter(|(l, p)| (l.mu - **p).abs() <= 1e-4).count(),
        published.len(),
        elapsed,
        if misses.is_empty() { String::new() } else { format!("; mismatches: {}", misses.join(", ")) }
    );
    outcome(misses.is_empty(), detail)
}

/// The exact shape of the criterion-1 failure: two printed numbers disagree
/// with the printed sample, everything else matches.
fn c1_failure_is_documented() -> bool {
    let g = global_maximizer(&mixture_sample(), 2.0, 1.0).unwrap();
    let published: Vec<f64> =
        FIRST_BLOCK.iter().chain(&SINGLE_PIECES).chain(&SECOND_BLOCK).chain(&TAIL).copied().collect();
    let bad: Vec<usize> = (0..published.len()).filter(|&i| (g.local[i].mu - published[i]).abs() > 1e-4).collect();
    bad == vec![26]
        && (g.local[26].mu - (0.8020 + 5f64.sqrt())).abs() < 1e-12
        && (g.sample_mean - 2.55294).abs() < 1e-12
        && (g.mu_hat - 0.3674).abs() < 1e-4
}

fn example_l() -> LinearFamilySpec {
    LinearFamilySpec::new(vec![vec![1.0, -3.0, -5.0, -6.0]], vec![0.0]).unwrap()
}

fn c2_example_a1() -> Outcome {
    let u = DiscreteDistribution::uniform(4).unwrap();
    let r = forward_projection(&u, &example_l(), 2.0).unwrap();
    let want = [0.75, 0.25, 0.0, 0.0];
    let err = r.p_star.weights().iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let p = dd(vec![471.0 / 600.0, 97.0 / 600.0, 12.0 / 600.0, 20.0 / 600.0]);
    let gap = pythagorean_gap(&p, &r.p_star, &u, 2.0).unwrap();
    outcome(err <= 1e-8 && gap > 1e-6, format!("p* error {err:.1e}, gap {gap:.6e}"))
}

fn c3_example_a2() -> Outcome {
    let u = DiscreteDistribution::uniform(4).unwrap();
    let fam = CanonicalBalphaFamily::new(u, vec![vec![1.0, -3.0, -5.0, -6.0]], 2.0).unwrap();
    let (lo, hi) = fam.parameter_interval().unwrap();
    let c = fam.closure_intersection(&example_l()).unwrap();
    let err = (c.theta[0] - 13.0 / 115.0).abs();
    let interval_ok = (lo + 1.0 / 17.0).abs() < 1e-12 && (hi - 1.0 / 11.0).abs() < 1e-12;
    outcome(
        err <= 1e-12 && !c.in_closure && interval_ok,
        format!("theta error {err:.1e}, interval ({lo:.6}, {hi:.6}), closure meets L: {}", c.in_closure),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> (DiscreteDistribution, LinearFamilySpec) {
    let n = rng.random_range(3..=8);
    let k = rng.random_range(1..=3usize).min(n - 1);
    let mut p0 = dirichlet(rng, n);
    let mut functions = Vec::new();
    // Some instances force atoms to zero, so Supp(L) is a proper subset.
    if n > 3 && rng.random_bool(0.3) {
        let z = rng.random_range(0..n);
        p0[z] = 0.0;
        let s: f64 = p0.iter().sum();
        p0.iter_mut().for_each(|v| *v /= s);
        functions.push((0..n).map(|i| if i == z { 1.0 } else { 0.0 }).collect());
    }
    while functions.len() < k {
        functions.push((0..n).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>());
    }
    let l = LinearFamilySpec::through(functions, &p0).unwrap();
    (dd(dirichlet(rng, n)), l)
}

fn c4_pythagorean() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let alphas = [0.3, 0.5, 0.8];
    let (mut worst, mut support_bad, mut proper, mut errors) = (0.0f64, 0, 0, 0);
    for inst in 0..200 {
        let alpha = alphas[inst % 3];
        let (q, l) = random_instance(&mut rng);
        let n = q.len();
        let r = match forward_projection(&q, &l, alpha) {
            Ok(r) => r,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        if !support_condition_check(&r, &l).unwrap() {
            support_bad += 1;
        }
        if l.support(n).unwrap().len() < n {
            proper += 1;
        }
        let verts: Vec<Vec<f64>> =
            (0..8).map(|_| l.vertex(&(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap()).collect();
        for _ in 0..100 {
            let w = dirichlet(&mut rng, verts.len());
            let p: Vec<f64> = (0..n).map(|i| verts.iter().zip(&w).map(|(v, c)| c * v[i]).sum::<f64>().max(0.0)).collect();
            let s: f64 = p.iter().sum();
            let p = dd(p.into_iter().map(|v| v / s).collect());
            let gap = pythagorean_gap(&p, &r.p_star, &q, alpha).unwrap();
            worst = worst.max(gap.abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && support_bad == 0 && errors == 0 && elapsed < Duration::from_secs(30),
        format!(
            "max |gap| {worst:.1e}, support mismatches {support_bad}, solver errors {errors}, {proper} instances with restricted support, {elapsed:.2?}"
        ),
    )
}

fn brute_force_theta(fam: &CanonicalBalphaFamily, pn: &DiscreteDistribution) -> f64 {
    let obj = |t: f64| match fam.member(&[t]) {
        Ok(m) => divergence(DivergenceKind::DensityPower, pn, &m, fam.alpha).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };
    let mut r = 1.0;
    loop {
        let grid: Vec<f64> = (0..=400).map(|i| -r + 2.0 * r * i as f64 / 400.0).collect();
        let (i, _) = grid.iter().enumerate().map(|(i, &t)| (i, obj(t))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if i > 0 && i < 400 {
            return golden_section(obj, grid[i - 1], grid[i + 1], 1e-12).0;
        }
        r *= 2.0;
    }
}

fn c5_reverse_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(4..=6);
        let q = dd(dirichlet(&mut rng, n));
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fam = CanonicalBalphaFamily::new(q, vec![f], 0.6).unwrap();
        let pn = dd(dirichlet(&mut rng, n));
        let rev = reverse_projection_via_forward(&pn, &fam).unwrap();
        let bf = brute_force_theta(&fam, &pn);
        worst = worst.max((rev.theta[0] - bf).abs());
    }
    outcome(worst <= 1e-6, format!("max |theta - brute force| {worst:.1e} over 50 families"))
}

fn student_sample(d: usize, alpha: f64, n: usize, seed: u64) -> Sample {
    let sigma: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 + 0.3 * i as f64 } else { 0.25 }).collect()).collect();
    let mu: Vec<f64> = (0..d).map(|i| 0.5 - i as f64).collect();
    sample_mixture(&MixtureSpec::pure(Component::Student { alpha, mu, sigma }), n, seed).unwrap()
}

fn c6_estimating_equations() -> Outcome {
    // Reduced Basu residual on B versus reduced Jones residual on the shifted M form.
    let mut worst_eq = 0.0f64;
    for d in [1, 2] {
        let spec = student_balpha_spec(d, 0.9).unwrap();
        let m = native_form(&spec, Method::Jones).unwrap();
        let s = student_sample(d, 0.9, 60, 3 + d as u64);
        let grid: Vec<Vec<f64>> = if d == 1 {
            vec![vec![-0.5, 0.7], vec![0.0, 1.0], vec![0.4, 1.6], vec![1.2, 0.5], vec![-1.0, 2.5]]
        } else {
            vec![vec![0.0, 0.0, 1.0, 0.1, 1.0], vec![0.5, -0.3, 1.5, -0.2, 0.8], vec![-0.4, 0.6, 0.7, 0.0, 2.0]]
        };
        for t in &grid {
            let b = estimating_residual(Method::Basu, &spec, t, Data::Sample(&s), Reduction::Reduced).unwrap();
            let j = estimating_residual(Method::Jones, &m, t, Data::Sample(&s), Reduction::Reduced).unwrap();
            worst_eq = worst_eq.max(j[0].abs());
            for (x, y) in b.iter().zip(&j[1..]) {
                worst_eq = worst_eq.max((x - y).abs());
            }
        }
    }
    // Numerical L2 and L3 maximization against the closed form.
    let mut worst_fit = 0.0f64;
    for d in [1, 2] {
        let s = student_sample(d, 0.9, 500, 40 + d as u64);
        let closed = student_moment_estimator(&s, 0.9).unwrap();
        let fam = StudentFamily::new(d, 0.9).unwrap();
        let mut start = vec![0.0; d];
        for i in 0..d {
            for j in i..d {
                start.push(if i == j { 1.0 } else { 0.0 });
            }
        }
        for lik in [Likelihood::L2, Likelihood::L3] {
            let r = maximize_likelihood(lik, &fam, &s, None, 0.9, &start).unwrap();
            for (a, b) in r.theta_hat.iter().zip(&closed.theta_hat) {
                worst_fit = worst_fit.max((a - b).abs());
            }
        }
    }
    outcome(
        worst_eq <= 1e-8 && worst_fit <= 1e-3,
        format!("Basu vs Jones residual gap {worst_eq:.1e}; L2/L3 maximizers vs closed form {worst_fit:.1e}"),
    )
}

/// Points on a jittered lattice: no two boxes of the uniform kernel overlap.
fn disjoint_sample(d: usize, n_side: usize, spacing: f64, rng: &mut ChaCha8Rng) -> Sample {
    let n = n_side.pow(d as u32);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|mut i| {
            (0..d)
                .map(|_| {
                    let k = i % n_side;
                    i /= n_side;
                    spacing * (k as f64 - 0.5 * n_side as f64) + rng.random_range(-0.1..0.1)
                })
                .collect()
        })
        .collect();
    Sample::from_rows(&rows).unwrap()
}

fn c7_cauchy_hellinger() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut route, mut eps_err, mut quad_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut regimes = Vec::new();
    for (d, beta, n_side) in [(1, 1.5, 30), (2, 1.5, 6)] {
        let s = disjoint_sample(d, n_side, 1.0, &mut rng);
        let kde = UniformKde::new(&s);
        regimes.push(kde.regime());
        let a = hellinger_estimator_cauchy(&s, beta).unwrap();
        let b = hellinger_estimator_cauchy_kde(&kde, beta).unwrap();
        for (x, y) in a.theta_hat.iter().zip(&b.theta_hat) {
            route = route.max((x - y).abs());
        }
        let n = s.n() as f64;
        let eps = a.extras["epsilon_n"][0];
        eps_err = eps_err.max((eps - 1.0 / (3.0 * n.powf(1.0 / d as f64))).abs() / eps);
        eps_err = eps_err.max((kde_correction(s.n(), d) - kde.bandwidth().powi(2) / 3.0).abs() / eps);
        let raw = s.second_moment();
        for j in 0..d {
            let q = kde.integrate_powered(1.0, 4, |x| x[j] * x[j]).unwrap();
            quad_err = quad_err.max((q - raw[(j, j)] - eps).abs());
        }
    }
    let disjoint = regimes.iter().all(|r| *r == KdeRegime::Disjoint);
    outcome(
        route <= 1e-8 && eps_err <= 1e-15 && quad_err <= 1e-8 && disjoint,
        format!("closed form vs KDE route {route:.1e}, eps_n rel error {eps_err:.1e}, quadrature correction error {quad_err:.1e}, regimes {regimes:?}"),
    )
}

fn c8_escort_identities() -> Outcome {
    let mut worst = 0.0f64;
    let rule = gauss_legendre(256);
    for alpha in [0.8, 2.0, 3.0] {
        let st = StudentParams::new(vec![0.3], DMatrix::from_element(1, 1, 1.7), alpha).unwrap();
        let ca = CauchyParams::new(vec![0.3], DMatrix::from_element(1, 1, 1.7), 1.0 / alpha).unwrap();
        let mass = st.power_integral(alpha).unwrap();
        let half = if alpha > 1.0 { (-st.nu() * 1.7).sqrt() } else { 12.0 };
        for (x, _) in rule.nodes.iter().zip(&rule.weights) {
            let y = [0.3 + half * x];
            let e = st.density(&y).powf(alpha) / mass;
            let c = ca.density(&y);
            worst = worst.max((e - c).abs() / c.abs().max(1.0));
        }
    }
    // Two dimensions on a 16 x 16 grid.
    let sig = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.6]);
    let st = StudentParams::new(vec![0.0, 1.0], sig.clone(), 0.8).unwrap();
    let ca = CauchyParams::new(vec![0.0, 1.0], sig, 1.25).unwrap();
    let mass = st.power_integral(0.8).unwrap();
    let r16 = gauss_legendre(16);
    for a in &r16.nodes {
        for b in &r16.nodes {
            let y = [5.0 * a, 1.0 + 5.0 * b];
            let c = ca.density(&y);
            worst = worst.max((st.density(&y).powf(0.8) / mass - c).abs() / c.max(1.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut algebra = 0.0f64;
    for _ in 0..200 {
        let len = rng.random_range(2..10);
        let p = dirichlet(&mut rng, len);
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if a.abs() < 0.05 || b.abs() < 0.05 {
            continue;
        }
        let lhs = escort_weights(&escort_weights(&p, a).unwrap(), b).unwrap();
        let rhs = escort_weights(&p, a * b).unwrap();
        for (x, y) in lhs.iter().zip(&rhs) {
            algebra = algebra.max((x - y).abs());
        }
    }
    outcome(worst <= 1e-10 && algebra <= 1e-12, format!("escort vs Cauchy {worst:.1e}; escort algebra {algebra:.1e}"))
}

fn c9_continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_div = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..8);
        let (p, q) = (dd(dirichlet(&mut rng, n)), dd(dirichlet(&mut rng, n)));
        let k = kl(&p, &q).unwrap();
        for kind in [DivergenceKind::Renyi, DivergenceKind::DensityPower, DivergenceKind::LogDensityPower] {
            for a in [1.0 - 1e-3, 1.0 + 1e-3] {
                let v = divergence(kind, &p, &q, a).unwrap();
                worst_div = worst_div.max((v - k).abs() / (1.0 + k));
            }
        }
    }
    let s = sample_mixture(&MixtureSpec::pure(Component::Normal { mean: vec![0.4], cov: vec![vec![0.5]] }), 2000, 10).unwrap();
    let est = student_moment_estimator(&s, 0.999).unwrap();
    let m = s.mean()[0];
    let mle = [m, s.second_moment()[(0, 0)] - m * m];
    let worst_est = est.theta_hat.iter().zip(&mle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let g = GaussianFamily;
    let theta = [0.3, 0.6];
    let sm = Sample::from_rows(&s.rows().take(200).map(<[f64]>::to_vec).collect::<Vec<_>>()).unwrap();
    let kde = UniformKde::new(&sm);
    let l = log_likelihood(&g, &theta, &sm).unwrap();
    let lim = l1_limit(&g, &theta, &kde).unwrap();
    let mut worst_lik = 0.0f64;
    for a in [1.0 - 1e-3, 1.0 + 1e-3] {
        worst_lik = worst_lik.max((l2_likelihood(&g, &theta, &sm, a).unwrap() - l).abs());
        worst_lik = worst_lik.max((l3_likelihood(&g, &theta, &sm, a).unwrap() - l).abs());
        worst_lik = worst_lik.max((l1_likelihood(&g, &theta, &kde, a).unwrap() - lim).abs());
    }
    outcome(
        worst_div <= 1e-2 && worst_est <= 1e-3 && worst_lik <= 1e-3,
        format!("divergences {worst_div:.1e} (relative to 1+KL); Student vs Gaussian MLE {worst_est:.1e}; likelihoods {worst_lik:.1e}"),
    )
}

fn student_grid() -> Vec<Vec<f64>> {
    vec![vec![-0.8, 0.5], vec![-0.2, 0.9], vec![0.0, 1.0], vec![0.5, 1.7], vec![1.1, 3.0], vec![2.0, 0.3]]
}

fn c10_sufficiency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut notes = Vec::new();
    let mut ok = true;

    // Student a = 0.9, B form: T = (X-bar, mean X^2), for L2 and L3.
    let spec = student_balpha_spec(1, 0.9).unwrap();
    let t = canonical_statistic(&spec).unwrap();
    let fam: Arc<dyn ParametricFamily> = Arc::new(StudentFamily::new(1, 0.9).unwrap());
    let x = student_sample(1, 0.9, 40, 11);
    let matched: Vec<(Sample, Sample)> = (0..5)
        .map(|i| (x.clone(), moment_matched_partner(&x, [i, i + 7, i + 19], 0.3 + 0.4 * i as f64).unwrap()))
        .collect();
    let mut other = x.values().to_vec();
    other[0] += 0.5;
    let unmatched = vec![(x.clone(), Sample::from_values(&other).unwrap()), (x.clone(), student_sample(1, 0.9, 40, 12))];
    for lik in [Likelihood::L2, Likelihood::L3] {
        let ss = SufficiencySpec::new(t.clone(), lik, 0.9, fam.clone(), student_grid()).unwrap();
        let f = factorization_check(&ss, &matched).unwrap();
        let all: Vec<_> = matched.iter().chain(&unmatched).cloned().collect();
        let m = minimality_check(&ss, &spec, &all).unwrap();
        let spread = f.pairs.iter().map(|p| p.delta_spread).fold(0.0, f64::max);
        ok &= f.passes && f.pairs.iter().all(|p| p.statistic_equal) && m.forward && m.converse;
        notes.push(format!("Student {lik:?}: spread {spread:.1e}, converse {}", m.converse));
    }

    // Cauchy beta = 1.5, Hellinger likelihood with the uniform kernel.
    let cspec = cauchy_ealpha_spec(1, 1.5).unwrap();
    let ct = canonical_statistic(&cspec).unwrap();
    let cfam: Arc<dyn ParametricFamily> = Arc::new(CauchyFamily::new(1, 1.5).unwrap());
    let cx = disjoint_sample(1, 25, 3.0, &mut rng);
    let cmatched: Vec<(Sample, Sample)> = (0..4)
        .map(|i| (cx.clone(), moment_matched_partner(&cx, [i, i + 9, i + 17], 0.01 + 0.005 * i as f64).unwrap()))
        .collect();
    let regimes_ok = cmatched.iter().all(|(_, y)| UniformKde::new(y).regime() == KdeRegime::Disjoint);
    let mut cother = cx.values().to_vec();
    cother[3] += 0.7;
    let cunmatched = vec![(cx.clone(), Sample::from_values(&cother).unwrap())];
    let cs = SufficiencySpec::new(ct, Likelihood::L1, 1.5, cfam, student_grid()).unwrap();
    let f = factorization_check(&cs, &cmatched).unwrap();
    let all: Vec<_> = cmatched.iter().chain(&cunmatched).cloned().collect();
    let m = minimality_check(&cs, &cspec, &all).unwrap();
    let spread = f.pairs.iter().map(|p| p.delta_spread).fold(0.0, f64::max);
    ok &= f.passes && f.pairs.iter().all(|p| p.statistic_equal) && m.forward && m.converse && regimes_ok;
    notes.push(format!("Cauchy L1: spread {spread:.1e}, converse {}", m.converse));

    // Student a = 2 with known scale: X-bar alone is not sufficient.
    let loc: Arc<dyn ParametricFamily> =
        Arc::new(FixedTail::new(Arc::new(StudentFamily::new(1, 2.0).unwrap()), vec![5.0 / 3.0]).unwrap());
    let mean_only = Arc::new(|s: &Sample| Ok(s.mean()));
    let grid: Vec<Vec<f64>> = [-1.0, -0.5, 0.0, 0.4, 1.0, 1.5].iter().map(|&m| vec![m]).collect();
    let ls = SufficiencySpec::new(mean_only, Likelihood::L2, 2.0, loc, grid).unwrap();
    let a = Sample::from_values(&[-0.5, 0.0, 0.5, 1.0]).unwrap();
    let b = Sample::from_values(&[-1.5, -0.5, 1.0, 2.0]).unwrap();
    let f = factorization_check(&ls, &[(a, b)]).unwrap();
    let p = &f.pairs[0];
    ok &= p.statistic_equal && !f.passes && p.delta_spread > 1e-6;
    notes.push(format!("Student a=2 with T = mean: spread {:.3e}", p.delta_spread));

    outcome(ok, notes.join("; "))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("piecewise Jones maximizers on the bundled sample", c1_golden),
        ("order-two projection onto a linear family", c2_example_a1),
        ("membership solve for an order-two family", c3_example_a2),
        ("Pythagorean equality for orders below one", c4_pythagorean),
        ("reverse projection through forward projection", c5_reverse_projection),
        ("Basu and Jones equations, L2 and L3 maximization", c6_estimating_equations),
        ("Cauchy Hellinger closed form and kernel route", c7_cauchy_hellinger),
        ("escort identities", c8_escort_identities),
        ("continuity at order one", c9_continuity),
        ("generalized sufficiency", c10_sufficiency),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let o = run();
        println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        let known = KNOWN_RED.contains(&id);
        if !o.pass && !known {
            unexpected.push(id);
        }
        if !o.pass && known && id == 1 && !c1_failure_is_documented() {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
