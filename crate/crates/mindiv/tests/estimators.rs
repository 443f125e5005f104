use mindiv::divergences::Likelihood;
use mindiv::estimators::{
    estimating_residual, hellinger_estimator_cauchy, maximize_likelihood, native_form, solve_projection_equations,
    student_moment_estimator, Data, Method, Reduction,
};
use mindiv::families::{
    nu_of_alpha, student_balpha_spec, student_malpha_spec, CauchyFamily, ParametricFamily, StudentFamily,
    StudentParams,
};
use mindiv::piecewise::global_maximizer;
use mindiv::prob::Sample;
use mindiv::simulate::{replicate_samples, sample_mixture, Component, MixtureSpec};
use mindiv::suffstat::moment_matched_partner;
use nalgebra::DMatrix;

fn student(d: usize, alpha: f64, n: usize, seed: u64) -> Sample {
    let sigma = if d == 1 { vec![vec![1.5]] } else { vec![vec![1.0, 0.3], vec![0.3, 0.8]] };
    let spec = MixtureSpec::pure(Component::Student { alpha, mu: vec![0.5; d], sigma });
    sample_mixture(&spec, n, seed).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn jones_equations_reproduce_the_closed_form() {
    for (d, seed) in [(1, 3), (2, 4)] {
        let s = student(d, 0.9, 300, seed);
        let closed = student_moment_estimator(&s, 0.9).unwrap();
        let spec = student_malpha_spec(d, 0.9).unwrap();
        let start: Vec<f64> = closed.theta_hat.iter().map(|v| v * 1.1 + 0.05).collect();
        let solved = solve_projection_equations(Method::Jones, &spec, Data::Sample(&s), &start, None).unwrap();
        assert!(solved.converged);
        let e = max_diff(&solved.theta_hat, &closed.theta_hat);
        assert!(e < 1e-3, "d = {d}: {e}");
    }
}

#[test]
fn basu_equations_agree_with_likelihood_maximization() {
    let s = student(1, 0.8, 200, 9);
    let closed = student_moment_estimator(&s, 0.8).unwrap();
    // The M form rewritten as a B form, then solved with Basu's equations.
    let m = student_malpha_spec(1, 0.8).unwrap();
    let b = native_form(&m, Method::Basu).unwrap();
    let eq = solve_projection_equations(Method::Basu, &b, Data::Sample(&s), &closed.theta_hat, None).unwrap();
    let fam = StudentFamily::new(1, 0.8).unwrap();
    let start = [closed.theta_hat[0] + 0.2, closed.theta_hat[1] * 0.8];
    let lik = maximize_likelihood(Likelihood::L2, &fam, &s, None, 0.8, &start).unwrap();
    assert!(max_diff(&eq.theta_hat, &lik.theta_hat) < 1e-3, "{:?} vs {:?}", eq.theta_hat, lik.theta_hat);
}

#[test]
fn reduced_root_solves_the_general_equations() {
    let s = student(2, 0.85, 150, 21);
    let spec = student_balpha_spec(2, 0.85).unwrap();
    let r = solve_projection_equations(Method::Basu, &spec, Data::Sample(&s), &student_moment_estimator(&s, 0.85).unwrap().theta_hat, Some(Reduction::Reduced)).unwrap();
    let general = estimating_residual(Method::Basu, &spec, &r.theta_hat, Data::Sample(&s), Reduction::General).unwrap();
    assert!(general.iter().all(|v| v.abs() < 1e-8), "{general:?}");
}

#[test]
fn estimates_depend_only_on_the_canonical_statistic() {
    for d in [1, 2] {
        let x = student(d, 0.9, 40, 50 + d as u64);
        for angle in [0.3, 1.1, 2.5] {
            let y = moment_matched_partner(&x, [0, 7, 19], angle).unwrap();
            assert_ne!(x.values(), y.values());
            let (a, b) = (student_moment_estimator(&x, 0.9).unwrap(), student_moment_estimator(&y, 0.9).unwrap());
            assert!(max_diff(&a.theta_hat, &b.theta_hat) <= 1e-9);
            let (a, b) = (hellinger_estimator_cauchy(&x, 1.2).unwrap(), hellinger_estimator_cauchy(&y, 1.2).unwrap());
            assert!(max_diff(&a.theta_hat, &b.theta_hat) <= 1e-9);
        }
    }
}

#[test]
fn student_scores_have_mean_zero() {
    for (alpha, mu, s2) in [(0.8, 0.3, 1.2), (0.95, -1.0, 0.5)] {
        let fam = StudentFamily::new(1, alpha).unwrap();
        let theta = [mu, s2];
        let m = fam
            .expect(&theta, 2, &mut |x, out| {
                let g = fam.score(&theta, x).unwrap();
                out.copy_from_slice(&g);
            })
            .unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-6), "{m:?}");
    }
}

#[test]
fn student_cauchy_orders_are_linked() {
    // A Cauchy family of order beta shares nu with the Student of order 1 / beta.
    let c = CauchyFamily::new(1, 1.5).unwrap();
    let p = c.params(&[0.0, 1.0]).unwrap();
    assert!((p.student().nu() - nu_of_alpha(1.0 / 1.5, 1)).abs() < 1e-12);
    let st = StudentParams::new(vec![0.0], DMatrix::from_element(1, 1, 1.0), 1.0 / 1.5).unwrap();
    assert!((st.b() - p.student().b()).abs() < 1e-15);
}

/// Location error of the piecewise Jones estimator against the sample mean
/// for a bounded Student model with gross outliers.
#[test]
fn piecewise_jones_location_resists_outliers() {
    let (alpha, sigma, mu) = (2.0, 1.0, 1.0);
    // Sampling shape from the standard deviation: Sigma = sigma^2 (nu - 2) / nu.
    let nu = nu_of_alpha(alpha, 1);
    let spec = MixtureSpec {
        inlier: Component::Student { alpha, mu: vec![mu], sigma: vec![vec![sigma * sigma * (nu - 2.0) / nu]] },
        outlier: Component::Point { at: vec![mu + 10.0 * sigma] },
        epsilon: 0.1,
    };
    let samples = replicate_samples(&spec, 50, 77, 200).unwrap();
    let mut wins = 0;
    for s in &samples {
        let g = global_maximizer(s, alpha, sigma).unwrap();
        if (g.mu_hat - mu).abs() < (g.sample_mean - mu).abs() {
            wins += 1;
        }
    }
    assert!(wins >= 160, "{wins} of 200");
}

/// The closed-form Hellinger location estimate for the Cauchy family is the
/// sample mean, so it cannot beat the mean (and loses to the Cauchy MLE)
/// under gross contamination. Kept to document the gap; run with --ignored.
#[test]
#[ignore]
fn cauchy_hellinger_location_resists_outliers() {
    let spec = MixtureSpec {
        inlier: Component::Cauchy { beta: 1.5, mu: vec![0.0], sigma: vec![vec![1.0]] },
        outlier: Component::Point { at: vec![10.0] },
        epsilon: 0.1,
    };
    let fam = CauchyFamily::new(1, 1.5).unwrap();
    let mut wins = 0;
    for s in replicate_samples(&spec, 100, 5, 200).unwrap() {
        let h = hellinger_estimator_cauchy(&s, 1.5).unwrap();
        let mle = maximize_likelihood(Likelihood::Log, &fam, &s, None, 1.0, &h.theta_hat).unwrap();
        if h.theta_hat[0].abs() < mle.theta_hat[0].abs() {
            wins += 1;
        }
    }
    assert!(wins >= 160, "{wins} of 200");
}
