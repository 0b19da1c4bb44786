mod common;

use hdbo_rml::probspec::Prior;
use hdbo_rml::rml::{draw_randomizations, linear_gaussian_posterior, objective, oracle_linear_rml};
use hdbo_rml::seeding::stream;
use nalgebra::DVector;

#[test]
fn oracle_agrees_with_numeric_maximization() {
    let mut rng = stream(21, "rml-oracle", 0);
    for trial in 0..5 {
        let (b, problem) = common::random_linear_problem(5, 8, &mut rng);
        let instances = draw_randomizations(&problem, 4, &mut rng).unwrap();
        for inst in &instances {
            let exact = oracle_linear_rml(&b, inst, &problem).unwrap();
            let numeric = common::fd_gradient_ascent(|x| objective(inst, x, &problem, None).unwrap(), &DVector::zeros(8));
            let gap = (&exact - &numeric).amax();
            assert!(gap < 1e-6, "trial {trial}, instance {}: gap {gap}", inst.index);
        }
    }
}

#[test]
fn oracle_samples_follow_the_posterior() {
    let mut rng = stream(22, "rml-posterior", 0);
    let (b, problem) = common::random_linear_problem(5, 8, &mut rng);
    let posterior = linear_gaussian_posterior(&b, &problem).unwrap();
    let instances = draw_randomizations(&problem, 2000, &mut rng).unwrap();
    let samples: Vec<DVector<f64>> = instances.iter().map(|i| oracle_linear_rml(&b, i, &problem).unwrap()).collect();
    common::moments_within_three_se(&samples, &posterior.mean, posterior.covariance.matrix()).unwrap();
}

#[test]
fn posterior_matches_dense_formula() {
    let mut rng = stream(23, "rml-dense", 0);
    let (b, problem) = common::random_linear_problem(3, 4, &mut rng);
    let Prior::Gaussian(prior) = &problem.prior else { unreachable!() };
    let obs_inv = common::dense_inverse(problem.likelihood.obs_cov.matrix());
    let prior_inv = common::dense_inverse(prior.covariance.matrix());
    let cov = common::dense_inverse(&(b.transpose() * &obs_inv * &b + &prior_inv));
    let mean = &cov * (b.transpose() * &obs_inv * &problem.likelihood.data + &prior_inv * &prior.mean);
    let post = linear_gaussian_posterior(&b, &problem).unwrap();
    assert!((post.mean - mean).amax() < 1e-10);
    assert!((post.covariance.matrix() - cov).amax() < 1e-10);
}

#[test]
fn perturbed_data_average_to_the_data() {
    let mut rng = stream(24, "rml-mc", 0);
    let (_, problem) = common::random_linear_problem(3, 2, &mut rng);
    let n = 10_000;
    let instances = draw_randomizations(&problem, n, &mut rng).unwrap();
    let mean = instances.iter().fold(DVector::zeros(3), |acc, i| acc + &i.data) / n as f64;
    let cov = problem.likelihood.obs_cov.matrix();
    for k in 0..3 {
        let se = cov[(k, k)].sqrt() / 100.0;
        assert!((mean[k] - problem.likelihood.data[k]).abs() < 3.0 * se);
    }
}
