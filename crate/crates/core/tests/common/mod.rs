//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use hdbo_rml::linalg::SpdMatrix;
use hdbo_rml::probspec::{GaussianSpec, LikelihoodSpec, LinearSimulator, Prior, ProblemSpec, SimulatorHandle};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `M Mᵀ / n + c I`, well conditioned.
pub fn random_spd<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let m = gaussian_matrix(n, n, rng);
    let a = &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
    (&a + a.transpose()) * 0.5
}

/// Linear problem `f(x) = Bx` with random SPD covariances and random data.
pub fn random_linear_problem<R: Rng>(m: usize, d: usize, rng: &mut R) -> (DMatrix<f64>, ProblemSpec) {
    let b = gaussian_matrix(m, d, rng);
    let prior_mean = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let prior = GaussianSpec::new(prior_mean, SpdMatrix::new("prior_cov", random_spd(d, rng)).unwrap()).unwrap();
    let data = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let obs = SpdMatrix::new("obs_cov", random_spd(m, rng)).unwrap();
    let problem = ProblemSpec::new(
        SimulatorHandle::new(Arc::new(LinearSimulator::new(b.clone()))),
        Prior::Gaussian(prior),
        LikelihoodSpec::new(data, obs).unwrap(),
    )
    .unwrap();
    (b, problem)
}

pub fn dense_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().try_inverse().expect("invertible")
}

/// `log N(x | mean, cov)` through an explicit inverse and LU determinant.
pub fn dense_log_normal(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let r = x - mean;
    let quad = (r.transpose() * dense_inverse(cov) * &r)[0];
    let n = x.len() as f64;
    -0.5 * (quad + cov.determinant().ln() + n * (2.0 * std::f64::consts::PI).ln())
}

/// Central finite-difference gradient.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: &F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut up = x.clone();
        let mut dn = x.clone();
        up[i] += h;
        dn[i] -= h;
        (f(&up) - f(&dn)) / (2.0 * h)
    })
}

/// Gradient ascent with finite-difference gradients and Barzilai-Borwein
/// step lengths. Meant for smooth concave objectives.
pub fn fd_gradient_ascent<F: Fn(&DVector<f64>) -> f64>(f: F, x0: &DVector<f64>) -> DVector<f64> {
    let h = 1e-5;
    let mut x = x0.clone();
    let mut g = fd_gradient(&f, &x, h);
    let mut step = 1e-3;
    for _ in 0..20_000 {
        if g.amax() < 1e-11 {
            break;
        }
        let x_next = &x + &g * step;
        let g_next = fd_gradient(&f, &x_next, h);
        let s = &x_next - &x;
        let dy = &g_next - &g;
        let curv = s.dot(&dy);
        step = if curv < 0.0 { -s.norm_squared() / curv } else { 1e-3 };
        x = x_next;
        g = g_next;
    }
    x
}

/// Least-squares fit of a full quadratic `c + bᵀu + uᵀQu`; returns the
/// largest absolute residual.
pub fn quadratic_fit_residual(points: &[Vec<f64>], values: &[f64]) -> f64 {
    let d = points[0].len();
    let features = |u: &[f64]| {
        let mut row = vec![1.0];
        row.extend_from_slice(u);
        for i in 0..d {
            for j in i..d {
                row.push(u[i] * u[j]);
            }
        }
        row
    };
    let cols = features(&points[0]).len();
    let rows: Vec<f64> = points.iter().flat_map(|p| features(p)).collect();
    let a = DMatrix::from_row_slice(points.len(), cols, &rows);
    let z = DVector::from_column_slice(values);
    let coef = a.clone().svd(true, true).solve(&z, 1e-14).expect("svd solve");
    (a * coef - z).amax()
}

/// Sample mean and unbiased sample covariance of the columns of `xs`.
pub fn sample_moments(xs: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mean = xs.iter().fold(DVector::zeros(d), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(d, d);
    for x in xs {
        let r = x - &mean;
        cov += &r * r.transpose();
    }
    (mean, cov / (n - 1.0))
}

/// Checks sample moments of `n` draws against `N(mean, cov)` at three
/// standard errors. The covariance entry standard error is
/// `sqrt((Σ_ij² + Σ_ii Σ_jj) / n)`.
pub fn moments_within_three_se(xs: &[DVector<f64>], mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<(), String> {
    let n = xs.len() as f64;
    let (m, c) = sample_moments(xs);
    for i in 0..mean.len() {
        let se = (cov[(i, i)] / n).sqrt();
        if (m[i] - mean[i]).abs() > 3.0 * se {
            return Err(format!("mean[{i}] = {} vs {} (se {se})", m[i], mean[i]));
        }
        for j in 0..mean.len() {
            let se = ((cov[(i, j)].powi(2) + cov[(i, i)] * cov[(j, j)]) / n).sqrt();
            if (c[(i, j)] - cov[(i, j)]).abs() > 3.0 * se {
                return Err(format!("cov[{i},{j}] = {} vs {} (se {se})", c[(i, j)], cov[(i, j)]));
            }
        }
    }
    Ok(())
}

/// Dense evidence oracle: explicit inverse and determinant of `K + σ²I`.
pub fn dense_gp_evidence(inputs: &[Vec<f64>], targets: &[f64], o: f64, l: f64, noise: f64) -> f64 {
    let n = inputs.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = inputs[i].iter().zip(&inputs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        o * o * (-0.5 * d2 / (l * l)).exp() + if i == j { noise } else { 0.0 }
    });
    let z = DVector::from_column_slice(targets);
    dense_log_normal(&z, &DVector::zeros(n), &k)
}
