//! Randomized maximum likelihood: instance draws, randomized objectives and
//! the exact maximizer for linear simulators.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::probspec::{log_normal, opt_vec_serde, vec_serde, GaussianSpec, Prior, ProblemSpec, OUTSIDE_SUPPORT};

/// One randomized objective: perturbed data and, for Gaussian priors, a
/// perturbed prior mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmlInstance {
    /// 0-based position in the batch.
    pub index: usize,
    #[serde(with = "vec_serde")]
    pub data: DVector<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vec_serde")]
    pub prior_mean: Option<DVector<f64>>,
}

fn standard_normal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    // Filled coordinate-ascending.
    let mut xi = DVector::zeros(dim);
    for i in 0..dim {
        xi[i] = rng.sample(StandardNormal);
    }
    xi
}

/// Draws `n_rml` instances `D_n = D + L_obs ξ` (and `μ_n = μ + L ξ'` for
/// Gaussian priors). Uses no simulator evaluations.
pub fn draw_randomizations<R: Rng + ?Sized>(problem: &ProblemSpec, n_rml: usize, rng: &mut R) -> Result<Vec<RmlInstance>> {
    if n_rml == 0 {
        return Err(Error::Config("n_rml must be at least 1".into()));
    }
    let lik = &problem.likelihood;
    (0..n_rml)
        .map(|index| {
            let data = &lik.data + lik.obs_cov.colour(&standard_normal(lik.dim(), rng))?;
            let prior_mean = match &problem.prior {
                Prior::Gaussian(g) => Some(&g.mean + g.covariance.colour(&standard_normal(g.dim(), rng))?),
                Prior::Box(_) => None,
            };
            Ok(RmlInstance { index, data, prior_mean })
        })
        .collect()
}

/// `log N(D_n | f(x), obs_cov)`.
pub fn randomized_log_likelihood(instance: &RmlInstance, fx: &DVector<f64>, problem: &ProblemSpec) -> Result<f64> {
    log_normal(fx, &instance.data, &problem.likelihood.obs_cov)
}

/// Randomized log-prior `log N(x | μ_n, Σ)`, or the box indicator.
pub fn randomized_log_prior(instance: &RmlInstance, x: &DVector<f64>, prior: &Prior) -> Result<f64> {
    match prior {
        Prior::Box(b) => {
            if x.len() != b.dim() {
                return Err(Error::dims("point against box prior", b.dim(), x.len()));
            }
            Ok(if b.contains(x) { 0.0 } else { OUTSIDE_SUPPORT })
        }
        Prior::Gaussian(g) => {
            let mean =
                instance.prior_mean.as_ref().ok_or_else(|| Error::Internal(format!("instance {} has no perturbed prior mean", instance.index)))?;
            log_normal(x, mean, &g.covariance)
        }
    }
}

/// The randomized objective `O_n(x)`.
///
/// With `fx = Some(..)` no simulator call is made. Points outside a box
/// prior score [`OUTSIDE_SUPPORT`] without being simulated.
pub fn objective(instance: &RmlInstance, x: &DVector<f64>, problem: &ProblemSpec, fx: Option<&DVector<f64>>) -> Result<f64> {
    let log_prior = randomized_log_prior(instance, x, &problem.prior)?;
    if log_prior == OUTSIDE_SUPPORT {
        return Ok(OUTSIDE_SUPPORT);
    }
    let ll = match fx {
        Some(fx) => randomized_log_likelihood(instance, fx, problem)?,
        None => randomized_log_likelihood(instance, &problem.simulator.evaluate(x)?, problem)?,
    };
    Ok(ll + log_prior)
}

fn inverse(cov: &SpdMatrix) -> Result<DMatrix<f64>> {
    cov.solve_matrix(&DMatrix::identity(cov.dim(), cov.dim()))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn linear_prior<'a>(b: &DMatrix<f64>, problem: &'a ProblemSpec) -> Result<&'a GaussianSpec> {
    let prior = problem.prior.as_gaussian().ok_or_else(|| Error::Config("the linear RML oracle needs a Gaussian prior".into()))?;
    if b.ncols() != prior.dim() || b.nrows() != problem.likelihood.dim() {
        return Err(Error::dims("linear map columns", prior.dim(), b.ncols()));
    }
    Ok(prior)
}

/// Precision `Bᵀ Σ_obs⁻¹ B + Σ⁻¹` and `Σ_obs⁻¹ B`.
fn normal_matrix(b: &DMatrix<f64>, problem: &ProblemSpec, prior: &GaussianSpec) -> Result<(SpdMatrix, DMatrix<f64>)> {
    let obs_inv_b = problem.likelihood.obs_cov.solve_matrix(b)?;
    let precision = symmetrize(b.transpose() * &obs_inv_b + inverse(&prior.covariance)?);
    let factor = SpdMatrix::new("normal matrix", precision).map_err(|e| Error::Internal(e.to_string()))?;
    Ok((factor, obs_inv_b))
}

/// Exact maximizer of `O_n` when `f(x) = B x` and the prior is Gaussian:
/// `(Bᵀ Σ_obs⁻¹ B + Σ⁻¹)⁻¹ (Bᵀ Σ_obs⁻¹ D_n + Σ⁻¹ μ_n)`.
pub fn oracle_linear_rml(b: &DMatrix<f64>, instance: &RmlInstance, problem: &ProblemSpec) -> Result<DVector<f64>> {
    let prior = linear_prior(b, problem)?;
    let mean = instance.prior_mean.as_ref().ok_or_else(|| Error::Internal(format!("instance {} has no perturbed prior mean", instance.index)))?;
    let (factor, obs_inv_b) = normal_matrix(b, problem, prior)?;
    let rhs = obs_inv_b.transpose() * &instance.data + prior.covariance.solve(mean)?;
    factor.solve(&rhs)
}

/// Analytic posterior `N(mean, cov)` for a linear simulator with Gaussian
/// prior and likelihood.
pub fn linear_gaussian_posterior(b: &DMatrix<f64>, problem: &ProblemSpec) -> Result<GaussianSpec> {
    let prior = linear_prior(b, problem)?;
    let (factor, obs_inv_b) = normal_matrix(b, problem, prior)?;
    let rhs = obs_inv_b.transpose() * &problem.likelihood.data + prior.covariance.solve(&prior.mean)?;
    let mean = factor.solve(&rhs)?;
    let cov = symmetrize(inverse(&factor)?);
    GaussianSpec::new(mean, SpdMatrix::new("posterior_cov", cov)?)
}
