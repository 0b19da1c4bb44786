//! Inverse-problem ingredients (simulator, prior, Gaussian likelihood) plus
//! the Gaussian log-densities every other module uses.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bench::{Link, RidgeSimulator};
use crate::error::{Error, Result};
use crate::linalg::{rows_serde, SpdMatrix};

/// Log-density assigned outside the prior support. It absorbs every finite
/// summand, so such points can never win an argmax.
pub const OUTSIDE_SUPPORT: f64 = f64::NEG_INFINITY;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A deterministic forward map `R^D -> R^m`.
pub trait Simulator: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn evaluate(&self, x: &DVector<f64>) -> std::result::Result<DVector<f64>, String>;

    /// Semi-orthogonal basis `A` with `f(x) = f(A Aᵀ x)`, when known.
    fn active_subspace(&self) -> Option<&DMatrix<f64>> {
        None
    }

    /// `B` such that `f(x) = B x`, for linear simulators.
    fn linear_map(&self) -> Option<&DMatrix<f64>> {
        None
    }

    /// JSON description from which the simulator can be rebuilt.
    fn document(&self) -> Option<SimulatorDocument> {
        None
    }
}

/// `f(x) = B x`.
#[derive(Clone, Debug)]
pub struct LinearSimulator {
    matrix: DMatrix<f64>,
    active: Option<DMatrix<f64>>,
}

impl LinearSimulator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix, active: None }
    }

    /// Attaches an orthonormal basis of the row space of `B`.
    pub fn with_active_subspace(mut self, active: DMatrix<f64>) -> Self {
        self.active = Some(active);
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Simulator for LinearSimulator {
    fn name(&self) -> &str {
        "linear"
    }

    fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn evaluate(&self, x: &DVector<f64>) -> std::result::Result<DVector<f64>, String> {
        Ok(&self.matrix * x)
    }

    fn active_subspace(&self) -> Option<&DMatrix<f64>> {
        self.active.as_ref()
    }

    fn linear_map(&self) -> Option<&DMatrix<f64>> {
        Some(&self.matrix)
    }

    fn document(&self) -> Option<SimulatorDocument> {
        Some(SimulatorDocument::Linear { matrix: self.matrix.clone(), active_matrix: self.active.clone() })
    }
}

/// Shared handle to a simulator with its evaluation counters.
///
/// Clones share the counters. `evaluate` draws on the optimization budget;
/// `evaluate_analysis` is tracked separately for offline diagnostics.
#[derive(Clone)]
pub struct SimulatorHandle {
    body: Arc<dyn Simulator>,
    evals: Arc<AtomicU64>,
    analysis_evals: Arc<AtomicU64>,
}

impl fmt::Debug for SimulatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulatorHandle")
            .field("name", &self.body.name())
            .field("input_dim", &self.input_dim())
            .field("output_dim", &self.output_dim())
            .field("eval_count", &self.eval_count())
            .finish()
    }
}

impl SimulatorHandle {
    pub fn new(body: Arc<dyn Simulator>) -> Self {
        Self { body, evals: Arc::new(AtomicU64::new(0)), analysis_evals: Arc::new(AtomicU64::new(0)) }
    }

    /// Same simulator, zeroed private counters.
    pub fn fresh(&self) -> Self {
        Self::new(Arc::clone(&self.body))
    }

    pub fn body(&self) -> &dyn Simulator {
        self.body.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.body.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.body.output_dim()
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::SeqCst)
    }

    pub fn analysis_eval_count(&self) -> u64 {
        self.analysis_evals.load(Ordering::SeqCst)
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.run(x, &self.evals)
    }

    pub fn evaluate_analysis(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.run(x, &self.analysis_evals)
    }

    fn run(&self, x: &DVector<f64>, counter: &AtomicU64) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::dims(format!("simulator `{}` input", self.body.name()), self.input_dim(), x.len()));
        }
        counter.fetch_add(1, Ordering::SeqCst);
        let fx = self.body.evaluate(x).map_err(|message| Error::Simulator {
            simulator: self.body.name().to_string(),
            input: x.iter().copied().collect(),
            message,
        })?;
        if fx.len() != self.output_dim() {
            return Err(Error::dims(format!("simulator `{}` output", self.body.name()), self.output_dim(), fx.len()));
        }
        if fx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulator {
                simulator: self.body.name().to_string(),
                input: x.iter().copied().collect(),
                message: "non-finite output".into(),
            });
        }
        Ok(fx)
    }
}

/// Multivariate normal `N(mean, covariance)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    #[serde(with = "vec_serde")]
    pub mean: DVector<f64>,
    pub covariance: SpdMatrix,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, covariance: SpdMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::dims(format!("mean of `{}`", covariance.name()), covariance.dim(), mean.len()));
        }
        Ok(Self { mean, covariance })
    }

    pub fn standard(dim: usize) -> Self {
        Self { mean: DVector::zeros(dim), covariance: SpdMatrix::identity("prior_cov", dim) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Uniform prior on `[lower_i, upper_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct BoxPrior {
    #[serde(with = "vec_serde")]
    pub lower: DVector<f64>,
    #[serde(with = "vec_serde")]
    pub upper: DVector<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxPrior {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BoxPrior::new(DVector::from_vec(raw.lower), DVector::from_vec(raw.upper))
    }
}

impl BoxPrior {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("box prior bounds", lower.len(), upper.len()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::Config(format!("box prior needs lower < upper, violated at coordinate {i} ({} >= {})", lower[i], upper[i])));
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(DVector::from_element(dim, -half_width), DVector::from_element(dim, half_width))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    /// Coordinate-wise projection into the box.
    pub fn clip(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Box(BoxPrior),
    Gaussian(GaussianSpec),
}

impl Prior {
    pub fn dim(&self) -> usize {
        match self {
            Prior::Box(b) => b.dim(),
            Prior::Gaussian(g) => g.dim(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Prior::Gaussian(_))
    }

    pub fn as_gaussian(&self) -> Option<&GaussianSpec> {
        match self {
            Prior::Gaussian(g) => Some(g),
            Prior::Box(_) => None,
        }
    }
}

/// Gaussian likelihood `D | x ~ N(f(x), obs_cov)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec {
    #[serde(with = "vec_serde")]
    pub data: DVector<f64>,
    pub obs_cov: SpdMatrix,
}

impl LikelihoodSpec {
    pub fn new(data: DVector<f64>, obs_cov: SpdMatrix) -> Result<Self> {
        if data.len() != obs_cov.dim() {
            return Err(Error::dims("likelihood data against obs_cov", obs_cov.dim(), data.len()));
        }
        Ok(Self { data, obs_cov })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }
}

/// One Bayesian inverse problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub simulator: SimulatorHandle,
    pub prior: Prior,
    pub likelihood: LikelihoodSpec,
}

impl ProblemSpec {
    pub fn new(simulator: SimulatorHandle, prior: Prior, likelihood: LikelihoodSpec) -> Result<Self> {
        if prior.dim() != simulator.input_dim() {
            return Err(Error::dims("prior against simulator input", simulator.input_dim(), prior.dim()));
        }
        if likelihood.dim() != simulator.output_dim() {
            return Err(Error::dims("likelihood data against simulator output", simulator.output_dim(), likelihood.dim()));
        }
        Ok(Self { simulator, prior, likelihood })
    }

    /// Copy with private, zeroed evaluation counters.
    pub fn fresh(&self) -> Self {
        Self { simulator: self.simulator.fresh(), prior: self.prior.clone(), likelihood: self.likelihood.clone() }
    }

    pub fn input_dim(&self) -> usize {
        self.simulator.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.simulator.output_dim()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDocument = serde_json::from_str(text)?;
        doc.build()
    }

    pub fn document(&self) -> Option<ProblemDocument> {
        Some(ProblemDocument { simulator: self.simulator.body().document()?, prior: self.prior.clone(), likelihood: self.likelihood.clone() })
    }
}

/// Rebuildable simulator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorDocument {
    Linear {
        #[serde(with = "rows_serde")]
        matrix: DMatrix<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rows_serde")]
        active_matrix: Option<DMatrix<f64>>,
    },
    Ridge {
        link: Link,
        #[serde(with = "rows_serde")]
        active_matrix: DMatrix<f64>,
    },
}

impl SimulatorDocument {
    pub fn build(&self) -> Result<Arc<dyn Simulator>> {
        Ok(match self {
            SimulatorDocument::Linear { matrix, active_matrix } => {
                let mut sim = LinearSimulator::new(matrix.clone());
                if let Some(a) = active_matrix {
                    if a.nrows() != matrix.ncols() {
                        return Err(Error::dims("linear active_matrix rows", matrix.ncols(), a.nrows()));
                    }
                    sim = sim.with_active_subspace(a.clone());
                }
                Arc::new(sim)
            }
            SimulatorDocument::Ridge { link, active_matrix } => Arc::new(RidgeSimulator::new(*link, active_matrix.clone())?),
        })
    }
}

/// JSON form of a [`ProblemSpec`]; matrices are row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub simulator: SimulatorDocument,
    pub prior: Prior,
    pub likelihood: LikelihoodSpec,
}

impl ProblemDocument {
    pub fn build(&self) -> Result<ProblemSpec> {
        let sim = SimulatorHandle::new(self.simulator.build()?);
        ProblemSpec::new(sim, self.prior.clone(), self.likelihood.clone())
    }
}

/// `yᵀ cov⁻¹ y` through the cached Cholesky factor.
pub fn mahalanobis_sq(y: &DVector<f64>, cov: &SpdMatrix) -> Result<f64> {
    cov.mahalanobis_sq(y)
}

/// `log N(x | mean, cov)`.
pub fn log_normal(x: &DVector<f64>, mean: &DVector<f64>, cov: &SpdMatrix) -> Result<f64> {
    if x.len() != mean.len() {
        return Err(Error::dims(format!("point against mean of `{}`", cov.name()), mean.len(), x.len()));
    }
    let quad = cov.mahalanobis_sq(&(x - mean))?;
    Ok(-0.5 * (x.len() as f64 * LN_2PI + cov.log_det() + quad))
}

pub fn log_gaussian_density(x: &DVector<f64>, spec: &GaussianSpec) -> Result<f64> {
    log_normal(x, &spec.mean, &spec.covariance)
}

/// `log N(D | f(x), obs_cov)` for the problem's data; one simulator call.
pub fn log_likelihood(x: &DVector<f64>, problem: &ProblemSpec) -> Result<f64> {
    let fx = problem.simulator.evaluate(x)?;
    log_likelihood_from_output(&fx, problem)
}

/// As [`log_likelihood`] with `f(x)` already known; no simulator call.
pub fn log_likelihood_from_output(fx: &DVector<f64>, problem: &ProblemSpec) -> Result<f64> {
    log_normal(fx, &problem.likelihood.data, &problem.likelihood.obs_cov)
}

/// 0 inside the box (unnormalized), [`OUTSIDE_SUPPORT`] outside; Gaussian
/// priors delegate to [`log_gaussian_density`].
pub fn log_prior(x: &DVector<f64>, prior: &Prior) -> Result<f64> {
    match prior {
        Prior::Box(b) => {
            if x.len() != b.dim() {
                return Err(Error::dims("point against box prior", b.dim(), x.len()));
            }
            Ok(if b.contains(x) { 0.0 } else { OUTSIDE_SUPPORT })
        }
        Prior::Gaussian(g) => log_gaussian_density(x, g),
    }
}

pub(crate) mod vec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

pub(crate) mod opt_vec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}

mod opt_rows_serde {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{from_rows, to_rows};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        match Option::<Vec<Vec<f64>>>::deserialize(d)? {
            Some(rows) => from_rows(&rows).map(Some).map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn linear_problem(b: DMatrix<f64>, data: &[f64], obs: SpdMatrix, prior: Prior) -> ProblemSpec {
        let sim = SimulatorHandle::new(Arc::new(LinearSimulator::new(b)));
        ProblemSpec::new(sim, prior, LikelihoodSpec::new(v(data), obs).unwrap()).unwrap()
    }

    #[test]
    fn mahalanobis_examples() {
        assert_eq!(mahalanobis_sq(&v(&[3.0, 4.0]), &SpdMatrix::identity("i", 2)).unwrap(), 25.0);
        let d = SpdMatrix::diagonal("d", &[4.0, 1.0]).unwrap();
        assert!((mahalanobis_sq(&v(&[2.0, 0.0]), &d).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mahalanobis_sq(&v(&[0.0, 0.0]), &d).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_density_examples() {
        let one = GaussianSpec::standard(1);
        assert!((log_gaussian_density(&v(&[0.0]), &one).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-12);
        let two = GaussianSpec::standard(2);
        assert!((log_gaussian_density(&v(&[0.0, 0.0]), &two).unwrap() + LN_2PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_density_matches_direct_inverse() {
        // Independent route: explicit inverse and determinant.
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let spec = GaussianSpec::new(v(&[1.0, 0.0]), SpdMatrix::new("s", cov.clone()).unwrap()).unwrap();
        let x = v(&[3.0, 1.0]);
        let r = &x - &spec.mean;
        let inv = cov.clone().try_inverse().unwrap();
        let direct = -0.5 * (2.0 * (2.0 * std::f64::consts::PI).ln() + cov.determinant().ln() + (r.transpose() * inv * &r)[0]);
        let got = log_gaussian_density(&x, &spec).unwrap();
        assert!((got - direct).abs() < 1e-12);
        assert!((got + 3.531_024_246_969_291).abs() < 1e-6);
    }

    #[test]
    fn likelihood_examples() {
        let p = linear_problem(DMatrix::identity(2, 2), &[1.0, -1.0], SpdMatrix::identity("obs", 2), Prior::Gaussian(GaussianSpec::standard(2)));
        let ll = log_likelihood(&v(&[1.0, -1.0]), &p).unwrap();
        assert!((ll + LN_2PI).abs() < 1e-12);
        assert_eq!(p.simulator.eval_count(), 1);

        let p1 = linear_problem(DMatrix::from_element(1, 1, 0.0), &[2.0], SpdMatrix::identity("obs", 1), Prior::Gaussian(GaussianSpec::standard(1)));
        let ll = log_likelihood(&v(&[0.3]), &p1).unwrap();
        assert!((ll - (-0.5 * LN_2PI - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn precomputed_output_path_is_identical_and_free() {
        let obs = SpdMatrix::diagonal("obs", &[0.5, 2.0, 1.5]).unwrap();
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1]);
        let p = linear_problem(b, &[0.2, -0.4, 1.1], obs.clone(), Prior::Gaussian(GaussianSpec::standard(2)));
        let x = v(&[0.7, -1.3]);
        let direct = log_likelihood(&x, &p).unwrap();
        let count = p.simulator.eval_count();
        let fx = p.simulator.body().evaluate(&x).unwrap();
        let cached = log_likelihood_from_output(&fx, &p).unwrap();
        assert_eq!(direct.to_bits(), cached.to_bits());
        assert_eq!(p.simulator.eval_count(), count);
        // Same value as the density of the residual around zero.
        let r = &p.likelihood.data - &fx;
        let via_residual = log_normal(&r, &DVector::zeros(3), &obs).unwrap();
        assert!((via_residual - cached).abs() < 1e-12);
    }

    #[test]
    fn box_prior_log_density() {
        let prior = Prior::Box(BoxPrior::symmetric(3, 1.0).unwrap());
        assert_eq!(log_prior(&v(&[0.5, -1.0, 1.0]), &prior).unwrap(), 0.0);
        let out = log_prior(&v(&[0.5, -1.2, 0.0]), &prior).unwrap();
        assert_eq!(out, OUTSIDE_SUPPORT);
        assert_eq!(out + 1e300, OUTSIDE_SUPPORT);
        let g = GaussianSpec::standard(3);
        let x = v(&[0.1, 0.2, 0.3]);
        assert_eq!(log_prior(&x, &Prior::Gaussian(g.clone())).unwrap(), log_gaussian_density(&x, &g).unwrap());
    }

    #[test]
    fn box_prior_rejects_inverted_bounds() {
        assert!(BoxPrior::new(v(&[0.0, 1.0]), v(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn problem_dimension_checks() {
        let sim = SimulatorHandle::new(Arc::new(LinearSimulator::new(DMatrix::zeros(2, 3))));
        let lik = LikelihoodSpec::new(v(&[0.0, 0.0]), SpdMatrix::identity("obs", 2)).unwrap();
        assert!(ProblemSpec::new(sim.clone(), Prior::Gaussian(GaussianSpec::standard(2)), lik.clone()).is_err());
        assert!(ProblemSpec::new(sim, Prior::Gaussian(GaussianSpec::standard(3)), lik).is_ok());
    }

    #[test]
    fn problem_json_round_trip() {
        let text = r#"{
            "simulator": {"kind": "linear", "matrix": [[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]]},
            "prior": {"kind": "box", "lower": [-1.0, -2.0], "upper": [1.0, 2.0]},
            "likelihood": {"data": [0.5, 0.1, -0.2], "obs_cov": [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.04]]}
        }"#;
        let p = ProblemSpec::from_json(text).unwrap();
        assert_eq!(p.input_dim(), 2);
        assert_eq!(p.output_dim(), 3);
        let fx = p.simulator.evaluate(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(fx.as_slice(), &[3.0, 1.0, 2.0]);
        let again = serde_json::to_string(&p.document().unwrap()).unwrap();
        assert_eq!(ProblemSpec::from_json(&again).unwrap().document(), p.document());
    }

    #[test]
    fn problem_json_rejects_bad_covariance() {
        let text = r#"{
            "simulator": {"kind": "linear", "matrix": [[1.0]]},
            "prior": {"kind": "gaussian", "mean": [0.0], "covariance": [[1.0]]},
            "likelihood": {"data": [0.5], "obs_cov": [[-1.0]]}
        }"#;
        let err = ProblemSpec::from_json(text).unwrap_err().to_string();
        assert!(err.contains("positive definite"), "{err}");
    }

    #[test]
    fn counters_are_shared_by_clones_and_reset_by_fresh() {
        let sim = SimulatorHandle::new(Arc::new(LinearSimulator::new(DMatrix::identity(2, 2))));
        let twin = sim.clone();
        sim.evaluate(&v(&[1.0, 2.0])).unwrap();
        twin.evaluate(&v(&[1.0, 2.0])).unwrap();
        twin.evaluate_analysis(&v(&[1.0, 2.0])).unwrap();
        assert_eq!(sim.eval_count(), 2);
        assert_eq!(sim.analysis_eval_count(), 1);
        assert_eq!(sim.fresh().eval_count(), 0);
    }
}
