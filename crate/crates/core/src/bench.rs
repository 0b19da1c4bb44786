//! Synthetic ridge-structured problems, the mean-return metric, budget
//! curves and active-subspace projections.

use std::time::Instant;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{per_objective_local_search, random_design, sample_prior};
use crate::error::{Error, Result};
use crate::hdbo::{objective_table, run_hdbo_rml, select_from_table, HdboConfig, Maximizer, RmlResult, SimulationRecord};
use crate::linalg::SpdMatrix;
use crate::probspec::{
    log_likelihood_from_output, log_prior, BoxPrior, GaussianSpec, LikelihoodSpec, LinearSimulator, Prior, ProblemSpec, Simulator, SimulatorDocument,
    SimulatorHandle,
};
use crate::rml::{draw_randomizations, objective, oracle_linear_rml, RmlInstance};
use crate::seeding::{derive_seed, labels, stream};

/// Link functions `g: R^d -> R^m` of the synthetic ridge simulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    /// `g(u) = u`: the log-likelihood is a quadratic bowl in `Aᵀx`.
    QuadraticBowl,
    /// `g(u) = (1 - u₁, 10 (u₂ - u₁²))`, so `|g|²` is Rosenbrock's function.
    #[serde(rename = "rosenbrock-2d")]
    Rosenbrock2d,
    /// `g(u)_i = sin(2 u_i) + u_i / 2`, a non-monotone ridge.
    SineRidge,
}

impl Link {
    pub fn output_dim(&self, active_dim: usize) -> usize {
        match self {
            Link::QuadraticBowl | Link::SineRidge => active_dim,
            Link::Rosenbrock2d => 2,
        }
    }

    pub fn check_active_dim(&self, active_dim: usize) -> Result<()> {
        match self {
            Link::Rosenbrock2d if active_dim != 2 => Err(Error::Config(format!("rosenbrock-2d needs active_dim = 2, got {active_dim}"))),
            _ if active_dim == 0 => Err(Error::Config("active_dim must be at least 1".into())),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Link::QuadraticBowl => u.clone(),
            Link::Rosenbrock2d => DVector::from_vec(vec![1.0 - u[0], 10.0 * (u[1] - u[0] * u[0])]),
            Link::SineRidge => u.map(|v| (2.0 * v).sin() + 0.5 * v),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Link::QuadraticBowl => "quadratic-bowl",
            Link::Rosenbrock2d => "rosenbrock-2d",
            Link::SineRidge => "sine-ridge",
        }
    }
}

/// `f(x) = g(Aᵀx)` with `AᵀA = I`.
#[derive(Clone, Debug)]
pub struct RidgeSimulator {
    link: Link,
    active: DMatrix<f64>,
}

impl RidgeSimulator {
    pub fn new(link: Link, active: DMatrix<f64>) -> Result<Self> {
        link.check_active_dim(active.ncols())?;
        let gram = active.transpose() * &active;
        let err = (gram - DMatrix::identity(active.ncols(), active.ncols())).amax();
        if err > 1e-10 {
            return Err(Error::Config(format!("active_matrix is not semi-orthogonal (|AᵀA - I| = {err:e})")));
        }
        Ok(Self { link, active })
    }

    pub fn link(&self) -> Link {
        self.link
    }
}

impl Simulator for RidgeSimulator {
    fn name(&self) -> &str {
        self.link.name()
    }

    fn input_dim(&self) -> usize {
        self.active.nrows()
    }

    fn output_dim(&self) -> usize {
        self.link.output_dim(self.active.ncols())
    }

    fn evaluate(&self, x: &DVector<f64>) -> std::result::Result<DVector<f64>, String> {
        Ok(self.link.apply(&(self.active.transpose() * x)))
    }

    fn active_subspace(&self) -> Option<&DMatrix<f64>> {
        Some(&self.active)
    }

    fn document(&self) -> Option<SimulatorDocument> {
        Some(SimulatorDocument::Ridge { link: self.link, active_matrix: self.active.clone() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorChoice {
    /// `U[-half_width, half_width]^D`.
    Uniform {
        #[serde(default = "one")]
        half_width: f64,
    },
    /// `N(0, I_D)`.
    StandardNormal,
}

fn one() -> f64 {
    1.0
}

fn default_noise_sd() -> f64 {
    0.1
}

/// Catalog problem request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    /// `linear-gaussian`, `quadratic-bowl`, `rosenbrock-2d` or `sine-ridge`.
    pub name: String,
    pub input_dim: usize,
    /// Active dimension `d`; for `linear-gaussian` this is `m`.
    pub active_dim: usize,
    /// Prior; defaults to standard normal for `linear-gaussian`, else `U[-1, 1]^D`.
    #[serde(default)]
    pub prior: Option<PriorChoice>,
    /// Observation noise sd (`Σ_obs = sd² I`).
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl CatalogSpec {
    pub fn new(name: &str, input_dim: usize, active_dim: usize, seed: u64) -> Self {
        Self { name: name.into(), input_dim, active_dim, prior: None, noise_sd: default_noise_sd(), seed }
    }

    pub fn with_prior(mut self, prior: PriorChoice) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn with_noise_sd(mut self, sd: f64) -> Self {
        self.noise_sd = sd;
        self
    }
}

pub const CATALOG: [&str; 4] = ["linear-gaussian", "quadratic-bowl", "rosenbrock-2d", "sine-ridge"];

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

fn orthonormal_columns(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Builds a reproducible catalog problem with data `f(x_true) + noise` for a
/// prior draw `x_true`.
pub fn make_problem(spec: &CatalogSpec) -> Result<ProblemSpec> {
    let (d_in, d_act) = (spec.input_dim, spec.active_dim);
    if d_act == 0 || d_act > d_in {
        return Err(Error::Config(format!("need 1 <= active_dim <= input_dim, got {d_act} and {d_in}")));
    }
    if !(spec.noise_sd > 0.0) {
        return Err(Error::Config(format!("noise_sd must be positive, got {}", spec.noise_sd)));
    }
    let mut rng = stream(spec.seed, labels::PROBLEM, 0);
    let body: std::sync::Arc<dyn Simulator> = match spec.name.as_str() {
        "linear-gaussian" => {
            let b = gaussian_matrix(d_act, d_in, &mut rng) / (d_in as f64).sqrt();
            let active = orthonormal_columns(b.transpose());
            std::sync::Arc::new(LinearSimulator::new(b).with_active_subspace(active))
        }
        other => {
            let link = match other {
                "quadratic-bowl" => Link::QuadraticBowl,
                "rosenbrock-2d" => Link::Rosenbrock2d,
                "sine-ridge" => Link::SineRidge,
                _ => return Err(Error::UnknownProblem(other.to_string())),
            };
            link.check_active_dim(d_act)?;
            let active = orthonormal_columns(gaussian_matrix(d_in, d_act, &mut rng));
            std::sync::Arc::new(RidgeSimulator::new(link, active)?)
        }
    };
    let prior_choice =
        spec.prior.unwrap_or(if spec.name == "linear-gaussian" { PriorChoice::StandardNormal } else { PriorChoice::Uniform { half_width: 1.0 } });
    let prior = match prior_choice {
        PriorChoice::Uniform { half_width } => Prior::Box(BoxPrior::symmetric(d_in, half_width)?),
        PriorChoice::StandardNormal => Prior::Gaussian(GaussianSpec::standard(d_in)),
    };
    let x_true = sample_prior(&prior, &mut rng)?;
    let m = body.output_dim();
    let clean = body.evaluate(&x_true).map_err(Error::Internal)?;
    let noise = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let data = clean + noise * spec.noise_sd;
    let obs = SpdMatrix::new("obs_cov", DMatrix::identity(m, m) * (spec.noise_sd * spec.noise_sd))?;
    ProblemSpec::new(SimulatorHandle::new(body), prior, LikelihoodSpec::new(data, obs)?)
}

/// `(1/n) Σ_n O_n(x*_n)` from the cached simulator outputs in the trace.
pub fn mean_return(result: &RmlResult, instances: &[RmlInstance], problem: &ProblemSpec) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Config("mean return over zero objectives".into()));
    }
    let mut total = 0.0;
    for inst in instances {
        let m = result.maximizers.iter().find(|m| m.objective == inst.index).ok_or(Error::MissingObjective(inst.index))?;
        let rec = result.records.get(m.record).ok_or(Error::MissingObjective(inst.index))?;
        let (x, fx) = rec.candidate();
        total += objective(inst, &x, problem, Some(&fx))?;
    }
    Ok(total / instances.len() as f64)
}

/// Exact RML samples for linear simulators with a Gaussian prior. The
/// simulator outputs at the samples go on the analysis counter.
pub fn oracle_rml(problem: &ProblemSpec, instances: &[RmlInstance]) -> Result<RmlResult> {
    let b = problem.simulator.body().linear_map().ok_or_else(|| Error::Config("the RML oracle needs a linear simulator".into()))?.clone();
    let mut records = Vec::with_capacity(instances.len());
    let mut maximizers = Vec::with_capacity(instances.len());
    for (pos, inst) in instances.iter().enumerate() {
        let x = oracle_linear_rml(&b, inst, problem)?;
        let fx = problem.simulator.evaluate_analysis(&x)?;
        let value = objective(inst, &x, problem, Some(&fx))?;
        records.push(SimulationRecord {
            emb_index: None,
            y: None,
            x: x.iter().copied().collect(),
            fx: fx.iter().copied().collect(),
            refined_z: None,
            f_refined: None,
            iteration: pos + 1,
            objective: inst.index,
            evals: 0,
            gp_training_size: None,
        });
        maximizers.push(Maximizer { objective: inst.index, x: x.iter().copied().collect(), value, record: pos });
    }
    Ok(RmlResult { method: "oracle-rml".into(), maximizers, records, evaluations: 0, embeddings: Vec::new() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    HdboRml,
    RandomDesign,
    LocalSearch,
    OracleRml,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::HdboRml => "hdbo-rml",
            Method::RandomDesign => "random-design",
            Method::LocalSearch => "local-search",
            Method::OracleRml => "oracle-rml",
        }
    }

    /// Runs the method with `config.budget` simulator calls; `config.seed`
    /// seeds every stream it uses.
    pub fn run(&self, problem: &ProblemSpec, instances: &[RmlInstance], config: &HdboConfig) -> Result<RmlResult> {
        match self {
            Method::HdboRml => run_hdbo_rml(problem, instances, config),
            Method::RandomDesign => random_design(problem, instances, config.budget, &mut stream(config.seed, labels::RANDOM_DESIGN, 0)),
            Method::LocalSearch => per_objective_local_search(problem, instances, config.budget, &mut stream(config.seed, labels::LOCAL_SEARCH, 0)),
            Method::OracleRml => oracle_rml(problem, instances),
        }
    }

    fn uses_budget(&self) -> bool {
        !matches!(self, Method::OracleRml)
    }
}

/// Instances for one seeded run: the randomization stream is split off the
/// seed so it never depends on how many draws the optimizer makes.
pub fn draw_instances(problem: &ProblemSpec, n_rml: usize, seed: u64) -> Result<Vec<RmlInstance>> {
    draw_randomizations(problem, n_rml, &mut stream(seed, labels::RANDOMIZATION, 0))
}

/// `n` evenly spaced budgets ending at `budget`.
pub fn even_checkpoints(budget: usize, n: usize) -> Vec<u64> {
    let n = n.max(1);
    let mut out: Vec<u64> = (1..=n).map(|i| (budget * i / n) as u64).filter(|b| *b > 0).collect();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub neg_mean_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub evaluations: u64,
    pub curve: Vec<CurvePoint>,
    pub final_neg_mean_return: f64,
    pub maximizers: Vec<Maximizer>,
    /// `Aᵀ x*_n` per objective, when the problem exposes `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projections: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub trials: Vec<TrialOutcome>,
    /// Trial-averaged curve over the checkpoints every trial reached.
    pub mean_curve: Vec<CurvePoint>,
    pub final_mean: f64,
    pub final_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: serde_json::Value,
    pub seed: u64,
    pub trial_seeds: Vec<u64>,
    pub checkpoints: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    /// Simulator calls outside the optimization budget (oracle outputs).
    pub analysis_evaluations: u64,
    pub wall_clock_secs: f64,
}

/// Negative mean return at each checkpoint, reconstructed from one
/// full-budget trace by restricting the selection to records completed
/// within the checkpoint.
pub fn curve_from_trace(
    result: &RmlResult,
    instances: &[RmlInstance],
    problem: &ProblemSpec,
    checkpoints: &[u64],
    budgeted: bool,
) -> Result<Vec<CurvePoint>> {
    let table = objective_table(&result.records, instances, problem)?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        if budgeted && cp > result.evaluations {
            warn!("{}: trace holds {} evaluations, skipping checkpoint {cp}", result.method, result.evaluations);
            continue;
        }
        let limit = budgeted.then_some(cp);
        match select_from_table(&result.records, &table, instances.len(), limit) {
            Ok(sel) => {
                let mean = sel.iter().map(|m| m.value).sum::<f64>() / instances.len() as f64;
                out.push(CurvePoint { budget: cp, neg_mean_return: -mean });
            }
            Err(Error::MissingObjective(_)) => {
                warn!("{}: no candidate for every objective within {cp} evaluations, skipping", result.method);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Runs every method for `trials` seeded trials and summarizes negative
/// mean return against budget. Trials run in parallel; the output depends
/// only on the inputs.
pub fn budget_curve(
    problem: &ProblemSpec,
    methods: &[Method],
    checkpoints: &[u64],
    trials: usize,
    config: &HdboConfig,
    config_snapshot: serde_json::Value,
) -> Result<ExperimentReport> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly increasing".into()));
    }
    if trials == 0 || methods.is_empty() {
        return Err(Error::Config("need at least one method and one trial".into()));
    }
    let started = Instant::now();
    let trial_seeds: Vec<u64> = (0..trials).map(|t| derive_seed(config.seed, labels::TRIAL, t as u64)).collect();
    let active = problem.simulator.body().active_subspace().cloned();

    type TrialRow = (Vec<TrialOutcome>, u64);
    let rows: Vec<Result<TrialRow>> = trial_seeds
        .par_iter()
        .enumerate()
        .map(|(t, &seed)| {
            let base = problem.fresh();
            let instances = draw_instances(&base, config.n_rml, seed)?;
            let mut outcomes = Vec::with_capacity(methods.len());
            let mut analysis = 0;
            for method in methods {
                let p = base.fresh();
                let cfg = HdboConfig { seed, ..config.clone() };
                let result = method.run(&p, &instances, &cfg)?;
                analysis += p.simulator.analysis_eval_count();
                let curve = curve_from_trace(&result, &instances, &p, checkpoints, method.uses_budget())?;
                let final_neg_mean_return = -mean_return(&result, &instances, &p)?;
                let projections = active.as_ref().map(|a| result.maximizers.iter().map(|m| project(&DVector::from_column_slice(&m.x), a)).collect());
                outcomes.push(TrialOutcome {
                    trial: t,
                    seed,
                    evaluations: result.evaluations,
                    curve,
                    final_neg_mean_return,
                    maximizers: result.maximizers,
                    projections,
                });
            }
            Ok((outcomes, analysis))
        })
        .collect();

    let mut per_method: Vec<Vec<TrialOutcome>> = vec![Vec::with_capacity(trials); methods.len()];
    let mut analysis_evaluations = 0;
    for row in rows {
        let (outcomes, analysis) = row?;
        analysis_evaluations += analysis;
        for (i, o) in outcomes.into_iter().enumerate() {
            per_method[i].push(o);
        }
    }
    let summaries = methods
        .iter()
        .zip(per_method)
        .map(|(m, trials)| {
            let mean_curve = checkpoints
                .iter()
                .filter_map(|&cp| {
                    let vals: Vec<f64> = trials.iter().filter_map(|t| t.curve.iter().find(|p| p.budget == cp)).map(|p| p.neg_mean_return).collect();
                    (vals.len() == trials.len()).then(|| CurvePoint { budget: cp, neg_mean_return: vals.iter().sum::<f64>() / vals.len() as f64 })
                })
                .collect();
            let finals: Vec<f64> = trials.iter().map(|t| t.final_neg_mean_return).collect();
            let (final_mean, final_sd) = mean_sd(&finals);
            MethodSummary { method: m.name().into(), trials, mean_curve, final_mean, final_sd }
        })
        .collect();

    Ok(ExperimentReport {
        config: config_snapshot,
        seed: config.seed,
        trial_seeds,
        checkpoints: checkpoints.to_vec(),
        methods: summaries,
        analysis_evaluations,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// `Aᵀ x`.
pub fn project(x: &DVector<f64>, active: &DMatrix<f64>) -> Vec<f64> {
    (active.transpose() * x).iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedSample {
    pub coords: Vec<f64>,
    pub log_post: f64,
}

/// `{Aᵀx_i, log p(D|x_i) + log p(x_i)}` for points whose simulator outputs
/// are already known.
pub fn project_active(samples: &[(DVector<f64>, DVector<f64>)], problem: &ProblemSpec) -> Result<Vec<ProjectedSample>> {
    let active = problem.simulator.body().active_subspace().ok_or(Error::ActiveSubspaceUnavailable)?;
    samples
        .iter()
        .map(|(x, fx)| {
            let log_post = log_likelihood_from_output(fx, problem)? + log_prior(x, &problem.prior)?;
            Ok(ProjectedSample { coords: project(x, active), log_post })
        })
        .collect()
}

/// Projections of a method's selected samples, from cached outputs.
pub fn project_result(result: &RmlResult, problem: &ProblemSpec) -> Result<Vec<ProjectedSample>> {
    let samples: Vec<_> = result.maximizers.iter().map(|m| result.records[m.record].candidate()).collect();
    project_active(&samples, problem)
}

/// Fresh prior draws projected into the active subspace. Simulator calls go
/// on the analysis counter, not the optimization budget.
pub fn prior_landscape<R: Rng + ?Sized>(problem: &ProblemSpec, count: usize, rng: &mut R) -> Result<Vec<ProjectedSample>> {
    if problem.simulator.body().active_subspace().is_none() {
        return Err(Error::ActiveSubspaceUnavailable);
    }
    let samples = (0..count)
        .map(|_| {
            let x = sample_prior(&problem.prior, rng)?;
            let fx = problem.simulator.evaluate_analysis(&x)?;
            Ok((x, fx))
        })
        .collect::<Result<Vec<_>>>()?;
    project_active(&samples, problem)
}

/// CSV with columns `method,budget,trial,neg_mean_return`.
pub fn curves_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "budget", "trial", "neg_mean_return"]).map_err(csv_err)?;
    for m in &report.methods {
        for t in &m.trials {
            for p in &t.curve {
                w.write_record([m.method.clone(), p.budget.to_string(), t.trial.to_string(), p.neg_mean_return.to_string()]).map_err(csv_err)?;
            }
        }
    }
    finish(w)
}

/// CSV with columns `method,trials,final_neg_mean_return_mean,final_neg_mean_return_sd`.
pub fn summary_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "trials", "final_neg_mean_return_mean", "final_neg_mean_return_sd"]).map_err(csv_err)?;
    for m in &report.methods {
        w.write_record([m.method.clone(), m.trials.len().to_string(), m.final_mean.to_string(), m.final_sd.to_string()]).map_err(csv_err)?;
    }
    finish(w)
}

/// CSV with columns `sample_id,coord_1..coord_d,log_post`.
pub fn projections_csv(samples: &[ProjectedSample]) -> Result<String> {
    let d = samples.first().map_or(0, |s| s.coords.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=d).map(|i| format!("coord_{i}")));
    header.push("log_post".into());
    w.write_record(&header).map_err(csv_err)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.coords.iter().map(f64::to_string));
        row.push(s.log_post.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_problems_build() {
        for name in CATALOG {
            let d = if name == "linear-gaussian" { 3 } else { 2 };
            let p = make_problem(&CatalogSpec::new(name, 10, d, 1)).unwrap();
            let a = p.simulator.body().active_subspace().unwrap();
            assert!((a.transpose() * a - DMatrix::identity(d, d)).amax() < 1e-10, "{name}");
            assert_eq!(p.simulator.eval_count(), 0);
        }
        assert!(matches!(make_problem(&CatalogSpec::new("nope", 4, 1, 0)), Err(Error::UnknownProblem(_))));
        assert!(make_problem(&CatalogSpec::new("rosenbrock-2d", 4, 1, 0)).is_err());
    }

    #[test]
    fn linear_catalog_is_exactly_linear() {
        let p = make_problem(&CatalogSpec::new("linear-gaussian", 8, 5, 3)).unwrap();
        let b = p.simulator.body().linear_map().unwrap().clone();
        assert_eq!((b.nrows(), b.ncols()), (5, 8));
        let x = DVector::from_fn(8, |i, _| i as f64 * 0.1 - 0.3);
        assert_eq!(p.simulator.evaluate(&x).unwrap(), &b * &x);
        assert!(p.prior.is_gaussian());
    }

    #[test]
    fn make_problem_is_reproducible() {
        let a = make_problem(&CatalogSpec::new("sine-ridge", 20, 1, 9)).unwrap();
        let b = make_problem(&CatalogSpec::new("sine-ridge", 20, 1, 9)).unwrap();
        assert_eq!(a.document(), b.document());
        let c = make_problem(&CatalogSpec::new("sine-ridge", 20, 1, 10)).unwrap();
        assert_ne!(a.document(), c.document());
    }

    #[test]
    fn checkpoints_are_even() {
        assert_eq!(even_checkpoints(1000, 4), vec![250, 500, 750, 1000]);
        assert_eq!(even_checkpoints(3, 20), vec![1, 2, 3]);
    }

    #[test]
    fn projections_csv_shape() {
        let s = vec![ProjectedSample { coords: vec![0.5], log_post: -1.25 }, ProjectedSample { coords: vec![-2.0], log_post: -3.0 }];
        let text = projections_csv(&s).unwrap();
        assert_eq!(text, "sample_id,coord_1,log_post\n0,0.5,-1.25\n1,-2,-3\n");
    }
}
