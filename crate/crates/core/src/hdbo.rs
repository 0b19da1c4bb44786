//! Bayesian optimization of all randomized objectives at once over a set of
//! fixed random embeddings.
//!
//! Every embedding keeps its own ensemble of `(y, f(R y))` simulations. Each
//! iteration picks the next objective cyclically, rebuilds that objective's
//! GP training targets from the cached simulator outputs of *all* earlier
//! records of the embedding (no extra simulator calls), maximizes GP-UCB
//! and simulates the lifted maximizer. With a Gaussian prior each lifted
//! point is also moved by a simulator-free proximal step toward the
//! objective's perturbed prior mean, and that refined point is simulated as
//! well. Final maximizers are picked from the recorded candidates.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{sample_embedding, Embedding};
use crate::error::{Error, Result};
use crate::gp::{FitOptions, GpModel, KernelParams};
use crate::linalg::SpdMatrix;
use crate::probspec::{GaussianSpec, Prior, ProblemSpec};
use crate::qmc::KroneckerSequence;
use crate::rml::{objective, randomized_log_likelihood, RmlInstance};
use crate::seeding::{labels, stream};

fn default_k() -> usize {
    10
}
fn default_n0() -> usize {
    5
}
fn default_budget() -> usize {
    1000
}
fn default_beta() -> f64 {
    2.0
}
fn default_acq_restarts() -> usize {
    10
}
fn default_prox_eta() -> f64 {
    0.25
}
fn default_domain_scale() -> f64 {
    1.0
}
fn default_acq_probes() -> usize {
    512
}
fn default_acq_steps() -> usize {
    50
}
fn default_refit_below() -> usize {
    30
}
fn default_refit_every() -> usize {
    5
}
fn default_gp_restarts() -> usize {
    5
}
fn default_gp_iters() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HdboConfig {
    pub n_rml: usize,
    #[serde(rename = "budget_N", default = "default_budget")]
    pub budget: usize,
    #[serde(rename = "K", default = "default_k")]
    pub num_embeddings: usize,
    /// Embedding dimension; must be given explicitly.
    pub d_e: usize,
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_acq_restarts")]
    pub acq_restarts: usize,
    #[serde(default = "default_prox_eta")]
    pub prox_eta: f64,
    #[serde(default)]
    pub seed: u64,
    /// The search box is `[-s√d_e, s√d_e]^{d_e}`.
    #[serde(default = "default_domain_scale")]
    pub domain_scale: f64,
    #[serde(default = "default_acq_probes")]
    pub acq_probes: usize,
    #[serde(default = "default_acq_steps")]
    pub acq_steps: usize,
    /// Hyperparameters are refit every iteration below this training size...
    #[serde(default = "default_refit_below")]
    pub refit_below: usize,
    /// ...and every `refit_every` iterations above it.
    #[serde(default = "default_refit_every")]
    pub refit_every: usize,
    #[serde(default = "default_gp_restarts")]
    pub gp_restarts: usize,
    #[serde(default = "default_gp_iters")]
    pub gp_max_iters: usize,
}

impl HdboConfig {
    /// Defaults for everything but the RML batch size and embedding dimension.
    pub fn new(n_rml: usize, d_e: usize) -> Self {
        Self {
            n_rml,
            budget: default_budget(),
            num_embeddings: default_k(),
            d_e,
            n0: default_n0(),
            beta: default_beta(),
            acq_restarts: default_acq_restarts(),
            prox_eta: default_prox_eta(),
            seed: 0,
            domain_scale: default_domain_scale(),
            acq_probes: default_acq_probes(),
            acq_steps: default_acq_steps(),
            refit_below: default_refit_below(),
            refit_every: default_refit_every(),
            gp_restarts: default_gp_restarts(),
            gp_max_iters: default_gp_iters(),
        }
    }

    /// Simulator calls per iteration: 2 with a Gaussian prior (lifted and
    /// refined point), 1 otherwise.
    pub fn calls_per_iteration(gaussian: bool) -> usize {
        if gaussian {
            2
        } else {
            1
        }
    }

    /// `⌊N/K⌋`, or `⌊N/2K⌋` with a Gaussian prior.
    pub fn iterations_per_embedding(&self, gaussian: bool) -> usize {
        self.budget / (Self::calls_per_iteration(gaussian) * self.num_embeddings.max(1))
    }

    /// Exact number of simulator calls a run consumes.
    pub fn total_evaluations(&self, gaussian: bool) -> usize {
        Self::calls_per_iteration(gaussian) * self.num_embeddings * self.iterations_per_embedding(gaussian)
    }

    pub fn validate(&self, input_dim: usize, gaussian: bool) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_rml == 0 {
            return fail("n_rml: must be at least 1".into());
        }
        if self.num_embeddings == 0 {
            return fail("K: must be at least 1".into());
        }
        if self.d_e == 0 || self.d_e > input_dim {
            return fail(format!("d_e: must be in 1..={input_dim}, got {}", self.d_e));
        }
        if !(self.beta >= 0.0) {
            return fail(format!("beta: must be non-negative, got {}", self.beta));
        }
        if !(self.prox_eta > 0.0) {
            return fail(format!("prox_eta: must be positive, got {}", self.prox_eta));
        }
        if !(self.domain_scale > 0.0) {
            return fail(format!("domain_scale: must be positive, got {}", self.domain_scale));
        }
        if self.acq_restarts == 0 || self.acq_probes == 0 {
            return fail("acq_restarts/acq_probes: must be at least 1".into());
        }
        let iters = self.iterations_per_embedding(gaussian);
        if self.n0 == 0 || self.n0 >= iters {
            return fail(format!(
                "budget_N: {} allows {iters} iterations per embedding (K = {}{}), which must exceed n0 = {}",
                self.budget,
                self.num_embeddings,
                if gaussian { ", two calls each" } else { "" },
                self.n0
            ));
        }
        Ok(())
    }
}

/// One simulated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emb_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_z: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_refined: Option<Vec<f64>>,
    /// 1-based iteration within the embedding (or within the method).
    pub iteration: usize,
    /// 0-based objective the point was acquired for.
    pub objective: usize,
    /// Cumulative simulator calls once this record is complete.
    pub evals: u64,
    /// Size of the GP training set the point was acquired with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_training_size: Option<usize>,
}

impl SimulationRecord {
    /// The point competing in final selection: the refined point if there
    /// is one, otherwise the simulated point.
    pub fn candidate(&self) -> (DVector<f64>, DVector<f64>) {
        match (&self.refined_z, &self.f_refined) {
            (Some(z), Some(fz)) => (DVector::from_column_slice(z), DVector::from_column_slice(fz)),
            _ => (DVector::from_column_slice(&self.x), DVector::from_column_slice(&self.fx)),
        }
    }

    fn order_key(&self, position: usize) -> (usize, usize, usize) {
        (self.emb_index.unwrap_or(0), self.iteration, position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maximizer {
    pub objective: usize,
    pub x: Vec<f64>,
    pub value: f64,
    /// Index into the trace.
    pub record: usize,
}

/// Output of any sampling method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmlResult {
    pub method: String,
    pub maximizers: Vec<Maximizer>,
    pub records: Vec<SimulationRecord>,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embeddings: Vec<Embedding>,
}

impl RmlResult {
    /// Trace as JSON lines, one record per line.
    pub fn trace_jsonl(&self) -> Result<String> {
        trace_to_jsonl(&self.records)
    }
}

pub fn trace_to_jsonl(records: &[SimulationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<SimulationRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

/// `O_n` at every record's candidate, from cached simulator outputs:
/// `table[record][objective]`.
pub fn objective_table(records: &[SimulationRecord], instances: &[RmlInstance], problem: &ProblemSpec) -> Result<Vec<Vec<f64>>> {
    records
        .iter()
        .map(|r| {
            let (x, fx) = r.candidate();
            instances.iter().map(|inst| objective(inst, &x, problem, Some(&fx))).collect()
        })
        .collect()
}

/// Per-objective argmax over records completed within `eval_limit`.
/// Ties go to the lowest `(embedding, iteration)`; `-∞` never wins.
pub fn select_from_table(records: &[SimulationRecord], table: &[Vec<f64>], n_rml: usize, eval_limit: Option<u64>) -> Result<Vec<Maximizer>> {
    (0..n_rml)
        .map(|n| {
            let mut best: Option<(f64, (usize, usize, usize), usize)> = None;
            for (pos, rec) in records.iter().enumerate() {
                if eval_limit.is_some_and(|lim| rec.evals > lim) {
                    continue;
                }
                let value = table[pos][n];
                if !value.is_finite() {
                    continue;
                }
                let key = rec.order_key(pos);
                let better = match best {
                    None => true,
                    Some((bv, bk, _)) => value > bv || (value == bv && key < bk),
                };
                if better {
                    best = Some((value, key, pos));
                }
            }
            let (value, _, pos) = best.ok_or(Error::MissingObjective(n))?;
            Ok(Maximizer { objective: n, x: records[pos].candidate().0.iter().copied().collect(), value, record: pos })
        })
        .collect()
}

/// [`objective_table`] followed by [`select_from_table`].
pub fn select_maximizers(
    records: &[SimulationRecord],
    instances: &[RmlInstance],
    problem: &ProblemSpec,
    eval_limit: Option<u64>,
) -> Result<Vec<Maximizer>> {
    let table = objective_table(records, instances, problem)?;
    select_from_table(records, &table, instances.len(), eval_limit)
}

/// Fills in the cumulative `evals` field in trace order.
pub(crate) fn number_evaluations(records: &mut [SimulationRecord]) -> u64 {
    let mut total = 0u64;
    for r in records.iter_mut() {
        total += if r.f_refined.is_some() { 2 } else { 1 };
        r.evals = total;
    }
    total
}

/// Approximate argmax of GP-UCB over `[-h, h]^d`: the best `restarts` of
/// `probes` quasi-random points, each polished by a coordinate search with
/// step halving.
pub fn acquisition_maximize<R: Rng + ?Sized>(
    model: &GpModel,
    half_width: f64,
    beta: f64,
    restarts: usize,
    probes: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<f64> {
    let dim = model.dim();
    let (lo, hi) = (-half_width, half_width);
    let mut seq = KroneckerSequence::scrambled(dim, rng);
    let mut scored: Vec<(f64, usize, Vec<f64>)> = (0..probes.max(1))
        .map(|i| {
            let y = seq.next_in_box(lo, hi);
            (model.ucb(&y, beta), i, y)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (start_value, _, start) in scored.into_iter().take(restarts.max(1)) {
        let (value, y) = coordinate_ascent(model, beta, start, start_value, lo, hi, steps);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, y));
        }
    }
    best.expect("at least one start").1
}

fn coordinate_ascent(model: &GpModel, beta: f64, mut y: Vec<f64>, mut value: f64, lo: f64, hi: f64, steps: usize) -> (f64, Vec<f64>) {
    let mut step = 0.25 * (hi - lo);
    let min_step = 1e-9 * (hi - lo);
    for _ in 0..steps {
        let mut improved = false;
        for c in 0..y.len() {
            for sign in [1.0, -1.0] {
                let mut cand = y.clone();
                cand[c] = (cand[c] + sign * step).clamp(lo, hi);
                if cand[c] == y[c] {
                    continue;
                }
                let v = model.ucb(&cand, beta);
                if v > value {
                    y = cand;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < min_step {
                break;
            }
        }
    }
    (value, y)
}

/// Closed-form proximal step toward a Gaussian prior:
/// `argmax_z log N(z | μ_n, Σ) - |z - x0|² / (2η)`, i.e.
/// `z = (I + Σ/η)⁻¹ (μ_n + Σ x0 / η)`. The factor of `I + Σ/η` is cached.
#[derive(Clone, Debug)]
pub struct ProximalPriorStep {
    prior: GaussianSpec,
    eta: f64,
    system: SpdMatrix,
}

impl ProximalPriorStep {
    pub fn new(prior: &GaussianSpec, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Config(format!("prox_eta: must be positive, got {eta}")));
        }
        let d = prior.dim();
        let system = nalgebra::DMatrix::identity(d, d) + prior.covariance.matrix() / eta;
        let system = SpdMatrix::new("proximal system", system).map_err(|e| Error::Internal(e.to_string()))?;
        Ok(Self { prior: prior.clone(), eta, system })
    }

    pub fn apply(&self, x0: &DVector<f64>, prior_mean: &DVector<f64>) -> Result<DVector<f64>> {
        if x0.len() != self.prior.dim() {
            return Err(Error::dims("proximal start point", self.prior.dim(), x0.len()));
        }
        let rhs = prior_mean + self.prior.covariance.matrix() * x0 / self.eta;
        self.system.solve(&rhs)
    }
}

/// One proximal prior step for `instance`; uses no simulator calls.
pub fn local_prior_refine(x0: &DVector<f64>, instance: &RmlInstance, prior: &GaussianSpec, eta: f64) -> Result<DVector<f64>> {
    let mean = instance.prior_mean.as_ref().ok_or_else(|| Error::Config("local prior refinement needs a Gaussian prior".into()))?;
    ProximalPriorStep::new(prior, eta)?.apply(x0, mean)
}

/// Objective index for the 1-based iteration `iteration`.
pub fn cycled_objective(iteration: usize, n_rml: usize) -> usize {
    (iteration - 1) % n_rml
}

struct Runner<'a> {
    problem: &'a ProblemSpec,
    instances: &'a [RmlInstance],
    config: &'a HdboConfig,
    proximal: Option<ProximalPriorStep>,
}

impl Runner<'_> {
    fn simulate(&self, emb: &Embedding, y: Vec<f64>, iteration: usize, gp_training_size: Option<usize>) -> Result<SimulationRecord> {
        let n = cycled_objective(iteration, self.config.n_rml);
        let x = emb.lift(&y, &self.problem.prior)?;
        let fx = self.problem.simulator.evaluate(&x)?;
        let (refined_z, f_refined) = match &self.proximal {
            Some(step) => {
                let mean = self.instances[n].prior_mean.as_ref().ok_or_else(|| Error::Internal(format!("instance {n} lacks a prior mean")))?;
                let z = step.apply(&x, mean)?;
                let fz = self.problem.simulator.evaluate(&z)?;
                (Some(z.iter().copied().collect()), Some(fz.iter().copied().collect()))
            }
            None => (None, None),
        };
        Ok(SimulationRecord {
            emb_index: Some(emb.index),
            y: Some(y),
            x: x.iter().copied().collect(),
            fx: fx.iter().copied().collect(),
            refined_z,
            f_refined,
            iteration,
            objective: n,
            evals: 0,
            gp_training_size,
        })
    }

    /// GP targets for objective `n`: the randomized log-likelihood at every
    /// earlier lifted point (which is the whole objective for box priors,
    /// since lifted points are clipped into the support).
    fn training_set(&self, records: &[SimulationRecord], n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let inst = &self.instances[n];
        let mut inputs = Vec::with_capacity(records.len());
        let mut targets = Vec::with_capacity(records.len());
        for r in records {
            let fx = DVector::from_column_slice(&r.fx);
            let value = match self.problem.prior {
                Prior::Box(_) => objective(inst, &DVector::from_column_slice(&r.x), self.problem, Some(&fx))?,
                Prior::Gaussian(_) => randomized_log_likelihood(inst, &fx, self.problem)?,
            };
            if value.is_finite() {
                inputs.push(r.y.clone().expect("embedding records carry y"));
                targets.push(value);
            }
        }
        Ok((inputs, targets))
    }

    /// Sequential BO loop on one embedding, continuing from its initial design.
    fn run_embedding(&self, emb: &Embedding, mut records: Vec<SimulationRecord>) -> (Vec<SimulationRecord>, Option<Error>) {
        let k = emb.index;
        let seed = self.config.seed;
        let mut acq_rng = stream(seed, labels::ACQUISITION, k as u64);
        let mut fit_rng = stream(seed, labels::GP_FIT, k as u64);
        let fit_options = FitOptions {
            restarts: self.config.gp_restarts,
            max_iters: self.config.gp_max_iters,
            domain_diameter: Some(2.0 * emb.half_width * (emb.dim() as f64).sqrt()),
            fixed_noise_var: None,
        };
        let mut params: Option<KernelParams> = None;
        let mut since_refit = 0usize;
        let total = self.config.iterations_per_embedding(self.proximal.is_some());

        for iteration in self.config.n0 + 1..=total {
            let n = cycled_objective(iteration, self.config.n_rml);
            let step = (|| -> Result<SimulationRecord> {
                let (inputs, targets) = self.training_set(&records, n)?;
                let refit = params.is_none() || inputs.len() < self.config.refit_below || since_refit + 1 >= self.config.refit_every;
                let model = if refit {
                    let m = GpModel::fit(emb.dim(), &inputs, &targets, &fit_options, &mut fit_rng)?;
                    params = Some(*m.params());
                    since_refit = 0;
                    m
                } else {
                    since_refit += 1;
                    GpModel::with_params(emb.dim(), &inputs, &targets, params.expect("fitted before"))?
                };
                let y = acquisition_maximize(
                    &model,
                    emb.half_width,
                    self.config.beta,
                    self.config.acq_restarts,
                    self.config.acq_probes,
                    self.config.acq_steps,
                    &mut acq_rng,
                );
                self.simulate(emb, y, iteration, Some(inputs.len()))
            })();
            match step {
                Ok(rec) => records.push(rec),
                Err(e) => return (records, Some(e)),
            }
        }
        (records, None)
    }
}

/// Runs the embedding-based BO sampler for all `instances` within the
/// configured simulation budget.
///
/// Trace order: the `n0` initial points of every embedding, then the BO
/// iterations of embedding 0, 1, ... in turn.
pub fn run_hdbo_rml(problem: &ProblemSpec, instances: &[RmlInstance], config: &HdboConfig) -> Result<RmlResult> {
    let gaussian = problem.prior.is_gaussian();
    config.validate(problem.input_dim(), gaussian)?;
    if instances.len() != config.n_rml {
        return Err(Error::Config(format!("n_rml: config says {} but {} instances were given", config.n_rml, instances.len())));
    }
    if instances.iter().any(|i| i.prior_mean.is_some() != gaussian || i.data.len() != problem.output_dim()) {
        return Err(Error::Config("instances were not drawn from this problem".into()));
    }
    let proximal = match &problem.prior {
        Prior::Gaussian(g) => Some(ProximalPriorStep::new(g, config.prox_eta)?),
        Prior::Box(_) => None,
    };
    let runner = Runner { problem, instances, config, proximal };
    let start_count = problem.simulator.eval_count();

    let embeddings = (0..config.num_embeddings)
        .map(|k| sample_embedding(problem.input_dim(), config.d_e, k, config.domain_scale, &mut stream(config.seed, labels::EMBEDDING, k as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut initial: Vec<Vec<SimulationRecord>> = Vec::with_capacity(embeddings.len());
    let mut trace: Vec<SimulationRecord> = Vec::new();
    for emb in &embeddings {
        let mut seq = KroneckerSequence::scrambled(emb.dim(), &mut stream(config.seed, labels::INITIAL_DESIGN, emb.index as u64));
        let mut recs = Vec::with_capacity(config.n0);
        for iteration in 1..=config.n0 {
            let y = seq.next_in_box(-emb.half_width, emb.half_width);
            match runner.simulate(emb, y, iteration, None) {
                Ok(r) => recs.push(r),
                Err(e) => {
                    trace.extend(initial.into_iter().flatten());
                    trace.extend(recs);
                    return Err(abort(e, trace));
                }
            }
        }
        initial.push(recs);
    }
    trace.extend(initial.iter().flatten().cloned());

    let outcomes: Vec<(Vec<SimulationRecord>, Option<Error>)> = embeddings
        .par_iter()
        .zip(initial.into_par_iter())
        .map(|(emb, init)| {
            let n_init = init.len();
            let (mut recs, err) = runner.run_embedding(emb, init);
            (recs.split_off(n_init), err)
        })
        .collect();

    let mut failure = None;
    for (recs, err) in outcomes {
        trace.extend(recs);
        if failure.is_none() {
            failure = err;
        }
    }
    let evaluations = number_evaluations(&mut trace);
    if let Some(e) = failure {
        return Err(abort(e, trace));
    }
    let consumed = problem.simulator.eval_count() - start_count;
    if evaluations != config.total_evaluations(gaussian) as u64 || consumed != evaluations {
        return Err(Error::Internal(format!(
            "budget accounting mismatch: trace {evaluations}, counter {consumed}, expected {}",
            config.total_evaluations(gaussian)
        )));
    }

    let maximizers = select_maximizers(&trace, instances, problem, None)?;
    Ok(RmlResult { method: "hdbo-rml".into(), maximizers, records: trace, evaluations, embeddings })
}

fn abort(cause: Error, mut partial: Vec<SimulationRecord>) -> Error {
    number_evaluations(&mut partial);
    Error::RunAborted { cause: Box::new(cause), partial }
}
