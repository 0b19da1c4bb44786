//! Exact Gaussian-process regression with a squared-exponential kernel.
//!
//! Targets are standardized per fit. Hyperparameters live in log space and
//! are fitted by projected BFGS on the log marginal likelihood, using
//! analytic gradients and a few random restarts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the noise variance; simulators are noiseless, so this is
/// numerical jitter rather than a noise model.
pub const NOISE_FLOOR: f64 = 1e-8;
/// Floor on the target standard deviation used for standardization.
pub const TARGET_SD_FLOOR: f64 = 1e-8;
/// Inputs closer than this are merged before fitting.
pub const DUPLICATE_TOL: f64 = 1e-10;

const JITTER_LADDER: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_outputscale: f64,
    pub log_lengthscale: f64,
    pub log_noise_var: f64,
}

impl KernelParams {
    pub fn new(outputscale: f64, lengthscale: f64, noise_var: f64) -> Self {
        Self { log_outputscale: outputscale.ln(), log_lengthscale: lengthscale.ln(), log_noise_var: noise_var.max(NOISE_FLOOR).ln() }
    }

    pub fn outputscale(&self) -> f64 {
        self.log_outputscale.exp()
    }

    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    pub fn noise_var(&self) -> f64 {
        self.log_noise_var.exp()
    }

    fn to_array(self) -> [f64; 3] {
        [self.log_outputscale, self.log_lengthscale, self.log_noise_var]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self { log_outputscale: a[0], log_lengthscale: a[1], log_noise_var: a[2] }
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        Self::new(1.0, 1.0, NOISE_FLOOR)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `o² exp(-|y1 - y2|² / (2 l²))`.
pub fn rbf_kernel(y1: &[f64], y2: &[f64], params: &KernelParams) -> f64 {
    debug_assert_eq!(y1.len(), y2.len());
    let o2 = (2.0 * params.log_outputscale).exp();
    o2 * (-0.5 * sq_dist(y1, y2) / (2.0 * params.log_lengthscale).exp()).exp()
}

/// Kernel matrix without the noise term.
fn gram(inputs: &[Vec<f64>], params: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf_kernel(&inputs[i], &inputs[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Lower Cholesky factor of `K + σ²I`, escalating jitter (relative to `o²`)
/// on failure. Returns the factor and the jitter used.
fn factor(inputs: &[Vec<f64>], params: &KernelParams) -> Result<(DMatrix<f64>, f64)> {
    let mut k = gram(inputs, params);
    let noise = params.noise_var();
    for i in 0..k.nrows() {
        k[(i, i)] += noise;
    }
    if let Some(l) = try_cholesky(&k) {
        return Ok((l, 0.0));
    }
    let o2 = (2.0 * params.log_outputscale).exp();
    for jitter in JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter * o2;
        }
        if let Some(l) = try_cholesky(&kj) {
            return Ok((l, jitter * o2));
        }
    }
    Err(Error::NotPositiveDefinite { name: "GP kernel matrix".into() })
}

fn try_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = m.clone().cholesky()?.unpack();
    l.diagonal().iter().all(|d| d.is_finite() && *d > 0.0).then_some(l)
}

fn solve_chol(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let w = l.solve_lower_triangular(b).expect("non-singular factor");
    l.tr_solve_lower_triangular(&w).expect("non-singular factor")
}

/// Gaussian evidence `log N(targets | 0, K + σ²I)` of `targets` as given.
pub fn log_marginal_likelihood(inputs: &[Vec<f64>], targets: &[f64], params: &KernelParams) -> Result<f64> {
    check_inputs(inputs, targets)?;
    let (l, _) = factor(inputs, params)?;
    let z = DVector::from_column_slice(targets);
    let w = l.solve_lower_triangular(&z).expect("non-singular factor");
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (w.norm_squared() + log_det + targets.len() as f64 * LN_2PI))
}

/// Log marginal likelihood and its gradient with respect to
/// `(log o, log l, log σ²)`.
pub fn log_marginal_likelihood_grad(inputs: &[Vec<f64>], targets: &[f64], params: &KernelParams) -> Result<(f64, [f64; 3])> {
    check_inputs(inputs, targets)?;
    let n = inputs.len();
    let (l, _) = factor(inputs, params)?;
    let z = DVector::from_column_slice(targets);
    let alpha = solve_chol(&l, &z);
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let value = -0.5 * (z.dot(&alpha) + log_det + n as f64 * LN_2PI);

    let mut k_inv = DMatrix::identity(n, n);
    l.solve_lower_triangular_mut(&mut k_inv);
    l.tr_solve_lower_triangular_mut(&mut k_inv);

    let inv_l2 = (-2.0 * params.log_lengthscale).exp();
    let noise = params.noise_var();
    let (mut g_o, mut g_l, mut g_n) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            // W = ααᵀ - K⁻¹; dL/dθ = ½ tr(W ∂K/∂θ).
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let kf = rbf_kernel(&inputs[i], &inputs[j], params);
            g_o += w * 2.0 * kf;
            g_l += w * kf * sq_dist(&inputs[i], &inputs[j]) * inv_l2;
        }
        g_n += (alpha[i] * alpha[i] - k_inv[(i, i)]) * noise;
    }
    Ok((value, [0.5 * g_o, 0.5 * g_l, 0.5 * g_n]))
}

fn check_inputs(inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if inputs.len() != targets.len() {
        return Err(Error::dims("GP targets against inputs", inputs.len(), targets.len()));
    }
    if let Some(first) = inputs.first() {
        if let Some(bad) = inputs.iter().find(|r| r.len() != first.len()) {
            return Err(Error::dims("GP input dimension", first.len(), bad.len()));
        }
    }
    Ok(())
}

/// Merges inputs closer than [`DUPLICATE_TOL`], averaging their targets.
fn merge_duplicates(inputs: &[Vec<f64>], targets: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut out_x: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
    let mut sums: Vec<(f64, usize)> = Vec::with_capacity(inputs.len());
    for (x, t) in inputs.iter().zip(targets) {
        match out_x.iter().position(|u| sq_dist(u, x) < DUPLICATE_TOL * DUPLICATE_TOL) {
            Some(i) => {
                sums[i].0 += t;
                sums[i].1 += 1;
            }
            None => {
                out_x.push(x.clone());
                sums.push((*t, 1));
            }
        }
    }
    let out_t = sums.into_iter().map(|(s, c)| s / c as f64).collect();
    (out_x, out_t)
}

/// Settings for hyperparameter fitting.
#[derive(Clone, Debug)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Diameter of the input domain; the data's bounding box when `None`.
    pub domain_diameter: Option<f64>,
    /// Pins the noise variance, e.g. at [`NOISE_FLOOR`] for noiseless data.
    pub fixed_noise_var: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 5, max_iters: 100, domain_diameter: None, fixed_noise_var: None }
    }
}

/// A fitted GP; immutable once built.
#[derive(Clone, Debug)]
pub struct GpModel {
    dim: usize,
    inputs: Vec<Vec<f64>>,
    raw_targets: Vec<f64>,
    target_mean: f64,
    target_sd: f64,
    params: KernelParams,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Prior-only model: mean 0, sd `o`.
    pub fn empty(dim: usize, params: KernelParams) -> Self {
        Self {
            dim,
            inputs: Vec::new(),
            raw_targets: Vec::new(),
            target_mean: 0.0,
            target_sd: 1.0,
            params,
            chol: DMatrix::zeros(0, 0),
            alpha: DVector::zeros(0),
        }
    }

    /// Conditions on the data with fixed hyperparameters.
    pub fn with_params(dim: usize, inputs: &[Vec<f64>], targets: &[f64], params: KernelParams) -> Result<Self> {
        check_inputs(inputs, targets)?;
        if let Some(bad) = inputs.iter().find(|r| r.len() != dim) {
            return Err(Error::dims("GP input dimension", dim, bad.len()));
        }
        if inputs.is_empty() {
            return Ok(Self::empty(dim, params));
        }
        let (inputs, raw_targets) = merge_duplicates(inputs, targets);
        let (target_mean, target_sd) = standardization(&raw_targets);
        let z: Vec<f64> = raw_targets.iter().map(|t| (t - target_mean) / target_sd).collect();
        let (chol, _) = factor(&inputs, &params)?;
        let alpha = solve_chol(&chol, &DVector::from_vec(z));
        Ok(Self { dim, inputs, raw_targets, target_mean, target_sd, params, chol, alpha })
    }

    /// Fits hyperparameters by multi-start marginal-likelihood maximization.
    pub fn fit<R: Rng + ?Sized>(dim: usize, inputs: &[Vec<f64>], targets: &[f64], options: &FitOptions, rng: &mut R) -> Result<Self> {
        check_inputs(inputs, targets)?;
        if inputs.is_empty() {
            return Ok(Self::empty(dim, KernelParams::default()));
        }
        let (merged_x, merged_t) = merge_duplicates(inputs, targets);
        let (mean, sd) = standardization(&merged_t);
        let z: Vec<f64> = merged_t.iter().map(|t| (t - mean) / sd).collect();
        let diam = options.domain_diameter.unwrap_or_else(|| bounding_diameter(&merged_x)).max(1e-6);
        let mut bounds = ParamBounds::new(diam);
        if let Some(noise) = options.fixed_noise_var {
            let pinned = noise.max(NOISE_FLOOR).ln();
            bounds.lower[2] = pinned;
            bounds.upper[2] = pinned;
        }

        let mut best: Option<(f64, KernelParams)> = None;
        for _ in 0..options.restarts.max(1) {
            let start = KernelParams {
                log_outputscale: log_uniform(rng, 0.1, 10.0),
                log_lengthscale: log_uniform(rng, 0.05 * diam, 2.0 * diam),
                log_noise_var: log_uniform(rng, 1e-6, 1e-2),
            };
            let Some((value, params)) = maximize_evidence(&merged_x, &z, start, &bounds, options.max_iters) else {
                continue;
            };
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, params));
            }
        }
        let (_, params) = best.ok_or_else(|| Error::NotPositiveDefinite { name: "GP kernel matrix".into() })?;
        Self::with_params(dim, inputs, targets, params)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_sd(&self) -> f64 {
        self.target_sd
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn raw_targets(&self) -> &[f64] {
        &self.raw_targets
    }

    /// Lower factor of `K + σ²I` (plus any jitter that was needed).
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Posterior mean and sd in normalized target units.
    pub fn predict_normalized(&self, y: &[f64]) -> (f64, f64) {
        let o2 = (2.0 * self.params.log_outputscale).exp();
        if self.inputs.is_empty() {
            return (0.0, o2.sqrt());
        }
        let k_star = DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|x| rbf_kernel(x, y, &self.params)));
        let mean = k_star.dot(&self.alpha);
        let v = self.chol.solve_lower_triangular(&k_star).expect("non-singular factor");
        let var = (o2 - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }

    /// Posterior mean and sd in raw target units.
    pub fn predict(&self, y: &[f64]) -> (f64, f64) {
        let (m, s) = self.predict_normalized(y);
        (self.target_mean + self.target_sd * m, self.target_sd * s)
    }

    /// GP-UCB acquisition `mean + beta * sd`.
    pub fn ucb(&self, y: &[f64], beta: f64) -> f64 {
        let (m, s) = self.predict(y);
        m + beta * s
    }
}

fn standardization(targets: &[f64]) -> (f64, f64) {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    (mean, var.sqrt().max(TARGET_SD_FLOOR))
}

fn bounding_diameter(inputs: &[Vec<f64>]) -> f64 {
    let dim = inputs.first().map_or(0, Vec::len);
    let mut sq = 0.0;
    for c in 0..dim {
        let lo = inputs.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min);
        let hi = inputs.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max);
        sq += (hi - lo) * (hi - lo);
    }
    if sq > 0.0 {
        sq.sqrt()
    } else {
        1.0
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln())
}

struct ParamBounds {
    lower: [f64; 3],
    upper: [f64; 3],
}

impl ParamBounds {
    fn new(diam: f64) -> Self {
        Self { lower: [1e-2f64.ln(), (1e-3 * diam).ln(), NOISE_FLOOR.ln()], upper: [1e2f64.ln(), (1e2 * diam).ln(), 1.0f64.ln()] }
    }

    fn project(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| p[i].clamp(self.lower[i], self.upper[i]))
    }
}

/// Projected BFGS on the negative evidence. Returns the best evidence and
/// parameters, or `None` if the start could not be evaluated.
fn maximize_evidence(inputs: &[Vec<f64>], z: &[f64], start: KernelParams, bounds: &ParamBounds, max_iters: usize) -> Option<(f64, KernelParams)> {
    let eval = |p: [f64; 3]| -> Option<(f64, [f64; 3])> {
        let (v, g) = log_marginal_likelihood_grad(inputs, z, &KernelParams::from_array(p)).ok()?;
        v.is_finite().then_some((-v, [-g[0], -g[1], -g[2]]))
    };
    let mut x = bounds.project(start.to_array());
    let (mut f, mut g) = eval(x)?;
    let mut h = DMatrix::<f64>::identity(3, 3);

    for _ in 0..max_iters {
        let gv = DVector::from_column_slice(&g);
        let mut dir = -(&h * &gv);
        if dir.dot(&gv) >= 0.0 {
            h = DMatrix::identity(3, 3);
            dir = -gv.clone();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = bounds.project(std::array::from_fn(|i| x[i] + step * dir[i]));
            let moved: f64 = (0..3).map(|i| (trial[i] - x[i]) * g[i]).sum();
            if let Some((ft, gt)) = eval(trial) {
                if ft <= f + 1e-4 * moved {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else { break };
        let s = DVector::from_fn(3, |i, _| xn[i] - x[i]);
        let yv = DVector::from_fn(3, |i, _| gn[i] - g[i]);
        let sy = s.dot(&yv);
        let converged = (f - fnew).abs() <= 1e-10 * (1.0 + f.abs()) || s.amax() < 1e-9;
        x = xn;
        f = fnew;
        g = gn;
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let i3 = DMatrix::<f64>::identity(3, 3);
            let left = &i3 - rho * &s * yv.transpose();
            let right = &i3 - rho * &yv * s.transpose();
            h = &left * &h * &right + rho * &s * s.transpose();
        }
        // Projected gradient.
        let pg = (0..3).fold(0.0f64, |acc, i| {
            let free = (x[i] > bounds.lower[i] || g[i] < 0.0) && (x[i] < bounds.upper[i] || g[i] > 0.0);
            if free {
                acc.max(g[i].abs())
            } else {
                acc
            }
        });
        if converged || pg < 1e-6 {
            break;
        }
    }
    Some((-f, KernelParams::from_array(x)))
}
