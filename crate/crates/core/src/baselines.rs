//! Budget-matched comparison methods. Both produce the same trace format
//! as the BO sampler and use the same final selection.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hdbo::{number_evaluations, select_maximizers, RmlResult, SimulationRecord};
use crate::probspec::{Prior, ProblemSpec};
use crate::rml::{objective, RmlInstance};

/// One draw from the (unperturbed) prior.
pub fn sample_prior<R: Rng + ?Sized>(prior: &Prior, rng: &mut R) -> Result<DVector<f64>> {
    Ok(match prior {
        Prior::Box(b) => DVector::from_fn(b.dim(), |i, _| rng.random_range(b.lower[i]..=b.upper[i])),
        Prior::Gaussian(g) => {
            let mut xi = DVector::zeros(g.dim());
            for i in 0..g.dim() {
                xi[i] = rng.sample(StandardNormal);
            }
            &g.mean + g.covariance.colour(&xi)?
        }
    })
}

fn record(x: &DVector<f64>, fx: &DVector<f64>, iteration: usize, objective: usize) -> SimulationRecord {
    SimulationRecord {
        emb_index: None,
        y: None,
        x: x.iter().copied().collect(),
        fx: fx.iter().copied().collect(),
        refined_z: None,
        f_refined: None,
        iteration,
        objective,
        evals: 0,
        gp_training_size: None,
    }
}

/// `budget` independent prior draws, each simulated once; every objective
/// takes its best draw.
pub fn random_design<R: Rng + ?Sized>(problem: &ProblemSpec, instances: &[RmlInstance], budget: usize, rng: &mut R) -> Result<RmlResult> {
    if budget == 0 {
        return Err(Error::Config("budget_N: must be at least 1".into()));
    }
    if instances.is_empty() {
        return Err(Error::Config("n_rml: must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(budget);
    for i in 1..=budget {
        let x = sample_prior(&problem.prior, rng)?;
        let fx = match problem.simulator.evaluate(&x) {
            Ok(fx) => fx,
            Err(e) => {
                number_evaluations(&mut records);
                return Err(Error::RunAborted { cause: Box::new(e), partial: records });
            }
        };
        records.push(record(&x, &fx, i, (i - 1) % instances.len()));
    }
    let evaluations = number_evaluations(&mut records);
    let maximizers = select_maximizers(&records, instances, problem, None)?;
    Ok(RmlResult { method: "random-design".into(), maximizers, records, evaluations, embeddings: Vec::new() })
}

/// Splits the budget evenly over the objectives and runs an independent
/// Nelder-Mead search on each, starting from a prior draw. Box priors are
/// handled by simulating the clipped point.
pub fn per_objective_local_search<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    instances: &[RmlInstance],
    budget: usize,
    rng: &mut R,
) -> Result<RmlResult> {
    if budget == 0 {
        return Err(Error::Config("budget_N: must be at least 1".into()));
    }
    if instances.is_empty() {
        return Err(Error::Config("n_rml: must be at least 1".into()));
    }
    let per_objective = budget / instances.len();
    let mut records: Vec<SimulationRecord> = Vec::with_capacity(budget);
    let mut failure: Option<Error> = None;

    for inst in instances {
        let start = sample_prior(&problem.prior, rng)?;
        let scales = initial_steps(&problem.prior);
        let mut used = 0usize;
        let mut eval = |x: &DVector<f64>| -> Option<f64> {
            if used >= per_objective || failure.is_some() {
                return None;
            }
            let x = match &problem.prior {
                Prior::Box(b) => b.clip(x),
                Prior::Gaussian(_) => x.clone(),
            };
            used += 1;
            let fx = match problem.simulator.evaluate(&x) {
                Ok(fx) => fx,
                Err(e) => {
                    failure = Some(e);
                    return None;
                }
            };
            let value = match objective(inst, &x, problem, Some(&fx)) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    return None;
                }
            };
            records.push(record(&x, &fx, records.len() + 1, inst.index));
            Some(-value)
        };
        nelder_mead(&mut eval, &start, &scales);
        if failure.is_some() {
            break;
        }
    }
    number_evaluations(&mut records);
    if let Some(e) = failure {
        return Err(Error::RunAborted { cause: Box::new(e), partial: records });
    }
    let evaluations = records.last().map_or(0, |r| r.evals);
    let maximizers = select_maximizers(&records, instances, problem, None)?;
    Ok(RmlResult { method: "local-search".into(), maximizers, records, evaluations, embeddings: Vec::new() })
}

fn initial_steps(prior: &Prior) -> DVector<f64> {
    match prior {
        Prior::Box(b) => (&b.upper - &b.lower) * 0.1,
        Prior::Gaussian(g) => g.covariance.matrix().diagonal().map(|v| 0.5 * v.sqrt()),
    }
}

/// Adaptive-coefficient Nelder-Mead minimization. `f` returns `None` once
/// its evaluation budget is spent, which ends the search.
pub fn nelder_mead<F>(f: &mut F, x0: &DVector<f64>, steps: &DVector<f64>) -> Option<(DVector<f64>, f64)>
where
    F: FnMut(&DVector<f64>) -> Option<f64>,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n >= 2 { (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf) } else { (1.0, 2.0, 0.5, 0.5) };

    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), f(x0)?));
    let mut best_seen = simplex[0].clone();
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += if steps[i] != 0.0 { steps[i] } else { 0.05 };
        match f(&v) {
            Some(fv) => {
                if fv < best_seen.1 {
                    best_seen = (v.clone(), fv);
                }
                simplex.push((v, fv));
            }
            None => return Some(best_seen),
        }
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        if (f_worst - f_best).abs() <= 1e-14 * (1.0 + f_best.abs()) {
            let size = simplex.iter().skip(1).map(|(v, _)| (v - &simplex[0].0).amax()).fold(0.0, f64::max);
            if size < 1e-12 {
                return Some(simplex.swap_remove(0));
            }
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, (v, _)| acc + v) / nf;
        let worst = simplex[n].0.clone();

        let reflected = &centroid + (&centroid - &worst) * alpha;
        let Some(f_r) = f(&reflected) else { break };
        if f_r < simplex[0].1 {
            let expanded = &centroid + (&reflected - &centroid) * gamma;
            let Some(f_e) = f(&expanded) else {
                simplex[n] = (reflected, f_r);
                break;
            };
            simplex[n] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }
        let (contracted, outside) =
            if f_r < f_worst { (&centroid + (&reflected - &centroid) * rho, true) } else { (&centroid + (&worst - &centroid) * rho, false) };
        let Some(f_c) = f(&contracted) else { break };
        if (outside && f_c <= f_r) || (!outside && f_c < f_worst) {
            simplex[n] = (contracted, f_c);
            continue;
        }
        let anchor = simplex[0].0.clone();
        let mut exhausted = false;
        for item in simplex.iter_mut().skip(1) {
            let shrunk = &anchor + (&item.0 - &anchor) * sigma;
            match f(&shrunk) {
                Some(fs) => *item = (shrunk, fs),
                None => {
                    exhausted = true;
                    break;
                }
            }
        }
        if exhausted {
            break;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = simplex.swap_remove(0);
    Some(if best.1 <= best_seen.1 { best } else { best_seen })
}
