use std::io::Write;
use std::path::Path;
use std::time::Instant;

use hdbo_rml::bench::{
    budget_curve, curves_csv, draw_instances, mean_return, oracle_rml, prior_landscape, project_result, projections_csv, summary_csv,
    ExperimentReport,
};
use hdbo_rml::embedding::Embedding;
use hdbo_rml::hdbo::{trace_to_jsonl, Maximizer};
use hdbo_rml::seeding::{labels, stream};
use hdbo_rml::Error;
use log::warn;
use serde::Serialize;

use crate::config::Experiment;
use crate::CliError;

/// Writes `contents` to `dir/name` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, dir.join(name)).map_err(io)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Sorts library errors into configuration problems and runtime failures.
/// An aborted run flushes its partial trace first.
fn runtime(e: Error, out: &Path) -> CliError {
    match e {
        Error::Config(_) | Error::UnknownProblem(_) | Error::ActiveSubspaceUnavailable => CliError::Config(e.to_string()),
        Error::RunAborted { cause, partial } => {
            let flushed =
                trace_to_jsonl(&partial).map_err(|e| CliError::Runtime(e.to_string())).and_then(|t| write_atomic(out, "trace.jsonl", t.as_bytes()));
            match flushed {
                Ok(()) => CliError::Runtime(format!("{cause} ({} records flushed to trace.jsonl)", partial.len())),
                Err(w) => CliError::Runtime(format!("{cause}; flushing the partial trace also failed: {w}")),
            }
        }
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a serde_json::Value,
    seed: u64,
    method: &'a str,
    problem: &'a str,
    budget: usize,
    evaluations: u64,
    analysis_evaluations: u64,
    mean_return: f64,
    neg_mean_return: f64,
    maximizers: &'a [Maximizer],
    /// Empty for methods that do not search through embeddings.
    embeddings: &'a [Embedding],
    wall_clock_secs: f64,
}

pub fn run(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let method = exp.methods[0];
    if exp.methods.len() > 1 {
        warn!("run uses only the first of {} configured methods ({})", exp.methods.len(), method.name());
    }
    let problem = exp.problem.fresh();
    let seed = exp.sampler.seed;
    let instances = draw_instances(&problem, exp.sampler.n_rml, seed).map_err(|e| runtime(e, out))?;
    let result = method.run(&problem, &instances, &exp.sampler).map_err(|e| runtime(e, out))?;
    let value = mean_return(&result, &instances, &problem).map_err(|e| runtime(e, out))?;

    let trace = result.trace_jsonl().map_err(|e| runtime(e, out))?;
    write_atomic(out, "trace.jsonl", trace.as_bytes())?;
    write_atomic(out, "instances.json", &to_json(&instances)?)?;
    let report = RunReport {
        config: &exp.snapshot,
        seed,
        method: method.name(),
        problem: &exp.problem_label,
        budget: exp.sampler.budget,
        evaluations: problem.simulator.eval_count(),
        analysis_evaluations: problem.simulator.analysis_eval_count(),
        mean_return: value,
        neg_mean_return: -value,
        maximizers: &result.maximizers,
        embeddings: &result.embeddings,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    write_atomic(out, "report.json", &to_json(&report)?)?;
    println!("method: {}", method.name());
    println!("mean return: {value}");
    println!("simulator evaluations: {} (budget {})", report.evaluations, exp.sampler.budget);
    if report.analysis_evaluations > 0 {
        println!("analysis evaluations: {}", report.analysis_evaluations);
    }
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    let width = report.methods.iter().map(|m| m.method.len()).max().unwrap_or(6).max(6);
    println!("{:<width$}  {:>6}  final negative mean return (mean ± sd)", "method", "trials");
    for m in &report.methods {
        println!("{:<width$}  {:>6}  {:.6} ± {:.6}", m.method, m.trials.len(), m.final_mean, m.final_sd);
    }
}

pub fn compare(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let report =
        budget_curve(&exp.problem, &exp.methods, &exp.checkpoints, exp.trials, &exp.sampler, exp.snapshot.clone()).map_err(|e| runtime(e, out))?;
    write_atomic(out, "curves.csv", curves_csv(&report).map_err(|e| runtime(e, out))?.as_bytes())?;
    write_atomic(out, "summary.csv", summary_csv(&report).map_err(|e| runtime(e, out))?.as_bytes())?;
    write_atomic(out, "report.json", &to_json(&report)?)?;
    print_summary(&report);
    Ok(())
}

pub fn export_landscape(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let problem = exp.problem.fresh();
    if problem.simulator.body().active_subspace().is_none() {
        return Err(CliError::Config("problem: export-landscape needs a problem with a known active subspace".into()));
    }
    let seed = exp.sampler.seed;
    let landscape = prior_landscape(&problem, exp.landscape_samples, &mut stream(seed, labels::LANDSCAPE, 0)).map_err(|e| runtime(e, out))?;
    write_atomic(out, "landscape.csv", projections_csv(&landscape).map_err(|e| runtime(e, out))?.as_bytes())?;
    println!("landscape.csv: {} prior samples", landscape.len());

    let instances = draw_instances(&problem, exp.sampler.n_rml, seed).map_err(|e| runtime(e, out))?;
    let linear = problem.simulator.body().linear_map().is_some() && problem.prior.is_gaussian();
    if linear {
        let oracle = oracle_rml(&problem, &instances).map_err(|e| runtime(e, out))?;
        let samples = project_result(&oracle, &problem).map_err(|e| runtime(e, out))?;
        write_atomic(out, "oracle_samples.csv", projections_csv(&samples).map_err(|e| runtime(e, out))?.as_bytes())?;
        println!("oracle_samples.csv: {} exact RML samples", samples.len());
    } else {
        warn!("exact RML samples need a linear simulator with a Gaussian prior; oracle_samples.csv not written");
    }

    let method = exp.methods[0];
    let result = method.run(&problem, &instances, &exp.sampler).map_err(|e| runtime(e, out))?;
    let samples = project_result(&result, &problem).map_err(|e| runtime(e, out))?;
    write_atomic(out, "method_samples.csv", projections_csv(&samples).map_err(|e| runtime(e, out))?.as_bytes())?;
    println!("method_samples.csv: {} {} samples", samples.len(), method.name());
    Ok(())
}
