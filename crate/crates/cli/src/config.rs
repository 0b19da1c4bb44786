//! Experiment configuration: a JSON document whose top-level keys are the
//! sampler settings plus the problem and harness options.

use std::path::Path;

use hdbo_rml::bench::{even_checkpoints, make_problem, CatalogSpec, Method};
use hdbo_rml::hdbo::HdboConfig;
use hdbo_rml::probspec::{ProblemDocument, ProblemSpec};
use serde_json::{Map, Value};

use crate::CliError;

/// Harness keys that are not sampler settings.
const HARNESS_KEYS: [&str; 6] = ["problem", "method", "methods", "trials", "checkpoints", "landscape_samples"];

const DEFAULT_METHODS: [Method; 3] = [Method::HdboRml, Method::RandomDesign, Method::LocalSearch];

#[derive(Debug)]
pub struct Experiment {
    /// Effective configuration after overrides, with the seed and any
    /// derived defaults filled in. Rerunning from it reproduces the run.
    pub snapshot: Value,
    pub sampler: HdboConfig,
    pub problem: ProblemSpec,
    pub problem_label: String,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub checkpoints: Vec<u64>,
    pub landscape_samples: usize,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Applies `key.path=value`; the value is read as JSON when it parses,
/// else taken as a string. `null` removes the key.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| config_err(format!("--set {assignment}: expected KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("--set {assignment}: empty key segment")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| config_err(format!("--set {key}: `{part}` is inside a non-object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node.as_object_mut().ok_or_else(|| config_err(format!("--set {key}: parent is not an object")))?;
    let leaf = parts[parts.len() - 1].to_string();
    if value.is_null() {
        obj.remove(&leaf);
    } else {
        obj.insert(leaf, value);
    }
    Ok(())
}

fn build_problem(value: &Value) -> Result<(ProblemSpec, String, Option<usize>), CliError> {
    let obj = value.as_object().ok_or_else(|| config_err("problem: expected an object"))?;
    if obj.contains_key("name") {
        let spec: CatalogSpec = serde_json::from_value(value.clone()).map_err(|e| config_err(format!("problem: {e}")))?;
        let problem = make_problem(&spec).map_err(|e| config_err(format!("problem: {e}")))?;
        Ok((problem, spec.name.clone(), Some(spec.active_dim)))
    } else if obj.contains_key("simulator") {
        let doc: ProblemDocument = serde_json::from_value(value.clone()).map_err(|e| config_err(format!("problem: {e}")))?;
        let problem = doc.build().map_err(|e| config_err(format!("problem: {e}")))?;
        let active = problem.simulator.body().active_subspace().map(|a| a.ncols());
        Ok((problem, "custom".into(), active))
    } else {
        Err(config_err("problem: expected a catalog entry (with `name`) or an explicit definition (with `simulator`)"))
    }
}

fn parse_methods(obj: &Map<String, Value>) -> Result<Vec<Method>, CliError> {
    match (obj.get("method"), obj.get("methods")) {
        (Some(_), Some(_)) => Err(config_err("method: give either `method` or `methods`, not both")),
        (Some(m), None) => Ok(vec![serde_json::from_value(m.clone()).map_err(|e| config_err(format!("method: {e}")))?]),
        (None, Some(ms)) => {
            let list: Vec<Method> = serde_json::from_value(ms.clone()).map_err(|e| config_err(format!("methods: {e}")))?;
            if list.is_empty() {
                return Err(config_err("methods: need at least one method"));
            }
            Ok(list)
        }
        (None, None) => Ok(DEFAULT_METHODS.to_vec()),
    }
}

fn parse_count(obj: &Map<String, Value>, key: &str, default: usize) -> Result<usize, CliError> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| config_err(format!("{key}: expected a non-negative integer"))),
    }
}

impl Experiment {
    pub fn load(path: &Path, seed: Option<u64>, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut root: Value = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        if !root.is_object() {
            return Err(config_err("config: the top level must be a JSON object"));
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        Self::from_value(root, seed)
    }

    pub fn from_value(mut root: Value, seed: Option<u64>) -> Result<Self, CliError> {
        let obj = root.as_object_mut().ok_or_else(|| config_err("config: the top level must be a JSON object"))?;
        if let Some(s) = seed {
            obj.insert("seed".into(), s.into());
        }
        obj.entry("seed").or_insert(0.into());

        let problem_value = obj.get("problem").ok_or_else(|| config_err("problem: missing field `problem`"))?;
        let (problem, problem_label, active_dim) = build_problem(problem_value)?;
        if !obj.contains_key("d_e") {
            let d = active_dim.ok_or_else(|| config_err("d_e: missing field `d_e` and the problem has no known active dimension"))?;
            obj.insert("d_e".into(), (d + 1).into());
        }

        let methods = parse_methods(obj)?;
        let trials = parse_count(obj, "trials", 5)?;
        if trials == 0 {
            return Err(config_err("trials: need at least one trial"));
        }
        let landscape_samples = parse_count(obj, "landscape_samples", 10_000)?;

        let mut sampler_keys = obj.clone();
        sampler_keys.retain(|k, _| !HARNESS_KEYS.contains(&k.as_str()));
        let sampler: HdboConfig = serde_json::from_value(Value::Object(sampler_keys)).map_err(|e| config_err(e.to_string()))?;
        if methods.contains(&Method::HdboRml) {
            sampler.validate(problem.input_dim(), problem.prior.is_gaussian()).map_err(|e| config_err(e.to_string()))?;
        } else if sampler.n_rml == 0 || sampler.budget == 0 {
            return Err(config_err("n_rml and budget_N must be positive"));
        }

        let checkpoints = match obj.get("checkpoints") {
            None => even_checkpoints(sampler.budget, 20),
            Some(v) => {
                let cps: Vec<u64> = serde_json::from_value(v.clone()).map_err(|e| config_err(format!("checkpoints: {e}")))?;
                if cps.is_empty() || cps.windows(2).any(|w| w[0] >= w[1]) || cps[0] == 0 {
                    return Err(config_err("checkpoints: need a non-empty, strictly increasing list of positive budgets"));
                }
                cps
            }
        };

        Ok(Self { snapshot: root, sampler, problem, problem_label, methods, trials, checkpoints, landscape_samples })
    }
}
