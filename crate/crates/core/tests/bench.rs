mod common;

use hdbo_rml::bench::{
    budget_curve, curves_csv, draw_instances, make_problem, mean_return, prior_landscape, project, CatalogSpec, Method, PriorChoice, CATALOG,
};
use hdbo_rml::hdbo::{HdboConfig, Maximizer, RmlResult, SimulationRecord};
use hdbo_rml::probspec::ProblemSpec;
use hdbo_rml::rml::objective;
use hdbo_rml::seeding::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn catalog(name: &str) -> CatalogSpec {
    match name {
        "linear-gaussian" => CatalogSpec::new(name, 8, 5, 1),
        "rosenbrock-2d" => CatalogSpec::new(name, 30, 2, 1),
        _ => CatalogSpec::new(name, 100, 2, 1),
    }
}

/// Random `v` orthogonal to the columns of `a`.
fn complement_direction<R: Rng>(a: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let g = common::gaussian_matrix(a.nrows(), 1, rng).column(0).into_owned();
    let v = &g - a * (a.transpose() * &g);
    let scale = rng.random_range(0.1..3.0) / v.norm();
    v * scale
}

#[test]
fn outputs_ignore_the_inactive_directions() {
    let mut rng = stream(5, "null-space", 0);
    for name in CATALOG {
        let problem = make_problem(&catalog(name)).unwrap();
        let a = problem.simulator.body().active_subspace().unwrap().clone();
        assert!((a.transpose() * &a - DMatrix::identity(a.ncols(), a.ncols())).amax() < 1e-10);
        for _ in 0..100 {
            let x = DVector::from_fn(a.nrows(), |_, _| rng.random_range(-1.0..1.0));
            let v = complement_direction(&a, &mut rng);
            let gap = (problem.simulator.evaluate(&x).unwrap() - problem.simulator.evaluate(&(&x + v)).unwrap()).amax();
            assert!(gap < 1e-10, "{name}: {gap}");
        }
    }
}

#[test]
fn linear_catalog_problem_is_the_stored_matrix() {
    let problem = make_problem(&catalog("linear-gaussian")).unwrap();
    let b = problem.simulator.body().linear_map().unwrap().clone();
    assert_eq!(b.shape(), (5, 8));
    let x = DVector::from_fn(8, |i, _| i as f64 * 0.3 - 1.0);
    assert_eq!(problem.simulator.evaluate(&x).unwrap(), &b * &x);
}

#[test]
fn projection_is_an_isometry_on_the_span() {
    let mut rng = stream(6, "iso", 0);
    let problem = make_problem(&catalog("quadratic-bowl")).unwrap();
    let a = problem.simulator.body().active_subspace().unwrap();
    for _ in 0..50 {
        let c = common::gaussian_matrix(2, 1, &mut rng).column(0).into_owned();
        let x = a * (&c / c.norm());
        let u = DVector::from_vec(project(&x, a));
        assert!((u.norm() - 1.0).abs() < 1e-10);
    }
    let one_d = make_problem(&CatalogSpec::new("sine-ridge", 12, 1, 2)).unwrap();
    let a = one_d.simulator.body().active_subspace().unwrap();
    assert_eq!(project(&DVector::zeros(12), a).len(), 1);
}

#[test]
fn linear_landscape_is_exactly_quadratic() {
    let spec = CatalogSpec::new("linear-gaussian", 8, 2, 3).with_prior(PriorChoice::Uniform { half_width: 1.0 });
    let problem = make_problem(&spec).unwrap();
    let samples = prior_landscape(&problem, 2000, &mut stream(3, "landscape", 0)).unwrap();
    assert_eq!(problem.simulator.eval_count(), 0);
    assert_eq!(problem.simulator.analysis_eval_count(), 2000);
    let coords: Vec<Vec<f64>> = samples.iter().map(|s| s.coords.clone()).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.log_post).collect();
    assert!(common::quadratic_fit_residual(&coords, &values) < 1e-8);
}

fn constant_result(values: &[f64]) -> (RmlResult, Vec<hdbo_rml::rml::RmlInstance>, ProblemSpec) {
    let problem = make_problem(&CatalogSpec::new("quadratic-bowl", 4, 1, 9)).unwrap();
    let instances = draw_instances(&problem, values.len(), 9).unwrap();
    let x = DVector::from_element(4, 0.1);
    let fx = problem.simulator.evaluate(&x).unwrap();
    let rec = SimulationRecord {
        emb_index: None,
        y: None,
        x: x.iter().copied().collect(),
        fx: fx.iter().copied().collect(),
        refined_z: None,
        f_refined: None,
        iteration: 1,
        objective: 0,
        evals: 1,
        gp_training_size: None,
    };
    let maximizers = instances
        .iter()
        .map(|i| Maximizer { objective: i.index, x: rec.x.clone(), value: objective(i, &x, &problem, Some(&fx)).unwrap(), record: 0 })
        .collect();
    let result = RmlResult { method: "fixed".into(), maximizers, records: vec![rec], evaluations: 1, embeddings: Vec::new() };
    (result, instances, problem)
}

#[test]
fn mean_return_examples() {
    let (res, inst, problem) = constant_result(&[0.0]);
    assert_eq!(mean_return(&res, &inst, &problem).unwrap(), res.maximizers[0].value);

    let (res, inst, problem) = constant_result(&[0.0; 4]);
    let expected = res.maximizers.iter().map(|m| m.value).sum::<f64>() / 4.0;
    assert!((mean_return(&res, &inst, &problem).unwrap() - expected).abs() < 1e-12);
}

fn small_config(seed: u64) -> HdboConfig {
    let mut c = HdboConfig::new(4, 3);
    c.num_embeddings = 2;
    c.budget = 60;
    c.seed = seed;
    c
}

#[test]
fn single_checkpoint_curve_is_the_final_value() {
    let problem = make_problem(&CatalogSpec::new("quadratic-bowl", 10, 2, 4)).unwrap();
    let report = budget_curve(&problem, &[Method::RandomDesign], &[60], 1, &small_config(4), serde_json::json!({})).unwrap();
    let trial = &report.methods[0].trials[0];
    assert_eq!(trial.curve.len(), 1);
    assert_eq!(trial.curve[0].neg_mean_return, trial.final_neg_mean_return);
    assert_eq!(curves_csv(&report).unwrap().lines().count(), 2);
}

#[test]
fn curves_never_increase_and_average_exactly() {
    let problem = make_problem(&CatalogSpec::new("sine-ridge", 10, 2, 5)).unwrap();
    let config = small_config(5);
    let methods = [Method::HdboRml, Method::RandomDesign, Method::LocalSearch];
    let checkpoints = [10, 20, 30, 40, 50, 60];
    let report = budget_curve(&problem, &methods, &checkpoints, 5, &config, serde_json::json!({})).unwrap();
    for summary in &report.methods {
        for trial in &summary.trials {
            assert!(trial.curve.windows(2).all(|w| w[1].neg_mean_return <= w[0].neg_mean_return), "{}", summary.method);
        }
    }
    for (summary, method) in report.methods.iter().zip(methods) {
        let recomputed: Vec<f64> = report
            .trial_seeds
            .iter()
            .map(|&seed| {
                let p = problem.fresh();
                let inst = draw_instances(&p, config.n_rml, seed).unwrap();
                let res = method.run(&p, &inst, &HdboConfig { seed, ..config.clone() }).unwrap();
                -mean_return(&res, &inst, &p).unwrap()
            })
            .collect();
        let mean = recomputed.iter().sum::<f64>() / 5.0;
        assert!((summary.final_mean - mean).abs() < 1e-12, "{}", summary.method);
    }
}
