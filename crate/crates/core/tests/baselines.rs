mod common;

use hdbo_rml::baselines::{per_objective_local_search, random_design};
use hdbo_rml::bench::{draw_instances, make_problem, mean_return, oracle_rml, CatalogSpec, PriorChoice};
use hdbo_rml::hdbo::{run_hdbo_rml, HdboConfig};
use hdbo_rml::seeding::stream;

fn linear(input_dim: usize, active_dim: usize, seed: u64) -> hdbo_rml::probspec::ProblemSpec {
    make_problem(&CatalogSpec::new("linear-gaussian", input_dim, active_dim, seed)).unwrap()
}

#[test]
fn single_point_design_is_shared_by_all_objectives() {
    let problem = linear(6, 3, 1);
    let instances = draw_instances(&problem, 7, 1).unwrap();
    let res = random_design(&problem, &instances, 1, &mut stream(1, "rd", 0)).unwrap();
    assert_eq!(problem.simulator.eval_count(), 1);
    assert!(res.maximizers.iter().all(|m| m.x == res.maximizers[0].x && m.record == 0));
}

#[test]
fn baselines_respect_the_budget() {
    let problem = make_problem(&CatalogSpec::new("sine-ridge", 10, 2, 3)).unwrap();
    let instances = draw_instances(&problem, 6, 2).unwrap();
    for budget in [6, 50, 333] {
        let p = problem.fresh();
        let res = random_design(&p, &instances, budget, &mut stream(2, "rd", 0)).unwrap();
        assert_eq!(res.evaluations, budget as u64);
        assert_eq!(p.simulator.eval_count(), budget as u64);

        let p = problem.fresh();
        let res = per_objective_local_search(&p, &instances, budget, &mut stream(2, "ls", 0)).unwrap();
        assert!(res.evaluations <= budget as u64);
        assert_eq!(p.simulator.eval_count(), res.evaluations);
        for n in 0..6 {
            let used = res.records.iter().filter(|r| r.objective == n).count();
            assert!(used <= budget / 6);
        }
    }
}

#[test]
fn nothing_beats_the_exact_maximizer() {
    for seed in 0..4u64 {
        let problem = linear(8, 5, 10 + seed);
        let instances = draw_instances(&problem, 10, seed).unwrap();
        let oracle = mean_return(&oracle_rml(&problem, &instances).unwrap(), &instances, &problem).unwrap();
        let rd = random_design(&problem, &instances, 200, &mut stream(seed, "rd", 0)).unwrap();
        let ls = per_objective_local_search(&problem, &instances, 200, &mut stream(seed, "ls", 0)).unwrap();
        let mut cfg = HdboConfig::new(10, 6);
        cfg.budget = 200;
        cfg.num_embeddings = 2;
        cfg.seed = seed;
        let bo = run_hdbo_rml(&problem, &instances, &cfg).unwrap();
        for res in [rd, ls, bo] {
            assert!(mean_return(&res, &instances, &problem).unwrap() <= oracle + 1e-12, "{}", res.method);
        }
    }
}

#[test]
fn local_search_converges_on_a_concave_quadratic() {
    let problem = linear(2, 2, 4);
    let instances = draw_instances(&problem, 3, 4).unwrap();
    let res = per_objective_local_search(&problem, &instances, 3 * 250, &mut stream(4, "ls", 0)).unwrap();
    let oracle = oracle_rml(&problem, &instances).unwrap();
    for (m, o) in res.maximizers.iter().zip(&oracle.maximizers) {
        assert!((m.value - o.value).abs() < 1e-3, "{} vs {}", m.value, o.value);
    }
}

#[test]
fn local_search_stays_inside_a_box_prior() {
    let problem = make_problem(&CatalogSpec::new("quadratic-bowl", 5, 2, 6).with_prior(PriorChoice::Uniform { half_width: 0.5 })).unwrap();
    let instances = draw_instances(&problem, 2, 6).unwrap();
    let res = per_objective_local_search(&problem, &instances, 100, &mut stream(6, "ls", 0)).unwrap();
    assert!(res.records.iter().all(|r| r.x.iter().all(|c| c.abs() <= 0.5)));
    assert!(res.maximizers.iter().all(|m| m.value.is_finite()));
}

#[test]
fn baselines_are_deterministic() {
    let problem = linear(5, 2, 7);
    let instances = draw_instances(&problem, 4, 7).unwrap();
    let run = |f: &dyn Fn() -> hdbo_rml::hdbo::RmlResult| f().trace_jsonl().unwrap();
    let rd = || random_design(&problem.fresh(), &instances, 40, &mut stream(7, "rd", 0)).unwrap();
    let ls = || per_objective_local_search(&problem.fresh(), &instances, 40, &mut stream(7, "ls", 0)).unwrap();
    assert_eq!(run(&rd), run(&rd));
    assert_eq!(run(&ls), run(&ls));
}
