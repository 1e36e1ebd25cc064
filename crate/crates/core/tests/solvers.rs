mod common;

use nalgebra::DVector;
use proxaccel::solvers::DEFAULT_SWITCH_CAP;
use proxaccel::{
    run_aa_restart, run_daarem, run_nesterov, run_nesterov_restart, run_nidaarem, run_pgd, CompositeProblem,
    DaaremConfig, Monitor, RestartCriterion, RunReport, StepConfig,
};

fn all_methods<P: CompositeProblem>(prob: &P, cfg: StepConfig) -> Vec<(&'static str, RunReport)> {
    let x0 = DVector::zeros(prob.dim());
    let d = DaaremConfig::default();
    vec![
        ("pgd", run_pgd(prob, &x0, cfg).unwrap()),
        ("nesterov", run_nesterov(prob, &x0, cfg).unwrap()),
        ("nesterov_restart", run_nesterov_restart(prob, &x0, cfg, RestartCriterion::Monotonicity).unwrap()),
        ("aa_restart", run_aa_restart(prob, &x0, cfg, 5).unwrap()),
        ("daarem", run_daarem(prob, &x0, cfg, &d).unwrap()),
        ("daarem_residual", run_daarem(prob, &x0, cfg, &d.clone().with_monitor(Monitor::Residual)).unwrap()),
        ("daarem_subset", run_daarem(prob, &x0, cfg, &d.clone().with_subset(true)).unwrap()),
        ("nidaarem", run_nidaarem(prob, &x0, cfg, &d, RestartCriterion::Monotonicity, DEFAULT_SWITCH_CAP).unwrap()),
    ]
}

fn check_agreement<P: CompositeProblem>(prob: &P) {
    let cfg = StepConfig::for_problem(prob);
    let runs = all_methods(prob, cfg);
    let best = runs.iter().map(|(_, r)| r.final_obj).fold(f64::INFINITY, f64::min);
    for (name, r) in &runs {
        assert!(r.converged, "{name} did not converge");
        let rel = (r.final_obj - best).abs() / best.abs().max(1e-300);
        assert!(rel <= 1e-6, "{name}: {} vs best {best}", r.final_obj);
        let steps = r.trace.last().unwrap().pg_steps;
        assert_eq!(steps, r.pg_steps, "{name}: trace and report disagree");
    }
}

#[test]
fn methods_agree_on_lasso() {
    check_agreement(&common::lasso(40, 80, 0.1, 1));
}

#[test]
fn methods_agree_on_logistic() {
    check_agreement(&common::logistic(60, 20, 0.1, 2));
}

#[test]
fn methods_agree_on_completion() {
    check_agreement(&common::completion(20, 15, 0.2, 3));
}

#[test]
fn methods_agree_on_box_qp() {
    check_agreement(&common::box_qp(20, 100.0, 4));
}

fn monotone_and_order_one<P: CompositeProblem>(prob: &P) {
    let cfg = StepConfig::for_problem(prob);
    let x0 = DVector::zeros(prob.dim());
    let mono = DaaremConfig { eps: 0.0, monitor: Monitor::Fixed, ..Default::default() };
    let rep = run_daarem(prob, &x0, cfg, &mono).unwrap();
    assert!(rep.converged);
    for w in rep.trace.windows(2) {
        assert!(w[1].objective <= w[0].objective + 1e-12 * w[0].objective.abs().max(1.0));
    }
    let m1 = run_daarem(prob, &x0, cfg, &DaaremConfig::default().with_m(1)).unwrap();
    assert!(m1.converged);
}

#[test]
fn monotone_daarem_and_order_one_on_every_backend() {
    monotone_and_order_one(&common::lasso(40, 80, 0.1, 5));
    monotone_and_order_one(&common::logistic(60, 20, 0.1, 6));
    monotone_and_order_one(&common::completion(20, 15, 0.2, 7));
    monotone_and_order_one(&common::box_qp(20, 100.0, 8));
}

#[test]
fn fista_rate_on_quadratic() {
    let (prob, x_star) = common::interior_quadratic(&[0.01, 0.3, 1.0, 2.5, 4.0], 9);
    let x0 = DVector::from_element(5, 0.9);
    let t = 1.0 / prob.lipschitz();
    let phi_star = prob.eval_g(&x_star);
    let r0 = (&x0 - &x_star).norm_squared();
    let rep = run_nesterov(&prob, &x0, StepConfig::for_problem(&prob)).unwrap();
    for rec in &rep.trace {
        let k = rec.iter as f64;
        assert!(rec.objective - phi_star <= 2.0 * r0 / (t * (k + 1.0).powi(2)) + 1e-12);
    }
}

#[test]
fn truncated_run_reports_failure() {
    let prob = common::lasso(40, 80, 0.01, 10);
    let cfg = StepConfig::for_problem(&prob).with_max_iter(1);
    let x0 = DVector::zeros(80);
    for (name, r) in all_methods(&prob, cfg) {
        assert!(!r.converged, "{name}");
        assert_eq!(r.iterations, 1, "{name}");
        assert!(r.final_obj.is_finite());
    }
    let r = run_pgd(&prob, &x0, cfg).unwrap();
    assert_eq!(r.pg_steps, 1);
}

#[test]
fn subset_matches_full_on_sparse_lasso_windows() {
    // columns beyond the active set stay at zero, so their window rows vanish
    let prob = common::lasso(60, 150, 0.3, 11);
    let cfg = StepConfig::for_problem(&prob).with_max_iter(100);
    let x0 = DVector::zeros(150);
    let full = DaaremConfig::default();
    let sub = DaaremConfig { subset_enabled: true, subset_scale: 0.0, ..full.clone() };
    let a = run_daarem(&prob, &x0, cfg, &full).unwrap();
    let b = run_daarem(&prob, &x0, cfg, &sub).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert!((&a.final_x - &b.final_x).amax() <= 1e-12);
}
