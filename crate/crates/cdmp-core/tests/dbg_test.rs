// temporary diagnostic
use cdmp_core::cdmp::{CdmpOptions, CdmpProblem};
use cdmp_core::demos;
use cdmp_core::dmp::{fit_lwr, FitConfig};
use cdmp_core::nlp;
use cdmp_core::sdf::{Polarity, SdfPrimitive, Shape};
use cdmp_core::zbf::SafetyScene;

#[test]
fn debug_disc_solve() {
    let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 201).unwrap();
    let model = fit_lwr(&demo, &FitConfig { n_basis: 20, ..Default::default() }).unwrap();
    let scene = SafetyScene::new(
        vec![SdfPrimitive { shape: Shape::Sphere { center: vec![0.5, 0.0], radius: 0.2 }, polarity: Polarity::Avoid }],
        0.1, 4.0,
    ).unwrap();
    let problem = CdmpProblem::new(model, scene, CdmpOptions { n_colloc: 50, ..Default::default() }).unwrap();
    let nlp_problem = cdmp_core::cdmp::transcribe(&problem).unwrap();
    let report = nlp::solve(&nlp_problem, &Default::default()).unwrap();
    eprintln!("status {:?} iters {} outer {}", report.status, report.iterations, report.outer_iterations);
    for (i, tr) in report.trace.iter().enumerate() {
        eprintln!("outer {i:2}: viol {:.4e} rho {:.1e} al {:.6e} -> {:.6e}", tr.violation, tr.penalty, tr.al_start, tr.al_end);
    }
    eprintln!("max_eq_viol {:.3e} min_ineq {:.3e} obj {:.4e}", report.max_eq_violation, report.min_ineq_residual, report.objective_value);
}
