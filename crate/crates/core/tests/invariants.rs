use stagflow::diagnostics::{drift_report, BoundCheck, InitialBounds};
use stagflow::eulerian::{evolve, grid_distance, solve_to_end, SimConfig};
use stagflow::lagrangian::{evolve_flow, FlowOptions, ForcingRoute};
use stagflow::lift::{euler_residual, random_points};
use stagflow::operators::{deriv, evolution_rhs, mean};
use stagflow::profile::InitialProfile;
use stagflow::{Dimension, Field, Field32, PeriodicGrid};

fn dim(n: f64) -> Dimension {
    Dimension::new(n).unwrap()
}

fn sine(m: usize, amp: f64) -> Field {
    InitialProfile::sine(amp).sample(&PeriodicGrid::new(m).unwrap()).unwrap()
}

#[test]
fn lift_residual_shrinks_with_resolution() {
    let pts = random_points(100, dim(3.0), 2024).unwrap();
    let mut last = f64::INFINITY;
    for m in [128, 256, 512] {
        let cfg = SimConfig::new(dim(3.0), m, 1e-3, 1.0);
        let u = solve_to_end(&sine(m, 0.5), &cfg).unwrap();
        let ut = evolution_rhs(&u, dim(3.0));
        let rep = euler_residual(&u, &ut, dim(3.0), &pts).unwrap();
        assert!(rep.max_divergence < 1e-10);
        assert!(rep.max_momentum < last, "M = {m}: {:e} after {last:e}", rep.max_momentum);
        last = rep.max_momentum;
    }
    assert!(last < 1e-4);
}

#[test]
fn solutions_depend_continuously_on_data() {
    let cfg = SimConfig::new(dim(3.0), 128, 2e-3, 1.0);
    let base = sine(128, 0.5);
    let ub = solve_to_end(&base, &cfg).unwrap();
    let g = PeriodicGrid::new(128).unwrap();
    let bump: Field = InitialProfile::Fourier {
        mean: 0.0,
        cos: vec![0.0, 1.0],
        sin: vec![0.0, 0.0, 1.0],
    }
    .sample(&g)
    .unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let u = solve_to_end(&base.add_scaled(&bump, eps), &cfg).unwrap();
        let diff = u.add_scaled(&ub, -1.0);
        let c1 = diff.sup_norm() + deriv(&diff, 1).unwrap().sup_norm();
        assert!(c1 < last, "eps = {eps}: {c1:e}");
        assert!(c1 < 1e3 * eps);
        last = c1;
    }
}

#[test]
fn single_precision_run() {
    let d = Dimension::<f32>::new(3.0).unwrap();
    let g = PeriodicGrid::<f32>::new(64).unwrap();
    let u0: Field32 = InitialProfile::sine(0.5).sample(&g).unwrap();
    let cfg = SimConfig::new(d, 64, 2e-3f32, 0.5);
    let tr = evolve(&u0, &cfg, |_| {}).unwrap();
    assert!((mean(&tr.state.u) - mean(&u0)).abs() < 1e-5);
    let reference = solve_to_end(&sine(64, 0.5), &SimConfig::new(dim(3.0), 64, 2e-3, 0.5)).unwrap();
    let gap = tr
        .state
        .u
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (*a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap:e}");
}

#[test]
fn bounds_do_not_apply_below_three() {
    let u0 = sine(64, 0.5);
    let cfg = SimConfig::new(dim(2.0), 64, 2e-3, 0.2).with_record_every(10);
    let tr = evolve(&u0, &cfg, |_| {}).unwrap();
    let bounds = InitialBounds::from_initial(&u0, dim(2.0));
    assert!(bounds.c1_bound.is_none());
    let rep = drift_report(&tr.records, &bounds, 1e-3).unwrap();
    match rep.c1_bound {
        BoundCheck::NotApplicable { reason } => assert_eq!(reason, "not applicable (n=2)"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn blow_up_keeps_partial_history() {
    let u0 = sine(64, 0.5);
    let cfg = SimConfig::new(dim(3.0), 64, 1e-2, 5.0)
        .with_record_every(5)
        .with_blowup_threshold(3.2);
    let err = evolve(&u0, &cfg, |_| {}).unwrap_err();
    assert!(err.t > 0.0 && err.t < 5.0);
    assert!(err.max_abs_dxu > 3.2);
    assert!(!err.records.is_empty() && err.records.iter().all(|r| r.is_finite()));
    assert!(err.last_state.u.first_non_finite().is_none());
    let last = err.gradient_history.last().unwrap();
    assert!(last.0 <= err.t);
}

#[test]
fn forcing_routes_agree() {
    let u0 = sine(128, 0.3);
    let cfg = SimConfig::new(dim(4.0), 128, 2e-3, 0.4);
    let a = evolve_flow(&u0, &cfg, FlowOptions::default()).unwrap();
    let opts = FlowOptions {
        route: ForcingRoute::GridInterpolation,
        ..FlowOptions::default()
    };
    let b = evolve_flow(&u0, &cfg, opts).unwrap();
    let (fa, fb) = (a.last().unwrap(), b.last().unwrap());
    assert!(grid_distance(&fa.gdot, &fb.gdot) < 1e-3);
}
