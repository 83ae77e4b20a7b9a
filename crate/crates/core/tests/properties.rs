use proptest::prelude::*;

use stagflow::eulerian::{evolve, SimConfig};
use stagflow::interp::PeriodicPchip;
use stagflow::lift::{euler_residual, random_points};
use stagflow::operators::{deriv, evolution_rhs, inv_dx, mean};
use stagflow::profile::InitialProfile;
use stagflow::separable::exact_derivative_identity;
use stagflow::twophase::{closed_form_report, evolve_twophase, TwoPhaseInit, TwoPhaseState};
use stagflow::{Dimension, Field, PeriodicGrid};

fn dim(n: f64) -> Dimension {
    Dimension::new(n).unwrap()
}

fn random_field(m: usize, amp: f64, kmax: usize, seed: u64) -> Field {
    let g = PeriodicGrid::new(m).unwrap();
    InitialProfile::random(amp, kmax, seed).sample(&g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_is_conserved(seed in any::<u64>(), amp in 0.05..0.5f64, n in prop::sample::select(vec![2.0, 3.0, 4.0, 5.0])) {
        let u0 = random_field(64, amp, 4, seed);
        let cfg = SimConfig::new(dim(n), 64, 2e-3, 0.2).with_record_every(20);
        let tr = evolve(&u0, &cfg, |_| {}).unwrap();
        for r in &tr.records {
            prop_assert!((r.mean_u - tr.records[0].mean_u).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative(seed in any::<u64>(), kmax in 1usize..10) {
        let f = random_field(32, 1.0, kmax, seed);
        let back = deriv(&inv_dx(&f).unwrap(), 1).unwrap();
        prop_assert!(back.add_scaled(&f, -1.0).sup_norm() < 1e-12);
        let again = inv_dx(&deriv(&f, 1).unwrap()).unwrap();
        prop_assert!(again.add_scaled(&f, -1.0).sup_norm() < 1e-12);
    }

    #[test]
    fn exact_derivative_integrates_to_zero(seed in any::<u64>(), amp in 0.01..10.0f64, n in 3.5..12.0f64) {
        let x = random_field(128, amp, 8, seed);
        let v = exact_derivative_identity(&x, dim(n)).unwrap();
        // size of the two cancelling terms
        let r = (n - 1.0) / (n - 3.0);
        let h = deriv(&x, 2).unwrap().map(|v| v.abs().powf(r));
        let scale = deriv(&x, 1).unwrap().sup_norm() * h.sup_norm() + x.sup_norm() * deriv(&h, 1).unwrap().sup_norm();
        prop_assert!(v.abs() < 1e-12 * scale.max(1.0), "integral {v:e} against scale {scale:e}");
    }

    #[test]
    fn pchip_preserves_monotone_data(incs in prop::collection::vec(0.0..1.0f64, 8..40), x0 in -0.5..0.5f64) {
        let m = incs.len();
        let xs: Vec<f64> = (0..m).map(|j| x0 + j as f64 / m as f64).collect();
        let total: f64 = incs.iter().sum::<f64>() + 1e-3;
        let mut ys = Vec::with_capacity(m);
        let mut acc = 0.0;
        for v in &incs {
            ys.push(acc);
            acc += v;
        }
        let interp = PeriodicPchip::new(&xs, &ys, total).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=10 * m {
            let x = x0 - 0.3 + 1.6 * k as f64 / (10 * m) as f64;
            let y = interp.eval(x);
            prop_assert!(y >= prev - 1e-12);
            prev = y;
        }
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!((interp.eval(*x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn twophase_identities_hold(phi in 0.05..0.45f64, width in 0.1..0.5f64, p in 0.1..2.0f64, n in prop::sample::select(vec![2.0, 3.0, 5.0])) {
        let psi = phi + width;
        let q = -p * (1.0 - width) / width;
        let s0 = TwoPhaseState::new(TwoPhaseInit::new(p, q, phi, psi), dim(n)).unwrap();
        let series = evolve_twophase(&s0, 1e-3, 1.0, 50).unwrap();
        let rep = closed_form_report(&series).unwrap();
        let scale = series.iter().map(|s| s.p.abs() + s.q.abs()).fold(1.0, f64::max);
        // N is quadratic in the state, so RK4 keeps it only to truncation order
        prop_assert!(rep.n_residual < 1e-8 * scale, "N residual {:e}", rep.n_residual);
        prop_assert!(rep.partition_residual < 1e-8, "partition {:e}", rep.partition_residual);
        prop_assert!(rep.sign_preserved && rep.phases_bracketed);
        prop_assert!(series.iter().all(|s| s.phi > 0.0 && s.phi < s.psi && s.psi < 1.0));
    }

    #[test]
    fn lifted_velocity_is_divergence_free(seed in any::<u64>(), n in prop::sample::select(vec![2.0, 3.0, 4.0, 6.0])) {
        let u = random_field(64, 0.3, 4, seed);
        let ut = evolution_rhs(&u, dim(n));
        let pts = random_points(20, dim(n), seed ^ 0x5eed).unwrap();
        let rep = euler_residual(&u, &ut, dim(n), &pts).unwrap();
        prop_assert!(rep.max_divergence < 1e-12);
        // a single snapshot snapshot of a band-limited datum is resolved at M = 64
        prop_assert!(rep.max_momentum < 1e-9, "momentum {:e}", rep.max_momentum);
    }
}

#[test]
fn mean_of_derivative_vanishes() {
    let f = random_field(64, 1.0, 12, 77);
    for order in 1..=3 {
        let d = deriv(&f, order).unwrap();
        assert!(mean(&d).abs() < 1e-14 * d.sup_norm());
    }
}
