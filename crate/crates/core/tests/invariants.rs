use std::f64::consts::{FRAC_PI_2, PI};

use echo_squeeze::analytics::{coefficient_set, gesp_sensitivity, qcr_bound};
use echo_squeeze::decoherence::{cavity_variance_mix, collision_signal, CollisionScenario};
use echo_squeeze::dicke::{expectation, make_css};
use echo_squeeze::protocols::{build_protocol, Form, ProtocolKind};
use echo_squeeze::{Axis, OperatorKind};
use proptest::prelude::*;

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_unitary(n in 1u32..80, theta in 0.0..PI, phi in -PI..PI, ax in axis(), angle in -7.0..7.0f64, mu in -2.0..2.0f64) {
        let s = make_css(n, theta, phi).unwrap().rotated(ax, angle).twisted(mu);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_compose(n in 1u32..60, ax in axis(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let s = make_css(n, 0.9, 0.2).unwrap().twisted(0.4);
        let two_steps = s.rotated(ax, a).rotated(ax, b);
        let one_step = s.rotated(ax, a + b);
        prop_assert!(1.0 - two_steps.fidelity(&one_step).unwrap() < 1e-11);
    }

    #[test]
    fn twist_is_a_diagonal_phase(n in 1u32..60, mu in -3.0..3.0f64) {
        let s = make_css(n, 1.2, -0.5).unwrap();
        let t = s.twisted(mu);
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            prop_assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        prop_assert!(1.0 - t.twisted(-mu).fidelity(&s).unwrap() < 1e-12);
        // e^{−iπS_z²} is a global phase for even N and a parity-dependent
        // phase for odd N; twisting by 2π is always the identity up to phase.
        prop_assert!(1.0 - s.twisted(mu + 2.0 * PI).fidelity(&t).unwrap() < 1e-10);
    }

    #[test]
    fn css_spin_length_is_maximal(n in 1u32..100, theta in 0.0..PI, phi in -PI..PI) {
        let s = make_css(n, theta, phi).unwrap();
        let sf = f64::from(n) / 2.0;
        let mut len2 = 0.0;
        for kind in [OperatorKind::Sx, OperatorKind::Sy, OperatorKind::Sz] {
            len2 += expectation(&s, &[kind]).unwrap().re.powi(2);
        }
        prop_assert!((len2.sqrt() - sf).abs() < 1e-9 * sf.max(1.0));
    }

    #[test]
    fn simplified_protocols_are_echoes(kind_idx in 0usize..5, n in 2u32..40, mu in 0.0..FRAC_PI_2) {
        let kind = ProtocolKind::ALL[kind_idx];
        let spec = build_protocol(kind, Form::Simplified, mu).unwrap();
        let out = spec.run(n, 0.0).unwrap();
        let x = make_css(n, FRAC_PI_2, 0.0).unwrap();
        prop_assert!(1.0 - out.fidelity(&x).unwrap() < 1e-10);
    }

    #[test]
    fn sensitivity_never_exceeds_bound(n in 4u32..400, mu in 0.0..FRAC_PI_2, odd in any::<bool>()) {
        let kind = if odd { ProtocolKind::GespO } else { ProtocolKind::GespE };
        if let Ok(v) = gesp_sensitivity(n, mu, kind) {
            prop_assert!(v <= qcr_bound(n, mu, kind).unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn b_vectors_bounded(two_s in 4u32..2000, mu in 0.0..FRAC_PI_2) {
        let set = coefficient_set(two_s, mu).unwrap();
        prop_assert!(set.b0.iter().chain(set.b1.iter()).all(|b| b.abs() <= 1.0 + 1e-15));
    }

    #[test]
    fn variance_mixing_preserves_sum(gt in 0.0..20.0f64, x in 0.0..1e4f64, y in 0.0..1e4f64) {
        let m = cavity_variance_mix(gt, x, y).unwrap();
        prop_assert!((m.var_x + m.var_y - (x + y)).abs() <= 1e-12 * (x + y).max(1.0));
    }

    #[test]
    fn collision_signal_monotone(n in 2u32..300, nc in 0u32..299, mu in 0.01..FRAC_PI_2) {
        let nc = nc % n;
        let a = collision_signal(&CollisionScenario::new(n, nc, mu).unwrap());
        let b = collision_signal(&CollisionScenario::new(n, nc + 1, mu).unwrap());
        prop_assert!(b <= a + 1e-12);
        let c = collision_signal(&CollisionScenario::new(n, nc + 1, (mu * 1.01).min(FRAC_PI_2)).unwrap());
        prop_assert!(c <= b + 1e-12);
    }
}
