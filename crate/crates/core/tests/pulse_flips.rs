//! Negating the angle of an auxiliary clock pulse acts on the fringe as a
//! reflection signal(φ) → σ·signal(τφ), and two flips compose.

use echo_squeeze::protocols::{build_protocol, Form, ProtocolKind, ProtocolSpec};

fn reflection(spec: &ProtocolSpec, flipped: &ProtocolSpec, n: u32) -> Option<(i32, i32)> {
    let phis = [0.13, -0.29, 0.41, 0.05];
    [(1, 1), (-1, 1), (1, -1), (-1, -1)].into_iter().find(|&(sigma, tau)| {
        phis.iter().all(|&phi| {
            let a = flipped.observe(n, phi).unwrap().signal;
            let b = f64::from(sigma) * spec.observe(n, f64::from(tau) * phi).unwrap().signal;
            (a - b).abs() < 1e-10 * f64::from(n)
        })
    })
}

fn aux_reflections(kind: ProtocolKind, n: u32, mu: f64) -> [(i32, i32); 3] {
    let spec = build_protocol(kind, Form::Clock, mu).unwrap();
    let idx = spec.pulse_indices();
    let first = spec.with_flipped_pulse(idx[0]).unwrap();
    let second = spec.with_flipped_pulse(idx[1]).unwrap();
    let both = first.with_flipped_pulse(idx[1]).unwrap();
    [
        reflection(&spec, &first, n).expect("single flip is a reflection"),
        reflection(&spec, &second, n).expect("single flip is a reflection"),
        reflection(&spec, &both, n).expect("double flip is a reflection"),
    ]
}

#[test]
fn double_flip_composes_single_flips() {
    for kind in ProtocolKind::ALL {
        for n in [2u32, 7, 8, 21] {
            for mu in [0.3, 0.9] {
                let [a, b, both] = aux_reflections(kind, n, mu);
                assert_eq!(both, (a.0 * b.0, a.1 * b.1), "{kind} N={n} mu={mu}");
            }
        }
    }
}

#[test]
fn double_flip_restores_gesp_o_and_cat_protocols() {
    for kind in [ProtocolKind::GespO, ProtocolKind::ScspE, ProtocolKind::ScspO] {
        for n in [6u32, 9] {
            assert_eq!(aux_reflections(kind, n, 0.7)[2], (1, 1), "{kind} N={n}");
        }
    }
}

#[test]
fn double_flip_reverses_phase_for_gesp_e_and_sign_for_cesp() {
    for n in [6u32, 9] {
        assert_eq!(aux_reflections(ProtocolKind::GespE, n, 0.7), [(-1, -1), (-1, 1), (1, -1)]);
        assert_eq!(aux_reflections(ProtocolKind::Cesp, n, 0.7), [(1, 1), (-1, 1), (-1, 1)]);
    }
}
