//! Rotations and twists checked against a dense matrix exponential.

use echo_squeeze::dicke::{make_css, CollectiveOperator};
use echo_squeeze::{Axis, OperatorKind, SpinMagnitude};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// exp(A) by scaling and squaring with a truncated Taylor series.
fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
    let dim = a.nrows();
    let mut term = DMatrix::<C64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn generator(spin: SpinMagnitude, axis: Axis, angle: f64) -> DMatrix<C64> {
    CollectiveOperator::new(spin, axis.operator()).dense() * C64::new(0.0, -angle)
}

fn test_vector(n: u32) -> DVector<C64> {
    let state = make_css(n, 1.0, 0.4).unwrap().twisted(0.37);
    DVector::from_column_slice(state.amplitudes())
}

fn max_diff(a: &[C64], b: &DVector<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn rotations_match_dense_exponential() {
    for n in [1u32, 2, 5, 12, 33, 64] {
        let spin = SpinMagnitude::from_atoms(n).unwrap();
        let v = test_vector(n);
        let state = make_css(n, 1.0, 0.4).unwrap().twisted(0.37);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for angle in [0.3, -1.1, 2.9] {
                let expected = expm(&generator(spin, axis, angle)) * &v;
                let got = state.rotated(axis, angle);
                let err = max_diff(got.amplitudes(), &expected);
                assert!(err < 1e-10, "N={n} {axis} {angle}: {err}");
            }
        }
    }
}

#[test]
fn twist_matches_dense_exponential() {
    for n in [1u32, 4, 9, 64] {
        let spin = SpinMagnitude::from_atoms(n).unwrap();
        let sz = CollectiveOperator::new(spin, OperatorKind::Sz).dense();
        let v = test_vector(n);
        let state = make_css(n, 1.0, 0.4).unwrap().twisted(0.37);
        for mu in [0.2, 1.3, std::f64::consts::FRAC_PI_2] {
            let expected = expm(&(&sz * &sz * C64::new(0.0, -mu))) * &v;
            let err = max_diff(state.twisted(mu).amplitudes(), &expected);
            assert!(err < 1e-10, "N={n} mu={mu}: {err}");
        }
    }
}
