//! Coherent spin states: spin length, projection noise and a rotation.

use std::f64::consts::FRAC_PI_2;

use echo_squeeze::dicke::{expectation, make_css, variance};
use echo_squeeze::{Axis, OperatorKind};

pub fn run_example() -> echo_squeeze::Result<()> {
    let n = 40;
    let x = make_css(n, FRAC_PI_2, 0.0)?;
    let sx = expectation(&x, &[OperatorKind::Sx])?.re;
    println!("N={n}: <Sx> = {sx:.6}, Var(Sy) = {:.6}, Var(Sz) = {:.6}", variance(&x, OperatorKind::Sy), variance(&x, OperatorKind::Sz));

    // A π/2 pulse about z carries |x̂⟩ onto |ŷ⟩.
    let y = make_css(n, FRAC_PI_2, FRAC_PI_2)?;
    let rotated = x.rotated(Axis::Z, FRAC_PI_2);
    println!("fidelity(Rz(π/2)|x>, |y>) = {:.12}", rotated.fidelity(&y)?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
