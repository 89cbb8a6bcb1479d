//! Signal and noise fringes around φ = 0, including the cat-state echoes
//! whose fringe frequency depends on parity.

use std::f64::consts::FRAC_PI_4;

use echo_squeeze::analytics::{pmf_naf, scsp_fringe};
use echo_squeeze::protocols::{build_protocol, fringe, Form};
use echo_squeeze::ProtocolKind;

pub fn run_example() -> echo_squeeze::Result<()> {
    let n = 60;
    let spec = build_protocol(ProtocolKind::GespE, Form::Simplified, FRAC_PI_4)?;
    let model = pmf_naf(n, FRAC_PI_4, ProtocolKind::GespE)?;
    println!("GESP-e N={n} μ=π/4: M = {:.3}, A = {:.3}", model.pmf, model.naf);
    let phis: Vec<f64> = (-5..=5).map(|i| f64::from(i) * 0.01).collect();
    for obs in fringe(&spec, n, &phis)? {
        println!("  φ={:+.3}  signal={:8.4}  noise={:7.4}", obs.phi, obs.signal, obs.noise);
    }

    for matched in [true, false] {
        let pt = scsp_fringe(n, matched, 0.02)?;
        println!("SCSP {} at φ=0.02: signal {:.4}", if matched { "matched" } else { "crossed" }, pt.signal);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
