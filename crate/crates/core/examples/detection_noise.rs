use echo_squeeze::analytics::{hopping_operating_point, sensitivity_with_detection_noise};
use echo_squeeze::protocols::{build_protocol, operating_point, Form};
use echo_squeeze::ProtocolKind;

/// Sensitivity at the hopping operating point as classical detection noise
/// grows, simulated and from the closed form.
pub fn run_example() -> echo_squeeze::Result<()> {
    let (n, mu) = (200, 1.0);
    let spec = build_protocol(ProtocolKind::GespE, Form::Simplified, mu)?;
    let phi = hopping_operating_point(n, mu)?;
    for dn in [0.0, 5.0, 20.0, 80.0] {
        let sim = operating_point(&spec, n, phi, dn)?;
        let closed = sensitivity_with_detection_noise(n, mu, dn)?;
        println!("ΔS_DN={dn:>5.1}: simulated {:8.3} (QPN {:.3}), closed form {closed:8.3}", sim.sensitivity, sim.qpn);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
