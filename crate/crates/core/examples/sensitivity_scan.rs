//! Phase sensitivity against twisting strength for the generalized and
//! CSS-based echoes, next to the quantum Cramér-Rao bound.

use std::f64::consts::FRAC_PI_2;

use echo_squeeze::analytics::{cesp_optimal_mu, plateau, sensitivity_point};
use echo_squeeze::ProtocolKind;

pub fn run_example() -> echo_squeeze::Result<()> {
    let n = 100;
    let p = plateau(n)?;
    println!("N={n}: plateau {:.3} ≤ μ ≤ {:.3} at Δφ⁻¹ ≈ {:.2}", p.mu_lo, p.mu_hi, p.value);
    println!("{:>6} {:>8} {:>10} {:>10} {:>10}", "mu", "version", "analytic", "numeric", "qcr");
    for i in 1..=8 {
        let mu = FRAC_PI_2 * f64::from(i) / 8.0;
        for kind in [ProtocolKind::GespE, ProtocolKind::GespO, ProtocolKind::Cesp] {
            let pt = sensitivity_point(n, mu, kind, 512)?;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!("{mu:>6.3} {:>8} {:>10} {:>10} {:>10.3}", kind.name(), show(pt.analytic), show(pt.numeric), pt.qcr);
        }
    }
    println!("CESP optimum at μ = {:.4}", cesp_optimal_mu(n)?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
