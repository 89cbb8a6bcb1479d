//! The clock (Ramsey-style) and interferometer pulse sequences reduce to
//! the simplified echo form. Prints the residuals for each protocol.

use echo_squeeze::protocols::{build_protocol, verify_reduction, Form};
use echo_squeeze::ProtocolKind;

pub fn run_example() -> echo_squeeze::Result<()> {
    let (n, mu, phi) = (25, 0.6, 0.03);
    for kind in ProtocolKind::ALL {
        let clock = build_protocol(kind, Form::Clock, mu)?;
        let r = verify_reduction(kind, n, mu, phi)?;
        println!(
            "{kind:>7}: {} clock steps, state residual {:.1e} (clock) {:.1e} (interferometer), signal residual {:.1e}",
            clock.steps.len(),
            r.clock_state,
            r.lpai_state,
            r.clock_signal.max(r.lpai_signal)
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
