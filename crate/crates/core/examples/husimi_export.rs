//! Husimi Q distribution of the state after squeezing, summarized in the
//! terminal and written as CSV through the `husimi` subcommand writer.

use std::f64::consts::FRAC_PI_4;

use echo_squeeze::cli::{write_husimi, ScanConfig, Stage};
use echo_squeeze::dicke::{husimi_grid, make_css};
use echo_squeeze::ProtocolKind;

pub fn run_example() -> echo_squeeze::Result<()> {
    let n = 30;
    let squeezed = make_css(n, std::f64::consts::FRAC_PI_2, 0.0)?.twisted(FRAC_PI_4);
    let q = husimi_grid(&squeezed, 48, 96)?;
    let (theta, phi, peak) = q.argmax();
    println!("N={n} μ=π/4: ∫Q = {:.4}, peak {peak:.4} at θ={theta:.3}, φ={phi:.3}", q.normalization());

    let cfg = ScanConfig {
        n_atoms: vec![n],
        protocols: vec![ProtocolKind::GespE],
        mu: Some(FRAC_PI_4),
        stage: Stage::PostSqueeze,
        husimi_grid: (12, 24),
        ..ScanConfig::default()
    };
    let mut csv = Vec::new();
    write_husimi(&cfg, &mut csv)?;
    let text = String::from_utf8(csv).expect("utf-8 csv");
    println!("{} CSV lines; header: {}", text.lines().count(), text.lines().next().unwrap_or(""));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
