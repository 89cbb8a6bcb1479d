//! Twisting |x̂⟩ by μ = π/2 gives a two-component cat whose orientation
//! alternates with atom-number parity.

use std::f64::consts::FRAC_PI_2;

use echo_squeeze::dicke::make_css;
use echo_squeeze::protocols::cat_orientation;

pub fn run_example() -> echo_squeeze::Result<()> {
    for n in 10..=13 {
        let cat = make_css(n, FRAC_PI_2, 0.0)?.twisted(FRAC_PI_2);
        let axis = cat_orientation(n)?;
        let spread = cat.spectrum(axis);
        let weight_at_edges = spread.first().unwrap() + spread.last().unwrap();
        println!("N={n}: cat along {axis}, weight on ±S along that axis = {weight_at_edges:.6}");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
