//! Cavity loss, spontaneous emission and background collisions.

use echo_squeeze::decoherence::{
    collision_signal, default_alpha, degraded_operating_point, max_tolerable_collisions, spontaneous_budget,
    CollisionScenario, DecoherenceParams,
};

pub fn run_example() -> echo_squeeze::Result<()> {
    let n = 100;
    for mu in [0.2, 0.5, 1.0] {
        let params = DecoherenceParams::new(1.0, 10.0, 1.0, 5.0, default_alpha(n, mu))?;
        let budget = spontaneous_budget(mu, &params, n)?;
        let far_detuned = degraded_operating_point(n, mu, &params.with_delta(1e12)?, false)?;
        let lossy = degraded_operating_point(n, mu, &params, true)?;
        println!(
            "μ={mu}: C={:.0}, δ_opt={:.2}, net factor {:.3}; Δφ⁻¹ {far_detuned:.2} without cavity loss, {lossy:.2} with",
            params.cooperativity(),
            budget.delta_opt,
            budget.net_factor
        );
    }

    let mu = 0.1;
    println!("μ={mu}: up to {:.1} collided atoms keep the contrast above 1/e", max_tolerable_collisions(mu)?);
    for nc in [0, 10, 50, 200] {
        let s = collision_signal(&CollisionScenario::new(1000, nc, mu)?);
        println!("  Ñ={nc:>3}: signal {s:.3}");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
