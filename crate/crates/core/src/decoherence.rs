//! Cavity decay, spontaneous emission and background-collision models.
//!
//! All models take the squeezing parameter μ = χt directly; the full
//! squeeze–unsqueeze sequence interacts with the cavity for χt = 2μ.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64 as C64;

use crate::dicke::{expectation, Axis, OperatorKind};
use crate::error::{check_finite, check_mu, Error, Result};
use crate::protocols::{build_protocol, operating_point, Form, ProtocolKind};

/// Cavity and atomic rates, all in the same angular-frequency units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceParams {
    kappa: f64,
    delta_abs: f64,
    gamma_sp: f64,
    g: f64,
    alpha: f64,
}

impl DecoherenceParams {
    pub fn new(kappa: f64, delta_abs: f64, gamma_sp: f64, g: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa", kappa),
            ("delta_abs", delta_abs),
            ("gamma_sp", gamma_sp),
            ("g", g),
            ("alpha", alpha),
        ] {
            check_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::InvalidParameter { name, value: v, reason: "must be non-negative" });
            }
        }
        if delta_abs == 0.0 {
            return Err(Error::InvalidParameter {
                name: "delta_abs",
                value: delta_abs,
                reason: "probe detuning must be non-zero",
            });
        }
        if alpha < 1.0 {
            return Err(Error::InvalidParameter { name: "alpha", value: alpha, reason: "must be at least 1" });
        }
        Ok(Self { kappa, delta_abs, gamma_sp, g, alpha })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn delta_abs(&self) -> f64 {
        self.delta_abs
    }

    pub fn gamma_sp(&self) -> f64 {
        self.gamma_sp
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_delta(self, delta_abs: f64) -> Result<Self> {
        Self::new(self.kappa, delta_abs, self.gamma_sp, self.g, self.alpha)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.kappa, self.delta_abs, self.gamma_sp, self.g, alpha)
    }

    /// Checks 1 ≤ α ≤ N for an ensemble of `n_atoms`.
    pub fn check_alpha(&self, n_atoms: u32) -> Result<()> {
        if self.alpha > f64::from(n_atoms) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must not exceed the atom number",
            });
        }
        Ok(())
    }

    /// Single-atom cooperativity C = (2g)²/(κΓ).
    pub fn cooperativity(&self) -> f64 {
        (2.0 * self.g).powi(2) / (self.kappa * self.gamma_sp)
    }
}

/// α approximated by the plateau phase magnification √2·S·sin μ, clamped
/// to [1, N].
pub fn default_alpha(n_atoms: u32, mu: f64) -> f64 {
    let n = f64::from(n_atoms);
    (SQRT_2 * n / 2.0 * mu.sin()).clamp(1.0, n.max(1.0))
}

/// γt = 2μκ/|δ| accumulated over squeeze and unsqueeze.
pub fn cavity_gamma_t(mu: f64, params: &DecoherenceParams) -> f64 {
    2.0 * mu * params.kappa / params.delta_abs
}

/// Reduction e^{−μκ/|δ|} of the measured spin component.
pub fn cavity_signal_factor(mu: f64, params: &DecoherenceParams) -> f64 {
    (-0.5 * cavity_gamma_t(mu, params)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedMoments {
    pub var_x: f64,
    pub var_y: f64,
}

/// Dephasing mixes the transverse second moments:
/// x' = (1+e^{−2γt})/2·x + (1−e^{−2γt})/2·y and symmetrically for y.
pub fn cavity_variance_mix(gamma_t: f64, var_x_ideal: f64, var_y_ideal: f64) -> Result<MixedMoments> {
    check_finite("gamma_t", gamma_t)?;
    if gamma_t < 0.0 {
        return Err(Error::InvalidParameter { name: "gamma_t", value: gamma_t, reason: "must be non-negative" });
    }
    let keep = 0.5 * (1.0 + (-2.0 * gamma_t).exp());
    let swap = 1.0 - keep;
    // Written as ideal + swap·(other − ideal) so the sum is preserved exactly
    // whenever the two updates round symmetrically.
    let diff = var_y_ideal - var_x_ideal;
    Ok(MixedMoments {
        var_x: var_x_ideal + swap * diff,
        var_y: var_y_ideal - swap * diff,
    })
}

/// Spontaneous-emission signal factor exp(−2αμΓ|δ|/(2g)²).
pub fn spontaneous_factor(mu: f64, params: &DecoherenceParams) -> f64 {
    (-2.0 * params.alpha * mu * params.gamma_sp * params.delta_abs / (2.0 * params.g).powi(2)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpontaneousBudget {
    /// Γ_eff per unit χ, Γ|δ|/(2g)²; multiply by χ for a rate.
    pub gamma_eff_per_chi: f64,
    pub delta_opt: f64,
    /// Combined cavity and spontaneous-emission factor at δ_opt,
    /// exp(−2μ√(2α/C)).
    pub net_factor: f64,
    /// Largest μ with μ√(2α/C) ≤ 1 when α is the plateau PMF.
    pub mu_bound: f64,
}

pub fn spontaneous_budget(mu: f64, params: &DecoherenceParams, n_atoms: u32) -> Result<SpontaneousBudget> {
    check_finite("mu", mu)?;
    let c = params.cooperativity();
    if c == 0.0 || c.is_nan() {
        return Err(Error::InvalidParameter {
            name: "cooperativity",
            value: c,
            reason: "the cavity must couple to the atoms",
        });
    }
    let alpha = params.alpha;
    Ok(SpontaneousBudget {
        gamma_eff_per_chi: params.gamma_sp * params.delta_abs / (2.0 * params.g).powi(2),
        delta_opt: params.kappa * (c / (2.0 * alpha)).sqrt(),
        net_factor: (-2.0 * mu * (2.0 * alpha / c).sqrt()).exp(),
        mu_bound: (c / (SQRT_2 * f64::from(n_atoms))).sqrt(),
    })
}

/// Cavity-limited sensitivity at the hopping operating point of the
/// parity-matched GESP: the simulated gradient is reduced by the cavity
/// signal factor, and with `mix_variance` the measured second moment is
/// mixed with the orthogonal one before forming the variance.
pub fn degraded_operating_point(
    n_atoms: u32,
    mu: f64,
    params: &DecoherenceParams,
    mix_variance: bool,
) -> Result<f64> {
    let kind = if n_atoms.is_multiple_of(2) { ProtocolKind::GespE } else { ProtocolKind::GespO };
    let phi = crate::analytics::hopping_operating_point(n_atoms, mu)?;
    let spec = build_protocol(kind, Form::Simplified, mu)?;
    let point = operating_point(&spec, n_atoms, phi, 0.0)?;
    let factor = cavity_signal_factor(mu, params);
    let state = spec.run(n_atoms, phi)?;
    let sxx = expectation(&state, &[OperatorKind::Sx, OperatorKind::Sx])?.re;
    let syy = expectation(&state, &[OperatorKind::Sy, OperatorKind::Sy])?.re;
    let mean = state.moments(Axis::X).mean();
    let second = if mix_variance {
        cavity_variance_mix(cavity_gamma_t(mu, params), sxx, syy)?.var_x
    } else {
        sxx
    };
    let var = (second - (factor * mean).powi(2)).max(0.0);
    if var == 0.0 {
        return Err(Error::UndefinedSensitivity);
    }
    Ok(factor * point.gradient.abs() / var.sqrt())
}

/// Ñ of N atoms ejected by background collisions between squeezing and
/// unsqueezing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionScenario {
    n_atoms: u32,
    n_collided: u32,
    mu: f64,
}

impl CollisionScenario {
    pub fn new(n_atoms: u32, n_collided: u32, mu: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        if n_collided > n_atoms {
            return Err(Error::InvalidParameter {
                name: "n_collided",
                value: f64::from(n_collided),
                reason: "cannot exceed the atom number",
            });
        }
        Ok(Self { n_atoms, n_collided, mu })
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn n_collided(&self) -> u32 {
        self.n_collided
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// ⟨Ŝ_x⟩ of the surviving atoms, (S − S̃)cos^{2S̃}μ.
pub fn collision_signal(scn: &CollisionScenario) -> f64 {
    let survivors = f64::from(scn.n_atoms - scn.n_collided) / 2.0;
    survivors * crate::analytics::signed_pow(scn.mu.cos(), i64::from(scn.n_collided))
}

/// |x̂⟩ amplitudes for a spin of length `two_s / 2`, including 2S = 0.
fn x_css(two_s: u32) -> Vec<f64> {
    let mut binom = vec![1.0f64; two_s as usize + 1];
    for k in 1..=two_s as usize {
        binom[k] = binom[k - 1] * f64::from(two_s + 1 - k as u32) / k as f64;
    }
    let scale = 0.5f64.powf(f64::from(two_s) / 2.0);
    binom.iter().map(|b| b.sqrt() * scale).collect()
}

/// Re⟨S₊⟩ = ⟨S_x⟩ for an unnormalised vector in a 2S+1 dimensional space.
fn sx_expectation(two_s: u32, v: &[C64]) -> f64 {
    (0..two_s as usize)
        .map(|k| {
            let coeff = (((two_s as usize - k) * (k + 1)) as f64).sqrt();
            (v[k + 1].conj() * v[k]).re * coeff
        })
        .sum()
}

/// Brute-force ⟨Ŝ_x⟩ on the product of the survivor and collided Dicke
/// spaces: twist the joint state by (Ŝ_z + S̃_z)², untwist the survivors
/// alone, and measure their S_x.
pub fn collision_oracle(scn: &CollisionScenario) -> Result<f64> {
    const MAX_ATOMS: u32 = 16;
    if scn.n_atoms > MAX_ATOMS {
        return Err(Error::TooManyAtoms { max: MAX_ATOMS, got: scn.n_atoms, what: "the collision oracle" });
    }
    let two_a = scn.n_atoms - scn.n_collided;
    let two_b = scn.n_collided;
    let (psi_a, psi_b) = (x_css(two_a), x_css(two_b));
    let mu = scn.mu;
    let mut total = 0.0;
    for (kb, &amp_b) in psi_b.iter().enumerate() {
        let mb = kb as f64 - f64::from(two_b) / 2.0;
        let branch: Vec<C64> = psi_a
            .iter()
            .enumerate()
            .map(|(ka, &amp_a)| {
                let ma = ka as f64 - f64::from(two_a) / 2.0;
                let phase = -mu * (ma + mb).powi(2) + mu * ma * ma;
                C64::from_polar(amp_a * amp_b, phase)
            })
            .collect();
        total += sx_expectation(two_a, &branch);
    }
    Ok(total)
}

/// Largest Ñ keeping the contrast above e⁻¹, −1/ln cos μ (≈ 2/μ² for small
/// μ). Infinite at μ = 0 and zero at μ = π/2.
pub fn max_tolerable_collisions(mu: f64) -> Result<f64> {
    let mu = check_mu(mu)?;
    if mu == 0.0 {
        return Ok(f64::INFINITY);
    }
    if mu == FRAC_PI_2 {
        return Ok(0.0);
    }
    Ok(-1.0 / mu.cos().ln())
}
