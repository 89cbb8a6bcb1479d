//! Closed-form signal, noise and sensitivity results.
//!
//! The small-φ expansion of the GESP signal and variance is written as dot
//! products of S-polynomial coefficient vectors with powers of cos 2μ:
//!
//! ```text
//! ⟨S_x⟩   = S + φ² (a10·b0 ± a11·b1)
//! Var S_x =     φ² (a30·b0 ± a31·b1)
//! ```
//!
//! with the upper sign for GESP-e and the lower sign for GESP-o.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{check_finite, check_mu, Error, Result};
use crate::protocols::{build_protocol, Form, ProtocolKind};

fn check_atoms(n_atoms: u32, min: u32) -> Result<()> {
    if n_atoms < min {
        Err(Error::TooFewAtoms { min, got: n_atoms })
    } else {
        Ok(())
    }
}

/// `x^k` for large integer `k`, evaluated as sign·exp(k·ln|x|) so that huge
/// exponents underflow cleanly to zero instead of through denormals.
pub fn signed_pow(x: f64, k: i64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return if k > 0 { 0.0 } else { f64::INFINITY };
    }
    let magnitude = (k as f64 * x.abs().ln()).exp();
    if x < 0.0 && k % 2 != 0 {
        -magnitude
    } else {
        magnitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub two_s: u32,
    pub a10: [f64; 3],
    pub a11: [f64; 4],
    pub a20: [f64; 3],
    pub a21: [f64; 4],
    pub a30: [f64; 3],
    pub a31: [f64; 4],
    pub b0: [f64; 3],
    pub b1: [f64; 4],
}

fn dot<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    // Zero coefficients are skipped so that the literal negative powers of
    // cos 2μ for 2S < 4 never multiply into 0·∞.
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x != 0.0)
        .map(|(x, y)| x * y)
        .sum()
}

fn abs_dot<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| **x != 0.0)
        .map(|(x, y)| (x * y).abs())
        .sum()
}

/// Which branch of the ± in the expansion applies.
fn branch_sign(kind: ProtocolKind) -> Result<f64> {
    match kind {
        ProtocolKind::GespE | ProtocolKind::ScspE => Ok(1.0),
        ProtocolKind::GespO | ProtocolKind::ScspO => Ok(-1.0),
        ProtocolKind::Cesp => Err(Error::InvalidParameter {
            name: "protocol",
            value: f64::NAN,
            reason: "the GESP expansion does not apply to the CESP",
        }),
    }
}

impl CoefficientSet {
    /// Coefficient of φ² in the signal, `a10·b0 ± a11·b1`.
    pub fn signal_curvature(&self, sign: f64) -> f64 {
        dot(&self.a10, &self.b0) + sign * dot(&self.a11, &self.b1)
    }

    /// Coefficient of φ² in ⟨S_x²⟩, `a20·b0 ± a21·b1`.
    pub fn second_moment_curvature(&self, sign: f64) -> f64 {
        dot(&self.a20, &self.b0) + sign * dot(&self.a21, &self.b1)
    }

    /// Coefficient of φ² in the variance, `a30·b0 ± a31·b1`.
    pub fn variance_curvature(&self, sign: f64) -> f64 {
        dot(&self.a30, &self.b0) + sign * dot(&self.a31, &self.b1)
    }

    fn variance_scale(&self) -> f64 {
        abs_dot(&self.a30, &self.b0) + abs_dot(&self.a31, &self.b1)
    }
}

pub fn coefficient_set(two_s: u32, mu: f64) -> Result<CoefficientSet> {
    if two_s < 2 {
        return Err(Error::TooFewAtoms { min: 2, got: two_s });
    }
    check_finite("mu", mu)?;
    let s = f64::from(two_s) / 2.0;
    let h = s / 2.0;
    let hh = h * (s - 0.5);
    let a10 = [-h * s * (s + 0.5), h * (s - 0.5) * (s + 1.0), 0.0];
    let a11 = [0.0, h * (s - 0.5) * (s - 1.0), -h * s * (s - 0.5), h * s];
    let a20 = [-hh * (s - 0.5) * (s + 1.0), 0.0, hh * (s - 1.0) * (s + 1.5)];
    let a21 = [
        hh * (s - 1.0) * (s - 1.5),
        0.0,
        -hh * (s * s - 2.5 * s + 0.5),
        0.0,
    ];
    let a30 = [
        h * (s * s * s + s * s + 0.75 * s - 0.25),
        -h * 2.0 * s * (s + 1.0) * (s - 0.5),
        h * (s - 0.5) * (s - 1.0) * (s + 1.5),
    ];
    let a31 = [
        h * (s - 0.5) * (s - 1.0) * (s - 1.5),
        -h * 2.0 * s * (s - 0.5) * (s - 1.0),
        h * (s - 0.5) * (s * s + 2.5 * s - 0.5),
        -h * 2.0 * s * s,
    ];
    let c = (2.0 * mu).cos();
    let b0 = [1.0, c, c * c];
    let base = i64::from(two_s) - 4;
    let b1 = [
        signed_pow(c, base),
        signed_pow(c, base + 1),
        signed_pow(c, base + 2),
        signed_pow(c, base + 3),
    ];
    Ok(CoefficientSet {
        two_s,
        a10,
        a11,
        a20,
        a21,
        a30,
        a31,
        b0,
        b1,
    })
}

/// Small-φ signal and variance of a GESP variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansion {
    pub signal: f64,
    pub variance: f64,
}

pub fn gesp_expansion(n_atoms: u32, mu: f64, phi: f64, kind: ProtocolKind) -> Result<Expansion> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    check_finite("phi", phi)?;
    let sign = branch_sign(kind)?;
    let set = coefficient_set(n_atoms, mu)?;
    let s = f64::from(n_atoms) / 2.0;
    Ok(Expansion {
        signal: s + phi * phi * set.signal_curvature(sign),
        variance: phi * phi * set.variance_curvature(sign),
    })
}

/// Δφ⁻¹ = 2|a1| / √a3 at φ → 0. `UndefinedSensitivity` when the variance
/// curvature vanishes (GESP-e at μ = 0).
pub fn gesp_sensitivity(n_atoms: u32, mu: f64, kind: ProtocolKind) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let sign = branch_sign(kind)?;
    let set = coefficient_set(n_atoms, mu)?;
    let a1 = set.signal_curvature(sign);
    let a3 = set.variance_curvature(sign);
    if a3 <= 64.0 * f64::EPSILON * set.variance_scale() {
        return Err(Error::UndefinedSensitivity);
    }
    Ok(2.0 * a1.abs() / a3.sqrt())
}

pub fn cesp_sensitivity(n_atoms: u32, mu: f64) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let two_s = f64::from(n_atoms);
    Ok(two_s.sqrt() * (two_s - 1.0) * signed_pow(mu.cos(), i64::from(n_atoms) - 2) * mu.sin())
}

/// μ at which the CESP sensitivity peaks, arccot √(2S−2).
pub fn cesp_optimal_mu(n_atoms: u32) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    Ok((1.0 / (f64::from(n_atoms) - 2.0).sqrt()).atan())
}

/// Quantum Cramér-Rao bound: 2ΔS_x of the squeezed state for the even
/// variant, 2ΔS_y for the odd variant and the CESP.
pub fn qcr_bound(n_atoms: u32, mu: f64, kind: ProtocolKind) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let two_s = f64::from(n_atoms);
    let s = two_s / 2.0;
    let k = i64::from(n_atoms);
    let c2 = signed_pow((2.0 * mu).cos(), k - 2);
    let var4 = match kind {
        ProtocolKind::GespE | ProtocolKind::ScspE => {
            let mean = two_s * signed_pow(mu.cos(), k - 1);
            two_s * (s + 0.5) + two_s * (s - 0.5) * c2 - mean * mean
        }
        _ => two_s * (s + 0.5) - two_s * (s - 0.5) * c2,
    };
    Ok(var4.max(0.0).sqrt())
}

/// Interval of μ on which the GESP sensitivity sits near N/√2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub value: f64,
}

impl Plateau {
    pub fn contains(&self, mu: f64) -> bool {
        (self.mu_lo..=self.mu_hi).contains(&mu)
    }
}

pub fn plateau(n_atoms: u32) -> Result<Plateau> {
    check_atoms(n_atoms, 32)?;
    let s = f64::from(n_atoms) / 2.0;
    Ok(Plateau {
        mu_lo: 4.0 / s.sqrt(),
        mu_hi: FRAC_PI_2 - 1.0 / s.sqrt(),
        value: f64::from(n_atoms) / SQRT_2,
    })
}

/// Phase magnification factor M and noise amplification factor A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmfNaf {
    pub pmf: f64,
    pub naf: f64,
    /// Set for GESP values requested outside the plateau, where the
    /// closed forms no longer describe the fringe.
    pub outside_plateau: bool,
}

/// Fringe-model M and A: plateau forms for the GESP, the general-μ
/// gradient for the CESP (√(N/e) at its optimum), and the parity-matched or
/// crossed values for the SCSP.
pub fn pmf_naf(n_atoms: u32, mu: f64, kind: ProtocolKind) -> Result<PmfNaf> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let two_s = f64::from(n_atoms);
    let s = two_s / 2.0;
    Ok(match kind {
        ProtocolKind::GespE | ProtocolKind::GespO => PmfNaf {
            pmf: SQRT_2 * s * mu.sin(),
            naf: two_s.sqrt() * mu.sin(),
            outside_plateau: plateau(n_atoms).map_or(true, |p| !p.contains(mu)),
        },
        ProtocolKind::Cesp => PmfNaf {
            pmf: (two_s - 1.0) * mu.sin() * signed_pow(mu.cos(), i64::from(n_atoms) - 2),
            naf: 1.0,
            outside_plateau: false,
        },
        ProtocolKind::ScspE | ProtocolKind::ScspO => {
            if kind.parity_matched(n_atoms) {
                PmfNaf { pmf: two_s, naf: two_s.sqrt(), outside_plateau: false }
            } else {
                let v = (two_s - 1.0).sqrt();
                PmfNaf { pmf: v, naf: v, outside_plateau: false }
            }
        }
    })
}

/// M and A read off the exact small-φ expansion: the signal curvature
/// fixes M through S − SM²φ²/2, the variance curvature fixes A through
/// A√(S/2)·Mφ. Agrees with [`pmf_naf`] on the plateau.
pub fn exact_pmf_naf(n_atoms: u32, mu: f64, kind: ProtocolKind) -> Result<PmfNaf> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let sign = branch_sign(kind)?;
    let set = coefficient_set(n_atoms, mu)?;
    let s = f64::from(n_atoms) / 2.0;
    let pmf = (2.0 * set.signal_curvature(sign).abs() / s).sqrt();
    let a3 = set.variance_curvature(sign).max(0.0);
    let naf = if pmf > 0.0 { a3.sqrt() / (pmf * (s / 2.0).sqrt()) } else { f64::NAN };
    let outside_plateau = plateau(n_atoms).map_or(true, |p| !p.contains(mu));
    Ok(PmfNaf { pmf, naf, outside_plateau })
}

/// Plateau sensitivity at the hopping operating point with detection noise
/// `dn` added in quadrature: √2·S²·sin μ / √((S sin μ)² + dn²).
pub fn sensitivity_with_detection_noise(n_atoms: u32, mu: f64, dn: f64) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    check_finite("dn", dn)?;
    if dn < 0.0 {
        return Err(Error::InvalidParameter {
            name: "dn",
            value: dn,
            reason: "detection noise must be non-negative",
        });
    }
    let s = f64::from(n_atoms) / 2.0;
    let qpn = s * mu.sin();
    let total = qpn.hypot(dn);
    if total == 0.0 {
        return Err(Error::UndefinedSensitivity);
    }
    Ok(SQRT_2 * s * s * mu.sin() / total)
}

/// φ = π/(2M), the steepest point of the central GESP fringe.
pub fn hopping_operating_point(n_atoms: u32, mu: f64) -> Result<f64> {
    check_atoms(n_atoms, 2)?;
    let mu = check_mu(mu)?;
    let m = SQRT_2 * f64::from(n_atoms) / 2.0 * mu.sin();
    if m == 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "no phase magnification without squeezing",
        });
    }
    Ok(PI / (2.0 * m))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePoint {
    pub signal: f64,
    pub noise: f64,
    /// True when the closed form does not hold at this φ and the values
    /// come from simulation.
    pub simulated: bool,
}

/// SCSP fringe. Matched parity: (S cos 2Sφ, S|sin 2Sφ|). Crossed parity:
/// S cos^{2S−1}φ with noise √((2S−1)S/2)|sin(φ√(2S−1))|, the latter only
/// inside |φ|√(2S−1) < π/4; beyond that both come from simulation.
pub fn scsp_fringe(n_atoms: u32, matched: bool, phi: f64) -> Result<FringePoint> {
    check_atoms(n_atoms, 2)?;
    check_finite("phi", phi)?;
    let two_s = f64::from(n_atoms);
    let s = two_s / 2.0;
    if matched {
        return Ok(FringePoint {
            signal: s * (two_s * phi).cos(),
            noise: s * (two_s * phi).sin().abs(),
            simulated: false,
        });
    }
    let root = (two_s - 1.0).sqrt();
    if phi.abs() * root < PI / 4.0 {
        return Ok(FringePoint {
            signal: s * signed_pow(phi.cos(), i64::from(n_atoms) - 1),
            noise: ((two_s - 1.0) * s / 2.0).sqrt() * (phi * root).sin().abs(),
            simulated: false,
        });
    }
    let kind = if n_atoms.is_multiple_of(2) { ProtocolKind::ScspO } else { ProtocolKind::ScspE };
    let obs = build_protocol(kind, Form::Simplified, FRAC_PI_2)?.observe(n_atoms, phi)?;
    Ok(FringePoint {
        signal: obs.signal,
        noise: obs.noise,
        simulated: true,
    })
}

/// One row of a μ scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityPoint {
    pub mu: f64,
    pub n_atoms: u32,
    pub version: ProtocolKind,
    /// `None` where the sensitivity is undefined.
    pub analytic: Option<f64>,
    pub numeric: Option<f64>,
    pub qcr: f64,
    pub pmf: f64,
    pub naf: f64,
}

/// Analytic sensitivity of any protocol kind; the SCSP is the GESP variant
/// of the same parity evaluated at μ = π/2.
pub fn analytic_sensitivity(n_atoms: u32, mu: f64, kind: ProtocolKind) -> Result<f64> {
    match kind {
        ProtocolKind::Cesp => cesp_sensitivity(n_atoms, mu),
        ProtocolKind::ScspE => gesp_sensitivity(n_atoms, FRAC_PI_2, ProtocolKind::GespE),
        ProtocolKind::ScspO => gesp_sensitivity(n_atoms, FRAC_PI_2, ProtocolKind::GespO),
        _ => gesp_sensitivity(n_atoms, mu, kind),
    }
}

/// Analytic, QCR and M/A values at one μ, with the brute-force numeric
/// sensitivity added when `n_atoms ≤ numeric_cutoff`.
pub fn sensitivity_point(
    n_atoms: u32,
    mu: f64,
    kind: ProtocolKind,
    numeric_cutoff: u32,
) -> Result<SensitivityPoint> {
    let mu = if kind.is_scsp() { FRAC_PI_2 } else { mu };
    let analytic = match analytic_sensitivity(n_atoms, mu, kind) {
        Ok(v) => Some(v),
        Err(Error::UndefinedSensitivity) => None,
        Err(e) => return Err(e),
    };
    let numeric = if n_atoms <= numeric_cutoff {
        let spec = build_protocol(kind, Form::Simplified, mu)?;
        match crate::protocols::numeric_sensitivity(&spec, n_atoms) {
            Ok(v) => Some(v),
            Err(Error::UndefinedSensitivity) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let factors = match kind {
        ProtocolKind::Cesp => pmf_naf(n_atoms, mu, kind)?,
        _ => exact_pmf_naf(n_atoms, mu, kind)?,
    };
    Ok(SensitivityPoint {
        mu,
        n_atoms,
        version: kind,
        analytic,
        numeric,
        qcr: qcr_bound(n_atoms, mu, kind)?,
        pmf: factors.pmf,
        naf: factors.naf,
    })
}
