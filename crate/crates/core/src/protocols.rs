//! Echo-squeezing protocol sequences and their exact simulation.
//!
//! Every protocol starts from the coherent state |x̂⟩ (the first π/2 pulse
//! about y, applied to |ẑ⟩, is folded into the initial state). The
//! simplified form is squeeze → effective phase rotation → unsqueeze →
//! measure; the clock and atom-interferometer forms spell out the
//! auxiliary pulses, dark periods and readout pulse that reduce to it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::dicke::{make_css, Axis, DickeState, OperatorKind};
use crate::error::{check_finite, check_mu, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    GespE,
    GespO,
    Cesp,
    ScspE,
    ScspO,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::GespE,
        ProtocolKind::GespO,
        ProtocolKind::Cesp,
        ProtocolKind::ScspE,
        ProtocolKind::ScspO,
    ];

    /// Axis of the effective phase rotation in the simplified form.
    pub fn phase_axis(self) -> Axis {
        match self {
            ProtocolKind::GespE | ProtocolKind::ScspE => Axis::X,
            ProtocolKind::GespO | ProtocolKind::ScspO | ProtocolKind::Cesp => Axis::Y,
        }
    }

    pub fn measured_axis(self) -> Axis {
        match self {
            ProtocolKind::Cesp => Axis::Y,
            _ => Axis::X,
        }
    }

    /// Signal stationary at φ = 0 (all but the CESP, whose signal is odd).
    pub fn is_symmetric(self) -> bool {
        self != ProtocolKind::Cesp
    }

    pub fn is_scsp(self) -> bool {
        matches!(self, ProtocolKind::ScspE | ProtocolKind::ScspO)
    }

    /// Whether the variant is tuned for the parity of `n_atoms` (only
    /// meaningful for GESP/SCSP).
    pub fn parity_matched(self, n_atoms: u32) -> bool {
        let even = n_atoms.is_multiple_of(2);
        match self {
            ProtocolKind::GespE | ProtocolKind::ScspE => even,
            ProtocolKind::GespO | ProtocolKind::ScspO => !even,
            ProtocolKind::Cesp => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::GespE => "gesp-e",
            ProtocolKind::GespO => "gesp-o",
            ProtocolKind::Cesp => "cesp",
            ProtocolKind::ScspE => "scsp-e",
            ProtocolKind::ScspO => "scsp-o",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown protocol '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Simplified,
    Clock,
    Lpai,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    /// Fixed-angle rotation e^{−i·angle·S_axis}.
    Pulse { axis: Axis, angle: f64 },
    /// e^{sign·iμS_z²}; `sign = -1` squeezes, `sign = +1` unsqueezes.
    Squeeze { mu: f64, sign: i8 },
    /// e^{−i·scale·φ·S_axis} with φ the scanned phase.
    PhaseRotation { axis: Axis, scale: f64 },
    Measure(Axis),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub form: Form,
    pub mu: f64,
    pub steps: Vec<Step>,
}

impl ProtocolSpec {
    pub fn measured_axis(&self) -> Axis {
        match self.steps.last() {
            Some(Step::Measure(axis)) => *axis,
            _ => unreachable!("validated specs end in a measurement"),
        }
    }

    fn validate(&self) -> Result<()> {
        let measures = self
            .steps
            .iter()
            .filter(|s| matches!(s, Step::Measure(_)))
            .count();
        if measures != 1 || !matches!(self.steps.last(), Some(Step::Measure(_))) {
            return Err(Error::MalformedProtocol(
                "exactly one Measure step is required and it must be last",
            ));
        }
        Ok(())
    }

    /// Indices of the fixed-angle pulses.
    pub fn pulse_indices(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Step::Pulse { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Copy with the rotation angle of the pulse at `index` negated.
    pub fn with_flipped_pulse(&self, index: usize) -> Result<ProtocolSpec> {
        let mut out = self.clone();
        match out.steps.get_mut(index) {
            Some(Step::Pulse { angle, .. }) => {
                *angle = -*angle;
                Ok(out)
            }
            _ => Err(Error::MalformedProtocol("step is not a fixed-angle pulse")),
        }
    }

    /// Evolves |x̂⟩ through every step before the measurement.
    pub fn run(&self, n_atoms: u32, phi: f64) -> Result<DickeState> {
        check_finite("phi", phi)?;
        let initial = make_css(n_atoms, FRAC_PI_2, 0.0)?;
        Ok(apply_steps(initial, &self.steps, phi))
    }

    pub fn observe(&self, n_atoms: u32, phi: f64) -> Result<Observation> {
        let state = self.run(n_atoms, phi)?;
        let m = state.moments(self.measured_axis());
        Ok(Observation {
            phi,
            signal: m.mean(),
            noise: m.std_dev(),
            deficit: m.deficit,
        })
    }
}

fn apply_steps(mut state: DickeState, steps: &[Step], phi: f64) -> DickeState {
    for step in steps {
        state = match *step {
            Step::Pulse { axis, angle } => state.rotated(axis, angle),
            Step::Squeeze { mu, sign } => state.twisted(-f64::from(sign) * mu),
            Step::PhaseRotation { axis, scale } => state.rotated(axis, scale * phi),
            Step::Measure(_) => state,
        };
    }
    state
}

/// Signal ⟨S_w⟩ and projection noise ΔS_w of the measured component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub phi: f64,
    pub signal: f64,
    pub noise: f64,
    /// `S − signal`, kept separately at full relative precision.
    pub deficit: f64,
}

/// Auxiliary pulse pair `(before, after)` that turns the z-axis dark-period
/// phase into a rotation about the kind's effective axis.
fn auxiliary_pulses(kind: ProtocolKind) -> (Step, Step) {
    match kind.phase_axis() {
        // R_y(π/2) R_z(φ) R_y(−π/2) = R_x(φ)
        Axis::X => (
            Step::Pulse { axis: Axis::Y, angle: -FRAC_PI_2 },
            Step::Pulse { axis: Axis::Y, angle: FRAC_PI_2 },
        ),
        // R_x(−π/2) R_z(φ) R_x(π/2) = R_y(φ)
        _ => (
            Step::Pulse { axis: Axis::X, angle: FRAC_PI_2 },
            Step::Pulse { axis: Axis::X, angle: -FRAC_PI_2 },
        ),
    }
}

/// Readout pulse that maps the measured component onto S_z.
fn readout_pulse(kind: ProtocolKind) -> Step {
    match kind.measured_axis() {
        // R_y(−π/2)† S_z R_y(−π/2) = S_x
        Axis::X => Step::Pulse { axis: Axis::Y, angle: -FRAC_PI_2 },
        // R_x(π/2)† S_z R_x(π/2) = S_y
        _ => Step::Pulse { axis: Axis::X, angle: FRAC_PI_2 },
    }
}

/// Auxiliary pulse, split dark period around a π pulse, inverse auxiliary
/// pulse: the interferometer block equivalent to a rotation about the
/// kind's effective axis.
fn lpai_middle(kind: ProtocolKind) -> Vec<Step> {
    let (pulse_axis, aux_angle) = match kind.phase_axis() {
        Axis::X => (Axis::Y, -FRAC_PI_2),
        _ => (Axis::X, FRAC_PI_2),
    };
    let aux = Step::Pulse { axis: pulse_axis, angle: aux_angle };
    vec![
        aux,
        Step::PhaseRotation { axis: Axis::Z, scale: 0.5 },
        Step::Pulse { axis: pulse_axis, angle: PI },
        Step::PhaseRotation { axis: Axis::Z, scale: -0.5 },
        aux,
    ]
}

pub fn build_protocol(kind: ProtocolKind, form: Form, mu: f64) -> Result<ProtocolSpec> {
    let mu = if kind.is_scsp() { FRAC_PI_2 } else { check_mu(mu)? };
    let squeeze = Step::Squeeze { mu, sign: -1 };
    let unsqueeze = Step::Squeeze { mu, sign: 1 };
    let steps = match form {
        Form::Simplified => vec![
            squeeze,
            Step::PhaseRotation { axis: kind.phase_axis(), scale: 1.0 },
            unsqueeze,
            Step::Measure(kind.measured_axis()),
        ],
        Form::Clock => {
            let (aux, aux_inv) = auxiliary_pulses(kind);
            vec![
                squeeze,
                aux,
                Step::PhaseRotation { axis: Axis::Z, scale: 1.0 },
                aux_inv,
                unsqueeze,
                readout_pulse(kind),
                Step::Measure(Axis::Z),
            ]
        }
        Form::Lpai => {
            let mut steps = vec![squeeze];
            steps.extend(lpai_middle(kind));
            steps.extend([unsqueeze, readout_pulse(kind), Step::Measure(Axis::Z)]);
            steps
        }
    };
    let spec = ProtocolSpec { kind, form, mu, steps };
    spec.validate()?;
    Ok(spec)
}

pub fn run(spec: &ProtocolSpec, n_atoms: u32, phi: f64) -> Result<DickeState> {
    spec.run(n_atoms, phi)
}

pub fn signal(spec: &ProtocolSpec, n_atoms: u32, phi: f64) -> Result<f64> {
    spec.observe(n_atoms, phi).map(|o| o.signal)
}

pub fn noise(spec: &ProtocolSpec, n_atoms: u32, phi: f64) -> Result<f64> {
    spec.observe(n_atoms, phi).map(|o| o.noise)
}

/// Probe phase for finite differences: 10⁻⁴ scaled down by the plateau
/// phase magnification √2·S·sin μ so it stays deep inside the central
/// fringe.
pub fn probe_phase(n_atoms: u32, mu: f64) -> f64 {
    let pmf = std::f64::consts::SQRT_2 * f64::from(n_atoms) / 2.0 * mu.sin();
    1e-4 / pmf.max(1.0)
}

/// Noise slopes below this fraction of the unsqueezed √(S/2) are treated as
/// a vanishing fringe (round-off level).
const FLAT_FRINGE_TOL: f64 = 1e-8;

/// Brute-force sensitivity Δφ⁻¹ at φ = 0 from the simulated state.
///
/// Odd signals use |∂_φ⟨S_w⟩| / ΔS_w with a fourth-order central
/// difference. Even signals have vanishing gradient and noise at φ = 0, so
/// the ratio of their first φ-slopes is taken instead: the curvature of the
/// signal over the slope of the noise, both from fourth-order stencils.
pub fn numeric_sensitivity(spec: &ProtocolSpec, n_atoms: u32) -> Result<f64> {
    if n_atoms < 2 {
        return Err(Error::TooFewAtoms { min: 2, got: n_atoms });
    }
    let h = probe_phase(n_atoms, spec.mu);
    let s = f64::from(n_atoms) / 2.0;
    let at = |phi: f64| spec.observe(n_atoms, phi);
    let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
    if spec.kind.is_symmetric() {
        let d0 = at(0.0)?.deficit;
        // Curvature of the deficit; the signal curvature is its negative.
        let curvature = (-p2.deficit + 16.0 * p1.deficit - 30.0 * d0 + 16.0 * m1.deficit
            - m2.deficit)
            / (12.0 * h * h);
        let slope_p = (8.0 * p1.noise - p2.noise) / (6.0 * h);
        let slope_m = (8.0 * m1.noise - m2.noise) / (6.0 * h);
        let noise_slope = 0.5 * (slope_p + slope_m);
        if noise_slope < 1e-300 || noise_slope < FLAT_FRINGE_TOL * (s / 2.0).sqrt() {
            return Err(Error::UndefinedSensitivity);
        }
        Ok(curvature.abs() / noise_slope)
    } else {
        let gradient = (8.0 * (p1.signal - m1.signal) - (p2.signal - m2.signal)) / (12.0 * h);
        let noise0 = at(0.0)?.noise;
        if noise0 < 1e-300 {
            return Err(Error::UndefinedSensitivity);
        }
        Ok(gradient.abs() / noise0)
    }
}

/// Sensitivity at a non-zero operating phase (hopping technique), with
/// detection noise added in quadrature to the simulated projection noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub phi: f64,
    pub gradient: f64,
    pub qpn: f64,
    pub detection_noise: f64,
    pub sensitivity: f64,
}

pub fn operating_point(
    spec: &ProtocolSpec,
    n_atoms: u32,
    phi: f64,
    detection_noise: f64,
) -> Result<OperatingPoint> {
    if detection_noise.is_nan() || detection_noise < 0.0 {
        return Err(Error::InvalidParameter {
            name: "detection_noise",
            value: detection_noise,
            reason: "must be non-negative",
        });
    }
    let h = probe_phase(n_atoms, spec.mu);
    let sig = |p: f64| spec.observe(n_atoms, p).map(|o| o.signal);
    let gradient = (8.0 * (sig(phi + h)? - sig(phi - h)?) - (sig(phi + 2.0 * h)? - sig(phi - 2.0 * h)?))
        / (12.0 * h);
    let qpn = spec.observe(n_atoms, phi)?.noise;
    let total = qpn.hypot(detection_noise);
    if total < 1e-300 {
        return Err(Error::UndefinedSensitivity);
    }
    Ok(OperatingPoint {
        phi,
        gradient,
        qpn,
        detection_noise,
        sensitivity: gradient.abs() / total,
    })
}

/// Residuals between a full pulse sequence and its simplified form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionResidual {
    pub clock_state: f64,
    pub clock_signal: f64,
    pub lpai_state: f64,
    pub lpai_signal: f64,
}

impl ReductionResidual {
    pub fn max(&self) -> f64 {
        self.clock_state
            .max(self.clock_signal)
            .max(self.lpai_state)
            .max(self.lpai_signal)
    }
}

fn full_form_residual(
    full: &ProtocolSpec,
    simplified: &DickeState,
    simplified_signal: f64,
    n_atoms: u32,
    phi: f64,
) -> Result<(f64, f64)> {
    let state = full.run(n_atoms, phi)?;
    let readout = full
        .steps
        .iter()
        .rev()
        .find_map(|s| match *s {
            Step::Pulse { axis, angle } => Some((axis, angle)),
            _ => None,
        })
        .ok_or(Error::MalformedProtocol("full form has no readout pulse"))?;
    let mapped = simplified.rotated(readout.0, readout.1);
    let state_residual = (1.0 - state.fidelity(&mapped)?).max(0.0);
    let signal = state.moments(full.measured_axis()).mean();
    let scale = f64::from(n_atoms) / 2.0;
    Ok((state_residual, (signal - simplified_signal).abs() / scale))
}

/// Runs the clock and interferometer forms of `kind` and compares them with
/// the simplified three-step form: state residual 1 − |⟨ψ_full|ψ_simplified⟩|
/// (after the readout pulse) and the measured-signal difference relative to S.
pub fn verify_reduction(kind: ProtocolKind, n_atoms: u32, mu: f64, phi: f64) -> Result<ReductionResidual> {
    let simplified = build_protocol(kind, Form::Simplified, mu)?;
    let simple_state = simplified.run(n_atoms, phi)?;
    let simple_signal = simple_state.moments(simplified.measured_axis()).mean();
    let clock = build_protocol(kind, Form::Clock, mu)?;
    let lpai = build_protocol(kind, Form::Lpai, mu)?;
    let (clock_state, clock_signal) =
        full_form_residual(&clock, &simple_state, simple_signal, n_atoms, phi)?;
    let (lpai_state, lpai_signal) =
        full_form_residual(&lpai, &simple_state, simple_signal, n_atoms, phi)?;
    Ok(ReductionResidual {
        clock_state,
        clock_signal,
        lpai_state,
        lpai_signal,
    })
}

/// 1 − |⟨ψ|B†R_axis(φ)|ψ⟩| for the pulse block `B` between squeeze and
/// unsqueeze of the given form, on an arbitrary reference state.
pub fn middle_block_residual(kind: ProtocolKind, form: Form, n_atoms: u32, phi: f64) -> Result<f64> {
    let spec = build_protocol(kind, form, FRAC_PI_2)?;
    let block: Vec<Step> = spec
        .steps
        .iter()
        .filter(|s| matches!(s, Step::Pulse { .. } | Step::PhaseRotation { .. }))
        .copied()
        .collect();
    let block = match form {
        // Drop the trailing readout pulse.
        Form::Clock | Form::Lpai => &block[..block.len() - 1],
        Form::Simplified => &block[..],
    };
    let reference = make_css(n_atoms, 1.1, 0.7)?.twisted(0.3).rotated(Axis::X, 0.2);
    let via_block = apply_steps(reference.clone(), block, phi);
    let direct = reference.rotated(kind.phase_axis(), phi);
    Ok((1.0 - via_block.fidelity(&direct)?).max(0.0))
}

/// Orientation of the cat state produced by OATS(π/2) on |x̂⟩: the axis with
/// the larger second moment.
pub fn cat_orientation(n_atoms: u32) -> Result<Axis> {
    if n_atoms < 2 {
        return Err(Error::TooFewAtoms { min: 2, got: n_atoms });
    }
    let cat = make_css(n_atoms, FRAC_PI_2, 0.0)?.twisted(FRAC_PI_2);
    let sxx = crate::dicke::expectation(&cat, &[OperatorKind::Sx, OperatorKind::Sx])?.re;
    let syy = crate::dicke::expectation(&cat, &[OperatorKind::Sy, OperatorKind::Sy])?.re;
    Ok(if sxx >= syy { Axis::X } else { Axis::Y })
}

/// Simulated signal and noise over a list of phases.
pub fn fringe(spec: &ProtocolSpec, n_atoms: u32, phis: &[f64]) -> Result<Vec<Observation>> {
    phis.iter().map(|&p| spec.observe(n_atoms, p)).collect()
}
