//! Permutation-symmetric states of N two-level atoms in the (N+1)-dimensional
//! Dicke basis |S, m⟩, S = N/2.
//!
//! Amplitudes are stored with index `k = m + S`, ascending in `m`. All
//! evolutions are closed-form propagators: z rotations and one-axis twisting
//! are diagonal phases, x and y rotations go through a cached eigenbasis of
//! the real tridiagonal `S_x` matrix.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{check_finite, Error, Result};

/// Total spin of an ensemble, stored as the integer `2S = N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinMagnitude {
    two_s: u32,
}

impl SpinMagnitude {
    pub fn new(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(Error::TooFewAtoms { min: 1, got: 0 });
        }
        Ok(Self { two_s })
    }

    pub fn from_atoms(n_atoms: u32) -> Result<Self> {
        Self::new(n_atoms)
    }

    pub fn two_s(self) -> u32 {
        self.two_s
    }

    pub fn n_atoms(self) -> u32 {
        self.two_s
    }

    pub fn s(self) -> f64 {
        f64::from(self.two_s) / 2.0
    }

    pub fn dim(self) -> usize {
        self.two_s as usize + 1
    }

    /// Twice the magnetic quantum number at index `k`, as an exact integer.
    pub fn two_m(self, k: usize) -> i64 {
        2 * k as i64 - i64::from(self.two_s)
    }

    pub fn m(self, k: usize) -> f64 {
        self.two_m(k) as f64 / 2.0
    }

    /// `m²` at index `k`; exact for any realistic `2S`.
    pub fn m_squared(self, k: usize) -> f64 {
        let t = self.two_m(k);
        (t * t) as f64 / 4.0
    }

    /// Matrix element ⟨m+1|S₊|m⟩ = √((S−m)(S+m+1)) for the column at index `k`.
    fn raise_coeff(self, k: usize) -> f64 {
        (((self.two_s as usize - k) * (k + 1)) as f64).sqrt()
    }

    /// Matrix element ⟨m−1|S₋|m⟩ = √((S+m)(S−m+1)) for the column at index `k`.
    fn lower_coeff(self, k: usize) -> f64 {
        ((k * (self.two_s as usize - k + 1)) as f64).sqrt()
    }
}

impl fmt::Display for SpinMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_s.is_multiple_of(2) {
            write!(f, "S={}", self.two_s / 2)
        } else {
            write!(f, "S={}/2", self.two_s)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn operator(self) -> OperatorKind {
        match self {
            Axis::X => OperatorKind::Sx,
            Axis::Y => OperatorKind::Sy,
            Axis::Z => OperatorKind::Sz,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Sx,
    Sy,
    Sz,
    Splus,
    Sminus,
}

impl OperatorKind {
    pub fn is_hermitian(self) -> bool {
        matches!(self, OperatorKind::Sx | OperatorKind::Sy | OperatorKind::Sz)
    }
}

/// A collective spin operator on a fixed Dicke space (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CollectiveOperator {
    pub spin: SpinMagnitude,
    pub kind: OperatorKind,
}

impl CollectiveOperator {
    pub fn new(spin: SpinMagnitude, kind: OperatorKind) -> Self {
        Self { spin, kind }
    }

    /// Sparse application to an amplitude vector of length `2S + 1`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let spin = self.spin;
        let dim = spin.dim();
        debug_assert_eq!(v.len(), dim);
        let mut out = vec![C64::new(0.0, 0.0); dim];
        match self.kind {
            OperatorKind::Sz => {
                for (k, (o, a)) in out.iter_mut().zip(v).enumerate() {
                    *o = a * spin.m(k);
                }
            }
            OperatorKind::Splus => {
                for k in 0..dim - 1 {
                    out[k + 1] = v[k] * spin.raise_coeff(k);
                }
            }
            OperatorKind::Sminus => {
                for k in 1..dim {
                    out[k - 1] = v[k] * spin.lower_coeff(k);
                }
            }
            OperatorKind::Sx | OperatorKind::Sy => {
                // out_k = ½(c₊(k−1) v_{k−1} ± c₋(k+1) v_{k+1}), with the
                // 1/(2i) factor for S_y folded in below.
                for k in 0..dim {
                    let up = if k > 0 {
                        v[k - 1] * spin.raise_coeff(k - 1)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let down = if k + 1 < dim {
                        v[k + 1] * spin.lower_coeff(k + 1)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    out[k] = if self.kind == OperatorKind::Sx {
                        (up + down) * 0.5
                    } else {
                        (up - down) * C64::new(0.0, -0.5)
                    };
                }
            }
        }
        out
    }

    /// Dense matrix in the ascending-m basis.
    pub fn dense(&self) -> DMatrix<C64> {
        let dim = self.spin.dim();
        DMatrix::from_fn(dim, dim, |row, col| {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            self.apply(&e)[row]
        })
    }
}

/// Pure state of the symmetric ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeState {
    spin: SpinMagnitude,
    amps: Vec<C64>,
}

impl DickeState {
    /// Builds a state from raw amplitudes and normalizes it.
    pub fn from_amplitudes(spin: SpinMagnitude, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != spin.dim() {
            return Err(Error::InvalidParameter {
                name: "amplitudes.len",
                value: amps.len() as f64,
                reason: "must equal 2S + 1",
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: norm,
                reason: "state must have a finite non-zero norm",
            });
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { spin, amps })
    }

    /// The Dicke state |S, m⟩ with `m = k − S`.
    pub fn basis(spin: SpinMagnitude, k: usize) -> Result<Self> {
        if k >= spin.dim() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                reason: "index outside the Dicke ladder",
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); spin.dim()];
        amps[k] = C64::new(1.0, 0.0);
        Ok(Self { spin, amps })
    }

    pub fn spin(&self) -> SpinMagnitude {
        self.spin
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &DickeState) -> Result<C64> {
        if self.spin != other.spin {
            return Err(Error::SpinMismatch(self.spin.two_s, other.spin.two_s));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Phase-insensitive overlap |⟨self|other⟩|.
    pub fn fidelity(&self, other: &DickeState) -> Result<f64> {
        self.inner(other).map(|c| c.norm())
    }

    pub fn rotated(&self, axis: Axis, angle: f64) -> DickeState {
        let amps = match axis {
            Axis::Z => z_phase(self.spin, &self.amps, angle),
            Axis::X => rotate_x(self.spin, &self.amps, angle),
            Axis::Y => {
                let tmp = z_phase(self.spin, &self.amps, -FRAC_PI_2);
                let tmp = rotate_x(self.spin, &tmp, angle);
                z_phase(self.spin, &tmp, FRAC_PI_2)
            }
        };
        DickeState {
            spin: self.spin,
            amps,
        }
    }

    /// One-axis twist e^{−iμS_z²}.
    pub fn twisted(&self, mu: f64) -> DickeState {
        let spin = self.spin;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| a * C64::from_polar(1.0, -mu * spin.m_squared(k)))
            .collect();
        DickeState { spin, amps }
    }

    pub fn apply(&self, kind: OperatorKind) -> Vec<C64> {
        CollectiveOperator::new(self.spin, kind).apply(&self.amps)
    }

    /// Measurement probabilities of `S_axis`, indexed by eigenvalue `m`
    /// ascending (same layout as the amplitudes).
    pub fn spectrum(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::Z => self.amps.iter().map(|a| a.norm_sqr()).collect(),
            Axis::X => sx_components(self.spin, &self.amps)
                .iter()
                .map(|c| c.norm_sqr())
                .collect(),
            Axis::Y => {
                let tmp = z_phase(self.spin, &self.amps, -FRAC_PI_2);
                sx_components(self.spin, &tmp)
                    .iter()
                    .map(|c| c.norm_sqr())
                    .collect()
            }
        }
    }

    /// Mean and variance of `S_axis`, accumulated as moments of `S − m`
    /// from the measurement distribution. Near-stretched states keep full
    /// relative precision in the deficit `S − ⟨S_axis⟩` this way.
    pub fn moments(&self, axis: Axis) -> Moments {
        let p = self.spectrum(axis);
        let mut deficit = 0.0;
        let mut second = 0.0;
        for (k, pk) in p.iter().enumerate() {
            // S − m_k = 2S − k, exact.
            let d = (self.spin.two_s as usize - k) as f64;
            deficit += pk * d;
            second += pk * d * d;
        }
        let variance = (second - deficit * deficit).max(0.0);
        Moments {
            s: self.spin.s(),
            deficit,
            variance,
        }
    }
}

/// Moments of one collective spin component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    s: f64,
    /// `S − ⟨S_w⟩ ≥ 0`.
    pub deficit: f64,
    pub variance: f64,
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.s - self.deficit
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn z_phase(spin: SpinMagnitude, v: &[C64], angle: f64) -> Vec<C64> {
    v.iter()
        .enumerate()
        .map(|(k, a)| a * C64::from_polar(1.0, -angle * spin.m(k)))
        .collect()
}

/// Eigenvectors of the real symmetric tridiagonal `S_x`, one column per
/// eigenvalue `m = −S..S` in ascending order.
struct SxEigenbasis {
    vectors: DMatrix<f64>,
}

fn eigen_cache() -> &'static RwLock<HashMap<u32, Arc<SxEigenbasis>>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<SxEigenbasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn sx_eigenbasis(spin: SpinMagnitude) -> Arc<SxEigenbasis> {
    if let Some(hit) = eigen_cache()
        .read()
        .expect("eigenbasis cache poisoned")
        .get(&spin.two_s)
    {
        return Arc::clone(hit);
    }
    let fresh = Arc::new(compute_sx_eigenbasis(spin));
    let mut guard = eigen_cache().write().expect("eigenbasis cache poisoned");
    Arc::clone(guard.entry(spin.two_s).or_insert(fresh))
}

fn compute_sx_eigenbasis(spin: SpinMagnitude) -> SxEigenbasis {
    let dim = spin.dim();
    let mut sx = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim - 1 {
        let e = 0.5 * spin.raise_coeff(k);
        sx[(k + 1, k)] = e;
        sx[(k, k + 1)] = e;
    }
    let eig = SymmetricEigen::new(sx);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (j, &src) in order.iter().enumerate() {
        // The spectrum of S_x is exactly {−S, …, S}; the sorted eigenvalues
        // are relabelled with those exact values.
        debug_assert!((eig.eigenvalues[src] - spin.m(j)).abs() < 1e-6 * (1.0 + spin.s()));
        vectors.set_column(j, &eig.eigenvectors.column(src));
    }
    SxEigenbasis { vectors }
}

/// Coefficients `c_j = ⟨v_j|ψ⟩` in the S_x eigenbasis.
fn sx_components(spin: SpinMagnitude, v: &[C64]) -> Vec<C64> {
    let basis = sx_eigenbasis(spin);
    basis
        .vectors
        .column_iter()
        .map(|col| {
            col.iter()
                .zip(v)
                .fold(C64::new(0.0, 0.0), |acc, (&w, a)| acc + a * w)
        })
        .collect()
}

fn rotate_x(spin: SpinMagnitude, v: &[C64], angle: f64) -> Vec<C64> {
    if angle == 0.0 {
        return v.to_vec();
    }
    let basis = sx_eigenbasis(spin);
    let coeffs = sx_components(spin, v);
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (j, (col, c)) in basis.vectors.column_iter().zip(coeffs).enumerate() {
        let c = c * C64::from_polar(1.0, -angle * spin.m(j));
        for (o, &w) in out.iter_mut().zip(col.iter()) {
            *o += c * w;
        }
    }
    out
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    lf.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        lf.push(acc);
    }
    lf
}

/// Real magnitudes √C(N,k) cos^k(θ/2) sin^{N−k}(θ/2) of a coherent state.
fn css_magnitudes(spin: SpinMagnitude, theta: f64, lf: &[f64]) -> Vec<f64> {
    let n = spin.two_s as usize;
    let (sin_h, cos_h) = (theta / 2.0).sin_cos();
    let (ln_c, ln_s) = (cos_h.abs().ln(), sin_h.abs().ln());
    (0..=n)
        .map(|k| {
            let up = if k == 0 { 0.0 } else { k as f64 * ln_c };
            let down = if k == n { 0.0 } else { (n - k) as f64 * ln_s };
            let ln_binom = lf[n] - lf[k] - lf[n - k];
            let mag = (0.5 * ln_binom + up + down).exp();
            // cos(θ/2) ≥ 0 on [0, π]; outside that range carry the signs.
            let sign = if k > 0 && cos_h < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 }
                * if n - k > 0 && sin_h < 0.0 && (n - k) % 2 == 1 { -1.0 } else { 1.0 };
            sign * mag
        })
        .collect()
}

/// Coherent spin state |θ, φ⟩ = R_z(φ) R_y(θ) |S, S⟩ with positive real
/// amplitudes at φ = 0; |θ=0⟩ = |ẑ⟩ and |π/2, 0⟩ = |x̂⟩.
pub fn make_css(n_atoms: u32, theta: f64, phi: f64) -> Result<DickeState> {
    let spin = SpinMagnitude::from_atoms(n_atoms)?;
    check_finite("theta", theta)?;
    check_finite("phi", phi)?;
    let lf = ln_factorials(spin.dim());
    let mags = css_magnitudes(spin, theta, &lf);
    let amps = mags
        .into_iter()
        .enumerate()
        .map(|(k, a)| C64::from_polar(a, -phi * spin.m(k)))
        .collect();
    DickeState::from_amplitudes(spin, amps)
}

pub fn apply_rotation(state: &DickeState, axis: Axis, angle: f64) -> DickeState {
    state.rotated(axis, angle)
}

pub fn apply_oats(state: &DickeState, mu: f64) -> DickeState {
    state.twisted(mu)
}

/// ⟨ψ|W|ψ⟩ for a word of one or two collective operators, applied right to
/// left (`[A, B]` evaluates ⟨A B⟩).
pub fn expectation(state: &DickeState, word: &[OperatorKind]) -> Result<C64> {
    let spin = state.spin;
    let right = match word {
        [a] => CollectiveOperator::new(spin, *a).apply(&state.amps),
        [a, b] => {
            let inner = CollectiveOperator::new(spin, *b).apply(&state.amps);
            CollectiveOperator::new(spin, *a).apply(&inner)
        }
        _ => return Err(Error::BadOperatorWord(word.len())),
    };
    Ok(state
        .amps
        .iter()
        .zip(&right)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// ΔS_w² = ⟨S_w²⟩ − ⟨S_w⟩², clamped at zero.
pub fn variance(state: &DickeState, kind: OperatorKind) -> f64 {
    let applied = state.apply(kind);
    let mean: C64 = state
        .amps
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    if kind.is_hermitian() {
        // ‖(S_w − ⟨S_w⟩)ψ‖² avoids the cancellation in ⟨S_w²⟩ − ⟨S_w⟩².
        applied
            .iter()
            .zip(&state.amps)
            .map(|(b, a)| (b - a * mean.re).norm_sqr())
            .sum::<f64>()
            .max(0.0)
    } else {
        let second = expectation(state, &[kind, kind]).expect("two-letter word");
        (second - mean * mean).re.max(0.0)
    }
}

/// Husimi Q(θ, φ) = |⟨θ, φ|ψ⟩|² on a midpoint θ grid and a uniform φ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HusimiGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub two_s: u32,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major, `values[i * n_phi + j]` at `(thetas[i], phis[j])`.
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_phi + j]
    }

    /// (2S+1)/(4π) ∫ Q dΩ by midpoint quadrature; 1 for a normalized state.
    pub fn normalization(&self) -> f64 {
        let d_theta = PI / self.n_theta as f64;
        let d_phi = TAU / self.n_phi as f64;
        let total: f64 = self
            .thetas
            .iter()
            .enumerate()
            .map(|(i, th)| {
                th.sin() * self.values[i * self.n_phi..(i + 1) * self.n_phi].iter().sum::<f64>()
            })
            .sum();
        total * d_theta * d_phi * f64::from(self.two_s + 1) / (4.0 * PI)
    }

    /// `(θ, φ, Q)` at the largest sample.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let (idx, &q) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        (self.thetas[idx / self.n_phi], self.phis[idx % self.n_phi], q)
    }

    /// Q at the grid point nearest to `(theta, phi)`.
    pub fn nearest(&self, theta: f64, phi: f64) -> f64 {
        let i = ((theta / PI * self.n_theta as f64 - 0.5).round().max(0.0) as usize)
            .min(self.n_theta - 1);
        let j = (phi.rem_euclid(TAU) / TAU * self.n_phi as f64).round() as usize % self.n_phi;
        self.get(i, j)
    }
}

pub fn husimi_grid(state: &DickeState, n_theta: usize, n_phi: usize) -> Result<HusimiGrid> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: n_theta.min(n_phi) as f64,
            reason: "grid sizes must be at least 2",
        });
    }
    let spin = state.spin;
    let lf = ln_factorials(spin.dim());
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| (i as f64 + 0.5) * PI / n_theta as f64)
        .collect();
    let phis: Vec<f64> = (0..n_phi).map(|j| j as f64 * TAU / n_phi as f64).collect();
    // ⟨θ,φ|ψ⟩ = Σ_k A_k(θ) e^{i m_k φ} ψ_k; the φ phases are shared by every row.
    let phase_rows: Vec<Vec<C64>> = phis
        .iter()
        .map(|&p| {
            (0..spin.dim())
                .map(|k| C64::from_polar(1.0, p * spin.m(k)) * state.amps[k])
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n_theta * n_phi);
    for &th in &thetas {
        let mags = css_magnitudes(spin, th, &lf);
        for row in &phase_rows {
            let amp: C64 = row.iter().zip(&mags).map(|(z, &a)| z * a).sum();
            values.push(amp.norm_sqr().min(1.0));
        }
    }
    Ok(HusimiGrid {
        n_theta,
        n_phi,
        two_s: spin.two_s,
        thetas,
        phis,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn css_single_spin_along_x() {
        let s = make_css(1, FRAC_PI_2, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-15);
    }

    #[test]
    fn css_stretched_state() {
        let s = make_css(2, 0.0, 0.0).unwrap();
        let a: Vec<f64> = s.amplitudes().iter().map(|z| z.norm()).collect();
        assert_eq!(a, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn css_along_x_is_sx_eigenstate() {
        let s = make_css(6, FRAC_PI_2, 0.0).unwrap();
        let sx = expectation(&s, &[OperatorKind::Sx]).unwrap();
        assert_abs_diff_eq!(sx.re, 3.0, epsilon = 1e-13);
        assert!(variance(&s, OperatorKind::Sx) < 1e-24);
    }

    #[test]
    fn zero_atoms_rejected() {
        assert!(matches!(make_css(0, 0.0, 0.0), Err(Error::TooFewAtoms { .. })));
    }

    #[test]
    fn empty_word_rejected() {
        let s = make_css(3, 1.0, 0.0).unwrap();
        assert_eq!(expectation(&s, &[]), Err(Error::BadOperatorWord(0)));
        let long = [OperatorKind::Sx; 3];
        assert_eq!(expectation(&s, &long), Err(Error::BadOperatorWord(3)));
    }

    #[test]
    fn expectation_examples() {
        let z = make_css(7, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(expectation(&z, &[OperatorKind::Sz]).unwrap().re, 3.5, epsilon = 1e-14);
        let x2 = make_css(2, FRAC_PI_2, 0.0).unwrap();
        let sxx = expectation(&x2, &[OperatorKind::Sx, OperatorKind::Sx]).unwrap();
        assert_abs_diff_eq!(sxx.re, 1.0, epsilon = 1e-14);
        let x10 = make_css(10, FRAC_PI_2, 0.0).unwrap();
        let syy = expectation(&x10, &[OperatorKind::Sy, OperatorKind::Sy]).unwrap();
        assert_abs_diff_eq!(syy.re, 2.5, epsilon = 1e-13);
        assert!(syy.im.abs() < 1e-12);
    }

    #[test]
    fn variance_examples() {
        let x = make_css(8, FRAC_PI_2, 0.0).unwrap();
        assert!(variance(&x, OperatorKind::Sx) < 1e-24);
        assert_abs_diff_eq!(variance(&x, OperatorKind::Sz), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn operator_identities_hold_elementwise() {
        for two_s in [1u32, 2, 5, 12, 40] {
            let spin = SpinMagnitude::new(two_s).unwrap();
            let op = |k| CollectiveOperator::new(spin, k).dense();
            let (sx, sy, sz) = (op(OperatorKind::Sx), op(OperatorKind::Sy), op(OperatorKind::Sz));
            let (sp, sm) = (op(OperatorKind::Splus), op(OperatorKind::Sminus));
            let half = C64::new(0.5, 0.0);
            assert!(max_abs(&(&sx - (&sp + &sm) * half)) < 1e-12);
            let sy_ref = (&sp - &sm) * C64::new(0.0, -0.5);
            assert!(max_abs(&(&sy - sy_ref)) < 1e-12);
            assert!(max_abs(&(commutator(&sz, &sp) - &sp)) < 1e-12);
            assert!(max_abs(&(commutator(&sz, &sm) + &sm)) < 1e-12);
            assert!(max_abs(&(commutator(&sp, &sm) - &sz * C64::new(2.0, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn rotation_about_y_takes_z_to_x() {
        for n in [1u32, 4, 9, 30] {
            let z = make_css(n, 0.0, 0.0).unwrap();
            let x = make_css(n, FRAC_PI_2, 0.0).unwrap();
            let f = z.rotated(Axis::Y, FRAC_PI_2).fidelity(&x).unwrap();
            assert_abs_diff_eq!(f, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let s = make_css(5, 0.7, 0.3).unwrap().twisted(0.4);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert_eq!(s.rotated(axis, 0.0).amplitudes().len(), 6);
            assert_abs_diff_eq!(s.rotated(axis, 0.0).fidelity(&s).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert_eq!(s.twisted(0.0), s);
    }

    #[test]
    fn z_rotation_is_diagonal_phase() {
        let x = make_css(4, FRAC_PI_2, 0.0).unwrap();
        let r = x.rotated(Axis::Z, 0.3);
        for k in 0..5 {
            let expect = x.amplitudes()[k] * C64::from_polar(1.0, -0.3 * x.spin().m(k));
            assert_abs_diff_eq!((r.amplitudes()[k] - expect).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn spectrum_of_css_is_binomial() {
        let x = make_css(8, FRAC_PI_2, 0.0).unwrap();
        let pz = x.spectrum(Axis::Z);
        assert_abs_diff_eq!(pz[4], 70.0 / 256.0, epsilon = 1e-14);
        let px = x.spectrum(Axis::X);
        assert_abs_diff_eq!(px[8], 1.0, epsilon = 1e-12);
        let y = make_css(8, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(y.spectrum(Axis::Y)[8], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_match_sparse_expectation() {
        let s = make_css(11, 1.1, 0.4).unwrap().twisted(0.37).rotated(Axis::X, 0.2);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let m = s.moments(axis);
            let mean = expectation(&s, &[axis.operator()]).unwrap().re;
            assert_abs_diff_eq!(m.mean(), mean, epsilon = 1e-12);
            assert_abs_diff_eq!(m.variance, variance(&s, axis.operator()), epsilon = 1e-11);
        }
    }

    #[test]
    fn husimi_of_x_css_peaks_at_equator() {
        let x = make_css(6, FRAC_PI_2, 0.0).unwrap();
        let grid = husimi_grid(&x, 41, 64).unwrap();
        let (th, ph, q) = grid.argmax();
        assert_abs_diff_eq!(th, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(ph, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
        assert!(grid.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn husimi_of_z_cat_has_half_height_poles() {
        let spin = SpinMagnitude::new(10).unwrap();
        let mut amps = vec![C64::new(0.0, 0.0); 11];
        amps[10] = C64::new(1.0, 0.0);
        amps[0] = C64::new(0.0, 1.0);
        let cat = DickeState::from_amplitudes(spin, amps).unwrap();
        let grid = husimi_grid(&cat, 400, 8).unwrap();
        // The pole itself is not on the midpoint grid; the first ring is
        // within half a step of it.
        assert_abs_diff_eq!(grid.get(0, 0), 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(grid.get(399, 3), 0.5, epsilon = 1e-3);
        assert!(grid.nearest(FRAC_PI_2, 0.0) < 1e-2);
    }

    #[test]
    fn husimi_normalization_on_fine_grid() {
        let s = make_css(20, 0.9, 0.0).unwrap().twisted(0.3);
        let grid = husimi_grid(&s, 256, 256).unwrap();
        assert_abs_diff_eq!(grid.normalization(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn husimi_rejects_tiny_grid() {
        let s = make_css(3, 0.0, 0.0).unwrap();
        assert!(husimi_grid(&s, 1, 10).is_err());
    }
}
