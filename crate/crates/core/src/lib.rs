//! Exact simulation and closed-form analytics for echo-squeezing sensor
//! protocols built on one-axis-twist squeezing.
//!
//! - [`dicke`]: symmetric N-atom states, rotations, twisting, moments, Husimi Q.
//! - [`protocols`]: GESP-e/o, CESP and SCSP step sequences, simulation, and
//!   the finite-difference sensitivity oracle.
//! - [`analytics`]: expansion coefficients, sensitivities, Cramér-Rao bounds,
//!   plateau, phase magnification and noise amplification.
//! - [`decoherence`]: cavity decay, spontaneous emission and background
//!   collision models.
//! - [`cli`]: scan, fringe, decoherence, Husimi and verification drivers
//!   writing CSV/text artifacts.

pub mod analytics;
pub mod cli;
pub mod decoherence;
pub mod dicke;
pub mod error;
pub mod protocols;

pub use dicke::{Axis, DickeState, OperatorKind, SpinMagnitude};
pub use error::{Error, Result};
pub use protocols::{Form, ProtocolKind};
