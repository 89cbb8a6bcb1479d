use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom number must be at least {min}, got {got}")]
    TooFewAtoms { min: u32, got: u32 },

    #[error("atom number {got} exceeds the supported maximum {max} for {what}")]
    TooManyAtoms { max: u32, got: u32, what: &'static str },

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("operator word must contain 1 or 2 operators, got {0}")]
    BadOperatorWord(usize),

    #[error("states live in different Dicke spaces (2S = {0} vs {1})")]
    SpinMismatch(u32, u32),

    #[error("sensitivity is undefined: phase gradient and noise both vanish")]
    UndefinedSensitivity,

    #[error("malformed protocol: {0}")]
    MalformedProtocol(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

/// Validates a squeezing parameter in [0, π/2], absorbing round-off just
/// above π/2 from grid arithmetic.
pub(crate) fn check_mu(mu: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    check_finite("mu", mu)?;
    if (0.0..=FRAC_PI_2 * (1.0 + 1e-12)).contains(&mu) {
        Ok(mu.min(FRAC_PI_2))
    } else {
        Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "squeezing parameter must lie in [0, π/2]",
        })
    }
}
