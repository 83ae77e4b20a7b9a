use std::fmt;

use stagflow::Error;

/// Why a command stopped early, and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    BlowUp { t: f64, max_abs_dxu: f64 },
    Numerical(String),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::BlowUp { .. } => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::BlowUp { t, max_abs_dxu } => write!(f, "blow-up at t = {t}: sup |u_x| = {max_abs_dxu:e}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_) | Error::InvalidConfig(_) | Error::DimensionUnsupported { .. } => {
                Failure::Config(e.to_string())
            }
            Error::BlowUp { t, max_abs_dxu } => Failure::BlowUp { t, max_abs_dxu },
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}
