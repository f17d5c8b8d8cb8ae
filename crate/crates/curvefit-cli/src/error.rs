//! CLI error classification and the exit-code contract.
//!
//! * `0` — success.
//! * `1` — configuration or argument problems (unparsable config, unknown
//!   keys, invalid values, missing files).
//! * `2` — numerical failures (degenerate fit systems, diverged
//!   optimizations, points mapped to infinity).
//! * `3` — a verification sweep ran to completion but a tolerance failed.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Tolerance(m) => f.write_str(m),
        }
    }
}

impl From<curvefit_lab::Error> for CliError {
    fn from(err: curvefit_lab::Error) -> Self {
        use curvefit_lab::Error as Lab;
        match &err {
            Lab::DivergedState { .. } => CliError::Numeric(err.to_string()),
            Lab::Fit(fit) => match fit {
                curvefit::Error::DegenerateSystem { .. }
                | curvefit::Error::NearInfinityPoint { .. } => CliError::Numeric(err.to_string()),
                _ => CliError::Config(err.to_string()),
            },
            Lab::InvalidConfig(_) | Lab::SceneFormat(_) | Lab::Io(_) => {
                CliError::Config(err.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
