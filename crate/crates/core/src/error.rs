use std::fmt;

use thiserror::Error;

/// One violated invariant, named by the field that broke it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("config error: {0}")]
    Config(String),

    #[error("spectrum does not cover the required band [{lo:e}, {hi:e}] rad/s ({context})")]
    BandNotCovered { lo: f64, hi: f64, context: String },

    #[error("{diverged} of {total} trajectories diverged (first: trajectory {first} at step {step})")]
    Divergence {
        diverged: usize,
        total: usize,
        first: usize,
        step: usize,
    },

    #[error("drift matrix is not Hurwitz; eigenvalues: {}", format_eigs(.eigenvalues))]
    Unstable { eigenvalues: Vec<(f64, f64)> },

    #[error("linear solve is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("quadrature failed to reach tolerance: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::Unstable { .. }
                | Error::IllConditioned { .. }
                | Error::Quadrature(_)
                | Error::BandNotCovered { .. }
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_eigs(e: &[(f64, f64)]) -> String {
    e.iter()
        .map(|(re, im)| format!("{re:e}{im:+e}i"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
