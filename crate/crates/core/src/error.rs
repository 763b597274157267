use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
///
/// The `Display` form always starts with the stable kebab-case name returned
/// by [`Error::name`], so front ends can surface it verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidArgument(String),
    /// The truncation needed to keep the tail below tolerance exceeds the hard limit.
    CutoffOverflow {
        required: usize,
        limit: usize,
    },
    /// A conditioning event has (numerically) zero probability.
    DegenerateConditioning {
        probability: f64,
    },
    /// A witness denominator vanishes, e.g. zero mean clicks.
    UndefinedWitness(&'static str),
    IllConditionedInversion {
        condition_number: f64,
    },
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::CutoffOverflow { .. } => "cutoff-overflow",
            Error::DegenerateConditioning { .. } => "degenerate-conditioning",
            Error::UndefinedWitness(_) => "undefined-witness",
            Error::IllConditionedInversion { .. } => "ill-conditioned-inversion",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name())?;
        match self {
            Error::InvalidArgument(msg) => f.write_str(msg),
            Error::CutoffOverflow { required, limit } => {
                write!(f, "photon-number cutoff {required} needed to bound the tail exceeds the hard limit {limit}")
            }
            Error::DegenerateConditioning { probability } => {
                write!(f, "conditioning event has probability {probability:e}")
            }
            Error::UndefinedWitness(why) => f.write_str(why),
            Error::IllConditionedInversion { condition_number } => {
                write!(f, "click matrix condition number {condition_number:e} exceeds 1e12")
            }
        }
    }
}

impl core::error::Error for Error {}
