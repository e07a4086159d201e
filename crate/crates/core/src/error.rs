use thiserror::Error;

/// Errors raised by constructors and numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("p = {p} lies outside the domain {domain}")]
    OutsideDomain { p: f64, domain: String },

    #[error("domains {left} and {right} do not overlap")]
    EmptyIntersection { left: String, right: String },

    #[error("non-finite value {value} at p = {p} ({what})")]
    NonFinite { what: &'static str, p: f64, value: f64 },

    #[error("the r-slice at p = {p} is empty")]
    EmptySlice { p: f64 },

    #[error("integral does not converge: integrand still {last_panel:e} at cutoff t = {cutoff:e}")]
    Divergent { cutoff: f64, last_panel: f64 },

    #[error("moment estimate overflowed at p = {p}")]
    Overflow { p: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("could not parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("I/O failure on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }
}
