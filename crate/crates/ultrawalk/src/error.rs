use std::fmt;

/// Errors produced by walk construction and evaluation.
///
/// The split mirrors how callers should react: `Domain` means an argument is
/// outside an operation's domain (bad site index, negative time where one is
/// required), `Validation` means a configuration violates a model invariant
/// (coupling ordering, undersampled quadrature grid), and `Resource` means a
/// dense-matrix path was asked to materialize more sites than the configured
/// cap allows — the class-compressed closed forms remain available at any size.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Domain(String),
    Validation(String),
    Resource { needed: u64, cap: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Resource { needed, cap } => write!(
                f,
                "resource limit: dense path needs {needed} sites but the cap is {cap}; \
                 use the class-compressed closed forms or raise the cap"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
