use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("`{field}` has {found} entries, expected {expected} (one per user)")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("power split does not sum to 1: beta_common + sum(beta_private) = {sum}")]
    PowerSplit { sum: f64 },

    #[error("`{field}` value {value} is out of range ({expected})")]
    OutOfRange {
        field: &'static str,
        index: Option<usize>,
        value: f64,
        expected: &'static str,
    },

    #[error("user index {user} out of range for {n_users} users")]
    NoSuchUser { user: usize, n_users: usize },

    #[error("{function} is undefined for argument {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("{function} did not converge for a = {a}, x = {x}")]
    NoConvergence { function: &'static str, a: f64, x: f64 },

    #[error("estimated channel variance of user {user} is zero; the closed form is undefined")]
    DegenerateChannel { user: usize },

    #[error("all rates are zero; Jain's fairness index is undefined")]
    DegenerateRates,

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors raised while validating a configuration, as opposed to
    /// failures of a numerical routine.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::PowerSplit { .. }
                | Error::OutOfRange { .. }
                | Error::NoSuchUser { .. }
        )
    }

    /// Config keys the error refers to, for diagnostics that point at a file.
    pub fn offending_keys(&self) -> Vec<&'static str> {
        match self {
            Error::DimensionMismatch { field, .. } | Error::OutOfRange { field, .. } => {
                vec![field]
            }
            Error::PowerSplit { .. } => vec!["beta_common", "beta_private"],
            Error::NoSuchUser { .. } => vec!["n_users"],
            _ => Vec::new(),
        }
    }
}
