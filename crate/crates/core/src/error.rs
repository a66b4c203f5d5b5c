use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("library size must be at least 1")]
    EmptyLibrary,

    #[error("Zipf exponent must be finite and nonnegative, got {0}")]
    InvalidSkew(f64),

    #[error("{n_users} users cannot cache distinct contents from a library of {library_size}")]
    TooManyUsers { n_users: usize, library_size: usize },

    #[error("number of users must be at least 1")]
    NoUsers,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integrand is not finite at x = {abscissa}")]
    NonFiniteIntegrand { abscissa: f64 },

    #[error(
        "quadrature did not converge within the node budget \
         (last estimates {previous} and {last}, relative delta {rel_delta:e})"
    )]
    BudgetExhausted {
        previous: f64,
        last: f64,
        rel_delta: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
