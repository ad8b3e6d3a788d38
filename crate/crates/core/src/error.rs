use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (dimensions, index ranges,
    /// simplex membership, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The sublevel scan ran past the bound without every payoff exceeding the
    /// level, i.e. the payoffs do not look coercive in `u`.
    #[error("payoffs are not coercive: scan reached |u| = {bound:e} with min_j h_j(u) = {value} still below alpha = {alpha}")]
    NotCoercive { bound: f64, value: f64, alpha: f64 },

    #[error("control sublevel set is not connected: indicator changed sign {sign_changes} times")]
    Disconnected { sign_changes: usize },

    #[error("channel ranking violated at u = {u}: h_{j}(u) = {h_j} < h_{k}(u) = {h_k}")]
    Ranking {
        u: f64,
        j: usize,
        k: usize,
        h_j: f64,
        h_k: f64,
    },

    #[error("supplied derivative of h_{channel} disagrees with finite differences at u = {u}: analytic {analytic}, numeric {numeric}")]
    DerivativeMismatch {
        channel: usize,
        u: f64,
        analytic: f64,
        numeric: f64,
    },

    #[error("invalid scenario: `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for the errors that signal a failed modelling assumption
    /// (coercivity, connectedness, ranking, derivative consistency) rather
    /// than bad input.
    pub fn is_assumption_failure(&self) -> bool {
        matches!(
            self,
            Error::NotCoercive { .. }
                | Error::Disconnected { .. }
                | Error::Ranking { .. }
                | Error::DerivativeMismatch { .. }
        )
    }
}
