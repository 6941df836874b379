use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration diverged at t = {t} years (non-finite derivative)")]
    Diverged { t: f64 },

    #[error("transition probabilities for {state} sum to {total} at t = {t} years; reduce dt")]
    ProbabilityOverflow {
        state: &'static str,
        total: f64,
        t: f64,
    },

    #[error("trajectory ends at t = {horizon} but the dataset needs coverage up to t = {needed}")]
    Coverage { horizon: f64, needed: f64 },

    #[error("actives table: {0}")]
    Actives(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by user-supplied configuration rather than by
    /// the numerics of a run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParam { .. }
                | Error::Config(_)
                | Error::ProbabilityOverflow { .. }
                | Error::Coverage { .. }
                | Error::Actives(_)
                | Error::Csv(_)
        )
    }
}
