//! Error taxonomy shared across the toolkit.
//!
//! Variants split into two classes that the CLI maps to exit codes:
//! input/validation problems (bad files, bad configuration, infeasible
//! digitized data) and computation problems (estimands undefined on the
//! given data). [`Error::is_validation`] encodes the split.

use thiserror::Error;

/// Toolkit-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- input / validation ------------------------------------------------
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` as a time")]
    InvalidTime { row: usize, value: String },
    #[error("row {row}: negative time {value}")]
    NegativeTime { row: usize, value: f64 },
    #[error("row {row}: event value `{value}` must be 0 or 1")]
    InvalidEvent { row: usize, value: String },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("arm `{0}` has no subjects")]
    EmptyArm(String),
    #[error("digitized curve is non-monotone at point {index}: survival rises by {rise}")]
    NonMonotoneCurve { index: usize, rise: f64 },
    #[error("risk table interval {interval}: no feasible event/censoring allocation")]
    InconsistentRiskTable { interval: usize },
    #[error("cannot allocate {needed} events in the final interval (at most {feasible} feasible)")]
    InfeasibleTotalEvents { needed: i64, feasible: u64 },
    #[error("bandwidth {bandwidth} exceeds half the domain {domain}")]
    BandwidthTooLarge { bandwidth: f64, domain: f64 },
    #[error("unknown arm id {0}")]
    UnknownArm(u32),
    #[error("{0}")]
    Validation(String),

    // -- computation -------------------------------------------------------
    #[error("milestone {m} lies beyond the observed follow-up {max_observed}")]
    MilestoneBeyondFollowUp { m: f64, max_observed: f64 },
    #[error("no events observed before milestone {m}; susceptible quantities undefined")]
    NoEventsBeforeMilestone { m: f64 },
    #[error("evaluation time {t} exceeds the curve domain {domain_end}")]
    DomainExceeded { t: f64, domain_end: f64 },
    #[error("estimand undefined on the full dataset: {0}")]
    EstimandUndefinedOnFullData(Box<Error>),
    #[error("{failed} of {total} bootstrap resamples failed (more than 10%)")]
    TooManyFailedResamples { failed: usize, total: usize },
    #[error("no events in one or both arms")]
    NoEvents,
    #[error("too few events for the PH test: {found} (need at least 3)")]
    TooFewEvents { found: usize },
    #[error("pairwise tau oracle requires uncensored data")]
    CensoredDataUnsupported,
}

impl Error {
    /// True for problems with the input data or configuration; false for
    /// quantities that are undefined on otherwise valid data.
    pub fn is_validation(&self) -> bool {
        use Error::*;
        matches!(
            self,
            MissingColumn(_)
                | InvalidTime { .. }
                | NegativeTime { .. }
                | InvalidEvent { .. }
                | EmptyInput
                | EmptyArm(_)
                | NonMonotoneCurve { .. }
                | InconsistentRiskTable { .. }
                | InfeasibleTotalEvents { .. }
                | BandwidthTooLarge { .. }
                | UnknownArm(_)
                | Validation(_)
        )
    }
}
