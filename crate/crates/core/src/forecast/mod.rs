//! Day-group discovery, one dummy-variable regression per group, point
//! prediction and APE validation.

mod grouping;
mod model;
mod validate;

use alloc::string::String;

use thiserror::Error;

use crate::stats::StatsError;
use crate::types::{Direction, Weekday};

pub use grouping::{day_period_anova, discover_groups, DayGrouping, MergeTest};
pub use model::{fit_models, predict, DateRange, Diagnostics, FitOptions, RegressionModel};
pub use validate::{ape, validate, ValidationEntry, ValidationReport};

/// Default significance level for the day-merge test.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error(
        "{day} period {period} has {found} observation(s); at least 2 replicate weeks are needed"
    )]
    InsufficientReplicates {
        day: Weekday,
        period: usize,
        found: usize,
    },
    #[error("no observations at all")]
    NoData,
    #[error("expected a single {what}, found `{first}` and `{second}`")]
    MixedSeries {
        what: &'static str,
        first: String,
        second: String,
    },
    #[error("group {group} has no observations in period {period}")]
    EmptyCell { group: String, period: usize },
    #[error("period {index} outside 1..={period_count}")]
    PeriodOutOfRange { index: usize, period_count: usize },
    #[error("no model covers {day} ({direction})")]
    NoModel { day: Weekday, direction: Direction },
    #[error("holdout has no entries with a non-zero actual count")]
    NoUsableHoldout,
    #[error("invalid day grouping: {0}")]
    InvalidGrouping(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// `Mon-Thu`, `Fri`, ...
pub fn group_label(days: &[Weekday]) -> String {
    match days {
        [] => String::new(),
        [one] => String::from(one.as_str()),
        [first, .., last] => alloc::format!("{first}-{last}"),
    }
}
