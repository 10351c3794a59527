use alloc::vec::Vec;

use chrono::NaiveDate;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{predict, DayGrouping, ForecastError, RegressionModel};
use crate::types::{Direction, PeriodCount, Weekday};

/// Absolute percentage error `100 · |predicted − actual| / actual`; `None`
/// when the actual count is zero.
pub fn ape(predicted: f64, actual: f64) -> Option<f64> {
    (actual != 0.0).then(|| 100.0 * libm::fabs(predicted - actual) / libm::fabs(actual))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ValidationEntry {
    pub date: NaiveDate,
    pub day_of_week: Weekday,
    pub period_index: usize,
    pub direction: Direction,
    pub actual: f64,
    pub predicted: f64,
    pub ape_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
    pub mean_ape_percent: f64,
    pub skipped_zero_actual: usize,
}

/// Scores every holdout count against the model of its day group. Counts
/// with a zero actual are skipped and tallied.
pub fn validate(
    models: &[RegressionModel],
    grouping: &DayGrouping,
    holdout: &[PeriodCount],
) -> Result<ValidationReport, ForecastError> {
    let mut entries = Vec::with_capacity(holdout.len());
    let mut skipped_zero_actual = 0;
    for c in holdout {
        let no_model = || ForecastError::NoModel {
            day: c.day_of_week,
            direction: c.direction,
        };
        let group = grouping.group_of(c.day_of_week).ok_or_else(no_model)?;
        let model = models
            .iter()
            .find(|m| m.direction == c.direction && m.group.as_slice() == group)
            .ok_or_else(no_model)?;
        let predicted = predict(model, c.period_index)?;
        match ape(predicted, c.count) {
            Some(ape_percent) => entries.push(ValidationEntry {
                date: c.date,
                day_of_week: c.day_of_week,
                period_index: c.period_index,
                direction: c.direction,
                actual: c.count,
                predicted,
                ape_percent,
            }),
            None => skipped_zero_actual += 1,
        }
    }
    if entries.is_empty() {
        return Err(ForecastError::NoUsableHoldout);
    }
    // summed in sorted order so the mean does not depend on row order
    let mut apes: Vec<f64> = entries.iter().map(|e| e.ape_percent).collect();
    apes.sort_by(f64::total_cmp);
    let mean_ape_percent = apes.iter().sum::<f64>() / apes.len() as f64;
    Ok(ValidationReport {
        entries,
        mean_ape_percent,
        skipped_zero_actual,
    })
}
