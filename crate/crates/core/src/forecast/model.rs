use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{group_label, DayGrouping, ForecastError};
use crate::stats::{ols_dummy_fit, CoefStat, DummyDesign, OlsFit, RegressionSummary, StatsError};
use crate::types::{Direction, PeriodCount, PeriodSchedule, Quality, Weekday};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Fit statistics kept alongside a model: the regression summary plus the
/// intercept and per-coefficient standard errors, t statistics and p-values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Diagnostics {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub summary: RegressionSummary,
    pub intercept_stat: CoefStat,
    pub coef_stats: Vec<CoefStat>,
}

/// `flow(period) = intercept + coefficients[period]`, with the reference
/// period (the last one by default) predicted by the intercept alone.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegressionModel {
    pub group: Vec<Weekday>,
    pub direction: Direction,
    pub schedule_fingerprint: String,
    pub period_count: usize,
    pub reference_period: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub fitted_at: Option<DateRange>,
}

impl RegressionModel {
    /// A model with known parameters and no fit history; the last period is
    /// the reference.
    pub fn from_parameters(
        group: Vec<Weekday>,
        direction: Direction,
        schedule_fingerprint: impl Into<String>,
        intercept: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self, ForecastError> {
        let period_count = coefficients.len() + 1;
        let model = RegressionModel {
            group,
            direction,
            schedule_fingerprint: schedule_fingerprint.into(),
            period_count,
            reference_period: period_count,
            intercept,
            coefficients,
            diagnostics: None,
            fitted_at: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_fit(
        group: Vec<Weekday>,
        direction: Direction,
        schedule: &PeriodSchedule,
        fit: OlsFit,
        fitted_at: Option<DateRange>,
    ) -> Self {
        RegressionModel {
            group,
            direction,
            schedule_fingerprint: schedule.fingerprint(),
            period_count: fit.period_count,
            reference_period: fit.reference_period,
            intercept: fit.intercept,
            coefficients: fit.coefficients,
            diagnostics: Some(Diagnostics {
                summary: fit.summary,
                intercept_stat: fit.intercept_stat,
                coef_stats: fit.coef_stats,
            }),
            fitted_at,
        }
    }

    pub fn label(&self) -> String {
        group_label(&self.group)
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        DayGrouping::from_groups(alloc::vec![self.group.clone()], 0.05).map_err(|_| {
            ForecastError::InvalidModel("group must be a non-empty run of consecutive weekdays")
        })?;
        if self.period_count < 2 {
            return Err(ForecastError::InvalidModel("need at least 2 periods"));
        }
        if self.coefficients.len() != self.period_count - 1 {
            return Err(ForecastError::InvalidModel(
                "coefficient count must be period_count - 1",
            ));
        }
        if !(1..=self.period_count).contains(&self.reference_period) {
            return Err(ForecastError::InvalidModel("reference period out of range"));
        }
        if !self.intercept.is_finite() || !self.coefficients.iter().all(|c| c.is_finite()) {
            return Err(ForecastError::InvalidModel("non-finite parameter"));
        }
        if let Some(d) = &self.diagnostics {
            if d.coef_stats.len() != self.coefficients.len() {
                return Err(ForecastError::InvalidModel(
                    "coef_stats length differs from coefficients",
                ));
            }
        }
        if let Some(r) = &self.fitted_at {
            if r.start > r.end {
                return Err(ForecastError::InvalidModel("fitted_at range is reversed"));
            }
        }
        Ok(())
    }
}

/// Point forecast for a 1-based period.
pub fn predict(model: &RegressionModel, period_index: usize) -> Result<f64, ForecastError> {
    use core::cmp::Ordering;
    if !(1..=model.period_count).contains(&period_index) {
        return Err(ForecastError::PeriodOutOfRange {
            index: period_index,
            period_count: model.period_count,
        });
    }
    Ok(match period_index.cmp(&model.reference_period) {
        Ordering::Less => model.intercept + model.coefficients[period_index - 1],
        Ordering::Equal => model.intercept,
        Ordering::Greater => model.intercept + model.coefficients[period_index - 2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Train on counts flagged as traffic events too.
    pub include_flagged: bool,
}

/// One regression per group, trained on every count of `direction` whose
/// weekday falls in that group.
pub fn fit_models(
    counts: &[PeriodCount],
    grouping: &DayGrouping,
    direction: Direction,
    schedule: &PeriodSchedule,
    options: FitOptions,
) -> Result<Vec<RegressionModel>, ForecastError> {
    grouping.validate()?;
    let period_count = schedule.period_count();
    let rows: Vec<&PeriodCount> = counts
        .iter()
        .filter(|c| c.direction == direction)
        .filter(|c| options.include_flagged || c.quality != Quality::FlaggedEvent)
        .collect();
    if let Some(first) = rows.first() {
        if let Some(other) = rows.iter().find(|c| c.station_id != first.station_id) {
            return Err(ForecastError::MixedSeries {
                what: "station",
                first: first.station_id.clone(),
                second: other.station_id.clone(),
            });
        }
    }

    let mut models = Vec::with_capacity(grouping.groups.len());
    for group in &grouping.groups {
        let training: Vec<&PeriodCount> = rows
            .iter()
            .copied()
            .filter(|c| group.contains(&c.day_of_week))
            .collect();
        let values: Vec<f64> = training.iter().map(|c| c.count).collect();
        let periods: Vec<usize> = training.iter().map(|c| c.period_index).collect();
        let design = DummyDesign::new(periods, period_count).map_err(|e| match e {
            StatsError::RankDeficient(period) => ForecastError::EmptyCell {
                group: group_label(group),
                period,
            },
            StatsError::PeriodOutOfRange {
                index,
                period_count,
            } => ForecastError::PeriodOutOfRange {
                index,
                period_count,
            },
            other => other.into(),
        })?;
        let fit = ols_dummy_fit(&values, &design)?;
        let fitted_at = training
            .iter()
            .map(|c| c.date)
            .min()
            .zip(training.iter().map(|c| c.date).max())
            .map(|(start, end)| DateRange { start, end });
        models.push(RegressionModel::from_fit(
            group.clone(),
            direction,
            schedule,
            fit,
            fitted_at,
        ));
    }
    Ok(models)
}
