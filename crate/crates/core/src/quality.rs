//! Fault-tolerant cleaning: find slots that never reported, separate sensor
//! failures from genuine demand shocks, and fill the gaps from history.
//!
//! Abnormal values are scored with a robust z-score against their
//! (weekday, period, direction) history:
//!
//! ```text
//! z = (x - median) / (1.4826 * MAD + 1e-9)
//! ```
//!
//! `|z| > k_fail` marks a candidate. A candidate whose neighbouring period on
//! the same day deviates the same way (`|z| > k_corroborate`) is a traffic
//! event and is kept; an isolated one is an equipment failure and is replaced
//! by the mean of the clean history in its cell.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::filter_normal;
use crate::types::{
    CalendarLabel, DayType, Direction, PeriodCount, PeriodSchedule, Quality, SlotKey, Weekday,
};

/// Observations a cell needs before its median and MAD are trusted.
pub const MIN_HISTORY: usize = 4;
/// Scales the MAD to a standard deviation under normality.
pub const MAD_SCALE: f64 = 1.4826;
/// Added to the scaled MAD so constant histories still produce finite scores.
pub const MAD_EPSILON: f64 = 1e-9;
/// Source id carried by imputed counts.
pub const IMPUTED_SOURCE: &str = "imputed";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("grid date range is empty ({start} after {end})")]
    EmptyDateRange { start: NaiveDate, end: NaiveDate },
    #[error("grid has no directions")]
    NoDirections,
    #[error("threshold {name} must be positive and finite, got {value}")]
    BadThreshold { name: &'static str, value: f64 },
    #[error("no clean history to impute {}", list(.0))]
    UnresolvableTargets(Vec<SlotKey>),
    #[error("slot {0} is reported more than once; fuse sources first")]
    DuplicateSlot(SlotKey),
}

fn list(keys: &[SlotKey]) -> String {
    let mut s = String::new();
    for (i, k) in keys.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&k.to_string());
    }
    s
}

/// The slots a station is expected to report: every served day in the date
/// range, every period of the schedule, every listed direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedGrid {
    start: NaiveDate,
    end: NaiveDate,
    schedule: PeriodSchedule,
    directions: Vec<Direction>,
    station_id: String,
}

impl ExpectedGrid {
    pub fn new(
        start: NaiveDate,
        end: NaiveDate,
        schedule: PeriodSchedule,
        mut directions: Vec<Direction>,
        station_id: impl Into<String>,
    ) -> Result<Self, QualityError> {
        if start > end {
            return Err(QualityError::EmptyDateRange { start, end });
        }
        directions.sort();
        directions.dedup();
        if directions.is_empty() {
            return Err(QualityError::NoDirections);
        }
        Ok(ExpectedGrid {
            start,
            end,
            schedule,
            directions,
            station_id: station_id.into(),
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn schedule(&self) -> &PeriodSchedule {
        &self.schedule
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn station_id(&self) -> &str {
        &self.station_id
    }

    pub fn contains(&self, c: &PeriodCount) -> bool {
        c.station_id == self.station_id
            && (self.start..=self.end).contains(&c.date)
            && self.directions.contains(&c.direction)
            && self.schedule.serves(c.day_of_week)
            && (1..=self.schedule.period_count()).contains(&c.period_index)
    }

    /// Every expected slot in (date, direction, period) order, skipping `excluded` dates.
    pub fn slots(&self, excluded: &BTreeSet<NaiveDate>) -> Vec<SlotKey> {
        let mut out = Vec::new();
        for date in self.start.iter_days().take_while(|d| *d <= self.end) {
            if excluded.contains(&date) || !self.schedule.serves(Weekday::of(date)) {
                continue;
            }
            for &direction in &self.directions {
                for period_index in 1..=self.schedule.period_count() {
                    out.push(SlotKey {
                        date,
                        direction,
                        period_index,
                    });
                }
            }
        }
        out
    }
}

/// History cell used for robust statistics and imputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CellKey {
    pub day_of_week: Weekday,
    pub period_index: usize,
    pub direction: Direction,
}

impl CellKey {
    pub fn of(slot: &SlotKey) -> CellKey {
        CellKey {
            day_of_week: slot.day_of_week(),
            period_index: slot.period_index,
            direction: slot.direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Classification {
    EquipmentFailure,
    TrafficEvent,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Anomaly {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub key: SlotKey,
    pub observed: f64,
    pub robust_z: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnomalyScan {
    /// Sorted by slot.
    pub anomalies: Vec<Anomaly>,
    /// Cells with fewer than [`MIN_HISTORY`] observations; not scored.
    pub skipped_cells: Vec<CellKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ImputationMethod {
    CellMean,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Imputation {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub key: SlotKey,
    pub value: f64,
    pub method: ImputationMethod,
}

/// Every missing slot and every equipment failure is imputed exactly once;
/// traffic events never are.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QualityReport {
    pub missing: Vec<SlotKey>,
    pub anomalies: Vec<Anomaly>,
    pub imputations: Vec<Imputation>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub skipped_cells: Vec<CellKey>,
}

impl QualityReport {
    pub fn equipment_failures(&self) -> impl Iterator<Item = &Anomaly> {
        self.anomalies
            .iter()
            .filter(|a| a.classification == Classification::EquipmentFailure)
    }

    pub fn traffic_events(&self) -> impl Iterator<Item = &Anomaly> {
        self.anomalies
            .iter()
            .filter(|a| a.classification == Classification::TrafficEvent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleaningParams {
    pub k_fail: f64,
    pub k_corroborate: f64,
}

impl Default for CleaningParams {
    fn default() -> Self {
        CleaningParams {
            k_fail: 4.0,
            k_corroborate: 2.0,
        }
    }
}

fn missing_slots(
    counts: &[PeriodCount],
    grid: &ExpectedGrid,
    excluded: &BTreeSet<NaiveDate>,
) -> Vec<SlotKey> {
    let seen: BTreeSet<SlotKey> = counts
        .iter()
        .filter(|c| c.station_id == grid.station_id)
        .map(PeriodCount::slot)
        .collect();
    grid.slots(excluded)
        .into_iter()
        .filter(|k| !seen.contains(k))
        .collect()
}

/// Grid slots without any count, sorted by (date, direction, period).
pub fn detect_missing(counts: &[PeriodCount], grid: &ExpectedGrid) -> Vec<SlotKey> {
    missing_slots(counts, grid, &BTreeSet::new())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Median and MAD of a sample.
pub fn median_mad(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let med = median(&v);
    let mut dev: Vec<f64> = v.iter().map(|x| libm::fabs(x - med)).collect();
    dev.sort_by(f64::total_cmp);
    (med, median(&dev))
}

pub fn robust_z(x: f64, median: f64, mad: f64) -> f64 {
    (x - median) / (MAD_SCALE * mad + MAD_EPSILON)
}

fn check_threshold(name: &'static str, value: f64) -> Result<(), QualityError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(QualityError::BadThreshold { name, value })
    }
}

/// Scores every count against its (weekday, period, direction) cell and
/// classifies those beyond `k_fail`.
pub fn classify_anomalies(
    counts: &[PeriodCount],
    k_fail: f64,
    k_corroborate: f64,
) -> Result<AnomalyScan, QualityError> {
    check_threshold("k_fail", k_fail)?;
    check_threshold("k_corroborate", k_corroborate)?;

    let mut cells: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for c in counts {
        cells
            .entry(CellKey::of(&c.slot()))
            .or_default()
            .push(c.count);
    }
    let mut skipped_cells = Vec::new();
    let mut stats = BTreeMap::new();
    for (key, values) in &cells {
        if values.len() < MIN_HISTORY {
            skipped_cells.push(*key);
        } else {
            stats.insert(*key, median_mad(values));
        }
    }

    let mut scores: BTreeMap<SlotKey, (f64, f64)> = BTreeMap::new();
    for c in counts {
        let slot = c.slot();
        if let Some(&(med, mad)) = stats.get(&CellKey::of(&slot)) {
            scores
                .entry(slot)
                .or_insert((c.count, robust_z(c.count, med, mad)));
        }
    }

    let corroborated = |slot: &SlotKey, z: f64| {
        let neighbour = |p: usize| SlotKey {
            period_index: p,
            ..*slot
        };
        let mut adjacent = Vec::with_capacity(2);
        if slot.period_index > 1 {
            adjacent.push(neighbour(slot.period_index - 1));
        }
        adjacent.push(neighbour(slot.period_index + 1));
        adjacent.iter().any(|k| {
            scores
                .get(k)
                .is_some_and(|&(_, zn)| libm::fabs(zn) > k_corroborate && (zn > 0.0) == (z > 0.0))
        })
    };

    let anomalies = scores
        .iter()
        .filter(|(_, &(_, z))| libm::fabs(z) > k_fail)
        .map(|(slot, &(observed, z))| Anomaly {
            key: *slot,
            observed,
            robust_z: z,
            classification: if corroborated(slot, z) {
                Classification::TrafficEvent
            } else {
                Classification::EquipmentFailure
            },
        })
        .collect();
    Ok(AnomalyScan {
        anomalies,
        skipped_cells,
    })
}

/// Fills each target slot with the mean of the clean observations in its
/// (weekday, period, direction) cell. Clean means observed and not itself a
/// target.
pub fn impute(
    counts: &[PeriodCount],
    targets: &[SlotKey],
) -> Result<Vec<PeriodCount>, QualityError> {
    let target_set: BTreeSet<SlotKey> = targets.iter().copied().collect();
    let mut history: BTreeMap<CellKey, (f64, usize, &str)> = BTreeMap::new();
    for c in counts {
        let slot = c.slot();
        if c.quality != Quality::Observed || target_set.contains(&slot) {
            continue;
        }
        let entry = history
            .entry(CellKey::of(&slot))
            .or_insert((0.0, 0, c.station_id.as_str()));
        entry.0 += c.count;
        entry.1 += 1;
    }

    let mut seen = BTreeSet::new();
    let mut unresolved = Vec::new();
    let mut out = Vec::new();
    for key in targets {
        if !seen.insert(*key) {
            continue;
        }
        match history.get(&CellKey::of(key)) {
            Some(&(sum, n, station)) => out.push(PeriodCount {
                date: key.date,
                day_of_week: key.day_of_week(),
                period_index: key.period_index,
                direction: key.direction,
                station_id: station.to_string(),
                count: sum / n as f64,
                source_id: IMPUTED_SOURCE.to_string(),
                quality: Quality::Imputed,
            }),
            None => unresolved.push(*key),
        }
    }
    if unresolved.is_empty() {
        Ok(out)
    } else {
        Err(QualityError::UnresolvableTargets(unresolved))
    }
}

/// Missing-slot detection, anomaly classification and repair, in that
/// order. Only counts inside the grid and on normal days are considered;
/// days labelled holiday or special event are not expected to report.
///
/// The cleaned list keeps the input order of retained counts, marks traffic
/// events `flagged_event`, drops equipment failures and appends one imputed
/// count per missing or failed slot.
pub fn clean_pipeline(
    counts: &[PeriodCount],
    grid: &ExpectedGrid,
    labels: &[CalendarLabel],
    params: CleaningParams,
) -> Result<(Vec<PeriodCount>, QualityReport), QualityError> {
    check_threshold("k_fail", params.k_fail)?;
    check_threshold("k_corroborate", params.k_corroborate)?;

    let scoped: Vec<PeriodCount> = filter_normal(counts, labels)
        .into_iter()
        .filter(|c| grid.contains(c))
        .collect();
    let mut slots = BTreeSet::new();
    for c in &scoped {
        if !slots.insert(c.slot()) {
            return Err(QualityError::DuplicateSlot(c.slot()));
        }
    }

    let abnormal: BTreeSet<NaiveDate> = labels
        .iter()
        .filter(|l| l.day_type != DayType::Normal)
        .map(|l| l.date)
        .collect();
    let missing = missing_slots(&scoped, grid, &abnormal);
    let scan = classify_anomalies(&scoped, params.k_fail, params.k_corroborate)?;

    let failed: BTreeSet<SlotKey> = scan
        .anomalies
        .iter()
        .filter(|a| a.classification == Classification::EquipmentFailure)
        .map(|a| a.key)
        .collect();
    let events: BTreeSet<SlotKey> = scan
        .anomalies
        .iter()
        .filter(|a| a.classification == Classification::TrafficEvent)
        .map(|a| a.key)
        .collect();
    let mut targets: Vec<SlotKey> = missing.iter().chain(&failed).copied().collect();
    targets.sort();

    let repaired = impute(&scoped, &targets)?;

    let mut cleaned: Vec<PeriodCount> = scoped
        .into_iter()
        .filter(|c| !failed.contains(&c.slot()))
        .map(|mut c| {
            if events.contains(&c.slot()) {
                c.quality = Quality::FlaggedEvent;
            }
            c
        })
        .collect();
    let imputations = repaired
        .iter()
        .map(|c| Imputation {
            key: c.slot(),
            value: c.count,
            method: ImputationMethod::CellMean,
        })
        .collect();
    cleaned.extend(repaired);

    Ok((
        cleaned,
        QualityReport {
            missing,
            anomalies: scan.anomalies,
            imputations,
            skipped_cells: scan.skipped_cells,
        },
    ))
}
