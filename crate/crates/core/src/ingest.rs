//! Bucketing raw taps into periods, calendar filtering and multi-source fusion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;
use thiserror::Error;

use crate::types::{
    CalendarLabel, DayType, Direction, PeriodCount, PeriodSchedule, Quality, TapRecord, TimeOfDay,
    Weekday,
};

/// Source id carried by counts produced by [`fuse_sources`].
pub const FUSED_SOURCE: &str = "fused";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("weight for source `{source_id}` must be positive and finite, got {weight}")]
    NonPositiveWeight { source_id: String, weight: f64 },
    #[error("source `{source_id}` reports {station_id} {date} {direction} period {period_index} more than once")]
    DuplicateSource {
        source_id: String,
        station_id: String,
        date: NaiveDate,
        direction: Direction,
        period_index: usize,
    },
}

/// Result of [`bucket_taps`]. `out_of_window` counts taps that fall outside
/// every period or on a day the schedule does not serve.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketedTaps {
    pub counts: Vec<PeriodCount>,
    pub out_of_window: usize,
}

type FullKey = (NaiveDate, usize, Direction, String, String);

/// Sums taps per (date, period, direction, station, source). Output is sorted
/// by that key.
pub fn bucket_taps(taps: &[TapRecord], schedule: &PeriodSchedule) -> BucketedTaps {
    let mut buckets: BTreeMap<FullKey, u64> = BTreeMap::new();
    let mut out_of_window = 0;
    for tap in taps {
        let date = tap.timestamp.date();
        let period = schedule
            .period_of(TimeOfDay::of(tap.timestamp))
            .filter(|_| schedule.serves(Weekday::of(date)));
        match period {
            Some(p) => {
                let key = (
                    date,
                    p,
                    tap.direction,
                    tap.station_id.clone(),
                    tap.source_id.clone(),
                );
                *buckets.entry(key).or_default() += 1;
            }
            None => out_of_window += 1,
        }
    }
    let counts = buckets
        .into_iter()
        .map(|((date, p, dir, station, source), n)| {
            PeriodCount::observed(date, p, dir, station, n as f64, source)
        })
        .collect();
    BucketedTaps {
        counts,
        out_of_window,
    }
}

/// Pairs of positions `(first, later)` whose full key
/// (date, period, direction, station, source) collides.
pub fn duplicate_keys(counts: &[PeriodCount]) -> Vec<(usize, usize)> {
    let mut seen: BTreeMap<(NaiveDate, usize, Direction, &str, &str), usize> = BTreeMap::new();
    let mut dups = Vec::new();
    for (i, c) in counts.iter().enumerate() {
        let key = (
            c.date,
            c.period_index,
            c.direction,
            c.station_id.as_str(),
            c.source_id.as_str(),
        );
        if let Some(&first) = seen.get(&key) {
            dups.push((first, i));
        } else {
            seen.insert(key, i);
        }
    }
    dups
}

/// Keeps counts whose date is labelled normal (or not labelled at all).
pub fn filter_normal(counts: &[PeriodCount], labels: &[CalendarLabel]) -> Vec<PeriodCount> {
    let abnormal: BTreeSet<NaiveDate> = labels
        .iter()
        .filter(|l| l.day_type != DayType::Normal)
        .map(|l| l.date)
        .collect();
    counts
        .iter()
        .filter(|c| !abnormal.contains(&c.date))
        .cloned()
        .collect()
}

/// Replaces every multi-source group sharing (date, period, direction,
/// station) with its weighted mean `Σ wᵢcᵢ / Σ wᵢ`. Sources missing from
/// `weights` get weight 1. Groups appear in order of first occurrence.
pub fn fuse_sources(
    counts: &[PeriodCount],
    weights: &BTreeMap<String, f64>,
) -> Result<Vec<PeriodCount>, FusionError> {
    if let Some((source, &w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
        return Err(FusionError::NonPositiveWeight {
            source_id: source.clone(),
            weight: w,
        });
    }

    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut index: BTreeMap<(NaiveDate, usize, Direction, &str), usize> = BTreeMap::new();
    for (i, c) in counts.iter().enumerate() {
        let key = (c.date, c.period_index, c.direction, c.station_id.as_str());
        match index.get(&key) {
            Some(&g) => order[g].push(i),
            None => {
                index.insert(key, order.len());
                order.push(alloc::vec![i]);
            }
        }
    }

    let mut fused = Vec::with_capacity(order.len());
    for members in order {
        let first = &counts[members[0]];
        if members.len() == 1 {
            fused.push(first.clone());
            continue;
        }
        let mut sources = BTreeSet::new();
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &members {
            let c = &counts[i];
            if !sources.insert(c.source_id.as_str()) {
                return Err(FusionError::DuplicateSource {
                    source_id: c.source_id.clone(),
                    station_id: c.station_id.clone(),
                    date: c.date,
                    direction: c.direction,
                    period_index: c.period_index,
                });
            }
            let w = weights.get(&c.source_id).copied().unwrap_or(1.0);
            num += w * c.count;
            den += w;
        }
        let quality = if members.iter().all(|&i| counts[i].quality == first.quality) {
            first.quality
        } else {
            Quality::Observed
        };
        fused.push(PeriodCount {
            count: num / den,
            source_id: FUSED_SOURCE.to_string(),
            quality,
            ..first.clone()
        });
    }
    Ok(fused)
}
