use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::NaiveDate;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::ForecastError;
use crate::stats::{two_way_anova, AnovaTable, FactorialSample};
use crate::types::{PeriodCount, Weekday};

/// One tentative merge: the ANOVA day-effect p-value of `days` (the open
/// group plus `candidate`) and whether the merge was accepted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MergeTest {
    pub days: Vec<Weekday>,
    pub candidate: Weekday,
    pub p_value: f64,
    pub merged: bool,
}

/// Partition of the weekdays into runs that share one regression.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DayGrouping {
    pub groups: Vec<Vec<Weekday>>,
    pub alpha: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub evidence: Vec<MergeTest>,
}

impl DayGrouping {
    /// A grouping fixed by hand, without test evidence.
    pub fn from_groups(groups: Vec<Vec<Weekday>>, alpha: f64) -> Result<Self, ForecastError> {
        let g = DayGrouping {
            groups,
            alpha,
            evidence: Vec::new(),
        };
        g.validate()?;
        Ok(g)
    }

    /// Groups are non-empty, disjoint, listed in weekday order, and each one is
    /// a run of consecutive weekdays.
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ForecastError::BadAlpha(self.alpha));
        }
        if self.groups.is_empty() {
            return Err(ForecastError::InvalidGrouping("no groups"));
        }
        let flat: Vec<Weekday> = self.groups.iter().flatten().copied().collect();
        if self.groups.iter().any(Vec::is_empty) {
            return Err(ForecastError::InvalidGrouping("empty group"));
        }
        if flat.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ForecastError::InvalidGrouping(
                "groups overlap or are out of weekday order",
            ));
        }
        let runs = self
            .groups
            .iter()
            .all(|g| g.windows(2).all(|w| w[1].index() == w[0].index() + 1));
        if !runs {
            return Err(ForecastError::InvalidGrouping(
                "group is not a run of consecutive days",
            ));
        }
        Ok(())
    }

    /// Whether the groups cover all seven weekdays.
    pub fn is_complete(&self) -> bool {
        self.groups.iter().map(Vec::len).sum::<usize>() == 7
    }

    pub fn group_of(&self, day: Weekday) -> Option<&[Weekday]> {
        self.groups
            .iter()
            .find(|g| g.contains(&day))
            .map(Vec::as_slice)
    }
}

/// Replicate values per (weekday, period), ordered by date.
fn replicate_cells(
    counts: &[PeriodCount],
    period_count: usize,
) -> Result<BTreeMap<Weekday, Vec<Vec<f64>>>, ForecastError> {
    let first = counts.first().ok_or(ForecastError::NoData)?;
    let mut by_day: BTreeMap<Weekday, Vec<Vec<(NaiveDate, f64)>>> = BTreeMap::new();
    for c in counts {
        if c.station_id != first.station_id {
            return Err(ForecastError::MixedSeries {
                what: "station",
                first: first.station_id.clone(),
                second: c.station_id.clone(),
            });
        }
        if c.direction != first.direction {
            return Err(ForecastError::MixedSeries {
                what: "direction",
                first: first.direction.as_str().into(),
                second: c.direction.as_str().into(),
            });
        }
        if !(1..=period_count).contains(&c.period_index) {
            return Err(ForecastError::PeriodOutOfRange {
                index: c.period_index,
                period_count,
            });
        }
        by_day
            .entry(c.day_of_week)
            .or_insert_with(|| alloc::vec![Vec::new(); period_count])[c.period_index - 1]
            .push((c.date, c.count));
    }
    let mut out = BTreeMap::new();
    for (day, periods) in by_day {
        let mut cells = Vec::with_capacity(period_count);
        for (j, mut cell) in periods.into_iter().enumerate() {
            if cell.len() < 2 {
                return Err(ForecastError::InsufficientReplicates {
                    day,
                    period: j + 1,
                    found: cell.len(),
                });
            }
            cell.sort_by_key(|&(date, _)| date);
            cells.push(cell.into_iter().map(|(_, v)| v).collect());
        }
        out.insert(day, cells);
    }
    Ok(out)
}

/// Two-factor ANOVA (day × period) over `days`. Cells are trimmed to the
/// smallest replicate count among them, keeping the earliest dates.
fn anova_over(
    cells: &BTreeMap<Weekday, Vec<Vec<f64>>>,
    days: &[Weekday],
) -> Result<AnovaTable, ForecastError> {
    if let Some(&day) = days.iter().find(|d| !cells.contains_key(d)) {
        return Err(ForecastError::InsufficientReplicates {
            day,
            period: 1,
            found: 0,
        });
    }
    let r = days
        .iter()
        .flat_map(|d| cells[d].iter().map(Vec::len))
        .min()
        .unwrap_or(0);
    let layout: Vec<Vec<Vec<f64>>> = days
        .iter()
        .map(|d| cells[d].iter().map(|cell| cell[..r].to_vec()).collect())
        .collect();
    Ok(two_way_anova(&FactorialSample::from_cells(&layout)?)?)
}

fn day_effect_p(
    cells: &BTreeMap<Weekday, Vec<Vec<f64>>>,
    days: &[Weekday],
) -> Result<f64, ForecastError> {
    // both mean squares zero: no evidence of a day difference
    Ok(anova_over(cells, days)?.factor_a.p.unwrap_or(1.0))
}

/// Day × period ANOVA of one station and direction over `days` (factor A =
/// weekday, factor B = period), balanced the same way as the merge tests of
/// [`discover_groups`].
pub fn day_period_anova(
    counts: &[PeriodCount],
    period_count: usize,
    days: &[Weekday],
) -> Result<AnovaTable, ForecastError> {
    let cells = replicate_cells(counts, period_count)?;
    anova_over(&cells, days)
}

/// Greedy left-to-right grouping of consecutive weekdays. The open group is
/// tentatively extended by the next day; the merge stands when the day
/// effect of the extended set is not significant at `alpha`.
///
/// Counts must come from one station and one direction. Weekdays with no
/// counts at all are left out of the partition.
pub fn discover_groups(
    counts: &[PeriodCount],
    period_count: usize,
    alpha: f64,
) -> Result<DayGrouping, ForecastError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ForecastError::BadAlpha(alpha));
    }
    let cells = replicate_cells(counts, period_count)?;
    let days: Vec<Weekday> = cells.keys().copied().collect();

    let mut groups = Vec::new();
    let mut evidence = Vec::new();
    let mut open = alloc::vec![days[0]];
    for &candidate in &days[1..] {
        let mut tested = open.clone();
        tested.push(candidate);
        let p_value = day_effect_p(&cells, &tested)?;
        let merged = p_value >= alpha;
        evidence.push(MergeTest {
            days: tested.clone(),
            candidate,
            p_value,
            merged,
        });
        if merged {
            open = tested;
        } else {
            groups.push(core::mem::replace(&mut open, alloc::vec![candidate]));
        }
    }
    groups.push(open);

    Ok(DayGrouping {
        groups,
        alpha,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Direction;
    use alloc::vec;

    // 2014-07-07 is a Monday
    fn day(offset: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2014, 7, 7).unwrap() + chrono::Duration::days(offset)
    }

    /// Weeks × 7 days × `periods`; value = level(day, period) + wobble(week, period).
    fn fixture(
        weeks: i64,
        periods: usize,
        level: impl Fn(Weekday, usize) -> f64,
    ) -> Vec<PeriodCount> {
        let wobble = [3.0, -2.0, 1.0, -4.0, 2.0, 0.5];
        let mut out = Vec::new();
        for offset in 0..7 * weeks {
            let d = day(offset);
            for p in 1..=periods {
                let w = wobble[((offset / 7 + p as i64) % wobble.len() as i64) as usize];
                out.push(PeriodCount::observed(
                    d,
                    p,
                    Direction::Outbound,
                    "FUTIAN",
                    level(Weekday::of(d), p) + w,
                    "afc",
                ));
            }
        }
        out
    }

    #[test]
    fn single_regime_gives_one_group() {
        let rows = fixture(4, 4, |_, p| 100.0 * p as f64);
        let g = discover_groups(&rows, 4, 0.05).unwrap();
        assert_eq!(g.groups, vec![Weekday::ALL.to_vec()]);
        assert_eq!(g.evidence.len(), 6);
        assert!(g.evidence.iter().all(|e| e.merged));
        g.validate().unwrap();
    }

    #[test]
    fn alternating_regimes_split_mon_tue() {
        let rows = fixture(4, 4, |d, p| {
            100.0 * p as f64 + if d.index() % 2 == 0 { 0.0 } else { 300.0 }
        });
        let g = discover_groups(&rows, 4, 0.05).unwrap();
        assert_eq!(g.groups[0], vec![Weekday::Mon]);
        assert!(!g.evidence[0].merged);
        assert!(g.evidence[0].p_value < 0.05);
    }

    #[test]
    fn too_few_weeks() {
        let rows = fixture(1, 4, |_, _| 10.0);
        assert!(matches!(
            discover_groups(&rows, 4, 0.05),
            Err(ForecastError::InsufficientReplicates { found: 1, .. })
        ));
        assert_eq!(discover_groups(&[], 4, 0.05), Err(ForecastError::NoData));
        assert!(matches!(
            discover_groups(&rows, 4, 1.5),
            Err(ForecastError::BadAlpha(_))
        ));
    }

    #[test]
    fn anova_over_chosen_days() {
        use Weekday::*;
        let rows = fixture(4, 4, |d, p| {
            100.0 * p as f64 + if d == Fri { 50.0 } else { 0.0 }
        });
        let t = day_period_anova(&rows, 4, &[Mon, Tue, Wed, Thu]).unwrap();
        assert_eq!((t.factor_a.df, t.factor_b.df, t.error.df), (3, 3, 48));
        assert!(t.factor_a.ss < 1e-9);
        let t = day_period_anova(&rows, 4, &[Thu, Fri]).unwrap();
        assert!(t.factor_a.p.unwrap() < 1e-6);
        let rows: Vec<_> = rows.into_iter().filter(|c| c.day_of_week != Sun).collect();
        assert!(matches!(
            day_period_anova(&rows, 4, &[Sat, Sun]),
            Err(ForecastError::InsufficientReplicates {
                day: Sun,
                found: 0,
                ..
            })
        ));
    }

    #[test]
    fn mixed_directions_are_rejected() {
        let mut rows = fixture(2, 2, |_, _| 10.0);
        rows[3].direction = Direction::Inbound;
        assert!(matches!(
            discover_groups(&rows, 2, 0.05),
            Err(ForecastError::MixedSeries {
                what: "direction",
                ..
            })
        ));
    }

    #[test]
    fn grouping_structure_checks() {
        use Weekday::*;
        assert!(DayGrouping::from_groups(
            vec![vec![Mon, Tue, Wed, Thu], vec![Fri], vec![Sat], vec![Sun]],
            0.05
        )
        .unwrap()
        .is_complete());
        assert!(DayGrouping::from_groups(vec![vec![Mon, Wed]], 0.05).is_err());
        assert!(DayGrouping::from_groups(vec![vec![Mon, Tue], vec![Tue]], 0.05).is_err());
        assert!(DayGrouping::from_groups(vec![vec![Tue], vec![Mon]], 0.05).is_err());
        assert!(DayGrouping::from_groups(vec![vec![]], 0.05).is_err());
        let g = DayGrouping::from_groups(vec![vec![Mon, Tue]], 0.05).unwrap();
        assert!(!g.is_complete());
        assert_eq!(g.group_of(Tue), Some(&[Mon, Tue][..]));
        assert_eq!(g.group_of(Sun), None);
    }
}
