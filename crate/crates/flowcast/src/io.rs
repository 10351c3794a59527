//! CSV and JSON file formats.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use flowcast_core::forecast::RegressionModel;
use flowcast_core::{
    CalendarLabel, DayGrouping, DayType, Direction, PeriodCount, PeriodSchedule, Quality,
    TapRecord, Weekday,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub const COUNT_COLUMNS: [&str; 7] = [
    "date",
    "day_of_week",
    "period_index",
    "direction",
    "station_id",
    "count",
    "source_id",
];
pub const QUALITY_COLUMN: &str = "quality";
pub const TAP_COLUMNS: [&str; 4] = ["station_id", "timestamp", "direction", "source_id"];
pub const LABEL_COLUMNS: [&str; 2] = ["date", "day_type"];
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
const DATE_FORMAT: &str = "%Y-%m-%d";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// Header-indexed CSV rows with their 1-based line numbers.
struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(reader: impl Read, path: &Path, required: &[&str]) -> Result<Self, CliError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| CliError::schema(path, e.to_string()))?
            .clone();
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        if let Some(missing) = required.iter().find(|c| !columns.contains_key(**c)) {
            return Err(CliError::schema(
                path,
                format!(
                    "missing column `{missing}` (expected {})",
                    required.join(",")
                ),
            ));
        }
        let mut rows = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::row(path, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        Ok(Table { columns, rows })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        self.columns.get(column).and_then(|&i| record.get(i))
    }
}

fn field<'r>(
    table: &Table,
    record: &'r csv::StringRecord,
    column: &str,
    path: &Path,
    line: u64,
) -> Result<&'r str, CliError> {
    table
        .get(record, column)
        .ok_or_else(|| CliError::row(path, line, format!("missing `{column}` field")))
}

fn parse<T: std::str::FromStr>(
    value: &str,
    what: &str,
    path: &Path,
    line: u64,
) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::row(path, line, format!("bad {what} `{value}`: {e}")))
}

fn parse_date(value: &str, path: &Path, line: u64) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(value, DATE_FORMAT)
        .map_err(|e| CliError::row(path, line, format!("bad date `{value}`: {e}")))
}

// ---------------------------------------------------------------------------
// Counts
// ---------------------------------------------------------------------------

/// Reads a counts CSV, validating every row (against `schedule` when given)
/// and rejecting rows that repeat the (date, period, direction, station,
/// source) key.
pub fn read_counts(
    path: &Path,
    schedule: Option<&PeriodSchedule>,
) -> Result<Vec<PeriodCount>, CliError> {
    parse_counts(open(path)?, path, schedule)
}

pub fn parse_counts(
    reader: impl Read,
    path: &Path,
    schedule: Option<&PeriodSchedule>,
) -> Result<Vec<PeriodCount>, CliError> {
    let table = Table::read(reader, path, &COUNT_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    let mut seen: HashMap<(NaiveDate, usize, Direction, String, String), u64> = HashMap::new();
    let mut duplicates = Vec::new();
    for (line, record) in &table.rows {
        let line = *line;
        let f = |column: &str| field(&table, record, column, path, line);
        let quality = match table.get(record, QUALITY_COLUMN) {
            None | Some("") => Quality::Observed,
            Some(q) => parse(q, "quality", path, line)?,
        };
        let count = PeriodCount {
            date: parse_date(f("date")?, path, line)?,
            day_of_week: parse(f("day_of_week")?, "day_of_week", path, line)?,
            period_index: parse(f("period_index")?, "period_index", path, line)?,
            direction: parse(f("direction")?, "direction", path, line)?,
            station_id: f("station_id")?.to_string(),
            count: parse(f("count")?, "count", path, line)?,
            source_id: f("source_id")?.to_string(),
            quality,
        };
        match schedule {
            Some(s) => count.validate(s),
            None => count.validate_record(),
        }
        .map_err(|e| CliError::row(path, line, e.to_string()))?;
        let key = (
            count.date,
            count.period_index,
            count.direction,
            count.station_id.clone(),
            count.source_id.clone(),
        );
        if let Some(first) = seen.insert(key, line) {
            duplicates.push(format!(
                "{} {} period {} {} {} at lines {first} and {line}",
                count.date, count.direction, count.period_index, count.station_id, count.source_id
            ));
            continue;
        }
        out.push(count);
    }
    if !duplicates.is_empty() {
        return Err(CliError::Duplicates {
            path: path.to_path_buf(),
            keys: duplicates,
        });
    }
    Ok(out)
}

/// Writes counts with full-precision values, so reading them back yields the
/// same records. The quality column is written when `with_quality` is set.
pub fn write_counts(
    writer: impl Write,
    counts: &[PeriodCount],
    with_quality: bool,
) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = COUNT_COLUMNS.to_vec();
    if with_quality {
        header.push(QUALITY_COLUMN);
    }
    csv.write_record(&header)?;
    for c in counts {
        let mut row = vec![
            c.date.format(DATE_FORMAT).to_string(),
            c.day_of_week.to_string(),
            c.period_index.to_string(),
            c.direction.to_string(),
            c.station_id.clone(),
            c.count.to_string(),
            c.source_id.clone(),
        ];
        if with_quality {
            row.push(c.quality.to_string());
        }
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_counts(
    path: &Path,
    counts: &[PeriodCount],
    with_quality: bool,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_counts(&mut buf, counts, with_quality)
        .map_err(|e| CliError::schema(path, e.to_string()))?;
    write_atomic(path, &buf)
}

// ---------------------------------------------------------------------------
// Taps and calendar labels
// ---------------------------------------------------------------------------

pub fn read_taps(path: &Path) -> Result<Vec<TapRecord>, CliError> {
    parse_taps(open(path)?, path)
}

pub fn parse_taps(reader: impl Read, path: &Path) -> Result<Vec<TapRecord>, CliError> {
    let table = Table::read(reader, path, &TAP_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let line = *line;
        let f = |column: &str| field(&table, record, column, path, line);
        let raw = f("timestamp")?;
        let timestamp = NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT).map_err(|e| {
            CliError::row(
                path,
                line,
                format!("bad timestamp `{raw}` (expected YYYY-MM-DDThh:mm:ss): {e}"),
            )
        })?;
        out.push(TapRecord {
            station_id: f("station_id")?.to_string(),
            timestamp,
            direction: parse(f("direction")?, "direction", path, line)?,
            source_id: f("source_id")?.to_string(),
        });
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<CalendarLabel>, CliError> {
    parse_labels(open(path)?, path)
}

/// Calendar labels; each date may be labelled once.
pub fn parse_labels(reader: impl Read, path: &Path) -> Result<Vec<CalendarLabel>, CliError> {
    let table = Table::read(reader, path, &LABEL_COLUMNS)?;
    let mut seen: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let line = *line;
        let f = |column: &str| field(&table, record, column, path, line);
        let date = parse_date(f("date")?, path, line)?;
        let day_type: DayType = parse(f("day_type")?, "day_type", path, line)?;
        if let Some(first) = seen.insert(date, line) {
            return Err(CliError::row(
                path,
                line,
                format!("{date} is already labelled at line {first}"),
            ));
        }
        out.push(CalendarLabel { date, day_type });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON artifacts
// ---------------------------------------------------------------------------

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::schema(path, e.to_string()))
}

pub fn read_schedule(path: &Path) -> Result<PeriodSchedule, CliError> {
    read_json(path)
}

pub fn read_grouping(path: &Path) -> Result<DayGrouping, CliError> {
    let grouping: DayGrouping = read_json(path)?;
    grouping
        .validate()
        .map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok(grouping)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::schema(path, e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn save_model(path: &Path, model: &RegressionModel) -> Result<(), CliError> {
    save_json(path, model)
}

/// Reads and validates a model file.
pub fn load_model(path: &Path) -> Result<RegressionModel, CliError> {
    let model: RegressionModel = read_json(path)?;
    model
        .validate()
        .map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok(model)
}

/// A warning when `model` was fitted under a different schedule.
pub fn fingerprint_warning(
    path: &Path,
    model: &RegressionModel,
    schedule: &PeriodSchedule,
) -> Option<String> {
    let expected = schedule.fingerprint();
    (model.schedule_fingerprint != expected).then(|| {
        format!(
            "warning: {} was fitted under schedule {} but the current schedule is {expected}",
            path.display(),
            model.schedule_fingerprint
        )
    })
}

/// File name for a group's model: `model_Mon-Thu_outbound.json`.
pub fn model_file_name(model: &RegressionModel) -> String {
    format!("model_{}_{}.json", model.label(), model.direction)
}

/// Every `*.json` model in `dir`, in file-name order.
pub fn load_models(dir: &Path) -> Result<Vec<(PathBuf, RegressionModel)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no model files found",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| load_model(&p).map(|m| (p, m)))
        .collect()
}

/// Groups of the given models as a grouping, ordered by first weekday.
pub fn grouping_of(models: &[RegressionModel], alpha: f64) -> Result<DayGrouping, CliError> {
    let mut groups: Vec<Vec<Weekday>> = models.iter().map(|m| m.group.clone()).collect();
    groups.sort();
    groups.dedup();
    DayGrouping::from_groups(groups, alpha).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> PeriodSchedule {
        PeriodSchedule::illustrative_default()
    }

    const HEADER: &str = "date,day_of_week,period_index,direction,station_id,count,source_id\n";

    #[test]
    fn parses_a_count_row() {
        let text = format!("{HEADER}2014-07-07,Mon,1,outbound,FUTIAN,2486,afc\n");
        let rows = parse_counts(text.as_bytes(), Path::new("c.csv"), Some(&schedule())).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].count, 2486.0);
        assert_eq!(rows[0].day_of_week, Weekday::Mon);
        assert_eq!(rows[0].quality, Quality::Observed);
    }

    #[test]
    fn period_out_of_range_names_the_line() {
        let text = format!(
            "{HEADER}2014-07-07,Mon,1,outbound,FUTIAN,1,afc\n2014-07-07,Mon,9,outbound,FUTIAN,1,afc\n"
        );
        let err = parse_counts(text.as_bytes(), Path::new("c.csv"), Some(&schedule())).unwrap_err();
        assert_eq!(
            err.to_string(),
            "c.csv:3: period index 9 out of range 1..=8"
        );
    }

    #[test]
    fn duplicate_keys_name_both_lines() {
        let row = "2014-07-07,Mon,1,outbound,FUTIAN,5,afc\n";
        let text = format!("{HEADER}{row}{row}");
        let err = parse_counts(text.as_bytes(), Path::new("c.csv"), Some(&schedule())).unwrap_err();
        assert!(err.to_string().contains("at lines 2 and 3"), "{err}");
    }

    #[test]
    fn bad_rows_are_reported() {
        let cases = [
            ("2014-07-08,Mon,1,outbound,S,5,afc", "is a Tue"),
            ("2014-07-07,Mon,1,sideways,S,5,afc", "bad direction"),
            ("2014-07-07,Mon,1,outbound,S,-5,afc", "non-negative"),
            ("2014-13-07,Mon,1,outbound,S,5,afc", "bad date"),
            ("2014-07-07,Mon,1,outbound,S", "c.csv:2: "),
        ];
        for (row, needle) in cases {
            let text = format!("{HEADER}{row}\n");
            let err =
                parse_counts(text.as_bytes(), Path::new("c.csv"), Some(&schedule())).unwrap_err();
            assert!(err.to_string().contains(needle), "{row}: {err}");
        }
        let err = parse_counts(
            "date,count\n".as_bytes(),
            Path::new("c.csv"),
            Some(&schedule()),
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("missing column `day_of_week`"),
            "{err}"
        );
    }

    #[test]
    fn counts_round_trip_exactly() {
        let mut rows = Vec::new();
        for (i, v) in [0.1, 1.0 / 3.0, 2486.266667, 1e-7, 123456789.125]
            .iter()
            .enumerate()
        {
            let mut c = PeriodCount::observed(
                NaiveDate::from_ymd_opt(2014, 7, 7 + i as u32).unwrap(),
                i + 1,
                Direction::Outbound,
                "FUTIAN",
                *v,
                "afc",
            );
            c.quality = [Quality::Observed, Quality::Imputed, Quality::FlaggedEvent][i % 3];
            rows.push(c);
        }
        let mut buf = Vec::new();
        write_counts(&mut buf, &rows, true).unwrap();
        let back = parse_counts(buf.as_slice(), Path::new("x"), Some(&schedule())).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn taps_and_labels() {
        let text = "station_id,timestamp,direction,source_id\nS,2014-07-07T07:10:00,outbound,afc\n";
        let taps = parse_taps(text.as_bytes(), Path::new("t.csv")).unwrap();
        assert_eq!(taps[0].timestamp.to_string(), "2014-07-07 07:10:00");
        let bad = "station_id,timestamp,direction,source_id\nS,2014-07-07 07:10,outbound,afc\n";
        let err = parse_taps(bad.as_bytes(), Path::new("t.csv")).unwrap_err();
        assert!(
            err.to_string().starts_with("t.csv:2: bad timestamp"),
            "{err}"
        );

        let labels = "date,day_type\n2014-08-01,holiday\n2014-08-02,special_event\n";
        let parsed = parse_labels(labels.as_bytes(), Path::new("l.csv")).unwrap();
        assert_eq!(parsed[1].day_type, DayType::SpecialEvent);
        let twice = "date,day_type\n2014-08-01,holiday\n2014-08-01,normal\n";
        let err = parse_labels(twice.as_bytes(), Path::new("l.csv")).unwrap_err();
        assert!(
            err.to_string().contains("already labelled at line 2"),
            "{err}"
        );
    }
}
