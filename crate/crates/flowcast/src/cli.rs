//! Command-line surface: argument definitions and one function per
//! subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use flowcast_core::forecast::{
    day_period_anova, discover_groups, fit_models, group_label, predict, validate, DateRange,
    FitOptions, RegressionModel,
};
use flowcast_core::ingest::{bucket_taps, duplicate_keys, filter_normal, fuse_sources};
use flowcast_core::quality::{clean_pipeline, CleaningParams, ExpectedGrid, QualityReport};
use flowcast_core::stats::AnovaTable;
use flowcast_core::{DayGrouping, Direction, PeriodCount, PeriodSchedule, Weekday};
use serde::Serialize;

use crate::error::CliError;
use crate::io;
use crate::report::{fixed, money, opt, render_all, sci, Format, Table};

#[derive(Debug, Parser)]
#[command(
    name = "flowcast",
    version,
    about = "Period-based passenger-flow analysis and forecasting for a transit station"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Period schedule (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    pub schedule: Option<PathBuf>,
    /// Restrict to one direction
    #[arg(long, global = true)]
    pub direction: Option<Direction>,
    /// Restrict to one station
    #[arg(long, global = true)]
    pub station: Option<String>,
    /// Output file or directory, depending on the command
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Format of printed tables
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,
    /// Significance level of the day-merge test
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    /// Robust z-score beyond which a count is anomalous
    #[arg(long = "k-fail", global = true, default_value_t = 4.0)]
    pub k_fail: f64,
    /// Robust z-score an adjacent period needs to corroborate an event
    #[arg(long = "k-corroborate", global = true, default_value_t = 2.0)]
    pub k_corroborate: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bucket taps and merge count files into one counts CSV
    Ingest(IngestArgs),
    /// Fill gaps, repair equipment failures and flag traffic events
    Clean(CleanArgs),
    /// Day x period variance analysis
    Anova(AnovaArgs),
    /// Group consecutive weekdays with indistinguishable flow
    Group(CountsArg),
    /// Fit one period regression per day group
    Fit(FitArgs),
    /// Forecast one period from a saved model
    Predict(PredictArgs),
    /// Score saved models against holdout counts
    Validate(ValidateArgs),
    /// Daily totals, observed vs predicted period means and plot data
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tap records CSV (repeatable)
    #[arg(long, value_name = "FILE")]
    pub taps: Vec<PathBuf>,
    /// Pre-aggregated counts CSV (repeatable)
    #[arg(long, value_name = "FILE")]
    pub counts: Vec<PathBuf>,
    /// Calendar labels CSV; only normal dates are kept
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Fusion weight of a source, as SOURCE=WEIGHT (repeatable; default 1)
    #[arg(long = "weight", value_name = "SOURCE=WEIGHT", value_parser = parse_weight)]
    pub weights: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct CountsArg {
    /// Counts CSV
    #[arg(long, value_name = "FILE")]
    pub counts: PathBuf,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub input: CountsArg,
    /// Calendar labels CSV; labelled holidays and events are not expected
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// First date of the expected grid (default: earliest count)
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Last date of the expected grid (default: latest count)
    #[arg(long)]
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct AnovaArgs {
    #[command(flatten)]
    pub input: CountsArg,
    /// Weekdays to compare, comma separated (default: all present)
    #[arg(long, value_delimiter = ',')]
    pub days: Vec<Weekday>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: CountsArg,
    /// Day grouping JSON from `group` (default: discover it)
    #[arg(long, value_name = "FILE")]
    pub groups: Option<PathBuf>,
    /// Train on counts flagged as traffic events too
    #[arg(long)]
    pub include_flagged: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// 1-based period index
    #[arg(long)]
    pub period: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Directory of model JSON files
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
    /// Holdout counts CSV
    #[arg(long, value_name = "FILE")]
    pub holdout: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: CountsArg,
    /// Directory of model JSON files
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
}

fn parse_weight(s: &str) -> Result<(String, f64), String> {
    let (source, weight) = s
        .split_once('=')
        .ok_or_else(|| format!("expected SOURCE=WEIGHT, got `{s}`"))?;
    let weight: f64 = weight
        .trim()
        .parse()
        .map_err(|e| format!("bad weight `{weight}`: {e}"))?;
    Ok((source.trim().to_string(), weight))
}

/// Standard output and standard error of a command.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Console<'_> {
    fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e))
    }

    fn line(&mut self, text: &str) -> Result<(), CliError> {
        self.print(text)?;
        self.print("\n")
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.err, "{text}");
    }

    fn json<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), CliError> {
        let text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
        self.line(&text)
    }
}

pub fn run(cli: &Cli, console: &mut Console<'_>) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest(a) => ingest(g, a, console),
        Command::Clean(a) => clean(g, a, console),
        Command::Anova(a) => anova(g, a, console),
        Command::Group(a) => group(g, a, console),
        Command::Fit(a) => fit(g, a, console),
        Command::Predict(a) => predict_cmd(g, a, console),
        Command::Validate(a) => validate_cmd(g, a, console),
        Command::Report(a) => report(g, a, console),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn require_schedule(g: &Global) -> Result<PeriodSchedule, CliError> {
    match &g.schedule {
        Some(path) => io::read_schedule(path),
        None => Err(CliError::Input(
            "--schedule is required: period boundaries are configuration (see data/schedule.json)"
                .into(),
        )),
    }
}

fn optional_schedule(g: &Global) -> Result<Option<PeriodSchedule>, CliError> {
    g.schedule.as_deref().map(io::read_schedule).transpose()
}

fn cleaning_params(g: &Global) -> CleaningParams {
    CleaningParams {
        k_fail: g.k_fail,
        k_corroborate: g.k_corroborate,
    }
}

/// The single station in `counts`, or the one named by `--station`.
fn station_of(g: &Global, counts: &[PeriodCount]) -> Result<String, CliError> {
    if let Some(s) = &g.station {
        return Ok(s.clone());
    }
    let stations: BTreeSet<&str> = counts.iter().map(|c| c.station_id.as_str()).collect();
    match stations.len() {
        0 => Err(CliError::Input("no counts".into())),
        1 => Ok(stations.into_iter().next().unwrap_or_default().to_string()),
        _ => Err(CliError::Input(format!(
            "counts cover several stations ({}); pick one with --station",
            stations.into_iter().collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// One station and one direction (`--direction`, default outbound).
fn series(g: &Global, counts: Vec<PeriodCount>) -> Result<(Vec<PeriodCount>, Direction), CliError> {
    let direction = g.direction.unwrap_or(Direction::Outbound);
    let counts: Vec<PeriodCount> = counts
        .into_iter()
        .filter(|c| c.direction == direction)
        .collect();
    let station = station_of(g, &counts)
        .map_err(|_| CliError::Input(format!("no {direction} counts to analyse")))?;
    let counts: Vec<PeriodCount> = counts
        .into_iter()
        .filter(|c| c.station_id == station)
        .collect();
    if counts.is_empty() {
        return Err(CliError::Input(format!(
            "no {direction} counts for station {station}"
        )));
    }
    Ok((counts, direction))
}

fn out_dir(g: &Global, default: &str) -> Result<PathBuf, CliError> {
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

/// Station, date, direction, period, source.
fn sort_counts(counts: &mut [PeriodCount]) {
    counts.sort_by(|x, y| {
        (
            &x.station_id,
            x.date,
            x.direction,
            x.period_index,
            &x.source_id,
        )
            .cmp(&(
                &y.station_id,
                y.date,
                y.direction,
                y.period_index,
                &y.source_id,
            ))
    });
}

fn date_range(counts: &[PeriodCount]) -> Option<DateRange> {
    let start = counts.iter().map(|c| c.date).min()?;
    let end = counts.iter().map(|c| c.date).max()?;
    Some(DateRange { start, end })
}

fn days_label(days: &[Weekday]) -> String {
    days.iter()
        .map(|d| d.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

fn ingest(g: &Global, a: &IngestArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    if a.taps.is_empty() && a.counts.is_empty() {
        return Err(CliError::Input(
            "nothing to ingest: pass --taps and/or --counts".into(),
        ));
    }
    let schedule = require_schedule(g)?;
    let mut summary = Vec::new();

    let mut taps = Vec::new();
    for path in &a.taps {
        taps.extend(io::read_taps(path)?);
    }
    let mut counts = Vec::new();
    if !a.taps.is_empty() {
        let bucketed = bucket_taps(&taps, &schedule);
        summary.push(format!(
            "taps: {} read, {} bucketed into {} counts, {} outside the schedule",
            taps.len(),
            taps.len() - bucketed.out_of_window,
            bucketed.counts.len(),
            bucketed.out_of_window
        ));
        counts.extend(bucketed.counts);
    }
    for path in &a.counts {
        let rows = io::read_counts(path, Some(&schedule))?;
        summary.push(format!(
            "counts: {} rows read from {}",
            rows.len(),
            path.display()
        ));
        counts.extend(rows);
    }

    let collisions = duplicate_keys(&counts);
    if !collisions.is_empty() {
        let keys: Vec<String> = collisions
            .iter()
            .map(|&(_, j)| {
                let c = &counts[j];
                format!(
                    "{} {} period {} {} {}",
                    c.date, c.direction, c.period_index, c.station_id, c.source_id
                )
            })
            .collect();
        return Err(CliError::Input(format!(
            "duplicate keys across inputs: {}",
            keys.join("; ")
        )));
    }

    if let Some(station) = &g.station {
        counts.retain(|c| &c.station_id == station);
    }
    if let Some(direction) = g.direction {
        counts.retain(|c| c.direction == direction);
    }
    if let Some(path) = &a.labels {
        let labels = io::read_labels(path)?;
        let before = counts.len();
        counts = filter_normal(&counts, &labels);
        summary.push(format!(
            "labels: {} rows dropped on holiday or special-event dates",
            before - counts.len()
        ));
    }
    let weights: BTreeMap<String, f64> = a.weights.iter().cloned().collect();
    let before = counts.len();
    let mut fused = fuse_sources(&counts, &weights)?;
    if fused.len() != before {
        summary.push(format!("fusion: {before} rows merged into {}", fused.len()));
    }
    sort_counts(&mut fused);

    match &g.out {
        Some(path) => {
            io::save_counts(path, &fused, false)?;
            summary.push(format!("wrote {} rows to {}", fused.len(), path.display()));
            for line in summary {
                console.line(&line)?;
            }
        }
        None => {
            let mut buf = Vec::new();
            io::write_counts(&mut buf, &fused, false)
                .map_err(|e| CliError::Input(e.to_string()))?;
            console.print(&String::from_utf8_lossy(&buf))?;
            for line in summary {
                console.warn(&line);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// clean
// ---------------------------------------------------------------------------

fn clean(g: &Global, a: &CleanArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let schedule = require_schedule(g)?;
    let counts = io::read_counts(&a.input.counts, Some(&schedule))?;
    let labels = match &a.labels {
        Some(p) => io::read_labels(p)?,
        None => Vec::new(),
    };
    let station = station_of(g, &counts)?;
    let directions: Vec<Direction> = match g.direction {
        Some(d) => vec![d],
        None => counts
            .iter()
            .map(|c| c.direction)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let span = date_range(&counts).ok_or_else(|| CliError::Input("no counts to clean".into()))?;
    let grid = ExpectedGrid::new(
        a.start.unwrap_or(span.start),
        a.end.unwrap_or(span.end),
        schedule,
        directions,
        station,
    )?;
    let (mut cleaned, report) = clean_pipeline(&counts, &grid, &labels, cleaning_params(g))?;
    sort_counts(&mut cleaned);

    let dir = out_dir(g, ".")?;
    let cleaned_path = dir.join("cleaned.csv");
    let report_path = dir.join("quality_report.json");
    io::save_counts(&cleaned_path, &cleaned, true)?;
    io::save_json(&report_path, &report)?;

    match g.format {
        Format::Json => console.json(&report)?,
        format => console.print(&render_all(&quality_tables(&report, cleaned.len()), format))?,
    }
    console.warn(&format!(
        "wrote {} and {}",
        cleaned_path.display(),
        report_path.display()
    ));
    Ok(())
}

fn quality_tables(report: &QualityReport, rows: usize) -> Vec<Table> {
    let mut summary = Table::new("Cleaning summary", &["item", "count"]);
    let failures = report.equipment_failures().count();
    let events = report.traffic_events().count();
    for (item, n) in [
        ("cleaned rows", rows),
        ("missing slots", report.missing.len()),
        ("equipment failures", failures),
        ("traffic events", events),
        ("imputations", report.imputations.len()),
        ("cells with too little history", report.skipped_cells.len()),
    ] {
        summary.push(vec![item.into(), n.to_string()]);
    }
    let mut tables = vec![summary];
    if !report.anomalies.is_empty() {
        let mut t = Table::new(
            "Anomalies",
            &[
                "date",
                "direction",
                "period",
                "observed",
                "robust z",
                "classification",
            ],
        );
        for x in &report.anomalies {
            t.push(vec![
                x.key.date.to_string(),
                x.key.direction.to_string(),
                x.key.period_index.to_string(),
                money(x.observed),
                money(x.robust_z),
                match x.classification {
                    flowcast_core::quality::Classification::EquipmentFailure => "equipment_failure",
                    flowcast_core::quality::Classification::TrafficEvent => "traffic_event",
                }
                .into(),
            ]);
        }
        tables.push(t);
    }
    if !report.imputations.is_empty() {
        let mut t = Table::new("Imputations", &["date", "direction", "period", "value"]);
        for i in &report.imputations {
            t.push(vec![
                i.key.date.to_string(),
                i.key.direction.to_string(),
                i.key.period_index.to_string(),
                money(i.value),
            ]);
        }
        tables.push(t);
    }
    tables
}

// ---------------------------------------------------------------------------
// anova
// ---------------------------------------------------------------------------

fn anova(g: &Global, a: &AnovaArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let schedule = require_schedule(g)?;
    let (counts, _) = series(g, io::read_counts(&a.input.counts, Some(&schedule))?)?;
    let days: Vec<Weekday> = if a.days.is_empty() {
        counts
            .iter()
            .map(|c| c.day_of_week)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        let mut d = a.days.clone();
        d.sort();
        d.dedup();
        d
    };
    if days.len() < 2 {
        return Err(CliError::Input(
            "variance analysis needs at least two weekdays".into(),
        ));
    }
    let table = day_period_anova(&counts, schedule.period_count(), &days)?;
    if table.degenerate {
        console.warn("warning: no within-cell variation; F statistics are undefined");
    }
    let text = match g.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&table).map_err(|e| CliError::Input(e.to_string()))?;
            s.push('\n');
            s
        }
        format => anova_table(&table, &days).render(format),
    };
    match &g.out {
        Some(path) => io::write_atomic(path, text.as_bytes())?,
        None => console.print(&text)?,
    }
    Ok(())
}

pub fn anova_table(t: &AnovaTable, days: &[Weekday]) -> Table {
    let mut table = Table::new(
        format!(
            "Two-factor variance analysis with replication: {}",
            days_label(days)
        ),
        &["Source of Difference", "SS", "df", "MS", "F", "P-value"],
    );
    for (name, row) in [
        ("Day", &t.factor_a),
        ("Period", &t.factor_b),
        ("Interaction", &t.interaction),
        ("Within", &t.error),
        ("Total", &t.total),
    ] {
        table.push(vec![
            name.into(),
            money(row.ss),
            row.df.to_string(),
            opt(row.ms, money),
            opt(row.f, money),
            opt(row.p, sci),
        ]);
    }
    table
}

// ---------------------------------------------------------------------------
// group
// ---------------------------------------------------------------------------

fn group(g: &Global, a: &CountsArg, console: &mut Console<'_>) -> Result<(), CliError> {
    let schedule = require_schedule(g)?;
    let (counts, _) = series(g, io::read_counts(&a.counts, Some(&schedule))?)?;
    let grouping = discover_groups(&counts, schedule.period_count(), g.alpha)?;
    let path = g
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("groups.json"));
    io::save_json(&path, &grouping)?;
    match g.format {
        Format::Json => console.json(&grouping)?,
        format => console.print(&render_all(&grouping_tables(&grouping), format))?,
    }
    if !grouping.is_complete() {
        console.warn("warning: some weekdays have no counts and are not grouped");
    }
    console.warn(&format!("wrote {}", path.display()));
    Ok(())
}

fn grouping_tables(grouping: &DayGrouping) -> Vec<Table> {
    let mut evidence = Table::new(
        format!("Merge tests at alpha = {}", grouping.alpha),
        &["tested days", "candidate", "P-value", "merged"],
    );
    for e in &grouping.evidence {
        evidence.push(vec![
            days_label(&e.days),
            e.candidate.to_string(),
            sci(e.p_value),
            if e.merged { "yes" } else { "no" }.into(),
        ]);
    }
    let mut groups = Table::new("Day groups", &["group", "days"]);
    for days in &grouping.groups {
        groups.push(vec![group_label(days), days_label(days)]);
    }
    vec![groups, evidence]
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn fit(g: &Global, a: &FitArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let schedule = require_schedule(g)?;
    let (counts, direction) = series(g, io::read_counts(&a.input.counts, Some(&schedule))?)?;
    let grouping = match &a.groups {
        Some(path) => io::read_grouping(path)?,
        None => discover_groups(&counts, schedule.period_count(), g.alpha)?,
    };
    let options = FitOptions {
        include_flagged: a.include_flagged,
    };
    let models = fit_models(&counts, &grouping, direction, &schedule, options)?;
    let dir = out_dir(g, "models")?;
    for m in &models {
        io::save_model(&dir.join(io::model_file_name(m)), m)?;
    }
    match g.format {
        Format::Json => console.json(&models)?,
        format => {
            let tables: Vec<Table> = models.iter().flat_map(model_tables).collect();
            console.print(&render_all(&tables, format))?;
        }
    }
    console.warn(&format!(
        "wrote {} model(s) to {}",
        models.len(),
        dir.display()
    ));
    Ok(())
}

/// Regression statistics, regression ANOVA and coefficient tables.
pub fn model_tables(m: &RegressionModel) -> Vec<Table> {
    let label = m.label();
    let mut coefs = Table::new(
        format!("{label}: coefficients"),
        &["", "Coefficients", "Standard Error", "t Stat", "P-value"],
    );
    let Some(d) = &m.diagnostics else {
        coefs.push(vec![
            "Intercept".into(),
            money(m.intercept),
            String::new(),
            String::new(),
            String::new(),
        ]);
        for (p, c) in dummy_periods(m).zip(&m.coefficients) {
            coefs.push(vec![
                format!("t{p}"),
                money(*c),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        return vec![coefs];
    };
    let s = &d.summary;
    let mut stats = Table::new(
        format!("{label}: regression statistics"),
        &["statistic", "value"],
    );
    for (name, value) in [
        ("Multiple R", fixed(s.multiple_r, 6)),
        ("R Square", fixed(s.r2, 6)),
        ("Adjusted R Square", fixed(s.adj_r2, 6)),
        ("Standard Error", money(s.residual_se)),
        ("Observations", s.n.to_string()),
    ] {
        stats.push(vec![name.into(), value]);
    }
    let mut anova = Table::new(
        format!("{label}: variance analysis"),
        &["", "df", "SS", "MS", "F", "Significance F"],
    );
    anova.push(vec![
        "Regression".into(),
        s.df_regression.to_string(),
        money(s.ss_regression),
        money(s.ms_regression),
        money(s.f_stat),
        sci(s.f_significance),
    ]);
    anova.push(vec![
        "Residual".into(),
        s.df_residual.to_string(),
        money(s.ss_residual),
        money(s.ms_residual),
        String::new(),
        String::new(),
    ]);
    anova.push(vec![
        "Total".into(),
        (s.df_regression + s.df_residual).to_string(),
        money(s.ss_total),
        String::new(),
        String::new(),
        String::new(),
    ]);
    let stat_row = |name: String, value: f64, st: &flowcast_core::stats::CoefStat| {
        vec![
            name,
            money(value),
            money(st.standard_error),
            money(st.t_stat),
            sci(st.p_value),
        ]
    };
    coefs.push(stat_row("Intercept".into(), m.intercept, &d.intercept_stat));
    for ((p, c), st) in dummy_periods(m).zip(&m.coefficients).zip(&d.coef_stats) {
        coefs.push(stat_row(format!("t{p}"), *c, st));
    }
    vec![stats, anova, coefs]
}

fn dummy_periods(m: &RegressionModel) -> impl Iterator<Item = usize> + '_ {
    (1..=m.period_count).filter(move |&p| p != m.reference_period)
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

fn predict_cmd(g: &Global, a: &PredictArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let model = io::load_model(&a.model)?;
    if let Some(schedule) = optional_schedule(g)? {
        if let Some(w) = io::fingerprint_warning(&a.model, &model, &schedule) {
            console.warn(&w);
        }
    }
    let value = predict(&model, a.period)?;
    match g.format {
        Format::Json => console.json(&serde_json::json!({
            "group": model.group,
            "direction": model.direction,
            "period_index": a.period,
            "predicted": value,
        })),
        _ => console.line(&money(value)),
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn load_models(
    g: &Global,
    dir: &Path,
    console: &mut Console<'_>,
) -> Result<Vec<RegressionModel>, CliError> {
    let schedule = optional_schedule(g)?;
    let mut models = Vec::new();
    for (path, m) in io::load_models(dir)? {
        if g.direction.is_some_and(|d| d != m.direction) {
            continue;
        }
        if let Some(w) = schedule
            .as_ref()
            .and_then(|s| io::fingerprint_warning(&path, &m, s))
        {
            console.warn(&w);
        }
        models.push(m);
    }
    if models.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no model for the requested direction",
            dir.display()
        )));
    }
    Ok(models)
}

fn validate_cmd(g: &Global, a: &ValidateArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let models = load_models(g, &a.models, console)?;
    let schedule = optional_schedule(g)?;
    let directions: BTreeSet<Direction> = models.iter().map(|m| m.direction).collect();
    let mut holdout = io::read_counts(&a.holdout, schedule.as_ref())?;
    holdout.retain(|c| directions.contains(&c.direction));
    if let Some(station) = &g.station {
        holdout.retain(|c| &c.station_id == station);
    }
    let span = date_range(&holdout)
        .ok_or_else(|| CliError::Input("holdout has no usable counts".into()))?;
    for m in &models {
        if let Some(trained) = m.fitted_at.filter(|r| r.overlaps(&span)) {
            console.warn(&format!(
                "warning: holdout {}..{} overlaps the {} training range {}..{}; validation should use unseen dates",
                span.start,
                span.end,
                m.label(),
                trained.start,
                trained.end
            ));
        }
    }
    let grouping = io::grouping_of(&models, g.alpha)?;
    let report = validate(&models, &grouping, &holdout)?;
    let path = g
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("validation.json"));
    io::save_json(&path, &report)?;
    match g.format {
        Format::Json => console.json(&report)?,
        format => {
            let mut t = Table::new(
                "Validation",
                &[
                    "date",
                    "day",
                    "direction",
                    "period",
                    "actual",
                    "predicted",
                    "APE %",
                ],
            );
            for e in &report.entries {
                t.push(vec![
                    e.date.to_string(),
                    e.day_of_week.to_string(),
                    e.direction.to_string(),
                    e.period_index.to_string(),
                    money(e.actual),
                    money(e.predicted),
                    money(e.ape_percent),
                ]);
            }
            let mut s = Table::new(
                "Summary",
                &["entries", "skipped zero actuals", "mean APE %"],
            );
            s.push(vec![
                report.entries.len().to_string(),
                report.skipped_zero_actual.to_string(),
                money(report.mean_ape_percent),
            ]);
            console.print(&render_all(&[t, s], format))?;
        }
    }
    console.warn(&format!("wrote {}", path.display()));
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct DailyTotal {
    date: NaiveDate,
    day_of_week: Weekday,
    total: f64,
}

#[derive(Debug, Serialize)]
struct PeriodMean {
    group: String,
    period_index: usize,
    observations: usize,
    observed_mean: Option<f64>,
    predicted: f64,
}

#[derive(Debug, Serialize)]
struct PlanningReport {
    station_id: String,
    direction: Direction,
    daily_totals: Vec<DailyTotal>,
    period_means: Vec<PeriodMean>,
}

fn report(g: &Global, a: &ReportArgs, console: &mut Console<'_>) -> Result<(), CliError> {
    let schedule = optional_schedule(g)?;
    let counts = io::read_counts(&a.input.counts, schedule.as_ref())?;
    if counts.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no counts to report",
            a.input.counts.display()
        )));
    }
    let (counts, direction) = series(g, counts)?;
    let mut models = load_models(g, &a.models, console)?;
    models.retain(|m| m.direction == direction);
    models.sort_by(|x, y| x.group.cmp(&y.group));
    if models.is_empty() {
        return Err(CliError::Input(format!(
            "no {direction} model in {}",
            a.models.display()
        )));
    }

    let mut totals: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for c in &counts {
        *totals.entry(c.date).or_default() += c.count;
    }
    let daily_totals: Vec<DailyTotal> = totals
        .into_iter()
        .map(|(date, total)| DailyTotal {
            date,
            day_of_week: Weekday::of(date),
            total,
        })
        .collect();
    let mut period_means = Vec::new();
    for m in &models {
        for p in 1..=m.period_count {
            let values: Vec<f64> = counts
                .iter()
                .filter(|c| c.period_index == p && m.group.contains(&c.day_of_week))
                .map(|c| c.count)
                .collect();
            period_means.push(PeriodMean {
                group: m.label(),
                period_index: p,
                observations: values.len(),
                observed_mean: (!values.is_empty())
                    .then(|| values.iter().sum::<f64>() / values.len() as f64),
                predicted: predict(m, p)?,
            });
        }
    }
    let doc = PlanningReport {
        station_id: counts[0].station_id.clone(),
        direction,
        daily_totals,
        period_means,
    };

    let dir = out_dir(g, "report")?;
    let mut written = Vec::new();
    let (daily, means) = report_tables(&doc);
    match g.format {
        Format::Json => {
            let path = dir.join("report.json");
            io::save_json(&path, &doc)?;
            written.push(path);
        }
        Format::Csv => {
            for (name, table) in [("daily_totals.csv", &daily), ("period_means.csv", &means)] {
                let path = dir.join(name);
                io::write_atomic(&path, table.to_csv().as_bytes())?;
                written.push(path);
            }
        }
        Format::Md => {
            let path = dir.join("report.md");
            let text = format!(
                "# Passenger flow report: {} {}\n\n{}",
                doc.station_id,
                direction,
                render_all(&[daily, means], Format::Md)
            );
            io::write_atomic(&path, text.as_bytes())?;
            written.push(path);
        }
    }
    for m in &models {
        let path = dir.join(format!("plot_{}.dat", m.label()));
        let mut text = format!("# period predicted_{direction}_flow ({})\n", m.label());
        for p in 1..=m.period_count {
            text.push_str(&format!("{p} {}\n", money(predict(m, p)?)));
        }
        io::write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    for path in written {
        console.line(&format!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn report_tables(doc: &PlanningReport) -> (Table, Table) {
    let mut daily = Table::new("Daily totals", &["date", "day", "total"]);
    for d in &doc.daily_totals {
        daily.push(vec![
            d.date.to_string(),
            d.day_of_week.to_string(),
            money(d.total),
        ]);
    }
    let mut means = Table::new(
        "Period means",
        &[
            "group",
            "period",
            "observations",
            "observed mean",
            "predicted",
        ],
    );
    for m in &doc.period_means {
        means.push(vec![
            m.group.clone(),
            m.period_index.to_string(),
            m.observations.to_string(),
            opt(m.observed_mean, money),
            money(m.predicted),
        ]);
    }
    (daily, means)
}
