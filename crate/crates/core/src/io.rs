//! Observation ingestion, run-config files, and plot-ready analysis output.
//!
//! File formats:
//! - observation CSV: header `date,hospitalized,recovered,deaths[,new_cases]`,
//!   ISO-8601 dates, decimal counts, rows sorted by date, duplicates rejected,
//!   missing dates allowed (treated as gaps);
//! - run config and twin spec: flat `key = value` lines, `#` comments, every
//!   key optional (defaults apply), unknown keys rejected;
//! - analysis CSV: one row per day, `date` plus
//!   `{e,ia,is,h,r,d,ra,rs,beta_s,rt} x {mean,lo95,lo68,hi68,hi95,spread}`,
//!   with a sidecar `<path>.meta` holding the full effective configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;

use crate::assimilator::{AnalysisRecord, RunConfig, Summary};
use crate::error::{Error, Result};
use crate::scalar::Float;

/// One day of regional observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsPoint<T> {
    /// Currently hospitalized (or otherwise registered and isolated) cases.
    pub hospitalized: T,
    /// Cumulative recovered count.
    pub recovered: T,
    /// Cumulative deceased count.
    pub deaths: T,
    /// Daily new confirmed cases, when the source provides them.
    pub new_cases: Option<T>,
}

/// A value replaced during ingestion cleanup of a cumulative column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCorrection {
    pub date: NaiveDate,
    pub column: &'static str,
    pub reported: f64,
    pub replaced_with: f64,
}

/// Daily observations over a contiguous date range; days without a record
/// are kept as explicit gaps.
///
/// Cumulative columns are re-monotonized with a running maximum at
/// construction; every replaced value is recorded as a [`DataCorrection`].
#[derive(Debug, Clone)]
pub struct ObservationSeries<T> {
    region: String,
    start: NaiveDate,
    points: Vec<Option<ObsPoint<T>>>,
    corrections: Vec<DataCorrection>,
}

impl<T: Float> ObservationSeries<T> {
    /// Builds a series from per-day points (`None` marks a gap). The first
    /// and last entries must be present.
    pub fn new(
        region: impl Into<String>,
        start: NaiveDate,
        mut points: Vec<Option<ObsPoint<T>>>,
    ) -> Result<Self> {
        if points.is_empty() || points.first().unwrap().is_none() || points.last().unwrap().is_none()
        {
            return Err(Error::DateMismatch(
                "observation series must start and end with an observed day".to_string(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if let Some(p) = p {
                for (name, v) in [
                    ("hospitalized", p.hospitalized),
                    ("recovered", p.recovered),
                    ("deaths", p.deaths),
                ] {
                    if !v.finite() || v < T::zero() {
                        return Err(Error::DateMismatch(format!(
                            "{name} on {} must be a nonnegative finite count, got {v}",
                            start + chrono::Duration::days(i as i64)
                        )));
                    }
                }
            }
        }
        let mut corrections = Vec::new();
        let mut max_recovered = T::zero();
        let mut max_deaths = T::zero();
        for (i, p) in points.iter_mut().enumerate() {
            let Some(p) = p else { continue };
            let date = start + chrono::Duration::days(i as i64);
            if p.recovered < max_recovered {
                corrections.push(DataCorrection {
                    date,
                    column: "recovered",
                    reported: p.recovered.as_f64(),
                    replaced_with: max_recovered.as_f64(),
                });
                p.recovered = max_recovered;
            }
            if p.deaths < max_deaths {
                corrections.push(DataCorrection {
                    date,
                    column: "deaths",
                    reported: p.deaths.as_f64(),
                    replaced_with: max_deaths.as_f64(),
                });
                p.deaths = max_deaths;
            }
            max_recovered = p.recovered;
            max_deaths = p.deaths;
        }
        Ok(Self {
            region: region.into(),
            start,
            points,
            corrections,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start + chrono::Duration::days(self.points.len() as i64 - 1)
    }

    /// Number of calendar days covered, gaps included.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + chrono::Duration::days(index as i64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = date.signed_duration_since(self.start).num_days();
        (0..self.points.len() as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    /// The observation for the day at `index`, `None` on gap days.
    pub fn point(&self, index: usize) -> Option<&ObsPoint<T>> {
        self.points.get(index).and_then(|p| p.as_ref())
    }

    pub fn at_date(&self, date: NaiveDate) -> Option<&ObsPoint<T>> {
        self.index_of(date).and_then(|i| self.point(i))
    }

    /// Gap days present in the series.
    pub fn gap_dates(&self) -> Vec<NaiveDate> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| self.date_at(i))
            .collect()
    }

    /// Cleanup events recorded during construction.
    pub fn corrections(&self) -> &[DataCorrection] {
        &self.corrections
    }

    /// Per-day `(hospitalized, recovered, deaths)` with gaps filled by the
    /// last observed values.
    pub fn carry_forward_filled(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let mut h = Vec::with_capacity(self.points.len());
        let mut r = Vec::with_capacity(self.points.len());
        let mut d = Vec::with_capacity(self.points.len());
        let mut last = self.points[0].clone().expect("first day observed");
        for p in &self.points {
            if let Some(p) = p {
                last = p.clone();
            }
            h.push(last.hospitalized);
            r.push(last.recovered);
            d.push(last.deaths);
        }
        (h, r, d)
    }

    /// The daily new-case column, required to be present on every observed
    /// day and the series to be gapless.
    pub fn new_cases(&self) -> Result<Vec<T>> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                None => Err(Error::DateMismatch(format!(
                    "new-case series has a gap on {}",
                    self.date_at(i)
                ))),
                Some(p) => p
                    .new_cases
                    .ok_or_else(|| Error::MissingColumn("new_cases".to_string())),
            })
            .collect()
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| format!("invalid ISO-8601 date `{}`", s.trim()))
}

fn parse_count<T: Float>(s: &str, column: &str) -> std::result::Result<T, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("invalid number `{}` in column {column}", s.trim()))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!(
            "column {column} must be a nonnegative finite count, got {v}"
        ));
    }
    Ok(T::of(v))
}

/// Reads an observation CSV. Rows must be sorted by date with no duplicates;
/// missing dates become gaps. Non-monotone cumulative columns are cleaned up
/// and reported through [`ObservationSeries::corrections`].
pub fn parse_observations<T: Float>(
    path: impl AsRef<Path>,
    region: impl Into<String>,
) -> Result<ObservationSeries<T>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: path_str.clone(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".to_string()))?;
    let header_fields: Vec<String> = header
        .split(',')
        .map(|f| f.trim().to_ascii_lowercase())
        .collect();
    let has_new_cases = match header_fields
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["date", "hospitalized", "recovered", "deaths"] => false,
        ["date", "hospitalized", "recovered", "deaths", "new_cases"] => true,
        _ => {
            return Err(err(
                1,
                format!(
                    "expected header `date,hospitalized,recovered,deaths[,new_cases]`, got `{header}`"
                ),
            ))
        }
    };
    let expected_fields = if has_new_cases { 5 } else { 4 };

    let mut rows: Vec<(NaiveDate, ObsPoint<T>)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_fields {
            return Err(err(
                line_no,
                format!(
                    "expected {expected_fields} fields, got {}",
                    fields.len()
                ),
            ));
        }
        let date = parse_date(fields[0]).map_err(|m| err(line_no, m))?;
        if let Some((prev, _)) = rows.last() {
            if date == *prev {
                return Err(err(line_no, format!("duplicate date {date}")));
            }
            if date < *prev {
                return Err(err(
                    line_no,
                    format!("date regression: {date} comes after {prev}"),
                ));
            }
        }
        let point = ObsPoint {
            hospitalized: parse_count(fields[1], "hospitalized").map_err(|m| err(line_no, m))?,
            recovered: parse_count(fields[2], "recovered").map_err(|m| err(line_no, m))?,
            deaths: parse_count(fields[3], "deaths").map_err(|m| err(line_no, m))?,
            new_cases: if has_new_cases {
                Some(parse_count(fields[4], "new_cases").map_err(|m| err(line_no, m))?)
            } else {
                None
            },
        };
        rows.push((date, point));
    }
    if rows.is_empty() {
        return Err(err(1, "no observation rows".to_string()));
    }

    let start = rows[0].0;
    let days = rows.last().unwrap().0.signed_duration_since(start).num_days() as usize + 1;
    let mut points: Vec<Option<ObsPoint<T>>> = vec![None; days];
    for (date, point) in rows {
        let offset = date.signed_duration_since(start).num_days() as usize;
        points[offset] = Some(point);
    }
    ObservationSeries::new(region, start, points)
}

/// Writes an observation series in the input CSV schema (gap days omitted).
pub fn write_observations<T: Float>(
    series: &ObservationSeries<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let with_new_cases = (0..series.len())
        .filter_map(|i| series.point(i))
        .all(|p| p.new_cases.is_some());
    let mut out = String::from("date,hospitalized,recovered,deaths");
    if with_new_cases {
        out.push_str(",new_cases");
    }
    out.push('\n');
    for i in 0..series.len() {
        let Some(p) = series.point(i) else { continue };
        let _ = write!(
            out,
            "{},{},{},{}",
            series.date_at(i),
            p.hospitalized,
            p.recovered,
            p.deaths
        );
        if with_new_cases {
            let _ = write!(out, ",{}", p.new_cases.unwrap());
        }
        out.push('\n');
    }
    write_string(path.as_ref(), &out)
}

/// Quantity order of the analysis CSV schema.
pub const ANALYSIS_QUANTITIES: [&str; 10] =
    ["e", "ia", "is", "h", "r", "d", "ra", "rs", "beta_s", "rt"];
const ANALYSIS_STATS: [&str; 6] = ["mean", "lo95", "lo68", "hi68", "hi95", "spread"];

fn analysis_header() -> String {
    let mut header = String::from("date");
    for q in ANALYSIS_QUANTITIES {
        for s in ANALYSIS_STATS {
            let _ = write!(header, ",{q}_{s}");
        }
    }
    header
}

/// Writes the per-day analysis summaries plus a `<path>.meta` sidecar with
/// the full effective configuration, making the run reproducible from its
/// outputs alone.
pub fn write_analysis<T: Float>(
    records: &[AnalysisRecord<T>],
    path: impl AsRef<Path>,
    config: &RunConfig<T>,
) -> Result<()> {
    let path = path.as_ref();
    if records.is_empty() {
        return Err(Error::DateMismatch(
            "cannot write an empty analysis".to_string(),
        ));
    }
    let mut out = analysis_header();
    out.push('\n');
    for rec in records {
        let _ = write!(out, "{}", rec.date);
        for (_, summary) in rec.quantities() {
            let _ = write!(
                out,
                ",{},{},{},{},{},{}",
                summary.mean, summary.lo95, summary.lo68, summary.hi68, summary.hi95, summary.spread
            );
        }
        out.push('\n');
    }
    write_string(path, &out)?;

    let unassimilated: Vec<String> = records
        .iter()
        .filter(|r| !r.assimilated)
        .map(|r| r.date.to_string())
        .collect();
    let mut extras = Vec::new();
    if !unassimilated.is_empty() {
        extras.push(format!(
            "days without an analysis update (spin-up or missing observation): {}",
            unassimilated.join(" ")
        ));
    }
    let meta_path = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.meta", ext.to_string_lossy()),
        None => "meta".to_string(),
    });
    write_run_config(config, &meta_path, &extras)
}

/// Reads back an analysis CSV written by [`write_analysis`]. The assimilation
/// flag is not part of the schema and is restored as `true`.
pub fn read_analysis<T: Float>(path: impl AsRef<Path>) -> Result<Vec<AnalysisRecord<T>>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: path_str.clone(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".to_string()))?;
    if header != analysis_header() {
        return Err(err(1, "unexpected analysis header".to_string()));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + ANALYSIS_QUANTITIES.len() * ANALYSIS_STATS.len() {
            return Err(err(line_no, format!("expected 61 fields, got {}", fields.len())));
        }
        let date = parse_date(fields[0]).map_err(|m| err(line_no, m))?;
        let mut summaries = Vec::with_capacity(ANALYSIS_QUANTITIES.len());
        for chunk in fields[1..].chunks(ANALYSIS_STATS.len()) {
            let mut vals = [T::zero(); 6];
            for (v, f) in vals.iter_mut().zip(chunk) {
                *v = T::of(f.trim().parse::<f64>().map_err(|_| {
                    err(line_no, format!("invalid number `{}`", f.trim()))
                })?);
            }
            summaries.push(Summary {
                mean: vals[0],
                lo95: vals[1],
                lo68: vals[2],
                hi68: vals[3],
                hi95: vals[4],
                spread: vals[5],
            });
        }
        records.push(AnalysisRecord::from_summaries(date, true, &summaries));
    }
    Ok(records)
}

/// Parses a flat `key = value` file into `(line, key, value)` triples.
pub(crate) fn parse_kv_file(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path_str,
                line: idx + 1,
                message: format!("expected `key = value`, got `{raw}`"),
            });
        };
        entries.push((
            idx + 1,
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }
    Ok(entries)
}

fn config_value<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

fn config_float<T: Float>(key: &str, value: &str) -> Result<T> {
    Ok(T::of(config_value::<f64>(key, value)?))
}

fn config_date(key: &str, value: &str) -> Result<NaiveDate> {
    parse_date(value).map_err(|m| Error::Config(format!("key `{key}`: {m}")))
}

/// Reads a run configuration file. Every key has a default; unknown keys are
/// errors. Observation-error keys are given as multiplicative factors
/// (`obs_sd_factor = 1.3` means a log-scale standard deviation of `ln 1.3`).
pub fn parse_run_config<T: Float>(path: impl AsRef<Path>) -> Result<RunConfig<T>> {
    let mut config = RunConfig::default();
    apply_run_config(&mut config, path)?;
    config.validate()?;
    Ok(config)
}

fn apply_run_config<T: Float>(config: &mut RunConfig<T>, path: impl AsRef<Path>) -> Result<()> {
    for (_, key, value) in parse_kv_file(path.as_ref())? {
        match key.as_str() {
            "region" => config.region = value,
            "population" => config.population = config_float(&key, &value)?,
            "start_date" => config.start_date = config_date(&key, &value)?,
            "end_date" => {
                config.end_date = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(config_date(&key, &value)?)
                }
            }
            "ensemble_size" => config.ensemble_size = config_value(&key, &value)?,
            "obs_sd_factor" => config.obs_sd = config_float::<T>(&key, &value)?.ln(),
            "k_ratio" => config.k_ratio = config_float(&key, &value)?,
            "symptomatic_fraction" => config.symptomatic_fraction = config_float(&key, &value)?,
            "rho" => config.rho = config_float(&key, &value)?,
            "alpha" => config.alpha = config_float(&key, &value)?,
            "seed" => config.seed = config_value(&key, &value)?,
            "param_jitter" => config.param_jitter = config_float(&key, &value)?,
            "spinup_days" => config.spinup_days = config_value(&key, &value)?,
            "spinup_exposed" => config.spinup_exposed = config_float(&key, &value)?,
            "spinup_asymptomatic" => config.spinup_asymptomatic = config_float(&key, &value)?,
            "spinup_symptomatic" => config.spinup_symptomatic = config_float(&key, &value)?,
            "beta_grid_min" => config.beta_grid_min = config_float(&key, &value)?,
            "beta_grid_max" => config.beta_grid_max = config_float(&key, &value)?,
            "beta_grid_step" => config.beta_grid_step = config_float(&key, &value)?,
            "log_floor" => config.log_floor = config_float(&key, &value)?,
            "init_state_sd" => config.init_state_sd = config_float(&key, &value)?,
            "init_beta_sd" => config.init_beta_sd = config_float(&key, &value)?,
            "percentile_ci" => config.percentile_ci = config_value(&key, &value)?,
            "tau_switch_date" => config.tau_switch_date = config_date(&key, &value)?,
            other => {
                return Err(Error::Config(format!("unknown config key `{other}`")));
            }
        }
    }
    Ok(())
}

/// Reads a twin-experiment description. Same format and conventions as the
/// run config; `noise_sd_factor` is multiplicative, like `obs_sd_factor`.
pub fn parse_twin_config<T: Float>(
    path: impl AsRef<Path>,
) -> Result<crate::diagnostics::TwinConfig<T>> {
    let mut twin = crate::diagnostics::TwinConfig::default();
    for (_, key, value) in parse_kv_file(path.as_ref())? {
        match key.as_str() {
            "length_days" => twin.length_days = config_value(&key, &value)?,
            "beta_s" => twin.beta_s = config_float(&key, &value)?,
            "beta_s_step_day" => twin.beta_s_step_day = Some(config_value(&key, &value)?),
            "beta_s_step_value" => twin.beta_s_step_value = Some(config_float(&key, &value)?),
            "noise_sd_factor" => twin.noise_sd = config_float::<T>(&key, &value)?.ln(),
            "seed" => twin.seed = config_value(&key, &value)?,
            "gamma_h" => twin.gamma_h = config_float(&key, &value)?,
            "gamma_d" => twin.gamma_d = config_float(&key, &value)?,
            "population" => twin.population = config_float(&key, &value)?,
            "start_date" => twin.start_date = config_date(&key, &value)?,
            "initial_exposed" => twin.initial_exposed = config_float(&key, &value)?,
            "initial_asymptomatic" => twin.initial_asymptomatic = config_float(&key, &value)?,
            "initial_symptomatic" => twin.initial_symptomatic = config_float(&key, &value)?,
            "initial_hospitalized" => twin.initial_hospitalized = config_float(&key, &value)?,
            "initial_recovered" => twin.initial_recovered = config_float(&key, &value)?,
            "initial_deceased" => twin.initial_deceased = config_float(&key, &value)?,
            "burn_in" => twin.burn_in = config_value(&key, &value)?,
            other => {
                return Err(Error::Config(format!("unknown twin spec key `{other}`")));
            }
        }
    }
    Ok(twin)
}

/// Writes a twin description in the format [`parse_twin_config`] accepts.
pub fn write_twin_config<T: Float>(
    twin: &crate::diagnostics::TwinConfig<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "length_days = {}", twin.length_days);
    let _ = writeln!(out, "beta_s = {}", twin.beta_s);
    if let (Some(day), Some(value)) = (twin.beta_s_step_day, twin.beta_s_step_value) {
        let _ = writeln!(out, "beta_s_step_day = {day}");
        let _ = writeln!(out, "beta_s_step_value = {value}");
    }
    let _ = writeln!(out, "noise_sd_factor = {}", twin.noise_sd.exp());
    let _ = writeln!(out, "seed = {}", twin.seed);
    let _ = writeln!(out, "gamma_h = {}", twin.gamma_h);
    let _ = writeln!(out, "gamma_d = {}", twin.gamma_d);
    let _ = writeln!(out, "population = {}", twin.population);
    let _ = writeln!(out, "start_date = {}", twin.start_date);
    let _ = writeln!(out, "initial_exposed = {}", twin.initial_exposed);
    let _ = writeln!(out, "initial_asymptomatic = {}", twin.initial_asymptomatic);
    let _ = writeln!(out, "initial_symptomatic = {}", twin.initial_symptomatic);
    let _ = writeln!(out, "initial_hospitalized = {}", twin.initial_hospitalized);
    let _ = writeln!(out, "initial_recovered = {}", twin.initial_recovered);
    let _ = writeln!(out, "initial_deceased = {}", twin.initial_deceased);
    let _ = writeln!(out, "burn_in = {}", twin.burn_in);
    write_string(path.as_ref(), &out)
}

/// Writes a configuration in the same `key = value` format the parser
/// accepts; `extras` become trailing comments.
pub fn write_run_config<T: Float>(
    config: &RunConfig<T>,
    path: impl AsRef<Path>,
    extras: &[String],
) -> Result<()> {
    let mut out = String::new();
    let end_date = match config.end_date {
        Some(d) => d.to_string(),
        None => "none".to_string(),
    };
    let pairs = [
        ("region", config.region.clone()),
        ("population", config.population.to_string()),
        ("start_date", config.start_date.to_string()),
        ("end_date", end_date),
        ("ensemble_size", config.ensemble_size.to_string()),
        ("obs_sd_factor", config.obs_sd.exp().to_string()),
        ("k_ratio", config.k_ratio.to_string()),
        (
            "symptomatic_fraction",
            config.symptomatic_fraction.to_string(),
        ),
        ("rho", config.rho.to_string()),
        ("alpha", config.alpha.to_string()),
        ("seed", config.seed.to_string()),
        ("param_jitter", config.param_jitter.to_string()),
        ("spinup_days", config.spinup_days.to_string()),
        ("spinup_exposed", config.spinup_exposed.to_string()),
        ("spinup_asymptomatic", config.spinup_asymptomatic.to_string()),
        ("spinup_symptomatic", config.spinup_symptomatic.to_string()),
        ("beta_grid_min", config.beta_grid_min.to_string()),
        ("beta_grid_max", config.beta_grid_max.to_string()),
        ("beta_grid_step", config.beta_grid_step.to_string()),
        ("log_floor", config.log_floor.to_string()),
        ("init_state_sd", config.init_state_sd.to_string()),
        ("init_beta_sd", config.init_beta_sd.to_string()),
        ("percentile_ci", config.percentile_ci.to_string()),
        ("tau_switch_date", config.tau_switch_date.to_string()),
    ];
    for (key, value) in pairs {
        let _ = writeln!(out, "{key} = {value}");
    }
    for extra in extras {
        let _ = writeln!(out, "# {extra}");
    }
    write_string(path.as_ref(), &out)
}
