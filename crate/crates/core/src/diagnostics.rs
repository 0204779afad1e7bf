//! Verification utilities: the reference reproduction-number estimate from
//! daily case counts, twin-experiment generation and scoring, and the
//! sensitivity sweeps.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::assimilator::{assimilate, AnalysisRecord, RunConfig};
use crate::error::{Error, Result};
use crate::integrator::{advance_compartments, DEFAULT_LOG_FLOOR, SUBSTEPS_PER_DAY};
use crate::io::{ObsPoint, ObservationSeries};
use crate::model::{self, basic_reproduction_number, Compartments, MedicalParams, ParamSchedule};
use crate::scalar::Float;

/// Reference reproduction number from daily new confirmed cases: the ratio
/// of the last week's sum to the preceding week's sum, raised to the power
/// generation-time / reporting-interval (5/7).
///
/// Undefined (`None`) for the first 13 days and whenever the earlier week
/// sums to zero.
pub fn toyokeizai_rt<T: Float>(new_cases: &[T]) -> Vec<Option<T>> {
    let exponent = T::of(5.0 / 7.0);
    (0..new_cases.len())
        .map(|t| {
            if t < 13 {
                return None;
            }
            let current: T = new_cases[t - 6..=t].iter().copied().sum();
            let previous: T = new_cases[t - 13..=t - 7].iter().copied().sum();
            if previous <= T::zero() {
                return None;
            }
            Some((current / previous).powf(exponent))
        })
        .collect()
}

/// Ground truth description of a twin experiment.
#[derive(Debug, Clone)]
pub struct TwinSpec<T> {
    /// Per-day true transmission coefficient; its length is the run length.
    pub beta_s: Vec<T>,
    /// True initial compartment state.
    pub initial: Compartments<T>,
    /// Log-scale observation noise standard deviation.
    pub noise_sd: T,
    /// Seed of the observation-noise stream.
    pub seed: u64,
}

impl<T: Float> TwinSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.beta_s.is_empty() {
            return Err(Error::Config("twin needs at least one day".to_string()));
        }
        if let Some((i, b)) = self
            .beta_s
            .iter()
            .enumerate()
            .find(|(_, b)| !b.finite() || **b <= T::zero())
        {
            return Err(Error::Config(format!(
                "true beta_s[{i}] must be positive, got {b}"
            )));
        }
        if !self.noise_sd.finite() || self.noise_sd < T::zero() {
            return Err(Error::Config("noise sd must be nonnegative".to_string()));
        }
        Ok(())
    }

    /// Run length in days.
    pub fn len(&self) -> usize {
        self.beta_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta_s.is_empty()
    }
}

/// File-level twin description with defaults chosen so the default twin is a
/// long two-regime run that keeps the epidemic in its exponential phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinConfig<T> {
    pub length_days: usize,
    pub beta_s: T,
    pub beta_s_step_day: Option<usize>,
    pub beta_s_step_value: Option<T>,
    pub noise_sd: T,
    pub seed: u64,
    pub gamma_h: T,
    pub gamma_d: T,
    pub population: T,
    pub start_date: NaiveDate,
    pub initial_exposed: T,
    pub initial_asymptomatic: T,
    pub initial_symptomatic: T,
    pub initial_hospitalized: T,
    pub initial_recovered: T,
    pub initial_deceased: T,
    pub burn_in: usize,
}

impl<T: Float> Default for TwinConfig<T> {
    fn default() -> Self {
        Self {
            length_days: 300,
            beta_s: T::of(0.5),
            beta_s_step_day: Some(150),
            beta_s_step_value: Some(T::of(0.25)),
            noise_sd: T::of(1.3).ln(),
            seed: 14,
            gamma_h: T::of(0.02),
            gamma_d: T::of(0.001),
            population: T::of(1e20),
            start_date: NaiveDate::from_ymd_opt(2020, 7, 1).expect("valid date"),
            initial_exposed: T::of(100.0),
            initial_asymptomatic: T::of(100.0),
            initial_symptomatic: T::of(20.0),
            initial_hospitalized: T::of(20.0),
            initial_recovered: T::of(10.0),
            initial_deceased: T::of(1.0),
            burn_in: 60,
        }
    }
}

impl<T: Float> TwinConfig<T> {
    /// Expands into the ground-truth spec and the true parameter schedule,
    /// using the filter configuration's structural constants so the model is
    /// well specified.
    pub fn to_parts(&self, config: &RunConfig<T>) -> Result<(TwinSpec<T>, ParamSchedule<T>)> {
        if self.length_days < 2 {
            return Err(Error::Config("twin length must be at least 2".to_string()));
        }
        let mut beta_s = vec![self.beta_s; self.length_days];
        if let Some(step_day) = self.beta_s_step_day {
            let value = self.beta_s_step_value.ok_or_else(|| {
                Error::Config("beta_s_step_day given without beta_s_step_value".to_string())
            })?;
            for b in beta_s.iter_mut().skip(step_day) {
                *b = value;
            }
        }
        let initial = Compartments::with_population(
            self.population,
            self.initial_exposed,
            self.initial_asymptomatic,
            self.initial_symptomatic,
            self.initial_hospitalized,
            self.initial_recovered,
            self.initial_deceased,
            T::zero(),
            T::zero(),
        )?;
        let spec = TwinSpec {
            beta_s,
            initial,
            noise_sd: self.noise_sd,
            seed: self.seed,
        };
        spec.validate()?;
        let base = MedicalParams::from_fractions(
            self.beta_s,
            config.k_ratio,
            config.symptomatic_fraction,
            model::tau_h_on(self.start_date, config.tau_switch_date),
            self.gamma_h,
            self.gamma_d,
        )?;
        let sched = ParamSchedule::constant(
            base,
            self.start_date,
            config.tau_switch_date,
            self.gamma_h,
            self.gamma_d,
            self.length_days,
            config.symptomatic_fraction,
        )?;
        Ok((spec, sched))
    }
}

/// Integrates the true trajectory and synthesizes noisy observations:
/// each observed count becomes `max(count, floor) * exp(noise)`, and the
/// cumulative columns are re-monotonized with a running maximum. Daily new
/// cases are attached as the daily increments of the registered total
/// `H + R + D` of the truth.
pub fn generate_twin<T: Float>(
    spec: &TwinSpec<T>,
    sched: &ParamSchedule<T>,
) -> Result<(ObservationSeries<T>, Vec<Compartments<T>>)> {
    spec.validate()?;
    let days = spec.len();
    if sched.len() < days {
        return Err(Error::DateMismatch(format!(
            "schedule covers {} days, twin needs {days}",
            sched.len()
        )));
    }
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(spec.seed);
    let floor = T::of(DEFAULT_LOG_FLOOR);

    let mut truth = Vec::with_capacity(days);
    truth.push(spec.initial.clone());
    for day in 1..days {
        let date = sched.start_date() + chrono::Duration::days(day as i64 - 1);
        let params = sched.params_on(date)?.with_beta_s(spec.beta_s[day - 1]);
        let next = advance_compartments(truth.last().unwrap(), &params, SUBSTEPS_PER_DAY)?;
        truth.push(next);
    }

    let registered =
        |c: &Compartments<T>| c.hospitalized + c.recovered + c.deceased;
    let mut points = Vec::with_capacity(days);
    let mut max_recovered = T::zero();
    let mut max_deaths = T::zero();
    for (day, state) in truth.iter().enumerate() {
        let mut noisy = |value: T| value.max(floor) * (spec.noise_sd * T::std_normal(&mut rng)).exp();
        let hospitalized = noisy(state.hospitalized);
        let mut recovered = noisy(state.recovered);
        let mut deaths = noisy(state.deceased);
        max_recovered = max_recovered.max(recovered);
        max_deaths = max_deaths.max(deaths);
        recovered = max_recovered;
        deaths = max_deaths;
        let new_cases = if day == 0 {
            T::zero()
        } else {
            (registered(state) - registered(&truth[day - 1])).max(T::zero())
        };
        points.push(Some(ObsPoint {
            hospitalized,
            recovered,
            deaths,
            new_cases: Some(new_cases),
        }));
    }
    let obs = ObservationSeries::new("twin", sched.start_date(), points)?;
    Ok((obs, truth))
}

/// Named per-compartment statistics of a scored twin run.
pub const SCORED_COMPARTMENTS: [&str; 8] = ["e", "ia", "is", "h", "r", "d", "ra", "rs"];

/// Accuracy and calibration summary of a twin run.
#[derive(Debug, Clone)]
pub struct ScoreReport<T> {
    pub days: usize,
    pub burn_in: usize,
    /// Root-mean-square error of the log analysis mean per compartment,
    /// post burn-in.
    pub log_rmse: [T; 8],
    /// Fraction of post-burn-in days the truth lies inside the 68% band.
    pub coverage68: [T; 8],
    /// Fraction of post-burn-in days the truth lies inside the 95% band.
    pub coverage95: [T; 8],
    /// Relative error of the mean transmission coefficient per post-burn-in
    /// day.
    pub beta_rel_err: Vec<T>,
    /// Fraction of post-burn-in days with relative error at most 10%.
    pub beta_within_10pct: T,
    /// Fraction of post-burn-in days the true reproduction number lies in
    /// the 68% / 95% bands.
    pub rt_coverage68: T,
    pub rt_coverage95: T,
}

impl<T: Float> ScoreReport<T> {
    /// Flat `key = value` lines for the score file.
    pub fn to_kv_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "days = {}", self.days);
        let _ = writeln!(out, "burn_in = {}", self.burn_in);
        for (i, name) in SCORED_COMPARTMENTS.iter().enumerate() {
            let _ = writeln!(out, "log_rmse_{name} = {}", self.log_rmse[i]);
        }
        for (i, name) in SCORED_COMPARTMENTS.iter().enumerate() {
            let _ = writeln!(out, "coverage68_{name} = {}", self.coverage68[i]);
            let _ = writeln!(out, "coverage95_{name} = {}", self.coverage95[i]);
        }
        let _ = writeln!(out, "beta_within_10pct = {}", self.beta_within_10pct);
        let _ = writeln!(out, "rt_coverage68 = {}", self.rt_coverage68);
        let _ = writeln!(out, "rt_coverage95 = {}", self.rt_coverage95);
        let mean_rel: T = if self.beta_rel_err.is_empty() {
            T::zero()
        } else {
            self.beta_rel_err.iter().copied().sum::<T>()
                / T::of(self.beta_rel_err.len() as f64)
        };
        let _ = writeln!(out, "beta_mean_rel_err = {mean_rel}");
        out
    }
}

/// Scores analysis records against the twin truth.
pub fn score_twin<T: Float>(
    records: &[AnalysisRecord<T>],
    truth: &[Compartments<T>],
    true_beta_s: &[T],
    sched: &ParamSchedule<T>,
    burn_in: usize,
) -> Result<ScoreReport<T>> {
    if records.len() != truth.len() || records.len() != true_beta_s.len() {
        return Err(Error::DateMismatch(format!(
            "records ({}), truth ({}), and true beta ({}) must align",
            records.len(),
            truth.len(),
            true_beta_s.len()
        )));
    }
    if records.is_empty() {
        return Err(Error::DateMismatch("nothing to score".to_string()));
    }
    for (i, r) in records.iter().enumerate() {
        let expected = sched.start_date() + chrono::Duration::days(i as i64);
        if r.date != expected {
            return Err(Error::DateMismatch(format!(
                "record {i} is dated {}, expected {expected}",
                r.date
            )));
        }
    }
    let scored = &records[burn_in.min(records.len())..];
    let truth_scored = &truth[burn_in.min(truth.len())..];
    let n = scored.len();
    let floor = T::of(DEFAULT_LOG_FLOOR);

    let mut log_rmse = [T::zero(); 8];
    let mut coverage68 = [T::zero(); 8];
    let mut coverage95 = [T::zero(); 8];
    let compartment_of = |c: &Compartments<T>, idx: usize| match idx {
        0 => c.exposed,
        1 => c.asymptomatic,
        2 => c.symptomatic,
        3 => c.hospitalized,
        4 => c.recovered,
        5 => c.deceased,
        6 => c.recovered_asymptomatic,
        _ => c.recovered_symptomatic,
    };
    for idx in 0..8 {
        let mut sq_sum = T::zero();
        let mut in68 = 0usize;
        let mut in95 = 0usize;
        for (rec, tru) in scored.iter().zip(truth_scored) {
            let summary = rec.quantities()[idx].1;
            let value = compartment_of(tru, idx).max(floor);
            let diff = summary.mean.max(floor).ln() - value.ln();
            sq_sum += diff * diff;
            if value >= summary.lo68 && value <= summary.hi68 {
                in68 += 1;
            }
            if value >= summary.lo95 && value <= summary.hi95 {
                in95 += 1;
            }
        }
        log_rmse[idx] = (sq_sum / T::of(n as f64)).sqrt();
        coverage68[idx] = T::of(in68 as f64 / n as f64);
        coverage95[idx] = T::of(in95 as f64 / n as f64);
    }

    let mut beta_rel_err = Vec::with_capacity(n);
    let mut within = 0usize;
    let mut rt_in68 = 0usize;
    let mut rt_in95 = 0usize;
    for (i, rec) in scored.iter().enumerate() {
        let day = burn_in + i;
        let true_beta = true_beta_s[day];
        let rel = (rec.beta_s.mean - true_beta).abs() / true_beta;
        if rel <= T::of(0.10) {
            within += 1;
        }
        beta_rel_err.push(rel);
        let params = sched.params_on(rec.date)?.with_beta_s(true_beta);
        let true_rt = basic_reproduction_number(&params)?;
        if true_rt >= rec.rt.lo68 && true_rt <= rec.rt.hi68 {
            rt_in68 += 1;
        }
        if true_rt >= rec.rt.lo95 && true_rt <= rec.rt.hi95 {
            rt_in95 += 1;
        }
    }

    Ok(ScoreReport {
        days: records.len(),
        burn_in,
        log_rmse,
        coverage68,
        coverage95,
        beta_rel_err,
        beta_within_10pct: T::of(within as f64 / n as f64),
        rt_coverage68: T::of(rt_in68 as f64 / n as f64),
        rt_coverage95: T::of(rt_in95 as f64 / n as f64),
    })
}

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Ratio between asymptomatic and symptomatic transmission.
    KRatio,
    /// Log-scale observation error standard deviation.
    ObsSd,
    /// Fraction of infectious individuals that develop symptoms.
    SymptomaticFraction,
}

impl SweepAxis {
    /// The default axis values used by the sensitivity experiments.
    pub fn default_values<T: Float>(&self) -> Vec<T> {
        match self {
            SweepAxis::KRatio => [0.1, 0.3, 0.58, 0.8, 1.0]
                .iter()
                .map(|v| T::of(*v))
                .collect(),
            SweepAxis::ObsSd => [1.1, 1.3, 1.5, 2.0, 2.5]
                .iter()
                .map(|v| T::of(*v).ln())
                .collect(),
            SweepAxis::SymptomaticFraction => {
                [0.83, 0.70, 0.50].iter().map(|v| T::of(*v)).collect()
            }
        }
    }

    /// Short name used in labels and file names.
    pub fn short_name(&self) -> &'static str {
        match self {
            SweepAxis::KRatio => "k",
            SweepAxis::ObsSd => "sd",
            SweepAxis::SymptomaticFraction => "frac",
        }
    }

    /// Sets the swept field on a run configuration.
    pub fn apply<T: Float>(&self, config: &mut RunConfig<T>, value: T) {
        match self {
            SweepAxis::KRatio => config.k_ratio = value,
            SweepAxis::ObsSd => config.obs_sd = value,
            SweepAxis::SymptomaticFraction => config.symptomatic_fraction = value,
        }
    }

    /// Human-readable label: the observation sd is reported as its
    /// multiplicative factor.
    pub fn label<T: Float>(&self, value: T) -> String {
        let shown = match self {
            SweepAxis::ObsSd => value.exp(),
            _ => value,
        };
        format!("{}{:.2}", self.short_name(), shown.as_f64())
    }
}

/// One completed sweep run.
#[derive(Debug, Clone)]
pub struct SweepRun<T: Float> {
    pub label: String,
    pub value: T,
    pub records: Vec<AnalysisRecord<T>>,
}

/// Runs the assimilation once per axis value with otherwise identical
/// configuration (same seed). Up to `jobs` runs execute in parallel; results
/// come back in axis order.
pub fn sweep<T: Float>(
    template: &RunConfig<T>,
    axis: SweepAxis,
    values: &[T],
    obs: &ObservationSeries<T>,
    jobs: usize,
) -> Result<Vec<SweepRun<T>>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".to_string()));
    }
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<SweepRun<T>>>> = (0..values.len()).map(|_| None).collect();
    for chunk_start in (0..values.len()).step_by(jobs) {
        let chunk_end = (chunk_start + jobs).min(values.len());
        let chunk_results: Vec<(usize, Result<SweepRun<T>>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (chunk_start..chunk_end)
                .map(|i| {
                    let value = values[i];
                    let mut config = template.clone();
                    axis.apply(&mut config, value);
                    let label = axis.label(value);
                    scope.spawn(move || {
                        let run = assimilate(&config, obs).map(|records| SweepRun {
                            label,
                            value,
                            records,
                        });
                        (i, run)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        for (i, res) in chunk_results {
            results[i] = Some(res);
        }
    }
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.expect("every sweep slot filled").map_err(|e| {
                Error::Config(format!(
                    "sweep value {} ({}): {e}",
                    axis.label(values[i]),
                    values[i]
                ))
            })
        })
        .collect()
}

/// Writes the per-day mean reproduction number of each sweep run side by
/// side: `date` plus one `rt_mean_<label>` column per value.
pub fn write_rt_comparison<T: Float>(runs: &[SweepRun<T>], path: impl AsRef<Path>) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::Config("no sweep runs to compare".to_string()));
    }
    let days = runs[0].records.len();
    for run in runs {
        if run.records.len() != days {
            return Err(Error::DateMismatch(format!(
                "sweep run {} has {} records, expected {days}",
                run.label,
                run.records.len()
            )));
        }
    }
    let mut out = String::from("date");
    for run in runs {
        let _ = write!(out, ",rt_mean_{}", run.label);
    }
    out.push('\n');
    for day in 0..days {
        let _ = write!(out, "{}", runs[0].records[day].date);
        for run in runs {
            let _ = write!(out, ",{}", run.records[day].rt.mean);
        }
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out)
        .map_err(|e| Error::io(path.as_ref().display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identical_weeks_give_unit_rt() {
        let cases = vec![10.0f64; 20];
        let rt = toyokeizai_rt(&cases);
        for (t, v) in rt.iter().enumerate() {
            if t < 13 {
                assert!(v.is_none());
            } else {
                assert_eq!(v.unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn weekly_ratio_matches_power_oracle() {
        // Last week sums to 200, the week before to 140.
        let mut cases = vec![20.0f64; 7];
        cases.extend(vec![200.0 / 7.0; 7]);
        let rt = toyokeizai_rt(&cases);
        let expected = (200.0f64 / 140.0).powf(5.0 / 7.0);
        assert_relative_eq!(rt[13].unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(rt[13].unwrap(), 1.290, max_relative = 1e-3);
    }

    #[test]
    fn zero_prior_week_is_missing() {
        let mut cases = vec![0.0f64; 7];
        cases.extend(vec![5.0; 10]);
        let rt = toyokeizai_rt(&cases);
        assert!(rt[13].is_none());
        assert!(rt[16].is_some());
    }

    #[test]
    fn short_series_is_all_missing() {
        let cases = vec![5.0f64; 13];
        assert!(toyokeizai_rt(&cases).iter().all(Option::is_none));
    }

    fn default_parts() -> (TwinSpec<f64>, ParamSchedule<f64>) {
        let config = RunConfig::<f64>::default();
        let twin = TwinConfig {
            length_days: 40,
            beta_s_step_day: None,
            beta_s_step_value: None,
            population: 1e9,
            ..TwinConfig::default()
        };
        twin.to_parts(&config).unwrap()
    }

    #[test]
    fn noiseless_twin_reproduces_truth_exactly() {
        let (mut spec, sched) = default_parts();
        spec.noise_sd = 0.0;
        let (obs, truth) = generate_twin(&spec, &sched).unwrap();
        for (day, state) in truth.iter().enumerate() {
            let p = obs.point(day).unwrap();
            assert_eq!(p.hospitalized, state.hospitalized);
            assert_eq!(p.recovered, state.recovered);
            assert_eq!(p.deaths, state.deceased);
        }
    }

    #[test]
    fn twin_observations_are_deterministic_and_monotone() {
        let (spec, sched) = default_parts();
        let (a, _) = generate_twin(&spec, &sched).unwrap();
        let (b, _) = generate_twin(&spec, &sched).unwrap();
        let mut prev_r = 0.0;
        let mut prev_d = 0.0;
        for day in 0..spec.len() {
            let pa = a.point(day).unwrap();
            let pb = b.point(day).unwrap();
            assert_eq!(pa, pb);
            assert!(pa.recovered >= prev_r);
            assert!(pa.deaths >= prev_d);
            prev_r = pa.recovered;
            prev_d = pa.deaths;
        }
    }

    #[test]
    fn perfect_records_score_perfectly() {
        let (mut spec, sched) = default_parts();
        spec.noise_sd = 0.0;
        let (_, truth) = generate_twin(&spec, &sched).unwrap();
        let config = RunConfig::<f64>::default();
        // Fabricate records that match the truth exactly with narrow bands.
        let records: Vec<AnalysisRecord<f64>> = truth
            .iter()
            .enumerate()
            .map(|(day, c)| {
                let date = sched.start_date() + chrono::Duration::days(day as i64);
                let params = sched
                    .params_on(date)
                    .unwrap()
                    .with_beta_s(spec.beta_s[day]);
                let rt = basic_reproduction_number(&params).unwrap();
                let tight = |v: f64| crate::assimilator::Summary {
                    mean: v,
                    lo95: v * 0.98,
                    lo68: v * 0.99,
                    hi68: v * 1.01,
                    hi95: v * 1.02,
                    spread: 0.01,
                };
                let values = [
                    c.exposed.max(1e-3),
                    c.asymptomatic.max(1e-3),
                    c.symptomatic.max(1e-3),
                    c.hospitalized.max(1e-3),
                    c.recovered.max(1e-3),
                    c.deceased.max(1e-3),
                    c.recovered_asymptomatic.max(1e-3),
                    c.recovered_symptomatic.max(1e-3),
                ];
                let mut summaries: Vec<_> = values.iter().map(|v| tight(*v)).collect();
                summaries.push(tight(spec.beta_s[day]));
                let mut rt_summary = tight(rt);
                rt_summary.lo95 = rt - 0.1;
                rt_summary.lo68 = rt - 0.05;
                rt_summary.hi68 = rt + 0.05;
                rt_summary.hi95 = rt + 0.1;
                summaries.push(rt_summary);
                AnalysisRecord::from_summaries(date, day > 0, &summaries)
            })
            .collect();
        let _ = config;
        let report = score_twin(&records, &truth, &spec.beta_s, &sched, 5).unwrap();
        for idx in 0..8 {
            assert!(report.log_rmse[idx] < 1e-12);
            assert_eq!(report.coverage68[idx], 1.0);
            assert_eq!(report.coverage95[idx], 1.0);
        }
        assert_eq!(report.beta_within_10pct, 1.0);
        assert_eq!(report.rt_coverage95, 1.0);
        assert_eq!(report.beta_rel_err.len(), spec.len() - 5);
    }

    #[test]
    fn score_rejects_misaligned_dates() {
        let (spec, sched) = default_parts();
        let (_, truth) = generate_twin(&spec, &sched).unwrap();
        let records: Vec<AnalysisRecord<f64>> = Vec::new();
        assert!(score_twin(&records, &truth, &spec.beta_s, &sched, 0).is_err());
    }

    #[test]
    fn sweep_axis_defaults_match_the_experiment_design() {
        assert_eq!(
            SweepAxis::KRatio.default_values::<f64>(),
            vec![0.1, 0.3, 0.58, 0.8, 1.0]
        );
        let sd = SweepAxis::ObsSd.default_values::<f64>();
        assert_eq!(sd.len(), 5);
        assert_relative_eq!(sd[0], 1.1f64.ln());
        assert_relative_eq!(sd[4], 2.5f64.ln());
        assert_eq!(
            SweepAxis::SymptomaticFraction.default_values::<f64>(),
            vec![0.83, 0.70, 0.50]
        );
        assert_eq!(SweepAxis::ObsSd.label(1.3f64.ln()), "sd1.30");
        assert_eq!(SweepAxis::KRatio.label(0.58), "k0.58");
    }

    proptest! {
        #[test]
        fn toyokeizai_is_scale_invariant(
            cases in proptest::collection::vec(0.5..100.0f64, 14..30),
            scale_pow in -3i32..6,
        ) {
            // Powers of two scale exactly in floating point.
            let c = 2.0f64.powi(scale_pow);
            let scaled: Vec<f64> = cases.iter().map(|v| c * v).collect();
            let a = toyokeizai_rt(&cases);
            let b = toyokeizai_rt(&scaled);
            for (x, y) in a.iter().zip(&b) {
                match (x, y) {
                    (None, None) => {}
                    (Some(x), Some(y)) => prop_assert_eq!(x, y),
                    _ => prop_assert!(false, "definedness changed under scaling"),
                }
            }
        }
    }
}
