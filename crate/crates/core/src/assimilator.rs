//! The daily forecast-analysis cycle: spin-up initialization, per-member
//! parameter perturbation, the observation operator, and production of the
//! analysis time series.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::etkf::{additive_inflation, etkf_analysis, Ensemble, ObsErrorModel};
use crate::integrator::{
    advance_compartments, integrate_one_day_with, state_index, LogState, DEFAULT_LOG_FLOOR,
    SUBSTEPS_PER_DAY,
};
use crate::io::{ObsPoint, ObservationSeries};
use crate::model::{
    self, effective_rt, estimate_removal_rates, smooth7, Compartments, MedicalParams,
    ParamSchedule,
};
use crate::scalar::Float;

/// Everything needed to reproduce one assimilation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    /// Region label used in output names.
    pub region: String,
    /// Total population of the region.
    pub population: T,
    /// First assimilated day; must have an observation.
    pub start_date: NaiveDate,
    /// Last assimilated day; `None` means the end of the observations.
    pub end_date: Option<NaiveDate>,
    /// Ensemble size.
    pub ensemble_size: usize,
    /// Log-scale observation error standard deviation.
    pub obs_sd: T,
    /// Ratio between asymptomatic and symptomatic transmission.
    pub k_ratio: T,
    /// Fraction of infectious individuals that develop symptoms.
    pub symptomatic_fraction: T,
    /// Multiplicative inflation factor, `>= 1`.
    pub rho: T,
    /// Additive inflation fraction, in `(0, 1)`.
    pub alpha: T,
    /// Seed of the run's random stream.
    pub seed: u64,
    /// Relative standard deviation of the per-member daily parameter
    /// perturbations.
    pub param_jitter: T,
    /// Length of the spin-up integration, days.
    pub spinup_days: u32,
    /// Seed infections at the start of spin-up.
    pub spinup_exposed: T,
    pub spinup_asymptomatic: T,
    pub spinup_symptomatic: T,
    /// Trial grid for the spin-up transmission coefficient.
    pub beta_grid_min: T,
    pub beta_grid_max: T,
    pub beta_grid_step: T,
    /// Log-transform floor, individuals.
    pub log_floor: T,
    /// Initial ensemble noise: per-coordinate log-scale sd, and the sd of the
    /// log transmission coefficient. The latter is a guess; the source
    /// material does not state an initial parameter spread.
    pub init_state_sd: T,
    pub init_beta_sd: T,
    /// Use member percentiles instead of mean +/- sd for the CI bounds.
    pub percentile_ci: bool,
    /// Date the onset-to-report duration switches.
    pub tau_switch_date: NaiveDate,
}

impl<T: Float> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            region: "tokyo".to_string(),
            population: T::of(13_955_000.0),
            start_date: NaiveDate::from_ymd_opt(2020, 3, 6).expect("valid date"),
            end_date: None,
            ensemble_size: 50,
            obs_sd: T::of(1.3).ln(),
            k_ratio: T::of(model::DEFAULT_BETA_RATIO),
            symptomatic_fraction: T::of(model::DEFAULT_SYMPTOMATIC_FRACTION),
            rho: T::of(1.03),
            alpha: T::of(0.12),
            seed: 31,
            param_jitter: T::of(0.1),
            spinup_days: 14,
            spinup_exposed: T::of(10.0),
            spinup_asymptomatic: T::of(10.0),
            spinup_symptomatic: T::of(1.0),
            beta_grid_min: T::of(0.05),
            beta_grid_max: T::of(2.0),
            beta_grid_step: T::of(0.05),
            log_floor: T::of(DEFAULT_LOG_FLOOR),
            init_state_sd: T::of(0.2),
            init_beta_sd: T::of(0.1),
            percentile_ci: false,
            tau_switch_date: model::default_tau_switch_date(),
        }
    }
}

impl<T: Float> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(end) = self.end_date {
            if self.start_date >= end {
                return Err(Error::Config(format!(
                    "start_date {} must precede end_date {end}",
                    self.start_date
                )));
            }
        }
        if self.ensemble_size < 2 {
            return Err(Error::Config(format!(
                "ensemble_size must be at least 2, got {}",
                self.ensemble_size
            )));
        }
        if !self.obs_sd.finite() || self.obs_sd <= T::zero() {
            return Err(Error::Config(format!(
                "observation sd must be positive, got {}",
                self.obs_sd
            )));
        }
        if !self.population.finite() || self.population <= T::zero() {
            return Err(Error::Config("population must be positive".to_string()));
        }
        if self.rho < T::one() {
            return Err(Error::Config(format!(
                "rho must be at least 1, got {}",
                self.rho
            )));
        }
        if self.alpha <= T::zero() || self.alpha >= T::one() {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.k_ratio <= T::zero() || self.k_ratio > T::one() {
            return Err(Error::Config(format!(
                "k_ratio must lie in (0, 1], got {}",
                self.k_ratio
            )));
        }
        if self.symptomatic_fraction <= T::zero() || self.symptomatic_fraction > T::one() {
            return Err(Error::Config(format!(
                "symptomatic_fraction must lie in (0, 1], got {}",
                self.symptomatic_fraction
            )));
        }
        if self.param_jitter < T::zero() || !self.param_jitter.finite() {
            return Err(Error::Config("param_jitter must be nonnegative".to_string()));
        }
        if self.beta_grid_step <= T::zero() || self.beta_grid_min <= T::zero()
            || self.beta_grid_max < self.beta_grid_min
        {
            return Err(Error::Config(
                "beta grid must satisfy 0 < min <= max with a positive step".to_string(),
            ));
        }
        if self.log_floor <= T::zero() {
            return Err(Error::Config("log_floor must be positive".to_string()));
        }
        if self.spinup_days == 0 {
            return Err(Error::Config("spinup_days must be positive".to_string()));
        }
        Ok(())
    }

    /// The spin-up transmission-coefficient candidates.
    pub fn beta_grid(&self) -> Vec<T> {
        let mut grid = Vec::new();
        let mut beta = self.beta_grid_min;
        let fudge = self.beta_grid_step * T::of(0.5);
        while beta <= self.beta_grid_max + fudge {
            grid.push(beta);
            beta += self.beta_grid_step;
        }
        grid
    }

    /// The run's random stream.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed)
    }

    /// Builds the dated parameter schedule from the observations: removal
    /// rates estimated day by day, then smoothed with the seven-day window.
    pub fn schedule(&self, obs: &ObservationSeries<T>) -> Result<ParamSchedule<T>> {
        let rates = estimate_removal_rates(obs)?;
        let gamma_h = smooth7(&rates.gamma_h);
        let gamma_d = smooth7(&rates.gamma_d);
        let base = MedicalParams::from_fractions(
            self.beta_grid_min,
            self.k_ratio,
            self.symptomatic_fraction,
            model::tau_h_on(obs.start_date(), self.tau_switch_date),
            gamma_h[0],
            gamma_d[0],
        )?;
        ParamSchedule::new(
            base,
            obs.start_date(),
            self.tau_switch_date,
            gamma_h,
            gamma_d,
            self.symptomatic_fraction,
        )
    }
}

/// Five-number summary of one scalar quantity across the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub mean: T,
    pub lo95: T,
    pub lo68: T,
    pub hi68: T,
    pub hi95: T,
    /// Ensemble standard deviation in the scale the quantity is tracked in
    /// (log scale for compartments and the transmission coefficient, linear
    /// for the reproduction number).
    pub spread: T,
}

/// Per-day posterior summary of the analysis ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRecord<T> {
    pub date: NaiveDate,
    /// Whether an observation was assimilated this day (false for the
    /// spin-up day and for observation gaps).
    pub assimilated: bool,
    pub exposed: Summary<T>,
    pub asymptomatic: Summary<T>,
    pub symptomatic: Summary<T>,
    pub hospitalized: Summary<T>,
    pub recovered: Summary<T>,
    pub deceased: Summary<T>,
    pub recovered_asymptomatic: Summary<T>,
    pub recovered_symptomatic: Summary<T>,
    pub beta_s: Summary<T>,
    pub rt: Summary<T>,
}

impl<T: Float> AnalysisRecord<T> {
    /// Quantities in output-schema order.
    pub fn quantities(&self) -> [(&'static str, &Summary<T>); 10] {
        [
            ("e", &self.exposed),
            ("ia", &self.asymptomatic),
            ("is", &self.symptomatic),
            ("h", &self.hospitalized),
            ("r", &self.recovered),
            ("d", &self.deceased),
            ("ra", &self.recovered_asymptomatic),
            ("rs", &self.recovered_symptomatic),
            ("beta_s", &self.beta_s),
            ("rt", &self.rt),
        ]
    }

    /// Rebuilds a record from summaries in output-schema order.
    pub fn from_summaries(date: NaiveDate, assimilated: bool, summaries: &[Summary<T>]) -> Self {
        assert_eq!(summaries.len(), 10, "expected one summary per quantity");
        Self {
            date,
            assimilated,
            exposed: summaries[0],
            asymptomatic: summaries[1],
            symptomatic: summaries[2],
            hospitalized: summaries[3],
            recovered: summaries[4],
            deceased: summaries[5],
            recovered_asymptomatic: summaries[6],
            recovered_symptomatic: summaries[7],
            beta_s: summaries[8],
            rt: summaries[9],
        }
    }
}

/// Projection of the assimilated state onto the observed coordinates
/// `(h, r, d)`.
pub fn observation_operator<T: Float>(x: &LogState<T>) -> [T; 3] {
    [
        x.coordinate(state_index::HOSPITALIZED),
        x.coordinate(state_index::RECOVERED),
        x.coordinate(state_index::DECEASED),
    ]
}

/// The same projection as a 3 x 9 matrix for the filter.
pub fn observation_matrix<T: Float>() -> DMatrix<T> {
    let mut h = DMatrix::zeros(3, state_index::DIM);
    h[(0, state_index::HOSPITALIZED)] = T::one();
    h[(1, state_index::RECOVERED)] = T::one();
    h[(2, state_index::DECEASED)] = T::one();
    h
}

fn log_obs_vector<T: Float>(point: &ObsPoint<T>, floor: T) -> DVector<T> {
    DVector::from_row_slice(&[
        point.hospitalized.max(floor).ln(),
        point.recovered.max(floor).ln(),
        point.deaths.max(floor).ln(),
    ])
}

/// Picks initial conditions by trying each transmission coefficient on the
/// grid: a short run from a small seed under the rates in force on the first
/// assimilated day, scored by squared log distance to that day's
/// observations. The best trajectory's end state becomes the ensemble
/// center; members add independent Gaussian noise in log space.
pub fn spinup_initialize<T: Float, R: Rng + ?Sized>(
    config: &RunConfig<T>,
    sched: &ParamSchedule<T>,
    day0: &ObsPoint<T>,
    rng: &mut R,
) -> Result<Ensemble<T>> {
    if day0.hospitalized <= T::zero() || day0.recovered <= T::zero() || day0.deaths <= T::zero() {
        return Err(Error::SpinupFailed(format!(
            "day-zero observations must be positive, got H={} R={} D={}",
            day0.hospitalized, day0.recovered, day0.deaths
        )));
    }
    let seed_state = Compartments::with_population(
        config.population,
        config.spinup_exposed,
        config.spinup_asymptomatic,
        config.spinup_symptomatic,
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
    )
    .map_err(|e| Error::SpinupFailed(e.to_string()))?;
    let params = sched.params_on(config.start_date)?;
    let floor = config.log_floor;
    let target = [day0.hospitalized, day0.recovered, day0.deaths];

    let mut best: Option<(T, T, Compartments<T>)> = None;
    let mut reached_h = 0usize;
    for beta in config.beta_grid() {
        let p = params.with_beta_s(beta);
        let mut state = seed_state.clone();
        let mut collapsed = false;
        for _ in 0..config.spinup_days {
            match advance_compartments(&state, &p, SUBSTEPS_PER_DAY) {
                Ok(next) => state = next,
                Err(_) => {
                    collapsed = true;
                    break;
                }
            }
        }
        if collapsed || state.hospitalized < T::one() {
            continue;
        }
        reached_h += 1;
        let simulated = [state.hospitalized, state.recovered, state.deceased];
        let cost: T = simulated
            .iter()
            .zip(target)
            .map(|(s, o)| {
                let diff = s.max(floor).ln() - o.max(floor).ln();
                diff * diff
            })
            .sum();
        let better = match &best {
            None => true,
            Some((best_cost, _, _)) => cost < *best_cost,
        };
        if better {
            best = Some((cost, beta, state.clone()));
        }
    }

    let Some((_, beta, center)) = best else {
        return Err(Error::SpinupFailed(format!(
            "no grid candidate reached at least one hospitalized individual \
             after {} days ({} candidates tried, 0 usable)",
            config.spinup_days,
            config.beta_grid().len().max(reached_h)
        )));
    };

    let center_log = LogState::to_log(&center, beta, floor)?;
    let center_vec = center_log.to_vector();
    let mut members = Vec::with_capacity(config.ensemble_size);
    for _ in 0..config.ensemble_size {
        let mut v = center_vec.clone();
        for i in 0..state_index::LOG_BETA_S {
            v[i] += config.init_state_sd * T::std_normal(rng);
        }
        v[state_index::LOG_BETA_S] += config.init_beta_sd * T::std_normal(rng);
        members.push(v);
    }
    Ensemble::new(members)
}

/// One zero-mean relative perturbation per medical rate, clamped at zero.
/// The transmission coefficients are not touched (they live in the state).
/// Draws happen in a fixed field order so runs stay reproducible.
pub(crate) fn perturb_params<T: Float, R: Rng + ?Sized>(
    params: &MedicalParams<T>,
    jitter: T,
    rng: &mut R,
) -> MedicalParams<T> {
    let mut perturb = |value: T| (value + jitter * value * T::std_normal(rng)).max(T::zero());
    let mut p = params.clone();
    p.epsilon = perturb(p.epsilon);
    p.delta = perturb(p.delta);
    p.tau_h = perturb(p.tau_h);
    p.gamma_a = perturb(p.gamma_a);
    p.gamma_s = perturb(p.gamma_s);
    p.gamma_h = perturb(p.gamma_h);
    p.gamma_d = perturb(p.gamma_d);
    p
}

/// One-day ensemble forecast: each member independently perturbs the day's
/// rates (zero-mean, relative sd `param_jitter`, clamped at zero) and
/// integrates one day; the log transmission coefficient persists unchanged.
pub fn forecast_step<T: Float, R: Rng + ?Sized>(
    ens: &Ensemble<T>,
    sched: &ParamSchedule<T>,
    date: NaiveDate,
    config: &RunConfig<T>,
    rng: &mut R,
) -> Result<Ensemble<T>> {
    let params = sched.params_on(date)?;
    let mut members = Vec::with_capacity(ens.size());
    for (i, member) in ens.members().iter().enumerate() {
        let state = LogState::from_vector(member, config.population, config.log_floor)
            .map_err(|e| Error::StateCollapse(format!("member {i} on {date}: {e}")))?;
        let perturbed = perturb_params(&params, config.param_jitter, rng);
        let next = integrate_one_day_with(&state, &perturbed)
            .map_err(|e| Error::StateCollapse(format!("member {i} on {date}: {e}")))?;
        members.push(next.to_vector());
    }
    Ensemble::new(members)
}

fn mean_and_sd<T: Float>(values: &[T]) -> (T, T) {
    let n = T::of(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let var = values
        .iter()
        .map(|v| (*v - mean) * (*v - mean))
        .sum::<T>()
        / (n - T::one());
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_sorted<T: Float>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * w
}

fn summary_from_values<T: Float>(values: &[T], log_scale: bool, percentile: bool) -> Summary<T> {
    let (mean, sd) = mean_and_sd(values);
    let (lo95, lo68, hi68, hi95) = if percentile {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        (
            quantile_sorted(&sorted, 0.025),
            quantile_sorted(&sorted, 0.16),
            quantile_sorted(&sorted, 0.84),
            quantile_sorted(&sorted, 0.975),
        )
    } else {
        let two = T::of(2.0);
        (
            mean - two * sd,
            mean - sd,
            mean + sd,
            mean + two * sd,
        )
    };
    if log_scale {
        Summary {
            mean: mean.exp(),
            lo95: lo95.exp(),
            lo68: lo68.exp(),
            hi68: hi68.exp(),
            hi95: hi95.exp(),
            spread: sd,
        }
    } else {
        Summary {
            mean,
            lo95,
            lo68,
            hi68,
            hi95,
            spread: sd,
        }
    }
}

/// Builds the per-day record from an analysis ensemble.
///
/// Compartments and the transmission coefficient are summarized in log space
/// (the bounds are `exp(mean +/- sd)` and `exp(mean +/- 2 sd)`); the
/// reproduction number is summarized in linear space.
pub fn build_record<T: Float>(
    ens: &Ensemble<T>,
    date: NaiveDate,
    params: &MedicalParams<T>,
    config: &RunConfig<T>,
    assimilated: bool,
) -> Result<AnalysisRecord<T>> {
    let mut summaries = Vec::with_capacity(10);
    for idx in 0..state_index::LOG_BETA_S {
        summaries.push(summary_from_values(
            &ens.coordinate(idx),
            true,
            config.percentile_ci,
        ));
    }
    summaries.push(summary_from_values(
        &ens.coordinate(state_index::LOG_BETA_S),
        true,
        config.percentile_ci,
    ));
    let betas: Vec<T> = ens
        .coordinate(state_index::LOG_BETA_S)
        .iter()
        .map(|b| b.exp())
        .collect();
    let rts = effective_rt(&betas, params)?;
    summaries.push(summary_from_values(&rts, false, config.percentile_ci));
    Ok(AnalysisRecord::from_summaries(date, assimilated, &summaries))
}

/// Runs the full daily cycle over the configured window and returns one
/// record per day.
///
/// Day zero records the spin-up ensemble. Every following day: forecast with
/// the previous day's rates, additive inflation, then—when the day has an
/// observation—the ETKF analysis against the log observations.
pub fn assimilate<T: Float>(
    config: &RunConfig<T>,
    obs: &ObservationSeries<T>,
) -> Result<Vec<AnalysisRecord<T>>> {
    config.validate()?;
    let start = config.start_date;
    if obs.index_of(start).is_none() {
        return Err(Error::ObsOutOfRange { date: start });
    }
    let end = match config.end_date {
        Some(end) => {
            if obs.index_of(end).is_none() {
                return Err(Error::ObsOutOfRange { date: end });
            }
            end
        }
        None => obs.end_date(),
    };
    if start >= end {
        return Err(Error::Config(format!(
            "assimilation window [{start}, {end}] is empty"
        )));
    }
    let day0 = obs
        .at_date(start)
        .ok_or(Error::ObsOutOfRange { date: start })?
        .clone();

    let sched = config.schedule(obs)?;
    let obs_matrix = observation_matrix::<T>();
    let err_model = ObsErrorModel::uniform(config.obs_sd, 3)?;
    let mut rng = config.rng();

    let mut ens = spinup_initialize(config, &sched, &day0, &mut rng)?;
    let mut records = Vec::new();
    records.push(build_record(
        &ens,
        start,
        &sched.params_on(start)?,
        config,
        false,
    )?);

    let days = end.signed_duration_since(start).num_days();
    for offset in 1..=days {
        let date = start + chrono::Duration::days(offset);
        let previous = date - chrono::Duration::days(1);
        ens = forecast_step(&ens, &sched, previous, config, &mut rng)?;
        ens = additive_inflation(&ens, config.alpha, &mut rng);
        let mut assimilated = false;
        if let Some(point) = obs.at_date(date) {
            let y = log_obs_vector(point, config.log_floor);
            ens = etkf_analysis(&ens, &y, &obs_matrix, &err_model, config.rho)
                .map_err(|e| Error::StateCollapse(format!("analysis on {date}: {e}")))?;
            assimilated = true;
        }
        records.push(build_record(
            &ens,
            date,
            &sched.params_on(date)?,
            config,
            assimilated,
        )?);
    }
    Ok(records)
}
