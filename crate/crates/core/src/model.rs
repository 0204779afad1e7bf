//! Extended SEIR dynamics, reproduction-number formulas, and the
//! observation-derived removal-rate series.
//!
//! The population is split into nine compartments: susceptible, exposed,
//! infectious without symptoms (covering both never-symptomatic and
//! pre-symptomatic individuals), infectious with symptoms, hospitalized (or
//! otherwise registered and isolated), recovered from hospital, deceased,
//! and the two unregistered recovered pools fed by the infectious
//! compartments.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::io::ObservationSeries;
use crate::scalar::Float;

/// Incubation duration in days (not yet contagious).
pub const INCUBATION_DAYS: f64 = 3.0;
/// Days spent infectious before symptom onset.
pub const PRESYMPTOMATIC_DAYS: f64 = 2.0;
/// Recovery duration for never-symptomatic cases, days.
pub const ASYMPTOMATIC_RECOVERY_DAYS: f64 = 9.0;
/// Recovery duration for undetected symptomatic cases, days.
pub const UNDETECTED_RECOVERY_DAYS: f64 = 7.0;
/// Fraction of symptomatic cases never registered by health services.
pub const UNDETECTED_SYMPTOMATIC_FRACTION: f64 = 0.22;
/// Fraction of symptomatic cases that end up registered.
pub const DETECTED_SYMPTOMATIC_FRACTION: f64 = 0.78;
/// Days from symptom onset to registration before the June 2020 policy change.
pub const ONSET_TO_REPORT_DAYS_EARLY: f64 = 8.3;
/// Days from symptom onset to registration from June 2020 on.
pub const ONSET_TO_REPORT_DAYS_LATE: f64 = 5.2;
/// Default ratio between asymptomatic and symptomatic transmission coefficients.
pub const DEFAULT_BETA_RATIO: f64 = 0.58;
/// Default fraction of infectious individuals that develop symptoms.
pub const DEFAULT_SYMPTOMATIC_FRACTION: f64 = 0.83;

/// Date from which the shorter onset-to-report duration applies.
pub fn default_tau_switch_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 6, 1).expect("valid date")
}

/// Hospitalization rate before the reporting policy change.
pub fn tau_h_early<T: Float>() -> T {
    T::of(DETECTED_SYMPTOMATIC_FRACTION / ONSET_TO_REPORT_DAYS_EARLY)
}

/// Hospitalization rate from the switch date on.
pub fn tau_h_late<T: Float>() -> T {
    T::of(DETECTED_SYMPTOMATIC_FRACTION / ONSET_TO_REPORT_DAYS_LATE)
}

/// Date-dependent hospitalization rate: the early value strictly before
/// `switch`, the late value from `switch` inclusive.
pub fn tau_h_on<T: Float>(date: NaiveDate, switch: NaiveDate) -> T {
    if date < switch {
        tau_h_early()
    } else {
        tau_h_late()
    }
}

/// Nonnegative head counts for the nine compartments plus the fixed total
/// population.
///
/// Invariants, checked at construction: every field is finite and `>= 0`, and
/// the nine compartments sum to `population` within a relative `1e-9`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compartments<T> {
    pub susceptible: T,
    pub exposed: T,
    pub asymptomatic: T,
    pub symptomatic: T,
    pub hospitalized: T,
    pub recovered: T,
    pub deceased: T,
    pub recovered_asymptomatic: T,
    pub recovered_symptomatic: T,
    pub population: T,
}

impl<T: Float> Compartments<T> {
    /// Builds a state from the nine counts; the population is their sum.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        susceptible: T,
        exposed: T,
        asymptomatic: T,
        symptomatic: T,
        hospitalized: T,
        recovered: T,
        deceased: T,
        recovered_asymptomatic: T,
        recovered_symptomatic: T,
    ) -> Result<Self> {
        let fields = [
            susceptible,
            exposed,
            asymptomatic,
            symptomatic,
            hospitalized,
            recovered,
            deceased,
            recovered_asymptomatic,
            recovered_symptomatic,
        ];
        let population = fields.iter().copied().sum();
        Self::from_array(fields, population)
    }

    /// Builds a state from the total population and the eight non-susceptible
    /// counts; the susceptible count is recovered from conservation.
    #[allow(clippy::too_many_arguments)]
    pub fn with_population(
        population: T,
        exposed: T,
        asymptomatic: T,
        symptomatic: T,
        hospitalized: T,
        recovered: T,
        deceased: T,
        recovered_asymptomatic: T,
        recovered_symptomatic: T,
    ) -> Result<Self> {
        let rest: T = [
            exposed,
            asymptomatic,
            symptomatic,
            hospitalized,
            recovered,
            deceased,
            recovered_asymptomatic,
            recovered_symptomatic,
        ]
        .iter()
        .copied()
        .sum();
        let susceptible = population - rest;
        Self::from_array(
            [
                susceptible,
                exposed,
                asymptomatic,
                symptomatic,
                hospitalized,
                recovered,
                deceased,
                recovered_asymptomatic,
                recovered_symptomatic,
            ],
            population,
        )
    }

    /// Builds a state from an array in field order, validating the invariants
    /// against the supplied population. Values in `[-1e-9*population, 0)` are
    /// treated as integration round-off and clamped to zero.
    pub fn from_array(mut values: [T; 9], population: T) -> Result<Self> {
        if !population.finite() || population <= T::zero() {
            return Err(Error::InvalidCompartments(format!(
                "population must be positive and finite, got {population}"
            )));
        }
        let tol = T::of(1e-9) * population;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.finite() {
                return Err(Error::InvalidCompartments(format!(
                    "compartment {i} is not finite"
                )));
            }
            if *v < T::zero() {
                if *v < -tol {
                    return Err(Error::InvalidCompartments(format!(
                        "compartment {i} is negative: {v}"
                    )));
                }
                *v = T::zero();
            }
        }
        let sum: T = values.iter().copied().sum();
        if (sum - population).abs() > tol {
            return Err(Error::InvalidCompartments(format!(
                "compartments sum to {sum}, expected population {population}"
            )));
        }
        Ok(Self {
            susceptible: values[0],
            exposed: values[1],
            asymptomatic: values[2],
            symptomatic: values[3],
            hospitalized: values[4],
            recovered: values[5],
            deceased: values[6],
            recovered_asymptomatic: values[7],
            recovered_symptomatic: values[8],
            population,
        })
    }

    /// The nine counts in field order.
    pub fn as_array(&self) -> [T; 9] {
        [
            self.susceptible,
            self.exposed,
            self.asymptomatic,
            self.symptomatic,
            self.hospitalized,
            self.recovered,
            self.deceased,
            self.recovered_asymptomatic,
            self.recovered_symptomatic,
        ]
    }

    /// Total infectious pressure carriers: exposed plus both infectious pools.
    pub fn active_infections(&self) -> T {
        self.exposed + self.asymptomatic + self.symptomatic
    }
}

/// Per-day rates of the extended SEIR system.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentRates<T> {
    pub d_susceptible: T,
    pub d_exposed: T,
    pub d_asymptomatic: T,
    pub d_symptomatic: T,
    pub d_hospitalized: T,
    pub d_recovered: T,
    pub d_deceased: T,
    pub d_recovered_asymptomatic: T,
    pub d_recovered_symptomatic: T,
}

impl<T: Float> CompartmentRates<T> {
    pub fn as_array(&self) -> [T; 9] {
        [
            self.d_susceptible,
            self.d_exposed,
            self.d_asymptomatic,
            self.d_symptomatic,
            self.d_hospitalized,
            self.d_recovered,
            self.d_deceased,
            self.d_recovered_asymptomatic,
            self.d_recovered_symptomatic,
        ]
    }

    /// Algebraically zero for the closed system; useful as a test probe.
    pub fn sum(&self) -> T {
        self.as_array().iter().copied().sum()
    }
}

/// Rate constants of the extended SEIR system.
///
/// `beta_a` is not stored: it is tied to `beta_s` by the fixed ratio
/// `k_ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct MedicalParams<T> {
    /// Transmission coefficient of symptomatic cases, per day.
    pub beta_s: T,
    /// Ratio between asymptomatic and symptomatic transmission, in `(0, 1]`.
    pub k_ratio: T,
    /// Incubation exit rate, per day.
    pub epsilon: T,
    /// Symptom-onset rate out of the asymptomatic pool, per day.
    pub delta: T,
    /// Registration (hospitalization) rate of symptomatic cases, per day.
    pub tau_h: T,
    /// Recovery rate of never-symptomatic cases, per day.
    pub gamma_a: T,
    /// Recovery rate of undetected symptomatic cases, per day.
    pub gamma_s: T,
    /// Hospital discharge (recovery) rate, per day.
    pub gamma_h: T,
    /// Hospital fatality rate, per day.
    pub gamma_d: T,
}

impl<T: Float> MedicalParams<T> {
    /// Validates ranges: every rate nonnegative and finite, `k_ratio` in
    /// `(0, 1]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        beta_s: T,
        k_ratio: T,
        epsilon: T,
        delta: T,
        tau_h: T,
        gamma_a: T,
        gamma_s: T,
        gamma_h: T,
        gamma_d: T,
    ) -> Result<Self> {
        let rates = [
            ("beta_s", beta_s),
            ("epsilon", epsilon),
            ("delta", delta),
            ("tau_h", tau_h),
            ("gamma_a", gamma_a),
            ("gamma_s", gamma_s),
            ("gamma_h", gamma_h),
            ("gamma_d", gamma_d),
        ];
        for (name, value) in rates {
            if !value.finite() || value < T::zero() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be a nonnegative finite rate, got {value}"
                )));
            }
        }
        if !k_ratio.finite() || k_ratio <= T::zero() || k_ratio > T::one() {
            return Err(Error::InvalidParams(format!(
                "k_ratio must lie in (0, 1], got {k_ratio}"
            )));
        }
        Ok(Self {
            beta_s,
            k_ratio,
            epsilon,
            delta,
            tau_h,
            gamma_a,
            gamma_s,
            gamma_h,
            gamma_d,
        })
    }

    /// Builds the rate set from the symptomatic fraction and the standard
    /// durations, so that the proportions composing `delta` and `gamma_a`
    /// always sum to one.
    pub fn from_fractions(
        beta_s: T,
        k_ratio: T,
        symptomatic_fraction: T,
        tau_h: T,
        gamma_h: T,
        gamma_d: T,
    ) -> Result<Self> {
        if !symptomatic_fraction.finite()
            || symptomatic_fraction <= T::zero()
            || symptomatic_fraction > T::one()
        {
            return Err(Error::InvalidParams(format!(
                "symptomatic fraction must lie in (0, 1], got {symptomatic_fraction}"
            )));
        }
        let delta = symptomatic_fraction / T::of(PRESYMPTOMATIC_DAYS);
        let gamma_a = (T::one() - symptomatic_fraction) / T::of(ASYMPTOMATIC_RECOVERY_DAYS);
        Self::new(
            beta_s,
            k_ratio,
            T::of(1.0 / INCUBATION_DAYS),
            delta,
            tau_h,
            gamma_a,
            T::of(UNDETECTED_SYMPTOMATIC_FRACTION / UNDETECTED_RECOVERY_DAYS),
            gamma_h,
            gamma_d,
        )
    }

    /// Asymptomatic transmission coefficient `k_ratio * beta_s`.
    pub fn beta_a(&self) -> T {
        self.k_ratio * self.beta_s
    }

    /// Same rates with the symptomatic transmission coefficient replaced.
    pub fn with_beta_s(&self, beta_s: T) -> Self {
        Self {
            beta_s,
            ..self.clone()
        }
    }
}

/// Time-indexed parameter set: constant rates plus the date-switched `tau_h`
/// and the per-day smoothed removal-rate series.
#[derive(Debug, Clone)]
pub struct ParamSchedule<T> {
    base: MedicalParams<T>,
    start: NaiveDate,
    tau_switch: NaiveDate,
    gamma_h: Vec<T>,
    gamma_d: Vec<T>,
    symptomatic_fraction: T,
}

impl<T: Float> ParamSchedule<T> {
    /// One `gamma_h`/`gamma_d` entry per assimilation day starting at `start`.
    pub fn new(
        base: MedicalParams<T>,
        start: NaiveDate,
        tau_switch: NaiveDate,
        gamma_h: Vec<T>,
        gamma_d: Vec<T>,
        symptomatic_fraction: T,
    ) -> Result<Self> {
        if gamma_h.is_empty() || gamma_h.len() != gamma_d.len() {
            return Err(Error::InvalidParams(format!(
                "removal-rate series must be nonempty and equally long, got {} and {}",
                gamma_h.len(),
                gamma_d.len()
            )));
        }
        for (name, series) in [("gamma_h", &gamma_h), ("gamma_d", &gamma_d)] {
            if let Some((i, v)) = series
                .iter()
                .enumerate()
                .find(|(_, v)| !v.finite() || **v < T::zero())
            {
                return Err(Error::InvalidParams(format!(
                    "{name}[{i}] must be a nonnegative finite rate, got {v}"
                )));
            }
        }
        Ok(Self {
            base,
            start,
            tau_switch,
            gamma_h,
            gamma_d,
            symptomatic_fraction,
        })
    }

    /// Schedule with constant removal rates over `days` days.
    pub fn constant(
        base: MedicalParams<T>,
        start: NaiveDate,
        tau_switch: NaiveDate,
        gamma_h: T,
        gamma_d: T,
        days: usize,
        symptomatic_fraction: T,
    ) -> Result<Self> {
        Self::new(
            base,
            start,
            tau_switch,
            vec![gamma_h; days],
            vec![gamma_d; days],
            symptomatic_fraction,
        )
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start + chrono::Duration::days(self.gamma_h.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.gamma_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_h.is_empty()
    }

    pub fn tau_switch_date(&self) -> NaiveDate {
        self.tau_switch
    }

    pub fn symptomatic_fraction(&self) -> T {
        self.symptomatic_fraction
    }

    /// The rates in force on `date`: base rates, the date-dependent `tau_h`,
    /// and the day's smoothed `gamma_h`/`gamma_d`.
    pub fn params_on(&self, date: NaiveDate) -> Result<MedicalParams<T>> {
        let offset = date.signed_duration_since(self.start).num_days();
        if offset < 0 || offset as usize >= self.gamma_h.len() {
            return Err(Error::ScheduleOutOfRange { date });
        }
        let mut params = self.base.clone();
        params.tau_h = tau_h_on(date, self.tau_switch);
        params.gamma_h = self.gamma_h[offset as usize];
        params.gamma_d = self.gamma_d[offset as usize];
        Ok(params)
    }
}

/// Right-hand side of the extended SEIR system, per day.
///
/// The flows are: susceptibles are infected by both infectious pools,
/// incubate, become infectious without symptoms, either recover unregistered
/// or develop symptoms, then either recover unregistered or get registered,
/// and finally leave the registered pool by recovery or death. The nine
/// rates cancel algebraically, so the total population is conserved.
pub fn derivative<T: Float>(c: &Compartments<T>, p: &MedicalParams<T>) -> CompartmentRates<T> {
    let rates = derivative_array(&c.as_array(), c.population, p);
    CompartmentRates {
        d_susceptible: rates[0],
        d_exposed: rates[1],
        d_asymptomatic: rates[2],
        d_symptomatic: rates[3],
        d_hospitalized: rates[4],
        d_recovered: rates[5],
        d_deceased: rates[6],
        d_recovered_asymptomatic: rates[7],
        d_recovered_symptomatic: rates[8],
    }
}

/// Array form of [`derivative`] used by the integrator's inner loop.
pub(crate) fn derivative_array<T: Float>(x: &[T; 9], population: T, p: &MedicalParams<T>) -> [T; 9] {
    let [s, e, ia, is, h, _r, _d, _ra, _rs] = *x;
    let infection = (p.beta_a() * ia + p.beta_s * is) * s / population;
    let incubation = p.epsilon * e;
    let onset = p.delta * ia;
    let registration = p.tau_h * is;
    let recovery_asymptomatic = p.gamma_a * ia;
    let recovery_symptomatic = p.gamma_s * is;
    let discharge = p.gamma_h * h;
    let death = p.gamma_d * h;
    [
        -infection,
        infection - incubation,
        incubation - onset - recovery_asymptomatic,
        onset - registration - recovery_symptomatic,
        registration - discharge - death,
        discharge,
        death,
        recovery_asymptomatic,
        recovery_symptomatic,
    ]
}

/// Basic reproduction number of the extended system:
/// `beta_a/(delta + gamma_a) + beta_s*delta/((delta + gamma_a)(gamma_s + tau_h))`.
///
/// The first term counts infections seeded while infectious without symptoms,
/// the second those seeded during the symptomatic stage, weighted by the
/// fraction that reaches it.
pub fn basic_reproduction_number<T: Float>(p: &MedicalParams<T>) -> Result<T> {
    let exit_asymptomatic = p.delta + p.gamma_a;
    let exit_symptomatic = p.gamma_s + p.tau_h;
    if exit_asymptomatic <= T::zero() {
        return Err(Error::Domain(
            "delta + gamma_a must be positive".to_string(),
        ));
    }
    if exit_symptomatic <= T::zero() {
        return Err(Error::Domain(
            "gamma_s + tau_h must be positive".to_string(),
        ));
    }
    Ok(p.beta_a() / exit_asymptomatic
        + p.beta_s * p.delta / (exit_asymptomatic * exit_symptomatic))
}

/// Member-wise effective reproduction number: applies the reproduction-number
/// formula to each transmission coefficient with the rates in force at the
/// evaluation time.
pub fn effective_rt<T: Float>(beta_s_members: &[T], p_at_t: &MedicalParams<T>) -> Result<Vec<T>> {
    beta_s_members
        .iter()
        .map(|&beta_s| basic_reproduction_number(&p_at_t.with_beta_s(beta_s)))
        .collect()
}

/// Raw per-day removal rates derived from the observations.
#[derive(Debug, Clone)]
pub struct RemovalRates<T> {
    /// Recovery rate `(R(t+1) - R(t)) / H(t)` per day.
    pub gamma_h: Vec<T>,
    /// Fatality rate `(D(t+1) - D(t)) / H(t)` per day.
    pub gamma_d: Vec<T>,
    /// Number of negative daily increments clamped to zero.
    pub clamped_negative_increments: usize,
}

/// Estimates the hospital exit rates from daily cumulative counts.
///
/// The final day replicates the previous day's value so the series covers
/// every assimilation day. Gap days use the last observed values, which
/// yields a zero increment. Negative increments (data corrections) are
/// clamped to zero and tallied.
pub fn estimate_removal_rates<T: Float>(obs: &ObservationSeries<T>) -> Result<RemovalRates<T>> {
    let n = obs.len();
    if n < 2 {
        return Err(Error::DateMismatch(format!(
            "removal-rate estimation needs at least 2 days, got {n}"
        )));
    }
    let (h, r, d) = obs.carry_forward_filled();
    let mut gamma_h = Vec::with_capacity(n);
    let mut gamma_d = Vec::with_capacity(n);
    let mut clamped = 0usize;
    for t in 0..n - 1 {
        if h[t] <= T::zero() {
            return Err(Error::ZeroHospitalized {
                date: obs.date_at(t),
            });
        }
        let mut dr = r[t + 1] - r[t];
        let mut dd = d[t + 1] - d[t];
        if dr < T::zero() {
            dr = T::zero();
            clamped += 1;
        }
        if dd < T::zero() {
            dd = T::zero();
            clamped += 1;
        }
        gamma_h.push(dr / h[t]);
        gamma_d.push(dd / h[t]);
    }
    gamma_h.push(gamma_h[n - 2]);
    gamma_d.push(gamma_d[n - 2]);
    Ok(RemovalRates {
        gamma_h,
        gamma_d,
        clamped_negative_increments: clamped,
    })
}

/// Seven-day binomial smoothing with weights `(1,6,15,20,15,6,1)/64`.
///
/// Boundary days use the truncated window renormalized to sum to one, which
/// keeps constants fixed exactly. Output length equals input length.
pub fn smooth7<T: Float>(series: &[T]) -> Vec<T> {
    const WEIGHTS: [f64; 7] = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
    let n = series.len() as isize;
    (0..n)
        .map(|t| {
            // Accumulate deviations from the centre sample: constants stay
            // bit-exact and the sum is better conditioned.
            let center = series[t as usize];
            let mut acc = T::zero();
            let mut total = T::zero();
            for (j, w) in WEIGHTS.iter().enumerate() {
                let idx = t + j as isize - 3;
                if idx >= 0 && idx < n {
                    let w = T::of(*w);
                    acc += w * (series[idx as usize] - center);
                    total += w;
                }
            }
            center + acc / total
        })
        .collect()
}
