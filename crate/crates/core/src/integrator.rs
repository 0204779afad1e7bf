//! Fixed-step integration of the extended SEIR system and the log transform
//! used by the assimilation state.
//!
//! The assimilated state is nine-dimensional: the logs of the eight
//! non-susceptible compartments plus the log of the symptomatic transmission
//! coefficient. The susceptible count is not carried; it is recovered from
//! conservation whenever the state is decoded. Integration happens in the
//! original scale (the log-transformed right-hand side is stiff near the
//! floor) and the result is re-logged.

use chrono::NaiveDate;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{derivative_array, Compartments, MedicalParams, ParamSchedule};
use crate::scalar::Float;

/// Default floor, in individuals, below which a compartment is treated as
/// empty when log-transforming.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-3;

/// Number of Runge-Kutta substeps per day.
pub const SUBSTEPS_PER_DAY: u32 = 10;

/// Index of each coordinate in the assimilated state vector.
pub mod state_index {
    pub const EXPOSED: usize = 0;
    pub const ASYMPTOMATIC: usize = 1;
    pub const SYMPTOMATIC: usize = 2;
    pub const HOSPITALIZED: usize = 3;
    pub const RECOVERED: usize = 4;
    pub const DECEASED: usize = 5;
    pub const RECOVERED_ASYMPTOMATIC: usize = 6;
    pub const RECOVERED_SYMPTOMATIC: usize = 7;
    pub const LOG_BETA_S: usize = 8;
    pub const DIM: usize = 9;
}

/// Log-scale assimilation state: eight log-compartments, the log transmission
/// coefficient, and the bookkeeping needed to decode (total population and
/// the floor used when the state was encoded).
#[derive(Debug, Clone, PartialEq)]
pub struct LogState<T> {
    values: [T; state_index::DIM],
    population: T,
    floor: T,
}

impl<T: Float> LogState<T> {
    /// Log-transforms a compartment state: each count maps to
    /// `ln(max(count, floor))`.
    pub fn to_log(c: &Compartments<T>, beta_s: T, floor: T) -> Result<Self> {
        if !beta_s.finite() || beta_s <= T::zero() {
            return Err(Error::InvalidState(format!(
                "beta_s must be positive to take its log, got {beta_s}"
            )));
        }
        if !floor.finite() || floor <= T::zero() {
            return Err(Error::InvalidState(format!(
                "log floor must be positive, got {floor}"
            )));
        }
        let arr = c.as_array();
        let mut values = [T::zero(); state_index::DIM];
        for (v, count) in values.iter_mut().zip(arr[1..].iter()) {
            *v = count.max(floor).ln();
        }
        values[state_index::LOG_BETA_S] = beta_s.ln();
        let state = Self {
            values,
            population: c.population,
            floor,
        };
        state.validate()?;
        Ok(state)
    }

    /// Rebuilds a state from a filter vector, validating that it decodes to a
    /// feasible population split.
    pub fn from_vector(v: &DVector<T>, population: T, floor: T) -> Result<Self> {
        if v.len() != state_index::DIM {
            return Err(Error::InvalidState(format!(
                "state vector must have dimension {}, got {}",
                state_index::DIM,
                v.len()
            )));
        }
        let mut values = [T::zero(); state_index::DIM];
        for (dst, src) in values.iter_mut().zip(v.iter()) {
            *dst = *src;
        }
        let state = Self {
            values,
            population,
            floor,
        };
        state.validate()?;
        Ok(state)
    }

    /// The state as a filter vector.
    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_row_slice(&self.values)
    }

    pub fn population(&self) -> T {
        self.population
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    pub fn coordinate(&self, index: usize) -> T {
        self.values[index]
    }

    /// The symptomatic transmission coefficient in original scale.
    pub fn beta_s(&self) -> T {
        self.values[state_index::LOG_BETA_S].exp()
    }

    /// Decoded susceptible count `N - sum(exp(compartments))`.
    pub fn susceptible(&self) -> Result<T> {
        Ok(self.compartments()?.susceptible)
    }

    /// Checks that every coordinate is finite and that the decoded
    /// susceptible count is positive.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.finite() {
                return Err(Error::InvalidState(format!(
                    "state coordinate {i} is not finite"
                )));
            }
        }
        self.compartments().map(|_| ())
    }

    /// Decodes back to original-scale compartments.
    ///
    /// Values at or below the floor decode to exactly zero: the floor stands
    /// for an empty compartment, and treating it as such keeps the
    /// disease-free equilibrium an exact fixed point of the integrator.
    pub fn compartments(&self) -> Result<Compartments<T>> {
        let tolerance = self.floor * T::of(1.0 + 1e-9);
        let mut counts = [T::zero(); 9];
        let mut occupied = T::zero();
        for (dst, v) in counts[1..].iter_mut().zip(self.values[..8].iter()) {
            let count = v.exp();
            *dst = if count <= tolerance { T::zero() } else { count };
            occupied += *dst;
        }
        let susceptible = self.population - occupied;
        if !susceptible.finite() || susceptible <= T::zero() {
            return Err(Error::InvalidState(format!(
                "state decodes to a non-positive susceptible count ({susceptible})"
            )));
        }
        counts[0] = susceptible;
        Compartments::from_array(counts, self.population)
            .map_err(|e| Error::InvalidState(e.to_string()))
    }
}

fn rk4_step<T: Float>(x: &mut [T; 9], population: T, p: &MedicalParams<T>, h: T) {
    let half = h / T::of(2.0);
    let sixth = h / T::of(6.0);
    let k1 = derivative_array(x, population, p);
    let mut stage = *x;
    for i in 0..9 {
        stage[i] = x[i] + half * k1[i];
    }
    let k2 = derivative_array(&stage, population, p);
    for i in 0..9 {
        stage[i] = x[i] + half * k2[i];
    }
    let k3 = derivative_array(&stage, population, p);
    for i in 0..9 {
        stage[i] = x[i] + h * k3[i];
    }
    let k4 = derivative_array(&stage, population, p);
    for i in 0..9 {
        x[i] += sixth * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
}

/// Advances original-scale compartments by one day with classical
/// fourth-order Runge-Kutta, parameters held constant.
///
/// Errors with [`Error::StateCollapse`] if the result is not a valid
/// population split (negative beyond round-off, compartment above the total
/// population, or non-finite values).
pub fn advance_compartments<T: Float>(
    c: &Compartments<T>,
    p: &MedicalParams<T>,
    substeps: u32,
) -> Result<Compartments<T>> {
    assert!(substeps > 0, "substeps must be positive");
    let population = c.population;
    let mut x = c.as_array();
    let h = T::one() / T::of(f64::from(substeps));
    for _ in 0..substeps {
        rk4_step(&mut x, population, p, h);
    }
    Compartments::from_array(x, population).map_err(|e| Error::StateCollapse(e.to_string()))
}

/// One-day forecast of a log state under the rates in force on `date`, with
/// the transmission coefficient taken from the state itself and carried
/// unchanged (parameter persistence).
pub fn integrate_one_day<T: Float>(
    x: &LogState<T>,
    sched: &ParamSchedule<T>,
    date: NaiveDate,
) -> Result<LogState<T>> {
    integrate_one_day_with(x, &sched.params_on(date)?)
}

/// Same as [`integrate_one_day`] but with explicit (e.g. perturbed) rates.
/// `params.beta_s` is replaced by the state's own transmission coefficient.
pub fn integrate_one_day_with<T: Float>(
    x: &LogState<T>,
    params: &MedicalParams<T>,
) -> Result<LogState<T>> {
    let p = params.with_beta_s(x.beta_s());
    let start = x.compartments()?;
    let end = advance_compartments(&start, &p, SUBSTEPS_PER_DAY)?;
    LogState::to_log(&end, x.beta_s(), x.floor())
}

/// Free-running simulation: chains [`advance_compartments`] over the schedule
/// starting from `initial`. The returned trajectory has `days + 1` entries,
/// the first being `initial`.
pub fn simulate<T: Float>(
    initial: &Compartments<T>,
    sched: &ParamSchedule<T>,
    days: usize,
) -> Result<Vec<Compartments<T>>> {
    let mut trajectory = Vec::with_capacity(days + 1);
    trajectory.push(initial.clone());
    let mut current = initial.clone();
    for day in 0..days {
        let date = sched.start_date() + chrono::Duration::days(day as i64);
        let params = sched.params_on(date)?;
        current = advance_compartments(&current, &params, SUBSTEPS_PER_DAY)?;
        trajectory.push(current.clone());
    }
    Ok(trajectory)
}
