//! End-to-end behavior of the assimilation cycle on twin experiments.

use chrono::NaiveDate;

use epida_core::assimilator::{
    assimilate, build_record, forecast_step, observation_matrix, spinup_initialize, RunConfig,
};
use epida_core::diagnostics::{generate_twin, sweep, SweepAxis, TwinConfig};
use epida_core::etkf::{additive_inflation, etkf_analysis, ObsErrorModel};
use epida_core::integrator::state_index;
use epida_core::io::{read_analysis, write_analysis};
use epida_core::model::basic_reproduction_number;

fn twin_config(length: usize, beta: f64) -> TwinConfig<f64> {
    TwinConfig {
        length_days: length,
        beta_s: beta,
        beta_s_step_day: None,
        beta_s_step_value: None,
        ..TwinConfig::default()
    }
}

fn run_config_for(twin: &TwinConfig<f64>) -> RunConfig<f64> {
    RunConfig {
        region: "twin".to_string(),
        population: twin.population,
        start_date: twin.start_date,
        end_date: None,
        ..RunConfig::default()
    }
}

#[test]
fn record_sequence_covers_every_day_in_order() {
    let twin = twin_config(80, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let records = assimilate(&config, &obs).unwrap();
    assert_eq!(records.len(), 80);
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(
            rec.date,
            twin.start_date + chrono::Duration::days(i as i64)
        );
        // Day zero comes from spin-up, all others from the ETKF update.
        assert_eq!(rec.assimilated, i > 0);
        for (name, summary) in rec.quantities() {
            assert!(
                summary.lo95 <= summary.lo68
                    && summary.lo68 <= summary.mean
                    && summary.mean <= summary.hi68
                    && summary.hi68 <= summary.hi95,
                "unordered bounds for {name} on {}",
                rec.date
            );
            assert!(summary.spread >= 0.0);
        }
        assert!(rec.beta_s.mean > 0.0);
    }
}

#[test]
fn assimilation_is_deterministic_for_a_fixed_seed() {
    let twin = twin_config(40, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let a = assimilate(&config, &obs).unwrap();
    let b = assimilate(&config, &obs).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gap_days_are_forecast_only_and_flagged() {
    let twin = twin_config(30, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    // Rebuild the series with a hole on days 10..12.
    let mut points: Vec<_> = (0..obs.len()).map(|i| obs.point(i).cloned()).collect();
    points[10] = None;
    points[11] = None;
    let gappy =
        epida_core::io::ObservationSeries::new("twin", obs.start_date(), points).unwrap();
    let records = assimilate(&config, &gappy).unwrap();
    assert_eq!(records.len(), 30);
    assert!(!records[10].assimilated);
    assert!(!records[11].assimilated);
    assert!(records[12].assimilated);
}

#[test]
fn hospitalization_correlates_with_transmission_during_growth() {
    // Reproduce the daily cycle with the public pieces so the member-level
    // correlation between the log hospitalized count and the log
    // transmission coefficient is observable. In a growing epidemic it
    // should be positive on most days.
    let twin = twin_config(120, 0.45);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();

    let sched_run = config.schedule(&obs).unwrap();
    let mut rng = config.rng();
    let day0 = obs.at_date(config.start_date).unwrap().clone();
    let mut ens = spinup_initialize(&config, &sched_run, &day0, &mut rng).unwrap();
    let obs_matrix = observation_matrix::<f64>();
    let err = ObsErrorModel::uniform(config.obs_sd, 3).unwrap();

    let correlation = |ens: &epida_core::Ensemble64| {
        let h = ens.coordinate(state_index::HOSPITALIZED);
        let b = ens.coordinate(state_index::LOG_BETA_S);
        let k = h.len() as f64;
        let mh = h.iter().sum::<f64>() / k;
        let mb = b.iter().sum::<f64>() / k;
        let mut num = 0.0;
        let mut dh = 0.0;
        let mut db = 0.0;
        for (x, y) in h.iter().zip(&b) {
            num += (x - mh) * (y - mb);
            dh += (x - mh).powi(2);
            db += (y - mb).powi(2);
        }
        num / (dh.sqrt() * db.sqrt()).max(1e-300)
    };

    let mut positive = 0usize;
    let mut days = 0usize;
    for offset in 1..120i64 {
        let date = config.start_date + chrono::Duration::days(offset);
        ens = forecast_step(&ens, &sched_run, date - chrono::Duration::days(1), &config, &mut rng)
            .unwrap();
        ens = additive_inflation(&ens, config.alpha, &mut rng);
        let point = obs.at_date(date).unwrap();
        let y = nalgebra::DVector::from_row_slice(&[
            point.hospitalized.max(config.log_floor).ln(),
            point.recovered.max(config.log_floor).ln(),
            point.deaths.max(config.log_floor).ln(),
        ]);
        ens = etkf_analysis(&ens, &y, &obs_matrix, &err, config.rho).unwrap();
        if offset >= 5 {
            days += 1;
            if correlation(&ens) > 0.0 {
                positive += 1;
            }
        }
        // keep the record builder on the hot path honest as well
        let _ = build_record(&ens, date, &sched_run.params_on(date).unwrap(), &config, true)
            .unwrap();
    }
    let fraction = positive as f64 / days as f64;
    assert!(
        fraction >= 0.70,
        "correlation positive on only {:.1}% of growth days",
        fraction * 100.0
    );
}

#[test]
fn observation_noise_widens_the_hospitalized_spread() {
    // Module invariant: between the configured observation-error levels the
    // posterior spread of the log hospitalized count must not decrease.
    let twin = twin_config(120, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let median_h_spread = |sd: f64| {
        let mut c = config.clone();
        c.obs_sd = sd;
        let records = assimilate(&c, &obs).unwrap();
        let mut spreads: Vec<f64> = records[60..].iter().map(|r| r.hospitalized.spread).collect();
        spreads.sort_by(|a, b| a.partial_cmp(b).unwrap());
        spreads[spreads.len() / 2]
    };
    for (small, large) in [(1.1f64, 1.5f64), (1.3, 2.5)] {
        let narrow = median_h_spread(small.ln());
        let wide = median_h_spread(large.ln());
        assert!(
            wide >= narrow,
            "spread {narrow:.4} at sd {small} vs {wide:.4} at sd {large}"
        );
    }
}

#[test]
fn twin_noise_matches_the_configured_level() {
    // Empirical log-sd of (observation / truth) over the hospitalized series
    // recovers the configured noise level within 10% on a 300-day run.
    let twin = twin_config(300, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, truth) = generate_twin(&spec, &sched).unwrap();
    let mut diffs = Vec::new();
    for (day, state) in truth.iter().enumerate() {
        let point = obs.point(day).unwrap();
        diffs.push(point.hospitalized.ln() - state.hospitalized.max(1e-3).ln());
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let target = 1.3f64.ln();
    assert!(
        (sd - target).abs() <= 0.1 * target,
        "empirical noise sd {sd:.4} vs specified {target:.4}"
    );
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let twin = twin_config(40, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let values = [0.3, 0.58];
    let a = sweep(&config, SweepAxis::KRatio, &values, &obs, 2).unwrap();
    let b = sweep(&config, SweepAxis::KRatio, &values, &obs, 1).unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(a[0].label, "k0.30");
    assert_eq!(a[1].label, "k0.58");
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.label, y.label);
        assert_eq!(x.records, y.records);
    }
}

#[test]
fn analysis_files_round_trip_to_high_precision() {
    let twin = twin_config(25, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let records = assimilate(&config, &obs).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("analysis.csv");
    write_analysis(&records, &path, &config).unwrap();
    let line_count = std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(line_count, 26);
    let header = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .split(',')
        .count();
    assert_eq!(header, 1 + 10 * 6);
    assert!(path.with_extension("csv.meta").exists());

    let reread: Vec<epida_core::AnalysisRecord64> = read_analysis(&path).unwrap();
    assert_eq!(reread.len(), records.len());
    for (a, b) in records.iter().zip(&reread) {
        assert_eq!(a.date, b.date);
        for ((_, x), (_, y)) in a.quantities().iter().zip(b.quantities()) {
            for (u, v) in [
                (x.mean, y.mean),
                (x.lo95, y.lo95),
                (x.lo68, y.lo68),
                (x.hi68, y.hi68),
                (x.hi95, y.hi95),
                (x.spread, y.spread),
            ] {
                let tol = 1e-9 * u.abs().max(1e-12);
                assert!((u - v).abs() <= tol, "{u} vs {v}");
            }
        }
    }
}

#[test]
fn percentile_bands_stay_ordered_on_a_real_run() {
    let twin = twin_config(30, 0.4);
    let mut config = run_config_for(&twin);
    config.percentile_ci = true;
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let records = assimilate(&config, &obs).unwrap();
    for rec in &records {
        for (name, s) in rec.quantities() {
            assert!(
                s.lo95 <= s.lo68 && s.lo68 <= s.hi68 && s.hi68 <= s.hi95,
                "{name} on {}",
                rec.date
            );
        }
    }
}

#[test]
fn recorded_rt_matches_the_formula_applied_to_recorded_beta() {
    // The mean reproduction number must be consistent with the member-wise
    // formula; with little spread the record mean is close to the formula
    // applied to the mean coefficient.
    let twin = twin_config(50, 0.4);
    let config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    let records = assimilate(&config, &obs).unwrap();
    let sched_run = config.schedule(&obs).unwrap();
    for rec in records.iter().skip(20) {
        let params = sched_run
            .params_on(rec.date)
            .unwrap()
            .with_beta_s(rec.beta_s.mean);
        let rt_of_mean = basic_reproduction_number(&params).unwrap();
        let rel = (rec.rt.mean - rt_of_mean).abs() / rt_of_mean;
        assert!(
            rel < 0.05,
            "recorded Rt {} vs formula at mean beta {} ({}% off) on {}",
            rec.rt.mean,
            rt_of_mean,
            rel * 100.0,
            rec.date
        );
    }
}

#[test]
fn start_date_must_be_observed() {
    let twin = twin_config(30, 0.4);
    let mut config = run_config_for(&twin);
    let (spec, sched) = twin.to_parts(&config).unwrap();
    let (obs, _) = generate_twin(&spec, &sched).unwrap();
    config.start_date = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    assert!(assimilate(&config, &obs).is_err());
}
