//! Command-line front end: assimilation runs, sensitivity sweeps, twin
//! experiments, the reference reproduction-number estimate, and input
//! validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use epida_core::assimilator::assimilate;
use epida_core::diagnostics::{
    generate_twin, score_twin, sweep, toyokeizai_rt, write_rt_comparison, SweepAxis,
};
use epida_core::io::{
    parse_observations, parse_run_config, parse_twin_config, write_analysis, write_observations,
    write_twin_config,
};
use epida_core::{ObservationSeries64, RunConfig64, TwinConfig64};

#[derive(Parser)]
#[command(name = "epida", version, about = "Epidemic data assimilation engine")]
struct Cli {
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print progress details to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assimilate an observation series and write the daily analysis.
    Run {
        /// Run configuration file (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Observation CSV (`date,hospitalized,recovered,deaths[,new_cases]`).
        #[arg(long)]
        obs: PathBuf,
        /// Output directory; the run writes into `<region>_run_<seed>/`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the assimilation once per value of one swept parameter.
    Sweep {
        /// Swept parameter.
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Custom axis values (comma separated). Observation sds are given
        /// as multiplicative factors, e.g. `1.1,2.5`.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Maximum concurrent runs; defaults to the number of axis values.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate a synthetic truth, assimilate it, and score the recovery.
    Twin {
        /// Twin description file; built-in defaults when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Filter configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference reproduction number from the daily new-case column.
    Refrt {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a configuration and optionally an observation file.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        obs: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    /// Ratio between asymptomatic and symptomatic transmission.
    K,
    /// Observation error standard deviation.
    Sd,
    /// Symptomatic fraction.
    Sympfrac,
}

impl From<AxisArg> for SweepAxis {
    fn from(axis: AxisArg) -> Self {
        match axis {
            AxisArg::K => SweepAxis::KRatio,
            AxisArg::Sd => SweepAxis::ObsSd,
            AxisArg::Sympfrac => SweepAxis::SymptomaticFraction,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Run { config, obs, out } => cmd_run(&config, &obs, &out, cli.seed, verbose),
        Command::Sweep {
            axis,
            config,
            obs,
            out,
            values,
            jobs,
        } => cmd_sweep(axis.into(), &config, &obs, &out, values, jobs, cli.seed, verbose),
        Command::Twin { spec, config, out } => {
            cmd_twin(spec.as_deref(), config.as_deref(), &out, cli.seed, verbose)
        }
        Command::Refrt { obs, out } => cmd_refrt(&obs, &out, cli.seed, verbose),
        Command::Validate { config, obs } => cmd_validate(&config, obs.as_deref()),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig64> {
    let mut config: RunConfig64 =
        parse_run_config(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_obs(path: &Path, region: &str) -> Result<ObservationSeries64> {
    let obs: ObservationSeries64 = parse_observations(path, region)
        .with_context(|| format!("reading observations {}", path.display()))?;
    Ok(obs)
}

/// Creates the per-run output directory `<out>/<name>/`; on failure of the
/// enclosed work the directory is removed so no partial outputs survive.
fn with_run_dir(
    out: &Path,
    name: &str,
    work: impl FnOnce(&Path) -> Result<()>,
) -> Result<()> {
    let dir = out.join(name);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    match work(&dir) {
        Ok(()) => Ok(()),
        Err(err) => {
            let _ = std::fs::remove_dir_all(&dir);
            Err(err)
        }
    }
}

fn report_obs(obs: &ObservationSeries64, verbose: bool) {
    if !verbose {
        return;
    }
    eprintln!(
        "observations: {} .. {} ({} days, {} gaps, {} cleanup corrections)",
        obs.start_date(),
        obs.end_date(),
        obs.len(),
        obs.gap_dates().len(),
        obs.corrections().len()
    );
}

fn cmd_run(config: &Path, obs: &Path, out: &Path, seed: Option<u64>, verbose: bool) -> Result<()> {
    let config = load_config(config, seed)?;
    let obs = load_obs(obs, &config.region)?;
    report_obs(&obs, verbose);
    let name = format!("{}_run_{}", config.region, config.seed);
    with_run_dir(out, &name, |dir| {
        let records = assimilate(&config, &obs).context("assimilation failed")?;
        let path = dir.join("analysis.csv");
        write_analysis(&records, &path, &config).context("writing analysis")?;
        if verbose {
            eprintln!("wrote {} ({} days)", path.display(), records.len());
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    axis: SweepAxis,
    config: &Path,
    obs: &Path,
    out: &Path,
    values: Option<Vec<f64>>,
    jobs: Option<usize>,
    seed: Option<u64>,
    verbose: bool,
) -> Result<()> {
    let config = load_config(config, seed)?;
    let obs = load_obs(obs, &config.region)?;
    report_obs(&obs, verbose);
    let values: Vec<f64> = match values {
        Some(raw) => {
            if raw.is_empty() {
                bail!("--values must list at least one value");
            }
            match axis {
                // sd values are supplied as factors
                SweepAxis::ObsSd => raw
                    .iter()
                    .map(|v| {
                        if *v <= 1.0 {
                            bail!("observation sd factor must exceed 1, got {v}")
                        } else {
                            Ok(v.ln())
                        }
                    })
                    .collect::<Result<_>>()?,
                _ => raw,
            }
        }
        None => axis.default_values(),
    };
    let jobs = jobs.unwrap_or(values.len()).max(1);
    let name = format!("{}_sweep_{}", config.region, config.seed);
    with_run_dir(out, &name, |dir| {
        let runs = sweep(&config, axis, &values, &obs, jobs).context("sweep failed")?;
        for run in &runs {
            let path = dir.join(format!("analysis_{}.csv", run.label));
            let mut run_config = config.clone();
            axis.apply(&mut run_config, run.value);
            write_analysis(&run.records, &path, &run_config)
                .with_context(|| format!("writing {}", path.display()))?;
            if verbose {
                eprintln!("wrote {}", path.display());
            }
        }
        let table = dir.join("comparison_rt.csv");
        write_rt_comparison(&runs, &table).context("writing comparison table")?;
        if verbose {
            eprintln!("wrote {}", table.display());
        }
        Ok(())
    })
}

fn cmd_twin(
    spec: Option<&Path>,
    config: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    verbose: bool,
) -> Result<()> {
    let mut config = match config {
        Some(path) => load_config(path, seed)?,
        None => {
            let mut c = RunConfig64::default();
            if let Some(seed) = seed {
                c.seed = seed;
            }
            c
        }
    };
    let twin: TwinConfig64 = match spec {
        Some(path) => parse_twin_config(path)
            .with_context(|| format!("reading twin spec {}", path.display()))?,
        None => TwinConfig64::default(),
    };
    config.region = "twin".to_string();
    config.population = twin.population;
    config.start_date = twin.start_date;
    config.end_date = None;

    let name = format!("twin_twin_{}", config.seed);
    with_run_dir(out, &name, |dir| {
        let (spec, sched) = twin.to_parts(&config).context("building twin truth")?;
        let (obs, truth) = generate_twin(&spec, &sched).context("generating twin")?;
        write_observations(&obs, dir.join("twin_observations.csv"))
            .context("writing twin observations")?;
        write_twin_config(&twin, dir.join("twin_spec.txt")).context("writing twin spec")?;
        let records = assimilate(&config, &obs).context("assimilation failed")?;
        write_analysis(&records, dir.join("analysis.csv"), &config)
            .context("writing analysis")?;
        let report = score_twin(&records, &truth, &spec.beta_s, &sched, twin.burn_in)
            .context("scoring twin")?;
        std::fs::write(dir.join("score.txt"), report.to_kv_lines())
            .context("writing score report")?;
        if verbose {
            eprintln!(
                "twin scored: beta within 10% on {:.1}% of post-burn-in days, \
                 95% Rt coverage {:.1}%",
                report.beta_within_10pct * 100.0,
                report.rt_coverage95 * 100.0
            );
        }
        Ok(())
    })
}

fn cmd_refrt(obs: &Path, out: &Path, seed: Option<u64>, verbose: bool) -> Result<()> {
    let stem = obs
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "obs".to_string());
    let series = load_obs(obs, &stem)?;
    let cases = series
        .new_cases()
        .context("the reference estimate needs the new_cases column")?;
    let rt = toyokeizai_rt(&cases);
    // The estimate is deterministic; the seed only names the run directory.
    let name = format!("{stem}_refrt_{}", seed.unwrap_or(0));
    with_run_dir(out, &name, |dir| {
        let mut text = String::from("date,rt\n");
        for (i, value) in rt.iter().enumerate() {
            match value {
                Some(v) => {
                    let _ = writeln!(text, "{},{}", series.date_at(i), v);
                }
                None => {
                    let _ = writeln!(text, "{},NA", series.date_at(i));
                }
            }
        }
        let path = dir.join("refrt.csv");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        let meta = format!(
            "# reference reproduction number, generation time 5 days over a 7-day window\n\
             source = {}\nregion = {stem}\ndays = {}\n",
            obs.display(),
            series.len()
        );
        std::fs::write(path.with_extension("csv.meta"), meta).context("writing metadata")?;
        if verbose {
            let defined = rt.iter().flatten().count();
            eprintln!("wrote {} ({} defined days)", path.display(), defined);
        }
        Ok(())
    })
}

fn cmd_validate(config: &Path, obs: Option<&Path>) -> Result<()> {
    let config = load_config(config, None)?;
    config.validate().context("invalid configuration")?;
    println!(
        "config ok: region {}, N = {}, window {} .. {}, ensemble {}, seed {}",
        config.region,
        config.population,
        config.start_date,
        config
            .end_date
            .map(|d| d.to_string())
            .unwrap_or_else(|| "end of observations".to_string()),
        config.ensemble_size,
        config.seed
    );
    if let Some(path) = obs {
        let series = load_obs(path, &config.region)?;
        println!(
            "observations ok: {} .. {} ({} days, {} gaps, {} cleanup corrections)",
            series.start_date(),
            series.end_date(),
            series.len(),
            series.gap_dates().len(),
            series.corrections().len()
        );
        if series.at_date(config.start_date).is_none() {
            bail!(
                "configured start date {} has no observation",
                config.start_date
            );
        }
    }
    Ok(())
}
