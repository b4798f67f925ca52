//! Command-line runner for the planner benchmark harness.
//!
//! Subcommands:
//! - `run`: execute scenario x variant x seed episodes, write per-episode
//!   metrics CSV, trace logs, and a summary table.
//! - `calibrate-noise`: fit the distance-error model from trace logs.
//! - `ablate-barrier`: run the 2x2 uncertainty/barrier grid on in-lane
//!   scenarios.
//! - `validate-config`: parse scenarios and overrides, print the effective
//!   configuration.
//!
//! Log level comes from the `UAPBEV_LOG` environment variable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use bevplan_core::fit_error_model;
use bevplan_sim::trace::{calibration_observations, read_jsonl, write_jsonl};
use bevplan_sim::{
    run_episode, EpisodeMetrics, PlannerConfig, PlannerVariant, Scenario, ScenarioMode,
};

#[derive(Parser)]
#[command(name = "bevplan", about = "uncertainty-aware BEV planner harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episode suites and write metrics, traces, and summaries.
    Run(RunArgs),
    /// Fit a distance-error model from logged traces.
    CalibrateNoise(CalibrateArgs),
    /// Run the uncertainty x barrier ablation grid (in-lane scenarios).
    AblateBarrier(AblateArgs),
    /// Parse scenarios and overrides; print the effective configuration.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file(s).
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<PathBuf>,
    /// Comma-separated planner variants (uap|deterministic|single-pass).
    #[arg(long, default_value = "uap")]
    variant: String,
    /// Seed list: `0..20`, `1,2,5`, or a single number.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Parallel episode workers (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Configuration overrides, repeatable: KEY=VALUE.
    #[arg(long = "config")]
    config: Vec<String>,
    /// Also write per-cycle optimizer diagnostics JSON-lines.
    #[arg(long, default_value_t = false)]
    diagnostics: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Trace files (JSON-lines) from previous runs.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Output directory for the model table and the per-step stats CSV.
    #[arg(long)]
    out: PathBuf,
    /// Store residuals verbatim instead of Gaussian parameters.
    #[arg(long, default_value_t = false)]
    empirical: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<PathBuf>,
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long = "config")]
    config: Vec<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<PathBuf>,
    #[arg(long = "config")]
    config: Vec<String>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("UAPBEV_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CalibrateNoise(args) => cmd_calibrate_noise(args),
        Command::AblateBarrier(args) => cmd_ablate_barrier(args),
        Command::ValidateConfig(args) => cmd_validate_config(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn parse_seeds(spec: &str) -> anyhow::Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().context("bad seed range start")?;
        let b: u64 = b.trim().parse().context("bad seed range end")?;
        if a >= b {
            bail!("empty seed range '{spec}'");
        }
        return Ok((a..b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().context("bad seed"))
        .collect()
}

fn parse_variants(spec: &str) -> anyhow::Result<Vec<PlannerVariant>> {
    let variants: Vec<PlannerVariant> = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| PlannerVariant::parse(s.trim()).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<_>>()?;
    if variants.is_empty() {
        bail!("no variants given (expected uap|deterministic|single-pass)");
    }
    Ok(variants)
}

fn parse_overrides(specs: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    specs
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .with_context(|| format!("override '{kv}' is not KEY=VALUE"))
        })
        .collect()
}

fn load_scenarios(paths: &[PathBuf]) -> anyhow::Result<Vec<Scenario>> {
    paths
        .iter()
        .map(|p| {
            Scenario::from_file(p).with_context(|| format!("loading scenario {}", p.display()))
        })
        .collect()
}

fn config_for(
    scenario: &Scenario,
    overrides: &[(String, String)],
) -> anyhow::Result<PlannerConfig> {
    let mut cfg = PlannerConfig::for_scenario(scenario)?;
    for (key, value) in overrides {
        cfg.apply_override(key, value)
            .with_context(|| format!("applying --config {key}={value}"))?;
    }
    Ok(cfg)
}

/// Runs a closure on a worker pool sized by `--jobs` (0 = rayon default).
fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metrics_csv_header() -> &'static str {
    "scenario,variant,seed,outcome,collisions_per_km,completed,completion_pct,duration_s,\
     smoothness,min_gap,distance_m"
}

fn metrics_csv_row(scenario: &str, variant: &str, seed: u64, m: &EpisodeMetrics) -> String {
    format!(
        "{scenario},{variant},{seed},{},{},{},{},{},{},{},{}",
        m.outcome.as_str(),
        m.collisions_per_km,
        m.completed,
        m.completion_pct,
        fmt_opt(m.duration),
        m.smoothness,
        fmt_opt(m.min_gap),
        m.distance_m
    )
}

/// Mean over completed-route durations; empty when none completed.
fn summarize<'a>(rows: impl Iterator<Item = &'a EpisodeMetrics>) -> (usize, f64, f64, String, f64) {
    let rows: Vec<_> = rows.collect();
    let n = rows.len();
    let coll = rows.iter().map(|m| m.collisions_per_km).sum::<f64>() / n.max(1) as f64;
    let rc = 100.0 * rows.iter().filter(|m| m.completed).count() as f64 / n.max(1) as f64;
    let durations: Vec<f64> = rows.iter().filter_map(|m| m.duration).collect();
    let duration = if durations.is_empty() {
        String::new()
    } else {
        (durations.iter().sum::<f64>() / durations.len() as f64).to_string()
    };
    let smooth = rows.iter().map(|m| m.smoothness).sum::<f64>() / n.max(1) as f64;
    (n, coll, rc, duration, smooth)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let variants = parse_variants(&args.variant)?;
    let seeds = parse_seeds(&args.seeds)?;
    let overrides = parse_overrides(&args.config)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::create_dir_all(args.out.join("traces"))?;

    // effective configuration per scenario, for provenance
    for scenario in &scenarios {
        let cfg = config_for(scenario, &overrides)?;
        std::fs::write(
            args.out.join(format!("effective_config_{}.txt", scenario.name)),
            cfg.effective_text(),
        )?;
    }

    struct Job<'a> {
        scenario: &'a Scenario,
        cfg: PlannerConfig,
        variant: PlannerVariant,
        seed: u64,
    }
    let mut jobs = Vec::new();
    for scenario in &scenarios {
        let cfg = config_for(scenario, &overrides)?;
        for &variant in &variants {
            for &seed in &seeds {
                jobs.push(Job {
                    scenario,
                    cfg: cfg.clone(),
                    variant,
                    seed,
                });
            }
        }
    }
    log::info!("running {} episodes", jobs.len());
    let results: Vec<anyhow::Result<bevplan_sim::EpisodeResult>> = with_pool(args.jobs, || {
        jobs.par_iter()
            .map(|job| {
                run_episode(job.scenario, &job.cfg, job.variant, job.seed)
                    .map_err(anyhow::Error::from)
            })
            .collect()
    })?;

    let mut csv = String::from(metrics_csv_header());
    csv.push('\n');
    let mut summary_rows: Vec<(String, String, Vec<EpisodeMetrics>)> = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        let result = result.with_context(|| {
            format!(
                "episode {} {} seed {}",
                job.scenario.name,
                job.variant.as_str(),
                job.seed
            )
        })?;
        csv.push_str(&metrics_csv_row(
            &job.scenario.name,
            job.variant.as_str(),
            job.seed,
            &result.metrics,
        ));
        csv.push('\n');
        let trace_path = args.out.join("traces").join(format!(
            "{}_{}_{}.jsonl",
            job.scenario.name,
            job.variant.as_str(),
            job.seed
        ));
        write_jsonl(&trace_path, &result.trace)?;
        if args.diagnostics {
            write_diagnostics(&args.out, job.scenario, job.variant, job.seed, &result)?;
        }
        let key = (job.scenario.name.clone(), job.variant.as_str().to_string());
        match summary_rows.iter_mut().find(|(s, v, _)| *s == key.0 && *v == key.1) {
            Some((_, _, list)) => list.push(result.metrics.clone()),
            None => summary_rows.push((key.0, key.1, vec![result.metrics.clone()])),
        }
    }
    std::fs::write(args.out.join("metrics.csv"), &csv)?;

    let mut table = String::new();
    let mut summary_csv =
        String::from("scenario,variant,episodes,collisions_per_km,rc_pct,duration_s,smoothness\n");
    writeln!(
        table,
        "{:<14} {:<13} {:>4} {:>14} {:>7} {:>10} {:>10}",
        "scenario", "variant", "n", "collisions/km", "RC%", "duration", "smoothness"
    )?;
    for (scenario, variant, rows) in &summary_rows {
        let (n, coll, rc, duration, smooth) = summarize(rows.iter());
        writeln!(
            table,
            "{scenario:<14} {variant:<13} {n:>4} {coll:>14.4} {rc:>7.1} {:>10} {smooth:>10.3}",
            if duration.is_empty() { "-".to_string() } else { format!("{:.1}", duration.parse::<f64>().unwrap()) }
        )?;
        writeln!(
            summary_csv,
            "{scenario},{variant},{n},{coll},{rc},{duration},{smooth}"
        )?;
    }
    std::fs::write(args.out.join("summary.txt"), &table)?;
    std::fs::write(args.out.join("summary.csv"), &summary_csv)?;
    print!("{table}");
    Ok(())
}

fn write_diagnostics(
    out: &Path,
    scenario: &Scenario,
    variant: PlannerVariant,
    seed: u64,
    result: &bevplan_sim::EpisodeResult,
) -> anyhow::Result<()> {
    let dir = out.join("diagnostics");
    std::fs::create_dir_all(&dir)?;
    let mut text = String::new();
    for cycle in &result.diagnostics {
        for (i, stats) in cycle.iterations.iter().enumerate() {
            writeln!(
                text,
                "{{\"t\":{},\"cycle\":{},\"iteration\":{},\"best_total\":{},\"mean_total\":{},\
                 \"covariance_trace\":{},\"residual_min\":{},\"residual_median\":{},\
                 \"residual_p90\":{},\"residual_max\":{}}}",
                cycle.t,
                cycle.cycle,
                i,
                stats.best_total,
                stats.mean_total,
                stats.covariance_trace,
                stats.residual_min,
                stats.residual_median,
                stats.residual_p90,
                stats.residual_max
            )?;
        }
    }
    std::fs::write(
        dir.join(format!(
            "{}_{}_{}.jsonl",
            scenario.name,
            variant.as_str(),
            seed
        )),
        text,
    )?;
    Ok(())
}

fn cmd_calibrate_noise(args: CalibrateArgs) -> anyhow::Result<()> {
    let traces: Vec<_> = args
        .traces
        .iter()
        .map(|p| read_jsonl(p).with_context(|| format!("reading {}", p.display())))
        .collect::<anyhow::Result<_>>()?;
    let observations = calibration_observations(&traces)?;
    if observations.is_empty() {
        bail!("traces contain no (d_pred, d_gt) pairs");
    }
    let model = fit_error_model(&observations, args.empirical)?;
    std::fs::create_dir_all(&args.out)?;
    match &model {
        bevplan_core::ErrorModel::Gaussian(entries) => {
            std::fs::write(args.out.join("error_model.txt"), model.to_text()?)?;
            let mut csv = String::from("k,mu,sigma\n");
            for (k, (mu, sigma)) in entries.iter().enumerate() {
                writeln!(csv, "{k},{mu},{sigma}")?;
            }
            std::fs::write(args.out.join("error_stats.csv"), csv)?;
        }
        bevplan_core::ErrorModel::Empirical(banks) => {
            std::fs::write(
                args.out.join("error_residuals.txt"),
                model.to_residual_text()?,
            )?;
            let mut csv = String::from("k,count\n");
            for (k, bank) in banks.iter().enumerate() {
                writeln!(csv, "{k},{}", bank.len())?;
            }
            std::fs::write(args.out.join("error_stats.csv"), csv)?;
        }
    }
    println!(
        "fitted error model over {} observations, {} frames",
        observations.len(),
        model.frames()
    );
    Ok(())
}

fn cmd_ablate_barrier(args: AblateArgs) -> anyhow::Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    for scenario in &scenarios {
        if scenario.mode != ScenarioMode::Inlane {
            bail!(
                "ablation requires in-lane scenarios; '{}' is not",
                scenario.name
            );
        }
    }
    let seeds = parse_seeds(&args.seeds)?;
    let overrides = parse_overrides(&args.config)?;
    std::fs::create_dir_all(&args.out)?;

    let grid = [
        (PlannerVariant::Deterministic, false),
        (PlannerVariant::Deterministic, true),
        (PlannerVariant::Uap, false),
        (PlannerVariant::Uap, true),
    ];
    struct Job<'a> {
        scenario: &'a Scenario,
        cfg: PlannerConfig,
        variant: PlannerVariant,
        barrier: bool,
        seed: u64,
    }
    let mut jobs = Vec::new();
    for scenario in &scenarios {
        for &(variant, barrier) in &grid {
            let mut cfg = config_for(scenario, &overrides)?;
            cfg.longitudinal_barrier = barrier;
            for &seed in &seeds {
                jobs.push(Job {
                    scenario,
                    cfg: cfg.clone(),
                    variant,
                    barrier,
                    seed,
                });
            }
        }
    }
    let results: Vec<anyhow::Result<EpisodeMetrics>> = with_pool(args.jobs, || {
        jobs.par_iter()
            .map(|job| {
                run_episode(job.scenario, &job.cfg, job.variant, job.seed)
                    .map(|r| r.metrics)
                    .map_err(anyhow::Error::from)
            })
            .collect()
    })?;

    let mut episode_csv = String::from(
        "scenario,uncertainty,barrier,seed,outcome,collisions_per_km,completed,completion_pct,\
         duration_s,smoothness,min_gap,distance_m\n",
    );
    let mut by_config: Vec<(bool, bool, Vec<EpisodeMetrics>)> = grid
        .iter()
        .map(|&(v, b)| (v == PlannerVariant::Uap, b, Vec::new()))
        .collect();
    for (job, result) in jobs.iter().zip(results) {
        let m = result.with_context(|| {
            format!(
                "episode {} {} barrier={} seed {}",
                job.scenario.name,
                job.variant.as_str(),
                job.barrier,
                job.seed
            )
        })?;
        writeln!(
            episode_csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            job.scenario.name,
            job.variant == PlannerVariant::Uap,
            job.barrier,
            job.seed,
            m.outcome.as_str(),
            m.collisions_per_km,
            m.completed,
            m.completion_pct,
            fmt_opt(m.duration),
            m.smoothness,
            fmt_opt(m.min_gap),
            m.distance_m
        )?;
        let uap = job.variant == PlannerVariant::Uap;
        by_config
            .iter_mut()
            .find(|(u, b, _)| *u == uap && *b == job.barrier)
            .unwrap()
            .2
            .push(m);
    }
    std::fs::write(args.out.join("ablation_metrics.csv"), &episode_csv)?;

    let mut table = String::new();
    let mut csv = String::from("uncertainty,barrier,episodes,collisions_per_km,rc_pct,duration_s\n");
    writeln!(
        table,
        "{:<12} {:<8} {:>4} {:>14} {:>7} {:>10}",
        "uncertainty", "barrier", "n", "collisions/km", "RC%", "duration"
    )?;
    for (uap, barrier, rows) in &by_config {
        let (n, coll, rc, duration, _) = summarize(rows.iter());
        writeln!(
            table,
            "{:<12} {:<8} {n:>4} {coll:>14.4} {rc:>7.1} {:>10}",
            if *uap { "on" } else { "off" },
            if *barrier { "on" } else { "off" },
            if duration.is_empty() { "-".to_string() } else { format!("{:.1}", duration.parse::<f64>().unwrap()) }
        )?;
        writeln!(
            csv,
            "{},{},{n},{coll},{rc},{duration}",
            uap, barrier
        )?;
    }
    std::fs::write(args.out.join("ablation.txt"), &table)?;
    std::fs::write(args.out.join("ablation.csv"), &csv)?;
    print!("{table}");
    Ok(())
}

fn cmd_validate_config(args: ValidateArgs) -> anyhow::Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let overrides = parse_overrides(&args.config)?;
    for scenario in &scenarios {
        let cfg = config_for(scenario, &overrides)?;
        cfg.limits.validate()?;
        cfg.optimizer.validate()?;
        println!(
            "# scenario '{}' ({} neighbors, route {} m)",
            scenario.name,
            scenario.neighbors.len(),
            scenario.route_length
        );
        print!("{}", cfg.effective_text());
    }
    Ok(())
}
