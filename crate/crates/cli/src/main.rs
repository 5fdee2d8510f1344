//! `storopt size | dispatch | run | sweep`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use storopt::config::ScenarioConfig;
use storopt::dispatch::SolveMode;
use storopt::pipeline::{self, Overrides, SizingOutcome};
use storopt::report::{sweep_table, RunReport};
use storopt::sizing::Capacities;
use storopt::{Error, FailureKind};

#[derive(Parser)]
#[command(name = "storopt", version, about = "Size and dispatch building chillers, ice storage and batteries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the joint sizing problem; writes sizing.json and sizing.txt.
    Size(Common),
    /// Run receding-horizon dispatch and the no-storage baseline.
    Dispatch {
        #[command(flatten)]
        common: Common,
        /// sizing.json from `size`; the scenario's asset capacities otherwise.
        #[arg(long)]
        sizes: Option<PathBuf>,
    },
    /// `size` followed by `dispatch` with the resulting sizes.
    Run(Common),
    /// `run` for every scenario matching a glob; one row per scenario.
    Sweep(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (a glob pattern for `sweep`).
    #[arg(long)]
    config: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of synthetic profiles.
    #[arg(long)]
    seed: Option<u64>,
    /// Tangent cuts per chiller, sizing and dispatch.
    #[arg(long)]
    breakpoints: Option<usize>,
    /// Look-ahead steps of the dispatch controller.
    #[arg(long)]
    horizon: Option<usize>,
    /// Multiplies every unit capital price.
    #[arg(long)]
    capital_scale: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lp,
    Milp,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            breakpoints: self.breakpoints,
            horizon: self.horizon,
            capital_scale: self.capital_scale,
            mode: self.mode.map(|m| match m {
                Mode::Lp => SolveMode::Lp,
                Mode::Milp => SolveMode::Milp,
            }),
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn read_sizes(path: &Path) -> anyhow::Result<Capacities> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(outcome) = serde_json::from_str::<SizingOutcome>(&text) {
        return Ok(outcome.chosen().capacities);
    }
    serde_json::from_str::<Capacities>(&text)
        .map_err(|e| anyhow!(Error::Config(format!("{}: not a sizing result or capacity set: {e}", path.display()))))
}

fn size(path: &Path, common: &Common, out: &Path) -> Result<SizingOutcome, Error> {
    let prepared = pipeline::prepare(load(path, &common.overrides())?)?;
    let outcome = pipeline::run_sizing(&prepared)?;
    pipeline::write_sizing(out, &outcome)?;
    Ok(outcome)
}

fn run(path: &Path, common: &Common, out: &Path) -> Result<RunReport, Error> {
    let prepared = pipeline::prepare(load(path, &common.overrides())?)?;
    let sizing = pipeline::run_sizing(&prepared)?;
    pipeline::write_sizing(out, &sizing)?;
    let chosen = sizing.chosen().clone();
    let capacities = chosen.capacities;
    let outcome = pipeline::run_dispatch(&prepared, &capacities, Some(chosen))?;
    pipeline::write_dispatch(out, &outcome)?;
    Ok(outcome.report)
}

fn sweep(common: &Common) -> anyhow::Result<Vec<String>> {
    let mut paths: Vec<PathBuf> = glob::glob(&common.config)
        .map_err(|e| Error::Config(format!("bad pattern {}: {e}", common.config)))?
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Config(e.to_string()))?;
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no scenario matches {}", common.config)).into());
    }
    let results: Vec<(String, Result<RunReport, Error>)> = paths
        .par_iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let r = ScenarioConfig::load(p)
                .map_err(Error::from)
                .and_then(|cfg| run(p, common, &common.out.join(&cfg.id)));
            let id = match &r {
                Ok(rep) => rep.scenario.clone(),
                Err(_) => label,
            };
            (id, r)
        })
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => failures.push((id, e)),
        }
    }
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    std::fs::create_dir_all(&common.out).map_err(|e| Error::Io(e.to_string()))?;
    let table = sweep_table(&reports);
    std::fs::write(common.out.join("sweep.txt"), &table).map_err(|e| Error::Io(e.to_string()))?;
    write_sweep_csv(&common.out.join("sweep.csv"), &reports)?;
    print!("{table}");
    for (id, e) in &failures {
        eprintln!("scenario {id} failed: {e}");
    }
    if let Some((id, e)) = failures.into_iter().next() {
        return Err(anyhow!(e).context(format!("scenario {id} failed")));
    }
    Ok(reports.into_iter().map(|r| r.scenario).collect())
}

fn write_sweep_csv(path: &Path, reports: &[RunReport]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scenario",
        "chiller_kw",
        "tes_chiller_kw",
        "tes_kwh",
        "bes_kw",
        "bes_kwh",
        "baseline_total",
        "optimized_total",
        "total_saving",
        "total_saving_pct",
        "energy_charge_saving",
        "demand_charge_saving",
        "peak_reduction_kw",
        "peak_reduction_pct",
    ])?;
    for r in reports {
        let c = &r.capacities;
        let row = [
            c.chiller_kw,
            c.tes_chiller_kw,
            c.tes_kwh,
            c.bes_kw,
            c.bes_kwh,
            r.total.baseline,
            r.total.optimized,
            r.total.amount,
            r.total.percent,
            r.energy_charge.amount,
            r.demand_charge.amount,
            r.peak_kw.amount,
            r.peak_kw.percent,
        ];
        let mut rec = vec![r.scenario.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map(Error::kind)
        .unwrap_or(FailureKind::Other);
    match kind {
        FailureKind::Config => 2,
        FailureKind::Infeasible => 3,
        FailureKind::SolverLimit => 4,
        FailureKind::Other => 1,
    }
}

fn status_name(code: u8) -> &'static str {
    match code {
        2 => "config-error",
        3 => "infeasible",
        4 => "solver-limit",
        _ => "error",
    }
}

/// Leaves `status.json` next to the outputs so scripts need not parse stderr.
fn write_status(out: &Path, code: u8, message: &str) {
    let status = serde_json::json!({
        "status": if code == 0 { "ok" } else { status_name(code) },
        "exit_code": code,
        "message": message,
    });
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("status.json"), format!("{status:#}\n"));
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Size(c) => {
            let outcome = size(Path::new(&c.config), c, &c.out)?;
            println!("Optimal sizes\n{}", outcome.optimal);
            if let Some(com) = &outcome.commercial {
                println!("\nCommercial sizes\n{com}");
            }
        }
        Command::Dispatch { common: c, sizes } => {
            let prepared = pipeline::prepare(load(Path::new(&c.config), &c.overrides())?)?;
            let capacities = match sizes {
                Some(p) => read_sizes(p)?,
                None => pipeline::configured_capacities(&prepared.config),
            };
            let outcome = pipeline::run_dispatch(&prepared, &capacities, None)?;
            pipeline::write_dispatch(&c.out, &outcome)?;
            print!("{}", outcome.report.savings_table());
        }
        Command::Run(c) => {
            let report = run(Path::new(&c.config), c, &c.out)?;
            print!("{}", report.savings_table());
        }
        Command::Sweep(c) => {
            sweep(c)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Size(c) | Command::Run(c) | Command::Sweep(c) => c.out.clone(),
        Command::Dispatch { common, .. } => common.out.clone(),
    };
    match execute(&cli) {
        Ok(()) => {
            write_status(&out, 0, "");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let msg = format!("{e:#}");
            eprintln!("error: {msg}");
            write_status(&out, code, &msg);
            ExitCode::from(code)
        }
    }
}
