//! Scenario-level orchestration: size, dispatch, compare, write outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::dispatch::{baseline_dispatch, run_mpc, DispatchTrace, SolveMode};
use crate::models::{eval_curves, ChillerSpec};
use crate::profiles::ProfileSet;
use crate::report::RunReport;
use crate::series::StepSeries;
use crate::sizing::{commercial_rounding, solve_sizing, Capacities, SizingResult, SizingYear};
use crate::Error;

/// Command-line adjustments applied on top of a scenario file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub breakpoints: Option<usize>,
    pub horizon: Option<usize>,
    pub capital_scale: Option<f64>,
    pub mode: Option<SolveMode>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), Error> {
        if let Some(seed) = self.seed {
            match cfg.profiles.synthetic.as_mut() {
                Some(s) => s.seed = seed,
                None => return Err(Error::Config("--seed needs synthetic profiles".into())),
            }
        }
        if let Some(n) = self.breakpoints {
            cfg.mpc.breakpoints = n;
            cfg.sizing.breakpoints = n;
        }
        if let Some(k) = self.horizon {
            cfg.mpc.horizon = k;
        }
        if let Some(x) = self.capital_scale {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("capital scale {x}")));
            }
            let p = &mut cfg.sizing.prices;
            p.chiller *= x;
            p.tes_chiller *= x;
            p.tes *= x;
            p.bes_power *= x;
            p.bes_energy *= x;
        }
        if let Some(m) = self.mode {
            cfg.mpc.mode = m;
        }
        cfg.validate_static().map_err(Error::from)
    }
}

/// A scenario with its profiles loaded and joined with the tariff.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub profiles: ProfileSet,
    pub series: StepSeries,
}

pub fn prepare(config: ScenarioConfig) -> Result<Prepared, Error> {
    let profiles = config.load_profiles()?;
    let series = StepSeries::build(&profiles, &config.tariff, &config.plant)?;
    Ok(Prepared {
        config,
        profiles,
        series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingOutcome {
    pub optimal: SizingResult,
    /// Cheapest catalog combination, when a catalog is configured.
    pub commercial: Option<SizingResult>,
}

impl SizingOutcome {
    /// Sizes to build and dispatch: the catalog pick when there is one.
    pub fn chosen(&self) -> &SizingResult {
        self.commercial.as_ref().unwrap_or(&self.optimal)
    }
}

pub fn run_sizing(p: &Prepared) -> Result<SizingOutcome, Error> {
    let cfg = &p.config;
    let year = SizingYear::new(&p.series, &cfg.sizing.resolution, cfg.assets.base_chiller.cop_ref);
    let optimal = solve_sizing(&cfg.sizing, &cfg.assets, &year)?;
    let commercial = match &cfg.catalog {
        Some(cat) => Some(commercial_rounding(&optimal, cat, &cfg.sizing, &cfg.assets, &year)?),
        None => None,
    };
    Ok(SizingOutcome { optimal, commercial })
}

/// Smallest whole-kW chiller of the scenario's type that carries every load.
pub fn baseline_chiller(p: &Prepared) -> Result<ChillerSpec, Error> {
    let mut spec = p.config.assets.base_chiller.clone();
    spec.capacity = match p.config.baseline.chiller_kw {
        Some(c) => c,
        None => {
            let mut need: f64 = 0.0;
            for (q, op) in p.series.q_load.iter().zip(&p.series.op_base) {
                let psi1 = eval_curves(&spec.curves, op, 0.0).map_err(crate::dispatch::DispatchError::from)?.psi1;
                need = need.max(q / (psi1 * spec.plr_max));
            }
            need.ceil()
        }
    };
    Ok(spec)
}

pub struct DispatchOutcome {
    pub trace: DispatchTrace,
    pub baseline: DispatchTrace,
    pub report: RunReport,
}

pub fn run_dispatch(p: &Prepared, capacities: &Capacities, sizing: Option<SizingResult>) -> Result<DispatchOutcome, Error> {
    let cfg = &p.config;
    let assets = capacities.apply(&cfg.assets);
    let options = cfg.mpc.options(p.series.dt)?;
    let chiller = baseline_chiller(p)?;
    let baseline = baseline_dispatch(&p.series, &chiller, &cfg.tariff)?;
    let mut trace = run_mpc(&p.series, &assets, &cfg.tariff, &options)?;
    trace.attach_baseline(&baseline);
    let report = RunReport::new(&cfg.id, *capacities, sizing, chiller.capacity, &baseline, &trace);
    Ok(DispatchOutcome { trace, baseline, report })
}

/// Capacities given in the scenario's asset section.
pub fn configured_capacities(cfg: &ScenarioConfig) -> Capacities {
    let a = &cfg.assets;
    Capacities {
        chiller_kw: a.base_chiller.capacity,
        tes_chiller_kw: a.tes_chiller.capacity,
        tes_kwh: a.tes.capacity_kwh,
        bes_kw: a.bes.power_max_kw,
        bes_kwh: a.bes.capacity_kwh,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Error> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::Io(e.to_string()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io(e.to_string()))
}

/// `sizing.json` and `sizing.txt`.
pub fn write_sizing(dir: &Path, outcome: &SizingOutcome) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    write_json(dir, "sizing.json", outcome)?;
    let mut text = format!("Optimal sizes\n{}\n", outcome.optimal);
    if let Some(c) = &outcome.commercial {
        text.push_str(&format!("\nCommercial sizes\n{c}\n"));
    }
    write_text(dir, "sizing.txt", &text)
}

/// `trace.csv`, `soc.csv`, `demand.csv`, `peaks.csv`, `events.csv`,
/// `report.json` and `report.txt`.
pub fn write_dispatch(dir: &Path, outcome: &DispatchOutcome) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    let t = &outcome.trace;
    t.write_csv(create(dir, "trace.csv")?)?;
    t.write_soc_csv(create(dir, "soc.csv")?)?;
    t.write_demand_csv(create(dir, "demand.csv")?)?;
    t.write_peaks_csv(create(dir, "peaks.csv")?)?;
    t.write_events_csv(create(dir, "events.csv")?)?;
    write_json(dir, "report.json", &outcome.report)?;
    write_text(dir, "report.txt", &outcome.report.savings_table())
}
