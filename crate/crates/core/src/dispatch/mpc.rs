use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use serde::{Deserialize, Serialize};

use crate::models::{Assets, BesSpec, ChillerSpec, RateCurve, TesSpec};
use crate::plant::{plant_step, ControlAction, EventKind, Exogenous, PlantEvent, PlantState};
use crate::series::StepSeries;
use crate::tariff::{compute_bill, BillingMonth, Tariff};

use super::problem::{solve_horizon, DispatchOptions, HorizonInputs, HorizonMonth};
use super::trace::{DispatchTrace, TraceEvent, TraceRow, TIMESTAMP_FORMAT};
use super::DispatchError;

#[derive(Clone, Debug, PartialEq)]
pub struct MpcOptions {
    /// Look-ahead steps per solve.
    pub horizon: usize,
    /// Planned steps applied before re-solving.
    pub apply_steps: usize,
    pub dispatch: DispatchOptions,
    /// Starting SOCs; both default to their minimum.
    pub initial_soc_tes: Option<f64>,
    pub initial_soc_bes: Option<f64>,
    /// Perturbs look-ahead forecasts; off by default (perfect foresight).
    pub forecast_noise: Option<ForecastNoise>,
}

/// Multiplicative Gaussian error on forecast cooling and non-flexible load.
/// The current step is always known exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastNoise {
    pub relative_std: f64,
    pub seed: u64,
}

impl Default for MpcOptions {
    fn default() -> Self {
        Self {
            horizon: 24,
            apply_steps: 1,
            dispatch: DispatchOptions::default(),
            initial_soc_tes: None,
            initial_soc_bes: None,
            forecast_noise: None,
        }
    }
}

struct Recorder<'a> {
    series: &'a StepSeries,
    rows: Vec<TraceRow>,
    events: Vec<TraceEvent>,
}

impl Recorder<'_> {
    fn event(&mut self, step: usize, e: PlantEvent) {
        self.events.push(TraceEvent {
            step,
            timestamp: self.series.timestamps[step].format(TIMESTAMP_FORMAT).to_string(),
            kind: e.kind,
            detail: e.detail,
        });
    }

    fn apply(
        &mut self,
        assets: &Assets,
        state: PlantState,
        step: usize,
        action: &ControlAction,
        planned: Option<f64>,
    ) -> Result<PlantState, DispatchError> {
        let s = self.series;
        let exo = Exogenous {
            q_load: s.q_load[step],
            p_non: s.p_non[step],
            op_base: s.op_base[step],
            op_tes: s.op_tes[step],
            month: Some(s.months[step]),
        };
        let (next, res) = plant_step(assets, state, action, &exo, s.dt)?;
        if s.clamped_conditions.binary_search(&step).is_ok() {
            self.event(
                step,
                PlantEvent {
                    kind: EventKind::ConditionClamped,
                    detail: format!("condenser temperature clamped at {} °C outdoor", s.oat[step]),
                },
            );
        }
        for e in res.events {
            self.event(step, e);
        }
        self.rows.push(TraceRow {
            timestamp: s.timestamps[step].format(TIMESTAMP_FORMAT).to_string(),
            q_load_kw: s.q_load[step],
            p_nonflex_kw: s.p_non[step],
            oat_c: s.oat[step],
            price: s.prices[step],
            demand_rate: s.demand_rates[step],
            q_tes_charge_kw: res.action.q_ch,
            q_tes_discharge_kw: res.action.q_dis,
            q_tes_direct_kw: res.q_direct,
            q_base_kw: res.action.q_base,
            p_bes_charge_kw: res.action.p_bes_ch,
            p_bes_discharge_kw: res.action.p_bes_dis,
            soc_tes: next.soc_tes,
            soc_bes: next.soc_bes,
            p_chiller_base_kw: res.p_chiller_base,
            p_chiller_tes_kw: res.p_chiller_tes,
            p_chiller_kw: res.p_chiller,
            p_bes_kw: res.p_bes,
            p_total_kw: res.p_total,
            planned_p_total_kw: planned,
            unmet_kw: res.unmet_kw,
            baseline_p_total_kw: None,
        });
        Ok(next)
    }

    fn finish(self, tariff: &Tariff, solves: usize) -> Result<DispatchTrace, DispatchError> {
        let p: Vec<f64> = self.rows.iter().map(|r| r.p_total_kw).collect();
        let bill = compute_bill(tariff, &self.series.timestamps, &p, self.series.dt)?;
        Ok(DispatchTrace {
            dt: self.series.dt,
            rows: self.rows,
            events: self.events,
            bill,
            solves,
        })
    }
}

fn horizon_inputs(
    series: &StepSeries,
    start: usize,
    len: usize,
    state: &PlantState,
    peaks: &HashMap<BillingMonth, f64>,
    reserve: &[f64],
) -> HorizonInputs {
    let range = start..start + len;
    let mut months: Vec<BillingMonth> = Vec::new();
    let mut month_of_step = Vec::with_capacity(len);
    for m in &series.months[range.clone()] {
        let idx = match months.iter().position(|x| x == m) {
            Some(i) => i,
            None => {
                months.push(*m);
                months.len() - 1
            }
        };
        month_of_step.push(idx);
    }
    let first_step_of: Vec<usize> = (0..months.len())
        .map(|i| start + month_of_step.iter().position(|&x| x == i).unwrap_or(0))
        .collect();
    HorizonInputs {
        q_load: series.q_load[range.clone()].to_vec(),
        p_non: series.p_non[range.clone()].to_vec(),
        op_base: series.op_base[range.clone()].to_vec(),
        op_tes: series.op_tes[range.clone()].to_vec(),
        prices: series.prices[range].to_vec(),
        month_of_step,
        months: months
            .iter()
            .zip(first_step_of)
            .map(|(m, i)| HorizonMonth {
                incumbent_peak: peaks.get(m).copied().unwrap_or(0.0),
                demand_rate: series.demand_rates[i],
            })
            .collect(),
        soc_tes: state.soc_tes,
        soc_bes: state.soc_bes,
        dt: series.dt,
        tes_reserve: if start + len < series.len() { reserve[start + len] } else { 0.0 },
    }
}

/// Lowest SOC from which every later shortfall of the base chiller can still
/// be covered with the ice chiller running flat out. Ending
/// each horizon at or above this keeps the next ones solvable.
fn tes_reserve_path(series: &StepSeries, assets: &Assets) -> Result<Vec<f64>, DispatchError> {
    let n = series.len();
    let tes = &assets.tes;
    let mut r = vec![0.0; n + 1];
    if tes.capacity_kwh <= 0.0 {
        return Ok(r);
    }
    let slowest = |c: &RateCurve| match c {
        RateCurve::Constant(v) => *v,
        RateCurve::Table(pts) => pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
    };
    let ch_curve = slowest(&tes.max_charge_curve);
    let keep = 1.0 - tes.standby_loss_per_step;
    r[n] = tes.soc_min;
    for t in (0..n).rev() {
        let base_max = assets.base_chiller.max_load(&series.op_base[t])?;
        let need = (series.q_load[t] - base_max).max(0.0);
        let make = assets.tes_chiller.max_load(&series.op_tes[t])?.min(ch_curve);
        let fill = (r[t + 1] + (need - make) * series.dt / tes.capacity_kwh) / keep;
        r[t] = fill.max(tes.soc_min).min(tes.soc_max);
    }
    Ok(r)
}

/// Receding-horizon dispatch over the whole series with perfect forecasts.
///
/// When a horizon cannot be solved the step falls back to the rule-based
/// action (base chiller first, ice only for the shortfall) and a
/// [`EventKind::Fallback`] event is recorded.
pub fn run_mpc(series: &StepSeries, assets: &Assets, tariff: &Tariff, options: &MpcOptions) -> Result<DispatchTrace, DispatchError> {
    assets.validate()?;
    if series.is_empty() {
        return Err(DispatchError::BadInput("empty profile".into()));
    }
    if options.horizon == 0 || options.apply_steps == 0 {
        return Err(DispatchError::BadInput("horizon and apply_steps must be positive".into()));
    }
    let n = series.len();
    let mut state = PlantState::new(
        options.initial_soc_tes.unwrap_or(assets.tes.soc_min),
        options.initial_soc_bes.unwrap_or(assets.bes.soc_min),
    );
    let mut rec = Recorder {
        series,
        rows: Vec::with_capacity(n),
        events: Vec::new(),
    };
    let mut peaks: HashMap<BillingMonth, f64> = HashMap::new();
    let mut noise = options
        .forecast_noise
        .map(|n| (n, ChaCha8Rng::seed_from_u64(n.seed)));
    let reserve = tes_reserve_path(series, assets)?;
    let mut solves = 0;
    let mut t = 0;
    while t < n {
        let len = options.horizon.min(n - t);
        let mut inputs = horizon_inputs(series, t, len, &state, &peaks, &reserve);
        if let Some((noise, rng)) = noise.as_mut() {
            for i in 1..len {
                inputs.q_load[i] = (inputs.q_load[i] * (1.0 + noise.relative_std * rng.sample::<f64, _>(StandardNormal))).max(0.0);
                inputs.p_non[i] = (inputs.p_non[i] * (1.0 + noise.relative_std * rng.sample::<f64, _>(StandardNormal))).max(0.0);
            }
        }
        solves += 1;
        let applied = match solve_horizon(assets, &inputs, &options.dispatch) {
            Ok(plan) => {
                let m = options.apply_steps.min(len);
                for i in 0..m {
                    state = rec.apply(assets, state, t + i, &plan.actions[i], Some(plan.p_total[i]))?;
                    let p = rec.rows[t + i].p_total_kw;
                    let e = peaks.entry(series.months[t + i]).or_insert(0.0);
                    *e = e.max(p);
                }
                m
            }
            Err(err @ (DispatchError::Infeasible { .. } | DispatchError::SolverLimit(_) | DispatchError::Lp(_))) => {
                rec.event(
                    t,
                    PlantEvent {
                        kind: EventKind::Fallback,
                        detail: err.to_string(),
                    },
                );
                state = rec.apply(assets, state, t, &ControlAction::default(), None)?;
                let p = rec.rows[t].p_total_kw;
                let e = peaks.entry(series.months[t]).or_insert(0.0);
                *e = e.max(p);
                1
            }
            Err(e) => return Err(e),
        };
        t += applied;
    }
    rec.finish(tariff, solves)
}

/// The plant without storage: `chiller` serves every load directly.
pub fn baseline_dispatch(series: &StepSeries, chiller: &ChillerSpec, tariff: &Tariff) -> Result<DispatchTrace, DispatchError> {
    if series.is_empty() {
        return Err(DispatchError::BadInput("empty profile".into()));
    }
    let assets = Assets {
        base_chiller: chiller.clone(),
        tes_chiller: ChillerSpec {
            capacity: 0.0,
            ..chiller.clone()
        },
        tes: TesSpec::none(),
        bes: BesSpec::none(),
    };
    assets.validate()?;
    let mut rec = Recorder {
        series,
        rows: Vec::with_capacity(series.len()),
        events: Vec::new(),
    };
    let mut state = PlantState::new(0.0, 0.0);
    for t in 0..series.len() {
        let action = ControlAction {
            q_base: series.q_load[t],
            ..ControlAction::default()
        };
        state = rec.apply(&assets, state, t, &action, None)?;
        let short = rec.rows[t].unmet_kw;
        if short > 1e-6 {
            return Err(DispatchError::Infeasible { step: t, deficit: short });
        }
    }
    rec.finish(tariff, 0)
}
