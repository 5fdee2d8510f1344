//! Nonlinear plant the controller acts on.
//!
//! The plant evaluates the full chiller curves (no cuts) and clamps whatever
//! it is told to do into what is physically admissible, logging each
//! correction instead of failing.

use serde::{Deserialize, Serialize};

use crate::models::{
    bes_step, chiller_power, feasible_bounds, tes_step, Assets, ModelError, OperatingPoint, TEMPERATURE_RANGE,
};
use crate::tariff::BillingMonth;

/// Flows below this (kW) are solver noise and treated as zero.
pub const ACTION_EPS: f64 = 1e-6;

/// Condenser leaving temperature from outdoor air plus a fixed approach,
/// clamped to the valid operating range. The flag reports clamping.
pub fn condenser_temperature(outdoor_air: f64, approach: f64) -> (f64, bool) {
    let t = outdoor_air + approach.max(0.0);
    let (lo, hi) = TEMPERATURE_RANGE;
    let c = t.clamp(lo, hi);
    (c, c != t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Chilled-water supply setpoint of the base chiller, °C.
    #[serde(default = "default_t_chw_base")]
    pub t_chw_base: f64,
    /// Brine supply setpoint of the ice-making chiller, °C.
    #[serde(default = "default_t_chw_tes")]
    pub t_chw_tes: f64,
    /// Condenser approach over outdoor air, K.
    #[serde(default = "default_approach")]
    pub approach_k: f64,
}

fn default_t_chw_base() -> f64 {
    6.67
}

fn default_t_chw_tes() -> f64 {
    -5.0
}

fn default_approach() -> f64 {
    3.0
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            t_chw_base: default_t_chw_base(),
            t_chw_tes: default_t_chw_tes(),
            approach_k: default_approach(),
        }
    }
}

impl PlantConfig {
    /// Operating points of the base and ice chillers at outdoor air `oat`.
    pub fn operating_points(&self, oat: f64) -> Result<(OperatingPoint, OperatingPoint, bool), ModelError> {
        let (cond, clamped) = condenser_temperature(oat, self.approach_k);
        Ok((
            OperatingPoint::new(self.t_chw_base, cond)?,
            OperatingPoint::new(self.t_chw_tes, cond)?,
            clamped,
        ))
    }
}

/// One step of set-points: TES charge/discharge, battery charge/discharge
/// (grid side) and the cooling left to the base chiller.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlAction {
    pub q_ch: f64,
    pub q_dis: f64,
    pub p_bes_ch: f64,
    pub p_bes_dis: f64,
    pub q_base: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Simultaneous charge and discharge replaced by the net flow.
    Netted,
    /// A set-point exceeded a physical bound and was reduced.
    Clamped,
    /// TES discharge increased because the base chiller was short.
    DischargeRaised,
    /// Cooling demand could not be met.
    UnmetLoad,
    /// Battery discharge reduced to avoid exporting to the grid.
    ExportPrevented,
    /// Condenser temperature left the valid range.
    ConditionClamped,
    /// The optimizer failed; a rule-based action was used.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantEvent {
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub soc_tes: f64,
    pub soc_bes: f64,
    pub month: Option<BillingMonth>,
    pub month_peak: f64,
    pub p_total_history: Vec<f64>,
}

impl PlantState {
    pub fn new(soc_tes: f64, soc_bes: f64) -> Self {
        Self {
            soc_tes,
            soc_bes,
            month: None,
            month_peak: 0.0,
            p_total_history: Vec::new(),
        }
    }
}

/// Uncontrolled inputs of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exogenous {
    pub q_load: f64,
    pub p_non: f64,
    pub op_base: OperatingPoint,
    pub op_tes: OperatingPoint,
    pub month: Option<BillingMonth>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    /// What was actually applied.
    pub action: ControlAction,
    pub p_chiller_base: f64,
    pub p_chiller_tes: f64,
    pub p_chiller: f64,
    pub p_bes: f64,
    pub p_total: f64,
    /// Ice-chiller output sent straight to the load.
    pub q_direct: f64,
    pub delivered_cooling: f64,
    pub unmet_kw: f64,
    pub events: Vec<PlantEvent>,
}

fn snap(v: f64) -> f64 {
    if v.is_nan() || v < ACTION_EPS {
        0.0
    } else {
        v
    }
}

fn clamp_to(value: &mut f64, bound: f64, what: &str, events: &mut Vec<PlantEvent>) {
    if *value > bound {
        if *value - bound > ACTION_EPS * (1.0 + bound.abs()) {
            events.push(PlantEvent {
                kind: EventKind::Clamped,
                detail: format!("{what} {:.6} -> {:.6} kW", value, bound),
            });
        }
        *value = bound;
    }
}

/// Applies `action` for one step of `dt` hours.
pub fn plant_step(
    assets: &Assets,
    state: PlantState,
    action: &ControlAction,
    exo: &Exogenous,
    dt: f64,
) -> Result<(PlantState, StepResult), ModelError> {
    let mut events = Vec::new();
    let mut q_ch = snap(action.q_ch);
    let mut q_dis = snap(action.q_dis);
    let mut p_ch = snap(action.p_bes_ch);
    let mut p_dis = snap(action.p_bes_dis);

    // Simultaneous ice making and melting is netted: the overlap is ice-chiller
    // output sent straight to the load, so tank, delivered cooling and
    // chiller power are all unchanged.
    let mut direct = 0.0;
    if q_ch > 0.0 && q_dis > 0.0 {
        direct = q_ch.min(q_dis);
        events.push(PlantEvent {
            kind: EventKind::Netted,
            detail: format!("TES charge {q_ch:.6} and discharge {q_dis:.6} kW; {direct:.6} kW served directly"),
        });
        q_ch -= direct;
        q_dis -= direct;
    }
    if p_ch > 0.0 && p_dis > 0.0 {
        events.push(PlantEvent {
            kind: EventKind::Netted,
            detail: format!("BES charge {p_ch:.6} and discharge {p_dis:.6} kW"),
        });
        let net = p_ch - p_dis;
        p_ch = net.max(0.0);
        p_dis = (-net).max(0.0);
    }

    let q_load = exo.q_load.max(0.0);
    let tes_cap = if assets.tes.capacity_kwh > 0.0 {
        assets.tes_chiller.max_load(&exo.op_tes)?
    } else {
        0.0
    };
    let (ch_max, dis_max) = feasible_bounds(&assets.tes, state.soc_tes, tes_cap, q_load, dt);
    clamp_to(&mut direct, tes_cap.min(q_load), "TES direct cooling", &mut events);
    clamp_to(&mut q_ch, ch_max.min(tes_cap - direct), "TES charge", &mut events);
    clamp_to(&mut q_dis, dis_max.min(q_load - direct), "TES discharge", &mut events);

    let base_max = assets.base_chiller.max_load(&exo.op_base)?;
    let mut short = q_load - q_dis - direct - base_max;
    if short > 0.0 && q_ch > 0.0 {
        let moved = q_ch.min(short);
        if moved > ACTION_EPS {
            events.push(PlantEvent {
                kind: EventKind::Netted,
                detail: format!("TES charge {moved:.6} kW served the load directly"),
            });
        }
        q_ch -= moved;
        direct += moved;
        short -= moved;
    }
    if short > 0.0 {
        let raised = (q_dis + short).min(dis_max);
        if raised > q_dis {
            if raised - q_dis > ACTION_EPS {
                events.push(PlantEvent {
                    kind: EventKind::DischargeRaised,
                    detail: format!("TES discharge {q_dis:.6} -> {raised:.6} kW"),
                });
            }
            q_dis = raised;
        }
    }
    let mut q_base = (q_load - q_dis - direct).max(0.0);
    let mut unmet = 0.0;
    if q_base > base_max {
        unmet = q_base - base_max;
        q_base = base_max;
        if unmet > ACTION_EPS {
            events.push(PlantEvent {
                kind: EventKind::UnmetLoad,
                detail: format!("{unmet:.6} kW of cooling unmet"),
            });
        }
    }

    let (pch_max, pdis_max) = assets.bes.feasible_bounds(state.soc_bes, dt);
    clamp_to(&mut p_ch, pch_max, "BES charge", &mut events);
    clamp_to(&mut p_dis, pdis_max, "BES discharge", &mut events);

    let p_base = chiller_power(&assets.base_chiller, &exo.op_base, q_base)?.p_elec;
    let p_tes = chiller_power(&assets.tes_chiller, &exo.op_tes, q_ch + direct)?.p_elec;
    let p_chiller = p_base + p_tes;
    let mut p_total = exo.p_non + p_chiller + p_ch - p_dis;
    if p_total < 0.0 {
        let cut = (-p_total).min(p_dis);
        events.push(PlantEvent {
            kind: EventKind::ExportPrevented,
            detail: format!("BES discharge reduced by {cut:.6} kW"),
        });
        p_dis -= cut;
        p_total = exo.p_non + p_chiller + p_ch - p_dis;
    }

    let soc_tes = tes_step(&assets.tes, state.soc_tes, q_ch, q_dis, dt)?;
    let (soc_bes, p_bes) = bes_step(&assets.bes, state.soc_bes, p_ch, p_dis, dt)?;

    let mut next = state;
    next.soc_tes = soc_tes;
    next.soc_bes = soc_bes;
    if exo.month.is_some() && exo.month != next.month {
        next.month = exo.month;
        next.month_peak = 0.0;
    }
    next.month_peak = next.month_peak.max(p_total);
    next.p_total_history.push(p_total);

    Ok((
        next,
        StepResult {
            action: ControlAction {
                q_ch,
                q_dis,
                p_bes_ch: p_ch,
                p_bes_dis: p_dis,
                q_base,
            },
            p_chiller_base: p_base,
            p_chiller_tes: p_tes,
            p_chiller,
            p_bes,
            p_total,
            q_direct: direct,
            delivered_cooling: q_base + q_dis + direct,
            unmet_kw: unmet,
            events,
        },
    ))
}
