//! Chiller, ice-tank and battery models.
//!
//! Units: kW, kWh, °C, hours. SOCs are fractions of capacity.

use serde::{Deserialize, Serialize};

/// Default valid range for chilled-water and condenser temperatures.
pub const TEMPERATURE_RANGE: (f64, f64) = (-10.0, 60.0);

/// Reference operating point the default curves are normalised at.
pub const REFERENCE_POINT: OperatingPoint = OperatingPoint {
    t_chw_supply: 6.67,
    t_cond_leaving: 35.0,
};

/// Slack allowed when checking SOC bounds after a step.
pub const SOC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("curve {curve} evaluated to a non-finite or non-positive value {value}")]
    CurveEvaluation { curve: &'static str, value: f64 },
    #[error("cooling load exceeds available capacity by {deficit:.6} kW")]
    CapacityExceeded { deficit: f64 },
    #[error("control violates {limit}: {detail}")]
    InfeasibleControl { limit: &'static str, detail: String },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("temperature {value} °C outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
}

fn infeasible(limit: &'static str, detail: String) -> ModelError {
    ModelError::InfeasibleControl { limit, detail }
}

/// Chilled-water supply and condenser leaving temperatures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub t_chw_supply: f64,
    pub t_cond_leaving: f64,
}

impl OperatingPoint {
    pub fn new(t_chw_supply: f64, t_cond_leaving: f64) -> Result<Self, ModelError> {
        let (lo, hi) = TEMPERATURE_RANGE;
        for value in [t_chw_supply, t_cond_leaving] {
            if !(lo..=hi).contains(&value) {
                return Err(ModelError::OutOfRange { value, lo, hi });
            }
        }
        Ok(Self {
            t_chw_supply,
            t_cond_leaving,
        })
    }
}

/// Biquadratic capacity and EIR temperature curves plus the quadratic EIR
/// part-load curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChillerCurves {
    pub cap_ft: [f64; 6],
    pub eir_ft: [f64; 6],
    pub eir_plr: [f64; 3],
}

/// Value of `k0 + k1 x + k2 x² + k3 y + k4 y² + k5 x y`.
fn biquadratic(k: &[f64; 6], x: f64, y: f64) -> f64 {
    k[0] + k[1] * x + k[2] * x * x + k[3] * y + k[4] * y * y + k[5] * x * y
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveValues {
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
}

impl ChillerCurves {
    /// Curves under which power is simply load / COP.
    pub fn identity() -> Self {
        Self {
            cap_ft: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            eir_ft: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            eir_plr: [0.0, 1.0, 0.0],
        }
    }

    /// Example electric-chiller curve set, normalised to 1 at
    /// [`REFERENCE_POINT`]. Illustrative only: capacity gains 2.5 %/K of
    /// chilled-water temperature and loses 0.6 %/K of condenser temperature;
    /// EIR falls 2.5 %/K and rises 1.5 %/K respectively. The part-load curve
    /// has the shape of typical published screw-chiller curves, including a
    /// small idle term: a chiller that is installed but unloaded still draws
    /// 6 % of its rated power.
    pub fn example() -> Self {
        let (tr, cr) = (REFERENCE_POINT.t_chw_supply, REFERENCE_POINT.t_cond_leaving);
        let (ca, cc) = (0.025, -0.006);
        let (ea, ec) = (-0.025, 0.015);
        Self {
            cap_ft: [1.0 - ca * tr - cc * cr, ca, 0.0, cc, 0.0, 0.0],
            eir_ft: [1.0 - ea * tr - ec * cr, ea, 0.0, ec, 0.0, 0.0],
            eir_plr: [0.06, 0.59, 0.35],
        }
    }

    pub fn cap_ft(&self, op: &OperatingPoint) -> f64 {
        biquadratic(&self.cap_ft, op.t_chw_supply, op.t_cond_leaving)
    }

    pub fn eir_ft(&self, op: &OperatingPoint) -> f64 {
        biquadratic(&self.eir_ft, op.t_chw_supply, op.t_cond_leaving)
    }

    pub fn eir_plr(&self, plr: f64) -> f64 {
        let c = &self.eir_plr;
        c[0] + c[1] * plr + c[2] * plr * plr
    }

    /// The part-load curve is convex, which tangent cuts require.
    pub fn is_plr_convex(&self) -> bool {
        self.eir_plr[2] >= 0.0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        eval_curves(self, &REFERENCE_POINT, 1.0).map(|_| ())
    }
}

impl Default for ChillerCurves {
    fn default() -> Self {
        Self::example()
    }
}

pub fn eval_curves(
    curves: &ChillerCurves,
    op: &OperatingPoint,
    plr: f64,
) -> Result<CurveValues, ModelError> {
    let psi1 = curves.cap_ft(op);
    let psi2 = curves.eir_ft(op);
    let psi3 = curves.eir_plr(plr);
    for (curve, value, positive) in [("cap_ft", psi1, true), ("eir_ft", psi2, true), ("eir_plr", psi3, false)] {
        if !value.is_finite() || (positive && value <= 0.0) {
            return Err(ModelError::CurveEvaluation { curve, value });
        }
    }
    Ok(CurveValues { psi1, psi2, psi3 })
}

fn default_plr_max() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChillerSpec {
    /// Rated cooling capacity, kW.
    #[serde(default)]
    pub capacity: f64,
    pub cop_ref: f64,
    #[serde(default)]
    pub curves: ChillerCurves,
    /// Minimum part-load ratio while running; 0 disables commitment.
    #[serde(default)]
    pub min_plr: f64,
    #[serde(default = "default_plr_max")]
    pub plr_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChillerOutput {
    pub p_elec: f64,
    pub q_avail: f64,
    pub plr: f64,
}

impl ChillerSpec {
    pub fn new(capacity: f64, cop_ref: f64, curves: ChillerCurves) -> Self {
        Self {
            capacity,
            cop_ref,
            curves,
            min_plr: 0.0,
            plr_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.capacity >= 0.0 && self.capacity.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("chiller capacity {}", self.capacity)));
        }
        if !(self.cop_ref > 0.0 && self.cop_ref.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("cop_ref {}", self.cop_ref)));
        }
        if !(0.0..1.0).contains(&self.min_plr) {
            return Err(ModelError::InvalidSpec(format!("min_plr {}", self.min_plr)));
        }
        if !(self.plr_max > 0.0 && self.plr_max.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("plr_max {}", self.plr_max)));
        }
        self.curves.validate()
    }

    /// Available cooling `C·Ψ1` at `op`, kW.
    pub fn q_avail(&self, op: &OperatingPoint) -> Result<f64, ModelError> {
        Ok(self.capacity * eval_curves(&self.curves, op, 0.0)?.psi1)
    }

    /// Largest load the chiller accepts at `op`.
    pub fn max_load(&self, op: &OperatingPoint) -> Result<f64, ModelError> {
        Ok(self.q_avail(op)? * self.plr_max)
    }
}

/// Electric power drawn while delivering `q_load` at `op`.
///
/// Below `min_plr` the chiller cycles: it runs at `min_plr` for the fraction
/// `plr / min_plr` of the step, so power scales linearly down to zero.
pub fn chiller_power(
    spec: &ChillerSpec,
    op: &OperatingPoint,
    q_load: f64,
) -> Result<ChillerOutput, ModelError> {
    if !(q_load >= 0.0) {
        return Err(infeasible("non-negative load", format!("q_load = {q_load}")));
    }
    let v = eval_curves(&spec.curves, op, 0.0)?;
    let q_avail = spec.capacity * v.psi1;
    if q_load == 0.0 {
        let idle = if spec.min_plr > 0.0 { 0.0 } else { spec.curves.eir_plr(0.0) };
        return Ok(ChillerOutput {
            p_elec: q_avail / spec.cop_ref * v.psi2 * idle,
            q_avail,
            plr: 0.0,
        });
    }
    let limit = q_avail * spec.plr_max;
    if q_load > limit * (1.0 + 1e-12) {
        return Err(ModelError::CapacityExceeded {
            deficit: q_load - limit,
        });
    }
    let plr = q_load / q_avail;
    let (run_plr, duty) = if plr < spec.min_plr {
        (spec.min_plr, plr / spec.min_plr)
    } else {
        (plr, 1.0)
    };
    let psi3 = spec.curves.eir_plr(run_plr);
    if !psi3.is_finite() {
        return Err(ModelError::CurveEvaluation {
            curve: "eir_plr",
            value: psi3,
        });
    }
    Ok(ChillerOutput {
        p_elec: q_avail / spec.cop_ref * v.psi2 * psi3 * duty,
        q_avail,
        plr,
    })
}

/// Piecewise-linear maximum rate as a function of SOC.
///
/// Either a constant or a table of `[soc, kW]` points with flat
/// extrapolation outside the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateCurve {
    Constant(f64),
    Table(Vec<[f64; 2]>),
}

impl Default for RateCurve {
    fn default() -> Self {
        RateCurve::Constant(f64::INFINITY)
    }
}

impl RateCurve {
    pub fn eval(&self, soc: f64) -> f64 {
        match self {
            RateCurve::Constant(v) => *v,
            RateCurve::Table(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if soc <= first[0] {
                    return first[1];
                }
                if soc >= last[0] {
                    return last[1];
                }
                let i = pts.partition_point(|p| p[0] <= soc);
                let (a, b) = (pts[i - 1], pts[i]);
                a[1] + (b[1] - a[1]) * (soc - a[0]) / (b[0] - a[0])
            }
        }
    }

    pub fn is_unlimited(&self) -> bool {
        matches!(self, RateCurve::Constant(v) if v.is_infinite())
    }

    /// Slopes never increase along the table.
    pub fn is_concave(&self) -> bool {
        match self {
            RateCurve::Constant(_) => true,
            RateCurve::Table(pts) => {
                let slopes: Vec<f64> = pts
                    .windows(2)
                    .map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]))
                    .collect();
                slopes.windows(2).all(|s| s[1] <= s[0] + 1e-12)
            }
        }
    }

    /// Lines `(intercept, slope)` whose minimum under-estimates the curve on
    /// `[lo, hi]`. Concave tables are reproduced exactly over their span (and
    /// conservatively beyond it); other tables collapse to their minimum.
    pub fn linear_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        match self {
            RateCurve::Constant(v) => vec![(*v, 0.0)],
            RateCurve::Table(pts) if pts.len() == 1 => vec![(pts[0][1], 0.0)],
            RateCurve::Table(pts) if self.is_concave() => {
                let mut pieces: Vec<(f64, f64)> = pts
                    .windows(2)
                    .map(|w| {
                        let slope = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
                        (w[0][1] - slope * w[0][0], slope)
                    })
                    .collect();
                // Flat extrapolation is representable only where it keeps
                // the curve concave.
                let (first, last) = (pieces[0].1, pieces[pieces.len() - 1].1);
                if first <= 0.0 {
                    pieces.push((pts[0][1], 0.0));
                }
                if last >= 0.0 {
                    pieces.push((pts[pts.len() - 1][1], 0.0));
                }
                pieces
            }
            RateCurve::Table(pts) => {
                let mut m = self.eval(lo).min(self.eval(hi));
                for p in pts {
                    if (lo..=hi).contains(&p[0]) {
                        m = m.min(p[1]);
                    }
                }
                vec![(m, 0.0)]
            }
        }
    }

    fn validate(&self, name: &str, lo: f64, hi: f64) -> Result<(), ModelError> {
        match self {
            RateCurve::Constant(v) if *v >= 0.0 && !v.is_nan() => Ok(()),
            RateCurve::Constant(v) => Err(ModelError::InvalidSpec(format!("{name} = {v}"))),
            RateCurve::Table(pts) => {
                if pts.is_empty() {
                    return Err(ModelError::InvalidSpec(format!("{name} table is empty")));
                }
                if pts.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(ModelError::InvalidSpec(format!("{name} SOC points must increase")));
                }
                if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(ModelError::InvalidSpec(format!("{name} has non-finite entries")));
                }
                let negative = pts.iter().any(|p| (lo..=hi).contains(&p[0]) && p[1] < 0.0)
                    || self.eval(lo) < 0.0
                    || self.eval(hi) < 0.0;
                if negative {
                    return Err(ModelError::InvalidSpec(format!("{name} is negative on [{lo}, {hi}]")));
                }
                Ok(())
            }
        }
    }
}

/// Ice tank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesSpec {
    #[serde(default)]
    pub capacity_kwh: f64,
    #[serde(default)]
    pub soc_min: f64,
    #[serde(default = "one")]
    pub soc_max: f64,
    #[serde(default)]
    pub max_charge_curve: RateCurve,
    #[serde(default)]
    pub max_discharge_curve: RateCurve,
    #[serde(default)]
    pub standby_loss_per_step: f64,
}

impl TesSpec {
    pub fn new(capacity_kwh: f64, soc_min: f64, soc_max: f64) -> Self {
        Self {
            capacity_kwh,
            soc_min,
            soc_max,
            max_charge_curve: RateCurve::default(),
            max_discharge_curve: RateCurve::default(),
            standby_loss_per_step: 0.0,
        }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.capacity_kwh >= 0.0 && self.capacity_kwh.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("TES capacity {}", self.capacity_kwh)));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(ModelError::InvalidSpec(format!(
                "TES SOC bounds [{}, {}]",
                self.soc_min, self.soc_max
            )));
        }
        if !(0.0..1.0).contains(&self.standby_loss_per_step) {
            return Err(ModelError::InvalidSpec(format!(
                "TES standby loss {}",
                self.standby_loss_per_step
            )));
        }
        self.max_charge_curve.validate("max_charge_curve", self.soc_min, self.soc_max)?;
        self.max_discharge_curve.validate("max_discharge_curve", self.soc_min, self.soc_max)
    }

    /// SOC after standby loss and before any flow.
    pub fn soc_after_loss(&self, soc: f64) -> f64 {
        soc * (1.0 - self.standby_loss_per_step)
    }
}

/// Battery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesSpec {
    #[serde(default)]
    pub capacity_kwh: f64,
    #[serde(default)]
    pub power_max_kw: f64,
    #[serde(default = "default_eta")]
    pub eta_charge: f64,
    #[serde(default = "default_eta")]
    pub eta_discharge: f64,
    #[serde(default)]
    pub soc_min: f64,
    #[serde(default = "one")]
    pub soc_max: f64,
}

fn one() -> f64 {
    1.0
}

/// Round-trip battery plus inverter efficiency per direction.
fn default_eta() -> f64 {
    0.93
}

impl BesSpec {
    pub fn none() -> Self {
        Self {
            capacity_kwh: 0.0,
            power_max_kw: 0.0,
            eta_charge: 0.93,
            eta_discharge: 0.93,
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.capacity_kwh >= 0.0 && self.capacity_kwh.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("BES capacity {}", self.capacity_kwh)));
        }
        if !(self.power_max_kw >= 0.0 && self.power_max_kw.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("BES power {}", self.power_max_kw)));
        }
        for (name, eta) in [("eta_charge", self.eta_charge), ("eta_discharge", self.eta_discharge)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(ModelError::InvalidSpec(format!("{name} {eta}")));
            }
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(ModelError::InvalidSpec(format!(
                "BES SOC bounds [{}, {}]",
                self.soc_min, self.soc_max
            )));
        }
        Ok(())
    }

    /// Largest grid-side charge and discharge powers admissible at `soc`.
    pub fn feasible_bounds(&self, soc: f64, dt: f64) -> (f64, f64) {
        if self.capacity_kwh <= 0.0 {
            return (0.0, 0.0);
        }
        let ch = (self.soc_max - soc) * self.capacity_kwh / (self.eta_charge * dt);
        let dis = (soc - self.soc_min) * self.capacity_kwh * self.eta_discharge / dt;
        (
            ch.min(self.power_max_kw).max(0.0),
            dis.min(self.power_max_kw).max(0.0),
        )
    }
}

fn check_soc(next: f64, lo: f64, hi: f64, what: &str) -> Result<f64, ModelError> {
    if next > hi + SOC_TOL {
        return Err(infeasible("upper SOC bound", format!("{what} SOC would reach {next} > {hi}")));
    }
    if next < lo - SOC_TOL {
        return Err(infeasible("lower SOC bound", format!("{what} SOC would reach {next} < {lo}")));
    }
    Ok(next.clamp(lo, hi))
}

/// Advances the tank by one step.
///
/// Rate curves are read at the beginning-of-step SOC. Standby loss alone may
/// carry the SOC below `soc_min`; discharging there is rejected.
pub fn tes_step(spec: &TesSpec, soc: f64, q_ch: f64, q_dis: f64, dt: f64) -> Result<f64, ModelError> {
    if !(q_ch >= 0.0 && q_dis >= 0.0) {
        return Err(infeasible("non-negative flow", format!("q_ch = {q_ch}, q_dis = {q_dis}")));
    }
    if spec.capacity_kwh <= 0.0 {
        if q_ch > 0.0 || q_dis > 0.0 {
            return Err(infeasible("zero capacity", format!("q_ch = {q_ch}, q_dis = {q_dis}")));
        }
        return Ok(soc);
    }
    let tol = 1e-9 * (1.0 + spec.capacity_kwh);
    let ch_lim = spec.max_charge_curve.eval(soc);
    if q_ch > ch_lim + tol {
        return Err(infeasible("charge rate curve", format!("q_ch = {q_ch} > {ch_lim}")));
    }
    let dis_lim = spec.max_discharge_curve.eval(soc);
    if q_dis > dis_lim + tol {
        return Err(infeasible("discharge rate curve", format!("q_dis = {q_dis} > {dis_lim}")));
    }
    let next = spec.soc_after_loss(soc) + (q_ch - q_dis) * dt / spec.capacity_kwh;
    if q_dis == 0.0 && next < spec.soc_min {
        // Loss-only drift below the floor.
        return check_soc(next, f64::NEG_INFINITY, spec.soc_max, "TES");
    }
    check_soc(next, spec.soc_min, spec.soc_max, "TES")
}

/// Advances the battery by one step; returns the new SOC and net grid-side
/// power (positive while charging).
pub fn bes_step(
    spec: &BesSpec,
    soc: f64,
    p_ch: f64,
    p_dis: f64,
    dt: f64,
) -> Result<(f64, f64), ModelError> {
    let tol = 1e-9 * (1.0 + spec.power_max_kw);
    for (name, p) in [("p_ch", p_ch), ("p_dis", p_dis)] {
        if p < 0.0 || p > spec.power_max_kw + tol {
            return Err(infeasible(
                "battery power limit",
                format!("{name} = {p} outside [0, {}]", spec.power_max_kw),
            ));
        }
    }
    if spec.capacity_kwh <= 0.0 {
        if p_ch > 0.0 || p_dis > 0.0 {
            return Err(infeasible("zero capacity", format!("p_ch = {p_ch}, p_dis = {p_dis}")));
        }
        return Ok((soc, 0.0));
    }
    let next = soc + (p_ch * spec.eta_charge - p_dis / spec.eta_discharge) * dt / spec.capacity_kwh;
    Ok((check_soc(next, spec.soc_min, spec.soc_max, "BES")?, p_ch - p_dis))
}

/// Largest admissible TES charge and discharge at `soc`.
///
/// `tes_chiller_cap` is the TES chiller's deliverable cooling and `q_cool`
/// the cooling demand the discharge may serve.
pub fn feasible_bounds(spec: &TesSpec, soc: f64, tes_chiller_cap: f64, q_cool: f64, dt: f64) -> (f64, f64) {
    if spec.capacity_kwh <= 0.0 {
        return (0.0, 0.0);
    }
    let soc_eff = spec.soc_after_loss(soc);
    let q = spec.capacity_kwh;
    let ch = tes_chiller_cap
        .min((spec.soc_max - soc_eff) * q / dt)
        .min(spec.max_charge_curve.eval(soc));
    let dis = q_cool
        .min((soc_eff - spec.soc_min) * q / dt)
        .min(spec.max_discharge_curve.eval(soc));
    (ch.max(0.0), dis.max(0.0))
}

/// The four dispatchable assets of the plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assets {
    pub base_chiller: ChillerSpec,
    pub tes_chiller: ChillerSpec,
    #[serde(default = "TesSpec::none")]
    pub tes: TesSpec,
    #[serde(default = "BesSpec::none")]
    pub bes: BesSpec,
}

impl Assets {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.base_chiller.validate()?;
        self.tes_chiller.validate()?;
        self.tes.validate()?;
        self.bes.validate()
    }
}
