//! Joint capacity sizing of chillers, ice storage and battery.

mod problem;
mod rounding;
mod year;

pub use problem::{build_sizing_problem, sequential_sizing, solve_sizing, SizingLayout};
pub use rounding::{commercial_rounding, Catalog};
pub use year::{Resolution, SizingBlock, SizingYear};

use std::fmt;

use serde::{Deserialize, Serialize};
use storopt_lp::LpError;

use crate::cuts::CutError;
use crate::models::{Assets, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum SizingError {
    #[error("invalid sizing configuration: {0}")]
    Config(String),
    #[error("sizing problem is infeasible: {0}")]
    Infeasible(String),
    #[error("solver stopped early: {0}")]
    SolverLimit(String),
    #[error("no catalog combination is feasible:\n{}", .0.join("\n"))]
    NoFeasibleCombination(Vec<String>),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `Σ_{y=1..years} (1 + rate)^-y`.
pub fn present_worth_factor(years: u32, rate: f64) -> f64 {
    (1..=years).map(|y| (1.0 + rate).powi(-(y as i32))).sum()
}

/// Installed cost per unit of each capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitPrices {
    /// $/kW
    pub chiller: f64,
    /// $/kW
    pub tes_chiller: f64,
    /// $/kWh
    pub tes: f64,
    /// $/kW
    pub bes_power: f64,
    /// $/kWh
    pub bes_energy: f64,
}

impl Default for UnitPrices {
    fn default() -> Self {
        Self {
            chiller: 120.0,
            tes_chiller: 120.0,
            tes: 40.0,
            bes_power: 153.0,
            bes_energy: 355.0,
        }
    }
}

/// One value per sized asset, in the order chiller (kW), TES chiller (kW),
/// TES (kWh), BES power (kW), BES energy (kWh).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacities {
    pub chiller_kw: f64,
    pub tes_chiller_kw: f64,
    pub tes_kwh: f64,
    pub bes_kw: f64,
    pub bes_kwh: f64,
}

impl Capacities {
    pub const NAMES: [&'static str; 5] = ["chiller_kw", "tes_chiller_kw", "tes_kwh", "bes_kw", "bes_kwh"];

    pub fn uniform(v: f64) -> Self {
        Self::from_array([v; 5])
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.chiller_kw, self.tes_chiller_kw, self.tes_kwh, self.bes_kw, self.bes_kwh]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            chiller_kw: a[0],
            tes_chiller_kw: a[1],
            tes_kwh: a[2],
            bes_kw: a[3],
            bes_kwh: a[4],
        }
    }

    pub fn capital(&self, prices: &UnitPrices) -> f64 {
        prices.chiller * self.chiller_kw
            + prices.tes_chiller * self.tes_chiller_kw
            + prices.tes * self.tes_kwh
            + prices.bes_power * self.bes_kw
            + prices.bes_energy * self.bes_kwh
    }

    /// `template` with its capacities replaced.
    pub fn apply(&self, template: &Assets) -> Assets {
        let mut a = template.clone();
        a.base_chiller.capacity = self.chiller_kw;
        a.tes_chiller.capacity = self.tes_chiller_kw;
        a.tes.capacity_kwh = self.tes_kwh;
        a.bes.power_max_kw = self.bes_kw;
        a.bes.capacity_kwh = self.bes_kwh;
        a
    }
}

/// Capacities pinned to a value; `None` leaves the asset free.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedCapacities {
    pub chiller_kw: Option<f64>,
    pub tes_chiller_kw: Option<f64>,
    pub tes_kwh: Option<f64>,
    pub bes_kw: Option<f64>,
    pub bes_kwh: Option<f64>,
}

impl FixedCapacities {
    pub fn all(c: &Capacities) -> Self {
        let a = c.to_array();
        Self::from_array(a.map(Some))
    }

    pub fn to_array(self) -> [Option<f64>; 5] {
        [self.chiller_kw, self.tes_chiller_kw, self.tes_kwh, self.bes_kw, self.bes_kwh]
    }

    pub fn from_array(a: [Option<f64>; 5]) -> Self {
        Self {
            chiller_kw: a[0],
            tes_chiller_kw: a[1],
            tes_kwh: a[2],
            bes_kw: a[3],
            bes_kwh: a[4],
        }
    }
}

/// Floor-space limits. Densities have no sensible default and must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceLimits {
    pub tes_kwh_per_m2: f64,
    pub bes_kwh_per_m2: f64,
    #[serde(default = "default_space")]
    pub tes_max_m2: Option<f64>,
    #[serde(default = "default_space")]
    pub bes_max_m2: Option<f64>,
    /// Shared limit on the combined footprint.
    #[serde(default)]
    pub total_max_m2: Option<f64>,
}

fn default_space() -> Option<f64> {
    Some(500.0)
}

impl SpaceLimits {
    pub fn new(tes_kwh_per_m2: f64, bes_kwh_per_m2: f64) -> Self {
        Self {
            tes_kwh_per_m2,
            bes_kwh_per_m2,
            tes_max_m2: default_space(),
            bes_max_m2: default_space(),
            total_max_m2: None,
        }
    }

    pub fn unlimited() -> Self {
        Self {
            tes_kwh_per_m2: 1.0,
            bes_kwh_per_m2: 1.0,
            tes_max_m2: None,
            bes_max_m2: None,
            total_max_m2: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingConfig {
    #[serde(default)]
    pub prices: UnitPrices,
    #[serde(default = "default_caps")]
    pub max_capacity: Capacities,
    pub space: SpaceLimits,
    #[serde(default = "default_years")]
    pub years: u32,
    #[serde(default = "default_rate")]
    pub discount_rate: f64,
    #[serde(default = "default_breakpoints")]
    pub breakpoints: usize,
    #[serde(default)]
    pub resolution: Resolution,
    /// Ice charge and discharge limits as multiples of tank capacity per hour.
    #[serde(default)]
    pub tes_charge_c_rate: Option<f64>,
    #[serde(default)]
    pub tes_discharge_c_rate: Option<f64>,
    #[serde(default)]
    pub fixed: FixedCapacities,
}

fn default_caps() -> Capacities {
    Capacities::uniform(10_000.0)
}

fn default_years() -> u32 {
    20
}

fn default_rate() -> f64 {
    0.05
}

fn default_breakpoints() -> usize {
    8
}

impl SizingConfig {
    pub fn new(space: SpaceLimits) -> Self {
        Self {
            prices: UnitPrices::default(),
            max_capacity: default_caps(),
            space,
            years: default_years(),
            discount_rate: default_rate(),
            breakpoints: default_breakpoints(),
            resolution: Resolution::default(),
            tes_charge_c_rate: None,
            tes_discharge_c_rate: None,
            fixed: FixedCapacities::default(),
        }
    }

    pub fn pwf(&self) -> f64 {
        present_worth_factor(self.years, self.discount_rate)
    }

    pub fn validate(&self) -> Result<(), SizingError> {
        let bad = |m: String| Err(SizingError::Config(m));
        let p = &self.prices;
        for (name, v) in [
            ("chiller", p.chiller),
            ("tes_chiller", p.tes_chiller),
            ("tes", p.tes),
            ("bes_power", p.bes_power),
            ("bes_energy", p.bes_energy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("price {name} = {v}"));
            }
        }
        for (name, v) in Capacities::NAMES.iter().zip(self.max_capacity.to_array()) {
            if !(v >= 0.0) {
                return bad(format!("max_capacity.{name} = {v}"));
            }
        }
        for (name, v) in Capacities::NAMES.iter().zip(self.fixed.to_array()) {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("fixed.{name} = {v}"));
                }
            }
        }
        if self.years < 1 {
            return bad("years must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.discount_rate) {
            return bad(format!("discount_rate {} outside [0, 1)", self.discount_rate));
        }
        if self.breakpoints == 0 {
            return bad("breakpoints must be positive".into());
        }
        let s = &self.space;
        if !(s.tes_kwh_per_m2 > 0.0 && s.bes_kwh_per_m2 > 0.0) {
            return bad("space densities must be positive".into());
        }
        for v in [s.tes_max_m2, s.bes_max_m2, s.total_max_m2].into_iter().flatten() {
            if !(v >= 0.0) {
                return bad(format!("space limit {v}"));
            }
        }
        for v in [self.tes_charge_c_rate, self.tes_discharge_c_rate].into_iter().flatten() {
            if !(v > 0.0) {
                return bad(format!("C-rate {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub capacities: Capacities,
    pub capital: f64,
    pub annual_energy_cost: f64,
    pub annual_demand_cost: f64,
    pub annual_operating: f64,
    pub pwf: f64,
    /// `pwf · annual_operating`.
    pub operating_pv: f64,
    pub total: f64,
    pub resolution: Resolution,
}

impl SizingResult {
    pub fn assets(&self, template: &Assets) -> Assets {
        self.capacities.apply(template)
    }
}

impl fmt::Display for SizingResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.capacities;
        let rows = [
            ("Chiller (kW)", c.chiller_kw),
            ("TES chiller (kW)", c.tes_chiller_kw),
            ("TES (kWh)", c.tes_kwh),
            ("BES power (kW)", c.bes_kw),
            ("BES (kWh)", c.bes_kwh),
        ];
        writeln!(f, "{:<26}{:>16}", "Asset", "Size")?;
        for (name, v) in rows {
            writeln!(f, "{name:<26}{v:>16.1}")?;
        }
        writeln!(f, "{:<26}{:>16.0}", "Capital ($)", self.capital)?;
        writeln!(f, "{:<26}{:>16.0}", "Annual energy ($)", self.annual_energy_cost)?;
        writeln!(f, "{:<26}{:>16.0}", "Annual demand ($)", self.annual_demand_cost)?;
        writeln!(f, "{:<26}{:>16.0}", "Operating PV ($)", self.operating_pv)?;
        write!(f, "{:<26}{:>16.0}", "Total PV ($)", self.total)
    }
}
