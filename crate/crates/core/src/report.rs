//! Baseline-versus-optimized comparison of one scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dispatch::DispatchTrace;
use crate::sizing::{Capacities, SizingResult};
use crate::tariff::BillingResult;

/// `amount = baseline − optimized`; `percent` is relative to the baseline
/// (0 when the baseline is 0). Negative values mean the optimized run is
/// worse on that component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Saving {
    pub baseline: f64,
    pub optimized: f64,
    pub amount: f64,
    pub percent: f64,
}

impl Saving {
    pub fn new(baseline: f64, optimized: f64) -> Self {
        let amount = baseline - optimized;
        Self {
            baseline,
            optimized,
            amount,
            percent: if baseline != 0.0 { 100.0 * amount / baseline } else { 0.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub capacities: Capacities,
    pub sizing: Option<SizingResult>,
    pub baseline_chiller_kw: f64,
    pub baseline: BillingResult,
    pub optimized: BillingResult,
    pub energy_kwh: Saving,
    pub energy_charge: Saving,
    pub demand_charge: Saving,
    pub total: Saving,
    /// Highest monthly peak of the period, kW.
    pub peak_kw: Saving,
    pub tes_throughput_kwh: f64,
    pub bes_throughput_kwh: f64,
    pub unmet_kwh: f64,
    pub event_counts: BTreeMap<String, usize>,
    pub solves: usize,
}

impl RunReport {
    pub fn new(
        scenario: &str,
        capacities: Capacities,
        sizing: Option<SizingResult>,
        baseline_chiller_kw: f64,
        baseline: &DispatchTrace,
        optimized: &DispatchTrace,
    ) -> Self {
        let (b, o) = (&baseline.bill, &optimized.bill);
        let mut event_counts = BTreeMap::new();
        for e in &optimized.events {
            let key = serde_json::to_value(e.kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            *event_counts.entry(key).or_insert(0) += 1;
        }
        Self {
            scenario: scenario.to_string(),
            capacities,
            sizing,
            baseline_chiller_kw,
            baseline: b.clone(),
            optimized: o.clone(),
            energy_kwh: Saving::new(b.energy_kwh, o.energy_kwh),
            energy_charge: Saving::new(b.energy_charge, o.energy_charge),
            demand_charge: Saving::new(b.demand_charge, o.demand_charge),
            total: Saving::new(b.total, o.total),
            peak_kw: Saving::new(b.max_peak(), o.max_peak()),
            tes_throughput_kwh: optimized.tes_throughput_kwh(),
            bes_throughput_kwh: optimized.bes_throughput_kwh(),
            unmet_kwh: optimized.unmet_kwh(),
            event_counts,
            solves: optimized.solves,
        }
    }

    pub fn savings_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16}{:>14}{:>14}{:>14}{:>10}", "", "Baseline", "Optimized", "Saving", "%");
        for (name, v) in [
            ("Energy (kWh)", self.energy_kwh),
            ("Energy ($)", self.energy_charge),
            ("Demand ($)", self.demand_charge),
            ("Total ($)", self.total),
            ("Peak (kW)", self.peak_kw),
        ] {
            let _ = writeln!(
                s,
                "{name:<16}{:>14.1}{:>14.1}{:>14.1}{:>9.2}%",
                v.baseline, v.optimized, v.amount, v.percent
            );
        }
        s
    }
}

/// One row per scenario, in the order given.
pub fn sweep_table(reports: &[RunReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14}{:>10}{:>10}{:>10}{:>10}{:>10}{:>14}{:>14}{:>9}{:>9}",
        "scenario", "chiller", "tes_chl", "tes_kwh", "bes_kw", "bes_kwh", "baseline_$", "optimized_$", "save_%", "peak_%"
    );
    for r in reports {
        let c = &r.capacities;
        let _ = writeln!(
            s,
            "{:<14}{:>10.0}{:>10.0}{:>10.0}{:>10.0}{:>10.0}{:>14.0}{:>14.0}{:>9.2}{:>9.2}",
            r.scenario,
            c.chiller_kw,
            c.tes_chiller_kw,
            c.tes_kwh,
            c.bes_kw,
            c.bes_kwh,
            r.total.baseline,
            r.total.optimized,
            r.total.percent,
            r.peak_kw.percent
        );
    }
    s
}
