use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::plant::EventKind;
use crate::tariff::BillingResult;

pub(crate) const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M";

/// One realised step. SOCs are end-of-step values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub timestamp: String,
    pub q_load_kw: f64,
    pub p_nonflex_kw: f64,
    pub oat_c: f64,
    pub price: f64,
    pub demand_rate: f64,
    pub q_tes_charge_kw: f64,
    pub q_tes_discharge_kw: f64,
    /// Ice-chiller output that bypassed the tank.
    pub q_tes_direct_kw: f64,
    pub q_base_kw: f64,
    pub p_bes_charge_kw: f64,
    pub p_bes_discharge_kw: f64,
    pub soc_tes: f64,
    pub soc_bes: f64,
    pub p_chiller_base_kw: f64,
    pub p_chiller_tes_kw: f64,
    pub p_chiller_kw: f64,
    pub p_bes_kw: f64,
    pub p_total_kw: f64,
    /// What the optimizer expected `p_total_kw` to be; empty for fallback
    /// and rule-based steps.
    pub planned_p_total_kw: Option<f64>,
    pub unmet_kw: f64,
    pub baseline_p_total_kw: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub timestamp: String,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchTrace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
    pub events: Vec<TraceEvent>,
    pub bill: BillingResult,
    /// Horizon problems solved.
    pub solves: usize,
}

impl DispatchTrace {
    pub fn p_total(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_total_kw).collect()
    }

    pub fn tes_throughput_kwh(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.q_tes_charge_kw + r.q_tes_discharge_kw) * self.dt)
            .sum()
    }

    pub fn bes_throughput_kwh(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.p_bes_charge_kw + r.p_bes_discharge_kw) * self.dt)
            .sum()
    }

    pub fn unmet_kwh(&self) -> f64 {
        self.rows.iter().map(|r| r.unmet_kw * self.dt).sum()
    }

    pub fn count_events(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Copies the baseline's grid draw into `baseline_p_total_kw`.
    pub fn attach_baseline(&mut self, baseline: &DispatchTrace) {
        for (row, b) in self.rows.iter_mut().zip(&baseline.rows) {
            row.baseline_p_total_kw = Some(b.p_total_kw);
        }
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_soc_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "soc_tes", "soc_bes"])?;
        for r in &self.rows {
            w.write_record([r.timestamp.clone(), r.soc_tes.to_string(), r.soc_bes.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Cooling and electric demand per step, with the baseline when attached.
    pub fn write_demand_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "timestamp",
            "cooling_kw",
            "electric_nonflex_kw",
            "baseline_p_total_kw",
            "p_total_kw",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.timestamp.clone(),
                r.q_load_kw.to_string(),
                r.p_nonflex_kw.to_string(),
                r.baseline_p_total_kw.map(|v| v.to_string()).unwrap_or_default(),
                r.p_total_kw.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_peaks_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["month", "peak_kw", "demand_rate", "demand_charge"])?;
        for p in &self.bill.peaks {
            w.write_record([
                p.month.clone(),
                p.peak_kw.to_string(),
                p.demand_rate.to_string(),
                p.demand_charge.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_events_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(["step", "timestamp", "kind", "detail"])?;
        for e in &self.events {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}
