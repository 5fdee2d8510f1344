use chrono::NaiveDateTime;

use crate::models::{ModelError, OperatingPoint};
use crate::plant::PlantConfig;
use crate::profiles::ProfileSet;
use crate::tariff::{BillingMonth, Tariff, TariffError};

/// Profile data joined with prices and chiller operating points, one entry
/// per step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub q_load: Vec<f64>,
    pub p_non: Vec<f64>,
    pub oat: Vec<f64>,
    pub op_base: Vec<OperatingPoint>,
    pub op_tes: Vec<OperatingPoint>,
    /// Steps whose condenser temperature had to be clamped.
    pub clamped_conditions: Vec<usize>,
    pub prices: Vec<f64>,
    pub months: Vec<BillingMonth>,
    pub demand_rates: Vec<f64>,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error(transparent)]
    Tariff(#[from] TariffError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl StepSeries {
    pub fn build(profiles: &ProfileSet, tariff: &Tariff, plant: &PlantConfig) -> Result<Self, SeriesError> {
        let n = profiles.len();
        let mut op_base = Vec::with_capacity(n);
        let mut op_tes = Vec::with_capacity(n);
        let mut clamped_conditions = Vec::new();
        for (i, &oat) in profiles.oat_c.iter().enumerate() {
            let (b, t, clamped) = plant.operating_points(oat)?;
            op_base.push(b);
            op_tes.push(t);
            if clamped {
                clamped_conditions.push(i);
            }
        }
        let months: Vec<BillingMonth> = profiles.timestamps.iter().map(BillingMonth::of).collect();
        Ok(Self {
            timestamps: profiles.timestamps.clone(),
            q_load: profiles.cooling_kw.clone(),
            p_non: profiles.electric_nonflex_kw.clone(),
            oat: profiles.oat_c.clone(),
            op_base,
            op_tes,
            clamped_conditions,
            prices: tariff.prices(&profiles.timestamps)?,
            demand_rates: months.iter().map(|m| tariff.demand_rate(*m)).collect(),
            months,
            dt: profiles.dt,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// The steps at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> StepSeries {
        fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
            idx.iter().map(|&i| v[i].clone()).collect()
        }
        let clamped: Vec<usize> = indices
            .iter()
            .enumerate()
            .filter(|(_, i)| self.clamped_conditions.binary_search(i).is_ok())
            .map(|(j, _)| j)
            .collect();
        StepSeries {
            timestamps: pick(&self.timestamps, indices),
            q_load: pick(&self.q_load, indices),
            p_non: pick(&self.p_non, indices),
            oat: pick(&self.oat, indices),
            op_base: pick(&self.op_base, indices),
            op_tes: pick(&self.op_tes, indices),
            clamped_conditions: clamped,
            prices: pick(&self.prices, indices),
            months: pick(&self.months, indices),
            demand_rates: pick(&self.demand_rates, indices),
            dt: self.dt,
        }
    }
}
