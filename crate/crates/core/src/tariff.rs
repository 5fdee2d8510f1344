//! Time-of-use energy prices, monthly demand charges and billing.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TariffError {
    #[error("no tariff period covers {0}")]
    Coverage(NaiveDateTime),
    #[error("cannot bill an empty series")]
    EmptyInput,
    #[error("series lengths differ: {timestamps} timestamps, {values} values")]
    LengthMismatch { timestamps: usize, values: usize },
    #[error("negative power {value} kW at {at}")]
    NegativeLoad { at: NaiveDateTime, value: f64 },
    #[error("invalid tariff: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayKind {
    Weekday,
    Weekend,
    #[default]
    All,
}

impl DayKind {
    fn matches(self, day: Weekday) -> bool {
        let weekend = matches!(day, Weekday::Sat | Weekday::Sun);
        match self {
            DayKind::Weekday => !weekend,
            DayKind::Weekend => weekend,
            DayKind::All => true,
        }
    }
}

/// A priced window: months (empty = all), day kind, and the half-open hour
/// range `[start_hour, end_hour)`. A range with `start_hour > end_hour`
/// wraps past midnight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouPeriod {
    pub name: String,
    #[serde(default)]
    pub months: Vec<u32>,
    #[serde(default)]
    pub days: DayKind,
    pub start_hour: f64,
    pub end_hour: f64,
    /// $/kWh
    pub price: f64,
}

impl TouPeriod {
    fn contains(&self, ts: &NaiveDateTime) -> bool {
        if !self.months.is_empty() && !self.months.contains(&ts.month()) {
            return false;
        }
        if !self.days.matches(ts.weekday()) {
            return false;
        }
        let h = ts.hour() as f64 + ts.minute() as f64 / 60.0 + ts.second() as f64 / 3600.0;
        if self.start_hour <= self.end_hour {
            self.start_hour <= h && h < self.end_hour
        } else {
            h >= self.start_hour || h < self.end_hour
        }
    }
}

/// Demand rate in $/kW, either one value for every month or twelve values
/// starting with January.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MonthlyRate {
    Flat(f64),
    Monthly([f64; 12]),
}

impl MonthlyRate {
    pub fn get(&self, month: u32) -> f64 {
        match self {
            MonthlyRate::Flat(v) => *v,
            MonthlyRate::Monthly(v) => v[(month - 1) as usize],
        }
    }
}

impl Default for MonthlyRate {
    fn default() -> Self {
        MonthlyRate::Flat(0.0)
    }
}

/// Energy prices are looked up by the first matching period, falling back to
/// `default_price`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tariff {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub periods: Vec<TouPeriod>,
    #[serde(default)]
    pub default_price: Option<f64>,
    #[serde(default)]
    pub demand_rate: MonthlyRate,
}

/// Calendar month used as billing period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BillingMonth {
    pub year: i32,
    pub month: u32,
}

impl BillingMonth {
    pub fn of(ts: &NaiveDateTime) -> Self {
        Self {
            year: ts.year(),
            month: ts.month(),
        }
    }
}

impl fmt::Display for BillingMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthPeak {
    pub month: String,
    pub peak_kw: f64,
    pub demand_rate: f64,
    pub demand_charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BillingResult {
    pub energy_kwh: f64,
    pub energy_charge: f64,
    pub demand_charge: f64,
    pub total: f64,
    pub peaks: Vec<MonthPeak>,
}

impl BillingResult {
    pub fn max_peak(&self) -> f64 {
        self.peaks.iter().map(|p| p.peak_kw).fold(0.0, f64::max)
    }
}

impl Tariff {
    pub fn flat(price: f64, demand_rate: f64) -> Self {
        Self {
            name: "flat".into(),
            periods: Vec::new(),
            default_price: Some(price),
            demand_rate: MonthlyRate::Flat(demand_rate),
        }
    }

    /// Daily on-peak window over a flat off-peak price, all months.
    pub fn two_tier(off_peak: f64, on_peak: f64, start_hour: f64, end_hour: f64, demand_rate: f64) -> Self {
        Self {
            name: "two-tier".into(),
            periods: vec![TouPeriod {
                name: "on-peak".into(),
                months: Vec::new(),
                days: DayKind::All,
                start_hour,
                end_hour,
                price: on_peak,
            }],
            default_price: Some(off_peak),
            demand_rate: MonthlyRate::Flat(demand_rate),
        }
    }

    pub fn validate(&self) -> Result<(), TariffError> {
        for p in &self.periods {
            if !(p.price >= 0.0 && p.price.is_finite()) {
                return Err(TariffError::Invalid(format!("period {} has price {}", p.name, p.price)));
            }
            if !(0.0..=24.0).contains(&p.start_hour) || !(0.0..=24.0).contains(&p.end_hour) {
                return Err(TariffError::Invalid(format!("period {} hours outside [0, 24]", p.name)));
            }
            if p.months.iter().any(|m| !(1..=12).contains(m)) {
                return Err(TariffError::Invalid(format!("period {} has an invalid month", p.name)));
            }
        }
        if let Some(d) = self.default_price {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(TariffError::Invalid(format!("default price {d}")));
            }
        }
        let rates: Vec<f64> = (1..=12).map(|m| self.demand_rate.get(m)).collect();
        if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(TariffError::Invalid("demand rates must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn price_at(&self, ts: &NaiveDateTime) -> Result<f64, TariffError> {
        self.periods
            .iter()
            .find(|p| p.contains(ts))
            .map(|p| p.price)
            .or(self.default_price)
            .ok_or(TariffError::Coverage(*ts))
    }

    pub fn demand_rate(&self, month: BillingMonth) -> f64 {
        self.demand_rate.get(month.month)
    }

    pub fn prices(&self, timestamps: &[NaiveDateTime]) -> Result<Vec<f64>, TariffError> {
        timestamps.iter().map(|t| self.price_at(t)).collect()
    }
}

/// Energy and demand charges of a power series sampled every `dt` hours.
pub fn compute_bill(
    tariff: &Tariff,
    timestamps: &[NaiveDateTime],
    p_total: &[f64],
    dt: f64,
) -> Result<BillingResult, TariffError> {
    if p_total.is_empty() {
        return Err(TariffError::EmptyInput);
    }
    if timestamps.len() != p_total.len() {
        return Err(TariffError::LengthMismatch {
            timestamps: timestamps.len(),
            values: p_total.len(),
        });
    }
    let mut energy_kwh = 0.0;
    let mut energy_charge = 0.0;
    let mut peaks: BTreeMap<BillingMonth, f64> = BTreeMap::new();
    for (ts, &p) in timestamps.iter().zip(p_total) {
        // Round-off from the solver may leave a hair below zero.
        if p < -1e-6 {
            return Err(TariffError::NegativeLoad { at: *ts, value: p });
        }
        let p = p.max(0.0);
        energy_kwh += p * dt;
        energy_charge += tariff.price_at(ts)? * p * dt;
        let peak = peaks.entry(BillingMonth::of(ts)).or_insert(0.0);
        *peak = peak.max(p);
    }
    let peaks: Vec<MonthPeak> = peaks
        .into_iter()
        .map(|(m, peak_kw)| {
            let rate = tariff.demand_rate(m);
            MonthPeak {
                month: m.to_string(),
                peak_kw,
                demand_rate: rate,
                demand_charge: rate * peak_kw,
            }
        })
        .collect();
    let demand_charge = peaks.iter().map(|p| p.demand_charge).sum();
    Ok(BillingResult {
        energy_kwh,
        energy_charge,
        demand_charge,
        total: energy_charge + demand_charge,
        peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    #[test]
    fn flat_price() {
        let t = Tariff::flat(0.08, 0.0);
        assert_eq!(t.price_at(&at(2023, 3, 4, 17)).unwrap(), 0.08);
    }

    #[test]
    fn on_peak_window_is_half_open() {
        let t = Tariff::two_tier(0.1, 0.3, 12.0, 18.0, 0.0);
        let on = t.price_at(&at(2023, 7, 5, 12)).unwrap();
        let off = t.price_at(&at(2023, 7, 5, 11)).unwrap();
        assert!((on / off - 3.0).abs() < 1e-12);
        assert_eq!(t.price_at(&at(2023, 7, 5, 18)).unwrap(), 0.1);
    }

    #[test]
    fn wrapping_and_weekend_periods() {
        let t = Tariff {
            name: "t".into(),
            periods: vec![
                TouPeriod {
                    name: "weekend".into(),
                    months: vec![],
                    days: DayKind::Weekend,
                    start_hour: 0.0,
                    end_hour: 24.0,
                    price: 0.05,
                },
                TouPeriod {
                    name: "night".into(),
                    months: vec![6, 7, 8],
                    days: DayKind::Weekday,
                    start_hour: 22.0,
                    end_hour: 6.0,
                    price: 0.07,
                },
            ],
            default_price: None,
            demand_rate: MonthlyRate::Flat(0.0),
        };
        // 2023-07-08 is a Saturday.
        assert_eq!(t.price_at(&at(2023, 7, 8, 13)).unwrap(), 0.05);
        assert_eq!(t.price_at(&at(2023, 7, 5, 23)).unwrap(), 0.07);
        assert_eq!(t.price_at(&at(2023, 7, 5, 3)).unwrap(), 0.07);
        assert_eq!(t.price_at(&at(2023, 7, 5, 12)), Err(TariffError::Coverage(at(2023, 7, 5, 12))));
        assert!(t.price_at(&at(2023, 1, 4, 23)).is_err());
    }

    #[test]
    fn constant_month_bill() {
        let t = Tariff::flat(0.10, 19.0);
        let ts: Vec<_> = (0..30 * 24).map(|h| at(2023, 6, 1, 0) + chrono::Duration::hours(h)).collect();
        let bill = compute_bill(&t, &ts, &vec![100.0; ts.len()], 1.0).unwrap();
        assert!((bill.energy_charge - 7200.0).abs() < 1e-9);
        assert!((bill.demand_charge - 1900.0).abs() < 1e-12);
        assert_eq!(bill.total, bill.energy_charge + bill.demand_charge);
    }

    #[test]
    fn zero_and_empty() {
        let t = Tariff::flat(0.10, 19.0);
        let ts = vec![at(2023, 6, 1, 0), at(2023, 6, 1, 1)];
        let bill = compute_bill(&t, &ts, &[0.0, 0.0], 1.0).unwrap();
        assert_eq!((bill.energy_charge, bill.demand_charge, bill.total), (0.0, 0.0, 0.0));
        assert_eq!(compute_bill(&t, &[], &[], 1.0), Err(TariffError::EmptyInput));
    }

    #[test]
    fn monthly_rates_deserialize_either_way() {
        let flat: Tariff = toml::from_str("default_price = 0.1\ndemand_rate = 19.0").unwrap();
        assert_eq!(flat.demand_rate.get(5), 19.0);
        let monthly: Tariff = toml::from_str(
            "default_price = 0.1\ndemand_rate = [1.0,2.0,3.0,4.0,5.0,6.0,7.0,8.0,9.0,10.0,11.0,12.0]",
        )
        .unwrap();
        assert_eq!(monthly.demand_rate.get(5), 5.0);
    }
}
