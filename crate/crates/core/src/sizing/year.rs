//! Reduction of a year of profiles to weighted blocks for the sizing problem.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::series::StepSeries;
use crate::tariff::BillingMonth;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Resolution {
    /// Every step of the year in one block.
    Full,
    /// Per month: the peak-electric day, the peak-cooling day, and
    /// `typical_groups` medoid days standing in for the rest.
    RepresentativeDays {
        #[serde(default = "default_groups")]
        typical_groups: usize,
    },
    /// Per month: the week around the peak-electric day.
    RepresentativeWeeks,
}

fn default_groups() -> usize {
    2
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::RepresentativeDays {
            typical_groups: default_groups(),
        }
    }
}

/// Contiguous steps of the reduced series, each repeated `weight` times.
/// Storage is cyclic within a block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingBlock {
    pub start: usize,
    pub len: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizingYear {
    pub series: StepSeries,
    pub blocks: Vec<SizingBlock>,
    /// Scales energy and demand charges to a 12-month year.
    pub annual_factor: f64,
}

struct Day {
    date: NaiveDate,
    steps: Vec<usize>,
    peak_electric: f64,
    peak_cooling: f64,
    energy: f64,
}

fn distinct_months(series: &StepSeries) -> usize {
    let mut m = series.months.clone();
    m.dedup();
    m.sort();
    m.dedup();
    m.len()
}

fn annual_factor(series: &StepSeries) -> f64 {
    12.0 / distinct_months(series).max(1) as f64
}

/// Days grouped by billing month, in calendar order.
fn days_by_month(series: &StepSeries, cop_hint: f64) -> BTreeMap<BillingMonth, Vec<Day>> {
    let mut out: BTreeMap<BillingMonth, Vec<Day>> = BTreeMap::new();
    for (i, ts) in series.timestamps.iter().enumerate() {
        let days = out.entry(series.months[i]).or_default();
        let e = series.p_non[i] + series.q_load[i] / cop_hint;
        match days.last_mut() {
            Some(d) if d.date == ts.date() => {
                d.steps.push(i);
                d.peak_electric = d.peak_electric.max(e);
                d.peak_cooling = d.peak_cooling.max(series.q_load[i]);
                d.energy += e;
            }
            _ => days.push(Day {
                date: ts.date(),
                steps: vec![i],
                peak_electric: e,
                peak_cooling: series.q_load[i],
                energy: e,
            }),
        }
    }
    out
}

fn argmax(days: &[Day], key: impl Fn(&Day) -> f64) -> usize {
    let mut best = 0;
    for (i, d) in days.iter().enumerate() {
        if key(d) > key(&days[best]) {
            best = i;
        }
    }
    best
}

impl SizingYear {
    pub fn full(series: StepSeries) -> Self {
        let blocks = vec![SizingBlock {
            start: 0,
            len: series.len(),
            weight: 1.0,
        }];
        Self {
            annual_factor: annual_factor(&series),
            series,
            blocks,
        }
    }

    /// `cop_hint` converts cooling into an electric proxy for ranking days.
    pub fn new(series: &StepSeries, resolution: &Resolution, cop_hint: f64) -> Self {
        match resolution {
            Resolution::Full => Self::full(series.clone()),
            Resolution::RepresentativeDays { typical_groups } => Self::representative_days(series, *typical_groups, cop_hint),
            Resolution::RepresentativeWeeks => Self::representative_weeks(series, cop_hint),
        }
    }

    fn from_picks(series: &StepSeries, picks: Vec<(Vec<usize>, f64)>) -> Self {
        let mut indices = Vec::new();
        let mut blocks = Vec::new();
        for (steps, weight) in picks {
            blocks.push(SizingBlock {
                start: indices.len(),
                len: steps.len(),
                weight,
            });
            indices.extend(steps);
        }
        Self {
            series: series.select(&indices),
            blocks,
            annual_factor: annual_factor(series),
        }
    }

    pub fn representative_days(series: &StepSeries, typical_groups: usize, cop_hint: f64) -> Self {
        let mut picks = Vec::new();
        for days in days_by_month(series, cop_hint).into_values() {
            let pe = argmax(&days, |d| d.peak_electric);
            let pc = argmax(&days, |d| d.peak_cooling);
            picks.push((days[pe].steps.clone(), 1.0));
            if pc != pe {
                picks.push((days[pc].steps.clone(), 1.0));
            }
            let mut rest: Vec<usize> = (0..days.len()).filter(|&i| i != pe && i != pc).collect();
            if rest.is_empty() {
                continue;
            }
            rest.sort_by(|&a, &b| days[a].energy.total_cmp(&days[b].energy).then(a.cmp(&b)));
            let groups = typical_groups.clamp(1, rest.len());
            for g in 0..groups {
                let lo = g * rest.len() / groups;
                let hi = (g + 1) * rest.len() / groups;
                let medoid = rest[(lo + hi) / 2];
                picks.push((days[medoid].steps.clone(), (hi - lo) as f64));
            }
        }
        Self::from_picks(series, picks)
    }

    pub fn representative_weeks(series: &StepSeries, cop_hint: f64) -> Self {
        let mut picks = Vec::new();
        for days in days_by_month(series, cop_hint).into_values() {
            let pe = argmax(&days, |d| d.peak_electric);
            let len = days.len().min(7);
            let start = pe.saturating_sub(3).min(days.len() - len);
            let steps: Vec<usize> = days[start..start + len].iter().flat_map(|d| d.steps.iter().copied()).collect();
            picks.push((steps, days.len() as f64 / len as f64));
        }
        Self::from_picks(series, picks)
    }

    /// Represented days (or steps, for sub-daily blocks) per billing month.
    pub fn represented_steps(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.len as f64).sum()
    }
}
