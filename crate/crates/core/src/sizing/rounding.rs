use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::Assets;

use super::{solve_sizing, Capacities, FixedCapacities, SizingConfig, SizingError, SizingResult, SizingYear};

/// Purchasable sizes per asset, in [`Capacities`] order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub chiller_kw: Vec<f64>,
    pub tes_chiller_kw: Vec<f64>,
    pub tes_kwh: Vec<f64>,
    pub bes_kw: Vec<f64>,
    pub bes_kwh: Vec<f64>,
}

impl Catalog {
    fn lists(&self) -> [&Vec<f64>; 5] {
        [&self.chiller_kw, &self.tes_chiller_kw, &self.tes_kwh, &self.bes_kw, &self.bes_kwh]
    }
}

/// Catalog entries just below and above `v` (one entry if `v` is on the
/// catalog or outside its range).
fn neighbours(sorted: &[f64], v: f64) -> Vec<f64> {
    let tol = 1e-9 * (1.0 + v.abs());
    if let Some(&hit) = sorted.iter().find(|&&c| (c - v).abs() <= tol) {
        return vec![hit];
    }
    let below = sorted.iter().copied().filter(|&c| c < v).last();
    let above = sorted.iter().copied().find(|&c| c > v);
    below.into_iter().chain(above).collect()
}

/// Re-prices every floor/ceil catalog combination around `result` with the
/// dispatch fixed to those sizes, and returns the cheapest feasible one.
pub fn commercial_rounding(
    result: &SizingResult,
    catalog: &Catalog,
    config: &SizingConfig,
    template: &Assets,
    year: &SizingYear,
) -> Result<SizingResult, SizingError> {
    let mut options = Vec::with_capacity(5);
    for (name, (list, v)) in Capacities::NAMES.iter().zip(catalog.lists().into_iter().zip(result.capacities.to_array())) {
        if list.is_empty() {
            return Err(SizingError::Config(format!("catalog for {name} is empty")));
        }
        let mut sorted = list.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        options.push(neighbours(&sorted, v));
    }
    let mut combos: Vec<[f64; 5]> = vec![[0.0; 5]];
    for (i, opts) in options.iter().enumerate() {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                opts.iter().map(move |&v| {
                    let mut c = c;
                    c[i] = v;
                    c
                })
            })
            .collect();
    }

    let outcomes: Vec<Result<SizingResult, String>> = combos
        .par_iter()
        .map(|combo| {
            let mut cfg = config.clone();
            cfg.fixed = FixedCapacities::from_array(combo.map(Some));
            solve_sizing(&cfg, template, year).map_err(|e| format!("{:?}: {e}", Capacities::from_array(*combo)))
        })
        .collect();
    let mut best: Option<SizingResult> = None;
    let mut violations = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.total < b.total) {
                    best = Some(r);
                }
            }
            Err(e) => violations.push(e),
        }
    }
    best.ok_or(SizingError::NoFeasibleCombination(violations))
}
