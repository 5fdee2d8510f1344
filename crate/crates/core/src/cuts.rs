//! Tangent-plane under-estimators of chiller electric power.
//!
//! With the capacity `C` as a variable, power is
//!
//! ```text
//! f(C, q) = (Ψ2/COP) · (c0·Ψ1·C + c1·q + c2·q²/(Ψ1·C))
//! ```
//!
//! which is jointly convex for `C > 0` when `c2 ≥ 0` (q²/C is a perspective
//! of q²). Its tangent planes are global lower bounds, so `P ≥ max_k cut_k`
//! is a valid LP relaxation. `f` is positively homogeneous of degree one, so
//! a tangent only depends on the part-load ratio `q / (Ψ1·C)` at which it is
//! taken and passes through the origin.

use serde::{Deserialize, Serialize};

use crate::models::{eval_curves, ChillerCurves, ModelError, OperatingPoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CutError {
    #[error("part-load curve is non-convex (c2 = {0}); use min-PLR commitment (MILP mode) or a convex curve")]
    NonConvex(f64),
    #[error("capacity range must be strictly positive, got [{0}, {1}]")]
    BadCapacityRange(f64, f64),
    #[error("load range [{0}, {1}] is invalid")]
    BadLoadRange(f64, f64),
    #[error("at least one breakpoint is required")]
    NoBreakpoints,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `P ≥ alpha·C + beta·q + gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Cut {
    pub fn eval(&self, capacity: f64, q: f64) -> f64 {
        self.alpha * capacity + self.beta * q + self.gamma
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutSet {
    pub cuts: Vec<Cut>,
}

impl CutSet {
    /// Max-of-cuts estimate; `-inf` for an empty set.
    pub fn eval(&self, capacity: f64, q: f64) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.eval(capacity, q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }
}

/// `f(C, q)` from above, evaluated directly.
pub fn perspective_power(curves: &ChillerCurves, cop_ref: f64, op: &OperatingPoint, capacity: f64, q: f64) -> Result<f64, ModelError> {
    let v = eval_curves(curves, op, 0.0)?;
    let [c0, c1, c2] = curves.eir_plr;
    let a = v.psi1 * capacity;
    Ok(v.psi2 / cop_ref * (c0 * a + c1 * q + c2 * q * q / a))
}

/// Cuts tangent at each part-load ratio in `plrs`, duplicates removed.
pub fn plr_cuts(curves: &ChillerCurves, cop_ref: f64, op: &OperatingPoint, plrs: &[f64]) -> Result<CutSet, CutError> {
    let [c0, c1, c2] = curves.eir_plr;
    if c2 < 0.0 {
        return Err(CutError::NonConvex(c2));
    }
    if plrs.is_empty() {
        return Err(CutError::NoBreakpoints);
    }
    let v = eval_curves(curves, op, 0.0)?;
    let k = v.psi2 / cop_ref;
    let mut ratios: Vec<f64> = if c2 == 0.0 { vec![0.0] } else { plrs.to_vec() };
    ratios.sort_by(f64::total_cmp);
    ratios.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let cuts = ratios
        .into_iter()
        .map(|p| {
            let alpha = k * v.psi1 * (c0 - c2 * p * p);
            let beta = k * (c1 + 2.0 * c2 * p);
            // Tangency point at unit capacity; gamma absorbs round-off and is
            // zero analytically.
            let q = p * v.psi1;
            let f = k * (c0 * v.psi1 + c1 * q + c2 * q * q / v.psi1);
            Cut {
                alpha,
                beta,
                gamma: f - alpha - beta * q,
            }
        })
        .collect();
    Ok(CutSet { cuts })
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Tangent cuts at the `n × n` grid of breakpoints spanning `c_range × q_range`.
///
/// Every cut is exact at its breakpoint and a lower bound everywhere else.
pub fn build_chiller_cuts(
    curves: &ChillerCurves,
    cop_ref: f64,
    op: &OperatingPoint,
    n_breakpoints: usize,
    c_range: (f64, f64),
    q_range: (f64, f64),
) -> Result<CutSet, CutError> {
    if curves.eir_plr[2] < 0.0 {
        return Err(CutError::NonConvex(curves.eir_plr[2]));
    }
    if n_breakpoints == 0 {
        return Err(CutError::NoBreakpoints);
    }
    if !(c_range.0 > 0.0 && c_range.1 >= c_range.0 && c_range.1.is_finite()) {
        return Err(CutError::BadCapacityRange(c_range.0, c_range.1));
    }
    if !(q_range.0 >= 0.0 && q_range.1 >= q_range.0 && q_range.1.is_finite()) {
        return Err(CutError::BadLoadRange(q_range.0, q_range.1));
    }
    let psi1 = eval_curves(curves, op, 0.0)?.psi1;
    let mut plrs = Vec::with_capacity(n_breakpoints * n_breakpoints);
    for c in linspace(c_range.0, c_range.1, n_breakpoints) {
        for q in linspace(q_range.0, q_range.1, n_breakpoints) {
            plrs.push(q / (psi1 * c));
        }
    }
    plr_cuts(curves, cop_ref, op, &plrs)
}

/// `n` cuts at evenly spaced part-load ratios on `[0, plr_max]`, the form used
/// inside dispatch and sizing problems.
pub fn uniform_plr_cuts(curves: &ChillerCurves, cop_ref: f64, op: &OperatingPoint, n: usize, plr_max: f64) -> Result<CutSet, CutError> {
    let plrs: Vec<f64> = linspace(0.0, plr_max, n).collect();
    plr_cuts(curves, cop_ref, op, &plrs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{chiller_power, ChillerSpec, REFERENCE_POINT};

    #[test]
    fn affine_curve_collapses_to_one_exact_cut() {
        let mut curves = ChillerCurves::example();
        curves.eir_plr = [0.0, 1.0, 0.0];
        let set = build_chiller_cuts(&curves, 5.0, &REFERENCE_POINT, 8, (100.0, 1000.0), (0.0, 900.0)).unwrap();
        assert_eq!(set.len(), 1);
        let spec = ChillerSpec::new(400.0, 5.0, curves);
        for q in [0.0, 50.0, 200.0, 399.0] {
            let truth = chiller_power(&spec, &REFERENCE_POINT, q).unwrap().p_elec;
            assert!((set.eval(400.0, q) - truth).abs() < 1e-9);
        }
    }

    #[test]
    fn tangent_at_breakpoints() {
        let curves = ChillerCurves::example();
        let op = OperatingPoint::new(5.0, 30.0).unwrap();
        let (c_range, q_range) = ((200.0, 800.0), (0.0, 150.0));
        let set = build_chiller_cuts(&curves, 4.5, &op, 4, c_range, q_range).unwrap();
        for c in linspace(c_range.0, c_range.1, 4) {
            for q in linspace(q_range.0, q_range.1, 4) {
                let spec = ChillerSpec::new(c, 4.5, curves.clone());
                let truth = chiller_power(&spec, &op, q).unwrap().p_elec;
                assert!((set.eval(c, q) - truth).abs() < 1e-9, "C={c} q={q}");
            }
        }
    }

    #[test]
    fn concave_plr_curve_is_rejected() {
        let mut curves = ChillerCurves::example();
        curves.eir_plr = [0.1, 1.0, -0.1];
        let err = build_chiller_cuts(&curves, 5.0, &REFERENCE_POINT, 3, (1.0, 2.0), (0.0, 1.0)).unwrap_err();
        assert_eq!(err, CutError::NonConvex(-0.1));
    }

    #[test]
    fn gamma_is_negligible() {
        let set = uniform_plr_cuts(&ChillerCurves::example(), 5.0, &REFERENCE_POINT, 8, 1.0).unwrap();
        assert!(set.cuts.iter().all(|c| c.gamma.abs() < 1e-12));
    }
}
