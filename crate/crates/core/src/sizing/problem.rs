//! The joint sizing LP.
//!
//! Storage energy is tracked in kWh rather than as a fraction of capacity so
//! that every bound involving a capacity stays linear: `soc_min·Q ≤ e ≤
//! soc_max·Q`. Chiller power uses the capacity-coupled tangent cuts.

use storopt_lp::{AutoSolver, Backend, LpProblem, LpSolver, Sense, Status, VarId};

use crate::cuts::uniform_plr_cuts;
use crate::models::{eval_curves, Assets};
use crate::tariff::BillingMonth;

use super::{Capacities, FixedCapacities, SizingConfig, SizingError, SizingResult, SizingYear};

#[derive(Clone, Debug)]
pub struct SizingLayout {
    /// In [`Capacities`] order.
    pub capacity: [VarId; 5],
    pub p_total: Vec<VarId>,
    pub p_peak: Vec<VarId>,
    pub months: Vec<BillingMonth>,
    pub q_ch: Vec<Option<VarId>>,
    pub q_dis: Vec<Option<VarId>>,
    pub e_tes: Vec<Option<VarId>>,
    pub p_bes_ch: Vec<Option<VarId>>,
    pub p_bes_dis: Vec<Option<VarId>>,
    pub e_bes: Vec<Option<VarId>>,
    /// Undiscounted annual energy-charge coefficient of each `p_total`.
    energy_coef: Vec<f64>,
    /// Undiscounted annual demand-charge coefficient of each `p_peak`.
    demand_coef: Vec<f64>,
}

fn capacity_bounds(config: &SizingConfig) -> [(f64, f64); 5] {
    let max = config.max_capacity.to_array();
    let fixed = config.fixed.to_array();
    std::array::from_fn(|i| match fixed[i] {
        Some(v) => (v, v),
        None => (0.0, max[i]),
    })
}

pub fn build_sizing_problem(
    config: &SizingConfig,
    template: &Assets,
    year: &SizingYear,
) -> Result<(LpProblem, SizingLayout), SizingError> {
    config.validate()?;
    template.validate()?;
    let s = &year.series;
    if s.is_empty() || year.blocks.is_empty() {
        return Err(SizingError::Config("sizing year has no steps".into()));
    }
    let bounds = capacity_bounds(config);
    let pwf = config.pwf();
    let dt = s.dt;
    let tes = &template.tes;
    let bes = &template.bes;
    let keep = 1.0 - tes.standby_loss_per_step;
    let has_tes = bounds[2].1 > 0.0 && bounds[1].1 > 0.0;
    let has_bes = bounds[3].1 > 0.0 && bounds[4].1 > 0.0;

    // A load no capacity mix can carry is reported before the solve.
    let base = &template.base_chiller;
    for t in 0..s.len() {
        let psi1 = eval_curves(&base.curves, &s.op_base[t], 0.0)?.psi1;
        let short = s.q_load[t] - psi1 * base.plr_max * bounds[0].1;
        if short > 1e-9 && !has_tes {
            return Err(SizingError::Infeasible(format!(
                "step {t} ({}): cooling load {:.1} kW exceeds the largest allowed chiller by {short:.1} kW and no ice storage is allowed",
                s.timestamps[t], s.q_load[t]
            )));
        }
    }

    let mut lp = LpProblem::new("sizing");
    let prices = config.prices.clone();
    let alpha = [prices.chiller, prices.tes_chiller, prices.tes, prices.bes_power, prices.bes_energy];
    let capacity: [VarId; 5] = std::array::from_fn(|i| {
        let v = lp.add_var(super::Capacities::NAMES[i], bounds[i].0, bounds[i].1);
        lp.add_objective(v, alpha[i]);
        v
    });
    let [c_base, c_tes, q_tes, p_bar, e_bar] = capacity;

    let sp = &config.space;
    if let Some(m2) = sp.tes_max_m2 {
        lp.add_constraint("space_tes", [(q_tes, 1.0 / sp.tes_kwh_per_m2)], Sense::Le, m2);
    }
    if let Some(m2) = sp.bes_max_m2 {
        lp.add_constraint("space_bes", [(e_bar, 1.0 / sp.bes_kwh_per_m2)], Sense::Le, m2);
    }
    if let Some(m2) = sp.total_max_m2 {
        lp.add_constraint(
            "space_total",
            [(q_tes, 1.0 / sp.tes_kwh_per_m2), (e_bar, 1.0 / sp.bes_kwh_per_m2)],
            Sense::Le,
            m2,
        );
    }

    let mut months: Vec<BillingMonth> = s.months.clone();
    months.sort();
    months.dedup();
    let mut p_peak = Vec::with_capacity(months.len());
    let mut demand_coef = Vec::with_capacity(months.len());
    for m in &months {
        let v = lp.add_var(format!("p_peak_{m}"), 0.0, f64::INFINITY);
        let first = s.months.iter().position(|x| x == m).unwrap_or(0);
        let coef = year.annual_factor * s.demand_rates[first];
        lp.add_objective(v, pwf * coef);
        p_peak.push(v);
        demand_coef.push(coef);
    }

    let n = s.len();
    let mut lay = SizingLayout {
        capacity,
        p_total: Vec::with_capacity(n),
        p_peak,
        months: months.clone(),
        q_ch: Vec::with_capacity(n),
        q_dis: Vec::with_capacity(n),
        e_tes: Vec::with_capacity(n),
        p_bes_ch: Vec::with_capacity(n),
        p_bes_dis: Vec::with_capacity(n),
        e_bes: Vec::with_capacity(n),
        energy_coef: Vec::with_capacity(n),
        demand_coef,
    };

    for (b, block) in year.blocks.iter().enumerate() {
        let mut prev_tes = None;
        let mut prev_bes = None;
        let mut init_tes = None;
        let mut init_bes = None;
        if has_tes {
            let e0 = lp.add_var(format!("e_tes_init_{b}"), 0.0, f64::INFINITY);
            lp.add_constraint(format!("e_tes_init_hi_{b}"), [(e0, 1.0), (q_tes, -tes.soc_max)], Sense::Le, 0.0);
            lp.add_constraint(format!("e_tes_init_lo_{b}"), [(e0, 1.0), (q_tes, -tes.soc_min)], Sense::Ge, 0.0);
            prev_tes = Some(e0);
            init_tes = Some(e0);
        }
        if has_bes {
            let e0 = lp.add_var(format!("e_bes_init_{b}"), 0.0, f64::INFINITY);
            lp.add_constraint(format!("e_bes_init_hi_{b}"), [(e0, 1.0), (e_bar, -bes.soc_max)], Sense::Le, 0.0);
            lp.add_constraint(format!("e_bes_init_lo_{b}"), [(e0, 1.0), (e_bar, -bes.soc_min)], Sense::Ge, 0.0);
            prev_bes = Some(e0);
            init_bes = Some(e0);
        }
        for t in block.start..block.start + block.len {
            let q_load = s.q_load[t].max(0.0);
            let v_base = eval_curves(&base.curves, &s.op_base[t], 0.0)?;
            let p_base = lp.add_var(format!("p_base_{t}"), 0.0, f64::INFINITY);
            let cuts = uniform_plr_cuts(&base.curves, base.cop_ref, &s.op_base[t], config.breakpoints, base.plr_max)?;

            let mut balance = vec![(p_base, -1.0)];
            let (mut q_ch, mut q_dis, mut e_tes) = (None, None, None);
            if has_tes {
                let tc = &template.tes_chiller;
                let v_tes = eval_curves(&tc.curves, &s.op_tes[t], 0.0)?;
                let qc = lp.add_var(format!("q_ch_{t}"), 0.0, f64::INFINITY);
                let qd = lp.add_var(format!("q_dis_{t}"), 0.0, q_load);
                let e = lp.add_var(format!("e_tes_{t}"), 0.0, f64::INFINITY);
                let p_tes = lp.add_var(format!("p_tes_{t}"), 0.0, f64::INFINITY);
                let prev = prev_tes.expect("block start");
                lp.add_constraint(
                    format!("tes_dyn_{t}"),
                    [(e, 1.0), (prev, -keep), (qc, -dt), (qd, dt)],
                    Sense::Eq,
                    0.0,
                );
                lp.add_constraint(format!("tes_hi_{t}"), [(e, 1.0), (q_tes, -tes.soc_max)], Sense::Le, 0.0);
                if tes.soc_min > 0.0 {
                    lp.add_constraint(format!("tes_lo_{t}"), [(e, 1.0), (q_tes, -tes.soc_min)], Sense::Ge, 0.0);
                }
                lp.add_constraint(
                    format!("tes_chiller_cap_{t}"),
                    [(qc, 1.0), (c_tes, -v_tes.psi1 * tc.plr_max)],
                    Sense::Le,
                    0.0,
                );
                if let Some(r) = config.tes_charge_c_rate {
                    lp.add_constraint(format!("tes_rate_ch_{t}"), [(qc, 1.0), (q_tes, -r)], Sense::Le, 0.0);
                }
                if let Some(r) = config.tes_discharge_c_rate {
                    lp.add_constraint(format!("tes_rate_dis_{t}"), [(qd, 1.0), (q_tes, -r)], Sense::Le, 0.0);
                }
                let tcuts = uniform_plr_cuts(&tc.curves, tc.cop_ref, &s.op_tes[t], config.breakpoints, tc.plr_max)?;
                for (i, c) in tcuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("tes_cut_{t}_{i}"),
                        [(p_tes, 1.0), (c_tes, -c.alpha), (qc, -c.beta)],
                        Sense::Ge,
                        c.gamma,
                    );
                }
                // Base chiller serves q_load - q_dis.
                lp.add_constraint(
                    format!("adequacy_{t}"),
                    [(qd, 1.0), (c_base, v_base.psi1 * base.plr_max)],
                    Sense::Ge,
                    q_load,
                );
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("base_cut_{t}_{i}"),
                        [(p_base, 1.0), (c_base, -c.alpha), (qd, c.beta)],
                        Sense::Ge,
                        c.beta * q_load + c.gamma,
                    );
                }
                balance.push((p_tes, -1.0));
                prev_tes = Some(e);
                q_ch = Some(qc);
                q_dis = Some(qd);
                e_tes = Some(e);
            } else {
                lp.add_constraint(format!("adequacy_{t}"), [(c_base, v_base.psi1 * base.plr_max)], Sense::Ge, q_load);
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("base_cut_{t}_{i}"),
                        [(p_base, 1.0), (c_base, -c.alpha)],
                        Sense::Ge,
                        c.beta * q_load + c.gamma,
                    );
                }
            }

            let (mut p_ch, mut p_dis, mut e_bes) = (None, None, None);
            if has_bes {
                let pc = lp.add_var(format!("p_bes_ch_{t}"), 0.0, f64::INFINITY);
                let pd = lp.add_var(format!("p_bes_dis_{t}"), 0.0, f64::INFINITY);
                let e = lp.add_var(format!("e_bes_{t}"), 0.0, f64::INFINITY);
                let prev = prev_bes.expect("block start");
                lp.add_constraint(
                    format!("bes_dyn_{t}"),
                    [(e, 1.0), (prev, -1.0), (pc, -bes.eta_charge * dt), (pd, dt / bes.eta_discharge)],
                    Sense::Eq,
                    0.0,
                );
                lp.add_constraint(format!("bes_hi_{t}"), [(e, 1.0), (e_bar, -bes.soc_max)], Sense::Le, 0.0);
                if bes.soc_min > 0.0 {
                    lp.add_constraint(format!("bes_lo_{t}"), [(e, 1.0), (e_bar, -bes.soc_min)], Sense::Ge, 0.0);
                }
                lp.add_constraint(format!("bes_pch_{t}"), [(pc, 1.0), (p_bar, -1.0)], Sense::Le, 0.0);
                lp.add_constraint(format!("bes_pdis_{t}"), [(pd, 1.0), (p_bar, -1.0)], Sense::Le, 0.0);
                balance.push((pc, -1.0));
                balance.push((pd, 1.0));
                prev_bes = Some(e);
                p_ch = Some(pc);
                p_dis = Some(pd);
                e_bes = Some(e);
            }

            let p_total = lp.add_var(format!("p_total_{t}"), 0.0, f64::INFINITY);
            balance.push((p_total, 1.0));
            lp.add_constraint(format!("balance_{t}"), balance, Sense::Eq, s.p_non[t]);
            let m = months.binary_search(&s.months[t]).expect("month listed");
            lp.add_constraint(format!("peak_{t}"), [(lay.p_peak[m], 1.0), (p_total, -1.0)], Sense::Ge, 0.0);
            let coef = year.annual_factor * block.weight * s.prices[t] * dt;
            lp.add_objective(p_total, pwf * coef);

            lay.p_total.push(p_total);
            lay.energy_coef.push(coef);
            lay.q_ch.push(q_ch);
            lay.q_dis.push(q_dis);
            lay.e_tes.push(e_tes);
            lay.p_bes_ch.push(p_ch);
            lay.p_bes_dis.push(p_dis);
            lay.e_bes.push(e_bes);
        }
        if let (Some(e0), Some(e)) = (init_tes, prev_tes) {
            lp.add_constraint(format!("tes_cyclic_{b}"), [(e, 1.0), (e0, -1.0)], Sense::Ge, 0.0);
        }
        if let (Some(e0), Some(e)) = (init_bes, prev_bes) {
            lp.add_constraint(format!("bes_cyclic_{b}"), [(e, 1.0), (e0, -1.0)], Sense::Ge, 0.0);
        }
    }
    if !has_tes {
        lp.set_bounds(c_tes, bounds[1].0, bounds[1].0.min(bounds[1].1));
        lp.set_bounds(q_tes, bounds[2].0, bounds[2].0.min(bounds[2].1));
    }
    if !has_bes {
        lp.set_bounds(p_bar, bounds[3].0, bounds[3].0.min(bounds[3].1));
        lp.set_bounds(e_bar, bounds[4].0, bounds[4].0.min(bounds[4].1));
    }
    Ok((lp, lay))
}

/// Snaps solver noise on capacities to zero.
fn clean(v: f64) -> f64 {
    if v.abs() < 1e-6 {
        0.0
    } else {
        v
    }
}

pub fn solve_sizing(config: &SizingConfig, template: &Assets, year: &SizingYear) -> Result<SizingResult, SizingError> {
    let (lp, lay) = build_sizing_problem(config, template, year)?;
    let sol = AutoSolver::new(Backend::Auto).solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(SizingError::Infeasible(
                "capacity, space or fixed-size limits cannot serve the cooling load".into(),
            ))
        }
        other => return Err(SizingError::SolverLimit(other.as_str().to_string())),
    }
    let capacities = Capacities::from_array(lay.capacity.map(|v| clean(sol.value(v))));
    let energy: f64 = lay.p_total.iter().zip(&lay.energy_coef).map(|(&v, c)| c * sol.value(v)).sum();
    let demand: f64 = lay.p_peak.iter().zip(&lay.demand_coef).map(|(&v, c)| c * sol.value(v)).sum();
    let capital = capacities.capital(&config.prices);
    let pwf = config.pwf();
    let annual = energy + demand;
    Ok(SizingResult {
        capacities,
        capital,
        annual_energy_cost: energy,
        annual_demand_cost: demand,
        annual_operating: annual,
        pwf,
        operating_pv: pwf * annual,
        total: capital + pwf * annual,
        resolution: config.resolution.clone(),
    })
}

/// Sizes ice storage with no battery, then the battery with the ice plant
/// fixed. Returns both stages.
pub fn sequential_sizing(
    config: &SizingConfig,
    template: &Assets,
    year: &SizingYear,
) -> Result<(SizingResult, SizingResult), SizingError> {
    let mut first = config.clone();
    first.fixed.bes_kw = Some(0.0);
    first.fixed.bes_kwh = Some(0.0);
    let stage1 = solve_sizing(&first, template, year)?;
    let mut second = config.clone();
    second.fixed = FixedCapacities {
        tes_chiller_kw: Some(stage1.capacities.tes_chiller_kw),
        tes_kwh: Some(stage1.capacities.tes_kwh),
        ..config.fixed
    };
    let stage2 = solve_sizing(&second, template, year)?;
    Ok((stage1, stage2))
}
