//! Receding-horizon dispatch LP over `K` steps.

use serde::{Deserialize, Serialize};
use storopt_lp::{solve_milp, AutoSolver, Backend, BranchOptions, LpProblem, LpSolver, Sense, Status, VarId};

use crate::cuts::{uniform_plr_cuts, CutSet};
use crate::models::{Assets, ChillerSpec, OperatingPoint};
use crate::plant::ControlAction;

use super::DispatchError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Convex relaxation; chillers may run anywhere in `[0, plr_max]`.
    #[default]
    Lp,
    /// On/off binaries enforce `min_plr` whenever a chiller runs.
    Milp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispatchOptions {
    pub breakpoints: usize,
    pub mode: SolveMode,
    /// $/kWh credited for energy left in the ice tank at the horizon end.
    pub terminal_credit_tes: f64,
    /// $/kWh credited for energy left in the battery at the horizon end.
    pub terminal_credit_bes: f64,
    #[serde(skip)]
    pub backend: Backend,
    #[serde(skip)]
    pub max_nodes: usize,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self {
            breakpoints: 8,
            mode: SolveMode::Lp,
            terminal_credit_tes: 0.0,
            terminal_credit_bes: 0.0,
            backend: Backend::Auto,
            max_nodes: BranchOptions::default().max_nodes,
        }
    }
}

/// A billing month touched by the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonMonth {
    /// Highest peak already realised this month; the horizon peak cannot go
    /// below it, so only new peak is charged.
    pub incumbent_peak: f64,
    pub demand_rate: f64,
}

/// Forecasts and state for one horizon solve.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizonInputs {
    pub q_load: Vec<f64>,
    pub p_non: Vec<f64>,
    pub op_base: Vec<OperatingPoint>,
    pub op_tes: Vec<OperatingPoint>,
    pub prices: Vec<f64>,
    /// Index into `months` for every step.
    pub month_of_step: Vec<usize>,
    pub months: Vec<HorizonMonth>,
    pub soc_tes: f64,
    pub soc_bes: f64,
    /// Ice the tank should still hold after the last step (as SOC) so that
    /// loads beyond the horizon stay servable. Lowered to what the horizon
    /// can actually reach.
    pub tes_reserve: f64,
    pub dt: f64,
}

impl HorizonInputs {
    pub fn len(&self) -> usize {
        self.q_load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_load.is_empty()
    }

    fn check(&self) -> Result<(), DispatchError> {
        let k = self.len();
        let lens = [
            self.p_non.len(),
            self.op_base.len(),
            self.op_tes.len(),
            self.prices.len(),
            self.month_of_step.len(),
        ];
        if k == 0 || lens.iter().any(|&l| l != k) {
            return Err(DispatchError::BadInput(format!("horizon series lengths {k} / {lens:?} disagree")));
        }
        if self.month_of_step.iter().any(|&m| m >= self.months.len()) {
            return Err(DispatchError::BadInput("month index out of range".into()));
        }
        if !(self.dt > 0.0) {
            return Err(DispatchError::BadInput(format!("dt = {}", self.dt)));
        }
        Ok(())
    }
}

/// Variable handles of a built dispatch problem.
#[derive(Clone, Debug)]
pub struct DispatchLayout {
    pub q_ch: Vec<VarId>,
    pub q_dis: Vec<VarId>,
    pub soc_tes: Vec<VarId>,
    pub p_bes_ch: Vec<VarId>,
    pub p_bes_dis: Vec<VarId>,
    pub soc_bes: Vec<VarId>,
    pub p_chiller: Vec<VarId>,
    pub p_bes: Vec<VarId>,
    pub p_total: Vec<VarId>,
    pub p_peak: Vec<VarId>,
    /// Per-chiller powers whose sum is `p_chiller`.
    pub p_base: Vec<VarId>,
    pub p_tes: Vec<VarId>,
    pub u_base: Vec<Option<VarId>>,
    pub u_tes: Vec<Option<VarId>>,
}

impl DispatchLayout {
    /// Decision variables of the formulation proper: nine per step plus one
    /// peak per month. Per-chiller power splits and binaries are auxiliary.
    pub fn core_variable_count(&self) -> usize {
        9 * self.q_ch.len() + self.p_peak.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub actions: Vec<ControlAction>,
    pub p_total: Vec<f64>,
    pub p_chiller: Vec<f64>,
    pub soc_tes: Vec<f64>,
    pub soc_bes: Vec<f64>,
    pub peaks: Vec<f64>,
    pub objective: f64,
}

struct StepLimits {
    base_max: Vec<f64>,
    tes_max: Vec<f64>,
    dis_lo: Vec<f64>,
}

fn step_limits(assets: &Assets, inputs: &HorizonInputs) -> Result<StepLimits, DispatchError> {
    let k = inputs.len();
    let mut lim = StepLimits {
        base_max: Vec::with_capacity(k),
        tes_max: Vec::with_capacity(k),
        dis_lo: Vec::with_capacity(k),
    };
    for t in 0..k {
        let base_max = assets.base_chiller.max_load(&inputs.op_base[t])?;
        let tes_max = if assets.tes.capacity_kwh > 0.0 {
            assets.tes_chiller.max_load(&inputs.op_tes[t])?
        } else {
            0.0
        };
        lim.dis_lo.push((inputs.q_load[t] - base_max).max(0.0));
        lim.base_max.push(base_max);
        lim.tes_max.push(tes_max);
    }
    Ok(lim)
}

/// Running the ice chiller flat out and melting only the shortfall keeps the
/// tank as full as any feasible policy can. Its first failure is therefore the first unavoidable one
/// (`Err((step, deficit))`); otherwise it returns the fullest reachable
/// end-of-horizon SOC.
fn fill_greedily(assets: &Assets, inputs: &HorizonInputs, lim: &StepLimits) -> Result<f64, (usize, f64)> {
    let tes = &assets.tes;
    let mut soc = inputs.soc_tes;
    for t in 0..inputs.len() {
        let need = lim.dis_lo[t];
        if tes.capacity_kwh <= 0.0 {
            if need > 1e-9 {
                return Err((t, need));
            }
            continue;
        }
        let eff = tes.soc_after_loss(soc);
        let stock = ((eff - tes.soc_min) * tes.capacity_kwh / inputs.dt).max(0.0);
        let rate = tes.max_discharge_curve.eval(soc).max(0.0);
        if need > rate + 1e-7 * (1.0 + need) {
            return Err((t, need - rate));
        }
        let make = lim.tes_max[t].min(tes.max_charge_curve.eval(soc)).max(0.0);
        if need > stock + make + 1e-7 * (1.0 + need) {
            return Err((t, need - stock - make));
        }
        let q_ch = make.min((tes.soc_max - eff) * tes.capacity_kwh / inputs.dt + need);
        soc = eff + (q_ch - need) * inputs.dt / tes.capacity_kwh;
    }
    Ok(soc)
}

fn cuts_for(spec: &ChillerSpec, op: &OperatingPoint, n: usize) -> Result<CutSet, DispatchError> {
    Ok(uniform_plr_cuts(&spec.curves, spec.cop_ref, op, n.max(1), spec.plr_max)?)
}

/// Builds the horizon problem. Fails early with the offending step when the
/// load cannot be served even with perfect storage use.
pub fn build_dispatch_problem(
    assets: &Assets,
    inputs: &HorizonInputs,
    options: &DispatchOptions,
) -> Result<(LpProblem, DispatchLayout), DispatchError> {
    inputs.check()?;
    let lim = step_limits(assets, inputs)?;
    let reachable = fill_greedily(assets, inputs, &lim).map_err(|(step, deficit)| DispatchError::Infeasible { step, deficit })?;

    let k = inputs.len();
    let dt = inputs.dt;
    let tes = &assets.tes;
    let bes = &assets.bes;
    let qcap = tes.capacity_kwh;
    let ccap = bes.capacity_kwh;
    let keep = 1.0 - tes.standby_loss_per_step;
    let milp = options.mode == SolveMode::Milp;

    let mut lp = LpProblem::new("dispatch");
    let mut lay = DispatchLayout {
        q_ch: Vec::with_capacity(k),
        q_dis: Vec::with_capacity(k),
        soc_tes: Vec::with_capacity(k),
        p_bes_ch: Vec::with_capacity(k),
        p_bes_dis: Vec::with_capacity(k),
        soc_bes: Vec::with_capacity(k),
        p_chiller: Vec::with_capacity(k),
        p_bes: Vec::with_capacity(k),
        p_total: Vec::with_capacity(k),
        p_peak: Vec::new(),
        p_base: Vec::with_capacity(k),
        p_tes: Vec::with_capacity(k),
        u_base: Vec::with_capacity(k),
        u_tes: Vec::with_capacity(k),
    };
    for (m, month) in inputs.months.iter().enumerate() {
        let v = lp.add_var(format!("p_peak_{m}"), month.incumbent_peak.max(0.0), f64::INFINITY);
        lp.add_objective(v, month.demand_rate);
        lay.p_peak.push(v);
    }

    let base_on = assets.base_chiller.capacity > 0.0;
    let tes_on = qcap > 0.0 && assets.tes_chiller.capacity > 0.0;
    let bes_on = ccap > 0.0 && bes.power_max_kw > 0.0;
    let ch_pieces = tes.max_charge_curve.linear_pieces(tes.soc_min, tes.soc_max);
    let dis_pieces = tes.max_discharge_curve.linear_pieces(tes.soc_min, tes.soc_max);

    for t in 0..k {
        let q_load = inputs.q_load[t].max(0.0);
        let prev_tes = if t == 0 { None } else { Some(lay.soc_tes[t - 1]) };
        let prev_bes = if t == 0 { None } else { Some(lay.soc_bes[t - 1]) };

        // Ice tank.
        let mut ch_hi = lim.tes_max[t];
        let mut dis_hi = if qcap > 0.0 { q_load } else { 0.0 };
        // Headroom and stock bind the net flow only, through the SOC bounds:
        // the plant nets simultaneous charge and discharge, sending the
        // overlap straight to the load.
        if qcap > 0.0 && t == 0 {
            ch_hi = ch_hi.min(tes.max_charge_curve.eval(inputs.soc_tes).max(0.0));
            dis_hi = dis_hi.min(tes.max_discharge_curve.eval(inputs.soc_tes).max(0.0));
        }
        if !tes_on {
            ch_hi = 0.0;
        }
        let dis_lo = lim.dis_lo[t].min(dis_hi);
        let q_ch = lp.add_var(format!("q_ch_{t}"), 0.0, ch_hi);
        let q_dis = lp.add_var(format!("q_dis_{t}"), dis_lo, dis_hi);
        let soc_tes = if qcap > 0.0 {
            let floor = tes.soc_min.min(inputs.soc_tes * keep.powi(t as i32 + 1));
            lp.add_var(format!("soc_tes_{t}"), floor, tes.soc_max)
        } else {
            lp.add_var(format!("soc_tes_{t}"), inputs.soc_tes, inputs.soc_tes)
        };
        if qcap > 0.0 {
            let s = dt / qcap;
            match prev_tes {
                None => lp.add_constraint(
                    format!("tes_dyn_{t}"),
                    [(soc_tes, 1.0), (q_ch, -s), (q_dis, s)],
                    Sense::Eq,
                    keep * inputs.soc_tes,
                ),
                Some(p) => lp.add_constraint(
                    format!("tes_dyn_{t}"),
                    [(soc_tes, 1.0), (p, -keep), (q_ch, -s), (q_dis, s)],
                    Sense::Eq,
                    0.0,
                ),
            };
            if let Some(p) = prev_tes {
                for (i, &(a, b)) in ch_pieces.iter().enumerate() {
                    if a.is_finite() {
                        lp.add_constraint(format!("tes_rate_ch_{t}_{i}"), [(q_ch, 1.0), (p, -b)], Sense::Le, a);
                    }
                }
                for (i, &(a, b)) in dis_pieces.iter().enumerate() {
                    if a.is_finite() {
                        lp.add_constraint(format!("tes_rate_dis_{t}_{i}"), [(q_dis, 1.0), (p, -b)], Sense::Le, a);
                    }
                }
            }
        }

        // Battery.
        let (mut pch_hi, mut pdis_hi) = if bes_on { (bes.power_max_kw, bes.power_max_kw) } else { (0.0, 0.0) };
        if bes_on && t == 0 {
            let (c, d) = bes.feasible_bounds(inputs.soc_bes, dt);
            pch_hi = c;
            pdis_hi = d;
        }
        let p_ch = lp.add_var(format!("p_bes_ch_{t}"), 0.0, pch_hi);
        let p_dis = lp.add_var(format!("p_bes_dis_{t}"), 0.0, pdis_hi);
        let soc_bes = if bes_on {
            lp.add_var(format!("soc_bes_{t}"), bes.soc_min.min(inputs.soc_bes), bes.soc_max)
        } else {
            lp.add_var(format!("soc_bes_{t}"), inputs.soc_bes, inputs.soc_bes)
        };
        if bes_on {
            let a = bes.eta_charge * dt / ccap;
            let b = dt / (bes.eta_discharge * ccap);
            match prev_bes {
                None => lp.add_constraint(
                    format!("bes_dyn_{t}"),
                    [(soc_bes, 1.0), (p_ch, -a), (p_dis, b)],
                    Sense::Eq,
                    inputs.soc_bes,
                ),
                Some(p) => lp.add_constraint(
                    format!("bes_dyn_{t}"),
                    [(soc_bes, 1.0), (p, -1.0), (p_ch, -a), (p_dis, b)],
                    Sense::Eq,
                    0.0,
                ),
            };
        }

        // Chillers.
        let p_base = lp.add_var(format!("p_base_{t}"), 0.0, f64::INFINITY);
        let p_tes = lp.add_var(format!("p_tes_{t}"), 0.0, f64::INFINITY);
        let mut u_base = None;
        let mut u_tes = None;
        if base_on {
            let spec = &assets.base_chiller;
            let cuts = cuts_for(spec, &inputs.op_base[t], options.breakpoints)?;
            let qa = spec.q_avail(&inputs.op_base[t])?;
            if milp && spec.min_plr > 0.0 {
                let u = lp.add_binary(format!("u_base_{t}"));
                // q_base = q_load - q_dis in [u·min·Qa, u·plr_max·Qa]
                lp.add_constraint(format!("base_min_{t}"), [(q_dis, 1.0), (u, spec.min_plr * qa)], Sense::Le, q_load);
                lp.add_constraint(format!("base_max_{t}"), [(q_dis, 1.0), (u, spec.plr_max * qa)], Sense::Ge, q_load);
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("base_cut_{t}_{i}"),
                        [(p_base, 1.0), (q_dis, c.beta), (u, -(c.alpha * spec.capacity + c.gamma))],
                        Sense::Ge,
                        c.beta * q_load,
                    );
                }
                u_base = Some(u);
            } else {
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("base_cut_{t}_{i}"),
                        [(p_base, 1.0), (q_dis, c.beta)],
                        Sense::Ge,
                        c.alpha * spec.capacity + c.beta * q_load + c.gamma,
                    );
                }
            }
        } else {
            lp.set_bounds(p_base, 0.0, 0.0);
        }
        if tes_on {
            let spec = &assets.tes_chiller;
            let cuts = cuts_for(spec, &inputs.op_tes[t], options.breakpoints)?;
            let qa = spec.q_avail(&inputs.op_tes[t])?;
            if milp && spec.min_plr > 0.0 {
                let u = lp.add_binary(format!("u_tes_{t}"));
                lp.add_constraint(format!("tes_min_{t}"), [(q_ch, 1.0), (u, -spec.min_plr * qa)], Sense::Ge, 0.0);
                lp.add_constraint(format!("tes_max_{t}"), [(q_ch, 1.0), (u, -spec.plr_max * qa)], Sense::Le, 0.0);
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("tes_cut_{t}_{i}"),
                        [(p_tes, 1.0), (q_ch, -c.beta), (u, -(c.alpha * spec.capacity + c.gamma))],
                        Sense::Ge,
                        0.0,
                    );
                }
                u_tes = Some(u);
            } else {
                for (i, c) in cuts.cuts.iter().enumerate() {
                    lp.add_constraint(
                        format!("tes_cut_{t}_{i}"),
                        [(p_tes, 1.0), (q_ch, -c.beta)],
                        Sense::Ge,
                        c.alpha * spec.capacity + c.gamma,
                    );
                }
            }
        } else {
            lp.set_bounds(p_tes, 0.0, 0.0);
        }

        // Electrical balance.
        let p_chiller = lp.add_var(format!("p_chiller_{t}"), 0.0, f64::INFINITY);
        let p_bes = lp.add_var(format!("p_bes_{t}"), f64::NEG_INFINITY, f64::INFINITY);
        let p_total = lp.add_var(format!("p_total_{t}"), 0.0, f64::INFINITY);
        lp.add_constraint(
            format!("chiller_sum_{t}"),
            [(p_chiller, 1.0), (p_base, -1.0), (p_tes, -1.0)],
            Sense::Eq,
            0.0,
        );
        lp.add_constraint(
            format!("bes_net_{t}"),
            [(p_bes, 1.0), (p_ch, -1.0), (p_dis, 1.0)],
            Sense::Eq,
            0.0,
        );
        lp.add_constraint(
            format!("balance_{t}"),
            [(p_total, 1.0), (p_chiller, -1.0), (p_bes, -1.0)],
            Sense::Eq,
            inputs.p_non[t],
        );
        lp.add_constraint(
            format!("peak_{t}"),
            [(lay.p_peak[inputs.month_of_step[t]], 1.0), (p_total, -1.0)],
            Sense::Ge,
            0.0,
        );
        lp.add_objective(p_total, inputs.prices[t] * dt);

        lay.q_ch.push(q_ch);
        lay.q_dis.push(q_dis);
        lay.soc_tes.push(soc_tes);
        lay.p_bes_ch.push(p_ch);
        lay.p_bes_dis.push(p_dis);
        lay.soc_bes.push(soc_bes);
        lay.p_chiller.push(p_chiller);
        lay.p_bes.push(p_bes);
        lay.p_total.push(p_total);
        lay.p_base.push(p_base);
        lay.p_tes.push(p_tes);
        lay.u_base.push(u_base);
        lay.u_tes.push(u_tes);
    }
    if qcap > 0.0 && options.terminal_credit_tes != 0.0 {
        lp.add_objective(lay.soc_tes[k - 1], -options.terminal_credit_tes * qcap);
    }
    if bes_on && options.terminal_credit_bes != 0.0 {
        lp.add_objective(lay.soc_bes[k - 1], -options.terminal_credit_bes * ccap);
    }
    if qcap > 0.0 && inputs.tes_reserve > 0.0 {
        let last = lay.soc_tes[k - 1];
        let floor = lp.var(last).lower;
        // A hair below the greedy optimum keeps round-off from making the
        // horizon infeasible.
        let target = inputs.tes_reserve.min(reachable - 1e-9).min(tes.soc_max);
        if target > floor {
            lp.set_bounds(last, target, tes.soc_max);
        }
    }
    Ok((lp, lay))
}

/// Builds and solves one horizon.
pub fn solve_horizon(assets: &Assets, inputs: &HorizonInputs, options: &DispatchOptions) -> Result<HorizonPlan, DispatchError> {
    let (lp, lay) = build_dispatch_problem(assets, inputs, options)?;
    let solver = AutoSolver::new(options.backend);
    let sol = if lp.has_integers() {
        let bopts = BranchOptions {
            max_nodes: options.max_nodes,
            ..BranchOptions::default()
        };
        solve_milp(&solver, &lp, &bopts)?
    } else {
        solver.solve_lp(&lp)?
    };
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(DispatchError::Infeasible {
                step: 0,
                deficit: f64::NAN,
            })
        }
        other => return Err(DispatchError::SolverLimit(format!("{other:?}"))),
    }
    let v = |id: VarId| sol.value(id);
    let k = inputs.len();
    let actions = (0..k)
        .map(|t| {
            let q_dis = v(lay.q_dis[t]);
            ControlAction {
                q_ch: v(lay.q_ch[t]),
                q_dis,
                p_bes_ch: v(lay.p_bes_ch[t]),
                p_bes_dis: v(lay.p_bes_dis[t]),
                q_base: (inputs.q_load[t] - q_dis).max(0.0),
            }
        })
        .collect();
    Ok(HorizonPlan {
        actions,
        p_total: lay.p_total.iter().map(|&id| v(id)).collect(),
        p_chiller: lay.p_chiller.iter().map(|&id| v(id)).collect(),
        soc_tes: lay.soc_tes.iter().map(|&id| v(id)).collect(),
        soc_bes: lay.soc_bes.iter().map(|&id| v(id)).collect(),
        peaks: lay.p_peak.iter().map(|&id| v(id)).collect(),
        objective: sol.objective,
    })
}
