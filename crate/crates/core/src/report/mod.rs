//! Decoding solver output into a hub design and schedule, re-validating it
//! against the raw inputs, and cost/energy accounting.

mod energy;
mod render;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{pv_unit_power, scale_wind_speed, wt_unit_power, AssetClass, CatalogError};
use crate::ingest::HubInputs;
use crate::model::{IndexMaps, Var};
use crate::solve::{SolveOutcome, SolveStatus};

pub use energy::{compute_energy_balance, EnergyBalance, EnergyShares};
pub use render::{render_reports, ReportFiles, Summary};
pub use validate::{relaxation_gaps, validate_solution, Violation};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no solution to extract (status {0:?})")]
    NoSolution(SolveStatus),
    #[error("solution fails validation: {}", summarize(.0))]
    Validation(Vec<Violation>),
    #[error("recomputed cost {recomputed} differs from solver objective {objective}")]
    CostMismatch { recomputed: f64, objective: f64 },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn summarize(v: &[Violation]) -> String {
    let mut s: Vec<String> = v.iter().take(5).map(ToString::to_string).collect();
    if v.len() > 5 {
        s.push(format!("... {} more", v.len() - 5));
    }
    s.join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub pv_units: Vec<u32>,
    pub wt_units: Vec<u32>,
    pub bess_units: Vec<u32>,
    /// Per candidate charger, in candidate order.
    pub chargers_installed: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAssignment {
    /// Index into the scenario's session list.
    pub session: usize,
    pub vehicle_id: String,
    /// Candidate charger index.
    pub charger: usize,
    /// Absolute 1-based start slot.
    pub start_slot: u32,
    pub duration_slots: u32,
    pub power_kw: f64,
}

impl SessionAssignment {
    /// Whether the session occupies 1-based slot `t`.
    pub fn occupies(&self, t: u32) -> bool {
        self.start_slot <= t && t < self.start_slot + self.duration_slots
    }
}

/// Operation of one representative day. Slot-indexed vectors are 0-based;
/// `soc_kwh` has one more entry than there are slots (slot boundaries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOperation {
    pub scenario_id: String,
    pub grid_kw: Vec<f64>,
    pub trade_cost: Vec<f64>,
    pub pv_kw: Vec<f64>,
    pub wt_kw: Vec<f64>,
    /// `[bess][slot]`
    pub charge_kw: Vec<Vec<f64>>,
    pub discharge_kw: Vec<Vec<f64>>,
    /// `[bess][point]`
    pub soc_kwh: Vec<Vec<f64>>,
    /// `[group][slot]`, true while charging is allowed.
    pub charging_mode: Vec<Vec<bool>>,
    /// `[candidate][slot]`
    pub charger_kw: Vec<Vec<f64>>,
    pub sessions: Vec<SessionAssignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostShares {
    pub capex: f64,
    pub grid: f64,
    pub maintenance: f64,
    pub degradation: f64,
}

/// Annual cost terms in €.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub capex_annualized: f64,
    pub opex_grid: f64,
    pub opex_maintenance: f64,
    pub degradation: f64,
    pub total: f64,
    pub shares: CostShares,
}

impl CostBreakdown {
    /// Recomputes every term from the decoded decisions and the raw inputs.
    pub fn compute(design: &Design, ops: &[ScenarioOperation], inputs: &HubInputs) -> Result<Self, CatalogError> {
        let cat = &inputs.catalog;
        let econ = &inputs.economics;
        let mut capex = 0.0;
        let mut maint = 0.0;
        for (t, &n) in cat.pv.iter().zip(&design.pv_units) {
            capex += econ.kappa(AssetClass::Pv, t.lifetime_years)? * t.invest_cost * n as f64;
            maint += t.maintenance_cost * n as f64;
        }
        for (t, &n) in cat.wt.iter().zip(&design.wt_units) {
            capex += econ.kappa(AssetClass::Wt, t.lifetime_years)? * t.invest_cost * n as f64;
            maint += t.maintenance_cost * n as f64;
        }
        for (t, &n) in cat.bess.iter().zip(&design.bess_units) {
            capex += econ.kappa(AssetClass::Bess, t.lifetime_years)? * t.invest_cost * n as f64;
            maint += t.maintenance_cost * n as f64;
        }
        for (c, &q) in cat.candidates().iter().zip(&design.chargers_installed) {
            if q {
                let t = &cat.chargers[c.type_index];
                capex += econ.kappa(AssetClass::Charger, t.lifetime_years)? * t.invest_cost;
                maint += t.maintenance_cost;
            }
        }
        let mut grid = 0.0;
        let mut degradation = 0.0;
        for (op, scen) in ops.iter().zip(inputs.scenarios.scenarios()) {
            let d = scen.occurrence_days as f64;
            grid += d * op.trade_cost.iter().sum::<f64>();
            for (b, tech) in cat.bess.iter().enumerate() {
                let throughput: f64 = op.charge_kw[b].iter().chain(&op.discharge_kw[b]).sum();
                degradation += d * tech.degradation_cost_per_kw * throughput;
            }
        }
        let total = capex + grid + maint + degradation;
        let share = |x: f64| if total != 0.0 { x / total } else { 0.0 };
        Ok(CostBreakdown {
            capex_annualized: capex,
            opex_grid: grid,
            opex_maintenance: maint,
            degradation,
            total,
            shares: CostShares {
                capex: share(capex),
                grid: share(grid),
                maintenance: share(maint),
                degradation: share(degradation),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub design: Design,
    pub operations: Vec<ScenarioOperation>,
    pub costs: CostBreakdown,
    /// Storage had to end each day at least at its starting level.
    #[serde(default)]
    pub terminal_soc: bool,
}

/// Relative tolerance for validation and cost agreement.
pub const REPORT_TOL: f64 = 1e-6;

/// Decodes column values into design and operation, recomputes costs, and
/// re-checks every constraint family against the raw inputs.
pub fn extract_solution(
    outcome: &SolveOutcome,
    maps: &IndexMaps,
    inputs: &HubInputs,
) -> Result<HubSolution, ReportError> {
    let (Some(values), Some(objective)) = (&outcome.values, outcome.objective) else {
        return Err(ReportError::NoSolution(outcome.status));
    };
    let (design, operations) = decode(values, maps, inputs)?;
    let costs = CostBreakdown::compute(&design, &operations, inputs)?;
    let solution = HubSolution { status: outcome.status, objective, design, operations, costs, terminal_soc: maps.terminal_soc };
    let violations = validate_solution(&solution, inputs);
    if !violations.is_empty() {
        return Err(ReportError::Validation(violations));
    }
    if (costs.total - objective).abs() > REPORT_TOL * objective.abs().max(1.0) {
        return Err(ReportError::CostMismatch { recomputed: costs.total, objective });
    }
    Ok(solution)
}

fn decode(values: &[f64], maps: &IndexMaps, inputs: &HubInputs) -> Result<(Design, Vec<ScenarioOperation>), ReportError> {
    let cat = &inputs.catalog;
    let slots = maps.slots;
    let n_cand = maps.candidates.len();
    let count = |x: f64| x.round().max(0.0) as u32;
    let mut design = Design {
        pv_units: vec![0; cat.pv.len()],
        wt_units: vec![0; cat.wt.len()],
        bess_units: vec![0; cat.bess.len()],
        chargers_installed: vec![false; n_cand],
    };
    let groups = maps.iter().filter_map(|(_, v)| match v {
        Var::Mode { group, .. } => Some(group + 1),
        _ => None,
    });
    let groups = groups.max().unwrap_or(0);
    let mut ops: Vec<ScenarioOperation> = inputs
        .scenarios
        .scenarios()
        .iter()
        .map(|s| ScenarioOperation {
            scenario_id: s.id.clone(),
            grid_kw: vec![0.0; slots],
            trade_cost: vec![0.0; slots],
            pv_kw: vec![0.0; slots],
            wt_kw: vec![0.0; slots],
            charge_kw: vec![vec![0.0; slots]; cat.bess.len()],
            discharge_kw: vec![vec![0.0; slots]; cat.bess.len()],
            soc_kwh: vec![vec![0.0; slots + 1]; cat.bess.len()],
            charging_mode: vec![vec![false; slots]; groups],
            charger_kw: vec![vec![0.0; slots]; n_cand],
            sessions: Vec::new(),
        })
        .collect();
    for (j, var) in maps.iter() {
        let x = values[j];
        match var {
            Var::PvUnits { tech } => design.pv_units[tech] = count(x),
            Var::WtUnits { tech } => design.wt_units[tech] = count(x),
            Var::BessUnits { tech } => design.bess_units[tech] = count(x),
            Var::ChargerInstalled { charger } => design.chargers_installed[charger] = x > 0.5,
            Var::Grid { scenario, slot } => ops[scenario].grid_kw[slot] = x,
            Var::TradeCost { scenario, slot } => ops[scenario].trade_cost[slot] = x,
            Var::ChargerPower { charger, scenario, slot } => ops[scenario].charger_kw[charger][slot] = x,
            Var::Charge { tech, scenario, slot } => ops[scenario].charge_kw[tech][slot] = x,
            Var::Discharge { tech, scenario, slot } => ops[scenario].discharge_kw[tech][slot] = x,
            Var::Soc { tech, scenario, point } => ops[scenario].soc_kwh[tech][point] = x,
            Var::Mode { scenario, slot, group } => ops[scenario].charging_mode[group][slot] = x > 0.5,
            Var::Start { scenario, session, charger, offset } => {
                if x > 0.5 {
                    let scen = &inputs.scenarios.scenarios()[scenario];
                    let v = &scen.sessions[session];
                    let ty = &cat.chargers[maps.candidates[charger].type_index];
                    ops[scenario].sessions.push(SessionAssignment {
                        session,
                        vehicle_id: v.vehicle_id.clone(),
                        charger,
                        start_slot: v.arrival_slot + offset - 1,
                        duration_slots: crate::catalog::charging_duration_slots(v, ty, scen.delta_t),
                        power_kw: crate::catalog::effective_rate(v, ty),
                    });
                }
            }
        }
    }
    // renewable output follows from the design; it is stored so the link can be re-checked
    for (op, scen) in ops.iter_mut().zip(inputs.scenarios.scenarios()) {
        for t in 0..slots {
            op.pv_kw[t] = cat
                .pv
                .iter()
                .zip(&design.pv_units)
                .map(|(tech, &n)| n as f64 * pv_unit_power(tech, scen.irradiance[t]))
                .sum();
            let mut wt = 0.0;
            for (tech, &n) in cat.wt.iter().zip(&design.wt_units) {
                wt += n as f64 * wt_unit_power(tech, scale_wind_speed(tech, scen.measured_wind_speed[t])?);
            }
            op.wt_kw[t] = wt;
        }
        op.sessions.sort_by_key(|a| a.session);
    }
    Ok((design, ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_problem, test_support::*, ModelOptions};
    use crate::solve::{solve, SolveOptions};
    use crate::catalog::TechnologyCatalog;

    fn oracle_opts() -> SolveOptions {
        SolveOptions { backend_id: "oracle".into(), ..Default::default() }
    }

    #[test]
    fn decodes_start_slot_from_offset() {
        let catalog = TechnologyCatalog { chargers: vec![charger_type("dc", 180.0, 1)], ..Default::default() };
        let inputs = single_day(24, vec![session("ev", 5, 12, 300.0)], catalog);
        let (p, maps) = build_problem(&inputs, &ModelOptions::default()).unwrap();
        let mut values = vec![0.0; p.num_columns()];
        values[maps.col(Var::ChargerInstalled { charger: 0 })] = 1.0;
        values[maps.col(Var::Start { scenario: 0, session: 0, charger: 0, offset: 3 })] = 1.0;
        let (_, ops) = decode(&values, &maps, &inputs).unwrap();
        assert_eq!(ops[0].sessions[0].start_slot, 7);
        assert_eq!(ops[0].sessions[0].duration_slots, 2);
    }

    #[test]
    fn zero_demand_optimum_is_empty() {
        let mut catalog = crate::catalog::case_study_catalog();
        for t in &mut catalog.pv {
            t.max_units = 2;
        }
        for t in &mut catalog.wt {
            t.max_units = 2;
        }
        for t in &mut catalog.bess {
            t.max_units = 2;
        }
        for t in &mut catalog.chargers {
            t.candidate_count = 1;
        }
        let inputs = single_day(4, vec![], catalog);
        let (p, maps) = build_problem(&inputs, &ModelOptions::default()).unwrap();
        let out = solve(&p, &oracle_opts()).unwrap();
        let sol = extract_solution(&out, &maps, &inputs).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.design.pv_units.iter().chain(&sol.design.bess_units).all(|&n| n == 0));
        assert!(sol.design.chargers_installed.iter().all(|&q| !q));
        assert!(sol.operations[0].sessions.is_empty());
        assert_eq!(sol.costs.shares, CostShares::default());
    }

    #[test]
    fn costs_match_objective_with_sessions() {
        let catalog = TechnologyCatalog { chargers: vec![charger_type("dc", 180.0, 2)], ..Default::default() };
        let inputs = single_day(6, vec![session("a", 1, 3, 300.0), session("b", 2, 5, 500.0)], catalog);
        let (p, maps) = build_problem(&inputs, &ModelOptions::default()).unwrap();
        let out = solve(&p, &oracle_opts()).unwrap();
        let sol = extract_solution(&out, &maps, &inputs).unwrap();
        let shares = sol.costs.shares;
        assert!((shares.capex + shares.grid + shares.maintenance + shares.degradation - 1.0).abs() < 1e-12);
        assert_eq!(sol.operations[0].sessions.len(), 2);
    }
}
