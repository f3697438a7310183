#![allow(dead_code)]

use std::path::PathBuf;

use ceh_sizing::catalog::{BessTechnology, ChargerType, PvTechnology, TechnologyCatalog, WtTechnology};
use ceh_sizing::ingest::{ChargingSession, GridContract, HubInputs, Scenario, ScenarioSet};
use ceh_sizing::model::{build_problem, ConstraintFamily, IndexMaps, MilpProblem, ModelOptions};
use ceh_sizing::report::{extract_solution, HubSolution};
use ceh_sizing::solve::{solve, OracleCaps, SolveOptions, SolveOutcome};
use ceh_sizing::synthetic;

pub const REL_TOL: f64 = 1e-6;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn highs_opts() -> SolveOptions {
    SolveOptions {
        relative_gap: 1e-9,
        time_limit_s: 60.0,
        threads: Some(1),
        seed: 0,
        backend_id: "highs".into(),
        oracle_caps: OracleCaps::default(),
    }
}

pub fn oracle_opts() -> SolveOptions {
    SolveOptions { backend_id: "oracle".into(), ..highs_opts() }
}

pub fn tiny(seed: u64) -> HubInputs {
    synthetic::tiny_instance(seed, &synthetic::TinyShape::default(), &OracleCaps::default())
}

pub struct Solved {
    pub problem: MilpProblem,
    pub maps: IndexMaps,
    pub outcome: SolveOutcome,
}

impl Solved {
    pub fn solution(&self, inputs: &HubInputs) -> HubSolution {
        extract_solution(&self.outcome, &self.maps, inputs).expect("solution extracts and validates")
    }
}

pub fn run(inputs: &HubInputs, opts: &SolveOptions) -> Solved {
    let (problem, maps) = build_problem(inputs, &ModelOptions::default()).expect("problem builds");
    let outcome = solve(&problem, opts).expect("backend runs");
    Solved { problem, maps, outcome }
}

/// One day of six 4-hour slots with every technology on offer, a price
/// spread that makes storage worthwhile, and two trucks with disjoint
/// windows competing for two identical chargers.
pub fn rich_instance() -> HubInputs {
    let catalog = TechnologyCatalog {
        pv: vec![PvTechnology {
            id: "pv".into(),
            efficiency: 0.2,
            area_m2: 500.0,
            invest_cost: 20_000.0,
            maintenance_cost: 100.0,
            lifetime_years: None,
            max_units: 2,
        }],
        wt: vec![WtTechnology {
            id: "wt".into(),
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 22.0,
            rated_power_kw: 100.0,
            swept_area_m2: 800.0,
            air_density: 1.225,
            hub_height_m: 40.0,
            measurement_height_m: 10.0,
            shear_exponent: 0.143,
            invest_cost: 150_000.0,
            maintenance_cost: 1_500.0,
            lifetime_years: None,
            max_units: 2,
        }],
        bess: vec![BessTechnology {
            id: "bess".into(),
            unit_size_kwh: 200.0,
            charge_eff: 0.95,
            discharge_eff: 0.95,
            self_discharge_per_h: 1e-4,
            soc_min_frac: 0.1,
            soc_max_frac: 0.9,
            soc_init_frac: 0.5,
            max_charge_kw: 100.0,
            max_discharge_kw: 100.0,
            max_units: 2,
            invest_cost: 5_000.0,
            maintenance_cost: 50.0,
            degradation_cost_per_kw: 0.01,
            lifetime_years: None,
        }],
        chargers: vec![ChargerType {
            id: "dc".into(),
            max_power_kw: 150.0,
            invest_cost: 60_000.0,
            maintenance_cost: 600.0,
            candidate_count: 2,
            lifetime_years: None,
        }],
    };
    let session = |id: &str, arr, dep, e| ChargingSession {
        vehicle_id: id.into(),
        arrival_slot: arr,
        departure_slot: dep,
        energy_kwh: e,
        max_vehicle_rate_kw: 400.0,
    };
    let scenario = Scenario {
        id: "day".into(),
        occurrence_days: 365,
        delta_t: 4.0,
        irradiance: vec![0.0, 0.3, 0.8, 0.7, 0.2, 0.0],
        measured_wind_speed: vec![6.0, 8.0, 4.0, 5.0, 9.0, 7.0],
        grid: GridContract {
            withdrawal_limit: vec![400.0; 6],
            injection_limit: vec![200.0; 6],
            buy_price: vec![0.10, 0.10, 0.45, 0.50, 0.45, 0.10],
            sell_price: vec![0.02, 0.02, 0.05, 0.05, 0.05, 0.02],
        },
        sessions: vec![session("truck-a", 1, 3, 400.0), session("truck-b", 4, 6, 300.0)],
    };
    HubInputs::new(catalog, ScenarioSet::new(vec![scenario], 365).unwrap(), synthetic::economics()).unwrap()
}

pub struct Mutation {
    pub family: ConstraintFamily,
    pub apply: fn(&mut HubSolution, &HubInputs),
}

/// One deliberate violation per constraint family, applied to a solution
/// of [`rich_instance`].
pub fn mutations() -> Vec<Mutation> {
    use ConstraintFamily as F;
    vec![
        Mutation { family: F::PvLink, apply: |s, _| s.operations[0].pv_kw[2] += 1.0 },
        Mutation { family: F::WtLink, apply: |s, _| s.operations[0].wt_kw[1] += 1.0 },
        Mutation { family: F::SocRecursion, apply: |s, _| s.operations[0].soc_kwh[0][3] += 0.5 },
        Mutation { family: F::SocBounds, apply: |s, _| s.operations[0].soc_kwh[0][2] = -1.0 },
        Mutation { family: F::InitialSoc, apply: |s, _| s.operations[0].soc_kwh[0][0] += 1.0 },
        Mutation {
            family: F::TerminalSoc,
            apply: |s, _| {
                let soc = &mut s.operations[0].soc_kwh[0];
                let last = soc.len() - 1;
                soc[last] = soc[0] - 1.0;
            },
        },
        Mutation {
            family: F::BessPowerCap,
            apply: |s, inputs| {
                let cap = s.design.bess_units[0] as f64 * inputs.catalog.bess[0].max_charge_kw;
                s.operations[0].charge_kw[0][0] = cap + 1.0;
            },
        },
        Mutation {
            family: F::BessExclusivity,
            apply: |s, _| {
                let op = &mut s.operations[0];
                if op.charging_mode[0][1] {
                    op.discharge_kw[0][1] += 1.0;
                } else {
                    op.charge_kw[0][1] += 1.0;
                }
            },
        },
        Mutation {
            family: F::ChargerLinking,
            apply: |s, _| {
                let c = s.operations[0].sessions[0].charger;
                s.design.chargers_installed[c] = false;
            },
        },
        Mutation { family: F::ExactlyOneStart, apply: |s, _| drop(s.operations[0].sessions.pop()) },
        Mutation {
            family: F::ChargerOccupancy,
            apply: |s, _| {
                let op = &mut s.operations[0];
                let first = op.sessions[0].clone();
                op.sessions[1].charger = first.charger;
                op.sessions[1].start_slot = first.start_slot;
            },
        },
        Mutation { family: F::ChargerPower, apply: |s, _| s.operations[0].charger_kw[0][0] += 1.0 },
        Mutation {
            family: F::SymmetryInstall,
            apply: |s, _| {
                s.design.chargers_installed[0] = false;
                s.design.chargers_installed[1] = true;
            },
        },
        Mutation {
            family: F::SymmetryUsage,
            apply: |s, _| {
                // move the first session to the second charger, power rows included
                s.design.chargers_installed[1] = true;
                let op = &mut s.operations[0];
                let a = op.sessions[0].clone();
                op.sessions[0].charger = 1 - a.charger;
                for t in 0..op.charger_kw[0].len() {
                    if a.occupies(t as u32 + 1) {
                        let p = op.charger_kw[a.charger][t];
                        op.charger_kw[a.charger][t] -= p;
                        op.charger_kw[1 - a.charger][t] += p;
                    }
                }
            },
        },
        Mutation {
            family: F::GridBounds,
            apply: |s, inputs| {
                let limit = inputs.scenarios.scenarios()[0].grid.withdrawal_limit[0];
                s.operations[0].grid_kw[0] = limit + 10.0;
            },
        },
        Mutation { family: F::PriceRelaxation, apply: |s, _| s.operations[0].trade_cost[0] -= 1.0 },
        Mutation {
            family: F::PowerBalance,
            apply: |s, _| {
                let op = &mut s.operations[0];
                op.grid_kw[0] -= 0.5;
                op.trade_cost[0] += 1e3;
            },
        },
    ]
}

/// Independent feasibility checks on a solved instance: grid limits, state
/// of charge limits, one start per session inside its window, no double
/// booking and the bus balance. Returns a description of each failure.
pub fn feasibility_failures(s: &HubSolution, inputs: &HubInputs) -> Vec<String> {
    let mut out = Vec::new();
    let cat = &inputs.catalog;
    for (scen, op) in inputs.scenarios.scenarios().iter().zip(&s.operations) {
        let slots = op.grid_kw.len();
        let load: Vec<f64> = (0..slots).map(|t| op.charger_kw.iter().map(|c| c[t]).sum()).collect();
        let max_load = load.iter().cloned().fold(1.0, f64::max);
        for (t, &demand) in load.iter().enumerate() {
            let g = op.grid_kw[t];
            let (wdl, inj) = (scen.grid.withdrawal_limit[t], scen.grid.injection_limit[t]);
            if g > wdl + REL_TOL * wdl.max(1.0) || g < -inj - REL_TOL * inj.max(1.0) {
                out.push(format!("{} slot {}: grid {g} outside [-{inj}, {wdl}]", scen.id, t + 1));
            }
            let storage: f64 = (0..cat.bess.len()).map(|b| op.discharge_kw[b][t] - op.charge_kw[b][t]).sum();
            let residual = op.pv_kw[t] + op.wt_kw[t] + g + storage - demand;
            if residual.abs() > REL_TOL * max_load {
                out.push(format!("{} slot {}: balance residual {residual}", scen.id, t + 1));
            }
        }
        for (b, tech) in cat.bess.iter().enumerate() {
            let size = s.design.bess_units[b] as f64 * tech.unit_size_kwh;
            let (lo, hi) = (size * tech.soc_min_frac, size * tech.soc_max_frac);
            for &e in &op.soc_kwh[b] {
                if e < lo - REL_TOL * size.max(1.0) || e > hi + REL_TOL * size.max(1.0) {
                    out.push(format!("{} bess {}: soc {e} outside [{lo}, {hi}]", scen.id, tech.id));
                }
            }
        }
        for (v, session) in scen.sessions.iter().enumerate() {
            let mine: Vec<_> = op.sessions.iter().filter(|a| a.session == v).collect();
            if mine.len() != 1 {
                out.push(format!("{} {}: scheduled {} times", scen.id, session.vehicle_id, mine.len()));
                continue;
            }
            let a = mine[0];
            if a.start_slot < session.arrival_slot || a.start_slot + a.duration_slots - 1 > session.departure_slot {
                out.push(format!("{} {}: start {} outside window", scen.id, session.vehicle_id, a.start_slot));
            }
        }
        for c in 0..op.charger_kw.len() {
            for t in 1..=slots as u32 {
                let n = op.sessions.iter().filter(|a| a.charger == c && a.occupies(t)).count();
                if n > 1 {
                    out.push(format!("{} charger {c} slot {t}: {n} vehicles", scen.id));
                }
            }
        }
    }
    out
}
