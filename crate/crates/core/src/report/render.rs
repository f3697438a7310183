//! Plot-ready report files.
//!
//! | file           | columns                                                             |
//! |----------------|---------------------------------------------------------------------|
//! | `grid.csv`     | scenario_id, slot, grid_kw, withdrawal_limit_kw, injection_limit_kw, trade_cost |
//! | `charging.csv` | scenario_id, slot, pv_kw, wt_kw, charging_kw, storage_net_kw        |
//! | `soc.csv`      | scenario_id, bess_id, boundary, soc_kwh                             |
//! | `schedule.csv` | vehicle_id, scenario_id, charger_id, start_slot, duration_slots, power_kw |
//! | `summary.json` | design, costs, energy balance                                       |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ingest::HubInputs;

use super::energy::EnergyShares;
use super::{CostBreakdown, EnergyBalance, HubSolution, ReportError, REPORT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCount {
    pub id: String,
    pub units: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerChoice {
    pub id: String,
    pub installed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: String,
    pub objective: f64,
    pub pv: Vec<UnitCount>,
    pub wt: Vec<UnitCount>,
    pub bess: Vec<UnitCount>,
    pub chargers: Vec<ChargerChoice>,
    pub costs: CostBreakdown,
    pub energy: EnergyBalance,
    pub energy_shares: EnergyShares,
    pub scheduled_sessions: usize,
}

impl Summary {
    pub fn new(solution: &HubSolution, balance: &EnergyBalance, inputs: &HubInputs) -> Self {
        let cat = &inputs.catalog;
        let count = |ids: Vec<&String>, n: &[u32]| {
            ids.into_iter().zip(n).map(|(id, &units)| UnitCount { id: id.clone(), units }).collect()
        };
        let d = &solution.design;
        Summary {
            status: solution.status.label().into(),
            objective: solution.objective,
            pv: count(cat.pv.iter().map(|t| &t.id).collect(), &d.pv_units),
            wt: count(cat.wt.iter().map(|t| &t.id).collect(), &d.wt_units),
            bess: count(cat.bess.iter().map(|t| &t.id).collect(), &d.bess_units),
            chargers: cat
                .candidates()
                .into_iter()
                .zip(&d.chargers_installed)
                .map(|(c, &installed)| ChargerChoice { id: cat.candidate_label(c), installed })
                .collect(),
            costs: solution.costs,
            energy: *balance,
            energy_shares: balance.shares(),
            scheduled_sessions: solution.operations.iter().map(|o| o.sessions.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub grid: PathBuf,
    pub charging: PathBuf,
    pub soc: PathBuf,
    pub schedule: PathBuf,
    pub summary: PathBuf,
}

impl ReportFiles {
    pub fn all(&self) -> [&Path; 5] {
        [&self.grid, &self.charging, &self.soc, &self.schedule, &self.summary]
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the report files into `dir`. Fails if a grid value lies outside
/// its contract limits.
pub fn render_reports(
    solution: &HubSolution,
    balance: &EnergyBalance,
    inputs: &HubInputs,
    dir: &Path,
) -> Result<ReportFiles, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let cat = &inputs.catalog;
    let candidates = cat.candidates();
    let files = ReportFiles {
        grid: dir.join("grid.csv"),
        charging: dir.join("charging.csv"),
        soc: dir.join("soc.csv"),
        schedule: dir.join("schedule.csv"),
        summary: dir.join("summary.json"),
    };
    let pairs = || inputs.scenarios.scenarios().iter().zip(&solution.operations);

    let mut grid = Vec::new();
    for (scen, op) in pairs() {
        for (t, &g) in op.grid_kw.iter().enumerate() {
            let (wdl, inj) = (scen.grid.withdrawal_limit[t], scen.grid.injection_limit[t]);
            let tol = REPORT_TOL * wdl.max(inj).max(1.0);
            if g > wdl + tol || g < -inj - tol {
                return Err(io_err(&files.grid, format!("scenario '{}' slot {}: {g} kW outside [-{inj}, {wdl}]", scen.id, t + 1)));
            }
            grid.push(vec![
                scen.id.clone(),
                (t + 1).to_string(),
                g.to_string(),
                wdl.to_string(),
                inj.to_string(),
                op.trade_cost[t].to_string(),
            ]);
        }
    }
    write_csv(
        &files.grid,
        &["scenario_id", "slot", "grid_kw", "withdrawal_limit_kw", "injection_limit_kw", "trade_cost"],
        grid,
    )?;

    let mut charging = Vec::new();
    for (scen, op) in pairs() {
        for t in 0..op.grid_kw.len() {
            let load: f64 = op.charger_kw.iter().map(|c| c[t]).sum();
            let storage: f64 = op.discharge_kw.iter().zip(&op.charge_kw).map(|(d, c)| d[t] - c[t]).sum();
            charging.push(vec![
                scen.id.clone(),
                (t + 1).to_string(),
                op.pv_kw[t].to_string(),
                op.wt_kw[t].to_string(),
                load.to_string(),
                storage.to_string(),
            ]);
        }
    }
    write_csv(
        &files.charging,
        &["scenario_id", "slot", "pv_kw", "wt_kw", "charging_kw", "storage_net_kw"],
        charging,
    )?;

    let mut soc = Vec::new();
    for (scen, op) in pairs() {
        for (b, tech) in cat.bess.iter().enumerate() {
            for (k, e) in op.soc_kwh[b].iter().enumerate() {
                soc.push(vec![scen.id.clone(), tech.id.clone(), k.to_string(), e.to_string()]);
            }
        }
    }
    write_csv(&files.soc, &["scenario_id", "bess_id", "boundary", "soc_kwh"], soc)?;

    let mut schedule = Vec::new();
    for (scen, op) in pairs() {
        for a in &op.sessions {
            schedule.push(vec![
                a.vehicle_id.clone(),
                scen.id.clone(),
                cat.candidate_label(candidates[a.charger]),
                a.start_slot.to_string(),
                a.duration_slots.to_string(),
                a.power_kw.to_string(),
            ]);
        }
    }
    write_csv(
        &files.schedule,
        &["vehicle_id", "scenario_id", "charger_id", "start_slot", "duration_slots", "power_kw"],
        schedule,
    )?;

    let summary = Summary::new(solution, balance, inputs);
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&files.summary, e))?;
    text.push('\n');
    std::fs::write(&files.summary, text).map_err(|e| io_err(&files.summary, e))?;
    Ok(files)
}
