//! Independent re-check of a decoded solution against the raw inputs. Works
//! from the inputs and the decoded decisions only, never from the assembled
//! problem, so a wrong row in the model builder cannot hide itself.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{charging_duration_slots, effective_rate, pv_unit_power, scale_wind_speed, wt_unit_power};
use crate::ingest::HubInputs;
use crate::model::ConstraintFamily;

use super::{HubSolution, REPORT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.family, self.location, self.detail)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn tol(scale: f64) -> f64 {
        REPORT_TOL * scale.abs().max(1.0)
    }

    fn fail(&mut self, family: ConstraintFamily, location: impl FnOnce() -> String, detail: String) {
        self.out.push(Violation { family, location: location(), detail });
    }

    fn eq(&mut self, family: ConstraintFamily, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        if !((lhs - rhs).abs() <= Self::tol(lhs.abs().max(rhs.abs()))) {
            self.fail(family, location, format!("{lhs} != {rhs}"));
        }
    }

    fn le(&mut self, family: ConstraintFamily, lhs: f64, rhs: f64, location: impl FnOnce() -> String) {
        if !(lhs <= rhs + Self::tol(lhs.abs().max(rhs.abs()))) {
            self.fail(family, location, format!("{lhs} > {rhs}"));
        }
    }
}

/// All constraint violations of `solution`; empty when it is feasible.
pub fn validate_solution(solution: &HubSolution, inputs: &HubInputs) -> Vec<Violation> {
    use ConstraintFamily as F;
    let cat = &inputs.catalog;
    let candidates = cat.candidates();
    let design = &solution.design;
    let mut ck = Checker { out: Vec::new() };
    let scenarios = inputs.scenarios.scenarios();
    let slots = inputs.scenarios.slots();

    let shape_ok = design.pv_units.len() == cat.pv.len()
        && design.wt_units.len() == cat.wt.len()
        && design.bess_units.len() == cat.bess.len()
        && design.chargers_installed.len() == candidates.len()
        && solution.operations.len() == scenarios.len();
    if !shape_ok {
        ck.fail(F::PowerBalance, || "solution".into(), "dimensions do not match the inputs".into());
        return ck.out;
    }
    for (p, t) in cat.pv.iter().enumerate() {
        ck.le(F::PvLink, design.pv_units[p] as f64, t.max_units as f64, || format!("pv '{}' units", t.id));
    }
    for (w, t) in cat.wt.iter().enumerate() {
        ck.le(F::WtLink, design.wt_units[w] as f64, t.max_units as f64, || format!("wt '{}' units", t.id));
    }
    for (b, t) in cat.bess.iter().enumerate() {
        ck.le(F::BessPowerCap, design.bess_units[b] as f64, t.max_units as f64, || format!("bess '{}' units", t.id));
    }
    for c in 1..candidates.len() {
        if candidates[c].type_index == candidates[c - 1].type_index
            && design.chargers_installed[c]
            && !design.chargers_installed[c - 1]
        {
            ck.fail(F::SymmetryInstall, || format!("charger {}", cat.candidate_label(candidates[c])), "installed before its predecessor".into());
        }
    }

    for (scen, op) in scenarios.iter().zip(&solution.operations) {
        let dt = scen.delta_t;
        let sid = scen.id.as_str();
        let at = |what: &str, t: usize| format!("scenario '{sid}' {what} slot {}", t + 1);
        let dims_ok = op.grid_kw.len() == slots
            && op.trade_cost.len() == slots
            && op.pv_kw.len() == slots
            && op.wt_kw.len() == slots
            && op.charge_kw.len() == cat.bess.len()
            && op.discharge_kw.len() == cat.bess.len()
            && op.soc_kwh.len() == cat.bess.len()
            && op.charge_kw.iter().chain(&op.discharge_kw).all(|v| v.len() == slots)
            && op.soc_kwh.iter().all(|v| v.len() == slots + 1)
            && op.charger_kw.len() == candidates.len()
            && op.charger_kw.iter().all(|v| v.len() == slots);
        if !dims_ok {
            ck.fail(F::PowerBalance, || format!("scenario '{sid}'"), "operation dimensions do not match".into());
            continue;
        }

        for t in 0..slots {
            let pv: f64 = cat
                .pv
                .iter()
                .zip(&design.pv_units)
                .map(|(tech, &n)| n as f64 * pv_unit_power(tech, scen.irradiance[t]))
                .sum();
            ck.eq(F::PvLink, op.pv_kw[t], pv, || at("pv", t));
            let wt: f64 = cat
                .wt
                .iter()
                .zip(&design.wt_units)
                .map(|(tech, &n)| {
                    let v = scale_wind_speed(tech, scen.measured_wind_speed[t]).unwrap_or(f64::NAN);
                    n as f64 * wt_unit_power(tech, v)
                })
                .sum();
            ck.eq(F::WtLink, op.wt_kw[t], wt, || at("wt", t));

            let g = op.grid_kw[t];
            ck.le(F::GridBounds, g, scen.grid.withdrawal_limit[t], || at("grid withdrawal", t));
            ck.le(F::GridBounds, -scen.grid.injection_limit[t], g, || at("grid injection", t));
            ck.le(F::PriceRelaxation, dt * scen.grid.buy_price[t] * g, op.trade_cost[t], || at("buy price", t));
            ck.le(F::PriceRelaxation, dt * scen.grid.sell_price[t] * g, op.trade_cost[t], || at("sell price", t));

            let storage: f64 = (0..cat.bess.len()).map(|b| op.discharge_kw[b][t] - op.charge_kw[b][t]).sum();
            let load: f64 = op.charger_kw.iter().map(|c| c[t]).sum();
            let supply = op.pv_kw[t] + op.wt_kw[t] + g + storage;
            let scale = load.abs().max(supply.abs()).max(op.pv_kw[t] + op.wt_kw[t]);
            if !((supply - load).abs() <= Checker::tol(scale)) {
                ck.fail(F::PowerBalance, || at("bus", t), format!("supply {supply} != load {load}"));
            }
        }

        for (b, tech) in cat.bess.iter().enumerate() {
            let n = design.bess_units[b] as f64;
            let size = n * tech.unit_size_kwh;
            let soc = &op.soc_kwh[b];
            let id = tech.id.as_str();
            ck.eq(F::InitialSoc, soc[0], size * tech.soc_init_frac, || format!("scenario '{sid}' bess '{id}'"));
            if solution.terminal_soc {
                let last = soc[soc.len() - 1];
                ck.le(F::TerminalSoc, size * tech.soc_init_frac, last, || format!("scenario '{sid}' bess '{id}' end of day"));
            }
            for (k, &e) in soc.iter().enumerate() {
                let loc = || format!("scenario '{sid}' bess '{id}' boundary {k}");
                ck.le(F::SocBounds, e, size * tech.soc_max_frac, loc);
                ck.le(F::SocBounds, size * tech.soc_min_frac, e, loc);
            }
            let group = if op.charging_mode.len() > 1 { b } else { 0 };
            for t in 0..slots {
                let (ch, dis) = (op.charge_kw[b][t], op.discharge_kw[b][t]);
                let next = soc[t] + tech.charge_eff * ch * dt - dis / tech.discharge_eff * dt
                    - tech.self_discharge_per_h * size * dt;
                ck.eq(F::SocRecursion, soc[t + 1], next, || at(&format!("bess '{id}' energy"), t));
                let loc = || at(&format!("bess '{id}' power"), t);
                ck.le(F::BessPowerCap, 0.0, ch.min(dis), loc);
                ck.le(F::BessPowerCap, ch, n * tech.max_charge_kw, loc);
                ck.le(F::BessPowerCap, dis, n * tech.max_discharge_kw, loc);
                let charging = op.charging_mode.get(group).and_then(|m| m.get(t)).copied();
                let loc = || at(&format!("bess '{id}' mode"), t);
                match charging {
                    Some(true) => ck.le(F::BessExclusivity, dis, 0.0, loc),
                    Some(false) => ck.le(F::BessExclusivity, ch, 0.0, loc),
                    None => {
                        if ch > Checker::tol(ch) && dis > Checker::tol(dis) {
                            ck.fail(F::BessExclusivity, loc, "charging and discharging together".into());
                        }
                    }
                }
            }
        }

        // sessions: each scheduled once, inside its window, at its rate
        let mut seen = vec![0usize; scen.sessions.len()];
        for a in &op.sessions {
            let loc = || format!("scenario '{sid}' vehicle '{}'", a.vehicle_id);
            let (Some(v), Some(cand)) = (scen.sessions.get(a.session), candidates.get(a.charger)) else {
                ck.fail(F::ExactlyOneStart, loc, "unknown session or charger".into());
                continue;
            };
            seen[a.session] += 1;
            let ty = &cat.chargers[cand.type_index];
            let tau = charging_duration_slots(v, ty, dt);
            if a.vehicle_id != v.vehicle_id || a.duration_slots != tau || a.power_kw != effective_rate(v, ty) {
                ck.fail(F::ExactlyOneStart, loc, "duration or rate differ from the charger type".into());
            }
            if a.start_slot < v.arrival_slot || a.start_slot + tau - 1 > v.departure_slot {
                ck.fail(
                    F::ExactlyOneStart,
                    loc,
                    format!("start {} outside window {}..={}", a.start_slot, v.arrival_slot, v.departure_slot),
                );
            }
            if !design.chargers_installed[a.charger] {
                ck.fail(F::ChargerLinking, loc, format!("charger {} not installed", cat.candidate_label(*cand)));
            }
        }
        for (v, &k) in seen.iter().enumerate() {
            if k != 1 {
                ck.fail(
                    F::ExactlyOneStart,
                    || format!("scenario '{sid}' vehicle '{}'", scen.sessions[v].vehicle_id),
                    format!("scheduled {k} times"),
                );
            }
        }
        for (c, cand) in candidates.iter().enumerate() {
            for t in 0..slots {
                let slot = t as u32 + 1;
                let users: Vec<_> = op.sessions.iter().filter(|a| a.charger == c && a.occupies(slot)).collect();
                let loc = || at(&format!("charger {}", cat.candidate_label(*cand)), t);
                if users.len() > 1 {
                    ck.fail(F::ChargerOccupancy, loc, format!("{} vehicles at once", users.len()));
                }
                let power: f64 = users.iter().map(|a| a.power_kw).sum();
                ck.eq(F::ChargerPower, op.charger_kw[c][t], power, loc);
                if c > 0 && candidates[c - 1].type_index == cand.type_index && !users.is_empty() {
                    let prev_busy = op.sessions.iter().any(|a| a.charger == c - 1 && a.occupies(slot));
                    if !prev_busy {
                        ck.fail(F::SymmetryUsage, loc, "in use while its predecessor is idle".into());
                    }
                }
            }
        }
    }
    ck.out
}

/// Largest gap per scenario between the trading cost and the larger of the
/// two price lines; zero when the relaxation is tight.
pub fn relaxation_gaps(solution: &HubSolution, inputs: &HubInputs) -> Vec<f64> {
    inputs
        .scenarios
        .scenarios()
        .iter()
        .zip(&solution.operations)
        .map(|(scen, op)| {
            (0..op.grid_kw.len())
                .map(|t| {
                    let g = op.grid_kw[t];
                    let exact = (scen.delta_t * scen.grid.buy_price[t] * g).max(scen.delta_t * scen.grid.sell_price[t] * g);
                    (op.trade_cost[t] - exact).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}
