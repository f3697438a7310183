//! Charger installation, start selection, occupancy, charger power and the
//! symmetry rows between identical candidates.

use std::ops::RangeInclusive;

use crate::catalog::{charging_duration_slots, effective_rate, CandidateCharger, TechnologyCatalog};
use crate::ingest::{ChargingSession, Scenario};

use super::{BuildContext, ConstraintFamily, Relation, Row, Var};

/// Admissible starts of one session on one candidate charger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartWindow {
    /// Constant charging power in kW.
    pub rate: f64,
    /// Occupied slots.
    pub duration: u32,
    /// Largest relative start offset; offsets run `1..=last_offset`.
    pub last_offset: u32,
}

impl StartWindow {
    pub fn new(session: &ChargingSession, rate: f64, duration: u32) -> Option<Self> {
        let last = session.departure_slot as i64 - session.arrival_slot as i64 - duration as i64 + 2;
        (last >= 1).then_some(StartWindow { rate, duration, last_offset: last as u32 })
    }
}

/// `[session][candidate]` start windows of a scenario; `None` where the
/// session cannot finish on that charger.
pub fn start_windows(
    catalog: &TechnologyCatalog,
    candidates: &[CandidateCharger],
    scenario: &Scenario,
) -> Vec<Vec<Option<StartWindow>>> {
    scenario
        .sessions
        .iter()
        .map(|v| {
            candidates
                .iter()
                .map(|c| {
                    let ty = &catalog.chargers[c.type_index];
                    StartWindow::new(v, effective_rate(v, ty), charging_duration_slots(v, ty, scenario.delta_t))
                })
                .collect()
        })
        .collect()
}

/// Start offsets under which a session arriving at `arrival` occupies the
/// charger during slot `t` (both 1-based). Empty when none do.
pub fn covering_offsets(w: &StartWindow, arrival: u32, t: u32) -> RangeInclusive<u32> {
    let (t, a, tau) = (t as i64, arrival as i64, w.duration as i64);
    let lo = (t - a - tau + 2).max(1);
    let hi = (t - a + 1).min(w.last_offset as i64);
    if hi < lo {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    lo as u32..=hi as u32
}

pub fn add_session_constraints(ctx: &BuildContext, s: usize, rows: &mut Vec<Row>) {
    let scen = &ctx.inputs.scenarios.scenarios()[s];
    let windows = &ctx.windows[s];
    let maps = ctx.maps;
    let cands = &maps.candidates;
    let slots = maps.slots;
    let start = |v: usize, c: usize, r: u32| maps.col(Var::Start { scenario: s, session: v, charger: c, offset: r });
    // occupancy terms of vehicle v on charger c during 0-based slot t
    let occupancy = |v: usize, c: usize, t: usize| -> Vec<usize> {
        match &windows[v][c] {
            Some(w) => covering_offsets(w, scen.sessions[v].arrival_slot, t as u32 + 1)
                .map(|r| start(v, c, r))
                .collect(),
            None => Vec::new(),
        }
    };

    for (v, per_charger) in windows.iter().enumerate() {
        let mut one = Vec::new();
        for (c, w) in per_charger.iter().enumerate() {
            let Some(w) = w else { continue };
            let q = maps.col(Var::ChargerInstalled { charger: c });
            for r in 1..=w.last_offset {
                let x = start(v, c, r);
                rows.push(Row {
                    terms: vec![(x, 1.0), (q, -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                    family: ConstraintFamily::ChargerLinking,
                    label: format!("link_s{s}_v{v}_c{c}_r{r}"),
                });
                one.push((x, 1.0));
            }
        }
        rows.push(Row {
            terms: one,
            relation: Relation::Eq,
            rhs: 1.0,
            family: ConstraintFamily::ExactlyOneStart,
            label: format!("one_start_s{s}_v{v}"),
        });
    }

    for c in 0..cands.len() {
        for t in 0..slots {
            let mut busy = Vec::new();
            let mut power = vec![(maps.col(Var::ChargerPower { charger: c, scenario: s, slot: t }), 1.0)];
            for (v, per_charger) in windows.iter().enumerate() {
                let Some(w) = &per_charger[c] else { continue };
                for x in occupancy(v, c, t) {
                    busy.push((x, 1.0));
                    power.push((x, -w.rate));
                }
            }
            if !busy.is_empty() {
                rows.push(Row {
                    terms: busy,
                    relation: Relation::Le,
                    rhs: 1.0,
                    family: ConstraintFamily::ChargerOccupancy,
                    label: format!("occupancy_s{s}_c{c}_t{t}"),
                });
            }
            rows.push(Row {
                terms: power,
                relation: Relation::Eq,
                rhs: 0.0,
                family: ConstraintFamily::ChargerPower,
                label: format!("charger_power_s{s}_c{c}_t{t}"),
            });
        }
    }

    // A vehicle may use candidate j+1 of a type in a slot only if candidate j
    // of that type is in use by some vehicle in the same slot.
    for c in 0..cands.len().saturating_sub(1) {
        if cands[c].type_index != cands[c + 1].type_index {
            continue;
        }
        for t in 0..slots {
            let lower: Vec<usize> = (0..windows.len()).flat_map(|v| occupancy(v, c, t)).collect();
            for v in 0..windows.len() {
                let upper = occupancy(v, c + 1, t);
                if upper.is_empty() {
                    continue;
                }
                let mut terms: Vec<(usize, f64)> = upper.into_iter().map(|x| (x, 1.0)).collect();
                terms.extend(lower.iter().map(|&x| (x, -1.0)));
                rows.push(Row {
                    terms,
                    relation: Relation::Le,
                    rhs: 0.0,
                    family: ConstraintFamily::SymmetryUsage,
                    label: format!("sym_usage_s{s}_v{v}_c{}_t{t}", c + 1),
                });
            }
        }
    }
}
