//! Per-slot power balance of the hub bus.

use super::{BuildContext, ConstraintFamily, Relation, Row, Var};

/// Renewables + grid + storage discharge - storage charge = charger load.
/// Zero unit outputs (night, calm) are left out of the row.
pub fn add_power_balance(ctx: &BuildContext, s: usize, rows: &mut Vec<Row>) {
    let maps = ctx.maps;
    let profile = &ctx.profiles[s];
    let cat = &ctx.inputs.catalog;
    for t in 0..maps.slots {
        let mut terms = Vec::new();
        for (p, unit) in profile.pv.iter().enumerate() {
            if unit[t] != 0.0 {
                terms.push((maps.col(Var::PvUnits { tech: p }), unit[t]));
            }
        }
        for (w, unit) in profile.wt.iter().enumerate() {
            if unit[t] != 0.0 {
                terms.push((maps.col(Var::WtUnits { tech: w }), unit[t]));
            }
        }
        terms.push((maps.col(Var::Grid { scenario: s, slot: t }), 1.0));
        for b in 0..cat.bess.len() {
            terms.push((maps.col(Var::Discharge { tech: b, scenario: s, slot: t }), 1.0));
            terms.push((maps.col(Var::Charge { tech: b, scenario: s, slot: t }), -1.0));
        }
        for c in 0..maps.candidates.len() {
            terms.push((maps.col(Var::ChargerPower { charger: c, scenario: s, slot: t }), -1.0));
        }
        rows.push(Row {
            terms,
            relation: Relation::Eq,
            rhs: 0.0,
            family: ConstraintFamily::PowerBalance,
            label: format!("balance_s{s}_t{t}"),
        });
    }
}
