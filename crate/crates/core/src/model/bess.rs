//! Storage energy recursion, state-of-charge window, power caps and
//! charge/discharge exclusivity.

use super::{BuildContext, ConstraintFamily, Relation, Row, Var};

pub fn add_bess_constraints(ctx: &BuildContext, s: usize, rows: &mut Vec<Row>) {
    let maps = ctx.maps;
    let slots = maps.slots;
    let dt = ctx.inputs.scenarios.delta_t();
    for (b, tech) in ctx.inputs.catalog.bess.iter().enumerate() {
        let n = maps.col(Var::BessUnits { tech: b });
        let size = tech.unit_size_kwh;
        let soc = |k: usize| maps.col(Var::Soc { tech: b, scenario: s, point: k });
        let ch = |t: usize| maps.col(Var::Charge { tech: b, scenario: s, slot: t });
        let dis = |t: usize| maps.col(Var::Discharge { tech: b, scenario: s, slot: t });
        let mut push = |terms: Vec<(usize, f64)>, relation, rhs, family, label: String| {
            rows.push(Row { terms, relation, rhs, family, label })
        };

        push(
            vec![(soc(0), 1.0), (n, -size * tech.soc_init_frac)],
            Relation::Eq,
            0.0,
            ConstraintFamily::InitialSoc,
            format!("soc_init_b{b}_s{s}"),
        );
        if ctx.options.terminal_soc {
            push(
                vec![(soc(slots), 1.0), (n, -size * tech.soc_init_frac)],
                Relation::Ge,
                0.0,
                ConstraintFamily::TerminalSoc,
                format!("soc_end_b{b}_s{s}"),
            );
        }
        for t in 0..slots {
            push(
                vec![
                    (soc(t + 1), 1.0),
                    (soc(t), -1.0),
                    (ch(t), -tech.charge_eff * dt),
                    (dis(t), dt / tech.discharge_eff),
                    (n, tech.self_discharge_per_h * size * dt),
                ],
                Relation::Eq,
                0.0,
                ConstraintFamily::SocRecursion,
                format!("soc_b{b}_s{s}_t{t}"),
            );
        }
        for k in 0..=slots {
            push(
                vec![(soc(k), 1.0), (n, -size * tech.soc_max_frac)],
                Relation::Le,
                0.0,
                ConstraintFamily::SocBounds,
                format!("soc_max_b{b}_s{s}_k{k}"),
            );
            push(
                vec![(soc(k), 1.0), (n, -size * tech.soc_min_frac)],
                Relation::Ge,
                0.0,
                ConstraintFamily::SocBounds,
                format!("soc_min_b{b}_s{s}_k{k}"),
            );
        }
        let big_ch = tech.max_units as f64 * tech.max_charge_kw;
        let big_dis = tech.max_units as f64 * tech.max_discharge_kw;
        let group = ctx.mode_group(b);
        for t in 0..slots {
            push(
                vec![(ch(t), 1.0), (n, -tech.max_charge_kw)],
                Relation::Le,
                0.0,
                ConstraintFamily::BessPowerCap,
                format!("cap_ch_b{b}_s{s}_t{t}"),
            );
            push(
                vec![(dis(t), 1.0), (n, -tech.max_discharge_kw)],
                Relation::Le,
                0.0,
                ConstraintFamily::BessPowerCap,
                format!("cap_dis_b{b}_s{s}_t{t}"),
            );
            let delta = maps.col(Var::Mode { scenario: s, slot: t, group });
            push(
                vec![(ch(t), 1.0), (delta, -big_ch)],
                Relation::Le,
                0.0,
                ConstraintFamily::BessExclusivity,
                format!("mode_ch_b{b}_s{s}_t{t}"),
            );
            push(
                vec![(dis(t), 1.0), (delta, big_dis)],
                Relation::Le,
                big_dis,
                ConstraintFamily::BessExclusivity,
                format!("mode_dis_b{b}_s{s}_t{t}"),
            );
        }
    }
}
