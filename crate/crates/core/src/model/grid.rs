//! Grid trading cost. Exchange limits are column bounds; the cost variable is
//! bounded below by both the buy-price and the sell-price line, which is
//! exact at the optimum because buying is dearer than selling and the cost
//! carries a positive weight.

use super::{BuildContext, ConstraintFamily, Relation, Row, Var};

pub fn add_grid_constraints(ctx: &BuildContext, s: usize, rows: &mut Vec<Row>) {
    let scen = &ctx.inputs.scenarios.scenarios()[s];
    let dt = scen.delta_t;
    for t in 0..ctx.maps.slots {
        let cost = ctx.maps.col(Var::TradeCost { scenario: s, slot: t });
        let pg = ctx.maps.col(Var::Grid { scenario: s, slot: t });
        for (price, name) in [(scen.grid.buy_price[t], "buy"), (scen.grid.sell_price[t], "sell")] {
            rows.push(Row {
                terms: vec![(cost, 1.0), (pg, -dt * price)],
                relation: Relation::Ge,
                rhs: 0.0,
                family: ConstraintFamily::PriceRelaxation,
                label: format!("price_{name}_s{s}_t{t}"),
            });
        }
    }
}
