//! Annualized total cost of ownership.

use crate::catalog::{AssetClass, CatalogError};

use super::{BuildContext, MilpProblem, Var};

/// Annualized investment plus maintenance per installed unit, weighted
/// trading cost, and weighted storage degradation on charge and discharge
/// power.
pub fn build_objective(problem: &mut MilpProblem, ctx: &BuildContext) -> Result<(), CatalogError> {
    let econ = &ctx.inputs.economics;
    let cat = &ctx.inputs.catalog;
    let mut costs = vec![0.0; problem.columns.len()];
    for (j, col) in problem.columns.iter().enumerate() {
        costs[j] = match col.var {
            Var::PvUnits { tech } => {
                let t = &cat.pv[tech];
                econ.kappa(AssetClass::Pv, t.lifetime_years)? * t.invest_cost + t.maintenance_cost
            }
            Var::WtUnits { tech } => {
                let t = &cat.wt[tech];
                econ.kappa(AssetClass::Wt, t.lifetime_years)? * t.invest_cost + t.maintenance_cost
            }
            Var::BessUnits { tech } => {
                let t = &cat.bess[tech];
                econ.kappa(AssetClass::Bess, t.lifetime_years)? * t.invest_cost + t.maintenance_cost
            }
            Var::ChargerInstalled { charger } => {
                let t = &cat.chargers[ctx.maps.candidates[charger].type_index];
                econ.kappa(AssetClass::Charger, t.lifetime_years)? * t.invest_cost + t.maintenance_cost
            }
            Var::TradeCost { scenario, .. } => weight(ctx, scenario),
            Var::Charge { tech, scenario, .. } | Var::Discharge { tech, scenario, .. } => {
                weight(ctx, scenario) * cat.bess[tech].degradation_cost_per_kw
            }
            _ => 0.0,
        };
    }
    problem.objective = costs.into_iter().enumerate().filter(|&(_, c)| c != 0.0).collect();
    Ok(())
}

fn weight(ctx: &BuildContext, scenario: usize) -> f64 {
    ctx.inputs.scenarios.scenarios()[scenario].occurrence_days as f64
}
