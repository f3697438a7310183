//! Yearly energy flows by source and use.

use serde::{Deserialize, Serialize};

use crate::ingest::ScenarioSet;
use crate::catalog::TechnologyCatalog;

use super::HubSolution;

/// Occurrence-weighted yearly energy in kWh. Production and consumption
/// close exactly: whatever the bus receives is delivered to vehicles,
/// exported, lost in storage, or left in storage at the end of the day.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub pv_kwh: f64,
    pub wt_kwh: f64,
    pub grid_import_kwh: f64,
    pub ev_kwh: f64,
    pub grid_export_kwh: f64,
    /// Charge/discharge conversion losses.
    pub battery_conversion_loss_kwh: f64,
    pub battery_self_discharge_kwh: f64,
    /// Stored energy at the end of each day minus at its start.
    pub storage_change_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyShares {
    pub pv: f64,
    pub wt: f64,
    pub grid_import: f64,
    pub ev: f64,
    pub grid_export: f64,
    pub battery_losses: f64,
    pub storage_change: f64,
}

impl EnergyBalance {
    pub fn production(&self) -> f64 {
        self.pv_kwh + self.wt_kwh + self.grid_import_kwh
    }

    pub fn battery_losses(&self) -> f64 {
        self.battery_conversion_loss_kwh + self.battery_self_discharge_kwh
    }

    pub fn consumption(&self) -> f64 {
        self.ev_kwh + self.grid_export_kwh + self.battery_losses() + self.storage_change_kwh
    }

    /// Production shares relative to total production, consumption shares
    /// relative to total consumption; all zero for an idle hub.
    pub fn shares(&self) -> EnergyShares {
        let p = self.production();
        let c = self.consumption();
        let of = |x: f64, total: f64| if total != 0.0 { x / total } else { 0.0 };
        EnergyShares {
            pv: of(self.pv_kwh, p),
            wt: of(self.wt_kwh, p),
            grid_import: of(self.grid_import_kwh, p),
            ev: of(self.ev_kwh, c),
            grid_export: of(self.grid_export_kwh, c),
            battery_losses: of(self.battery_losses(), c),
            storage_change: of(self.storage_change_kwh, c),
        }
    }
}

pub fn compute_energy_balance(solution: &HubSolution, catalog: &TechnologyCatalog, scenarios: &ScenarioSet) -> EnergyBalance {
    let mut e = EnergyBalance::default();
    for (scen, op) in scenarios.scenarios().iter().zip(&solution.operations) {
        let w = scen.occurrence_days as f64 * scen.delta_t;
        for t in 0..op.grid_kw.len() {
            e.pv_kwh += w * op.pv_kw[t];
            e.wt_kwh += w * op.wt_kw[t];
            e.grid_import_kwh += w * op.grid_kw[t].max(0.0);
            e.grid_export_kwh += w * (-op.grid_kw[t]).max(0.0);
            e.ev_kwh += w * op.charger_kw.iter().map(|c| c[t]).sum::<f64>();
        }
        for (b, tech) in catalog.bess.iter().enumerate() {
            let n = solution.design.bess_units[b] as f64;
            let slots = op.charge_kw[b].len();
            for t in 0..slots {
                e.battery_conversion_loss_kwh += w
                    * ((1.0 - tech.charge_eff) * op.charge_kw[b][t]
                        + (1.0 / tech.discharge_eff - 1.0) * op.discharge_kw[b][t]);
            }
            e.battery_self_discharge_kwh += w * slots as f64 * tech.self_discharge_per_h * n * tech.unit_size_kwh;
            let soc = &op.soc_kwh[b];
            e.storage_change_kwh += scen.occurrence_days as f64 * (soc[slots] - soc[0]);
        }
    }
    e
}
