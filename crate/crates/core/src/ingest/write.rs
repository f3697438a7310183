//! Writes validated inputs back to disk in the loader's layout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{
    BessEntry, ChargerEntry, EconomicsSection, HorizonSection, HubConfig, PvEntry, ScenarioEntry,
    SeriesSource, WtEntry,
};
use super::series::{SERIES_HEADER, SESSION_HEADER};
use super::{HubInputs, IngestError};

/// Writes `config.toml` plus one file per series and session log into `dir`
/// and returns the config path. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_inputs(inputs: &HubInputs, dir: &Path) -> Result<PathBuf, IngestError> {
    let io = |path: &Path, e: std::io::Error| IngestError::Io { path: path.to_path_buf(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let cat = &inputs.catalog;
    let mut scenario = Vec::new();
    for (i, s) in inputs.scenarios.scenarios().iter().enumerate() {
        let file = |name: &str, values: &[f64]| -> Result<SeriesSource, IngestError> {
            let fname = format!("s{i:03}_{name}.csv");
            let mut text = SERIES_HEADER.join(",");
            text.push('\n');
            for (t, v) in values.iter().enumerate() {
                let _ = writeln!(text, "{},{}", t + 1, v);
            }
            let path = dir.join(&fname);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
            Ok(SeriesSource::File(fname))
        };
        let entry = ScenarioEntry {
            id: s.id.clone(),
            occurrence_days: s.occurrence_days,
            irradiance: file("irradiance", &s.irradiance)?,
            wind_speed: file("wind_speed", &s.measured_wind_speed)?,
            withdrawal_limit: file("withdrawal_limit", &s.grid.withdrawal_limit)?,
            injection_limit: file("injection_limit", &s.grid.injection_limit)?,
            buy_price: file("buy_price", &s.grid.buy_price)?,
            sell_price: file("sell_price", &s.grid.sell_price)?,
            sessions: None,
        };
        let sessions = if s.sessions.is_empty() {
            None
        } else {
            let fname = format!("s{i:03}_sessions.csv");
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| IngestError::Io { path: dir.join(&fname), message: e.to_string() };
            w.write_record(SESSION_HEADER).map_err(csv_err)?;
            for v in &s.sessions {
                w.write_record([
                    v.vehicle_id.clone(),
                    v.arrival_slot.to_string(),
                    v.departure_slot.to_string(),
                    v.energy_kwh.to_string(),
                    v.max_vehicle_rate_kw.to_string(),
                ])
                .map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| IngestError::Io {
                path: dir.join(&fname),
                message: e.to_string(),
            })?;
            let path = dir.join(&fname);
            std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            Some(fname)
        };
        scenario.push(ScenarioEntry { sessions, ..entry });
    }
    let config = HubConfig {
        economics: EconomicsSection {
            discount_rate: inputs.economics.discount_rate,
            maintenance_fraction: None,
            year_days: Some(inputs.economics.year_days),
            lifetimes: inputs.economics.lifetimes,
        },
        horizon: HorizonSection { delta_t_h: inputs.scenarios.delta_t() },
        pv: cat
            .pv
            .iter()
            .map(|t| PvEntry {
                id: t.id.clone(),
                efficiency: t.efficiency,
                area_m2: t.area_m2,
                invest_cost: t.invest_cost,
                maintenance_cost: Some(t.maintenance_cost),
                lifetime_years: t.lifetime_years,
                max_units: Some(t.max_units),
            })
            .collect(),
        wt: cat
            .wt
            .iter()
            .map(|t| WtEntry {
                id: t.id.clone(),
                cut_in: t.cut_in,
                rated_speed: t.rated_speed,
                cut_out: t.cut_out,
                rated_power_kw: t.rated_power_kw,
                swept_area_m2: t.swept_area_m2,
                air_density: t.air_density,
                hub_height_m: t.hub_height_m,
                measurement_height_m: t.measurement_height_m,
                shear_exponent: t.shear_exponent,
                invest_cost: t.invest_cost,
                maintenance_cost: Some(t.maintenance_cost),
                lifetime_years: t.lifetime_years,
                max_units: Some(t.max_units),
            })
            .collect(),
        bess: cat
            .bess
            .iter()
            .map(|t| BessEntry {
                id: t.id.clone(),
                unit_size_kwh: t.unit_size_kwh,
                charge_eff: t.charge_eff,
                discharge_eff: t.discharge_eff,
                self_discharge_per_h: t.self_discharge_per_h,
                soc_min_frac: t.soc_min_frac,
                soc_max_frac: t.soc_max_frac,
                soc_init_frac: t.soc_init_frac,
                max_charge_kw: t.max_charge_kw,
                max_discharge_kw: t.max_discharge_kw,
                max_units: t.max_units,
                invest_cost: t.invest_cost,
                maintenance_cost: Some(t.maintenance_cost),
                degradation_cost_per_kw: t.degradation_cost_per_kw,
                lifetime_years: t.lifetime_years,
            })
            .collect(),
        charger: cat
            .chargers
            .iter()
            .map(|t| ChargerEntry {
                id: t.id.clone(),
                max_power_kw: t.max_power_kw,
                invest_cost: t.invest_cost,
                maintenance_cost: Some(t.maintenance_cost),
                candidate_count: t.candidate_count,
                lifetime_years: t.lifetime_years,
            })
            .collect(),
        scenario,
    };
    let text = toml::to_string(&config).map_err(|e| IngestError::Io {
        path: dir.join("config.toml"),
        message: e.to_string(),
    })?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(path)
}
