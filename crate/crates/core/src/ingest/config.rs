//! The structured config document: technologies, economics, slot length and
//! one entry per representative day with its series and session sources.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    parse_series, parse_sessions, read_text, AssetLifetimes, EconomicParams, GridContract, HubInputs,
    IngestError, Scenario, ScenarioSet,
};
use crate::catalog::{BessTechnology, ChargerType, PvTechnology, TechnologyCatalog, WtTechnology};

pub const DEFAULT_MAX_PV_UNITS: u32 = 10_000;
pub const DEFAULT_MAX_WT_UNITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubConfig {
    pub economics: EconomicsSection,
    pub horizon: HorizonSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pv: Vec<PvEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wt: Vec<WtEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bess: Vec<BessEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charger: Vec<ChargerEntry>,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsSection {
    pub discount_rate: f64,
    /// Annual maintenance as a fraction of investment, used for technologies
    /// that do not state `maintenance_cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_days: Option<u32>,
    pub lifetimes: AssetLifetimes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    pub delta_t_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvEntry {
    pub id: String,
    pub efficiency: f64,
    pub area_m2: f64,
    pub invest_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_years: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_units: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtEntry {
    pub id: String,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_power_kw: f64,
    pub swept_area_m2: f64,
    #[serde(default = "default_air_density")]
    pub air_density: f64,
    pub hub_height_m: f64,
    pub measurement_height_m: f64,
    #[serde(default = "default_shear")]
    pub shear_exponent: f64,
    pub invest_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_years: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_units: Option<u32>,
}

fn default_air_density() -> f64 {
    1.225
}

fn default_shear() -> f64 {
    0.143
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BessEntry {
    pub id: String,
    pub unit_size_kwh: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    pub self_discharge_per_h: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    pub soc_init_frac: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub max_units: u32,
    pub invest_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_cost: Option<f64>,
    pub degradation_cost_per_kw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_years: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargerEntry {
    pub id: String,
    pub max_power_kw: f64,
    pub invest_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance_cost: Option<f64>,
    pub candidate_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_years: Option<u32>,
}

/// Where a per-slot series comes from: a constant, inline values, or a
/// `slot,value` file relative to the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesSource {
    Constant(f64),
    Values(Vec<f64>),
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub id: String,
    pub occurrence_days: u32,
    pub irradiance: SeriesSource,
    pub wind_speed: SeriesSource,
    pub withdrawal_limit: SeriesSource,
    pub injection_limit: SeriesSource,
    pub buy_price: SeriesSource,
    pub sell_price: SeriesSource,
    /// Session log file; a day without one has no charging demand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<String>,
}

/// Parses the config document without touching referenced files.
pub fn parse_config(text: &str) -> Result<HubConfig, IngestError> {
    toml::from_str(text).map_err(|e| {
        let location = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("config line {line}")
            }
            None => "config".to_string(),
        };
        IngestError::schema(location, e.message().to_string())
    })
}

impl HubConfig {
    pub fn slots(&self) -> Result<usize, IngestError> {
        let dt = self.horizon.delta_t_h;
        let slots = 24.0 / dt;
        if !(dt > 0.0) || !slots.is_finite() || (slots - slots.round()).abs() > 1e-9 || slots.round() < 1.0 {
            return Err(IngestError::invariant(
                "horizon.delta_t_h",
                format!("{dt} h does not divide a 24 h day"),
            ));
        }
        Ok(slots.round() as usize)
    }

    pub fn economics(&self) -> EconomicParams {
        EconomicParams {
            discount_rate: self.economics.discount_rate,
            lifetimes: self.economics.lifetimes,
            year_days: self.economics.year_days.unwrap_or(365),
        }
    }

    pub fn catalog(&self) -> Result<TechnologyCatalog, IngestError> {
        let maint = |section: &str, id: &str, explicit: Option<f64>, invest: f64| {
            explicit
                .or(self.economics.maintenance_fraction.map(|f| f * invest))
                .ok_or_else(|| {
                    IngestError::schema(
                        format!("{section} '{id}'"),
                        "maintenance_cost missing and no economics.maintenance_fraction",
                    )
                })
        };
        let pv = self
            .pv
            .iter()
            .map(|e| {
                Ok(PvTechnology {
                    id: e.id.clone(),
                    efficiency: e.efficiency,
                    area_m2: e.area_m2,
                    invest_cost: e.invest_cost,
                    maintenance_cost: maint("pv", &e.id, e.maintenance_cost, e.invest_cost)?,
                    lifetime_years: e.lifetime_years,
                    max_units: e.max_units.unwrap_or(DEFAULT_MAX_PV_UNITS),
                })
            })
            .collect::<Result<_, IngestError>>()?;
        let wt = self
            .wt
            .iter()
            .map(|e| {
                Ok(WtTechnology {
                    id: e.id.clone(),
                    cut_in: e.cut_in,
                    rated_speed: e.rated_speed,
                    cut_out: e.cut_out,
                    rated_power_kw: e.rated_power_kw,
                    swept_area_m2: e.swept_area_m2,
                    air_density: e.air_density,
                    hub_height_m: e.hub_height_m,
                    measurement_height_m: e.measurement_height_m,
                    shear_exponent: e.shear_exponent,
                    invest_cost: e.invest_cost,
                    maintenance_cost: maint("wt", &e.id, e.maintenance_cost, e.invest_cost)?,
                    lifetime_years: e.lifetime_years,
                    max_units: e.max_units.unwrap_or(DEFAULT_MAX_WT_UNITS),
                })
            })
            .collect::<Result<_, IngestError>>()?;
        let bess = self
            .bess
            .iter()
            .map(|e| {
                Ok(BessTechnology {
                    id: e.id.clone(),
                    unit_size_kwh: e.unit_size_kwh,
                    charge_eff: e.charge_eff,
                    discharge_eff: e.discharge_eff,
                    self_discharge_per_h: e.self_discharge_per_h,
                    soc_min_frac: e.soc_min_frac,
                    soc_max_frac: e.soc_max_frac,
                    soc_init_frac: e.soc_init_frac,
                    max_charge_kw: e.max_charge_kw,
                    max_discharge_kw: e.max_discharge_kw,
                    max_units: e.max_units,
                    invest_cost: e.invest_cost,
                    maintenance_cost: maint("bess", &e.id, e.maintenance_cost, e.invest_cost)?,
                    degradation_cost_per_kw: e.degradation_cost_per_kw,
                    lifetime_years: e.lifetime_years,
                })
            })
            .collect::<Result<_, IngestError>>()?;
        let chargers = self
            .charger
            .iter()
            .map(|e| {
                Ok(ChargerType {
                    id: e.id.clone(),
                    max_power_kw: e.max_power_kw,
                    invest_cost: e.invest_cost,
                    maintenance_cost: maint("charger", &e.id, e.maintenance_cost, e.invest_cost)?,
                    candidate_count: e.candidate_count,
                    lifetime_years: e.lifetime_years,
                })
            })
            .collect::<Result<_, IngestError>>()?;
        let catalog = TechnologyCatalog { pv, wt, bess, chargers };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Loads referenced files relative to `base` and validates everything.
    pub fn resolve(&self, base: &Path) -> Result<HubInputs, IngestError> {
        let slots = self.slots()?;
        let economics = self.economics();
        economics.validate()?;
        let catalog = self.catalog()?;
        let scenarios = self
            .scenario
            .iter()
            .map(|e| e.load(base, slots, self.horizon.delta_t_h))
            .collect::<Result<Vec<_>, _>>()?;
        let set = ScenarioSet::new(scenarios, economics.year_days)?;
        HubInputs::new(catalog, set, economics)
    }
}

impl ScenarioEntry {
    fn load(&self, base: &Path, slots: usize, delta_t: f64) -> Result<Scenario, IngestError> {
        let series = |name: &str, src: &SeriesSource| -> Result<Vec<f64>, IngestError> {
            let location = format!("scenario '{}' {name}", self.id);
            let values = match src {
                SeriesSource::Constant(v) => vec![*v; slots],
                SeriesSource::Values(v) => v.clone(),
                SeriesSource::File(f) => {
                    let path = base.join(f);
                    parse_series(&read_text(&path)?, &path.display().to_string())?
                }
            };
            if values.len() != slots {
                return Err(IngestError::schema(
                    location,
                    format!("expected {slots} values, got {}", values.len()),
                ));
            }
            Ok(values)
        };
        let sessions = match &self.sessions {
            Some(f) => {
                let path = base.join(f);
                parse_sessions(&read_text(&path)?, &path.display().to_string())?
            }
            None => Vec::new(),
        };
        Ok(Scenario {
            id: self.id.clone(),
            occurrence_days: self.occurrence_days,
            delta_t,
            irradiance: series("irradiance", &self.irradiance)?,
            measured_wind_speed: series("wind_speed", &self.wind_speed)?,
            grid: GridContract {
                withdrawal_limit: series("withdrawal_limit", &self.withdrawal_limit)?,
                injection_limit: series("injection_limit", &self.injection_limit)?,
                buy_price: series("buy_price", &self.buy_price)?,
                sell_price: series("sell_price", &self.sell_price)?,
            },
            sessions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[economics]
discount_rate = 0.0275
maintenance_fraction = 0.01
[economics.lifetimes]
pv = 20
wt = 20
bess = 15
charger = 10

[horizon]
delta_t_h = 1

[[charger]]
id = "dc-180"
max_power_kw = 180
invest_cost = 90000
candidate_count = 2

[[scenario]]
id = "all-year"
occurrence_days = 365
irradiance = 0.0
wind_speed = 4
withdrawal_limit = 600
injection_limit = 600
buy_price = 0.3
sell_price = 0.1
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = parse_config(MINIMAL).unwrap();
        let inputs = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(inputs.scenarios.slots(), 24);
        assert_eq!(inputs.scenarios.total_days(), 365);
        assert_eq!(inputs.catalog.chargers[0].maintenance_cost, 900.0);
        assert!(inputs.scenarios.scenarios()[0].sessions.is_empty());
    }

    #[test]
    fn unknown_field_is_schema_violation() {
        let text = MINIMAL.replace("candidate_count = 2", "candidate_count = 2\ncolour = \"red\"");
        match parse_config(&text).unwrap_err() {
            IngestError::Schema { location, message } => {
                assert!(location.starts_with("config line"), "{location}");
                assert!(message.contains("colour"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn missing_maintenance_without_fraction() {
        let text = MINIMAL.replace("maintenance_fraction = 0.01\n", "");
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.resolve(Path::new(".")), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn bad_slot_length() {
        let text = MINIMAL.replace("delta_t_h = 1", "delta_t_h = 0.7");
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.resolve(Path::new(".")), Err(IngestError::Invariant { .. })));
    }

    #[test]
    fn missing_series_file() {
        let text = MINIMAL.replace("irradiance = 0.0", "irradiance = \"nope.csv\"");
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.resolve(Path::new("/nonexistent")), Err(IngestError::MissingFile { .. })));
    }

    #[test]
    fn inline_series_length_checked() {
        let text = MINIMAL.replace("irradiance = 0.0", "irradiance = [0.0, 0.1]");
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.resolve(Path::new(".")), Err(IngestError::Schema { .. })));
    }
}
