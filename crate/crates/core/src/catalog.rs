//! Technology unit models: PV output, wind turbine power curve with hub-height
//! scaling, battery storage parameters, charger types and the capital recovery
//! factor used to annualize investments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ChargingSession;

/// Betz limit on the fraction of kinetic wind power a rotor can extract.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;

/// Tolerance used when rounding energy/power ratios up to whole hours, so that
/// an exact division that lands a few ulps above an integer is not bumped.
const CEIL_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(
        "session '{vehicle_id}' cannot be charged on any charger type: needs {min_slots} slots, \
         window has {window_slots}"
    )]
    InfeasibleSession {
        vehicle_id: String,
        min_slots: u32,
        window_slots: u32,
    },
}

/// Asset classes that carry their own lifetime and capital recovery factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetClass {
    Pv,
    Wt,
    Bess,
    Charger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvTechnology {
    pub id: String,
    /// Panel efficiency as a fraction.
    pub efficiency: f64,
    pub area_m2: f64,
    /// Investment cost per unit, €.
    pub invest_cost: f64,
    /// Annual maintenance per unit, €.
    pub maintenance_cost: f64,
    /// Overrides the class lifetime when set.
    pub lifetime_years: Option<u32>,
    pub max_units: u32,
}

impl PvTechnology {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(config_err(&self.id, "efficiency must be in (0, 1]"));
        }
        if !(self.area_m2 > 0.0 && self.area_m2.is_finite()) {
            return Err(config_err(&self.id, "area_m2 must be positive"));
        }
        check_costs(&self.id, self.invest_cost, self.maintenance_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WtTechnology {
    pub id: String,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_power_kw: f64,
    pub swept_area_m2: f64,
    /// kg/m³, held constant.
    pub air_density: f64,
    pub hub_height_m: f64,
    pub measurement_height_m: f64,
    pub shear_exponent: f64,
    pub invest_cost: f64,
    pub maintenance_cost: f64,
    pub lifetime_years: Option<u32>,
    pub max_units: u32,
}

impl WtTechnology {
    /// Power coefficient that makes the cubic law hit rated power exactly at
    /// the rated speed.
    pub fn efficiency_coefficient(&self) -> f64 {
        let rated_watts = self.rated_power_kw * 1000.0;
        rated_watts / (0.5 * self.air_density * self.swept_area_m2 * self.rated_speed.powi(3))
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        if !(self.cut_in > 0.0 && self.cut_in < self.rated_speed && self.rated_speed <= self.cut_out)
        {
            return Err(config_err(&self.id, "wind speeds must satisfy 0 < cut_in < rated_speed <= cut_out"));
        }
        if !(self.rated_power_kw > 0.0) {
            return Err(config_err(&self.id, "rated_power_kw must be positive"));
        }
        if !(self.swept_area_m2 > 0.0 && self.air_density > 0.0) {
            return Err(config_err(&self.id, "swept_area_m2 and air_density must be positive"));
        }
        if !(self.shear_exponent > 0.0) {
            return Err(config_err(&self.id, "shear_exponent must be positive"));
        }
        if !(self.measurement_height_m > 0.0 && self.hub_height_m > 0.0) {
            return Err(config_err(&self.id, "heights must be positive"));
        }
        let cw = self.efficiency_coefficient();
        if !(cw > 0.0 && cw <= 1.0) {
            return Err(config_err(
                &self.id,
                &format!("derived power coefficient {cw:.4} outside (0, 1]"),
            ));
        }
        if cw > BETZ_LIMIT {
            log::warn!(
                "wind turbine '{}': power coefficient {:.4} exceeds the Betz limit",
                self.id,
                cw
            );
        }
        check_costs(&self.id, self.invest_cost, self.maintenance_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessTechnology {
    pub id: String,
    pub unit_size_kwh: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    /// Fraction of unit capacity lost per hour.
    pub self_discharge_per_h: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    pub soc_init_frac: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub max_units: u32,
    pub invest_cost: f64,
    pub maintenance_cost: f64,
    /// € per kW of charge or discharge power per slot.
    pub degradation_cost_per_kw: f64,
    pub lifetime_years: Option<u32>,
}

impl BessTechnology {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if !(self.unit_size_kwh > 0.0) {
            return Err(config_err(&self.id, "unit_size_kwh must be positive"));
        }
        let fr = [self.soc_min_frac, self.soc_init_frac, self.soc_max_frac];
        if !(0.0 <= fr[0] && fr[0] <= fr[1] && fr[1] <= fr[2] && fr[2] <= 1.0) {
            return Err(config_err(
                &self.id,
                "SOC fractions must satisfy 0 <= min <= init <= max <= 1",
            ));
        }
        for (name, eff) in [("charge_eff", self.charge_eff), ("discharge_eff", self.discharge_eff)] {
            if !(eff > 0.0 && eff <= 1.0) {
                return Err(config_err(&self.id, &format!("{name} must be in (0, 1]")));
            }
        }
        if !(self.self_discharge_per_h >= 0.0) {
            return Err(config_err(&self.id, "self_discharge_per_h must be >= 0"));
        }
        if self.max_units < 1 {
            return Err(config_err(&self.id, "max_units must be >= 1"));
        }
        if !(self.max_charge_kw >= 0.0 && self.max_discharge_kw >= 0.0) {
            return Err(config_err(&self.id, "power limits must be >= 0"));
        }
        if !(self.degradation_cost_per_kw >= 0.0) {
            return Err(config_err(&self.id, "degradation_cost_per_kw must be >= 0"));
        }
        check_costs(&self.id, self.invest_cost, self.maintenance_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerType {
    pub id: String,
    pub max_power_kw: f64,
    pub invest_cost: f64,
    pub maintenance_cost: f64,
    /// Number of identical candidates of this type offered to the optimizer.
    pub candidate_count: u32,
    pub lifetime_years: Option<u32>,
}

impl ChargerType {
    pub fn validate(&self) -> Result<(), CatalogError> {
        if !(self.max_power_kw > 0.0) {
            return Err(config_err(&self.id, "max_power_kw must be positive"));
        }
        if self.candidate_count < 1 {
            return Err(config_err(&self.id, "candidate_count must be >= 1"));
        }
        check_costs(&self.id, self.invest_cost, self.maintenance_cost)
    }
}

/// One concrete candidate charger, the `rank`-th (0-based) of its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateCharger {
    pub type_index: usize,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TechnologyCatalog {
    pub pv: Vec<PvTechnology>,
    pub wt: Vec<WtTechnology>,
    pub bess: Vec<BessTechnology>,
    pub chargers: Vec<ChargerType>,
}

impl TechnologyCatalog {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut ids = std::collections::HashSet::new();
        let all_ids = self
            .pv
            .iter()
            .map(|t| &t.id)
            .chain(self.wt.iter().map(|t| &t.id))
            .chain(self.bess.iter().map(|t| &t.id))
            .chain(self.chargers.iter().map(|t| &t.id));
        for id in all_ids {
            if id.is_empty() {
                return Err(CatalogError::Config("technology id must not be empty".into()));
            }
            if !ids.insert(id.as_str()) {
                return Err(CatalogError::Config(format!("duplicate technology id '{id}'")));
            }
        }
        self.pv.iter().try_for_each(PvTechnology::validate)?;
        self.wt.iter().try_for_each(WtTechnology::validate)?;
        self.bess.iter().try_for_each(BessTechnology::validate)?;
        self.chargers.iter().try_for_each(ChargerType::validate)
    }

    /// Expands charger types into the ordered candidate set: all candidates of
    /// the first type, then the second, and so on.
    pub fn candidates(&self) -> Vec<CandidateCharger> {
        self.chargers
            .iter()
            .enumerate()
            .flat_map(|(type_index, ty)| {
                (0..ty.candidate_count).map(move |rank| CandidateCharger { type_index, rank })
            })
            .collect()
    }

    pub fn candidate_label(&self, c: CandidateCharger) -> String {
        format!("{}#{}", self.chargers[c.type_index].id, c.rank + 1)
    }
}

/// Output of one PV unit in kW for irradiance in kW/m².
pub fn pv_unit_power(tech: &PvTechnology, irradiance: f64) -> f64 {
    tech.efficiency * tech.area_m2 * irradiance
}

/// Power-law extrapolation of a measured wind speed to hub height.
pub fn scale_wind_speed(tech: &WtTechnology, measured: f64) -> Result<f64, CatalogError> {
    if !(tech.measurement_height_m > 0.0) {
        return Err(config_err(&tech.id, "measurement_height_m must be positive"));
    }
    Ok(measured * (tech.hub_height_m / tech.measurement_height_m).powf(tech.shear_exponent))
}

/// Output of one turbine in kW at the given hub-height wind speed.
///
/// Cubic below rated speed, flat at rated power up to and including cut-out,
/// zero elsewhere.
pub fn wt_unit_power(tech: &WtTechnology, hub_speed: f64) -> f64 {
    if hub_speed < tech.cut_in || hub_speed > tech.cut_out {
        0.0
    } else if hub_speed < tech.rated_speed {
        let cw = tech.efficiency_coefficient();
        0.5 * cw * tech.air_density * tech.swept_area_m2 * hub_speed.powi(3) / 1000.0
    } else {
        tech.rated_power_kw
    }
}

/// Annual payment per unit of principal for discount rate `rate` over
/// `lifetime` years.
pub fn capital_recovery_factor(rate: f64, lifetime: u32) -> Result<f64, CatalogError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(CatalogError::Config(format!(
            "discount rate must be positive, got {rate}"
        )));
    }
    if lifetime < 1 {
        return Err(CatalogError::Config("lifetime must be at least one year".into()));
    }
    let growth = (1.0 + rate).powi(lifetime as i32);
    Ok(rate * growth / (growth - 1.0))
}

/// Constant charging power for a session on a charger type.
pub fn effective_rate(session: &ChargingSession, charger: &ChargerType) -> f64 {
    session.max_vehicle_rate_kw.min(charger.max_power_kw)
}

/// Number of slots a session occupies on a charger type when charged at the
/// effective rate: whole hours first, then converted to slots of `delta_t`
/// hours and rounded up again when the conversion is fractional.
pub fn charging_duration_slots(session: &ChargingSession, charger: &ChargerType, delta_t: f64) -> u32 {
    duration_slots(session.energy_kwh, effective_rate(session, charger), delta_t)
}

pub(crate) fn duration_slots(energy_kwh: f64, rate_kw: f64, delta_t: f64) -> u32 {
    let hours = (energy_kwh / rate_kw - CEIL_EPS).ceil().max(0.0);
    let slots = hours / delta_t;
    let rounded = (slots - CEIL_EPS).ceil();
    if (rounded - slots).abs() > CEIL_EPS {
        log::warn!(
            "charging duration of {hours} h is not a whole number of {delta_t} h slots; rounding up to {rounded}"
        );
    }
    rounded.max(1.0) as u32
}

/// Slots available between arrival and departure, both inclusive.
pub fn window_slots(session: &ChargingSession) -> u32 {
    session.departure_slot - session.arrival_slot + 1
}

/// Fails with `InfeasibleSession` when the session does not fit its parking
/// window on any charger type.
pub fn check_session_feasible(
    session: &ChargingSession,
    chargers: &[ChargerType],
    delta_t: f64,
) -> Result<(), CatalogError> {
    let window = window_slots(session);
    let min_slots = chargers
        .iter()
        .map(|c| charging_duration_slots(session, c, delta_t))
        .min();
    match min_slots {
        Some(m) if m <= window => Ok(()),
        other => Err(CatalogError::InfeasibleSession {
            vehicle_id: session.vehicle_id.clone(),
            min_slots: other.unwrap_or(u32::MAX),
            window_slots: window,
        }),
    }
}

fn config_err(id: &str, msg: &str) -> CatalogError {
    CatalogError::Config(format!("technology '{id}': {msg}"))
}

fn check_costs(id: &str, invest: f64, maintenance: f64) -> Result<(), CatalogError> {
    if !(invest >= 0.0 && invest.is_finite() && maintenance >= 0.0 && maintenance.is_finite()) {
        return Err(config_err(id, "costs must be finite and non-negative"));
    }
    Ok(())
}

/// Parameter set of the case-study hub: 550 W PV unit, 500 kW turbine,
/// 580 kWh battery unit and two charger types of 180 and 360 kW with six
/// candidates each. Maintenance is 1% of investment per year.
pub fn case_study_catalog() -> TechnologyCatalog {
    TechnologyCatalog {
        pv: vec![PvTechnology {
            id: "pv-550w".into(),
            efficiency: 0.20,
            area_m2: 2.58,
            invest_cost: 495.0,
            maintenance_cost: 4.95,
            lifetime_years: None,
            max_units: 10_000,
        }],
        wt: vec![WtTechnology {
            id: "wt-500kw".into(),
            cut_in: 3.0,
            rated_speed: 13.0,
            cut_out: 20.0,
            rated_power_kw: 500.0,
            swept_area_m2: 1734.0,
            air_density: 1.225,
            hub_height_m: 60.0,
            measurement_height_m: 10.0,
            shear_exponent: 0.143,
            invest_cost: 750_000.0,
            maintenance_cost: 7_500.0,
            lifetime_years: None,
            max_units: 10,
        }],
        bess: vec![BessTechnology {
            id: "bess-580kwh".into(),
            unit_size_kwh: 580.0,
            charge_eff: 0.95,
            discharge_eff: 0.95,
            self_discharge_per_h: 1e-4,
            soc_min_frac: 0.1,
            soc_max_frac: 0.95,
            soc_init_frac: 0.5,
            max_charge_kw: 300.0,
            max_discharge_kw: 300.0,
            max_units: 100,
            invest_cost: 32_000.0,
            maintenance_cost: 320.0,
            degradation_cost_per_kw: 0.03,
            lifetime_years: None,
        }],
        chargers: vec![
            ChargerType {
                id: "dc-180kw".into(),
                max_power_kw: 180.0,
                invest_cost: 90_000.0,
                maintenance_cost: 900.0,
                candidate_count: 6,
                lifetime_years: None,
            },
            ChargerType {
                id: "dc-360kw".into(),
                max_power_kw: 360.0,
                invest_cost: 180_000.0,
                maintenance_cost: 1_800.0,
                candidate_count: 6,
                lifetime_years: None,
            },
        ],
    }
}
