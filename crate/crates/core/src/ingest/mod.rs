//! Input data: economics, grid contract, charging sessions and the set of
//! representative days, plus loading and validation from disk.

mod calendar;
mod config;
mod series;
mod write;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{capital_recovery_factor, AssetClass, CatalogError, TechnologyCatalog};

pub use calendar::{build_scenarios, days_in_month_of_kind, DayKind, DemandProfile, MonthlyWeather};
pub use config::{parse_config, HubConfig};
pub use series::{parse_sessions, parse_series, SESSION_HEADER};
pub use write::write_inputs;

/// Absolute tolerance on `|T| * delta_t == 24`.
const DAY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("schema violation at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("invariant violated at {location}: {message}")]
    Invariant { location: String, message: String },
    #[error(
        "scenario '{scenario}': session '{vehicle_id}' has arrival slot {arrival} and departure \
         slot {departure}; need 1 <= arrival < departure <= {slots}"
    )]
    SessionWindow {
        scenario: String,
        vehicle_id: String,
        arrival: u32,
        departure: u32,
        slots: usize,
    },
    #[error("calendar mismatch: {0}")]
    CalendarMismatch(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

impl IngestError {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Schema { location: location.into(), message: message.into() }
    }

    pub(crate) fn invariant(location: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Invariant { location: location.into(), message: message.into() }
    }
}

/// Lifetimes in years per asset class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetLifetimes {
    pub pv: u32,
    pub wt: u32,
    pub bess: u32,
    pub charger: u32,
}

impl AssetLifetimes {
    pub fn get(&self, class: AssetClass) -> u32 {
        match class {
            AssetClass::Pv => self.pv,
            AssetClass::Wt => self.wt,
            AssetClass::Bess => self.bess,
            AssetClass::Charger => self.charger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    /// Discount rate per year as a fraction.
    pub discount_rate: f64,
    pub lifetimes: AssetLifetimes,
    /// Days in the planning year, 365 or 366.
    pub year_days: u32,
}

impl EconomicParams {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.discount_rate > 0.0 && self.discount_rate.is_finite()) {
            return Err(IngestError::invariant("economics.discount_rate", "must be positive"));
        }
        for class in [AssetClass::Pv, AssetClass::Wt, AssetClass::Bess, AssetClass::Charger] {
            if self.lifetimes.get(class) < 1 {
                return Err(IngestError::invariant(
                    format!("economics.lifetimes.{}", class_key(class)),
                    "lifetime must be at least one year",
                ));
            }
        }
        if !(self.year_days == 365 || self.year_days == 366) {
            return Err(IngestError::invariant("economics.year_days", "must be 365 or 366"));
        }
        Ok(())
    }

    /// Capital recovery factor for an asset class, using `lifetime_override`
    /// instead of the class lifetime when given.
    pub fn kappa(&self, class: AssetClass, lifetime_override: Option<u32>) -> Result<f64, CatalogError> {
        capital_recovery_factor(
            self.discount_rate,
            lifetime_override.unwrap_or_else(|| self.lifetimes.get(class)),
        )
    }
}

pub(crate) fn class_key(class: AssetClass) -> &'static str {
    match class {
        AssetClass::Pv => "pv",
        AssetClass::Wt => "wt",
        AssetClass::Bess => "bess",
        AssetClass::Charger => "charger",
    }
}

/// Per-slot grid connection limits (kW) and trading prices (€/kWh).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridContract {
    pub withdrawal_limit: Vec<f64>,
    pub injection_limit: Vec<f64>,
    pub buy_price: Vec<f64>,
    pub sell_price: Vec<f64>,
}

impl GridContract {
    /// Same limits and prices at every slot.
    pub fn flat(slots: usize, withdrawal: f64, injection: f64, buy: f64, sell: f64) -> Self {
        GridContract {
            withdrawal_limit: vec![withdrawal; slots],
            injection_limit: vec![injection; slots],
            buy_price: vec![buy; slots],
            sell_price: vec![sell; slots],
        }
    }

    pub fn validate(&self, slots: usize, scenario: &str) -> Result<(), IngestError> {
        let named = [
            ("withdrawal_limit", &self.withdrawal_limit),
            ("injection_limit", &self.injection_limit),
            ("buy_price", &self.buy_price),
            ("sell_price", &self.sell_price),
        ];
        for (name, values) in named {
            check_len(values, slots, scenario, name)?;
            check_finite(values, scenario, name)?;
        }
        for (name, values) in [("withdrawal_limit", &self.withdrawal_limit), ("injection_limit", &self.injection_limit)] {
            if let Some(t) = values.iter().position(|&v| v < 0.0) {
                return Err(IngestError::invariant(
                    slot_location(scenario, name, t),
                    "grid limit must be >= 0",
                ));
            }
        }
        for (t, (b, s)) in self.buy_price.iter().zip(&self.sell_price).enumerate() {
            if !(b > s) {
                return Err(IngestError::invariant(
                    slot_location(scenario, "sell_price", t),
                    format!("buy price {b} must exceed sell price {s}"),
                ));
            }
        }
        Ok(())
    }
}

/// One vehicle visit. Slots are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingSession {
    pub vehicle_id: String,
    pub arrival_slot: u32,
    pub departure_slot: u32,
    pub energy_kwh: f64,
    pub max_vehicle_rate_kw: f64,
}

impl ChargingSession {
    pub fn validate(&self, slots: usize, scenario: &str) -> Result<(), IngestError> {
        if self.vehicle_id.is_empty() {
            return Err(IngestError::schema(format!("scenario '{scenario}' sessions"), "empty vehicle_id"));
        }
        let (a, d) = (self.arrival_slot, self.departure_slot);
        if !(a >= 1 && a < d && (d as usize) <= slots) {
            return Err(IngestError::SessionWindow {
                scenario: scenario.to_string(),
                vehicle_id: self.vehicle_id.clone(),
                arrival: a,
                departure: d,
                slots,
            });
        }
        let loc = || format!("scenario '{scenario}' session '{}'", self.vehicle_id);
        if !(self.energy_kwh > 0.0 && self.energy_kwh.is_finite()) {
            return Err(IngestError::invariant(loc(), "energy_kwh must be positive"));
        }
        if !(self.max_vehicle_rate_kw > 0.0 && self.max_vehicle_rate_kw.is_finite()) {
            return Err(IngestError::invariant(loc(), "max_rate_kw must be positive"));
        }
        Ok(())
    }
}

/// A representative day and how many times it occurs per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub occurrence_days: u32,
    /// Hours per slot.
    pub delta_t: f64,
    /// kW/m² per slot.
    pub irradiance: Vec<f64>,
    /// m/s per slot, at measurement height.
    pub measured_wind_speed: Vec<f64>,
    pub grid: GridContract,
    pub sessions: Vec<ChargingSession>,
}

impl Scenario {
    pub fn slots(&self) -> usize {
        self.irradiance.len()
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let id = self.id.as_str();
        if id.is_empty() {
            return Err(IngestError::schema("scenario", "empty id"));
        }
        let slots = self.slots();
        if !(self.delta_t > 0.0) || slots == 0 || (slots as f64 * self.delta_t - 24.0).abs() > DAY_TOLERANCE {
            return Err(IngestError::invariant(
                format!("scenario '{id}'"),
                format!("{slots} slots of {} h do not span 24 h", self.delta_t),
            ));
        }
        if self.occurrence_days == 0 {
            // a scenario that never occurs leaves its trading cost unpinned
            return Err(IngestError::invariant(format!("scenario '{id}' occurrence_days"), "must be >= 1"));
        }
        check_len(&self.measured_wind_speed, slots, id, "wind_speed")?;
        for (name, values) in [("irradiance", &self.irradiance), ("wind_speed", &self.measured_wind_speed)] {
            check_finite(values, id, name)?;
            if let Some(t) = values.iter().position(|&v| v < 0.0) {
                return Err(IngestError::invariant(slot_location(id, name, t), "must be >= 0"));
            }
        }
        self.grid.validate(slots, id)?;
        let mut seen = std::collections::HashSet::new();
        for s in &self.sessions {
            s.validate(slots, id)?;
            if !seen.insert(s.vehicle_id.as_str()) {
                return Err(IngestError::schema(
                    format!("scenario '{id}' sessions"),
                    format!("duplicate vehicle_id '{}'", s.vehicle_id),
                ));
            }
        }
        Ok(())
    }

    /// Longest parking window `departure - arrival` among the sessions.
    pub fn max_parked(&self) -> u32 {
        self.sessions
            .iter()
            .map(|s| s.departure_slot - s.arrival_slot)
            .max()
            .unwrap_or(0)
    }
}

/// Representative days sharing one slot grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
    year_days: u32,
}

impl ScenarioSet {
    /// Validates every scenario, the shared slot grid and that occurrences add
    /// up to the year length.
    pub fn new(scenarios: Vec<Scenario>, year_days: u32) -> Result<Self, IngestError> {
        let first = scenarios
            .first()
            .ok_or_else(|| IngestError::schema("scenario", "at least one scenario is required"))?;
        let (slots, dt) = (first.slots(), first.delta_t);
        let mut ids = std::collections::HashSet::new();
        for s in &scenarios {
            s.validate()?;
            if s.slots() != slots || s.delta_t != dt {
                return Err(IngestError::invariant(
                    format!("scenario '{}'", s.id),
                    "all scenarios must share the slot length and count",
                ));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(IngestError::schema("scenario", format!("duplicate id '{}'", s.id)));
            }
        }
        if !(year_days == 365 || year_days == 366) {
            return Err(IngestError::invariant("economics.year_days", "must be 365 or 366"));
        }
        if year_days == 366 {
            log::warn!("planning year configured with 366 days");
        }
        let total: u64 = scenarios.iter().map(|s| s.occurrence_days as u64).sum();
        if total != year_days as u64 {
            return Err(IngestError::invariant(
                "scenario.occurrence_days",
                format!("occurrences sum to {total}, expected {year_days}"),
            ));
        }
        Ok(ScenarioSet { scenarios, year_days })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn slots(&self) -> usize {
        self.scenarios[0].slots()
    }

    pub fn delta_t(&self) -> f64 {
        self.scenarios[0].delta_t
    }

    pub fn year_days(&self) -> u32 {
        self.year_days
    }

    pub fn total_days(&self) -> u64 {
        self.scenarios.iter().map(|s| s.occurrence_days as u64).sum()
    }

    pub fn has_sessions(&self) -> bool {
        self.scenarios.iter().any(|s| !s.sessions.is_empty())
    }

    pub fn max_parked(&self) -> u32 {
        self.scenarios.iter().map(Scenario::max_parked).max().unwrap_or(0)
    }
}

/// Everything the optimizer needs.
#[derive(Debug, Clone, PartialEq)]
pub struct HubInputs {
    pub catalog: TechnologyCatalog,
    pub scenarios: ScenarioSet,
    pub economics: EconomicParams,
}

impl HubInputs {
    pub fn new(
        catalog: TechnologyCatalog,
        scenarios: ScenarioSet,
        economics: EconomicParams,
    ) -> Result<Self, IngestError> {
        catalog.validate()?;
        economics.validate()?;
        if scenarios.year_days() != economics.year_days {
            return Err(IngestError::invariant(
                "economics.year_days",
                format!(
                    "scenario occurrences cover {} days, economics configures {}",
                    scenarios.year_days(),
                    economics.year_days
                ),
            ));
        }
        if scenarios.has_sessions() && catalog.chargers.is_empty() {
            return Err(IngestError::invariant("charger", "sessions present but no charger types"));
        }
        let dt = scenarios.delta_t();
        for s in scenarios.scenarios() {
            for session in &s.sessions {
                crate::catalog::check_session_feasible(session, &catalog.chargers, dt)?;
            }
        }
        Ok(HubInputs { catalog, scenarios, economics })
    }
}

/// Reads a config document and every file it references (paths relative to
/// the config's directory) and validates the result.
pub fn load_inputs(config_path: &Path) -> Result<HubInputs, IngestError> {
    let text = read_text(config_path)?;
    let config = parse_config(&text)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve(base)
}

pub(crate) fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile { path: path.to_path_buf() },
        _ => IngestError::Io { path: path.to_path_buf(), message: e.to_string() },
    })
}

fn slot_location(scenario: &str, series: &str, index: usize) -> String {
    format!("scenario '{scenario}' {series} slot {}", index + 1)
}

fn check_len(values: &[f64], slots: usize, scenario: &str, name: &str) -> Result<(), IngestError> {
    if values.len() != slots {
        return Err(IngestError::schema(
            format!("scenario '{scenario}' {name}"),
            format!("expected {slots} values, got {}", values.len()),
        ));
    }
    Ok(())
}

fn check_finite(values: &[f64], scenario: &str, name: &str) -> Result<(), IngestError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(t) => Err(IngestError::schema(slot_location(scenario, name, t), "value is not finite")),
        None => Ok(()),
    }
}
