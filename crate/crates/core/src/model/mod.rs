//! Assembly of the sizing-and-scheduling MILP in a solver-agnostic sparse form.
//!
//! Columns are registered in a fixed order (design variables first, then per
//! scenario: grid, trading cost, charger power, storage, session starts), so
//! two builds from the same inputs produce identical problems. Rows are
//! emitted per scenario in parallel and concatenated in scenario order.

mod balance;
mod bess;
mod export;
mod grid;
mod objective;
mod sessions;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{scale_wind_speed, wt_unit_power, pv_unit_power, CandidateCharger, CatalogError};
use crate::ingest::HubInputs;

pub use balance::add_power_balance;
pub use bess::add_bess_constraints;
pub use export::{write_constraint_dump, write_mps};
pub use grid::add_grid_constraints;
pub use objective::build_objective;
pub use sessions::{add_session_constraints, covering_offsets, start_windows, StartWindow};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model too large: {columns} columns, {rows} rows (caps {max_columns} / {max_rows})")]
    ModelSize { columns: usize, rows: usize, max_columns: usize, max_rows: usize },
    #[error("scenario '{scenario}': session '{vehicle_id}' has no feasible start on any candidate charger")]
    InfeasibleInstance { scenario: String, vehicle_id: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Identity of a decision variable. Slot and point indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    PvUnits { tech: usize },
    WtUnits { tech: usize },
    BessUnits { tech: usize },
    ChargerInstalled { charger: usize },
    Grid { scenario: usize, slot: usize },
    TradeCost { scenario: usize, slot: usize },
    ChargerPower { charger: usize, scenario: usize, slot: usize },
    Charge { tech: usize, scenario: usize, slot: usize },
    Discharge { tech: usize, scenario: usize, slot: usize },
    /// Stored energy at slot boundary `point`; point 0 is the start of the day.
    Soc { tech: usize, scenario: usize, point: usize },
    /// 1 while storage charges, 0 while it discharges. `group` is 0 when
    /// shared across technologies, else the technology index.
    Mode { scenario: usize, slot: usize, group: usize },
    /// Session starts on `charger` at relative offset `offset` (1-based),
    /// i.e. absolute slot `arrival + offset - 1`.
    Start { scenario: usize, session: usize, charger: usize, offset: u32 },
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::PvUnits { tech } => write!(f, "n_pv_{tech}"),
            Var::WtUnits { tech } => write!(f, "n_wt_{tech}"),
            Var::BessUnits { tech } => write!(f, "n_bess_{tech}"),
            Var::ChargerInstalled { charger } => write!(f, "q_{charger}"),
            Var::Grid { scenario, slot } => write!(f, "pg_s{scenario}_t{slot}"),
            Var::TradeCost { scenario, slot } => write!(f, "cel_s{scenario}_t{slot}"),
            Var::ChargerPower { charger, scenario, slot } => write!(f, "pc_c{charger}_s{scenario}_t{slot}"),
            Var::Charge { tech, scenario, slot } => write!(f, "pch_b{tech}_s{scenario}_t{slot}"),
            Var::Discharge { tech, scenario, slot } => write!(f, "pdis_b{tech}_s{scenario}_t{slot}"),
            Var::Soc { tech, scenario, point } => write!(f, "e_b{tech}_s{scenario}_k{point}"),
            Var::Mode { scenario, slot, group } => write!(f, "delta_g{group}_s{scenario}_t{slot}"),
            Var::Start { scenario, session, charger, offset } => {
                write!(f, "x_s{scenario}_v{session}_c{charger}_r{offset}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrality {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub var: Var,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Constraint families of the hub model. Some families live in variable
/// bounds or coefficients rather than rows; they still appear here because
/// the solution validator checks every family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    PvLink,
    WtLink,
    SocRecursion,
    SocBounds,
    InitialSoc,
    TerminalSoc,
    BessPowerCap,
    BessExclusivity,
    ChargerLinking,
    ExactlyOneStart,
    ChargerOccupancy,
    ChargerPower,
    SymmetryInstall,
    SymmetryUsage,
    GridBounds,
    PriceRelaxation,
    PowerBalance,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 17] = [
        ConstraintFamily::PvLink,
        ConstraintFamily::WtLink,
        ConstraintFamily::SocRecursion,
        ConstraintFamily::SocBounds,
        ConstraintFamily::InitialSoc,
        ConstraintFamily::TerminalSoc,
        ConstraintFamily::BessPowerCap,
        ConstraintFamily::BessExclusivity,
        ConstraintFamily::ChargerLinking,
        ConstraintFamily::ExactlyOneStart,
        ConstraintFamily::ChargerOccupancy,
        ConstraintFamily::ChargerPower,
        ConstraintFamily::SymmetryInstall,
        ConstraintFamily::SymmetryUsage,
        ConstraintFamily::GridBounds,
        ConstraintFamily::PriceRelaxation,
        ConstraintFamily::PowerBalance,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ConstraintFamily::PvLink => "pv_link",
            ConstraintFamily::WtLink => "wt_link",
            ConstraintFamily::SocRecursion => "soc_recursion",
            ConstraintFamily::SocBounds => "soc_bounds",
            ConstraintFamily::InitialSoc => "initial_soc",
            ConstraintFamily::TerminalSoc => "terminal_soc",
            ConstraintFamily::BessPowerCap => "bess_power_cap",
            ConstraintFamily::BessExclusivity => "bess_exclusivity",
            ConstraintFamily::ChargerLinking => "charger_linking",
            ConstraintFamily::ExactlyOneStart => "exactly_one_start",
            ConstraintFamily::ChargerOccupancy => "charger_occupancy",
            ConstraintFamily::ChargerPower => "charger_power",
            ConstraintFamily::SymmetryInstall => "symmetry_install",
            ConstraintFamily::SymmetryUsage => "symmetry_usage",
            ConstraintFamily::GridBounds => "grid_bounds",
            ConstraintFamily::PriceRelaxation => "price_relaxation",
            ConstraintFamily::PowerBalance => "power_balance",
        }
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub family: ConstraintFamily,
    pub label: String,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization MILP in sparse row form.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MilpProblem {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Sparse cost vector, sorted by column, no duplicates.
    pub objective: Vec<(usize, f64)>,
    pub objective_offset: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("row {row} ('{label}') references column {column} of {columns}")]
    UnknownColumn { row: usize, label: String, column: usize, columns: usize },
    #[error("column {0} is integer with a non-finite bound")]
    UnboundedInteger(usize),
    #[error("column {0} has lower bound above upper bound")]
    EmptyDomain(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

impl MilpProblem {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, c)| c * values[j]).sum::<f64>()
    }

    /// Dense cost vector.
    pub fn dense_costs(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.columns.len()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn rows_in(&self, family: ConstraintFamily) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.family == family)
    }

    pub fn count_rows(&self, family: ConstraintFamily) -> usize {
        self.rows_in(family).count()
    }

    /// Checks that rows reference registered columns, integer columns are
    /// bounded and every number is finite.
    pub fn check_structure(&self) -> Result<(), StructureError> {
        let n = self.columns.len();
        for (j, c) in self.columns.iter().enumerate() {
            if c.lower > c.upper || c.lower.is_nan() || c.upper.is_nan() {
                return Err(StructureError::EmptyDomain(j));
            }
            if c.integrality != Integrality::Continuous && !(c.lower.is_finite() && c.upper.is_finite()) {
                return Err(StructureError::UnboundedInteger(j));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(StructureError::NonFinite(r.label.clone()));
            }
            for &(j, a) in &r.terms {
                if j >= n {
                    return Err(StructureError::UnknownColumn {
                        row: i,
                        label: r.label.clone(),
                        column: j,
                        columns: n,
                    });
                }
                if !a.is_finite() {
                    return Err(StructureError::NonFinite(r.label.clone()));
                }
            }
        }
        for &(j, c) in &self.objective {
            if j >= n || !c.is_finite() {
                return Err(StructureError::NonFinite("objective".into()));
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of a full assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .columns
            .iter()
            .zip(values)
            .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

/// Bidirectional map between variable identities and column numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexMaps {
    vars: Vec<Var>,
    lookup: HashMap<Var, usize>,
    /// Slots per scenario.
    pub slots: usize,
    /// Longest parking window over all sessions.
    pub max_parked: u32,
    /// Candidate chargers in column order.
    pub candidates: Vec<CandidateCharger>,
    /// Whether end-of-day storage rows were emitted.
    pub terminal_soc: bool,
}

impl IndexMaps {
    pub fn column(&self, var: &Var) -> Option<usize> {
        self.lookup.get(var).copied()
    }

    /// Column of a variable the builder is known to have registered.
    pub(crate) fn col(&self, var: Var) -> usize {
        self.lookup[&var]
    }

    pub fn var(&self, column: usize) -> Var {
        self.vars[column]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Var)> + '_ {
        self.vars.iter().copied().enumerate()
    }
}

/// How storage charge/discharge exclusivity is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusivityMode {
    /// One mode binary per slot shared by all storage technologies.
    #[default]
    Shared,
    /// One mode binary per slot and technology.
    PerTechnology,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub max_columns: usize,
    pub max_rows: usize,
    pub exclusivity: ExclusivityMode,
    /// Require every battery to end the day at least as full as it started,
    /// so stored energy cannot be created for free each day.
    pub terminal_soc: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { max_columns: 5_000_000, max_rows: 10_000_000, exclusivity: ExclusivityMode::Shared, terminal_soc: true }
    }
}

/// Per-slot output of one unit of each renewable technology for one
/// scenario, `[tech][slot]` in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitProfiles {
    pub pv: Vec<Vec<f64>>,
    pub wt: Vec<Vec<f64>>,
}

impl UnitProfiles {
    pub fn for_scenario(inputs: &HubInputs, scenario: usize) -> Result<Self, CatalogError> {
        let s = &inputs.scenarios.scenarios()[scenario];
        let pv = inputs
            .catalog
            .pv
            .iter()
            .map(|tech| s.irradiance.iter().map(|&g| pv_unit_power(tech, g)).collect())
            .collect();
        let wt = inputs
            .catalog
            .wt
            .iter()
            .map(|tech| {
                s.measured_wind_speed
                    .iter()
                    .map(|&v| Ok(wt_unit_power(tech, scale_wind_speed(tech, v)?)))
                    .collect::<Result<Vec<_>, CatalogError>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(UnitProfiles { pv, wt })
    }
}

/// Shared read-only state for the row emitters.
pub struct BuildContext<'a> {
    pub inputs: &'a HubInputs,
    pub maps: &'a IndexMaps,
    /// `[scenario][session][charger]`
    pub windows: &'a [Vec<Vec<Option<StartWindow>>>],
    pub profiles: &'a [UnitProfiles],
    pub options: &'a ModelOptions,
}

impl BuildContext<'_> {
    pub(crate) fn mode_group(&self, tech: usize) -> usize {
        match self.options.exclusivity {
            ExclusivityMode::Shared => 0,
            ExclusivityMode::PerTechnology => tech,
        }
    }
}

struct ColumnRegistry {
    columns: Vec<Column>,
    maps: IndexMaps,
}

impl ColumnRegistry {
    fn add(&mut self, var: Var, lower: f64, upper: f64, integrality: Integrality) {
        let j = self.columns.len();
        self.columns.push(Column { var, lower, upper, integrality });
        self.maps.vars.push(var);
        let prev = self.maps.lookup.insert(var, j);
        debug_assert!(prev.is_none(), "duplicate column {var}");
    }
}

/// Builds the complete sizing-and-scheduling MILP.
pub fn build_problem(inputs: &HubInputs, options: &ModelOptions) -> Result<(MilpProblem, IndexMaps), ModelError> {
    let cat = &inputs.catalog;
    let set = &inputs.scenarios;
    let slots = set.slots();
    let candidates = cat.candidates();

    let windows: Vec<_> = set.scenarios().iter().map(|s| start_windows(cat, &candidates, s)).collect();
    for (s, scen) in set.scenarios().iter().enumerate() {
        for (v, per_charger) in windows[s].iter().enumerate() {
            if per_charger.iter().all(Option::is_none) {
                return Err(ModelError::InfeasibleInstance {
                    scenario: scen.id.clone(),
                    vehicle_id: scen.sessions[v].vehicle_id.clone(),
                });
            }
        }
    }
    let profiles = (0..set.scenarios().len())
        .map(|s| UnitProfiles::for_scenario(inputs, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut reg = ColumnRegistry {
        columns: Vec::new(),
        maps: IndexMaps { slots, max_parked: set.max_parked(), candidates: candidates.clone(), terminal_soc: options.terminal_soc, ..Default::default() },
    };
    for (tech, t) in cat.pv.iter().enumerate() {
        reg.add(Var::PvUnits { tech }, 0.0, t.max_units as f64, Integrality::Integer);
    }
    for (tech, t) in cat.wt.iter().enumerate() {
        reg.add(Var::WtUnits { tech }, 0.0, t.max_units as f64, Integrality::Integer);
    }
    for (tech, t) in cat.bess.iter().enumerate() {
        reg.add(Var::BessUnits { tech }, 0.0, t.max_units as f64, Integrality::Integer);
    }
    for charger in 0..candidates.len() {
        reg.add(Var::ChargerInstalled { charger }, 0.0, 1.0, Integrality::Binary);
    }
    let mode_groups = match options.exclusivity {
        ExclusivityMode::Shared => cat.bess.len().min(1),
        ExclusivityMode::PerTechnology => cat.bess.len(),
    };
    for (scenario, scen) in set.scenarios().iter().enumerate() {
        for slot in 0..slots {
            reg.add(
                Var::Grid { scenario, slot },
                -scen.grid.injection_limit[slot],
                scen.grid.withdrawal_limit[slot],
                Integrality::Continuous,
            );
        }
        for slot in 0..slots {
            reg.add(Var::TradeCost { scenario, slot }, f64::NEG_INFINITY, f64::INFINITY, Integrality::Continuous);
        }
        for charger in 0..candidates.len() {
            for slot in 0..slots {
                reg.add(Var::ChargerPower { charger, scenario, slot }, 0.0, f64::INFINITY, Integrality::Continuous);
            }
        }
        for tech in 0..cat.bess.len() {
            for slot in 0..slots {
                reg.add(Var::Charge { tech, scenario, slot }, 0.0, f64::INFINITY, Integrality::Continuous);
                reg.add(Var::Discharge { tech, scenario, slot }, 0.0, f64::INFINITY, Integrality::Continuous);
            }
            for point in 0..=slots {
                reg.add(Var::Soc { tech, scenario, point }, 0.0, f64::INFINITY, Integrality::Continuous);
            }
        }
        for group in 0..mode_groups {
            for slot in 0..slots {
                reg.add(Var::Mode { scenario, slot, group }, 0.0, 1.0, Integrality::Binary);
            }
        }
        for (session, per_charger) in windows[scenario].iter().enumerate() {
            for (charger, w) in per_charger.iter().enumerate() {
                if let Some(w) = w {
                    for offset in 1..=w.last_offset {
                        reg.add(Var::Start { scenario, session, charger, offset }, 0.0, 1.0, Integrality::Binary);
                    }
                }
            }
        }
    }
    let ColumnRegistry { columns, maps } = reg;
    if columns.len() > options.max_columns {
        return Err(ModelError::ModelSize {
            columns: columns.len(),
            rows: 0,
            max_columns: options.max_columns,
            max_rows: options.max_rows,
        });
    }

    let ctx = BuildContext { inputs, maps: &maps, windows: &windows, profiles: &profiles, options };
    let mut rows = symmetry_install_rows(&ctx);
    let per_scenario: Vec<Vec<Row>> = (0..set.scenarios().len())
        .into_par_iter()
        .map(|s| {
            let mut out = Vec::new();
            add_bess_constraints(&ctx, s, &mut out);
            add_session_constraints(&ctx, s, &mut out);
            add_grid_constraints(&ctx, s, &mut out);
            add_power_balance(&ctx, s, &mut out);
            out
        })
        .collect();
    for block in per_scenario {
        rows.extend(block);
    }
    if rows.len() > options.max_rows {
        return Err(ModelError::ModelSize {
            columns: columns.len(),
            rows: rows.len(),
            max_columns: options.max_columns,
            max_rows: options.max_rows,
        });
    }

    let mut problem = MilpProblem { columns, rows, objective: Vec::new(), objective_offset: 0.0 };
    build_objective(&mut problem, &ctx)?;
    Ok((problem, maps))
}

/// Installation order within a charger type: candidate j+1 only if j.
fn symmetry_install_rows(ctx: &BuildContext) -> Vec<Row> {
    let cands = &ctx.maps.candidates;
    cands
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[0].type_index == pair[1].type_index)
        .map(|(c, _)| Row {
            terms: vec![
                (ctx.maps.col(Var::ChargerInstalled { charger: c + 1 }), 1.0),
                (ctx.maps.col(Var::ChargerInstalled { charger: c }), -1.0),
            ],
            relation: Relation::Le,
            rhs: 0.0,
            family: ConstraintFamily::SymmetryInstall,
            label: format!("sym_install_c{}", c + 1),
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::catalog::{BessTechnology, ChargerType, TechnologyCatalog};
    use crate::ingest::{
        AssetLifetimes, ChargingSession, EconomicParams, GridContract, HubInputs, Scenario, ScenarioSet,
    };

    pub fn econ() -> EconomicParams {
        EconomicParams {
            discount_rate: 0.0275,
            lifetimes: AssetLifetimes { pv: 20, wt: 20, bess: 15, charger: 10 },
            year_days: 365,
        }
    }

    pub fn charger_type(id: &str, kw: f64, count: u32) -> ChargerType {
        ChargerType {
            id: id.into(),
            max_power_kw: kw,
            invest_cost: 90_000.0,
            maintenance_cost: 900.0,
            candidate_count: count,
            lifetime_years: None,
        }
    }

    pub fn session(id: &str, arr: u32, dep: u32, energy: f64) -> ChargingSession {
        ChargingSession {
            vehicle_id: id.into(),
            arrival_slot: arr,
            departure_slot: dep,
            energy_kwh: energy,
            max_vehicle_rate_kw: 400.0,
        }
    }

    pub fn bess() -> BessTechnology {
        crate::catalog::case_study_catalog().bess.remove(0)
    }

    pub fn single_day(slots: usize, sessions: Vec<ChargingSession>, catalog: TechnologyCatalog) -> HubInputs {
        let scen = Scenario {
            id: "d".into(),
            occurrence_days: 365,
            delta_t: 24.0 / slots as f64,
            irradiance: vec![0.0; slots],
            measured_wind_speed: vec![0.0; slots],
            grid: GridContract::flat(slots, 600.0, 600.0, 0.3, 0.1),
            sessions,
        };
        HubInputs::new(catalog, ScenarioSet::new(vec![scen], 365).unwrap(), econ()).unwrap()
    }
}
