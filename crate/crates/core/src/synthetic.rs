//! Seeded synthetic instances: tiny ones the exhaustive solver can handle,
//! and a full-year instance shaped like the case study (24 representative
//! days of 24 hourly slots, twelve candidate chargers).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{
    case_study_catalog, check_session_feasible, BessTechnology, ChargerType, PvTechnology, TechnologyCatalog,
    WtTechnology,
};
use crate::ingest::{
    days_in_month_of_kind, AssetLifetimes, ChargingSession, DayKind, EconomicParams, GridContract, HubInputs,
    Scenario, ScenarioSet,
};
use crate::model::{build_problem, ModelOptions};
use crate::solve::{combination_count, OracleCaps};

/// Size limits for [`tiny_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyShape {
    pub max_scenarios: usize,
    /// Slot counts are drawn from the divisors of 24 up to this value.
    pub max_slots: usize,
    pub max_vehicles: usize,
    pub max_candidates: u32,
    /// Upper bound on every design count (PV, WT, BESS units).
    pub design_cap: u32,
    pub with_bess: bool,
}

impl Default for TinyShape {
    fn default() -> Self {
        TinyShape { max_scenarios: 2, max_slots: 6, max_vehicles: 2, max_candidates: 2, design_cap: 2, with_bess: true }
    }
}

pub fn economics() -> EconomicParams {
    EconomicParams {
        discount_rate: 0.0275,
        lifetimes: AssetLifetimes { pv: 25, wt: 20, bess: 15, charger: 10 },
        year_days: 365,
    }
}

/// A random instance within `shape` whose integer search space fits `caps`.
/// Draws are repeated from the same stream until the instance fits, so the
/// result depends on `seed` only.
pub fn tiny_instance(seed: u64, shape: &TinyShape, caps: &OracleCaps) -> HubInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inputs = draw_tiny(&mut rng, shape);
        let Ok((problem, _)) = build_problem(&inputs, &ModelOptions::default()) else { continue };
        let (combos, general) = combination_count(&problem);
        if combos <= caps.cap(general) {
            return inputs;
        }
    }
}

fn draw_tiny(rng: &mut ChaCha8Rng, shape: &TinyShape) -> HubInputs {
    let slot_choices: Vec<usize> = [2, 3, 4, 6, 8, 12, 24].into_iter().filter(|&n| n <= shape.max_slots.max(2)).collect();
    let slots = slot_choices[rng.gen_range(0..slot_choices.len())];
    let dt = 24.0 / slots as f64;
    let cap = shape.design_cap.max(1);

    let pv = vec![PvTechnology {
        id: "pv".into(),
        efficiency: 0.2,
        area_m2: rng.gen_range(100.0..600.0),
        invest_cost: rng.gen_range(10_000.0..80_000.0),
        maintenance_cost: rng.gen_range(0.0..500.0),
        lifetime_years: None,
        max_units: rng.gen_range(1..=cap),
    }];
    let wt = if rng.gen_bool(0.6) {
        vec![WtTechnology {
            id: "wt".into(),
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 22.0,
            rated_power_kw: rng.gen_range(50.0..200.0),
            swept_area_m2: 800.0,
            air_density: 1.225,
            hub_height_m: 40.0,
            measurement_height_m: 10.0,
            shear_exponent: 0.143,
            invest_cost: rng.gen_range(50_000.0..300_000.0),
            maintenance_cost: rng.gen_range(0.0..3_000.0),
            lifetime_years: None,
            max_units: rng.gen_range(1..=cap),
        }]
    } else {
        Vec::new()
    };
    let bess = if shape.with_bess && rng.gen_bool(0.6) {
        let size = rng.gen_range(50.0..300.0);
        let lo = rng.gen_range(0.0..0.2);
        let hi = rng.gen_range(0.8..1.0);
        vec![BessTechnology {
            id: "bess".into(),
            unit_size_kwh: size,
            charge_eff: rng.gen_range(0.85..=1.0),
            discharge_eff: rng.gen_range(0.85..=1.0),
            self_discharge_per_h: rng.gen_range(0.0..1e-3),
            soc_min_frac: lo,
            soc_max_frac: hi,
            soc_init_frac: rng.gen_range(lo..=hi),
            max_charge_kw: size * rng.gen_range(0.25..1.0),
            max_discharge_kw: size * rng.gen_range(0.25..1.0),
            max_units: rng.gen_range(1..=cap),
            invest_cost: rng.gen_range(5_000.0..40_000.0),
            maintenance_cost: rng.gen_range(0.0..400.0),
            degradation_cost_per_kw: rng.gen_range(0.0..0.05),
            lifetime_years: None,
        }]
    } else {
        Vec::new()
    };
    let candidates = rng.gen_range(1..=shape.max_candidates.max(1));
    let chargers = if candidates >= 2 && rng.gen_bool(0.5) {
        vec![charger(rng, "slow", 50.0..120.0, 1), charger(rng, "fast", 120.0..250.0, candidates - 1)]
    } else {
        vec![charger(rng, "dc", 50.0..250.0, candidates)]
    };
    let catalog = TechnologyCatalog { pv, wt, bess, chargers };

    let n_scen = rng.gen_range(1..=shape.max_scenarios.max(1));
    let first_days = if n_scen == 1 { 365 } else { rng.gen_range(100..=265) };
    let scenarios = (0..n_scen)
        .map(|s| {
            let days = if s == 0 { first_days } else { 365 - first_days };
            let vehicles = rng.gen_range(0..=shape.max_vehicles);
            let sessions = (0..vehicles).map(|v| draw_session(rng, &catalog.chargers, slots, dt, v)).collect();
            let buy: Vec<f64> = (0..slots).map(|_| rng.gen_range(0.1..0.4)).collect();
            Scenario {
                id: format!("day{s}"),
                occurrence_days: days,
                delta_t: dt,
                irradiance: (0..slots).map(|t| daylight(t, slots) * rng.gen_range(0.0..1.0)).collect(),
                measured_wind_speed: (0..slots).map(|_| rng.gen_range(0.0..14.0)).collect(),
                grid: GridContract {
                    withdrawal_limit: (0..slots).map(|_| rng.gen_range(250.0..700.0_f64).round()).collect(),
                    injection_limit: (0..slots).map(|_| rng.gen_range(0.0..300.0_f64).round()).collect(),
                    sell_price: buy.iter().map(|b| b * rng.gen_range(0.0..0.8)).collect(),
                    buy_price: buy,
                },
                sessions,
            }
        })
        .collect();
    let set = ScenarioSet::new(scenarios, 365).expect("generated scenarios are valid");
    HubInputs::new(catalog, set, economics()).expect("generated inputs are valid")
}

fn charger(rng: &mut ChaCha8Rng, id: &str, kw: std::ops::Range<f64>, count: u32) -> ChargerType {
    let power = rng.gen_range(kw).round();
    ChargerType {
        id: id.into(),
        max_power_kw: power,
        invest_cost: power * rng.gen_range(300.0..600.0),
        maintenance_cost: power * rng.gen_range(0.0..6.0),
        candidate_count: count,
        lifetime_years: None,
    }
}

/// A session that fits at least one charger type.
fn draw_session(rng: &mut ChaCha8Rng, chargers: &[ChargerType], slots: usize, dt: f64, v: usize) -> ChargingSession {
    loop {
        let arrival = rng.gen_range(1..slots as u32);
        let departure = rng.gen_range(arrival + 1..=slots as u32);
        let session = ChargingSession {
            vehicle_id: format!("ev{v}"),
            arrival_slot: arrival,
            departure_slot: departure,
            energy_kwh: rng.gen_range(20.0..(dt * 250.0)).round().max(1.0),
            max_vehicle_rate_kw: rng.gen_range(80.0..400.0_f64).round(),
        };
        if check_session_feasible(&session, chargers, dt).is_ok() {
            return session;
        }
    }
}

/// Clear-sky shape in [0, 1] for slot `t` of a day with `slots` slots.
fn daylight(t: usize, slots: usize) -> f64 {
    let hour = (t as f64 + 0.5) * 24.0 / slots as f64;
    if (6.0..20.0).contains(&hour) {
        (std::f64::consts::PI * (hour - 6.0) / 14.0).sin()
    } else {
        0.0
    }
}

/// A year of 24 representative days (each month as weekday and weekend) with
/// hourly slots, the case-study catalog with its twelve candidate chargers,
/// 600 kW daytime and 800 kW night-time withdrawal limits, and a fleet of
/// heavy-duty sessions: `weekday_sessions` per weekday, half on weekends.
pub fn case_study_instance(seed: u64, year: i32, weekday_sessions: usize) -> HubInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = case_study_catalog();
    let slots = 24;
    let mut scenarios = Vec::with_capacity(24);
    for month in 1..=12u32 {
        // irradiance peak in kW/m², higher in summer
        let season = (std::f64::consts::PI * (month as f64 - 1.0) / 11.0).sin();
        let peak = 0.25 + 0.6 * season;
        let wind_mean = 7.0 - 2.5 * season;
        for kind in [DayKind::Weekday, DayKind::Weekend] {
            let n_sessions = if kind == DayKind::Weekday { weekday_sessions } else { weekday_sessions.div_ceil(2) };
            let buy: Vec<f64> = (0..slots)
                .map(|t| {
                    let base = if (7..21).contains(&t) { 0.28 } else { 0.18 };
                    base + rng.gen_range(-0.04..0.04)
                })
                .collect();
            let sessions = (0..n_sessions).map(|v| truck(&mut rng, &catalog.chargers, v)).collect();
            scenarios.push(Scenario {
                id: format!("m{month:02}-{}", if kind == DayKind::Weekday { "wd" } else { "we" }),
                occurrence_days: days_in_month_of_kind(year, month, kind),
                delta_t: 1.0,
                irradiance: (0..slots).map(|t| peak * daylight(t, slots) * rng.gen_range(0.6..1.0)).collect(),
                measured_wind_speed: (0..slots).map(|_| (wind_mean + rng.gen_range(-4.0..4.0_f64)).max(0.0)).collect(),
                grid: GridContract {
                    withdrawal_limit: (0..slots).map(|t| if (8..20).contains(&t) { 600.0 } else { 800.0 }).collect(),
                    injection_limit: (0..slots).map(|t| if (8..20).contains(&t) { 600.0 } else { 800.0 }).collect(),
                    sell_price: buy.iter().map(|b| b - 0.12).collect(),
                    buy_price: buy,
                },
                sessions,
            });
        }
    }
    let year_days = if chrono::NaiveDate::from_ymd_opt(year, 2, 29).is_some() { 366 } else { 365 };
    let set = ScenarioSet::new(scenarios, year_days).expect("case-study scenarios are valid");
    let economics = EconomicParams { year_days, ..economics() };
    HubInputs::new(catalog, set, economics).expect("case-study inputs are valid")
}

/// A weekday and a weekend day of twelve 2-hour slots on the case-study
/// technologies, with two candidates per charger type, at most four battery
/// units, a small PV roof and no turbines, and `weekday_sessions` trucks on
/// weekdays.
/// `withdrawal_scale` multiplies every withdrawal limit.
pub fn medium_instance(seed: u64, weekday_sessions: usize, withdrawal_scale: f64) -> HubInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut catalog = case_study_catalog();
    // small enough that charging leans on grid imports
    catalog.pv[0].max_units = 300;
    catalog.wt[0].max_units = 0;
    catalog.bess[0].max_units = 4;
    for c in &mut catalog.chargers {
        c.candidate_count = 2;
    }
    let slots = 12;
    let dt = 2.0;
    let mut scenarios = Vec::new();
    for (id, days, n_sessions, peak) in
        [("weekday", 261, weekday_sessions, 0.7), ("weekend", 104, weekday_sessions.div_ceil(2), 0.5)]
    {
        let buy: Vec<f64> = (0..slots).map(|t| if (4..10).contains(&t) { 0.30 } else { 0.19 }).collect();
        let sessions = (0..n_sessions)
            .map(|v| loop {
                let arrival = rng.gen_range(1..=10u32);
                let session = ChargingSession {
                    vehicle_id: format!("truck{v:02}"),
                    arrival_slot: arrival,
                    departure_slot: (arrival + rng.gen_range(1..=4u32)).min(slots as u32),
                    energy_kwh: rng.gen_range(150.0..550.0_f64).round(),
                    max_vehicle_rate_kw: 400.0,
                };
                if check_session_feasible(&session, &catalog.chargers, dt).is_ok() {
                    break session;
                }
            })
            .collect();
        scenarios.push(Scenario {
            id: id.into(),
            occurrence_days: days,
            delta_t: dt,
            irradiance: (0..slots).map(|t| peak * daylight(t, slots)).collect(),
            measured_wind_speed: (0..slots).map(|_| rng.gen_range(2.0..10.0)).collect(),
            grid: GridContract {
                withdrawal_limit: (0..slots)
                    .map(|t| withdrawal_scale * if (4..10).contains(&t) { 600.0 } else { 800.0 })
                    .collect(),
                injection_limit: vec![600.0; slots],
                sell_price: buy.iter().map(|b| b - 0.12).collect(),
                buy_price: buy,
            },
            sessions,
        });
    }
    let set = ScenarioSet::new(scenarios, 365).expect("medium scenarios are valid");
    HubInputs::new(catalog, set, economics()).expect("medium inputs are valid")
}

fn truck(rng: &mut ChaCha8Rng, chargers: &[ChargerType], v: usize) -> ChargingSession {
    loop {
        let arrival = rng.gen_range(1..=20u32);
        let stay = rng.gen_range(2..=8u32);
        let session = ChargingSession {
            vehicle_id: format!("truck{v:02}"),
            arrival_slot: arrival,
            departure_slot: (arrival + stay).min(24),
            energy_kwh: rng.gen_range(150.0..550.0_f64).round(),
            max_vehicle_rate_kw: 400.0,
        };
        if check_session_feasible(&session, chargers, 1.0).is_ok() {
            return session;
        }
    }
}
