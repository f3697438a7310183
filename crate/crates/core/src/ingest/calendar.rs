//! Pairing monthly weather with weekday/weekend demand into 24 representative
//! days weighted by their calendar counts.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::{ChargingSession, GridContract, IngestError, Scenario, ScenarioSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayKind {
    Weekday,
    Weekend,
}

impl DayKind {
    fn of(day: Weekday) -> Self {
        match day {
            Weekday::Sat | Weekday::Sun => DayKind::Weekend,
            _ => DayKind::Weekday,
        }
    }

    fn label(self) -> &'static str {
        match self {
            DayKind::Weekday => "weekday",
            DayKind::Weekend => "weekend",
        }
    }
}

/// Typical weather day for a month (1 = January).
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyWeather {
    pub month: u32,
    pub irradiance: Vec<f64>,
    pub wind_speed: Vec<f64>,
}

/// Typical session log for one (month, day kind) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    pub month: u32,
    pub kind: DayKind,
    pub sessions: Vec<ChargingSession>,
}

/// Number of days of `kind` in `month` of `year`. Holidays are not treated
/// specially.
pub fn days_in_month_of_kind(year: i32, month: u32, kind: DayKind) -> u32 {
    let Some(first) = NaiveDate::from_ymd_opt(year, month, 1) else {
        return 0;
    };
    first
        .iter_days()
        .take_while(|d| d.month() == month)
        .filter(|d| DayKind::of(d.weekday()) == kind)
        .count() as u32
}

/// Builds one scenario per (month, day kind), ordered January weekday,
/// January weekend, February weekday, and so on. `grid` supplies the contract
/// for each pair.
pub fn build_scenarios(
    year: i32,
    delta_t: f64,
    weather: &[MonthlyWeather],
    demand: &[DemandProfile],
    grid: impl Fn(u32, DayKind) -> GridContract,
) -> Result<ScenarioSet, IngestError> {
    let mut scenarios = Vec::with_capacity(24);
    for month in 1..=12 {
        let w = single(weather.iter().filter(|w| w.month == month), || {
            format!("weather for month {month}")
        })?;
        for kind in [DayKind::Weekday, DayKind::Weekend] {
            let d = single(demand.iter().filter(|d| d.month == month && d.kind == kind), || {
                format!("{} demand for month {month}", kind.label())
            })?;
            scenarios.push(Scenario {
                id: format!("m{month:02}-{}", kind.label()),
                occurrence_days: days_in_month_of_kind(year, month, kind),
                delta_t,
                irradiance: w.irradiance.clone(),
                measured_wind_speed: w.wind_speed.clone(),
                grid: grid(month, kind),
                sessions: d.sessions.clone(),
            });
        }
    }
    if weather.len() != 12 || demand.len() != 24 {
        return Err(IngestError::CalendarMismatch(format!(
            "expected 12 weather and 24 demand profiles, got {} and {}",
            weather.len(),
            demand.len()
        )));
    }
    let year_days = if NaiveDate::from_ymd_opt(year, 2, 29).is_some() { 366 } else { 365 };
    ScenarioSet::new(scenarios, year_days)
}

fn single<'a, T>(mut it: impl Iterator<Item = &'a T>, what: impl Fn() -> String) -> Result<&'a T, IngestError> {
    match (it.next(), it.next()) {
        (Some(x), None) => Ok(x),
        (None, _) => Err(IngestError::CalendarMismatch(format!("missing {}", what()))),
        (Some(_), Some(_)) => Err(IngestError::CalendarMismatch(format!("duplicate {}", what()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force count over every date of the year.
    fn oracle_count(year: i32, month: u32, weekend: bool) -> u32 {
        let mut n = 0;
        let mut d = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
        while d.year() == year {
            let is_weekend = matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
            if d.month() == month && is_weekend == weekend {
                n += 1;
            }
            d = d.succ_opt().unwrap();
        }
        n
    }

    fn profiles(slots: usize) -> (Vec<MonthlyWeather>, Vec<DemandProfile>) {
        let weather = (1..=12)
            .map(|m| MonthlyWeather { month: m, irradiance: vec![0.0; slots], wind_speed: vec![5.0; slots] })
            .collect();
        let demand = (1..=12)
            .flat_map(|m| {
                [DayKind::Weekday, DayKind::Weekend]
                    .map(|k| DemandProfile { month: m, kind: k, sessions: vec![] })
            })
            .collect();
        (weather, demand)
    }

    #[test]
    fn january_2024_weekdays() {
        assert_eq!(days_in_month_of_kind(2024, 1, DayKind::Weekday), 23);
        assert_eq!(days_in_month_of_kind(2024, 1, DayKind::Weekend), 8);
    }

    #[test]
    fn counts_match_enumeration() {
        for year in [2023, 2024, 2025] {
            for m in 1..=12 {
                assert_eq!(days_in_month_of_kind(year, m, DayKind::Weekday), oracle_count(year, m, false));
                assert_eq!(days_in_month_of_kind(year, m, DayKind::Weekend), oracle_count(year, m, true));
            }
        }
    }

    #[test]
    fn builds_24_scenarios() {
        let (w, d) = profiles(24);
        let set = build_scenarios(2023, 1.0, &w, &d, |_, _| GridContract::flat(24, 600.0, 600.0, 0.3, 0.1)).unwrap();
        assert_eq!(set.scenarios().len(), 24);
        assert_eq!(set.total_days(), 365);
        assert_eq!(set.scenarios()[0].id, "m01-weekday");
        // 2024 is a leap year.
        let set = build_scenarios(2024, 1.0, &w, &d, |_, _| GridContract::flat(24, 600.0, 600.0, 0.3, 0.1)).unwrap();
        assert_eq!(set.total_days(), 366);
        assert_eq!(set.scenarios()[0].occurrence_days, 23);
    }

    #[test]
    fn missing_demand_profile() {
        let (w, mut d) = profiles(24);
        d.pop();
        let err = build_scenarios(2023, 1.0, &w, &d, |_, _| GridContract::flat(24, 1.0, 1.0, 0.3, 0.1)).unwrap_err();
        assert!(matches!(err, IngestError::CalendarMismatch(_)));
    }

    #[test]
    fn dark_month_accepted() {
        let (mut w, d) = profiles(24);
        w[5].irradiance = vec![0.0; 24];
        assert!(build_scenarios(2023, 1.0, &w, &d, |_, _| GridContract::flat(24, 1.0, 1.0, 0.3, 0.1)).is_ok());
    }
}
