//! Delimited text readers for per-slot series and session logs.

use serde::Deserialize;

use super::{ChargingSession, IngestError};

pub const SERIES_HEADER: [&str; 2] = ["slot", "value"];
pub const SESSION_HEADER: [&str; 5] =
    ["vehicle_id", "arrival_slot", "departure_slot", "energy_kwh", "max_rate_kw"];

/// Parses a `slot,value` series. Slots must run 1, 2, ... without gaps.
pub fn parse_series(text: &str, location: &str) -> Result<Vec<f64>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    check_header(&mut reader, &SERIES_HEADER, location)?;
    let mut values = Vec::new();
    for (i, record) in reader.deserialize::<(u32, f64)>().enumerate() {
        let (slot, value) = record.map_err(|e| csv_error(location, &e))?;
        if slot as usize != i + 1 {
            return Err(IngestError::schema(
                format!("{location} row {}", i + 2),
                format!("expected slot {}, found {slot}", i + 1),
            ));
        }
        if !value.is_finite() {
            return Err(IngestError::schema(format!("{location} slot {slot}"), "value is not finite"));
        }
        values.push(value);
    }
    Ok(values)
}

#[derive(Deserialize)]
struct SessionRecord {
    vehicle_id: String,
    arrival_slot: u32,
    departure_slot: u32,
    energy_kwh: f64,
    max_rate_kw: f64,
}

/// Parses a session log with the columns of [`SESSION_HEADER`]. Window and
/// value checks happen when the owning scenario is validated.
pub fn parse_sessions(text: &str, location: &str) -> Result<Vec<ChargingSession>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    check_header(&mut reader, &SESSION_HEADER, location)?;
    reader
        .deserialize::<SessionRecord>()
        .map(|r| {
            let r = r.map_err(|e| csv_error(location, &e))?;
            Ok(ChargingSession {
                vehicle_id: r.vehicle_id,
                arrival_slot: r.arrival_slot,
                departure_slot: r.departure_slot,
                energy_kwh: r.energy_kwh,
                max_vehicle_rate_kw: r.max_rate_kw,
            })
        })
        .collect()
}

fn check_header<R: std::io::Read>(
    reader: &mut csv::Reader<R>,
    expected: &[&str],
    location: &str,
) -> Result<(), IngestError> {
    let header = reader.headers().map_err(|e| csv_error(location, &e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(IngestError::schema(
            format!("{location} header"),
            format!("expected columns {}, found {}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn csv_error(location: &str, e: &csv::Error) -> IngestError {
    let loc = match e.position() {
        Some(p) => format!("{location} line {}", p.line()),
        None => location.to_string(),
    };
    IngestError::schema(loc, e.to_string())
}
