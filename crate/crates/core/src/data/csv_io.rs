use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{AgeBand, Dataset, Frequency, Gender, Observation, TripChain};
use crate::error::{Error, Result};
use crate::mode::Mode;

/// Column order of the canonical dataset CSV.
pub const COLUMNS: [&str; 10] = [
    "id",
    "gender",
    "age_band",
    "income_uah",
    "car_available",
    "chosen_mode",
    "stated_detour_min",
    "remuneration_uah",
    "trip_chain",
    "frequency",
];

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let dataset = read_dataset(file)?;
    let warnings = dataset.range_warnings();
    if !warnings.is_empty() {
        let (id, msg) = &warnings[0];
        log::warn!(
            "{}: {} value(s) outside the survey range (first: {id}: {msg})",
            path.display(),
            warnings.len()
        );
    }
    Ok(dataset)
}

pub fn read_dataset(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; COLUMNS.len()];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(name.to_string()))?;
    }

    let mut observations = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |k: usize| -> Result<&str> {
            record
                .get(index[k])
                .map(str::trim)
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("missing value for `{}`", COLUMNS[k]),
                })
        };
        let parse_err = |k: usize, e: Error| Error::Parse {
            row,
            message: format!("column `{}`: {e}", COLUMNS[k]),
        };
        let number = |k: usize| -> Result<f64> {
            let s = field(k)?;
            s.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("column `{}`: `{s}` is not a number", COLUMNS[k]),
            })
        };
        let car_available = match field(4)? {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Parse {
                    row,
                    message: format!("column `car_available`: expected true/false, got `{other}`"),
                })
            }
        };
        observations.push(Observation {
            id: field(0)?.to_string(),
            gender: field(1)?.parse::<Gender>().map_err(|e| parse_err(1, e))?,
            age_band: field(2)?.parse::<AgeBand>().map_err(|e| parse_err(2, e))?,
            income_uah: number(3)?,
            car_available,
            chosen_mode: field(5)?.parse::<Mode>().map_err(|e| parse_err(5, e))?,
            stated_detour_min: number(6)?,
            remuneration_uah: number(7)?,
            trip_chain: field(8)?
                .parse::<TripChain>()
                .map_err(|e| parse_err(8, e))?,
            frequency: field(9)?
                .parse::<Frequency>()
                .map_err(|e| parse_err(9, e))?,
        });
    }
    Dataset::new(observations)
}

/// Writes the canonical CSV form. Numbers use the shortest representation
/// that parses back to the same `f64`.
pub fn write_dataset(dataset: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    for o in dataset.observations() {
        w.write_record([
            o.id.clone(),
            o.gender.to_string(),
            o.age_band.to_string(),
            o.income_uah.to_string(),
            o.car_available.to_string(),
            o.chosen_mode.to_string(),
            o.stated_detour_min.to_string(),
            o.remuneration_uah.to_string(),
            o.trip_chain.to_string(),
            o.frequency.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<dataset writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,gender,age_band,income_uah,car_available,chosen_mode,stated_detour_min,remuneration_uah,trip_chain,frequency\n";

    #[test]
    fn header_only_is_empty_dataset() {
        let err = read_dataset(HEADER.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn missing_column_is_named() {
        let text = "id,gender\nq1,female\n";
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Schema(col) => assert_eq!(col, "age_band"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let text = format!(
            "{HEADER}q1,female,18-24,7500,true,bus,30,90,WH,everyday\nq2,male,18-24,lots,true,bus,30,90,WH,everyday\n"
        );
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Parse { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("income_uah"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn car_without_car_cites_row_id() {
        let text = format!("{HEADER}q7,male,45+,15000,false,car,30,90,HH,everyday\n");
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Validation { id, .. } => assert_eq!(id, "q7"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = format!(
            "{HEADER}q1,female,18-24,7500,true,bus,30,90,WH,everyday\nq2,male,45+,55000,false,electric_ground_pt,17.25,120,HH,less_than_monthly\n"
        );
        let d = read_dataset(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_dataset(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
