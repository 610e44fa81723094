use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{write_atomic, Dataset};
use crate::error::{Result, SurvError};
use crate::survival::SurvivalLabels;

const FIXED: [&str; 3] = ["id", "time", "event"];

fn parse_error(line: u64, column: &str, message: impl Into<String>) -> SurvError {
    SurvError::Parse {
        line: line as usize,
        column: column.to_string(),
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> SurvError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SurvError::Io(io),
        other => parse_error(line, "", format!("{other:?}")),
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source)
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    parse_csv(File::open(path)?)
}

/// Reads the `id,time,event,<features...>` layout.
pub fn parse_csv<R: Read>(source: R) -> Result<Dataset> {
    let mut rdr = reader(source);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => return Err(parse_error(1, "", "missing header")),
    };
    let names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    for (k, want) in FIXED.iter().enumerate() {
        if names.get(k).map(String::as_str) != Some(*want) {
            return Err(parse_error(
                1,
                names.get(k).map_or("", String::as_str),
                format!("header column {} must be `{want}`", k + 1),
            ));
        }
    }
    let feature_names = names[3..].to_vec();
    let mut seen = std::collections::HashSet::new();
    for name in &feature_names {
        if name.is_empty() {
            return Err(parse_error(1, "", "empty feature name"));
        }
        if !seen.insert(name.as_str()) {
            return Err(parse_error(1, name, "duplicate feature name"));
        }
    }
    let p = feature_names.len();

    let mut ids = Vec::new();
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut values = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != names.len() {
            return Err(parse_error(
                line,
                "",
                format!("expected {} fields, found {}", names.len(), record.len()),
            ));
        }
        let cell = |k: usize| -> Result<&str> {
            let v = record[k].trim();
            if v.is_empty() {
                Err(parse_error(line, &names[k], "missing value"))
            } else {
                Ok(v)
            }
        };
        if record[0].is_empty() {
            return Err(parse_error(line, "id", "missing value"));
        }
        ids.push(record[0].to_string());
        let time: f64 = cell(1)?
            .parse()
            .map_err(|_| parse_error(line, "time", format!("`{}` is not a number", &record[1])))?;
        if !(time.is_finite() && time > 0.0) {
            return Err(parse_error(
                line,
                "time",
                format!("time must be positive and finite, got {time}"),
            ));
        }
        times.push(time);
        events.push(match cell(2)? {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_error(
                    line,
                    "event",
                    format!("event must be 0 or 1, got `{other}`"),
                ))
            }
        });
        for k in 3..names.len() {
            let raw = cell(k)?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_error(line, &names[k], format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, &names[k], format!("non-finite value `{raw}`")));
            }
            values.push(v);
        }
    }
    if ids.is_empty() {
        return Err(parse_error(1, "", "no data rows"));
    }
    let n = ids.len();
    let features = Array2::from_shape_vec((n, p), values).map_err(|e| SurvError::InvalidInput(e.to_string()))?;
    Dataset::new(ids, features, SurvivalLabels::new(times, events)?, feature_names)
}

/// Serializes with shortest round-trip float formatting.
pub fn write_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = FIXED.to_vec();
    header.extend(dataset.feature_names().iter().map(String::as_str));
    wtr.write_record(&header).map_err(csv_error)?;
    let labels = dataset.labels();
    for (i, row) in dataset.features().rows().into_iter().enumerate() {
        let mut fields = Vec::with_capacity(3 + row.len());
        fields.push(dataset.sample_ids()[i].clone());
        fields.push(labels.times()[i].to_string());
        fields.push(if labels.events()[i] { "1" } else { "0" }.to_string());
        fields.extend(row.iter().map(f64::to_string));
        wtr.write_record(&fields).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf)?;
    write_atomic(path, &buf)
}

/// Writes `id,<column>` pairs, e.g. predicted or true risks.
pub fn save_risk_csv(path: &Path, column: &str, ids: &[String], values: &[f64]) -> Result<()> {
    if ids.len() != values.len() {
        return Err(SurvError::DimensionMismatch(format!(
            "{} ids for {} values",
            ids.len(),
            values.len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["id", column]).map_err(csv_error)?;
    for (id, v) in ids.iter().zip(values) {
        wtr.write_record([id.as_str(), &v.to_string()]).map_err(csv_error)?;
    }
    let buf = wtr.into_inner().map_err(|e| SurvError::Io(e.into_error()))?;
    write_atomic(path, &buf)
}

/// Reads a two-column `id,<value>` file.
pub fn load_risk_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader(File::open(path)?);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => return Err(parse_error(1, "", "missing header")),
    };
    if header.len() != 2 || header[0].trim() != "id" {
        return Err(parse_error(1, "", "expected header `id,<value>`"));
    }
    let column = header[1].trim().to_string();
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != 2 {
            return Err(parse_error(
                line,
                "",
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let raw = record[1].trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_error(line, &column, format!("`{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_error(line, &column, format!("non-finite value `{raw}`")));
        }
        out.push((record[0].to_string(), v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_csv(text.as_bytes())
    }

    #[test]
    fn reads_a_small_file() {
        let d = parse("id,time,event,a,b\nx,1.5,1,0.1,-2\ny,3,0,4e-3,7\nz,2,1,0,0\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.sample_ids(), ["x", "y", "z"]);
        assert_eq!(d.labels().times(), [1.5, 3.0, 2.0]);
        assert_eq!(d.labels().events(), [true, false, true]);
        assert_eq!(d.features()[[1, 0]], 4e-3);
        assert_eq!(d.feature_names(), ["a", "b"]);
    }

    fn error_at(text: &str) -> (usize, String) {
        match parse(text) {
            Err(SurvError::Parse { line, column, .. }) => (line, column),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_cells_are_located() {
        assert_eq!(error_at("id,time,event,a\nx,1,1,0\ny,0,1,0\n"), (3, "time".into()));
        assert_eq!(error_at("id,time,event,a\nx,1,2,0\n"), (2, "event".into()));
        assert_eq!(error_at("id,time,event,a\nx,1,1,NaN\n"), (2, "a".into()));
        assert_eq!(error_at("id,time,event,a\nx,1,1,\n"), (2, "a".into()));
        assert_eq!(error_at("id,time,event,a\nx,1,1\n").0, 2);
        assert_eq!(error_at("id,t,event\nx,1,1\n"), (1, "t".into()));
        assert_eq!(error_at("id,time,event,a,a\nx,1,1,0,0\n"), (1, "a".into()));
        assert_eq!(error_at("id,time,event\n").0, 1);
        assert_eq!(error_at("").0, 1);
    }
}
