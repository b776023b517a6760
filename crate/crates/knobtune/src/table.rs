//! CSV files carrying configurations.
//!
//! Trajectories have the columns `iteration, <knobs...>, value, status,
//! best_so_far`. Training data has `<knobs...>, performance` and an optional
//! `status`. Readers accept either target column name and any knob column
//! order, as long as the knob columns are exactly the space's knobs.

use std::path::Path;

use knobtune_core::{ConfigSpace, Configuration, History, KnobKind, KnobSpec, Status, Value};

use crate::error::{write_file, Error, Result};

const RESERVED: [&str; 5] = ["iteration", "value", "performance", "status", "best_so_far"];

/// One row of a trajectory file. `iteration` counts from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub config: Configuration,
    pub value: f64,
    pub status: Status,
    pub best_so_far: Option<f64>,
}

/// One row read back from any configuration CSV. `value` is `None` only
/// for failed rows that carry no number.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub config: Configuration,
    pub value: Option<f64>,
    pub status: Status,
    pub best_so_far: Option<f64>,
}

pub fn format_value(knob: &KnobSpec, value: &Value) -> String {
    match *value {
        Value::Real(v) => format_real(v),
        Value::Int(v) => v.to_string(),
        Value::Category(c) => knob.category_label(c).unwrap_or_default().to_string(),
    }
}

/// Shortest representation that parses back to the same bits.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

pub fn parse_value(knob: &KnobSpec, cell: &str) -> Result<Value> {
    let cell = cell.trim();
    let bad = || Error::Schema(format!("knob `{}`: cannot parse `{cell}`", knob.name()));
    let value = match knob.kind() {
        KnobKind::Continuous { .. } => Value::Real(cell.parse().map_err(|_| bad())?),
        KnobKind::Integer { .. } => Value::Int(match cell.parse::<i64>() {
            Ok(v) => v,
            Err(_) => {
                let f: f64 = cell.parse().map_err(|_| bad())?;
                if f.fract() != 0.0 {
                    return Err(bad());
                }
                f as i64
            }
        }),
        KnobKind::Categorical { .. } => Value::Category(knob.category_index(cell).ok_or_else(bad)?),
    };
    if !knob.contains(&value) {
        return Err(Error::Schema(format!("knob `{}`: `{cell}` outside domain", knob.name())));
    }
    Ok(value)
}

/// Rows of a finished (or partial) session, with full-space configurations
/// produced by `full`.
pub fn trajectory_rows(history: &History, full: impl Fn(&Configuration) -> Configuration) -> Vec<TrajectoryRow> {
    history
        .records()
        .iter()
        .zip(history.best_so_far_series())
        .map(|(r, best)| TrajectoryRow {
            iteration: r.iteration + 1,
            config: full(&r.config),
            value: r.value,
            status: r.status,
            best_so_far: best,
        })
        .collect()
}

pub fn trajectory_to_string(space: &ConfigSpace, rows: &[TrajectoryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_string()];
    header.extend(space.knob_names().iter().map(|s| s.to_string()));
    header.extend(["value", "status", "best_so_far"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.iteration.to_string()];
        rec.extend(space.knobs().iter().zip(r.config.values()).map(|(k, v)| format_value(k, v)));
        rec.push(format_real(r.value));
        rec.push(r.status.as_str().to_string());
        rec.push(r.best_so_far.map(format_real).unwrap_or_default());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn write_trajectory(path: &Path, space: &ConfigSpace, rows: &[TrajectoryRow]) -> Result<()> {
    write_file(path, trajectory_to_string(space, rows).as_bytes())
}

/// Training CSV; `status` is written only when some row failed.
pub fn training_to_string(space: &ConfigSpace, rows: &[(Configuration, f64, Status)]) -> String {
    let with_status = rows.iter().any(|r| r.2 == Status::Failed);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = space.knob_names().iter().map(|s| s.to_string()).collect();
    header.push("performance".into());
    if with_status {
        header.push("status".into());
    }
    w.write_record(&header).expect("in-memory write");
    for (c, v, s) in rows {
        let mut rec: Vec<String> = space.knobs().iter().zip(c.values()).map(|(k, v)| format_value(k, v)).collect();
        rec.push(if v.is_finite() { format_real(*v) } else { String::new() });
        if with_status {
            rec.push(s.as_str().to_string());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn write_training(path: &Path, space: &ConfigSpace, rows: &[(Configuration, f64, Status)]) -> Result<()> {
    write_file(path, training_to_string(space, rows).as_bytes())
}

pub fn read_rows(path: &Path, space: &ConfigSpace) -> Result<Vec<DataRow>> {
    let text = crate::error::read_to_string(path)?;
    parse_rows(&text, space).map_err(|e| Error::format(path, e))
}

pub fn parse_rows(text: &str, space: &ConfigSpace) -> Result<Vec<DataRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut knob_cols = Vec::with_capacity(space.len());
    for k in space.knobs() {
        knob_cols.push(col(k.name()).ok_or_else(|| Error::Schema(format!("missing knob column `{}`", k.name())))?);
    }
    if let Some(extra) = header
        .iter()
        .find(|h| !RESERVED.contains(&h.as_str()) && space.index_of(h).is_none())
    {
        return Err(Error::Schema(format!("column `{extra}` is not a knob of `{}`", space.name())));
    }
    let target = match (col("performance"), col("value")) {
        (Some(p), None) | (None, Some(p)) => p,
        (Some(_), Some(_)) => return Err(Error::Schema("both `performance` and `value` columns".into())),
        (None, None) => return Err(Error::Schema("missing `performance` column".into())),
    };
    let status_col = col("status");
    let best_col = col("best_so_far");
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        let at = |e: Error| Error::Schema(format!("row {}: {e}", line + 2));
        let values = space
            .knobs()
            .iter()
            .zip(&knob_cols)
            .map(|(k, &c)| parse_value(k, rec.get(c).unwrap_or("")))
            .collect::<Result<Vec<_>>>()
            .map_err(at)?;
        let status = match status_col {
            Some(c) => rec.get(c).unwrap_or("").parse::<Status>().map_err(|e| at(e.into()))?,
            None => Status::Ok,
        };
        let cell = rec.get(target).unwrap_or("");
        let value = match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ if status == Status::Failed => None,
            _ => return Err(at(Error::Schema(format!("invalid value `{cell}`")))),
        };
        let best_so_far = best_col.and_then(|c| rec.get(c)).and_then(|s| s.parse().ok());
        rows.push(DataRow {
            config: Configuration::new(values),
            value,
            status,
            best_so_far,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use knobtune_core::Sense;

    fn space() -> ConfigSpace {
        ConfigSpace::new(
            "t",
            vec![
                KnobSpec::continuous("x", 0.0, 1.0, 0.5).unwrap(),
                KnobSpec::integer("n", 1, 9, 3).unwrap(),
                KnobSpec::categorical("mode", ["a", "b"], 0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn trajectory_round_trip() {
        let s = space();
        let mut h = History::new(Sense::Minimize);
        h.push(Configuration::new(vec![Value::Real(0.1), Value::Int(2), Value::Category(1)]), 3.0, Status::Ok, None);
        h.push(Configuration::new(vec![Value::Real(1.0 / 3.0), Value::Int(9), Value::Category(0)]), f64::NAN, Status::Failed, None);
        h.push(s.default_config(), 1.5, Status::Ok, None);
        let rows = trajectory_rows(&h, Clone::clone);
        let text = trajectory_to_string(&s, &rows);
        assert!(text.starts_with("iteration,x,n,mode,value,status,best_so_far\n1,0.1,2,b,3,ok,3\n"));
        let back = parse_rows(&text, &s).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.config, b.config);
            assert_eq!(Some(a.value), b.value);
            assert_eq!(a.status, b.status);
            assert_eq!(a.best_so_far, b.best_so_far);
        }
        assert_eq!(back[1].value, Some(3.0));
    }

    #[test]
    fn training_columns_in_any_order() {
        let s = space();
        let rows = parse_rows("mode,performance,n,x,status\nb,2.5,4,0.25,ok\na,,1,0,failed\n", &s).unwrap();
        assert_eq!(rows[0].config.values(), [Value::Real(0.25), Value::Int(4), Value::Category(1)]);
        assert_eq!(rows[1].value, None);
        assert!(parse_rows("x,n,performance\n0.1,2,1\n", &s).is_err());
        assert!(parse_rows("x,n,mode,extra,performance\n0.1,2,a,1,1\n", &s).is_err());
        assert!(parse_rows("x,n,mode,performance\n0.1,2,c,1\n", &s).is_err());
        assert!(parse_rows("x,n,mode,performance\n0.1,2,a,\n", &s).is_err());
    }
}
