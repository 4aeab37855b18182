use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const N_SETTINGS: usize = 3;
pub const N_SENSORS: usize = 21;
pub const N_FEATURES: usize = N_SETTINGS + N_SENSORS;
const N_COLUMNS: usize = 2 + N_FEATURES;

/// Column names of the 24 model inputs, in feature order.
pub fn feature_names() -> Vec<String> {
    (1..=N_SETTINGS)
        .map(|i| format!("setting{i}"))
        .chain((1..=N_SENSORS).map(|i| format!("sensor{i}")))
        .collect()
}

/// One engine's record: cycle `i + 1` has settings `settings[i]` and sensor
/// readings `sensors[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineSeries {
    pub unit_id: u32,
    pub settings: Vec<[f64; N_SETTINGS]>,
    pub sensors: Vec<[f64; N_SENSORS]>,
}

impl EngineSeries {
    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Cycle numbers, `1..=len`.
    pub fn cycles(&self) -> impl Iterator<Item = u32> {
        1..=self.len() as u32
    }

    /// The 24 inputs of row `i` (settings first).
    pub fn features(&self, i: usize) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        out[..N_SETTINGS].copy_from_slice(&self.settings[i]);
        out[N_SETTINGS..].copy_from_slice(&self.sensors[i]);
        out
    }
}

/// Reads a whitespace-separated CMAPSS file (`unit cycle s1..s3 x1..x21`).
pub fn parse_cmapss(path: &Path) -> Result<Vec<EngineSeries>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cmapss_str(&text, path)
}

/// Parses CMAPSS text; `origin` only labels error messages.
pub fn parse_cmapss_str(text: &str, origin: &Path) -> Result<Vec<EngineSeries>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    // unit -> (cycle, line, features)
    let mut units: BTreeMap<u32, Vec<(u32, usize, [f64; N_FEATURES])>> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != N_COLUMNS {
            return Err(err(line, format!("expected {N_COLUMNS} columns, found {}", fields.len())));
        }
        let int = |i: usize, what: &str| -> Result<u32> {
            fields[i]
                .parse::<u32>()
                .map_err(|_| err(line, format!("{what} `{}` is not a non-negative integer", fields[i])))
        };
        let unit = int(0, "unit")?;
        let cycle = int(1, "cycle")?;
        let mut feats = [0.0; N_FEATURES];
        for (j, f) in feats.iter_mut().enumerate() {
            let s = fields[2 + j];
            *f = s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("column {} value `{s}` is not a finite number", 3 + j)))?;
        }
        units.entry(unit).or_default().push((cycle, line, feats));
    }

    let mut out = Vec::with_capacity(units.len());
    for (unit_id, mut rows) in units {
        rows.sort_by_key(|r| r.0);
        let mut series = EngineSeries {
            unit_id,
            settings: Vec::with_capacity(rows.len()),
            sensors: Vec::with_capacity(rows.len()),
        };
        for (i, (cycle, line, feats)) in rows.into_iter().enumerate() {
            if cycle as usize != i + 1 {
                return Err(err(
                    line,
                    format!("unit {unit_id}: expected cycle {}, found {cycle}", i + 1),
                ));
            }
            let mut settings = [0.0; N_SETTINGS];
            settings.copy_from_slice(&feats[..N_SETTINGS]);
            let mut sensors = [0.0; N_SENSORS];
            sensors.copy_from_slice(&feats[N_SETTINGS..]);
            series.settings.push(settings);
            series.sensors.push(sensors);
        }
        out.push(series);
    }
    Ok(out)
}

/// Reads a ground-truth RUL file: one non-negative integer per engine.
pub fn parse_rul_file(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        let v = s.parse::<u32>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("`{s}` is not a non-negative integer"),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Writes series in the CMAPSS text layout.
pub fn write_cmapss(series: &[EngineSeries], path: &Path) -> Result<()> {
    let mut text = String::new();
    for e in series {
        for (i, cycle) in e.cycles().enumerate() {
            write!(text, "{} {cycle}", e.unit_id).expect("write to string");
            for v in e.features(i) {
                write!(text, " {v}").expect("write to string");
            }
            text.push('\n');
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_rul_file(rul: &[u32], path: &Path) -> Result<()> {
    let text: String = rul.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Per-cycle RUL of a run-to-failure series, `len − cycle`, optionally capped.
pub fn label_rul(e: &EngineSeries, cap: Option<u32>) -> Result<Vec<f64>> {
    if e.is_empty() {
        return Err(Error::Empty { op: "label_rul" });
    }
    let last = e.len() as u32;
    Ok(e.cycles().map(|c| cap_rul(last - c, cap)).collect())
}

pub(crate) fn cap_rul(rul: u32, cap: Option<u32>) -> f64 {
    match cap {
        Some(c) => rul.min(c) as f64,
        None => rul as f64,
    }
}
