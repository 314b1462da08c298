//! Decay-curve files and the output directory.
//!
//! Decay curves are stored one raw probability per row,
//!
//! ```text
//! protocol,qubit,length,seq_index,probability
//! mcm_rb,control,1,0,0.9986...
//! ```
//!
//! with `protocol` one of `mcm_rb`, `delay_rb`, `mcm_rep` and `qubit` one of
//! `control`, `ancilla`. Means and spreads are recomputed on load. The JSON
//! form is an array of objects with the same five fields. Floats are written
//! in shortest round-trip form, so reloading reproduces the data exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mcmrb::analysis::DecayCurve;
use mcmrb::protocols::{LabeledCurve, Protocol, SuiteData};
use mcmrb::simulator::Qubit;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::Format;

pub const CURVE_HEADER: [&str; 5] = ["protocol", "qubit", "length", "seq_index", "probability"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub protocol: String,
    pub qubit: String,
    pub length: usize,
    pub seq_index: usize,
    pub probability: f64,
}

pub fn curve_rows(data: &SuiteData) -> Vec<CurveRow> {
    let mut rows = Vec::new();
    for lc in &data.curves {
        for (&length, samples) in lc.curve.lengths.iter().zip(&lc.curve.samples) {
            for (seq_index, &probability) in samples.iter().enumerate() {
                rows.push(CurveRow {
                    protocol: lc.protocol.as_str().to_string(),
                    qubit: lc.qubit.as_str().to_string(),
                    length,
                    seq_index,
                    probability,
                });
            }
        }
    }
    rows
}

pub fn curves_to_csv(data: &SuiteData) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in curve_rows(data) {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn curves_to_json(data: &SuiteData) -> String {
    serde_json::to_string_pretty(&curve_rows(data)).expect("plain data")
}

fn parse_qubit(s: &str) -> Option<Qubit> {
    [Qubit::Control, Qubit::Ancilla].into_iter().find(|q| q.as_str() == s)
}

/// Parses decay curves from CSV or, for a `.json` path, from JSON rows.
/// `shots` sets the binomial spread of the deterministic `mcm_rep` curves
/// (0 for exact probabilities).
pub fn load_curves(path: &Path, shots: u64) -> CliResult<SuiteData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, None, e.to_string()))?;
    let rows = if path.extension().is_some_and(|e| e == "json") {
        let rows: Vec<CurveRow> =
            serde_json::from_str(&text).map_err(|e| CliError::data(path, Some(e.line()), e.to_string()))?;
        // JSON rows carry no line numbers; report the row index instead.
        rows.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect()
    } else {
        parse_csv_rows(path, &text)?
    };
    curves_from_rows(path, rows, shots)
}

fn parse_csv_rows(path: &Path, text: &str) -> CliResult<Vec<(usize, CurveRow)>> {
    if text.trim().is_empty() {
        return Err(CliError::data(path, None, "empty file"));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::data(path, Some(1), e.to_string()))?
        .clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(CliError::data(
            path,
            Some(1),
            format!(
                "header `{}` does not match `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                CURVE_HEADER.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            CliError::data(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: CurveRow = record
            .deserialize(Some(&header))
            .map_err(|e| CliError::data(path, Some(line), e.to_string()))?;
        rows.push((line, row));
    }
    Ok(rows)
}

type Key = (Protocol, Qubit);

fn curves_from_rows(path: &Path, rows: Vec<(usize, CurveRow)>, shots: u64) -> CliResult<SuiteData> {
    if rows.is_empty() {
        return Err(CliError::data(path, None, "no data rows"));
    }
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, BTreeMap<usize, Vec<(usize, f64, usize)>>> = BTreeMap::new();
    for (line, row) in rows {
        let protocol = Protocol::parse(&row.protocol)
            .ok_or_else(|| CliError::data(path, Some(line), format!("unknown protocol `{}`", row.protocol)))?;
        let qubit = parse_qubit(&row.qubit)
            .ok_or_else(|| CliError::data(path, Some(line), format!("unknown qubit `{}`", row.qubit)))?;
        if !row.probability.is_finite() {
            return Err(CliError::data(path, Some(line), "probability is not finite"));
        }
        let key = (protocol, qubit);
        if !order.contains(&key) {
            order.push(key);
        }
        groups
            .entry(key)
            .or_default()
            .entry(row.length)
            .or_default()
            .push((row.seq_index, row.probability, line));
    }

    let mut curves = Vec::with_capacity(order.len());
    for key in order {
        let by_length = groups.remove(&key).expect("grouped above");
        let mut lengths = Vec::with_capacity(by_length.len());
        let mut samples = Vec::with_capacity(by_length.len());
        for (length, mut entries) in by_length {
            entries.sort_by_key(|&(seq, _, _)| seq);
            for (expected, &(seq, _, line)) in entries.iter().enumerate() {
                if seq != expected {
                    let problem = if seq < expected { "duplicate" } else { "missing" };
                    return Err(CliError::data(
                        path,
                        Some(line),
                        format!(
                            "{problem} seq_index near {seq} for {} {} at length {length}",
                            key.0.as_str(),
                            key.1.as_str()
                        ),
                    ));
                }
            }
            lengths.push(length);
            samples.push(entries.into_iter().map(|(_, p, _)| p).collect());
        }
        let curve = if key.0 == Protocol::McmRep {
            DecayCurve::with_shot_noise(lengths, samples, shots)
        } else {
            DecayCurve::from_samples(lengths, samples)
        }
        .map_err(|e| CliError::data(path, None, format!("{} {}: {e}", key.0.as_str(), key.1.as_str())))?;
        curves.push(LabeledCurve {
            protocol: key.0,
            qubit: key.1,
            curve,
        });
    }
    Ok(SuiteData { curves })
}

/// The directory all outputs of one command go to.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<OutputDir> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("plain data");
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes decay curves as `<stem>.csv` or `<stem>.json`.
    pub fn write_curves(&self, stem: &str, data: &SuiteData, format: Format) -> CliResult<PathBuf> {
        match format {
            Format::Csv => self.write(&format!("{stem}.csv"), &curves_to_csv(data)),
            Format::Json => self.write(&format!("{stem}.json"), &curves_to_json(data)),
        }
    }

    /// Writes serializable rows as CSV or a JSON array.
    pub fn write_table<T: Serialize>(&self, stem: &str, rows: &[T], format: Format) -> CliResult<PathBuf> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    w.serialize(row).expect("in-memory write");
                }
                let bytes = w.into_inner().expect("in-memory flush");
                self.write(&format!("{stem}.csv"), &String::from_utf8(bytes).expect("utf-8 output"))
            }
            Format::Json => self.write_json(&format!("{stem}.json"), &rows),
        }
    }
}
