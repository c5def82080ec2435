//! CSV result files: fixed columns, one row per record, numbers in plain
//! decimal notation rounded to 9 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use iemisim_core::ScenarioRecord;
use serde::Deserialize;

pub const HEADER: [&str; 14] = [
    "sweep_or_time",
    "frequency_hz",
    "power_w",
    "distance_m",
    "v_real_v",
    "i_real_a",
    "v_meas_v",
    "i_meas_a",
    "phase",
    "mode",
    "soc",
    "temp_k",
    "health",
    "events",
];

/// Decimal text for `x` with 9 significant digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let rounded: f64 = sci.parse().unwrap_or(x);
    let decimals = (8 - exp).max(0) as usize;
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn record_row(r: &ScenarioRecord) -> [String; 14] {
    [
        format_number(r.x),
        opt(r.frequency),
        opt(r.power),
        opt(r.distance),
        format_number(r.v_real),
        format_number(r.i_real),
        format_number(r.v_measured),
        format_number(r.i_measured),
        r.phase.map(|p| p.label()).unwrap_or_default(),
        r.mode.map(|m| m.name().to_string()).unwrap_or_default(),
        opt(r.soc),
        opt(r.temperature),
        r.health.map(|h| h.name().to_string()).unwrap_or_default(),
        r.events.iter().map(|e| e.label()).collect::<Vec<_>>().join(";"),
    ]
}

pub fn write_results<W: Write>(records: &[ScenarioRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_file(records: &[ScenarioRecord], path: &Path) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_results(records, &mut buf)?;
    std::fs::write(path, buf)
}

pub fn results_to_string(records: &[ScenarioRecord]) -> String {
    let mut buf = Vec::new();
    write_results(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub sweep_or_time: f64,
    pub frequency_hz: Option<f64>,
    pub power_w: Option<f64>,
    pub distance_m: Option<f64>,
    pub v_real_v: f64,
    pub i_real_a: f64,
    pub v_meas_v: f64,
    pub i_meas_a: f64,
    pub phase: String,
    pub mode: String,
    pub soc: Option<f64>,
    pub temp_k: Option<f64>,
    pub health: String,
    pub events: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>, ReadError> {
    let mut rd = csv::Reader::from_reader(input);
    let found: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if found != HEADER {
        return Err(ReadError::Header {
            expected: HEADER.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    rd.deserialize().map(|r| r.map_err(ReadError::from)).collect()
}
