//! What a run produces: one series per variant, the plotted quantity, and
//! the files written for them.

use std::path::{Path, PathBuf};

use iemisim_core::model::LoadModel;
use iemisim_core::scenario::{
    evaluate_point, run_charging_attack, run_time_domain, with_current_setpoint, with_load,
    with_voltage_setpoint,
};
use iemisim_core::{run, Device, Scenario, ScenarioError, ScenarioRecord, SweepVariable};

use crate::plot::{self, Axis, Line};
use crate::results::{format_number, write_results_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    VReal,
    IReal,
    VMeasured,
    IMeasured,
    DeltaV,
    DeltaI,
    FractionalDv,
    FractionalDi,
    Temperature,
    Soc,
}

const QUANTITIES: [(Quantity, &str); 10] = [
    (Quantity::VReal, "v_real"),
    (Quantity::IReal, "i_real"),
    (Quantity::VMeasured, "v_meas"),
    (Quantity::IMeasured, "i_meas"),
    (Quantity::DeltaV, "delta_v"),
    (Quantity::DeltaI, "delta_i"),
    (Quantity::FractionalDv, "fractional_dv"),
    (Quantity::FractionalDi, "fractional_di"),
    (Quantity::Temperature, "temp"),
    (Quantity::Soc, "soc"),
];

impl Quantity {
    pub fn from_name(name: &str) -> Option<Self> {
        QUANTITIES.iter().find(|(_, n)| *n == name).map(|(q, _)| *q)
    }

    pub fn name(self) -> &'static str {
        QUANTITIES
            .iter()
            .find(|(q, _)| *q == self)
            .map(|(_, n)| *n)
            .unwrap_or("")
    }

    pub fn names() -> Vec<&'static str> {
        QUANTITIES.iter().map(|(_, n)| *n).collect()
    }

    /// Whether the value is relative to the unattacked operating point.
    pub fn needs_baseline(self) -> bool {
        matches!(
            self,
            Quantity::DeltaV | Quantity::DeltaI | Quantity::FractionalDv | Quantity::FractionalDi
        )
    }

    /// Axis caption and SI unit.
    pub fn axis(self) -> (&'static str, &'static str) {
        match self {
            Quantity::VReal => ("Output voltage", "V"),
            Quantity::IReal => ("Output current", "A"),
            Quantity::VMeasured => ("Measured voltage", "V"),
            Quantity::IMeasured => ("Measured current", "A"),
            Quantity::DeltaV => ("Voltage change", "V"),
            Quantity::DeltaI => ("Current change", "A"),
            Quantity::FractionalDv => ("Fractional voltage change", ""),
            Quantity::FractionalDi => ("Fractional current change", ""),
            Quantity::Temperature => ("Cell temperature", "K"),
            Quantity::Soc => ("State of charge", ""),
        }
    }

    pub fn value(self, r: &ScenarioRecord, base: Option<&ScenarioRecord>) -> f64 {
        let b = |f: fn(&ScenarioRecord) -> f64| base.map(f).unwrap_or(f64::NAN);
        match self {
            Quantity::VReal => r.v_real,
            Quantity::IReal => r.i_real,
            Quantity::VMeasured => r.v_measured,
            Quantity::IMeasured => r.i_measured,
            Quantity::DeltaV => r.v_real - b(|x| x.v_real),
            Quantity::DeltaI => r.i_real - b(|x| x.i_real),
            Quantity::FractionalDv => (r.v_real - b(|x| x.v_real)) / b(|x| x.v_real),
            Quantity::FractionalDi => (r.i_real - b(|x| x.i_real)) / b(|x| x.i_real),
            Quantity::Temperature => r.temperature.unwrap_or(f64::NAN),
            Quantity::Soc => r.soc.unwrap_or(f64::NAN),
        }
    }
}

/// Device or load parameter changed from one plotted series to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    VoltageSetpoint,
    CurrentSetpoint,
    CrLoad,
    CvLoad,
}

const VARIES: [(Vary, &str); 4] = [
    (Vary::VoltageSetpoint, "voltage_setpoint"),
    (Vary::CurrentSetpoint, "current_setpoint"),
    (Vary::CrLoad, "cr_load"),
    (Vary::CvLoad, "cv_load"),
];

impl Vary {
    pub fn from_name(name: &str) -> Option<Self> {
        VARIES.iter().find(|(_, n)| *n == name).map(|(v, _)| *v)
    }

    pub fn name(self) -> &'static str {
        VARIES
            .iter()
            .find(|(v, _)| *v == self)
            .map(|(_, n)| *n)
            .unwrap_or("")
    }

    pub fn names() -> Vec<&'static str> {
        VARIES.iter().map(|(_, n)| *n).collect()
    }

    pub fn apply(self, s: &Scenario, value: f64) -> Scenario {
        match self {
            Vary::VoltageSetpoint => with_voltage_setpoint(s, value),
            Vary::CurrentSetpoint => with_current_setpoint(s, value),
            Vary::CrLoad => with_load(s, LoadModel::ConstantResistance { r: value }),
            Vary::CvLoad => with_load(s, LoadModel::ConstantVoltage { v: value }),
        }
    }

    pub fn label(self, value: f64) -> String {
        let v = format_number(value);
        match self {
            Vary::VoltageSetpoint => format!("set {v} V"),
            Vary::CurrentSetpoint => format!("limit {v} A"),
            Vary::CrLoad => format!("load {v} ohm"),
            Vary::CvLoad => format!("load {v} V"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub title: String,
    pub plot: Quantity,
    pub variants: Option<(Vary, Vec<f64>)>,
}

impl OutputSpec {
    pub fn new(name: &str) -> Self {
        Self {
            title: name.to_string(),
            plot: Quantity::VReal,
            variants: None,
        }
    }
}

/// Results of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// File name suffix; empty for a single-series run.
    pub tag: String,
    pub records: Vec<ScenarioRecord>,
    /// Unattacked operating point, for static sweeps.
    pub baseline: Option<ScenarioRecord>,
}

/// Which engine to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Whatever the scenario describes.
    Auto,
    Sweep,
    Timeline,
}

fn run_one(s: &Scenario, mode: Mode) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    match mode {
        Mode::Auto | Mode::Sweep => run(s),
        Mode::Timeline => match s.device {
            Device::Charger { .. } => run_charging_attack(s),
            Device::Converter(_) => run_time_domain(s),
        },
    }
}

/// Runs every configured variant in order.
pub fn run_series(s: &Scenario, spec: &OutputSpec, mode: Mode) -> Result<Vec<Series>, ScenarioError> {
    let variants: Vec<(String, String, Scenario)> = match &spec.variants {
        None => vec![(s.name.clone(), String::new(), s.clone())],
        Some((vary, values)) => values
            .iter()
            .map(|&v| {
                (
                    vary.label(v),
                    format!("{}_{}", vary.name(), format_number(v)),
                    vary.apply(s, v),
                )
            })
            .collect(),
    };
    let static_run = mode != Mode::Timeline && s.sweep.is_some();
    variants
        .into_iter()
        .map(|(label, tag, sc)| {
            let records = run_one(&sc, mode)?;
            let baseline = static_run.then(|| evaluate_point(&sc, None, 0.0));
            Ok(Series {
                label,
                tag,
                records,
                baseline,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

fn x_axis(s: &Scenario, mode: Mode) -> (Axis, bool) {
    match (&s.sweep, mode) {
        (Some(sw), Mode::Auto | Mode::Sweep) => {
            let (caption, unit) = match sw.variable {
                SweepVariable::Frequency => ("Frequency", "Hz"),
                SweepVariable::Power => ("Transmit power", "W"),
                SweepVariable::Distance => ("Distance", "m"),
            };
            (
                Axis::new(caption, unit),
                sw.spacing == iemisim_core::scenario::Spacing::Log,
            )
        }
        _ => (Axis::new("Time", "s"), false),
    }
}

/// Writes CSV files and the plot into `dir`; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    s: &Scenario,
    spec: &OutputSpec,
    series: &[Series],
    mode: Mode,
    format: Format,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        for sr in series {
            let file = if sr.tag.is_empty() {
                format!("{}.csv", s.name)
            } else {
                format!("{}_{}.csv", s.name, sr.tag)
            };
            let path = dir.join(file);
            write_results_file(&sr.records, &path)?;
            written.push(path);
        }
    }
    if matches!(format, Format::Svg | Format::Both) {
        let (x, log_x) = x_axis(s, mode);
        let (caption, unit) = spec.plot.axis();
        let lines: Vec<Line> = series
            .iter()
            .map(|sr| Line {
                label: sr.label.clone(),
                points: sr
                    .records
                    .iter()
                    .map(|r| (r.x, spec.plot.value(r, sr.baseline.as_ref())))
                    .collect(),
            })
            .collect();
        let svg = plot::render(&spec.title, &x, &Axis::new(caption, unit), log_x, &lines);
        let path = dir.join(format!("{}.svg", s.name));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
