//! TOML scenario files.
//!
//! The file maps onto [`ConfigFile`]; [`ConfigFile::build`] turns it into a
//! validated [`Experiment`]. Every problem found is reported with the line
//! it comes from, all at once.

use std::fmt;
use std::path::Path;

use iemisim_core::coupling::{CouplingProfile, InjectionPoint, ResonancePeak};
use iemisim_core::model::{ConverterSpec, FeedbackNetwork, LoadModel, Polarity, Topology};
use iemisim_core::protection::{Channel, CrossCheckDetector, LowPassFilterModel, PptcFuse, RedundantMonitor};
use iemisim_core::scenario::{
    AttackSegment, CalibrationRecord, CalibrationTarget, Knob, Metric, Spacing, CALIBRATION_DISTANCE,
};
use iemisim_core::{
    AttackSchedule, AttackSource, BatteryState, CellParams, ChargerConfig, ChargerProtection, OcvCurve,
    Protections, Scenario, SweepSpec, SweepVariable, Timeline,
};
use serde::{Deserialize, Serialize};

use crate::output::{OutputSpec, Quantity, Vary};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converter: Option<ConverterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charger: Option<ChargerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSection>,
    #[serde(default, skip_serializing_if = "CouplingSection::is_empty")]
    pub coupling: CouplingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatterySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protection: Option<ProtectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeline: Option<TimelineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSection {
    pub topology: String,
    pub v_in: f64,
    pub i_abs_max: f64,
    pub v_abs_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargerSection {
    pub i_cc: f64,
    pub v_cv: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_in_series: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_precharge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_precharge_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_terminate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_ceiling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_voltage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_current: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub voltage: NetworkSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<NetworkSection>,
}

/// One feedback network. Which keys apply depends on `kind`; `setpoint`
/// replaces the key the kind adjusts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_ref_voltage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub voltage_feedback: Vec<PeakSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub current_feedback: Vec<PeakSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protection_monitor: Vec<PeakSection>,
}

impl CouplingSection {
    pub fn is_empty(&self) -> bool {
        self.voltage_feedback.is_empty()
            && self.current_feedback.is_empty()
            && self.protection_monitor.is_empty()
    }

    pub fn peaks_mut(&mut self, point: InjectionPoint) -> &mut Vec<PeakSection> {
        match point {
            InjectionPoint::VoltageFeedback => &mut self.voltage_feedback,
            InjectionPoint::CurrentFeedback => &mut self.current_feedback,
            InjectionPoint::ProtectionMonitor => &mut self.protection_monitor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakSection {
    pub center_freq: f64,
    pub quality_q: f64,
    pub peak_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_internal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_capability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub soc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_esr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_fail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overcharge_heat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_bulge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_collapse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_runaway: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_collapse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocv_knots: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shielding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pptc: Option<FuseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_fuse: Option<FuseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<MonitorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolloff_per_decade: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parasitic_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseSection {
    pub i_trip: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_hold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trip_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_delay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub v_trip: f64,
    pub i_trip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub channel: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub frequency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<RampSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    pub t_start: f64,
    pub t_end: f64,
    pub p_start: f64,
    pub p_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub start: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSection {
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vary: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

/// Provenance of a fitted coupling constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub metric: String,
    pub target: f64,
    pub point: String,
    pub peak: usize,
    pub kappa: f64,
    pub achieved: f64,
    pub frequency: f64,
    pub power: f64,
    pub distance: f64,
}

impl CalibrationSection {
    pub fn from_record(rec: &CalibrationRecord) -> Self {
        Self {
            metric: rec.target.metric.name().to_string(),
            target: rec.target.value,
            point: rec.knob.point.name().to_string(),
            peak: rec.knob.peak,
            kappa: rec.kappa,
            achieved: rec.achieved,
            frequency: rec.frequency,
            power: rec.power,
            distance: rec.distance,
        }
    }
}

/// A problem in a config file. `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: String,
    pub rule: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.rule),
            None => write!(f, "{}: {}", self.key, self.rule),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

/// A scenario plus how its results are presented.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: Scenario,
    pub output: OutputSpec,
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<Scenario, ConfigError> {
    load_experiment(path).map(|e| e.scenario)
}

pub fn load_experiment(path: &Path) -> Result<Experiment, ConfigError> {
    let text = read(path)?;
    let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_experiment(&text, fallback)
}

pub fn load_config_file(path: &Path) -> Result<(ConfigFile, String), ConfigError> {
    let text = read(path)?;
    let cfg = parse_document(&text)?;
    Ok((cfg, text))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses TOML text into the raw document, reporting syntax errors and
/// unknown keys.
pub fn parse_document(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        ConfigError::Invalid(vec![ConfigIssue {
            line,
            key: "toml".into(),
            rule: e.message().trim().to_string(),
        }])
    })
}

/// Parses and validates TOML text. `fallback_name` names the scenario when
/// the file does not.
pub fn parse_experiment(text: &str, fallback_name: &str) -> Result<Experiment, ConfigError> {
    let cfg = parse_document(text)?;
    cfg.build(fallback_name).map_err(|issues| {
        ConfigError::Invalid(
            issues
                .into_iter()
                .map(|(key, rule)| ConfigIssue {
                    line: locate(text, &key),
                    key,
                    rule,
                })
                .collect(),
        )
    })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn header_name(line: &str) -> Option<&str> {
    let t = line.trim();
    let t = t.split('#').next().unwrap_or("").trim();
    let inner = t.strip_prefix("[[").and_then(|s| s.strip_suffix("]]"));
    let inner = inner.or_else(|| t.strip_prefix('[').and_then(|s| s.strip_suffix(']')));
    inner.map(str::trim)
}

/// Line of the key a dotted path like `coupling.voltage_feedback[1].quality_q`
/// refers to, or of its table header when the key itself is absent.
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let lines: Vec<&str> = text.lines().collect();
    let (table, key) = match path.rsplit_once('.') {
        Some((t, k)) => (t.to_string(), k.to_string()),
        None => (String::new(), path.to_string()),
    };
    let (table, index) = match table.rsplit_once('[') {
        Some((t, rest)) => (
            t.to_string(),
            rest.trim_end_matches(']').parse::<usize>().unwrap_or(0),
        ),
        None => (table, 0),
    };

    let key_line = |from: usize| -> Option<usize> {
        for (n, line) in lines.iter().enumerate().skip(from) {
            if header_name(line).is_some() {
                return None;
            }
            let t = line.trim_start();
            if let Some(rest) = t.strip_prefix(key.as_str()) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
        None
    };

    if table.is_empty() {
        // Top-level key, or a whole table named by the path.
        if let Some(n) = lines.iter().position(|l| header_name(l) == Some(key.as_str())) {
            return Some(n + 1);
        }
        return key_line(0);
    }
    let mut seen = 0;
    for (n, line) in lines.iter().enumerate() {
        if header_name(line) == Some(table.as_str()) {
            if seen == index {
                return key_line(n + 1).or(Some(n + 1));
            }
            seen += 1;
        }
    }
    // The path may name a table rather than a key, e.g. `feedback.current`.
    let whole = format!("{table}.{key}");
    lines
        .iter()
        .position(|l| header_name(l) == Some(whole.as_str()))
        .map(|n| n + 1)
}

type Issues = Vec<(String, String)>;

fn need<T: Copy>(issues: &mut Issues, key: &str, v: Option<T>, why: &str) -> Option<T> {
    if v.is_none() {
        issues.push((key.to_string(), format!("required {why}")));
    }
    v
}

fn unused(issues: &mut Issues, key: &str, present: bool, why: &str) {
    if present {
        issues.push((key.to_string(), format!("not used {why}")));
    }
}

fn build_network(
    issues: &mut Issues,
    prefix: &str,
    sec: &NetworkSection,
    default_kind: Option<&str>,
) -> Option<FeedbackNetwork> {
    let Some(kind) = sec.kind.as_deref().or(default_kind) else {
        issues.push((format!("{prefix}.kind"), "required".into()));
        return None;
    };
    let why = format!("for kind {kind}");
    let key = |k: &str| format!("{prefix}.{k}");
    let has_set = sec.setpoint.is_some();
    // Key the kind retargets may be replaced by `setpoint`.
    let adj = |issues: &mut Issues, k: &str, v: Option<f64>| -> Option<f64> {
        if has_set {
            unused(issues, &key(k), v.is_some(), "together with setpoint");
            Some(1.0)
        } else {
            need(issues, &key(k), v, &format!("{why} unless setpoint is given"))
        }
    };
    let net = match kind {
        "adjustable_divider" | "fixed_divider" | "zener" => {
            unused(issues, &key("shunt_r"), sec.shunt_r.is_some(), &why);
            unused(issues, &key("amp_gain"), sec.amp_gain.is_some(), &why);
            unused(issues, &key("i_ref_voltage"), sec.i_ref_voltage.is_some(), &why);
            match kind {
                "adjustable_divider" => {
                    unused(issues, &key("v_z"), sec.v_z.is_some(), &why);
                    let beta = adj(issues, "beta", sec.beta);
                    let v_ref = need(issues, &key("v_ref"), sec.v_ref, &why);
                    FeedbackNetwork::adjustable_divider(beta?, v_ref?)
                }
                "fixed_divider" => {
                    unused(issues, &key("v_z"), sec.v_z.is_some(), &why);
                    let beta = need(issues, &key("beta"), sec.beta, &why);
                    let v_ref = adj(issues, "v_ref", sec.v_ref);
                    FeedbackNetwork::fixed_divider(beta?, v_ref?)
                }
                _ => {
                    unused(issues, &key("beta"), sec.beta.is_some(), &why);
                    let v_z = adj(issues, "v_z", sec.v_z);
                    let v_ref = need(issues, &key("v_ref"), sec.v_ref, &why);
                    FeedbackNetwork::zener(v_z?, v_ref?)
                }
            }
        }
        "current_sense" => {
            unused(issues, &key("beta"), sec.beta.is_some(), &why);
            unused(issues, &key("v_ref"), sec.v_ref.is_some(), &why);
            unused(issues, &key("v_z"), sec.v_z.is_some(), &why);
            let r = need(issues, &key("shunt_r"), sec.shunt_r, &why);
            let g = need(issues, &key("amp_gain"), sec.amp_gain, &why);
            let x = adj(issues, "i_ref_voltage", sec.i_ref_voltage);
            FeedbackNetwork::current_sense(r?, g?, x?)
        }
        other => {
            issues.push((
                key("kind"),
                format!(
                    "unknown kind {other:?}; expected adjustable_divider, fixed_divider, zener or current_sense"
                ),
            ));
            return None;
        }
    };
    let polarity = match sec.polarity.as_deref() {
        None | Some("direct") => Polarity::Direct,
        Some("inverted") => Polarity::Inverted,
        Some(other) => {
            issues.push((
                key("polarity"),
                format!("unknown polarity {other:?}; expected direct or inverted"),
            ));
            return None;
        }
    };
    let mut net = net.with_polarity(polarity);
    if let Some(sp) = sec.setpoint {
        if !(sp > 0.0 && sp.is_finite()) {
            issues.push((key("setpoint"), format!("must be > 0 (got {sp})")));
            return None;
        }
        net = net.retargeted(sp);
    }
    Some(net)
}

fn build_peaks(peaks: &[PeakSection]) -> Vec<ResonancePeak> {
    peaks
        .iter()
        .map(|p| ResonancePeak::new(p.center_freq, p.quality_q, p.peak_kappa))
        .collect()
}

fn build_load(issues: &mut Issues, sec: &LoadSection) -> Option<LoadModel> {
    let why = format!("for load kind {}", sec.kind);
    let allowed: &[&str] = match sec.kind.as_str() {
        "open" => &[],
        "cr" => &["r"],
        "cc" => &["i"],
        "cv" => &["v"],
        "battery_sim" => &["v_internal", "esr", "source_capability"],
        other => {
            issues.push((
                "load.kind".into(),
                format!("unknown load kind {other:?}; expected open, cr, cc, cv or battery_sim"),
            ));
            return None;
        }
    };
    for (k, present) in [
        ("r", sec.r.is_some()),
        ("i", sec.i.is_some()),
        ("v", sec.v.is_some()),
        ("v_internal", sec.v_internal.is_some()),
        ("esr", sec.esr.is_some()),
        ("source_capability", sec.source_capability.is_some()),
    ] {
        if !allowed.contains(&k) {
            unused(issues, &format!("load.{k}"), present, &why);
        }
    }
    Some(match sec.kind.as_str() {
        "open" => LoadModel::Open,
        "cr" => LoadModel::ConstantResistance {
            r: need(issues, "load.r", sec.r, &why)?,
        },
        "cc" => LoadModel::ConstantCurrent {
            i: need(issues, "load.i", sec.i, &why)?,
        },
        "cv" => LoadModel::ConstantVoltage {
            v: need(issues, "load.v", sec.v, &why)?,
        },
        _ => {
            let v = need(issues, "load.v_internal", sec.v_internal, &why);
            let esr = need(issues, "load.esr", sec.esr, &why);
            LoadModel::BatterySimRig {
                v_internal: v?,
                esr: esr?,
                source_capability: sec.source_capability.unwrap_or(1.0),
            }
        }
    })
}

fn build_battery(issues: &mut Issues, sec: &BatterySection) -> Option<BatteryState> {
    let mut p = match sec.preset.as_deref() {
        Some("18650") => CellParams::cell_18650(),
        None | Some("li_ion") => {
            CellParams::li_ion(sec.capacity.unwrap_or(3.0 * 3600.0), sec.r_esr.unwrap_or(0.05))
        }
        Some(other) => {
            issues.push((
                "battery.preset".into(),
                format!("unknown preset {other:?}; expected 18650 or li_ion"),
            ));
            return None;
        }
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut p.capacity, sec.capacity);
    set(&mut p.r_esr, sec.r_esr);
    set(&mut p.thermal_mass, sec.thermal_mass);
    set(&mut p.dissipation, sec.dissipation);
    set(&mut p.ambient, sec.ambient);
    set(&mut p.v_fail, sec.v_fail);
    set(&mut p.overcharge_heat, sec.overcharge_heat);
    set(&mut p.tau_bulge, sec.tau_bulge);
    set(&mut p.t_collapse, sec.t_collapse);
    set(&mut p.t_runaway, sec.t_runaway);
    set(&mut p.r_collapse, sec.r_collapse);
    if let Some(knots) = &sec.ocv_knots {
        match OcvCurve::new(knots.iter().map(|k| (k[0], k[1])).collect()) {
            Some(c) => p.ocv_curve = c,
            None => {
                issues.push((
                    "battery.ocv_knots".into(),
                    "need at least two knots with strictly increasing soc".into(),
                ));
                return None;
            }
        }
    }
    let mut b = BatteryState::new(p, sec.soc);
    if let Some(t) = sec.temperature {
        b.temperature = t;
    }
    Some(b)
}

fn build_fuse(sec: &FuseSection, thermal: bool) -> PptcFuse {
    let mut f = if thermal {
        PptcFuse::thermal(sec.i_trip, sec.trip_delay.unwrap_or(1.0))
    } else {
        PptcFuse::new(sec.i_trip, 0.5 * sec.i_trip, sec.trip_delay.unwrap_or(1.0))
    };
    if let Some(v) = sec.i_hold {
        f.i_hold = v;
    }
    if let Some(v) = sec.reset_delay {
        f.reset_delay = v;
    }
    if let Some(v) = sec.leakage {
        f.leakage = v;
    }
    f
}

fn build_protections(
    issues: &mut Issues,
    sec: &ProtectionSection,
    monitor_peaks: Vec<ResonancePeak>,
) -> Protections {
    let mut p = Protections::default();
    if let Some(s) = sec.shielding {
        p.shielding = s;
    }
    if let Some(f) = &sec.filter {
        let d = LowPassFilterModel::default();
        p.filter = Some(LowPassFilterModel::new(
            f.cutoff,
            f.rolloff_per_decade.unwrap_or(d.rolloff_per_decade),
            f.parasitic_floor.unwrap_or(d.parasitic_floor),
        ));
    }
    p.pptc = sec.pptc.as_ref().map(|f| build_fuse(f, false));
    p.thermal_fuse = sec.thermal_fuse.as_ref().map(|f| build_fuse(f, true));
    p.monitor = sec.monitor.as_ref().map(|m| {
        RedundantMonitor::new(m.v_trip, m.i_trip).with_coupling(CouplingProfile::new(
            InjectionPoint::ProtectionMonitor,
            monitor_peaks.clone(),
        ))
    });
    if p.monitor.is_none() && !monitor_peaks.is_empty() {
        issues.push((
            "coupling.protection_monitor".into(),
            "needs a [protection.monitor] table".into(),
        ));
    }
    if let Some(d) = &sec.detector {
        let channel = match d.channel.as_str() {
            "voltage" => Some(Channel::Voltage),
            "current" => Some(Channel::Current),
            other => {
                issues.push((
                    "protection.detector.channel".into(),
                    format!("unknown channel {other:?}; expected voltage or current"),
                ));
                None
            }
        };
        p.detector = channel.map(|channel| CrossCheckDetector {
            channel,
            threshold: d.threshold,
        });
    }
    p
}

fn build_attack(issues: &mut Issues, sec: &AttackSection) -> Option<AttackSchedule> {
    if sec.ramp.is_some() && !sec.segments.is_empty() {
        issues.push((
            "attack.ramp".into(),
            "cannot be combined with [[attack.segments]]".into(),
        ));
        return None;
    }
    let mut src = AttackSource::new(sec.frequency, 0.0, sec.distance.unwrap_or(CALIBRATION_DISTANCE));
    if let Some(g) = sec.coupling_gain {
        src.coupling_gain = g;
    }
    if let Some(r) = &sec.ramp {
        src.power_tx = sec.power.unwrap_or(r.p_end);
        return Some(AttackSchedule::Ramp {
            source: src,
            t_start: r.t_start,
            t_end: r.t_end,
            p_start: r.p_start,
            p_end: r.p_end,
        });
    }
    if !sec.segments.is_empty() {
        src.power_tx = sec
            .power
            .unwrap_or_else(|| sec.segments.iter().map(|s| s.power).fold(0.0, f64::max));
        return Some(AttackSchedule::Segments {
            source: src,
            segments: sec
                .segments
                .iter()
                .map(|s| AttackSegment {
                    start: s.start,
                    power_tx: s.power,
                })
                .collect(),
        });
    }
    src.power_tx = need(issues, "attack.power", sec.power, "for a constant attack")?;
    Some(AttackSchedule::Constant(src))
}

fn build_sweep(issues: &mut Issues, sec: &SweepSection) -> Option<SweepSpec> {
    let Some(variable) = SweepVariable::from_name(&sec.variable) else {
        issues.push((
            "sweep.variable".into(),
            format!(
                "unknown variable {:?}; expected frequency, power or distance",
                sec.variable
            ),
        ));
        return None;
    };
    let spacing = match sec.spacing.as_deref() {
        None if variable == SweepVariable::Frequency => Spacing::Log,
        None => Spacing::Linear,
        Some(s) => match Spacing::from_name(s) {
            Some(sp) => sp,
            None => {
                issues.push((
                    "sweep.spacing".into(),
                    format!("unknown spacing {s:?}; expected linear or log"),
                ));
                return None;
            }
        },
    };
    if variable == SweepVariable::Frequency {
        let d = SweepSpec::default_frequency();
        return Some(SweepSpec {
            variable,
            start: sec.start.unwrap_or(d.start),
            stop: sec.stop.unwrap_or(d.stop),
            points: sec.points.unwrap_or(d.points),
            spacing,
        });
    }
    let why = format!("for a {} sweep", variable.name());
    let start = need(issues, "sweep.start", sec.start, &why);
    let stop = need(issues, "sweep.stop", sec.stop, &why);
    Some(SweepSpec {
        variable,
        start: start?,
        stop: stop?,
        points: sec.points.unwrap_or(21),
        spacing,
    })
}

fn build_output(issues: &mut Issues, sec: Option<&OutputSection>, name: &str) -> OutputSpec {
    let mut out = OutputSpec::new(name);
    let Some(sec) = sec else {
        return out;
    };
    if let Some(t) = &sec.title {
        out.title = t.clone();
    }
    if let Some(q) = &sec.plot {
        match Quantity::from_name(q) {
            Some(q) => out.plot = q,
            None => issues.push((
                "output.plot".into(),
                format!(
                    "unknown quantity {q:?}; expected one of {}",
                    Quantity::names().join(", ")
                ),
            )),
        }
    }
    match (&sec.vary, sec.values.is_empty()) {
        (Some(v), false) => match Vary::from_name(v) {
            Some(v) => out.variants = Some((v, sec.values.clone())),
            None => issues.push((
                "output.vary".into(),
                format!("unknown knob {v:?}; expected one of {}", Vary::names().join(", ")),
            )),
        },
        (Some(_), true) => issues.push(("output.values".into(), "required when vary is set".into())),
        (None, false) => issues.push(("output.vary".into(), "required when values are given".into())),
        (None, true) => {}
    }
    out
}

fn build_calibration(issues: &mut Issues, sec: &CalibrationSection) -> Option<CalibrationRecord> {
    let metric = Metric::from_name(&sec.metric);
    if metric.is_none() {
        issues.push((
            "calibration.metric".into(),
            format!(
                "unknown metric {:?}; expected delta_i, delta_v, i_real or v_real",
                sec.metric
            ),
        ));
    }
    let point = InjectionPoint::from_name(&sec.point);
    if point.is_none() {
        issues.push((
            "calibration.point".into(),
            format!(
                "unknown injection point {:?}; expected voltage_feedback, current_feedback or protection_monitor",
                sec.point
            ),
        ));
    }
    Some(CalibrationRecord {
        target: CalibrationTarget {
            metric: metric?,
            value: sec.target,
        },
        knob: Knob {
            point: point?,
            peak: sec.peak,
        },
        kappa: sec.kappa,
        achieved: sec.achieved,
        frequency: sec.frequency,
        power: sec.power,
        distance: sec.distance,
    })
}

impl ConfigFile {
    /// Builds and validates the experiment. Returns `(key, rule)` pairs for
    /// every problem found.
    pub fn build(&self, fallback_name: &str) -> Result<Experiment, Issues> {
        let mut issues = Issues::new();
        let name = self.name.clone().unwrap_or_else(|| fallback_name.to_string());

        let topology = self.converter.as_ref().and_then(|c| {
            let t = Topology::from_name(&c.topology);
            if t.is_none() {
                issues.push((
                    "converter.topology".into(),
                    format!(
                        "unknown topology {:?}; expected buck, boost, buck_boost, sepic or isolated_flyback",
                        c.topology
                    ),
                ));
            }
            t
        });
        if self.converter.is_none() {
            issues.push(("converter".into(), "missing [converter] table".into()));
        }
        let (v_net, i_net) = match &self.feedback {
            None => {
                issues.push((
                    "feedback.voltage".into(),
                    "missing [feedback.voltage] table".into(),
                ));
                (None, None)
            }
            Some(fb) => {
                let v = build_network(&mut issues, "feedback.voltage", &fb.voltage, None);
                let i = fb
                    .current
                    .as_ref()
                    .map(|c| build_network(&mut issues, "feedback.current", c, Some("current_sense")));
                (v, i)
            }
        };

        let load = match (&self.load, &self.battery) {
            (Some(_), Some(_)) => {
                issues.push((
                    "battery".into(),
                    "give either [load] or [battery], not both".into(),
                ));
                None
            }
            (None, None) => {
                issues.push(("load".into(), "missing [load] or [battery] table".into()));
                None
            }
            (Some(l), None) => build_load(&mut issues, l),
            (None, Some(b)) => build_battery(&mut issues, b).map(LoadModel::Battery),
        };

        let v_peaks = build_peaks(&self.coupling.voltage_feedback);
        let i_peaks = build_peaks(&self.coupling.current_feedback);
        let m_peaks = build_peaks(&self.coupling.protection_monitor);
        let protections = build_protections(
            &mut issues,
            self.protection.as_ref().unwrap_or(&ProtectionSection::default()),
            m_peaks,
        );
        let attack = match &self.attack {
            Some(a) => build_attack(&mut issues, a),
            None => Some(AttackSchedule::Off),
        };
        let sweep = self.sweep.as_ref().map(|s| build_sweep(&mut issues, s));
        let timeline = self.timeline.as_ref().map(|t| Timeline {
            duration: t.duration,
            dt: t.dt.unwrap_or(1.0),
        });
        let output = build_output(&mut issues, self.output.as_ref(), &name);
        if output.plot.needs_baseline() && self.sweep.is_none() {
            issues.push((
                "output.plot".into(),
                format!("{} needs a [sweep]", output.plot.name()),
            ));
        }
        let calibration = self
            .calibration
            .as_ref()
            .map(|c| build_calibration(&mut issues, c));

        let (Some(c), Some(topology), Some(v_net), Some(load), Some(attack)) =
            (&self.converter, topology, v_net, load, attack)
        else {
            return Err(issues);
        };
        let current_network = match i_net {
            Some(Some(n)) => Some(n),
            Some(None) => return Err(issues),
            None => None,
        };
        let sweep = match sweep {
            Some(None) => return Err(issues),
            other => other.flatten(),
        };
        let calibration = match calibration {
            Some(None) => return Err(issues),
            other => other.flatten(),
        };
        let spec = ConverterSpec {
            topology,
            v_in: c.v_in,
            voltage_network: v_net,
            current_network,
            i_abs_max: c.i_abs_max,
            v_abs_max: c.v_abs_max,
        };

        let mut s = match &self.charger {
            None => Scenario::converter(name, spec, load),
            Some(ch) => {
                let mut cfg = ChargerConfig::new(ch.i_cc, ch.v_cv, ch.cells_in_series.unwrap_or(1));
                if let Some(v) = ch.i_precharge {
                    cfg.i_precharge = v;
                }
                if let Some(v) = ch.v_precharge_threshold {
                    cfg.v_precharge_threshold = v;
                }
                if let Some(v) = ch.i_terminate {
                    cfg.i_terminate = v;
                }
                cfg.power_ceiling = ch.power_ceiling;
                if let Some(v) = ch.over_voltage {
                    cfg.protections.push(ChargerProtection::OverVoltage(v));
                }
                if let Some(v) = ch.over_current {
                    cfg.protections.push(ChargerProtection::OverCurrent(v));
                }
                if let Some(v) = ch.over_temperature {
                    cfg.protections.push(ChargerProtection::OverTemperature(v));
                }
                Scenario::charger(name, cfg, spec, load)
            }
        };
        s.couplings.voltage_feedback = CouplingProfile::new(InjectionPoint::VoltageFeedback, v_peaks);
        s.couplings.current_feedback = CouplingProfile::new(InjectionPoint::CurrentFeedback, i_peaks);
        s.protections = protections;
        s.attack = attack;
        s.sweep = sweep;
        s.timeline = timeline;
        s.seed = self.seed.unwrap_or(0);
        s.calibration = calibration;

        if let Some(rec) = &s.calibration {
            let point = rec.knob.point.name();
            match s.profile(rec.knob.point).and_then(|p| p.peaks.get(rec.knob.peak)) {
                None => issues.push((
                    "calibration.peak".into(),
                    format!("coupling.{point} has no peak {}", rec.knob.peak),
                )),
                Some(p) if p.peak_kappa != rec.kappa => issues.push((
                    "calibration.kappa".into(),
                    format!("differs from coupling.{point}[{}].peak_kappa", rec.knob.peak),
                )),
                Some(_) => {}
            }
        }
        issues.extend(s.validate().into_iter().map(|v| (v.field, v.rule)));
        if issues.is_empty() {
            Ok(Experiment { scenario: s, output })
        } else {
            Err(issues)
        }
    }
}

/// Key-by-key reference of the file format, with defaults.
pub const REFERENCE: &[(&str, &str, &str, &str)] = &[
    // (key, type, default, meaning)
    (
        "name",
        "string",
        "file stem",
        "scenario name, used for output file names",
    ),
    (
        "seed",
        "integer",
        "0",
        "recorded with the scenario; runs are deterministic",
    ),
    (
        "converter.topology",
        "string",
        "required",
        "buck, boost, buck_boost, sepic or isolated_flyback",
    ),
    ("converter.v_in", "V", "required", "input voltage"),
    (
        "converter.i_abs_max",
        "A",
        "required",
        "hard output current limit",
    ),
    (
        "converter.v_abs_max",
        "V",
        "required",
        "highest output voltage the device can reach",
    ),
    ("charger.i_cc", "A", "required", "constant-current setting"),
    (
        "charger.v_cv",
        "V",
        "required",
        "constant-voltage setting per cell",
    ),
    ("charger.cells_in_series", "integer", "1", "cells in the pack"),
    ("charger.i_precharge", "A", "i_cc / 10", "precharge current"),
    (
        "charger.v_precharge_threshold",
        "V",
        "3.0",
        "per-cell voltage that ends precharge",
    ),
    (
        "charger.i_terminate",
        "A",
        "i_cc / 10",
        "CV current at which charging ends",
    ),
    (
        "charger.power_ceiling",
        "W",
        "none",
        "output power above which the charger faults",
    ),
    (
        "charger.over_voltage",
        "V",
        "none",
        "fault when the measured voltage exceeds this",
    ),
    (
        "charger.over_current",
        "A",
        "none",
        "fault when the measured current exceeds this",
    ),
    (
        "charger.over_temperature",
        "K",
        "none",
        "fault when the cell temperature exceeds this",
    ),
    (
        "feedback.voltage.kind",
        "string",
        "required",
        "adjustable_divider, fixed_divider or zener",
    ),
    (
        "feedback.voltage.polarity",
        "string",
        "direct",
        "direct or inverted",
    ),
    (
        "feedback.voltage.setpoint",
        "V",
        "none",
        "retunes the adjusted component to this output",
    ),
    (
        "feedback.voltage.beta",
        "ratio",
        "required",
        "divider ratio in (0, 1]",
    ),
    ("feedback.voltage.v_ref", "V", "required", "reference voltage"),
    ("feedback.voltage.v_z", "V", "required", "Zener drop (zener kind)"),
    (
        "feedback.current.kind",
        "string",
        "current_sense",
        "only current_sense is accepted",
    ),
    (
        "feedback.current.polarity",
        "string",
        "direct",
        "direct or inverted",
    ),
    (
        "feedback.current.setpoint",
        "A",
        "none",
        "retunes the reference to this current limit",
    ),
    ("feedback.current.shunt_r", "ohm", "required", "shunt resistance"),
    (
        "feedback.current.amp_gain",
        "ratio",
        "required",
        "sense amplifier gain",
    ),
    (
        "feedback.current.i_ref_voltage",
        "V",
        "required",
        "reference the amplified shunt voltage is compared to",
    ),
    (
        "coupling.<point>[].center_freq",
        "Hz",
        "required",
        "resonance center; <point> is voltage_feedback, current_feedback or protection_monitor",
    ),
    (
        "coupling.<point>[].quality_q",
        "ratio",
        "required",
        "resonance quality factor",
    ),
    (
        "coupling.<point>[].peak_kappa",
        "V/W",
        "required",
        "coupling coefficient at the center, signed",
    ),
    (
        "load.kind",
        "string",
        "required",
        "open, cr, cc, cv or battery_sim",
    ),
    ("load.r", "ohm", "required for cr", "resistance"),
    ("load.i", "A", "required for cc", "sink current"),
    ("load.v", "V", "required for cv", "clamp voltage"),
    (
        "load.v_internal",
        "V",
        "required for battery_sim",
        "simulated cell voltage",
    ),
    (
        "load.esr",
        "ohm",
        "required for battery_sim",
        "lead and internal resistance",
    ),
    (
        "load.source_capability",
        "A",
        "1.0",
        "current the parallel bench supply can source",
    ),
    ("battery.preset", "string", "li_ion", "li_ion or 18650"),
    ("battery.soc", "ratio", "required", "initial state of charge"),
    ("battery.temperature", "K", "ambient", "initial cell temperature"),
    ("battery.capacity", "C", "10800", "charge capacity"),
    (
        "battery.r_esr",
        "ohm",
        "0.05 (li_ion), 0.4 (18650)",
        "series resistance",
    ),
    (
        "battery.thermal_mass",
        "J/K",
        "45 (li_ion), 60 (18650)",
        "heat capacity",
    ),
    (
        "battery.dissipation",
        "W/K",
        "0.03 (li_ion), 0.005 (18650)",
        "heat loss to ambient",
    ),
    ("battery.ambient", "K", "298.15", "ambient temperature"),
    (
        "battery.v_fail",
        "V",
        "4.3",
        "open-circuit voltage where overcharge damage starts",
    ),
    (
        "battery.overcharge_heat",
        "ratio",
        "1 (li_ion), 2 (18650)",
        "heat released per watt of overcharge",
    ),
    (
        "battery.tau_bulge",
        "s",
        "600",
        "time above v_fail before the cell bulges",
    ),
    (
        "battery.t_collapse",
        "K",
        "353.15",
        "temperature at which an overcharged cell fails",
    ),
    ("battery.t_runaway", "K", "393.15", "thermal runaway temperature"),
    (
        "battery.r_collapse",
        "V/s",
        "0.1",
        "voltage collapse rate after failure",
    ),
    (
        "battery.ocv_knots",
        "[[soc, V]]",
        "preset curve",
        "open-circuit voltage curve, linear between knots",
    ),
    (
        "protection.shielding",
        "ratio",
        "1.0",
        "scale on every coupling coefficient",
    ),
    ("protection.filter.cutoff", "Hz", "required", "low-pass corner"),
    (
        "protection.filter.rolloff_per_decade",
        "dB",
        "20",
        "attenuation slope above the corner",
    ),
    (
        "protection.filter.parasitic_floor",
        "dB",
        "40",
        "largest attenuation reached",
    ),
    ("protection.pptc.i_trip", "A", "required", "trip current"),
    (
        "protection.pptc.i_hold",
        "A",
        "i_trip / 2",
        "current below which a tripped fuse cools",
    ),
    (
        "protection.pptc.trip_delay",
        "s",
        "1.0",
        "time at or above i_trip before tripping",
    ),
    (
        "protection.pptc.reset_delay",
        "s",
        "10",
        "time below i_hold before resetting",
    ),
    (
        "protection.pptc.leakage",
        "A",
        "0.001",
        "current passed while tripped",
    ),
    (
        "protection.thermal_fuse.*",
        "",
        "",
        "same keys as protection.pptc; never resets",
    ),
    (
        "protection.monitor.v_trip",
        "V",
        "required",
        "voltage that latches the monitor open",
    ),
    (
        "protection.monitor.i_trip",
        "A",
        "required",
        "current that latches the monitor open",
    ),
    (
        "protection.detector.channel",
        "string",
        "required",
        "voltage or current",
    ),
    (
        "protection.detector.threshold",
        "V or A",
        "required",
        "disagreement that raises an event",
    ),
    ("attack.frequency", "Hz", "required", "carrier frequency"),
    (
        "attack.power",
        "W",
        "required for a constant attack",
        "transmit power; for ramps and segments the power a sweep uses",
    ),
    ("attack.distance", "m", "0.3", "antenna distance"),
    ("attack.coupling_gain", "ratio", "1.0", "antenna gain factor"),
    (
        "attack.ramp.t_start",
        "s",
        "required",
        "ramp start; attack off before",
    ),
    ("attack.ramp.t_end", "s", "required", "ramp end; power held after"),
    ("attack.ramp.p_start", "W", "required", "power at t_start"),
    ("attack.ramp.p_end", "W", "required", "power at t_end"),
    (
        "attack.segments[].start",
        "s",
        "required",
        "segment start; attack off before the first",
    ),
    ("attack.segments[].power", "W", "required", "power from start on"),
    (
        "sweep.variable",
        "string",
        "required",
        "frequency, power or distance",
    ),
    ("sweep.start", "Hz, W or m", "50e6 for frequency", "first value"),
    ("sweep.stop", "Hz, W or m", "3e9 for frequency", "last value"),
    (
        "sweep.points",
        "integer",
        "2048 for frequency, else 21",
        "number of values",
    ),
    (
        "sweep.spacing",
        "string",
        "log for frequency, else linear",
        "linear or log",
    ),
    ("timeline.duration", "s", "required", "simulated time"),
    ("timeline.dt", "s", "1.0", "step"),
    ("output.title", "string", "name", "plot title"),
    ("output.plot", "string", "v_real", "plotted quantity"),
    (
        "output.vary",
        "string",
        "none",
        "knob varied across plotted series",
    ),
    (
        "output.values",
        "[float]",
        "none",
        "values of the varied knob, one series each",
    ),
    (
        "calibration.*",
        "",
        "",
        "written by calibrate; kappa must match the named peak",
    ),
];

/// Markdown reference page for the file format.
pub fn reference_markdown() -> String {
    let mut s = String::from(
        "# Scenario file reference\n\n\
         Regenerate with `iemisim reference`. Units are SI; temperatures are kelvin.\n\
         Unknown keys are rejected.\n\n\
         | key | unit | default | meaning |\n|---|---|---|---|\n",
    );
    for (key, unit, default, meaning) in REFERENCE {
        s.push_str(&format!("| `{key}` | {unit} | {default} | {meaning} |\n"));
    }
    s.push_str(&format!(
        "\nPlot quantities: {}.\n\nVariant knobs: {}.\n",
        Quantity::names().join(", "),
        Vary::names().join(", ")
    ));
    s
}
