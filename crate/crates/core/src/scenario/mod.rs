//! Executable experiments: a device, its couplings, a load, optional
//! countermeasures and an attack, run as a sweep or over time.

mod calibrate;
mod sweep;
mod timeline;

pub use calibrate::{
    calibrate_scenario, evaluate_metric, CalibrationRecord, CalibrationTarget, Knob, Metric,
};
pub use sweep::{evaluate_point, run_distance_sweep, run_frequency_sweep, run_power_sweep, run_sweep};
pub use timeline::{run_charging_attack, run_time_domain, RegulatorLoop};

use crate::battery::Health;
use crate::charger::{ChargerConfig, ChargerPhase};
use crate::coupling::{attack_offset, CouplingProfile, InjectionPoint};
use crate::error::{DomainError, ScenarioError};
use crate::model::{
    validate_attack, validate_load, validate_spec, AttackSource, ConverterSpec, LimitingMode, LoadModel,
    Violation,
};
use crate::protection::{Channel, Protections};

/// Canonical close-proximity antenna distance used when calibrating
/// against an experiment that only reports "next to the device".
pub const CALIBRATION_DISTANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    Converter(ConverterSpec),
    /// Charger logic driving converter hardware. The hardware's feedback
    /// networks are retargeted to whatever the charger commands.
    Charger {
        config: ChargerConfig,
        hardware: ConverterSpec,
    },
}

impl Device {
    pub fn hardware(&self) -> &ConverterSpec {
        match self {
            Device::Converter(spec) => spec,
            Device::Charger { hardware, .. } => hardware,
        }
    }

    pub fn hardware_mut(&mut self) -> &mut ConverterSpec {
        match self {
            Device::Converter(spec) => spec,
            Device::Charger { hardware, .. } => hardware,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    pub voltage_feedback: CouplingProfile,
    pub current_feedback: CouplingProfile,
}

impl Default for Couplings {
    fn default() -> Self {
        Self {
            voltage_feedback: CouplingProfile::immune(InjectionPoint::VoltageFeedback),
            current_feedback: CouplingProfile::immune(InjectionPoint::CurrentFeedback),
        }
    }
}

/// Piecewise-constant change of transmit power starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSegment {
    pub start: f64,
    pub power_tx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSchedule {
    Off,
    Constant(AttackSource),
    /// Power steps at the listed times; zero before the first segment.
    Segments {
        source: AttackSource,
        segments: Vec<AttackSegment>,
    },
    /// Power rises linearly from `p_start` at `t_start` to `p_end` at
    /// `t_end` and holds; off before `t_start`. Sampled once per step.
    Ramp {
        source: AttackSource,
        t_start: f64,
        t_end: f64,
        p_start: f64,
        p_end: f64,
    },
}

impl AttackSchedule {
    pub fn source_at(&self, t: f64) -> Option<AttackSource> {
        match self {
            AttackSchedule::Off => None,
            AttackSchedule::Constant(src) => Some(*src),
            AttackSchedule::Segments { source, segments } => segments
                .iter()
                .rev()
                .find(|s| t >= s.start)
                .map(|s| source.with_power(s.power_tx)),
            AttackSchedule::Ramp {
                source,
                t_start,
                t_end,
                p_start,
                p_end,
            } => {
                if t < *t_start {
                    None
                } else if t >= *t_end {
                    Some(source.with_power(*p_end))
                } else {
                    let frac = (t - t_start) / (t_end - t_start);
                    Some(source.with_power(p_start + frac * (p_end - p_start)))
                }
            }
        }
    }

    /// The transmission a sweep perturbs.
    pub fn base_source(&self) -> Option<AttackSource> {
        match self {
            AttackSchedule::Off => None,
            AttackSchedule::Constant(src) => Some(*src),
            AttackSchedule::Segments { source, .. } | AttackSchedule::Ramp { source, .. } => Some(*source),
        }
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(src) = self.base_source() {
            out.extend(validate_attack(&src));
        }
        match self {
            AttackSchedule::Segments { segments, .. } => {
                if segments.windows(2).any(|w| !(w[1].start > w[0].start)) {
                    out.push(Violation::new("attack.segments", "start times must increase"));
                }
                if segments.iter().any(|s| !(s.power_tx >= 0.0)) {
                    out.push(Violation::new("attack.segments.power", "must be >= 0"));
                }
            }
            AttackSchedule::Ramp {
                t_start,
                t_end,
                p_start,
                p_end,
                ..
            } => {
                if !(t_end > t_start) {
                    out.push(Violation::new("attack.ramp", "t_end must be > t_start"));
                }
                if !(*p_start >= 0.0 && *p_end >= 0.0) {
                    out.push(Violation::new("attack.ramp", "powers must be >= 0"));
                }
            }
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    Frequency,
    Power,
    Distance,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Frequency => "frequency",
            SweepVariable::Power => "power",
            SweepVariable::Distance => "distance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Frequency, Self::Power, Self::Distance]
            .into_iter()
            .find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn name(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Linear, Self::Log].into_iter().find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    /// 50 MHz to 3 GHz, 2048 log-spaced points.
    pub fn default_frequency() -> Self {
        Self {
            variable: SweepVariable::Frequency,
            start: 50e6,
            stop: 3e9,
            points: 2048,
            spacing: Spacing::Log,
        }
    }

    /// Sweep values, exact at both ends.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        let last = (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.start;
                }
                if k == n - 1 {
                    return self.stop;
                }
                let frac = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + frac * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(frac),
                }
            })
            .collect()
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        // Transmit power may start at zero on a linear sweep.
        let start_ok = match (self.variable, self.spacing) {
            (SweepVariable::Power, Spacing::Linear) => self.start >= 0.0,
            _ => self.start > 0.0,
        };
        if !start_ok || !self.start.is_finite() {
            out.push(Violation::new("sweep.start", "must be > 0"));
        }
        if !(self.stop > self.start && self.stop.is_finite()) {
            out.push(Violation::new("sweep.stop", "must be > start"));
        }
        if self.points < 2 {
            out.push(Violation::new("sweep.points", "must be >= 2"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeline {
    pub duration: f64,
    pub dt: f64,
}

impl Timeline {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub device: Device,
    pub couplings: Couplings,
    pub load: LoadModel,
    pub protections: Protections,
    pub attack: AttackSchedule,
    pub sweep: Option<SweepSpec>,
    pub timeline: Option<Timeline>,
    pub seed: u64,
    /// Set when a coupling constant was fitted to a reported effect.
    pub calibration: Option<CalibrationRecord>,
}

impl Scenario {
    pub fn converter(name: impl Into<String>, spec: ConverterSpec, load: LoadModel) -> Self {
        Self {
            name: name.into(),
            device: Device::Converter(spec),
            couplings: Couplings::default(),
            load,
            protections: Protections::default(),
            attack: AttackSchedule::Off,
            sweep: None,
            timeline: None,
            seed: 0,
            calibration: None,
        }
    }

    pub fn charger(
        name: impl Into<String>,
        config: ChargerConfig,
        hardware: ConverterSpec,
        load: LoadModel,
    ) -> Self {
        Self {
            device: Device::Charger { config, hardware },
            ..Self::converter(name, hardware, load)
        }
    }

    pub fn profile(&self, point: InjectionPoint) -> Option<&CouplingProfile> {
        match point {
            InjectionPoint::VoltageFeedback => Some(&self.couplings.voltage_feedback),
            InjectionPoint::CurrentFeedback => Some(&self.couplings.current_feedback),
            InjectionPoint::ProtectionMonitor => self.protections.monitor.as_ref().map(|m| &m.own_coupling),
        }
    }

    pub fn profile_mut(&mut self, point: InjectionPoint) -> Option<&mut CouplingProfile> {
        match point {
            InjectionPoint::VoltageFeedback => Some(&mut self.couplings.voltage_feedback),
            InjectionPoint::CurrentFeedback => Some(&mut self.couplings.current_feedback),
            InjectionPoint::ProtectionMonitor => {
                self.protections.monitor.as_mut().map(|m| &mut m.own_coupling)
            }
        }
    }

    /// Every broken invariant across the whole scenario.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match &self.device {
            Device::Converter(spec) => out.extend(validate_spec(spec)),
            Device::Charger { config, hardware } => {
                out.extend(config.validate());
                out.extend(validate_spec(hardware));
                if hardware.current_network.is_none() {
                    out.push(Violation::new(
                        "feedback.current",
                        "a charger needs a current-sense network",
                    ));
                }
            }
        }
        out.extend(validate_load(&self.load));
        out.extend(self.protections.validate());
        out.extend(self.attack.validate());
        for (label, prof) in [
            ("coupling.voltage_feedback", &self.couplings.voltage_feedback),
            ("coupling.current_feedback", &self.couplings.current_feedback),
        ] {
            for (k, p) in prof.peaks.iter().enumerate() {
                if !(p.center_freq > 0.0) {
                    out.push(Violation::new(format!("{label}[{k}].center_freq"), "must be > 0"));
                }
                if !(p.quality_q > 0.0) {
                    out.push(Violation::new(format!("{label}[{k}].quality_q"), "must be > 0"));
                }
                if !p.peak_kappa.is_finite() {
                    out.push(Violation::new(
                        format!("{label}[{k}].peak_kappa"),
                        "must be finite",
                    ));
                }
            }
        }
        if let Some(sw) = &self.sweep {
            out.extend(sw.validate());
            if self.attack.base_source().is_none() {
                out.push(Violation::new("attack", "a sweep needs an attack source"));
            }
        }
        if let Some(tl) = &self.timeline {
            if !(tl.dt > 0.0 && tl.dt.is_finite()) {
                out.push(Violation::new("timeline.dt", "must be > 0"));
            }
            if !(tl.duration > 0.0 && tl.duration.is_finite()) {
                out.push(Violation::new("timeline.duration", "must be > 0"));
            }
        }
        if self.sweep.is_none() && self.timeline.is_none() {
            out.push(Violation::new(
                "sweep",
                "scenario needs a [sweep] or a [timeline]",
            ));
        }
        if let (Device::Charger { .. }, Some(_), None) = (&self.device, &self.timeline, &self.sweep) {
            if !matches!(self.load, LoadModel::Battery(_)) {
                out.push(Violation::new("battery", "a charging run needs a battery load"));
            }
        }
        out
    }

    pub(crate) fn check(&self) -> Result<(), ScenarioError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(
                v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    /// Offsets injected by `src` into each sensing path, after filtering
    /// and shielding.
    pub fn offsets(&self, src: Option<&AttackSource>) -> Result<Offsets, DomainError> {
        let Some(src) = src else {
            return Ok(Offsets::default());
        };
        let scale = self.protections.coupling_scale(src.frequency)?;
        let monitor = match &self.protections.monitor {
            Some(m) => attack_offset(&m.own_coupling, src)? * scale,
            None => 0.0,
        };
        Ok(Offsets {
            voltage: attack_offset(&self.couplings.voltage_feedback, src)? * scale,
            current: attack_offset(&self.couplings.current_feedback, src)? * scale,
            monitor,
        })
    }
}

/// Offsets at each injection point for one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Offsets {
    pub voltage: f64,
    pub current: f64,
    pub monitor: f64,
}

/// Something noteworthy that happened at a record.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Feedback pinned below range; regulator output cut.
    Shutdown,
    NoOperatingPoint,
    PptcTripped,
    PptcReset,
    ThermalFuseBlown,
    MonitorDisconnect,
    AttackDetected(Channel),
    PhaseChange(ChargerPhase),
    HealthChange(Health),
    Overload,
}

impl Event {
    pub fn label(&self) -> String {
        match self {
            Event::Shutdown => "shutdown".into(),
            Event::NoOperatingPoint => "no_operating_point".into(),
            Event::PptcTripped => "pptc_tripped".into(),
            Event::PptcReset => "pptc_reset".into(),
            Event::ThermalFuseBlown => "thermal_fuse_blown".into(),
            Event::MonitorDisconnect => "monitor_disconnect".into(),
            Event::AttackDetected(c) => format!("attack_detected:{}", c.name()),
            Event::PhaseChange(p) => format!("phase:{}", p.label()),
            Event::HealthChange(h) => format!("health:{}", h.name()),
            Event::Overload => "overload".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    /// Sweep value or time in seconds.
    pub x: f64,
    pub frequency: Option<f64>,
    pub power: Option<f64>,
    pub distance: Option<f64>,
    pub v_real: f64,
    pub i_real: f64,
    pub v_measured: f64,
    pub i_measured: f64,
    pub phase: Option<ChargerPhase>,
    pub mode: Option<LimitingMode>,
    pub soc: Option<f64>,
    pub temperature: Option<f64>,
    pub health: Option<Health>,
    pub events: Vec<Event>,
}

impl ScenarioRecord {
    fn blank(x: f64, src: Option<&AttackSource>) -> Self {
        Self {
            x,
            frequency: src.map(|s| s.frequency),
            power: src.map(|s| s.power_tx),
            distance: src.map(|s| s.distance),
            v_real: 0.0,
            i_real: 0.0,
            v_measured: 0.0,
            i_measured: 0.0,
            phase: None,
            mode: None,
            soc: None,
            temperature: None,
            health: None,
            events: Vec::new(),
        }
    }
}

/// Runs whatever the scenario describes: its sweep if it has one,
/// otherwise its timeline.
pub fn run(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    match (&s.sweep, &s.device) {
        (Some(_), _) => run_sweep(s),
        (None, Device::Charger { .. }) => run_charging_attack(s),
        (None, Device::Converter(_)) => run_time_domain(s),
    }
}

pub fn with_voltage_setpoint(s: &Scenario, volts: f64) -> Scenario {
    let mut out = s.clone();
    match &mut out.device {
        Device::Converter(spec) => *spec = spec.with_voltage_setpoint(volts),
        Device::Charger { config, .. } => config.v_cv = volts / config.cells(),
    }
    out
}

pub fn with_current_setpoint(s: &Scenario, amps: f64) -> Scenario {
    let mut out = s.clone();
    match &mut out.device {
        Device::Converter(spec) => *spec = spec.with_current_setpoint(amps),
        Device::Charger { config, .. } => config.i_cc = amps,
    }
    out
}

pub fn with_charge_current(s: &Scenario, amps: f64) -> Scenario {
    with_current_setpoint(s, amps)
}

pub fn with_load(s: &Scenario, load: LoadModel) -> Scenario {
    Scenario { load, ..s.clone() }
}

pub fn with_attack(s: &Scenario, attack: AttackSchedule) -> Scenario {
    Scenario { attack, ..s.clone() }
}
