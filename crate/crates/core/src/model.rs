//! Shared domain types: feedback networks, converter descriptions, loads,
//! solved operating points and attacker transmissions.
//!
//! All quantities are SI base units (volts, amps, ohms, watts, hertz,
//! meters, seconds, kelvin). Types are plain values and `Send + Sync`.

use std::fmt;

use crate::battery::BatteryState;

/// Sign convention at the comparison point.
///
/// `Inverted` models opto-coupled feedback where the feedback signal falls
/// as the output rises, so the same injected offset moves the output the
/// other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarity {
    #[default]
    Direct,
    Inverted,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Direct => 1.0,
            Polarity::Inverted => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            1 => Some(Polarity::Direct),
            -1 => Some(Polarity::Inverted),
            _ => None,
        }
    }
}

/// Measurement function mapping the real output to the value compared
/// against the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackKind {
    /// Resistive divider whose ratio sets the output; fixed reference.
    AdjustableDivider { beta: f64, v_ref: f64 },
    /// Fixed divider; the reference is what gets adjusted.
    FixedDividerAdjustableRef { beta: f64, v_ref: f64 },
    /// Zener drop feeding the comparator (typical of opto-coupled supplies).
    ZenerDrop { v_z: f64, v_ref: f64 },
    /// Shunt resistor plus amplifier, compared against a settable reference.
    CurrentSense {
        shunt_r: f64,
        amp_gain: f64,
        i_ref_voltage: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackNetwork {
    pub kind: FeedbackKind,
    pub polarity: Polarity,
}

impl FeedbackNetwork {
    pub fn new(kind: FeedbackKind) -> Self {
        Self {
            kind,
            polarity: Polarity::Direct,
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn adjustable_divider(beta: f64, v_ref: f64) -> Self {
        Self::new(FeedbackKind::AdjustableDivider { beta, v_ref })
    }

    pub fn fixed_divider(beta: f64, v_ref: f64) -> Self {
        Self::new(FeedbackKind::FixedDividerAdjustableRef { beta, v_ref })
    }

    pub fn zener(v_z: f64, v_ref: f64) -> Self {
        Self::new(FeedbackKind::ZenerDrop { v_z, v_ref })
    }

    pub fn current_sense(shunt_r: f64, amp_gain: f64, i_ref_voltage: f64) -> Self {
        Self::new(FeedbackKind::CurrentSense {
            shunt_r,
            amp_gain,
            i_ref_voltage,
        })
    }

    /// The measurement function f_M applied to a real output value.
    pub fn transfer(&self, real: f64) -> f64 {
        match self.kind {
            FeedbackKind::AdjustableDivider { beta, .. }
            | FeedbackKind::FixedDividerAdjustableRef { beta, .. } => beta * real,
            FeedbackKind::ZenerDrop { v_z, .. } => real - v_z,
            FeedbackKind::CurrentSense {
                shunt_r, amp_gain, ..
            } => amp_gain * shunt_r * real,
        }
    }

    /// Inverse of [`transfer`](Self::transfer), without range checks.
    pub fn inverse(&self, measured: f64) -> f64 {
        match self.kind {
            FeedbackKind::AdjustableDivider { beta, .. }
            | FeedbackKind::FixedDividerAdjustableRef { beta, .. } => measured / beta,
            FeedbackKind::ZenerDrop { v_z, .. } => measured + v_z,
            FeedbackKind::CurrentSense {
                shunt_r, amp_gain, ..
            } => measured / (amp_gain * shunt_r),
        }
    }

    /// d f_M / d(real); every supported network is affine.
    pub fn slope(&self) -> f64 {
        match self.kind {
            FeedbackKind::AdjustableDivider { beta, .. }
            | FeedbackKind::FixedDividerAdjustableRef { beta, .. } => beta,
            FeedbackKind::ZenerDrop { .. } => 1.0,
            FeedbackKind::CurrentSense {
                shunt_r, amp_gain, ..
            } => amp_gain * shunt_r,
        }
    }

    pub fn reference(&self) -> f64 {
        match self.kind {
            FeedbackKind::AdjustableDivider { v_ref, .. }
            | FeedbackKind::FixedDividerAdjustableRef { v_ref, .. }
            | FeedbackKind::ZenerDrop { v_ref, .. } => v_ref,
            FeedbackKind::CurrentSense { i_ref_voltage, .. } => i_ref_voltage,
        }
    }

    /// Unattacked regulation target in output units.
    pub fn nominal_setpoint(&self) -> f64 {
        self.inverse(self.reference())
    }

    /// Output value the device believes it has when the real output is
    /// `real` and `v_attack` is injected at the comparison point.
    pub fn perceived(&self, real: f64, v_attack: f64) -> f64 {
        self.inverse(self.transfer(real) + self.polarity.sign() * v_attack)
    }

    /// Re-tunes the component a user adjusts on this kind of network so
    /// that the nominal setpoint becomes `setpoint`.
    ///
    /// Adjustable dividers change ratio, fixed dividers and shunt sensors
    /// change reference, Zener networks change the diode.
    pub fn retargeted(&self, setpoint: f64) -> Self {
        let kind = match self.kind {
            FeedbackKind::AdjustableDivider { v_ref, .. } => FeedbackKind::AdjustableDivider {
                beta: v_ref / setpoint,
                v_ref,
            },
            FeedbackKind::FixedDividerAdjustableRef { beta, .. } => FeedbackKind::FixedDividerAdjustableRef {
                beta,
                v_ref: beta * setpoint,
            },
            FeedbackKind::ZenerDrop { v_ref, .. } => FeedbackKind::ZenerDrop {
                v_z: setpoint - v_ref,
                v_ref,
            },
            FeedbackKind::CurrentSense {
                shunt_r, amp_gain, ..
            } => FeedbackKind::CurrentSense {
                shunt_r,
                amp_gain,
                i_ref_voltage: amp_gain * shunt_r * setpoint,
            },
        };
        Self {
            kind,
            polarity: self.polarity,
        }
    }

    pub fn is_current_sense(&self) -> bool {
        matches!(self.kind, FeedbackKind::CurrentSense { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Buck,
    Boost,
    BuckBoost,
    Sepic,
    IsolatedFlyback,
}

impl Topology {
    pub const ALL: [Topology; 5] = [
        Topology::Buck,
        Topology::Boost,
        Topology::BuckBoost,
        Topology::Sepic,
        Topology::IsolatedFlyback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Buck => "buck",
            Topology::Boost => "boost",
            Topology::BuckBoost => "buck_boost",
            Topology::Sepic => "sepic",
            Topology::IsolatedFlyback => "isolated_flyback",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterSpec {
    pub topology: Topology,
    pub v_in: f64,
    pub voltage_network: FeedbackNetwork,
    pub current_network: Option<FeedbackNetwork>,
    /// Hard device current limit; output plateaus here.
    pub i_abs_max: f64,
    pub v_abs_max: f64,
}

impl ConverterSpec {
    /// Range the output voltage can physically reach, `(low, high)`.
    pub fn output_window(&self) -> (f64, f64) {
        match self.topology {
            Topology::Buck => (0.0, self.v_in.min(self.v_abs_max)),
            Topology::Boost => (self.v_in, self.v_abs_max),
            Topology::BuckBoost | Topology::Sepic | Topology::IsolatedFlyback => (0.0, self.v_abs_max),
        }
    }

    pub fn with_voltage_setpoint(mut self, volts: f64) -> Self {
        self.voltage_network = self.voltage_network.retargeted(volts);
        self
    }

    /// No-op when the converter has no current loop.
    pub fn with_current_setpoint(mut self, amps: f64) -> Self {
        self.current_network = self.current_network.map(|n| n.retargeted(amps));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadModel {
    Open,
    ConstantResistance {
        r: f64,
    },
    ConstantCurrent {
        i: f64,
    },
    ConstantVoltage {
        v: f64,
    },
    Battery(BatteryState),
    /// Electronic load in CV mode behind lead resistance, with a small
    /// bench supply in parallel so the rig shows a voltage when idle.
    BatterySimRig {
        v_internal: f64,
        esr: f64,
        source_capability: f64,
    },
}

impl LoadModel {
    /// Voltage seen at the terminals with no converter current.
    pub fn open_circuit_voltage(&self) -> f64 {
        match self {
            LoadModel::Open | LoadModel::ConstantResistance { .. } => 0.0,
            LoadModel::ConstantCurrent { .. } => 0.0,
            LoadModel::ConstantVoltage { v } => *v,
            LoadModel::Battery(b) => b.ocv(),
            LoadModel::BatterySimRig { v_internal, .. } => *v_internal,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadModel::Open => "open",
            LoadModel::ConstantResistance { .. } => "cr",
            LoadModel::ConstantCurrent { .. } => "cc",
            LoadModel::ConstantVoltage { .. } => "cv",
            LoadModel::Battery(_) => "battery",
            LoadModel::BatterySimRig { .. } => "battery_sim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitingMode {
    VoltageLimited,
    CurrentLimited,
    Saturated,
    Overloaded,
}

impl LimitingMode {
    pub fn name(self) -> &'static str {
        match self {
            LimitingMode::VoltageLimited => "voltage_limited",
            LimitingMode::CurrentLimited => "current_limited",
            LimitingMode::Saturated => "saturated",
            LimitingMode::Overloaded => "overloaded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_real: f64,
    pub i_real: f64,
    pub v_measured: f64,
    pub i_measured: f64,
    pub limiting_mode: LimitingMode,
}

/// One attacker transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSource {
    pub frequency: f64,
    /// Transmit power P_T.
    pub power_tx: f64,
    pub distance: f64,
    /// Aggregate antenna/geometry constant G in `P_R = G * P_T / d^2`.
    pub coupling_gain: f64,
}

impl AttackSource {
    pub fn new(frequency: f64, power_tx: f64, distance: f64) -> Self {
        Self {
            frequency,
            power_tx,
            distance,
            coupling_gain: 1.0,
        }
    }

    pub fn with_power(mut self, watts: f64) -> Self {
        self.power_tx = watts;
        self
    }

    pub fn with_distance(mut self, meters: f64) -> Self {
        self.distance = meters;
        self
    }

    pub fn with_frequency(mut self, hertz: f64) -> Self {
        self.frequency = hertz;
        self
    }
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// One broken invariant: which field, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

// NaN fails every comparison, so each check is written as `!(valid)`.
fn check_positive(out: &mut Vec<Violation>, field: &str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::new(field, format!("must be > 0 (got {value})")));
    }
}

fn check_network(out: &mut Vec<Violation>, prefix: &str, net: &FeedbackNetwork) {
    match net.kind {
        FeedbackKind::AdjustableDivider { beta, v_ref }
        | FeedbackKind::FixedDividerAdjustableRef { beta, v_ref } => {
            if !(beta > 0.0 && beta <= 1.0) {
                out.push(Violation::new(format!("{prefix}.beta"), "beta must be in (0,1]"));
            }
            check_positive(out, &format!("{prefix}.v_ref"), v_ref);
        }
        FeedbackKind::ZenerDrop { v_z, v_ref } => {
            if !(v_z >= 0.0 && v_z.is_finite()) {
                out.push(Violation::new(format!("{prefix}.v_z"), "v_z must be >= 0"));
            }
            check_positive(out, &format!("{prefix}.v_ref"), v_ref);
        }
        FeedbackKind::CurrentSense {
            shunt_r,
            amp_gain,
            i_ref_voltage,
        } => {
            check_positive(out, &format!("{prefix}.shunt_r"), shunt_r);
            check_positive(out, &format!("{prefix}.amp_gain"), amp_gain);
            check_positive(out, &format!("{prefix}.i_ref_voltage"), i_ref_voltage);
        }
    }
}

/// Lists every broken invariant of a converter description. Never fails;
/// an empty list means the spec is valid.
pub fn validate_spec(spec: &ConverterSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    check_positive(&mut out, "converter.v_in", spec.v_in);
    check_positive(&mut out, "converter.i_abs_max", spec.i_abs_max);
    check_positive(&mut out, "converter.v_abs_max", spec.v_abs_max);

    check_network(&mut out, "feedback.voltage", &spec.voltage_network);
    if spec.voltage_network.is_current_sense() {
        out.push(Violation::new(
            "feedback.voltage",
            "voltage feedback cannot be a current-sense network",
        ));
    }
    if let Some(net) = &spec.current_network {
        check_network(&mut out, "feedback.current", net);
        if !net.is_current_sense() {
            out.push(Violation::new(
                "feedback.current",
                "current feedback must be a current-sense network",
            ));
        }
    }

    let v_set = spec.voltage_network.nominal_setpoint();
    if v_set.is_finite() {
        match spec.topology {
            Topology::Buck if v_set > spec.v_in => out.push(Violation::new(
                "converter.topology",
                format!(
                    "buck saturation: voltage setpoint {v_set} V exceeds input {} V",
                    spec.v_in
                ),
            )),
            Topology::Boost if v_set < spec.v_in => out.push(Violation::new(
                "converter.topology",
                format!(
                    "boost saturation: voltage setpoint {v_set} V below input {} V",
                    spec.v_in
                ),
            )),
            _ => {}
        }
        if v_set > spec.v_abs_max {
            out.push(Violation::new(
                "converter.v_abs_max",
                format!(
                    "voltage setpoint {v_set} V exceeds v_abs_max {} V",
                    spec.v_abs_max
                ),
            ));
        }
    }
    out
}

/// Lists broken invariants of a load description.
pub fn validate_load(load: &LoadModel) -> Vec<Violation> {
    let mut out = Vec::new();
    match load {
        LoadModel::Open => {}
        LoadModel::ConstantResistance { r } => check_positive(&mut out, "load.r", *r),
        LoadModel::ConstantCurrent { i } => check_positive(&mut out, "load.i", *i),
        LoadModel::ConstantVoltage { v } => check_positive(&mut out, "load.v", *v),
        LoadModel::Battery(b) => out.extend(b.validate()),
        LoadModel::BatterySimRig {
            v_internal,
            esr,
            source_capability,
        } => {
            check_positive(&mut out, "load.v_internal", *v_internal);
            check_positive(&mut out, "load.esr", *esr);
            check_positive(&mut out, "load.source_capability", *source_capability);
        }
    }
    out
}

/// Transmit power may be zero (attack off); everything else must be positive.
pub fn validate_attack(src: &AttackSource) -> Vec<Violation> {
    let mut out = Vec::new();
    check_positive(&mut out, "attack.frequency", src.frequency);
    if !(src.power_tx >= 0.0 && src.power_tx.is_finite()) {
        out.push(Violation::new("attack.power", "must be >= 0"));
    }
    check_positive(&mut out, "attack.distance", src.distance);
    check_positive(&mut out, "attack.coupling_gain", src.coupling_gain);
    out
}
