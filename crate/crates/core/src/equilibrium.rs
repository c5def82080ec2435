//! Quasi-static operating point of a regulated converter under attack.
//!
//! The regulator holds `measure(out) + polarity * v_attack = V_ref`, so each
//! loop regulates to `f_M^-1(V_ref - polarity * v_attack)`. A CC-CV supply
//! outputs the highest voltage that keeps both the voltage and the current
//! below their (attacked) limits.

use crate::error::SolveError;
use crate::model::{ConverterSpec, FeedbackNetwork, LimitingMode, LoadModel, OperatingPoint};

/// Attacked regulation limits, before topology saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulationCommand {
    pub v_limit_effective: f64,
    pub i_limit_effective: f64,
}

impl RegulationCommand {
    pub const OFF: RegulationCommand = RegulationCommand {
        v_limit_effective: 0.0,
        i_limit_effective: 0.0,
    };

    pub fn new(v: f64, i: f64) -> Self {
        Self {
            v_limit_effective: v,
            i_limit_effective: i,
        }
    }

    pub fn is_off(&self) -> bool {
        self.v_limit_effective <= 0.0 || self.i_limit_effective <= 0.0
    }
}

/// Applies the network's measurement function to a real output value.
pub fn measure(network: &FeedbackNetwork, real_value: f64) -> f64 {
    network.transfer(real_value)
}

/// Output value the loop settles to when `v_attack` is injected at the
/// comparison point.
pub fn regulated_setpoint(network: &FeedbackNetwork, v_attack: f64) -> Result<f64, SolveError> {
    let target = network.reference() - network.polarity.sign() * v_attack;
    let setpoint = network.inverse(target);
    if setpoint < 0.0 || !setpoint.is_finite() {
        return Err(SolveError::ShutdownSignal { setpoint });
    }
    Ok(setpoint)
}

/// Attacked voltage and current limits. Without a current loop the current
/// limit is the device's absolute maximum.
pub fn effective_command(
    spec: &ConverterSpec,
    v_attack_voltage: f64,
    v_attack_current: f64,
) -> Result<RegulationCommand, SolveError> {
    let v = regulated_setpoint(&spec.voltage_network, v_attack_voltage)?;
    let i = match &spec.current_network {
        Some(net) => regulated_setpoint(net, v_attack_current)?,
        None => spec.i_abs_max,
    };
    Ok(RegulationCommand::new(v, i))
}

/// Solves the steady state of `spec` driving `load`.
///
/// The voltage limit is tried first; if the load would then draw more
/// than the current limit the point moves down the load line to the
/// current limit. Exact ties report `CurrentLimited`.
pub fn solve_operating_point(
    spec: &ConverterSpec,
    load: &LoadModel,
    v_attack_voltage: f64,
    v_attack_current: f64,
) -> Result<OperatingPoint, SolveError> {
    let cmd = effective_command(spec, v_attack_voltage, v_attack_current)?;
    let (lo, hi) = spec.output_window();

    let v_clamped = cmd.v_limit_effective > hi;
    let v_target = cmd.v_limit_effective.min(hi);
    let abs_binding = cmd.i_limit_effective >= spec.i_abs_max;
    let i_target = cmd.i_limit_effective.min(spec.i_abs_max);

    let voltage_mode = if v_clamped {
        LimitingMode::Saturated
    } else {
        LimitingMode::VoltageLimited
    };
    let current_mode = if abs_binding {
        LimitingMode::Overloaded
    } else {
        LimitingMode::CurrentLimited
    };

    let (mut v, mut i, mut mode) = match *load {
        LoadModel::Open => (v_target, 0.0, voltage_mode),
        LoadModel::ConstantResistance { r } => {
            let i_v = v_target / r;
            if i_v < i_target {
                (v_target, i_v, voltage_mode)
            } else {
                (i_target * r, i_target, current_mode)
            }
        }
        LoadModel::ConstantCurrent { i: demand } => {
            if demand < i_target {
                (v_target, demand, voltage_mode)
            } else {
                // The load takes everything offered and the output collapses.
                (0.0, i_target, current_mode)
            }
        }
        LoadModel::ConstantVoltage { v: clamp } => {
            if v_target < clamp {
                return Err(SolveError::NoOperatingPoint(format!(
                    "CV load at {clamp} V is above the voltage limit {v_target} V"
                )));
            }
            (clamp, i_target, current_mode)
        }
        LoadModel::Battery(ref b) => {
            thevenin(b.ocv(), b.r_esr(), v_target, i_target, voltage_mode, current_mode)
        }
        LoadModel::BatterySimRig { v_internal, esr, .. } => {
            thevenin(v_internal, esr, v_target, i_target, voltage_mode, current_mode)
        }
    };

    if v < lo {
        // Boost floor: the input passes straight through to the output.
        i = load_current_at(load, lo).ok_or_else(|| {
            SolveError::NoOperatingPoint(format!(
                "load clamps below the {lo} V minimum output of this topology"
            ))
        })?;
        v = lo;
        mode = LimitingMode::Saturated;
    }

    let v_measured = spec.voltage_network.perceived(v, v_attack_voltage);
    let i_measured = match &spec.current_network {
        Some(net) => net.perceived(i, v_attack_current),
        None => i,
    };
    Ok(OperatingPoint {
        v_real: v,
        i_real: i,
        v_measured,
        i_measured,
        limiting_mode: mode,
    })
}

fn thevenin(
    emf: f64,
    r: f64,
    v_target: f64,
    i_target: f64,
    voltage_mode: LimitingMode,
    current_mode: LimitingMode,
) -> (f64, f64, LimitingMode) {
    let i_v = (v_target - emf) / r;
    if i_v < 0.0 {
        // The supply cannot sink current; the cell sits at open circuit.
        (emf, 0.0, LimitingMode::Saturated)
    } else if i_v < i_target {
        (v_target, i_v, voltage_mode)
    } else {
        (emf + i_target * r, i_target, current_mode)
    }
}

/// Current drawn by the load at a fixed terminal voltage; `None` where the
/// load would clamp the voltage below `v`.
fn load_current_at(load: &LoadModel, v: f64) -> Option<f64> {
    match *load {
        LoadModel::Open => Some(0.0),
        LoadModel::ConstantResistance { r } => Some(v / r),
        LoadModel::ConstantCurrent { i } => Some(i),
        LoadModel::ConstantVoltage { v: clamp } => (clamp >= v).then_some(0.0),
        LoadModel::Battery(ref b) => Some(((v - b.ocv()) / b.r_esr()).max(0.0)),
        LoadModel::BatterySimRig { v_internal, esr, .. } => Some(((v - v_internal) / esr).max(0.0)),
    }
}
