use rayon::prelude::*;

use super::{Device, Event, Scenario, ScenarioRecord, SweepVariable};
use crate::charger::{phase_command, ChargerPhase};
use crate::equilibrium::solve_operating_point;
use crate::error::{ScenarioError, SolveError};
use crate::model::{AttackSource, LimitingMode, LoadModel};
use crate::protection::{monitor_step_with_offset, Channel, MonitorVerdict};

/// Static operating point of the scenario under `src`. Solver failures
/// and protection trips become events on the record rather than errors.
pub fn evaluate_point(s: &Scenario, src: Option<&AttackSource>, x: f64) -> ScenarioRecord {
    let mut rec = ScenarioRecord::blank(x, src);
    if let LoadModel::Battery(b) = &s.load {
        rec.soc = Some(b.soc);
        rec.temperature = Some(b.temperature);
        rec.health = Some(b.health);
    }
    let off = match s.offsets(src) {
        Ok(o) => o,
        Err(_) => {
            rec.events.push(Event::NoOperatingPoint);
            return rec;
        }
    };

    let (spec, is_charger) = match &s.device {
        Device::Converter(spec) => (*spec, false),
        Device::Charger { config, hardware } => {
            let cmd = phase_command(config, ChargerPhase::ConstantCurrent);
            (
                hardware
                    .with_voltage_setpoint(cmd.v_limit_effective)
                    .with_current_setpoint(cmd.i_limit_effective),
                true,
            )
        }
    };

    let op = match solve_operating_point(&spec, &s.load, off.voltage, off.current) {
        Ok(op) => op,
        Err(e) => {
            rec.events.push(match e {
                SolveError::ShutdownSignal { .. } => Event::Shutdown,
                SolveError::NoOperatingPoint(_) => Event::NoOperatingPoint,
            });
            return rec;
        }
    };
    rec.v_real = op.v_real;
    rec.i_real = op.i_real;
    rec.v_measured = op.v_measured;
    rec.i_measured = op.i_measured;
    rec.mode = Some(op.limiting_mode);
    if is_charger {
        rec.phase = Some(match op.limiting_mode {
            LimitingMode::VoltageLimited | LimitingMode::Saturated => ChargerPhase::ConstantVoltage,
            LimitingMode::CurrentLimited | LimitingMode::Overloaded => ChargerPhase::ConstantCurrent,
        });
    }

    if let Some(d) = &s.protections.detector {
        let (meas, cross) = match d.channel {
            Channel::Voltage => (op.v_measured, op.v_real),
            Channel::Current => (op.i_measured, op.i_real),
        };
        if d.detects(meas, cross) {
            rec.events.push(Event::AttackDetected(d.channel));
        }
    }
    let mut cut = false;
    if let Some(m) = &s.protections.monitor {
        let mut m = m.clone();
        if monitor_step_with_offset(&mut m, op.v_real, op.i_real, off.monitor) == MonitorVerdict::Disconnect {
            rec.events.push(Event::MonitorDisconnect);
            cut = true;
        }
    }
    for (fuse, event) in [
        (&s.protections.pptc, Event::PptcTripped),
        (&s.protections.thermal_fuse, Event::ThermalFuseBlown),
    ] {
        // A static overcurrent is sustained indefinitely.
        if let Some(f) = fuse {
            if op.i_real >= f.i_trip {
                rec.events.push(event);
                cut = true;
            }
        }
    }
    if cut {
        rec.v_real = s.load.open_circuit_voltage();
        rec.i_real = 0.0;
        rec.v_measured = spec.voltage_network.perceived(rec.v_real, off.voltage);
        rec.i_measured = match &spec.current_network {
            Some(n) => n.perceived(0.0, off.current),
            None => 0.0,
        };
    }
    rec
}

/// Runs the scenario's sweep, whichever variable it names. Points are
/// evaluated in parallel; output order follows the sweep values.
pub fn run_sweep(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    s.check()?;
    let sweep = s
        .sweep
        .ok_or_else(|| ScenarioError::Invalid("scenario has no sweep".into()))?;
    let base = s
        .attack
        .base_source()
        .ok_or_else(|| ScenarioError::Invalid("a sweep needs an attack source".into()))?;
    let values = sweep.values();
    Ok(values
        .par_iter()
        .map(|&x| {
            let src = match sweep.variable {
                SweepVariable::Frequency => base.with_frequency(x),
                SweepVariable::Power => base.with_power(x),
                SweepVariable::Distance => base.with_distance(x),
            };
            evaluate_point(s, Some(&src), x)
        })
        .collect())
}

fn run_named(s: &Scenario, want: SweepVariable) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    match s.sweep {
        Some(sw) if sw.variable == want => run_sweep(s),
        _ => Err(ScenarioError::Invalid(format!(
            "scenario is not a {} sweep",
            want.name()
        ))),
    }
}

pub fn run_frequency_sweep(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    run_named(s, SweepVariable::Frequency)
}

pub fn run_power_sweep(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    run_named(s, SweepVariable::Power)
}

pub fn run_distance_sweep(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    run_named(s, SweepVariable::Distance)
}
