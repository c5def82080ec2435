use super::{evaluate_point, Scenario};
use crate::coupling::InjectionPoint;
use crate::error::{CalibrationError, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Attacked minus unattacked real current.
    DeltaCurrent,
    /// Attacked minus unattacked real voltage.
    DeltaVoltage,
    Current,
    Voltage,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::DeltaCurrent => "delta_i",
            Metric::DeltaVoltage => "delta_v",
            Metric::Current => "i_real",
            Metric::Voltage => "v_real",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Self::DeltaCurrent,
            Self::DeltaVoltage,
            Self::Current,
            Self::Voltage,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub metric: Metric,
    pub value: f64,
}

/// Which coupling constant to adjust: peak `peak` of the profile at `point`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Knob {
    pub point: InjectionPoint,
    pub peak: usize,
}

/// How a coupling constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationRecord {
    pub target: CalibrationTarget,
    pub knob: Knob,
    pub kappa: f64,
    pub achieved: f64,
    pub frequency: f64,
    pub power: f64,
    pub distance: f64,
}

/// Metric at the scenario's attack source.
pub fn evaluate_metric(s: &Scenario, metric: Metric) -> Result<f64, ScenarioError> {
    let src = s
        .attack
        .base_source()
        .ok_or_else(|| ScenarioError::Invalid("calibration needs an attack source".into()))?;
    let hit = evaluate_point(s, Some(&src), 0.0);
    let value = match metric {
        Metric::Current | Metric::Voltage => 0.0,
        Metric::DeltaCurrent | Metric::DeltaVoltage => {
            let base = evaluate_point(s, None, 0.0);
            match metric {
                Metric::DeltaCurrent => base.i_real,
                _ => base.v_real,
            }
        }
    };
    Ok(match metric {
        Metric::Current | Metric::DeltaCurrent => hit.i_real - value,
        Metric::Voltage | Metric::DeltaVoltage => hit.v_real - value,
    })
}

fn with_kappa(s: &Scenario, knob: Knob, kappa: f64) -> Result<Scenario, CalibrationError> {
    let mut out = s.clone();
    let missing = || CalibrationError::MissingKnob {
        point: knob.point.name().to_string(),
        peak: knob.peak,
    };
    let peak = out
        .profile_mut(knob.point)
        .ok_or_else(missing)?
        .peaks
        .get_mut(knob.peak)
        .ok_or_else(missing)?;
    peak.peak_kappa = kappa;
    Ok(out)
}

/// Fits one peak coefficient so the scenario reproduces `target` at its
/// attack source, by bracketing and bisection.
pub fn calibrate_scenario(
    s: &Scenario,
    target: CalibrationTarget,
    knob: Knob,
) -> Result<Scenario, CalibrationError> {
    s.check()?;
    let src = s
        .attack
        .base_source()
        .ok_or_else(|| ScenarioError::Invalid("calibration needs an attack source".into()))?;
    let eval = |k: f64| -> Result<f64, CalibrationError> {
        Ok(evaluate_metric(&with_kappa(s, knob, k)?, target.metric)? - target.value)
    };
    let tol = 1e-4 * target.value.abs().max(1e-9);
    let finish = |kappa: f64, residual: f64| -> Result<Scenario, CalibrationError> {
        let mut out = with_kappa(s, knob, kappa)?;
        out.calibration = Some(CalibrationRecord {
            target,
            knob,
            kappa,
            achieved: residual + target.value,
            frequency: src.frequency,
            power: src.power_tx,
            distance: src.distance,
        });
        Ok(out)
    };

    let f0 = eval(0.0)?;
    if f0.abs() <= tol {
        return finish(0.0, f0);
    }

    let mut best = f0;
    let mut brackets = Vec::new();
    for sign in [1.0f64, -1.0] {
        let (mut k_prev, mut f_prev) = (0.0, f0);
        let mut k: f64 = sign * 1e-9;
        while k.abs() <= 1e6 {
            let fk = eval(k)?;
            if fk.abs() < best.abs() {
                best = fk;
            }
            if fk == 0.0 || fk.signum() != f_prev.signum() {
                brackets.push((k_prev, f_prev, k));
                break;
            }
            k_prev = k;
            f_prev = fk;
            k *= 4.0;
        }
    }
    let (mut lo, f_lo, mut hi) = match brackets.as_slice() {
        [] => {
            return Err(CalibrationError::Unreachable {
                target: target.value,
                best: best + target.value,
            })
        }
        [one] => *one,
        _ => return Err(CalibrationError::CalibrationAmbiguous),
    };

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = eval(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (kappa, residual) = {
        let (fl, fh) = (eval(lo)?, eval(hi)?);
        if fl.abs() <= fh.abs() {
            (lo, fl)
        } else {
            (hi, fh)
        }
    };
    if residual.abs() > 1e-3 * target.value.abs().max(1e-9) {
        // The relation jumps across the target (a mode change).
        return Err(CalibrationError::Unreachable {
            target: target.value,
            best: residual + target.value,
        });
    }

    // The relation must be monotone between no attack and the solution.
    let samples = (0..=16)
        .map(|j| eval(kappa * j as f64 / 16.0))
        .collect::<Result<Vec<_>, _>>()?;
    let rising = samples.windows(2).all(|w| w[1] >= w[0] - tol);
    let falling = samples.windows(2).all(|w| w[1] <= w[0] + tol);
    if !(rising || falling) {
        return Err(CalibrationError::CalibrationAmbiguous);
    }
    finish(kappa, residual)
}
