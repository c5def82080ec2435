//! CC-CV charger state machine. Every decision is taken on measured values.

use crate::equilibrium::RegulationCommand;
use crate::model::Violation;

/// Slack on threshold comparisons so a loop regulating exactly to a
/// threshold is seen as having reached it.
const THRESHOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargerProtection {
    OverVoltage(f64),
    OverCurrent(f64),
    OverTemperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultReason {
    OverVoltage,
    OverCurrent,
    OverTemperature,
    /// Commanded power above the charger's ceiling; the device reboots.
    Overload,
}

impl FaultReason {
    pub fn name(self) -> &'static str {
        match self {
            FaultReason::OverVoltage => "over_voltage",
            FaultReason::OverCurrent => "over_current",
            FaultReason::OverTemperature => "over_temperature",
            FaultReason::Overload => "overload",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChargerPhase {
    Idle,
    Precharge,
    ConstantCurrent,
    ConstantVoltage,
    Done,
    Faulted(FaultReason),
}

impl ChargerPhase {
    pub fn name(self) -> &'static str {
        match self {
            ChargerPhase::Idle => "idle",
            ChargerPhase::Precharge => "precharge",
            ChargerPhase::ConstantCurrent => "cc",
            ChargerPhase::ConstantVoltage => "cv",
            ChargerPhase::Done => "done",
            ChargerPhase::Faulted(_) => "faulted",
        }
    }

    /// Label including the fault reason, e.g. `faulted:overload`.
    pub fn label(self) -> String {
        match self {
            ChargerPhase::Faulted(r) => format!("faulted:{}", r.name()),
            p => p.name().to_string(),
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, ChargerPhase::Done | ChargerPhase::Faulted(_))
    }

    /// Whether `self -> next` is an allowed edge (staying put is allowed).
    pub fn can_transition_to(self, next: ChargerPhase) -> bool {
        use ChargerPhase::*;
        if self == next || matches!(next, Faulted(_)) {
            return true;
        }
        matches!(
            (self, next),
            (Idle, Precharge)
                | (Idle, ConstantCurrent)
                | (Precharge, ConstantCurrent)
                | (ConstantCurrent, ConstantVoltage)
                | (ConstantVoltage, Done)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargerConfig {
    pub i_precharge: f64,
    /// Per cell.
    pub v_precharge_threshold: f64,
    pub i_cc: f64,
    /// Per cell.
    pub v_cv: f64,
    pub i_terminate: f64,
    pub cells_in_series: u32,
    pub protections: Vec<ChargerProtection>,
    /// Output power above which the charger reboots.
    pub power_ceiling: Option<f64>,
}

impl ChargerConfig {
    pub fn new(i_cc: f64, v_cv: f64, cells_in_series: u32) -> Self {
        Self {
            i_precharge: i_cc / 10.0,
            v_precharge_threshold: 3.0,
            i_cc,
            v_cv,
            i_terminate: i_cc / 10.0,
            cells_in_series,
            protections: Vec::new(),
            power_ceiling: None,
        }
    }

    pub fn cells(&self) -> f64 {
        f64::from(self.cells_in_series)
    }

    pub fn pack_cv_voltage(&self) -> f64 {
        self.v_cv * self.cells()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (field, v) in [
            ("charger.i_precharge", self.i_precharge),
            ("charger.v_precharge_threshold", self.v_precharge_threshold),
            ("charger.i_cc", self.i_cc),
            ("charger.v_cv", self.v_cv),
            ("charger.i_terminate", self.i_terminate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(field, format!("must be > 0 (got {v})")));
            }
        }
        if self.cells_in_series == 0 {
            out.push(Violation::new("charger.cells_in_series", "must be >= 1"));
        }
        if !(self.i_precharge < self.i_cc) {
            out.push(Violation::new("charger.i_precharge", "must be < i_cc"));
        }
        if !(self.i_terminate < self.i_cc) {
            out.push(Violation::new("charger.i_terminate", "must be < i_cc"));
        }
        if !(self.v_precharge_threshold < self.v_cv) {
            out.push(Violation::new("charger.v_precharge_threshold", "must be < v_cv"));
        }
        if let Some(p) = self.power_ceiling {
            if !(p > 0.0) {
                out.push(Violation::new("charger.power_ceiling", "must be > 0"));
            }
        }
        out
    }
}

/// Command issued while in `phase`.
pub fn phase_command(cfg: &ChargerConfig, phase: ChargerPhase) -> RegulationCommand {
    match phase {
        ChargerPhase::Precharge => RegulationCommand::new(cfg.pack_cv_voltage(), cfg.i_precharge),
        ChargerPhase::ConstantCurrent | ChargerPhase::ConstantVoltage => {
            RegulationCommand::new(cfg.pack_cv_voltage(), cfg.i_cc)
        }
        ChargerPhase::Idle | ChargerPhase::Done | ChargerPhase::Faulted(_) => RegulationCommand::OFF,
    }
}

fn tripped(cfg: &ChargerConfig, v: f64, i: f64, t: f64) -> Option<FaultReason> {
    cfg.protections.iter().find_map(|p| match *p {
        ChargerProtection::OverVoltage(lim) if v > lim => Some(FaultReason::OverVoltage),
        ChargerProtection::OverCurrent(lim) if i > lim => Some(FaultReason::OverCurrent),
        ChargerProtection::OverTemperature(lim) if t > lim => Some(FaultReason::OverTemperature),
        _ => None,
    })
}

/// Advances the charger by one decision. Returns the new phase and the
/// command for that phase.
pub fn charger_step(
    cfg: &ChargerConfig,
    phase: ChargerPhase,
    v_measured: f64,
    i_measured: f64,
    t_measured: f64,
) -> (ChargerPhase, RegulationCommand) {
    if let ChargerPhase::Faulted(_) = phase {
        return (phase, RegulationCommand::OFF);
    }
    if let Some(reason) = tripped(cfg, v_measured, i_measured, t_measured) {
        return (ChargerPhase::Faulted(reason), RegulationCommand::OFF);
    }

    let cells = cfg.cells();
    let reached = |threshold: f64| v_measured >= threshold - THRESHOLD_TOL;
    let next = match phase {
        ChargerPhase::Idle => {
            if reached(cfg.v_precharge_threshold * cells) {
                ChargerPhase::ConstantCurrent
            } else {
                ChargerPhase::Precharge
            }
        }
        ChargerPhase::Precharge if reached(cfg.v_precharge_threshold * cells) => {
            ChargerPhase::ConstantCurrent
        }
        ChargerPhase::ConstantCurrent if reached(cfg.v_cv * cells) => ChargerPhase::ConstantVoltage,
        ChargerPhase::ConstantVoltage if i_measured <= cfg.i_terminate + THRESHOLD_TOL => ChargerPhase::Done,
        p => p,
    };
    (next, phase_command(cfg, next))
}
