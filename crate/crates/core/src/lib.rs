//! Steady-state and time-domain models of switched-mode power supplies and
//! battery chargers whose feedback sensors are offset by demodulated RF.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod charger;
pub mod coupling;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod protection;
pub mod scenario;

pub use battery::{BatteryState, CellParams, Health, OcvCurve};
pub use charger::{ChargerConfig, ChargerPhase, ChargerProtection, FaultReason};
pub use coupling::{CouplingProfile, InjectionPoint, ResonancePeak};
pub use equilibrium::{solve_operating_point, RegulationCommand};
pub use error::{CalibrationError, DomainError, ScenarioError, SolveError};
pub use model::{
    AttackSource, ConverterSpec, FeedbackKind, FeedbackNetwork, LimitingMode, LoadModel, OperatingPoint,
    Polarity, Topology, Violation,
};
pub use protection::{LowPassFilterModel, PptcFuse, Protections, RedundantMonitor};
pub use scenario::{
    run, AttackSchedule, Device, Event, Scenario, ScenarioRecord, SweepSpec, SweepVariable, Timeline,
};
