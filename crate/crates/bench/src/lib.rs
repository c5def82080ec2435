//! Shared fixtures for the criterion benches.

use iemisim_core::scenario::Spacing;
use iemisim_core::{
    AttackSchedule, AttackSource, BatteryState, CellParams, ChargerConfig, ConverterSpec, CouplingProfile,
    FeedbackNetwork, InjectionPoint, LoadModel, ResonancePeak, Scenario, SweepSpec, SweepVariable, Timeline,
    Topology,
};

pub fn supply() -> ConverterSpec {
    ConverterSpec {
        topology: Topology::Buck,
        v_in: 12.0,
        voltage_network: FeedbackNetwork::adjustable_divider(0.25, 1.25),
        current_network: Some(FeedbackNetwork::current_sense(0.05, 20.0, 1.0)),
        i_abs_max: 3.0,
        v_abs_max: 12.0,
    }
}

fn attacked(mut s: Scenario) -> Scenario {
    let f = 855e6;
    s.couplings.voltage_feedback = CouplingProfile::new(
        InjectionPoint::VoltageFeedback,
        vec![
            ResonancePeak::new(f, 30.0, -0.015),
            ResonancePeak::new(1.6e9, 20.0, 0.01),
        ],
    );
    s.couplings.current_feedback = CouplingProfile::new(
        InjectionPoint::CurrentFeedback,
        vec![ResonancePeak::new(1.3e9, 40.0, -0.03)],
    );
    s.attack = AttackSchedule::Constant(AttackSource::new(f, 0.1, 0.3));
    s
}

/// Supply on a resistive load with a frequency sweep of `points` points.
pub fn frequency_sweep(points: usize) -> Scenario {
    let mut s = attacked(Scenario::converter(
        "bench",
        supply(),
        LoadModel::ConstantResistance { r: 10.0 },
    ));
    s.sweep = Some(SweepSpec {
        variable: SweepVariable::Frequency,
        start: 50e6,
        stop: 3e9,
        points,
        spacing: Spacing::Log,
    });
    s
}

/// One-cell charge of a fresh 18650 lasting `seconds` at 1 s steps.
pub fn charge(seconds: f64) -> Scenario {
    let cell = LoadModel::Battery(BatteryState::new(CellParams::cell_18650(), 0.1));
    let mut s = attacked(Scenario::charger(
        "bench",
        ChargerConfig::new(0.9, 4.2, 1),
        supply(),
        cell,
    ));
    s.timeline = Some(Timeline {
        duration: seconds,
        dt: 1.0,
    });
    s
}
