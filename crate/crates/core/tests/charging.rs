use iemisim_core::battery::celsius;
use iemisim_core::coupling::{CouplingProfile, InjectionPoint, ResonancePeak};
use iemisim_core::model::{dbm_to_watts, ConverterSpec, FeedbackNetwork, LoadModel, Topology};
use iemisim_core::scenario::{run_charging_attack, AttackSchedule, Event, Timeline};
use iemisim_core::{
    AttackSource, BatteryState, CellParams, ChargerConfig, ChargerPhase, Health, Scenario, ScenarioRecord,
};

const DIVIDER_BETA: f64 = 0.25;

fn hardware() -> ConverterSpec {
    ConverterSpec {
        topology: Topology::Buck,
        v_in: 12.0,
        voltage_network: FeedbackNetwork::fixed_divider(DIVIDER_BETA, 1.05),
        current_network: Some(FeedbackNetwork::current_sense(0.05, 20.0, 0.9)),
        i_abs_max: 3.0,
        v_abs_max: 12.0,
    }
}

fn config() -> ChargerConfig {
    ChargerConfig {
        i_precharge: 0.09,
        v_precharge_threshold: 3.0,
        i_cc: 0.9,
        v_cv: 4.2,
        i_terminate: 0.05,
        cells_in_series: 1,
        protections: vec![],
        power_ceiling: None,
    }
}

fn base(soc: f64) -> Scenario {
    let mut s = Scenario::charger(
        "charge",
        config(),
        hardware(),
        LoadModel::Battery(BatteryState::new(CellParams::cell_18650(), soc)),
    );
    s.timeline = Some(Timeline {
        duration: 6.0 * 3600.0,
        dt: 1.0,
    });
    s
}

fn phases(recs: &[ScenarioRecord]) -> Vec<ChargerPhase> {
    let mut out: Vec<ChargerPhase> = Vec::new();
    for r in recs {
        let p = r.phase.unwrap();
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

#[test]
fn unattacked_charge_is_safe_and_ordered() {
    let recs = run_charging_attack(&base(0.1)).unwrap();
    let peak = recs.iter().map(|r| r.v_real).fold(0.0, f64::max);
    assert!(peak <= 4.2 + 1e-9, "peak {peak}");
    assert_eq!(
        phases(&recs),
        vec![
            ChargerPhase::ConstantCurrent,
            ChargerPhase::ConstantVoltage,
            ChargerPhase::Done
        ]
    );
}

#[test]
fn deeply_discharged_cell_precharges() {
    let mut s = base(0.0);
    if let iemisim_core::Device::Charger { config, .. } = &mut s.device {
        config.v_precharge_threshold = 3.2;
    }
    let recs = run_charging_attack(&s).unwrap();
    assert_eq!(phases(&recs)[0], ChargerPhase::Precharge);
    assert_eq!(*phases(&recs).last().unwrap(), ChargerPhase::Done);
}

#[test]
fn coulombs_are_conserved() {
    let s = base(0.1);
    let recs = run_charging_attack(&s).unwrap();
    let dt = s.timeline.unwrap().dt;
    let charge: f64 = recs.iter().map(|r| r.i_real * dt).sum();
    let gained = (recs.last().unwrap().soc.unwrap() - 0.1) * CellParams::cell_18650().capacity;
    assert!((charge - gained).abs() <= 1e-9 * charge);
}

fn overvoltage() -> Scenario {
    let mut s = base(0.6);
    let src = AttackSource::new(855e6, dbm_to_watts(33.0), 0.3);
    let p_r = src.power_tx / (src.distance * src.distance);
    let kappa = -1.3 * DIVIDER_BETA / p_r;
    s.couplings.voltage_feedback = CouplingProfile::single(
        InjectionPoint::VoltageFeedback,
        ResonancePeak::new(855e6, 30.0, kappa),
    );
    s.attack = AttackSchedule::Ramp {
        source: src,
        t_start: 0.0,
        t_end: 600.0,
        p_start: dbm_to_watts(19.0),
        p_end: src.power_tx,
    };
    s
}

#[test]
fn voltage_attack_overcharges_to_failure() {
    let recs = run_charging_attack(&overvoltage()).unwrap();
    let plateau: Vec<_> = recs
        .iter()
        .filter(|r| r.phase == Some(ChargerPhase::ConstantVoltage) && r.health < Some(Health::Failed))
        .collect();
    assert!(!plateau.is_empty());
    for r in &plateau[plateau.len() / 2..] {
        assert!((r.v_real - 5.5).abs() < 0.05, "{}", r.v_real);
        assert!((r.v_measured - 4.2).abs() < 1e-6);
    }
    let failed = recs
        .iter()
        .find(|r| r.events.contains(&Event::HealthChange(Health::Failed)))
        .expect("cell never failed");
    let hours = failed.x / 3600.0;
    assert!((hours - 2.0).abs() <= 0.5, "failed at {hours} h");
    let peak_t = recs.iter().filter_map(|r| r.temperature).fold(0.0, f64::max);
    assert!(
        (peak_t - celsius(80.0)).abs() <= 10.0,
        "peak {}",
        peak_t - celsius(0.0)
    );
    assert!(recs.last().unwrap().soc.is_some());
}

#[test]
fn current_attack_is_capped_by_cv() {
    let run = |dbm: f64| {
        let mut s = base(0.1);
        s.timeline = Some(Timeline {
            duration: 600.0,
            dt: 1.0,
        });
        s.couplings.current_feedback = CouplingProfile::single(
            InjectionPoint::CurrentFeedback,
            ResonancePeak::new(1.65e9, 40.0, -0.03),
        );
        s.attack = AttackSchedule::Constant(AttackSource::new(1.65e9, dbm_to_watts(dbm), 0.3));
        run_charging_attack(&s).unwrap()
    };
    let a = run(35.0);
    let b = run(37.0);
    let i = a[5].i_real;
    assert!((1.5..=2.0).contains(&i), "{i}");
    assert_eq!(a[5].phase, Some(ChargerPhase::ConstantVoltage));
    assert!((a[5].i_real - b[5].i_real).abs() <= 0.01 * i);
    assert_eq!(b[5].phase, Some(ChargerPhase::ConstantVoltage));
}

#[test]
fn strong_current_attack_fakes_termination() {
    // Once the measured current reads below the termination threshold the
    // charger believes the cell is full.
    let mut s = base(0.1);
    s.couplings.current_feedback = CouplingProfile::single(
        InjectionPoint::CurrentFeedback,
        ResonancePeak::new(1.65e9, 40.0, -0.03),
    );
    s.attack = AttackSchedule::Constant(AttackSource::new(1.65e9, dbm_to_watts(40.0), 0.3));
    let recs = run_charging_attack(&s).unwrap();
    assert_eq!(recs.last().unwrap().phase, Some(ChargerPhase::Done));
    assert!(recs.len() < 10);
}
