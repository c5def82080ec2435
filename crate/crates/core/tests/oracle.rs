use iemisim_core::equilibrium::solve_operating_point;
use iemisim_core::model::{ConverterSpec, FeedbackNetwork, LoadModel, Polarity, Topology};
use iemisim_core::scenario::{run_time_domain, RegulatorLoop, Timeline};
use iemisim_core::{BatteryState, CellParams, OperatingPoint, Scenario};
use proptest::prelude::*;

fn arb_spec() -> impl Strategy<Value = ConverterSpec> {
    (
        0usize..5,
        3.0f64..24.0,
        0usize..3,
        0.05f64..0.5,
        0.5f64..2.5,
        any::<bool>(),
        prop::option::of((0.004f64..0.1, 10.0f64..100.0, 0.05f64..1.0)),
        0.5f64..10.0,
        20.0f64..60.0,
    )
        .prop_map(|(t, v_in, kind, beta, v_ref, inv, cur, i_abs, v_abs)| {
            let topology = Topology::ALL[t];
            let net = match kind {
                0 => FeedbackNetwork::adjustable_divider(beta, v_ref),
                1 => FeedbackNetwork::fixed_divider(beta, v_ref),
                _ => FeedbackNetwork::zener(v_ref * 4.0, v_ref),
            };
            let polarity = if inv { Polarity::Inverted } else { Polarity::Direct };
            ConverterSpec {
                topology,
                v_in,
                voltage_network: net.with_polarity(polarity),
                current_network: cur.map(|(r, g, x)| FeedbackNetwork::current_sense(r, g, x)),
                i_abs_max: i_abs,
                v_abs_max: v_abs,
            }
        })
}

fn arb_load() -> impl Strategy<Value = LoadModel> {
    prop_oneof![
        Just(LoadModel::Open),
        (1.0f64..100.0).prop_map(|r| LoadModel::ConstantResistance { r }),
        (0.05f64..5.0).prop_map(|i| LoadModel::ConstantCurrent { i }),
        (1.0f64..20.0).prop_map(|v| LoadModel::ConstantVoltage { v }),
        (0.0f64..1.0, 0.02f64..0.5)
            .prop_map(|(soc, r)| LoadModel::Battery(BatteryState::new(CellParams::li_ion(10_800.0, r), soc))),
        (2.0f64..15.0, 0.02f64..0.5).prop_map(|(v, esr)| LoadModel::BatterySimRig {
            v_internal: v,
            esr,
            source_capability: 1.0
        }),
    ]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()) + 1e-12
}

fn settle(spec: &ConverterSpec, load: &LoadModel, va: f64, vi: f64) -> (f64, f64) {
    let mut reg = RegulatorLoop::default();
    let mut last = (0.0, 0.0);
    for _ in 0..4000 {
        let (v, i, _) = reg.step(spec, load, va, vi, 1e-4);
        last = (v, i);
    }
    last
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn regulator_settles_on_quasi_static_point(
        spec in arb_spec(),
        load in arb_load(),
        va in -0.05f64..0.05,
        vi in -0.05f64..0.05,
    ) {
        let Ok(op) = solve_operating_point(&spec, &load, va, vi) else {
            return Ok(());
        };
        let (v, i) = settle(&spec, &load, va, vi);
        prop_assert!(close(v, op.v_real), "V {} vs {} ({:?})", v, op.v_real, op.limiting_mode);
        prop_assert!(close(i, op.i_real), "I {} vs {} ({:?})", i, op.i_real, op.limiting_mode);
    }
}

#[test]
fn time_domain_run_settles_on_solver_point() {
    let spec = ConverterSpec {
        topology: Topology::Sepic,
        v_in: 12.0,
        voltage_network: FeedbackNetwork::adjustable_divider(0.1, 1.25),
        current_network: Some(FeedbackNetwork::current_sense(0.025, 20.0, 1.5)),
        i_abs_max: 5.0,
        v_abs_max: 30.0,
    };
    let load = LoadModel::ConstantResistance { r: 5.0 };
    let mut s = Scenario::converter("td", spec, load.clone());
    s.timeline = Some(Timeline {
        duration: 0.2,
        dt: 1e-4,
    });
    let recs = run_time_domain(&s).unwrap();
    assert_eq!(recs.len(), 2000);
    let last = recs.last().unwrap();
    let op: OperatingPoint = solve_operating_point(&spec, &load, 0.0, 0.0).unwrap();
    assert!(close(last.v_real, op.v_real) && close(last.i_real, op.i_real));
    assert_eq!(last.mode, Some(op.limiting_mode));
}
