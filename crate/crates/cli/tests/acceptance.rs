//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use iemisim_cli::core::battery::celsius;
use iemisim_cli::core::coupling::{attack_offset, CouplingProfile, InjectionPoint, ResonancePeak};
use iemisim_cli::core::model::{ConverterSpec, FeedbackNetwork, LimitingMode, LoadModel, Polarity, Topology};
use iemisim_cli::core::scenario::{
    calibrate_scenario, evaluate_metric, evaluate_point, run_charging_attack, run_time_domain,
    with_current_setpoint, with_load, with_voltage_setpoint, Event, Metric,
};
use iemisim_cli::core::{
    run, solve_operating_point, AttackSchedule, AttackSource, ChargerPhase, Device, Health, PptcFuse,
    Scenario, Timeline,
};
use iemisim_cli::load_figure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn figure(id: &str) -> Scenario {
    load_figure(id).unwrap_or_else(|e| panic!("{id}: {e}")).scenario
}

fn base_source(s: &Scenario) -> AttackSource {
    s.attack.base_source().expect("scenario has an attack")
}

fn spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn ms(d: Duration) -> String {
    format!("{:.1} ms", d.as_secs_f64() * 1e3)
}

fn divider_invariance() -> Outcome {
    let t = Instant::now();
    let s = figure("fig3");
    let src = base_source(&s);
    let v_a = attack_offset(&s.couplings.voltage_feedback, &src).unwrap();
    let expected = -v_a / 1.25;
    let mut fracs = Vec::new();
    let mut modes_ok = true;
    for v_set in [3.3, 5.0, 9.0, 12.0, 15.0] {
        for r in [5.0, 10.0, 20.0, 50.0] {
            let sc = with_load(
                &with_voltage_setpoint(&s, v_set),
                LoadModel::ConstantResistance { r },
            );
            let hit = evaluate_point(&sc, Some(&src), 0.0);
            let base = evaluate_point(&sc, None, 0.0);
            modes_ok &= hit.mode == Some(LimitingMode::VoltageLimited);
            fracs.push((hit.v_real - base.v_real) / base.v_real);
        }
    }
    let rel_spread = spread(&fracs) / expected.abs();
    let oracle_err = fracs.iter().map(|f| (f - expected).abs()).fold(0.0, f64::max) / expected.abs();
    let el = t.elapsed();
    outcome(
        modes_ok && rel_spread <= 1e-9 && oracle_err <= 1e-9 && el < Duration::from_secs(1),
        format!(
            "20 points, dV/V0 = {expected:.6}, relative spread {rel_spread:.2e}, closed-form error {oracle_err:.2e}, {}",
            ms(el)
        ),
    )
}

fn current_invariance() -> Outcome {
    let t = Instant::now();
    let s = figure("fig12");
    let src = base_source(&s);
    let v_a = attack_offset(&s.couplings.current_feedback, &src).unwrap();
    let expected = -v_a / (0.025 * 20.0);
    let mut deltas = Vec::new();
    let mut modes_ok = true;
    for i_cc in [0.5, 1.0, 2.0] {
        for v in [3.0, 5.0, 7.0] {
            let sc = with_load(&with_current_setpoint(&s, i_cc), LoadModel::ConstantVoltage { v });
            let hit = evaluate_point(&sc, Some(&src), 0.0);
            let base = evaluate_point(&sc, None, 0.0);
            modes_ok &= hit.mode == Some(LimitingMode::CurrentLimited)
                && base.mode == Some(LimitingMode::CurrentLimited);
            deltas.push(hit.i_real - base.i_real);
        }
    }
    let sp = spread(&deltas);
    let oracle_err = deltas.iter().map(|d| (d - expected).abs()).fold(0.0, f64::max);
    let el = t.elapsed();
    outcome(
        modes_ok && sp <= 1e-9 && oracle_err <= 1e-9 && el < Duration::from_secs(1),
        format!(
            "9 points, dI = {expected:.6} A, spread {sp:.2e} A, closed-form error {oracle_err:.2e} A, {}",
            ms(el)
        ),
    )
}

fn wallplug(polarity: Polarity) -> Scenario {
    let mut s = figure("fig5");
    let hw = s.device.hardware_mut();
    hw.voltage_network = hw.voltage_network.with_polarity(polarity);
    hw.v_abs_max = 12.0;
    s
}

fn zener_exact() -> Outcome {
    let base_s = wallplug(Polarity::Direct);
    let src = base_source(&base_s);
    let v_a = attack_offset(&base_s.couplings.voltage_feedback, &src).unwrap();
    let mut worst: f64 = 0.0;
    for v_z in [3.3, 5.1, 6.2] {
        let mut s = base_s.clone();
        s.device.hardware_mut().voltage_network = FeedbackNetwork::zener(v_z, 1.2);
        let hit = evaluate_point(&s, Some(&src), 0.0);
        let base = evaluate_point(&s, None, 0.0);
        worst = worst.max(((hit.v_real - base.v_real) + v_a).abs());
    }
    outcome(
        worst <= 1e-12,
        format!("V_attack = {v_a:.6} V, largest |dV + V_attack| {worst:.2e} V"),
    )
}

fn polarity_flip() -> Outcome {
    let direct = wallplug(Polarity::Direct);
    let inverted = wallplug(Polarity::Inverted);
    let (d, i) = (run(&direct).unwrap(), run(&inverted).unwrap());
    let (bd, bi) = (
        evaluate_point(&direct, None, 0.0),
        evaluate_point(&inverted, None, 0.0),
    );
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for (a, b) in d.iter().zip(&i) {
        let (da, db) = (a.v_real - bd.v_real, b.v_real - bi.v_real);
        if da.abs() > 1e-6 {
            nonzero += 1;
        }
        worst = worst.max((da + db).abs());
    }
    outcome(
        worst <= 1e-12 && nonzero > 100 && d.len() == i.len(),
        format!(
            "{} frequencies, {nonzero} with visible change, largest |dV_direct + dV_inverted| {worst:.2e} V",
            d.len()
        ),
    )
}

fn power_linearity() -> Outcome {
    let s = figure("fig9");
    let recs = run(&s).unwrap();
    let base = evaluate_point(&s, None, 0.0);
    let pts: Vec<(f64, f64)> = recs
        .iter()
        .filter(|r| !matches!(r.mode, Some(LimitingMode::Saturated | LimitingMode::Overloaded)))
        .map(|r| (r.x, r.v_real - base.v_real))
        .collect();
    let excluded = recs.len() - pts.len();
    let slope = pts.iter().map(|(x, y)| x * y).sum::<f64>() / pts.iter().map(|(x, _)| x * x).sum::<f64>();
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - mean).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let decades = (pts.last().unwrap().0 / pts[0].0).log10();
    outcome(
        r2 >= 0.999 && decades >= 2.0,
        format!(
            "{} points over {decades:.2} decades ({excluded} saturated excluded), slope {slope:.5} V/W, R^2 {r2:.9}",
            pts.len()
        ),
    )
}

fn inverse_square() -> Outcome {
    let t = Instant::now();
    let s = figure("ranged");
    let recs = run(&s).unwrap();
    let at = |d: f64| recs.iter().find(|r| r.x == d).map(|r| r.i_real).unwrap();
    let (i1, i2, i5) = (at(1.0), at(2.0), at(5.0));
    let i_cc = 1.1;
    // Independent prediction from the 1 m point alone.
    let pred = |d: f64| i_cc + (i1 - i_cc) / (d * d);
    let derived_ok = (i2 - pred(2.0)).abs() <= 1e-9 && (i5 - pred(5.0)).abs() <= 1e-9;
    let target_ok = (i1 - 3.0).abs() <= 1e-3 && (i2 - 1.575).abs() <= 1e-3 && (i5 - 1.176).abs() <= 1e-3;
    let reported_ok = (i2 - 1.5).abs() <= 0.25 * 1.5 && (i5 - 1.18).abs() <= 0.25 * 1.18;

    let rec = s.calibration.expect("ranged.toml is calibrated");
    let fresh = calibrate_scenario(&s, rec.target, rec.knob)
        .unwrap()
        .calibration
        .unwrap();
    let golden_ok = (fresh.kappa - rec.kappa).abs() <= 1e-9 * rec.kappa.abs();
    let el = t.elapsed();
    outcome(
        derived_ok && target_ok && reported_ok && golden_ok && el < Duration::from_secs(1),
        format!(
            "I(1 m) {i1:.4} A, I(2 m) {i2:.4} A, I(5 m) {i5:.4} A (reported 1.5, 1.18), kappa {:.6}, {}",
            rec.kappa,
            ms(el)
        ),
    )
}

fn charger_constant_offset() -> Outcome {
    let s = figure("fig7");
    let mut got = Vec::new();
    for i_cc in [1.0, 2.0, 3.0] {
        got.push(evaluate_metric(&with_current_setpoint(&s, i_cc), Metric::DeltaCurrent).unwrap());
    }
    let in_band = got.iter().all(|d| (d - 1.0).abs() <= 0.01);
    let rec = s.calibration.expect("skyrc_cc.toml is calibrated");
    let fresh = calibrate_scenario(&s, rec.target, rec.knob)
        .unwrap()
        .calibration
        .unwrap();
    let golden_ok = (fresh.kappa - rec.kappa).abs() <= 1e-9 * rec.kappa.abs();
    outcome(
        in_band && golden_ok,
        format!(
            "dI at i_cc 1/2/3 A: {:.5} / {:.5} / {:.5} A, golden kappa {:.6} reproduced: {golden_ok}",
            got[0], got[1], got[2], rec.kappa
        ),
    )
}

fn overcurrent() -> Outcome {
    let s = figure("overcurrent");
    let recs = run_charging_attack(&s).unwrap();
    let low = recs
        .iter()
        .rev()
        .find(|r| r.power.is_some_and(|p| p < 4.0))
        .unwrap();
    let high = recs.iter().find(|r| r.power.is_some_and(|p| p > 4.0)).unwrap();
    let cv = Some(ChargerPhase::ConstantVoltage);
    let change = (high.i_real - low.i_real).abs() / low.i_real;
    let first_cv = recs.iter().find(|r| r.phase == cv).map(|r| r.x);
    let ok = (1.5..=2.0).contains(&low.i_real) && low.phase == cv && high.phase == cv && change < 0.01;
    outcome(
        ok,
        format!(
            "set 0.9 A, real {:.4} A at 35 dBm, {:.4} A at 37 dBm ({:.3}% change), CV from t = {:?} s",
            low.i_real,
            high.i_real,
            100.0 * change,
            first_cv
        ),
    )
}

fn overvoltage() -> Outcome {
    let t = Instant::now();
    let s = figure("overvoltage");
    let recs = run_charging_attack(&s).unwrap();
    let el = t.elapsed();
    let cv = Some(ChargerPhase::ConstantVoltage);
    let plateau: Vec<_> = recs
        .iter()
        .filter(|r| r.phase == cv && r.health < Some(Health::Failed))
        .collect();
    let tail = &plateau[plateau.len() / 2..];
    let plateau_ok = !tail.is_empty()
        && tail
            .iter()
            .all(|r| (r.v_real - 5.5).abs() <= 0.05 && (r.v_measured - 4.2).abs() <= 1e-6);
    let v_plateau = tail.last().map(|r| r.v_real).unwrap_or(f64::NAN);
    let failed_at = recs
        .iter()
        .find(|r| r.events.contains(&Event::HealthChange(Health::Failed)))
        .map(|r| r.x / 3600.0);
    let (t_peak, temp_peak) = recs
        .iter()
        .filter_map(|r| r.temperature.map(|k| (r.x / 3600.0, k)))
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let last = recs.last().unwrap();
    let collapsed = last.v_real < 0.5 * v_plateau;
    let ok = plateau_ok
        && failed_at.is_some_and(|h| (h - 2.0).abs() <= 0.5)
        && (t_peak - 2.0).abs() <= 0.5
        && (temp_peak - celsius(80.0)).abs() <= 10.0
        && collapsed
        && el < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "plateau {v_plateau:.3} V read as 4.2 V, failed at {:.2} h, peak {:.1} C at {t_peak:.2} h, final {:.3} V, {}",
            failed_at.unwrap_or(f64::NAN),
            temp_peak - celsius(0.0),
            last.v_real,
            ms(el)
        ),
    )
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let topology = Topology::ALL[rng.random_range(0..5)];
    let v_ref = rng.random_range(0.5..2.5);
    let net = match rng.random_range(0..3) {
        0 => FeedbackNetwork::adjustable_divider(rng.random_range(0.05..0.5), v_ref),
        1 => FeedbackNetwork::fixed_divider(rng.random_range(0.05..0.5), v_ref),
        _ => FeedbackNetwork::zener(rng.random_range(1.0..8.0), v_ref),
    };
    let polarity = if rng.random_bool(0.5) {
        Polarity::Direct
    } else {
        Polarity::Inverted
    };
    let current = rng.random_bool(0.7).then(|| {
        FeedbackNetwork::current_sense(
            rng.random_range(0.004..0.1),
            rng.random_range(10.0..100.0),
            rng.random_range(0.05..1.0),
        )
    });
    let spec = ConverterSpec {
        topology,
        v_in: rng.random_range(3.0..24.0),
        voltage_network: net.with_polarity(polarity),
        current_network: current,
        i_abs_max: rng.random_range(0.5..10.0),
        v_abs_max: rng.random_range(20.0..60.0),
    };
    let load = match rng.random_range(0..5) {
        0 => LoadModel::Open,
        1 => LoadModel::ConstantResistance {
            r: rng.random_range(1.0..100.0),
        },
        2 => LoadModel::ConstantCurrent {
            i: rng.random_range(0.05..5.0),
        },
        3 => LoadModel::ConstantVoltage {
            v: rng.random_range(1.0..20.0),
        },
        _ => LoadModel::BatterySimRig {
            v_internal: rng.random_range(2.0..15.0),
            esr: rng.random_range(0.02..0.5),
            source_capability: 1.0,
        },
    };
    let mut s = Scenario::converter("random", spec, load);
    let f = rng.random_range(100e6..2e9);
    let src = AttackSource::new(f, rng.random_range(0.01..1.0), rng.random_range(0.2..2.0));
    let p_r = src.power_tx / (src.distance * src.distance);
    s.couplings.voltage_feedback = CouplingProfile::single(
        InjectionPoint::VoltageFeedback,
        ResonancePeak::new(f, 20.0, rng.random_range(-0.05..0.05) / p_r),
    );
    s.couplings.current_feedback = CouplingProfile::single(
        InjectionPoint::CurrentFeedback,
        ResonancePeak::new(f, 20.0, rng.random_range(-0.05..0.05) / p_r),
    );
    s.attack = AttackSchedule::Constant(src);
    s.timeline = Some(Timeline {
        duration: 0.4,
        dt: 1e-4,
    });
    s
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
    let (mut checked, mut drawn, mut worst) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    while checked < 100 && drawn < 1000 {
        drawn += 1;
        let s = random_scenario(&mut rng);
        if !s.validate().is_empty() {
            continue;
        }
        let src = base_source(&s);
        let off = s.offsets(Some(&src)).unwrap();
        let Ok(op) = solve_operating_point(s.device.hardware(), &s.load, off.voltage, off.current) else {
            continue;
        };
        let last = run_time_domain(&s).unwrap().pop().unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
        let e = rel(last.v_real, op.v_real).max(rel(last.i_real, op.i_real));
        if e > 1e-6 {
            failures.push(format!("#{drawn}: {e:.2e}"));
        }
        worst = worst.max(e);
        checked += 1;
    }
    outcome(
        checked == 100 && failures.is_empty(),
        format!(
            "{checked} scenarios ({drawn} drawn), worst relative difference {worst:.2e} {}",
            failures.join(" ")
        ),
    )
}

fn thread_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_iemisim");
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig3_divider.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (threads, dir) in ["1", "8"].iter().zip(&dirs) {
        let st = Command::new(bin)
            .args([
                "sweep",
                cfg.to_str().unwrap(),
                "--threads",
                threads,
                "--format",
                "csv",
                "--quiet",
                "--out",
            ])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success(), "sweep --threads {threads} failed");
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut bytes = 0;
    let identical = !names.is_empty()
        && names.iter().all(|n| {
            let a = std::fs::read(dirs[0].path().join(n)).unwrap();
            let b = std::fs::read(dirs[1].path().join(n)).unwrap_or_default();
            bytes += a.len();
            a == b
        });
    outcome(
        identical,
        format!("{} CSV files, {bytes} bytes, identical: {identical}", names.len()),
    )
}

fn pptc_gap() -> Outcome {
    let s = figure("pptc");
    let i_cc = match &s.device {
        Device::Charger { config, .. } => config.i_cc,
        Device::Converter(_) => unreachable!(),
    };
    let tripped = |s: &Scenario| {
        let recs = run_charging_attack(s).unwrap();
        let peak = recs.iter().map(|r| r.i_real).fold(0.0, f64::max);
        (recs.iter().any(|r| r.events.contains(&Event::PptcTripped)), peak)
    };
    let (discharge_trips, peak) = tripped(&s);
    let mut charge_rated = s.clone();
    charge_rated.protections.pptc = Some(PptcFuse::new(1.2 * i_cc, 0.6 * i_cc, 5.0));
    let (charge_trips, _) = tripped(&charge_rated);
    let mut quiet = charge_rated.clone();
    quiet.attack = AttackSchedule::Off;
    let (quiet_trips, _) = tripped(&quiet);
    outcome(
        !discharge_trips && charge_trips && !quiet_trips && peak > 1.9 * i_cc,
        format!(
            "attacked current {peak:.3} A; 6 A PPTC trips: {discharge_trips}; {:.1} A PPTC trips: {charge_trips} (without attack: {quiet_trips})",
            1.2 * i_cc
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("divider fractional change invariant", divider_invariance),
        ("current-limit change invariant", current_invariance),
        ("Zener change equals -V_attack", zener_exact),
        ("polarity flips the change", polarity_flip),
        ("change linear in power", power_linearity),
        ("inverse-square ranging", inverse_square),
        ("charger CC offset +1 A", charger_constant_offset),
        ("overcurrent capped by CV", overcurrent),
        ("overvoltage destroys the cell", overvoltage),
        ("time domain matches solver", oracle_equivalence),
        ("thread-count determinism", thread_determinism),
        ("PPTC rating gap", pptc_gap),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
