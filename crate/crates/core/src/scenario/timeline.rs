use super::{Device, Event, Scenario, ScenarioRecord};
use crate::battery::{self, BatteryState, Health};
use crate::charger::{charger_step, phase_command, ChargerPhase, FaultReason};
use crate::equilibrium::solve_operating_point;
use crate::error::{ScenarioError, SolveError};
use crate::model::{ConverterSpec, LimitingMode, LoadModel};
use crate::protection::{monitor_step_with_offset, pptc_step, Channel, MonitorVerdict, PptcFuse};

/// Discrete regulator: a controllable source `u` behind `r_source` drives
/// the load, and every step moves `u` a fraction `dt / tau` of the way
/// toward closing the most restrictive loop error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorLoop {
    pub r_source: f64,
    pub tau: f64,
    pub u: f64,
}

impl Default for RegulatorLoop {
    fn default() -> Self {
        Self {
            r_source: 1.0,
            tau: 1e-3,
            u: 0.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Binding {
    Voltage,
    Current,
    Absolute,
    Ceiling,
    Floor,
}

impl RegulatorLoop {
    /// Terminal voltage and current with the source at `u`.
    pub fn plant(&self, load: &LoadModel, u: f64) -> (f64, f64) {
        let r = self.r_source;
        let thevenin = |e: f64, rb: f64| {
            if u > e {
                let i = (u - e) / (r + rb);
                (e + i * rb, i)
            } else {
                (e, 0.0)
            }
        };
        match *load {
            LoadModel::Open => (u, 0.0),
            LoadModel::ConstantResistance { r: rl } => {
                let i = u / (rl + r);
                (i * rl, i)
            }
            LoadModel::ConstantCurrent { i } => {
                if u > i * r {
                    (u - i * r, i)
                } else {
                    (0.0, u / r)
                }
            }
            LoadModel::ConstantVoltage { v } => {
                if u > v {
                    (v, (u - v) / r)
                } else {
                    (u, 0.0)
                }
            }
            LoadModel::Battery(ref b) => thevenin(b.ocv(), b.r_esr()),
            LoadModel::BatterySimRig { v_internal, esr, .. } => thevenin(v_internal, esr),
        }
    }

    /// One control update; returns the plant point after the update and
    /// the constraint that drove it.
    pub fn step(
        &mut self,
        spec: &ConverterSpec,
        load: &LoadModel,
        v_attack_voltage: f64,
        v_attack_current: f64,
        dt: f64,
    ) -> (f64, f64, LimitingMode) {
        let (v, i) = self.plant(load, self.u);
        let h = 1e-7 * self.u.abs().max(1.0);
        let (v1, i1) = self.plant(load, self.u + h);
        let dv = (v1 - v) / h;
        let di = (i1 - i) / h;
        let (lo, hi) = spec.output_window();

        // Slope-normalized error: the change of u that would close it.
        // A constraint u cannot currently move is not binding while
        // satisfied and is closed at the open-circuit slope otherwise.
        let norm = |err: f64, slope: f64, fallback: f64| {
            if slope.abs() > 1e-12 {
                err / slope
            } else if err >= 0.0 {
                f64::INFINITY
            } else {
                err / fallback
            }
        };

        let vn = &spec.voltage_network;
        let mut cands = vec![(
            norm(
                vn.reference() - vn.polarity.sign() * v_attack_voltage - vn.transfer(v),
                vn.slope() * dv,
                vn.slope(),
            ),
            Binding::Voltage,
        )];
        if let Some(cn) = &spec.current_network {
            cands.push((
                norm(
                    cn.reference() - cn.polarity.sign() * v_attack_current - cn.transfer(i),
                    cn.slope() * di,
                    cn.slope() / self.r_source,
                ),
                Binding::Current,
            ));
        }
        cands.push((
            norm(spec.i_abs_max - i, di, 1.0 / self.r_source),
            Binding::Absolute,
        ));
        cands.push((norm(hi - v, dv, 1.0), Binding::Ceiling));

        let (mut delta, mut binding) = cands
            .into_iter()
            .fold((f64::INFINITY, Binding::Ceiling), |acc, c| {
                if c.0 < acc.0 {
                    c
                } else {
                    acc
                }
            });
        if lo > 0.0 {
            let floor = norm(lo - v, dv, 1.0);
            if floor > delta {
                delta = floor;
                binding = Binding::Floor;
            }
        }

        // Slew limit per step, so an unbounded step cannot run away.
        let slew = spec.v_abs_max.max(1.0);
        let gain = (dt / self.tau).min(1.0);
        self.u = (self.u + gain * delta.clamp(-slew, slew)).max(0.0);

        let (v, i) = self.plant(load, self.u);
        let mode = if self.u == 0.0 {
            LimitingMode::Saturated
        } else {
            match binding {
                Binding::Voltage => LimitingMode::VoltageLimited,
                Binding::Current => LimitingMode::CurrentLimited,
                Binding::Absolute => LimitingMode::Overloaded,
                Binding::Ceiling | Binding::Floor => LimitingMode::Saturated,
            }
        };
        (v, i, mode)
    }
}

fn fill_battery(rec: &mut ScenarioRecord, b: &BatteryState) {
    rec.soc = Some(b.soc);
    rec.temperature = Some(b.temperature);
    rec.health = Some(b.health);
}

/// Steps a fuse with the demanded current and returns the current it lets
/// through, recording trip/reset transitions.
fn apply_fuse(
    fuse: &mut Option<PptcFuse>,
    demand: f64,
    dt: f64,
    trip_event: Event,
    events: &mut Vec<Event>,
) -> f64 {
    let Some(f) = fuse else {
        return demand;
    };
    let next = pptc_step(f, demand, dt);
    if next.is_tripped() && !f.is_tripped() {
        events.push(trip_event);
    } else if !next.is_tripped() && f.is_tripped() {
        events.push(Event::PptcReset);
    }
    *f = next;
    f.pass_current(demand)
}

/// Time-domain run of a converter with its regulation loop in the
/// simulation. A battery load is charged as the run proceeds.
pub fn run_time_domain(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    s.check()?;
    let Device::Converter(spec) = &s.device else {
        return Err(ScenarioError::Invalid("time-domain run needs a converter".into()));
    };
    let tl = s
        .timeline
        .ok_or_else(|| ScenarioError::Invalid("scenario has no timeline".into()))?;

    let mut reg = RegulatorLoop::default();
    let mut load = s.load.clone();
    let mut pptc = s.protections.pptc;
    let mut tfuse = s.protections.thermal_fuse;
    let mut monitor = s.protections.monitor.clone();
    let mut opened = false;
    let mut detected = false;
    let mut out = Vec::with_capacity(tl.steps());

    for k in 0..tl.steps() {
        let t = k as f64 * tl.dt;
        let src = s.attack.source_at(t);
        let off = s.offsets(src.as_ref())?;
        let mut rec = ScenarioRecord::blank(t, src.as_ref());

        let plant_load = if opened { LoadModel::Open } else { load.clone() };
        let (v, mut i, mode) = reg.step(spec, &plant_load, off.voltage, off.current, tl.dt);
        if !opened {
            let a = apply_fuse(&mut pptc, i, tl.dt, Event::PptcTripped, &mut rec.events);
            let b = apply_fuse(&mut tfuse, i, tl.dt, Event::ThermalFuseBlown, &mut rec.events);
            if a < i || b < i {
                i = a.min(b);
            }
            if let Some(m) = monitor.as_mut() {
                if monitor_step_with_offset(m, v, i, off.monitor) == MonitorVerdict::Disconnect {
                    rec.events.push(Event::MonitorDisconnect);
                    opened = true;
                    i = 0.0;
                }
            }
        }

        rec.v_real = v;
        rec.i_real = i;
        rec.v_measured = spec.voltage_network.perceived(v, off.voltage);
        rec.i_measured = match &spec.current_network {
            Some(n) => n.perceived(i, off.current),
            None => i,
        };
        rec.mode = Some(mode);
        if let Some(e) = detect(s, &rec, &mut detected) {
            rec.events.push(e);
        }

        if let LoadModel::Battery(b) = &load {
            let next = battery::step(b, i, tl.dt);
            if next.health != b.health {
                rec.events.push(Event::HealthChange(next.health));
            }
            fill_battery(&mut rec, &next);
            load = LoadModel::Battery(next);
        }
        out.push(rec);
    }
    Ok(out)
}

/// Rising-edge attack detection on the configured channel.
fn detect(s: &Scenario, rec: &ScenarioRecord, latched: &mut bool) -> Option<Event> {
    let d = s.protections.detector.as_ref()?;
    let (meas, cross) = match d.channel {
        Channel::Voltage => (rec.v_measured, rec.v_real),
        Channel::Current => (rec.i_measured, rec.i_real),
    };
    let hit = d.detects(meas, cross);
    let rising = hit && !*latched;
    *latched = hit;
    rising.then_some(Event::AttackDetected(d.channel))
}

/// Charger, battery, protections and attack schedule stepped together
/// until the charger finishes or faults, the cell is destroyed, or the
/// timeline ends.
pub fn run_charging_attack(s: &Scenario) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    s.check()?;
    let Device::Charger { config, hardware } = &s.device else {
        return Err(ScenarioError::Invalid("charging run needs a charger".into()));
    };
    let LoadModel::Battery(b0) = &s.load else {
        return Err(ScenarioError::Invalid("charging run needs a battery load".into()));
    };
    let tl = s
        .timeline
        .ok_or_else(|| ScenarioError::Invalid("scenario has no timeline".into()))?;

    let retarget = |phase: ChargerPhase| {
        let cmd = phase_command(config, phase);
        let cmd = if cmd.is_off() {
            phase_command(config, ChargerPhase::ConstantCurrent)
        } else {
            cmd
        };
        hardware
            .with_voltage_setpoint(cmd.v_limit_effective)
            .with_current_setpoint(cmd.i_limit_effective)
    };

    let mut battery = b0.clone();
    let mut phase = ChargerPhase::Idle;
    let mut pptc = s.protections.pptc;
    let mut tfuse = s.protections.thermal_fuse;
    let mut monitor = s.protections.monitor.clone();
    let mut disconnected = false;
    let mut detected = false;
    let mut out = Vec::new();

    for k in 0..tl.steps() {
        let t = k as f64 * tl.dt;
        let src = s.attack.source_at(t);
        let off = s.offsets(src.as_ref())?;
        let mut rec = ScenarioRecord::blank(t, src.as_ref());
        let hw = retarget(phase);

        let charging = !disconnected && !phase_command(config, phase).is_off();
        let (mut v, mut i, mut mode) = (battery.ocv(), 0.0, None);
        if charging {
            match solve_operating_point(
                &hw,
                &LoadModel::Battery(battery.clone()),
                off.voltage,
                off.current,
            ) {
                Ok(op) => {
                    v = op.v_real;
                    i = op.i_real;
                    mode = Some(op.limiting_mode);
                }
                Err(SolveError::ShutdownSignal { .. }) => rec.events.push(Event::Shutdown),
                Err(SolveError::NoOperatingPoint(_)) => rec.events.push(Event::NoOperatingPoint),
            }
        }

        let a = apply_fuse(&mut pptc, i, tl.dt, Event::PptcTripped, &mut rec.events);
        let b = apply_fuse(&mut tfuse, i, tl.dt, Event::ThermalFuseBlown, &mut rec.events);
        if a < i || b < i {
            i = a.min(b);
            v = battery::terminal_voltage(&battery, i);
        }
        if let Some(m) = monitor.as_mut() {
            let was = m.latched;
            if monitor_step_with_offset(m, v, i, off.monitor) == MonitorVerdict::Disconnect {
                if !was {
                    rec.events.push(Event::MonitorDisconnect);
                }
                disconnected = true;
                i = 0.0;
                v = battery.ocv();
            }
        }

        let v_meas = hw.voltage_network.perceived(v, off.voltage);
        let i_meas = match &hw.current_network {
            Some(n) => n.perceived(i, off.current),
            None => i,
        };

        let next = match config.power_ceiling {
            Some(p) if v * i > p && !phase.is_terminal() => {
                rec.events.push(Event::Overload);
                ChargerPhase::Faulted(FaultReason::Overload)
            }
            _ => charger_step(config, phase, v_meas, i_meas, battery.temperature).0,
        };
        if next != phase {
            rec.events.push(Event::PhaseChange(next));
        }

        rec.v_real = v;
        rec.i_real = i;
        rec.v_measured = v_meas;
        rec.i_measured = i_meas;
        rec.mode = mode;
        rec.phase = Some(next);
        if let Some(e) = detect(s, &rec, &mut detected) {
            rec.events.push(e);
        }

        let stepped = battery::step(&battery, i, tl.dt);
        if stepped.health != battery.health {
            rec.events.push(Event::HealthChange(stepped.health));
        }
        battery = stepped;
        fill_battery(&mut rec, &battery);
        out.push(rec);

        phase = next;
        let collapsed = battery.health >= Health::Failed && battery.ocv() <= 0.01;
        if phase.is_terminal() || battery.health == Health::ThermalRunaway || collapsed {
            break;
        }
    }
    Ok(out)
}
