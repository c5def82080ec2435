//! Countermeasures that can be attached to a scenario: input filtering and
//! shielding, resettable and thermal fuses, a redundant monitor with its
//! own sensing path, and a cross-check detector hook.

use crate::coupling::{attack_offset, CouplingProfile, InjectionPoint};
use crate::error::DomainError;
use crate::model::{AttackSource, Violation};

/// Low-pass filter in front of a sensing path. Above the cutoff the
/// attenuation grows per decade until parasitic coupling caps it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassFilterModel {
    pub cutoff: f64,
    /// dB per decade.
    pub rolloff_per_decade: f64,
    /// Maximum attenuation in dB.
    pub parasitic_floor: f64,
}

impl LowPassFilterModel {
    pub fn new(cutoff: f64, rolloff_per_decade: f64, parasitic_floor: f64) -> Self {
        Self {
            cutoff,
            rolloff_per_decade,
            parasitic_floor,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.cutoff > 0.0) {
            out.push(Violation::new("protection.filter.cutoff", "must be > 0"));
        }
        if !(self.rolloff_per_decade > 0.0) {
            out.push(Violation::new(
                "protection.filter.rolloff_per_decade",
                "must be > 0",
            ));
        }
        if !(self.parasitic_floor >= 0.0) {
            out.push(Violation::new(
                "protection.filter.parasitic_floor",
                "must be >= 0",
            ));
        }
        out
    }
}

impl Default for LowPassFilterModel {
    fn default() -> Self {
        Self::new(1e6, 20.0, 40.0)
    }
}

/// Amplitude factor in (0, 1] applied to the coupling coefficient at `f`.
pub fn filter_attenuation(filter: &LowPassFilterModel, f: f64) -> Result<f64, DomainError> {
    if !(f > 0.0) {
        return Err(DomainError::NonPositiveFrequency(f));
    }
    if f <= filter.cutoff {
        return Ok(1.0);
    }
    let db = (filter.rolloff_per_decade * (f / filter.cutoff).log10()).min(filter.parasitic_floor);
    Ok(10f64.powf(-db / 20.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FuseState {
    Conducting,
    Tripped,
}

/// Polymer PTC fuse. A thermal fuse is the same model with
/// `resettable = false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptcFuse {
    pub i_trip: f64,
    pub i_hold: f64,
    pub trip_delay: f64,
    /// Time below `i_hold` needed to reset a tripped fuse.
    pub reset_delay: f64,
    pub resettable: bool,
    /// Current still passed while tripped.
    pub leakage: f64,
    pub state: FuseState,
    /// Continuous time spent at or above `i_trip`.
    pub heat_accumulator: f64,
    /// Continuous time spent at or below `i_hold` while tripped.
    pub cool_timer: f64,
}

impl PptcFuse {
    pub fn new(i_trip: f64, i_hold: f64, trip_delay: f64) -> Self {
        Self {
            i_trip,
            i_hold,
            trip_delay,
            reset_delay: 10.0,
            resettable: true,
            leakage: 1e-3,
            state: FuseState::Conducting,
            heat_accumulator: 0.0,
            cool_timer: 0.0,
        }
    }

    pub fn thermal(i_trip: f64, trip_delay: f64) -> Self {
        Self {
            resettable: false,
            ..Self::new(i_trip, 0.5 * i_trip, trip_delay)
        }
    }

    pub fn is_tripped(&self) -> bool {
        self.state == FuseState::Tripped
    }

    /// Current reaching the downstream load when `demand` is offered.
    pub fn pass_current(&self, demand: f64) -> f64 {
        match self.state {
            FuseState::Conducting => demand,
            FuseState::Tripped => demand.min(self.leakage),
        }
    }

    pub fn validate(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [("i_trip", self.i_trip), ("i_hold", self.i_hold)] {
            if !(v > 0.0) {
                out.push(Violation::new(format!("{prefix}.{name}"), "must be > 0"));
            }
        }
        for (name, v) in [
            ("trip_delay", self.trip_delay),
            ("reset_delay", self.reset_delay),
            ("leakage", self.leakage),
        ] {
            if !(v >= 0.0) {
                out.push(Violation::new(format!("{prefix}.{name}"), "must be >= 0"));
            }
        }
        if !(self.i_hold < self.i_trip) {
            out.push(Violation::new(format!("{prefix}.i_hold"), "must be < i_trip"));
        }
        out
    }
}

/// Advances the fuse by `dt` with `i` flowing (or demanded, once tripped).
pub fn pptc_step(fuse: &PptcFuse, i: f64, dt: f64) -> PptcFuse {
    let mut next = *fuse;
    let i = i.abs();
    match fuse.state {
        FuseState::Conducting => {
            if i >= fuse.i_trip {
                next.heat_accumulator += dt;
                if next.heat_accumulator >= fuse.trip_delay {
                    next.state = FuseState::Tripped;
                    next.cool_timer = 0.0;
                }
            } else {
                next.heat_accumulator = 0.0;
            }
        }
        FuseState::Tripped => {
            if fuse.resettable && i <= fuse.i_hold {
                next.cool_timer += dt;
                if next.cool_timer >= fuse.reset_delay {
                    next.state = FuseState::Conducting;
                    next.heat_accumulator = 0.0;
                    next.cool_timer = 0.0;
                }
            } else {
                next.cool_timer = 0.0;
            }
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MonitorVerdict {
    Pass,
    Disconnect,
}

/// Independent over-voltage/over-current supervisor that opens a switch
/// between the device and the outside world.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundantMonitor {
    pub v_trip: f64,
    pub i_trip: f64,
    pub own_coupling: CouplingProfile,
    pub latched: bool,
}

impl RedundantMonitor {
    pub fn new(v_trip: f64, i_trip: f64) -> Self {
        Self {
            v_trip,
            i_trip,
            own_coupling: CouplingProfile::immune(InjectionPoint::ProtectionMonitor),
            latched: false,
        }
    }

    pub fn with_coupling(mut self, profile: CouplingProfile) -> Self {
        self.own_coupling = profile;
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.v_trip > 0.0) {
            out.push(Violation::new("protection.monitor.v_trip", "must be > 0"));
        }
        if !(self.i_trip > 0.0) {
            out.push(Violation::new("protection.monitor.i_trip", "must be > 0"));
        }
        out
    }
}

/// Monitor decision given the offset already injected into its voltage
/// sensing path. Disconnect latches.
pub fn monitor_step_with_offset(
    mon: &mut RedundantMonitor,
    real_v: f64,
    real_i: f64,
    v_offset: f64,
) -> MonitorVerdict {
    if !mon.latched {
        let v_meas = real_v + v_offset;
        mon.latched = v_meas > mon.v_trip || real_i > mon.i_trip;
    }
    if mon.latched {
        MonitorVerdict::Disconnect
    } else {
        MonitorVerdict::Pass
    }
}

/// Monitor decision with the attack coupled through the monitor's own
/// profile. An invalid source contributes no offset.
pub fn monitor_step(
    mon: &mut RedundantMonitor,
    real_v: f64,
    real_i: f64,
    src: Option<&AttackSource>,
) -> MonitorVerdict {
    let offset = src
        .and_then(|s| attack_offset(&mon.own_coupling, s).ok())
        .unwrap_or(0.0);
    monitor_step_with_offset(mon, real_v, real_i, offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Voltage,
    Current,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Voltage => "voltage",
            Channel::Current => "current",
        }
    }
}

/// Flags a reading that disagrees with a second, independent channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckDetector {
    pub channel: Channel,
    pub threshold: f64,
}

impl CrossCheckDetector {
    pub fn detects(&self, measured: f64, cross_check: f64) -> bool {
        (measured - cross_check).abs() > self.threshold
    }
}

/// Every countermeasure a scenario may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct Protections {
    pub filter: Option<LowPassFilterModel>,
    /// Scalar on every coupling coefficient, 1 = unshielded.
    pub shielding: f64,
    pub pptc: Option<PptcFuse>,
    pub thermal_fuse: Option<PptcFuse>,
    pub monitor: Option<RedundantMonitor>,
    pub detector: Option<CrossCheckDetector>,
}

impl Default for Protections {
    fn default() -> Self {
        Self {
            filter: None,
            shielding: 1.0,
            pptc: None,
            thermal_fuse: None,
            monitor: None,
            detector: None,
        }
    }
}

impl Protections {
    /// Factor applied to the coupling coefficient at `f`.
    pub fn coupling_scale(&self, f: f64) -> Result<f64, DomainError> {
        let filt = match &self.filter {
            Some(flt) => filter_attenuation(flt, f)?,
            None => 1.0,
        };
        Ok(filt * self.shielding)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(f) = &self.filter {
            out.extend(f.validate());
        }
        if !(self.shielding >= 0.0 && self.shielding <= 1.0) {
            out.push(Violation::new("protection.shielding", "must be in [0,1]"));
        }
        if let Some(p) = &self.pptc {
            out.extend(p.validate("protection.pptc"));
        }
        if let Some(p) = &self.thermal_fuse {
            out.extend(p.validate("protection.thermal_fuse"));
        }
        if let Some(m) = &self.monitor {
            out.extend(m.validate());
        }
        if let Some(d) = &self.detector {
            if !(d.threshold > 0.0) {
                out.push(Violation::new("protection.detector.threshold", "must be > 0"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{calibrate_kappa, ResonancePeak};
    use proptest::prelude::*;

    #[test]
    fn filter_examples() {
        let f = LowPassFilterModel::new(1e6, 20.0, 60.0);
        assert_eq!(filter_attenuation(&f, 1e5).unwrap(), 1.0);
        assert!((filter_attenuation(&f, 1e7).unwrap() - 0.1).abs() < 1e-12);
        let floor = LowPassFilterModel::new(1e6, 20.0, 40.0);
        assert!((filter_attenuation(&floor, 1e12).unwrap() - 0.01).abs() < 1e-12);
        assert!(filter_attenuation(&f, 0.0).is_err());
    }

    #[test]
    fn pptc_below_hold_never_trips() {
        let mut f = PptcFuse::new(2.0, 1.0, 5.0);
        for _ in 0..10_000 {
            f = pptc_step(&f, 0.9, 1.0);
        }
        assert_eq!(f.state, FuseState::Conducting);
    }

    #[test]
    fn pptc_trips_after_delay_and_resets() {
        let mut f = PptcFuse::new(2.0, 1.0, 5.0);
        for _ in 0..4 {
            f = pptc_step(&f, 4.0, 1.0);
        }
        assert!(!f.is_tripped());
        f = pptc_step(&f, 4.0, 1.0);
        assert!(f.is_tripped());
        assert!(f.pass_current(4.0) <= f.leakage);

        // Demand still above hold: stays tripped.
        for _ in 0..100 {
            f = pptc_step(&f, 1.5, 1.0);
        }
        assert!(f.is_tripped());
        for _ in 0..10 {
            f = pptc_step(&f, 0.5, 1.0);
        }
        assert!(!f.is_tripped());
    }

    #[test]
    fn interrupted_overcurrent_does_not_trip() {
        let mut f = PptcFuse::new(2.0, 1.0, 5.0);
        for k in 0..100 {
            f = pptc_step(&f, if k % 4 == 3 { 1.0 } else { 3.0 }, 1.0);
        }
        assert!(!f.is_tripped());
    }

    #[test]
    fn thermal_fuse_never_resets() {
        let mut f = PptcFuse::thermal(2.0, 1.0);
        f = pptc_step(&f, 3.0, 1.0);
        assert!(f.is_tripped());
        for _ in 0..10_000 {
            f = pptc_step(&f, 0.0, 1.0);
        }
        assert!(f.is_tripped());
    }

    #[test]
    fn monitor_examples() {
        let mut m = RedundantMonitor::new(5.0, 3.0);
        assert_eq!(monitor_step(&mut m, 4.5, 1.0, None), MonitorVerdict::Pass);
        assert_eq!(monitor_step(&mut m, 5.5, 1.0, None), MonitorVerdict::Disconnect);
        // Latched.
        assert_eq!(monitor_step(&mut m, 1.0, 0.0, None), MonitorVerdict::Disconnect);
    }

    #[test]
    fn monitor_defeated_by_attack_on_its_own_sensor() {
        let real_v = 5.5;
        let v_trip = 5.0;
        let src = AttackSource::new(855e6, 2.0, 0.3);
        let wanted = v_trip - real_v - 1e-3;
        let kappa = calibrate_kappa(wanted, &src).unwrap();
        let profile = CouplingProfile::single(
            InjectionPoint::ProtectionMonitor,
            ResonancePeak::new(855e6, 30.0, kappa),
        );
        let mut m = RedundantMonitor::new(v_trip, 3.0).with_coupling(profile);
        assert_eq!(
            monitor_step(&mut m, real_v, 1.0, Some(&src)),
            MonitorVerdict::Pass
        );
        let mut unattacked = m.clone();
        assert_eq!(
            monitor_step(&mut unattacked, real_v, 1.0, None),
            MonitorVerdict::Disconnect
        );
    }

    #[test]
    fn detector_threshold() {
        let d = CrossCheckDetector {
            channel: Channel::Voltage,
            threshold: 0.1,
        };
        assert!(!d.detects(4.2, 4.25));
        assert!(d.detects(4.2, 5.5));
    }

    proptest! {
        #[test]
        fn filter_monotone_and_bounded(
            fc in 1e3f64..1e9,
            roll in 1.0f64..80.0,
            floor in 0.0f64..120.0,
            a in 1e2f64..1e11,
            b in 1e2f64..1e11,
        ) {
            let flt = LowPassFilterModel::new(fc, roll, floor);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let x = filter_attenuation(&flt, lo).unwrap();
            let y = filter_attenuation(&flt, hi).unwrap();
            prop_assert!(y <= x);
            prop_assert!(x > 0.0 && x <= 1.0);
            prop_assert!(y >= 10f64.powf(-floor / 20.0) * (1.0 - 1e-12));
        }

        #[test]
        fn filtered_offset_never_larger(
            f in 1e7f64..5e9,
            kappa in -1.0f64..1.0,
            fc in 1e6f64..1e10,
        ) {
            let profile = CouplingProfile::single(
                InjectionPoint::VoltageFeedback,
                ResonancePeak::new(1e9, 20.0, kappa),
            );
            let src = AttackSource::new(f, 1.0, 1.0);
            let raw = attack_offset(&profile, &src).unwrap();
            let prot = Protections {
                filter: Some(LowPassFilterModel::new(fc, 20.0, 40.0)),
                ..Protections::default()
            };
            let filtered = raw * prot.coupling_scale(f).unwrap();
            prop_assert!(filtered.abs() <= raw.abs());
            if f > fc && raw != 0.0 {
                prop_assert!(filtered.abs() < raw.abs());
            }
        }

        #[test]
        fn immune_monitor_ignores_any_source(
            f in 1e6f64..1e10,
            p in 0.0f64..1e3,
            d in 0.01f64..100.0,
            v in 0.0f64..10.0,
        ) {
            let src = AttackSource::new(f, p, d);
            let mut attacked = RedundantMonitor::new(5.0, 3.0);
            let mut quiet = attacked.clone();
            prop_assert_eq!(
                monitor_step(&mut attacked, v, 1.0, Some(&src)),
                monitor_step(&mut quiet, v, 1.0, None)
            );
        }
    }
}
