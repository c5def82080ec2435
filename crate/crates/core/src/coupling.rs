//! Conversion of an attacker transmission into a signed DC offset at a
//! feedback comparison point.
//!
//! The receiving trace behaves as a low-gain antenna, so received power
//! scales as `G * P_T / d^2`. A second-order nonlinearity followed by the
//! circuit's own low-pass filtering turns the induced RF amplitude into a
//! DC term proportional to `A^2`, hence to received power. Everything that
//! is device-specific (trace impedance, nonlinearity coefficient, resonance)
//! is folded into a signed, frequency-dependent coefficient `kappa(f)` in
//! volts per watt of received power.

use crate::error::DomainError;
use crate::model::AttackSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InjectionPoint {
    VoltageFeedback,
    CurrentFeedback,
    ProtectionMonitor,
}

impl InjectionPoint {
    pub fn name(self) -> &'static str {
        match self {
            InjectionPoint::VoltageFeedback => "voltage_feedback",
            InjectionPoint::CurrentFeedback => "current_feedback",
            InjectionPoint::ProtectionMonitor => "protection_monitor",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            InjectionPoint::VoltageFeedback,
            InjectionPoint::CurrentFeedback,
            InjectionPoint::ProtectionMonitor,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

/// Lorentzian resonance in normalized detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePeak {
    pub center_freq: f64,
    pub quality_q: f64,
    /// Signed; the sign is that of the nonlinearity's quadratic term.
    pub peak_kappa: f64,
}

impl ResonancePeak {
    pub fn new(center_freq: f64, quality_q: f64, peak_kappa: f64) -> Self {
        Self {
            center_freq,
            quality_q,
            peak_kappa,
        }
    }

    /// Unit-height response at `f` (1 at the center frequency).
    pub fn shape(&self, f: f64) -> f64 {
        let detune = f / self.center_freq - self.center_freq / f;
        1.0 / (1.0 + self.quality_q * self.quality_q * detune * detune)
    }
}

/// Coupling into one injection point. An empty peak list means the point
/// does not respond to the attack.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    pub peaks: Vec<ResonancePeak>,
    pub injection_point: InjectionPoint,
}

impl CouplingProfile {
    pub fn new(injection_point: InjectionPoint, peaks: Vec<ResonancePeak>) -> Self {
        Self {
            peaks,
            injection_point,
        }
    }

    pub fn immune(injection_point: InjectionPoint) -> Self {
        Self::new(injection_point, Vec::new())
    }

    pub fn single(injection_point: InjectionPoint, peak: ResonancePeak) -> Self {
        Self::new(injection_point, vec![peak])
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Upper bound of `|kappa(f)|` over all frequencies.
    pub fn kappa_bound(&self) -> f64 {
        self.peaks.iter().map(|p| p.peak_kappa.abs()).sum()
    }
}

/// Received power `G * P_T / d^2`.
pub fn received_power(src: &AttackSource) -> Result<f64, DomainError> {
    if !(src.distance > 0.0) {
        return Err(DomainError::NonPositiveDistance(src.distance));
    }
    Ok(src.coupling_gain * src.power_tx / (src.distance * src.distance))
}

/// DC term `c * A^2 / 4` left after low-pass filtering the quadratic
/// response to `A sin(wt)`.
pub fn demodulated_offset(amplitude: f64, c: f64) -> f64 {
    c * amplitude * amplitude / 4.0
}

/// Signed coupling coefficient at frequency `f`, in volts per received watt.
pub fn kappa_at(profile: &CouplingProfile, f: f64) -> Result<f64, DomainError> {
    if !(f > 0.0) {
        return Err(DomainError::NonPositiveFrequency(f));
    }
    Ok(profile.peaks.iter().map(|p| p.peak_kappa * p.shape(f)).sum())
}

/// Offset injected at the comparison point by `src`.
pub fn attack_offset(profile: &CouplingProfile, src: &AttackSource) -> Result<f64, DomainError> {
    let kappa = kappa_at(profile, src.frequency)?;
    Ok(kappa * received_power(src)?)
}

/// Coefficient that makes `src` produce `observed_offset`.
pub fn calibrate_kappa(observed_offset: f64, src: &AttackSource) -> Result<f64, DomainError> {
    let p = received_power(src)?;
    if p == 0.0 {
        return Err(DomainError::ZeroReceivedPower);
    }
    Ok(observed_offset / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn src(f: f64, p: f64, d: f64) -> AttackSource {
        AttackSource::new(f, p, d)
    }

    #[test]
    fn received_power_examples() {
        assert_eq!(received_power(&src(1e9, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(received_power(&src(1e9, 4.0, 2.0)).unwrap(), 1.0);
        let near = received_power(&src(1e9, 3.0, 1.5)).unwrap();
        let far = received_power(&src(1e9, 3.0, 3.0)).unwrap();
        assert_eq!(far, near / 4.0);
        assert!(received_power(&src(1e9, 1.0, 0.0)).is_err());
        assert!(received_power(&src(1e9, 1.0, -2.0)).is_err());
    }

    #[test]
    fn demodulation_examples() {
        assert_eq!(demodulated_offset(0.0, 3.0), 0.0);
        assert_eq!(demodulated_offset(1.0, -2.0), -0.5);
        let a = demodulated_offset(0.3, 1.7);
        let b = demodulated_offset(0.6, 1.7);
        assert!((b - 4.0 * a).abs() < 1e-15);
    }

    #[test]
    fn demodulation_matches_time_average() {
        // Low-pass of c/2 * (A sin wt)^2 is its mean over one period.
        let (a, c) = (0.8, -1.3);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|k| {
                let x = a * (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin();
                c * x * x / 2.0
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - demodulated_offset(a, c)).abs() < 1e-9);
    }

    #[test]
    fn kappa_at_center_and_far_away() {
        let p = CouplingProfile::single(
            InjectionPoint::VoltageFeedback,
            ResonancePeak::new(1.29e9, 40.0, 0.05),
        );
        assert_eq!(kappa_at(&p, 1.29e9).unwrap(), 0.05);
        assert!(kappa_at(&p, 1e18).unwrap().abs() < 1e-9 * 0.05);
        assert!(kappa_at(&p, 0.0).is_err());
    }

    #[test]
    fn opposite_peaks_cross_zero() {
        let p = CouplingProfile::new(
            InjectionPoint::CurrentFeedback,
            vec![
                ResonancePeak::new(400e6, 20.0, 0.02),
                ResonancePeak::new(900e6, 25.0, -0.03),
            ],
        );
        // Dense evaluation: find a sign change strictly between the peaks.
        let n = 10_000;
        let mut prev = kappa_at(&p, 400e6).unwrap();
        assert!(prev > 0.0);
        let mut crossing = None;
        for k in 1..=n {
            let f = 400e6 + 500e6 * k as f64 / n as f64;
            let cur = kappa_at(&p, f).unwrap();
            if prev > 0.0 && cur <= 0.0 {
                crossing = Some(f);
                break;
            }
            prev = cur;
        }
        let f0 = crossing.expect("no sign change between peaks");
        assert!(f0 > 400e6 && f0 < 900e6);
    }

    #[test]
    fn attack_offset_direct_evaluation() {
        let p = CouplingProfile::single(
            InjectionPoint::VoltageFeedback,
            ResonancePeak::new(1e9, 30.0, 0.05),
        );
        let off = attack_offset(&p, &src(1e9, 0.08, 1.0)).unwrap();
        assert!((off - 0.004).abs() < 1e-15);
        assert_eq!(attack_offset(&p, &src(1e9, 0.0, 1.0)).unwrap(), 0.0);
        let lo = attack_offset(&p, &src(1.1e9, 0.08, 1.0)).unwrap();
        let hi = attack_offset(&p, &src(1.1e9, 8.0, 1.0)).unwrap();
        assert!((hi / lo - 100.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_kappa_examples() {
        let s = src(1e9, 0.5, 0.7);
        assert_eq!(calibrate_kappa(0.0, &s).unwrap(), 0.0);
        assert!(matches!(
            calibrate_kappa(0.1, &src(1e9, 0.0, 1.0)),
            Err(DomainError::ZeroReceivedPower)
        ));
        let k = calibrate_kappa(0.0123, &s).unwrap();
        let p = CouplingProfile::single(InjectionPoint::CurrentFeedback, ResonancePeak::new(1e9, 10.0, k));
        let off = attack_offset(&p, &s).unwrap();
        assert!(((off - 0.0123) / 0.0123).abs() < 1e-12);
        assert_eq!(calibrate_kappa(off, &s).unwrap(), k);
    }

    fn arb_profile() -> impl Strategy<Value = CouplingProfile> {
        prop::collection::vec(
            (1e7f64..5e9, 0.5f64..200.0, -1.0f64..1.0).prop_map(|(f, q, k)| ResonancePeak::new(f, q, k)),
            1..4,
        )
        .prop_map(|peaks| CouplingProfile::new(InjectionPoint::VoltageFeedback, peaks))
    }

    proptest! {
        #[test]
        fn linear_in_power_inverse_square_in_distance(
            profile in arb_profile(),
            f in 1e7f64..5e9,
            p in 1e-4f64..50.0,
            d in 0.05f64..20.0,
        ) {
            let base = attack_offset(&profile, &src(f, p, d)).unwrap();
            let doubled_p = attack_offset(&profile, &src(f, 2.0 * p, d)).unwrap();
            let doubled_d = attack_offset(&profile, &src(f, p, 2.0 * d)).unwrap();
            prop_assert!((doubled_p - 2.0 * base).abs() <= 1e-12 * base.abs().max(1e-300));
            prop_assert!((doubled_d - base / 4.0).abs() <= 1e-12 * base.abs().max(1e-300));
            let k = kappa_at(&profile, f).unwrap();
            prop_assert_eq!(base.signum(), k.signum());
            prop_assert!(k.abs() <= profile.kappa_bound() * (1.0 + 1e-12));
        }
    }
}
