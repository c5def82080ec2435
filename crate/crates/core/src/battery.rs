//! Thevenin-equivalent cell: an ideal source following an open-circuit
//! voltage curve, in series with a fixed resistance, plus a lumped thermal
//! node and threshold-driven damage states.

use crate::model::Violation;

/// Zero degrees Celsius in kelvin.
pub const ZERO_CELSIUS: f64 = 273.15;

pub fn celsius(c: f64) -> f64 {
    c + ZERO_CELSIUS
}

/// Piecewise-linear, strictly increasing map from state of charge to volts.
/// Extrapolates linearly past both ends so overcharge states keep rising.
#[derive(Debug, Clone, PartialEq)]
pub struct OcvCurve {
    knots: Vec<(f64, f64)>,
}

impl OcvCurve {
    /// Returns `None` unless there are at least two knots strictly
    /// increasing in both coordinates.
    pub fn new(knots: Vec<(f64, f64)>) -> Option<Self> {
        let ok = knots.len() >= 2
            && knots.iter().all(|(s, v)| s.is_finite() && v.is_finite())
            && knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
        ok.then_some(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn voltage(&self, soc: f64) -> f64 {
        let k = &self.knots;
        let seg = match k.iter().position(|&(s, _)| soc <= s) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => k.len() - 2,
        };
        let (s0, v0) = k[seg];
        let (s1, v1) = k[seg + 1];
        v0 + (soc - s0) * (v1 - v0) / (s1 - s0)
    }
}

impl Default for OcvCurve {
    fn default() -> Self {
        Self {
            knots: vec![(0.0, 3.0), (0.1, 3.5), (0.9, 4.0), (1.0, 4.2)],
        }
    }
}

/// Ordered by severity; a cell only ever moves to a more severe state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Health {
    #[default]
    Nominal,
    Bulged,
    Failed,
    ThermalRunaway,
}

impl Health {
    pub fn name(self) -> &'static str {
        match self {
            Health::Nominal => "nominal",
            Health::Bulged => "bulged",
            Health::Failed => "failed",
            Health::ThermalRunaway => "thermal_runaway",
        }
    }
}

/// Static cell parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    pub capacity: f64,
    pub ocv_curve: OcvCurve,
    pub r_esr: f64,
    pub thermal_mass: f64,
    /// Heat loss to ambient, W/K.
    pub dissipation: f64,
    pub ambient: f64,
    /// Open-circuit voltage above which overcharge damage accumulates.
    pub v_fail: f64,
    /// Fraction of `(ocv - v_fail) * i` released as heat while overcharged.
    pub overcharge_heat: f64,
    /// Time above `v_fail` before the cell bulges.
    pub tau_bulge: f64,
    pub t_collapse: f64,
    pub t_runaway: f64,
    /// Rate, V/s, at which a failed cell's voltage falls to zero.
    pub r_collapse: f64,
}

impl CellParams {
    /// Generic Li-ion cell with the given capacity (coulombs).
    pub fn li_ion(capacity: f64, r_esr: f64) -> Self {
        Self {
            capacity,
            ocv_curve: OcvCurve::default(),
            r_esr,
            thermal_mass: 45.0,
            dissipation: 0.03,
            ambient: celsius(25.0),
            v_fail: 4.3,
            overcharge_heat: 1.0,
            tau_bulge: 600.0,
            t_collapse: celsius(80.0),
            t_runaway: celsius(120.0),
            r_collapse: 0.1,
        }
    }

    /// 3000 mAh 18650 cell with the overcharge and thermal constants fitted
    /// to its destructive overcharge timeline (about 2 h to 80 C while a
    /// charger holds 5.5 V). These are fits, not measurements.
    pub fn cell_18650() -> Self {
        Self {
            capacity: 3.0 * 3600.0,
            ocv_curve: OcvCurve {
                knots: vec![(0.0, 3.0), (0.1, 3.5), (0.9, 4.0), (1.0, 4.2), (1.2, 5.6)],
            },
            r_esr: 0.4,
            thermal_mass: 60.0,
            dissipation: 0.005,
            ambient: celsius(25.0),
            v_fail: 4.3,
            overcharge_heat: 2.0,
            tau_bulge: 600.0,
            t_collapse: celsius(80.0),
            t_runaway: celsius(120.0),
            r_collapse: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryState {
    pub params: CellParams,
    /// May exceed 1 transiently while overcharged.
    pub soc: f64,
    pub temperature: f64,
    pub health: Health,
    /// Continuous time spent with OCV above `v_fail`.
    pub overvoltage_time: f64,
    /// Voltage lost to collapse after failure.
    pub collapse_drop: f64,
}

impl BatteryState {
    /// Fresh cell at ambient temperature.
    pub fn new(params: CellParams, soc: f64) -> Self {
        let temperature = params.ambient;
        Self {
            params,
            soc,
            temperature,
            health: Health::Nominal,
            overvoltage_time: 0.0,
            collapse_drop: 0.0,
        }
    }

    /// Cell voltage V_cell.
    pub fn ocv(&self) -> f64 {
        (self.params.ocv_curve.voltage(self.soc) - self.collapse_drop).max(0.0)
    }

    pub fn r_esr(&self) -> f64 {
        self.params.r_esr
    }

    pub fn is_destroyed(&self) -> bool {
        self.health >= Health::Failed
    }

    pub fn validate(&self) -> Vec<Violation> {
        let p = &self.params;
        let mut out = Vec::new();
        let mut positive = |field: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(field, format!("must be > 0 (got {v})")));
            }
        };
        positive("battery.capacity", p.capacity);
        positive("battery.r_esr", p.r_esr);
        positive("battery.thermal_mass", p.thermal_mass);
        positive("battery.ambient", p.ambient);
        positive("battery.v_fail", p.v_fail);
        positive("battery.tau_bulge", p.tau_bulge);
        positive("battery.t_collapse", p.t_collapse);
        positive("battery.t_runaway", p.t_runaway);
        positive("battery.r_collapse", p.r_collapse);
        positive("battery.temperature", self.temperature);
        if !(p.dissipation >= 0.0) {
            out.push(Violation::new("battery.dissipation", "must be >= 0"));
        }
        if !(p.overcharge_heat >= 0.0) {
            out.push(Violation::new("battery.overcharge_heat", "must be >= 0"));
        }
        if !self.soc.is_finite() || self.soc < 0.0 {
            out.push(Violation::new("battery.soc", "must be >= 0"));
        }
        out
    }
}

/// Current that flows when the terminals are held at `v_charger`.
/// Negative means the cell discharges into the source.
pub fn charge_current(v_charger: f64, battery: &BatteryState) -> f64 {
    (v_charger - battery.ocv()) / battery.r_esr()
}

/// Terminal voltage while `i` flows into the cell.
pub fn terminal_voltage(battery: &BatteryState, i: f64) -> f64 {
    battery.ocv() + i * battery.r_esr()
}

/// Advances the cell by `dt` seconds with charge current `i` (forward Euler).
pub fn step(battery: &BatteryState, i: f64, dt: f64) -> BatteryState {
    let p = &battery.params;
    let mut next = battery.clone();
    let ocv = battery.ocv();

    next.soc += i * dt / p.capacity;

    let joule = i * i * p.r_esr;
    let overcharge = p.overcharge_heat * (ocv - p.v_fail).max(0.0) * i.max(0.0);
    let loss = p.dissipation * (battery.temperature - p.ambient);
    next.temperature += (joule + overcharge - loss) * dt / p.thermal_mass;

    if ocv > p.v_fail {
        next.overvoltage_time += dt;
    } else {
        next.overvoltage_time = 0.0;
    }

    let mut health = battery.health;
    if health == Health::Nominal && next.overvoltage_time >= p.tau_bulge {
        health = Health::Bulged;
    }
    if health == Health::Bulged && next.temperature >= p.t_collapse {
        health = Health::Failed;
    }
    if next.temperature >= p.t_runaway {
        health = Health::ThermalRunaway;
    }
    next.health = health.max(battery.health);

    if battery.health >= Health::Failed {
        next.collapse_drop += p.r_collapse * dt;
    }
    next
}
