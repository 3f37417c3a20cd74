//! Wearable energy model.
//!
//! A device has a battery, a sleep floor, one personal sensor that always runs,
//! an optional collective (operator) sensor gated by the participation policy,
//! and a radio that sends one report per active sensor every report period.
//! Sensing is charged as average power; each report is a discrete deduction.

use std::fmt;
use std::str::FromStr;

use crate::error::{param, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorKind {
    Personal,
    Collective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub name: String,
    pub active_power_w: f64,
    pub active_time_s: f64,
    pub period_s: f64,
    pub kind: SensorKind,
}

impl SensorSpec {
    /// Accelerometer in a pedometer application.
    pub fn pedometer() -> Self {
        Self {
            name: "pedometer".into(),
            active_power_w: 28.5e-6,
            active_time_s: 1.0,
            period_s: 1.0,
            kind: SensorKind::Personal,
        }
    }

    /// Gas and volatile organic compounds sensor.
    pub fn gas_voc() -> Self {
        Self {
            name: "gas_voc".into(),
            active_power_w: 32e-3,
            active_time_s: 25e-3,
            period_s: 100.0,
            kind: SensorKind::Collective,
        }
    }

    pub fn avg_power_w(&self) -> f64 {
        self.active_power_w * self.active_time_s / self.period_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.active_time_s > 0.0 && self.active_time_s <= self.period_s) {
            return Err(param(
                "sensor_active_s",
                format!(
                    "{}: need 0 < active time ({}) <= period ({})",
                    self.name, self.active_time_s, self.period_s
                ),
            ));
        }
        if !(self.active_power_w >= 0.0 && self.active_power_w.is_finite()) {
            return Err(param("sensor_power_w", format!("{}: must be non-negative", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadioKind {
    Ble,
    Lora,
    Zigbee,
}

impl RadioKind {
    pub const ALL: [RadioKind; 3] = [RadioKind::Ble, RadioKind::Lora, RadioKind::Zigbee];
}

impl fmt::Display for RadioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadioKind::Ble => "ble",
            RadioKind::Lora => "lora",
            RadioKind::Zigbee => "zigbee",
        })
    }
}

impl FromStr for RadioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ble" => Ok(RadioKind::Ble),
            "lora" => Ok(RadioKind::Lora),
            "zigbee" => Ok(RadioKind::Zigbee),
            other => Err(param("radio", format!("unknown radio `{other}`"))),
        }
    }
}

/// Radio whose airtime for a `D`-byte payload is
/// `intercept_ms + (D + overhead_bytes) / bytes_per_ms` milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioSpec {
    pub kind: RadioKind,
    pub intercept_ms: f64,
    pub overhead_bytes: f64,
    pub bytes_per_ms: f64,
    pub tx_power_w: f64,
    pub report_period_s: f64,
    pub payload_bytes: u32,
}

impl RadioSpec {
    pub fn preset(kind: RadioKind) -> Self {
        let (intercept_ms, overhead_bytes, bytes_per_ms, tx_power_w) = match kind {
            // Bluetooth Smart, advertisement channels
            RadioKind::Ble => (0.15, 10.0, 125.0, 18.3e-3),
            // LoRaWAN at its highest rate
            RadioKind::Lora => (0.215, 23.0, 6.25, 40e-3),
            // IEEE 802.15.4, 2450 MHz DSSS PHY
            RadioKind::Zigbee => (1.0, 15.0, 31.25, 18.3e-3),
        };
        Self {
            kind,
            intercept_ms,
            overhead_bytes,
            bytes_per_ms,
            tx_power_w,
            report_period_s: 5.0,
            payload_bytes: 32,
        }
    }

    pub fn tx_time_s(&self, payload_bytes: u32) -> f64 {
        (self.intercept_ms + (f64::from(payload_bytes) + self.overhead_bytes) / self.bytes_per_ms)
            * 1e-3
    }

    pub fn report_energy_j(&self) -> f64 {
        self.tx_power_w * self.tx_time_s(self.payload_bytes)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.report_period_s > 0.0) {
            return Err(param("report_period_s", "must be positive"));
        }
        if !(self.bytes_per_ms > 0.0 && self.tx_power_w >= 0.0) {
            return Err(param("radio", "invalid radio coefficients"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// No crowd sensing: the collective sensor never runs.
    Default,
    /// Collective sensor always on.
    Always,
    /// Run the collective sensor once its own energy has been harvested.
    Policy1,
    /// Run it only once the harvest also covers the personal workload.
    Policy2,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Default, Policy::Always, Policy::Policy1, Policy::Policy2];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Default => "default",
            Policy::Always => "always",
            Policy::Policy1 => "policy1",
            Policy::Policy2 => "policy2",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Policy::Default),
            "always" => Ok(Policy::Always),
            "policy1" => Ok(Policy::Policy1),
            "policy2" => Ok(Policy::Policy2),
            other => Err(param("policy", format!("unknown policy `{other}`"))),
        }
    }
}

/// Static description shared by every device of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub battery_capacity_j: f64,
    pub sleep_power_w: f64,
    pub personal: SensorSpec,
    pub collective: Option<SensorSpec>,
    pub radio: RadioSpec,
    pub policy: Policy,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self {
            battery_capacity_j: 37.7,
            sleep_power_w: 1e-6,
            personal: SensorSpec::pedometer(),
            collective: Some(SensorSpec::gas_voc()),
            radio: RadioSpec::preset(RadioKind::Ble),
            policy: Policy::Always,
        }
    }
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.battery_capacity_j > 0.0 && self.battery_capacity_j.is_finite()) {
            return Err(param("battery_capacity_j", "must be positive"));
        }
        if !(self.sleep_power_w >= 0.0) {
            return Err(param("sleep_power_w", "must be non-negative"));
        }
        self.personal.validate()?;
        if let Some(c) = &self.collective {
            c.validate()?;
        }
        self.radio.validate()
    }

    /// Period between policy decisions: the collective sensing period.
    pub fn collective_period_s(&self) -> Option<f64> {
        self.collective.as_ref().map(|c| c.period_s)
    }

    fn report_power_w(&self) -> f64 {
        self.radio.report_energy_j() / self.radio.report_period_s
    }

    /// Sleep, personal sensing and the personal report stream.
    pub fn personal_consumption_w(&self) -> f64 {
        self.sleep_power_w + self.personal.avg_power_w() + self.report_power_w()
    }

    /// Average draw with or without the collective sensor running.
    pub fn mean_consumption_w(&self, collective_active: bool) -> f64 {
        let mut w = self.personal_consumption_w();
        if collective_active {
            if let Some(c) = &self.collective {
                w += c.avg_power_w() + self.report_power_w();
            }
        }
        w
    }

    /// Energy the collective stream needs over one collective period.
    pub fn collective_window_energy_j(&self) -> f64 {
        self.collective.as_ref().map_or(0.0, |c| {
            c.active_power_w * c.active_time_s + c.period_s * self.report_power_w()
        })
    }

    /// Energy the personal workload needs over one collective period.
    pub fn personal_window_energy_j(&self) -> f64 {
        self.collective_period_s()
            .map_or(0.0, |p| self.personal_consumption_w() * p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub battery_j: f64,
    /// Harvested energy not yet spent on policy activations.
    pub credit_j: f64,
    pub collective_active: bool,
    pub collective_scheduled: u64,
    pub collective_delivered: u64,
    pub alive: bool,
    pub depletion_time_s: Option<f64>,
    next_report: u64,
}

impl DeviceState {
    /// Full battery, empty credit.
    pub fn new(spec: &DeviceSpec) -> Self {
        Self {
            battery_j: spec.battery_capacity_j,
            credit_j: 0.0,
            collective_active: false,
            collective_scheduled: 0,
            collective_delivered: 0,
            alive: true,
            depletion_time_s: None,
            next_report: 0,
        }
    }

    pub fn with_battery(spec: &DeviceSpec, battery_j: f64) -> Self {
        Self {
            battery_j: battery_j.clamp(0.0, spec.battery_capacity_j),
            ..Self::new(spec)
        }
    }

    pub fn mean_consumption_w(&self, spec: &DeviceSpec) -> f64 {
        spec.mean_consumption_w(self.collective_active)
    }
}

/// Decides whether the collective sensor runs for the coming collective period
/// and books the decision. Activations spend credit.
pub fn policy_gate(spec: &DeviceSpec, state: &mut DeviceState) -> bool {
    if spec.collective.is_none() {
        state.collective_active = false;
        return false;
    }
    state.collective_scheduled += 1;
    let active = state.alive
        && match spec.policy {
            Policy::Default => false,
            Policy::Always => true,
            Policy::Policy1 => spend(state, spec.collective_window_energy_j()),
            Policy::Policy2 => spend(
                state,
                spec.collective_window_energy_j() + spec.personal_window_energy_j(),
            ),
        };
    state.collective_active = active;
    if active {
        state.collective_delivered += 1;
    }
    active
}

fn spend(state: &mut DeviceState, cost_j: f64) -> bool {
    if state.credit_j >= cost_j {
        state.credit_j -= cost_j;
        true
    } else {
        false
    }
}

/// Energy booked during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepEnergy {
    pub harvested_j: f64,
    pub consumed_j: f64,
    /// True when the battery hit either bound this step.
    pub clamped: bool,
}

/// Advances the battery over `[clock_s, clock_s + dt_s)`. Reports due in that
/// window are deducted as discrete events. Dead devices book nothing.
pub fn step_energy(
    spec: &DeviceSpec,
    state: &mut DeviceState,
    harvested_w: f64,
    dt_s: f64,
    clock_s: f64,
) -> StepEnergy {
    if !state.alive {
        return StepEnergy::default();
    }
    let mut sensing_w = spec.sleep_power_w + spec.personal.avg_power_w();
    let mut streams = 1.0;
    if state.collective_active {
        if let Some(c) = &spec.collective {
            sensing_w += c.avg_power_w();
            streams += 1.0;
        }
    }
    let mut consumed_j = sensing_w * dt_s;

    let period = spec.radio.report_period_s;
    let window_end = clock_s + dt_s - 1e-9 * clock_s.max(1.0);
    let mut reports = 0u32;
    while (state.next_report as f64) * period < window_end {
        state.next_report += 1;
        reports += 1;
    }
    consumed_j += f64::from(reports) * streams * spec.radio.report_energy_j();

    let harvested_j = harvested_w * dt_s;
    let cap = spec.battery_capacity_j;
    let raw = state.battery_j + harvested_j - consumed_j;
    state.battery_j = raw.clamp(0.0, cap);
    state.credit_j = (state.credit_j + harvested_j).min(cap);
    if raw <= 0.0 {
        state.alive = false;
        state.collective_active = false;
        state.depletion_time_s = Some(clock_s + dt_s);
    }
    StepEnergy {
        harvested_j,
        consumed_j,
        clamped: raw < 0.0 || raw > cap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn tx_times_from_formulas() {
        let ble = RadioSpec::preset(RadioKind::Ble);
        let lora = RadioSpec::preset(RadioKind::Lora);
        let zig = RadioSpec::preset(RadioKind::Zigbee);
        assert!((ble.tx_time_s(32) - 0.486e-3).abs() < 1e-6);
        assert!((lora.tx_time_s(32) - 9.015e-3).abs() < 1e-6);
        assert!((zig.tx_time_s(32) - 2.504e-3).abs() < 1e-6);
        assert!((ble.tx_time_s(0) - 0.23e-3).abs() < 1e-12);
    }

    #[test]
    fn report_energies() {
        let e = |k| RadioSpec::preset(k).report_energy_j();
        assert!(rel(e(RadioKind::Ble), 8.894e-6) < 0.005);
        assert!(rel(e(RadioKind::Lora), 360.6e-6) < 0.001);
        assert!(rel(e(RadioKind::Zigbee), 45.82e-6) < 0.001);
    }

    #[test]
    fn mean_consumption_closed_forms() {
        let mut spec = DeviceSpec::default();
        assert!(rel(spec.mean_consumption_w(false), 31.28e-6) < 1e-3);
        assert!(rel(spec.mean_consumption_w(true), 41.06e-6) < 1e-3);
        spec.radio = RadioSpec::preset(RadioKind::Lora);
        assert!(rel(spec.mean_consumption_w(true), 181.7e-6) < 1e-3);
        assert!(rel(spec.mean_consumption_w(false), 101.6e-6) < 1e-3);
    }

    #[test]
    fn policy1_gate() {
        let spec = DeviceSpec {
            policy: Policy::Policy1,
            ..Default::default()
        };
        let e_coll = spec.collective_window_energy_j();
        // 0.8 mJ sensing + 20 BLE reports
        assert!(rel(e_coll, 0.8e-3 + 20.0 * 8.894e-6) < 1e-3);
        let mut st = DeviceState::new(&spec);
        assert!(!policy_gate(&spec, &mut st));
        st.credit_j = 2.0 * e_coll;
        assert!(policy_gate(&spec, &mut st));
        assert!((st.credit_j - e_coll).abs() < 1e-15);
        assert_eq!((st.collective_scheduled, st.collective_delivered), (2, 1));
    }

    #[test]
    fn policy2_threshold_is_strict() {
        let spec = DeviceSpec {
            policy: Policy::Policy2,
            ..Default::default()
        };
        let need = spec.collective_window_energy_j() + spec.personal_window_energy_j();
        let mut st = DeviceState::new(&spec);
        st.credit_j = need - 1e-12;
        assert!(!policy_gate(&spec, &mut st));
        st.credit_j = need;
        assert!(policy_gate(&spec, &mut st));
        assert!(st.credit_j.abs() < 1e-15);
    }

    #[test]
    fn default_and_always_gates() {
        let mut spec = DeviceSpec {
            policy: Policy::Default,
            ..Default::default()
        };
        let mut st = DeviceState::new(&spec);
        st.credit_j = 10.0;
        assert!(!policy_gate(&spec, &mut st));
        spec.policy = Policy::Always;
        st.credit_j = 0.0;
        assert!(policy_gate(&spec, &mut st));
    }

    #[test]
    fn equilibrium_keeps_battery() {
        let spec = DeviceSpec::default();
        let mut st = DeviceState::with_battery(&spec, 10.0);
        st.collective_active = true;
        // step between report instants: only average sensing power is due
        st.next_report = 1;
        let sensing = spec.sleep_power_w + spec.personal.avg_power_w() + SensorSpec::gas_voc().avg_power_w();
        let e = step_energy(&spec, &mut st, sensing, 1.0, 1.0);
        assert_eq!(e.consumed_j, e.harvested_j);
        assert!((st.battery_j - 10.0).abs() < 1e-15);
    }

    #[test]
    fn full_battery_clamps() {
        let spec = DeviceSpec::default();
        let mut st = DeviceState::new(&spec);
        let e = step_energy(&spec, &mut st, 1e-3, 1.0, 0.0);
        assert!(e.clamped);
        assert_eq!(st.battery_j, 37.7);
        assert!(st.credit_j <= 37.7);
    }

    #[test]
    fn zero_harvest_depletion_time() {
        let spec = DeviceSpec {
            policy: Policy::Default,
            ..Default::default()
        };
        let mut st = DeviceState::new(&spec);
        let mut t = 0.0;
        let dt = 1.0;
        let mut k = 0u64;
        while st.alive {
            if k.is_multiple_of(100) {
                policy_gate(&spec, &mut st);
            }
            step_energy(&spec, &mut st, 0.0, dt, t);
            k += 1;
            t = k as f64 * dt;
        }
        let expected = 37.7 / spec.mean_consumption_w(false);
        assert!(rel(st.depletion_time_s.unwrap(), expected) < 0.005);
        assert!(rel(expected, 1.205e6) < 0.005);
    }

    #[test]
    fn dead_device_books_nothing() {
        let spec = DeviceSpec::default();
        let mut st = DeviceState::with_battery(&spec, 0.0);
        step_energy(&spec, &mut st, 0.0, 1.0, 0.0);
        assert!(!st.alive);
        let t = st.depletion_time_s;
        assert_eq!(step_energy(&spec, &mut st, 1.0, 1.0, 1.0), StepEnergy::default());
        assert_eq!(st.depletion_time_s, t);
        assert!(!policy_gate(&spec, &mut st));
    }

    #[test]
    fn reports_fire_every_period_with_fractional_steps() {
        let spec = DeviceSpec {
            policy: Policy::Default,
            ..Default::default()
        };
        let mut st = DeviceState::new(&spec);
        let dt = 0.1;
        let mut reports = 0;
        for k in 0..10_000u64 {
            let before = st.next_report;
            step_energy(&spec, &mut st, 1.0, dt, k as f64 * dt);
            reports += st.next_report - before;
        }
        // 1000 s horizon, one report at t = 0, 5, ..., 995
        assert_eq!(reports, 200);
    }

    #[test]
    fn sensor_validation() {
        let mut s = SensorSpec::gas_voc();
        s.active_time_s = 200.0;
        assert!(s.validate().is_err());
        assert!((SensorSpec::gas_voc().avg_power_w() - 8e-6).abs() < 1e-18);
    }
}
