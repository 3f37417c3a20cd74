//! Scenario configuration and its flat `key = value` representation.

use std::fmt;
use std::str::FromStr;

use crate::device::{DeviceSpec, Policy, RadioKind, RadioSpec};
use crate::error::{param, Error, Result};
use crate::mobility::SpeedModel;
use crate::wpt::{Antenna, BlockageGeometry, LinkBudgetParams};

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "expected one of {}, got `{other}`",
                        [$($text),+].join("|")
                    )),
                }
            }
        }
    };
}

keyword_enum!(LayoutKind { Manhattan => "manhattan", Random => "random" });
keyword_enum!(BeaconMode {
    StaticRegular => "static_regular",
    StaticRandom => "static_random",
    Mobile => "mobile",
});
keyword_enum!(AntennaKind { Omni => "omni", Directional => "directional" });

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub layout: LayoutKind,
    pub area_side_m: f64,
    pub block_m: f64,
    /// Pitch jitter of the random layout, as a fraction of the mean pitch.
    pub block_jitter_frac: f64,
    pub street_width_m: f64,
    pub road_width_m: f64,

    pub beacon_mode: BeaconMode,
    pub beacon_count: usize,
    pub antenna: AntennaKind,
    pub max_beams: usize,
    pub link: LinkBudgetParams,
    pub blockage: BlockageGeometry,
    /// Share of the pedestrian population that carries a participating wearable.
    pub participant_fraction: f64,

    pub device: DeviceSpec,
    pub participants: usize,
    pub background_vehicles: usize,
    pub speeds: SpeedModel,

    pub dt_s: f64,
    pub horizon_s: f64,
    pub replications: usize,
    pub master_seed: u64,
    /// Sampling interval of the battery trace; 0 disables it.
    pub soc_trace_interval_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            layout: LayoutKind::Manhattan,
            area_side_m: 400.0,
            block_m: 100.0,
            block_jitter_frac: 0.3,
            street_width_m: 20.0,
            road_width_m: 5.0,
            beacon_mode: BeaconMode::StaticRegular,
            beacon_count: 32,
            antenna: AntennaKind::Directional,
            max_beams: Antenna::MAX_BEAMS,
            link: LinkBudgetParams::default(),
            blockage: BlockageGeometry::default(),
            participant_fraction: 0.1,
            device: DeviceSpec::default(),
            participants: 100,
            background_vehicles: 0,
            speeds: SpeedModel::default(),
            dt_s: 1.0,
            horizon_s: 30.0 * 86_400.0,
            replications: 10,
            master_seed: 1,
            soc_trace_interval_s: 0.0,
        }
    }
}

/// Every recognized key, in echo order.
pub const KEYS: &[&str] = &[
    "layout",
    "area_side_m",
    "block_m",
    "block_jitter_frac",
    "street_width_m",
    "road_width_m",
    "beacon_mode",
    "beacon_count",
    "antenna",
    "tx_gain_dir_dbi",
    "max_beams",
    "beacon_height_m",
    "frequency_hz",
    "tx_power_dbm",
    "tx_gain_omni_dbi",
    "rx_gain_dbi",
    "sensitivity_dbm",
    "conversion_efficiency",
    "device_height_m",
    "blocker_height_m",
    "body_diameter_m",
    "participant_fraction",
    "participants",
    "background_vehicles",
    "pedestrian_speed_min_kmh",
    "pedestrian_speed_max_kmh",
    "vehicle_speed_kmh",
    "battery_capacity_j",
    "sleep_power_w",
    "personal_sensor_power_w",
    "personal_sensor_active_s",
    "personal_sensor_period_s",
    "collective_sensor_power_w",
    "collective_sensor_active_s",
    "collective_sensor_period_s",
    "radio",
    "payload_bytes",
    "report_period_s",
    "policy",
    "dt_s",
    "horizon_s",
    "replications",
    "master_seed",
    "soc_trace_interval_s",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::Param {
        name: static_key(key),
        reason: format!("cannot parse `{value}`"),
    })
}

fn keyword<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|reason| Error::Param {
        name: static_key(key),
        reason,
    })
}

fn static_key(key: &str) -> &'static str {
    KEYS.iter().copied().find(|k| *k == key).unwrap_or("config")
}

impl ScenarioConfig {
    pub fn tx_antenna(&self) -> Antenna {
        match self.antenna {
            AntennaKind::Omni => Antenna::Omni,
            AntennaKind::Directional => Antenna::Directional {
                max_beams: self.max_beams,
                gain_dbi: self.link.tx_gain_dir_dbi,
            },
        }
    }

    pub fn is_key(key: &str) -> bool {
        KEYS.contains(&key)
    }

    /// Sets one key from its textual value. Invariants spanning several keys
    /// are checked by [`ScenarioConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.device;
        match key {
            "layout" => self.layout = keyword(key, v)?,
            "area_side_m" => self.area_side_m = num(key, v)?,
            "block_m" => self.block_m = num(key, v)?,
            "block_jitter_frac" => self.block_jitter_frac = num(key, v)?,
            "street_width_m" => self.street_width_m = num(key, v)?,
            "road_width_m" => self.road_width_m = num(key, v)?,
            "beacon_mode" => self.beacon_mode = keyword(key, v)?,
            "beacon_count" => self.beacon_count = num(key, v)?,
            "antenna" => self.antenna = keyword(key, v)?,
            "tx_gain_dir_dbi" => self.link.tx_gain_dir_dbi = num(key, v)?,
            "max_beams" => self.max_beams = num(key, v)?,
            "beacon_height_m" => self.blockage.beacon_height_m = num(key, v)?,
            "frequency_hz" => self.link.frequency_hz = num(key, v)?,
            "tx_power_dbm" => self.link.tx_power_dbm = num(key, v)?,
            "tx_gain_omni_dbi" => self.link.tx_gain_omni_dbi = num(key, v)?,
            "rx_gain_dbi" => self.link.rx_gain_dbi = num(key, v)?,
            "sensitivity_dbm" => self.link.sensitivity_dbm = num(key, v)?,
            "conversion_efficiency" => self.link.conversion_efficiency = num(key, v)?,
            "device_height_m" => self.blockage.device_height_m = num(key, v)?,
            "blocker_height_m" => self.blockage.blocker_height_m = num(key, v)?,
            "body_diameter_m" => self.blockage.body_diameter_m = num(key, v)?,
            "participant_fraction" => self.participant_fraction = num(key, v)?,
            "participants" => self.participants = num(key, v)?,
            "background_vehicles" => self.background_vehicles = num(key, v)?,
            "pedestrian_speed_min_kmh" => self.speeds.pedestrian_min_kmh = num(key, v)?,
            "pedestrian_speed_max_kmh" => self.speeds.pedestrian_max_kmh = num(key, v)?,
            "vehicle_speed_kmh" => self.speeds.vehicle_kmh = num(key, v)?,
            "battery_capacity_j" => d.battery_capacity_j = num(key, v)?,
            "sleep_power_w" => d.sleep_power_w = num(key, v)?,
            "personal_sensor_power_w" => d.personal.active_power_w = num(key, v)?,
            "personal_sensor_active_s" => d.personal.active_time_s = num(key, v)?,
            "personal_sensor_period_s" => d.personal.period_s = num(key, v)?,
            "collective_sensor_power_w" => collective(d)?.active_power_w = num(key, v)?,
            "collective_sensor_active_s" => collective(d)?.active_time_s = num(key, v)?,
            "collective_sensor_period_s" => collective(d)?.period_s = num(key, v)?,
            "radio" => {
                let kind: RadioKind = v.parse()?;
                let mut radio = RadioSpec::preset(kind);
                radio.payload_bytes = d.radio.payload_bytes;
                radio.report_period_s = d.radio.report_period_s;
                d.radio = radio;
            }
            "payload_bytes" => d.radio.payload_bytes = num(key, v)?,
            "report_period_s" => d.radio.report_period_s = num(key, v)?,
            "policy" => d.policy = v.parse()?,
            "dt_s" => self.dt_s = num(key, v)?,
            "horizon_s" => self.horizon_s = num(key, v)?,
            "replications" => self.replications = num(key, v)?,
            "master_seed" => self.master_seed = num(key, v)?,
            "soc_trace_interval_s" => self.soc_trace_interval_s = num(key, v)?,
            other => {
                return Err(Error::Param {
                    name: "config",
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }

    /// Textual value of one key; `None` for unknown keys.
    pub fn get(&self, key: &str) -> Option<String> {
        let d = &self.device;
        let coll = d.collective.as_ref();
        let f = |x: f64| format!("{x}");
        Some(match key {
            "layout" => self.layout.to_string(),
            "area_side_m" => f(self.area_side_m),
            "block_m" => f(self.block_m),
            "block_jitter_frac" => f(self.block_jitter_frac),
            "street_width_m" => f(self.street_width_m),
            "road_width_m" => f(self.road_width_m),
            "beacon_mode" => self.beacon_mode.to_string(),
            "beacon_count" => self.beacon_count.to_string(),
            "antenna" => self.antenna.to_string(),
            "tx_gain_dir_dbi" => f(self.link.tx_gain_dir_dbi),
            "max_beams" => self.max_beams.to_string(),
            "beacon_height_m" => f(self.blockage.beacon_height_m),
            "frequency_hz" => f(self.link.frequency_hz),
            "tx_power_dbm" => f(self.link.tx_power_dbm),
            "tx_gain_omni_dbi" => f(self.link.tx_gain_omni_dbi),
            "rx_gain_dbi" => f(self.link.rx_gain_dbi),
            "sensitivity_dbm" => f(self.link.sensitivity_dbm),
            "conversion_efficiency" => f(self.link.conversion_efficiency),
            "device_height_m" => f(self.blockage.device_height_m),
            "blocker_height_m" => f(self.blockage.blocker_height_m),
            "body_diameter_m" => f(self.blockage.body_diameter_m),
            "participant_fraction" => f(self.participant_fraction),
            "participants" => self.participants.to_string(),
            "background_vehicles" => self.background_vehicles.to_string(),
            "pedestrian_speed_min_kmh" => f(self.speeds.pedestrian_min_kmh),
            "pedestrian_speed_max_kmh" => f(self.speeds.pedestrian_max_kmh),
            "vehicle_speed_kmh" => f(self.speeds.vehicle_kmh),
            "battery_capacity_j" => f(d.battery_capacity_j),
            "sleep_power_w" => f(d.sleep_power_w),
            "personal_sensor_power_w" => f(d.personal.active_power_w),
            "personal_sensor_active_s" => f(d.personal.active_time_s),
            "personal_sensor_period_s" => f(d.personal.period_s),
            "collective_sensor_power_w" => f(coll.map_or(0.0, |c| c.active_power_w)),
            "collective_sensor_active_s" => f(coll.map_or(0.0, |c| c.active_time_s)),
            "collective_sensor_period_s" => f(coll.map_or(0.0, |c| c.period_s)),
            "radio" => d.radio.kind.to_string(),
            "payload_bytes" => d.radio.payload_bytes.to_string(),
            "report_period_s" => f(d.radio.report_period_s),
            "policy" => d.policy.to_string(),
            "dt_s" => f(self.dt_s),
            "horizon_s" => f(self.horizon_s),
            "replications" => self.replications.to_string(),
            "master_seed" => self.master_seed.to_string(),
            "soc_trace_interval_s" => f(self.soc_trace_interval_s),
            _ => return None,
        })
    }

    /// All keys with their values, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&k| (k, self.get(k).expect("every key has a value")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(param(name, format!("must be positive, got {v}")))
            }
        };
        positive("area_side_m", self.area_side_m)?;
        positive("block_m", self.block_m)?;
        positive("street_width_m", self.street_width_m)?;
        positive("road_width_m", self.road_width_m)?;
        if self.road_width_m >= self.street_width_m {
            return Err(param("road_width_m", "must be smaller than street_width_m"));
        }
        if !(0.0..1.0).contains(&self.block_jitter_frac) {
            return Err(param("block_jitter_frac", "must be in [0, 1)"));
        }
        if self.max_beams == 0 {
            return Err(param("max_beams", "must be at least 1"));
        }
        if !(self.participant_fraction > 0.0 && self.participant_fraction <= 1.0) {
            return Err(param("participant_fraction", "must be in (0, 1]"));
        }
        if self.participants == 0 {
            return Err(param("participants", "must be at least 1"));
        }
        positive("dt_s", self.dt_s)?;
        if !(self.horizon_s == 0.0 || (self.horizon_s.is_finite() && self.horizon_s >= self.dt_s)) {
            return Err(param("horizon_s", "must be 0 or at least dt_s"));
        }
        if self.replications == 0 {
            return Err(param("replications", "must be at least 1"));
        }
        if !(self.soc_trace_interval_s >= 0.0) {
            return Err(param("soc_trace_interval_s", "must be non-negative"));
        }
        self.link.validate()?;
        self.blockage.validate()?;
        self.speeds.validate()?;
        self.device.validate()
    }

    /// Number of simulated steps: `floor(horizon / dt)`.
    pub fn step_count(&self) -> u64 {
        (self.horizon_s / self.dt_s + 1e-9).floor() as u64
    }

    /// The no-crowd-sensing baseline this scenario is measured against: same
    /// device and radio, no collective payload, no wireless charging.
    pub fn default_baseline(&self) -> ScenarioConfig {
        let mut base = self.clone();
        base.beacon_count = 0;
        base.device.policy = Policy::Default;
        base
    }
}

fn collective(d: &mut DeviceSpec) -> Result<&mut crate::device::SensorSpec> {
    d.collective
        .as_mut()
        .ok_or_else(|| param("collective_sensor", "device has no collective sensor"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_round_trip() {
        let mut cfg = ScenarioConfig::default();
        cfg.set("radio", "lora").unwrap();
        cfg.set("beacon_count", "17").unwrap();
        cfg.set("conversion_efficiency", "0.45").unwrap();
        let mut back = ScenarioConfig::default();
        for (k, v) in cfg.entries() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, cfg);
        assert_eq!(cfg.entries().len(), KEYS.len());
    }

    #[test]
    fn radio_preset_keeps_payload() {
        let mut cfg = ScenarioConfig::default();
        cfg.set("payload_bytes", "64").unwrap();
        cfg.set("radio", "zigbee").unwrap();
        assert_eq!(cfg.device.radio.payload_bytes, 64);
        assert_eq!(cfg.device.radio.kind, RadioKind::Zigbee);
    }

    #[test]
    fn bad_values() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.set("beacon_count", "-3").is_err());
        assert!(cfg.set("layout", "hex").is_err());
        assert!(cfg.set("nope", "1").is_err());
        cfg.set("road_width_m", "25").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        ScenarioConfig::default().validate().unwrap();
        assert_eq!(ScenarioConfig::default().step_count(), 2_592_000);
    }
}
