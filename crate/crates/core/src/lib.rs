//! Simulator for wirelessly powered crowd sensing over wearables.
//!
//! Pedestrians carrying wearables walk a city street grid while static or
//! vehicle-mounted power beacons charge them over RF. Each wearable runs a
//! personal sensor and, depending on its participation policy, an operator
//! sensor. The simulator reports harvested power, device lifetime and its gain
//! over a no-charging baseline, sustainability, and the operator's data share.

pub mod citygen;
pub mod config;
pub mod device;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod mobility;
pub mod rng;
pub mod wpt;

pub use citygen::{CityLayout, Point, Side};
pub use config::{AntennaKind, BeaconMode, LayoutKind, ScenarioConfig};
pub use device::{DeviceSpec, DeviceState, Policy, RadioKind, RadioSpec, SensorSpec};
pub use engine::{run, run_replications, Simulation};
pub use error::{Error, Result};
pub use metrics::{Estimate, Lifetime, RunRecord, SweepPoint, SweepRecord};
