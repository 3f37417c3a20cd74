//! Result families computed from run records: harvested power, lifetime and
//! lifetime gain, sustainability, and the operator's data share.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Share of devices that must be sustainable for a sweep point to count as
/// sustaining the network.
pub const SUSTAINABLE_SHARE: f64 = 0.95;

/// z-value of the two-sided 95% normal confidence interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocSample {
    pub time_s: f64,
    pub mean_battery_j: f64,
    pub alive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    /// Harvested power averaged over the whole horizon.
    pub mean_harvested_w: f64,
    /// Consumed power averaged over the time the device was alive.
    pub mean_consumed_w: f64,
    pub depletion_time_s: Option<f64>,
    /// Mean harvested minus consumed power over the final sustainability window.
    pub window_net_w: f64,
    pub final_battery_j: f64,
    pub collective_scheduled: u64,
    pub collective_delivered: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub replication: u64,
    pub seed: u64,
    pub steps: u64,
    pub horizon_s: f64,
    pub devices: Vec<DeviceRecord>,
    pub soc_trace: Vec<SocSample>,
    /// Street centerlines of the layout used (horizontal, vertical).
    pub street_coordinates: (Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lifetime {
    /// Battery hit zero at this time.
    Depleted(f64),
    /// Alive at the horizon with non-negative net power over the final window.
    Sustainable,
    /// Alive at the horizon but draining.
    Censored(f64),
    /// Nothing was simulated.
    Undefined,
}

impl Lifetime {
    /// Lifetime with sustainable and censored devices capped at `horizon_s`.
    pub fn capped_s(self, horizon_s: f64) -> Option<f64> {
        match self {
            Lifetime::Depleted(t) => Some(t),
            Lifetime::Sustainable => Some(horizon_s),
            Lifetime::Censored(t) => Some(t),
            Lifetime::Undefined => None,
        }
    }

    pub fn is_sustainable(self) -> bool {
        matches!(self, Lifetime::Sustainable)
    }
}

pub fn lifetime_s(record: &RunRecord, device: usize) -> Lifetime {
    let d = &record.devices[device];
    if record.steps == 0 {
        return Lifetime::Undefined;
    }
    match d.depletion_time_s {
        Some(t) => Lifetime::Depleted(t),
        None if d.window_net_w >= 0.0 => Lifetime::Sustainable,
        None => Lifetime::Censored(record.horizon_s),
    }
}

fn require(records: &[RunRecord]) -> Result<()> {
    if records.is_empty() || records.iter().all(|r| r.devices.is_empty()) {
        Err(Error::NoRecords)
    } else {
        Ok(())
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Harvested power averaged over time, then users, then replications.
pub fn mean_harvested_power(records: &[RunRecord]) -> Result<f64> {
    require(records)?;
    Ok(mean(records.iter().map(|r| mean(r.devices.iter().map(|d| d.mean_harvested_w)))))
}

pub fn mean_consumed_power(records: &[RunRecord]) -> Result<f64> {
    require(records)?;
    Ok(mean(records.iter().map(|r| mean(r.devices.iter().map(|d| d.mean_consumed_w)))))
}

/// Mean device lifetime of one record (sustainable and censored capped at the horizon).
pub fn record_mean_lifetime_s(record: &RunRecord) -> Option<f64> {
    let lifetimes: Option<Vec<f64>> = (0..record.devices.len())
        .map(|i| lifetime_s(record, i).capped_s(record.horizon_s))
        .collect();
    lifetimes.filter(|l| !l.is_empty()).map(mean)
}

pub fn mean_lifetime_s(records: &[RunRecord]) -> Result<f64> {
    require(records)?;
    let per: Option<Vec<f64>> = records.iter().map(record_mean_lifetime_s).collect();
    per.map(mean).ok_or(Error::NoRecords)
}

pub fn record_sustainable_fraction(record: &RunRecord) -> f64 {
    let n = record.devices.len();
    if n == 0 {
        return 0.0;
    }
    (0..n).filter(|&i| lifetime_s(record, i).is_sustainable()).count() as f64 / n as f64
}

/// Share of all simulated devices, pooled over replications, that are sustainable.
pub fn sustainable_fraction(records: &[RunRecord]) -> f64 {
    let (hits, n) = records.iter().fold((0usize, 0usize), |(h, n), r| {
        (
            h + (0..r.devices.len())
                .filter(|&i| lifetime_s(r, i).is_sustainable())
                .count(),
            n + r.devices.len(),
        )
    });
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeGain {
    pub ratio: f64,
    /// Share of crowd-sensing devices whose lifetime entered as the horizon
    /// because they were sustainable.
    pub sustainable_fraction: f64,
}

/// Mean crowd-sensing lifetime over mean default-scenario lifetime. Every
/// default-scenario device must have depleted within its horizon.
pub fn lifetime_gain(wpcs_records: &[RunRecord], default_records: &[RunRecord]) -> Result<LifetimeGain> {
    require(wpcs_records)?;
    require(default_records)?;
    let all_depleted = default_records
        .iter()
        .all(|r| (0..r.devices.len()).all(|i| matches!(lifetime_s(r, i), Lifetime::Depleted(_))));
    if !all_depleted {
        return Err(Error::InfiniteBaseline);
    }
    let base = mean_lifetime_s(default_records)?;
    let wpcs = mean_lifetime_s(wpcs_records)?;
    Ok(LifetimeGain {
        ratio: wpcs / base,
        sustainable_fraction: sustainable_fraction(wpcs_records),
    })
}

/// Delivered over scheduled collective measurements, summed over devices.
pub fn data_share(record: &RunRecord) -> f64 {
    data_share_all(std::slice::from_ref(record))
}

pub fn data_share_all(records: &[RunRecord]) -> f64 {
    let (delivered, scheduled) = records
        .iter()
        .flat_map(|r| &r.devices)
        .fold((0u64, 0u64), |(d, s), dev| {
            (d + dev.collective_delivered, s + dev.collective_scheduled)
        });
    if scheduled == 0 {
        0.0
    } else {
        delivered as f64 / scheduled as f64
    }
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                ci95: f64::NAN,
                n,
            };
        }
        let m = mean(samples.iter().copied());
        let ci95 = if n > 1 {
            let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * var.sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean: m, ci95, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub harvested_w: Estimate,
    pub consumed_w: Estimate,
    pub lifetime_s: Estimate,
    /// Per-replication gains against the paired default-scenario records;
    /// NaN mean when the baseline never depleted.
    pub lifetime_gain: Estimate,
    pub data_share: Estimate,
    pub sustainable_fraction: f64,
}

impl SweepPoint {
    /// Aggregates paired crowd-sensing and default records of one sweep value.
    pub fn from_records(value: f64, wpcs: &[RunRecord], defaults: &[RunRecord]) -> SweepPoint {
        let per = |f: &dyn Fn(&RunRecord) -> f64| -> Vec<f64> { wpcs.iter().map(f).collect() };
        let harvested = per(&|r| mean(r.devices.iter().map(|d| d.mean_harvested_w)));
        let consumed = per(&|r| mean(r.devices.iter().map(|d| d.mean_consumed_w)));
        let lifetimes = per(&|r| record_mean_lifetime_s(r).unwrap_or(f64::NAN));
        let shares = per(&data_share);
        let gains: Vec<f64> = wpcs
            .iter()
            .zip(defaults)
            .map(|(w, d)| {
                lifetime_gain(std::slice::from_ref(w), std::slice::from_ref(d))
                    .map_or(f64::NAN, |g| g.ratio)
            })
            .collect();
        SweepPoint {
            value,
            harvested_w: Estimate::from_samples(&harvested),
            consumed_w: Estimate::from_samples(&consumed),
            lifetime_s: Estimate::from_samples(&lifetimes),
            lifetime_gain: Estimate::from_samples(&gains),
            data_share: Estimate::from_samples(&shares),
            sustainable_fraction: sustainable_fraction(wpcs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub key: String,
    pub points: Vec<SweepPoint>,
}

/// Smallest sweep value at which at least [`SUSTAINABLE_SHARE`] of devices
/// are sustainable; `None` if no point qualifies.
pub fn sustainability_density(sweep: &SweepRecord) -> Option<f64> {
    sweep
        .points
        .iter()
        .find(|p| p.sustainable_fraction >= SUSTAINABLE_SHARE)
        .map(|p| p.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(harvest: f64, depleted: Option<f64>, net: f64, sched: u64, deliv: u64) -> DeviceRecord {
        DeviceRecord {
            mean_harvested_w: harvest,
            mean_consumed_w: 40e-6,
            depletion_time_s: depleted,
            window_net_w: net,
            final_battery_j: 1.0,
            collective_scheduled: sched,
            collective_delivered: deliv,
        }
    }

    fn record(devices: Vec<DeviceRecord>) -> RunRecord {
        RunRecord {
            config: ScenarioConfig::default(),
            replication: 0,
            seed: 0,
            steps: 100,
            horizon_s: 100.0,
            devices,
            soc_trace: Vec::new(),
            street_coordinates: (Vec::new(), Vec::new()),
        }
    }

    #[test]
    fn lifetime_classes() {
        let r = record(vec![
            device(0.0, Some(50.0), -1.0, 0, 0),
            device(1.0, None, 0.0, 0, 0),
            device(1.0, None, -1e-9, 0, 0),
        ]);
        assert_eq!(lifetime_s(&r, 0), Lifetime::Depleted(50.0));
        assert_eq!(lifetime_s(&r, 1), Lifetime::Sustainable);
        assert_eq!(lifetime_s(&r, 2), Lifetime::Censored(100.0));
        let empty = RunRecord { steps: 0, ..r };
        assert_eq!(lifetime_s(&empty, 0), Lifetime::Undefined);
    }

    #[test]
    fn harvest_means_and_permutation_invariance() {
        let a = record(vec![device(1.0, None, 0.0, 0, 0), device(3.0, None, 0.0, 0, 0)]);
        let b = record(vec![device(6.0, None, 0.0, 0, 0)]);
        assert_eq!(mean_harvested_power(&[a.clone(), b.clone()]).unwrap(), 4.0);
        assert_eq!(
            mean_harvested_power(&[b.clone(), a.clone()]).unwrap(),
            mean_harvested_power(&[a, b]).unwrap()
        );
        assert!(mean_harvested_power(&[]).is_err());
    }

    #[test]
    fn gain_requires_finite_baseline() {
        let wpcs = record(vec![device(0.0, None, 0.0, 0, 0)]);
        let base = record(vec![device(0.0, Some(25.0), -1.0, 0, 0)]);
        let g = lifetime_gain(std::slice::from_ref(&wpcs), &[base]).unwrap();
        assert_eq!(g.ratio, 4.0);
        assert_eq!(g.sustainable_fraction, 1.0);
        assert_eq!(
            lifetime_gain(std::slice::from_ref(&wpcs), std::slice::from_ref(&wpcs)),
            Err(Error::InfiniteBaseline)
        );
    }

    #[test]
    fn identical_runs_give_unit_gain() {
        let r = record(vec![device(0.0, Some(30.0), -1.0, 0, 0)]);
        assert_eq!(lifetime_gain(std::slice::from_ref(&r), std::slice::from_ref(&r)).unwrap().ratio, 1.0);
    }

    #[test]
    fn data_share_sums() {
        let r = record(vec![device(0.0, None, 0.0, 10, 5), device(0.0, None, 0.0, 10, 10)]);
        assert_eq!(data_share(&r), 0.75);
        assert_eq!(data_share(&record(vec![device(0.0, None, 0.0, 0, 0)])), 0.0);
        assert_eq!(data_share(&record(vec![device(0.0, None, 0.0, 7, 0)])), 0.0);
    }

    #[test]
    fn confidence_half_width() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.ci95 - 1.96 * sd / 2.0).abs() < 1e-12);
        assert_eq!(Estimate::from_samples(&[7.0]).ci95, 0.0);
    }

    #[test]
    fn sustainability_density_picks_first() {
        let point = |v: f64, frac: f64| SweepPoint {
            value: v,
            harvested_w: Estimate::from_samples(&[0.0]),
            consumed_w: Estimate::from_samples(&[0.0]),
            lifetime_s: Estimate::from_samples(&[0.0]),
            lifetime_gain: Estimate::from_samples(&[0.0]),
            data_share: Estimate::from_samples(&[0.0]),
            sustainable_fraction: frac,
        };
        let sweep = SweepRecord {
            key: "beacon_count".into(),
            points: vec![point(8.0, 0.1), point(16.0, 0.96), point(32.0, 1.0)],
        };
        assert_eq!(sustainability_density(&sweep), Some(16.0));
        let all = SweepRecord {
            points: vec![point(4.0, 1.0), point(8.0, 1.0)],
            ..sweep.clone()
        };
        assert_eq!(sustainability_density(&all), Some(4.0));
        let never = SweepRecord {
            points: vec![point(4.0, 0.0)],
            ..sweep
        };
        assert_eq!(sustainability_density(&never), None);
    }
}
