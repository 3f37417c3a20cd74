//! The `run`, `sweep` and `compare` commands, as pure functions from
//! configurations to CSV text.

use std::fmt::Write as _;

use wpcs_core::metrics::{
    data_share, data_share_all, lifetime_gain, mean_consumed_power, mean_harvested_power, mean_lifetime_s,
    record_mean_lifetime_s, record_sustainable_fraction, sustainability_density, sustainable_fraction,
    SweepPoint, SweepRecord,
};
use wpcs_core::{run_replications, RunRecord, ScenarioConfig};

use crate::error::CliError;
use crate::format::{fnv1a, g9};

pub const SCHEMA_VERSION: u32 = 1;

pub const RUN_HEADER: &str = "schema_version,scenario_id,replication,seed,layout,beacon_mode,beacon_count,\
antenna,radio,policy,mean_harvested_w,mean_consumed_w,lifetime_s,sustainable,lifetime_gain,data_share";

pub const SWEEP_HEADER: &str = "schema_version,scenario_id,sweep_key,sweep_value,replications,\
mean_harvested_w,mean_harvested_w_ci95,mean_consumed_w,mean_consumed_w_ci95,lifetime_s,lifetime_s_ci95,\
lifetime_gain,lifetime_gain_ci95,data_share,data_share_ci95,sustainable_fraction";

pub const COMPARE_HEADER: &str = "schema_version,scenario_a,scenario_b,replication,seed,\
delta_mean_harvested_w,delta_mean_consumed_w,delta_lifetime_s,delta_sustainable,delta_lifetime_gain,\
delta_data_share";

/// Keys on which the two sides of `compare` may differ.
pub const COMPARE_AXES: &[&str] = &[
    "beacon_mode",
    "beacon_count",
    "antenna",
    "tx_gain_dir_dbi",
    "radio",
    "policy",
    "layout",
];

/// Hash of every configuration value except the master seed.
pub fn scenario_id(config: &ScenarioConfig) -> String {
    let mut text = String::new();
    for (k, v) in config.entries() {
        if k != "master_seed" {
            let _ = writeln!(text, "{k}={v}");
        }
    }
    format!("{:016x}", fnv1a(text.as_bytes()))
}

fn echo(out: &mut String, title: &str, config: &ScenarioConfig) {
    let _ = writeln!(out, "# {title}");
    for (k, v) in config.entries() {
        let _ = writeln!(out, "# {k} = {v}");
    }
}

#[derive(Debug, Clone, Copy)]
struct Metrics {
    harvested_w: f64,
    consumed_w: f64,
    lifetime_s: f64,
    sustainable: f64,
    lifetime_gain: f64,
    data_share: f64,
}

impl Metrics {
    fn of_record(rec: &RunRecord, baseline: &RunRecord) -> Self {
        let n = rec.devices.len().max(1) as f64;
        Metrics {
            harvested_w: rec.devices.iter().map(|d| d.mean_harvested_w).sum::<f64>() / n,
            consumed_w: rec.devices.iter().map(|d| d.mean_consumed_w).sum::<f64>() / n,
            lifetime_s: record_mean_lifetime_s(rec).unwrap_or(f64::NAN),
            sustainable: record_sustainable_fraction(rec),
            lifetime_gain: gain(std::slice::from_ref(rec), std::slice::from_ref(baseline)),
            data_share: data_share(rec),
        }
    }

    fn pooled(recs: &[RunRecord], baselines: &[RunRecord]) -> Self {
        Metrics {
            harvested_w: mean_harvested_power(recs).unwrap_or(f64::NAN),
            consumed_w: mean_consumed_power(recs).unwrap_or(f64::NAN),
            lifetime_s: mean_lifetime_s(recs).unwrap_or(f64::NAN),
            sustainable: sustainable_fraction(recs),
            lifetime_gain: gain(recs, baselines),
            data_share: data_share_all(recs),
        }
    }

    fn minus(self, o: Metrics) -> Metrics {
        Metrics {
            harvested_w: self.harvested_w - o.harvested_w,
            consumed_w: self.consumed_w - o.consumed_w,
            lifetime_s: self.lifetime_s - o.lifetime_s,
            sustainable: self.sustainable - o.sustainable,
            lifetime_gain: self.lifetime_gain - o.lifetime_gain,
            data_share: self.data_share - o.data_share,
        }
    }

    fn columns(&self) -> String {
        [
            self.harvested_w,
            self.consumed_w,
            self.lifetime_s,
            self.sustainable,
            self.lifetime_gain,
            self.data_share,
        ]
        .map(g9)
        .join(",")
    }
}

fn gain(recs: &[RunRecord], baselines: &[RunRecord]) -> f64 {
    lifetime_gain(recs, baselines).map_or(f64::NAN, |g| g.ratio)
}

/// Crowd-sensing runs of `config` together with its default-scenario baseline.
struct Paired {
    wpcs: Vec<RunRecord>,
    baseline: Vec<RunRecord>,
}

fn run_paired(config: &ScenarioConfig, cache: &mut Vec<(ScenarioConfig, Vec<RunRecord>)>) -> Result<Paired, CliError> {
    let wpcs = run_replications(config)?;
    let base_cfg = config.default_baseline();
    let baseline = match cache.iter().find(|(c, _)| *c == base_cfg) {
        Some((_, recs)) => recs.clone(),
        None => {
            let recs = run_replications(&base_cfg)?;
            cache.push((base_cfg, recs.clone()));
            recs
        }
    };
    Ok(Paired { wpcs, baseline })
}

/// One row per replication followed by a `summary` row pooled over all of them.
pub fn run_csv(config: &ScenarioConfig) -> Result<String, CliError> {
    let Paired { wpcs, baseline } = run_paired(config, &mut Vec::new())?;
    let id = scenario_id(config);
    let fixed = format!(
        "{},{},{},{},{},{}",
        config.layout,
        config.beacon_mode,
        config.beacon_count,
        config.antenna,
        config.device.radio.kind,
        config.device.policy
    );

    let mut out = String::new();
    echo(&mut out, "wpcs run", config);
    let _ = writeln!(out, "{RUN_HEADER}");
    for (rec, base) in wpcs.iter().zip(&baseline) {
        let m = Metrics::of_record(rec, base);
        let _ = writeln!(
            out,
            "{SCHEMA_VERSION},{id},{},{},{fixed},{}",
            rec.replication,
            rec.seed,
            m.columns()
        );
    }
    let m = Metrics::pooled(&wpcs, &baseline);
    let _ = writeln!(
        out,
        "{SCHEMA_VERSION},{id},summary,{},{fixed},{}",
        config.master_seed,
        m.columns()
    );
    Ok(out)
}

/// Validated set of configurations for a sweep over one key.
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub key: String,
    pub values: Vec<String>,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, key: &str, values: &[String]) -> Result<Self, CliError> {
        if !ScenarioConfig::is_key(key) {
            return Err(CliError::Usage(format!("unknown sweep key `{key}`")));
        }
        if values.is_empty() {
            return Err(CliError::Usage("sweep needs at least one value".into()));
        }
        let spec = SweepSpec {
            base,
            key: key.to_string(),
            values: values.iter().map(|v| v.trim().to_string()).collect(),
        };
        spec.configs()?;
        Ok(spec)
    }

    pub fn configs(&self) -> Result<Vec<ScenarioConfig>, CliError> {
        self.values
            .iter()
            .map(|v| {
                let mut c = self.base.clone();
                c.set(&self.key, v)
                    .and_then(|_| c.validate())
                    .map_err(|e| CliError::Usage(format!("{} = {v}: {e}", self.key)))?;
                Ok(c)
            })
            .collect()
    }
}

/// Runs every point of the sweep. Numeric values become the point's axis
/// value; anything else is placed by its position in the list.
pub fn sweep(spec: &SweepSpec) -> Result<SweepRecord, CliError> {
    let mut cache = Vec::new();
    let mut points = Vec::new();
    for (i, (config, raw)) in spec.configs()?.iter().zip(&spec.values).enumerate() {
        let value = raw.parse::<f64>().unwrap_or(i as f64);
        let Paired { wpcs, baseline } = run_paired(config, &mut cache)?;
        points.push(SweepPoint::from_records(value, &wpcs, &baseline));
    }
    Ok(SweepRecord {
        key: spec.key.clone(),
        points,
    })
}

pub fn sweep_csv(spec: &SweepSpec, record: &SweepRecord) -> Result<String, CliError> {
    let mut out = String::new();
    echo(&mut out, "wpcs sweep", &spec.base);
    let _ = writeln!(out, "# sweep_key = {}", spec.key);
    let _ = writeln!(out, "# sweep_values = {}", spec.values.join(","));
    let _ = writeln!(out, "{SWEEP_HEADER}");
    for ((config, raw), p) in spec.configs()?.iter().zip(&spec.values).zip(&record.points) {
        let est = [p.harvested_w, p.consumed_w, p.lifetime_s, p.lifetime_gain, p.data_share]
            .iter()
            .map(|e| format!("{},{}", g9(e.mean), g9(e.ci95)))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{SCHEMA_VERSION},{},{},{raw},{},{est},{}",
            scenario_id(config),
            spec.key,
            config.replications,
            g9(p.sustainable_fraction)
        );
    }
    let density = sustainability_density(record).map_or("none".to_string(), g9);
    let _ = writeln!(out, "# sustainability_density = {density}");
    Ok(out)
}

/// Keys on which `a` and `b` differ. Fails if any of them is not a declared
/// comparison axis.
pub fn compare_axes(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<Vec<&'static str>, CliError> {
    let diff: Vec<&'static str> = a
        .entries()
        .into_iter()
        .zip(b.entries())
        .filter(|((_, va), (_, vb))| va != vb)
        .map(|((k, _), _)| k)
        .collect();
    let undeclared: Vec<&str> = diff.iter().copied().filter(|k| !COMPARE_AXES.contains(k)).collect();
    if !undeclared.is_empty() {
        return Err(CliError::Config {
            path: "compare".into(),
            reason: format!(
                "configurations differ on {}; only {} may differ",
                undeclared.join(", "),
                COMPARE_AXES.join(", ")
            ),
        });
    }
    Ok(diff)
}

/// Paired-seed runs of both configurations; each row holds `b − a`.
pub fn compare_csv(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<String, CliError> {
    let axes = compare_axes(a, b)?;
    let mut cache = Vec::new();
    let pa = run_paired(a, &mut cache)?;
    let pb = run_paired(b, &mut cache)?;
    let (ida, idb) = (scenario_id(a), scenario_id(b));

    let mut out = String::new();
    echo(&mut out, "wpcs compare (a)", a);
    for k in &axes {
        let _ = writeln!(out, "# b.{k} = {}", b.get(k).unwrap_or_default());
    }
    let _ = writeln!(out, "{COMPARE_HEADER}");
    for i in 0..pa.wpcs.len() {
        let ma = Metrics::of_record(&pa.wpcs[i], &pa.baseline[i]);
        let mb = Metrics::of_record(&pb.wpcs[i], &pb.baseline[i]);
        let rec = &pa.wpcs[i];
        let _ = writeln!(
            out,
            "{SCHEMA_VERSION},{ida},{idb},{},{},{}",
            rec.replication,
            rec.seed,
            mb.minus(ma).columns()
        );
    }
    let d = Metrics::pooled(&pb.wpcs, &pb.baseline).minus(Metrics::pooled(&pa.wpcs, &pa.baseline));
    let _ = writeln!(out, "{SCHEMA_VERSION},{ida},{idb},summary,{},{}", a.master_seed, d.columns());
    Ok(out)
}
