//! Scenario orchestration: beacon deployment and the time-stepped loop.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::citygen::{generate_manhattan, generate_random_layout, CityLayout, Point, Side};
use crate::config::{BeaconMode, LayoutKind, ScenarioConfig};
use crate::device::{policy_gate, step_energy, DeviceState};
use crate::error::Result;
use crate::metrics::{DeviceRecord, RunRecord, SocSample};
use crate::mobility::{self, spawn_agents, Agent, SpeedModel};
use crate::rng::{replication_seed, stream, Subsystem};
use crate::wpt::{assign_beams, los_draw, Antenna, Beacon, BlockageGeometry, Candidate, LinearLink, Mount};

/// Fraction of the horizon, counted from its end, used to judge sustainability.
pub const SUSTAINABILITY_WINDOW: f64 = 0.2;

fn static_beacon(layout: &CityLayout, id: usize, s: f64, side: Side, height_m: f64, antenna: Antenna) -> Beacon {
    let (segment, arc) = layout.locate_along(s);
    let p = layout
        .point_on_sidewalk(segment, side, arc)
        .expect("locate_along stays within the segment");
    Beacon {
        id,
        mount: Mount::Static(p),
        height_m,
        antenna,
    }
}

/// Regular deployment along the sidewalk/road boundary lines. Beacons zig-zag
/// between the two sides of each street so that beacons on the same side are
/// `total_sidewalk_length / count` apart.
pub fn deploy_static_regular(
    layout: &CityLayout,
    beacon_count: usize,
    height_m: f64,
    antenna: Antenna,
) -> Vec<Beacon> {
    if beacon_count == 0 {
        return Vec::new();
    }
    let step = layout.total_centerline_length() / beacon_count as f64;
    (0..beacon_count)
        .map(|k| {
            let side = if k % 2 == 0 { Side::Upper } else { Side::Lower };
            static_beacon(layout, k, k as f64 * step, side, height_m, antenna)
        })
        .collect()
}

/// Beacons i.i.d. uniform over the total boundary-line length.
pub fn deploy_static_random<R: Rng + ?Sized>(
    layout: &CityLayout,
    beacon_count: usize,
    height_m: f64,
    antenna: Antenna,
    rng: &mut R,
) -> Vec<Beacon> {
    let total = layout.total_centerline_length();
    (0..beacon_count)
        .map(|k| {
            let s = rng.gen_range(0.0..total);
            let side = if rng.gen::<bool>() { Side::Upper } else { Side::Lower };
            static_beacon(layout, k, s, side, height_m, antenna)
        })
        .collect()
}

/// Spawns `beacon_count` vehicles, each carrying one beacon. Vehicle ids start
/// at `first_agent_id`.
pub fn deploy_mobile<R: Rng + ?Sized>(
    layout: &CityLayout,
    beacon_count: usize,
    first_agent_id: usize,
    speeds: &SpeedModel,
    height_m: f64,
    antenna: Antenna,
    rng: &mut R,
) -> Result<(Vec<Agent>, Vec<Beacon>)> {
    let mut vehicles = spawn_agents(layout, 0, beacon_count, speeds, rng)?;
    let beacons = vehicles
        .iter_mut()
        .enumerate()
        .map(|(k, v)| {
            v.id = first_agent_id + k;
            Beacon {
                id: k,
                mount: Mount::Vehicle(v.id),
                height_m,
                antenna,
            }
        })
        .collect();
    Ok((vehicles, beacons))
}

pub fn build_layout(config: &ScenarioConfig, rep_seed: u64) -> Result<CityLayout> {
    match config.layout {
        LayoutKind::Manhattan => generate_manhattan(
            config.area_side_m,
            config.block_m,
            config.street_width_m,
            config.road_width_m,
        ),
        LayoutKind::Random => generate_random_layout(
            config.area_side_m,
            config.block_m,
            config.block_jitter_frac,
            config.street_width_m,
            config.road_width_m,
            &mut stream(rep_seed, Subsystem::Layout),
        ),
    }
}

/// Cells below this size cost more to clear than they save in distance checks.
const MIN_GRID_CELL_M: f64 = 25.0;

/// Devices bucketed on a square grid, rebuilt every step.
#[derive(Debug, Default)]
struct DeviceGrid {
    cell: f64,
    n: usize,
    starts: Vec<usize>,
    fill: Vec<usize>,
    items: Vec<usize>,
    cell_of: Vec<usize>,
}

impl DeviceGrid {
    fn new(area: f64, cell: f64) -> Self {
        let cell = cell.max(MIN_GRID_CELL_M);
        let n = ((area / cell).ceil() as usize).max(1);
        Self {
            cell,
            n,
            starts: vec![0; n * n + 1],
            ..Default::default()
        }
    }

    fn index(&self, v: f64) -> usize {
        ((v / self.cell).floor().max(0.0) as usize).min(self.n - 1)
    }

    fn rebuild(&mut self, positions: &[Point]) {
        self.starts.iter_mut().for_each(|s| *s = 0);
        self.cell_of.clear();
        for p in positions {
            let c = self.index(p.y) * self.n + self.index(p.x);
            self.cell_of.push(c);
            self.starts[c + 1] += 1;
        }
        for i in 1..self.starts.len() {
            self.starts[i] += self.starts[i - 1];
        }
        self.items.clear();
        self.items.resize(positions.len(), 0);
        self.fill.clear();
        self.fill.extend_from_slice(&self.starts);
        for (dev, &c) in self.cell_of.iter().enumerate() {
            self.items[self.fill[c]] = dev;
            self.fill[c] += 1;
        }
    }

    fn for_each_near(&self, p: Point, radius: f64, mut f: impl FnMut(usize)) {
        let (x0, x1) = (self.index(p.x - radius), self.index(p.x + radius));
        let (y0, y1) = (self.index(p.y - radius), self.index(p.y + radius));
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let c = cy * self.n + cx;
                for &dev in &self.items[self.starts[c]..self.starts[c + 1]] {
                    f(dev);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct DeviceTotals {
    harvested_j: f64,
    consumed_j: f64,
    window_harvested_j: f64,
    window_consumed_j: f64,
}

/// One replication in progress.
pub struct Simulation {
    config: ScenarioConfig,
    replication: u64,
    seed: u64,
    layout: CityLayout,
    agents: Vec<Agent>,
    beacons: Vec<Beacon>,
    devices: Vec<DeviceState>,
    totals: Vec<DeviceTotals>,
    geom: BlockageGeometry,
    link: LinearLink,
    link_range_2d: f64,
    mobility_rng: ChaCha8Rng,
    blockage_rng: ChaCha8Rng,
    grid: DeviceGrid,
    positions: Vec<Point>,
    beacon_positions: Vec<Point>,
    harvest_w: Vec<f64>,
    candidates: Vec<Candidate>,
    step_index: u64,
    steps: u64,
    window_start: u64,
    next_epoch: u64,
    soc_every: u64,
    soc_trace: Vec<SocSample>,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig, replication: u64) -> Result<Self> {
        config.validate()?;
        let seed = replication_seed(config.master_seed, replication);
        let layout = build_layout(config, seed)?;

        let mut spawn_rng = stream(seed, Subsystem::Spawn);
        let mut agents = spawn_agents(
            &layout,
            config.participants,
            config.background_vehicles,
            &config.speeds,
            &mut spawn_rng,
        )?;

        let antenna = config.tx_antenna();
        let height = config.blockage.beacon_height_m;
        let mut deploy_rng = stream(seed, Subsystem::Deployment);
        let beacons = match config.beacon_mode {
            BeaconMode::StaticRegular => {
                deploy_static_regular(&layout, config.beacon_count, height, antenna)
            }
            BeaconMode::StaticRandom => {
                deploy_static_random(&layout, config.beacon_count, height, antenna, &mut deploy_rng)
            }
            BeaconMode::Mobile => {
                let (vehicles, beacons) = deploy_mobile(
                    &layout,
                    config.beacon_count,
                    agents.len(),
                    &config.speeds,
                    height,
                    antenna,
                    &mut deploy_rng,
                )?;
                agents.extend(vehicles);
                beacons
            }
        };

        let mut geom = config.blockage;
        geom.blocker_density_per_m2 = BlockageGeometry::population_density(
            config.participants,
            config.participant_fraction,
            layout.pedestrian_zone_area_m2,
        );
        let link = LinearLink::new(&config.link, config.link.tx_gain_dbi(&antenna));
        let dh = geom.beacon_height_m - geom.device_height_m;
        let link_range_2d = (link.max_range_sq - dh * dh).max(0.0).sqrt();

        let steps = config.step_count();
        let n = config.participants;
        let soc_every = if config.soc_trace_interval_s > 0.0 {
            ((config.soc_trace_interval_s / config.dt_s).round() as u64).max(1)
        } else {
            0
        };
        Ok(Self {
            grid: DeviceGrid::new(layout.area_side_m, link_range_2d),
            devices: vec![DeviceState::new(&config.device); n],
            totals: vec![DeviceTotals::default(); n],
            positions: Vec::with_capacity(n),
            beacon_positions: Vec::with_capacity(beacons.len()),
            harvest_w: vec![0.0; n],
            candidates: Vec::new(),
            mobility_rng: stream(seed, Subsystem::Mobility),
            blockage_rng: stream(seed, Subsystem::Blockage),
            config: config.clone(),
            replication,
            seed,
            layout,
            agents,
            beacons,
            geom,
            link,
            link_range_2d,
            step_index: 0,
            steps,
            window_start: ((1.0 - SUSTAINABILITY_WINDOW) * steps as f64).floor() as u64,
            next_epoch: 0,
            soc_every,
            soc_trace: Vec::new(),
        })
    }

    pub fn layout(&self) -> &CityLayout {
        &self.layout
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn beacons(&self) -> &[Beacon] {
        &self.beacons
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn clock_s(&self) -> f64 {
        self.step_index as f64 * self.config.dt_s
    }

    pub fn is_finished(&self) -> bool {
        self.step_index >= self.steps
    }

    /// Current beacon ground positions, by beacon id.
    pub fn beacon_positions(&self) -> Vec<Point> {
        self.beacons.iter().map(|b| self.beacon_position(b)).collect()
    }

    fn beacon_position(&self, beacon: &Beacon) -> Point {
        match beacon.mount {
            Mount::Static(p) => p,
            Mount::Vehicle(id) => mobility::position(&self.agents[id], &self.layout),
        }
    }

    /// Harvested power per device from the last step.
    pub fn last_harvest_w(&self) -> &[f64] {
        &self.harvest_w
    }

    fn compute_harvest(&mut self) {
        self.harvest_w.iter_mut().for_each(|h| *h = 0.0);
        if self.beacons.is_empty() {
            return;
        }
        self.positions.clear();
        self.positions.extend(
            self.agents[..self.config.participants]
                .iter()
                .map(|a| mobility::position(a, &self.layout)),
        );
        let mut beacon_positions = std::mem::take(&mut self.beacon_positions);
        beacon_positions.clear();
        beacon_positions.extend(self.beacons.iter().map(|b| self.beacon_position(b)));
        self.beacon_positions = beacon_positions;
        self.grid.rebuild(&self.positions);

        let dev_h = self.geom.device_height_m;
        for (beacon, &bpos) in self.beacons.iter().zip(&self.beacon_positions) {
            self.candidates.clear();
            let (positions, link, candidates) = (&self.positions, &self.link, &mut self.candidates);
            self.grid.for_each_near(bpos, self.link_range_2d, |dev| {
                let c = Candidate::new(dev, (bpos, beacon.height_m), (positions[dev], dev_h));
                if c.d3d_sq <= link.max_range_sq {
                    candidates.push(c);
                }
            });
            match beacon.antenna {
                Antenna::Omni => {
                    self.candidates.sort_unstable_by_key(|c| c.device);
                    for c in &self.candidates {
                        if los_draw(c.d2d_m, &self.geom, &mut self.blockage_rng) {
                            self.harvest_w[c.device] += self.link.harvest_w(c.d3d_sq);
                        }
                    }
                }
                Antenna::Directional { .. } => {
                    let served =
                        assign_beams(beacon, &mut self.candidates, &self.geom, &mut self.blockage_rng);
                    for &dev in &served {
                        let c = self
                            .candidates
                            .iter()
                            .find(|c| c.device == dev)
                            .expect("served device is a candidate");
                        self.harvest_w[dev] += self.link.harvest_w(c.d3d_sq);
                    }
                }
            }
        }
    }

    /// Advances the whole scenario by one step.
    pub fn step(&mut self) {
        let dt = self.config.dt_s;
        let clock = self.clock_s();

        for agent in self.agents.iter_mut() {
            mobility::advance(agent, &self.layout, dt, &mut self.mobility_rng);
        }
        self.compute_harvest();

        let spec = &self.config.device;
        if let Some(period) = spec.collective_period_s() {
            let window_end = clock + dt - 1e-9 * clock.max(1.0);
            while (self.next_epoch as f64) * period < window_end {
                self.next_epoch += 1;
                for dev in self.devices.iter_mut() {
                    policy_gate(spec, dev);
                }
            }
        }

        let in_window = self.step_index >= self.window_start;
        for ((dev, tot), &h) in self.devices.iter_mut().zip(&mut self.totals).zip(&self.harvest_w) {
            let e = step_energy(spec, dev, h, dt, clock);
            tot.harvested_j += h * dt;
            tot.consumed_j += e.consumed_j;
            if in_window {
                tot.window_harvested_j += h * dt;
                tot.window_consumed_j += e.consumed_j;
            }
        }

        self.step_index += 1;
        if self.soc_every > 0 && self.step_index.is_multiple_of(self.soc_every) {
            let n = self.devices.len() as f64;
            self.soc_trace.push(SocSample {
                time_s: self.clock_s(),
                mean_battery_j: self.devices.iter().map(|d| d.battery_j).sum::<f64>() / n,
                alive_fraction: self.devices.iter().filter(|d| d.alive).count() as f64 / n,
            });
        }
    }

    pub fn finish(self) -> RunRecord {
        let horizon = self.step_index as f64 * self.config.dt_s;
        let window_s = (self.step_index - self.window_start.min(self.step_index)) as f64 * self.config.dt_s;
        let devices = self
            .devices
            .iter()
            .zip(&self.totals)
            .map(|(d, t)| {
                let alive_s = d.depletion_time_s.unwrap_or(horizon);
                DeviceRecord {
                    mean_harvested_w: if horizon > 0.0 { t.harvested_j / horizon } else { 0.0 },
                    mean_consumed_w: if alive_s > 0.0 { t.consumed_j / alive_s } else { 0.0 },
                    depletion_time_s: d.depletion_time_s,
                    window_net_w: if window_s > 0.0 {
                        (t.window_harvested_j - t.window_consumed_j) / window_s
                    } else {
                        0.0
                    },
                    final_battery_j: d.battery_j,
                    collective_scheduled: d.collective_scheduled,
                    collective_delivered: d.collective_delivered,
                }
            })
            .collect();
        RunRecord {
            config: self.config,
            replication: self.replication,
            seed: self.seed,
            steps: self.step_index,
            horizon_s: horizon,
            devices,
            soc_trace: self.soc_trace,
            street_coordinates: (self.layout.horizontal_streets, self.layout.vertical_streets),
        }
    }
}

/// Runs replication `replication_index` of `config` to its horizon.
pub fn run(config: &ScenarioConfig, replication_index: u64) -> Result<RunRecord> {
    let mut sim = Simulation::new(config, replication_index)?;
    while !sim.is_finished() {
        sim.step();
    }
    Ok(sim.finish())
}

/// Runs replications `0..config.replications` on the current rayon pool.
/// Records are returned in replication order.
pub fn run_replications(config: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run(config, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::citygen::generate_manhattan;
    use rand::SeedableRng;

    fn city() -> CityLayout {
        generate_manhattan(400.0, 100.0, 20.0, 5.0).unwrap()
    }

    fn beacon_point(b: &Beacon) -> Point {
        match b.mount {
            Mount::Static(p) => p,
            Mount::Vehicle(_) => panic!("static expected"),
        }
    }

    #[test]
    fn regular_single_beacon_at_origin_of_first_segment() {
        let layout = city();
        let b = deploy_static_regular(&layout, 1, 3.0, Antenna::Omni);
        assert_eq!(b.len(), 1);
        assert_eq!(
            beacon_point(&b[0]),
            layout.point_on_sidewalk(0, Side::Upper, 0.0).unwrap()
        );
        assert!(deploy_static_regular(&layout, 0, 3.0, Antenna::Omni).is_empty());
    }

    #[test]
    fn regular_spacing_per_side() {
        let layout = city();
        let beacons = deploy_static_regular(&layout, 64, 3.0, Antenna::Omni);
        // street y = 130, upper side: consecutive beacons 6400 / 64 = 100 m apart
        let mut xs: Vec<f64> = beacons
            .iter()
            .map(beacon_point)
            .filter(|p| (p.y - 132.5).abs() < 1e-9)
            .map(|p| p.x)
            .collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs.len(), 4);
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - 100.0).abs() < 1e-9);
        }
        assert!(beacons.iter().all(|b| b.height_m == 3.0));
    }

    #[test]
    fn random_deployment_proportional_to_length() {
        let layout = city();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let beacons = deploy_static_random(&layout, 10_000, 3.0, Antenna::Omni, &mut rng);
        // per horizontal street (400 m of 3200 m of centerline): expect 1250 each
        let on_vertical = |p: &Point| {
            layout
                .vertical_streets
                .iter()
                .any(|&c| ((p.x - c).abs() - 2.5).abs() < 1e-9)
        };
        for &y in &layout.horizontal_streets {
            let count = beacons
                .iter()
                .map(beacon_point)
                .filter(|p| ((p.y - y).abs() - 2.5).abs() < 1e-9 && !on_vertical(p))
                .count() as f64;
            assert!((count - 1250.0).abs() / 1250.0 < 0.05, "{count}");
        }
        let again = deploy_static_random(&layout, 10_000, 3.0, Antenna::Omni, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(again, beacons);
        assert!(deploy_static_random(&layout, 0, 3.0, Antenna::Omni, &mut rng).is_empty());
    }

    #[test]
    fn mobile_deployment_structure() {
        let layout = city();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (vehicles, beacons) =
            deploy_mobile(&layout, 5, 100, &SpeedModel::default(), 3.0, Antenna::Omni, &mut rng).unwrap();
        assert_eq!((vehicles.len(), beacons.len()), (5, 5));
        for (v, b) in vehicles.iter().zip(&beacons) {
            assert_eq!(b.mount, Mount::Vehicle(v.id));
            assert!((v.speed_mps - 30.0 / 3.6).abs() < 1e-12);
        }
    }

    #[test]
    fn mobile_beacons_follow_carriers() {
        let cfg = ScenarioConfig {
            beacon_mode: BeaconMode::Mobile,
            beacon_count: 5,
            participants: 20,
            horizon_s: 200.0,
            ..Default::default()
        };
        let mut sim = Simulation::new(&cfg, 0).unwrap();
        while !sim.is_finished() {
            sim.step();
            for (b, p) in sim.beacons().iter().zip(sim.beacon_positions()) {
                let Mount::Vehicle(id) = b.mount else { panic!() };
                assert_eq!(p, mobility::position(&sim.agents()[id], sim.layout()));
            }
        }
    }

    #[test]
    fn device_grid_finds_all_neighbours() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..300)
            .map(|_| Point::new(rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0)))
            .collect();
        let mut grid = DeviceGrid::new(400.0, 52.0);
        grid.rebuild(&pts);
        for q in [Point::new(0.0, 0.0), Point::new(200.0, 133.0), Point::new(399.0, 5.0)] {
            let mut found = Vec::new();
            grid.for_each_near(q, 52.0, |d| found.push(d));
            found.sort();
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].distance(q) <= 52.0).collect();
            for b in brute {
                assert!(found.binary_search(&b).is_ok());
            }
        }
    }

    #[test]
    fn step_count_and_zero_horizon() {
        let cfg = ScenarioConfig {
            participants: 3,
            horizon_s: 10.5,
            dt_s: 1.0,
            ..Default::default()
        };
        assert_eq!(run(&cfg, 0).unwrap().steps, 10);
        let cfg = ScenarioConfig {
            horizon_s: 0.0,
            ..cfg
        };
        let rec = run(&cfg, 0).unwrap();
        assert_eq!(rec.steps, 0);
    }
}
