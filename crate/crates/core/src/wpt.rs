//! RF power transfer from beacons to wearables.
//!
//! Free-space link budget with a hard sensitivity gate, a fixed RF-to-DC
//! conversion efficiency, line-of-sight blockage by a Poisson field of human
//! bodies, and nearest-first beam allocation for directional beacons.

use rand::Rng;

use crate::citygen::Point;
use crate::error::{param, Result};

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Free-space loss is not meaningful in the reactive near field; shorter
/// distances are evaluated at this one.
pub const MIN_LINK_DISTANCE_M: f64 = 0.5;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

pub fn fspl_db(d_m: f64, frequency_hz: f64) -> f64 {
    let d = d_m.max(MIN_LINK_DISTANCE_M);
    20.0 * (4.0 * std::f64::consts::PI * d * frequency_hz / SPEED_OF_LIGHT_MPS).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetParams {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_omni_dbi: f64,
    pub tx_gain_dir_dbi: f64,
    pub rx_gain_dbi: f64,
    pub sensitivity_dbm: f64,
    /// RF-to-DC conversion efficiency.
    pub conversion_efficiency: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            frequency_hz: 915e6,
            tx_power_dbm: 30.0,
            tx_gain_omni_dbi: 0.0,
            tx_gain_dir_dbi: 16.0,
            rx_gain_dbi: 0.0,
            sensitivity_dbm: -20.0,
            conversion_efficiency: 0.30,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(param("frequency_hz", "must be positive"));
        }
        if !(self.conversion_efficiency > 0.0 && self.conversion_efficiency <= 1.0) {
            return Err(param("conversion_efficiency", "must be in (0, 1]"));
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("tx_gain_omni_dbi", self.tx_gain_omni_dbi),
            ("tx_gain_dir_dbi", self.tx_gain_dir_dbi),
            ("rx_gain_dbi", self.rx_gain_dbi),
            ("sensitivity_dbm", self.sensitivity_dbm),
        ] {
            if !v.is_finite() {
                return Err(param(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn tx_gain_dbi(&self, antenna: &Antenna) -> f64 {
        match antenna {
            Antenna::Omni => self.tx_gain_omni_dbi,
            Antenna::Directional { gain_dbi, .. } => *gain_dbi,
        }
    }
}

pub fn rx_power_dbm(params: &LinkBudgetParams, tx_gain_dbi: f64, d3d_m: f64) -> f64 {
    params.tx_power_dbm + tx_gain_dbi + params.rx_gain_dbi - fspl_db(d3d_m, params.frequency_hz)
}

/// 3D distance at which the received power equals the sensitivity.
pub fn max_range_3d(params: &LinkBudgetParams, tx_gain_dbi: f64) -> f64 {
    let budget_db = params.tx_power_dbm + tx_gain_dbi + params.rx_gain_dbi - params.sensitivity_dbm;
    SPEED_OF_LIGHT_MPS / (4.0 * std::f64::consts::PI * params.frequency_hz)
        * 10f64.powf(budget_db / 20.0)
}

/// Ground-plane coverage radius for a height difference `dh_m`; zero when
/// even the point directly below the beacon is out of range.
pub fn coverage_radius_2d(params: &LinkBudgetParams, tx_gain_dbi: f64, dh_m: f64) -> f64 {
    if rx_power_dbm(params, tx_gain_dbi, dh_m) < params.sensitivity_dbm {
        return 0.0;
    }
    let d = max_range_3d(params, tx_gain_dbi);
    (d * d - dh_m * dh_m).max(0.0).sqrt()
}

/// DC power harvested from a link received at `rx_dbm`; zero below sensitivity.
pub fn harvest_from_rx_dbm(params: &LinkBudgetParams, rx_dbm: f64) -> f64 {
    if rx_dbm >= params.sensitivity_dbm {
        params.conversion_efficiency * dbm_to_w(rx_dbm)
    } else {
        0.0
    }
}

/// Link budget in the linear domain, precomputed for one antenna type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLink {
    /// Received power at 1 m (W·m²).
    pub k_w_m2: f64,
    pub sensitivity_w: f64,
    pub efficiency: f64,
    /// Squared 3D distance beyond which the link is gated off.
    pub max_range_sq: f64,
}

impl LinearLink {
    pub fn new(params: &LinkBudgetParams, tx_gain_dbi: f64) -> Self {
        let range = max_range_3d(params, tx_gain_dbi);
        Self {
            k_w_m2: dbm_to_w(params.tx_power_dbm + tx_gain_dbi + params.rx_gain_dbi)
                * (SPEED_OF_LIGHT_MPS / (4.0 * std::f64::consts::PI * params.frequency_hz)).powi(2),
            sensitivity_w: dbm_to_w(params.sensitivity_dbm),
            efficiency: params.conversion_efficiency,
            max_range_sq: range * range,
        }
    }

    pub fn rx_power_w(&self, d3d_sq: f64) -> f64 {
        self.k_w_m2 / d3d_sq.max(MIN_LINK_DISTANCE_M * MIN_LINK_DISTANCE_M)
    }

    /// Harvested power for a link at squared 3D distance `d3d_sq`.
    pub fn harvest_w(&self, d3d_sq: f64) -> f64 {
        let rx = self.rx_power_w(d3d_sq);
        if rx >= self.sensitivity_w {
            self.efficiency * rx
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageGeometry {
    pub beacon_height_m: f64,
    pub device_height_m: f64,
    pub blocker_height_m: f64,
    pub body_diameter_m: f64,
    /// Density of human bodies on the pedestrian zone (m⁻²).
    pub blocker_density_per_m2: f64,
}

impl Default for BlockageGeometry {
    fn default() -> Self {
        Self {
            beacon_height_m: 3.0,
            device_height_m: 1.2,
            blocker_height_m: 1.7,
            body_diameter_m: 0.4,
            blocker_density_per_m2: 0.0,
        }
    }
}

impl BlockageGeometry {
    /// Body density when `participants` are `participant_fraction` of everyone
    /// walking on `pedestrian_zone_area_m2`.
    pub fn population_density(
        participants: usize,
        participant_fraction: f64,
        pedestrian_zone_area_m2: f64,
    ) -> f64 {
        participants as f64 / participant_fraction / pedestrian_zone_area_m2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.device_height_m < self.blocker_height_m
            && self.blocker_height_m < self.beacon_height_m)
        {
            return Err(param(
                "blocker_height_m",
                format!(
                    "need device height {} < blocker height {} < beacon height {}",
                    self.device_height_m, self.blocker_height_m, self.beacon_height_m
                ),
            ));
        }
        if !(self.body_diameter_m > 0.0) {
            return Err(param("body_diameter_m", "must be positive"));
        }
        if !(self.blocker_density_per_m2 >= 0.0 && self.blocker_density_per_m2.is_finite()) {
            return Err(param("blocker_density_per_m2", "must be non-negative"));
        }
        Ok(())
    }

    /// Fraction of the ground track, measured from the device, over which the
    /// beacon ray is below the top of a body.
    pub fn height_fraction(&self) -> f64 {
        (self.blocker_height_m - self.device_height_m) / (self.beacon_height_m - self.device_height_m)
    }
}

/// Probability that at least one body cuts the beacon→device ray.
///
/// Body centers form a Poisson field. A body blocks when its center lies
/// within one radius of the ray's ground track, on the stretch where the ray
/// is still below body height, and outside the wearer's own footprint.
pub fn blockage_probability(d2d_m: f64, geom: &BlockageGeometry) -> f64 {
    let radius = geom.body_diameter_m / 2.0;
    let effective = (geom.height_fraction() * d2d_m - radius).max(0.0);
    let mean_blockers = geom.blocker_density_per_m2 * geom.body_diameter_m * effective;
    if mean_blockers <= 0.0 {
        return 0.0;
    }
    -(-mean_blockers).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Antenna {
    Omni,
    Directional { max_beams: usize, gain_dbi: f64 },
}

impl Antenna {
    pub const MAX_BEAMS: usize = 6;

    pub fn directional(gain_dbi: f64) -> Self {
        Antenna::Directional {
            max_beams: Self::MAX_BEAMS,
            gain_dbi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mount {
    Static(Point),
    /// Carried by the vehicle agent with this id.
    Vehicle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub id: usize,
    pub mount: Mount,
    pub height_m: f64,
    pub antenna: Antenna,
}

/// A device within reach of one beacon during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub device: usize,
    pub d2d_m: f64,
    pub d3d_sq: f64,
}

impl Candidate {
    pub fn new(device: usize, beacon: (Point, f64), dev: (Point, f64)) -> Self {
        let d2d_sq = beacon.0.distance_sq(dev.0);
        let dh = beacon.1 - dev.1;
        Self {
            device,
            d2d_m: d2d_sq.sqrt(),
            d3d_sq: d2d_sq + dh * dh,
        }
    }
}

/// One Bernoulli line-of-sight draw; no randomness is consumed when the link
/// cannot be blocked.
pub fn los_draw<R: Rng + ?Sized>(d2d_m: f64, geom: &BlockageGeometry, rng: &mut R) -> bool {
    let p = blockage_probability(d2d_m, geom);
    p <= 0.0 || rng.gen::<f64>() >= p
}

/// Picks up to `max_beams` devices for a directional beacon: candidates are
/// visited nearest first (ties by device id), each gets a line-of-sight draw,
/// and the first ones that pass are served. Candidates must already be within
/// coverage. Returns device ids in service order.
pub fn assign_beams<R: Rng + ?Sized>(
    beacon: &Beacon,
    candidates: &mut [Candidate],
    geom: &BlockageGeometry,
    rng: &mut R,
) -> Vec<usize> {
    let max_beams = match beacon.antenna {
        Antenna::Directional { max_beams, .. } => max_beams,
        Antenna::Omni => return Vec::new(),
    };
    candidates.sort_unstable_by(|a, b| {
        a.d3d_sq
            .total_cmp(&b.d3d_sq)
            .then_with(|| a.device.cmp(&b.device))
    });
    let mut served = Vec::with_capacity(max_beams.min(candidates.len()));
    for c in candidates.iter() {
        if served.len() == max_beams {
            break;
        }
        if los_draw(c.d2d_m, geom, rng) {
            served.push(c.device);
        }
    }
    served
}

/// Beam sets of the directional beacons for the current step, indexed by beacon id.
pub type BeamMap = Vec<Vec<usize>>;

/// Power harvested by one device from all beacons. `beacons` pairs each beacon
/// with its current ground position. Omni links draw line of sight here;
/// directional links are served iff the device is in the beacon's beam set.
pub fn harvested_power_w<R: Rng + ?Sized>(
    device: usize,
    device_pos: (Point, f64),
    beacons: &[(&Beacon, Point)],
    params: &LinkBudgetParams,
    geom: &BlockageGeometry,
    rng: &mut R,
    beam_map: &BeamMap,
) -> f64 {
    let mut total = 0.0;
    for &(beacon, pos) in beacons {
        let c = Candidate::new(device, (pos, beacon.height_m), device_pos);
        let link = LinearLink::new(params, params.tx_gain_dbi(&beacon.antenna));
        if c.d3d_sq > link.max_range_sq {
            continue;
        }
        let served = match beacon.antenna {
            Antenna::Omni => los_draw(c.d2d_m, geom, rng),
            Antenna::Directional { .. } => beam_map
                .get(beacon.id)
                .is_some_and(|set| set.contains(&device)),
        };
        if served {
            total += link.harvest_w(c.d3d_sq);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fspl_values() {
        assert!(close(fspl_db(1.0, 915e6), 31.68, 0.01));
        assert!(close(fspl_db(10.0, 915e6), fspl_db(1.0, 915e6) + 20.0, 1e-9));
        assert_eq!(fspl_db(0.1, 915e6), fspl_db(0.5, 915e6));
    }

    #[test]
    fn rx_power_and_ranges() {
        let p = LinkBudgetParams::default();
        assert!(close(rx_power_dbm(&p, 0.0, 1.0), -1.68, 0.01));
        assert!(close(rx_power_dbm(&p, 0.0, 8.24), -20.0, 0.05));
        assert!(close(rx_power_dbm(&p, 16.0, 52.0), -20.0, 0.1));
        assert!(close(max_range_3d(&p, 0.0), 8.24, 0.05));
        assert!(close(max_range_3d(&p, 16.0), 52.0, 0.1));
        assert!(close(coverage_radius_2d(&p, 0.0, 1.8), 8.04, 0.05));
        assert!(close(coverage_radius_2d(&p, 16.0, 1.8), 51.97, 0.1));
        let deaf = LinkBudgetParams {
            sensitivity_dbm: 40.0,
            ..p
        };
        assert_eq!(coverage_radius_2d(&deaf, 16.0, 1.8), 0.0);
    }

    #[test]
    fn linear_link_matches_db_route() {
        let p = LinkBudgetParams::default();
        for gain in [0.0, 16.0] {
            let link = LinearLink::new(&p, gain);
            for d in [0.2, 0.5, 1.0, 3.3, 8.0, 8.2, 30.0, 51.9, 60.0] {
                let via_db = harvest_from_rx_dbm(&p, rx_power_dbm(&p, gain, d));
                let lin = link.harvest_w(d * d);
                assert!(close(lin, via_db, 1e-12 + 1e-9 * via_db), "d={d} {lin} {via_db}");
            }
        }
    }

    #[test]
    fn harvest_at_sensitivity_edge() {
        let p = LinkBudgetParams::default();
        let h = harvest_from_rx_dbm(&p, -20.0);
        assert!(close(h, 3e-6, 1e-18));
        assert_eq!(harvest_from_rx_dbm(&p, -20.000_001), 0.0);
        let one_m = harvest_from_rx_dbm(&p, rx_power_dbm(&p, 0.0, 1.0));
        assert!(close(one_m, 203.6e-6, 203.6e-6 * 0.01));
    }

    #[test]
    fn blockage_closed_form() {
        let mut g = BlockageGeometry::default();
        assert!(close(g.height_fraction(), 5.0 / 18.0, 1e-15));
        assert_eq!(blockage_probability(20.0, &g), 0.0);
        g.blocker_density_per_m2 = 0.1;
        assert_eq!(blockage_probability(0.72, &g), 0.0);
        assert!(close(blockage_probability(20.0, &g), 0.1928, 1e-4));
    }

    #[test]
    fn blockage_heights_validated() {
        let g = BlockageGeometry {
            blocker_height_m: 3.5,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        assert!(BlockageGeometry::default().validate().is_ok());
    }

    fn directional() -> Beacon {
        Beacon {
            id: 0,
            mount: Mount::Static(Point::default()),
            height_m: 3.0,
            antenna: Antenna::directional(16.0),
        }
    }

    fn candidates(n: usize) -> Vec<Candidate> {
        // reversed distances so sorting matters
        (0..n)
            .map(|i| {
                Candidate::new(
                    i,
                    (Point::default(), 3.0),
                    (Point::new(40.0 - 3.0 * i as f64, 0.0), 1.2),
                )
            })
            .collect()
    }

    #[test]
    fn beams_under_budget() {
        let g = BlockageGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let served = assign_beams(&directional(), &mut candidates(3), &g, &mut rng);
        assert_eq!(served.len(), 3);
        assert!(assign_beams(&directional(), &mut [], &g, &mut rng).is_empty());
    }

    #[test]
    fn beams_pick_six_nearest() {
        let g = BlockageGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = candidates(10);
        let mut oracle: Vec<(f64, usize)> = c.iter().map(|c| (c.d3d_sq, c.device)).collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<usize> = oracle.iter().take(6).map(|x| x.1).collect();
        assert_eq!(assign_beams(&directional(), &mut c, &g, &mut rng), expected);
    }

    #[test]
    fn beam_ties_broken_by_id() {
        let g = BlockageGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c: Vec<Candidate> = (0..8)
            .rev()
            .map(|i| Candidate::new(i, (Point::default(), 3.0), (Point::new(5.0, 0.0), 1.2)))
            .collect();
        assert_eq!(
            assign_beams(&directional(), &mut c, &g, &mut rng),
            vec![0, 1, 2, 3, 4, 5]
        );
    }

    #[test]
    fn harvest_sums_served_links() {
        let p = LinkBudgetParams::default();
        let g = BlockageGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let omni = Beacon {
            id: 0,
            mount: Mount::Static(Point::default()),
            height_m: 3.0,
            antenna: Antenna::Omni,
        };
        let dev = (Point::new(0.0, 0.0), 2.0);
        let w = harvested_power_w(0, dev, &[(&omni, Point::default())], &p, &g, &mut rng, &vec![]);
        assert!(close(w, 203.6e-6, 2.1e-6));

        // two identical beacons give twice the power
        let omni2 = Beacon { id: 1, ..omni.clone() };
        let w2 = harvested_power_w(
            0,
            dev,
            &[(&omni, Point::default()), (&omni2, Point::default())],
            &p,
            &g,
            &mut rng,
            &vec![],
        );
        assert!(close(w2, 2.0 * w, 1e-15));

        // directional beacon serves only devices in its beam set
        let dir = directional();
        let far = (Point::new(30.0, 0.0), 1.2);
        let pos = [(&dir, Point::default())];
        assert_eq!(harvested_power_w(3, far, &pos, &p, &g, &mut rng, &vec![vec![]]), 0.0);
        assert!(harvested_power_w(3, far, &pos, &p, &g, &mut rng, &vec![vec![3]]) > 0.0);

        // always blocked
        let wall = BlockageGeometry {
            blocker_density_per_m2: 1e6,
            ..g
        };
        let far_omni = (Point::new(5.0, 0.0), 1.2);
        assert_eq!(
            harvested_power_w(0, far_omni, &[(&omni, Point::default())], &p, &wall, &mut rng, &vec![]),
            0.0
        );
    }
}
