//! Pedestrians and vehicles moving along the street graph.
//!
//! Pedestrians walk on the sidewalk mid-line of one side of the street,
//! vehicles drive on the road centerline. At a node an agent picks uniformly
//! among the non-reversing continuations; a terminal at the area edge forces a
//! U-turn.

use rand::Rng;

use crate::citygen::{Axis, CityLayout, Point, Side};
use crate::error::{param, Error, Result};

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Pedestrian,
    Vehicle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub role: Role,
    pub segment: usize,
    /// Sidewalk for pedestrians; `None` for vehicles on the road centerline.
    pub side: Option<Side>,
    pub arc_s: f64,
    /// +1 travels towards the segment's `end`, -1 towards its `start`.
    pub heading: i8,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedModel {
    pub pedestrian_min_kmh: f64,
    pub pedestrian_max_kmh: f64,
    pub vehicle_kmh: f64,
}

impl Default for SpeedModel {
    fn default() -> Self {
        Self {
            pedestrian_min_kmh: 3.0,
            pedestrian_max_kmh: 6.0,
            vehicle_kmh: 30.0,
        }
    }
}

impl SpeedModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pedestrian_min_kmh > 0.0 && self.pedestrian_min_kmh <= self.pedestrian_max_kmh) {
            return Err(param(
                "pedestrian_speed_kmh",
                format!(
                    "need 0 < min <= max, got [{}, {}]",
                    self.pedestrian_min_kmh, self.pedestrian_max_kmh
                ),
            ));
        }
        if !(self.vehicle_kmh > 0.0) {
            return Err(param("vehicle_speed_kmh", "must be positive"));
        }
        Ok(())
    }
}

fn random_heading<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.gen::<bool>() {
        1
    } else {
        -1
    }
}

/// Spawns pedestrians uniformly over all sidewalk length and vehicles uniformly
/// over all road length. Ids are assigned pedestrians first, then vehicles.
pub fn spawn_agents<R: Rng + ?Sized>(
    layout: &CityLayout,
    n_pedestrians: usize,
    n_vehicles: usize,
    speeds: &SpeedModel,
    rng: &mut R,
) -> Result<Vec<Agent>> {
    if layout.segments.is_empty() {
        return Err(Error::EmptyLayout);
    }
    speeds.validate()?;
    let total = layout.total_centerline_length();
    let mut agents = Vec::with_capacity(n_pedestrians + n_vehicles);
    for i in 0..n_pedestrians + n_vehicles {
        let (segment, arc_s) = layout.locate_along(rng.gen_range(0.0..total));
        let heading = random_heading(rng);
        let agent = if i < n_pedestrians {
            let side = if rng.gen::<bool>() { Side::Upper } else { Side::Lower };
            let kmh = rng.gen_range(speeds.pedestrian_min_kmh..=speeds.pedestrian_max_kmh);
            Agent {
                id: i,
                role: Role::Pedestrian,
                segment,
                side: Some(side),
                arc_s,
                heading,
                speed_mps: kmh_to_mps(kmh),
            }
        } else {
            Agent {
                id: i,
                role: Role::Vehicle,
                segment,
                side: None,
                arc_s,
                heading,
                speed_mps: kmh_to_mps(speeds.vehicle_kmh),
            }
        };
        agents.push(agent);
    }
    Ok(agents)
}

// +1 when the side lies to the left of the direction of travel.
fn relative_side(axis: Axis, side: Side, heading: i8) -> f64 {
    let h = f64::from(heading);
    match axis {
        Axis::Horizontal => side.sign() * h,
        Axis::Vertical => -side.sign() * h,
    }
}

fn side_from_relative(axis: Axis, relative: f64, heading: i8) -> Side {
    let h = f64::from(heading);
    match axis {
        Axis::Horizontal => Side::from_sign(relative * h),
        Axis::Vertical => Side::from_sign(-relative * h),
    }
}

/// Moves `agent` by `speed * dt_s`, turning at every node it reaches.
pub fn advance<R: Rng + ?Sized>(agent: &mut Agent, layout: &CityLayout, dt_s: f64, rng: &mut R) {
    let mut remaining = agent.speed_mps * dt_s;
    loop {
        let seg = &layout.segments[agent.segment];
        let len = seg.length();
        let to_node = if agent.heading > 0 {
            len - agent.arc_s
        } else {
            agent.arc_s
        };
        if remaining < to_node {
            agent.arc_s += f64::from(agent.heading) * remaining;
            return;
        }
        remaining -= to_node;
        let node = &layout.nodes[seg.node_ahead(agent.heading)];
        let options = node.segments.iter().filter(|&&s| s != agent.segment).count();
        if options == 0 {
            agent.arc_s = if agent.heading > 0 { len } else { 0.0 };
            agent.heading = -agent.heading;
            continue;
        }
        let pick = rng.gen_range(0..options);
        let next_id = *node
            .segments
            .iter()
            .filter(|&&s| s != agent.segment)
            .nth(pick)
            .expect("pick < options");
        let next = &layout.segments[next_id];
        let (arc_s, heading) = if next.start_node == node.id {
            (0.0, 1)
        } else {
            (next.length(), -1)
        };
        if let Some(side) = agent.side {
            let rel = relative_side(seg.axis, side, agent.heading);
            agent.side = Some(side_from_relative(next.axis, rel, heading));
        }
        agent.segment = next_id;
        agent.arc_s = arc_s;
        agent.heading = heading;
    }
}

/// Ground position of the agent.
pub fn position(agent: &Agent, layout: &CityLayout) -> Point {
    let lateral = agent
        .side
        .map_or(0.0, |s| s.sign() * layout.pedestrian_offset_m());
    layout.segments[agent.segment].point_at(agent.arc_s, lateral)
}

/// Position with the height at which the agent carries its device or beacon.
pub fn position3d(agent: &Agent, layout: &CityLayout, carried_height_m: f64) -> (Point, f64) {
    (position(agent, layout), carried_height_m)
}
