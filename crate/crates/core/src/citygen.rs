//! Street layouts: a regular Manhattan grid and an irregular grid with jittered
//! street pitch. Both are axis-aligned; streets span the whole simulation
//! square and are split into segments at every crossing.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Side of a street relative to its centerline: `Upper` is the side with the
/// larger perpendicular coordinate (north of a horizontal street, east of a
/// vertical one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }

    pub(crate) fn from_sign(sign: f64) -> Side {
        if sign >= 0.0 {
            Side::Upper
        } else {
            Side::Lower
        }
    }
}

/// Piece of a street between two consecutive nodes. `start` always has the
/// smaller coordinate along `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreetSegment {
    pub id: usize,
    pub axis: Axis,
    pub start: Point,
    pub end: Point,
    pub street_width_m: f64,
    pub road_width_m: f64,
    pub start_node: usize,
    pub end_node: usize,
}

impl StreetSegment {
    pub fn length(&self) -> f64 {
        match self.axis {
            Axis::Horizontal => self.end.x - self.start.x,
            Axis::Vertical => self.end.y - self.start.y,
        }
    }

    pub fn sidewalk_width_m(&self) -> f64 {
        (self.street_width_m - self.road_width_m) / 2.0
    }

    /// Point at arc-length `arc_s` from `start`, shifted `lateral_m` towards the
    /// upper side.
    pub fn point_at(&self, arc_s: f64, lateral_m: f64) -> Point {
        match self.axis {
            Axis::Horizontal => Point::new(self.start.x + arc_s, self.start.y + lateral_m),
            Axis::Vertical => Point::new(self.start.x + lateral_m, self.start.y + arc_s),
        }
    }

    /// Node reached when travelling along the segment with `heading` (+1 towards `end`).
    pub fn node_ahead(&self, heading: i8) -> usize {
        if heading > 0 {
            self.end_node
        } else {
            self.start_node
        }
    }
}

/// Street-graph vertex: a crossing of two streets (an intersection) or the
/// point where a street leaves the simulation square (a terminal, degree 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Point,
    pub segments: Vec<usize>,
}

impl Node {
    pub fn degree(&self) -> usize {
        self.segments.len()
    }

    pub fn is_intersection(&self) -> bool {
        self.degree() >= 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityLayout {
    pub area_side_m: f64,
    pub street_width_m: f64,
    pub road_width_m: f64,
    /// Centerline y coordinates of horizontal streets, ascending.
    pub horizontal_streets: Vec<f64>,
    /// Centerline x coordinates of vertical streets, ascending.
    pub vertical_streets: Vec<f64>,
    pub segments: Vec<StreetSegment>,
    pub nodes: Vec<Node>,
    pub pedestrian_zone_area_m2: f64,
}

fn check_widths(area_side_m: f64, street_width_m: f64, road_width_m: f64) -> Result<()> {
    for (name, v) in [
        ("area_side_m", area_side_m),
        ("street_width_m", street_width_m),
        ("road_width_m", road_width_m),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
        }
    }
    if road_width_m >= street_width_m {
        return Err(Error::Geometry(format!(
            "road width {road_width_m} m must be smaller than street width {street_width_m} m"
        )));
    }
    if street_width_m > area_side_m {
        return Err(Error::Geometry(format!(
            "street width {street_width_m} m does not fit in a {area_side_m} m area"
        )));
    }
    Ok(())
}

/// Regular grid: the first street's edge sits at coordinate 0 and streets
/// repeat every `block_m + street_width_m` while they fit inside the square.
pub fn generate_manhattan(
    area_side_m: f64,
    block_m: f64,
    street_width_m: f64,
    road_width_m: f64,
) -> Result<CityLayout> {
    check_widths(area_side_m, street_width_m, road_width_m)?;
    if !(block_m.is_finite() && block_m > 0.0) {
        return Err(Error::Geometry(format!("block size must be positive, got {block_m}")));
    }
    let pitch = block_m + street_width_m;
    let centers = |_: ()| {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let c = street_width_m / 2.0 + k as f64 * pitch;
            if c + street_width_m / 2.0 > area_side_m + 1e-9 {
                break;
            }
            out.push(c);
            k += 1;
        }
        out
    };
    build_grid(area_side_m, centers(()), centers(()), street_width_m, road_width_m)
}

/// Irregular grid: successive street pitches are drawn uniformly from
/// `pitch * [1 - jitter, 1 + jitter]` with `pitch = block_mean_m + street_width_m`,
/// independently along each axis.
pub fn generate_random_layout<R: Rng + ?Sized>(
    area_side_m: f64,
    block_mean_m: f64,
    block_jitter_frac: f64,
    street_width_m: f64,
    road_width_m: f64,
    rng: &mut R,
) -> Result<CityLayout> {
    check_widths(area_side_m, street_width_m, road_width_m)?;
    if !(block_mean_m.is_finite() && block_mean_m > 0.0) {
        return Err(Error::Geometry(format!(
            "block size must be positive, got {block_mean_m}"
        )));
    }
    if !(0.0..1.0).contains(&block_jitter_frac) {
        return Err(Error::Geometry(format!(
            "block jitter must be in [0, 1), got {block_jitter_frac}"
        )));
    }
    let pitch = block_mean_m + street_width_m;
    let (lo, hi) = (pitch * (1.0 - block_jitter_frac), pitch * (1.0 + block_jitter_frac));
    if lo <= street_width_m {
        return Err(Error::Geometry(format!(
            "jitter {block_jitter_frac} lets streets overlap (minimum pitch {lo} m)"
        )));
    }
    let draw_axis = |rng: &mut R| {
        let mut out = Vec::new();
        let mut c = street_width_m / 2.0;
        while c + street_width_m / 2.0 <= area_side_m + 1e-9 {
            out.push(c);
            c += if hi > lo { rng.gen_range(lo..=hi) } else { pitch };
        }
        out
    };
    let horizontal = draw_axis(rng);
    let vertical = draw_axis(rng);
    build_grid(area_side_m, horizontal, vertical, street_width_m, road_width_m)
}

fn build_grid(
    area_side_m: f64,
    horizontal_streets: Vec<f64>,
    vertical_streets: Vec<f64>,
    street_width_m: f64,
    road_width_m: f64,
) -> Result<CityLayout> {
    if horizontal_streets.is_empty() || vertical_streets.is_empty() {
        return Err(Error::EmptyLayout);
    }
    let nh = horizontal_streets.len();
    let nv = vertical_streets.len();

    let mut nodes: Vec<Node> = Vec::with_capacity(nh * nv + 2 * (nh + nv));
    for &y in &horizontal_streets {
        for &x in &vertical_streets {
            let id = nodes.len();
            nodes.push(Node {
                id,
                position: Point::new(x, y),
                segments: Vec::new(),
            });
        }
    }
    let crossing = |i: usize, j: usize| i * nv + j;
    let push_terminal = |nodes: &mut Vec<Node>, p: Point| {
        let id = nodes.len();
        nodes.push(Node {
            id,
            position: p,
            segments: Vec::new(),
        });
        id
    };

    let mut segments = Vec::new();
    let add_segment =
        |nodes: &mut Vec<Node>, axis: Axis, a: usize, b: usize, segments: &mut Vec<StreetSegment>| {
            let id = segments.len();
            segments.push(StreetSegment {
                id,
                axis,
                start: nodes[a].position,
                end: nodes[b].position,
                street_width_m,
                road_width_m,
                start_node: a,
                end_node: b,
            });
            nodes[a].segments.push(id);
            nodes[b].segments.push(id);
        };

    for (i, &y) in horizontal_streets.iter().enumerate() {
        let west = push_terminal(&mut nodes, Point::new(0.0, y));
        let east = push_terminal(&mut nodes, Point::new(area_side_m, y));
        let mut chain = vec![west];
        chain.extend((0..nv).map(|j| crossing(i, j)));
        chain.push(east);
        for w in chain.windows(2) {
            add_segment(&mut nodes, Axis::Horizontal, w[0], w[1], &mut segments);
        }
    }
    for (j, &x) in vertical_streets.iter().enumerate() {
        let south = push_terminal(&mut nodes, Point::new(x, 0.0));
        let north = push_terminal(&mut nodes, Point::new(x, area_side_m));
        let mut chain = vec![south];
        chain.extend((0..nh).map(|i| crossing(i, j)));
        chain.push(north);
        for w in chain.windows(2) {
            add_segment(&mut nodes, Axis::Vertical, w[0], w[1], &mut segments);
        }
    }

    // Sidewalk strips run the full street length; the strips of two crossing
    // streets overlap in a (2 * sidewalk)^2 patch at every crossing.
    let strip = street_width_m - road_width_m;
    let pedestrian_zone_area_m2 = (nh + nv) as f64 * strip * area_side_m
        - (nh * nv) as f64 * strip * strip;

    Ok(CityLayout {
        area_side_m,
        street_width_m,
        road_width_m,
        horizontal_streets,
        vertical_streets,
        segments,
        nodes,
        pedestrian_zone_area_m2,
    })
}

impl CityLayout {
    pub fn intersections(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_intersection())
    }

    pub fn sidewalk_width_m(&self) -> f64 {
        (self.street_width_m - self.road_width_m) / 2.0
    }

    /// Lateral offset of the sidewalk mid-line from the street centerline.
    pub fn pedestrian_offset_m(&self) -> f64 {
        self.road_width_m / 2.0 + self.sidewalk_width_m() / 2.0
    }

    /// Sum of centerline lengths.
    pub fn total_centerline_length(&self) -> f64 {
        self.segments.iter().map(StreetSegment::length).sum()
    }

    /// Both sides of every segment.
    pub fn total_sidewalk_length(&self) -> f64 {
        2.0 * self.total_centerline_length()
    }

    /// Point on the sidewalk/road boundary line of `side` at arc-length `arc_s`.
    pub fn point_on_sidewalk(&self, segment_id: usize, side: Side, arc_s: f64) -> Result<Point> {
        let seg = self
            .segments
            .get(segment_id)
            .ok_or_else(|| Error::Geometry(format!("no segment with id {segment_id}")))?;
        let length = seg.length();
        if !(0.0..=length).contains(&arc_s) {
            return Err(Error::ArcOutOfRange {
                segment: segment_id,
                arc_s,
                length,
            });
        }
        Ok(seg.point_at(arc_s, side.sign() * self.road_width_m / 2.0))
    }

    /// Locates position `s` along the concatenation of all segment centerlines
    /// in id order. `s` is clamped to the total length.
    pub fn locate_along(&self, s: f64) -> (usize, f64) {
        let mut rest = s.max(0.0);
        for seg in &self.segments {
            let len = seg.length();
            if rest < len {
                return (seg.id, rest);
            }
            rest -= len;
        }
        let last = self.segments.last().expect("layout has segments");
        (last.id, last.length())
    }

    /// True when `p` lies on a street (within half a street width of a centerline).
    pub fn on_street(&self, p: Point) -> bool {
        let half = self.street_width_m / 2.0 + 1e-9;
        let inside = |v: f64| (-1e-9..=self.area_side_m + 1e-9).contains(&v);
        inside(p.x)
            && inside(p.y)
            && (self.horizontal_streets.iter().any(|&c| (p.y - c).abs() <= half)
                || self.vertical_streets.iter().any(|&c| (p.x - c).abs() <= half))
    }

    /// True when `p` lies in some street's sidewalk strip.
    pub fn on_sidewalk(&self, p: Point) -> bool {
        let half_street = self.street_width_m / 2.0;
        let half_road = self.road_width_m / 2.0;
        let in_strip = |d: f64| d > half_road && d <= half_street;
        self.horizontal_streets.iter().any(|&c| in_strip((p.y - c).abs()))
            || self.vertical_streets.iter().any(|&c| in_strip((p.x - c).abs()))
    }

    /// Breadth-first connectivity check over the node graph.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &s in &self.nodes[n].segments {
                let seg = &self.segments[s];
                for next in [seg.start_node, seg.end_node] {
                    if !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
