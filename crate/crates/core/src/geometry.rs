//! Intersection scenario: two perpendicular road corridors crossing at the
//! origin, four building quadrants, and vehicles placed lane by lane with
//! exponential gaps.
//!
//! Coordinates are meters. The horizontal road runs along the x axis and the
//! vertical road along the y axis; each corridor spans the carriageway plus a
//! sidewalk on both sides. Everything outside both corridors is building.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use fixedbitset::FixedBitSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| Point::new(self.x / n, self.y / n))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Whether the closed segment `a`–`b` touches this rectangle (slab clipping).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        segment_hits_box(a, b, self.min, self.max)
    }
}

/// Liang–Barsky style slab test of segment `a`–`b` against a closed box.
fn segment_hits_box(a: Point, b: Point, min: Point, max: Point) -> bool {
    let d = b - a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, dp, lo, hi) in [(a.x, d.x, min.x, max.x), (a.y, d.y, min.y, max.y)] {
        if dp == 0.0 {
            if p < lo || p > hi {
                return false;
            }
            continue;
        }
        let mut ta = (lo - p) / dp;
        let mut tb = (hi - p) / dp;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Road {
    /// Runs along the x axis.
    Horizontal,
    /// Runs along the y axis.
    Vertical,
}

/// Vehicle body: an oriented rectangle centered at `position` with its long
/// side along `heading`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    pub position: Point,
    pub heading: Point,
    pub road: Road,
    pub lane: usize,
    pub length: f64,
    pub width: f64,
}

impl Vehicle {
    fn local_coords(&self, p: Point) -> Point {
        let rel = p - self.position;
        let side = Point::new(-self.heading.y, self.heading.x);
        Point::new(rel.dot(self.heading), rel.dot(side))
    }

    fn half_extents(&self) -> Point {
        Point::new(self.length / 2.0, self.width / 2.0)
    }

    pub fn footprint_contains(&self, p: Point) -> bool {
        let q = self.local_coords(p);
        let h = self.half_extents();
        q.x.abs() <= h.x && q.y.abs() <= h.y
    }

    /// Whether the segment `a`–`b` crosses this vehicle's footprint.
    pub fn footprint_hits_segment(&self, a: Point, b: Point) -> bool {
        let h = self.half_extents();
        segment_hits_box(
            self.local_coords(a),
            self.local_coords(b),
            Point::new(-h.x, -h.y),
            h,
        )
    }

    fn corners(&self) -> [Point; 4] {
        let h = self.half_extents();
        let side = Point::new(-self.heading.y, self.heading.x);
        let f = self.heading * h.x;
        let s = side * h.y;
        [
            self.position + f + s,
            self.position + f - s,
            self.position - f - s,
            self.position - f + s,
        ]
    }

    /// Separating-axis overlap test between two footprints.
    pub fn footprint_overlaps(&self, other: &Vehicle) -> bool {
        let axes = [
            self.heading,
            Point::new(-self.heading.y, self.heading.x),
            other.heading,
            Point::new(-other.heading.y, other.heading.x),
        ];
        let (ca, cb) = (self.corners(), other.corners());
        axes.iter().all(|&axis| {
            let project = |cs: &[Point; 4]| {
                cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    let v = c.dot(axis);
                    (lo.min(v), hi.max(v))
                })
            };
            let (a0, a1) = project(&ca);
            let (b0, b1) = project(&cb);
            a1 > b0 && b1 > a0
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorShape {
    /// Half-length measured along each corridor axis (rectangle or cross).
    #[default]
    ArmWise,
    /// Arm-wise shape further clipped to a Euclidean disk.
    Euclidean,
}

impl std::str::FromStr for SensorShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arm-wise" => Ok(SensorShape::ArmWise),
            "euclidean" => Ok(SensorShape::Euclidean),
            other => Err(Error::config(format!(
                "unknown sensor shape `{other}` (expected arm-wise or euclidean)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub lanes_per_road: usize,
    pub lane_width: f64,
    pub sidewalk_width: f64,
    pub sensor_range_rs: f64,
    /// Sensor reach along an arm is `sensor_reach_factor * sensor_range_rs`.
    pub sensor_reach_factor: f64,
    pub sensor_shape: SensorShape,
    pub avg_gap_lavg: f64,
    pub num_vehicles_nv: usize,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Half-length of each simulated corridor.
    pub road_extent: f64,
    /// Lanes run through the junction box; when false, vehicles overlapping
    /// the box are skipped (stop-line placement).
    pub junction_vehicles: bool,
    pub grid_res: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            lanes_per_road: 4,
            lane_width: 3.5,
            sidewalk_width: 4.0,
            sensor_range_rs: 50.0,
            sensor_reach_factor: 0.5,
            sensor_shape: SensorShape::ArmWise,
            avg_gap_lavg: 40.0,
            num_vehicles_nv: 20,
            vehicle_length: 4.4,
            vehicle_width: 1.7,
            road_extent: 200.0,
            junction_vehicles: true,
            grid_res: 0.25,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lane_width", self.lane_width),
            ("sidewalk_width", self.sidewalk_width),
            ("avg_gap_lavg", self.avg_gap_lavg),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("road_extent", self.road_extent),
            ("grid_res", self.grid_res),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("sensor_range_rs", self.sensor_range_rs),
            ("sensor_reach_factor", self.sensor_reach_factor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.lanes_per_road == 0 || !self.lanes_per_road.is_multiple_of(2) {
            return Err(Error::config(format!(
                "lanes_per_road must be even and nonzero, got {}",
                self.lanes_per_road
            )));
        }
        if self.vehicle_width > self.lane_width {
            return Err(Error::config("vehicle_width exceeds lane_width"));
        }
        Ok(())
    }

    pub fn corridor_half_width(&self) -> f64 {
        self.lanes_per_road as f64 * self.lane_width / 2.0 + self.sidewalk_width
    }

    pub fn sensor_reach(&self) -> f64 {
        self.sensor_range_rs * self.sensor_reach_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blockage {
    pub blockers: usize,
    pub building_blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub corridor_half_width: f64,
    pub center: Point,
    pub buildings: Vec<Rect>,
    pub vehicles: Vec<Vehicle>,
}

/// Places vehicles lane by lane and keeps the `num_vehicles_nv` closest to
/// the center. Deterministic in `config.rng_seed`.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let half = config.corridor_half_width();
    let extent = config.road_extent;
    let gap = Exp::new(1.0 / config.avg_gap_lavg)
        .map_err(|e| Error::config(format!("avg_gap_lavg: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let carriage_half = config.lanes_per_road as f64 * config.lane_width / 2.0;
    let len = config.vehicle_length;
    let mut placed: Vec<Vehicle> = Vec::new();
    for road in [Road::Horizontal, Road::Vertical] {
        for lane in 0..config.lanes_per_road {
            let offset = -carriage_half + (lane as f64 + 0.5) * config.lane_width;
            // right-hand traffic: the negative-offset half drives toward +axis
            let dir = if (offset < 0.0) == (road == Road::Horizontal) { 1.0 } else { -1.0 };
            let (heading, at) = match road {
                Road::Horizontal => (Point::new(dir, 0.0), Point::new(0.0, offset)),
                Road::Vertical => (Point::new(0.0, dir), Point::new(offset, 0.0)),
            };
            let along = match road {
                Road::Horizontal => Point::new(1.0, 0.0),
                Road::Vertical => Point::new(0.0, 1.0),
            };
            // `rear` is the along-lane coordinate of the previous vehicle's front bumper.
            let mut rear = -extent;
            loop {
                let s = rear + gap.sample(&mut rng) + len / 2.0;
                if s + len / 2.0 > extent {
                    break;
                }
                rear = s + len / 2.0;
                if !config.junction_vehicles && s.abs() - len / 2.0 < half {
                    continue;
                }
                let v = Vehicle {
                    id: 0,
                    position: at + along * s,
                    heading,
                    road,
                    lane,
                    length: len,
                    width: config.vehicle_width,
                };
                if placed.iter().any(|p| p.road != road && p.footprint_overlaps(&v)) {
                    continue;
                }
                placed.push(v);
            }
        }
    }

    if placed.len() < config.num_vehicles_nv {
        return Err(Error::config(format!(
            "corridors of half-length {extent} m hold {} vehicles, {} requested ({} short)",
            placed.len(),
            config.num_vehicles_nv,
            config.num_vehicles_nv - placed.len()
        )));
    }
    // stable: equal distances keep placement order
    placed.sort_by(|a, b| a.position.norm().total_cmp(&b.position.norm()));
    placed.truncate(config.num_vehicles_nv);
    for (i, v) in placed.iter_mut().enumerate() {
        v.id = i;
    }

    Ok(Scenario::with_vehicles(config.clone(), placed))
}

impl Scenario {
    /// Scenario with explicitly positioned vehicles. Ids are reassigned to
    /// list order.
    pub fn with_vehicles(config: ScenarioConfig, mut vehicles: Vec<Vehicle>) -> Self {
        let half = config.corridor_half_width();
        let far = config.road_extent * 4.0 + half;
        let buildings = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .iter()
            .map(|&(sx, sy)| {
                let (x0, x1) = if sx > 0.0 { (half, far) } else { (-far, -half) };
                let (y0, y1) = if sy > 0.0 { (half, far) } else { (-far, -half) };
                Rect::new(Point::new(x0, y0), Point::new(x1, y1))
            })
            .collect();
        for (i, v) in vehicles.iter_mut().enumerate() {
            v.id = i;
        }
        Scenario {
            corridor_half_width: half,
            center: Point::ORIGIN,
            buildings,
            vehicles,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn position(&self, id: usize) -> Point {
        self.vehicles[id].position
    }

    /// Overlap of the two corridors.
    pub fn junction_box(&self) -> Rect {
        let h = self.corridor_half_width;
        Rect::new(Point::new(-h, -h), Point::new(h, h))
    }

    pub fn on_road(&self, p: Point) -> bool {
        let h = self.corridor_half_width;
        let e = self.config.road_extent;
        (p.y.abs() <= h && p.x.abs() <= e) || (p.x.abs() <= h && p.y.abs() <= e)
    }

    /// Vehicles (other than `i`, `j`) whose footprint crosses the segment
    /// between their centers, and whether a building cuts line of sight.
    pub fn count_blockers(&self, i: usize, j: usize) -> Blockage {
        let (a, b) = (self.position(i), self.position(j));
        let blockers = self
            .vehicles
            .iter()
            .filter(|v| v.id != i && v.id != j && v.footprint_hits_segment(a, b))
            .count();
        let building_blocked = self.buildings.iter().any(|r| r.intersects_segment(a, b));
        Blockage {
            blockers,
            building_blocked,
        }
    }

    /// Raster covering every sensor region this scenario can produce.
    pub fn raster(&self) -> Raster {
        let reach = self.config.sensor_reach();
        let far = self
            .vehicles
            .iter()
            .map(|v| v.position.x.abs().max(v.position.y.abs()))
            .fold(0.0_f64, f64::max);
        let half = (far + reach + self.corridor_half_width).min(self.config.road_extent);
        Raster::square(half.max(self.corridor_half_width), self.config.grid_res)
    }

    /// Sensor footprint of vehicle `id`: a cross when the vehicle sits in the
    /// junction box, otherwise a rectangle along its own corridor. Arms reach
    /// `sensor_reach()` from the vehicle and are clipped to the corridors.
    pub fn sensor_region(&self, id: usize, raster: &Raster) -> Region {
        let mut region = Region::empty(raster);
        let reach = self.config.sensor_reach();
        if reach <= 0.0 || self.vehicles.is_empty() {
            return region;
        }
        let p = self.position(id);
        let h = self.corridor_half_width;
        let e = self.config.road_extent;
        let in_horizontal = p.y.abs() <= h;
        let in_vertical = p.x.abs() <= h;
        let euclid = self.config.sensor_shape == SensorShape::Euclidean;

        let mut arms = Vec::with_capacity(2);
        if in_horizontal {
            arms.push(Rect::new(
                Point::new((p.x - reach).max(-e), -h),
                Point::new((p.x + reach).min(e), h),
            ));
        }
        if in_vertical {
            arms.push(Rect::new(
                Point::new(-h, (p.y - reach).max(-e)),
                Point::new(h, (p.y + reach).min(e)),
            ));
        }
        for arm in arms {
            raster.fill(&mut region, &arm, |c| !euclid || c.distance(p) <= reach);
        }
        region
    }

    /// Serialized key/value document; identical scenarios give identical bytes.
    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable")
    }

    pub fn from_document(doc: &str) -> Result<Self> {
        toml::from_str(doc).map_err(|e| Error::config(format!("scenario document: {e}")))
    }
}

/// Square cell grid centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Raster {
    pub origin: f64,
    pub res: f64,
    pub cells_per_side: usize,
}

impl Raster {
    /// Smallest grid of resolution `res` covering `[-half, half]²`.
    pub fn square(half: f64, res: f64) -> Self {
        let n = (half / res - 1e-9).ceil().max(1.0) as usize;
        Raster {
            origin: -(n as f64) * res,
            res,
            cells_per_side: 2 * n,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    pub fn cell_area(&self) -> f64 {
        self.res * self.res
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin + (ix as f64 + 0.5) * self.res,
            self.origin + (iy as f64 + 0.5) * self.res,
        )
    }

    /// Index range of cells whose centers fall in `[lo, hi]` along one axis.
    fn span(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = ((lo - self.origin) / self.res - 0.5).ceil().max(0.0) as usize;
        let last = ((hi - self.origin) / self.res - 0.5).floor();
        if last < 0.0 {
            return 0..0;
        }
        let end = (last as usize + 1).min(self.cells_per_side);
        first.min(end)..end
    }

    /// Sets every cell whose center lies in `rect` and passes `keep`.
    fn fill(&self, region: &mut Region, rect: &Rect, keep: impl Fn(Point) -> bool) {
        let xs = self.span(rect.min.x, rect.max.x);
        for iy in self.span(rect.min.y, rect.max.y) {
            for ix in xs.clone() {
                if keep(self.cell_center(ix, iy)) {
                    region.cells.insert(iy * self.cells_per_side + ix);
                }
            }
        }
    }
}

/// Occupancy raster; area is the number of set cells times the cell area.
#[derive(Clone, PartialEq, Eq)]
pub struct Region {
    cells: FixedBitSet,
    cell_area_bits: u64,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("cells", &self.cells.count_ones(..))
            .field("area", &self.area())
            .finish()
    }
}

impl Region {
    pub fn empty(raster: &Raster) -> Self {
        Region {
            cells: FixedBitSet::with_capacity(raster.cell_count()),
            cell_area_bits: raster.cell_area().to_bits(),
        }
    }

    pub fn area(&self) -> f64 {
        self.cells.count_ones(..) as f64 * f64::from_bits(self.cell_area_bits)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.count_ones(..)
    }

    pub fn contains_cell(&self, index: usize) -> bool {
        self.cells.contains(index)
    }

    pub fn union_with(&mut self, other: &Region) {
        self.cells.union_with(&other.cells);
    }

    pub fn intersect_with(&mut self, other: &Region) {
        self.cells.intersect_with(&other.cells);
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.ones()
    }
}
