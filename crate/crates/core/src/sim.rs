//! Simulated rooms, sparse feature observations and the closed exploration
//! loop.

use std::f64::consts::PI;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exit::{analyze_exit, CoveredInterval, ExitParams, ExitPoint, GapSegment};
use crate::geometry::{AffinePlane, Point2, Point3, PointCloud3, Rect};
use crate::obstacles::{build_obstacles, ObstacleParams, ObstacleSet};
use crate::outliers::{remove_outliers, OutlierParams};
use crate::planner::{rrt_plan, shortcut_refine, Path, PlannerParams};

pub const FORMAT_VERSION: u32 = 1;

/// Side length of the triangle used to estimate the flight plane.
const TRIANGLE_SIDE: f64 = 1.0;

/// Angular spacing of closure points, in degrees.
const CLOSURE_STEP_DEG: f64 = 0.25;

const FEATURE_STREAM: u64 = u64::MAX;

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_flight_height() -> f64 {
    1.0
}

/// Axis-aligned room given by two opposite corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Room {
    /// Wall `side` as `(start, end)` with coordinates increasing along it.
    /// Sides: 0 bottom, 1 right, 2 top, 3 left.
    pub fn side(&self, side: usize) -> (Point2, Point2) {
        let [x0, y0] = self.min;
        let [x1, y1] = self.max;
        match side {
            0 => (Point2::new(x0, y0), Point2::new(x1, y0)),
            1 => (Point2::new(x1, y0), Point2::new(x1, y1)),
            2 => (Point2::new(x0, y1), Point2::new(x1, y1)),
            _ => (Point2::new(x0, y0), Point2::new(x0, y1)),
        }
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.u > self.min[0] && p.u < self.max[0] && p.v > self.min[1] && p.v < self.max[1]
    }

    pub fn rect(&self) -> Rect {
        Rect::new(Point2::new(self.min[0], self.min[1]), Point2::new(self.max[0], self.max[1]))
    }
}

/// Opening of `width` starting `offset` along wall `wall = 4 * room + side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Doorway {
    pub wall: usize,
    pub offset: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub doorways: Vec<Doorway>,
    /// Features per unit wall length.
    pub feature_density: f64,
    /// Probability that a visible feature is accompanied by a spurious one.
    pub outlier_rate: f64,
    /// Radius of the ball around the agent where spurious points appear.
    pub outlier_radius: f64,
    /// Standard deviation of in-plane positional jitter.
    pub sensor_noise: f64,
    /// Standard deviation of height jitter about the flight plane.
    #[serde(default)]
    pub height_jitter: f64,
    #[serde(default = "default_flight_height")]
    pub flight_height: f64,
    /// Features farther than this are not observed; `None` means unlimited.
    #[serde(default)]
    pub max_range: Option<f64>,
    pub start: [f64; 2],
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", self.format_version));
        }
        if self.rooms.is_empty() {
            return bad("at least one room is required".into());
        }
        for (i, room) in self.rooms.iter().enumerate() {
            let finite = room.min.iter().chain(room.max.iter()).all(|c| c.is_finite());
            if !finite || room.max[0] <= room.min[0] || room.max[1] <= room.min[1] {
                return bad(format!("room {i} has non-positive extent"));
            }
        }
        for (i, d) in self.doorways.iter().enumerate() {
            if d.wall >= 4 * self.rooms.len() {
                return bad(format!("doorway {i} refers to unknown wall {}", d.wall));
            }
            let (a, b) = self.rooms[d.wall / 4].side(d.wall % 4);
            let len = a.distance(&b);
            if !(d.width > 0.0) || !(d.offset >= 0.0) || d.offset + d.width > len + 1e-12 {
                return bad(format!("doorway {i} does not fit on wall {} of length {len}", d.wall));
            }
        }
        let non_negative = [
            ("feature_density", self.feature_density),
            ("outlier_rate", self.outlier_rate),
            ("outlier_radius", self.outlier_radius),
            ("sensor_noise", self.sensor_noise),
            ("height_jitter", self.height_jitter),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0"));
            }
        }
        if self.outlier_rate > 1.0 {
            return bad("outlier_rate must be <= 1".into());
        }
        if !self.flight_height.is_finite() {
            return bad("flight_height must be finite".into());
        }
        if let Some(r) = self.max_range {
            if !(r > 0.0) {
                return bad("max_range must be > 0".into());
            }
        }
        let start = Point2::new(self.start[0], self.start[1]);
        if !self.rooms.iter().any(|room| room.contains(&start)) {
            return bad("start must lie strictly inside a room".into());
        }
        Ok(())
    }

    pub fn start_position(&self) -> Point3 {
        Point3::new(self.start[0], self.start[1], self.flight_height)
    }
}

/// Ground-truth wall piece after merging shared walls and cutting doorways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Point2,
    pub b: Point2,
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub position: Point2,
    pub wall: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub walls: Vec<WallSegment>,
    pub features: Vec<Feature>,
    pub bbox: Rect,
}

impl Environment {
    /// Oracle check of a segment against the true walls, contact included.
    pub fn segment_crosses_walls(&self, a: Point2, b: Point2) -> bool {
        self.walls
            .iter()
            .any(|w| crate::geometry::segments_intersect(a, b, w.a, w.b))
    }

    pub fn is_outside(&self, p: &Point2) -> bool {
        !self.bbox.contains(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Horizontal,
    Vertical,
}

/// Line-wise union of room sides, minus doorway intervals.
fn merged_walls(spec: &EnvironmentSpec) -> Vec<WallSegment> {
    // (axis, fixed coordinate, lo, hi)
    let mut pieces: Vec<(u8, f64, f64, f64)> = Vec::new();
    for room in &spec.rooms {
        for side in 0..4 {
            pieces.push(side_interval(room, side));
        }
    }
    pieces.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));

    let mut merged: Vec<(u8, f64, f64, f64)> = Vec::new();
    for piece in pieces {
        match merged.last_mut() {
            Some(last) if last.0 == piece.0 && last.1 == piece.1 && piece.2 <= last.3 => {
                last.3 = last.3.max(piece.3);
            }
            _ => merged.push(piece),
        }
    }

    let cuts: Vec<(u8, f64, f64, f64)> = spec
        .doorways
        .iter()
        .map(|d| {
            let (axis, c, lo, _) = side_interval(&spec.rooms[d.wall / 4], d.wall % 4);
            (axis, c, lo + d.offset, lo + d.offset + d.width)
        })
        .collect();

    let mut walls = Vec::new();
    for (axis, c, lo, hi) in merged {
        let mut remaining = vec![(lo, hi)];
        for cut in cuts.iter().filter(|cut| cut.0 == axis && cut.1 == c) {
            remaining = remaining
                .into_iter()
                .flat_map(|(l, h)| {
                    let mut out = Vec::with_capacity(2);
                    if cut.2 > l {
                        out.push((l, h.min(cut.2)));
                    }
                    if cut.3 < h {
                        out.push((l.max(cut.3), h));
                    }
                    out
                })
                .filter(|(l, h)| h - l > 1e-12)
                .collect();
        }
        let axis = if axis == 0 { Axis::Horizontal } else { Axis::Vertical };
        for (l, h) in remaining {
            let (a, b) = match axis {
                Axis::Horizontal => (Point2::new(l, c), Point2::new(h, c)),
                Axis::Vertical => (Point2::new(c, l), Point2::new(c, h)),
            };
            walls.push(WallSegment { a, b });
        }
    }
    walls
}

fn side_interval(room: &Room, side: usize) -> (u8, f64, f64, f64) {
    let (a, b) = room.side(side);
    if side % 2 == 0 {
        (0, a.v, a.u, b.u)
    } else {
        (1, a.u, a.v, b.v)
    }
}

/// Build wall geometry and sample the fixed feature set along it.
pub fn generate_env(spec: &EnvironmentSpec) -> Result<Environment> {
    spec.validate()?;
    let walls = merged_walls(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(FEATURE_STREAM);
    let mut features = Vec::new();
    for (index, wall) in walls.iter().enumerate() {
        let count = (wall.length() * spec.feature_density).round() as usize;
        for i in 0..count {
            let t = (i as f64 + rng.random::<f64>()) / count as f64;
            features.push(Feature {
                position: wall.a + (wall.b - wall.a) * t,
                wall: index,
            });
        }
    }
    let bbox = spec
        .rooms
        .iter()
        .map(Room::rect)
        .reduce(|a, b| a.union(&b))
        .expect("validated spec has rooms");
    debug!("environment: {} wall segments, {} features", walls.len(), features.len());
    Ok(Environment { walls, features, bbox })
}

/// True when `wall` blocks the open segment from `eye` to `target`.
fn blocks(eye: Point2, target: Point2, wall: &WallSegment) -> bool {
    let d = target - eye;
    let e = wall.b - wall.a;
    let denom = d.cross(&e);
    if denom.abs() < 1e-15 {
        return false;
    }
    let w = wall.a - eye;
    let t = w.cross(&e) / denom;
    let s = w.cross(&d) / denom;
    t > 1e-12 && t < 1.0 - 1e-9 && (0.0..=1.0).contains(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitedSector {
    pub center: Point3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Point3,
    pub plane: AffinePlane,
    pub visited_sectors: Vec<VisitedSector>,
}

impl AgentState {
    pub fn new(position: Point3) -> Result<Self> {
        Ok(Self {
            position,
            plane: flight_plane(position)?,
            visited_sectors: Vec::new(),
        })
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.position.x, self.position.y)
    }
}

/// Plane through a small horizontal triangle flown from `position`.
pub fn flight_plane(position: Point3) -> Result<AffinePlane> {
    AffinePlane::from_three_points(
        position,
        position + Point3::new(TRIANGLE_SIDE, 0.0, 0.0),
        position + Point3::new(0.0, TRIANGLE_SIDE, 0.0),
    )
}

/// Observed cloud with a flag per point marking spurious returns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation {
    pub cloud: PointCloud3,
    pub spurious: Vec<bool>,
}

fn normal(sd: f64) -> Option<Normal<f64>> {
    (sd > 0.0).then(|| Normal::new(0.0, sd).expect("validated standard deviation"))
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> Point3 {
    loop {
        let p = Point3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if p.norm() <= 1.0 {
            return p * radius;
        }
    }
}

pub fn observe(env: &Environment, agent: &AgentState, spec: &EnvironmentSpec, iteration: u64) -> PointCloud3 {
    observe_tagged(env, agent, spec, iteration).cloud
}

/// Panoramic scan: each visible feature yields one jittered point, and with
/// probability `outlier_rate` one extra spurious point near the agent.
pub fn observe_tagged(env: &Environment, agent: &AgentState, spec: &EnvironmentSpec, iteration: u64) -> Observation {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(iteration);
    let planar = normal(spec.sensor_noise);
    let vertical = normal(spec.height_jitter);
    let eye = agent.xy();
    let mut out = Observation::default();
    for feature in &env.features {
        if let Some(range) = spec.max_range {
            if eye.distance(&feature.position) > range {
                continue;
            }
        }
        let occluded = env
            .walls
            .iter()
            .enumerate()
            .any(|(i, w)| i != feature.wall && blocks(eye, feature.position, w));
        if occluded {
            continue;
        }
        let mut jitter = |d: &Option<Normal<f64>>| d.as_ref().map_or(0.0, |d| d.sample(&mut rng));
        let dx = jitter(&planar);
        let dy = jitter(&planar);
        let dz = jitter(&vertical);
        out.cloud.points.push(Point3::new(
            feature.position.u + dx,
            feature.position.v + dy,
            agent.position.z + dz,
        ));
        out.spurious.push(false);
        if spec.outlier_rate > 0.0 && rng.random_bool(spec.outlier_rate) {
            let offset = uniform_in_ball(&mut rng, spec.outlier_radius);
            out.cloud.points.push(agent.position + offset);
            out.spurious.push(true);
        }
    }
    out
}

/// Cloud with synthetic closure points appended after `original` points.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCloud {
    pub cloud: PointCloud3,
    pub original: usize,
}

impl MaskedCloud {
    pub fn closure_count(&self) -> usize {
        self.cloud.len() - self.original
    }

    pub fn is_closure(&self, index: usize) -> bool {
        index >= self.original
    }
}

/// Close off visited sectors: for each sector disk not containing the agent,
/// place points on its near boundary every quarter degree of the cone it
/// subtends, so those directions read as covered.
pub fn mask_visited(cloud: &PointCloud3, agent: &AgentState) -> MaskedCloud {
    let mut points = cloud.points.clone();
    let plane = &agent.plane;
    let eye = plane.project(&agent.position);
    for sector in &agent.visited_sectors {
        let center = plane.project(&sector.center);
        let rho = sector.radius;
        let offset = center - eye;
        let dist = offset.norm();
        if dist <= rho || rho <= 0.0 {
            continue;
        }
        let heading = offset.v.atan2(offset.u);
        let half = (rho / dist).asin();
        let step = CLOSURE_STEP_DEG.to_radians();
        let steps = (2.0 * half / step).floor() as usize;
        for i in 0..=steps {
            let phi = -half + i as f64 * step;
            let along = dist * phi.cos();
            let across = (rho * rho - (dist * phi.sin()).powi(2)).max(0.0).sqrt();
            let q = eye + Point2::from_polar(along - across, heading + phi);
            points.push(plane.lift(&q));
        }
    }
    MaskedCloud {
        cloud: PointCloud3::new(points),
        original: cloud.len(),
    }
}

/// Per-point role in an iteration's processed cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Inlier,
    Outlier,
    Closure,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::Inlier => "inlier",
            Tag::Outlier => "outlier",
            Tag::Closure => "closure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    ExitReached,
    NoExit,
    NoFeatures,
    Cap,
    PlanningFailure,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::ExitReached => "exit-reached",
            TerminationReason::NoExit => "no-exit",
            TerminationReason::NoFeatures => "no-features",
            TerminationReason::Cap => "cap",
            TerminationReason::PlanningFailure => "planning-failure",
        }
    }
}

/// Only the covered bins are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularRecord {
    pub r: f64,
    pub covered: Vec<CoveredInterval>,
    pub gap: GapSegment,
}

/// One completed loop iteration. 2D quantities are in the plane frame of
/// `plane`; `world_path` is the refined path in world `xy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub pose: Point3,
    pub plane: [f64; 9],
    pub raw_cloud: Vec<Point3>,
    pub spurious: Vec<bool>,
    /// Tags for `raw_cloud` followed by the closure points.
    pub tags: Vec<Tag>,
    pub closure_points: Vec<Point3>,
    pub angular: AngularRecord,
    pub exit: ExitPoint,
    pub obstacles: ObstacleSet,
    pub raw_path: Path,
    pub refined_path: Path,
    pub world_path: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub iterations: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub final_position: Point3,
}

/// Parameters of the closed loop on top of the environment spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreParams {
    pub outliers: OutlierParams,
    pub exit: ExitParams,
    pub obstacles: ObstacleParams,
    /// `seed` is offset by the iteration number for each plan.
    pub planner: PlannerParams,
    pub max_iterations: usize,
    /// Visited sector radius as a multiple of the iteration's range `r`.
    pub sector_radius_factor: f64,
}

impl Default for ExploreParams {
    fn default() -> Self {
        Self {
            outliers: OutlierParams::calibrated(),
            exit: ExitParams::default(),
            obstacles: ObstacleParams {
                margin: 0.15,
                ..Default::default()
            },
            planner: PlannerParams::default(),
            max_iterations: 10,
            sector_radius_factor: 0.5,
        }
    }
}

impl ExploreParams {
    pub fn validate(&self) -> Result<()> {
        self.outliers.validate()?;
        self.obstacles.validate()?;
        self.planner.validate()?;
        if !(self.sector_radius_factor >= 0.0 && self.sector_radius_factor.is_finite()) {
            return Err(Error::InvalidConfig("sector_radius_factor must be >= 0".into()));
        }
        Ok(())
    }
}

/// Run observe, clean, mask, exit, obstacles, plan and move until the agent
/// leaves the environment, no exit remains, planning fails or the cap hits.
pub fn run_exploration(env: &Environment, spec: &EnvironmentSpec, params: &ExploreParams) -> Result<EpisodeLog> {
    spec.validate()?;
    params.validate()?;
    let mut agent = AgentState::new(spec.start_position())?;
    let mut iterations = Vec::new();
    let mut termination = TerminationReason::Cap;

    for iteration in 0..params.max_iterations {
        agent.plane = flight_plane(agent.position)?;
        let obs = observe_tagged(env, &agent, spec, iteration as u64);
        if obs.cloud.is_empty() {
            termination = TerminationReason::NoFeatures;
            break;
        }
        let cleaned = remove_outliers(&obs.cloud, &params.outliers)?;
        let inlier_cloud = obs.cloud.subset(cleaned.inliers.iter().copied());
        let masked = mask_visited(&inlier_cloud, &agent);

        let analysis = match analyze_exit(&masked.cloud, &agent.position, &agent.plane, &params.exit) {
            Ok(a) => a,
            Err(Error::NoGap) => {
                info!("iteration {iteration}: every direction covered");
                termination = TerminationReason::NoExit;
                break;
            }
            Err(Error::EmptyMap) => {
                termination = TerminationReason::NoFeatures;
                break;
            }
            Err(e) => return Err(e),
        };

        let inliers2d = &analysis.projected[..masked.original];
        let mut obstacles = build_obstacles(inliers2d, &params.obstacles);
        let start2d = analysis.agent2d;
        let before = obstacles.len();
        obstacles.retain(|poly| !poly.contains(&start2d, 0.0));
        if obstacles.len() < before {
            debug!("iteration {iteration}: dropped {} obstacles covering the agent", before - obstacles.len());
        }

        let planner = PlannerParams {
            seed: params.planner.seed.wrapping_add(iteration as u64),
            ..params.planner
        };
        let raw_path = match rrt_plan(start2d, analysis.exit.point2, &obstacles, &planner) {
            Ok(p) => p,
            Err(Error::PlanningFailed { iterations: n }) => {
                warn!("iteration {iteration}: planner gave up after {n} iterations");
                termination = TerminationReason::PlanningFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        let refined_path = shortcut_refine(&raw_path, &obstacles);
        let world_path = refined_path
            .waypoints
            .iter()
            .map(|q| {
                let p = agent.plane.lift(q);
                Point2::new(p.x, p.y)
            })
            .collect();

        let mut tags = vec![Tag::Inlier; obs.cloud.len()];
        for &o in &cleaned.outliers {
            tags[o] = Tag::Outlier;
        }
        tags.extend(std::iter::repeat_n(Tag::Closure, masked.closure_count()));

        let destination = agent
            .plane
            .lift(&refined_path.end().expect("planner paths are non-empty"));
        info!(
            "iteration {iteration}: {} points, {} outliers, exit angle {:.2} deg, path length {:.3}",
            obs.cloud.len(),
            cleaned.outliers.len(),
            analysis.exit.angle.to_degrees(),
            refined_path.length
        );
        iterations.push(IterationRecord {
            iteration,
            pose: agent.position,
            plane: agent.plane.to_array(),
            raw_cloud: obs.cloud.points.clone(),
            spurious: obs.spurious,
            tags,
            closure_points: masked.cloud.points[masked.original..].to_vec(),
            angular: AngularRecord {
                r: analysis.map.r,
                covered: analysis.map.covered.clone(),
                gap: analysis.gap,
            },
            exit: analysis.exit,
            obstacles,
            raw_path,
            refined_path,
            world_path,
        });

        agent.visited_sectors.push(VisitedSector {
            center: agent.position,
            radius: params.sector_radius_factor * analysis.map.r,
        });
        agent.position = destination;
        if env.is_outside(&agent.xy()) {
            termination = TerminationReason::ExitReached;
            break;
        }
    }

    Ok(EpisodeLog {
        iterations,
        termination,
        final_position: agent.position,
    })
}

/// The fixed two-room layout: rooms side by side, an interior doorway and
/// an exterior doorway on the far wall of the second room.
pub fn two_room_spec(seed: u64) -> EnvironmentSpec {
    EnvironmentSpec {
        format_version: FORMAT_VERSION,
        rooms: vec![
            Room { min: [0.0, 0.0], max: [8.0, 8.0] },
            Room { min: [8.0, 0.0], max: [16.0, 8.0] },
        ],
        doorways: vec![
            Doorway { wall: 1, offset: 3.0, width: 2.0 },
            Doorway { wall: 5, offset: 2.5, width: 3.0 },
        ],
        feature_density: 30.0,
        outlier_rate: 0.02,
        outlier_radius: 30.0,
        sensor_noise: 0.01,
        height_jitter: 0.02,
        flight_height: 1.0,
        max_range: Some(9.0),
        start: [4.0, 4.0],
        seed,
    }
}

/// Dense cluster in the unit ball plus far points at radius 10 to 15.
/// Returns the cloud and the ground-truth outlier flags.
pub fn planted_outlier_cloud(seed: u64, inliers: usize, outliers: usize) -> (PointCloud3, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(inliers + outliers);
    for _ in 0..inliers {
        points.push(uniform_in_ball(&mut rng, 1.0));
    }
    for _ in 0..outliers {
        let dir = loop {
            let p = uniform_in_ball(&mut rng, 1.0);
            if p.norm() > 1e-6 {
                break p * (1.0 / p.norm());
            }
        };
        points.push(dir * rng.random_range(10.0..=15.0));
    }
    let mut truth = vec![false; inliers];
    truth.extend(std::iter::repeat_n(true, outliers));
    (PointCloud3::new(points), truth)
}

/// Points on a circle of `radius` around the origin in the `z = 0` plane,
/// `per_degree` per degree over `[0, span_deg)`.
pub fn ring_cloud(span_deg: f64, per_degree: usize, radius: f64) -> PointCloud3 {
    let count = (span_deg * per_degree as f64).round() as usize;
    let points = (0..count)
        .map(|i| {
            let a = (i as f64 + 0.5) / per_degree as f64 * PI / 180.0;
            Point3::new(radius * a.cos(), radius * a.sin(), 0.0)
        })
        .collect();
    PointCloud3::new(points)
}
