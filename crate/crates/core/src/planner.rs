//! RRT over convex polygon obstacles and shortcut refinement of its paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::obstacles::{ConvexPolygon, ObstacleSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerParams {
    /// Maximum extension length.
    pub step_size: f64,
    /// Probability of sampling the goal itself.
    pub goal_bias: f64,
    /// Success radius around the goal; `None` means twice the step size.
    #[serde(default)]
    pub goal_tolerance: Option<f64>,
    pub max_iters: usize,
    /// Sampling domain; `None` means the bounding box of obstacles, start
    /// and goal grown by 10%.
    #[serde(default)]
    pub bounds: Option<Rect>,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            step_size: 0.25,
            goal_bias: 0.1,
            goal_tolerance: None,
            max_iters: 10_000,
            bounds: None,
            seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn tolerance(&self) -> f64 {
        self.goal_tolerance.unwrap_or(2.0 * self.step_size)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig("planner.step_size must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidConfig("planner.goal_bias must be in [0, 1]".into()));
        }
        if !(self.tolerance() > 0.0 && self.tolerance().is_finite()) {
            return Err(Error::InvalidConfig("planner.goal_tolerance must be > 0".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("planner.max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point2>,
    pub length: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Point2>) -> Self {
        let length = waypoints.windows(2).map(|w| w[0].distance(&w[1])).sum();
        Self { waypoints, length }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn start(&self) -> Option<Point2> {
        self.waypoints.first().copied()
    }

    pub fn end(&self) -> Option<Point2> {
        self.waypoints.last().copied()
    }

    pub fn is_collision_free(&self, obstacles: &ObstacleSet) -> bool {
        self.edges().all(|(a, b)| !segment_collides(a, b, obstacles))
    }
}

fn project_interval(points: impl Iterator<Item = Point2>, axis: Point2) -> (f64, f64) {
    points.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = p.dot(&axis);
        (lo.min(t), hi.max(t))
    })
}

/// Closed segment against a closed convex polygon (separating axes).
pub fn segment_hits_polygon(a: Point2, b: Point2, poly: &ConvexPolygon) -> bool {
    let seg_box = Rect::new(a, a).including(&b);
    if !seg_box.intersects(&poly.bbox()) {
        return false;
    }
    let seg_dir = b - a;
    let axes = poly
        .edges()
        .map(|(p, q)| (q - p).perp())
        .chain((seg_dir.norm() > 0.0).then(|| seg_dir.perp()));
    for axis in axes {
        let (plo, phi) = project_interval(poly.vertices().iter().copied(), axis);
        let (slo, shi) = project_interval([a, b].into_iter(), axis);
        if shi < plo || phi < slo {
            return false;
        }
    }
    true
}

/// True when `[a, b]` touches any obstacle, endpoints included.
pub fn segment_collides(a: Point2, b: Point2, obstacles: &ObstacleSet) -> bool {
    obstacles.polygons.iter().any(|poly| segment_hits_polygon(a, b, poly))
}

/// Tree grown by the planner; `parents[0]` is `None` for the root.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RrtTree {
    pub nodes: Vec<Point2>,
    pub parents: Vec<Option<usize>>,
}

impl RrtTree {
    fn nearest(&self, q: &Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.distance(q);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    fn path_to(&self, mut node: usize) -> Vec<Point2> {
        let mut out = vec![self.nodes[node]];
        while let Some(p) = self.parents[node] {
            out.push(self.nodes[p]);
            node = p;
        }
        out.reverse();
        out
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (self.nodes[p], self.nodes[i])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub path: Path,
    pub tree: RrtTree,
    pub iterations: usize,
}

pub fn default_bounds(start: Point2, goal: Point2, obstacles: &ObstacleSet, min_pad: f64) -> Rect {
    let mut bounds = Rect::new(start, start).including(&goal);
    if let Some(b) = obstacles.bbox() {
        bounds = bounds.union(&b);
    }
    bounds.inflated(0.1, min_pad)
}

pub fn rrt_plan(start: Point2, goal: Point2, obstacles: &ObstacleSet, params: &PlannerParams) -> Result<Path> {
    rrt_plan_traced(start, goal, obstacles, params).map(|o| o.path)
}

/// Plain RRT from `start`; succeeds once a node lands within the goal
/// tolerance.
pub fn rrt_plan_traced(
    start: Point2,
    goal: Point2,
    obstacles: &ObstacleSet,
    params: &PlannerParams,
) -> Result<PlanOutcome> {
    params.validate()?;
    let mut tree = RrtTree {
        nodes: vec![start],
        parents: vec![None],
    };
    if start.distance(&goal) < 1e-12 {
        return Ok(PlanOutcome {
            path: Path::new(vec![start]),
            tree,
            iterations: 0,
        });
    }
    if segment_collides(start, start, obstacles) {
        return Err(Error::Degenerate("planner start lies inside an obstacle".into()));
    }
    let bounds = params
        .bounds
        .unwrap_or_else(|| default_bounds(start, goal, obstacles, params.step_size));
    let tolerance = params.tolerance();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    for iteration in 1..=params.max_iters {
        let sample = if rng.random::<f64>() < params.goal_bias {
            goal
        } else {
            Point2::new(
                rng.random_range(bounds.min.u..=bounds.max.u),
                rng.random_range(bounds.min.v..=bounds.max.v),
            )
        };
        let near = tree.nearest(&sample);
        let from = tree.nodes[near];
        let gap = from.distance(&sample);
        if gap < 1e-12 {
            continue;
        }
        let to = if gap <= params.step_size {
            sample
        } else {
            from + (sample - from) * (params.step_size / gap)
        };
        if segment_collides(from, to, obstacles) {
            continue;
        }
        tree.nodes.push(to);
        tree.parents.push(Some(near));
        if to.distance(&goal) <= tolerance {
            let path = Path::new(tree.path_to(tree.nodes.len() - 1));
            return Ok(PlanOutcome {
                path,
                tree,
                iterations: iteration,
            });
        }
    }
    Err(Error::PlanningFailed {
        iterations: params.max_iters,
    })
}

/// Replace sub-paths by single collision-free edges, farthest shortcut
/// first from each kept waypoint, until nothing changes.
pub fn shortcut_refine(path: &Path, obstacles: &ObstacleSet) -> Path {
    let mut current = path.waypoints.clone();
    loop {
        let n = current.len();
        if n <= 2 {
            break;
        }
        let mut refined = vec![current[0]];
        let mut i = 0;
        while i < n - 1 {
            let mut j = n - 1;
            while j > i + 1 && segment_collides(current[i], current[j], obstacles) {
                j -= 1;
            }
            refined.push(current[j]);
            i = j;
        }
        let unchanged = refined.len() == n;
        current = refined;
        if unchanged {
            break;
        }
    }
    Path::new(current)
}
