//! Exit detection on a plane projection of the map.
//!
//! Points are binned into 360 one-degree sectors around the agent. A sector
//! holding more than one point counts as covered; the exit direction is the
//! midpoint of the longest run of uncovered sectors, and the exit point sits
//! at the mean projected range `r` along that direction.

use std::f64::consts::{PI, TAU};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{relative_angle, wrap_angle, AffinePlane, Point2, Point3, PointCloud3};

pub const BIN_COUNT: usize = 360;
pub const BIN_WIDTH: f64 = PI / 180.0;

/// Which norm feeds the exit range `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// `‖p‖`, measured from the plane origin.
    #[default]
    PlaneOrigin,
    /// `‖p − x′‖`, measured from the agent.
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitParams {
    /// Merge gaps across the 0/2π seam.
    pub circular_gap: bool,
    pub range_mode: RangeMode,
}

impl Default for ExitParams {
    fn default() -> Self {
        Self {
            circular_gap: true,
            range_mode: RangeMode::PlaneOrigin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularBin {
    pub index: usize,
    pub members: Vec<Point2>,
}

impl AngularBin {
    /// Half-open `[start, end)` in radians.
    pub fn interval(&self) -> (f64, f64) {
        bin_interval(self.index)
    }
}

pub fn bin_interval(index: usize) -> (f64, f64) {
    (index as f64 * BIN_WIDTH, (index + 1) as f64 * BIN_WIDTH)
}

/// Bin holding `angle ∈ [0, 2π)`, consistent with [`bin_interval`].
pub fn bin_index(angle: f64) -> usize {
    let mut i = ((angle / BIN_WIDTH).floor() as isize).clamp(0, BIN_COUNT as isize - 1) as usize;
    // floor of the quotient can land one off near an edge
    while i > 0 && angle < bin_interval(i).0 {
        i -= 1;
    }
    while i + 1 < BIN_COUNT && angle >= bin_interval(i).1 {
        i += 1;
    }
    i
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    pub bins: Vec<AngularBin>,
    /// Mean `‖p‖` over the binned points.
    pub r: f64,
    /// Mean `‖p − x′‖` over the binned points.
    pub r_agent: f64,
    /// Points dropped because they coincide with the agent.
    pub skipped: usize,
}

/// Split projected points into 360 angular bins around `x2d`.
pub fn bin_points(m2d: &[Point2], x2d: Point2) -> Result<Binning> {
    let mut bins: Vec<AngularBin> = (0..BIN_COUNT)
        .map(|index| AngularBin {
            index,
            members: Vec::new(),
        })
        .collect();
    let mut skipped = 0;
    let mut norm_sum = 0.0;
    let mut range_sum = 0.0;
    for p in m2d {
        let Ok(angle) = relative_angle(&x2d, p) else {
            skipped += 1;
            continue;
        };
        bins[bin_index(angle)].members.push(*p);
        norm_sum += p.norm();
        range_sum += p.distance(&x2d);
    }
    if skipped > 0 {
        warn!("skipped {skipped} point(s) coinciding with the agent");
    }
    let assigned = m2d.len() - skipped;
    if assigned == 0 {
        return Err(Error::EmptyMap);
    }
    Ok(Binning {
        bins,
        r: norm_sum / assigned as f64,
        r_agent: range_sum / assigned as f64,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveredInterval {
    pub bin: usize,
    pub start: f64,
    pub end: f64,
    /// Mean distance from the agent of the bin's points.
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMap {
    pub covered: Vec<CoveredInterval>,
    pub r: f64,
}

impl AngularMap {
    pub fn coverage_mask(&self) -> [bool; BIN_COUNT] {
        let mut mask = [false; BIN_COUNT];
        for c in &self.covered {
            mask[c.bin] = true;
        }
        mask
    }

    pub fn is_covered(&self, bin: usize) -> bool {
        self.covered.iter().any(|c| c.bin == bin)
    }
}

/// Keep the bins with more than one member, each with its mean range.
pub fn build_angular_map(bins: &[AngularBin], x2d: Point2, r: f64) -> AngularMap {
    let covered = bins
        .iter()
        .filter(|b| b.members.len() > 1)
        .map(|b| {
            let (start, end) = b.interval();
            let total: f64 = b.members.iter().map(|p| p.distance(&x2d)).sum();
            CoveredInterval {
                bin: b.index,
                start,
                end,
                d_hat: total / b.members.len() as f64,
            }
        })
        .collect();
    AngularMap { covered, r }
}

/// A maximal run of uncovered bins. `end` is below `start` when the run
/// wraps through 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSegment {
    pub start: f64,
    pub end: f64,
    pub length: f64,
    pub midpoint: f64,
    pub first_bin: usize,
    pub bin_count: usize,
}

impl GapSegment {
    fn from_run(first_bin: usize, bin_count: usize) -> Self {
        let start = first_bin as f64 * BIN_WIDTH;
        let length = bin_count as f64 * BIN_WIDTH;
        let end = if bin_count == BIN_COUNT {
            TAU
        } else {
            wrap_angle(start + length)
        };
        Self {
            start,
            end,
            length,
            midpoint: wrap_angle(start + 0.5 * length),
            first_bin,
            bin_count,
        }
    }

    /// Whether `angle` lies in the closed arc.
    pub fn contains(&self, angle: f64) -> bool {
        let offset = (angle - self.start).rem_euclid(TAU);
        offset <= self.length + 1e-12 || (TAU - offset) <= 1e-12
    }

    pub fn bins(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bin_count).map(move |k| (self.first_bin + k) % BIN_COUNT)
    }
}

/// Longest run of uncovered bins, ties to the smallest start angle.
pub fn largest_gap(map: &AngularMap, circular: bool) -> Result<GapSegment> {
    let mask = map.coverage_mask();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < BIN_COUNT {
        if mask[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < BIN_COUNT && !mask[i] {
            i += 1;
        }
        runs.push((start, i - start));
    }
    if runs.is_empty() {
        return Err(Error::NoGap);
    }
    if circular && runs.len() > 1 {
        let (first_start, first_len) = runs[0];
        let (last_start, last_len) = runs[runs.len() - 1];
        if first_start == 0 && last_start + last_len == BIN_COUNT {
            runs.remove(0);
            let last = runs.len() - 1;
            runs[last] = (last_start, last_len + first_len);
        }
    }
    let (first_bin, bin_count) = runs
        .iter()
        .copied()
        .fold(None::<(usize, usize)>, |best, run| match best {
            Some(b) if b.1 > run.1 || (b.1 == run.1 && b.0 <= run.0) => Some(b),
            _ => Some(run),
        })
        .expect("runs is non-empty");
    Ok(GapSegment::from_run(first_bin, bin_count))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitPoint {
    pub point2: Point2,
    pub point3: Point3,
    pub angle: f64,
    pub range: f64,
}

/// Everything computed on the way to an exit point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitAnalysis {
    pub agent2d: Point2,
    pub projected: Vec<Point2>,
    pub map: AngularMap,
    pub gap: GapSegment,
    pub exit: ExitPoint,
    pub skipped: usize,
}

pub fn analyze_exit(
    m3d: &PointCloud3,
    x3d: &Point3,
    plane: &AffinePlane,
    params: &ExitParams,
) -> Result<ExitAnalysis> {
    let projected = plane.project_all(m3d);
    let agent2d = plane.project(x3d);
    let binning = bin_points(&projected, agent2d)?;
    let r = match params.range_mode {
        RangeMode::PlaneOrigin => binning.r,
        RangeMode::Agent => binning.r_agent,
    };
    let map = build_angular_map(&binning.bins, agent2d, r);
    let gap = largest_gap(&map, params.circular_gap)?;
    let point2 = agent2d + Point2::from_polar(r, gap.midpoint);
    let exit = ExitPoint {
        point2,
        point3: plane.lift(&point2),
        angle: gap.midpoint,
        range: r,
    };
    Ok(ExitAnalysis {
        agent2d,
        projected,
        map,
        gap,
        exit,
        skipped: binning.skipped,
    })
}

/// Exit point for map `m3d` seen from `x3d`, on `plane`.
pub fn find_exit(m3d: &PointCloud3, x3d: &Point3, plane: &AffinePlane, params: &ExitParams) -> Result<ExitPoint> {
    analyze_exit(m3d, x3d, plane, params).map(|a| a.exit)
}
