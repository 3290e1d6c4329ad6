//! Text file formats: point clouds, planes, paths, obstacle maps and
//! episode logs.
//!
//! Reals are written with Rust's shortest round-trip formatting, so reading
//! a written file gives back the same bits.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffinePlane, Point2, Point3, PointCloud3};
use crate::obstacles::ObstacleSet;
use crate::planner::Path;
use crate::sim::{EnvironmentSpec, EpisodeLog, IterationRecord, Tag, TerminationReason, WallSegment};

pub const FORMAT_VERSION: u32 = 1;
const VERSION_LINE: &str = "# format_version=1";

pub fn read_text(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &FsPath, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Version comment handling shared by the line formats: `#` lines are
/// comments, and a `format_version` comment must name a supported version.
fn check_comment(source: &str, line_no: usize, line: &str) -> Result<()> {
    if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("format_version=") {
        if v.trim() != FORMAT_VERSION.to_string() {
            return Err(parse_error(source, line_no, format!("unsupported format_version {}", v.trim())));
        }
    }
    Ok(())
}

fn parse_real(source: &str, line_no: usize, field: &str) -> Result<f64> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(source, line_no, format!("'{}' is not a number", field.trim())))?;
    if !value.is_finite() {
        return Err(parse_error(source, line_no, format!("'{}' is not finite", field.trim())));
    }
    Ok(value)
}

/// Cloud read from a CSV file; `tags` is present when the file has a tag
/// column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloudFile {
    pub cloud: PointCloud3,
    pub tags: Option<Vec<Tag>>,
}

fn parse_tag(source: &str, line_no: usize, field: &str) -> Result<Tag> {
    match field.trim() {
        "inlier" => Ok(Tag::Inlier),
        "outlier" => Ok(Tag::Outlier),
        "closure" => Ok(Tag::Closure),
        other => Err(parse_error(source, line_no, format!("unknown tag '{other}'"))),
    }
}

/// Parse `x,y,z[,tag]` CSV. `source` names the input in error messages.
pub fn parse_cloud(text: &str, source: &str) -> Result<CloudFile> {
    let mut tagged: Option<bool> = None;
    let mut out = CloudFile::default();
    let mut tags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            check_comment(source, line_no, line)?;
            continue;
        }
        let with_tag = match tagged {
            None => {
                let header: Vec<&str> = line.split(',').map(str::trim).collect();
                tagged = Some(match header.as_slice() {
                    ["x", "y", "z"] => false,
                    ["x", "y", "z", "tag"] => true,
                    _ => return Err(parse_error(source, line_no, "expected header 'x,y,z' or 'x,y,z,tag'")),
                });
                continue;
            }
            Some(t) => t,
        };
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_tag { 4 } else { 3 };
        if fields.len() != expected {
            return Err(parse_error(
                source,
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let x = parse_real(source, line_no, fields[0])?;
        let y = parse_real(source, line_no, fields[1])?;
        let z = parse_real(source, line_no, fields[2])?;
        out.cloud.points.push(Point3::new(x, y, z));
        if with_tag {
            tags.push(parse_tag(source, line_no, fields[3])?);
        }
    }
    match tagged {
        None => Err(Error::EmptyFile {
            path: source.to_string(),
        }),
        Some(t) => {
            out.tags = t.then_some(tags);
            Ok(out)
        }
    }
}

pub fn read_cloud(path: &FsPath) -> Result<CloudFile> {
    parse_cloud(&read_text(path)?, &path.display().to_string())
}

/// Serialize a cloud, with a tag column when `tags` is given.
pub fn format_cloud(cloud: &PointCloud3, tags: Option<&[Tag]>) -> String {
    let mut s = String::with_capacity(32 * (cloud.len() + 2));
    s.push_str(VERSION_LINE);
    s.push('\n');
    s.push_str(if tags.is_some() { "x,y,z,tag\n" } else { "x,y,z\n" });
    for (i, p) in cloud.iter().enumerate() {
        match tags {
            Some(t) => s.push_str(&format!("{},{},{},{}\n", p.x, p.y, p.z, t[i].as_str())),
            None => s.push_str(&format!("{},{},{}\n", p.x, p.y, p.z)),
        }
    }
    s
}

/// Plane file: whitespace or comma separated reals after optional `#`
/// comments. Nine reals are the two basis columns then `v`; twelve are a
/// 3×3 frame, column-major, whose third column is ignored, then `v`.
pub fn parse_plane(text: &str, source: &str) -> Result<AffinePlane> {
    let mut values = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            check_comment(source, line_no, line)?;
            continue;
        }
        last_line = line_no;
        for field in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()) {
            values.push(parse_real(source, line_no, field)?);
        }
    }
    let array: [f64; 9] = match values.len() {
        0 => {
            return Err(Error::EmptyFile {
                path: source.to_string(),
            })
        }
        9 => values.try_into().expect("length checked"),
        12 => {
            let mut a = [0.0; 9];
            a[..6].copy_from_slice(&values[..6]);
            a[6..].copy_from_slice(&values[9..]);
            a
        }
        n => return Err(parse_error(source, last_line, format!("expected 9 or 12 reals, found {n}"))),
    };
    AffinePlane::from_array(&array).map_err(|e| parse_error(source, last_line, e.to_string()))
}

pub fn read_plane(path: &FsPath) -> Result<AffinePlane> {
    parse_plane(&read_text(path)?, &path.display().to_string())
}

pub fn format_plane(plane: &AffinePlane) -> String {
    let a = plane.to_array();
    format!(
        "{VERSION_LINE}\n# columns of A, then v\n{} {} {}\n{} {} {}\n{} {} {}\n",
        a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]
    )
}

/// Parse `x y z` or `x,y,z` given on the command line.
pub fn parse_point3(text: &str) -> Result<Point3> {
    let fields: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 3 {
        return Err(parse_error("argument", 1, format!("expected 3 coordinates in '{text}'")));
    }
    Ok(Point3::new(
        parse_real("argument", 1, fields[0])?,
        parse_real("argument", 1, fields[1])?,
        parse_real("argument", 1, fields[2])?,
    ))
}

pub fn parse_path(text: &str, source: &str) -> Result<Path> {
    let mut header = false;
    let mut waypoints = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            check_comment(source, line_no, line)?;
            continue;
        }
        if !header {
            if line.replace(' ', "") != "u,v" {
                return Err(parse_error(source, line_no, "expected header 'u,v'"));
            }
            header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_error(source, line_no, format!("expected 2 fields, found {}", fields.len())));
        }
        waypoints.push(Point2::new(
            parse_real(source, line_no, fields[0])?,
            parse_real(source, line_no, fields[1])?,
        ));
    }
    if !header {
        return Err(Error::EmptyFile {
            path: source.to_string(),
        });
    }
    Ok(Path::new(waypoints))
}

pub fn format_path(path: &Path) -> String {
    let mut s = format!("{VERSION_LINE}\nu,v\n");
    for w in &path.waypoints {
        s.push_str(&format!("{},{}\n", w.u, w.v));
    }
    s
}

/// Obstacle map in plane coordinates, with the plane it lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleFile {
    pub format_version: u32,
    pub plane: Option<AffinePlane>,
    pub obstacles: ObstacleSet,
}

impl ObstacleFile {
    pub fn new(plane: Option<AffinePlane>, obstacles: ObstacleSet) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            plane,
            obstacles,
        }
    }
}

pub fn format_obstacles(file: &ObstacleFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("obstacles serialize");
    s.push('\n');
    s
}

pub fn parse_obstacles(text: &str) -> Result<ObstacleFile> {
    let file: ObstacleFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported obstacle format_version {}",
            file.format_version
        )));
    }
    if file.obstacles.provenance.len() != file.obstacles.polygons.len() {
        return Err(Error::InvalidConfig("obstacle provenance length mismatch".into()));
    }
    Ok(file)
}

/// One line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum EpisodeLine {
    Header {
        format_version: u32,
        spec: EnvironmentSpec,
        walls: Vec<WallSegment>,
    },
    Iteration(Box<IterationRecord>),
    Summary {
        termination: TerminationReason,
        iterations: usize,
        final_position: Point3,
    },
}

/// Episode log together with the environment it ran in.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeFile {
    pub spec: EnvironmentSpec,
    pub walls: Vec<WallSegment>,
    pub log: EpisodeLog,
}

/// Header line, one line per iteration, summary line.
pub fn format_episode(file: &EpisodeFile) -> String {
    let mut out = String::new();
    let mut push = |line: &EpisodeLine| {
        out.push_str(&serde_json::to_string(line).expect("episode serializes"));
        out.push('\n');
    };
    push(&EpisodeLine::Header {
        format_version: FORMAT_VERSION,
        spec: file.spec.clone(),
        walls: file.walls.clone(),
    });
    for record in &file.log.iterations {
        push(&EpisodeLine::Iteration(Box::new(record.clone())));
    }
    push(&EpisodeLine::Summary {
        termination: file.log.termination,
        iterations: file.log.iterations.len(),
        final_position: file.log.final_position,
    });
    out
}

pub fn parse_episode(text: &str, source: &str) -> Result<EpisodeFile> {
    let mut header = None;
    let mut iterations = Vec::new();
    let mut summary = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: EpisodeLine =
            serde_json::from_str(raw).map_err(|e| parse_error(source, line_no, e.to_string()))?;
        match line {
            EpisodeLine::Header {
                format_version,
                spec,
                walls,
            } => {
                if format_version != FORMAT_VERSION || header.is_some() {
                    return Err(parse_error(source, line_no, "unexpected or unsupported header"));
                }
                header = Some((spec, walls));
            }
            EpisodeLine::Iteration(record) => {
                if header.is_none() || summary.is_some() {
                    return Err(parse_error(source, line_no, "iteration outside header/summary"));
                }
                iterations.push(*record);
            }
            EpisodeLine::Summary {
                termination,
                iterations: n,
                final_position,
            } => {
                if n != iterations.len() {
                    return Err(parse_error(source, line_no, "summary iteration count mismatch"));
                }
                summary = Some((termination, final_position));
            }
        }
    }
    let (spec, walls) = header.ok_or_else(|| Error::EmptyFile {
        path: source.to_string(),
    })?;
    let (termination, final_position) =
        summary.ok_or_else(|| parse_error(source, text.lines().count(), "missing summary line"))?;
    Ok(EpisodeFile {
        spec,
        walls,
        log: EpisodeLog {
            iterations,
            termination,
            final_position,
        },
    })
}
