//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::exit::{analyze_exit, RangeMode};
use crate::geometry::{AffinePlane, Point2, Point3, PointCloud3};
use crate::io::{
    format_cloud, format_episode, format_obstacles, format_path, parse_episode, parse_path, parse_point3,
    read_cloud, read_plane, read_text, write_text, CloudFile, EpisodeFile, ObstacleFile,
};
use crate::obstacles::build_obstacles;
use crate::outliers::remove_outliers;
use crate::planner::{rrt_plan, shortcut_refine, PlannerParams};
use crate::render::{render_svg, Scene};
use crate::sim::{generate_env, observe_tagged, run_exploration, AgentState, EnvironmentSpec, Tag};

#[derive(Debug, Parser)]
#[command(name = "sparse-explore", version, about = "Exit finding and planning on sparse feature maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an environment from a spec and write its first observation.
    Gen(GenArgs),
    /// Tag the outliers of a cloud file.
    Clean(CleanArgs),
    /// Find the exit point of a cloud seen from a pose.
    Exit(ExitArgs),
    /// Synthesize obstacles and plan a refined path to the exit (or a goal).
    Plan(PlanArgs),
    /// Run a closed-loop exploration episode in a simulated environment.
    Explore(ExploreArgs),
    /// Render an SVG from an episode log or a cloud file.
    Render(RenderArgs),
}

#[derive(Debug, Args, Default)]
struct Overrides {
    /// Pipeline configuration (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Rescale clouds to unit median pairwise distance before scoring.
    #[arg(long)]
    normalize: Option<bool>,
    /// Number of K-means clusters.
    #[arg(long)]
    clusters: Option<usize>,
    /// Outward hull margin.
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    goal_bias: Option<f64>,
    #[arg(long)]
    goal_tolerance: Option<f64>,
    /// RRT iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Exploration iteration cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Search for the largest gap without wrapping across 0°.
    #[arg(long)]
    linear_gap: bool,
    /// Measure the exit range from the agent instead of the plane origin.
    #[arg(long)]
    agent_range: bool,
}

impl Overrides {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.lambda {
            c.outliers.lambda = v;
        }
        if let Some(v) = self.k {
            c.outliers.k = v;
        }
        if let Some(v) = self.beta {
            c.outliers.beta = v;
        }
        if let Some(v) = self.normalize {
            c.outliers.score.normalize = v;
        }
        if let Some(v) = self.clusters {
            c.obstacles.clusters = v;
        }
        if let Some(v) = self.margin {
            c.obstacles.margin = v;
        }
        if let Some(v) = self.step {
            c.planner.step_size = v;
        }
        if let Some(v) = self.goal_bias {
            c.planner.goal_bias = v;
        }
        if let Some(v) = self.goal_tolerance {
            c.planner.goal_tolerance = Some(v);
        }
        if let Some(v) = self.max_iters {
            c.planner.max_iters = v;
        }
        if let Some(v) = self.max_iterations {
            c.exploration.max_iterations = v;
        }
        if self.linear_gap {
            c.exit.circular_gap = false;
        }
        if self.agent_range {
            c.exit.range_mode = RangeMode::Agent;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct PlaneArgs {
    /// Plane file: two basis columns then the offset (9 reals).
    #[arg(long, conflicts_with = "tri")]
    plane: Option<PathBuf>,
    /// Plane through three points, each "x,y,z".
    #[arg(long, num_args = 3, value_names = ["P1", "P2", "P3"], allow_hyphen_values = true)]
    tri: Option<Vec<String>>,
    /// Agent position "x,y,z".
    #[arg(long, allow_hyphen_values = true)]
    pose: String,
}

impl PlaneArgs {
    fn resolve(&self) -> Result<(AffinePlane, Point3)> {
        let pose = parse_point3(&self.pose)?;
        let plane = match (&self.plane, &self.tri) {
            (Some(path), _) => read_plane(path)?,
            (None, Some(tri)) => {
                let p: Vec<Point3> = tri.iter().map(|t| parse_point3(t)).collect::<Result<_>>()?;
                AffinePlane::from_three_points(p[0], p[1], p[2])?
            }
            (None, None) => return Err(Error::InvalidConfig("one of --plane or --tri is required".into())),
        };
        Ok((plane, pose))
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Environment JSON (walls and features).
    #[arg(long)]
    out: PathBuf,
    /// Cloud observed from the start pose.
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CleanArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tagged cloud output.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct ExitArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    plane: PlaneArgs,
    /// Angular map render.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    plane: PlaneArgs,
    /// Goal "u,v" in plane coordinates; defaults to the exit point.
    #[arg(long, allow_hyphen_values = true)]
    goal: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    raw_path: Option<PathBuf>,
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    obstacles: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    /// Environment spec; defaults to the config's `sim_spec`.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Sets both the environment sensor seed and the planner seed.
    #[arg(long)]
    seed: u64,
    /// Episode log (line-delimited JSON).
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long, conflicts_with = "cloud", required_unless_present = "cloud")]
    episode: Option<PathBuf>,
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Plane and pose for a cloud render; without them the xy projection is
    /// drawn.
    #[arg(long, requires = "pose")]
    plane: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pose: Option<String>,
    #[arg(long)]
    obstacles: Option<PathBuf>,
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Run with `args` (program name first); returns the exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return status;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Clean(a) => clean(a, out),
        Command::Exit(a) => exit(a, out),
        Command::Plan(a) => plan(a, out),
        Command::Explore(a) => explore(a, out),
        Command::Render(a) => render(a, out),
    }
}

fn say(out: &mut dyn Write, text: String) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn load_spec(path: &FsPath) -> Result<EnvironmentSpec> {
    let spec: EnvironmentSpec = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = load_spec(&a.spec)?;
    spec.seed = a.seed;
    let env = generate_env(&spec)?;
    let mut json = serde_json::to_string_pretty(&serde_json::json!({
        "format_version": crate::io::FORMAT_VERSION,
        "spec": spec,
        "environment": env,
    }))?;
    json.push('\n');
    write_text(&a.out, &json)?;
    let agent = AgentState::new(spec.start_position())?;
    let obs = observe_tagged(&env, &agent, &spec, 0);
    if let Some(path) = &a.cloud {
        write_text(path, &format_cloud(&obs.cloud, None))?;
    }
    if let Some(path) = &a.svg {
        let scene = Scene {
            title: format!("environment, seed {}", spec.seed),
            walls: env.walls.iter().map(|w| (w.a, w.b)).collect(),
            points: obs.cloud.iter().map(|p| (Point2::new(p.x, p.y), Tag::Inlier)).collect(),
            agents: vec![agent.xy()],
            ..Default::default()
        };
        write_text(path, &render_svg(&scene))?;
    }
    say(
        out,
        format!(
            "walls={} features={} observed={}",
            env.walls.len(),
            env.features.len(),
            obs.cloud.len()
        ),
    )
}

fn clean(a: CleanArgs, out: &mut dyn Write) -> Result<()> {
    let config = a.overrides.resolve()?;
    let file = read_cloud(&a.input)?;
    let result = remove_outliers(&file.cloud, &config.outliers)?;
    let mut tags = vec![Tag::Inlier; file.cloud.len()];
    for &o in &result.outliers {
        tags[o] = Tag::Outlier;
    }
    write_text(&a.output, &format_cloud(&file.cloud, Some(&tags)))?;
    say(
        out,
        format!(
            "points={} outliers={} rounds={}",
            file.cloud.len(),
            result.outliers.len(),
            result.states.len()
        ),
    )
}

/// Points that count as map features: everything in an untagged file,
/// inliers and closure points in a tagged one.
fn usable_points(file: &CloudFile) -> PointCloud3 {
    match &file.tags {
        None => file.cloud.clone(),
        Some(tags) => file
            .cloud
            .subset((0..file.cloud.len()).filter(|&i| tags[i] != Tag::Outlier)),
    }
}

fn exit(a: ExitArgs, out: &mut dyn Write) -> Result<()> {
    let config = a.overrides.resolve()?;
    let (plane, pose) = a.plane.resolve()?;
    let file = read_cloud(&a.input)?;
    let cloud = usable_points(&file);
    let analysis = analyze_exit(&cloud, &pose, &plane, &config.exit)?;
    if let Some(path) = &a.svg {
        let scene = Scene {
            title: format!("exit at {:.4} deg", analysis.exit.angle.to_degrees()),
            points: analysis.projected.iter().map(|p| (*p, Tag::Inlier)).collect(),
            agents: vec![analysis.agent2d],
            angular: Some((analysis.agent2d, analysis.map.covered.clone())),
            exits: vec![analysis.exit.point2],
            ..Default::default()
        };
        write_text(path, &render_svg(&scene))?;
    }
    let e = &analysis.exit;
    say(
        out,
        format!(
            "angle_deg={}\nrange={}\nexit2d={},{}\nexit3d={},{},{}\ngap_deg={},{}",
            e.angle.to_degrees(),
            e.range,
            e.point2.u,
            e.point2.v,
            e.point3.x,
            e.point3.y,
            e.point3.z,
            analysis.gap.start.to_degrees(),
            analysis.gap.end.to_degrees()
        ),
    )
}

fn parse_point2(text: &str) -> Result<Point2> {
    let p = parse_point3(&format!("{text},0"))?;
    Ok(Point2::new(p.x, p.y))
}

fn plan(a: PlanArgs, out: &mut dyn Write) -> Result<()> {
    let config = a.overrides.resolve()?;
    let (plane, pose) = a.plane.resolve()?;
    let file = read_cloud(&a.input)?;
    let features = match &file.tags {
        None => file.cloud.clone(),
        Some(tags) => file
            .cloud
            .subset((0..file.cloud.len()).filter(|&i| tags[i] == Tag::Inlier)),
    };
    let start = plane.project(&pose);
    let goal = match &a.goal {
        Some(g) => parse_point2(g)?,
        None => analyze_exit(&usable_points(&file), &pose, &plane, &config.exit)?.exit.point2,
    };
    let projected = plane.project_all(&features);
    let mut obstacles = build_obstacles(&projected, &config.obstacles);
    obstacles.retain(|poly| !poly.contains(&start, 0.0));
    let params = PlannerParams {
        seed: a.seed,
        ..config.planner
    };
    let raw = rrt_plan(start, goal, &obstacles, &params)?;
    let refined = shortcut_refine(&raw, &obstacles);
    write_text(&a.path, &format_path(&refined))?;
    if let Some(path) = &a.raw_path {
        write_text(path, &format_path(&raw))?;
    }
    if let Some(path) = &a.obstacles {
        write_text(path, &format_obstacles(&ObstacleFile::new(Some(plane), obstacles.clone())))?;
    }
    if let Some(path) = &a.svg {
        let scene = Scene {
            title: format!("plan: raw {:.4}, refined {:.4}", raw.length, refined.length),
            points: projected.iter().map(|p| (*p, Tag::Inlier)).collect(),
            agents: vec![start],
            exits: vec![goal],
            obstacles: obstacles.polygons.clone(),
            paths: vec![raw.waypoints.clone(), refined.waypoints.clone()],
            ..Default::default()
        };
        write_text(path, &render_svg(&scene))?;
    }
    say(
        out,
        format!(
            "obstacles={} raw_waypoints={} raw_length={} refined_waypoints={} refined_length={}",
            obstacles.len(),
            raw.waypoints.len(),
            raw.length,
            refined.waypoints.len(),
            refined.length
        ),
    )
}

fn explore(a: ExploreArgs, out: &mut dyn Write) -> Result<()> {
    let config = a.overrides.resolve()?;
    let spec_path = a
        .spec
        .clone()
        .or_else(|| config.sim_spec.clone())
        .ok_or_else(|| Error::InvalidConfig("--spec or config sim_spec is required".into()))?;
    let mut spec = load_spec(&spec_path)?;
    spec.seed = a.seed;
    let mut params = config.explore_params();
    params.planner.seed = a.seed;
    let env = generate_env(&spec)?;
    let log = run_exploration(&env, &spec, &params)?;
    let file = EpisodeFile {
        spec,
        walls: env.walls.clone(),
        log,
    };
    let log_path = match &config.output_dir {
        Some(dir) if a.log.is_relative() => dir.join(&a.log),
        _ => a.log.clone(),
    };
    write_text(&log_path, &format_episode(&file))?;
    if let Some(path) = &a.svg {
        write_text(path, &render_svg(&Scene::episode(&file)))?;
    }
    let p = file.log.final_position;
    say(
        out,
        format!(
            "termination={} iterations={} final={},{},{}",
            file.log.termination.as_str(),
            file.log.iterations.len(),
            p.x,
            p.y,
            p.z
        ),
    )
}

fn render(a: RenderArgs, out: &mut dyn Write) -> Result<()> {
    let scene = if let Some(path) = &a.episode {
        let file = parse_episode(&read_text(path)?, &path.display().to_string())?;
        Scene::episode(&file)
    } else {
        let path = a.cloud.as_ref().expect("clap enforces episode or cloud");
        let file = read_cloud(path)?;
        let tags = file.tags.clone().unwrap_or_else(|| vec![Tag::Inlier; file.cloud.len()]);
        let (points, agents) = match (&a.plane, &a.pose) {
            (Some(plane_path), Some(pose)) => {
                let plane = read_plane(plane_path)?;
                let pose = parse_point3(pose)?;
                (plane.project_all(&file.cloud), vec![plane.project(&pose)])
            }
            (None, Some(pose)) => {
                let pose = parse_point3(pose)?;
                (
                    file.cloud.iter().map(|p| Point2::new(p.x, p.y)).collect(),
                    vec![Point2::new(pose.x, pose.y)],
                )
            }
            _ => (file.cloud.iter().map(|p| Point2::new(p.x, p.y)).collect(), vec![]),
        };
        let mut scene = Scene {
            title: path.display().to_string(),
            points: points.into_iter().zip(tags).collect(),
            agents,
            ..Default::default()
        };
        if let Some(obs) = &a.obstacles {
            scene.obstacles = crate::io::parse_obstacles(&read_text(obs)?)?.obstacles.polygons;
        }
        if let Some(p) = &a.path {
            scene.paths.push(parse_path(&read_text(p)?, &p.display().to_string())?.waypoints);
        }
        scene
    };
    if scene.is_empty() {
        return Err(Error::Degenerate("nothing to render".into()));
    }
    write_text(&a.out, &render_svg(&scene))?;
    say(out, format!("wrote {}", a.out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let status = run_cli(std::iter::once("sparse-explore").chain(args.iter().copied()), &mut out, &mut err);
        (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_subcommand_is_usage_error() {
        let (status, _, err) = run(&[]);
        assert_eq!(status, 2);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn seed_is_mandatory() {
        let (status, _, _) = run(&["explore", "--spec", "x.json", "--log", "l.jsonl"]);
        assert_eq!(status, 2);
        let (status, _, _) = run(&["gen", "--spec", "x.json", "--out", "e.json"]);
        assert_eq!(status, 2);
    }

    #[test]
    fn help_is_success() {
        let (status, out, _) = run(&["--help"]);
        assert_eq!(status, 0);
        assert!(out.contains("explore"));
    }

    #[test]
    fn pipeline_error_is_status_one() {
        let (status, _, err) = run(&["clean", "--input", "/nonexistent/cloud.csv", "--output", "/tmp/x.csv"]);
        assert_eq!(status, 1);
        assert!(err.starts_with("error:"));
    }
}
