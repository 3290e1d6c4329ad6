//! SVG renders of clouds, angular maps, obstacles, paths and episodes.
//!
//! Colors: features blue, outliers grey, closure points purple, agent red
//! disc, per-bin mean distances green radial segments, exit yellow X,
//! obstacles orange polygons, walls black, paths one polyline each.
//! Output depends only on the scene, so identical scenes give identical
//! bytes.

use std::fmt::Write as _;

use crate::exit::CoveredInterval;
use crate::geometry::{AffinePlane, Point2, Rect};
use crate::io::EpisodeFile;
use crate::obstacles::ConvexPolygon;
use crate::sim::Tag;

const WIDTH: f64 = 800.0;
const PAD: f64 = 40.0;
const PATH_COLORS: [&str; 6] = ["#000000", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub title: String,
    pub points: Vec<(Point2, Tag)>,
    pub agents: Vec<Point2>,
    /// Center of the angular map and its covered bins.
    pub angular: Option<(Point2, Vec<CoveredInterval>)>,
    pub exits: Vec<Point2>,
    pub obstacles: Vec<ConvexPolygon>,
    pub walls: Vec<(Point2, Point2)>,
    pub paths: Vec<Vec<Point2>>,
}

impl Scene {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
            && self.agents.is_empty()
            && self.angular.is_none()
            && self.exits.is_empty()
            && self.obstacles.is_empty()
            && self.walls.is_empty()
            && self.paths.is_empty()
    }

    fn extent(&self) -> Rect {
        let mut pts: Vec<Point2> = Vec::new();
        pts.extend(self.points.iter().map(|(p, _)| *p));
        pts.extend(&self.agents);
        pts.extend(&self.exits);
        pts.extend(self.obstacles.iter().flat_map(|o| o.vertices().iter().copied()));
        pts.extend(self.walls.iter().flat_map(|(a, b)| [*a, *b]));
        pts.extend(self.paths.iter().flatten());
        if let Some((c, bins)) = &self.angular {
            pts.push(*c);
            pts.extend(bins.iter().map(|b| *c + Point2::from_polar(b.d_hat, 0.5 * (b.start + b.end))));
        }
        Rect::bounding(&pts).unwrap_or(Rect::new(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)))
    }

    /// World-frame view of a whole episode: walls, every iteration's pose,
    /// inlier features, exit point and refined path.
    pub fn episode(file: &EpisodeFile) -> Scene {
        let mut scene = Scene {
            title: format!(
                "episode: {} iterations, {}",
                file.log.iterations.len(),
                file.log.termination.as_str()
            ),
            walls: file.walls.iter().map(|w| (w.a, w.b)).collect(),
            ..Default::default()
        };
        for it in &file.log.iterations {
            let origin = Point2::new(it.pose.x, it.pose.y);
            scene.agents.push(origin);
            for (p, tag) in it.raw_cloud.iter().zip(&it.tags) {
                scene.points.push((Point2::new(p.x, p.y), *tag));
            }
            let exit = match AffinePlane::from_array(&it.plane) {
                Ok(plane) => {
                    let p = plane.lift(&it.exit.point2);
                    Point2::new(p.x, p.y)
                }
                Err(_) => origin + it.exit.point2,
            };
            scene.exits.push(exit);
            scene.paths.push(it.world_path.clone());
        }
        scene
            .agents
            .push(Point2::new(file.log.final_position.x, file.log.final_position.y));
        scene
    }
}

struct Frame {
    min: Point2,
    max_v: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(extent: Rect) -> Self {
        let span = extent.width().max(extent.height()).max(1e-9);
        let scale = (WIDTH - 2.0 * PAD) / span;
        Self {
            min: extent.min,
            max_v: extent.max.v,
            scale,
            height: extent.height() * scale + 2.0 * PAD,
        }
    }

    fn x(&self, p: &Point2) -> f64 {
        (p.u - self.min.u) * self.scale + PAD
    }

    fn y(&self, p: &Point2) -> f64 {
        (self.max_v - p.v) * self.scale + PAD
    }

    fn xy(&self, p: &Point2) -> String {
        format!("{:.4},{:.4}", self.x(p), self.y(p))
    }
}

fn tag_color(tag: Tag) -> &'static str {
    match tag {
        Tag::Inlier => "#1f77b4",
        Tag::Outlier => "#7f7f7f",
        Tag::Closure => "#9467bd",
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(scene: &Scene) -> String {
    let frame = Frame::new(scene.extent());
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{:.4}" viewBox="0 0 {WIDTH:.0} {:.4}">"#,
        frame.height, frame.height
    );
    let _ = writeln!(w, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    if !scene.title.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{PAD:.0}" y="20" font-family="monospace" font-size="14">{}</text>"#,
            escape(&scene.title)
        );
    }

    let _ = writeln!(w, r##"<g id="obstacles" fill="#ff7f0e" fill-opacity="0.35" stroke="#ff7f0e" stroke-width="0.5">"##);
    for poly in &scene.obstacles {
        let pts: Vec<String> = poly.vertices().iter().map(|p| frame.xy(p)).collect();
        let _ = writeln!(w, r#"<polygon points="{}"/>"#, pts.join(" "));
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r##"<g id="walls" stroke="#000000" stroke-width="2">"##);
    for (a, b) in &scene.walls {
        let _ = writeln!(
            w,
            r#"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
            frame.x(a),
            frame.y(a),
            frame.x(b),
            frame.y(b)
        );
    }
    let _ = writeln!(w, "</g>");

    if let Some((c, bins)) = &scene.angular {
        let _ = writeln!(w, r##"<g id="angular" stroke="#2ca02c" stroke-width="1">"##);
        for bin in bins {
            let end = *c + Point2::from_polar(bin.d_hat, 0.5 * (bin.start + bin.end));
            let _ = writeln!(
                w,
                r#"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
                frame.x(c),
                frame.y(c),
                frame.x(&end),
                frame.y(&end)
            );
        }
        let _ = writeln!(w, "</g>");
    }

    let _ = writeln!(w, r#"<g id="points">"#);
    for (p, tag) in &scene.points {
        let _ = writeln!(
            w,
            r#"<circle cx="{:.4}" cy="{:.4}" r="1.5" fill="{}"/>"#,
            frame.x(p),
            frame.y(p),
            tag_color(*tag)
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g id="paths" fill="none" stroke-width="2">"#);
    for (i, path) in scene.paths.iter().enumerate() {
        let pts: Vec<String> = path.iter().map(|p| frame.xy(p)).collect();
        let _ = writeln!(
            w,
            r#"<polyline stroke="{}" points="{}"/>"#,
            PATH_COLORS[i % PATH_COLORS.len()],
            pts.join(" ")
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r##"<g id="exits" stroke="#e6c200" stroke-width="3">"##);
    for e in &scene.exits {
        let (x, y) = (frame.x(e), frame.y(e));
        let _ = writeln!(
            w,
            r#"<path d="M{:.4},{:.4} L{:.4},{:.4} M{:.4},{:.4} L{:.4},{:.4}"/>"#,
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r##"<g id="agents" fill="#d62728">"##);
    for a in &scene.agents {
        let _ = writeln!(w, r#"<circle cx="{:.4}" cy="{:.4}" r="5"/>"#, frame.x(a), frame.y(a));
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scene() -> Scene {
        Scene {
            title: "t".into(),
            points: vec![(Point2::new(1.0, 2.0), Tag::Inlier), (Point2::new(-1.0, 0.5), Tag::Outlier)],
            agents: vec![Point2::new(0.0, 0.0)],
            ..Default::default()
        }
    }

    #[test]
    fn points_and_pose_only() {
        let svg = render_svg(&small_scene());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 0);
        assert_eq!(svg.matches("r=\"1.5\"").count(), 2);
        assert_eq!(svg.matches("r=\"5\"").count(), 1);
    }

    #[test]
    fn deterministic_bytes() {
        let mut scene = small_scene();
        scene.obstacles.push(ConvexPolygon::rectangle(Point2::new(0.2, 0.2), Point2::new(0.4, 0.6)).unwrap());
        scene.paths.push(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]);
        scene.paths.push(vec![Point2::new(1.0, 1.0), Point2::new(2.0, 1.0)]);
        let a = render_svg(&scene);
        assert_eq!(a, render_svg(&scene.clone()));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert_eq!(a.matches("<polygon").count(), 1);
    }

    #[test]
    fn y_axis_points_up() {
        let svg = render_svg(&small_scene());
        // (1, 2) is the highest point, so it sits at the top padding
        assert!(svg.contains(r#"cy="40.0000""#));
    }
}
