use super::{GeomError, Point2, Pose2};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub c: [f64; 2],
    pub r: f64,
}

impl Circle {
    pub fn center(&self) -> Point2 {
        Point2::from(self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Polygon(Vec<Point2>),
    Circle(Circle),
}

/// On-disk scene layout. Units are meters, right-handed frame, headings from +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub id: String,
    pub bounds: [f64; 4],
    #[serde(default)]
    pub polygons: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub circles: Vec<Circle>,
    pub spawn_region: Vec<[f64; 2]>,
}

/// A walled rectangular room with polygonal and circular obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    file: SceneFile,
    polygons: Vec<Vec<Point2>>,
    spawn: Vec<Point2>,
}

impl Scene {
    pub fn new(file: SceneFile) -> Result<Self, GeomError> {
        let [xmin, ymin, xmax, ymax] = file.bounds;
        if !(xmin < xmax && ymin < ymax) {
            return Err(GeomError::InvalidScene("empty bounds".into()));
        }
        let inside = |p: &[f64; 2]| p[0] >= xmin && p[0] <= xmax && p[1] >= ymin && p[1] <= ymax;
        for poly in &file.polygons {
            if poly.len() < 3 {
                return Err(GeomError::InvalidScene("polygon with fewer than 3 vertices".into()));
            }
            if !poly.iter().all(inside) {
                return Err(GeomError::InvalidScene("polygon outside bounds".into()));
            }
        }
        for c in &file.circles {
            if !(c.r > 0.0)
                || c.c[0] - c.r < xmin
                || c.c[0] + c.r > xmax
                || c.c[1] - c.r < ymin
                || c.c[1] + c.r > ymax
            {
                return Err(GeomError::InvalidScene("circle outside bounds".into()));
            }
        }
        if file.spawn_region.len() < 3 || polygon_area(&to_points(&file.spawn_region)) <= 0.0 {
            return Err(GeomError::InvalidScene("spawn region has no area".into()));
        }
        let polygons = file.polygons.iter().map(|p| to_points(p)).collect();
        let spawn = to_points(&file.spawn_region);
        let scene = Self { file, polygons, spawn };
        // A spawn region fully covered by obstacles leaves nothing to sample.
        let (lo, hi) = scene.spawn_bbox();
        let free = (0..400).any(|k| {
            let p = Point2::new(
                lo.x + (hi.x - lo.x) * ((k % 20) as f64 + 0.5) / 20.0,
                lo.y + (hi.y - lo.y) * ((k / 20) as f64 + 0.5) / 20.0,
            );
            scene.in_spawn_region(p) && !scene.point_in_obstacle(p)
        });
        if !free {
            return Err(GeomError::InvalidScene("spawn region has no free area".into()));
        }
        Ok(scene)
    }

    pub fn from_json(text: &str) -> Result<Self, GeomError> {
        let file: SceneFile =
            serde_json::from_str(text).map_err(|e| GeomError::InvalidScene(e.to_string()))?;
        Self::new(file)
    }

    pub fn load(path: &Path) -> Result<Self, GeomError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::InvalidScene(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn id(&self) -> &str {
        &self.file.id
    }

    pub fn file(&self) -> &SceneFile {
        &self.file
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.file.bounds
    }

    pub fn polygons(&self) -> &[Vec<Point2>] {
        &self.polygons
    }

    pub fn circles(&self) -> &[Circle] {
        &self.file.circles
    }

    pub fn spawn_region(&self) -> &[Point2] {
        &self.spawn
    }

    pub fn shapes(&self) -> impl Iterator<Item = Shape> + '_ {
        self.polygons
            .iter()
            .cloned()
            .map(Shape::Polygon)
            .chain(self.file.circles.iter().copied().map(Shape::Circle))
    }

    pub fn spawn_bbox(&self) -> (Point2, Point2) {
        bbox(&self.spawn)
    }

    pub fn in_spawn_region(&self, p: Point2) -> bool {
        point_in_polygon(p, &self.spawn)
    }

    pub fn in_bounds(&self, p: Point2) -> bool {
        let [xmin, ymin, xmax, ymax] = self.file.bounds;
        p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax
    }

    /// True when `p` lies inside an obstacle or outside the walls.
    pub fn point_in_obstacle(&self, p: Point2) -> bool {
        !self.in_bounds(p)
            || self.polygons.iter().any(|poly| point_in_polygon(p, poly))
            || self.file.circles.iter().any(|c| p.dist(c.center()) < c.r)
    }

    /// Distance from `p` to the nearest obstacle boundary or wall; zero when
    /// `p` is inside an obstacle.
    pub fn clearance(&self, p: Point2) -> f64 {
        if self.point_in_obstacle(p) {
            return 0.0;
        }
        let [xmin, ymin, xmax, ymax] = self.file.bounds;
        let mut d = (p.x - xmin).min(xmax - p.x).min(p.y - ymin).min(ymax - p.y);
        for poly in &self.polygons {
            for (a, b) in edges(poly) {
                d = d.min(point_segment_distance(p, a, b));
            }
        }
        for c in &self.file.circles {
            d = d.min(p.dist(c.center()) - c.r);
        }
        d.max(0.0)
    }

    /// Whether a disc of `radius` at `p` overlaps an obstacle or wall.
    pub fn disc_collides(&self, p: Point2, radius: f64) -> bool {
        self.clearance(p) < radius
    }

    /// Distance along a ray from `origin` at heading `origin.theta + angle_offset`
    /// to the nearest wall, obstacle or extra disc, clamped to `max_range`.
    /// An origin inside an obstacle sees 0.
    pub fn raycast(&self, origin: &Pose2, angle_offset: f64, max_range: f64, discs: &[Circle]) -> f64 {
        let o = origin.position();
        if self.point_in_obstacle(o) || discs.iter().any(|c| o.dist(c.center()) < c.r) {
            return 0.0;
        }
        let a = origin.theta + angle_offset;
        let dir = Point2::new(a.cos(), a.sin());
        let mut best = max_range;
        let [xmin, ymin, xmax, ymax] = self.file.bounds;
        // walls: the origin is strictly inside, so exactly the exit face counts
        if dir.x > 0.0 {
            best = best.min((xmax - o.x) / dir.x);
        } else if dir.x < 0.0 {
            best = best.min((xmin - o.x) / dir.x);
        }
        if dir.y > 0.0 {
            best = best.min((ymax - o.y) / dir.y);
        } else if dir.y < 0.0 {
            best = best.min((ymin - o.y) / dir.y);
        }
        for poly in &self.polygons {
            for (p, q) in edges(poly) {
                if let Some(t) = ray_segment(o, dir, p, q) {
                    best = best.min(t);
                }
            }
        }
        for c in self.file.circles.iter().chain(discs) {
            if let Some(t) = ray_circle(o, dir, c.center(), c.r) {
                best = best.min(t);
            }
        }
        best.clamp(0.0, max_range)
    }

    /// Whether the open segment `a`–`b` crosses any obstacle or wall.
    pub fn segment_blocked(&self, a: Point2, b: Point2) -> bool {
        if self.point_in_obstacle(a) || self.point_in_obstacle(b) {
            return true;
        }
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return false;
        }
        let dir = d * (1.0 / len);
        let hits = |t: Option<f64>| matches!(t, Some(t) if t < len);
        self.polygons
            .iter()
            .any(|poly| edges(poly).any(|(p, q)| hits(ray_segment(a, dir, p, q))))
            || self
                .file
                .circles
                .iter()
                .any(|c| hits(ray_circle(a, dir, c.center(), c.r)))
    }

    /// Coarse occupancy preview: row-major `rows × cols`, `true` when the cell
    /// center is inside an obstacle.
    pub fn occupancy_preview(&self, cell: f64) -> (usize, usize, Vec<bool>) {
        let [xmin, ymin, xmax, ymax] = self.file.bounds;
        let cols = ((xmax - xmin) / cell).ceil().max(1.0) as usize;
        let rows = ((ymax - ymin) / cell).ceil().max(1.0) as usize;
        let mut grid = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let p = Point2::new(
                    xmin + (c as f64 + 0.5) * cell,
                    ymin + (r as f64 + 0.5) * cell,
                );
                grid.push(
                    self.polygons.iter().any(|poly| point_in_polygon(p, poly))
                        || self.file.circles.iter().any(|ci| p.dist(ci.center()) < ci.r),
                );
            }
        }
        (rows, cols, grid)
    }
}

fn to_points(raw: &[[f64; 2]]) -> Vec<Point2> {
    raw.iter().map(|&p| Point2::from(p)).collect()
}

fn bbox(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn edges(poly: &[Point2]) -> impl Iterator<Item = (Point2, Point2)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

pub(crate) fn polygon_area(poly: &[Point2]) -> f64 {
    0.5 * edges(poly).map(|(a, b)| a.cross(b)).sum::<f64>().abs()
}

/// Even-odd crossing test; works for concave polygons.
pub(crate) fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub(crate) fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a + d * s)
}

/// Parameter `t ≥ 0` where the unit ray `o + t·dir` meets segment `p`–`q`.
fn ray_segment(o: Point2, dir: Point2, p: Point2, q: Point2) -> Option<f64> {
    let e = q - p;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = p - o;
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

fn ray_circle(o: Point2, dir: Point2, c: Point2, r: f64) -> Option<f64> {
    let oc = o - c;
    let b = oc.dot(dir);
    let cc = oc.dot(oc) - r * r;
    let disc = b * b - cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}
