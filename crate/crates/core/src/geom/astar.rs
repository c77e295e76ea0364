use super::{GeomError, Point2, Scene};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default grid resolution in meters.
pub const DEFAULT_CELL: f64 = 0.1;
/// Obstacle inflation used by [`astar_path`]: the simulated human's disc radius.
pub const DEFAULT_INFLATION: f64 = 0.3;

/// Occupancy grid over a scene with obstacles inflated by a clearance radius.
#[derive(Debug, Clone)]
pub struct GridMap<'a> {
    scene: &'a Scene,
    cell: f64,
    inflation: f64,
    origin: Point2,
    cols: usize,
    rows: usize,
    free: Vec<bool>,
}

/// Grid-optimal cell sequence plus the smoothed world-space polyline.
#[derive(Debug, Clone)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    /// Length of the 8-connected cell path in meters.
    pub grid_cost: f64,
    pub polyline: Vec<Point2>,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, ties toward larger g (deeper nodes)
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl<'a> GridMap<'a> {
    pub fn new(scene: &'a Scene, cell: f64, inflation: f64) -> Self {
        let [xmin, ymin, xmax, ymax] = scene.bounds();
        let cols = ((xmax - xmin) / cell).floor().max(1.0) as usize;
        let rows = ((ymax - ymin) / cell).floor().max(1.0) as usize;
        let origin = Point2::new(xmin, ymin);
        let mut free = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let p = Point2::new(
                    origin.x + (c as f64 + 0.5) * cell,
                    origin.y + (r as f64 + 0.5) * cell,
                );
                free.push(scene.clearance(p) >= inflation);
            }
        }
        Self {
            scene,
            cell,
            inflation,
            origin,
            cols,
            rows,
            free,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_free(&self, r: usize, c: usize) -> bool {
        r < self.rows && c < self.cols && self.free[r * self.cols + c]
    }

    pub fn center(&self, r: usize, c: usize) -> Point2 {
        Point2::new(
            self.origin.x + (c as f64 + 0.5) * self.cell,
            self.origin.y + (r as f64 + 0.5) * self.cell,
        )
    }

    fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let c = ((p.x - self.origin.x) / self.cell).floor();
        let r = ((p.y - self.origin.y) / self.cell).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.cols && (r as usize) < self.rows)
            .then(|| (r as usize, c as usize))
    }

    /// Whether a disc of the inflation radius can sweep from `a` to `b`.
    pub fn segment_clear(&self, a: Point2, b: Point2) -> bool {
        let len = a.dist(b);
        let step = (self.cell * 0.25).min(0.025);
        let n = (len / step).ceil().max(1.0) as usize;
        (0..=n).all(|k| self.scene.clearance(a.lerp(b, k as f64 / n as f64)) >= self.inflation - 1e-9)
    }

    /// Free cell used to enter the grid from a free world point.
    fn anchor(&self, p: Point2) -> Option<(usize, usize)> {
        let (r0, c0) = self.cell_of(p)?;
        if self.is_free(r0, c0) {
            return Some((r0, c0));
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for dr in -2i64..=2 {
            for dc in -2i64..=2 {
                let (r, c) = (r0 as i64 + dr, c0 as i64 + dc);
                if r < 0 || c < 0 {
                    continue;
                }
                let (r, c) = (r as usize, c as usize);
                if !self.is_free(r, c) {
                    continue;
                }
                let d = self.center(r, c).dist(p);
                if best.is_none_or(|(_, bd)| d < bd) && self.segment_clear(p, self.center(r, c)) {
                    best = Some(((r, c), d));
                }
            }
        }
        best.map(|(rc, _)| rc)
    }

    /// 8-connected A* with an octile heuristic. Diagonal moves may not clip
    /// an occupied orthogonal neighbor.
    pub fn shortest_path(&self, start: (usize, usize), goal: (usize, usize)) -> Option<(Vec<(usize, usize)>, f64)> {
        if !self.is_free(start.0, start.1) || !self.is_free(goal.0, goal.1) {
            return None;
        }
        let n = self.rows * self.cols;
        let idx = |r: usize, c: usize| r * self.cols + c;
        let h = |r: usize, c: usize| {
            let dr = (r as f64 - goal.0 as f64).abs();
            let dc = (c as f64 - goal.1 as f64).abs();
            self.cell * ((dr.max(dc) - dr.min(dc)) + std::f64::consts::SQRT_2 * dr.min(dc))
        };
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        let s = idx(start.0, start.1);
        g[s] = 0.0;
        open.push(Open {
            f: h(start.0, start.1),
            g: 0.0,
            idx: s,
        });
        let goal_idx = idx(goal.0, goal.1);
        while let Some(Open { idx: cur, .. }) = open.pop() {
            if closed[cur] {
                continue;
            }
            closed[cur] = true;
            if cur == goal_idx {
                break;
            }
            let (r, c) = (cur / self.cols, cur % self.cols);
            for (dr, dc) in NEIGHBORS {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if !self.is_free(nr, nc) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal && !(self.is_free(r, nc) && self.is_free(nr, c)) {
                    continue;
                }
                let step = if diagonal {
                    std::f64::consts::SQRT_2 * self.cell
                } else {
                    self.cell
                };
                let ni = idx(nr, nc);
                let ng = g[cur] + step;
                if ng < g[ni] {
                    g[ni] = ng;
                    parent[ni] = cur;
                    open.push(Open {
                        f: ng + h(nr, nc),
                        g: ng,
                        idx: ni,
                    });
                }
            }
        }
        if !g[goal_idx].is_finite() {
            return None;
        }
        let mut cells = vec![goal];
        let mut cur = goal_idx;
        while cur != s {
            cur = parent[cur];
            cells.push((cur / self.cols, cur % self.cols));
        }
        cells.reverse();
        Some((cells, g[goal_idx]))
    }

    pub fn plan(&self, start: Point2, goal: Point2) -> Result<GridPath, GeomError> {
        if self.scene.clearance(start) < self.inflation || self.scene.clearance(goal) < self.inflation {
            return Err(GeomError::Unreachable);
        }
        let a = self.anchor(start).ok_or(GeomError::Unreachable)?;
        let b = self.anchor(goal).ok_or(GeomError::Unreachable)?;
        let (cells, grid_cost) = self.shortest_path(a, b).ok_or(GeomError::Unreachable)?;
        let mut raw = Vec::with_capacity(cells.len() + 2);
        raw.push(start);
        raw.extend(cells.iter().map(|&(r, c)| self.center(r, c)));
        raw.push(goal);
        Ok(GridPath {
            cells,
            grid_cost,
            polyline: self.shortcut(&raw),
        })
    }

    /// Greedy line-of-sight corner cutting.
    fn shortcut(&self, raw: &[Point2]) -> Vec<Point2> {
        let mut out = vec![raw[0]];
        let mut i = 0;
        while i < raw.len() - 1 {
            let mut j = raw.len() - 1;
            while j > i + 1 && !self.segment_clear(raw[i], raw[j]) {
                j -= 1;
            }
            out.push(raw[j]);
            i = j;
        }
        out
    }
}

/// Smoothed A* polyline from `start` to `goal`, obstacles inflated by the
/// human disc radius.
pub fn astar_path(scene: &Scene, start: Point2, goal: Point2, cell: f64) -> Result<Vec<Point2>, GeomError> {
    GridMap::new(scene, cell, DEFAULT_INFLATION)
        .plan(start, goal)
        .map(|p| p.polyline)
}
