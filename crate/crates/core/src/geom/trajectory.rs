use super::{normalize_angle, GeomError, Point2, Pose2};
use serde::{Deserialize, Serialize};

/// Sub-samples per segment used to flatten a Catmull-Rom spline before
/// arc-length resampling.
const SPLINE_DENSITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Interpolation {
    #[default]
    Linear,
    CatmullRom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose2,
}

/// Timestamped poses with strictly increasing time and at least two samples.
///
/// Serialized as rows `[t, x, y, theta]`; rows of `[t, x, y]` are accepted on
/// input, with headings derived from the path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, GeomError> {
        if samples.len() < 2 {
            return Err(GeomError::TooFewSamples(samples.len()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.pose.x.is_finite() && s.pose.y.is_finite())
                || !s.pose.theta.is_finite()
            {
                return Err(GeomError::NonFinite(i));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(GeomError::NonMonotoneTime(i));
            }
        }
        Ok(Self { samples })
    }

    /// Builds a trajectory from `[t, x, y]` rows; headings follow the path.
    pub fn from_txy(rows: &[[f64; 3]]) -> Result<Self, GeomError> {
        let points: Vec<Point2> = rows.iter().map(|r| Point2::new(r[1], r[2])).collect();
        let headings = path_headings(&points);
        Self::new(
            rows.iter()
                .zip(headings)
                .map(|(r, th)| TrajectorySample {
                    t: r[0],
                    pose: Pose2::new(r[1], r[2], th),
                })
                .collect(),
        )
    }

    /// Builds a trajectory from `[t, x, y, theta]` rows.
    pub fn from_txyt(rows: &[[f64; 4]]) -> Result<Self, GeomError> {
        Self::new(
            rows.iter()
                .map(|r| TrajectorySample {
                    t: r[0],
                    pose: Pose2::new(r[1], r[2], r[3]),
                })
                .collect(),
        )
    }

    /// Uniformly timed trajectory through `points` with headings along the path.
    pub fn from_points(points: &[Point2], dt: f64) -> Result<Self, GeomError> {
        let headings = path_headings(points);
        Self::new(
            points
                .iter()
                .zip(headings)
                .enumerate()
                .map(|(i, (p, th))| TrajectorySample {
                    t: i as f64 * dt,
                    pose: Pose2::new(p.x, p.y, th),
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> Vec<Point2> {
        self.samples.iter().map(|s| s.pose.position()).collect()
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }

    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.points())
    }

    pub fn to_txy(&self) -> Vec<[f64; 3]> {
        self.samples.iter().map(|s| [s.t, s.pose.x, s.pose.y]).collect()
    }

    pub fn to_txyt(&self) -> Vec<[f64; 4]> {
        self.samples
            .iter()
            .map(|s| [s.t, s.pose.x, s.pose.y, s.pose.theta])
            .collect()
    }

    /// Pose at time `t`, linearly interpolated and clamped to the endpoints.
    pub fn pose_at(&self, t: f64) -> Pose2 {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].pose;
        }
        if t >= s[s.len() - 1].t {
            return s[s.len() - 1].pose;
        }
        let hi = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[hi - 1], &s[hi]);
        let w = (t - a.t) / (b.t - a.t);
        lerp_pose(&a.pose, &b.pose, w)
    }

    /// Resamples to `n` samples equally spaced in arc length. Endpoints are
    /// kept exactly; timestamps and headings are interpolated.
    pub fn resample(&self, n: usize, interp: Interpolation) -> Result<Trajectory, GeomError> {
        if n < 2 {
            return Err(GeomError::BadCount(n));
        }
        let base = match interp {
            Interpolation::Linear => self.samples.clone(),
            Interpolation::CatmullRom => catmull_rom_dense(&self.samples),
        };
        let cum = cumulative_lengths(base.iter().map(|s| s.pose.position()));
        let total = *cum.last().unwrap();
        if total <= 0.0 {
            return Err(GeomError::ZeroLength);
        }
        let mut out = Vec::with_capacity(n);
        let mut seg = 1;
        for k in 0..n {
            if k == 0 {
                out.push(base[0]);
                continue;
            }
            if k == n - 1 {
                out.push(base[base.len() - 1]);
                continue;
            }
            let target = total * k as f64 / (n - 1) as f64;
            while seg < cum.len() - 1 && cum[seg] < target {
                seg += 1;
            }
            let (a, b) = (&base[seg - 1], &base[seg]);
            let span = cum[seg] - cum[seg - 1];
            let w = if span > 0.0 {
                (target - cum[seg - 1]) / span
            } else {
                0.0
            };
            out.push(TrajectorySample {
                t: a.t + (b.t - a.t) * w,
                pose: lerp_pose(&a.pose, &b.pose, w),
            });
        }
        // Interpolated timestamps can collide on segments with zero duration.
        for i in 1..out.len() {
            if out[i].t <= out[i - 1].t {
                out[i].t = next_up(out[i - 1].t);
            }
        }
        Trajectory::new(out)
    }

    pub fn reversed(&self) -> Trajectory {
        let t_end = self.last().t;
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| TrajectorySample {
                t: t_end - s.t,
                pose: Pose2::new(s.pose.x, s.pose.y, s.pose.theta + std::f64::consts::PI),
            })
            .collect();
        Trajectory { samples }
    }
}

impl Serialize for Trajectory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_txyt().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.iter().all(|r| r.len() == 4) {
            let rows: Vec<[f64; 4]> = rows.iter().map(|r| [r[0], r[1], r[2], r[3]]).collect();
            Trajectory::from_txyt(&rows).map_err(D::Error::custom)
        } else if rows.iter().all(|r| r.len() == 3) {
            let rows: Vec<[f64; 3]> = rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
            Trajectory::from_txy(&rows).map_err(D::Error::custom)
        } else {
            Err(D::Error::custom("trajectory rows must all be [t,x,y] or [t,x,y,theta]"))
        }
    }
}

fn next_up(t: f64) -> f64 {
    t + t.abs().max(1.0) * 1e-12
}

fn lerp_pose(a: &Pose2, b: &Pose2, w: f64) -> Pose2 {
    let dth = normalize_angle(b.theta - a.theta);
    Pose2::new(
        a.x + (b.x - a.x) * w,
        a.y + (b.y - a.y) * w,
        a.theta + dth * w,
    )
}

fn cumulative_lengths(points: impl Iterator<Item = Point2>) -> Vec<f64> {
    let mut cum = Vec::new();
    let mut prev: Option<Point2> = None;
    let mut acc = 0.0;
    for p in points {
        if let Some(q) = prev {
            acc += p.dist(q);
        }
        cum.push(acc);
        prev = Some(p);
    }
    cum
}

/// Heading of each vertex: direction of the outgoing segment, or of the
/// incoming one at the end. Zero-length segments inherit the previous heading.
fn path_headings(points: &[Point2]) -> Vec<f64> {
    let seg_dir: Vec<Option<f64>> = points
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            (d.norm() > 1e-12).then(|| d.y.atan2(d.x))
        })
        .collect();
    let mut last = seg_dir.iter().flatten().next().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let h = seg_dir.get(i).copied().flatten().unwrap_or(last);
        out.push(h);
        last = h;
    }
    out
}

fn catmull_rom_dense(samples: &[TrajectorySample]) -> Vec<TrajectorySample> {
    let n = samples.len();
    let p = |i: isize| -> Point2 {
        let i = i.clamp(0, n as isize - 1) as usize;
        samples[i].pose.position()
    };
    let mut pts = Vec::with_capacity((n - 1) * SPLINE_DENSITY + 1);
    let mut times = Vec::with_capacity(pts.capacity());
    for i in 0..n - 1 {
        let (p0, p1, p2, p3) = (p(i as isize - 1), p(i as isize), p(i as isize + 1), p(i as isize + 2));
        for k in 0..SPLINE_DENSITY {
            let u = k as f64 / SPLINE_DENSITY as f64;
            let u2 = u * u;
            let u3 = u2 * u;
            let c = |a: f64, b: f64, cc: f64, d: f64| {
                0.5 * (2.0 * b + (-a + cc) * u + (2.0 * a - 5.0 * b + 4.0 * cc - d) * u2 + (-a + 3.0 * b - 3.0 * cc + d) * u3)
            };
            pts.push(Point2::new(c(p0.x, p1.x, p2.x, p3.x), c(p0.y, p1.y, p2.y, p3.y)));
            times.push(samples[i].t + (samples[i + 1].t - samples[i].t) * u);
        }
    }
    pts.push(samples[n - 1].pose.position());
    times.push(samples[n - 1].t);
    let headings = path_headings(&pts);
    pts.iter()
        .zip(times)
        .zip(headings)
        .map(|((q, t), th)| TrajectorySample {
            t,
            pose: Pose2::new(q.x, q.y, th),
        })
        .collect()
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Equal-arc-length resampling of a bare polyline; endpoints preserved.
pub fn resample_points(points: &[Point2], n: usize) -> Result<Vec<Point2>, GeomError> {
    if n < 2 {
        return Err(GeomError::BadCount(n));
    }
    if points.is_empty() {
        return Err(GeomError::TooFewSamples(0));
    }
    let cum = cumulative_lengths(points.iter().copied());
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(GeomError::ZeroLength);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 1;
    for k in 0..n {
        if k == 0 {
            out.push(points[0]);
        } else if k == n - 1 {
            out.push(points[points.len() - 1]);
        } else {
            let target = total * k as f64 / (n - 1) as f64;
            while seg < cum.len() - 1 && cum[seg] < target {
                seg += 1;
            }
            let span = cum[seg] - cum[seg - 1];
            let w = if span > 0.0 {
                (target - cum[seg - 1]) / span
            } else {
                0.0
            };
            out.push(points[seg - 1].lerp(points[seg], w));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn traj(points: &[(f64, f64)]) -> Trajectory {
        let pts: Vec<Point2> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        Trajectory::from_points(&pts, 1.0).unwrap()
    }

    #[test]
    fn straight_segment_uniform_subdivision() {
        let r = traj(&[(0.0, 0.0), (4.0, 0.0)])
            .resample(5, Interpolation::Linear)
            .unwrap();
        let xs: Vec<f64> = r.samples().iter().map(|s| s.pose.x).collect();
        for (x, want) in xs.iter().zip([0.0, 1.0, 2.0, 3.0, 4.0]) {
            assert_abs_diff_eq!(*x, want, epsilon = 1e-12);
        }
        // timestamps follow arc length on a uniformly timed segment
        assert_abs_diff_eq!(r.samples()[2].t, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn l_shape_midpoint_is_corner() {
        let r = traj(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)])
            .resample(3, Interpolation::Linear)
            .unwrap();
        let mid = r.samples()[1].pose.position();
        assert_abs_diff_eq!(mid.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mid.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn idempotent_when_corners_land_on_samples() {
        let t = traj(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)]);
        let once = t.resample(101, Interpolation::Linear).unwrap();
        let twice = once.resample(101, Interpolation::Linear).unwrap();
        for (a, b) in once.samples().iter().zip(twice.samples()) {
            assert!(a.pose.position().dist(b.pose.position()) < 1e-9);
            assert!((a.t - b.t).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_input_rejected() {
        let t = Trajectory::new(vec![
            TrajectorySample { t: 0.0, pose: Pose2::new(1.0, 1.0, 0.0) },
            TrajectorySample { t: 1.0, pose: Pose2::new(1.0, 1.0, 0.0) },
        ])
        .unwrap();
        assert_eq!(t.resample(10, Interpolation::Linear), Err(GeomError::ZeroLength));
        assert_eq!(
            resample_points(&[Point2::new(0.0, 0.0); 3], 4),
            Err(GeomError::ZeroLength)
        );
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Trajectory::from_txy(&[[0.0, 0.0, 0.0]]),
            Err(GeomError::TooFewSamples(1))
        ));
        assert!(matches!(
            Trajectory::from_txy(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            Err(GeomError::NonMonotoneTime(1))
        ));
        assert!(matches!(
            Trajectory::from_txy(&[[0.0, 0.0, 0.0], [1.0, f64::NAN, 0.0]]),
            Err(GeomError::NonFinite(1))
        ));
    }

    #[test]
    fn json_rows() {
        let t = traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.starts_with("[[0.0,0.0,0.0,0.0],"));
        assert_eq!(serde_json::from_str::<Trajectory>(&text).unwrap(), t);
        let txy: Trajectory = serde_json::from_str("[[0,0,0],[1,1,0]]").unwrap();
        assert_eq!(txy.last().pose.position(), Point2::new(1.0, 0.0));
        assert!(serde_json::from_str::<Trajectory>("[[0,0,0],[0,1,0]]").is_err());
        assert!(serde_json::from_str::<Trajectory>("[[0,0,0],[1,1,0,0]]").is_err());
    }

    #[test]
    fn catmull_rom_keeps_endpoints_and_passes_through_knots() {
        let t = traj(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]);
        let r = t.resample(50, Interpolation::CatmullRom).unwrap();
        assert_eq!(r.first().pose.position(), Point2::new(0.0, 0.0));
        assert_eq!(r.last().pose.position(), Point2::new(3.0, 1.0));
        // spline is at least as long as the chords
        assert!(polyline_length(&r.points()) > 0.99 * t.arc_length());
    }

    #[test]
    fn pose_at_interpolates() {
        let t = Trajectory::from_txyt(&[[0.0, 0.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(t.pose_at(1.0).x, 1.0);
        assert_abs_diff_eq!(t.pose_at(-1.0).x, 0.0);
        assert_abs_diff_eq!(t.pose_at(9.0).x, 2.0);
    }

    fn arb_polyline() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..12)
    }

    proptest! {
        // Sample positions sit at k·L/(n−1) of the input's arc length, so the
        // span covered equals the input length.
        #[test]
        fn arc_length_parameters_cover_input(pts in arb_polyline(), n in 2usize..200) {
            let poly: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let total = polyline_length(&poly);
            prop_assume!(total > 1e-3);
            let out = resample_points(&poly, n).unwrap();
            prop_assert_eq!(out.len(), n);
            prop_assert_eq!(out[0], poly[0]);
            prop_assert_eq!(out[n - 1], poly[poly.len() - 1]);
            // Each output point lies on the input at the expected arc length.
            for (k, p) in out.iter().enumerate() {
                let s = arc_param_of(&poly, *p);
                prop_assert!((s - total * k as f64 / (n - 1) as f64).abs() < 1e-6 * total.max(1.0)
                    || self_intersecting_ambiguity(&poly, *p));
            }
        }

        #[test]
        fn collinear_input_preserves_length(x0 in -5.0..5.0f64, len in 0.1..10.0f64, n in 2usize..150, cuts in prop::collection::vec(0.0..1.0f64, 0..6)) {
            let mut ts = cuts.clone();
            ts.push(0.0);
            ts.push(1.0);
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let poly: Vec<Point2> = ts.iter().map(|t| Point2::new(x0 + t * len, 0.5 * x0)).collect();
            let out = resample_points(&poly, n).unwrap();
            prop_assert!((polyline_length(&out) - len).abs() < 1e-6);
        }
    }

    // Arc-length parameter of the first polyline location matching `p`.
    fn arc_param_of(poly: &[Point2], p: Point2) -> f64 {
        let mut acc = 0.0;
        let mut best = (f64::INFINITY, 0.0);
        for w in poly.windows(2) {
            let d = w[1] - w[0];
            let l = d.norm();
            let s = if l > 0.0 { ((p - w[0]).dot(d) / (l * l)).clamp(0.0, 1.0) } else { 0.0 };
            let q = w[0] + d * s;
            let e = q.dist(p);
            if e < best.0 - 1e-12 {
                best = (e, acc + s * l);
            }
            acc += l;
        }
        best.1
    }

    fn self_intersecting_ambiguity(poly: &[Point2], p: Point2) -> bool {
        // A point can lie on several segments when the polyline crosses itself.
        poly.windows(2)
            .filter(|w| {
                let d = w[1] - w[0];
                let l = d.norm();
                if l == 0.0 {
                    return false;
                }
                let s = ((p - w[0]).dot(d) / (l * l)).clamp(0.0, 1.0);
                (w[0] + d * s).dist(p) < 1e-9
            })
            .count()
            > 1
    }
}
