use crate::geom::{resample_points, Point2, Trajectory};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_PHI: f64 = 3.0 * PI / 4.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrechetError {
    #[error("empty polyline")]
    Empty,
    #[error("degenerate trajectory: needs two distinct points")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EndpointMode {
    #[default]
    Auto,
    Forward,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetReport {
    #[serde(rename = "F_full")]
    pub f_full: f64,
    /// `(t, f)` pairs: arc-length fraction of the rollout and the partial
    /// distance of that prefix.
    pub curve: Vec<(f64, f64)>,
    pub t_star: f64,
    pub f_at_t_star: f64,
    pub reversed: bool,
}

/// Coupling table `d(i, j)` over all prefix pairs.
fn coupling_table(a: &[Point2], b: &[Point2]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let c = a[i].dist(b[j]);
            d[i][j] = match (i, j) {
                (0, 0) => c,
                (0, _) => c.max(d[0][j - 1]),
                (_, 0) => c.max(d[i - 1][0]),
                _ => c.max(d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1])),
            };
        }
    }
    d
}

/// Discrete Fréchet distance between the given vertex sequences.
pub fn frechet_points(a: &[Point2], b: &[Point2]) -> Result<f64, FrechetError> {
    if a.is_empty() || b.is_empty() {
        return Err(FrechetError::Empty);
    }
    let d = coupling_table(a, b);
    Ok(d[a.len() - 1][b.len() - 1])
}

fn resampled(p: &[Point2], n: usize) -> Result<Vec<Point2>, FrechetError> {
    match p.len() {
        0 => Err(FrechetError::Empty),
        1 => Ok(vec![p[0]; n]),
        _ => Ok(resample_points(p, n).unwrap_or_else(|_| vec![p[0]; n])),
    }
}

/// Discrete Fréchet distance after resampling both polylines to `n` points
/// equally spaced in arc length.
pub fn discrete_frechet(a: &[Point2], b: &[Point2], n: usize) -> Result<f64, FrechetError> {
    frechet_points(&resampled(a, n)?, &resampled(b, n)?)
}

fn arc_fractions(a: &[Point2]) -> Vec<f64> {
    let mut cum = vec![0.0];
    for w in a.windows(2) {
        cum.push(cum.last().unwrap() + w[0].dist(w[1]));
    }
    let total = *cum.last().unwrap();
    let n = a.len();
    cum.iter()
        .enumerate()
        .map(|(i, c)| {
            if total > 0.0 {
                c / total
            } else if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                1.0
            }
        })
        .collect()
}

/// Partial distances of every prefix of `a` against the best prefix of `b`,
/// read off one coupling table. The final sample is the full distance.
pub fn partial_frechet_curve(a: &[Point2], b: &[Point2]) -> Result<Vec<(f64, f64)>, FrechetError> {
    if a.is_empty() || b.is_empty() {
        return Err(FrechetError::Empty);
    }
    let d = coupling_table(a, b);
    let t = arc_fractions(a);
    let mut curve: Vec<(f64, f64)> = d
        .iter()
        .zip(t)
        .map(|(row, t)| (t, row.iter().copied().fold(f64::INFINITY, f64::min)))
        .collect();
    let last = curve.len() - 1;
    curve[last].1 = d[a.len() - 1][b.len() - 1];
    Ok(curve)
}

/// Knee of the curve: argmin of `cos φ·t + sin φ·f̂` with `f̂ = f / max f`.
/// Equal costs resolve to the larger `t`; a curve that stays at zero
/// deviates nowhere, giving `t* = 1`.
pub fn deviation_point(curve: &[(f64, f64)], phi: f64) -> f64 {
    deviation_index(curve, phi).map_or(1.0, |i| curve[i].0)
}

fn deviation_index(curve: &[(f64, f64)], phi: f64) -> Option<usize> {
    let max = curve.iter().map(|c| c.1).fold(0.0, f64::max);
    if curve.is_empty() || max <= 0.0 {
        return None;
    }
    let (c, s) = (phi.cos(), phi.sin());
    let mut best = (f64::INFINITY, 0);
    for (i, &(t, f)) in curve.iter().enumerate() {
        let cost = c * t + s * f / max;
        if cost <= best.0 {
            best = (cost, i);
        }
    }
    Some(best.1)
}

/// Deviation-aware Fréchet analysis of rollout `a` against demonstration
/// `b`, both resampled to `n` points. In `Auto` mode both curves are
/// reversed when their ends lie closer together than their starts.
pub fn deviation_aware_frechet(
    a: &[Point2],
    b: &[Point2],
    mode: EndpointMode,
    n: usize,
    phi: f64,
) -> Result<FrechetReport, FrechetError> {
    for p in [a, b] {
        if p.len() < 2 || crate::geom::polyline_length(p) <= 0.0 {
            return Err(FrechetError::Degenerate);
        }
    }
    let reversed = match mode {
        EndpointMode::Forward => false,
        EndpointMode::Reversed => true,
        EndpointMode::Auto => a[a.len() - 1].dist(b[b.len() - 1]) < a[0].dist(b[0]),
    };
    let (mut ra, mut rb) = (resampled(a, n)?, resampled(b, n)?);
    if reversed {
        ra.reverse();
        rb.reverse();
    }
    let curve = partial_frechet_curve(&ra, &rb)?;
    let f_full = curve[curve.len() - 1].1;
    let (t_star, f_at_t_star) = match deviation_index(&curve, phi) {
        Some(i) => curve[i],
        None => (1.0, f_full),
    };
    Ok(FrechetReport {
        f_full,
        curve,
        t_star,
        f_at_t_star,
        reversed,
    })
}

pub fn trajectory_frechet(a: &Trajectory, b: &Trajectory, mode: EndpointMode) -> Result<FrechetReport, FrechetError> {
    deviation_aware_frechet(&a.points(), &b.points(), mode, DEFAULT_SAMPLES, DEFAULT_PHI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn examples() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(frechet_points(&a, &a).unwrap(), 0.0);
        assert_eq!(frechet_points(&a, &b).unwrap(), 1.0);
        assert_abs_diff_eq!(discrete_frechet(&a, &b, 100).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(frechet_points(&[], &b), Err(FrechetError::Empty));
    }

    #[test]
    fn identical_curves() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.5), (2.0, 0.0)]);
        let c = partial_frechet_curve(&a, &a).unwrap();
        assert!(c.iter().all(|p| p.1 == 0.0));
        assert_eq!(deviation_point(&c, DEFAULT_PHI), 1.0);
        let r = deviation_aware_frechet(&a, &a, EndpointMode::Auto, 100, DEFAULT_PHI).unwrap();
        assert_eq!((r.t_star, r.f_at_t_star), (1.0, 0.0));
    }

    #[test]
    fn follows_half_then_departs() {
        let b = pts(&[(0.0, 0.0), (4.0, 0.0)]);
        let a = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0)]);
        let c = partial_frechet_curve(&resampled(&a, 101).unwrap(), &resampled(&b, 101).unwrap()).unwrap();
        for &(t, f) in &c {
            if t <= 0.5 {
                assert!(f < 1e-9, "{t} {f}");
            }
        }
        assert!(c.last().unwrap().1 > 1.0);
        let t = deviation_point(&c, DEFAULT_PHI);
        assert!((t - 0.5).abs() <= 0.02, "{t}");
    }

    #[test]
    fn offset_parallel_pair() {
        let a = pts(&[(0.0, 0.4), (5.0, 0.4)]);
        let b = pts(&[(0.0, 0.0), (5.0, 0.0)]);
        let r = deviation_aware_frechet(&a, &b, EndpointMode::Auto, 100, DEFAULT_PHI).unwrap();
        assert_abs_diff_eq!(r.f_at_t_star, 0.4, epsilon = 1e-9);
    }

    #[test]
    fn shared_goal_reverses() {
        let a = pts(&[(0.0, 2.0), (3.0, 0.0)]);
        let b = pts(&[(0.0, -2.0), (3.0, 0.0)]);
        let r = deviation_aware_frechet(&a, &b, EndpointMode::Auto, 50, DEFAULT_PHI).unwrap();
        assert!(r.reversed);
        let single = pts(&[(1.0, 1.0)]);
        assert_eq!(
            deviation_aware_frechet(&single, &b, EndpointMode::Auto, 50, DEFAULT_PHI),
            Err(FrechetError::Degenerate)
        );
    }

    fn poly(max: usize) -> impl Strategy<Value = Vec<Point2>> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..max).prop_map(|v| pts(&v))
    }

    proptest! {
        #[test]
        fn metric_properties(a in poly(8), b in poly(8), c in poly(8)) {
            let ab = frechet_points(&a, &b).unwrap();
            let ba = frechet_points(&b, &a).unwrap();
            let ac = frechet_points(&a, &c).unwrap();
            let cb = frechet_points(&c, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= ac + cb + 1e-9);
        }

        #[test]
        fn curve_monotone_and_bounded(a in poly(12), b in poly(12)) {
            let c = partial_frechet_curve(&a, &b).unwrap();
            let full = frechet_points(&a, &b).unwrap();
            for w in c.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            prop_assert!(c.iter().all(|p| p.1 <= full));
            prop_assert_eq!(c.last().unwrap().1, full);
        }

        #[test]
        fn knee_is_scale_invariant(a in poly(10), b in poly(10), k in 0.1f64..100.0) {
            let c = partial_frechet_curve(&a, &b).unwrap();
            let scaled: Vec<(f64, f64)> = c.iter().map(|&(t, f)| (t, f * k)).collect();
            prop_assert_eq!(deviation_point(&c, DEFAULT_PHI), deviation_point(&scaled, DEFAULT_PHI));
        }

        #[test]
        fn reversal_consistency(a in poly(10), b in poly(10)) {
            prop_assume!(crate::geom::polyline_length(&a) > 1e-6 && crate::geom::polyline_length(&b) > 1e-6);
            let r1 = deviation_aware_frechet(&a, &b, EndpointMode::Reversed, 40, DEFAULT_PHI).unwrap();
            let ra: Vec<Point2> = a.iter().rev().copied().collect();
            let rb: Vec<Point2> = b.iter().rev().copied().collect();
            let r2 = deviation_aware_frechet(&ra, &rb, EndpointMode::Forward, 40, DEFAULT_PHI).unwrap();
            prop_assert!((r1.f_full - r2.f_full).abs() < 1e-9);
            prop_assert!((r1.f_at_t_star - r2.f_at_t_star).abs() < 1e-9);
            prop_assert!((r1.t_star - r2.t_star).abs() < 1e-9);
        }
    }
}
