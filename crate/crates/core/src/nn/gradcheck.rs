//! Central finite-difference checks for analytic gradients.

/// Gradients smaller than this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Central difference of `loss` with respect to parameter `i`.
pub fn central_difference(mut loss: impl FnMut(&[f64]) -> f64, params: &[f64], i: usize, h: f64) -> f64 {
    let mut p = params.to_vec();
    p[i] = params[i] + h;
    let up = loss(&p);
    p[i] = params[i] - h;
    let down = loss(&p);
    (up - down) / (2.0 * h)
}

/// `|a − n| / max(|a|, |n|, floor)` for analytic `a` and numeric `n`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Largest relative error over the probed parameter `indices`.
pub fn max_relative_error(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    indices: &[usize],
    h: f64,
) -> f64 {
    indices
        .iter()
        .map(|&i| relative_error(analytic[i], central_difference(&mut loss, params, i, h)))
        .fold(0.0, f64::max)
}
