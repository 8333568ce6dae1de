/// Ordinary least-squares slope of `ys` against `xs`.
///
/// Returns `None` when fewer than two points are given or all `xs` coincide.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mean_x = xs[..n].iter().sum::<f64>() / n as f64;
    let mean_y = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 4.0).collect();
        let slope = least_squares_slope(&xs, &ys).unwrap();
        assert!((slope + 2.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares_slope(&[1.0], &[2.0]).is_none());
        assert!(least_squares_slope(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
