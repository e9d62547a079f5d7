//! Least-squares power-law fits.

/// Slope of the least-squares line through `(ln x, ln y)`.
///
/// Points with non-positive coordinates are dropped; `None` if fewer than two
/// distinct abscissae remain.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// [`log_log_slope`] over particle numbers `N ≥ 2M`.
pub fn particle_number_slope(points: &[(usize, f64)], m_max: usize) -> Option<f64> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= 2 * m_max)
        .map(|&(n, y)| (n as f64, y))
        .collect();
    log_log_slope(&kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-1.5))).collect();
        assert!((log_log_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
        assert_eq!(log_log_slope(&[(2.0, 1.0), (2.0, 3.0)]), None);
    }

    #[test]
    fn small_particle_numbers_excluded() {
        let pts = vec![(2, 100.0), (4, 1.0 / 4.0), (8, 1.0 / 8.0), (16, 1.0 / 16.0)];
        assert!((particle_number_slope(&pts, 2).unwrap() + 1.0).abs() < 1e-12);
    }
}
