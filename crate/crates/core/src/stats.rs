//! Small numerical helpers shared by the statistics modules.

use std::f64::consts::PI;

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Fit `v(n) = a + b/n` through two points and return `a`.
pub fn extrapolate_inverse_n(n1: f64, v1: f64, n2: f64, v2: f64) -> f64 {
    (n2 * v2 - n1 * v1) / (n2 - n1)
}

/// Ordinary least-squares slope and intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Per-step exponential decay rate of a positive sequence that may oscillate.
///
/// Fits `log y` over the local maxima (the upper envelope); falls back to all
/// points when fewer than three maxima exist. Non-positive values are ignored.
pub fn envelope_decay_rate(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(_, y)| *y > 0.0).collect();
    if pts.len() < 2 {
        return None;
    }
    let mut peaks = Vec::new();
    for i in 0..pts.len() {
        let left = i == 0 || pts[i].1 >= pts[i - 1].1;
        let right = i + 1 == pts.len() || pts[i].1 >= pts[i + 1].1;
        if left && right {
            peaks.push(pts[i]);
        }
    }
    let use_pts = if peaks.len() >= 3 { peaks } else { pts };
    let x: Vec<f64> = use_pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = use_pts.iter().map(|p| p.1.ln()).collect();
    Some(linear_fit(&x, &y).0.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_integrates_to_one() {
        let s: f64 = (-400..=400).map(|i| normal_pdf(i as f64 * 0.05, 0.3, 1.7) * 0.05).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_is_exact_for_hyperbola() {
        let v = |n: f64| 2.5 + 7.0 / n;
        assert!((extrapolate_inverse_n(12.0, v(12.0), 24.0, v(24.0)) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn decay_of_oscillating_sequence() {
        let pts: Vec<(f64, f64)> =
            (10..60).map(|n| (n as f64, 0.6f64.powi(n) * (1.3 * n as f64).cos().abs())).collect();
        let r = envelope_decay_rate(&pts).unwrap();
        assert!((r / 0.6 - 1.0).abs() < 0.02, "{r}");
    }
}
