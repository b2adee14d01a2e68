use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Least-squares line through `(n, -ln cost)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Empirical exponent.
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; `NaN` with only two points.
    pub stderr: f64,
}

/// Fits `-ln(cost) = intercept + slope * n`.
pub fn estimate_exponent(points: &[(u32, f64)]) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(invalid(format!("exponent fit needs >= 2 points, got {}", points.len())));
    }
    if let Some(&(n, cost)) = points.iter().find(|(_, c)| !(*c > 0.0)) {
        return Err(Error::NonpositiveCost { n, cost });
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| f64::from(n)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, c)| -c.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("exponent fit needs at least two distinct block lengths"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let stderr = if points.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExponentFit { slope, intercept, stderr })
}

/// Upper end of the Wilson score interval for `failures / trials`.
pub fn wilson_upper(failures: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center + spread) / (1.0 + z2 / n)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_exponential() {
        let pts: Vec<(u32, f64)> = (1..=6).map(|n| (n * 4, (-0.7 * f64::from(n * 4)).exp())).collect();
        let fit = estimate_exponent(&pts).unwrap();
        assert_relative_eq!(fit.slope, 0.7, epsilon = 1e-12);
        assert!(fit.stderr.abs() < 1e-12);
        let scaled: Vec<(u32, f64)> = pts.iter().map(|&(n, c)| (n, 5.0 * c)).collect();
        let fit = estimate_exponent(&scaled).unwrap();
        assert_relative_eq!(fit.slope, 0.7, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, -5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_points_have_no_stderr() {
        let fit = estimate_exponent(&[(2, 1.0), (4, (-2.0f64).exp())]).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert!(fit.stderr.is_nan());
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            estimate_exponent(&[(2, 1.0), (3, 0.0)]),
            Err(Error::NonpositiveCost { n: 3, .. })
        ));
        assert!(estimate_exponent(&[(2, 1.0)]).is_err());
        assert!(estimate_exponent(&[(2, 1.0), (2, 0.5)]).is_err());
    }

    #[test]
    fn wilson_bounds() {
        assert_relative_eq!(wilson_upper(0, 100, Z95), Z95 * Z95 / (100.0 + Z95 * Z95), epsilon = 1e-15);
        let up = wilson_upper(10, 100, Z95);
        assert!(up > 0.1 && up < 0.2);
        assert_eq!(wilson_upper(5, 5, Z95), 1.0);
        assert_eq!(wilson_upper(0, 0, Z95), 1.0);
    }
}
