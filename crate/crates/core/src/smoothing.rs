//! Locally weighted regression over a rate series, with pointwise
//! confidence bands.
//!
//! At every input age the k nearest points (k from the `span` fraction) are
//! fitted with a tricube-weighted local polynomial and evaluated at that age.
//! The band half-width at a query point is `z * sigma * ||l||`, where `l` is
//! the equivalent-kernel weight vector of the local fit (the fitted value is
//! `l . y`), `sigma^2` is the mean squared residual of the whole smooth and
//! `z` the normal quantile of the confidence level. The normal quantile is an
//! approximation to the usual t-based band; at realistic window sizes the
//! difference is negligible.

use serde::Serialize;

use crate::curves::RateSeries;
use crate::error::{Error, Result};
use crate::numeric::{normal_quantile, solve_linear};

/// Distance weighting for the local fits. `Uniform` exists as a diagnostic
/// hook: with a full-span uniform window the smooth collapses to the global
/// least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Tricube,
    Uniform,
}

/// Smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothConfig {
    /// Fraction of the points entering each local window, in (0, 1].
    pub span: f64,
    /// Local polynomial degree, 1 or 2.
    pub degree: usize,
    /// Confidence level of the band, in (0, 1).
    pub confidence: f64,
    pub kernel: Kernel,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            span: 0.15,
            degree: 1,
            confidence: 0.95,
            kernel: Kernel::Tricube,
        }
    }
}

impl SmoothConfig {
    fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span <= 1.0) {
            return Err(Error::Smooth(format!("span {} outside (0, 1]", self.span)));
        }
        if !(self.degree == 1 || self.degree == 2) {
            return Err(Error::Smooth(format!(
                "local degree {} unsupported (want 1 or 2)",
                self.degree
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Smooth(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Window size: at least degree + 2 points, otherwise `ceil(span * n)`.
    fn window_size(&self, n: usize) -> usize {
        let from_span = (self.span * n as f64).ceil() as usize;
        from_span.max(self.degree + 2).min(n)
    }
}

/// One smoothed point with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedPoint {
    pub age_days: f64,
    pub fitted: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// The smoothed curve, ordered by age.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothedCurve {
    pub points: Vec<SmoothedPoint>,
}

/// Smooths the supported points of a rate series.
pub fn smooth(series: &RateSeries, config: &SmoothConfig) -> Result<SmoothedCurve> {
    let (x, y) = series.supported_xy();
    smooth_xy(&x, &y, config)
}

/// Smooths arbitrary `(x, y)` data; `x` must be sorted ascending.
pub fn smooth_xy(x: &[f64], y: &[f64], config: &SmoothConfig) -> Result<SmoothedCurve> {
    config.validate()?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::Smooth("x and y lengths differ".into()));
    }
    if n < config.degree + 2 {
        return Err(Error::Smooth(format!(
            "need at least {} points, got {n}",
            config.degree + 2
        )));
    }
    if x.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Smooth("x values must be sorted ascending".into()));
    }

    let k = config.window_size(n);
    let mut fitted = Vec::with_capacity(n);
    let mut l2_norms = Vec::with_capacity(n);
    for q in 0..n {
        let (value, l2) = local_fit(x, y, q, k, config);
        fitted.push(value);
        l2_norms.push(l2);
    }

    let sigma2 = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi).powi(2))
        .sum::<f64>()
        / n as f64;
    let sigma = sigma2.sqrt();
    let z = normal_quantile((1.0 + config.confidence) / 2.0);

    let points = (0..n)
        .map(|i| {
            let half_width = z * sigma * l2_norms[i];
            SmoothedPoint {
                age_days: x[i],
                fitted: fitted[i],
                ci_low: fitted[i] - half_width,
                ci_high: fitted[i] + half_width,
            }
        })
        .collect();
    Ok(SmoothedCurve { points })
}

/// Writes a smoothed curve in the export schema
/// `age_days,fitted,ci_low,ci_high`.
pub fn write_curve_csv<W: std::io::Write>(mut w: W, curve: &SmoothedCurve) -> Result<()> {
    writeln!(w, "age_days,fitted,ci_low,ci_high")?;
    for p in &curve.points {
        writeln!(w, "{},{},{},{}", p.age_days, p.fitted, p.ci_low, p.ci_high)?;
    }
    Ok(())
}

/// Local weighted fit at query index `q`. Returns the fitted value and the
/// L2 norm of the equivalent-kernel weights.
fn local_fit(x: &[f64], y: &[f64], q: usize, k: usize, config: &SmoothConfig) -> (f64, f64) {
    let n = x.len();
    let x0 = x[q];

    // Nearest-k window around q: expand towards the closer neighbour,
    // preferring the smaller age on exact distance ties.
    let (mut lo, mut hi) = (q, q);
    while hi - lo + 1 < k {
        let can_left = lo > 0;
        let can_right = hi + 1 < n;
        let take_left = match (can_left, can_right) {
            (true, true) => (x0 - x[lo - 1]) <= (x[hi + 1] - x0),
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }

    let window_x = &x[lo..=hi];
    let window_y = &y[lo..=hi];
    let d_max = (x0 - window_x[0]).max(window_x[window_x.len() - 1] - x0);

    if d_max == 0.0 {
        // Every window point sits at the query position.
        return weighted_mean(window_y, &vec![1.0; window_y.len()]);
    }

    let weights: Vec<f64> = window_x
        .iter()
        .map(|&xi| match config.kernel {
            Kernel::Uniform => 1.0,
            Kernel::Tricube => {
                let u = (xi - x0).abs() / d_max;
                let t = 1.0 - u * u * u;
                t * t * t
            }
        })
        .collect();

    // Local polynomial in the scaled offset u = (x - x0) / d_max, so the
    // normal equations stay well conditioned; the intercept (the value at
    // u = 0) is unaffected by the scaling.
    let p = config.degree + 1;
    let mut moments = vec![0.0; 2 * p - 1];
    for (i, &w) in weights.iter().enumerate() {
        let u = (window_x[i] - x0) / d_max;
        let mut upow = 1.0;
        for m in moments.iter_mut() {
            *m += w * upow;
            upow *= u;
        }
    }
    let mut matrix: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| moments[a + b]).collect())
        .collect();
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;

    // v = M^{-1} e0 gives the equivalent kernel l_i = w_i * sum_k v_k u_i^k,
    // and the fitted value is l . y. The pivot threshold keeps the kernel
    // norm small enough that exact-line inputs reproduce to well below 1e-9;
    // windows whose effective support cannot carry the polynomial (the
    // kernel zeroes everything but the centre) land in the fallback instead.
    match solve_linear(&mut matrix, &mut e0, 1e-8) {
        Some(v) => {
            let mut value = 0.0;
            let mut norm2 = 0.0;
            for (i, &w) in weights.iter().enumerate() {
                let u = (window_x[i] - x0) / d_max;
                let mut basis = 0.0;
                let mut upow = 1.0;
                for &vk in &v {
                    basis += vk * upow;
                    upow *= u;
                }
                let l = w * basis;
                value += l * window_y[i];
                norm2 += l * l;
            }
            (value, norm2.sqrt())
        }
        // Not enough effectively weighted points for the polynomial (the
        // kernel zeroes the window boundary); fall back to the weighted mean.
        None => weighted_mean(window_y, &weights),
    }
}

fn weighted_mean(ys: &[f64], weights: &[f64]) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mut value = 0.0;
    let mut norm2 = 0.0;
    for (&y, &w) in ys.iter().zip(weights) {
        let l = w / total;
        value += l * y;
        norm2 += l * l;
    }
    (value, norm2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(span: f64, degree: usize) -> SmoothConfig {
        SmoothConfig {
            span,
            degree,
            ..SmoothConfig::default()
        }
    }

    #[test]
    fn reproduces_a_straight_line() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&xi| 0.3 - 0.002 * xi).collect();
        for span in [0.1, 0.3, 1.0] {
            let curve = smooth_xy(&x, &y, &config(span, 1)).unwrap();
            for (i, p) in curve.points.iter().enumerate() {
                assert!(
                    (p.fitted - y[i]).abs() < 1e-9,
                    "span {span}: x={} fitted {} want {}",
                    x[i],
                    p.fitted,
                    y[i]
                );
            }
        }
    }

    #[test]
    fn constant_series_has_zero_width_band() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y = vec![0.42; 20];
        let curve = smooth_xy(&x, &y, &config(0.5, 1)).unwrap();
        for p in &curve.points {
            assert!((p.fitted - 0.42).abs() < 1e-12);
            assert!((p.ci_high - p.ci_low).abs() < 1e-12);
        }
    }

    /// Independent oracle: direct normal-equation solve of the documented
    /// local fit (tricube over the k nearest, weighted mean when the system
    /// degenerates).
    fn hand_local_linear(x: &[f64], y: &[f64], x0: f64) -> f64 {
        let d_max = x
            .iter()
            .map(|xi| (xi - x0).abs())
            .fold(0.0f64, f64::max);
        let w: Vec<f64> = x
            .iter()
            .map(|xi| {
                let u = (xi - x0).abs() / d_max;
                (1.0 - u.powi(3)).powi(3)
            })
            .collect();
        let sw: f64 = w.iter().sum();
        let swx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
        let swxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
        let swy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
        let swxy: f64 = w
            .iter()
            .zip(x)
            .zip(y)
            .map(|((w, x), y)| w * x * y)
            .sum();
        let det = sw * swxx - swx * swx;
        if det.abs() < 1e-9 * sw * sw {
            return swy / sw;
        }
        let slope = (sw * swxy - swx * swy) / det;
        let intercept = (swy - slope * swx) / sw;
        intercept + slope * x0
    }

    #[test]
    fn three_point_window_matches_hand_solve() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 0.0];
        let curve = smooth_xy(&x, &y, &config(1.0, 1)).unwrap();
        for (i, p) in curve.points.iter().enumerate() {
            let want = hand_local_linear(&x, &y, x[i]);
            assert!(
                (p.fitted - want).abs() < 1e-12,
                "x0={}: fitted {} vs hand solve {}",
                x[i],
                p.fitted,
                want
            );
        }
        // The centre query degenerates to the weighted mean (the tricube
        // zeroes both edge points), which is the centre value itself.
        assert!((curve.points[1].fitted - 1.0).abs() < 1e-12);
        assert!((curve.points[0].fitted - 0.0).abs() < 1e-12);
        assert!((curve.points[2].fitted - 0.0).abs() < 1e-12);
    }

    #[test]
    fn five_point_interior_matches_hand_solve() {
        // Window with distinct distances, so the full weighted solve runs.
        let x = [0.0, 1.0, 3.0, 4.0, 7.0];
        let y = [0.1, 0.5, 0.2, 0.8, 0.4];
        let curve = smooth_xy(&x, &y, &config(1.0, 1)).unwrap();
        for (i, p) in curve.points.iter().enumerate() {
            let want = hand_local_linear(&x, &y, x[i]);
            assert!(
                (p.fitted - want).abs() < 1e-10,
                "x0={}: fitted {} vs hand solve {}",
                x[i],
                p.fitted,
                want
            );
        }
    }

    #[test]
    fn affine_equivariance() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&xi| (xi * 0.37).sin().abs() * 0.5).collect();
        let (a, b) = (2.5, -0.3);
        let y2: Vec<f64> = y.iter().map(|&v| a * v + b).collect();
        for degree in [1, 2] {
            let base = smooth_xy(&x, &y, &config(0.4, degree)).unwrap();
            let scaled = smooth_xy(&x, &y2, &config(0.4, degree)).unwrap();
            for (p, q) in base.points.iter().zip(&scaled.points) {
                assert!((a * p.fitted + b - q.fitted).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fitted_is_linear_in_y() {
        let x: Vec<f64> = (0..25).map(|i| i as f64 * 2.0).collect();
        let y1: Vec<f64> = x.iter().map(|&xi| (xi * 0.1).cos() * 0.3 + 0.4).collect();
        let y2: Vec<f64> = x.iter().map(|&xi| (xi * 0.05).sin() * 0.2).collect();
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let cfg = config(0.3, 1);
        let s1 = smooth_xy(&x, &y1, &cfg).unwrap();
        let s2 = smooth_xy(&x, &y2, &cfg).unwrap();
        let s12 = smooth_xy(&x, &sum, &cfg).unwrap();
        for i in 0..x.len() {
            assert!((s1.points[i].fitted + s2.points[i].fitted - s12.points[i].fitted).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_full_span_equals_global_least_squares() {
        use crate::regression::{fit_polynomial_xy, predict};
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&xi| 0.2 + 0.01 * xi + if (xi as usize).is_multiple_of(2) { 0.05 } else { -0.05 })
            .collect();
        let cfg = SmoothConfig {
            span: 1.0,
            degree: 1,
            kernel: Kernel::Uniform,
            ..SmoothConfig::default()
        };
        let curve = smooth_xy(&x, &y, &cfg).unwrap();
        let global = fit_polynomial_xy(&x, &y, 1).unwrap();
        for (i, p) in curve.points.iter().enumerate() {
            let want = predict(&global, x[i]);
            assert!(
                (p.fitted - want).abs() < 1e-9,
                "x={}: local {} vs global {}",
                x[i],
                p.fitted,
                want
            );
        }
    }

    #[test]
    fn too_few_points_errors() {
        let x = [0.0, 1.0];
        let y = [0.5, 0.6];
        assert!(smooth_xy(&x, &y, &config(1.0, 1)).is_err());
        let x3 = [0.0, 1.0, 2.0];
        let y3 = [0.5, 0.6, 0.7];
        assert!(smooth_xy(&x3, &y3, &config(1.0, 2)).is_err());
    }

    #[test]
    fn coincident_x_falls_back_to_mean() {
        let x = [5.0, 5.0, 5.0, 5.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        let curve = smooth_xy(&x, &y, &config(1.0, 1)).unwrap();
        for p in &curve.points {
            assert!((p.fitted - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn band_always_brackets_the_fit() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&xi| ((xi * 7.3).sin() * 0.5 + 0.5) * 0.3).collect();
        let curve = smooth_xy(&x, &y, &SmoothConfig::default()).unwrap();
        for p in &curve.points {
            assert!(p.ci_low <= p.fitted && p.fitted <= p.ci_high);
        }
    }

    #[test]
    fn rejects_unsorted_input() {
        let x = [0.0, 2.0, 1.0, 3.0];
        let y = [0.1, 0.2, 0.3, 0.4];
        assert!(smooth_xy(&x, &y, &config(1.0, 1)).is_err());
    }

    #[test]
    fn config_validation() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![0.5; 10];
        assert!(smooth_xy(&x, &y, &config(0.0, 1)).is_err());
        assert!(smooth_xy(&x, &y, &config(1.5, 1)).is_err());
        assert!(smooth_xy(&x, &y, &config(0.5, 3)).is_err());
        let bad_conf = SmoothConfig {
            confidence: 1.0,
            ..SmoothConfig::default()
        };
        assert!(smooth_xy(&x, &y, &bad_conf).is_err());
    }
}
