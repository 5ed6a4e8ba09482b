//! Decay-model fitting over hazard series and half-life estimation.
//!
//! Polynomials of degree 1 to 3 are fitted by least squares on a centred and
//! scaled age axis (raw powers of thousands of days make the normal equations
//! hopeless for cubics) and the coefficients are mapped back to the raw-age
//! basis. The exponential family `a * exp(b t)` is fitted log-linearly.
//! Rates are handled as fractions in [0, 1] throughout; percent is purely a
//! presentation option.

use serde::Serialize;

use crate::curves::RateSeries;
use crate::error::{Error, Result};
use crate::numeric::{least_squares, student_t_two_sided_p};

/// Coefficients with `p >= this` are flagged as weakly determined in reports.
pub const P_VALUE_FLAG_THRESHOLD: f64 = 1e-10;

/// Model family of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelFamily {
    Polynomial { degree: usize },
    Exponential,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Polynomial { degree: 1 } => "linear",
            ModelFamily::Polynomial { degree: 2 } => "quadratic",
            ModelFamily::Polynomial { degree: 3 } => "cubic",
            ModelFamily::Polynomial { .. } => "polynomial",
            ModelFamily::Exponential => "exponential",
        }
    }
}

/// Inference statistics for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientStat {
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

/// A fitted decay model.
///
/// For polynomials, `coefficients` holds the constant term first, each in
/// rate-fraction units per day^k, and `coefficient_stats` describes exactly
/// those coefficients. For the exponential `a * exp(b t)`, `coefficients` is
/// `[a, b]` while `coefficient_stats` (and `residual_std_error`) describe the
/// underlying log-scale linear fit `[ln a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitModel {
    pub family: ModelFamily,
    pub coefficients: Vec<f64>,
    /// Number of points that entered the fit.
    pub n: usize,
    /// `sqrt(RSS / (n - p))`; log-scale for the exponential family.
    pub residual_std_error: f64,
    pub coefficient_stats: Vec<CoefficientStat>,
    /// Points excluded before fitting (zero rates, exponential family only).
    pub n_excluded: usize,
}

impl FitModel {
    /// Residual sum of squares implied by the stored residual standard error.
    pub fn rss(&self) -> f64 {
        let p = self.coefficient_stats.len();
        self.residual_std_error.powi(2) * (self.n - p) as f64
    }

    /// Human-readable model formula; with `percent` the rate scale is
    /// multiplied by 100. Coefficients are shown at 12 significant digits to
    /// hide binary float artifacts of the scaling.
    pub fn formula(&self, percent: bool) -> String {
        let scale = if percent { 100.0 } else { 1.0 };
        match self.family {
            ModelFamily::Polynomial { .. } => {
                let mut out = String::new();
                for (k, &c) in self.coefficients.iter().enumerate() {
                    let c = round_sig(c * scale, 12);
                    if k == 0 {
                        out.push_str(&format!("{c}"));
                    } else {
                        out.push_str(if c < 0.0 { " - " } else { " + " });
                        let abs = c.abs();
                        if k == 1 {
                            out.push_str(&format!("{abs}*t"));
                        } else {
                            out.push_str(&format!("{abs}*t^{k}"));
                        }
                    }
                }
                out
            }
            ModelFamily::Exponential => {
                let a = round_sig(self.coefficients[0] * scale, 12);
                let b = round_sig(self.coefficients[1], 12);
                format!("{a}*exp({b}*t)")
            }
        }
    }
}

/// Model value at age `t` (days). Polynomial: `sum c_k t^k`; exponential:
/// `a * exp(b t)`. The raw value is returned; clamping to zero happens only
/// on the half-life grid, where it cannot change the scan result.
pub fn predict(model: &FitModel, t: f64) -> f64 {
    match model.family {
        ModelFamily::Polynomial { .. } => {
            // Horner evaluation from the highest power down.
            let mut acc = 0.0;
            for &c in model.coefficients.iter().rev() {
                acc = acc * t + c;
            }
            acc
        }
        ModelFamily::Exponential => model.coefficients[0] * (model.coefficients[1] * t).exp(),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let magnitude = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (v * factor).round() / factor
}

/// Least-squares polynomial fit on raw `(x, y)` points.
pub fn fit_polynomial_xy(xs: &[f64], ys: &[f64], degree: usize) -> Result<FitModel> {
    if !(1..=3).contains(&degree) {
        return Err(Error::Fit(format!("polynomial degree {degree} not in 1..=3")));
    }
    let n = xs.len();
    let p = degree + 1;
    if n <= p {
        return Err(Error::Fit(format!(
            "degree {degree} needs more than {p} points, got {n}"
        )));
    }
    debug_assert_eq!(n, ys.len());

    // Centre and scale the age axis before building the design.
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::Fit("all ages identical; design is rank-deficient".into()));
    }
    let design: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let z = (x - mean) / sd;
            let mut row = Vec::with_capacity(p);
            let mut zpow = 1.0;
            for _ in 0..p {
                row.push(zpow);
                zpow *= z;
            }
            row
        })
        .collect();
    let sol = least_squares(&design, ys)?;

    let dof = (n - p) as f64;
    let sigma2 = sol.rss / dof;
    let residual_std_error = sigma2.sqrt();

    // Basis change back to raw ages: raw_j = sum_k A[j][k] * scaled_k with
    // A[j][k] = C(k, j) (-mean)^(k-j) / sd^k.
    let mut a = vec![vec![0.0; p]; p];
    for (j, row) in a.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate().skip(j) {
            *cell = binomial(k, j) * (-mean).powi((k - j) as i32) / sd.powi(k as i32);
        }
    }
    let coefficients: Vec<f64> = (0..p)
        .map(|j| (0..p).map(|k| a[j][k] * sol.beta[k]).sum())
        .collect();
    // cov_raw = A (sigma^2 (X^T X)^{-1}) A^T.
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for r in 0..p {
                for c in 0..p {
                    acc += a[i][r] * sol.xtx_inv[r][c] * a[j][c];
                }
            }
            cov[i][j] = sigma2 * acc;
        }
    }
    let coefficient_stats = coefficients
        .iter()
        .enumerate()
        .map(|(j, &est)| {
            let std_error = cov[j][j].sqrt();
            let t_value = est / std_error;
            CoefficientStat {
                estimate: est,
                std_error,
                t_value,
                p_value: student_t_two_sided_p(t_value, dof),
            }
        })
        .collect();

    Ok(FitModel {
        family: ModelFamily::Polynomial { degree },
        coefficients,
        n,
        residual_std_error,
        coefficient_stats,
        n_excluded: 0,
    })
}

/// Polynomial fit over the supported points of a rate series.
pub fn fit_polynomial(series: &RateSeries, degree: usize) -> Result<FitModel> {
    let (x, y) = series.supported_xy();
    fit_polynomial_xy(&x, &y, degree)
}

/// Log-linear fit of `a * exp(b t)` on raw points. Only strictly positive
/// rates enter; the number excluded is reported on the model.
pub fn fit_exponential_xy(xs: &[f64], ys: &[f64]) -> Result<FitModel> {
    debug_assert_eq!(xs.len(), ys.len());
    let mut kept_x = Vec::with_capacity(xs.len());
    let mut log_y = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if y > 0.0 {
            kept_x.push(x);
            log_y.push(y.ln());
        }
    }
    let n_excluded = xs.len() - kept_x.len();
    if kept_x.len() < 3 {
        return Err(Error::Fit(format!(
            "exponential fit needs at least 3 strictly positive points, got {}",
            kept_x.len()
        )));
    }
    let log_fit = fit_polynomial_xy(&kept_x, &log_y, 1)?;
    Ok(FitModel {
        family: ModelFamily::Exponential,
        coefficients: vec![log_fit.coefficients[0].exp(), log_fit.coefficients[1]],
        n: kept_x.len(),
        residual_std_error: log_fit.residual_std_error,
        coefficient_stats: log_fit.coefficient_stats,
        n_excluded,
    })
}

/// Exponential fit over the supported points of a rate series.
pub fn fit_exponential(series: &RateSeries) -> Result<FitModel> {
    let (x, y) = series.supported_xy();
    fit_exponential_xy(&x, &y)
}

/// Half-life of a fitted model found on the integer-day grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfLife {
    /// Smallest grid day at which the model is at or below half its age-0
    /// value.
    pub days: i64,
    /// `days / 30`.
    pub months: f64,
    /// Model value at age 0.
    pub initial_rate: f64,
    pub grid_max: i64,
}

/// Result of a half-life scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum HalfLifeOutcome {
    Reached(HalfLife),
    /// The model never dropped to half its initial value on the grid.
    NotReached { grid_max: i64 },
}

/// Scans `0..=grid_max` for the first day at which the model's predicted
/// value falls to half its age-0 value. Errors when the model is not
/// positive at age 0 (no half to fall to).
pub fn half_life(model: &FitModel, grid_max: i64) -> Result<HalfLifeOutcome> {
    let initial = predict(model, 0.0);
    if initial <= 0.0 {
        return Err(Error::Fit(format!(
            "half-life undefined: model value at age 0 is {initial}"
        )));
    }
    let threshold = initial / 2.0;
    for d in 0..=grid_max {
        if predict(model, d as f64).max(0.0) <= threshold {
            return Ok(HalfLifeOutcome::Reached(HalfLife {
                days: d,
                months: d as f64 / 30.0,
                initial_rate: initial,
                grid_max,
            }));
        }
    }
    Ok(HalfLifeOutcome::NotReached { grid_max })
}

/// One row of a model-comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReportEntry {
    pub model: FitModel,
    /// `None` when the fitted model is non-positive at age 0, which leaves
    /// the half-life undefined.
    pub half_life: Option<HalfLifeOutcome>,
    /// Indices of coefficients with `p_value >= threshold`.
    pub weak_coefficients: Vec<usize>,
}

/// Fits every requested family and reports half-lives and weakly determined
/// coefficients. Fit errors propagate; an empty family list yields an empty
/// report.
pub fn fit_report(
    series: &RateSeries,
    families: &[ModelFamily],
    grid_max: i64,
    p_threshold: f64,
) -> Result<Vec<FitReportEntry>> {
    let mut out = Vec::with_capacity(families.len());
    for family in families {
        let model = match family {
            ModelFamily::Polynomial { degree } => fit_polynomial(series, *degree)?,
            ModelFamily::Exponential => fit_exponential(series)?,
        };
        let half_life = half_life(&model, grid_max).ok();
        let weak_coefficients = model
            .coefficient_stats
            .iter()
            .enumerate()
            .filter(|(_, s)| s.p_value >= p_threshold)
            .map(|(i, _)| i)
            .collect();
        out.push(FitReportEntry {
            model,
            half_life,
            weak_coefficients,
        });
    }
    Ok(out)
}
