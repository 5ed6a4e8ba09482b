//! Numeric building blocks: special functions and small least-squares solvers.
//!
//! Everything here is deliberately self-contained so that fitted statistics are
//! reproducible to the last bit across platforms. The special functions follow
//! the classical published algorithms (Lanczos log-gamma, continued-fraction
//! incomplete beta, Wichura's PPND16 normal quantile).

// Constants are kept digit-for-digit as published, and matrix kernels use
// index loops on purpose (rows are borrowed on both sides of the updates).
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Natural log of the gamma function, Lanczos approximation (g = 7).
///
/// Relative accuracy is around 1e-14 over the positive axis.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued-fraction evaluation (modified Lentz), switching tails at
/// `x = (a + 1) / (a + b + 2)` so the fraction always converges quickly.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "incomplete_beta requires a, b > 0");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom:
/// `P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if !t.is_finite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Standard normal quantile, Wichura's algorithm AS 241 (PPND16).
///
/// Accurate to roughly 1e-15 for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires 0 < p < 1");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_7e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103_8;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Solves the square system `m x = rhs` in place by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `rel_tol` times
/// the largest absolute entry of the original matrix (rank deficiency).
pub fn solve_linear(m: &mut [Vec<f64>], rhs: &mut [f64], rel_tol: f64) -> Option<Vec<f64>> {
    let n = rhs.len();
    debug_assert!(m.len() == n && m.iter().all(|r| r.len() == n));
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() <= rel_tol * scale {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..n {
                    m[row][k] -= factor * m[col][k];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Ordinary least squares solved through a Householder QR decomposition.
#[derive(Debug, Clone)]
pub struct OlsSolution {
    /// Estimated coefficients, one per design column.
    pub beta: Vec<f64>,
    /// Residual sum of squares.
    pub rss: f64,
    /// `(X^T X)^{-1}`, needed for coefficient covariance.
    pub xtx_inv: Vec<Vec<f64>>,
}

/// Least squares for `design * beta ~ y`, where `design` holds one row per
/// observation. Errors on a rank-deficient design.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<OlsSolution> {
    let n = design.len();
    debug_assert_eq!(n, y.len());
    let p = design.first().map_or(0, |r| r.len());
    if n < p || p == 0 {
        return Err(Error::Fit(format!(
            "need at least as many observations ({n}) as coefficients ({p})"
        )));
    }
    // Row-major working copy of the design, reduced in place.
    let mut a: Vec<f64> = Vec::with_capacity(n * p);
    for row in design {
        debug_assert_eq!(row.len(), p);
        a.extend_from_slice(row);
    }
    let mut qty = y.to_vec();
    let mut r_diag_max = 0.0f64;
    let mut r = vec![vec![0.0; p]; p];

    for k in 0..p {
        // Householder vector for column k, rows k..n.
        let mut norm = 0.0;
        for i in k..n {
            norm = f64::hypot(norm, a[i * p + k]);
        }
        if norm == 0.0 {
            return Err(Error::Fit("rank-deficient design matrix".into()));
        }
        let alpha = if a[k * p + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        v[0] = a[k * p + k] - alpha;
        for i in (k + 1)..n {
            v[i - k] = a[i * p + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            // Reflect remaining columns and the target vector.
            for col in k..p {
                let mut dot = 0.0;
                for i in k..n {
                    dot += v[i - k] * a[i * p + col];
                }
                let f = 2.0 * dot / vtv;
                for i in k..n {
                    a[i * p + col] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * qty[i];
            }
            let f = 2.0 * dot / vtv;
            for i in k..n {
                qty[i] -= f * v[i - k];
            }
        }
        for col in k..p {
            r[k][col] = a[k * p + col];
        }
        r_diag_max = r_diag_max.max(r[k][k].abs());
    }

    for k in 0..p {
        if r[k][k].abs() <= 1e-12 * r_diag_max {
            return Err(Error::Fit("rank-deficient design matrix".into()));
        }
    }

    // Back substitution for beta.
    let mut beta = vec![0.0; p];
    for row in (0..p).rev() {
        let mut acc = qty[row];
        for col in (row + 1)..p {
            acc -= r[row][col] * beta[col];
        }
        beta[row] = acc / r[row][row];
    }
    let rss: f64 = qty[p..].iter().map(|v| v * v).sum();

    // (X^T X)^{-1} = R^{-1} R^{-T}; invert the triangular factor first.
    let mut r_inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        let mut e = vec![0.0; p];
        e[col] = 1.0;
        for row in (0..=col).rev() {
            let mut acc = e[row];
            for k in (row + 1)..=col {
                acc -= r[row][k] * r_inv[k][col];
            }
            r_inv[row][col] = acc / r[row][row];
        }
    }
    let mut xtx_inv = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let mut acc = 0.0;
            for k in j.max(i)..p {
                acc += r_inv[i][k] * r_inv[j][k];
            }
            xtx_inv[i][j] = acc;
        }
    }

    Ok(OlsSolution { beta, rss, xtx_inv })
}
