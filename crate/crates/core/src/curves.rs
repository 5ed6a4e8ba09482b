//! Age-relative activation and hazard (failure-rate) series.
//!
//! Counting is at the test-case level: a test case executing several times on
//! the same age-day counts once, and one failure among several same-day runs
//! marks the test case as failing at that age. The activation rate at age `t`
//! divides the number of test cases that execute at age `t` by the number of
//! test cases that ever reach age `t`; the hazard rate divides the number of
//! test cases failing at age `t` by the number executing at age `t`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::ingest::{Dataset, Outcome, TestCaseId};
use crate::lifespan::LifeSpan;

/// Which rate a series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Activation,
    Hazard,
}

/// One point of a rate series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    /// Age in days (or wall-clock day for wall-clock series).
    pub age_days: i64,
    pub numerator: usize,
    pub denominator: usize,
    pub rate: f64,
    /// Below the minimum-support threshold; excluded from smoothing and fits
    /// but retained for export.
    pub low_support: bool,
}

/// A rate series with strictly increasing ages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub kind: RateKind,
    pub points: Vec<RatePoint>,
    /// Threshold the `low_support` flags were computed against.
    pub min_support: usize,
}

impl RateSeries {
    /// Points that meet the support threshold.
    pub fn supported(&self) -> impl Iterator<Item = &RatePoint> {
        self.points.iter().filter(|p| !p.low_support)
    }

    /// `(x, y)` vectors of the supported points.
    pub fn supported_xy(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for p in self.supported() {
            xs.push(p.age_days as f64);
            ys.push(p.rate);
        }
        (xs, ys)
    }
}

fn make_point(age: i64, numerator: usize, denominator: usize, min_support: usize) -> RatePoint {
    debug_assert!(numerator <= denominator);
    RatePoint {
        age_days: age,
        numerator,
        denominator,
        rate: if denominator > 0 {
            numerator as f64 / denominator as f64
        } else {
            0.0
        },
        low_support: denominator < min_support,
    }
}

/// Per age: (#test cases executing, #test cases failing), counting each test
/// case at most once per age-day.
fn counts_per_age(dataset: &Dataset, lifespans: &[LifeSpan]) -> BTreeMap<i64, (usize, usize)> {
    let t0: HashMap<&TestCaseId, i64> = lifespans.iter().map(|ls| (&ls.test_case, ls.t0)).collect();
    let mut executed: BTreeSet<(&TestCaseId, i64)> = BTreeSet::new();
    let mut failed: BTreeSet<(&TestCaseId, i64)> = BTreeSet::new();
    for exec in dataset.executions() {
        let Some(&created) = t0.get(&exec.test_case) else {
            debug_assert!(false, "life spans must come from the same dataset");
            continue;
        };
        let age = dataset.day_of(exec.execution_time) - created;
        executed.insert((&exec.test_case, age));
        if exec.outcome == Outcome::Fail {
            failed.insert((&exec.test_case, age));
        }
    }
    let mut per_age: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for &(_, age) in &executed {
        per_age.entry(age).or_default().0 += 1;
    }
    for &(_, age) in &failed {
        per_age.entry(age).or_default().1 += 1;
    }
    per_age
}

/// Activation series: share of test cases old enough for age `t` that
/// actually execute at age `t`, for every age up to the maximum terminal age.
pub fn activation_series(dataset: &Dataset, lifespans: &[LifeSpan]) -> RateSeries {
    if lifespans.is_empty() {
        return RateSeries {
            kind: RateKind::Activation,
            points: Vec::new(),
            min_support: 1,
        };
    }
    let per_age = counts_per_age(dataset, lifespans);
    let max_age = lifespans
        .iter()
        .map(LifeSpan::terminal_age_days)
        .max()
        .unwrap();
    // Denominator at age t: how many terminal ages are >= t (suffix counts).
    let mut reaching = vec![0usize; max_age as usize + 2];
    for ls in lifespans {
        reaching[ls.terminal_age_days() as usize] += 1;
    }
    for t in (0..=max_age as usize).rev() {
        reaching[t] += reaching[t + 1];
    }
    let points = (0..=max_age)
        .map(|age| {
            let executing = per_age.get(&age).map_or(0, |&(e, _)| e);
            make_point(age, executing, reaching[age as usize], 1)
        })
        .collect();
    RateSeries {
        kind: RateKind::Activation,
        points,
        min_support: 1,
    }
}

/// Hazard series: share of the test cases executing at age `t` that fail at
/// age `t`. Ages at which nothing executes are omitted.
pub fn hazard_series(dataset: &Dataset, lifespans: &[LifeSpan]) -> RateSeries {
    let per_age = counts_per_age(dataset, lifespans);
    let points = per_age
        .into_iter()
        .filter(|&(_, (executing, _))| executing > 0)
        .map(|(age, (executing, failing))| make_point(age, failing, executing, 1))
        .collect();
    RateSeries {
        kind: RateKind::Hazard,
        points,
        min_support: 1,
    }
}

/// Re-flags every point against `min_support`. Raw counts are untouched.
pub fn apply_min_support(series: &RateSeries, min_support: usize) -> RateSeries {
    assert!(min_support >= 1, "support threshold must be at least 1");
    RateSeries {
        kind: series.kind,
        points: series
            .points
            .iter()
            .map(|p| RatePoint {
                low_support: p.denominator < min_support,
                ..*p
            })
            .collect(),
        min_support,
    }
}

/// The same counting rules on the wall-clock axis instead of the age axis.
/// For activation, the denominator is the number of test cases whose life
/// span covers the day.
pub fn wallclock_series(dataset: &Dataset, lifespans: &[LifeSpan], kind: RateKind) -> RateSeries {
    let t0: HashMap<&TestCaseId, i64> = lifespans.iter().map(|ls| (&ls.test_case, ls.t0)).collect();
    let mut executed: BTreeSet<(&TestCaseId, i64)> = BTreeSet::new();
    let mut failed: BTreeSet<(&TestCaseId, i64)> = BTreeSet::new();
    for exec in dataset.executions() {
        if !t0.contains_key(&exec.test_case) {
            continue;
        }
        let day = dataset.day_of(exec.execution_time);
        executed.insert((&exec.test_case, day));
        if exec.outcome == Outcome::Fail {
            failed.insert((&exec.test_case, day));
        }
    }
    let mut per_day: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for &(_, day) in &executed {
        per_day.entry(day).or_default().0 += 1;
    }
    for &(_, day) in &failed {
        per_day.entry(day).or_default().1 += 1;
    }

    let points = match kind {
        RateKind::Hazard => per_day
            .into_iter()
            .filter(|&(_, (executing, _))| executing > 0)
            .map(|(day, (executing, failing))| make_point(day, failing, executing, 1))
            .collect(),
        RateKind::Activation => {
            if lifespans.is_empty() {
                Vec::new()
            } else {
                let first = lifespans.iter().map(|ls| ls.t0).min().unwrap();
                let last = lifespans.iter().map(|ls| ls.t_omega).max().unwrap();
                (first..=last)
                    .filter_map(|day| {
                        let covering = lifespans
                            .iter()
                            .filter(|ls| ls.t0 <= day && day <= ls.t_omega)
                            .count();
                        if covering == 0 {
                            return None;
                        }
                        let executing = per_day.get(&day).map_or(0, |&(e, _)| e);
                        Some(make_point(day, executing, covering, 1))
                    })
                    .collect()
            }
        }
    };
    RateSeries {
        kind,
        points,
        min_support: 1,
    }
}

/// Writes a series in the export schema
/// `age_days,numerator,denominator,rate,low_support`.
pub fn write_series_csv<W: std::io::Write>(
    mut w: W,
    series: &RateSeries,
) -> crate::error::Result<()> {
    writeln!(w, "age_days,numerator,denominator,rate,low_support")?;
    for p in &series.points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.age_days, p.numerator, p.denominator, p.rate, p.low_support
        )?;
    }
    Ok(())
}

/// Aggregation mode for yearly failure rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum YearlyMode {
    /// Sum of failing test-case-days over executing test-case-days in the
    /// window. Robust to low-support days, so all points enter.
    Pooled,
    /// Unweighted mean of the supported daily hazard rates in the window.
    MeanOfDaily,
}

/// Failure rate over one year of test-case age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YearlyRate {
    /// Zero-based year: year `k` covers ages `[365k, 365(k+1))` days.
    pub year_index: usize,
    pub rate: f64,
}

/// Failure rate per year of age, from a hazard series. Years without data
/// (no executions in pooled mode, no supported days in mean-of-daily mode)
/// are absent from the result.
pub fn yearly_failure_rates(hazard: &RateSeries, mode: YearlyMode) -> Vec<YearlyRate> {
    debug_assert_eq!(hazard.kind, RateKind::Hazard);
    let mut out = Vec::new();
    let Some(max_age) = hazard.points.last().map(|p| p.age_days) else {
        return out;
    };
    let years = (max_age / 365) as usize + 1;
    for year_index in 0..years {
        let lo = year_index as i64 * 365;
        let hi = lo + 365;
        let window = hazard
            .points
            .iter()
            .filter(|p| p.age_days >= lo && p.age_days < hi);
        let rate = match mode {
            YearlyMode::Pooled => {
                let (num, den) = window.fold((0usize, 0usize), |(n, d), p| {
                    (n + p.numerator, d + p.denominator)
                });
                if den == 0 {
                    continue;
                }
                num as f64 / den as f64
            }
            YearlyMode::MeanOfDaily => {
                let rates: Vec<f64> = window
                    .filter(|p| !p.low_support)
                    .map(|p| p.rate)
                    .collect();
                if rates.is_empty() {
                    continue;
                }
                rates.iter().sum::<f64>() / rates.len() as f64
            }
        };
        out.push(YearlyRate { year_index, rate });
    }
    out
}
