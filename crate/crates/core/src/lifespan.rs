//! Test-case life spans: death determination, ages, aliveness summaries,
//! age histograms and the wall-clock growth curve.
//!
//! All times here are whole-day indices (day 0 is the calendar date of the
//! earliest execution). A test case's terminal point is the day of its last
//! recorded execution; it is considered dead when the gap between that day
//! and the end of the observation interval exceeds the grace period, and
//! alive when the gap equals the grace period exactly.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{Dataset, TestCaseId};

/// Allowance, in whole days, after a test case's last execution before it is
/// declared dead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GracePeriod {
    days: i64,
}

impl GracePeriod {
    pub const DEFAULT_DAYS: i64 = 90;

    pub fn new(days: i64) -> Result<Self> {
        if days < 0 {
            return Err(Error::dataset("grace period must be non-negative"));
        }
        Ok(GracePeriod { days })
    }

    pub fn days(&self) -> i64 {
        self.days
    }
}

impl Default for GracePeriod {
    fn default() -> Self {
        GracePeriod {
            days: Self::DEFAULT_DAYS,
        }
    }
}

/// Life span of one test case, in day indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LifeSpan {
    pub test_case: TestCaseId,
    /// Creation day.
    pub t0: i64,
    /// Day of the last recorded execution.
    pub t_omega: i64,
    /// Dead under the grace period used for determination.
    pub dead: bool,
}

impl LifeSpan {
    /// Age at the end of the life span, in whole days.
    pub fn terminal_age_days(&self) -> i64 {
        self.t_omega - self.t0
    }

    /// Age at wall-clock day `t`: zero before creation, frozen at the
    /// terminal age afterwards.
    pub fn age_at(&self, t: i64) -> i64 {
        (t.min(self.t_omega) - self.t0).max(0)
    }
}

/// Aggregate aliveness statistics over a set of life spans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlivenessSummary {
    pub total: usize,
    pub dead: usize,
    pub dead_fraction: f64,
    pub mean_terminal_age_days: f64,
    pub sd_terminal_age_days: f64,
}

/// Determines each test case's life span and dead/alive verdict.
///
/// Returns the life spans sorted by test case name, plus the number of test
/// cases that had a creation record but no executions (they have no terminal
/// point and are excluded, with a warning tally).
///
/// Only execution *times* matter: relabelling outcomes never changes the
/// result.
pub fn determine_death(dataset: &Dataset, grace: GracePeriod) -> (Vec<LifeSpan>, usize) {
    let t_m_day = dataset.t_m_day();
    let mut last_exec_day: HashMap<&TestCaseId, i64> = HashMap::new();
    for exec in dataset.executions() {
        let day = dataset.day_of(exec.execution_time);
        last_exec_day
            .entry(&exec.test_case)
            .and_modify(|d| *d = (*d).max(day))
            .or_insert(day);
    }

    let mut spans = Vec::with_capacity(last_exec_day.len());
    let mut skipped_without_executions = 0;
    for creation in dataset.creations() {
        let Some(&t_omega) = last_exec_day.get(&creation.test_case) else {
            skipped_without_executions += 1;
            continue;
        };
        spans.push(LifeSpan {
            test_case: creation.test_case.clone(),
            t0: dataset.day_of(creation.creation_time),
            t_omega,
            dead: t_m_day - t_omega > grace.days(),
        });
    }
    (spans, skipped_without_executions)
}

/// Mean and sample standard deviation of terminal ages plus the dead fraction.
/// A single life span reports a standard deviation of zero.
pub fn aliveness_summary(lifespans: &[LifeSpan]) -> Result<AlivenessSummary> {
    if lifespans.is_empty() {
        return Err(Error::dataset("aliveness summary of an empty set"));
    }
    let total = lifespans.len();
    let dead = lifespans.iter().filter(|ls| ls.dead).count();
    let ages: Vec<f64> = lifespans
        .iter()
        .map(|ls| ls.terminal_age_days() as f64)
        .collect();
    let mean = ages.iter().sum::<f64>() / total as f64;
    let sd = if total > 1 {
        let var = ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (total - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    Ok(AlivenessSummary {
        total,
        dead,
        dead_fraction: dead as f64 / total as f64,
        mean_terminal_age_days: mean,
        sd_terminal_age_days: sd,
    })
}

/// Histogram of terminal ages. Bin `k` covers ages
/// `[k * width, (k + 1) * width)`; bins run contiguously from age 0 to the
/// maximum terminal age, so counts sum to the number of life spans.
pub fn age_distribution(lifespans: &[LifeSpan], bin_width_days: i64) -> Vec<(i64, usize)> {
    assert!(bin_width_days >= 1, "bin width must be at least one day");
    if lifespans.is_empty() {
        return Vec::new();
    }
    let max_age = lifespans
        .iter()
        .map(LifeSpan::terminal_age_days)
        .max()
        .unwrap();
    let bins = (max_age / bin_width_days) as usize + 1;
    let mut counts = vec![0usize; bins];
    for ls in lifespans {
        counts[(ls.terminal_age_days() / bin_width_days) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as i64 * bin_width_days, c))
        .collect()
}

/// Number of test cases present in the suite per wall-clock day.
///
/// A dead test case is present from its creation day through its last
/// execution day; an alive one is present through the end of the observation
/// interval. The curve covers `[earliest creation day, last execution day]`.
pub fn growth_curve(lifespans: &[LifeSpan]) -> Vec<(i64, usize)> {
    if lifespans.is_empty() {
        return Vec::new();
    }
    let first_day = lifespans.iter().map(|ls| ls.t0).min().unwrap();
    let t_m_day = lifespans.iter().map(|ls| ls.t_omega).max().unwrap();
    let len = (t_m_day - first_day + 1) as usize;
    // Difference array of entries and exits; each life span enters exactly once.
    let mut delta = vec![0i64; len + 1];
    for ls in lifespans {
        let enter = (ls.t0 - first_day) as usize;
        let last = if ls.dead { ls.t_omega } else { t_m_day };
        let exit = (last - first_day) as usize + 1;
        delta[enter] += 1;
        delta[exit] -= 1;
    }
    let mut out = Vec::with_capacity(len);
    let mut alive = 0i64;
    for (offset, d) in delta[..len].iter().enumerate() {
        alive += d;
        out.push((first_day + offset as i64, alive as usize));
    }
    out
}

/// Writes `(day, count)` pairs in the export schema `day,count`, used for
/// both the age histogram and the growth curve.
pub fn write_day_counts_csv<W: std::io::Write>(mut w: W, rows: &[(i64, usize)]) -> Result<()> {
    writeln!(w, "day,count")?;
    for (day, count) in rows {
        writeln!(w, "{day},{count}")?;
    }
    Ok(())
}
