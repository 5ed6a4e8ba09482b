//! Synthetic test-log generation from a parameterised ground-truth profile.
//!
//! Every estimator in the crate is validated against data from here: the
//! profile fixes an activation schedule (probability a test case runs on a
//! given age-day) and an age-dependent failure probability, the generator
//! rolls a seeded deterministic stream, and the resulting dataset carries its
//! analytic half-life alongside as ground truth.
//!
//! Draw order, fixed for reproducibility: for each test case in order, for
//! each day from its creation day to the horizon, one uniform draw decides
//! execution and, only if executed, a second draw decides the outcome.

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    validate_dataset, CreationRecord, Dataset, ExecutionRecord, Outcome, TestCaseId,
};
use crate::rng::Xoshiro256StarStar;

/// When test cases get created.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CreationSchedule {
    /// Test case `i` of `n` is created on day `floor(i * horizon / n)`.
    Uniform,
    /// Explicit batches; counts must sum to the number of test cases.
    Batches { batches: Vec<Batch> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub day: i64,
    pub count: usize,
}

/// Probability that a test case executes on a day, as a function of its age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ActivationProfile {
    Constant { p: f64 },
    /// Linear ramp from `from` at age 0 to `to` at age `over_days` and beyond.
    Ramp { from: f64, to: f64, over_days: i64 },
    /// `before` until `at_age` (exclusive), `after` from then on.
    Step { before: f64, after: f64, at_age: i64 },
}

impl ActivationProfile {
    pub fn rate_at(&self, age: i64) -> f64 {
        match *self {
            ActivationProfile::Constant { p } => p,
            ActivationProfile::Ramp { from, to, over_days } => {
                let frac = (age as f64 / over_days as f64).clamp(0.0, 1.0);
                from + (to - from) * frac
            }
            ActivationProfile::Step { before, after, at_age } => {
                if age < at_age {
                    before
                } else {
                    after
                }
            }
        }
    }
}

/// Probability that an executed test case fails, as a function of its age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HazardProfile {
    Constant { q: f64 },
    /// `max(0, initial - decay_per_day * age)`.
    LinearDecay { initial: f64, decay_per_day: f64 },
    /// `c0 + c1 * age + c2 * age^2`, unclamped.
    Quadratic { c0: f64, c1: f64, c2: f64 },
    /// `initial * exp(-rate * age)`.
    ExponentialDecay { initial: f64, rate: f64 },
    /// Piecewise bathtub: exponential decay from `infant` until `settle_age`,
    /// a constant plateau, then exponential growth from `wearout_age` on.
    Bathtub {
        infant: f64,
        decay_rate: f64,
        settle_age: i64,
        wearout_age: i64,
        wearout_rate: f64,
    },
}

impl HazardProfile {
    pub fn rate_at(&self, age: i64) -> f64 {
        let t = age as f64;
        match *self {
            HazardProfile::Constant { q } => q,
            HazardProfile::LinearDecay { initial, decay_per_day } => {
                (initial - decay_per_day * t).max(0.0)
            }
            HazardProfile::Quadratic { c0, c1, c2 } => c0 + c1 * t + c2 * t * t,
            HazardProfile::ExponentialDecay { initial, rate } => initial * (-rate * t).exp(),
            HazardProfile::Bathtub {
                infant,
                decay_rate,
                settle_age,
                wearout_age,
                wearout_rate,
            } => {
                let plateau = infant * (-decay_rate * settle_age as f64).exp();
                if age < settle_age {
                    infant * (-decay_rate * t).exp()
                } else if age < wearout_age {
                    plateau
                } else {
                    plateau * (wearout_rate * (t - wearout_age as f64)).exp()
                }
            }
        }
    }

    /// Smallest whole day at which the failure probability is at or below
    /// half its age-0 value; `None` if the function never halves (constant,
    /// zero at age 0, or not reached within `scan_max` days).
    ///
    /// Exponential and linear decay use their closed forms, nudged onto the
    /// grid so the bracketing `f(d) <= f(0)/2 < f(d-1)` holds exactly; the
    /// other families scan the grid.
    pub fn analytic_half_life(&self, scan_max: i64) -> Option<i64> {
        let initial = self.rate_at(0);
        if initial <= 0.0 {
            return None;
        }
        let threshold = initial / 2.0;
        let hint = match *self {
            HazardProfile::Constant { .. } => return None,
            HazardProfile::LinearDecay { initial, decay_per_day } => {
                if decay_per_day <= 0.0 {
                    return None;
                }
                (initial / (2.0 * decay_per_day)).ceil() as i64
            }
            HazardProfile::ExponentialDecay { rate, .. } => {
                if rate <= 0.0 {
                    return None;
                }
                (2.0f64.ln() / rate).ceil() as i64
            }
            HazardProfile::Quadratic { .. } | HazardProfile::Bathtub { .. } => 0,
        };
        // Walk from the closed-form hint (or zero) to the exact grid point.
        let mut d = hint.clamp(0, scan_max);
        while d > 0 && self.rate_at(d - 1) <= threshold {
            d -= 1;
        }
        while d <= scan_max && self.rate_at(d) > threshold {
            d += 1;
        }
        (d <= scan_max).then_some(d)
    }
}

/// Session labelling of generated executions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    /// All executions of one day share a nightly session label.
    Nightly,
    #[default]
    None,
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
}

/// Full generative specification of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProfile {
    pub n_test_cases: usize,
    /// Days of simulated history; age-days run from 0 to `horizon_days - 1`.
    pub horizon_days: i64,
    pub creation_schedule: CreationSchedule,
    pub activation: ActivationProfile,
    pub hazard: HazardProfile,
    #[serde(default)]
    pub session: SessionMode,
    pub seed: u64,
    /// Calendar date of day 0.
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
}

impl SynthProfile {
    pub fn validate(&self) -> Result<()> {
        if self.n_test_cases == 0 {
            return Err(Error::Profile("n_test_cases must be positive".into()));
        }
        if self.horizon_days < 1 {
            return Err(Error::Profile("horizon_days must be positive".into()));
        }
        if let CreationSchedule::Batches { batches } = &self.creation_schedule {
            let total: usize = batches.iter().map(|b| b.count).sum();
            if total != self.n_test_cases {
                return Err(Error::Profile(format!(
                    "batch counts sum to {total}, expected {}",
                    self.n_test_cases
                )));
            }
            for b in batches {
                if b.day < 0 || b.day >= self.horizon_days {
                    return Err(Error::Profile(format!(
                        "batch day {} outside [0, {})",
                        b.day, self.horizon_days
                    )));
                }
            }
        }
        if let ActivationProfile::Ramp { over_days, .. } = self.activation {
            if over_days < 1 {
                return Err(Error::Profile("ramp over_days must be positive".into()));
            }
        }
        if let HazardProfile::Bathtub {
            settle_age,
            wearout_age,
            ..
        } = self.hazard
        {
            if settle_age < 0 || wearout_age < settle_age {
                return Err(Error::Profile(
                    "bathtub needs 0 <= settle_age <= wearout_age".into(),
                ));
            }
        }
        for age in 0..=self.horizon_days {
            let p = self.activation.rate_at(age);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Profile(format!(
                    "activation probability {p} at age {age} outside [0, 1]"
                )));
            }
            let q = self.hazard.rate_at(age);
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Profile(format!(
                    "failure probability {q} at age {age} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Creation day of test case `i`.
    fn creation_day(&self, i: usize) -> i64 {
        match &self.creation_schedule {
            CreationSchedule::Uniform => {
                (i as i64 * self.horizon_days) / self.n_test_cases as i64
            }
            CreationSchedule::Batches { batches } => {
                let mut remaining = i;
                for b in batches {
                    if remaining < b.count {
                        return b.day;
                    }
                    remaining -= b.count;
                }
                unreachable!("validated batch counts cover every index")
            }
        }
    }
}

/// The profile plus everything an estimator test needs to check against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub profile: SynthProfile,
    pub analytic_half_life_days: Option<i64>,
}

/// Generates a validated dataset from the profile, fully deterministic for a
/// fixed seed.
///
/// Errors if the profile is invalid or if it produces zero executions (an
/// activation schedule of zero everywhere).
pub fn generate(profile: &SynthProfile) -> Result<(Dataset, GroundTruth)> {
    profile.validate()?;
    let base: DateTime<Utc> = Utc.from_utc_datetime(
        &profile
            .start_date
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists"),
    );
    let day = |d: i64| base + chrono::Duration::days(d);
    let width = profile.n_test_cases.to_string().len();

    let mut rng = Xoshiro256StarStar::from_seed(profile.seed);
    let mut creations = Vec::with_capacity(profile.n_test_cases);
    let mut executions = Vec::new();
    for i in 0..profile.n_test_cases {
        let test_case = TestCaseId::new(format!("tc-{:0width$}", i + 1))?;
        let created = profile.creation_day(i);
        creations.push(CreationRecord {
            test_case: test_case.clone(),
            creation_time: day(created),
        });
        for d in created..profile.horizon_days {
            let age = d - created;
            if rng.next_f64() >= profile.activation.rate_at(age) {
                continue;
            }
            let outcome = if rng.next_f64() < profile.hazard.rate_at(age) {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            let session_start = match profile.session {
                SessionMode::Nightly => Some(day(d) + chrono::Duration::minutes(110)),
                SessionMode::None => None,
            };
            executions.push(ExecutionRecord {
                test_case: test_case.clone(),
                execution_time: day(d) + chrono::Duration::hours(2),
                outcome,
                session_start,
                source_line: None,
            });
        }
    }

    let (dataset, report) = validate_dataset(creations, executions)?;
    debug_assert_eq!(report.pre_creation_rejected, 0);
    debug_assert_eq!(report.duplicates_removed, 0);
    let truth = GroundTruth {
        profile: profile.clone(),
        analytic_half_life_days: profile.hazard.analytic_half_life(20 * profile.horizon_days),
    };
    Ok((dataset, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{hazard_series, RateSeries};
    use crate::ingest::{write_creations_csv, write_executions_csv};
    use crate::lifespan::{determine_death, GracePeriod};

    fn base_profile() -> SynthProfile {
        SynthProfile {
            n_test_cases: 20,
            horizon_days: 60,
            creation_schedule: CreationSchedule::Uniform,
            activation: ActivationProfile::Constant { p: 0.8 },
            hazard: HazardProfile::Constant { q: 0.1 },
            session: SessionMode::Nightly,
            seed: 7,
            start_date: default_start_date(),
        }
    }

    fn hazard_of(dataset: &Dataset) -> RateSeries {
        let (spans, _) = determine_death(dataset, GracePeriod::default());
        hazard_series(dataset, &spans)
    }

    #[test]
    fn degenerate_profile_runs_daily_and_never_fails() {
        let profile = SynthProfile {
            activation: ActivationProfile::Constant { p: 1.0 },
            hazard: HazardProfile::Constant { q: 0.0 },
            creation_schedule: CreationSchedule::Batches {
                batches: vec![Batch { day: 0, count: 20 }],
            },
            ..base_profile()
        };
        let (dataset, _) = generate(&profile).unwrap();
        assert_eq!(dataset.executions().len(), 20 * 60);
        let hazard = hazard_of(&dataset);
        assert_eq!(hazard.points.len(), 60);
        assert!(hazard.points.iter().all(|p| p.rate == 0.0));
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let profile = base_profile();
        let (a, _) = generate(&profile).unwrap();
        let (b, _) = generate(&profile).unwrap();
        assert_eq!(a, b);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_executions_csv(&mut csv_a, a.executions()).unwrap();
        write_executions_csv(&mut csv_b, b.executions()).unwrap();
        assert_eq!(csv_a, csv_b);
        let mut cr_a = Vec::new();
        write_creations_csv(&mut cr_a, a.creations()).unwrap();
        assert!(!cr_a.is_empty());
    }

    #[test]
    fn different_seeds_differ() {
        let (a, _) = generate(&base_profile()).unwrap();
        let (b, _) = generate(&SynthProfile {
            seed: 8,
            ..base_profile()
        })
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn executions_never_precede_creation() {
        let (dataset, _) = generate(&base_profile()).unwrap();
        let created: std::collections::HashMap<_, _> = dataset
            .creations()
            .iter()
            .map(|c| (c.test_case.clone(), c.creation_time))
            .collect();
        for e in dataset.executions() {
            assert!(e.execution_time >= created[&e.test_case]);
        }
    }

    #[test]
    fn generated_data_validates_with_zero_warnings() {
        let (dataset, _) = generate(&base_profile()).unwrap();
        let (_, report) =
            validate_dataset(dataset.creations().to_vec(), dataset.executions().to_vec()).unwrap();
        assert_eq!(report.pre_creation_rejected, 0);
        assert_eq!(report.duplicates_removed, 0);
    }

    #[test]
    fn nightly_sessions_share_one_label_per_day() {
        let (dataset, _) = generate(&base_profile()).unwrap();
        let mut by_day: std::collections::HashMap<i64, std::collections::HashSet<_>> =
            std::collections::HashMap::new();
        for e in dataset.executions() {
            by_day
                .entry(dataset.day_of(e.execution_time))
                .or_default()
                .insert(e.session_start.unwrap());
        }
        assert!(by_day.values().all(|labels| labels.len() == 1));
    }

    #[test]
    fn uniform_schedule_spreads_creations() {
        let profile = SynthProfile {
            n_test_cases: 6,
            horizon_days: 30,
            ..base_profile()
        };
        let days: Vec<i64> = (0..6).map(|i| profile.creation_day(i)).collect();
        assert_eq!(days, vec![0, 5, 10, 15, 20, 25]);
    }

    #[test]
    fn quadratic_half_life_closed_form() {
        // 0.12 * (1 - t/800)^2 halves at ceil(800 * (1 - 1/sqrt(2))) = 235.
        let hazard = HazardProfile::Quadratic {
            c0: 0.12,
            c1: -0.0003,
            c2: 1.875e-7,
        };
        assert_eq!(hazard.analytic_half_life(10_000), Some(235));
    }

    #[test]
    fn half_life_closed_forms_match_a_grid_scan() {
        let cases = [
            HazardProfile::LinearDecay {
                initial: 0.2,
                decay_per_day: 0.0007,
            },
            HazardProfile::ExponentialDecay {
                initial: 0.3,
                rate: 0.013,
            },
        ];
        for hazard in cases {
            let got = hazard.analytic_half_life(10_000).unwrap();
            let scanned = (0..=10_000)
                .find(|&d| hazard.rate_at(d) <= hazard.rate_at(0) / 2.0)
                .unwrap();
            assert_eq!(got, scanned, "{hazard:?}");
            // Bracketing invariant.
            assert!(hazard.rate_at(got) <= hazard.rate_at(0) / 2.0);
            assert!(hazard.rate_at(got - 1) > hazard.rate_at(0) / 2.0);
        }
    }

    #[test]
    fn constant_hazard_has_no_half_life() {
        assert_eq!(
            HazardProfile::Constant { q: 0.2 }.analytic_half_life(100_000),
            None
        );
    }

    #[test]
    fn bathtub_shape() {
        let hazard = HazardProfile::Bathtub {
            infant: 0.3,
            decay_rate: 0.02,
            settle_age: 100,
            wearout_age: 300,
            wearout_rate: 0.01,
        };
        let plateau = 0.3 * (-0.02f64 * 100.0).exp();
        assert!((hazard.rate_at(0) - 0.3).abs() < 1e-12);
        assert!((hazard.rate_at(150) - plateau).abs() < 1e-12);
        assert!((hazard.rate_at(200) - plateau).abs() < 1e-12);
        assert!(hazard.rate_at(350) > plateau);
        // Continuous at the breakpoints.
        assert!((hazard.rate_at(99) - hazard.rate_at(100)).abs() < 0.01);
        assert!((hazard.rate_at(300) - plateau).abs() < 1e-12);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let out_of_range = SynthProfile {
            hazard: HazardProfile::Quadratic {
                c0: 1.5,
                c1: 0.0,
                c2: 0.0,
            },
            ..base_profile()
        };
        assert!(generate(&out_of_range).is_err());

        let bad_batches = SynthProfile {
            creation_schedule: CreationSchedule::Batches {
                batches: vec![Batch { day: 0, count: 3 }],
            },
            ..base_profile()
        };
        assert!(generate(&bad_batches).is_err());

        let escaping_ramp = SynthProfile {
            activation: ActivationProfile::Ramp {
                from: 0.5,
                to: 1.2,
                over_days: 30,
            },
            ..base_profile()
        };
        assert!(generate(&escaping_ramp).is_err());
    }

    #[test]
    fn profile_json_round_trip() {
        let json = r#"{
            "n_test_cases": 50,
            "horizon_days": 90,
            "creation_schedule": {"kind": "batches", "batches": [{"day": 0, "count": 30}, {"day": 10, "count": 20}]},
            "activation": {"kind": "ramp", "from": 0.2, "to": 0.9, "over_days": 30},
            "hazard": {"kind": "exponential_decay", "initial": 0.25, "rate": 0.01},
            "session": "nightly",
            "seed": 99
        }"#;
        let profile: SynthProfile = serde_json::from_str(json).unwrap();
        assert_eq!(profile.start_date, default_start_date());
        let round: SynthProfile =
            serde_json::from_str(&serde_json::to_string(&profile).unwrap()).unwrap();
        assert_eq!(profile, round);
        generate(&profile).unwrap();
    }

    #[test]
    fn empirical_hazard_concentrates_around_truth() {
        // Binomial sanity check: at every age with at least 100 executing
        // test cases, the empirical rate sits within three standard errors of
        // the profile value. Seed pinned; at ~0.3% tail mass per age a free
        // seed would fail occasionally by design.
        let profile = SynthProfile {
            n_test_cases: 1000,
            horizon_days: 200,
            creation_schedule: CreationSchedule::Batches {
                batches: vec![Batch {
                    day: 0,
                    count: 1000,
                }],
            },
            activation: ActivationProfile::Constant { p: 0.8 },
            hazard: HazardProfile::ExponentialDecay {
                initial: 0.2,
                rate: 0.005,
            },
            session: SessionMode::None,
            seed: 20200101,
            start_date: default_start_date(),
        };
        let (dataset, truth) = generate(&profile).unwrap();
        let hazard = hazard_of(&dataset);
        for p in &hazard.points {
            if p.denominator < 100 {
                continue;
            }
            let q = truth.profile.hazard.rate_at(p.age_days);
            let sigma = (q * (1.0 - q) / p.denominator as f64).sqrt();
            assert!(
                (p.rate - q).abs() <= 3.0 * sigma,
                "age {}: empirical {} vs truth {} (3 sigma = {})",
                p.age_days,
                p.rate,
                q,
                3.0 * sigma
            );
        }
    }
}
