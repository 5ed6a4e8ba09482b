//! Round-trip and idempotence properties of the on-disk format.

use chrono::{DateTime, TimeZone, Utc};
use proptest::prelude::*;

use testage_core::ingest::{
    filter_allfail_sessions, map_outcomes, parse_creations, parse_executions, validate_dataset,
    write_creations_csv, write_executions_csv, CreationRecord, Dataset, ExecutionRecord, Outcome,
    OutcomeMapPolicy, TestCaseId,
};

fn ts(day: i64, secs: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
        + chrono::Duration::days(day)
        + chrono::Duration::seconds(secs as i64)
}

#[derive(Debug, Clone)]
struct Spec {
    creation_days: Vec<i64>,
    executions: Vec<(prop::sample::Index, i64, bool, bool)>,
}

fn arb_spec() -> impl Strategy<Value = Spec> {
    (
        prop::collection::vec(0i64..10, 1..=8),
        prop::collection::vec((any::<prop::sample::Index>(), 0i64..30, any::<bool>(), any::<bool>()), 1..50),
    )
        .prop_map(|(creation_days, executions)| Spec {
            creation_days,
            executions,
        })
}

fn build(spec: &Spec) -> Dataset {
    let n = spec.creation_days.len();
    let creations: Vec<CreationRecord> = spec
        .creation_days
        .iter()
        .enumerate()
        .map(|(i, &day)| CreationRecord {
            test_case: TestCaseId::new(format!("t{i}")).unwrap(),
            creation_time: ts(day, 60),
        })
        .collect();
    let executions: Vec<ExecutionRecord> = spec
        .executions
        .iter()
        .enumerate()
        .map(|(k, (idx, day, fail, with_session))| {
            let tc = idx.index(n);
            let day = (*day).max(spec.creation_days[tc]);
            ExecutionRecord {
                test_case: TestCaseId::new(format!("t{tc}")).unwrap(),
                execution_time: ts(day, 43_200 + k as u32),
                outcome: if *fail { Outcome::Fail } else { Outcome::Pass },
                session_start: with_session.then(|| ts(day, 43_000)),
                source_line: None,
            }
        })
        .collect();
    validate_dataset(creations, executions).unwrap().0
}

fn to_csv(dataset: &Dataset) -> (Vec<u8>, Vec<u8>) {
    let mut creations = Vec::new();
    write_creations_csv(&mut creations, dataset.creations()).unwrap();
    let mut executions = Vec::new();
    write_executions_csv(&mut executions, dataset.executions()).unwrap();
    (creations, executions)
}

fn from_csv(creations: &[u8], executions: &[u8]) -> Dataset {
    let parsed_creations = parse_creations(creations).unwrap();
    let raw = parse_executions(executions).unwrap();
    let (mapped, dropped) = map_outcomes(raw, &OutcomeMapPolicy::default());
    assert_eq!(dropped, 0, "canonical files only carry PASS/FAIL");
    validate_dataset(parsed_creations, mapped).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// parse(serialize(parse(file))) reproduces both the dataset and the
    /// bytes: the on-disk encoding is canonical.
    #[test]
    fn csv_round_trip_is_identity(spec in arb_spec()) {
        let original = build(&spec);
        let (creations_1, executions_1) = to_csv(&original);
        let parsed_1 = from_csv(&creations_1, &executions_1);
        let (creations_2, executions_2) = to_csv(&parsed_1);
        prop_assert_eq!(&creations_1, &creations_2);
        prop_assert_eq!(&executions_1, &executions_2);
        let parsed_2 = from_csv(&creations_2, &executions_2);
        // Interval bounds survive the trip.
        prop_assert_eq!(original.t1(), parsed_2.t1());
        prop_assert_eq!(original.t_m(), parsed_2.t_m());
        prop_assert_eq!(parsed_1, parsed_2);
    }

    /// Removing all-fail sessions twice is the same as removing them once.
    #[test]
    fn allfail_filter_is_idempotent(spec in arb_spec(), min_size in 1usize..4) {
        let dataset = build(&spec);
        let Ok((once, _)) = filter_allfail_sessions(dataset, min_size) else {
            // The filter may empty a dataset whose only executions sit in
            // all-fail sessions; nothing to check then.
            return Ok(());
        };
        let (twice, removed) = filter_allfail_sessions(once.clone(), min_size).unwrap();
        prop_assert_eq!(removed, 0);
        prop_assert_eq!(once, twice);
    }
}
