//! Builders shared by unit tests.

use chrono::{DateTime, TimeZone, Utc};

use crate::ingest::{
    validate_dataset, CreationRecord, Dataset, ExecutionRecord, Outcome, TestCaseId,
};

pub(crate) fn day(d: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 12, 0, 0).unwrap() + chrono::Duration::days(d)
}

pub(crate) fn creation(tc: &str, d: i64) -> CreationRecord {
    CreationRecord {
        test_case: TestCaseId::new(tc).unwrap(),
        creation_time: day(d) - chrono::Duration::hours(2),
    }
}

pub(crate) fn exec(tc: &str, d: i64, outcome: Outcome) -> ExecutionRecord {
    ExecutionRecord {
        test_case: TestCaseId::new(tc).unwrap(),
        execution_time: day(d),
        outcome,
        session_start: None,
        source_line: None,
    }
}

/// Two test cases over four days: c1 created day 0, runs on days 0 (pass),
/// 1 (fail), 2 (pass); c2 created day 1, runs on days 1 (fail), 3 (fail).
pub(crate) fn two_case_dataset() -> Dataset {
    let creations = vec![creation("c1", 0), creation("c2", 1)];
    let executions = vec![
        exec("c1", 0, Outcome::Pass),
        exec("c1", 1, Outcome::Fail),
        exec("c1", 2, Outcome::Pass),
        exec("c2", 1, Outcome::Fail),
        exec("c2", 3, Outcome::Fail),
    ];
    validate_dataset(creations, executions).unwrap().0
}
