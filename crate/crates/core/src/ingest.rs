//! Ingestion of test logs: parsing, outcome mapping, validation, pre-filters.
//!
//! The input is two CSV tables. `creations.csv` (`test_case,creation_time`)
//! records when each test case entered the suite; `executions.csv`
//! (`test_case,execution_time,outcome,session_start`) records every run with
//! its outcome and an optional session label. Timestamps are ISO-8601 with an
//! explicit offset or a trailing `Z` and are normalised to UTC at second
//! resolution.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Timelike, Utc};

use crate::error::{Error, Result};

/// Identifier of a test case, unique within a dataset's creation table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TestCaseId(String);

impl TestCaseId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::dataset("test case name must not be empty"));
        }
        Ok(TestCaseId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TestCaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Execution outcome after mapping. Nothing else survives ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
        })
    }
}

/// When a test case was added to the suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreationRecord {
    pub test_case: TestCaseId,
    pub creation_time: DateTime<Utc>,
}

/// One execution row as parsed, before outcome mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExecutionRow {
    pub test_case: TestCaseId,
    pub execution_time: DateTime<Utc>,
    /// Outcome label exactly as found in the input.
    pub raw_outcome: String,
    pub session_start: Option<DateTime<Utc>>,
    /// 1-based line number in the source file, for diagnostics.
    pub line: u64,
}

/// One validated execution with a PASS/FAIL outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionRecord {
    pub test_case: TestCaseId,
    pub execution_time: DateTime<Utc>,
    pub outcome: Outcome,
    /// Session label: executions sharing this timestamp ran against the same
    /// system version. Treated as opaque; no ordering against
    /// `execution_time` is assumed.
    pub session_start: Option<DateTime<Utc>>,
    /// Source line for diagnostics; `None` for generated records.
    pub source_line: Option<u64>,
}

/// What to do with a raw outcome label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeAction {
    Pass,
    Fail,
    Drop,
}

impl OutcomeAction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PASS" => Ok(OutcomeAction::Pass),
            "FAIL" => Ok(OutcomeAction::Fail),
            "DROP" => Ok(OutcomeAction::Drop),
            other => Err(Error::dataset(format!(
                "unknown outcome action {other:?}, expected PASS, FAIL or DROP"
            ))),
        }
    }
}

/// Case-insensitive mapping from raw outcome labels to PASS/FAIL/DROP.
///
/// Defaults: `pass` maps to PASS, `fail` and `failed` map to FAIL, everything
/// else is dropped (and counted).
#[derive(Debug, Clone)]
pub struct OutcomeMapPolicy {
    rules: HashMap<String, OutcomeAction>,
}

impl Default for OutcomeMapPolicy {
    fn default() -> Self {
        let mut rules = HashMap::new();
        rules.insert("pass".to_string(), OutcomeAction::Pass);
        rules.insert("fail".to_string(), OutcomeAction::Fail);
        rules.insert("failed".to_string(), OutcomeAction::Fail);
        OutcomeMapPolicy { rules }
    }
}

impl OutcomeMapPolicy {
    /// Adds or overrides a rule for `label` (matched case-insensitively).
    pub fn set(&mut self, label: &str, action: OutcomeAction) {
        self.rules.insert(label.to_lowercase(), action);
    }

    /// Parses a `label=ACTION` rule as given on the command line.
    pub fn add_rule(&mut self, rule: &str) -> Result<()> {
        let (label, action) = rule
            .split_once('=')
            .ok_or_else(|| Error::dataset(format!("bad outcome rule {rule:?}, want label=ACTION")))?;
        if label.is_empty() {
            return Err(Error::dataset(format!("bad outcome rule {rule:?}: empty label")));
        }
        self.set(label, OutcomeAction::parse(action)?);
        Ok(())
    }

    /// Loads rules from a text stream, one `label=ACTION` per line. Blank
    /// lines and `#` comments are skipped.
    pub fn load<R: Read>(&mut self, mut reader: R) -> Result<()> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.add_rule(line)?;
        }
        Ok(())
    }

    pub fn action_for(&self, label: &str) -> OutcomeAction {
        self.rules
            .get(&label.to_lowercase())
            .copied()
            .unwrap_or(OutcomeAction::Drop)
    }
}

/// How to reconcile execution data with the creation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferMode {
    /// Every executed test case must have an explicit creation record.
    Strict,
    /// Fill in missing creation records with the first registered run.
    InferMissing,
    /// Override every creation time with the first registered run.
    InferAll,
}

/// Tallies of records rejected or repaired during validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// Executions rejected because they predate their test case's creation.
    pub pre_creation_rejected: usize,
    /// Exact duplicate execution rows removed.
    pub duplicates_removed: usize,
    /// Human-readable warnings, one per rejected or repaired record.
    pub messages: Vec<String>,
}

/// A validated test log: creation and execution tables plus the execution
/// interval bounds. Immutable once built, so it is safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    creations: Vec<CreationRecord>,
    executions: Vec<ExecutionRecord>,
    t1: DateTime<Utc>,
    t_m: DateTime<Utc>,
    time_step_days: i64,
}

impl Dataset {
    /// Validates raw tables into a dataset. See [`validate_dataset`].
    pub fn new(
        creations: Vec<CreationRecord>,
        executions: Vec<ExecutionRecord>,
    ) -> Result<(Dataset, ValidationReport)> {
        validate_dataset(creations, executions)
    }

    /// Creation records, sorted by test case name.
    pub fn creations(&self) -> &[CreationRecord] {
        &self.creations
    }

    /// Executions, sorted by `(test_case, execution_time)`.
    pub fn executions(&self) -> &[ExecutionRecord] {
        &self.executions
    }

    /// Earliest execution time.
    pub fn t1(&self) -> DateTime<Utc> {
        self.t1
    }

    /// Latest execution time.
    pub fn t_m(&self) -> DateTime<Utc> {
        self.t_m
    }

    /// Analysis time step in days (1 by default).
    pub fn time_step_days(&self) -> i64 {
        self.time_step_days
    }

    /// Day index of a timestamp. Day 0 is the UTC calendar date of the
    /// earliest execution; indices before it are negative.
    pub fn day_of(&self, ts: DateTime<Utc>) -> i64 {
        let days = (ts.date_naive() - self.t1.date_naive()).num_days();
        days.div_euclid(self.time_step_days)
    }

    /// Day index of the latest execution.
    pub fn t_m_day(&self) -> i64 {
        self.day_of(self.t_m)
    }
}

fn parse_timestamp(raw: &str, line: u64, field: &str) -> Result<DateTime<Utc>> {
    let parsed = DateTime::parse_from_rfc3339(raw.trim())
        .map_err(|e| Error::row(line, format!("bad {field} timestamp {raw:?}: {e}")))?;
    // Normalise to UTC at second resolution.
    Ok(parsed.with_timezone(&Utc).with_nanosecond(0).unwrap())
}

/// Canonical timestamp rendering: RFC 3339 at second precision, `Z` suffix.
pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses the creation table. One record per data row; duplicate test case
/// names are a dataset error.
pub fn parse_creations<R: Read>(reader: R) -> Result<Vec<CreationRecord>> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let name = record
            .get(0)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::row(line, "missing test case name"))?;
        let raw_time = record
            .get(1)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::row(line, "missing creation_time"))?;
        let test_case = TestCaseId::new(name)?;
        if !seen.insert(test_case.clone()) {
            return Err(Error::dataset(format!(
                "duplicate test case {name:?} in creation table"
            )));
        }
        out.push(CreationRecord {
            test_case,
            creation_time: parse_timestamp(raw_time, line, "creation_time")?,
        });
    }
    Ok(out)
}

/// Parses the execution table, preserving raw outcome labels for
/// [`map_outcomes`]. The session column is optional.
pub fn parse_executions<R: Read>(reader: R) -> Result<Vec<RawExecutionRow>> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let name = record
            .get(0)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::row(line, "missing test case name"))?;
        let raw_time = record
            .get(1)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::row(line, "missing execution_time"))?;
        let raw_outcome = record
            .get(2)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::row(line, "missing outcome"))?;
        let session_start = match record.get(3).map(str::trim) {
            None | Some("") => None,
            Some(raw) => Some(parse_timestamp(raw, line, "session_start")?),
        };
        out.push(RawExecutionRow {
            test_case: TestCaseId::new(name)?,
            execution_time: parse_timestamp(raw_time, line, "execution_time")?,
            raw_outcome: raw_outcome.to_string(),
            session_start,
            line,
        });
    }
    Ok(out)
}

/// Maps raw outcome labels to PASS/FAIL and drops the rest, returning the
/// surviving records and the number of dropped rows.
pub fn map_outcomes(
    rows: Vec<RawExecutionRow>,
    policy: &OutcomeMapPolicy,
) -> (Vec<ExecutionRecord>, usize) {
    let mut out = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for row in rows {
        let outcome = match policy.action_for(&row.raw_outcome) {
            OutcomeAction::Pass => Outcome::Pass,
            OutcomeAction::Fail => Outcome::Fail,
            OutcomeAction::Drop => {
                dropped += 1;
                continue;
            }
        };
        out.push(ExecutionRecord {
            test_case: row.test_case,
            execution_time: row.execution_time,
            outcome,
            session_start: row.session_start,
            source_line: Some(row.line),
        });
    }
    (out, dropped)
}

/// Reconciles creation records with execution data.
///
/// In `InferMissing` and `InferAll` modes, an inferred creation time is the
/// test case's first registered run. `Strict` errors on any executed test
/// case that lacks an explicit creation record.
pub fn infer_creations(
    executions: &[ExecutionRecord],
    creations: &[CreationRecord],
    mode: InferMode,
) -> Result<Vec<CreationRecord>> {
    let mut first_run: BTreeMap<&TestCaseId, DateTime<Utc>> = BTreeMap::new();
    for exec in executions {
        first_run
            .entry(&exec.test_case)
            .and_modify(|t| *t = (*t).min(exec.execution_time))
            .or_insert(exec.execution_time);
    }
    let known: HashSet<&TestCaseId> = creations.iter().map(|c| &c.test_case).collect();

    match mode {
        InferMode::Strict => {
            for tc in first_run.keys() {
                if !known.contains(tc) {
                    return Err(Error::dataset(format!(
                        "test case {tc} has executions but no creation record"
                    )));
                }
            }
            Ok(creations.to_vec())
        }
        InferMode::InferMissing => {
            let mut out = creations.to_vec();
            for (tc, first) in &first_run {
                if !known.contains(*tc) {
                    out.push(CreationRecord {
                        test_case: (*tc).clone(),
                        creation_time: *first,
                    });
                }
            }
            Ok(out)
        }
        InferMode::InferAll => {
            let mut out: Vec<CreationRecord> = creations
                .iter()
                .map(|c| CreationRecord {
                    test_case: c.test_case.clone(),
                    creation_time: first_run
                        .get(&c.test_case)
                        .copied()
                        .unwrap_or(c.creation_time),
                })
                .collect();
            for (tc, first) in &first_run {
                if !known.contains(*tc) {
                    out.push(CreationRecord {
                        test_case: (*tc).clone(),
                        creation_time: *first,
                    });
                }
            }
            Ok(out)
        }
    }
}

/// Enforces referential integrity, rejects executions that predate their
/// creation (warning per record), removes exact duplicate rows (warning), and
/// sets the execution interval bounds.
///
/// Errors when an execution references an unknown test case or when no
/// executions remain.
pub fn validate_dataset(
    creations: Vec<CreationRecord>,
    executions: Vec<ExecutionRecord>,
) -> Result<(Dataset, ValidationReport)> {
    let mut report = ValidationReport::default();

    let mut creations = creations;
    creations.sort_by(|a, b| a.test_case.cmp(&b.test_case));
    let creation_time: HashMap<&TestCaseId, DateTime<Utc>> = creations
        .iter()
        .map(|c| (&c.test_case, c.creation_time))
        .collect();
    if creation_time.len() != creations.len() {
        return Err(Error::dataset("duplicate test case in creation table"));
    }

    let mut kept: Vec<ExecutionRecord> = Vec::with_capacity(executions.len());
    for exec in executions {
        let Some(&created) = creation_time.get(&exec.test_case) else {
            return Err(Error::dataset(format!(
                "execution references unknown test case {}",
                exec.test_case
            )));
        };
        if exec.execution_time < created {
            report.pre_creation_rejected += 1;
            report.messages.push(format!(
                "line {}: execution of {} at {} precedes its creation at {}; record rejected",
                exec.source_line.unwrap_or(0),
                exec.test_case,
                format_timestamp(exec.execution_time),
                format_timestamp(created),
            ));
            continue;
        }
        kept.push(exec);
    }

    kept.sort_by(|a, b| {
        (&a.test_case, a.execution_time).cmp(&(&b.test_case, b.execution_time))
    });
    // Exact duplicates (all fields equal, ignoring provenance) collapse to one.
    let mut deduped: Vec<ExecutionRecord> = Vec::with_capacity(kept.len());
    for exec in kept {
        if let Some(prev) = deduped.last() {
            if prev.test_case == exec.test_case
                && prev.execution_time == exec.execution_time
                && prev.outcome == exec.outcome
                && prev.session_start == exec.session_start
            {
                report.duplicates_removed += 1;
                report.messages.push(format!(
                    "line {}: duplicate execution row for {} at {} removed",
                    exec.source_line.unwrap_or(0),
                    exec.test_case,
                    format_timestamp(exec.execution_time),
                ));
                continue;
            }
        }
        deduped.push(exec);
    }

    if deduped.is_empty() {
        return Err(Error::dataset("no executions"));
    }
    let t1 = deduped.iter().map(|e| e.execution_time).min().unwrap();
    let t_m = deduped.iter().map(|e| e.execution_time).max().unwrap();

    Ok((
        Dataset {
            creations,
            executions: deduped,
            t1,
            t_m,
            time_step_days: 1,
        },
        report,
    ))
}

/// Removes every session of at least `min_session_size` executions in which
/// all executions failed. Records without a session label are never removed.
///
/// Returns the filtered dataset and the number of sessions removed. Errors if
/// the filter would leave no executions (the interval bounds would be
/// undefined).
pub fn filter_allfail_sessions(
    dataset: Dataset,
    min_session_size: usize,
) -> Result<(Dataset, usize)> {
    let mut sessions: BTreeMap<DateTime<Utc>, (usize, usize)> = BTreeMap::new();
    for exec in &dataset.executions {
        if let Some(label) = exec.session_start {
            let entry = sessions.entry(label).or_insert((0, 0));
            entry.0 += 1;
            if exec.outcome == Outcome::Fail {
                entry.1 += 1;
            }
        }
    }
    let doomed: HashSet<DateTime<Utc>> = sessions
        .iter()
        .filter(|(_, &(total, fails))| total >= min_session_size && fails == total)
        .map(|(&label, _)| label)
        .collect();
    if doomed.is_empty() {
        return Ok((dataset, 0));
    }

    let Dataset {
        creations,
        executions,
        time_step_days,
        ..
    } = dataset;
    let kept: Vec<ExecutionRecord> = executions
        .into_iter()
        .filter(|e| e.session_start.is_none_or(|s| !doomed.contains(&s)))
        .collect();
    if kept.is_empty() {
        return Err(Error::dataset(
            "no executions remain after removing all-fail sessions",
        ));
    }
    let t1 = kept.iter().map(|e| e.execution_time).min().unwrap();
    let t_m = kept.iter().map(|e| e.execution_time).max().unwrap();
    Ok((
        Dataset {
            creations,
            executions: kept,
            t1,
            t_m,
            time_step_days,
        },
        doomed.len(),
    ))
}

/// Writes the creation table in the on-disk CSV schema.
pub fn write_creations_csv<W: Write>(mut w: W, creations: &[CreationRecord]) -> Result<()> {
    writeln!(w, "test_case,creation_time")?;
    for c in creations {
        writeln!(w, "{},{}", c.test_case, format_timestamp(c.creation_time))?;
    }
    Ok(())
}

/// Writes the execution table in the on-disk CSV schema.
pub fn write_executions_csv<W: Write>(mut w: W, executions: &[ExecutionRecord]) -> Result<()> {
    writeln!(w, "test_case,execution_time,outcome,session_start")?;
    for e in executions {
        let session = e.session_start.map(format_timestamp).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            e.test_case,
            format_timestamp(e.execution_time),
            e.outcome,
            session
        )?;
    }
    Ok(())
}
