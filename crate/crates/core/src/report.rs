//! Pipeline orchestration and the machine-readable analysis report.
//!
//! The CLI is a thin shell over [`build_dataset`] and [`analyze`]: every
//! number in the JSON report comes straight out of the module operations, so
//! re-running them with the same configuration reproduces the report exactly.

use serde::Serialize;

use crate::curves::{
    activation_series, apply_min_support, hazard_series, yearly_failure_rates, RateSeries,
    YearlyMode, YearlyRate,
};
use crate::error::Result;
use crate::ingest::{
    filter_allfail_sessions, infer_creations, map_outcomes, validate_dataset, CreationRecord,
    Dataset, InferMode, OutcomeMapPolicy, RawExecutionRow,
};
use crate::lifespan::{
    age_distribution, aliveness_summary, determine_death, growth_curve, AlivenessSummary,
    GracePeriod, LifeSpan,
};
use crate::regression::{
    fit_report, CoefficientStat, HalfLifeOutcome, ModelFamily, P_VALUE_FLAG_THRESHOLD,
};
use crate::smoothing::{smooth, SmoothConfig, SmoothedCurve};

/// Analysis configuration; one field per tunable of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grace_days: i64,
    pub min_support: usize,
    pub filter_allfail: bool,
    pub min_session_size: usize,
    pub span: f64,
    pub confidence: f64,
    /// Polynomial degrees to fit against the hazard series.
    pub degrees: Vec<usize>,
    /// Also fit the exponential family.
    pub exponential: bool,
    /// Half-life scan bound in days.
    pub grid_max: i64,
    /// Render model formulas on the percent scale.
    pub percent: bool,
    /// Bin width of the age histogram.
    pub bin_width_days: i64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grace_days: 90,
            min_support: 10,
            filter_allfail: true,
            min_session_size: 2,
            span: 0.15,
            confidence: 0.95,
            degrees: vec![1, 2],
            exponential: false,
            grid_max: 3650,
            percent: false,
            bin_width_days: 1,
        }
    }
}

/// Counts collected while building the dataset.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub dropped_outcomes: usize,
    pub removed_allfail_sessions: usize,
    pub pre_creation_rejected: usize,
    pub duplicates_removed: usize,
    /// Per-record warnings for the run log (not serialized into reports).
    #[serde(skip)]
    pub messages: Vec<String>,
}

/// Maps outcomes, reconciles creations, validates and (optionally) removes
/// all-fail sessions.
pub fn build_dataset(
    creations: Vec<CreationRecord>,
    raw_rows: Vec<RawExecutionRow>,
    policy: &OutcomeMapPolicy,
    infer: InferMode,
    filter_allfail: bool,
    min_session_size: usize,
) -> Result<(Dataset, IngestSummary)> {
    let mut summary = IngestSummary::default();
    let (mapped, dropped) = map_outcomes(raw_rows, policy);
    summary.dropped_outcomes = dropped;
    let creations = infer_creations(&mapped, &creations, infer)?;
    let (dataset, validation) = validate_dataset(creations, mapped)?;
    summary.pre_creation_rejected = validation.pre_creation_rejected;
    summary.duplicates_removed = validation.duplicates_removed;
    summary.messages = validation.messages;
    let dataset = if filter_allfail {
        let (dataset, removed) = filter_allfail_sessions(dataset, min_session_size)?;
        summary.removed_allfail_sessions = removed;
        dataset
    } else {
        dataset
    };
    Ok((dataset, summary))
}

/// Input tables and filter tallies, echoed into the report.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub test_cases: usize,
    pub executions: usize,
    pub t1: String,
    pub t_m: String,
    pub dropped_outcomes: usize,
    pub removed_allfail_sessions: usize,
    pub pre_creation_rejected: usize,
    pub duplicates_removed: usize,
    /// Test cases with a creation record but no executions.
    pub without_executions: usize,
}

/// Yearly failure rates under both aggregation modes.
#[derive(Debug, Clone, Serialize)]
pub struct YearlySection {
    pub pooled: Vec<YearlyRate>,
    pub mean_of_daily: Vec<YearlyRate>,
}

/// Half-life cell of a model row.
#[derive(Debug, Clone, Serialize)]
pub struct HalfLifeCell {
    /// `reached`, `not_reached` or `undefined` (model non-positive at age 0).
    pub status: String,
    pub days: Option<i64>,
    pub months: Option<f64>,
}

/// One fitted model in the comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub family: String,
    pub formula: String,
    /// Rate-fraction scale, constant term first (for the exponential family:
    /// level and exponent).
    pub coefficients: Vec<f64>,
    pub coefficient_stats: Vec<CoefficientStat>,
    pub residual_std_error: f64,
    /// `rate` for polynomials, `log_rate` for the exponential fit.
    pub residual_scale: String,
    pub n_points: usize,
    pub n_excluded: usize,
    pub half_life: HalfLifeCell,
    pub weak_coefficients: Vec<usize>,
}

/// The versioned machine-readable report.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub aliveness: AlivenessSummary,
    pub yearly_failure_rates: YearlySection,
    pub models: Vec<ModelRow>,
}

/// Everything `analyze` produces: the report plus the series and curves the
/// CLI exports as CSV/SVG.
#[derive(Debug, Clone)]
pub struct AnalyzeBundle {
    pub report: AnalyzeReport,
    pub lifespans: Vec<LifeSpan>,
    pub activation: RateSeries,
    pub hazard: RateSeries,
    pub activation_smooth: SmoothedCurve,
    pub hazard_smooth: SmoothedCurve,
    pub age_histogram: Vec<(i64, usize)>,
    pub growth: Vec<(i64, usize)>,
}

/// Runs the full pipeline over a validated dataset.
pub fn analyze(
    dataset: &Dataset,
    ingest: &IngestSummary,
    config: &RunConfig,
) -> Result<AnalyzeBundle> {
    let grace = GracePeriod::new(config.grace_days)?;
    let (lifespans, without_executions) = determine_death(dataset, grace);
    let aliveness = aliveness_summary(&lifespans)?;

    let activation = apply_min_support(
        &activation_series(dataset, &lifespans),
        config.min_support,
    );
    let hazard = apply_min_support(&hazard_series(dataset, &lifespans), config.min_support);

    let smooth_config = SmoothConfig {
        span: config.span,
        confidence: config.confidence,
        ..SmoothConfig::default()
    };
    let activation_smooth = smooth(&activation, &smooth_config)?;
    let hazard_smooth = smooth(&hazard, &smooth_config)?;

    let yearly = YearlySection {
        pooled: yearly_failure_rates(&hazard, YearlyMode::Pooled),
        mean_of_daily: yearly_failure_rates(&hazard, YearlyMode::MeanOfDaily),
    };

    let mut families: Vec<ModelFamily> = config
        .degrees
        .iter()
        .map(|&degree| ModelFamily::Polynomial { degree })
        .collect();
    if config.exponential {
        families.push(ModelFamily::Exponential);
    }
    let fits = fit_report(&hazard, &families, config.grid_max, P_VALUE_FLAG_THRESHOLD)?;
    let models = model_rows(fits, config.percent);

    let report = AnalyzeReport {
        schema_version: "1".into(),
        config: config.clone(),
        dataset: DatasetSummary {
            test_cases: dataset.creations().len(),
            executions: dataset.executions().len(),
            t1: crate::ingest::format_timestamp(dataset.t1()),
            t_m: crate::ingest::format_timestamp(dataset.t_m()),
            dropped_outcomes: ingest.dropped_outcomes,
            removed_allfail_sessions: ingest.removed_allfail_sessions,
            pre_creation_rejected: ingest.pre_creation_rejected,
            duplicates_removed: ingest.duplicates_removed,
            without_executions,
        },
        aliveness,
        yearly_failure_rates: yearly,
        models,
    };

    Ok(AnalyzeBundle {
        report,
        age_histogram: age_distribution(&lifespans, config.bin_width_days),
        growth: growth_curve(&lifespans),
        lifespans,
        activation,
        hazard,
        activation_smooth,
        hazard_smooth,
    })
}

/// Converts fit-report entries into report rows.
pub fn model_rows(fits: Vec<crate::regression::FitReportEntry>, percent: bool) -> Vec<ModelRow> {
    fits.into_iter()
        .map(|entry| {
            let half_life = match entry.half_life {
                Some(HalfLifeOutcome::Reached(hl)) => HalfLifeCell {
                    status: "reached".into(),
                    days: Some(hl.days),
                    months: Some(hl.months),
                },
                Some(HalfLifeOutcome::NotReached { .. }) => HalfLifeCell {
                    status: "not_reached".into(),
                    days: None,
                    months: None,
                },
                None => HalfLifeCell {
                    status: "undefined".into(),
                    days: None,
                    months: None,
                },
            };
            let residual_scale = match entry.model.family {
                ModelFamily::Exponential => "log_rate",
                _ => "rate",
            };
            ModelRow {
                family: entry.model.family.name().to_string(),
                formula: entry.model.formula(percent),
                coefficients: entry.model.coefficients.clone(),
                coefficient_stats: entry.model.coefficient_stats.clone(),
                residual_std_error: entry.model.residual_std_error,
                residual_scale: residual_scale.into(),
                n_points: entry.model.n,
                n_excluded: entry.model.n_excluded,
                half_life,
                weak_coefficients: entry.weak_coefficients,
            }
        })
        .collect()
}

/// Pretty-printed JSON with a trailing newline; field order is fixed by the
/// struct definitions, so identical inputs give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}
