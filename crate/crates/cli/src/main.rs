//! Command-line front end for test-case aging analysis.
//!
//! Subcommands mirror the pipeline stages: `validate` checks the input
//! tables, `lifespan` reports aliveness, `activation`/`hazard` export rate
//! series, `fit` fits decay models, `analyze` runs everything into a report
//! bundle and `synth` generates ground-truth data. All analysis is in
//! `testage-core`; this binary only parses flags and moves bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use testage_core::curves::{
    self, apply_min_support, wallclock_series, write_series_csv, RateKind,
};
use testage_core::ingest::{self, Dataset, InferMode, OutcomeMapPolicy};
use testage_core::lifespan::{
    age_distribution, aliveness_summary, determine_death, growth_curve, write_day_counts_csv,
    GracePeriod,
};
use testage_core::plot::{emit_svg, PlotStyle};
use testage_core::regression::{fit_report, ModelFamily, P_VALUE_FLAG_THRESHOLD};
use testage_core::report::{self, model_rows, IngestSummary, RunConfig};
use testage_core::smoothing::write_curve_csv;
use testage_core::synth;

#[derive(Parser)]
#[command(
    name = "testage",
    version,
    about = "Quantify how software test cases age from creation/execution logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the input tables, reporting counts and warnings.
    Validate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Determine life spans; emit an aliveness summary plus age histogram
    /// and growth curve CSVs.
    Lifespan {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = GracePeriod::DEFAULT_DAYS, value_name = "DAYS")]
        grace_days: i64,
        /// Age histogram bin width in days.
        #[arg(long, default_value_t = 1, value_name = "DAYS")]
        bin_width: i64,
        #[arg(long, default_value = ".", value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Export the activation-rate series as CSV.
    Activation {
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Export the failure-rate (hazard) series as CSV.
    Hazard {
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Fit decay models to the hazard series and report half-lives as JSON.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = GracePeriod::DEFAULT_DAYS, value_name = "DAYS")]
        grace_days: i64,
        #[arg(long, default_value_t = 10, value_name = "N")]
        min_support: usize,
        /// Polynomial degrees to fit, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
        degrees: Vec<usize>,
        /// Also fit an exponential model.
        #[arg(long)]
        exponential: bool,
        /// Half-life scan bound in days.
        #[arg(long, default_value_t = 3650, value_name = "DAYS")]
        grid_max: i64,
        /// Render model formulas on the percent scale.
        #[arg(long)]
        percent: bool,
    },
    /// Run the whole pipeline and write a report bundle.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic dataset from a profile.
    Synth {
        /// Profile JSON; see docs/formats.md for the schema.
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Creation table: test_case,creation_time.
    #[arg(long, default_value = "creations.csv", value_name = "FILE")]
    creations: PathBuf,
    /// Execution table: test_case,execution_time,outcome,session_start.
    #[arg(long, default_value = "executions.csv", value_name = "FILE")]
    executions: PathBuf,
    /// Extra outcome mapping rule, e.g. `error=DROP` (repeatable).
    #[arg(long = "map-outcome", value_name = "LABEL=ACTION")]
    map_outcome: Vec<String>,
    /// File with outcome mapping rules, one LABEL=ACTION per line.
    #[arg(long, value_name = "FILE")]
    outcome_map_file: Option<PathBuf>,
    /// How to reconcile creation times with execution data.
    #[arg(long, value_enum, default_value_t = InferArg::Strict)]
    infer_creations: InferArg,
    /// Keep sessions in which every execution failed.
    #[arg(long)]
    no_filter_allfail: bool,
    /// All-fail sessions smaller than this are never removed.
    #[arg(long, default_value_t = 2, value_name = "N")]
    min_session_size: usize,
}

#[derive(Args)]
struct SeriesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = GracePeriod::DEFAULT_DAYS, value_name = "DAYS")]
    grace_days: i64,
    /// Days with fewer test cases than this are flagged low-support.
    #[arg(long, default_value_t = 10, value_name = "N")]
    min_support: usize,
    /// Use the wall-clock axis instead of the age axis.
    #[arg(long)]
    wallclock: bool,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = GracePeriod::DEFAULT_DAYS, value_name = "DAYS")]
    grace_days: i64,
    #[arg(long, default_value_t = 10, value_name = "N")]
    min_support: usize,
    /// Smoothing span as a fraction of the points per window.
    #[arg(long, default_value_t = 0.15)]
    span: f64,
    /// Confidence level of the smoothed bands.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Polynomial degrees to fit, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    degrees: Vec<usize>,
    /// Also fit an exponential model.
    #[arg(long)]
    exponential: bool,
    /// Half-life scan bound in days.
    #[arg(long, default_value_t = 3650, value_name = "DAYS")]
    grid_max: i64,
    /// Render model formulas on the percent scale.
    #[arg(long)]
    percent: bool,
    /// Age histogram bin width in days.
    #[arg(long, default_value_t = 1, value_name = "DAYS")]
    bin_width: i64,
    #[arg(long, default_value = "testage-out", value_name = "DIR")]
    out_dir: PathBuf,
    /// Skip the SVG plots.
    #[arg(long)]
    no_svg: bool,
    /// Skip the CSV series exports (report.json is always written).
    #[arg(long)]
    no_csv: bool,
}

#[derive(ValueEnum, Clone, Copy)]
enum InferArg {
    /// Every executed test case needs an explicit creation record.
    Strict,
    /// Fill missing creation records with the first registered run.
    Missing,
    /// Override all creation times with the first registered run.
    All,
}

impl InputArgs {
    fn policy(&self) -> Result<OutcomeMapPolicy> {
        let mut policy = OutcomeMapPolicy::default();
        if let Some(path) = &self.outcome_map_file {
            let file = fs::File::open(path)
                .with_context(|| format!("opening outcome map {}", path.display()))?;
            policy.load(file)?;
        }
        for rule in &self.map_outcome {
            policy.add_rule(rule)?;
        }
        Ok(policy)
    }

    fn load(&self) -> Result<(Dataset, IngestSummary)> {
        let infer = match self.infer_creations {
            InferArg::Strict => InferMode::Strict,
            InferArg::Missing => InferMode::InferMissing,
            InferArg::All => InferMode::InferAll,
        };
        let creations = if self.creations.exists() {
            let file = fs::File::open(&self.creations)
                .with_context(|| format!("opening {}", self.creations.display()))?;
            ingest::parse_creations(file)
                .with_context(|| format!("parsing {}", self.creations.display()))?
        } else if matches!(infer, InferMode::Strict) {
            bail!(
                "creation table {} not found (use --infer-creations missing|all to derive creation times from first runs)",
                self.creations.display()
            );
        } else {
            Vec::new()
        };
        let file = fs::File::open(&self.executions)
            .with_context(|| format!("opening {}", self.executions.display()))?;
        let raw_rows = ingest::parse_executions(file)
            .with_context(|| format!("parsing {}", self.executions.display()))?;

        let (dataset, summary) = report::build_dataset(
            creations,
            raw_rows,
            &self.policy()?,
            infer,
            !self.no_filter_allfail,
            self.min_session_size,
        )?;
        for message in &summary.messages {
            eprintln!("warning: {message}");
        }
        if summary.dropped_outcomes > 0 {
            eprintln!(
                "warning: {} execution rows dropped by the outcome mapping policy",
                summary.dropped_outcomes
            );
        }
        if summary.removed_allfail_sessions > 0 {
            eprintln!(
                "warning: removed {} all-fail sessions",
                summary.removed_allfail_sessions
            );
        }
        Ok((dataset, summary))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { input } => cmd_validate(&input),
        Command::Lifespan {
            input,
            grace_days,
            bin_width,
            out_dir,
        } => cmd_lifespan(&input, grace_days, bin_width, &out_dir),
        Command::Activation { series } => cmd_series(&series, RateKind::Activation),
        Command::Hazard { series } => cmd_series(&series, RateKind::Hazard),
        Command::Fit {
            input,
            grace_days,
            min_support,
            degrees,
            exponential,
            grid_max,
            percent,
        } => cmd_fit(
            &input, grace_days, min_support, &degrees, exponential, grid_max, percent,
        ),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Synth { profile, out_dir } => cmd_synth(&profile, &out_dir),
    }
}

fn cmd_validate(input: &InputArgs) -> Result<()> {
    let (dataset, summary) = input.load()?;
    let out = serde_json::json!({
        "test_cases": dataset.creations().len(),
        "executions": dataset.executions().len(),
        "t1": ingest::format_timestamp(dataset.t1()),
        "t_m": ingest::format_timestamp(dataset.t_m()),
        "dropped_outcomes": summary.dropped_outcomes,
        "removed_allfail_sessions": summary.removed_allfail_sessions,
        "pre_creation_rejected": summary.pre_creation_rejected,
        "duplicates_removed": summary.duplicates_removed,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_lifespan(input: &InputArgs, grace_days: i64, bin_width: i64, out_dir: &Path) -> Result<()> {
    if bin_width < 1 {
        bail!("--bin-width must be at least 1");
    }
    let (dataset, _) = input.load()?;
    let grace = GracePeriod::new(grace_days)?;
    let (lifespans, skipped) = determine_death(&dataset, grace);
    if skipped > 0 {
        eprintln!("warning: {skipped} test cases have a creation record but no executions");
    }
    let summary = aliveness_summary(&lifespans)?;
    println!("{}", report::to_json(&summary)?.trim_end());

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut hist = Vec::new();
    write_day_counts_csv(&mut hist, &age_distribution(&lifespans, bin_width))?;
    write_bytes(&out_dir.join("age_histogram.csv"), &hist)?;
    let mut growth = Vec::new();
    write_day_counts_csv(&mut growth, &growth_curve(&lifespans))?;
    write_bytes(&out_dir.join("growth_curve.csv"), &growth)?;
    Ok(())
}

fn cmd_series(args: &SeriesArgs, kind: RateKind) -> Result<()> {
    let (dataset, _) = args.input.load()?;
    let grace = GracePeriod::new(args.grace_days)?;
    let (lifespans, _) = determine_death(&dataset, grace);
    let series = if args.wallclock {
        wallclock_series(&dataset, &lifespans, kind)
    } else {
        match kind {
            RateKind::Activation => curves::activation_series(&dataset, &lifespans),
            RateKind::Hazard => curves::hazard_series(&dataset, &lifespans),
        }
    };
    let series = apply_min_support(&series, args.min_support);
    let mut csv = Vec::new();
    write_series_csv(&mut csv, &series)?;
    match &args.out {
        Some(path) => write_bytes(path, &csv)?,
        None => std::io::stdout().write_all(&csv)?,
    }
    Ok(())
}

fn cmd_fit(
    input: &InputArgs,
    grace_days: i64,
    min_support: usize,
    degrees: &[usize],
    exponential: bool,
    grid_max: i64,
    percent: bool,
) -> Result<()> {
    let (dataset, _) = input.load()?;
    let grace = GracePeriod::new(grace_days)?;
    let (lifespans, _) = determine_death(&dataset, grace);
    let hazard = apply_min_support(&curves::hazard_series(&dataset, &lifespans), min_support);
    let mut families: Vec<ModelFamily> = degrees
        .iter()
        .map(|&degree| ModelFamily::Polynomial { degree })
        .collect();
    if exponential {
        families.push(ModelFamily::Exponential);
    }
    let fits = fit_report(&hazard, &families, grid_max, P_VALUE_FLAG_THRESHOLD)?;
    let rows = model_rows(fits, percent);
    let out = serde_json::json!({ "models": rows });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let (dataset, summary) = args.input.load()?;
    let config = RunConfig {
        grace_days: args.grace_days,
        min_support: args.min_support,
        filter_allfail: !args.input.no_filter_allfail,
        min_session_size: args.input.min_session_size,
        span: args.span,
        confidence: args.confidence,
        degrees: args.degrees.clone(),
        exponential: args.exponential,
        grid_max: args.grid_max,
        percent: args.percent,
        bin_width_days: args.bin_width,
    };
    let bundle = report::analyze(&dataset, &summary, &config)?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_bytes(
        &dir.join("report.json"),
        report::to_json(&bundle.report)?.as_bytes(),
    )?;
    let mut written = 1;

    if !args.no_csv {
        for (name, series) in [
            ("activation.csv", &bundle.activation),
            ("hazard.csv", &bundle.hazard),
        ] {
            let mut csv = Vec::new();
            write_series_csv(&mut csv, series)?;
            write_bytes(&dir.join(name), &csv)?;
            written += 1;
        }
        for (name, curve) in [
            ("activation_smooth.csv", &bundle.activation_smooth),
            ("hazard_smooth.csv", &bundle.hazard_smooth),
        ] {
            let mut csv = Vec::new();
            write_curve_csv(&mut csv, curve)?;
            write_bytes(&dir.join(name), &csv)?;
            written += 1;
        }
        for (name, rows) in [
            ("age_histogram.csv", &bundle.age_histogram),
            ("growth_curve.csv", &bundle.growth),
        ] {
            let mut csv = Vec::new();
            write_day_counts_csv(&mut csv, rows)?;
            write_bytes(&dir.join(name), &csv)?;
            written += 1;
        }
    }
    if !args.no_svg {
        let activation_svg = emit_svg(
            &bundle.activation,
            Some(&bundle.activation_smooth),
            &PlotStyle::for_kind(RateKind::Activation),
        );
        write_bytes(&dir.join("activation.svg"), activation_svg.as_bytes())?;
        let hazard_svg = emit_svg(
            &bundle.hazard,
            Some(&bundle.hazard_smooth),
            &PlotStyle::for_kind(RateKind::Hazard),
        );
        write_bytes(&dir.join("hazard.svg"), hazard_svg.as_bytes())?;
        written += 2;
    }
    eprintln!("wrote {written} files to {}", dir.display());
    Ok(())
}

fn cmd_synth(profile_path: &Path, out_dir: &Path) -> Result<()> {
    let text = fs::read_to_string(profile_path)
        .with_context(|| format!("reading {}", profile_path.display()))?;
    let profile: synth::SynthProfile = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", profile_path.display()))?;
    let (dataset, truth) = synth::generate(&profile)?;

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut creations = Vec::new();
    ingest::write_creations_csv(&mut creations, dataset.creations())?;
    write_bytes(&out_dir.join("creations.csv"), &creations)?;
    let mut executions = Vec::new();
    ingest::write_executions_csv(&mut executions, dataset.executions())?;
    write_bytes(&out_dir.join("executions.csv"), &executions)?;
    write_bytes(
        &out_dir.join("ground_truth.json"),
        report::to_json(&truth)?.as_bytes(),
    )?;
    eprintln!(
        "wrote {} test cases, {} executions to {}",
        dataset.creations().len(),
        dataset.executions().len(),
        out_dir.display()
    );
    Ok(())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
