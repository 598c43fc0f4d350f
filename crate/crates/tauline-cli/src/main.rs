//! `tauline`: milestone-based survival analysis from the command line.
//!
//! Subcommands: `analyze` (full pipeline from a subjects CSV to a JSON/CSV
//! report), `reconstruct` (pseudo individual-level data from digitized
//! Kaplan-Meier coordinates), `simulate` (trial scenarios with analytic
//! truth sheets), and `phtest` (Cox fit plus Schoenfeld PH diagnostics).
//!
//! Exit codes: 0 success, 2 input or configuration problem, 3 computation
//! problem (an estimand undefined on the given data). The process never
//! panics to the OS.

mod report;

use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tauline_core::bootstrap::{bootstrap, bootstrap_curve, CurveKind, Estimand, EstimandKind};
use tauline_core::cox::{fit_cox_two_group, schoenfeld_ph_test, TimeTransform};
use tauline_core::data::{load_csv, split_by_arm, write_csv, CsvSchema, SurvivalDataset};
use tauline_core::km::{fit_km, maturity_check, KmCurve};
use tauline_core::milestone::{classify_milestone, milestone_summary};
use tauline_core::reconstruct::{reconstruct_arm, DigitizedCurve};
use tauline_core::rmst::{drmst_process, susceptible_drmst};
use tauline_core::sim::{simulate, truth, Scenario};
use tauline_core::tau::{slope_sign_change, susceptible_tau, tau_process, tau_slope, turning_time};
use tauline_core::Error;

use report::*;

#[derive(Parser)]
#[command(name = "tauline", version, about = "Milestone-based survival analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis pipeline: KM, milestone summary, tau and dRMST
    /// processes, bootstrap inference.
    Analyze(AnalyzeArgs),
    /// Reconstruct pseudo individual-level data from digitized curves.
    Reconstruct(ReconstructArgs),
    /// Simulate a trial scenario and write its analytic truth sheet.
    Simulate(SimulateArgs),
    /// Two-group Cox fit and Schoenfeld-residual PH test.
    Phtest(PhtestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Transform {
    Identity,
    Km,
}

#[derive(Args)]
struct SchemaArgs {
    /// Column holding observation times.
    #[arg(long, default_value = "time")]
    time_col: String,
    /// Column holding the event indicator (1 = event, 0 = censored).
    #[arg(long, default_value = "event")]
    event_col: String,
    /// Column holding the arm label.
    #[arg(long, default_value = "arm")]
    arm_col: String,
}

impl SchemaArgs {
    fn to_schema(&self, reference_arm: Option<String>) -> CsvSchema {
        CsvSchema {
            time: self.time_col.clone(),
            event: self.event_col.clone(),
            arm: self.arm_col.clone(),
            reference_arm,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Subjects CSV.
    #[arg(long)]
    input: PathBuf,
    /// Report destination.
    #[arg(long)]
    output: PathBuf,
    /// Clinically prespecified milestone time; enables the milestone
    /// summary and the susceptible analyses.
    #[arg(long)]
    milestone: Option<f64>,
    /// Require the susceptible analyses (needs --milestone).
    #[arg(long)]
    susceptible: bool,
    /// Label of the reference arm (defaults to the first label seen).
    #[arg(long)]
    reference_arm: Option<String>,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = 10_000)]
    bootstrap: usize,
    /// Master seed (falls back to TAULINE_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Slope smoothing bandwidth (default: a tenth of each curve's domain).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Good-practice at-risk fraction for the maturity flag.
    #[arg(long, default_value_t = 0.10)]
    maturity_threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Endpoint label echoed into the report (e.g. "OS", "PFS").
    #[arg(long, default_value = "")]
    endpoint: String,
    #[command(flatten)]
    schema: SchemaArgs,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Digitized-curve JSON: one object or an array of objects, each
    /// `{arm, points, risk_table, total_events}`.
    #[arg(long)]
    input: PathBuf,
    /// Subjects CSV destination; diagnostics are written alongside.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    input: PathBuf,
    /// Dataset CSV destination; the truth sheet is written alongside.
    #[arg(long)]
    output: PathBuf,
    /// Milestone used for the truth sheet (default: half the
    /// administrative censoring time).
    #[arg(long)]
    milestone: Option<f64>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PhtestArgs {
    /// Subjects CSV.
    #[arg(long)]
    input: PathBuf,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Treatment arm label (default: the second arm).
    #[arg(long)]
    treat_arm: Option<String>,
    /// Reference arm label (default: the first arm).
    #[arg(long)]
    reference_arm: Option<String>,
    /// Time transform for the PH test.
    #[arg(long, value_enum, default_value_t = Transform::Identity)]
    transform: Transform,
    #[command(flatten)]
    schema: SchemaArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
        Err(_) => {
            eprintln!("error: internal panic");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Reconstruct(args) => run_reconstruct(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Phtest(args) => run_phtest(args),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Validation(format!("{}: {e}", path.display()))
}

fn json_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Validation(format!("{}: invalid JSON: {e}", path.display()))
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("TAULINE_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| Error::Validation(format!("TAULINE_SEED must be an integer, got `{text}`"))),
        Err(_) => Ok(0),
    }
}

fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn uniform_grid(t_end: f64) -> Vec<f64> {
    if t_end <= 0.0 {
        return vec![0.0];
    }
    (0..=100).map(|i| t_end * (i as f64 / 100.0)).collect()
}

fn resolve_arm(ds: &SurvivalDataset, label: &str) -> Result<u32, Error> {
    ds.arm_labels()
        .iter()
        .position(|l| l == label)
        .map(|i| i as u32)
        .ok_or_else(|| Error::Validation(format!("no arm labeled `{label}` in the input")))
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Error> {
    if args.bootstrap < 100 {
        return Err(Error::Validation(format!(
            "--bootstrap must be at least 100, got {}",
            args.bootstrap
        )));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::Validation(format!("--level must be in (0,1), got {}", args.level)));
    }
    if let Some(m) = args.milestone {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::Validation(format!("--milestone must be positive, got {m}")));
        }
    }
    if args.susceptible && args.milestone.is_none() {
        return Err(Error::Validation(
            "susceptible analyses require --milestone".into(),
        ));
    }
    if !(args.maturity_threshold > 0.0 && args.maturity_threshold < 1.0) {
        return Err(Error::Validation(format!(
            "--maturity-threshold must be in (0,1), got {}",
            args.maturity_threshold
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let bytes = std::fs::read(&args.input).map_err(|e| io_err(&args.input, e))?;
    let input_sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Validation(format!("{}: not valid UTF-8", args.input.display())))?;
    let schema = args.schema.to_schema(args.reference_arm.clone());
    let ds = tauline_core::data::parse_csv(&text, &schema)?;

    let views = split_by_arm(&ds);
    let kms: Vec<KmCurve<f64>> = views.iter().map(fit_km).collect();
    let t_min = kms
        .iter()
        .map(|k| k.max_observed())
        .fold(f64::INFINITY, f64::min);
    let maturity_at = args.milestone.unwrap_or(t_min);

    let arms = views
        .iter()
        .zip(&kms)
        .enumerate()
        .map(|(id, (view, km))| {
            let maturity = maturity_check(view, maturity_at, args.maturity_threshold)?;
            Ok(ArmJson {
                id: id as u32,
                label: ds.arm_label(id as u32).to_string(),
                n: view.n(),
                events: view.n_events(),
                max_observed: km.max_observed(),
                last_is_event: km.last_is_event(),
                survival: km.survival().step().into(),
                maturity: (&maturity).into(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let milestone = match args.milestone {
        Some(m) => {
            let summary = milestone_summary(&kms, m)?;
            let indicator = classify_milestone(&ds, m);
            let per_arm = (0..ds.n_arms() as u32)
                .map(|arm| {
                    let xi: Vec<Option<bool>> = ds
                        .subjects()
                        .iter()
                        .zip(&indicator.xi)
                        .filter(|(s, _)| s.arm == arm)
                        .map(|(_, x)| *x)
                        .collect();
                    let determined: Vec<bool> = xi.iter().flatten().copied().collect();
                    let determined_event_fraction = if determined.is_empty() {
                        None
                    } else {
                        Some(
                            determined.iter().filter(|&&x| x).count() as f64
                                / determined.len() as f64,
                        )
                    };
                    MilestoneArmJson {
                        arm,
                        eta: summary.eta[arm as usize],
                        susceptible_fraction: summary.susceptible_fraction[arm as usize],
                        determined_event_fraction,
                        n_undetermined: xi.iter().filter(|x| x.is_none()).count(),
                        susceptible_survival: summary.susceptible_curves[arm as usize]
                            .as_ref()
                            .map(|c| c.step().into()),
                    }
                })
                .collect();
            let contrasts = (1..ds.n_arms() as u32)
                .map(|treat| {
                    let est = Estimand {
                        kind: EstimandKind::MilestoneContrast { m },
                        treat_arm: treat,
                        ref_arm: 0,
                    };
                    let inf = bootstrap(&ds, &est, args.bootstrap, args.level, seed)?;
                    Ok(MilestoneContrastJson {
                        treat_arm: treat,
                        ref_arm: 0,
                        inference: (&inf).into(),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Some(MilestoneJson { m, per_arm, contrasts })
        }
        None => None,
    };

    let mut tau_entries = Vec::new();
    let mut susceptible_tau_entries = Vec::new();
    let mut drmst_entries = Vec::new();
    let mut susceptible_drmst_entries = Vec::new();
    for treat in 1..ds.n_arms() as u32 {
        let k_treat = &kms[treat as usize];
        let k_ref = &kms[0];
        let t_end = k_treat.max_observed().min(k_ref.max_observed());
        let grid = uniform_grid(t_end);

        let tau = tau_process(k_treat, k_ref, t_end)?.with_arm_pair(treat, 0);
        let bandwidth = args.bandwidth.unwrap_or(t_end / 10.0);
        let slope = tau_slope(&tau, bandwidth)?;
        let band = bootstrap_curve(
            &ds,
            CurveKind::Tau,
            treat,
            0,
            &grid,
            args.bootstrap,
            args.level,
            seed,
        )?;
        let at_end = bootstrap(
            &ds,
            &Estimand { kind: EstimandKind::TauAt { t: t_end }, treat_arm: treat, ref_arm: 0 },
            args.bootstrap,
            args.level,
            seed,
        )?;
        tau_entries.push(TauJson {
            treat_arm: treat,
            ref_arm: 0,
            milestone: None,
            t_end,
            curve: tau.process().into(),
            band: (&band).into(),
            turning_point: (&turning_time(&tau)).into(),
            slope: (&slope).into(),
            bandwidth,
            slope_sign_change: slope_sign_change(&slope),
            at_end: (&at_end).into(),
        });

        let drmst = drmst_process(k_treat, k_ref, t_end)?.with_arm_pair(treat, 0);
        let drmst_at_end = bootstrap(
            &ds,
            &Estimand { kind: EstimandKind::DrmstAt { t: t_end }, treat_arm: treat, ref_arm: 0 },
            args.bootstrap,
            args.level,
            seed,
        )?;
        drmst_entries.push(DrmstJson {
            treat_arm: treat,
            ref_arm: 0,
            milestone: None,
            t_end,
            curve: drmst.process().into(),
            at_end: (&drmst_at_end).into(),
        });

        if let Some(m) = args.milestone {
            let s_tau = susceptible_tau(k_treat, k_ref, m)?.with_arm_pair(treat, 0);
            let s_grid = uniform_grid(m);
            let s_bandwidth = args.bandwidth.unwrap_or(m / 10.0);
            let s_slope = tau_slope(&s_tau, s_bandwidth)?;
            let s_band = bootstrap_curve(
                &ds,
                CurveKind::SusceptibleTau { m },
                treat,
                0,
                &s_grid,
                args.bootstrap,
                args.level,
                seed,
            )?;
            let s_at_end = bootstrap(
                &ds,
                &Estimand {
                    kind: EstimandKind::SusceptibleTauAt { t: m, m },
                    treat_arm: treat,
                    ref_arm: 0,
                },
                args.bootstrap,
                args.level,
                seed,
            )?;
            susceptible_tau_entries.push(TauJson {
                treat_arm: treat,
                ref_arm: 0,
                milestone: Some(m),
                t_end: m,
                curve: s_tau.process().into(),
                band: (&s_band).into(),
                turning_point: (&turning_time(&s_tau)).into(),
                slope: (&s_slope).into(),
                bandwidth: s_bandwidth,
                slope_sign_change: slope_sign_change(&s_slope),
                at_end: (&s_at_end).into(),
            });

            let s_drmst = susceptible_drmst(k_treat, k_ref, m)?.with_arm_pair(treat, 0);
            let s_drmst_at_end = bootstrap(
                &ds,
                &Estimand {
                    kind: EstimandKind::SusceptibleDrmstAt { t: m, m },
                    treat_arm: treat,
                    ref_arm: 0,
                },
                args.bootstrap,
                args.level,
                seed,
            )?;
            susceptible_drmst_entries.push(DrmstJson {
                treat_arm: treat,
                ref_arm: 0,
                milestone: Some(m),
                t_end: m,
                curve: s_drmst.process().into(),
                at_end: (&s_drmst_at_end).into(),
            });
        }
    }

    let report = AnalysisReport {
        report_version: REPORT_VERSION,
        endpoint: args.endpoint.clone(),
        arms,
        milestone,
        tau: tau_entries,
        susceptible_tau: susceptible_tau_entries,
        drmst: drmst_entries,
        susceptible_drmst: susceptible_drmst_entries,
        provenance: ProvenanceJson {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256,
            seed,
            n_resamples: args.bootstrap,
            level: args.level,
            bandwidth: args.bandwidth,
            maturity_threshold: args.maturity_threshold,
            reference_arm: 0,
            timestamp: unix_timestamp(),
        },
    };

    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Validation(format!("report serialization failed: {e}")))?,
        Format::Csv => report.to_summary_csv(),
    };
    std::fs::write(&args.output, rendered).map_err(|e| io_err(&args.output, e))?;
    Ok(())
}

/// One arm of digitized input.
#[derive(Debug, Deserialize)]
struct DigitizedArm {
    arm: String,
    points: Vec<(f64, f64)>,
    #[serde(default)]
    risk_table: Vec<(f64, u32)>,
    #[serde(default)]
    total_events: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DigitizedInput {
    One(DigitizedArm),
    Many(Vec<DigitizedArm>),
}

#[derive(Debug, Serialize)]
struct ArmDiagnosticsJson {
    arm: String,
    n: usize,
    n_events: usize,
    sup_distance: f64,
    risk_table_residuals: Vec<i64>,
    event_count_residual: Option<i64>,
    monotone_repair_delta: f64,
    used_no_censoring_fallback: bool,
}

fn run_reconstruct(args: ReconstructArgs) -> Result<(), Error> {
    let bytes = std::fs::read(&args.input).map_err(|e| io_err(&args.input, e))?;
    let parsed: DigitizedInput =
        serde_json::from_slice(&bytes).map_err(|e| json_err(&args.input, e))?;
    let curves = match parsed {
        DigitizedInput::One(arm) => vec![arm],
        DigitizedInput::Many(arms) => arms,
    };
    if curves.is_empty() {
        return Err(Error::Validation("no digitized arms in the input".into()));
    }

    let mut subjects = Vec::new();
    let mut labels = Vec::new();
    let mut diagnostics = Vec::new();
    for (id, input_arm) in curves.into_iter().enumerate() {
        let dc = DigitizedCurve {
            points: input_arm.points,
            risk_table: input_arm.risk_table,
            total_events: input_arm.total_events,
        };
        let ipd = reconstruct_arm(&dc)?;
        if ipd.used_no_censoring_fallback {
            eprintln!(
                "warning: arm `{}` reconstructed without a risk table; censoring before the \
                 end of follow-up is assumed absent",
                input_arm.arm
            );
        }
        diagnostics.push(ArmDiagnosticsJson {
            arm: input_arm.arm.clone(),
            n: ipd.n(),
            n_events: ipd.n_events(),
            sup_distance: ipd.diagnostics.sup_distance,
            risk_table_residuals: ipd.diagnostics.risk_table_residuals.clone(),
            event_count_residual: ipd.diagnostics.event_count_residual,
            monotone_repair_delta: ipd.monotone_repair_delta,
            used_no_censoring_fallback: ipd.used_no_censoring_fallback,
        });
        subjects.extend(ipd.to_subjects(id as u32));
        labels.push(input_arm.arm);
    }
    let ds = SurvivalDataset::new(subjects, labels, "reconstructed")?;
    write_csv(&ds, &args.output, &CsvSchema::default())?;

    let diag_path = args.output.with_extension("diagnostics.json");
    let diag_json = serde_json::to_string_pretty(&diagnostics)
        .map_err(|e| Error::Validation(format!("diagnostics serialization failed: {e}")))?;
    std::fs::write(&diag_path, diag_json).map_err(|e| io_err(&diag_path, e))?;
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let bytes = std::fs::read(&args.input).map_err(|e| io_err(&args.input, e))?;
    let mut scenario: Scenario =
        serde_json::from_slice(&bytes).map_err(|e| json_err(&args.input, e))?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let ds = simulate(&scenario)?;
    write_csv(&ds, &args.output, &CsvSchema::default())?;

    let m = args.milestone.unwrap_or(scenario.admin_censor_time / 2.0);
    let grid: Vec<f64> = (1..=25)
        .map(|i| scenario.admin_censor_time * (i as f64 / 25.0))
        .collect();
    let sheet = truth(&scenario, m, &grid)?;
    let truth_path = args.output.with_extension("truth.json");
    let truth_json = serde_json::to_string_pretty(&sheet)
        .map_err(|e| Error::Validation(format!("truth serialization failed: {e}")))?;
    std::fs::write(&truth_path, truth_json).map_err(|e| io_err(&truth_path, e))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct PhReportJson {
    treat_arm: String,
    ref_arm: String,
    beta: f64,
    hazard_ratio: f64,
    loglik: f64,
    iterations: usize,
    converged: bool,
    monotone_likelihood: bool,
    transform: String,
    statistic: f64,
    p_value: f64,
    residuals: Vec<(f64, f64)>,
}

fn run_phtest(args: PhtestArgs) -> Result<(), Error> {
    let schema = args.schema.to_schema(None);
    let ds = load_csv(&args.input, &schema)?;
    if ds.n_arms() < 2 {
        return Err(Error::Validation("the PH test needs at least two arms".into()));
    }
    let ref_arm = match &args.reference_arm {
        Some(label) => resolve_arm(&ds, label)?,
        None => 0,
    };
    let treat_arm = match &args.treat_arm {
        Some(label) => resolve_arm(&ds, label)?,
        None => if ref_arm == 1 { 0 } else { 1 },
    };
    let fit = fit_cox_two_group(&ds, treat_arm, ref_arm)?;
    let transform = match args.transform {
        Transform::Identity => TimeTransform::Identity,
        Transform::Km => TimeTransform::Km,
    };
    let ph = schoenfeld_ph_test(&ds, treat_arm, ref_arm, &fit, transform)?;
    let out = PhReportJson {
        treat_arm: ds.arm_label(treat_arm).to_string(),
        ref_arm: ds.arm_label(ref_arm).to_string(),
        beta: fit.beta,
        hazard_ratio: fit.beta.exp(),
        loglik: fit.loglik,
        iterations: fit.iterations,
        converged: fit.converged,
        monotone_likelihood: fit.monotone_likelihood,
        transform: match args.transform {
            Transform::Identity => "identity".into(),
            Transform::Km => "km".into(),
        },
        statistic: ph.statistic,
        p_value: ph.p_value,
        residuals: ph.residuals,
    };
    let rendered = serde_json::to_string_pretty(&out)
        .map_err(|e| Error::Validation(format!("report serialization failed: {e}")))?;
    match args.output {
        Some(path) => std::fs::write(&path, rendered).map_err(|e| io_err(&path, e))?,
        None => println!("{rendered}"),
    }
    Ok(())
}
