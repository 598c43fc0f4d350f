//! Machine-readable analysis report (`report_version` 1).
//!
//! Curves are emitted as plot data, never as images: step functions as
//! `{times, values, initial}`, piecewise-linear dRMST processes as
//! breakpoint pairs. Every interval and P value carries the resample count
//! and seed that produced it, and the provenance block echoes every default
//! so reports are self-describing.

use serde::Serialize;

use tauline_core::bootstrap::{CurveBand, InferenceResult};
use tauline_core::km::MaturityReport;
use tauline_core::rmst::PiecewiseLinear;
use tauline_core::stepfn::StepFunction;
use tauline_core::tau::{TurnDirection, TurningPoint};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct StepCurveJson {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub initial: f64,
}

impl From<&StepFunction<f64>> for StepCurveJson {
    fn from(step: &StepFunction<f64>) -> Self {
        Self {
            times: step.jump_times().to_vec(),
            values: step.values().to_vec(),
            initial: step.initial_value(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LinearCurveJson {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl From<&PiecewiseLinear<f64>> for LinearCurveJson {
    fn from(pl: &PiecewiseLinear<f64>) -> Self {
        Self { times: pl.times().to_vec(), values: pl.values().to_vec() }
    }
}

#[derive(Debug, Serialize)]
pub struct BandJson {
    pub grid: Vec<f64>,
    pub point: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl From<&CurveBand> for BandJson {
    fn from(band: &CurveBand) -> Self {
        Self {
            grid: band.grid.clone(),
            point: band.point.clone(),
            lo: band.lo.clone(),
            hi: band.hi.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InferenceJson {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub level: f64,
    pub n_resamples: usize,
    pub n_failed: usize,
    pub seed: u64,
    pub point_outside_ci: bool,
}

impl From<&InferenceResult> for InferenceJson {
    fn from(r: &InferenceResult) -> Self {
        Self {
            estimate: r.point,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            p_value: r.p_value,
            level: r.level,
            n_resamples: r.n_resamples,
            n_failed: r.n_failed,
            seed: r.seed,
            point_outside_ci: r.point_outside_ci,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MaturityJson {
    pub t: f64,
    pub fraction_at_risk: f64,
    pub threshold: f64,
    pub flag: bool,
}

impl From<&MaturityReport<f64>> for MaturityJson {
    fn from(m: &MaturityReport<f64>) -> Self {
        Self {
            t: m.t,
            fraction_at_risk: m.fraction_at_risk,
            threshold: m.threshold,
            flag: m.flag,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ArmJson {
    pub id: u32,
    pub label: String,
    pub n: usize,
    pub events: usize,
    pub max_observed: f64,
    pub last_is_event: bool,
    pub survival: StepCurveJson,
    pub maturity: MaturityJson,
}

#[derive(Debug, Serialize)]
pub struct MilestoneArmJson {
    pub arm: u32,
    pub eta: f64,
    pub susceptible_fraction: f64,
    /// Event fraction among subjects whose milestone status is determined.
    pub determined_event_fraction: Option<f64>,
    pub n_undetermined: usize,
    pub susceptible_survival: Option<StepCurveJson>,
}

#[derive(Debug, Serialize)]
pub struct MilestoneContrastJson {
    pub treat_arm: u32,
    pub ref_arm: u32,
    #[serde(flatten)]
    pub inference: InferenceJson,
}

#[derive(Debug, Serialize)]
pub struct MilestoneJson {
    pub m: f64,
    pub per_arm: Vec<MilestoneArmJson>,
    pub contrasts: Vec<MilestoneContrastJson>,
}

#[derive(Debug, Serialize)]
pub struct TurningPointJson {
    pub time: f64,
    pub direction: String,
    pub tau_value: f64,
    pub flat: bool,
}

impl From<&TurningPoint<f64>> for TurningPointJson {
    fn from(tp: &TurningPoint<f64>) -> Self {
        Self {
            time: tp.time,
            direction: match tp.direction {
                TurnDirection::Min => "min".into(),
                TurnDirection::Max => "max".into(),
            },
            tau_value: tp.tau_value,
            flat: tp.flat,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TauJson {
    pub treat_arm: u32,
    pub ref_arm: u32,
    pub milestone: Option<f64>,
    /// Truncation time: contrasts stop at the shorter arm's follow-up.
    pub t_end: f64,
    pub curve: StepCurveJson,
    pub band: BandJson,
    pub turning_point: TurningPointJson,
    pub slope: StepCurveJson,
    pub bandwidth: f64,
    pub slope_sign_change: Option<f64>,
    pub at_end: InferenceJson,
}

#[derive(Debug, Serialize)]
pub struct DrmstJson {
    pub treat_arm: u32,
    pub ref_arm: u32,
    pub milestone: Option<f64>,
    pub t_end: f64,
    pub curve: LinearCurveJson,
    pub at_end: InferenceJson,
}

#[derive(Debug, Serialize)]
pub struct ProvenanceJson {
    pub toolkit_version: String,
    pub input_sha256: String,
    pub seed: u64,
    pub n_resamples: usize,
    pub level: f64,
    /// Requested bandwidth; absent means each curve used domain/10.
    pub bandwidth: Option<f64>,
    pub maturity_threshold: f64,
    pub reference_arm: u32,
    pub timestamp: u64,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub report_version: u32,
    pub endpoint: String,
    pub arms: Vec<ArmJson>,
    pub milestone: Option<MilestoneJson>,
    pub tau: Vec<TauJson>,
    pub susceptible_tau: Vec<TauJson>,
    pub drmst: Vec<DrmstJson>,
    pub susceptible_drmst: Vec<DrmstJson>,
    pub provenance: ProvenanceJson,
}

impl AnalysisReport {
    /// Flat CSV of the scalar results; the JSON report remains the full one.
    pub fn to_summary_csv(&self) -> String {
        let mut out = String::from(
            "section,treat_arm,ref_arm,m,t,estimate,ci_low,ci_high,p_value,n_resamples,n_failed\n",
        );
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        if let Some(ms) = &self.milestone {
            for arm in &ms.per_arm {
                out.push_str(&format!(
                    "milestone_eta,{},,{},,{},,,,,\n",
                    arm.arm, ms.m, arm.eta
                ));
            }
            for c in &ms.contrasts {
                out.push_str(&format!(
                    "milestone_contrast,{},{},{},,{},{},{},{},{},{}\n",
                    c.treat_arm,
                    c.ref_arm,
                    ms.m,
                    c.inference.estimate,
                    c.inference.ci_low,
                    c.inference.ci_high,
                    c.inference.p_value,
                    c.inference.n_resamples,
                    c.inference.n_failed,
                ));
            }
        }
        for (section, entries) in [("tau", &self.tau), ("susceptible_tau", &self.susceptible_tau)]
        {
            for t in entries.iter() {
                out.push_str(&format!(
                    "{section},{},{},{},{},{},{},{},{},{},{}\n",
                    t.treat_arm,
                    t.ref_arm,
                    fmt_opt(t.milestone),
                    t.t_end,
                    t.at_end.estimate,
                    t.at_end.ci_low,
                    t.at_end.ci_high,
                    t.at_end.p_value,
                    t.at_end.n_resamples,
                    t.at_end.n_failed,
                ));
            }
        }
        for (section, entries) in
            [("drmst", &self.drmst), ("susceptible_drmst", &self.susceptible_drmst)]
        {
            for d in entries.iter() {
                out.push_str(&format!(
                    "{section},{},{},{},{},{},{},{},{},{},{}\n",
                    d.treat_arm,
                    d.ref_arm,
                    fmt_opt(d.milestone),
                    d.t_end,
                    d.at_end.estimate,
                    d.at_end.ci_low,
                    d.at_end.ci_high,
                    d.at_end.p_value,
                    d.at_end.n_resamples,
                    d.at_end.n_failed,
                ));
            }
        }
        out
    }
}
