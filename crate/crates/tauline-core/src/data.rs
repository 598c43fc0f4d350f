//! Subject-level trial data: types, CSV ingestion, and per-arm views.
//!
//! Times are stored as `f64` without rounding (digitized curves carry
//! sub-month precision). Event coding is `1` = event observed, `0` =
//! right-censored. Arm labels from the input are mapped to dense ids
//! `0..K-1` by first appearance, with id 0 the reference arm unless the
//! schema pins a different label; the label mapping is kept on the dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One subject: observed time, event indicator, arm id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subject {
    /// Observed time (event or censoring), nonnegative and finite.
    pub time: f64,
    /// `true` = event observed, `false` = right-censored.
    pub event: bool,
    /// Dense arm id; 0 is the reference arm.
    pub arm: u32,
}

/// A validated multi-arm trial dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    subjects: Vec<Subject>,
    arm_labels: Vec<String>,
    endpoint_label: String,
}

impl SurvivalDataset {
    /// Build from subjects and the label for each dense arm id. Every arm
    /// must have at least one subject and ids must be in range.
    pub fn new(
        subjects: Vec<Subject>,
        arm_labels: Vec<String>,
        endpoint_label: impl Into<String>,
    ) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::EmptyInput);
        }
        let k = arm_labels.len();
        let mut counts = vec![0usize; k];
        for (row, s) in subjects.iter().enumerate() {
            if !s.time.is_finite() {
                return Err(Error::InvalidTime { row, value: format!("{}", s.time) });
            }
            if s.time < 0.0 {
                return Err(Error::NegativeTime { row, value: s.time });
            }
            let id = s.arm as usize;
            if id >= k {
                return Err(Error::UnknownArm(s.arm));
            }
            counts[id] += 1;
        }
        if let Some(id) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyArm(arm_labels[id].clone()));
        }
        Ok(Self { subjects, arm_labels, endpoint_label: endpoint_label.into() })
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_arms(&self) -> usize {
        self.arm_labels.len()
    }

    /// Original input label for a dense arm id.
    pub fn arm_label(&self, arm: u32) -> &str {
        &self.arm_labels[arm as usize]
    }

    pub fn arm_labels(&self) -> &[String] {
        &self.arm_labels
    }

    pub fn endpoint_label(&self) -> &str {
        &self.endpoint_label
    }

    pub fn arm_size(&self, arm: u32) -> usize {
        self.subjects.iter().filter(|s| s.arm == arm).count()
    }
}

/// Sorted single-arm view: times nondecreasing, events parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmView<T> {
    times: Vec<T>,
    events: Vec<bool>,
}

impl<T: Real> ArmView<T> {
    /// Build from unsorted observations; sorts stably by time so ties keep
    /// input order (the event-before-censoring convention at tied times is
    /// applied downstream, in the risk-set accounting).
    pub fn new(mut obs: Vec<(T, bool)>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if obs.iter().any(|(t, _)| !t.is_finite() || *t < T::zero()) {
            return Err(Error::Validation("arm times must be finite and nonnegative".into()));
        }
        obs.sort_by(|a, b| crate::scalar::cmp_total(&a.0, &b.0));
        Ok(Self {
            times: obs.iter().map(|o| o.0).collect(),
            events: obs.iter().map(|o| o.1).collect(),
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn max_time(&self) -> T {
        *self.times.last().expect("nonempty by construction")
    }
}

/// Per-arm views, indexed by dense arm id.
pub fn split_by_arm(ds: &SurvivalDataset) -> Vec<ArmView<f64>> {
    let mut buckets: Vec<Vec<(f64, bool)>> = vec![Vec::new(); ds.n_arms()];
    for s in ds.subjects() {
        buckets[s.arm as usize].push((s.time, s.event));
    }
    buckets
        .into_iter()
        .map(|obs| ArmView::new(obs).expect("dataset invariant: every arm nonempty"))
        .collect()
}

/// Column-name mapping for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time: String,
    pub event: String,
    pub arm: String,
    /// Label to pin as the reference arm (dense id 0). When absent, the
    /// first label encountered becomes the reference.
    pub reference_arm: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            event: "event".into(),
            arm: "arm".into(),
            reference_arm: None,
        }
    }
}

/// Load a dataset from a CSV file. Header row required; `#` lines ignored;
/// row order preserved.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.as_ref().display())))?;
    parse_csv(&text, schema)
}

/// Parse CSV text; see [`load_csv`].
pub fn parse_csv(text: &str, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());

    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col_idx = |name: &str| -> Result<usize> {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let time_idx = col_idx(&schema.time)?;
    let event_idx = col_idx(&schema.event)?;
    let arm_idx = col_idx(&schema.arm)?;

    let mut label_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut arm_labels: Vec<String> = Vec::new();
    if let Some(reference) = &schema.reference_arm {
        label_ids.insert(reference.clone(), 0);
        arm_labels.push(reference.clone());
    }

    let mut subjects = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1; // 1-based, counting the physical file line
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let need = time_idx.max(event_idx).max(arm_idx);
        if fields.len() <= need {
            return Err(Error::Validation(format!("row {row}: expected {} fields", need + 1)));
        }
        let time: f64 = fields[time_idx]
            .parse()
            .map_err(|_| Error::InvalidTime { row, value: fields[time_idx].to_string() })?;
        if !time.is_finite() {
            return Err(Error::InvalidTime { row, value: fields[time_idx].to_string() });
        }
        if time < 0.0 {
            return Err(Error::NegativeTime { row, value: time });
        }
        let event = match fields[event_idx] {
            "1" => true,
            "0" => false,
            other => return Err(Error::InvalidEvent { row, value: other.to_string() }),
        };
        let label = fields[arm_idx];
        let arm = match label_ids.get(label) {
            Some(&id) => id,
            None => {
                let id = arm_labels.len() as u32;
                label_ids.insert(label.to_string(), id);
                arm_labels.push(label.to_string());
                id
            }
        };
        subjects.push(Subject { time, event, arm });
    }

    SurvivalDataset::new(subjects, arm_labels, "")
}

/// Serialize a dataset back to CSV with the schema's column names and the
/// original arm labels. `load_csv ∘ write_csv` is the identity on valid
/// datasets.
pub fn to_csv(ds: &SurvivalDataset, schema: &CsvSchema) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{}", schema.time, schema.event, schema.arm);
    for s in ds.subjects() {
        let _ = writeln!(
            out,
            "{},{},{}",
            s.time,
            if s.event { 1 } else { 0 },
            ds.arm_label(s.arm)
        );
    }
    out
}

/// Write a dataset to a CSV file; see [`to_csv`].
pub fn write_csv(ds: &SurvivalDataset, path: impl AsRef<Path>, schema: &CsvSchema) -> Result<()> {
    std::fs::write(path.as_ref(), to_csv(ds, schema))
        .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.as_ref().display())))
}
