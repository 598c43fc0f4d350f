//! Stratified bootstrap inference for scalar estimands and curve bands.
//!
//! Resampling is with replacement within each arm, preserving arm sizes.
//! Resample `i` draws from its own generator seeded by `(master seed, i)`
//! via [`crate::rng::derive_seed`], so results are bit-identical regardless
//! of how many threads execute the resamples. Resamples on which the
//! estimand is undefined (for example no event before the milestone) are
//! excluded and reported; they are never retried, which would bias the
//! resampling distribution.
//!
//! Intervals are percentile intervals. The two-sided P value puts half
//! weight on resamples that hit zero exactly and is floored at `2/B`: a
//! resampling P value cannot be exactly zero.

use rayon::prelude::*;

use crate::data::{split_by_arm, ArmView, SurvivalDataset};
use crate::error::{Error, Result};
use crate::km::{fit_km, KmCurve};
use crate::milestone::milestone_survival;
use crate::rmst::drmst_process;
use crate::rng::{derive_seed, SplitMix64};
use crate::tau::tau_process;
use crate::{rmst, tau};

/// Stream tag separating bootstrap seeds from other consumers of the master
/// seed.
const BOOT_STREAM: u64 = 0x626F_6F74; // "boot"

/// Scalar quantity to bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimandKind {
    /// `η̂_treat(m) - η̂_ref(m)`.
    MilestoneContrast { m: f64 },
    /// Overall `τ̂(t)`.
    TauAt { t: f64 },
    /// Susceptible `τ̂_a(t; m)`.
    SusceptibleTauAt { t: f64, m: f64 },
    /// Overall `μ̂ᴰ(t)`.
    DrmstAt { t: f64 },
    /// Susceptible `μ̂ᴰ_a(t; m)`.
    SusceptibleDrmstAt { t: f64, m: f64 },
}

/// A scalar estimand bound to an arm pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimand {
    pub kind: EstimandKind,
    pub treat_arm: u32,
    pub ref_arm: u32,
}

/// Point estimate with percentile interval and two-sided bootstrap P value.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub level: f64,
    pub n_resamples: usize,
    pub n_failed: usize,
    pub seed: u64,
    /// Warning: the point estimate fell outside its own percentile interval,
    /// which can happen only through failed-resample skew.
    pub point_outside_ci: bool,
}

/// Curve family to bootstrap pointwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    Tau,
    SusceptibleTau { m: f64 },
    Drmst,
    SusceptibleDrmst { m: f64 },
}

/// Pointwise percentile band over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBand {
    pub grid: Vec<f64>,
    pub point: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: f64,
    pub n_resamples: usize,
    pub n_failed: usize,
    pub seed: u64,
}

fn eval_scalar(treat: &KmCurve<f64>, reference: &KmCurve<f64>, kind: EstimandKind) -> Result<f64> {
    match kind {
        EstimandKind::MilestoneContrast { m } => {
            Ok(milestone_survival(treat, m)? - milestone_survival(reference, m)?)
        }
        EstimandKind::TauAt { t } => Ok(tau_process(treat, reference, t)?.eval(t)),
        EstimandKind::SusceptibleTauAt { t, m } => {
            if t > m {
                return Err(Error::DomainExceeded { t, domain_end: m });
            }
            Ok(tau::susceptible_tau(treat, reference, m)?.eval(t))
        }
        EstimandKind::DrmstAt { t } => Ok(drmst_process(treat, reference, t)?.eval(t)),
        EstimandKind::SusceptibleDrmstAt { t, m } => {
            if t > m {
                return Err(Error::DomainExceeded { t, domain_end: m });
            }
            Ok(rmst::susceptible_drmst(treat, reference, m)?.eval(t))
        }
    }
}

fn eval_curve(
    treat: &KmCurve<f64>,
    reference: &KmCurve<f64>,
    kind: CurveKind,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let t_end = *grid.last().expect("grid validated nonempty");
    match kind {
        CurveKind::Tau => {
            let c = tau_process(treat, reference, t_end)?;
            Ok(grid.iter().map(|&t| c.eval(t)).collect())
        }
        CurveKind::SusceptibleTau { m } => {
            if t_end > m {
                return Err(Error::DomainExceeded { t: t_end, domain_end: m });
            }
            let c = tau::susceptible_tau(treat, reference, m)?;
            Ok(grid.iter().map(|&t| c.eval(t)).collect())
        }
        CurveKind::Drmst => {
            let c = drmst_process(treat, reference, t_end)?;
            Ok(grid.iter().map(|&t| c.eval(t)).collect())
        }
        CurveKind::SusceptibleDrmst { m } => {
            if t_end > m {
                return Err(Error::DomainExceeded { t: t_end, domain_end: m });
            }
            let c = rmst::susceptible_drmst(treat, reference, m)?;
            Ok(grid.iter().map(|&t| c.eval(t)).collect())
        }
    }
}

/// Draw a within-arm resample of the same size.
fn resample_arm(view: &ArmView<f64>, rng: &mut SplitMix64) -> ArmView<f64> {
    let n = view.n();
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.next_index(n);
        obs.push((view.times()[k], view.events()[k]));
    }
    ArmView::new(obs).expect("resample of a valid view is valid")
}

/// Resampled KM pair for resample `i`. Arms are drawn in ascending id order
/// so the stream layout is part of the determinism contract.
fn resample_pair(
    views: &[ArmView<f64>],
    treat_arm: u32,
    ref_arm: u32,
    seed: u64,
    i: u64,
) -> (KmCurve<f64>, KmCurve<f64>) {
    let mut rng = SplitMix64::new(derive_seed(seed, BOOT_STREAM, i));
    let lo = treat_arm.min(ref_arm);
    let hi = treat_arm.max(ref_arm);
    let first = resample_arm(&views[lo as usize], &mut rng);
    let second = resample_arm(&views[hi as usize], &mut rng);
    let (treat_view, ref_view) = if treat_arm == lo { (first, second) } else { (second, first) };
    (fit_km(&treat_view), fit_km(&ref_view))
}

fn validate_common(
    ds: &SurvivalDataset,
    treat_arm: u32,
    ref_arm: u32,
    n_resamples: usize,
    level: f64,
) -> Result<Vec<ArmView<f64>>> {
    if treat_arm as usize >= ds.n_arms() {
        return Err(Error::UnknownArm(treat_arm));
    }
    if ref_arm as usize >= ds.n_arms() {
        return Err(Error::UnknownArm(ref_arm));
    }
    if treat_arm == ref_arm {
        return Err(Error::Validation("treatment and reference arms must differ".into()));
    }
    if n_resamples < 100 {
        return Err(Error::Validation(format!(
            "need at least 100 resamples, got {n_resamples}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("level must be in (0,1), got {level}")));
    }
    Ok(split_by_arm(ds))
}

/// Interpolated quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let k = sorted.len();
    if k == 1 {
        return sorted[0];
    }
    let h = p * (k - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(k - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn percentile_interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    (quantile_sorted(sorted, alpha / 2.0), quantile_sorted(sorted, 1.0 - alpha / 2.0))
}

fn two_sided_p(stats: &[f64]) -> f64 {
    let b = stats.len() as f64;
    let neg = stats.iter().filter(|&&x| x < 0.0).count() as f64;
    let pos = stats.iter().filter(|&&x| x > 0.0).count() as f64;
    let zero = b - neg - pos;
    let p = 2.0 * (neg + 0.5 * zero).min(pos + 0.5 * zero) / b;
    p.max(2.0 / b).min(1.0)
}

/// Bootstrap a scalar estimand.
pub fn bootstrap(
    ds: &SurvivalDataset,
    est: &Estimand,
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<InferenceResult> {
    let views = validate_common(ds, est.treat_arm, est.ref_arm, n_resamples, level)?;
    let full_treat = fit_km(&views[est.treat_arm as usize]);
    let full_ref = fit_km(&views[est.ref_arm as usize]);
    let point = eval_scalar(&full_treat, &full_ref, est.kind)
        .map_err(|e| Error::EstimandUndefinedOnFullData(Box::new(e)))?;

    let draws: Vec<Option<f64>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let (kt, kr) = resample_pair(&views, est.treat_arm, est.ref_arm, seed, i);
            eval_scalar(&kt, &kr, est.kind).ok()
        })
        .collect();

    let mut stats: Vec<f64> = draws.iter().filter_map(|d| *d).collect();
    let n_failed = n_resamples - stats.len();
    if n_failed * 10 > n_resamples {
        return Err(Error::TooManyFailedResamples { failed: n_failed, total: n_resamples });
    }
    stats.sort_by(|a, b| a.total_cmp(b));
    let (ci_low, ci_high) = percentile_interval(&stats, level);
    let p_value = two_sided_p(&stats);
    Ok(InferenceResult {
        point,
        ci_low,
        ci_high,
        p_value,
        level,
        n_resamples,
        n_failed,
        seed,
        point_outside_ci: point < ci_low || point > ci_high,
    })
}

/// Bootstrap pointwise percentile bands for a curve estimand over a grid.
/// Shares the resample streams with [`bootstrap`]: the band at a single grid
/// point coincides with the scalar result for the matching estimand and
/// seed.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_curve(
    ds: &SurvivalDataset,
    kind: CurveKind,
    treat_arm: u32,
    ref_arm: u32,
    grid: &[f64],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<CurveBand> {
    let views = validate_common(ds, treat_arm, ref_arm, n_resamples, level)?;
    if grid.is_empty() {
        return Err(Error::Validation("band grid must be nonempty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("band grid must be strictly increasing".into()));
    }
    if grid[0] < 0.0 {
        return Err(Error::Validation("band grid must be nonnegative".into()));
    }
    let full_treat = fit_km(&views[treat_arm as usize]);
    let full_ref = fit_km(&views[ref_arm as usize]);
    let point = eval_curve(&full_treat, &full_ref, kind, grid)
        .map_err(|e| Error::EstimandUndefinedOnFullData(Box::new(e)))?;

    let draws: Vec<Option<Vec<f64>>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let (kt, kr) = resample_pair(&views, treat_arm, ref_arm, seed, i);
            eval_curve(&kt, &kr, kind, grid).ok()
        })
        .collect();

    let valid: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    let n_failed = n_resamples - valid.len();
    if n_failed * 10 > n_resamples {
        return Err(Error::TooManyFailedResamples { failed: n_failed, total: n_resamples });
    }

    let mut lo = Vec::with_capacity(grid.len());
    let mut hi = Vec::with_capacity(grid.len());
    let mut column = Vec::with_capacity(valid.len());
    for g in 0..grid.len() {
        column.clear();
        column.extend(valid.iter().map(|v| v[g]));
        column.sort_by(|a, b| a.total_cmp(b));
        let (l, h) = percentile_interval(&column, level);
        lo.push(l);
        hi.push(h);
    }
    Ok(CurveBand {
        grid: grid.to_vec(),
        point,
        lo,
        hi,
        level,
        n_resamples,
        n_failed,
        seed,
    })
}
