//! Milestone mixture decomposition.
//!
//! A prespecified milestone `m` splits each arm into long-term survivors
//! (event-free beyond `m`, fraction `η(m) = S(m)`) and the susceptible
//! subgroup (event by `m`). The susceptible conditional survival is obtained
//! by transforming the Kaplan-Meier curve,
//!
//! ```text
//! S_a(t; m) = (S(t) - η(m)) / (1 - η(m)),     0 <= t <= m,
//! ```
//!
//! never by subsetting subjects: subjects censored before `m` cannot be
//! classified, so the curve transform is the only estimator that uses all
//! the data. The decomposition `S(t) = S_a(t;m)(1-η(m)) + η(m)` reassembles
//! exactly and is enforced by tests.

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::km::KmCurve;
use crate::scalar::Real;
use crate::stepfn::{StepFunction, SurvivalCurve};

/// `η̂(m) = Ŝ(m)`, the long-term survivor fraction at the milestone.
pub fn milestone_survival<T: Real>(curve: &KmCurve<T>, m: T) -> Result<T> {
    if !curve.covers(m) {
        return Err(Error::MilestoneBeyondFollowUp {
            m: m.to_f64().unwrap_or(f64::NAN),
            max_observed: curve.max_observed().to_f64().unwrap_or(f64::NAN),
        });
    }
    curve.eval(m)
}

/// Long-term benefit `η̂_treat(m) - η̂_ref(m)`.
pub fn milestone_contrast<T: Real>(eta_treat: T, eta_ref: T) -> T {
    debug_assert!(eta_treat >= T::zero() && eta_treat <= T::one());
    debug_assert!(eta_ref >= T::zero() && eta_ref <= T::one());
    eta_treat - eta_ref
}

/// Susceptible conditional survival `Ŝ_a(t; m)` on `[0, m]`.
///
/// Requires at least one event by `m` (otherwise the denominator vanishes).
pub fn susceptible_survival<T: Real>(curve: &KmCurve<T>, m: T) -> Result<SurvivalCurve<T>> {
    let eta = milestone_survival(curve, m)?;
    if eta == T::one() {
        return Err(Error::NoEventsBeforeMilestone { m: m.to_f64().unwrap_or(f64::NAN) });
    }
    let denom = T::one() - eta;
    let step = curve.survival().step();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, &u) in step.jump_times().iter().enumerate() {
        if u > m {
            break;
        }
        let v = (step.values()[k] - eta) / denom;
        // Guard against rounding just below zero at the endpoint.
        times.push(u);
        values.push(v.max(T::zero()));
    }
    let transformed = StepFunction::new(T::one(), times, values)
        .expect("jump times inherited from a valid curve");
    SurvivalCurve::new(transformed)
        .map_err(|_| Error::Validation("susceptible transform produced an invalid curve".into()))
}

/// `η̂` over a milestone grid; nonincreasing in `m` by KM monotonicity.
pub fn milestone_sweep<T: Real>(curve: &KmCurve<T>, grid: &[T]) -> Result<Vec<(T, T)>> {
    grid.iter().map(|&m| Ok((m, milestone_survival(curve, m)?))).collect()
}

/// Per-subject milestone classification `ξ(m) = I(T <= m)`.
///
/// `Some(true)`: event observed by `m`. `Some(false)`: observed beyond `m`
/// (event after `m`, or censored at or after `m`, which implies `T > m`).
/// `None`: censored strictly before `m`, so `ξ(m)` is not determined.
#[derive(Debug, Clone, PartialEq)]
pub struct MilestoneIndicator {
    pub m: f64,
    pub xi: Vec<Option<bool>>,
    pub n_determined: usize,
    pub n_undetermined: usize,
}

impl MilestoneIndicator {
    /// Fraction of subjects with `ξ(m) = 1` among the determined ones, the
    /// raw count-based companion to `1 - η̂(m)`.
    pub fn determined_event_fraction(&self) -> Option<f64> {
        if self.n_determined == 0 {
            return None;
        }
        let events = self.xi.iter().filter(|x| **x == Some(true)).count();
        Some(events as f64 / self.n_determined as f64)
    }
}

/// Classify every subject of the dataset at milestone `m`.
pub fn classify_milestone(ds: &SurvivalDataset, m: f64) -> MilestoneIndicator {
    let xi: Vec<Option<bool>> = ds
        .subjects()
        .iter()
        .map(|s| {
            if s.event && s.time <= m {
                Some(true)
            } else if s.time > m || (!s.event && s.time == m) {
                // Observed beyond m; censoring at exactly m still implies T > m.
                Some(false)
            } else {
                None
            }
        })
        .collect();
    let n_determined = xi.iter().filter(|x| x.is_some()).count();
    MilestoneIndicator { m, n_undetermined: xi.len() - n_determined, n_determined, xi }
}

/// Per-arm milestone summary: survivor fractions, contrasts against the
/// reference arm, and susceptible curves (absent where no event precedes the
/// milestone, in which case the susceptible quantities are undefined).
#[derive(Debug, Clone)]
pub struct MilestoneSummary<T> {
    pub m: T,
    /// `η̂_j(m)` per arm, indexed by arm id.
    pub eta: Vec<T>,
    /// `η̂_j(m) - η̂_0(m)` per arm (zero for the reference arm).
    pub contrasts: Vec<T>,
    /// `1 - η̂_j(m)` per arm.
    pub susceptible_fraction: Vec<T>,
    /// `Ŝ_a,j(t; m)` per arm; `None` when `η̂_j(m) = 1`.
    pub susceptible_curves: Vec<Option<SurvivalCurve<T>>>,
}

/// Build the milestone summary for all arms against arm 0.
pub fn milestone_summary<T: Real>(curves: &[KmCurve<T>], m: T) -> Result<MilestoneSummary<T>> {
    let eta: Vec<T> = curves
        .iter()
        .map(|c| milestone_survival(c, m))
        .collect::<Result<_>>()?;
    let contrasts = eta.iter().map(|&e| milestone_contrast(e, eta[0])).collect();
    let susceptible_fraction = eta.iter().map(|&e| T::one() - e).collect();
    let susceptible_curves = curves
        .iter()
        .map(|c| match susceptible_survival(c, m) {
            Ok(curve) => Ok(Some(curve)),
            Err(Error::NoEventsBeforeMilestone { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(MilestoneSummary { m, eta, contrasts, susceptible_fraction, susceptible_curves })
}
