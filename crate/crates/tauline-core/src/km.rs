//! Kaplan-Meier estimation, risk-set accounting, and data-maturity checks.
//!
//! Ties between events and censorings at the same time are resolved with the
//! standard convention: events precede censorings, so a subject censored at
//! an event time stays in the risk set for that event. All uncertainty is
//! left to the bootstrap; no Greenwood variance is computed here.

use crate::data::ArmView;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stepfn::{StepFunction, SurvivalCurve};

/// Product-limit estimate for one arm, with the per-event-time counts needed
/// by downstream estimators.
#[derive(Debug, Clone)]
pub struct KmCurve<T> {
    survival: SurvivalCurve<T>,
    event_times: Vec<T>,
    /// Events at each event time.
    d: Vec<u32>,
    /// At risk just before each event time.
    y: Vec<u32>,
    n: usize,
    max_observed: T,
    last_is_event: bool,
}

impl<T: Real> KmCurve<T> {
    pub fn survival(&self) -> &SurvivalCurve<T> {
        &self.survival
    }

    pub fn event_times(&self) -> &[T] {
        &self.event_times
    }

    pub fn events_at(&self) -> &[u32] {
        &self.d
    }

    pub fn at_risk_at(&self) -> &[u32] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_observed(&self) -> T {
        self.max_observed
    }

    pub fn last_is_event(&self) -> bool {
        self.last_is_event
    }

    /// True when the estimate is fully determined for every `t`: the last
    /// observation is an event and the curve reaches zero. Such a curve is
    /// zero beyond `max_observed` by the product-limit identity, so
    /// evaluation there is not an extrapolation.
    pub fn is_complete(&self) -> bool {
        self.last_is_event && self.survival.final_value() == T::zero()
    }

    /// Right-continuous `Ŝ(t)`. Beyond `max_observed` the estimate is
    /// undefined unless the curve is complete (then it is zero).
    pub fn eval(&self, t: T) -> Result<T> {
        if t <= self.max_observed {
            Ok(self.survival.eval(t))
        } else if self.is_complete() {
            Ok(T::zero())
        } else {
            Err(Error::DomainExceeded {
                t: t.to_f64().unwrap_or(f64::NAN),
                domain_end: self.max_observed.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// True when `eval(t)` is defined.
    pub fn covers(&self, t: T) -> bool {
        t <= self.max_observed || self.is_complete()
    }
}

/// Fit the product-limit estimator for one arm.
pub fn fit_km<T: Real>(view: &ArmView<T>) -> KmCurve<T> {
    let times = view.times();
    let events = view.events();
    let n = view.n();

    let mut event_times = Vec::new();
    let mut d_out = Vec::new();
    let mut y_out = Vec::new();
    let mut values = Vec::new();

    let mut survival = T::one();
    let mut at_risk = n as u32;
    let mut i = 0;
    let mut last_group_has_censoring = true;
    while i < times.len() {
        let t = times[i];
        let mut d = 0u32;
        let mut c = 0u32;
        while i < times.len() && times[i] == t {
            if events[i] {
                d += 1;
            } else {
                c += 1;
            }
            i += 1;
        }
        if d > 0 {
            survival = survival * (T::one() - T::from_count(d as usize) / T::from_count(at_risk as usize));
            event_times.push(t);
            d_out.push(d);
            y_out.push(at_risk);
            values.push(survival);
        }
        at_risk -= d + c;
        last_group_has_censoring = c > 0;
    }

    let step = StepFunction::new(T::one(), event_times.clone(), values)
        .expect("event times distinct and increasing by construction");
    let survival =
        SurvivalCurve::new(step).expect("product-limit values are monotone in [0, 1]");

    KmCurve {
        survival,
        event_times,
        d: d_out,
        y: y_out,
        n,
        max_observed: view.max_time(),
        last_is_event: !last_group_has_censoring,
    }
}

/// Exact at-risk process `Y(t) = #{i : X_i >= t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtRiskProcess<T> {
    grid: Vec<T>,
    counts: Vec<u32>,
    n: usize,
    sorted_times: Vec<T>,
}

impl<T: Real> AtRiskProcess<T> {
    /// Distinct observed times.
    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    /// `Y` at each grid time.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Y(t)` at an arbitrary time.
    pub fn at(&self, t: T) -> u32 {
        (self.n - self.sorted_times.partition_point(|&x| x < t)) as u32
    }
}

/// Compute the at-risk process for one arm.
pub fn at_risk<T: Real>(view: &ArmView<T>) -> AtRiskProcess<T> {
    let sorted_times = view.times().to_vec();
    let n = view.n();
    let mut grid = Vec::new();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < sorted_times.len() {
        let t = sorted_times[i];
        grid.push(t);
        counts.push((n - i) as u32);
        while i < sorted_times.len() && sorted_times[i] == t {
            i += 1;
        }
    }
    AtRiskProcess { grid, counts, n, sorted_times }
}

/// Outcome of a data-maturity check at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaturityReport<T> {
    pub t: T,
    pub fraction_at_risk: T,
    pub threshold: T,
    /// Set when the at-risk fraction is strictly below the threshold.
    pub flag: bool,
}

/// Fraction still at risk at `t` against a good-practice threshold
/// (typically 0.10 to 0.20).
pub fn maturity_check<T: Real>(view: &ArmView<T>, t: T, threshold: T) -> Result<MaturityReport<T>> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::Validation(format!("maturity threshold must be in (0,1), got {threshold}")));
    }
    if t < T::zero() {
        return Err(Error::Validation(format!("maturity time must be nonnegative, got {t}")));
    }
    let process = at_risk(view);
    let fraction = T::from_count(process.at(t) as usize) / T::from_count(view.n());
    Ok(MaturityReport { t, fraction_at_risk: fraction, threshold, flag: fraction < threshold })
}
