//! Restricted mean survival time and dRMST processes.
//!
//! `rmst(t) = ∫_0^t Ŝ(u) du` by exact step integration. The dRMST process
//! `μ̂ᴰ(t) = ∫_0^t (Ŝ_1 - Ŝ_0) du`, viewed as a function of the upper limit,
//! is continuous and piecewise linear with kinks only at jump times of
//! either curve, so it is represented by its breakpoints exactly rather than
//! sampled on a grid.

use crate::error::{Error, Result};
use crate::km::KmCurve;
use crate::milestone::susceptible_survival;
use crate::scalar::Real;
use crate::stepfn::SurvivalCurve;

/// Continuous piecewise-linear curve through `(times[k], values[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Linear interpolation; constant extension outside the breakpoints.
    pub fn eval(&self, t: T) -> T {
        if self.times.is_empty() {
            return T::zero();
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.values[last];
        }
        let hi = self.times.partition_point(|&u| u <= t);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let (v0, v1) = (self.values[hi - 1], self.values[hi]);
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }
}

/// A dRMST process between one treatment arm and the reference arm.
#[derive(Debug, Clone)]
pub struct DrmstCurve<T> {
    process: PiecewiseLinear<T>,
    arm_pair: (u32, u32),
    milestone: Option<T>,
}

impl<T: Real> DrmstCurve<T> {
    pub fn process(&self) -> &PiecewiseLinear<T> {
        &self.process
    }

    pub fn eval(&self, t: T) -> T {
        self.process.eval(t)
    }

    pub fn arm_pair(&self) -> (u32, u32) {
        self.arm_pair
    }

    pub fn with_arm_pair(mut self, treat: u32, reference: u32) -> Self {
        self.arm_pair = (treat, reference);
        self
    }

    pub fn milestone(&self) -> Option<T> {
        self.milestone
    }

    pub fn domain_end(&self) -> T {
        self.process.times.last().copied().unwrap_or(T::zero())
    }
}

fn check_covers<T: Real>(curve: &KmCurve<T>, t: T) -> Result<()> {
    if curve.covers(t) {
        Ok(())
    } else {
        Err(Error::DomainExceeded {
            t: t.to_f64().unwrap_or(f64::NAN),
            domain_end: curve.max_observed().to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `∫_0^t Ŝ(u) du`, the restricted mean survival time up to `t`.
pub fn rmst<T: Real>(curve: &KmCurve<T>, t: T) -> Result<T> {
    check_covers(curve, t)?;
    curve.survival().step().integrate(T::zero(), t)
}

/// Integrate `S_treat - S_ref` over the merged breakpoint grid.
fn drmst_from_survival<T: Real>(
    treat: &SurvivalCurve<T>,
    reference: &SurvivalCurve<T>,
    t_end: T,
) -> PiecewiseLinear<T> {
    let mut breaks: Vec<T> = Vec::with_capacity(
        treat.step().n_jumps() + reference.step().n_jumps() + 2,
    );
    breaks.push(T::zero());
    let mut push = |t: T| {
        if t > T::zero() && t < t_end {
            breaks.push(t);
        }
    };
    for &u in treat.step().jump_times() {
        push(u);
    }
    for &u in reference.step().jump_times() {
        push(u);
    }
    breaks.push(t_end);
    breaks.sort_by(crate::scalar::cmp_total);
    breaks.dedup();

    let mut values = Vec::with_capacity(breaks.len());
    let mut acc = T::zero();
    values.push(acc);
    for w in 0..breaks.len() - 1 {
        let (a, b) = (breaks[w], breaks[w + 1]);
        let diff = treat.eval(a) - reference.eval(a);
        acc = acc + diff * (b - a);
        values.push(acc);
    }
    PiecewiseLinear { times: breaks, values }
}

/// Overall dRMST process `μ̂ᴰ(t)` on `[0, t_end]`.
pub fn drmst_process<T: Real>(
    treat: &KmCurve<T>,
    reference: &KmCurve<T>,
    t_end: T,
) -> Result<DrmstCurve<T>> {
    check_covers(treat, t_end)?;
    check_covers(reference, t_end)?;
    Ok(DrmstCurve {
        process: drmst_from_survival(treat.survival(), reference.survival(), t_end),
        arm_pair: (1, 0),
        milestone: None,
    })
}

/// Milestone-stratified dRMST process on `[0, m]`, from the transformed
/// curves of both arms.
pub fn susceptible_drmst<T: Real>(
    treat: &KmCurve<T>,
    reference: &KmCurve<T>,
    m: T,
) -> Result<DrmstCurve<T>> {
    let sa_treat = susceptible_survival(treat, m)?;
    let sa_reference = susceptible_survival(reference, m)?;
    Ok(DrmstCurve {
        process: drmst_from_survival(&sa_treat, &sa_reference, m),
        arm_pair: (1, 0),
        milestone: Some(m),
    })
}
