//! Overall and milestone-stratified tau processes.
//!
//! The tau process compares pairwise event-time ordering between two arms up
//! to time `t`:
//!
//! ```text
//! τ(t) = ∫_0^t S_1(u) dF_0(u) - ∫_0^t S_0(u) dF_1(u)
//! ```
//!
//! The plug-in estimator replaces `S_j` with the Kaplan-Meier curves. On the
//! discrete estimates the convention is fixed so the result matches pairwise
//! enumeration on uncensored data exactly: masses at `u <= t` are included
//! (closed upper endpoint) and the integrand uses the right-continuous
//! survival value, so tied times across arms contribute zero.
//!
//! The susceptible variant applies the identical machinery to the
//! milestone-transformed curves; it never subsets subjects.

use crate::error::{Error, Result};
use crate::km::KmCurve;
use crate::milestone::susceptible_survival;
use crate::scalar::Real;
use crate::stepfn::{StepFunction, SurvivalCurve};

/// A tau process between one treatment arm and the reference arm.
#[derive(Debug, Clone)]
pub struct TauCurve<T> {
    process: StepFunction<T>,
    arm_pair: (u32, u32),
    milestone: Option<T>,
    domain_end: T,
}

impl<T: Real> TauCurve<T> {
    /// The step estimate; starts at zero and jumps only at event times of
    /// either arm.
    pub fn process(&self) -> &StepFunction<T> {
        &self.process
    }

    pub fn eval(&self, t: T) -> T {
        self.process.eval(t)
    }

    /// `(treatment arm, reference arm)` ids; informational.
    pub fn arm_pair(&self) -> (u32, u32) {
        self.arm_pair
    }

    pub fn with_arm_pair(mut self, treat: u32, reference: u32) -> Self {
        self.arm_pair = (treat, reference);
        self
    }

    /// Milestone for susceptible processes, absent for the overall process.
    pub fn milestone(&self) -> Option<T> {
        self.milestone
    }

    pub fn domain_end(&self) -> T {
        self.domain_end
    }
}

/// Accumulate the tau step process from two survival curves over the union
/// of their jump times up to `t_end`.
fn tau_from_survival<T: Real>(
    treat: &SurvivalCurve<T>,
    reference: &SurvivalCurve<T>,
    t_end: T,
) -> StepFunction<T> {
    let s1 = treat.step();
    let s0 = reference.step();
    let mut times = Vec::with_capacity(s0.n_jumps() + s1.n_jumps());
    let mut values = Vec::with_capacity(times.capacity());
    let mut acc = T::zero();
    let (mut i0, mut i1) = (0, 0);
    loop {
        let u0 = s0.jump_times().get(i0).copied();
        let u1 = s1.jump_times().get(i1).copied();
        let u = match (u0, u1) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => break,
        };
        if u > t_end {
            break;
        }
        // Masses of F_j at u are drops of S_j; the integrands use the
        // post-jump survival of the opposite arm (ties cancel). Both terms
        // combine into one increment so that swapping the arms negates the
        // process bit-exactly.
        let mut gain = T::zero();
        let mut loss = T::zero();
        if u0 == Some(u) {
            let mass0 = s0.value_before(i0) - s0.values()[i0];
            gain = s1.eval(u) * mass0;
            i0 += 1;
        }
        if u1 == Some(u) {
            let mass1 = s1.value_before(i1) - s1.values()[i1];
            loss = s0.eval(u) * mass1;
            i1 += 1;
        }
        acc = acc + (gain - loss);
        times.push(u);
        values.push(acc);
    }
    StepFunction::new(T::zero(), times, values).expect("merged jump grid is strictly increasing")
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

/// Overall tau process `τ̂(t)` for `t <= t_end`.
pub fn tau_process<T: Real>(
    treat: &KmCurve<T>,
    reference: &KmCurve<T>,
    t_end: T,
) -> Result<TauCurve<T>> {
    check_covers(treat, t_end)?;
    check_covers(reference, t_end)?;
    Ok(TauCurve {
        process: tau_from_survival(treat.survival(), reference.survival(), t_end),
        arm_pair: (1, 0),
        milestone: None,
        domain_end: t_end,
    })
}

/// Susceptible tau process `τ̂_a(t; m)` on `[0, m]`, computed from the
/// milestone-transformed curves of both arms.
pub fn susceptible_tau<T: Real>(
    treat: &KmCurve<T>,
    reference: &KmCurve<T>,
    m: T,
) -> Result<TauCurve<T>> {
    let sa_treat = susceptible_survival(treat, m)?;
    let sa_reference = susceptible_survival(reference, m)?;
    Ok(TauCurve {
        process: tau_from_survival(&sa_treat, &sa_reference, m),
        arm_pair: (1, 0),
        milestone: Some(m),
        domain_end: m,
    })
}

/// Kernel-smoothed slope of a tau step estimate on a uniform grid.
///
/// The jump measure of the step estimate is smoothed with an Epanechnikov
/// kernel of the given bandwidth; sign changes of the output estimate the
/// hazard-reversal times. Diagnostic output only, never used for inference.
pub fn tau_slope<T: Real>(tc: &TauCurve<T>, bandwidth: T) -> Result<StepFunction<T>> {
    let domain = tc.domain_end;
    let two = T::from_f64_lit(2.0);
    if bandwidth <= T::zero() || bandwidth > domain / two {
        return Err(Error::BandwidthTooLarge {
            bandwidth: bandwidth.to_f64().unwrap_or(f64::NAN),
            domain: domain.to_f64().unwrap_or(f64::NAN),
        });
    }
    let step = &tc.process;
    let n_grid = 201usize;
    let mut grid = Vec::with_capacity(n_grid);
    let mut slopes = Vec::with_capacity(n_grid);
    let kernel_scale = T::from_f64_lit(0.75);
    for g in 0..n_grid {
        let t = domain * T::from_count(g) / T::from_count(n_grid - 1);
        let mut acc = T::zero();
        for (k, &u) in step.jump_times().iter().enumerate() {
            let x = (u - t) / bandwidth;
            if x < -T::one() {
                continue;
            }
            if x > T::one() {
                break;
            }
            let weight = kernel_scale * (T::one() - x * x);
            acc = acc + weight * step.mass_at(k);
        }
        grid.push(t);
        slopes.push(acc / bandwidth);
    }
    // The grid starts at zero, so the initial value is never observed; use
    // the first slope for continuity.
    let initial = slopes[0];
    StepFunction::new(initial, grid, slopes)
}

/// First time at which a slope estimate changes sign from negative to
/// nonnegative; the kernel-smoothed hazard-reversal diagnostic.
pub fn slope_sign_change<T: Real>(slope: &StepFunction<T>) -> Option<T> {
    let values = slope.values();
    let times = slope.jump_times();
    for k in 1..values.len() {
        if values[k - 1] < T::zero() && values[k] >= T::zero() {
            return Some(times[k]);
        }
    }
    None
}

/// Direction of a turning point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnDirection {
    Min,
    Max,
}

/// Turning point of a tau trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint<T> {
    pub time: T,
    pub direction: TurnDirection,
    pub tau_value: T,
    /// Set when the trajectory is completely flat and the turning time is
    /// therefore meaningless.
    pub flat: bool,
}

/// Earliest global minimizer of the tau step estimate over its jump grid.
/// Ties break toward the earliest time; a flat curve returns its first jump
/// with the flatness flag set.
pub fn turning_time<T: Real>(tc: &TauCurve<T>) -> TurningPoint<T> {
    let times = tc.process.jump_times();
    let values = tc.process.values();
    if times.is_empty() {
        return TurningPoint {
            time: T::zero(),
            direction: TurnDirection::Min,
            tau_value: T::zero(),
            flat: true,
        };
    }
    let initial = tc.process.initial_value();
    let flat = values.iter().all(|&v| v == initial);
    let mut best = 0usize;
    for k in 1..values.len() {
        if values[k] < values[best] {
            best = k;
        }
    }
    TurningPoint {
        time: times[best],
        direction: TurnDirection::Min,
        tau_value: values[best],
        flat,
    }
}
