//! Right-continuous piecewise-constant function algebra.
//!
//! [`StepFunction`] is the carrier for every curve-valued estimator in the
//! toolkit: survival curves, cumulative distribution functions, tau
//! processes, and smoothed slopes. Evaluation is right-continuous, point
//! queries use binary search, and integrals run a single merged-grid sweep
//! so they are exact up to floating rounding (no quadrature error).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Right-continuous step function: `f(t) = values[k]` for the largest `k`
/// with `jump_times[k] <= t`, and `initial_value` before the first jump.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    initial_value: T,
    jump_times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> StepFunction<T> {
    /// Build from jump times and post-jump values. Jump times must be
    /// strictly increasing and finite, with one value per jump.
    pub fn new(initial_value: T, jump_times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::Validation(format!(
                "step function has {} jump times but {} values",
                jump_times.len(),
                values.len()
            )));
        }
        for w in jump_times.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Validation(
                    "step function jump times must be strictly increasing".into(),
                ));
            }
        }
        if jump_times.iter().any(|t| !t.is_finite())
            || values.iter().any(|v| !v.is_finite())
            || !initial_value.is_finite()
        {
            return Err(Error::Validation("step function values must be finite".into()));
        }
        Ok(Self { initial_value, jump_times, values })
    }

    /// Constant function with no jumps.
    pub fn constant(value: T) -> Self {
        Self { initial_value: value, jump_times: Vec::new(), values: Vec::new() }
    }

    pub fn initial_value(&self) -> T {
        self.initial_value
    }

    pub fn jump_times(&self) -> &[T] {
        &self.jump_times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, t: T) -> T {
        // partition_point returns the number of jump times <= t.
        let k = self.jump_times.partition_point(|&u| u <= t);
        if k == 0 {
            self.initial_value
        } else {
            self.values[k - 1]
        }
    }

    /// Value immediately before jump `k` (the left limit at `jump_times[k]`).
    pub fn value_before(&self, k: usize) -> T {
        if k == 0 {
            self.initial_value
        } else {
            self.values[k - 1]
        }
    }

    /// Exact `∫_a^b f(u) du` over the step partition.
    pub fn integrate(&self, a: T, b: T) -> Result<T> {
        if a < T::zero() || b < a {
            return Err(Error::Validation(format!(
                "integration bounds must satisfy 0 <= a <= b, got a={a}, b={b}"
            )));
        }
        let mut acc = T::zero();
        let mut left = a;
        let mut value = self.eval(a);
        // Jumps strictly inside (a, b] advance the integrand.
        let start = self.jump_times.partition_point(|&u| u <= a);
        for k in start..self.jump_times.len() {
            let u = self.jump_times[k];
            if u >= b {
                break;
            }
            acc = acc + value * (u - left);
            left = u;
            value = self.values[k];
        }
        acc = acc + value * (b - left);
        Ok(acc)
    }

    /// Jump mass at index `k`: `values[k] - value_before(k)`.
    pub fn mass_at(&self, k: usize) -> T {
        self.values[k] - self.value_before(k)
    }
}

/// `Σ_{u <= t} g(u) · ΔF(u)` over the jumps of `cdf`, with `g` evaluated
/// right-continuously at each jump (mass at `u = t` is included). `cdf` must
/// be nondecreasing.
pub fn stieltjes_sum<T: Real>(g: &StepFunction<T>, cdf: &StepFunction<T>, t: T) -> T {
    let mut acc = T::zero();
    for k in 0..cdf.n_jumps() {
        let u = cdf.jump_times[k];
        if u > t {
            break;
        }
        acc = acc + g.eval(u) * cdf.mass_at(k);
    }
    acc
}

/// Step function constrained to be a survival curve: starts at one, never
/// increases, stays within `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T>(StepFunction<T>);

impl<T: Real> SurvivalCurve<T> {
    pub fn new(step: StepFunction<T>) -> Result<Self> {
        if step.initial_value != T::one() {
            return Err(Error::Validation("survival curve must start at 1".into()));
        }
        let mut prev = T::one();
        for &v in &step.values {
            if v > prev || v < T::zero() {
                return Err(Error::Validation(
                    "survival curve values must be nonincreasing within [0, 1]".into(),
                ));
            }
            prev = v;
        }
        Ok(Self(step))
    }

    /// The survival function that is one everywhere.
    pub fn all_one() -> Self {
        Self(StepFunction::constant(T::one()))
    }

    pub fn step(&self) -> &StepFunction<T> {
        &self.0
    }

    pub fn eval(&self, t: T) -> T {
        self.0.eval(t)
    }

    /// Cumulative distribution function `F = 1 - S` as a step function.
    pub fn cdf(&self) -> StepFunction<T> {
        StepFunction {
            initial_value: T::zero(),
            jump_times: self.0.jump_times.clone(),
            values: self.0.values.iter().map(|&s| T::one() - s).collect(),
        }
    }

    /// Smallest survival value attained (the terminal value of the curve).
    pub fn final_value(&self) -> T {
        self.0.values.last().copied().unwrap_or(T::one())
    }
}
