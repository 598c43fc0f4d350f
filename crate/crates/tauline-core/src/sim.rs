//! Trial-data simulator and brute-force oracles.
//!
//! Every scenario reduces to one law per arm: a cure mass `pi` plus a
//! piecewise-constant hazard for the susceptible component. Cured subjects
//! never experience the event and are realized as administrative censoring
//! at the cutoff, mirroring how cure manifests in real trials. Event times
//! are sampled by inverting the cumulative hazard; subject `(arm, i)` draws
//! from its own seed stream, so datasets are reproducible and extending the
//! administrative cutoff only relabels censorings, never changes the
//! underlying event times.
//!
//! Truth sheets carry the analytic milestone fractions and the tau process
//! of the specified laws (by adaptive quadrature); they never depend on the
//! random generator.

use serde::{Deserialize, Serialize};

use crate::data::{ArmView, Subject, SurvivalDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

fn default_hr_before() -> f64 {
    1.2
}

fn default_hr_after() -> f64 {
    0.6
}

fn default_crossing_hr_before() -> f64 {
    0.5
}

fn default_crossing_hr_after() -> f64 {
    2.0
}

/// Data-generating law family.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Constant hazard per arm.
    Exponential { rates: Vec<f64> },
    /// Shared interval boundaries, one rate vector per arm
    /// (`rates[arm].len() == cuts.len() + 1`).
    PiecewiseExponential { cuts: Vec<f64>, rates: Vec<Vec<f64>> },
    /// Cure fraction per arm plus exponential susceptible component.
    CureMixture { cure_fractions: Vec<f64>, rates: Vec<f64> },
    /// Arm 1 hazard is `hr_before * base_rate` until the changepoint and
    /// `hr_after * base_rate` afterwards; arm 0 is exponential.
    DelayedEffect {
        base_rate: f64,
        changepoint: f64,
        #[serde(default = "default_hr_before")]
        hr_before: f64,
        #[serde(default = "default_hr_after")]
        hr_after: f64,
    },
    /// Same two-piece structure with defaults that make the hazards cross
    /// in the opposite direction.
    CrossingHazards {
        base_rate: f64,
        changepoint: f64,
        #[serde(default = "default_crossing_hr_before")]
        hr_before: f64,
        #[serde(default = "default_crossing_hr_after")]
        hr_after: f64,
    },
}

/// Complete simulation specification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n_per_arm: Vec<usize>,
    pub admin_censor_time: f64,
    /// Additional independent uniform censoring window `(lo, hi)`.
    #[serde(default)]
    pub accrual_censor: Option<(f64, f64)>,
    pub seed: u64,
}

/// One arm's law: cure mass plus piecewise-constant susceptible hazard.
#[derive(Debug, Clone)]
pub struct Law {
    pi: f64,
    cuts: Vec<f64>,
    rates: Vec<f64>,
}

impl Law {
    fn exponential(rate: f64) -> Self {
        Self { pi: 0.0, cuts: Vec::new(), rates: vec![rate] }
    }

    /// Cumulative hazard of the susceptible component.
    fn cum_hazard(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut lo = 0.0;
        for (k, &cut) in self.cuts.iter().enumerate() {
            if t <= cut {
                return acc + self.rates[k] * (t - lo);
            }
            acc += self.rates[k] * (cut - lo);
            lo = cut;
        }
        acc + self.rates[self.cuts.len()] * (t - lo)
    }

    fn hazard(&self, t: f64) -> f64 {
        let k = self.cuts.partition_point(|&c| c <= t);
        self.rates[k]
    }

    /// Invert the cumulative hazard: smallest `t` with `Λ(t) = e`.
    fn invert_cum_hazard(&self, e: f64) -> f64 {
        let mut acc = 0.0;
        let mut lo = 0.0;
        for (k, &cut) in self.cuts.iter().enumerate() {
            let seg = self.rates[k] * (cut - lo);
            if acc + seg >= e {
                return lo + (e - acc) / self.rates[k];
            }
            acc += seg;
            lo = cut;
        }
        lo + (e - acc) / self.rates[self.cuts.len()]
    }

    /// `S(t) = pi + (1 - pi) exp(-Λ(t))`.
    pub fn survival(&self, t: f64) -> f64 {
        self.pi + (1.0 - self.pi) * (-self.cum_hazard(t)).exp()
    }

    /// Density of the observable (susceptible-weighted) component.
    pub fn density(&self, t: f64) -> f64 {
        (1.0 - self.pi) * self.hazard(t) * (-self.cum_hazard(t)).exp()
    }
}

impl Scenario {
    pub fn n_arms(&self) -> usize {
        match &self.kind {
            ScenarioKind::Exponential { rates } => rates.len(),
            ScenarioKind::PiecewiseExponential { rates, .. } => rates.len(),
            ScenarioKind::CureMixture { cure_fractions, .. } => cure_fractions.len(),
            ScenarioKind::DelayedEffect { .. } | ScenarioKind::CrossingHazards { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_rates = |rates: &[f64]| -> Result<()> {
            if rates.is_empty() || rates.iter().any(|&r| !r.is_finite() || r <= 0.0) {
                return Err(Error::Validation("hazard rates must be positive and finite".into()));
            }
            Ok(())
        };
        match &self.kind {
            ScenarioKind::Exponential { rates } => check_rates(rates)?,
            ScenarioKind::PiecewiseExponential { cuts, rates } => {
                if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|&c| c <= 0.0) {
                    return Err(Error::Validation(
                        "piecewise cuts must be positive and strictly increasing".into(),
                    ));
                }
                for arm_rates in rates {
                    check_rates(arm_rates)?;
                    if arm_rates.len() != cuts.len() + 1 {
                        return Err(Error::Validation(format!(
                            "each arm needs {} rates for {} cuts",
                            cuts.len() + 1,
                            cuts.len()
                        )));
                    }
                }
            }
            ScenarioKind::CureMixture { cure_fractions, rates } => {
                check_rates(rates)?;
                if cure_fractions.len() != rates.len() {
                    return Err(Error::Validation(
                        "cure_fractions and rates must have one entry per arm".into(),
                    ));
                }
                if cure_fractions.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::Validation("cure fractions must lie in [0, 1]".into()));
                }
            }
            ScenarioKind::DelayedEffect { base_rate, changepoint, hr_before, hr_after }
            | ScenarioKind::CrossingHazards { base_rate, changepoint, hr_before, hr_after } => {
                check_rates(&[*base_rate, *hr_before, *hr_after])?;
                if !changepoint.is_finite() || *changepoint <= 0.0 {
                    return Err(Error::Validation("changepoint must be positive".into()));
                }
            }
        }
        if self.n_per_arm.len() != self.n_arms() {
            return Err(Error::Validation(format!(
                "n_per_arm must list {} arms",
                self.n_arms()
            )));
        }
        if self.n_per_arm.contains(&0) {
            return Err(Error::Validation("every arm needs at least one subject".into()));
        }
        if !self.admin_censor_time.is_finite() || self.admin_censor_time <= 0.0 {
            return Err(Error::Validation("admin_censor_time must be positive".into()));
        }
        if let Some((lo, hi)) = self.accrual_censor {
            if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
                return Err(Error::Validation(
                    "accrual censoring window must satisfy 0 <= lo < hi".into(),
                ));
            }
        }
        Ok(())
    }

    /// The law of each arm.
    pub fn laws(&self) -> Vec<Law> {
        match &self.kind {
            ScenarioKind::Exponential { rates } => {
                rates.iter().map(|&r| Law::exponential(r)).collect()
            }
            ScenarioKind::PiecewiseExponential { cuts, rates } => rates
                .iter()
                .map(|arm_rates| Law { pi: 0.0, cuts: cuts.clone(), rates: arm_rates.clone() })
                .collect(),
            ScenarioKind::CureMixture { cure_fractions, rates } => cure_fractions
                .iter()
                .zip(rates)
                .map(|(&pi, &r)| Law { pi, cuts: Vec::new(), rates: vec![r] })
                .collect(),
            ScenarioKind::DelayedEffect { base_rate, changepoint, hr_before, hr_after }
            | ScenarioKind::CrossingHazards { base_rate, changepoint, hr_before, hr_after } => {
                vec![
                    Law::exponential(*base_rate),
                    Law {
                        pi: 0.0,
                        cuts: vec![*changepoint],
                        rates: vec![hr_before * base_rate, hr_after * base_rate],
                    },
                ]
            }
        }
    }

    /// The time at which the arm hazards cross, when the scenario builds one
    /// in by construction.
    pub fn hazard_crossing(&self) -> Option<f64> {
        match &self.kind {
            ScenarioKind::DelayedEffect { changepoint, hr_before, hr_after, .. }
            | ScenarioKind::CrossingHazards { changepoint, hr_before, hr_after, .. } => {
                if (hr_before - 1.0) * (hr_after - 1.0) < 0.0 {
                    Some(*changepoint)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// Draw a dataset. Deterministic given the scenario seed; subject `(arm, i)`
/// owns the stream `derive_seed(seed, arm, i)` and consumes, in order: the
/// cure draw (cure scenarios only), the event draw (susceptible subjects
/// only), and the accrual-censoring draw (when the window is present).
pub fn simulate(sc: &Scenario) -> Result<SurvivalDataset> {
    sc.validate()?;
    let laws = sc.laws();
    let mut subjects = Vec::with_capacity(sc.n_per_arm.iter().sum());
    for (arm, law) in laws.iter().enumerate() {
        for i in 0..sc.n_per_arm[arm] {
            let mut rng = SplitMix64::new(derive_seed(sc.seed, arm as u64, i as u64));
            let cured = law.pi > 0.0 && rng.next_f64() < law.pi;
            let event_time = if cured {
                f64::INFINITY
            } else {
                law.invert_cum_hazard(rng.next_exp())
            };
            let mut censor_time = sc.admin_censor_time;
            if let Some((lo, hi)) = sc.accrual_censor {
                censor_time = censor_time.min(lo + (hi - lo) * rng.next_f64());
            }
            let (time, event) = if event_time <= censor_time {
                (event_time, true)
            } else {
                (censor_time, false)
            };
            subjects.push(Subject { time, event, arm: arm as u32 });
        }
    }
    let labels = (0..sc.n_arms()).map(|a| a.to_string()).collect();
    SurvivalDataset::new(subjects, labels, "simulated")
}

/// Analytic reference values for a scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TruthSheet {
    pub m: f64,
    /// True `η_j(m) = S_j(m)` per arm.
    pub eta: Vec<f64>,
    /// `η_j(m) - η_0(m)` per arm.
    pub contrasts: Vec<f64>,
    pub tau_grid: Vec<f64>,
    /// True `τ_j(t)` over the grid, one row per arm `j >= 1` versus arm 0.
    pub tau: Vec<Vec<f64>>,
    pub hazard_crossing: Option<f64>,
}

/// Adaptive Simpson quadrature with absolute tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// `τ_j(t)` for the specified laws by quadrature split at the hazard kinks.
fn true_tau(treat: &Law, reference: &Law, t: f64, tol: f64) -> f64 {
    let integrand =
        |u: f64| treat.survival(u) * reference.density(u) - reference.survival(u) * treat.density(u);
    let mut cuts: Vec<f64> = treat
        .cuts
        .iter()
        .chain(reference.cuts.iter())
        .copied()
        .filter(|&c| c > 0.0 && c < t)
        .collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &c in &cuts {
        acc += adaptive_simpson(&integrand, lo, c, tol / (cuts.len() + 1) as f64);
        lo = c;
    }
    acc + adaptive_simpson(&integrand, lo, t, tol / (cuts.len() + 1) as f64)
}

/// Analytic truth for a scenario: exact milestone fractions, quadrature tau
/// values (absolute tolerance 1e-6), and the built-in hazard crossing.
pub fn truth(sc: &Scenario, m: f64, t_grid: &[f64]) -> Result<TruthSheet> {
    sc.validate()?;
    if !m.is_finite() || m < 0.0 || t_grid.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::Validation("truth times must be nonnegative".into()));
    }
    let laws = sc.laws();
    let eta: Vec<f64> = laws.iter().map(|l| l.survival(m)).collect();
    let contrasts = eta.iter().map(|e| e - eta[0]).collect();
    let tau = laws[1..]
        .iter()
        .map(|law| t_grid.iter().map(|&t| true_tau(law, &laws[0], t, 1e-6)).collect())
        .collect();
    Ok(TruthSheet {
        m,
        eta,
        contrasts,
        tau_grid: t_grid.to_vec(),
        tau,
        hazard_crossing: sc.hazard_crossing(),
    })
}

/// Brute-force pairwise enumeration of the tau estimand on uncensored data:
/// `[#{T0 <= t, T0 < T1} - #{T1 <= t, T1 < T0}] / (n0 n1)`.
pub fn pairwise_tau_oracle(view0: &ArmView<f64>, view1: &ArmView<f64>, t: f64) -> Result<f64> {
    if view0.events().iter().any(|e| !e) || view1.events().iter().any(|e| !e) {
        return Err(Error::CensoredDataUnsupported);
    }
    let mut net: i64 = 0;
    for &t0 in view0.times() {
        for &t1 in view1.times() {
            if t0 <= t && t0 < t1 {
                net += 1;
            } else if t1 <= t && t1 < t0 {
                net -= 1;
            }
        }
    }
    Ok(net as f64 / (view0.n() as f64 * view1.n() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split_by_arm;
    use crate::km::{at_risk, fit_km};
    use crate::milestone::milestone_survival;

    fn exp_scenario(rates: Vec<f64>, n: usize, admin: f64, seed: u64) -> Scenario {
        Scenario {
            kind: ScenarioKind::Exponential { rates: rates.clone() },
            n_per_arm: vec![n; rates.len()],
            admin_censor_time: admin,
            accrual_censor: None,
            seed,
        }
    }

    #[test]
    fn cure_one_censors_everyone() {
        let sc = Scenario {
            kind: ScenarioKind::CureMixture { cure_fractions: vec![1.0], rates: vec![0.1] },
            n_per_arm: vec![50],
            admin_censor_time: 24.0,
            accrual_censor: None,
            seed: 9,
        };
        let ds = simulate(&sc).unwrap();
        assert!(ds.subjects().iter().all(|s| !s.event && s.time == 24.0));
    }

    #[test]
    fn exponential_milestone_matches_closed_form() {
        // eta(12) = exp(-1.2) for rate 0.1; 3-sigma Monte Carlo envelope.
        let sc = exp_scenario(vec![0.1], 10_000, 1e9, 2024);
        let ds = simulate(&sc).unwrap();
        let km = fit_km(&split_by_arm(&ds)[0]);
        let eta = milestone_survival(&km, 12.0).unwrap();
        assert!((eta - (-1.2f64).exp()).abs() < 0.015);
    }

    #[test]
    fn cure_mixture_milestone_matches_closed_form() {
        let sc = Scenario {
            kind: ScenarioKind::CureMixture { cure_fractions: vec![0.3], rates: vec![0.05] },
            n_per_arm: vec![10_000],
            admin_censor_time: 48.0,
            accrual_censor: None,
            seed: 7,
        };
        let ds = simulate(&sc).unwrap();
        let km = fit_km(&split_by_arm(&ds)[0]);
        let eta = milestone_survival(&km, 24.0).unwrap();
        let expected = 0.3 + 0.7 * (-1.2f64).exp();
        assert!((eta - expected).abs() < 0.02, "eta {eta} vs {expected}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let sc = exp_scenario(vec![0.2, 0.1], 100, 20.0, 5);
        let a = simulate(&sc).unwrap();
        let b = simulate(&sc).unwrap();
        assert_eq!(a, b);
        let c = simulate(&exp_scenario(vec![0.2, 0.1], 100, 20.0, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn extended_follow_up_never_shrinks_risk_sets() {
        let short = simulate(&exp_scenario(vec![0.05, 0.08], 400, 12.0, 31)).unwrap();
        let long = simulate(&exp_scenario(vec![0.05, 0.08], 400, 24.0, 31)).unwrap();
        for arm in 0..2 {
            let y_short = at_risk(&split_by_arm(&short)[arm]);
            let y_long = at_risk(&split_by_arm(&long)[arm]);
            for i in 0..=300 {
                let t = i as f64 * 0.1;
                assert!(y_long.at(t) >= y_short.at(t), "t={t}");
            }
        }
    }

    #[test]
    fn identical_laws_have_zero_tau() {
        let sc = exp_scenario(vec![0.1, 0.1], 10, 10.0, 1);
        let sheet = truth(&sc, 12.0, &[1.0, 5.0, 20.0]).unwrap();
        for &tau in &sheet.tau[0] {
            assert!(tau.abs() < 1e-9);
        }
        assert_eq!(sheet.eta[0], sheet.eta[1]);
    }

    #[test]
    fn exponential_tau_closed_form_at_infinity() {
        // lambda0 = 2 lambda1: tau(inf) = (l0 - l1)/(l0 + l1) = 1/3.
        let sc = exp_scenario(vec![0.2, 0.1], 10, 10.0, 1);
        let sheet = truth(&sc, 12.0, &[400.0]).unwrap();
        assert!((sheet.tau[0][0] - 1.0 / 3.0).abs() < 1e-5, "tau {}", sheet.tau[0][0]);
    }

    #[test]
    fn delayed_effect_records_crossing() {
        let sc = Scenario {
            kind: ScenarioKind::DelayedEffect {
                base_rate: 0.1,
                changepoint: 3.0,
                hr_before: 1.2,
                hr_after: 0.6,
            },
            n_per_arm: vec![10, 10],
            admin_censor_time: 24.0,
            accrual_censor: None,
            seed: 0,
        };
        let sheet = truth(&sc, 12.0, &[6.0]).unwrap();
        assert_eq!(sheet.hazard_crossing, Some(3.0));
        // Piecewise law: survival continuous at the changepoint.
        let law = &sc.laws()[1];
        assert!((law.survival(3.0 - 1e-9) - law.survival(3.0)).abs() < 1e-8);
        assert!((law.cum_hazard(3.0) - 0.12 * 3.0).abs() < 1e-12);
        assert!((law.cum_hazard(5.0) - (0.36 + 0.06 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trips_cum_hazard() {
        let law = Law { pi: 0.0, cuts: vec![1.0, 4.0], rates: vec![0.5, 0.1, 0.9] };
        for e in [0.01, 0.3, 0.45, 2.0, 9.0] {
            let t = law.invert_cum_hazard(e);
            assert!((law.cum_hazard(t) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_counts_pairs() {
        let v0 = ArmView::new(vec![(1.0, true), (3.0, true)]).unwrap();
        let v1 = ArmView::new(vec![(2.0, true), (4.0, true)]).unwrap();
        assert_eq!(pairwise_tau_oracle(&v0, &v1, 4.0).unwrap(), 0.5);
        assert_eq!(pairwise_tau_oracle(&v0, &v1, 0.0).unwrap(), 0.0);
        assert_eq!(pairwise_tau_oracle(&v0, &v0.clone(), 10.0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_censoring() {
        let v0 = ArmView::new(vec![(1.0, false)]).unwrap();
        let v1 = ArmView::new(vec![(2.0, true)]).unwrap();
        assert!(matches!(
            pairwise_tau_oracle(&v0, &v1, 5.0),
            Err(Error::CensoredDataUnsupported)
        ));
    }

    #[test]
    fn validation_rejects_bad_scenarios() {
        let mut sc = exp_scenario(vec![0.1], 10, 10.0, 1);
        sc.n_per_arm = vec![0];
        assert!(sc.validate().is_err());
        let sc = exp_scenario(vec![-0.1], 10, 10.0, 1);
        assert!(sc.validate().is_err());
        let mut sc = exp_scenario(vec![0.1], 10, 10.0, 1);
        sc.admin_censor_time = 0.0;
        assert!(sc.validate().is_err());
        let mut sc = exp_scenario(vec![0.1], 10, 10.0, 1);
        sc.accrual_censor = Some((5.0, 2.0));
        assert!(sc.validate().is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let sc = Scenario {
            kind: ScenarioKind::PiecewiseExponential {
                cuts: vec![3.0],
                rates: vec![vec![0.2, 0.1], vec![0.15, 0.12]],
            },
            n_per_arm: vec![50, 50],
            admin_censor_time: 30.0,
            accrual_censor: Some((10.0, 30.0)),
            seed: 11,
        };
        let text = serde_json::to_string(&sc).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn delayed_effect_json_defaults() {
        let text = r#"{
            "kind": {"type": "delayed_effect", "base_rate": 0.1, "changepoint": 3.0},
            "n_per_arm": [10, 10],
            "admin_censor_time": 24.0,
            "seed": 1
        }"#;
        let sc: Scenario = serde_json::from_str(text).unwrap();
        match sc.kind {
            ScenarioKind::DelayedEffect { hr_before, hr_after, .. } => {
                assert_eq!(hr_before, 1.2);
                assert_eq!(hr_after, 0.6);
            }
            _ => panic!("wrong kind"),
        }
    }
}
