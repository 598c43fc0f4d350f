//! Two-group Cox fit and Schoenfeld-residual PH diagnostics.
//!
//! The scalar log hazard ratio is fitted by Newton iteration with
//! step-halving on the Breslow-ties partial likelihood. Breslow ties keep
//! the risk-set algebra closed-form for a binary covariate; reconstructed
//! data carry few exact ties, so the difference from Efron is negligible
//! there. The PH test is the Grambsch-Therneau score test of zero
//! correlation between the Schoenfeld residuals and a transform of event
//! time (identity by default, pooled-KM optionally).

use crate::data::{split_by_arm, ArmView, SurvivalDataset};
use crate::error::{Error, Result};
use crate::km::fit_km;

const BETA_CAP: f64 = 20.0;
const SCORE_TOL: f64 = 1e-8;
const MAX_ITER: usize = 50;

/// Result of the two-group Cox fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    /// Log hazard ratio, treatment vs reference.
    pub beta: f64,
    /// Breslow partial log-likelihood at `beta`.
    pub loglik: f64,
    pub iterations: usize,
    /// Score criterion met: `|U(beta)| <= 1e-8`.
    pub converged: bool,
    /// Complete separation of event orderings; `beta` is capped at ±20.
    pub monotone_likelihood: bool,
}

/// Time transform applied to event times before the correlation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeTransform {
    Identity,
    /// `1 - Ŝ(t)` from the pooled Kaplan-Meier curve of both arms.
    Km,
}

/// Schoenfeld residual series and PH test.
#[derive(Debug, Clone, PartialEq)]
pub struct PhTestResult {
    /// One `(event time, residual)` per distinct event time, Breslow-pooled
    /// under ties.
    pub residuals: Vec<(f64, f64)>,
    /// Grambsch-Therneau score statistic, chi-squared with 1 df under PH.
    pub statistic: f64,
    pub p_value: f64,
    pub transform: TimeTransform,
}

/// Per-distinct-event-time sufficient statistics for the two-group partial
/// likelihood: time, total events `d`, treated events `s`, and at-risk
/// counts by arm just before the time.
struct EventBlock {
    time: f64,
    d: f64,
    s: f64,
    at_risk_ref: f64,
    at_risk_treat: f64,
}

fn event_blocks(treat: &ArmView<f64>, reference: &ArmView<f64>) -> Vec<EventBlock> {
    let mut merged: Vec<(f64, bool, bool)> = Vec::with_capacity(treat.n() + reference.n());
    for (t, e) in treat.times().iter().zip(treat.events()) {
        merged.push((*t, *e, true));
    }
    for (t, e) in reference.times().iter().zip(reference.events()) {
        merged.push((*t, *e, false));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut blocks = Vec::new();
    let mut at_risk_treat = treat.n() as f64;
    let mut at_risk_ref = reference.n() as f64;
    let mut i = 0;
    while i < merged.len() {
        let t = merged[i].0;
        let mut d = 0.0;
        let mut s = 0.0;
        let mut drop_treat = 0.0;
        let mut drop_ref = 0.0;
        while i < merged.len() && merged[i].0 == t {
            let (_, event, is_treat) = merged[i];
            if event {
                d += 1.0;
                if is_treat {
                    s += 1.0;
                }
            }
            if is_treat {
                drop_treat += 1.0;
            } else {
                drop_ref += 1.0;
            }
            i += 1;
        }
        if d > 0.0 {
            blocks.push(EventBlock { time: t, d, s, at_risk_ref, at_risk_treat });
        }
        at_risk_treat -= drop_treat;
        at_risk_ref -= drop_ref;
    }
    blocks
}

/// Partial log-likelihood, score, and information at `beta`.
fn loglik_score_info(blocks: &[EventBlock], beta: f64) -> (f64, f64, f64) {
    let eb = beta.exp();
    let mut ll = 0.0;
    let mut score = 0.0;
    let mut info = 0.0;
    for b in blocks {
        let denom = b.at_risk_ref + b.at_risk_treat * eb;
        let zbar = b.at_risk_treat * eb / denom;
        ll += beta * b.s - b.d * denom.ln();
        score += b.s - b.d * zbar;
        info += b.d * zbar * (1.0 - zbar);
    }
    (ll, score, info)
}

fn views_for_pair(
    ds: &SurvivalDataset,
    treat_arm: u32,
    ref_arm: u32,
) -> Result<(ArmView<f64>, ArmView<f64>)> {
    if treat_arm as usize >= ds.n_arms() {
        return Err(Error::UnknownArm(treat_arm));
    }
    if ref_arm as usize >= ds.n_arms() {
        return Err(Error::UnknownArm(ref_arm));
    }
    if treat_arm == ref_arm {
        return Err(Error::Validation("treatment and reference arms must differ".into()));
    }
    let views = split_by_arm(ds);
    Ok((views[treat_arm as usize].clone(), views[ref_arm as usize].clone()))
}

/// Fit the two-group Cox model by Newton iteration from `beta = 0`.
pub fn fit_cox_two_group(ds: &SurvivalDataset, treat_arm: u32, ref_arm: u32) -> Result<CoxFit> {
    let (treat, reference) = views_for_pair(ds, treat_arm, ref_arm)?;
    if treat.n_events() == 0 || reference.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    let blocks = event_blocks(&treat, &reference);
    fit_blocks(&blocks)
}

fn fit_blocks(blocks: &[EventBlock]) -> Result<CoxFit> {
    let mut beta = 0.0;
    let (mut ll, mut score, mut info) = loglik_score_info(blocks, beta);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        if score.abs() <= SCORE_TOL {
            return Ok(CoxFit {
                beta,
                loglik: ll,
                iterations,
                converged: true,
                monotone_likelihood: false,
            });
        }
        iterations += 1;
        let mut step = if info > 0.0 { score / info } else { score.signum() };
        // Step-halving: insist on a likelihood increase.
        let mut candidate = beta + step;
        let mut halvings = 0;
        loop {
            if candidate.abs() > BETA_CAP {
                candidate = candidate.signum() * BETA_CAP;
            }
            let (ll_new, score_new, info_new) = loglik_score_info(blocks, candidate);
            if ll_new >= ll || halvings >= 30 {
                beta = candidate;
                ll = ll_new;
                score = score_new;
                info = info_new;
                break;
            }
            halvings += 1;
            step *= 0.5;
            candidate = beta + step;
        }
        if beta.abs() >= BETA_CAP {
            // The likelihood is monotone in beta: complete separation of
            // event orderings.
            return Ok(CoxFit {
                beta,
                loglik: ll,
                iterations,
                converged: false,
                monotone_likelihood: true,
            });
        }
    }
    Ok(CoxFit {
        beta,
        loglik: ll,
        iterations,
        converged: score.abs() <= SCORE_TOL,
        monotone_likelihood: false,
    })
}

/// Schoenfeld residuals at the fitted `beta` and the Grambsch-Therneau PH
/// test against the transformed event times.
pub fn schoenfeld_ph_test(
    ds: &SurvivalDataset,
    treat_arm: u32,
    ref_arm: u32,
    fit: &CoxFit,
    transform: TimeTransform,
) -> Result<PhTestResult> {
    let (treat, reference) = views_for_pair(ds, treat_arm, ref_arm)?;
    let blocks = event_blocks(&treat, &reference);
    let total_events: f64 = blocks.iter().map(|b| b.d).sum();
    if total_events < 3.0 {
        return Err(Error::TooFewEvents { found: total_events as usize });
    }

    // Transformed time per distinct event time.
    let g: Vec<f64> = match transform {
        TimeTransform::Identity => blocks.iter().map(|b| b.time).collect(),
        TimeTransform::Km => {
            let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(treat.n() + reference.n());
            for (t, e) in treat.times().iter().zip(treat.events()) {
                pooled.push((*t, *e));
            }
            for (t, e) in reference.times().iter().zip(reference.events()) {
                pooled.push((*t, *e));
            }
            let pooled_km = fit_km(&ArmView::new(pooled).expect("nonempty"));
            blocks
                .iter()
                .map(|b| 1.0 - pooled_km.survival().eval(b.time))
                .collect()
        }
    };

    let eb = fit.beta.exp();
    let mut residuals = Vec::with_capacity(blocks.len());
    let mut v = Vec::with_capacity(blocks.len());
    for b in blocks.iter() {
        let denom = b.at_risk_ref + b.at_risk_treat * eb;
        let zbar = b.at_risk_treat * eb / denom;
        residuals.push((b.time, b.s - b.d * zbar));
        v.push(b.d * zbar * (1.0 - zbar));
    }

    // Event-count-weighted mean of the transformed times.
    let g_mean = blocks
        .iter()
        .zip(&g)
        .map(|(b, &gk)| b.d * gk)
        .sum::<f64>()
        / total_events;

    let mut u = 0.0;
    let mut gg_v = 0.0;
    let mut g_v = 0.0;
    let mut v_sum = 0.0;
    for ((gk, (_, r)), vk) in g.iter().zip(&residuals).zip(&v) {
        let gc = gk - g_mean;
        u += gc * r;
        gg_v += gc * gc * vk;
        g_v += gc * vk;
        v_sum += vk;
    }
    // Variance of the score for the interaction slope, profiled over beta.
    let var = if v_sum > 0.0 { gg_v - g_v * g_v / v_sum } else { 0.0 };
    let (statistic, p_value) = if var > 0.0 {
        let t = u * u / var;
        (t, libm::erfc((t / 2.0).sqrt()))
    } else {
        (0.0, 1.0)
    };

    Ok(PhTestResult { residuals, statistic, p_value, transform })
}
