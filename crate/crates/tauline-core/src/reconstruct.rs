//! Pseudo individual-level data from digitized Kaplan-Meier coordinates.
//!
//! Given digitized `(time, survival)` points, a numbers-at-risk table, and
//! optionally the total event count, the inversion allocates integer event
//! and censoring counts interval by interval between consecutive risk-table
//! times:
//!
//! 1. censorings explain the at-risk decrement left over after the curve
//!    drops, and are spread uniformly over the interval;
//! 2. event counts at each digitized point are solved so the product-limit
//!    drops match the digitized values, re-anchoring on the running estimate
//!    so rounding never accumulates;
//! 3. integer rounding is repaired by adjusting the last event count of the
//!    interval so the next at-risk constraint holds exactly.
//!
//! Survival values that rise by at most 0.005 (digitization noise) are
//! isotonically projected before inversion; larger rises are rejected.

use serde::{Deserialize, Serialize};

use crate::data::{ArmView, Subject};
use crate::error::{Error, Result};
use crate::km::fit_km;

/// Digitized Kaplan-Meier curve for one arm.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DigitizedCurve {
    /// `(time, survival)` coordinates, times nondecreasing.
    pub points: Vec<(f64, f64)>,
    /// `(time, number at risk)` rows, times increasing, counts nonincreasing.
    #[serde(default)]
    pub risk_table: Vec<(f64, u32)>,
    /// Total number of events, when reported.
    #[serde(default)]
    pub total_events: Option<u32>,
}

/// Agreement between a digitized curve and reconstructed data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReconstructionDiagnostics {
    /// `max_k |KM_ipd(t_k) - s_k|` over the digitized points.
    pub sup_distance: f64,
    /// Implied at-risk minus the table count, per risk-table row.
    pub risk_table_residuals: Vec<i64>,
    /// Output events minus `total_events`, when the latter is known.
    pub event_count_residual: Option<i64>,
}

/// Reconstructed event/censoring times for one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoIpd {
    pub times: Vec<f64>,
    pub events: Vec<bool>,
    pub diagnostics: ReconstructionDiagnostics,
    /// Largest isotonic adjustment applied to the digitized survival values.
    pub monotone_repair_delta: f64,
    /// Set when no risk table was supplied and the no-censoring fallback
    /// sized the cohort from the total event count.
    pub used_no_censoring_fallback: bool,
}

impl PseudoIpd {
    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn to_subjects(&self, arm: u32) -> Vec<Subject> {
        self.times
            .iter()
            .zip(&self.events)
            .map(|(&time, &event)| Subject { time, event, arm })
            .collect()
    }

    pub fn to_view(&self) -> ArmView<f64> {
        ArmView::new(self.times.iter().copied().zip(self.events.iter().copied()).collect())
            .expect("reconstruction output is nonempty and valid")
    }
}

/// Rise tolerance attributed to digitization noise.
const RISE_TOLERANCE: f64 = 0.005;

/// Nonincreasing isotonic projection (pool adjacent violators).
fn isotonic_nonincreasing(values: &[f64]) -> Vec<f64> {
    // Project the negated sequence onto nondecreasing sequences.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len()); // (sum, count)
    for &v in values {
        let mut sum = -v;
        let mut count = 1usize;
        while let Some(&(last_sum, last_count)) = blocks.last() {
            if last_sum / last_count as f64 > sum / count as f64 {
                sum += last_sum;
                count += last_count;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut out = Vec::with_capacity(values.len());
    for (sum, count) in blocks {
        let mean = -(sum / count as f64);
        out.extend(std::iter::repeat_n(mean, count));
    }
    out
}

/// Validated, deduplicated, monotone-repaired curve: points plus repair size.
fn prepare_points(dc: &DigitizedCurve) -> Result<(Vec<(f64, f64)>, f64)> {
    if dc.points.is_empty() {
        return Err(Error::Validation("digitized curve has no points".into()));
    }
    for (k, &(t, s)) in dc.points.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Validation(format!("point {k}: bad time {t}")));
        }
        if !s.is_finite() || !(-RISE_TOLERANCE..=1.0 + RISE_TOLERANCE).contains(&s) {
            return Err(Error::Validation(format!("point {k}: survival {s} outside [0, 1]")));
        }
        if k > 0 && t < dc.points[k - 1].0 {
            return Err(Error::Validation(format!("point {k}: times must be nondecreasing")));
        }
    }
    if (dc.points[0].1 - 1.0).abs() > RISE_TOLERANCE {
        return Err(Error::Validation(format!(
            "first digitized point must start at survival 1, got {}",
            dc.points[0].1
        )));
    }

    // Collapse duplicate times to the post-drop (smallest) value.
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(dc.points.len());
    for &(t, s) in &dc.points {
        let s = s.clamp(0.0, 1.0);
        match pts.last_mut() {
            Some(last) if last.0 == t => last.1 = last.1.min(s),
            _ => pts.push((t, s)),
        }
    }

    // Reject rises beyond the digitization tolerance (measured against the
    // running minimum), then project what remains.
    let mut running_min = f64::INFINITY;
    for (k, &(_, s)) in pts.iter().enumerate() {
        if s > running_min + RISE_TOLERANCE {
            return Err(Error::NonMonotoneCurve { index: k, rise: s - running_min });
        }
        running_min = running_min.min(s);
    }
    let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let repaired = isotonic_nonincreasing(&values);
    let delta = values
        .iter()
        .zip(&repaired)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    for (p, &r) in pts.iter_mut().zip(&repaired) {
        p.1 = r.clamp(0.0, 1.0);
    }
    Ok((pts, delta))
}

fn prepare_risk_table(dc: &DigitizedCurve, first_point_time: f64) -> Result<()> {
    let table = &dc.risk_table;
    for (i, &(t, n)) in table.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Validation(format!("risk table row {i}: bad time {t}")));
        }
        if i > 0 {
            if t <= table[i - 1].0 {
                return Err(Error::Validation(
                    "risk table times must be strictly increasing".into(),
                ));
            }
            if n > table[i - 1].1 {
                return Err(Error::Validation(
                    "risk table counts must be nonincreasing".into(),
                ));
            }
        }
    }
    if table[0].1 == 0 {
        return Err(Error::Validation("risk table must start with a positive count".into()));
    }
    if table[0].0 > first_point_time {
        return Err(Error::Validation(
            "risk table must start at or before the first digitized point".into(),
        ));
    }
    Ok(())
}

/// Events solved for one interval under a fixed censoring allocation.
struct IntervalWalk {
    d_per_point: Vec<u32>,
    d_total: u32,
    survival_exit: f64,
}

/// Walk the digitized points of one interval: at each point, solve the event
/// count whose product-limit drop matches the target, re-anchoring on the
/// actual estimate. `force_last_delta` adjusts the final point's count (the
/// rounding repair); returns `None` when that adjustment is infeasible.
fn walk_interval(
    pts: &[(f64, f64)],
    survival_enter: f64,
    n_enter: u32,
    censor_positions: &[f64],
    force_last_delta: i64,
) -> Option<IntervalWalk> {
    if pts.is_empty() && force_last_delta != 0 {
        return None;
    }
    let mut y = n_enter;
    let mut s = survival_enter;
    let mut ci = 0usize;
    let mut d_per_point = Vec::with_capacity(pts.len());
    let mut d_total = 0u32;
    for (k, &(t, target)) in pts.iter().enumerate() {
        while ci < censor_positions.len() && censor_positions[ci] < t {
            ci += 1;
            y = y.saturating_sub(1);
        }
        let mut d = if y == 0 || s <= 0.0 {
            0
        } else {
            let raw = (y as f64 * (1.0 - target / s)).round();
            raw.clamp(0.0, y as f64) as u32
        };
        if k + 1 == pts.len() && force_last_delta != 0 {
            let adjusted = d as i64 + force_last_delta;
            if adjusted < 0 || adjusted > y as i64 {
                return None;
            }
            d = adjusted as u32;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / y as f64;
            y -= d;
        }
        d_per_point.push(d);
        d_total += d;
    }
    Some(IntervalWalk { d_per_point, d_total, survival_exit: s })
}

fn censor_positions(t_lo: f64, t_hi: f64, count: u32) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    if t_hi <= t_lo {
        return vec![t_lo; count as usize];
    }
    (1..=count)
        .map(|j| t_lo + (t_hi - t_lo) * j as f64 / (count + 1) as f64)
        .collect()
}

/// One feasible allocation for a constrained interval: solved events plus
/// the censor placement, with `c + d_total == gap` exact.
struct Alloc {
    walk: IntervalWalk,
    censors: Vec<f64>,
}

/// Exact allocations for one constrained interval, in preference order:
/// plain solutions with the fewest censorings first, then solutions that
/// force extra events onto the interval's last point (this releases a drop
/// that digitization snapped just past the next risk-table time, so the
/// following interval can balance). A minimal-defect repair closes the list.
fn interval_candidates(
    pts: &[(f64, f64)],
    survival_enter: f64,
    n_enter: u32,
    gap: u32,
    t_lo: f64,
    t_hi: f64,
) -> Vec<Alloc> {
    let mut out = Vec::new();
    let mut best: Option<(i64, u32)> = None; // (defect, c)
    for c in 0..=gap {
        let positions = censor_positions(t_lo, t_hi, c);
        let walk = walk_interval(pts, survival_enter, n_enter, &positions, 0)
            .expect("no forced delta");
        let defect = gap as i64 - c as i64 - walk.d_total as i64;
        if defect == 0 {
            out.push(Alloc { walk, censors: positions });
        } else if best.map(|(d, _)| defect.abs() < d.abs()).unwrap_or(true) {
            best = Some((defect, c));
        }
    }
    if !pts.is_empty() {
        for delta in 1..=4i64 {
            for c in 0..=gap {
                let positions = censor_positions(t_lo, t_hi, c);
                let Some(walk) =
                    walk_interval(pts, survival_enter, n_enter, &positions, delta)
                else {
                    continue;
                };
                if c as i64 + walk.d_total as i64 == gap as i64 {
                    out.push(Alloc { walk, censors: positions });
                    break;
                }
            }
        }
    }
    if let Some((defect, c)) = best {
        let positions = censor_positions(t_lo, t_hi, c);
        if let Some(walk) = walk_interval(pts, survival_enter, n_enter, &positions, defect) {
            if c as i64 + walk.d_total as i64 == gap as i64 {
                out.push(Alloc { walk, censors: positions });
            }
        }
    }
    out
}

/// Final interval: no exit constraint. Match the reported event total when
/// present; otherwise assume no censoring within the interval.
fn solve_final_interval(
    pts: &[(f64, f64)],
    survival_enter: f64,
    n_enter: u32,
    events_so_far: u32,
    total_events: Option<u32>,
    t_lo: f64,
) -> Result<(Alloc, f64)> {
    let end_time = pts.last().map(|p| p.0).unwrap_or(t_lo).max(t_lo);
    let alloc = match total_events {
        Some(total) => {
            let needed = total as i64 - events_so_far as i64;
            let max_d = walk_interval(pts, survival_enter, n_enter, &[], 0)
                .expect("no forced delta")
                .d_total;
            if needed < 0 || needed > n_enter as i64 {
                return Err(Error::InfeasibleTotalEvents { needed, feasible: max_d as u64 });
            }
            let mut exact: Option<Alloc> = None;
            let mut closest: Option<(i64, u32)> = None;
            for c in 0..=n_enter {
                let positions = censor_positions(t_lo, end_time, c);
                let walk = walk_interval(pts, survival_enter, n_enter, &positions, 0)
                    .expect("no forced delta");
                if walk.d_total + c > n_enter {
                    continue;
                }
                let diff = needed - walk.d_total as i64;
                if diff == 0 {
                    exact = Some(Alloc { walk, censors: positions });
                    break;
                }
                if closest.map(|(d, _)| diff.abs() < d.abs()).unwrap_or(true) {
                    closest = Some((diff, c));
                }
            }
            match exact {
                Some(found) => found,
                None => {
                    let (diff, c) = closest.ok_or(Error::InfeasibleTotalEvents {
                        needed,
                        feasible: max_d as u64,
                    })?;
                    let positions = censor_positions(t_lo, end_time, c);
                    walk_interval(pts, survival_enter, n_enter, &positions, diff)
                        .filter(|walk| walk.d_total + c <= n_enter)
                        .map(|walk| Alloc { walk, censors: positions })
                        .ok_or(Error::InfeasibleTotalEvents {
                            needed,
                            feasible: max_d as u64,
                        })?
                }
            }
        }
        None => {
            let walk =
                walk_interval(pts, survival_enter, n_enter, &[], 0).expect("no forced delta");
            Alloc { walk, censors: Vec::new() }
        }
    };
    Ok((alloc, end_time))
}

/// Backtracking state for the interval-by-interval allocation.
struct SolveCtx<'a> {
    pts: &'a [(f64, f64)],
    table: &'a [(f64, u32)],
    ranges: &'a [(usize, usize)],
    total_events: Option<u32>,
    budget: usize,
    deepest_failure: usize,
    final_error: Option<Error>,
}

/// Depth-first search over interval allocations. Almost every interval has a
/// unique exact allocation; branching only happens where a drop digitized
/// exactly at a risk-table boundary can be balanced on either side.
fn solve_intervals(
    ctx: &mut SolveCtx<'_>,
    i: usize,
    survival: f64,
    at_risk: u32,
    events_so_far: u32,
    chosen: &mut Vec<Alloc>,
) -> Option<(Alloc, f64)> {
    let (lo, hi) = ctx.ranges[i];
    let pts = &ctx.pts[lo..hi];
    let t_lo = ctx.table[i].0;
    if i + 1 == ctx.table.len() {
        ctx.budget = ctx.budget.saturating_sub(1);
        match solve_final_interval(pts, survival, at_risk, events_so_far, ctx.total_events, t_lo)
        {
            Ok(found) => Some(found),
            Err(e) => {
                ctx.final_error = Some(e);
                None
            }
        }
    } else {
        let gap = at_risk - ctx.table[i + 1].1;
        let t_hi = ctx.table[i + 1].0;
        let candidates = interval_candidates(pts, survival, at_risk, gap, t_lo, t_hi);
        ctx.budget = ctx.budget.saturating_sub(1 + candidates.len());
        if candidates.is_empty() {
            ctx.deepest_failure = ctx.deepest_failure.max(i);
        }
        for cand in candidates {
            let survival_exit = cand.walk.survival_exit;
            let d = cand.walk.d_total;
            chosen.push(cand);
            if let Some(fin) = solve_intervals(
                ctx,
                i + 1,
                survival_exit,
                ctx.table[i + 1].1,
                events_so_far + d,
                chosen,
            ) {
                return Some(fin);
            }
            chosen.pop();
            if ctx.budget == 0 {
                break;
            }
        }
        None
    }
}

/// Reconstruct one arm from a digitized curve.
pub fn reconstruct_arm(dc: &DigitizedCurve) -> Result<PseudoIpd> {
    let (pts, repair_delta) = prepare_points(dc)?;

    // Without a risk table, assume no censoring before the end of the curve
    // and size the cohort from the total event count.
    let mut fallback = false;
    let table: Vec<(f64, u32)> = if dc.risk_table.is_empty() {
        fallback = true;
        let total = dc.total_events.ok_or_else(|| {
            Error::Validation(
                "reconstruction needs a risk table or a total event count to size the cohort"
                    .into(),
            )
        })?;
        let final_cdf = 1.0 - pts.last().expect("validated nonempty").1;
        if total == 0 || final_cdf <= 0.0 {
            return Err(Error::Validation(
                "cannot size the cohort: flat curve or zero events without a risk table".into(),
            ));
        }
        let n = ((total as f64 / final_cdf).round() as u32).max(total);
        vec![(pts[0].0, n)]
    } else {
        prepare_risk_table(dc, pts[0].0)?;
        dc.risk_table.clone()
    };

    let ranges: Vec<(usize, usize)> = (0..table.len())
        .map(|i| {
            let t_lo = table[i].0;
            let t_hi = table.get(i + 1).map(|r| r.0).unwrap_or(f64::INFINITY);
            (pts.partition_point(|p| p.0 < t_lo), pts.partition_point(|p| p.0 < t_hi))
        })
        .collect();

    let mut ctx = SolveCtx {
        pts: &pts,
        table: &table,
        ranges: &ranges,
        total_events: dc.total_events,
        budget: 20_000,
        deepest_failure: 0,
        final_error: None,
    };
    let mut chosen: Vec<Alloc> = Vec::new();
    let solved = solve_intervals(&mut ctx, 0, 1.0, table[0].1, 0, &mut chosen);
    let Some((final_alloc, end_time)) = solved else {
        return Err(match ctx.final_error {
            Some(e) => e,
            None => Error::InconsistentRiskTable { interval: ctx.deepest_failure },
        });
    };

    let mut out_times: Vec<f64> = Vec::new();
    let mut out_events: Vec<bool> = Vec::new();
    let emit = |out_times: &mut Vec<f64>,
                out_events: &mut Vec<bool>,
                alloc: &Alloc,
                pts: &[(f64, f64)]| {
        for (&(t, _), &d) in pts.iter().zip(&alloc.walk.d_per_point) {
            for _ in 0..d {
                out_times.push(t);
                out_events.push(true);
            }
        }
        for &p in &alloc.censors {
            out_times.push(p);
            out_events.push(false);
        }
    };
    for (i, alloc) in chosen.iter().enumerate() {
        emit(&mut out_times, &mut out_events, alloc, &pts[ranges[i].0..ranges[i].1]);
    }
    let last = table.len() - 1;
    emit(&mut out_times, &mut out_events, &final_alloc, &pts[ranges[last].0..ranges[last].1]);

    // Whoever neither failed nor was censored within the final interval is
    // administratively censored at the end of follow-up.
    let n_final = table[last].1;
    let placed = final_alloc.walk.d_total + final_alloc.censors.len() as u32;
    for _ in 0..n_final.saturating_sub(placed) {
        out_times.push(end_time);
        out_events.push(false);
    }

    let mut ipd = PseudoIpd {
        times: out_times,
        events: out_events,
        diagnostics: ReconstructionDiagnostics {
            sup_distance: 0.0,
            risk_table_residuals: Vec::new(),
            event_count_residual: None,
        },
        monotone_repair_delta: repair_delta,
        used_no_censoring_fallback: fallback,
    };
    ipd.diagnostics = validate_reconstruction(dc, &ipd);
    Ok(ipd)
}

/// Recompute the agreement diagnostics between a digitized curve and
/// reconstructed data.
pub fn validate_reconstruction(dc: &DigitizedCurve, ipd: &PseudoIpd) -> ReconstructionDiagnostics {
    if ipd.times.is_empty() {
        return ReconstructionDiagnostics {
            sup_distance: 1.0,
            risk_table_residuals: dc.risk_table.iter().map(|&(_, n)| -(n as i64)).collect(),
            event_count_residual: dc.total_events.map(|d| -(d as i64)),
        };
    }
    let km = fit_km(&ipd.to_view());
    let sup_distance = dc
        .points
        .iter()
        .map(|&(t, s)| (km.survival().eval(t) - s).abs())
        .fold(0.0, f64::max);
    let risk_table_residuals = dc
        .risk_table
        .iter()
        .map(|&(t, n)| {
            let implied = ipd.times.iter().filter(|&&x| x >= t).count() as i64;
            implied - n as i64
        })
        .collect();
    let event_count_residual =
        dc.total_events.map(|d| ipd.n_events() as i64 - d as i64);
    ReconstructionDiagnostics { sup_distance, risk_table_residuals, event_count_residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_uncensored_inversion() {
        // Digitized points are the exact KM of {1, 2, 3}, all events.
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0), (3.0, 0.0)],
            risk_table: vec![(0.0, 3)],
            total_events: Some(3),
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert_eq!(ipd.times, vec![1.0, 2.0, 3.0]);
        assert!(ipd.events.iter().all(|&e| e));
        // Integer allocation is exact; the survival metric only carries
        // product-limit rounding at the last ulp.
        assert!(ipd.diagnostics.sup_distance <= 1e-12);
        assert_eq!(ipd.diagnostics.risk_table_residuals, vec![0]);
        assert_eq!(ipd.diagnostics.event_count_residual, Some(0));
    }

    #[test]
    fn flat_curve_is_all_censored() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (5.0, 1.0), (10.0, 1.0)],
            risk_table: vec![(0.0, 8), (10.0, 8)],
            total_events: None,
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert_eq!(ipd.n(), 8);
        assert_eq!(ipd.n_events(), 0);
        assert!(ipd.times.iter().all(|&t| t >= 10.0));
        assert_eq!(ipd.diagnostics.risk_table_residuals, vec![0, 0]);
    }

    #[test]
    fn censoring_is_inferred_from_risk_decrement() {
        // Curve flat on [0, 8) but the at-risk count falls from 10 to 6:
        // four censorings, spread inside the interval, then events later.
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (6.0, 1.0), (10.0, 0.5), (12.0, 1.0 / 3.0)],
            risk_table: vec![(0.0, 10), (8.0, 6)],
            total_events: None,
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert_eq!(ipd.diagnostics.risk_table_residuals, vec![0, 0]);
        let censored_early =
            ipd.times.iter().zip(&ipd.events).filter(|(&t, &e)| !e && t < 8.0).count();
        assert_eq!(censored_early, 4);
        assert!(ipd.diagnostics.sup_distance <= 0.02);
    }

    #[test]
    fn monotone_noise_is_repaired() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.8), (2.0, 0.803), (3.0, 0.5)],
            risk_table: vec![(0.0, 20)],
            total_events: None,
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert!(ipd.monotone_repair_delta > 0.0);
        assert!(ipd.monotone_repair_delta <= RISE_TOLERANCE);
        assert!(ipd.diagnostics.sup_distance <= 0.02);
    }

    #[test]
    fn large_rise_is_rejected() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.8), (2.0, 0.9)],
            risk_table: vec![(0.0, 20)],
            total_events: None,
        };
        assert!(matches!(
            reconstruct_arm(&dc),
            Err(Error::NonMonotoneCurve { index: 2, .. })
        ));
    }

    #[test]
    fn infeasible_event_total_is_rejected() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)],
            risk_table: vec![(0.0, 4)],
            total_events: Some(2),
        };
        // Two events already forced before the final count is reached.
        let more_than_possible = DigitizedCurve { total_events: Some(40), ..dc.clone() };
        assert!(reconstruct_arm(&dc).is_ok());
        assert!(matches!(
            reconstruct_arm(&more_than_possible),
            Err(Error::InfeasibleTotalEvents { .. })
        ));
    }

    #[test]
    fn no_risk_table_fallback_sizes_cohort() {
        // Exact KM of 4 subjects, all events.
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.75), (2.0, 0.5), (3.0, 0.25), (4.0, 0.0)],
            risk_table: vec![],
            total_events: Some(4),
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert!(ipd.used_no_censoring_fallback);
        assert_eq!(ipd.n(), 4);
        assert_eq!(ipd.n_events(), 4);
        assert!(ipd.diagnostics.sup_distance <= 1e-12);
    }

    #[test]
    fn fallback_without_event_count_is_rejected() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.5)],
            risk_table: vec![],
            total_events: None,
        };
        assert!(reconstruct_arm(&dc).is_err());
    }

    #[test]
    fn self_validation_matches_embedded_diagnostics() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (2.0, 0.6), (5.0, 0.4), (9.0, 0.15)],
            risk_table: vec![(0.0, 25), (4.0, 12), (8.0, 5)],
            total_events: None,
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        let fresh = validate_reconstruction(&dc, &ipd);
        assert_eq!(ipd.diagnostics, fresh);
        assert_eq!(fresh.risk_table_residuals, vec![0, 0, 0]);
    }

    #[test]
    fn corrupted_ipd_is_flagged() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0), (3.0, 0.0)],
            risk_table: vec![(0.0, 3)],
            total_events: Some(3),
        };
        let mut ipd = reconstruct_arm(&dc).unwrap();
        // Drop one event.
        ipd.times.pop();
        ipd.events.pop();
        let diag = validate_reconstruction(&dc, &ipd);
        assert!(diag.sup_distance > 0.1);
        assert_eq!(diag.event_count_residual, Some(-1));
        assert_eq!(diag.risk_table_residuals, vec![-1]);
    }

    #[test]
    fn empty_ipd_reports_maximal_mismatch() {
        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (1.0, 0.5)],
            risk_table: vec![(0.0, 10)],
            total_events: None,
        };
        let empty = PseudoIpd {
            times: vec![],
            events: vec![],
            diagnostics: ReconstructionDiagnostics {
                sup_distance: 0.0,
                risk_table_residuals: vec![],
                event_count_residual: None,
            },
            monotone_repair_delta: 0.0,
            used_no_censoring_fallback: false,
        };
        let diag = validate_reconstruction(&dc, &empty);
        assert_eq!(diag.sup_distance, 1.0);
    }

    #[test]
    fn idempotent_on_its_own_km() {
        // Once the input is the KM of a reconstruction output (sampled at
        // its own jump times, with its exact risk table and event count),
        // another round of reconstruction reproduces the same data.
        fn digitize(ipd: &PseudoIpd, risk_times: &[f64]) -> DigitizedCurve {
            let km = fit_km(&ipd.to_view());
            let mut points = vec![(0.0, 1.0)];
            for (k, &t) in km.survival().step().jump_times().iter().enumerate() {
                points.push((t, km.survival().step().values()[k]));
            }
            let risk_table = risk_times
                .iter()
                .map(|&t| (t, ipd.times.iter().filter(|&&x| x >= t).count() as u32))
                .collect();
            DigitizedCurve { points, risk_table, total_events: Some(ipd.n_events() as u32) }
        }

        let dc = DigitizedCurve {
            points: vec![(0.0, 1.0), (2.0, 0.7), (4.0, 0.45), (7.0, 0.2), (9.0, 0.1)],
            risk_table: vec![(0.0, 30), (5.0, 12), (8.0, 4)],
            total_events: None,
        };
        let risk_times = [0.0, 5.0, 8.0];
        let first = reconstruct_arm(&dc).unwrap();
        let second = reconstruct_arm(&digitize(&first, &risk_times)).unwrap();
        let third = reconstruct_arm(&digitize(&second, &risk_times)).unwrap();
        // Event and censoring counts per risk-table interval are reproduced.
        let counts = |ipd: &PseudoIpd| -> Vec<(usize, usize)> {
            let mut out = Vec::new();
            for w in 0..risk_times.len() {
                let lo = risk_times[w];
                let hi = risk_times.get(w + 1).copied().unwrap_or(f64::INFINITY);
                let in_range =
                    |t: f64| t >= lo && t < hi || (w + 1 == risk_times.len() && t >= lo);
                let ev = ipd
                    .times
                    .iter()
                    .zip(&ipd.events)
                    .filter(|(&t, &e)| e && in_range(t))
                    .count();
                let cens = ipd
                    .times
                    .iter()
                    .zip(&ipd.events)
                    .filter(|(&t, &e)| !e && in_range(t))
                    .count();
                out.push((ev, cens));
            }
            out
        };
        assert_eq!(counts(&second), counts(&third));
        assert_eq!(second.n_events(), third.n_events());
    }
}
