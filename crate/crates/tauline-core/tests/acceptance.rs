//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//!  1. Milestone decomposition reassembles the KM curve to 1e-12.
//!  2. Plug-in tau equals pairwise enumeration on uncensored data; the
//!     susceptible process with a milestone past all events is identical.
//!  3. Published milestone-contrast arithmetic fixtures.
//!  4. Milestone sweep is nonincreasing on random curves.
//!  5. Tau respects the comparable-pair mass bound at every jump.
//!  6. Percentile CIs cover the analytic cure-mixture contrast 93-97%.
//!  7. Bootstrap results are bit-identical across thread counts.
//!  8. Two-sample exponential tau approaches the closed form 1/3.
//!  9. Turning-time detection recovers a built-in hazard crossing.
//! 10. Digitized-curve reconstruction round-trips simulated trials.
//! 11. Cox Newton matches a grid-search oracle; Schoenfeld residuals sum to
//!     zero; PH-test p-values are uniform under an exact-PH null.
//! 12. dRMST equals the RMST difference, antisymmetrically, with exact
//!     hand-computed step areas.
//!
//! Criterion 13 (CLI golden files and exit codes) lives in the CLI crate's
//! own acceptance target.

use tauline_core::bootstrap::{bootstrap, Estimand, EstimandKind};
use tauline_core::cox::{fit_cox_two_group, schoenfeld_ph_test, TimeTransform};
use tauline_core::data::{split_by_arm, ArmView, Subject, SurvivalDataset};
use tauline_core::km::fit_km;
use tauline_core::milestone::{milestone_contrast, milestone_survival, susceptible_survival};
use tauline_core::reconstruct::{reconstruct_arm, DigitizedCurve};
use tauline_core::rmst::{drmst_process, rmst};
use tauline_core::rng::{derive_seed, SplitMix64};
use tauline_core::sim::{pairwise_tau_oracle, simulate, truth, Scenario, ScenarioKind};
use tauline_core::tau::{susceptible_tau, tau_process, turning_time};

fn pass(name: &str) {
    println!("ACCEPTANCE {name}: PASS");
}

/// Random censored arm with n in [2, max_n]; times on a 0.1 grid.
fn random_arm(rng: &mut SplitMix64, max_n: usize, censor_prob: f64) -> ArmView<f64> {
    let n = 2 + rng.next_index(max_n - 1);
    let obs = (0..n)
        .map(|_| {
            let t = (1 + rng.next_index(300)) as f64 * 0.1;
            let e = rng.next_f64() >= censor_prob;
            (t, e)
        })
        .collect();
    ArmView::new(obs).unwrap()
}

fn random_uncensored_arm(rng: &mut SplitMix64, max_n: usize) -> ArmView<f64> {
    let n = 1 + rng.next_index(max_n);
    let obs = (0..n)
        .map(|_| ((1 + rng.next_index(300)) as f64 * 0.1, true))
        .collect();
    ArmView::new(obs).unwrap()
}

#[test]
fn c01_decomposition_identity() {
    let mut rng = SplitMix64::new(0xC1);
    let mut checked = 0usize;
    while checked < 1_000 {
        let view = random_arm(&mut rng, 80, 0.3);
        let km = fit_km(&view);
        let m = km.max_observed() * (0.2 + 0.8 * rng.next_f64());
        let eta = milestone_survival(&km, m).unwrap();
        if eta == 1.0 || eta == 0.0 {
            continue;
        }
        let sa = susceptible_survival(&km, m).unwrap();
        let mut grid: Vec<f64> = km
            .event_times()
            .iter()
            .copied()
            .filter(|&t| t <= m)
            .collect();
        for i in 0..=20 {
            grid.push(m * (i as f64 / 20.0));
        }
        for &t in &grid {
            let reassembled = sa.eval(t) * (1.0 - eta) + eta;
            let direct = km.eval(t).unwrap();
            assert!(
                (direct - reassembled).abs() <= 1e-12,
                "instance {checked}: t={t}, {direct} vs {reassembled}"
            );
        }
        checked += 1;
    }
    pass("C1 decomposition identity (1000 instances, 1e-12)");
}

#[test]
fn c02_tau_oracle_equivalence() {
    let mut rng = SplitMix64::new(0xC2);
    for instance in 0..1_000 {
        let reference = random_uncensored_arm(&mut rng, 30);
        let treat = random_uncensored_arm(&mut rng, 30);
        let k_ref = fit_km(&reference);
        let k_treat = fit_km(&treat);
        let t_end = k_ref.max_observed().max(k_treat.max_observed());
        let tau = tau_process(&k_treat, &k_ref, t_end).unwrap();
        for &t in tau.process().jump_times() {
            let oracle = pairwise_tau_oracle(&reference, &treat, t).unwrap();
            assert!(
                (tau.eval(t) - oracle).abs() <= 1e-12,
                "instance {instance}: t={t}: plug-in {} vs oracle {oracle}",
                tau.eval(t)
            );
        }
        // Milestone at (or past) the last event: susceptible == overall.
        let susceptible = susceptible_tau(&k_treat, &k_ref, t_end).unwrap();
        assert_eq!(tau.process().jump_times(), susceptible.process().jump_times());
        for k in 0..tau.process().n_jumps() {
            assert_eq!(
                tau.process().values()[k],
                susceptible.process().values()[k],
                "instance {instance}: susceptible reduction not exact"
            );
        }
    }
    pass("C2 tau oracle equivalence + susceptible reduction (1000 instances)");
}

#[test]
fn c03_published_contrast_fixtures() {
    let a = milestone_contrast(0.375_f64, 0.062);
    assert!((a - 0.313).abs() <= 5e-4, "067 PFS contrast: {a}");
    let b = milestone_contrast(0.413_f64, 0.223);
    assert!((b - 0.190).abs() <= 5e-4, "CLEAR PFS contrast: {b}");
    let c = milestone_contrast(0.446_f64, 0.208);
    assert!(
        (0.238 - 1e-3..=0.239 + 1e-3).contains(&c),
        "067 ten-year OS contrast: {c}"
    );
    pass("C3 published-contrast arithmetic fixtures");
}

#[test]
fn c04_milestone_monotonicity() {
    let mut rng = SplitMix64::new(0xC4);
    for instance in 0..1_000 {
        let view = random_arm(&mut rng, 60, 0.35);
        let km = fit_km(&view);
        let grid: Vec<f64> = (0..=25).map(|i| km.max_observed() * (i as f64 / 25.0)).collect();
        let mut prev = f64::INFINITY;
        for &m in &grid {
            let eta = milestone_survival(&km, m).unwrap();
            assert!(eta <= prev, "instance {instance}: eta rose at m={m}");
            prev = eta;
        }
    }
    pass("C4 milestone monotonicity (1000 curves, exact)");
}

#[test]
fn c05_tau_mass_bound() {
    let mut rng = SplitMix64::new(0xC5);
    for instance in 0..1_000 {
        let reference = random_arm(&mut rng, 30, 0.25);
        let treat = random_arm(&mut rng, 30, 0.25);
        let k_ref = fit_km(&reference);
        let k_treat = fit_km(&treat);
        let t_end = k_ref.max_observed().min(k_treat.max_observed());
        let tau = tau_process(&k_treat, &k_ref, t_end).unwrap();
        for (k, &t) in tau.process().jump_times().iter().enumerate() {
            let bound = 1.0 - k_ref.eval(t).unwrap() * k_treat.eval(t).unwrap();
            let v = tau.process().values()[k].abs();
            assert!(v <= bound + 1e-12, "instance {instance}: |tau({t})|={v} > {bound}");
        }
    }
    pass("C5 tau mass bound (1000 instances)");
}

#[test]
fn c06_bootstrap_coverage() {
    // Cure-mixture truth: eta_j(m) = pi_j + (1 - pi_j) exp(-lambda m).
    let (pi0, pi1, lambda, m): (f64, f64, f64, f64) = (0.10, 0.30, 0.06, 36.0);
    let tail = (-lambda * m).exp();
    let true_delta = (pi1 + (1.0 - pi1) * tail) - (pi0 + (1.0 - pi0) * tail);

    let replicates = 500;
    let mut covered = 0usize;
    for r in 0..replicates {
        let sc = Scenario {
            kind: ScenarioKind::CureMixture {
                cure_fractions: vec![pi0, pi1],
                rates: vec![lambda, lambda],
            },
            n_per_arm: vec![300, 300],
            admin_censor_time: 48.0,
            accrual_censor: Some((18.0, 48.0)),
            seed: derive_seed(0xC6, 1, r),
        };
        let ds = simulate(&sc).unwrap();
        let est = Estimand {
            kind: EstimandKind::MilestoneContrast { m },
            treat_arm: 1,
            ref_arm: 0,
        };
        let result = bootstrap(&ds, &est, 1_000, 0.95, derive_seed(0xC6, 2, r)).unwrap();
        if result.ci_low <= true_delta && true_delta <= result.ci_high {
            covered += 1;
        }
    }
    let coverage = covered as f64 / replicates as f64;
    assert!(
        (0.93..=0.97).contains(&coverage),
        "coverage {coverage} outside [0.93, 0.97]"
    );
    pass(&format!("C6 bootstrap coverage (got {coverage:.3} in [0.93, 0.97])"));
}

#[test]
fn c07_bootstrap_determinism_across_threads() {
    let sc = Scenario {
        kind: ScenarioKind::Exponential { rates: vec![0.10, 0.07] },
        n_per_arm: vec![120, 120],
        admin_censor_time: 30.0,
        accrual_censor: None,
        seed: 0xC7,
    };
    let ds = simulate(&sc).unwrap();
    let est = Estimand {
        kind: EstimandKind::MilestoneContrast { m: 12.0 },
        treat_arm: 1,
        ref_arm: 0,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bootstrap(&ds, &est, 2_000, 0.95, 777).unwrap())
    };
    let single = run(1);
    let multi = run(4);
    assert_eq!(single, multi, "bootstrap differed across thread counts");
    pass("C7 bootstrap determinism (1 vs 4 threads, bit-identical)");
}

#[test]
fn c08_exponential_tau_closed_form() {
    // lambda0 = 2 lambda1: tau(infinity) = 1/3.
    let sc = Scenario {
        kind: ScenarioKind::Exponential { rates: vec![0.2, 0.1] },
        n_per_arm: vec![5_000, 5_000],
        admin_censor_time: 1e6,
        accrual_censor: None,
        seed: 0xC8,
    };
    let ds = simulate(&sc).unwrap();
    let views = split_by_arm(&ds);
    let k_ref = fit_km(&views[0]);
    let k_treat = fit_km(&views[1]);
    let t_end = k_ref.max_observed().max(k_treat.max_observed());
    let tau = tau_process(&k_treat, &k_ref, t_end).unwrap();
    let last = *tau.process().values().last().unwrap();
    assert!(
        (last - 1.0 / 3.0).abs() <= 0.03,
        "tau at last event {last} vs closed form 1/3"
    );
    pass(&format!("C8 exponential tau closed form (got {last:.4} vs 0.3333)"));
}

#[test]
fn c09_turning_time_recovery() {
    let replicates = 200;
    let mut total = 0.0;
    for r in 0..replicates {
        let sc = Scenario {
            kind: ScenarioKind::DelayedEffect {
                base_rate: 0.12,
                changepoint: 3.0,
                hr_before: 1.2,
                hr_after: 0.6,
            },
            n_per_arm: vec![500, 500],
            admin_censor_time: 24.0,
            accrual_censor: None,
            seed: derive_seed(0xC9, 0, r),
        };
        let sheet = truth(&sc, 12.0, &[3.0]).unwrap();
        assert_eq!(sheet.hazard_crossing, Some(3.0));
        let ds = simulate(&sc).unwrap();
        let views = split_by_arm(&ds);
        let k_ref = fit_km(&views[0]);
        let k_treat = fit_km(&views[1]);
        let t_end = k_ref.max_observed().min(k_treat.max_observed());
        let tau = tau_process(&k_treat, &k_ref, t_end).unwrap();
        total += turning_time(&tau).time;
    }
    let mean = total / replicates as f64;
    assert!(
        (mean - 3.0).abs() <= 1.5,
        "mean turning time {mean} not within 1.5 of 3.0"
    );
    pass(&format!("C9 turning-time recovery (mean {mean:.2} vs 3.0 +- 1.5)"));
}

#[test]
fn c10_reconstruction_round_trip() {
    let sc = Scenario {
        kind: ScenarioKind::PiecewiseExponential {
            cuts: vec![6.0],
            rates: vec![vec![0.09, 0.05], vec![0.06, 0.04]],
        },
        n_per_arm: vec![400, 400],
        admin_censor_time: 24.0,
        accrual_censor: None,
        seed: 0xC10,
    };
    let ds = simulate(&sc).unwrap();
    let views = split_by_arm(&ds);
    for (arm, view) in views.iter().enumerate() {
        let km = fit_km(view);
        // Digitize on a 0.1-unit grid with a risk table every 6 units.
        let mut points = Vec::new();
        for i in 0..=240 {
            let t = i as f64 * 0.1;
            points.push((t, km.survival().eval(t)));
        }
        let risk_table: Vec<(f64, u32)> = (0..=4)
            .map(|i| {
                let t = i as f64 * 6.0;
                (t, view.times().iter().filter(|&&x| x >= t).count() as u32)
            })
            .collect();
        let dc = DigitizedCurve {
            points,
            risk_table,
            total_events: Some(view.n_events() as u32),
        };
        let ipd = reconstruct_arm(&dc).unwrap();
        assert!(
            ipd.diagnostics.sup_distance <= 0.02,
            "arm {arm}: sup distance {}",
            ipd.diagnostics.sup_distance
        );
        assert!(
            ipd.diagnostics.risk_table_residuals.iter().all(|&r| r == 0),
            "arm {arm}: risk-table residuals {:?}",
            ipd.diagnostics.risk_table_residuals
        );
        assert_eq!(ipd.diagnostics.event_count_residual, Some(0), "arm {arm}");
        let km_rec = fit_km(&ipd.to_view());
        for m in [6.0, 12.0, 18.0] {
            let original = milestone_survival(&km, m).unwrap();
            let reconstructed = milestone_survival(&km_rec, m).unwrap();
            assert!(
                (original - reconstructed).abs() <= 0.02,
                "arm {arm}: milestone {m}: {original} vs {reconstructed}"
            );
        }
    }
    pass("C10 reconstruction round-trip (sup<=0.02, residuals 0, milestones<=0.02)");
}

#[test]
fn c11_cox_oracle_and_ph_null_calibration() {
    // Newton vs concavity-bracketed grid search at step 1e-4.
    let mut rng = SplitMix64::new(0xC11);
    let mut checked = 0usize;
    while checked < 50 {
        let mut subjects = Vec::new();
        for arm in 0..2u32 {
            let n = 8 + rng.next_index(12);
            let rate = if arm == 0 { 0.25 } else { 0.15 };
            for _ in 0..n {
                let t = rng.next_exp() / rate;
                let event = rng.next_f64() < 0.85;
                subjects.push(Subject { time: t, event, arm });
            }
        }
        let ds =
            SurvivalDataset::new(subjects, vec!["0".into(), "1".into()], "").unwrap();
        let views = split_by_arm(&ds);
        if views.iter().any(|v| v.n_events() == 0) {
            continue;
        }
        let fit = fit_cox_two_group(&ds, 1, 0).unwrap();
        if !fit.converged {
            continue;
        }
        let oracle = grid_search_beta(&ds);
        assert!(
            (fit.beta - oracle).abs() <= 1e-4 + 1e-9,
            "instance {checked}: newton {} vs grid {oracle}",
            fit.beta
        );
        let ph = schoenfeld_ph_test(&ds, 1, 0, &fit, TimeTransform::Identity).unwrap();
        let residual_sum: f64 = ph.residuals.iter().map(|(_, r)| r).sum();
        assert!(residual_sum.abs() <= 1e-8, "instance {checked}: sum {residual_sum}");
        checked += 1;
    }

    // Exact-PH null: proportional piecewise-exponential arms.
    let replicates = 500;
    let mut p_values = Vec::with_capacity(replicates as usize);
    for r in 0..replicates {
        let sc = Scenario {
            kind: ScenarioKind::PiecewiseExponential {
                cuts: vec![4.0],
                rates: vec![vec![0.15, 0.08], vec![0.105, 0.056]],
            },
            n_per_arm: vec![150, 150],
            admin_censor_time: 30.0,
            accrual_censor: None,
            seed: derive_seed(0xC11, 7, r),
        };
        let ds = simulate(&sc).unwrap();
        let fit = fit_cox_two_group(&ds, 1, 0).unwrap();
        let ph = schoenfeld_ph_test(&ds, 1, 0, &fit, TimeTransform::Identity).unwrap();
        p_values.push(ph.p_value);
    }
    p_values.sort_by(|a, b| a.total_cmp(b));
    let ks = p_values
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let hi = (i + 1) as f64 / replicates as f64;
            let lo = i as f64 / replicates as f64;
            (p - lo).abs().max((p - hi).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.1, "null p-value KS distance {ks}");
    pass(&format!("C11 Cox oracle + PH null calibration (KS {ks:.3} < 0.1)"));
}

/// Concavity-justified brute force: coarse 0.01 grid over [-8, 8], then a
/// 1e-4 sweep around the coarse maximizer of the Breslow partial likelihood.
fn grid_search_beta(ds: &SurvivalDataset) -> f64 {
    let views = split_by_arm(ds);
    let treat = &views[1];
    let reference = &views[0];
    let mut merged: Vec<(f64, bool, f64)> = Vec::new();
    for (t, e) in treat.times().iter().zip(treat.events()) {
        merged.push((*t, *e, 1.0));
    }
    for (t, e) in reference.times().iter().zip(reference.events()) {
        merged.push((*t, *e, 0.0));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let loglik = |beta: f64| -> f64 {
        let mut ll = 0.0;
        let mut i = 0;
        let n = merged.len();
        while i < n {
            let t = merged[i].0;
            let mut d = 0.0;
            let mut s = 0.0;
            let mut j = i;
            while j < n && merged[j].0 == t {
                if merged[j].1 {
                    d += 1.0;
                    s += merged[j].2;
                }
                j += 1;
            }
            if d > 0.0 {
                let mut denom = 0.0;
                for item in &merged[i..] {
                    denom += (beta * item.2).exp();
                }
                ll += beta * s - d * denom.ln();
            }
            i = j;
        }
        ll
    };
    let mut best = (-8.0, f64::NEG_INFINITY);
    let mut beta = -8.0;
    while beta <= 8.0 {
        let v = loglik(beta);
        if v > best.1 {
            best = (beta, v);
        }
        beta += 0.01;
    }
    let mut fine = best;
    let mut b = best.0 - 0.02;
    while b <= best.0 + 0.02 {
        let v = loglik(b);
        if v > fine.1 {
            fine = (b, v);
        }
        b += 1e-4;
    }
    fine.0
}

#[test]
fn c12_drmst_identities() {
    let mut rng = SplitMix64::new(0xC12);
    for instance in 0..200 {
        let a = random_arm(&mut rng, 40, 0.25);
        let b = random_arm(&mut rng, 40, 0.25);
        let ka = fit_km(&a);
        let kb = fit_km(&b);
        let t_end = ka.max_observed().min(kb.max_observed());
        let ab = drmst_process(&ka, &kb, t_end).unwrap();
        let ba = drmst_process(&kb, &ka, t_end).unwrap();
        for i in 0..=25 {
            let t = t_end * (i as f64 / 25.0);
            let direct = rmst(&ka, t).unwrap() - rmst(&kb, t).unwrap();
            assert!(
                (ab.eval(t) - direct).abs() <= 1e-12,
                "instance {instance}: t={t}"
            );
            assert_eq!(ab.eval(t), -ba.eval(t), "instance {instance}: antisymmetry");
        }
    }
    // Hand-computed step areas.
    let km_fixture = fit_km(
        &ArmView::new(vec![(1.0f64, true), (2.0, false), (3.0, true)]).unwrap(),
    );
    assert!((rmst(&km_fixture, 3.0).unwrap() - (1.0 + 2.0 / 3.0 * 2.0)).abs() <= 1e-12);
    let one = fit_km(&ArmView::new(vec![(2.0f64, true)]).unwrap());
    let other = fit_km(&ArmView::new(vec![(1.0f64, true)]).unwrap());
    let d = drmst_process(&one, &other, 3.0).unwrap();
    assert!((d.eval(3.0) - 1.0).abs() <= 1e-12);
    pass("C12 dRMST identities (difference, antisymmetry, hand areas)");
}
