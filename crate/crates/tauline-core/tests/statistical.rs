//! Monte Carlo checks of the statistical behavior of the diagnostics:
//! slope sign under proportional hazards and PH-test power under a
//! constructed hazard reversal. Deterministic seeds keep these stable.

use tauline_core::cox::{fit_cox_two_group, schoenfeld_ph_test, TimeTransform};
use tauline_core::data::split_by_arm;
use tauline_core::km::fit_km;
use tauline_core::rng::derive_seed;
use tauline_core::sim::{simulate, Scenario, ScenarioKind};
use tauline_core::tau::{tau_process, tau_slope};

#[test]
fn slope_is_positive_under_proportional_hazards() {
    // lambda1 < lambda0 everywhere: the tau slope should be positive at
    // almost all interior grid points.
    let sc = Scenario {
        kind: ScenarioKind::Exponential { rates: vec![0.20, 0.10] },
        n_per_arm: vec![500, 500],
        admin_censor_time: 24.0,
        accrual_censor: None,
        seed: 0x51_09E,
    };
    let ds = simulate(&sc).unwrap();
    let views = split_by_arm(&ds);
    let k_ref = fit_km(&views[0]);
    let k_treat = fit_km(&views[1]);
    let t_end = k_ref.max_observed().min(k_treat.max_observed());
    let tau = tau_process(&k_treat, &k_ref, t_end).unwrap();
    let slope = tau_slope(&tau, t_end / 10.0).unwrap();

    let interior: Vec<f64> = slope
        .jump_times()
        .iter()
        .zip(slope.values())
        .filter(|(&t, _)| t > 0.1 * t_end && t < 0.9 * t_end)
        .map(|(_, &v)| v)
        .collect();
    let positive = interior.iter().filter(|&&v| v > 0.0).count();
    let fraction = positive as f64 / interior.len() as f64;
    assert!(fraction >= 0.90, "positive slope fraction {fraction}");
}

#[test]
fn ph_test_detects_crossing_hazards() {
    // Hazards reverse at the changepoint: the PH test should reject in at
    // least 80% of replicates at n = 500 per arm.
    let replicates = 100;
    let mut rejections = 0usize;
    for r in 0..replicates {
        let sc = Scenario {
            kind: ScenarioKind::CrossingHazards {
                base_rate: 0.12,
                changepoint: 4.0,
                hr_before: 0.5,
                hr_after: 2.0,
            },
            n_per_arm: vec![500, 500],
            admin_censor_time: 24.0,
            accrual_censor: None,
            seed: derive_seed(0x90_3E5, 0, r),
        };
        let ds = simulate(&sc).unwrap();
        let fit = fit_cox_two_group(&ds, 1, 0).unwrap();
        let ph = schoenfeld_ph_test(&ds, 1, 0, &fit, TimeTransform::Identity).unwrap();
        if ph.p_value < 0.05 {
            rejections += 1;
        }
    }
    let power = rejections as f64 / replicates as f64;
    assert!(power >= 0.80, "crossing-hazards power {power}");
}
