use std::sync::Arc;

use copolymer_core::experiment::{experiment_heavy_head, experiment_ldp_rate, ldp_direct_probability, HeavyHeadConfig};
use copolymer_core::partition::free_energy_estimate;
use copolymer_core::phase::{hc_bracket, scan_csv, scan_phase, SearchBudget, SCAN_CSV_HEADER};
use copolymer_core::{h_m_curve, CouplingPoint, DisorderLaw, LawSpec, ModelSpec, ReturnLaw};

fn srw() -> Arc<ReturnLaw> {
    Arc::new(ReturnLaw::build(LawSpec::Srw, 4096).unwrap())
}

fn gaussian(lambda: f64, h: f64) -> ModelSpec {
    ModelSpec::new(srw(), DisorderLaw::Gaussian, CouplingPoint::new(lambda, h).unwrap())
}

#[test]
fn ldp_rate_vanishes_without_shift() {
    let m = gaussian(1.0, 0.0);
    let f_ref = free_energy_estimate(&m, 1024, 200, 1).unwrap();
    let r = experiment_ldp_rate(&m, 400, 0.3, f_ref, 500, 2).unwrap();
    assert!(r.rate_est >= 0.0 && r.rate_est <= 0.01, "{}", r.rate_est);
}

#[test]
fn importance_sampling_agrees_with_direct_sampling() {
    let m = gaussian(1.0, 0.05);
    let f_ref = free_energy_estimate(&m.with_h(0.0), 1024, 200, 3).unwrap();
    let is = experiment_ldp_rate(&m, 100, 0.3, f_ref, 4000, 4).unwrap().p_hat;
    let direct = ldp_direct_probability(&m, 100, 0.3, &f_ref, 4000, 5).unwrap();
    let pooled = is.stderr.hypot(direct.stderr);
    assert!((is.mean - direct.mean).abs() <= 3.0 * pooled, "{} vs {}", is.mean, direct.mean);
}

#[test]
fn ldp_rate_grows_with_h() {
    let base = gaussian(1.0, 0.0);
    let f_ref = free_energy_estimate(&base, 1024, 200, 6).unwrap();
    let ell = 200;
    let rates: Vec<(f64, f64)> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&h| {
            let r = experiment_ldp_rate(&base.with_h(h), ell, 0.3, f_ref, 2000, 7).unwrap();
            // Delta method: se(−log p / ℓ) ≈ se(p) / (p ℓ).
            (r.rate_est, r.p_hat.stderr / (r.p_hat.mean * ell as f64))
        })
        .collect();
    for w in rates.windows(2) {
        assert!(w[1].0 >= w[0].0 - 3.0 * w[0].1.hypot(w[1].1), "{rates:?}");
    }
}

#[test]
fn heavy_head_inside_known_region() {
    // h = 0.3 lies below h^(2/3)(1) = 2/3: every law localizes there.
    let mut cfg = HeavyHeadConfig::new(0.5, 1.0, 0.7).unwrap();
    cfg.h_grid = vec![0.3];
    cfg.head_schedule = vec![16, 256];
    cfg.n_samples = 400;
    let r = experiment_heavy_head(&cfg, 8).unwrap();
    assert!(r.baseline.certifies_target);
    assert!(r.rows.iter().all(|row| row.certifies_target));
    assert_eq!(r.first_certifying_n0, Some(16));
    assert!(r.monotone);
}

fn small_budget() -> SearchBudget {
    SearchBudget {
        schedule: vec![64, 128, 256],
        samples_per_probe: 400,
        max_probes: 5,
        neutral_n: Some(128),
        ..SearchBudget::default()
    }
}

#[test]
fn brackets_are_sane() {
    let law = Arc::new(ReturnLaw::build(LawSpec::Zipf { alpha: 2.0 }, 1 << 16).unwrap());
    let budget = small_budget();
    let scan = scan_phase(law, DisorderLaw::Gaussian, &[0.5, 1.0], &budget, 0.5, 9).unwrap();
    for row in &scan.rows {
        let h1 = h_m_curve(DisorderLaw::Gaussian, 1.0, row.lambda).unwrap();
        if let (Some(l), Some(d)) = (row.h_loc_max, row.h_deloc_min) {
            assert!(l < d);
        }
        if let Some(d) = row.h_deloc_min {
            assert!(d <= 1.05 * h1 + budget.tolerance);
        }
        if let Some(l) = row.h_loc_max {
            assert!(l <= row.bounds.h_upper + budget.tolerance);
        }
        assert!(row.conflicts.is_empty());
        assert!(row.probes.len() <= budget.max_probes);
        assert!(row.bounds.h_lower_neutral.is_some());
    }
    let csv = scan_csv(&scan.rows);
    assert!(csv.starts_with(SCAN_CSV_HEADER));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn weak_coupling_bracket_is_reported() {
    let lambda = 1e-3;
    let row = hc_bracket(srw(), DisorderLaw::Gaussian, lambda, &small_budget(), 2.0 / 3.0, 10).unwrap();
    let h1 = h_m_curve(DisorderLaw::Gaussian, 1.0, lambda).unwrap();
    for p in &row.probes {
        assert!(p.h > 0.0 && p.h <= 1.05 * h1 + 1e-15);
    }
    assert!(!row.probes.is_empty());
    // The whole range is narrower than the tolerance; nothing certifies localization.
    assert!(row.h_loc_max.is_none());
    if let Some(d) = row.h_deloc_min {
        assert!(d > 0.0 && d <= 1.05 * h1 + 1e-15);
    }
}

#[test]
fn scan_is_reproducible() {
    let budget = SearchBudget {
        neutral_n: None,
        max_probes: 3,
        ..small_budget()
    };
    let a = scan_csv(&scan_phase(srw(), DisorderLaw::Gaussian, &[0.5, 1.0], &budget, 2.0 / 3.0, 11).unwrap().rows);
    let b = scan_csv(&scan_phase(srw(), DisorderLaw::Gaussian, &[0.5, 1.0], &budget, 2.0 / 3.0, 11).unwrap().rows);
    assert_eq!(a, b);
}
