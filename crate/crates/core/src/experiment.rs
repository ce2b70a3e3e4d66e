//! Numerical experiments: the rare-stretch probability and adversarial return laws.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{h_m_curve, CouplingPoint, DisorderLaw, LawSpec, ModelSpec, ReturnLaw};
use crate::partition::{constrained_logz_profile, localization_certificate, DisorderSample, LocVerdict};
use crate::rng::{derive_seed, sample_rng};
use crate::stats::{MCEstimate, DEFAULT_CONFIDENCE};

/// Result of the rare-stretch probability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub lambda: f64,
    pub h: f64,
    pub ell: usize,
    pub delta: f64,
    /// `(1−δ) F̂(λ, 0)`.
    pub threshold: f64,
    pub f_ref: MCEstimate,
    /// Estimate of `p(ℓ) = P(F_ℓ(λ, h; ω) ≥ (1−δ) F(λ, 0))`.
    pub p_hat: MCEstimate,
    /// `−(1/ℓ) log min(p̂, 1)`.
    pub rate_est: f64,
    /// `h²/2`.
    pub target: f64,
    /// `p̂ [(1−δ) F̂(λ, 0) − (1+α) h²/2]`.
    pub free_energy_bound: f64,
    /// Fraction of samples in the event under the sampling law.
    pub hit_fraction: f64,
}

fn check_ldp(model: &ModelSpec, ell: usize, delta: f64, n_samples: usize) -> Result<()> {
    if model.disorder != DisorderLaw::Gaussian {
        return Err(Error::Unsupported(
            "the shifted-charge experiment needs Gaussian disorder".into(),
        ));
    }
    if ell == 0 || ell > model.return_law.n_max() {
        return domain(format!("block length {ell} outside 1..={}", model.return_law.n_max()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta = {delta} must lie in (0, 1)"));
    }
    if n_samples == 0 {
        return domain("no samples");
    }
    Ok(())
}

/// Estimate `p(ℓ)` by sampling the shifted charges `ω = z − h` and reweighting
/// with the likelihood ratio `exp(h Σz − ℓh²/2)`.
pub fn experiment_ldp_rate(
    model: &ModelSpec,
    ell: usize,
    delta: f64,
    f_ref: MCEstimate,
    n_samples: usize,
    seed: u64,
) -> Result<LdpReport> {
    check_ldp(model, ell, delta, n_samples)?;
    let h = model.h();
    let threshold = (1.0 - delta) * f_ref.mean;
    let draws: Vec<(f64, bool)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = sample_rng(seed, s);
            let z: Vec<f64> = (0..ell).map(|_| rng.sample(StandardNormal)).collect();
            let sum_z: f64 = z.iter().sum();
            let omega = z.iter().map(|x| x - h).collect();
            let sample = DisorderSample::from_omega(omega);
            let f = constrained_logz_profile(model, &sample, ell)?.last() / ell as f64;
            let hit = f >= threshold;
            let w = if hit {
                (h * sum_z - 0.5 * ell as f64 * h * h).exp()
            } else {
                0.0
            };
            Ok((w, hit))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let hit_fraction = draws.iter().filter(|d| d.1).count() as f64 / n_samples as f64;
    let p_hat = MCEstimate::from_samples(&weights, f_ref.confidence)?;
    let rate_est = -p_hat.mean.min(1.0).ln() / ell as f64;
    let alpha = model.return_law.alpha();
    Ok(LdpReport {
        lambda: model.lambda(),
        h,
        ell,
        delta,
        threshold,
        f_ref,
        p_hat,
        rate_est,
        target: 0.5 * h * h,
        free_energy_bound: p_hat.mean * (threshold - (1.0 + alpha) * 0.5 * h * h),
        hit_fraction,
    })
}

/// The same probability by plain sampling of the unshifted charges.
pub fn ldp_direct_probability(
    model: &ModelSpec,
    ell: usize,
    delta: f64,
    f_ref: &MCEstimate,
    n_samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_ldp(model, ell, delta, n_samples)?;
    let threshold = (1.0 - delta) * f_ref.mean;
    let hits: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let sample = DisorderSample::generate(model.disorder, ell, seed, s);
            let f = constrained_logz_profile(model, &sample, ell)?.last() / ell as f64;
            Ok(if f >= threshold { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    MCEstimate::from_samples(&hits, f_ref.confidence)
}

/// Parameters of the adversarial-return-law comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHeadConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub disorder: DisorderLaw,
    /// Head sizes `N₀`.
    pub head_schedule: Vec<usize>,
    /// Probed values of `h`, increasing.
    pub h_grid: Vec<f64>,
    pub schedule: Vec<usize>,
    pub n_samples: usize,
    pub confidence: f64,
    pub n_max: usize,
}

impl HeavyHeadConfig {
    /// Grid of `h` from `h^{(1/(1+α))}(λ) − 0.1` to `h^{(1)}(λ) − ε` in steps of `0.025 h^{(1)}(λ)`.
    pub fn new(alpha: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        let h1 = h_m_curve(DisorderLaw::Gaussian, 1.0, lambda)?;
        let h_old = h_m_curve(DisorderLaw::Gaussian, 1.0 / (1.0 + alpha), lambda)?;
        let step = 0.025 * h1;
        let start = (h_old - 0.1 * h1).max(step);
        let target = h1 - epsilon;
        let n = ((target - start) / step + 1e-9).floor().max(0.0) as usize;
        let mut h_grid: Vec<f64> = (0..=n).map(|i| start + step * i as f64).collect();
        if h_grid.last().is_none_or(|&x| (x - target).abs() > 1e-12) && target > start {
            h_grid.push(target);
        }
        Ok(HeavyHeadConfig {
            alpha,
            lambda,
            epsilon,
            disorder: DisorderLaw::Gaussian,
            head_schedule: vec![16, 256, 4096],
            h_grid,
            schedule: vec![64, 128, 256, 512, 1024],
            n_samples: 200,
            confidence: DEFAULT_CONFIDENCE,
            n_max: 1 << 16,
        })
    }
}

/// Certification results for one return law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRow {
    /// `None` for the pure Zipf baseline.
    pub n0: Option<usize>,
    pub head_mass: f64,
    /// `(h, verdict, N used)` per grid point.
    pub grid: Vec<(f64, LocVerdict, usize)>,
    pub max_certified_h: Option<f64>,
    pub certifies_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHeadReport {
    pub config: HeavyHeadConfig,
    /// `h^{(1)}(λ) − ε`.
    pub h_target: f64,
    pub baseline: HeadRow,
    pub rows: Vec<HeadRow>,
    /// Smallest `N₀` certified localized at `h_target`.
    pub first_certifying_n0: Option<usize>,
    /// Whether the maximal certified `h` is nondecreasing in `N₀` up to one grid step.
    pub monotone: bool,
}

fn head_row(law: Arc<ReturnLaw>, n0: Option<usize>, cfg: &HeavyHeadConfig, h_target: f64, seed: u64) -> Result<HeadRow> {
    let head_mass = n0.map_or(0.0, |n| (1..=n).map(|j| law.mass_table()[j]).sum());
    let base = ModelSpec::new(law, cfg.disorder, CouplingPoint::new(cfg.lambda, 0.0)?);
    let mut grid = Vec::new();
    let mut targets = cfg.h_grid.clone();
    if !targets.contains(&h_target) {
        targets.push(h_target);
    }
    let mut certifies_target = false;
    for (i, &h) in targets.iter().enumerate() {
        // Common random numbers across laws: the seed depends on the grid point only.
        let v = localization_certificate(
            &base.with_h(h),
            &cfg.schedule,
            cfg.n_samples,
            cfg.confidence,
            derive_seed(&[seed, i as u64]),
        )?;
        if h == h_target {
            certifies_target = v.verdict == LocVerdict::Localized;
        }
        grid.push((h, v.verdict, v.n_used));
    }
    let max_certified_h = grid
        .iter()
        .filter(|g| g.1 == LocVerdict::Localized)
        .map(|g| g.0)
        .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.max(h))));
    Ok(HeadRow {
        n0,
        head_mass,
        grid,
        max_certified_h,
        certifies_target,
    })
}

/// Localization certificates along an `h` grid for heavy-head laws of increasing head size
/// and for the pure Zipf law with the same tail exponent.
pub fn experiment_heavy_head(cfg: &HeavyHeadConfig, seed: u64) -> Result<HeavyHeadReport> {
    let h1 = h_m_curve(cfg.disorder, 1.0, cfg.lambda)?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon < h1) {
        return domain(format!("epsilon = {} must lie in (0, h^(1)(lambda) = {h1})", cfg.epsilon));
    }
    let h_target = h1 - cfg.epsilon;
    let zipf = Arc::new(ReturnLaw::build(LawSpec::Zipf { alpha: cfg.alpha }, cfg.n_max)?);
    let baseline = head_row(zipf, None, cfg, h_target, seed)?;
    let mut rows = Vec::new();
    for &n0 in &cfg.head_schedule {
        let law = Arc::new(ReturnLaw::build(
            LawSpec::HeavyHead {
                alpha: cfg.alpha,
                n0,
                head_fraction: None,
            },
            cfg.n_max.max(n0),
        )?);
        rows.push(head_row(law, Some(n0), cfg, h_target, seed)?);
    }
    let step = cfg
        .h_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let maxes: Vec<f64> = rows
        .iter()
        .map(|r| r.max_certified_h.unwrap_or(f64::NEG_INFINITY))
        .collect();
    let monotone = maxes.windows(2).all(|w| w[1] >= w[0] - step - 1e-12);
    let first_certifying_n0 = rows.iter().find(|r| r.certifies_target).and_then(|r| r.n0);
    Ok(HeavyHeadReport {
        config: cfg.clone(),
        h_target,
        baseline,
        rows,
        first_certifying_n0,
        monotone,
    })
}
