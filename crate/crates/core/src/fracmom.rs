//! Fractional-moment delocalization certificates.
//!
//! With `A_N = E[(Z^c_N)^γ]` and
//! `B(j) = K(j)^γ E[φ(λω(0,j] + λhj)^γ]`, the decomposition of `Z^c_N` at the
//! first renewal after `k` gives `A_N ≤ Σ_{j≥k} A_{N−j} Σ_{i<k} B(j−i) A_i`.
//! If `U = Σ_{i<k} A_i Σ_{j≥k} B(j−i) ≤ 1` then `A_N` stays bounded and the
//! free energy vanishes. The `A_i` are estimated by Monte Carlo and the
//! tail sums of `B` are bounded analytically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{DisorderLaw, ModelSpec, ModelSummary};
use crate::partition::{constrained_logz_profile, DisorderSample};
use crate::rng::derive_seed;
use crate::special::{integrate_adaptive, log_phi, normal_cdf};
use crate::stats::{bonferroni, check_confidence, MCEstimate};

/// Largest `j` for which Rademacher weights are enumerated exactly.
pub const RADEMACHER_EXACT_MAX: usize = 30;

/// Default horizon of exact summation in tail bounds.
pub const EXACT_SUM_HORIZON: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BMode {
    /// The exact Gaussian expectation (or binomial enumeration for Rademacher charges).
    Exact,
    /// `K(j)^γ 2^{−γ} [exp(j(log M(−2γλ) − 2γλh)) + 1]`.
    Universal,
}

/// A weight `B(j)` and whether the exact mode had to fall back to the universal bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BWeight {
    pub value: f64,
    pub fallback: bool,
}

/// Per-unit-length exponent `log M(−2γλ) − 2γλh` of the universal bound.
pub fn universal_exponent(model: &ModelSpec, gamma: f64) -> f64 {
    let l = model.lambda();
    model.disorder.log_mgf(-2.0 * gamma * l) - 2.0 * gamma * l * model.h()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("gamma = {gamma} must lie in (0, 1)"));
    }
    Ok(())
}

/// `E[φ(X)^γ]` for `X ~ N(μ, σ²)`, `σ > 0`.
///
/// Writes `(1 + e^{−2t})^γ = 1 + (r(t) − 1)` for `t ≥ 0` and
/// `e^{−2γt} (1 + (r(t) − 1))` for `t < 0`, with `r(t) = (1 + e^{−2|t|})^γ`;
/// the Gaussian pieces are explicit and `r − 1` decays like `e^{−2|t|}`.
fn gaussian_phi_moment(mu: f64, sigma: f64, gamma: f64) -> f64 {
    let r1 = |t: f64| ((-2.0 * t.abs()).exp().ln_1p() * gamma).exp_m1();
    let density = |t: f64, m: f64| {
        let z = (t - m) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let window = |m: f64, lo: f64, hi: f64| ((m - 12.0 * sigma).max(lo), (m + 12.0 * sigma).min(hi));
    let piece = |m: f64, lo: f64, hi: f64| {
        let (a, b) = window(m, lo, hi);
        if a >= b {
            0.0
        } else {
            integrate_adaptive(|t| r1(t) * density(t, m), a, b, 1e-12, 1e-300)
        }
    };
    let upper = normal_cdf(mu / sigma) + piece(mu, 0.0, 40.0);
    let mu_tilt = mu - 2.0 * gamma * sigma * sigma;
    let log_factor = 2.0 * gamma * gamma * sigma * sigma - 2.0 * gamma * mu;
    let lower_core = normal_cdf(-mu_tilt / sigma) + piece(mu_tilt, -40.0, 0.0);
    let lower = if lower_core == 0.0 {
        0.0
    } else {
        (log_factor + lower_core.ln()).exp()
    };
    2f64.powf(-gamma) * (upper + lower)
}

fn binomial_phi_moment(lambda: f64, h: f64, gamma: f64, j: usize) -> f64 {
    // log C(j, b) 2^{-j}, built incrementally.
    let mut log_w = -(j as f64) * std::f64::consts::LN_2;
    let mut total = 0.0;
    for b in 0..=j {
        if b > 0 {
            log_w += ((j - b + 1) as f64 / b as f64).ln();
        }
        let s = 2.0 * b as f64 - j as f64;
        total += (log_w + gamma * log_phi(lambda * s + lambda * h * j as f64)).exp();
    }
    total
}

/// `B(j)` in the requested mode.
pub fn b_weight(model: &ModelSpec, gamma: f64, j: usize, mode: BMode) -> Result<BWeight> {
    check_gamma(gamma)?;
    let k = model.return_law.mass(j)?;
    let kg = k.powf(gamma);
    let universal = || kg * 2f64.powf(-gamma) * ((j as f64 * universal_exponent(model, gamma)).exp() + 1.0);
    let lambda = model.lambda();
    if mode == BMode::Universal {
        return Ok(BWeight {
            value: universal(),
            fallback: false,
        });
    }
    if lambda == 0.0 {
        return Ok(BWeight {
            value: kg,
            fallback: false,
        });
    }
    let h = model.h();
    match model.disorder {
        DisorderLaw::Gaussian => {
            let jf = j as f64;
            Ok(BWeight {
                value: kg * gaussian_phi_moment(lambda * h * jf, lambda * jf.sqrt(), gamma),
                fallback: false,
            })
        }
        DisorderLaw::Rademacher if j <= RADEMACHER_EXACT_MAX => Ok(BWeight {
            value: kg * binomial_phi_moment(lambda, h, gamma, j),
            fallback: false,
        }),
        DisorderLaw::Rademacher => Ok(BWeight {
            value: universal(),
            fallback: true,
        }),
    }
}

/// Constants entering the analytic part of the tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    /// Exact summation covers `j < j0`.
    pub j0: usize,
    /// `(sup_{j ≥ j0} j^{1+α} K(j))^γ`.
    pub c_gamma: f64,
    /// `p = (1+α)γ`.
    pub p: f64,
    /// `log M(−2γλ) − 2γλh ≤ 0`.
    pub exponent: f64,
    /// Whether some exact-mode weight fell back to the universal bound.
    pub fallback_used: bool,
}

/// Certified upper bounds `T(m) ≥ Σ_{j≥m} B(j)` for one `(model, γ)`.
#[derive(Debug, Clone)]
pub struct BTail {
    gamma: f64,
    constants: TailConstants,
    // suffix[m] = Σ_{m ≤ j < j0} B(j), for m = 1..=j0.
    suffix: Vec<f64>,
}

impl BTail {
    pub fn new(model: &ModelSpec, gamma: f64) -> Result<Self> {
        Self::with_horizon(model, gamma, EXACT_SUM_HORIZON)
    }

    pub fn with_horizon(model: &ModelSpec, gamma: f64, horizon: usize) -> Result<Self> {
        check_gamma(gamma)?;
        let law = &model.return_law;
        let p = (1.0 + law.alpha()) * gamma;
        if p <= 1.0 {
            return domain(format!(
                "(1 + alpha) * gamma = {p} <= 1: the tail sum of B diverges"
            ));
        }
        let exponent = universal_exponent(model, gamma);
        if exponent > 0.0 {
            return domain(format!(
                "log M(-2 gamma lambda) - 2 gamma lambda h = {exponent} > 0: need h >= h^(gamma)(lambda)"
            ));
        }
        let j0 = horizon.min(law.n_max()).max(1);
        let weights: Vec<BWeight> = (1..j0)
            .into_par_iter()
            .map(|j| b_weight(model, gamma, j, BMode::Exact))
            .collect::<Result<_>>()?;
        let fallback_used = weights.iter().any(|w| w.fallback);
        let mut suffix = vec![0.0; j0 + 1];
        for j in (1..j0).rev() {
            suffix[j] = suffix[j + 1] + weights[j - 1].value;
        }
        let c_gamma = law.tail_ratio_sup(j0).powf(gamma);
        Ok(BTail {
            gamma,
            constants: TailConstants {
                j0,
                c_gamma,
                p,
                exponent,
                fallback_used,
            },
            suffix,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn constants(&self) -> TailConstants {
        self.constants
    }

    /// `Σ_{j ≥ m} 2^{−γ}(e^{ja} + 1) C_γ j^{−p}` bounded by `M^{−p} + M^{1−p}/(p−1)` from `M = m`.
    fn remainder(&self, m: usize) -> f64 {
        let c = &self.constants;
        let mf = m as f64;
        let sum = mf.powf(-c.p) + mf.powf(1.0 - c.p) / (c.p - 1.0);
        2f64.powf(-self.gamma) * ((mf * c.exponent).exp() + 1.0) * c.c_gamma * sum
    }

    /// `T(m) ≥ Σ_{j ≥ m} B(j)`.
    pub fn upper(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return domain("tail sums start at m >= 1");
        }
        let j0 = self.constants.j0;
        if m >= j0 {
            return Ok(self.remainder(m));
        }
        Ok(self.suffix[m] + self.remainder(j0))
    }
}

/// Certified upper bound on `Σ_{j≥m} B(j)`.
pub fn b_tail_upper(model: &ModelSpec, gamma: f64, m: usize) -> Result<f64> {
    BTail::new(model, gamma)?.upper(m)
}

/// Estimates of `A_i = E[(Z^c_i)^γ]` for `i = 0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub estimates: Vec<MCEstimate>,
    /// One-sided upper confidence bounds at `confidence`.
    pub upper: Vec<f64>,
    pub confidence: f64,
}

/// `A_0..A_{k−1}` from one DP pass per disorder sample.
pub fn fractional_moment_estimates(
    model: &ModelSpec,
    gamma: f64,
    k: usize,
    n_samples: usize,
    confidence: f64,
    seed: u64,
) -> Result<MomentEstimates> {
    check_gamma(gamma)?;
    check_confidence(confidence)?;
    if k == 0 || n_samples == 0 {
        return domain("k and the sample count must be positive");
    }
    let top = k - 1;
    if top > model.return_law.n_max() {
        return Err(Error::Range {
            index: top,
            min: 0,
            max: model.return_law.n_max(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let sample = DisorderSample::generate(model.disorder, top, seed, s);
            let profile = constrained_logz_profile(model, &sample, top)?;
            Ok(profile.values.iter().map(|v| (gamma * v).exp()).collect())
        })
        .collect::<Result<_>>()?;
    let mut estimates = Vec::with_capacity(k);
    let mut column = vec![0.0; n_samples];
    for i in 0..k {
        for (c, row) in column.iter_mut().zip(&rows) {
            *c = row[i];
        }
        estimates.push(MCEstimate::from_samples(&column, confidence)?);
    }
    let upper = estimates.iter().map(|e| e.upper()).collect();
    Ok(MomentEstimates {
        estimates,
        upper,
        confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeOrigin {
    Manual,
    AlphaGt1,
    AlphaLe1,
}

/// Fractional exponent `γ` and cut index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub gamma: f64,
    pub k: usize,
    pub recipe_origin: RecipeOrigin,
}

impl FracParams {
    pub fn manual(gamma: f64, k: usize) -> Result<Self> {
        check_gamma(gamma)?;
        if k == 0 {
            return domain("k must be positive");
        }
        Ok(FracParams {
            gamma,
            k,
            recipe_origin: RecipeOrigin::Manual,
        })
    }
}

// Guards floor() against quotients such as 1/(1 − 0.95) = 19.999999999999996.
const FLOOR_SLACK: f64 = 1e-9;

/// Default `(γ, k)` for given `α` and `λ`.
///
/// For `α > 1` the knob is `ρ ∈ (2/(1+α), 1)`: `γ` is the midpoint of
/// `(2/(1+α), ρ)` and `k = ⌊1/(λ²(1−ρ))⌋`. For `α ≤ 1` the knob is `c > 0` with
/// `cλ² < 1`: `k = ⌊|log cλ²| / (cλ²)⌋` and `γ = 1 − 1/log k`.
pub fn parameter_recipe(alpha: f64, lambda: f64, knob: f64) -> Result<FracParams> {
    if !(alpha > 0.0) {
        return domain(format!("alpha = {alpha} must be positive"));
    }
    if !(lambda > 0.0) {
        return domain(format!("lambda = {lambda} must be positive"));
    }
    if alpha > 1.0 {
        let lower = 2.0 / (1.0 + alpha);
        if !(knob > lower && knob < 1.0) {
            return domain(format!("rho = {knob} must lie in (2/(1+alpha), 1) = ({lower}, 1)"));
        }
        let gamma = 0.5 * (lower + knob);
        let k = ((1.0 / (lambda * lambda * (1.0 - knob))) + FLOOR_SLACK).floor() as usize;
        Ok(FracParams {
            gamma,
            k: k.max(2),
            recipe_origin: RecipeOrigin::AlphaGt1,
        })
    } else {
        let x = knob * lambda * lambda;
        if !(knob > 0.0 && x < 1.0) {
            return domain(format!("c * lambda^2 = {x} must lie in (0, 1)"));
        }
        let k = ((x.ln().abs() / x) + FLOOR_SLACK).floor() as usize;
        let k = k.max(2);
        let gamma = 1.0 - 1.0 / (k as f64).ln();
        if !(gamma > 0.0) {
            return domain(format!("k = {k} gives gamma = {gamma} <= 0; decrease c * lambda^2"));
        }
        Ok(FracParams {
            gamma,
            k,
            recipe_origin: RecipeOrigin::AlphaLe1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelocVerdict {
    Delocalized,
    Inconclusive,
}

/// Self-contained record of one fractional-moment test.
///
/// `u_value = Σ_i a_upper[i] · tail_sums[i]`, with `tail_sums[i] ≥ Σ_{j≥k−i} B(j)`
/// and `a_upper[i]` an upper confidence bound of `A_i`. The bounds on the
/// `A_i` hold jointly at `confidence` (Bonferroni over the `k` indices);
/// the tail sums are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelocCertificate {
    pub model: ModelSummary,
    pub params: FracParams,
    pub u_value: f64,
    pub a_upper: Vec<f64>,
    pub a_estimates: Vec<MCEstimate>,
    pub tail_sums: Vec<f64>,
    pub tail_constants: TailConstants,
    pub verdict: DelocVerdict,
    pub confidence: f64,
    pub per_bound_confidence: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Test `Σ_{i<k} A_i Σ_{j≥k} B(j−i) ≤ 1` with Monte Carlo bounds on `A_i`.
pub fn delocalization_certificate(
    model: &ModelSpec,
    params: FracParams,
    n_samples: usize,
    confidence: f64,
    seed: u64,
) -> Result<DelocCertificate> {
    let tail = BTail::new(model, params.gamma)?;
    delocalization_certificate_with(model, params, &tail, n_samples, confidence, seed)
}

/// As [`delocalization_certificate`], reusing precomputed tail bounds for the same `(model, γ)`.
pub fn delocalization_certificate_with(
    model: &ModelSpec,
    params: FracParams,
    tail: &BTail,
    n_samples: usize,
    confidence: f64,
    seed: u64,
) -> Result<DelocCertificate> {
    check_confidence(confidence)?;
    if model.lambda() == 0.0 {
        return domain("lambda = 0: no coupling, nothing to certify");
    }
    if tail.gamma() != params.gamma {
        return domain("tail bounds were computed for a different gamma");
    }
    let k = params.k;
    let per_bound = bonferroni(confidence, k);
    let moments = fractional_moment_estimates(
        model,
        params.gamma,
        k,
        n_samples,
        per_bound,
        derive_seed(&[seed, k as u64, params.gamma.to_bits()]),
    )?;
    let tail_sums: Vec<f64> = (0..k).map(|i| tail.upper(k - i)).collect::<Result<_>>()?;
    let u_value: f64 = moments
        .upper
        .iter()
        .zip(&tail_sums)
        .map(|(a, t)| a.max(0.0) * t)
        .sum();
    let verdict = if u_value <= 1.0 {
        DelocVerdict::Delocalized
    } else {
        DelocVerdict::Inconclusive
    };
    Ok(DelocCertificate {
        model: model.summary(),
        params,
        u_value,
        a_upper: moments.upper,
        a_estimates: moments.estimates,
        tail_sums,
        tail_constants: tail.constants(),
        verdict,
        confidence,
        per_bound_confidence: per_bound,
        n_samples,
        seed,
    })
}
