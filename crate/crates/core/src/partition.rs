//! Quenched and annealed partition functions.
//!
//! Integrating out the excursion signs, the constrained partition function is
//! `Z^c_N = E[Π_j φ(λω(τ_{j-1}, τ_j] + λh(τ_j − τ_{j-1})); N ∈ τ]` with
//! `φ(t) = (1 + e^{-2t})/2`, which gives the recursion
//! `Z^c_n = Σ_{i<n} Z^c_i K(n−i) φ(λω(i,n] + λh(n−i))`, evaluated here in log space.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{DisorderLaw, ModelSpec};
use crate::rng::{derive_seed, sample_rng};
use crate::special::{log_phi, log_sum_exp};
use crate::stats::{bonferroni, check_confidence, MCEstimate, DEFAULT_CONFIDENCE};

/// Largest size accepted by the enumeration oracle.
pub const BRUTE_FORCE_MAX: usize = 16;

/// Default localization schedule.
pub const DEFAULT_SCHEDULE: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// Default number of disorder samples per estimate.
pub const DEFAULT_SAMPLES: usize = 2000;

/// A frozen charge sequence `ω₁..ω_N` with its prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample {
    omega: Vec<f64>,
    prefix: Vec<f64>,
    /// `(run seed, sample index)` of the stream that produced the charges.
    pub seed_id: (u64, u64),
}

impl DisorderSample {
    pub fn from_omega(omega: Vec<f64>) -> Self {
        Self::with_seed_id(omega, (0, 0))
    }

    fn with_seed_id(omega: Vec<f64>, seed_id: (u64, u64)) -> Self {
        let mut prefix = Vec::with_capacity(omega.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &w in &omega {
            acc += w;
            prefix.push(acc);
        }
        DisorderSample {
            omega,
            prefix,
            seed_id,
        }
    }

    /// Sample `len` charges from the stream `(seed, index)`.
    pub fn generate(disorder: DisorderLaw, len: usize, seed: u64, index: u64) -> Self {
        let mut rng = sample_rng(seed, index);
        Self::draw(disorder, len, &mut rng, (seed, index))
    }

    pub fn draw<R: Rng + ?Sized>(
        disorder: DisorderLaw,
        len: usize,
        rng: &mut R,
        seed_id: (u64, u64),
    ) -> Self {
        let omega = (0..len).map(|_| disorder.sample(rng)).collect();
        Self::with_seed_id(omega, seed_id)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `ω(i, j] = ω_{i+1} + … + ω_j`.
    pub fn block(&self, i: usize, j: usize) -> f64 {
        self.prefix[j] - self.prefix[i]
    }

    /// The shifted sequence `ω_{a+1}, …, ω_b`.
    pub fn window(&self, a: usize, b: usize) -> Self {
        Self::with_seed_id(self.omega[a..b].to_vec(), self.seed_id)
    }
}

/// `log Z^c_i` for `i = 0..=N` on one disorder sample.
#[derive(Debug, Clone)]
pub struct ConstrainedLogZProfile {
    pub values: Vec<f64>,
    pub model: ModelSpec,
}

impl ConstrainedLogZProfile {
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn last(&self) -> f64 {
        self.values[self.n()]
    }
}

fn check_size(model: &ModelSpec, sample: Option<&DisorderSample>, n: usize) -> Result<()> {
    let n_max = model.return_law.n_max();
    if n > n_max {
        return Err(Error::Range {
            index: n,
            min: 1,
            max: n_max,
        });
    }
    if let Some(s) = sample {
        if s.len() < n {
            return domain(format!("disorder sample has {} charges, need {n}", s.len()));
        }
    }
    Ok(())
}

/// Log-space DP over `i < n` with per-excursion log weight `log_w(i, n)`.
fn renewal_dp(log_k: &[f64], n: usize, mut log_w: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut terms = Vec::with_capacity(n);
    for target in 1..=n {
        terms.clear();
        let mut max = f64::NEG_INFINITY;
        for (i, &v) in values.iter().enumerate() {
            let t = v + log_k[target - i] + log_w(i, target);
            if t > max {
                max = t;
            }
            terms.push(t);
        }
        let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        values.push(max + s.ln());
    }
    values
}

/// The recursion specialized to `log φ(x) = max(−2x, 0) + log1p(e^{−2|x|}) − log 2`.
///
/// The log1p term lies in `[0, log 2]`, so the shift used for the log-sum-exp
/// is taken from the remaining terms and no logarithm is needed per term.
fn quenched_dp(model: &ModelSpec, prefix: &[f64], n: usize) -> Vec<f64> {
    let lambda = model.lambda();
    let lh = lambda * model.h();
    let log_k = model.return_law.log_mass_table();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut base = Vec::with_capacity(n);
    let mut corr = Vec::with_capacity(n);
    for target in 1..=n {
        base.clear();
        corr.clear();
        let pt = prefix[target];
        let mut max = f64::NEG_INFINITY;
        for (i, &v) in values.iter().enumerate() {
            let x = lambda * (pt - prefix[i]) + lh * (target - i) as f64;
            let b = v + log_k[target - i] + (-2.0 * x).max(0.0);
            if b > max {
                max = b;
            }
            base.push(b);
            corr.push((-2.0 * x.abs()).exp());
        }
        let s: f64 = base
            .iter()
            .zip(&corr)
            .map(|(b, c)| (b - max).exp() * (1.0 + c))
            .sum();
        values.push(max + s.ln() - std::f64::consts::LN_2);
    }
    values
}

/// `log Z^c_i` for `i = 0..=n` by the O(n²) recursion.
pub fn constrained_logz_profile(
    model: &ModelSpec,
    sample: &DisorderSample,
    n: usize,
) -> Result<ConstrainedLogZProfile> {
    check_size(model, Some(sample), n)?;
    let values = quenched_dp(model, sample.prefix(), n);
    Ok(ConstrainedLogZProfile {
        values,
        model: model.clone(),
    })
}

/// `log Z_N`, the last excursion being allowed to stay open.
pub fn free_logz(model: &ModelSpec, sample: &DisorderSample, n: usize) -> Result<f64> {
    let profile = constrained_logz_profile(model, sample, n)?;
    Ok(free_logz_from_profile(model, sample, &profile.values, n))
}

fn free_logz_from_profile(model: &ModelSpec, sample: &DisorderSample, values: &[f64], n: usize) -> f64 {
    let lambda = model.lambda();
    let lh = lambda * model.h();
    let tail = model.return_law.tail_table();
    let terms: Vec<f64> = (0..=n)
        .map(|i| values[i] + tail[n - i].ln() + log_phi(lambda * sample.block(i, n) + lh * (n - i) as f64))
        .collect();
    log_sum_exp(&terms)
}

/// How the enumeration oracle treats excursion signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteMode {
    /// Each excursion contributes `φ(·)`.
    Integrated,
    /// Every sign assignment is enumerated with weight `2^{-#excursions}`.
    ExplicitSigns,
}

/// `log Z^c_N` (or `log Z_N`) by enumerating every renewal configuration.
pub fn brute_force_logz(
    model: &ModelSpec,
    sample: &DisorderSample,
    n: usize,
    constrained: bool,
    mode: BruteMode,
) -> Result<f64> {
    if n > BRUTE_FORCE_MAX {
        return domain(format!("enumeration refused for N = {n} > {BRUTE_FORCE_MAX}"));
    }
    if n == 0 {
        return domain("N must be positive");
    }
    check_size(model, Some(sample), n)?;
    let law = &model.return_law;
    let lambda = model.lambda();
    let h = model.h();
    // Energy of a lower-half-plane excursion over (a, b].
    let below = |a: usize, b: usize| -2.0 * lambda * (sample.block(a, b) + h * (b - a) as f64);
    let mut terms = Vec::new();
    // Bit p-1 set means p ∈ τ, for p = 1..=n; constrained configurations always contain n.
    let free_bits = if constrained { n - 1 } else { n };
    for mask in 0u32..(1u32 << free_bits) {
        let mut points = vec![0usize];
        points.extend((1..=free_bits).filter(|p| mask >> (p - 1) & 1 == 1));
        if constrained {
            points.push(n);
        }
        let mut pieces: Vec<(usize, usize, f64)> = points
            .windows(2)
            .map(|w| (w[0], w[1], law.mass(w[1] - w[0]).unwrap().ln()))
            .collect();
        let last = *points.last().unwrap();
        if last < n {
            pieces.push((last, n, law.tail(n - last)?.ln()));
        }
        match mode {
            BruteMode::Integrated => {
                let t: f64 = pieces
                    .iter()
                    .map(|&(a, b, lk)| lk + log_phi(lambda * sample.block(a, b) + lambda * h * (b - a) as f64))
                    .sum();
                terms.push(t);
            }
            BruteMode::ExplicitSigns => {
                let m = pieces.len();
                let base: f64 = pieces.iter().map(|p| p.2).sum::<f64>() - m as f64 * std::f64::consts::LN_2;
                for signs in 0u32..(1u32 << m) {
                    let e: f64 = pieces
                        .iter()
                        .enumerate()
                        .filter(|(idx, _)| signs >> idx & 1 == 1)
                        .map(|(_, &(a, b, _))| below(a, b))
                        .sum();
                    terms.push(base + e);
                }
            }
        }
    }
    Ok(log_sum_exp(&terms))
}

/// `log E[Z^c_i]` for `i = 0..=n`: each excursion of length `m` carries `(1 + M(−2λ)^m e^{−2λhm})/2`.
pub fn annealed_constrained_profile(model: &ModelSpec, n: usize) -> Result<Vec<f64>> {
    check_size(model, None, n)?;
    let lambda = model.lambda();
    let rate = if lambda == 0.0 {
        0.0
    } else {
        model.disorder.log_mgf(-2.0 * lambda) - 2.0 * lambda * model.h()
    };
    let log_big_phi: Vec<f64> = (0..=n).map(|m| log_phi(-0.5 * rate * m as f64)).collect();
    Ok(renewal_dp(model.return_law.log_mass_table(), n, |i, j| log_big_phi[j - i]))
}

/// `log E[Z^c_N]`.
pub fn annealed_constrained_logz(model: &ModelSpec, n: usize) -> Result<f64> {
    Ok(annealed_constrained_profile(model, n)?[n])
}

/// Per-sample values of `(1/N) log Z^c_N` (or `(1/N) log Z_N` when `free`).
pub fn quenched_samples(
    model: &ModelSpec,
    n: usize,
    n_samples: usize,
    seed: u64,
    free: bool,
) -> Result<Vec<f64>> {
    check_size(model, None, n)?;
    if n == 0 || n_samples == 0 {
        return domain("N and the sample count must be positive");
    }
    (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let sample = DisorderSample::generate(model.disorder, n, seed, s);
            let profile = constrained_logz_profile(model, &sample, n)?;
            let v = if free {
                free_logz_from_profile(model, &sample, &profile.values, n)
            } else {
                profile.last()
            };
            Ok(v / n as f64)
        })
        .collect()
}

/// Estimate of `(1/N) E log Z^c_N`, a lower bound on the free energy by super-additivity.
pub fn free_energy_estimate(model: &ModelSpec, n: usize, n_samples: usize, seed: u64) -> Result<MCEstimate> {
    free_energy_estimate_at(model, n, n_samples, seed, DEFAULT_CONFIDENCE)
}

pub fn free_energy_estimate_at(
    model: &ModelSpec,
    n: usize,
    n_samples: usize,
    seed: u64,
    confidence: f64,
) -> Result<MCEstimate> {
    check_confidence(confidence)?;
    let xs = quenched_samples(model, n, n_samples, seed, false)?;
    MCEstimate::from_samples(&xs, confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocVerdict {
    Localized,
    Undecided,
}

/// One `N` of a localization schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocLook {
    pub n: usize,
    pub estimate: MCEstimate,
    /// Lower bound of `(1/N) E log Z^c_N` at the per-look confidence.
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationVerdict {
    pub verdict: LocVerdict,
    /// `N` at which localization was certified, or the last `N` examined.
    pub n_used: usize,
    /// Estimate of `(1/N) E log Z^c_N` at `n_used`; absent when no sampling was needed.
    pub estimate: Option<MCEstimate>,
    pub looks: Vec<LocLook>,
    /// Joint confidence over all looks of the schedule.
    pub confidence: f64,
    pub per_look_confidence: f64,
    /// Why sampling was skipped, if it was.
    pub shortcut: Option<String>,
}

/// Run the schedule until the lower confidence bound of `E log Z^c_N` becomes positive.
///
/// The per-look level is Bonferroni-adjusted over the whole schedule. When
/// `h ≥ h^{(1)}(λ)` or `λ = 0` the answer is `Undecided` without sampling, since
/// then `E log Z^c_N ≤ log E Z^c_N ≤ log u_N < 0` for every `N`.
pub fn localization_certificate(
    model: &ModelSpec,
    n_schedule: &[usize],
    n_samples: usize,
    confidence: f64,
    seed: u64,
) -> Result<LocalizationVerdict> {
    check_confidence(confidence)?;
    if n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return domain("schedule must be strictly increasing");
    }
    let per_look = bonferroni(confidence, n_schedule.len());
    let lambda = model.lambda();
    let undecided = |shortcut: String| LocalizationVerdict {
        verdict: LocVerdict::Undecided,
        n_used: 0,
        estimate: None,
        looks: Vec::new(),
        confidence,
        per_look_confidence: per_look,
        shortcut: Some(shortcut),
    };
    if lambda == 0.0 {
        return Ok(undecided("lambda = 0: log Z^c_N = log u_N < 0".into()));
    }
    let h1 = model.disorder.log_mgf(-2.0 * lambda) / (2.0 * lambda);
    if model.h() >= h1 {
        return Ok(undecided(format!(
            "h = {} >= h^(1)(lambda) = {h1}: annealed bound gives E log Z^c_N < 0",
            model.h()
        )));
    }
    let mut looks = Vec::new();
    for &n in n_schedule {
        let est = free_energy_estimate_at(model, n, n_samples, derive_seed(&[seed, n as u64]), per_look)?;
        let lower = est.lower_at(per_look);
        looks.push(LocLook {
            n,
            estimate: est,
            lower,
        });
        if lower > 0.0 {
            return Ok(LocalizationVerdict {
                verdict: LocVerdict::Localized,
                n_used: n,
                estimate: Some(est),
                looks,
                confidence,
                per_look_confidence: per_look,
                shortcut: None,
            });
        }
    }
    let last = looks.last().copied();
    Ok(LocalizationVerdict {
        verdict: LocVerdict::Undecided,
        n_used: last.map_or(0, |l| l.n),
        estimate: last.map(|l| l.estimate),
        looks,
        confidence,
        per_look_confidence: per_look,
        shortcut: None,
    })
}
