//! Sampling and exact statistics of the renewal process of interface visits.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ReturnLaw;
use crate::rng::sample_rng;
use crate::special::log_sum_exp;
use crate::stats::{check_confidence, MCEstimate, DEFAULT_CONFIDENCE};

/// Renewal points up to a horizon, one sign per excursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalPath {
    /// `τ₀ = 0 < τ₁ < …`; the last point is `≥ horizon`.
    pub points: Vec<usize>,
    /// `s_j = ±1` for the excursion `(τ_{j-1}, τ_j]`.
    pub signs: Vec<i8>,
    pub horizon: usize,
}

impl RenewalPath {
    /// `Δ_n = (1 − s_j)/2` for `n ∈ (τ_{j-1}, τ_j]`.
    pub fn delta(&self, n: usize) -> u8 {
        assert!(n >= 1, "Δ is indexed from 1");
        let j = self.points.partition_point(|&p| p < n);
        u8::from(self.signs[j - 1] < 0)
    }

    /// `Σ_{n ≤ horizon} Δ_n`, computed excursion by excursion.
    pub fn delta_sum(&self) -> usize {
        self.points
            .windows(2)
            .zip(&self.signs)
            .filter(|(_, &s)| s < 0)
            .map(|(w, _)| w[1].min(self.horizon).saturating_sub(w[0]))
            .sum()
    }

    /// Number of renewal points in `(0, horizon]`.
    pub fn renewal_count(&self) -> usize {
        self.points[1..].iter().take_while(|&&p| p <= self.horizon).count()
    }

    /// Whether the horizon itself is a renewal point.
    pub fn hits_horizon(&self) -> bool {
        self.points.binary_search(&self.horizon).is_ok()
    }
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// IID increments drawn from `law` until the horizon `n` is reached or passed.
pub fn sample_path<R: Rng + ?Sized>(law: &ReturnLaw, n: usize, rng: &mut R) -> RenewalPath {
    let mut points = vec![0usize];
    let mut signs = Vec::new();
    let mut t = 0usize;
    while t < n || points.len() == 1 {
        t = t.saturating_add(law.sample(rng));
        points.push(t);
        signs.push(random_sign(rng));
    }
    RenewalPath {
        points,
        signs,
        horizon: n,
    }
}

/// The renewal mass function `u_n = P(n ∈ τ)` for `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct RenewalTable {
    u: Vec<f64>,
    log_u: Vec<f64>,
}

impl RenewalTable {
    /// Build by `u_0 = 1`, `u_n = Σ_{m=1}^n K(m) u_{n−m}`, switching to log space on underflow.
    pub fn new(law: &ReturnLaw, n: usize) -> Result<Self> {
        if n > law.n_max() {
            return Err(Error::Range {
                index: n,
                min: 0,
                max: law.n_max(),
            });
        }
        let k = law.mass_table();
        let mut u = vec![0.0; n + 1];
        u[0] = 1.0;
        for j in 1..=n {
            u[j] = (1..=j).map(|m| k[m] * u[j - m]).sum();
        }
        let log_u = if u.iter().any(|&x| x < 1e-300) {
            let lk = law.log_mass_table();
            let mut lu = vec![0.0; n + 1];
            let mut terms = Vec::with_capacity(n);
            for j in 1..=n {
                terms.clear();
                terms.extend((1..=j).map(|m| lk[m] + lu[j - m]));
                lu[j] = log_sum_exp(&terms);
            }
            lu
        } else {
            u.iter().map(|x| x.ln()).collect()
        };
        Ok(RenewalTable { u, log_u })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.u.len() - 1
    }

    pub fn mass(&self, n: usize) -> Result<f64> {
        self.u.get(n).copied().ok_or(Error::Range {
            index: n,
            min: 0,
            max: self.horizon(),
        })
    }

    pub fn log_mass(&self, n: usize) -> Result<f64> {
        self.log_u.get(n).copied().ok_or(Error::Range {
            index: n,
            min: 0,
            max: self.horizon(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }
}

/// `u_n = P(n ∈ τ)`.
pub fn renewal_mass(law: &ReturnLaw, n: usize) -> Result<f64> {
    RenewalTable::new(law, n)?.mass(n)
}

/// A path with `N ∈ τ`, sampled exactly backwards from `N`.
///
/// From a point `j` the previous point is `i` with probability `K(j−i) u_i / u_j`.
pub fn sample_conditioned<R: Rng + ?Sized>(
    law: &ReturnLaw,
    table: &RenewalTable,
    n: usize,
    rng: &mut R,
) -> Result<RenewalPath> {
    if n > table.horizon() {
        return Err(Error::Range {
            index: n,
            min: 0,
            max: table.horizon(),
        });
    }
    if n == 0 {
        return domain("conditioning needs N >= 1");
    }
    let k = law.mass_table();
    let log_k = law.log_mass_table();
    let linear = table.u.iter().all(|&x| x >= 1e-300);
    let mut rev = vec![n];
    let mut j = n;
    while j > 0 {
        let v: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = 0;
        for i in (0..j).rev() {
            acc += if linear {
                k[j - i] * table.u[i] / table.u[j]
            } else {
                (log_k[j - i] + table.log_u[i] - table.log_u[j]).exp()
            };
            if acc > v {
                chosen = i;
                break;
            }
        }
        j = chosen;
        rev.push(j);
    }
    rev.reverse();
    let signs = (1..rev.len()).map(|_| random_sign(rng)).collect();
    Ok(RenewalPath {
        points: rev,
        signs,
        horizon: n,
    })
}

/// Estimates of `E[exp(−(q/N) Σ_{n≤N} Δ_n)]` for several `q`, sharing the sampled paths.
pub fn delta_laplace_multi(
    law: &ReturnLaw,
    n: usize,
    qs: &[f64],
    n_samples: usize,
    conditioned: bool,
    seed: u64,
    confidence: f64,
) -> Result<Vec<MCEstimate>> {
    check_confidence(confidence)?;
    if n == 0 || n_samples == 0 {
        return domain("N and the sample count must be positive");
    }
    if let Some(q) = qs.iter().find(|q| !(**q >= 0.0)) {
        return domain(format!("q = {q} must be nonnegative"));
    }
    let table = if conditioned {
        Some(RenewalTable::new(law, n)?)
    } else {
        None
    };
    let fractions: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = sample_rng(seed, s);
            let path = match &table {
                Some(t) => sample_conditioned(law, t, n, &mut rng)?,
                None => sample_path(law, n, &mut rng),
            };
            Ok(path.delta_sum() as f64 / n as f64)
        })
        .collect::<Result<_>>()?;
    qs.iter()
        .map(|&q| {
            let vals: Vec<f64> = fractions.iter().map(|f| (-q * f).exp()).collect();
            MCEstimate::from_samples(&vals, confidence)
        })
        .collect()
}

/// Estimate of `E[exp(−(q/N) Σ_{n≤N} Δ_n)]`, optionally conditioned on `N ∈ τ`.
pub fn delta_laplace(
    law: &ReturnLaw,
    n: usize,
    q: f64,
    n_samples: usize,
    conditioned: bool,
    seed: u64,
) -> Result<MCEstimate> {
    Ok(delta_laplace_multi(law, n, &[q], n_samples, conditioned, seed, DEFAULT_CONFIDENCE)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LawSpec;
    use approx::assert_relative_eq;

    #[test]
    fn table_start() {
        let law = ReturnLaw::build(LawSpec::Srw, 64).unwrap();
        let t = RenewalTable::new(&law, 64).unwrap();
        assert_eq!(t.mass(0).unwrap(), 1.0);
        assert_eq!(t.mass(1).unwrap(), 0.5);
        // For the walk, u_n = P(S_{2n} = 0) equals P(τ₁ > n).
        for n in [2, 10, 64] {
            assert_relative_eq!(t.mass(n).unwrap(), law.tail(n).unwrap(), max_relative = 1e-12);
        }
        assert!(t.mass(65).is_err());
    }

    #[test]
    fn path_structure() {
        let law = ReturnLaw::build(LawSpec::Zipf { alpha: 0.5 }, 1024).unwrap();
        let mut rng = sample_rng(1, 0);
        let p = sample_path(&law, 100, &mut rng);
        assert!(*p.points.last().unwrap() >= 100);
        assert_eq!(p.signs.len(), p.points.len() - 1);
        let direct: usize = (1..=100).map(|n| p.delta(n) as usize).sum();
        assert_eq!(direct, p.delta_sum());
    }

    #[test]
    fn conditioned_single_step() {
        let law = ReturnLaw::build(LawSpec::Srw, 16).unwrap();
        let t = RenewalTable::new(&law, 16).unwrap();
        let mut rng = sample_rng(2, 0);
        let p = sample_conditioned(&law, &t, 1, &mut rng).unwrap();
        assert_eq!(p.points, vec![0, 1]);
        for _ in 0..100 {
            let p = sample_conditioned(&law, &t, 16, &mut rng).unwrap();
            assert!(p.hits_horizon());
            assert_eq!(*p.points.last().unwrap(), 16);
        }
    }

    #[test]
    fn laplace_at_zero() {
        let law = ReturnLaw::build(LawSpec::Srw, 256).unwrap();
        let e = delta_laplace(&law, 100, 0.0, 50, false, 3).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }
}
