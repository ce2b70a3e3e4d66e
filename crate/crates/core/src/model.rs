//! Return laws, disorder laws and coupling parameters of the generalized copolymer model.
//!
//! A [`ReturnLaw`] is the law `K(·)` of the time between two consecutive visits
//! of the polymer to the interface. Every law has a power-law tail
//! `K(n) ~ C_K n^{-(1+α)}` and is precomputed up to a horizon `n_max`
//! together with its tail probabilities `P(τ₁ > n)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{integrate_adaptive, log_cosh};

/// Default precomputation horizon.
pub const DEFAULT_HORIZON: usize = 1 << 20;

/// Tolerance on `head + analytic tail = 1` when loading a custom table.
pub const TABLE_MASS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnLawKind {
    Srw,
    Zipf,
    HeavyHead,
    CustomTable,
}

/// Parameters from which a [`ReturnLaw`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LawSpec {
    /// First return of the simple random walk, in half-time units (`α = 1/2`).
    Srw,
    /// `K(n) ∝ n^{-(1+α)}` for every `n ≥ 1`.
    Zipf { alpha: f64 },
    /// Head masses `∝ 1/(n log²(n+1))` up to `n0`, Zipf tail beyond.
    ///
    /// With `head_fraction = None` the head carries the mass that the
    /// normalized `1/(n log²(n+1))` law puts on `1..=n0`, so the head
    /// coincides with that law.
    HeavyHead {
        alpha: f64,
        n0: usize,
        head_fraction: Option<f64>,
    },
    /// Explicit masses for `n = 1..=head.len()`, then `C_K n^{-(1+α)}`.
    Custom { head: Vec<f64>, alpha: f64, c_k: f64 },
}

/// A precomputed discrete law on `{1, 2, ...}` with a power-law tail.
#[derive(Debug, Clone)]
pub struct ReturnLaw {
    kind: ReturnLawKind,
    spec: LawSpec,
    alpha: f64,
    c_k: f64,
    head: Vec<(usize, f64)>,
    n_max: usize,
    norm: f64,
    mass: Vec<f64>,
    log_mass: Vec<f64>,
    tail: Vec<f64>,
    // Beyond the head, K(n) = tail_scale · n^{-(1+α)}.
    tail_scale: f64,
}

/// `Σ_{j ≥ m} j^{-s}` for `s > 1`, by direct summation below 32 and Euler–Maclaurin above.
pub fn zeta_tail(s: f64, m: usize) -> f64 {
    assert!(s > 1.0 && m >= 1);
    const START: usize = 32;
    let mut direct = 0.0;
    let mut j = m;
    while j < START {
        direct += (j as f64).powf(-s);
        j += 1;
    }
    let x = j as f64;
    let f = x.powf(-s);
    let mut em = x.powf(1.0 - s) / (s - 1.0) + 0.5 * f;
    // Bernoulli corrections -B_{2k}/(2k)! f^{(2k-1)}(x).
    let mut rising = s;
    let mut xpow = f / x;
    let coeffs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1_209_600.0];
    for (k, c) in coeffs.iter().enumerate() {
        em += c * rising * xpow;
        let a = s + (2 * k + 1) as f64;
        rising *= a * (a + 1.0);
        xpow /= x * x;
    }
    direct + em
}

fn head_weight(n: usize) -> f64 {
    let x = n as f64;
    1.0 / (x * (x + 1.0).ln().powi(2))
}

/// Fraction of the normalized `1/(n log²(n+1))` law carried by `1..=n0`.
fn log_squared_head_fraction(n0: usize) -> f64 {
    let head: f64 = (1..=n0).map(head_weight).sum();
    let m = n0.max(1000) + 1;
    let middle: f64 = (n0 + 1..m).map(head_weight).sum();
    // Euler–Maclaurin from m: ∫_m^∞ f + f(m)/2 - f'(m)/12.
    // With x = e^u - 1 the integral becomes 1/u0 + ∫_{u0}^∞ du / ((e^u - 1) u²).
    let u0 = (m as f64 + 1.0).ln();
    let rest = integrate_adaptive(|u| 1.0 / (u.exp_m1() * u * u), u0, u0 + 60.0, 1e-12, 0.0);
    let x = m as f64;
    let l = (x + 1.0).ln();
    let fprime = -1.0 / (x * x * l * l) - 2.0 / (x * l * l * l * (x + 1.0));
    let tail = 1.0 / u0 + rest + 0.5 * head_weight(m) - fprime / 12.0;
    head / (head + middle + tail)
}

impl ReturnLaw {
    pub fn build(spec: LawSpec, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return domain("horizon must be at least 1");
        }
        match &spec {
            LawSpec::Srw => Ok(Self::build_srw(n_max)),
            LawSpec::Zipf { alpha } => {
                check_alpha(*alpha)?;
                Ok(Self::build_power(spec.clone(), ReturnLawKind::Zipf, *alpha, Vec::new(), 1.0, n_max))
            }
            LawSpec::HeavyHead {
                alpha,
                n0,
                head_fraction,
            } => {
                check_alpha(*alpha)?;
                if *n0 < 1 {
                    return domain("heavy-head law needs n0 >= 1");
                }
                let frac = head_fraction.unwrap_or_else(|| log_squared_head_fraction(*n0));
                if !(frac > 0.0 && frac < 1.0) {
                    return domain(format!("head fraction {frac} outside (0, 1)"));
                }
                let z: f64 = (1..=*n0).map(head_weight).sum();
                let head: Vec<f64> = (1..=*n0).map(|n| frac * head_weight(n) / z).collect();
                Ok(Self::build_power(
                    spec.clone(),
                    ReturnLawKind::HeavyHead,
                    *alpha,
                    head,
                    1.0 - frac,
                    n_max,
                ))
            }
            LawSpec::Custom { head, alpha, c_k } => {
                check_alpha(*alpha)?;
                if !(*c_k > 0.0) {
                    return domain("tail constant C_K must be positive");
                }
                if let Some(p) = head.iter().find(|p| !(**p > 0.0)) {
                    return domain(format!("non-positive head mass {p}"));
                }
                let head_mass: f64 = head.iter().sum();
                let tail_mass = c_k * zeta_tail(1.0 + alpha, head.len() + 1);
                let total = head_mass + tail_mass;
                if (total - 1.0).abs() > TABLE_MASS_TOLERANCE {
                    return domain(format!(
                        "table mass {total} (head {head_mass} + tail {tail_mass}) differs from 1 by more than {TABLE_MASS_TOLERANCE:e}"
                    ));
                }
                // Renormalize so that the stored law sums to one exactly.
                let head: Vec<f64> = head.iter().map(|p| p / total).collect();
                let tail_total = tail_mass / total;
                let mut law = Self::build_power(
                    spec.clone(),
                    ReturnLawKind::CustomTable,
                    *alpha,
                    head,
                    tail_total,
                    n_max.max(1),
                );
                law.norm = total;
                Ok(law)
            }
        }
    }

    pub fn srw() -> Self {
        Self::build_srw(DEFAULT_HORIZON)
    }

    pub fn zipf(alpha: f64) -> Result<Self> {
        Self::build(LawSpec::Zipf { alpha }, DEFAULT_HORIZON)
    }

    pub fn heavy_head(alpha: f64, n0: usize, head_fraction: Option<f64>) -> Result<Self> {
        Self::build(
            LawSpec::HeavyHead {
                alpha,
                n0,
                head_fraction,
            },
            DEFAULT_HORIZON,
        )
    }

    fn build_srw(n_max: usize) -> Self {
        // p_n = P(S_{2n} = 0) = binom(2n, n) 4^{-n} = P(τ₁ > n); K(n) = p_{n-1}/(2n).
        let mut mass = vec![0.0; n_max + 1];
        let mut tail = vec![1.0; n_max + 1];
        let mut p = 1.0;
        for n in 1..=n_max {
            let nf = n as f64;
            mass[n] = p / (2.0 * nf);
            p *= (2.0 * nf - 1.0) / (2.0 * nf);
            tail[n] = p;
        }
        let log_mass = mass.iter().map(|m| m.ln()).collect();
        ReturnLaw {
            kind: ReturnLawKind::Srw,
            spec: LawSpec::Srw,
            alpha: 0.5,
            c_k: 1.0 / (2.0 * PI.sqrt()),
            head: Vec::new(),
            n_max,
            norm: 1.0,
            mass,
            log_mass,
            tail,
            tail_scale: 0.0,
        }
    }

    /// Head masses for `1..=head.len()` followed by a Zipf tail of total mass `tail_total`.
    fn build_power(
        spec: LawSpec,
        kind: ReturnLawKind,
        alpha: f64,
        head: Vec<f64>,
        tail_total: f64,
        n_max: usize,
    ) -> Self {
        let s = 1.0 + alpha;
        let head_end = head.len();
        let tail_sum = zeta_tail(s, head_end + 1);
        let tail_scale = tail_total / tail_sum;
        let n_max = n_max.max(head_end);
        let mut mass = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            mass[n] = if n <= head_end {
                head[n - 1]
            } else {
                tail_scale * (n as f64).powf(-s)
            };
        }
        let mut tail = vec![0.0; n_max + 1];
        tail[n_max] = tail_scale * zeta_tail(s, n_max.max(head_end) + 1);
        for n in (0..n_max).rev() {
            tail[n] = tail[n + 1] + mass[n + 1];
        }
        let log_mass = mass.iter().map(|m| m.ln()).collect();
        let norm = if kind == ReturnLawKind::Zipf {
            tail_sum
        } else {
            1.0
        };
        ReturnLaw {
            kind,
            spec,
            alpha,
            c_k: tail_scale,
            head: head.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect(),
            n_max,
            norm,
            mass,
            log_mass,
            tail,
            tail_scale,
        }
    }

    /// Parse a table: lines `n<TAB>K(n)` then a footer `tail<TAB>alpha<TAB>C_K`.
    ///
    /// Rows must cover `n = 1, 2, ...` without gaps. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse_table(text: &str, n_max: usize) -> Result<Self> {
        let mut head = Vec::new();
        let mut footer = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if footer.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "content after tail footer".into(),
                });
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("{s:?}: {e}"),
                })
            };
            if fields[0] == "tail" {
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "footer must be tail<TAB>alpha<TAB>C_K".into(),
                    });
                }
                footer = Some((num(fields[1])?, num(fields[2])?));
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected n<TAB>K(n)".into(),
                });
            }
            let n: usize = fields[0].parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("{:?}: {e}", fields[0]),
            })?;
            if n != head.len() + 1 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected n = {}, found {n}", head.len() + 1),
                });
            }
            head.push(num(fields[1])?);
        }
        let (alpha, c_k) = footer.ok_or(Error::Parse {
            line: text.lines().count(),
            msg: "missing tail footer".into(),
        })?;
        Self::build(LawSpec::Custom { head, alpha, c_k }, n_max)
    }

    pub fn load_table(path: impl AsRef<Path>, n_max: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, n_max)
    }

    pub fn kind(&self) -> ReturnLawKind {
        self.kind
    }

    pub fn spec(&self) -> &LawSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    pub fn head(&self) -> &[(usize, f64)] {
        &self.head
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Normalizer applied to the raw weights (`ζ(1+α)` for Zipf, the table total for custom laws).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::Range {
                index: n,
                min: 0,
                max: self.n_max,
            });
        }
        Ok(())
    }

    /// `K(n)`.
    pub fn mass(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return domain("return times are at least 1");
        }
        self.check(n)?;
        Ok(self.mass[n])
    }

    /// `P(τ₁ > n)`.
    pub fn tail(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.tail[n])
    }

    /// `log K(n)` for `n = 0..=n_max` (entry 0 is `-inf`).
    pub fn log_mass_table(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn mass_table(&self) -> &[f64] {
        &self.mass
    }

    pub fn tail_table(&self) -> &[f64] {
        &self.tail
    }

    /// `K(n)` for any `n ≥ 1`, using the analytic tail beyond the horizon.
    pub fn mass_extended(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if n <= self.n_max {
            return self.mass[n];
        }
        match self.kind {
            ReturnLawKind::Srw => {
                // K(n) = Γ(n - 1/2) / (2 √π Γ(n + 1)).
                use statrs::function::gamma::ln_gamma;
                let nf = n as f64;
                (ln_gamma(nf - 0.5) - ln_gamma(nf + 1.0)).exp() / (2.0 * PI.sqrt())
            }
            _ => self.tail_scale * (n as f64).powf(-(1.0 + self.alpha)),
        }
    }

    /// `P(τ₁ > n)` for any `n`, using the analytic tail beyond the horizon.
    pub fn tail_extended(&self, n: usize) -> f64 {
        if n <= self.n_max {
            return self.tail[n];
        }
        match self.kind {
            ReturnLawKind::Srw => {
                use statrs::function::gamma::ln_gamma;
                let nf = n as f64;
                (ln_gamma(nf + 0.5) - ln_gamma(nf + 1.0)).exp() / PI.sqrt()
            }
            _ => self.tail_scale * zeta_tail(1.0 + self.alpha, n + 1),
        }
    }

    /// `sup_{j ≥ from} j^{1+α} K(j)`, over the table and the analytic tail.
    pub fn tail_ratio_sup(&self, from: usize) -> f64 {
        let s = 1.0 + self.alpha;
        let from = from.max(1);
        let table = (from..=self.n_max)
            .map(|j| (j as f64).powf(s) * self.mass[j])
            .fold(0.0, f64::max);
        // Beyond the horizon: SRW ratios decrease monotonically towards C_K,
        // the other kinds equal C_K exactly past their head.
        let beyond = match self.kind {
            ReturnLawKind::Srw => {
                let j = self.n_max.max(from);
                ((j as f64).powf(s) * self.mass_extended(j)).max(self.c_k)
            }
            _ => self.c_k,
        };
        table.max(beyond)
    }

    /// `E[τ₁]`, infinite when `α ≤ 1`.
    pub fn mean(&self) -> f64 {
        if self.alpha <= 1.0 {
            return f64::INFINITY;
        }
        let body: f64 = (1..=self.n_max).map(|n| n as f64 * self.mass[n]).sum();
        body + self.tail_scale * zeta_tail(self.alpha, self.n_max + 1)
    }

    /// Draw one return time by inversion of the tail table, with a Pareto tail beyond the horizon.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // v uniform on (0, 1]: τ = min{n : P(τ₁ > n) < v}.
        let v: f64 = 1.0 - rng.random::<f64>();
        let last = self.tail[self.n_max];
        if last >= v {
            let ratio = (last / v).powf(1.0 / self.alpha);
            let n = (self.n_max as f64 * ratio).ceil();
            return if n.is_finite() && n < usize::MAX as f64 {
                (n as usize).max(self.n_max + 1)
            } else {
                usize::MAX / 4
            };
        }
        // tail is non-increasing; find the first index with tail < v.
        self.tail.partition_point(|&t| t >= v)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("tail exponent alpha = {alpha} must be positive"));
    }
    Ok(())
}

/// Law of a single charge `ω₁` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderLaw {
    Gaussian,
    Rademacher,
}

impl DisorderLaw {
    /// `log M(t) = log E[e^{t ω₁}]`.
    pub fn log_mgf(self, t: f64) -> f64 {
        match self {
            DisorderLaw::Gaussian => 0.5 * t * t,
            DisorderLaw::Rademacher => log_cosh(t),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            DisorderLaw::Gaussian => rng.sample(StandardNormal),
            DisorderLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisorderLaw::Gaussian => "gaussian",
            DisorderLaw::Rademacher => "rademacher",
        }
    }
}

impl fmt::Display for DisorderLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `h^{(m)}(λ) = log M(-2mλ) / (2mλ)`.
pub fn h_m_curve(disorder: DisorderLaw, m: f64, lambda: f64) -> Result<f64> {
    if !(m > 0.0) {
        return domain(format!("m = {m} must be positive"));
    }
    if !(lambda > 0.0) {
        return domain(format!("lambda = {lambda} must be positive"));
    }
    let t = 2.0 * m * lambda;
    Ok(disorder.log_mgf(-t) / t)
}

/// A point `(λ, h)` of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub lambda: f64,
    pub h: f64,
}

impl CouplingPoint {
    pub fn new(lambda: f64, h: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return domain(format!("lambda = {lambda} must be finite and non-negative"));
        }
        if !h.is_finite() {
            return domain("h must be finite");
        }
        Ok(CouplingPoint { lambda, h })
    }
}

/// A full problem instance.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub return_law: Arc<ReturnLaw>,
    pub disorder: DisorderLaw,
    pub coupling: CouplingPoint,
}

impl ModelSpec {
    pub fn new(return_law: Arc<ReturnLaw>, disorder: DisorderLaw, coupling: CouplingPoint) -> Self {
        ModelSpec {
            return_law,
            disorder,
            coupling,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.coupling.lambda
    }

    pub fn h(&self) -> f64 {
        self.coupling.h
    }

    pub fn with_h(&self, h: f64) -> Self {
        ModelSpec {
            coupling: CouplingPoint {
                lambda: self.coupling.lambda,
                h,
            },
            ..self.clone()
        }
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            law: self.return_law.kind(),
            law_spec: self.return_law.spec().clone(),
            alpha: self.return_law.alpha(),
            c_k: self.return_law.c_k(),
            disorder: self.disorder,
            lambda: self.coupling.lambda,
            h: self.coupling.h,
        }
    }
}

/// Serializable description of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub law: ReturnLawKind,
    pub law_spec: LawSpec,
    pub alpha: f64,
    pub c_k: f64,
    pub disorder: DisorderLaw,
    pub lambda: f64,
    pub h: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SMALL: usize = 1 << 12;

    #[test]
    fn srw_masses() {
        let law = ReturnLaw::build(LawSpec::Srw, SMALL).unwrap();
        assert_eq!(law.mass(1).unwrap(), 0.5);
        assert_relative_eq!(law.mass(3).unwrap(), 1.0 / 16.0, epsilon = 1e-16);
        assert_eq!(law.tail(0).unwrap(), 1.0);
        assert_eq!(law.tail(1).unwrap(), 0.5);
        // n^{3/2} K(n) -> 1/(2√π)
        let n = SMALL;
        let r = (n as f64).powf(1.5) * law.mass(n).unwrap();
        assert_relative_eq!(r, law.c_k(), max_relative = 1e-3);
        assert_relative_eq!(law.mass_extended(n), law.mass(n).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(law.tail_extended(n), law.tail(n).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn zipf_normalization() {
        let law = ReturnLaw::build(LawSpec::Zipf { alpha: 1.0 }, SMALL).unwrap();
        assert_relative_eq!(law.mass(1).unwrap(), 6.0 / (PI * PI), epsilon = 1e-14);
        let total: f64 = law.mass_table().iter().sum::<f64>() + law.tail(SMALL).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((law.tail(0).unwrap() - 1.0).abs() < 1e-13);
        let half = ReturnLaw::build(LawSpec::Zipf { alpha: 0.5 }, SMALL).unwrap();
        let asym = half.c_k() / (0.5 * 100f64.sqrt());
        assert_relative_eq!(half.tail(100).unwrap(), asym, max_relative = 0.05);
    }

    #[test]
    fn zeta_values() {
        assert_relative_eq!(zeta_tail(2.0, 1), PI * PI / 6.0, epsilon = 1e-14);
        assert_relative_eq!(zeta_tail(4.0, 1), PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_relative_eq!(zeta_tail(1.5, 1), 2.612_375_348_685_488, epsilon = 1e-13);
        let direct: f64 = (5..40).map(|j| (j as f64).powf(-3.0)).sum::<f64>() + zeta_tail(3.0, 40);
        assert_relative_eq!(zeta_tail(3.0, 5), direct, epsilon = 1e-15);
    }

    #[test]
    fn heavy_head_law() {
        let law = ReturnLaw::build(
            LawSpec::HeavyHead {
                alpha: 0.5,
                n0: 16,
                head_fraction: None,
            },
            SMALL,
        )
        .unwrap();
        let head_mass: f64 = (1..=16).map(|n| law.mass(n).unwrap()).sum();
        assert!(head_mass > 0.5 && head_mass < 1.0);
        assert!((law.tail(0).unwrap() - 1.0).abs() < 1e-12);
        let r = 17f64.powf(1.5) * law.mass(17).unwrap();
        assert_relative_eq!(r, law.c_k(), max_relative = 1e-12);
        // The head proportions follow 1/(n log²(n+1)).
        let ratio = law.mass(2).unwrap() / law.mass(1).unwrap();
        assert_relative_eq!(ratio, head_weight(2) / head_weight(1), max_relative = 1e-13);
        // Larger heads carry more mass under the matched construction.
        assert!(log_squared_head_fraction(4096) > log_squared_head_fraction(16));
    }

    #[test]
    fn custom_table_roundtrip() {
        // Zipf(α = 1) head up to 3 with its exact tail.
        let z = PI * PI / 6.0;
        let mut text = String::new();
        for n in 1..=3 {
            text.push_str(&format!("{n}\t{}\n", 1.0 / ((n * n) as f64 * z)));
        }
        text.push_str(&format!("tail\t1\t{}\n", 1.0 / z));
        let law = ReturnLaw::parse_table(&text, SMALL).unwrap();
        let zipf = ReturnLaw::build(LawSpec::Zipf { alpha: 1.0 }, SMALL).unwrap();
        for n in [1, 2, 3, 4, 100, SMALL] {
            assert_relative_eq!(law.mass(n).unwrap(), zipf.mass(n).unwrap(), max_relative = 1e-12);
        }
        let bad = "1\t0.5\ntail\t1\t0.1\n";
        assert!(matches!(ReturnLaw::parse_table(bad, 64), Err(Error::Domain(_))));
        let gap = "1\t0.5\n3\t0.1\ntail\t1\t0.1\n";
        assert!(matches!(ReturnLaw::parse_table(gap, 64), Err(Error::Parse { line: 2, .. })));
        assert!(ReturnLaw::parse_table("1\t0.5\n", 64).is_err());
    }

    #[test]
    fn range_errors() {
        let law = ReturnLaw::build(LawSpec::Srw, 16).unwrap();
        assert!(matches!(law.mass(0), Err(Error::Domain(_))));
        assert!(matches!(law.mass(17), Err(Error::Range { .. })));
        assert!(matches!(law.tail(17), Err(Error::Range { .. })));
        assert!(ReturnLaw::zipf(0.0).is_err());
    }

    #[test]
    fn log_mgf_values() {
        assert_eq!(DisorderLaw::Gaussian.log_mgf(1.0), 0.5);
        assert_eq!(DisorderLaw::Rademacher.log_mgf(0.0), 0.0);
        let want = ((2f64.exp() + (-2f64).exp()) / 2.0).ln();
        assert_relative_eq!(DisorderLaw::Rademacher.log_mgf(2.0), want, epsilon = 1e-14);
        assert!((want - 1.325).abs() < 1e-3);
    }

    #[test]
    fn h_m_values() {
        assert_relative_eq!(h_m_curve(DisorderLaw::Gaussian, 2.0 / 3.0, 0.9).unwrap(), 0.6, epsilon = 1e-15);
        let r = h_m_curve(DisorderLaw::Rademacher, 1.0, 1.0).unwrap();
        assert_relative_eq!(r, 0.5 * log_cosh(2.0), epsilon = 1e-15);
        assert!((r - 0.6625).abs() < 1e-4);
        assert!(h_m_curve(DisorderLaw::Gaussian, 1.0, 0.0).is_err());
        assert!(h_m_curve(DisorderLaw::Gaussian, 0.0, 1.0).is_err());
    }

    #[test]
    fn disorder_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for law in [DisorderLaw::Gaussian, DisorderLaw::Rademacher] {
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let fourth = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
            let var_se = ((fourth - 1.0) / n as f64).sqrt().max(1e-12);
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{law}: mean {mean}");
            assert!((var - 1.0).abs() < 4.0 * var_se + 4.0 / n as f64, "{law}: var {var}");
        }
    }

    #[test]
    fn mgf_is_convex() {
        for law in [DisorderLaw::Gaussian, DisorderLaw::Rademacher] {
            assert_eq!(law.log_mgf(0.0), 0.0);
            let m = |t: f64| law.log_mgf(t).exp();
            for i in -40..40 {
                let t = i as f64 * 0.1;
                assert!(m(t).is_finite());
                assert!(m(t - 0.1) + m(t + 0.1) - 2.0 * m(t) >= -1e-12);
            }
        }
    }

    #[test]
    fn sampling_hits_table_and_tail() {
        let law = ReturnLaw::build(LawSpec::Zipf { alpha: 0.5 }, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<usize> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&n| n >= 1));
        let beyond = draws.iter().filter(|&&n| n > 64).count() as f64 / draws.len() as f64;
        let want = law.tail(64).unwrap();
        assert!((beyond - want).abs() < 4.0 * (want * (1.0 - want) / 20_000.0).sqrt());
    }
}
