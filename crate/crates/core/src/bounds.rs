//! Deterministic bounds on the critical curve `h_c(λ)` and its weak-coupling slope.
//!
//! The central object is
//! `A(α, κ) = κ/Γ(1−α) ∫₀^∞ e^{−t} t^{−(1+α)} E[log cosh(z √(t/κ))] dt − κ(1−α)/α`,
//! `z` standard Gaussian, whose maximum over `κ` controls the neutral-stretch slope bound for `α < 1`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{h_m_curve, DisorderLaw};
use crate::special::{gamma, integrate_adaptive, log_cosh, QuadratureRule};
use crate::stats::MCEstimate;

/// Discretization of the `A(α, κ)` quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Hermite nodes for the Gaussian expectation.
    pub hermite_order: usize,
    /// Upper end of the region `[0, t_split]` integrated by series.
    pub t_split: f64,
    /// Relative tolerance of the adaptive outer integral.
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            hermite_order: 96,
            t_split: 1e-4,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hermite_order < 32 {
            return domain("hermite_order must be at least 32");
        }
        if !(self.t_split > 0.0) {
            return domain("t_split must be positive");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-8) {
            return domain("rel_tol must lie in (0, 1e-8]");
        }
        Ok(())
    }
}

// Below this argument E log cosh(z√s) is summed as a series.
const SERIES_LIMIT: f64 = 1e-3;
// Above this argument the Hermite rule loses accuracy (the integrand develops a kink at z = 0).
const HERMITE_LIMIT: f64 = 1.0;
// E log cosh(z√s) = Σ_k SERIES[k-1] s^k + O(s^5).
const SERIES: [f64; 4] = [0.5, -0.25, 1.0 / 3.0, -17.0 / 24.0];
// The outer integrand carries e^{-t}; beyond this it is below 1e-25.
const T_MAX: f64 = 60.0;

/// `g(s) = E[log cosh(z √s)]` for a standard Gaussian `z`.
struct GaussLogCosh {
    rule: QuadratureRule,
}

impl GaussLogCosh {
    fn new(order: usize) -> Self {
        GaussLogCosh {
            rule: QuadratureRule::gauss_hermite_normal(order),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        if s < SERIES_LIMIT {
            return SERIES.iter().rev().fold(0.0, |acc, c| (acc + c) * s);
        }
        let r = s.sqrt();
        if s <= HERMITE_LIMIT {
            return self.rule.apply(|z| log_cosh(z * r));
        }
        // log cosh x = |x| − log 2 + log1p(e^{−2|x|}), integrated over the half line.
        let upper = (20.0 / r).min(10.0);
        let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let corr = integrate_adaptive(
            |x| (-2.0 * x * r).exp().ln_1p() * density(x),
            0.0,
            upper,
            1e-13,
            1e-17,
        );
        (2.0 * s / std::f64::consts::PI).sqrt() - std::f64::consts::LN_2 + 2.0 * corr
    }
}

/// Evaluator of `A(α, ·)` that keeps its Hermite rule between calls.
pub struct Quasiexpl {
    alpha: f64,
    quad: QuadratureSpec,
    g: GaussLogCosh,
    gamma_factor: f64,
}

impl Quasiexpl {
    pub fn new(alpha: f64, quad: QuadratureSpec) -> Result<Self> {
        check_unit_alpha(alpha)?;
        quad.validate()?;
        Ok(Quasiexpl {
            alpha,
            quad,
            g: GaussLogCosh::new(quad.hermite_order),
            gamma_factor: 1.0 / gamma(1.0 - alpha),
        })
    }

    pub fn value(&self, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return domain(format!("kappa = {kappa} must be positive"));
        }
        let a = self.alpha;
        // Series region: t/κ < SERIES_LIMIT, integrate e^{−t} t^{−1−α} (t/κ)^k term by term.
        let split = self.quad.t_split.min(SERIES_LIMIT * kappa);
        let mut head = 0.0;
        for (k0, c) in SERIES.iter().enumerate() {
            let k = (k0 + 1) as f64;
            let mut fact = 1.0;
            for j in 0..12 {
                if j > 0 {
                    fact *= -(j as f64);
                }
                let p = k + j as f64 - a;
                head += c * kappa.powf(-k) / fact * split.powf(p) / p;
            }
        }
        // Remaining range in u = log t, where dt/t removes one power of t.
        let g = &self.g;
        let body = integrate_adaptive(
            |u| {
                let t = u.exp();
                (-t).exp() * t.powf(-a) * g.eval(t / kappa)
            },
            split.ln(),
            T_MAX.ln(),
            self.quad.rel_tol,
            0.0,
        );
        Ok(kappa * self.gamma_factor * (head + body) - kappa * (1.0 - a) / a)
    }

    /// Maximize over `κ ∈ [1e−3, 10]`: a grid on `log κ`, then golden-section search
    /// around the best grid point. Returns the best `(κ, A)` evaluated.
    pub fn optimize(&self) -> Result<(f64, f64)> {
        const GRID: usize = 41;
        const ITERS: usize = 60;
        let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
        let step = (hi - lo) / (GRID - 1) as f64;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        let mut best_idx = 0;
        for i in 0..GRID {
            let lk = lo + step * i as f64;
            let v = self.value(lk.exp())?;
            if v > best.1 {
                best = (lk, v);
                best_idx = i;
            }
        }
        let mut a = lo + step * best_idx.saturating_sub(1) as f64;
        let mut b = (lo + step * (best_idx + 1) as f64).min(hi);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.value(c.exp())?;
        let mut fd = self.value(d.exp())?;
        for _ in 0..ITERS {
            for (x, fx) in [(c, fc), (d, fd)] {
                if fx > best.1 {
                    best = (x, fx);
                }
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.value(c.exp())?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.value(d.exp())?;
            }
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx > best.1 {
                best = (x, fx);
            }
        }
        Ok((best.0.exp(), best.1))
    }
}

fn check_unit_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    Ok(())
}

/// `A(α, κ)` by quadrature.
pub fn quasiexpl_value(alpha: f64, kappa: f64, quad: &QuadratureSpec) -> Result<f64> {
    Quasiexpl::new(alpha, *quad)?.value(kappa)
}

/// The closed-form minorant `1/2 − (1−α)/(4κ) − κ(1−α)/α` of `A(α, κ)`.
pub fn quasiexpl_closed_lower(alpha: f64, kappa: f64) -> Result<f64> {
    check_unit_alpha(alpha)?;
    if !(kappa > 0.0) {
        return domain(format!("kappa = {kappa} must be positive"));
    }
    Ok(0.5 - (1.0 - alpha) / (4.0 * kappa) - kappa * (1.0 - alpha) / alpha)
}

/// `(κ*, A(α, κ*))` maximizing the quadrature over `κ`.
pub fn optimize_kappa(alpha: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    Quasiexpl::new(alpha, *quad)?.optimize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `A` maximized numerically over `κ`.
    Quadrature,
    /// The minorant at `κ = √α/2`, i.e. `1/2 − (1−α)/√α`.
    ClosedForm,
}

/// Root of `2(1+α) A(α) = 1` by bisection to width `1e−5`.
pub fn alpha_threshold(kind: ThresholdKind, quad: &QuadratureSpec) -> Result<f64> {
    let f = |alpha: f64| -> Result<f64> {
        let a = match kind {
            ThresholdKind::Quadrature => optimize_kappa(alpha, quad)?.1,
            ThresholdKind::ClosedForm => quasiexpl_closed_lower(alpha, alpha.sqrt() / 2.0)?,
        };
        Ok(2.0 * (1.0 + alpha) * a - 1.0)
    };
    let (mut lo, mut hi) = (0.5, 0.99);
    if f(lo)? >= 0.0 || f(hi)? <= 0.0 {
        return domain("threshold not bracketed in (0.5, 0.99)");
    }
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Best available lower bound on `liminf h_c(λ)/λ` as `λ → 0`.
pub fn slope_lower_bound(alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("alpha = {alpha} must be positive"));
    }
    let old = 1.0 / (1.0 + alpha);
    if alpha >= 1.0 {
        return Ok(old.max((1.0 + alpha).sqrt().recip()).max(0.5));
    }
    let (_, a) = optimize_kappa(alpha, quad)?;
    Ok(old.max((2.0 * a.max(0.0) / (1.0 + alpha)).sqrt()))
}

/// `√(2 F⁻ / (1+α))` with `F⁻` the lower confidence bound of an estimate of `F(λ, 0)`.
pub fn neutral_stretch_hc_lower(alpha: f64, f_lambda0: &MCEstimate) -> Result<f64> {
    if !(alpha > 0.0) {
        return domain(format!("alpha = {alpha} must be positive"));
    }
    Ok((2.0 * f_lambda0.lower().max(0.0) / (1.0 + alpha)).sqrt())
}

/// `d h^{(m)}/dλ` at `λ = 0`.
pub fn h_m_slope(m: f64) -> f64 {
    m
}

/// Bounds on `h_c(λ)` at one coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCurves {
    pub lambda: f64,
    /// `h^{(1/(1+α))}(λ)`.
    pub h_lower_old: f64,
    /// `h^{(1)}(λ)`.
    pub h_upper: f64,
    /// Neutral-stretch bound from an estimate of `F(λ, 0)`.
    pub h_lower_neutral: Option<f64>,
    pub slope_lower: f64,
    pub slope_upper: f64,
}

/// Bounds at `λ`, given a precomputed slope bound.
pub fn bound_curves_with_slope(
    alpha: f64,
    disorder: DisorderLaw,
    lambda: f64,
    f_lambda0: Option<&MCEstimate>,
    slope_lower: f64,
) -> Result<BoundCurves> {
    Ok(BoundCurves {
        lambda,
        h_lower_old: h_m_curve(disorder, 1.0 / (1.0 + alpha), lambda)?,
        h_upper: h_m_curve(disorder, 1.0, lambda)?,
        h_lower_neutral: f_lambda0.map(|f| neutral_stretch_hc_lower(alpha, f)).transpose()?,
        slope_lower,
        slope_upper: 1.0,
    })
}

pub fn bound_curves(
    alpha: f64,
    disorder: DisorderLaw,
    lambda: f64,
    f_lambda0: Option<&MCEstimate>,
    quad: &QuadratureSpec,
) -> Result<BoundCurves> {
    let slope = slope_lower_bound(alpha, quad)?;
    bound_curves_with_slope(alpha, disorder, lambda, f_lambda0, slope)
}
