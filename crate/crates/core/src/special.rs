//! Stable elementary functions and quadrature rules shared by the numerical modules.

use std::f64::consts::{LN_2, PI};

use statrs::distribution::{ContinuousCDF, Normal};

/// `log cosh t`, computed as `|t| + log1p(e^{-2|t|}) - log 2` so that it never overflows.
#[inline]
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `log φ(t)` with `φ(t) = (1 + e^{-2t})/2`, the sign-integrated weight of one excursion.
///
/// Equals `-t + log cosh t`; the two branches below expand that identity
/// without cancelling large terms.
#[inline]
pub fn log_phi(t: f64) -> f64 {
    if t >= 0.0 {
        (-2.0 * t).exp().ln_1p() - LN_2
    } else {
        -2.0 * t + (2.0 * t).exp().ln_1p() - LN_2
    }
}

/// `log Σ exp(x_i)`; returns `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Pairwise (cascade) summation. The result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Gamma function (Lanczos approximation).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Nodes and weights of an `n`-point Gauss rule, stored as `(node, weight)` pairs.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Hermite rule for expectations under the standard normal law:
    /// `Σ w_i f(x_i) ≈ E[f(z)]`, `z ~ N(0, 1)`.
    pub fn gauss_hermite_normal(n: usize) -> Self {
        assert!(n >= 1);
        // Physicists' nodes: sign changes of the orthonormal Hermite function ψ_n
        // (polynomial times e^{-z²/2}, which keeps large orders in range) on a grid
        // finer than the node spacing, refined by bisection.
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let nf = n as f64;
        let eval = |z: f64| {
            let mut p1 = PIM4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            // ψ_n(z) and ψ'_n(z) + z ψ_n(z) = √(2n) ψ_{n-1}(z).
            (p1, (2.0 * nf).sqrt() * p2)
        };
        let edge = (2.0 * nf + 1.0).sqrt() + 1.0;
        let step = 0.25 * PI / (2.0 * nf + 1.0).sqrt();
        let mut positive = Vec::with_capacity(n / 2);
        let mut a = if n % 2 == 1 { 0.5 * step } else { 0.0 };
        let mut fa = eval(a).0;
        while a < edge && positive.len() < n / 2 {
            let b = a + step;
            let fb = eval(b).0;
            if fa * fb < 0.0 {
                let (mut lo, mut hi, flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = eval(mid).0;
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                positive.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        assert_eq!(positive.len(), n / 2, "Hermite root search failed for n = {n}");
        let mut x = Vec::with_capacity(n);
        x.extend(positive.iter().rev().copied());
        if n % 2 == 1 {
            x.push(0.0);
        }
        x.extend(positive.iter().map(|z| -z));
        let w: Vec<f64> = x
            .iter()
            .map(|&z| {
                let pp = eval(z).1;
                2.0 * (-z * z).exp() / (pp * pp)
            })
            .collect();
        let sqrt_pi = PI.sqrt();
        QuadratureRule {
            nodes: x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|v| v / sqrt_pi).collect(),
        }
    }

    /// Gauss–Legendre rule on `[-1, 1]`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
        QuadratureRule { nodes: x, weights: w }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]` (Legendre rules only).
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let c = lo + 0.5 * h;
            total += 0.5 * h * self.apply(|x| f(c + 0.5 * h * x));
        }
        total
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Splits the interval with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol·|I|)` or `max_intervals` is hit.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    const MAX_INTERVALS: usize = 2000;
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= MAX_INTERVALS {
            return total;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
