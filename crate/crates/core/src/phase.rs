//! Bracketing the critical point `h_c(λ)` between localization and delocalization certificates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_curves_with_slope, BoundCurves};
use crate::error::{domain, Result};
use crate::fracmom::{delocalization_certificate_with, parameter_recipe, BTail, DelocVerdict};
use crate::model::{h_m_curve, CouplingPoint, DisorderLaw, ModelSpec, ReturnLaw};
use crate::partition::{free_energy_estimate_at, localization_certificate, LocVerdict, DEFAULT_SCHEDULE};
use crate::rng::derive_seed;
use crate::stats::DEFAULT_CONFIDENCE;

/// Search budgets of one bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Localization schedule of sizes `N`.
    pub schedule: Vec<usize>,
    /// Disorder samples per probe, shared between the two certificates.
    pub samples_per_probe: usize,
    /// Fraction of `samples_per_probe` given to the localization certificate.
    pub loc_share: f64,
    /// Recipe knobs: `ρ` values when `α > 1`.
    pub rho_grid: Vec<f64>,
    /// Recipe knobs: `c` values when `α ≤ 1`.
    pub c_grid: Vec<f64>,
    /// Maximal number of probed `h` values per coupling.
    pub max_probes: usize,
    /// Target width of the brackets.
    pub tolerance: f64,
    pub confidence: f64,
    /// Size and samples of the `F(λ, 0)` estimate behind the neutral-stretch bound
    /// (Gaussian charges only); `None` skips it.
    pub neutral_n: Option<usize>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            schedule: DEFAULT_SCHEDULE.to_vec(),
            samples_per_probe: 4000,
            loc_share: 0.5,
            rho_grid: vec![0.8, 0.9, 0.95],
            c_grid: vec![0.5, 0.25, 0.1],
            max_probes: 12,
            tolerance: 0.01,
            confidence: DEFAULT_CONFIDENCE,
            neutral_n: Some(256),
        }
    }
}

impl SearchBudget {
    pub fn loc_samples(&self) -> usize {
        ((self.samples_per_probe as f64 * self.loc_share).round() as usize).max(2)
    }

    pub fn deloc_samples(&self) -> usize {
        self.samples_per_probe.saturating_sub(self.loc_samples()).max(2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.loc_share > 0.0 && self.loc_share < 1.0) {
            return domain("loc_share must lie in (0, 1)");
        }
        if !(self.tolerance > 0.0) {
            return domain("tolerance must be positive");
        }
        if self.schedule.is_empty() {
            return domain("empty localization schedule");
        }
        Ok(())
    }
}

/// Outcome of the delocalization search at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelocAttempt {
    pub knob: f64,
    pub gamma: f64,
    pub k: usize,
    pub u_value: f64,
    pub verdict: DelocVerdict,
}

/// Both certificates at one `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub h: f64,
    pub loc: LocVerdict,
    pub loc_n: usize,
    pub loc_lower: Option<f64>,
    /// Recipe points tried, in order; empty when no recipe applies at this `h`.
    pub deloc: Vec<DelocAttempt>,
}

impl Probe {
    pub fn localized(&self) -> bool {
        self.loc == LocVerdict::Localized
    }

    pub fn delocalized(&self) -> bool {
        self.deloc.iter().any(|d| d.verdict == DelocVerdict::Delocalized)
    }
}

/// Certified bracket of `h_c(λ)` at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda: f64,
    /// Largest probed `h` certified localized.
    pub h_loc_max: Option<f64>,
    /// Smallest probed `h` certified delocalized.
    pub h_deloc_min: Option<f64>,
    pub bounds: BoundCurves,
    pub budgets: SearchBudget,
    pub probes: Vec<Probe>,
    /// Probes certified both ways (never expected).
    pub conflicts: Vec<f64>,
    /// Whether the probe budget ran out before both brackets reached the tolerance.
    pub exhausted: bool,
}

fn probe(
    model: &ModelSpec,
    budget: &SearchBudget,
    seed: u64,
) -> Result<Probe> {
    let lambda = model.lambda();
    let h = model.h();
    let probe_seed = derive_seed(&[seed, lambda.to_bits(), h.to_bits()]);
    let loc = localization_certificate(model, &budget.schedule, budget.loc_samples(), budget.confidence, probe_seed)?;
    let alpha = model.return_law.alpha();
    let knobs = if alpha > 1.0 { &budget.rho_grid } else { &budget.c_grid };
    let mut deloc = Vec::new();
    for &knob in knobs {
        let Ok(params) = parameter_recipe(alpha, lambda, knob) else {
            continue;
        };
        if params.k > model.return_law.n_max() + 1 {
            continue;
        }
        // Precondition failures (divergent tail, h below h^(γ)) mean the recipe does not apply here.
        let Ok(tail) = BTail::new(model, params.gamma) else {
            continue;
        };
        let cert = delocalization_certificate_with(
            model,
            params,
            &tail,
            budget.deloc_samples(),
            budget.confidence,
            derive_seed(&[probe_seed, knob.to_bits()]),
        )?;
        deloc.push(DelocAttempt {
            knob,
            gamma: params.gamma,
            k: params.k,
            u_value: cert.u_value,
            verdict: cert.verdict,
        });
        if cert.verdict == DelocVerdict::Delocalized {
            break;
        }
    }
    Ok(Probe {
        h,
        loc: loc.verdict,
        loc_n: loc.n_used,
        loc_lower: loc.looks.last().map(|l| l.lower),
        deloc,
    })
}

/// Bisection for the largest localized and the smallest delocalized `h` in `[0, 1.05 h^{(1)}(λ)]`.
///
/// Two intervals are refined: one for the localization frontier and one for
/// the delocalization frontier. An undecided probe shrinks the first from
/// above and the second from below.
pub fn hc_bracket(
    law: Arc<ReturnLaw>,
    disorder: DisorderLaw,
    lambda: f64,
    budget: &SearchBudget,
    slope_lower: f64,
    seed: u64,
) -> Result<ScanRow> {
    budget.validate()?;
    if !(lambda > 0.0) {
        return domain(format!("lambda = {lambda} must be positive"));
    }
    let alpha = law.alpha();
    let h1 = h_m_curve(disorder, 1.0, lambda)?;
    let top = 1.05 * h1;
    let base = ModelSpec::new(law, disorder, CouplingPoint::new(lambda, 0.0)?);
    let mut probes: Vec<Probe> = Vec::new();
    let mut conflicts = Vec::new();
    let (mut loc_lo, mut loc_hi) = (0.0, top);
    let (mut del_lo, mut del_hi) = (0.0, top);
    let mut h_loc_max: Option<f64> = None;
    let mut h_deloc_min: Option<f64> = None;
    let mut next = vec![top];
    let mut turn = 0usize;
    while probes.len() < budget.max_probes {
        let h = match next.pop() {
            Some(h) => h,
            None => {
                let loc_open = loc_hi - loc_lo > budget.tolerance;
                let del_open = del_hi - del_lo > budget.tolerance;
                if !loc_open && !del_open {
                    break;
                }
                turn += 1;
                if loc_open && (turn % 2 == 1 || !del_open) {
                    0.5 * (loc_lo + loc_hi)
                } else {
                    0.5 * (del_lo + del_hi)
                }
            }
        };
        let p = probe(&base.with_h(h), budget, seed)?;
        let (l, d) = (p.localized(), p.delocalized());
        if l && d {
            conflicts.push(h);
        } else if l {
            h_loc_max = Some(h_loc_max.map_or(h, |x: f64| x.max(h)));
            loc_lo = loc_lo.max(h);
            del_lo = del_lo.max(h);
        } else if d {
            h_deloc_min = Some(h_deloc_min.map_or(h, |x: f64| x.min(h)));
            del_hi = del_hi.min(h);
            loc_hi = loc_hi.min(h);
        } else {
            if h > loc_lo {
                loc_hi = loc_hi.min(h);
            }
            if h < del_hi {
                del_lo = del_lo.max(h);
            }
        }
        probes.push(p);
    }
    let exhausted = loc_hi - loc_lo > budget.tolerance || del_hi - del_lo > budget.tolerance;
    let f0 = match (disorder, budget.neutral_n) {
        (DisorderLaw::Gaussian, Some(n)) => Some(free_energy_estimate_at(
            &base,
            n.min(base.return_law.n_max()),
            budget.loc_samples(),
            derive_seed(&[seed, lambda.to_bits(), 0x0f0f]),
            budget.confidence,
        )?),
        _ => None,
    };
    let bounds = bound_curves_with_slope(alpha, disorder, lambda, f0.as_ref(), slope_lower)?;
    Ok(ScanRow {
        lambda,
        h_loc_max,
        h_deloc_min,
        bounds,
        budgets: budget.clone(),
        probes,
        conflicts,
        exhausted,
    })
}

/// Rows for an increasing grid of couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub rows: Vec<ScanRow>,
    /// Set when `h_loc_max` decreases along the grid (a sign of budget starvation).
    pub monotonicity_violation: bool,
}

pub fn scan_phase(
    law: Arc<ReturnLaw>,
    disorder: DisorderLaw,
    lambda_grid: &[f64],
    budget: &SearchBudget,
    slope_lower: f64,
    seed: u64,
) -> Result<PhaseScan> {
    if lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("lambda grid must be strictly increasing");
    }
    let rows = lambda_grid
        .iter()
        .map(|&l| hc_bracket(law.clone(), disorder, l, budget, slope_lower, seed))
        .collect::<Result<Vec<_>>>()?;
    let locs: Vec<f64> = rows.iter().filter_map(|r| r.h_loc_max).collect();
    let monotonicity_violation = locs.windows(2).any(|w| w[1] < w[0]);
    Ok(PhaseScan {
        rows,
        monotonicity_violation,
    })
}

/// CSV header of a phase scan.
pub const SCAN_CSV_HEADER: &str = "lambda,h_loc_max,h_deloc_min,h_lower_old,h_upper,h_lower_neutral,slope_lower";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV line per row, header first; missing values are empty fields.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.lambda,
            opt(r.h_loc_max),
            opt(r.h_deloc_min),
            r.bounds.h_lower_old,
            r.bounds.h_upper,
            opt(r.bounds.h_lower_neutral),
            r.bounds.slope_lower
        ));
    }
    out
}
