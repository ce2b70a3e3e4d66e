use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use copolymer_core::bounds::{
    alpha_threshold, bound_curves_with_slope, optimize_kappa, quasiexpl_closed_lower, quasiexpl_value,
    slope_lower_bound, QuadratureSpec, ThresholdKind,
};
use copolymer_core::experiment::{experiment_heavy_head, experiment_ldp_rate, ldp_direct_probability, HeavyHeadConfig};
use copolymer_core::fracmom::{delocalization_certificate, parameter_recipe, FracParams};
use copolymer_core::model::DEFAULT_HORIZON;
use copolymer_core::partition::{
    annealed_constrained_logz, free_energy_estimate_at, localization_certificate, quenched_samples,
    DEFAULT_SAMPLES, DEFAULT_SCHEDULE,
};
use copolymer_core::phase::{scan_csv, scan_phase, SearchBudget};
use copolymer_core::renewal::{delta_laplace_multi, RenewalTable};
use copolymer_core::stats::{MCEstimate, DEFAULT_CONFIDENCE};
use copolymer_core::{CouplingPoint, DisorderLaw, LawSpec, ModelSpec, ReturnLaw};

mod config;

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "copolymer", version, about = "Phase-diagram toolkit for the disordered copolymer model")]
struct Cli {
    /// Flat key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Return law: srw, zipf, heavyhead or custom:FILE.
    #[arg(long, global = true)]
    law: Option<String>,
    /// Tail exponent of zipf and heavyhead laws.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Head size of the heavyhead law.
    #[arg(long, global = true)]
    n0: Option<usize>,
    /// Head mass of the heavyhead law (default: matched to the 1/(n log^2(n+1)) law).
    #[arg(long, global = true)]
    head_fraction: Option<f64>,
    /// Precomputation horizon of the return law.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Charge law: gaussian or rademacher.
    #[arg(long, global = true)]
    disorder: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    confidence: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical-curve bounds on a grid of couplings.
    Bounds {
        #[arg(long)]
        lambda_grid: Option<String>,
        /// Also compute the alpha thresholds of the slope bound.
        #[arg(long)]
        thresholds: bool,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// The weak-coupling quadrature A(alpha, kappa).
    Quasiexpl {
        #[arg(long)]
        kappa: Option<f64>,
        /// Maximize over kappa.
        #[arg(long)]
        optimize: bool,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Quenched free-energy estimate (1/N) E log Z^c_N.
    FreeEnergy {
        #[arg(long)]
        n: Option<usize>,
        /// Estimate (1/N) E log Z_N (free endpoint) instead.
        #[arg(long)]
        free: bool,
    },
    /// Localization certificate over a schedule of sizes.
    CertifyLoc {
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Fractional-moment delocalization certificate.
    CertifyDeloc {
        /// Recipe knob (rho for alpha > 1, c for alpha <= 1); ignored when --gamma and --k are given.
        #[arg(long)]
        knob: Option<f64>,
    },
    /// Bracket h_c(lambda) on a grid of couplings.
    Scan {
        #[arg(long)]
        lambda_grid: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        max_probes: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        loc_share: Option<f64>,
        #[arg(long)]
        rho_grid: Option<String>,
        #[arg(long)]
        c_grid: Option<String>,
        /// Size of the F(lambda, 0) estimate behind the neutral-stretch bound (0 disables it).
        #[arg(long)]
        neutral_n: Option<usize>,
        /// Directory receiving one JSON record per probe.
        #[arg(long)]
        audit_dir: Option<PathBuf>,
    },
    /// Renewal mass function and occupation Laplace functionals.
    RenewalCheck {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        q: Option<String>,
        /// Condition on N being a renewal point.
        #[arg(long)]
        conditioned: bool,
    },
    /// Numerical experiments.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
}

#[derive(Args, Debug, Clone)]
struct QuadArgs {
    #[arg(long)]
    hermite_order: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    t_split: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum ExperimentKind {
    /// Probability of a neutral stretch, by importance sampling.
    Ldp {
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Size of the F(lambda, 0) reference estimate.
        #[arg(long)]
        f_ref_n: Option<usize>,
        #[arg(long)]
        f_ref_samples: Option<usize>,
        /// Also estimate the probability by plain sampling.
        #[arg(long)]
        direct: bool,
    },
    /// Localization of heavy-head return laws against the pure Zipf law.
    HeavyHead {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        heads: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        h_grid: Option<String>,
    },
}

/// Flag values merged with the config file.
struct Settings {
    common: Common,
    file: ConfigFile,
}

impl Settings {
    fn get<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v.clone())),
            None => self.file.get(key),
        }
    }

    fn or<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn required<T: FromStr + Clone>(&self, flag: &Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(flag, key)?.ok_or_else(|| anyhow!("--{key} is required"))
    }

    fn list<T: FromStr>(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => config::parse_list(v).with_context(|| format!("--{key}")).map(Some),
            None => self.file.get_list(key),
        }
    }

    fn seed_required(&self) -> Result<u64> {
        self.get(&self.common.seed, "seed")?
            .ok_or_else(|| anyhow!("--seed is required for this command"))
    }

    fn seed(&self) -> Result<u64> {
        self.or(&self.common.seed, "seed", 0)
    }

    fn samples(&self, default: usize) -> Result<usize> {
        self.or(&self.common.samples, "samples", default)
    }

    fn confidence(&self) -> Result<f64> {
        self.or(&self.common.confidence, "confidence", DEFAULT_CONFIDENCE)
    }

    fn format(&self, default: Format) -> Result<Format> {
        self.or(&self.common.format, "format", default)
    }

    fn disorder(&self) -> Result<DisorderLaw> {
        let name = self.or(&self.common.disorder, "disorder", "gaussian".to_string())?;
        match name.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(DisorderLaw::Gaussian),
            "rademacher" => Ok(DisorderLaw::Rademacher),
            other => bail!("unknown disorder law {other:?} (expected gaussian or rademacher)"),
        }
    }

    fn law(&self) -> Result<Arc<ReturnLaw>> {
        let name = self.or(&self.common.law, "law", "srw".to_string())?;
        let horizon = self.or(&self.common.horizon, "horizon", DEFAULT_HORIZON)?;
        let alpha = self.get(&self.common.alpha, "alpha")?;
        let need_alpha = || alpha.ok_or_else(|| anyhow!("--alpha is required for law {name}"));
        let law = if let Some(path) = name.strip_prefix("custom:") {
            ReturnLaw::load_table(path, horizon).with_context(|| format!("loading return law table {path}"))?
        } else {
            let spec = match name.to_ascii_lowercase().as_str() {
                "srw" => LawSpec::Srw,
                "zipf" => LawSpec::Zipf { alpha: need_alpha()? },
                "heavyhead" => LawSpec::HeavyHead {
                    alpha: need_alpha()?,
                    n0: self.or(&self.common.n0, "n0", 256)?,
                    head_fraction: self.get(&self.common.head_fraction, "head-fraction")?,
                },
                other => bail!("unknown return law {other:?} (expected srw, zipf, heavyhead or custom:FILE)"),
            };
            ReturnLaw::build(spec, horizon)?
        };
        Ok(Arc::new(law))
    }

    fn model(&self) -> Result<ModelSpec> {
        let lambda = self.required(&self.common.lambda, "lambda")?;
        let h = self.required(&self.common.h, "h")?;
        Ok(ModelSpec::new(self.law()?, self.disorder()?, CouplingPoint::new(lambda, h)?))
    }

    fn quad(&self, q: &QuadArgs) -> Result<QuadratureSpec> {
        let d = QuadratureSpec::default();
        let spec = QuadratureSpec {
            hermite_order: self.or(&q.hermite_order, "hermite-order", d.hermite_order)?,
            t_split: self.or(&q.t_split, "t-split", d.t_split)?,
            rel_tol: self.or(&q.rel_tol, "rel-tol", d.rel_tol)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.common.out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn emit_value(&self, value: &Value, csv: impl FnOnce() -> String, default: Format) -> Result<()> {
        match self.format(default)? {
            Format::Json => self.emit(&(serde_json::to_string_pretty(value)? + "\n")),
            Format::Csv => self.emit(&csv()),
        }
    }
}

fn estimate_json(e: &MCEstimate) -> Value {
    json!({
        "mean": e.mean,
        "stderr": e.stderr,
        "n_samples": e.n_samples,
        "confidence": e.confidence,
        "lower": e.lower(),
        "upper": e.upper(),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let s = Settings {
        common: cli.common,
        file,
    };
    match cli.command {
        Command::Bounds {
            lambda_grid,
            thresholds,
            quad,
        } => {
            let quad = s.quad(&quad)?;
            let law = s.law()?;
            let alpha = law.alpha();
            let disorder = s.disorder()?;
            let grid = s.list(&lambda_grid, "lambda-grid")?.unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
            let slope = slope_lower_bound(alpha, &quad)?;
            let rows = grid
                .iter()
                .map(|&l| bound_curves_with_slope(alpha, disorder, l, None, slope))
                .collect::<copolymer_core::Result<Vec<_>>>()?;
            let th = if thresholds {
                Some(json!({
                    "quadrature": alpha_threshold(ThresholdKind::Quadrature, &quad)?,
                    "closed_form": alpha_threshold(ThresholdKind::ClosedForm, &quad)?,
                }))
            } else {
                None
            };
            let value = json!({
                "alpha": alpha,
                "disorder": disorder,
                "slope_lower": slope,
                "rows": rows,
                "alpha_thresholds": th,
            });
            s.emit_value(
                &value,
                || {
                    let mut out = String::from("lambda,h_lower_old,h_upper,slope_lower,slope_upper\n");
                    for r in &rows {
                        let _ = writeln!(out, "{},{},{},{},{}", r.lambda, r.h_lower_old, r.h_upper, r.slope_lower, r.slope_upper);
                    }
                    out
                },
                Format::Csv,
            )
        }
        Command::Quasiexpl { kappa, optimize, quad } => {
            let quad = s.quad(&quad)?;
            let alpha: f64 = s.required(&s.common.alpha, "alpha")?;
            let kappa = s.get(&kappa, "kappa")?;
            let (kappa, value) = match (kappa, optimize) {
                (_, true) => optimize_kappa(alpha, &quad)?,
                (Some(k), false) => (k, quasiexpl_value(alpha, k, &quad)?),
                (None, false) => bail!("give --kappa K or --optimize"),
            };
            let closed = quasiexpl_closed_lower(alpha, kappa)?;
            let value_json = json!({
                "alpha": alpha,
                "kappa": kappa,
                "value": value,
                "closed_lower": closed,
                "optimized": optimize,
            });
            s.emit_value(
                &value_json,
                || format!("alpha,kappa,value,closed_lower\n{alpha},{kappa},{value},{closed}\n"),
                Format::Json,
            )
        }
        Command::FreeEnergy { n, free } => {
            let model = s.model()?;
            let n = s.or(&n, "n", 512)?;
            let samples = s.samples(DEFAULT_SAMPLES)?;
            let confidence = s.confidence()?;
            let seed = s.seed()?;
            let est = if free {
                MCEstimate::from_samples(&quenched_samples(&model, n, samples, seed, true)?, confidence)?
            } else {
                free_energy_estimate_at(&model, n, samples, seed, confidence)?
            };
            let annealed = annealed_constrained_logz(&model, n)? / n as f64;
            let value = json!({
                "model": model.summary(),
                "n": n,
                "endpoint": if free { "free" } else { "constrained" },
                "estimate": estimate_json(&est),
                "annealed": annealed,
            });
            s.emit_value(
                &value,
                || {
                    format!(
                        "n,mean,stderr,n_samples,confidence,lower,annealed\n{n},{},{},{},{},{},{annealed}\n",
                        est.mean,
                        est.stderr,
                        est.n_samples,
                        est.confidence,
                        est.lower()
                    )
                },
                Format::Json,
            )
        }
        Command::CertifyLoc { schedule } => {
            let model = s.model()?;
            let schedule = s.list(&schedule, "schedule")?.unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
            let v = localization_certificate(&model, &schedule, s.samples(DEFAULT_SAMPLES)?, s.confidence()?, s.seed()?)?;
            let value = json!({ "model": model.summary(), "certificate": v });
            s.emit_value(
                &value,
                || {
                    let e = v.estimate;
                    format!(
                        "lambda,h,verdict,n_used,mean,stderr\n{},{},{:?},{},{},{}\n",
                        model.lambda(),
                        model.h(),
                        v.verdict,
                        v.n_used,
                        opt(e.map(|e| e.mean)),
                        opt(e.map(|e| e.stderr))
                    )
                },
                Format::Json,
            )
        }
        Command::CertifyDeloc { knob } => {
            let model = s.model()?;
            let alpha = model.return_law.alpha();
            let gamma = s.get(&s.common.gamma, "gamma")?;
            let k = s.get(&s.common.k, "k")?;
            let params = match (gamma, k) {
                (Some(g), Some(k)) => FracParams::manual(g, k)?,
                (None, None) => {
                    let default = if alpha > 1.0 { 0.9 } else { 0.1 };
                    parameter_recipe(alpha, model.lambda(), s.or(&knob, "knob", default)?)?
                }
                _ => bail!("give both --gamma and --k, or neither"),
            };
            let cert = delocalization_certificate(&model, params, s.samples(10_000)?, s.confidence()?, s.seed()?)?;
            let value = serde_json::to_value(&cert)?;
            s.emit_value(
                &value,
                || {
                    format!(
                        "lambda,h,gamma,k,u_value,verdict\n{},{},{},{},{},{:?}\n",
                        model.lambda(),
                        model.h(),
                        params.gamma,
                        params.k,
                        cert.u_value,
                        cert.verdict
                    )
                },
                Format::Json,
            )
        }
        Command::Scan {
            lambda_grid,
            schedule,
            max_probes,
            tolerance,
            loc_share,
            rho_grid,
            c_grid,
            neutral_n,
            audit_dir,
        } => {
            let seed = s.seed_required()?;
            let law = s.law()?;
            let disorder = s.disorder()?;
            let grid = s.list(&lambda_grid, "lambda-grid")?.unwrap_or_default();
            let d = SearchBudget::default();
            let neutral = s.or(&neutral_n, "neutral-n", d.neutral_n.unwrap_or(0))?;
            let budget = SearchBudget {
                schedule: s.list(&schedule, "schedule")?.unwrap_or(d.schedule),
                samples_per_probe: s.samples(d.samples_per_probe)?,
                loc_share: s.or(&loc_share, "loc-share", d.loc_share)?,
                rho_grid: s.list(&rho_grid, "rho-grid")?.unwrap_or(d.rho_grid),
                c_grid: s.list(&c_grid, "c-grid")?.unwrap_or(d.c_grid),
                max_probes: s.or(&max_probes, "max-probes", d.max_probes)?,
                tolerance: s.or(&tolerance, "tolerance", d.tolerance)?,
                confidence: s.confidence()?,
                neutral_n: (neutral > 0).then_some(neutral),
            };
            let slope = if grid.is_empty() {
                0.0
            } else {
                slope_lower_bound(law.alpha(), &QuadratureSpec::default())?
            };
            let scan = scan_phase(law, disorder, &grid, &budget, slope, seed)?;
            if scan.monotonicity_violation {
                eprintln!("warning: h_loc_max decreases along the lambda grid (budget starvation?)");
            }
            for r in &scan.rows {
                if !r.conflicts.is_empty() {
                    eprintln!("warning: lambda = {}: probes certified both ways at h = {:?}", r.lambda, r.conflicts);
                }
            }
            if let Some(dir) = audit_dir {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (ri, r) in scan.rows.iter().enumerate() {
                    for (pi, p) in r.probes.iter().enumerate() {
                        let path = dir.join(format!("probe-{ri:03}-{pi:03}.json"));
                        let rec = json!({ "lambda": r.lambda, "seed": seed, "probe": p });
                        std::fs::write(&path, serde_json::to_string_pretty(&rec)? + "\n")
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                }
            }
            let value = serde_json::to_value(&scan)?;
            s.emit_value(&value, || scan_csv(&scan.rows), Format::Csv)
        }
        Command::RenewalCheck { n, q, conditioned } => {
            let law = s.law()?;
            let n = s.or(&n, "n", 10_000)?;
            let qs = s.list(&q, "q")?.unwrap_or_else(|| vec![0.0, 1.0, 2.0, 8.0, 64.0]);
            let table = RenewalTable::new(&law, n)?;
            let u = table.mass(n)?;
            let mean = law.mean();
            let est = delta_laplace_multi(&law, n, &qs, s.samples(DEFAULT_SAMPLES)?, conditioned, s.seed()?, s.confidence()?)?;
            let value = json!({
                "law": law.spec(),
                "alpha": law.alpha(),
                "n": n,
                "u_n": u,
                "mean_return_time": if mean.is_finite() { json!(mean) } else { Value::Null },
                "u_n_times_mean": if mean.is_finite() { json!(u * mean) } else { Value::Null },
                "conditioned": conditioned,
                "laplace": qs.iter().zip(&est).map(|(q, e)| json!({ "q": q, "estimate": estimate_json(e) })).collect::<Vec<_>>(),
            });
            s.emit_value(
                &value,
                || {
                    let mut out = String::from("q,mean,stderr,n_samples\n");
                    for (q, e) in qs.iter().zip(&est) {
                        let _ = writeln!(out, "{q},{},{},{}", e.mean, e.stderr, e.n_samples);
                    }
                    out
                },
                Format::Json,
            )
        }
        Command::Experiment { kind } => run_experiment(&s, kind),
    }
}

fn run_experiment(s: &Settings, kind: ExperimentKind) -> Result<()> {
    let seed = s.seed_required()?;
    match kind {
        ExperimentKind::Ldp {
            ell,
            delta,
            f_ref_n,
            f_ref_samples,
            direct,
        } => {
            let model = s.model()?;
            let ell = s.or(&ell, "ell", 400)?;
            let delta = s.or(&delta, "delta", 0.3)?;
            let confidence = s.confidence()?;
            let f_n = s.or(&f_ref_n, "f-ref-n", 2048)?;
            let f_samples = s.or(&f_ref_samples, "f-ref-samples", 400)?;
            let samples = s.samples(DEFAULT_SAMPLES)?;
            let f_ref = free_energy_estimate_at(&model.with_h(0.0), f_n, f_samples, seed ^ 0xf0, confidence)?;
            let report = experiment_ldp_rate(&model, ell, delta, f_ref, samples, seed)?;
            let direct_est = if direct {
                Some(ldp_direct_probability(&model, ell, delta, &f_ref, samples, seed ^ 0xd1)?)
            } else {
                None
            };
            let value = json!({ "report": report, "direct": direct_est });
            s.emit_value(
                &value,
                || {
                    format!(
                        "lambda,h,ell,delta,p_hat,p_stderr,rate_est,target,free_energy_bound\n{},{},{},{},{},{},{},{},{}\n",
                        report.lambda,
                        report.h,
                        report.ell,
                        report.delta,
                        report.p_hat.mean,
                        report.p_hat.stderr,
                        report.rate_est,
                        report.target,
                        report.free_energy_bound
                    )
                },
                Format::Json,
            )
        }
        ExperimentKind::HeavyHead {
            epsilon,
            heads,
            schedule,
            h_grid,
        } => {
            let alpha = s.or(&s.common.alpha, "alpha", 0.5)?;
            let lambda = s.or(&s.common.lambda, "lambda", 1.0)?;
            let epsilon = s.or(&epsilon, "epsilon", 0.2)?;
            let mut cfg = HeavyHeadConfig::new(alpha, lambda, epsilon)?;
            if s.disorder()? != DisorderLaw::Gaussian {
                cfg.disorder = s.disorder()?;
            }
            if let Some(hs) = s.list(&heads, "heads")? {
                cfg.head_schedule = hs;
            }
            if let Some(sc) = s.list(&schedule, "schedule")? {
                cfg.schedule = sc;
            }
            if let Some(g) = s.list(&h_grid, "h-grid")? {
                cfg.h_grid = g;
            }
            cfg.n_samples = s.samples(cfg.n_samples)?;
            cfg.confidence = s.confidence()?;
            if let Some(hz) = s.get(&s.common.horizon, "horizon")? {
                cfg.n_max = hz;
            }
            let report = experiment_heavy_head(&cfg, seed)?;
            let value = serde_json::to_value(&report)?;
            s.emit_value(
                &value,
                || {
                    let mut out = String::from("n0,head_mass,max_certified_h,certifies_target\n");
                    let _ = writeln!(
                        out,
                        "zipf,0,{},{}",
                        opt(report.baseline.max_certified_h),
                        report.baseline.certifies_target
                    );
                    for r in &report.rows {
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            r.n0.map(|n| n.to_string()).unwrap_or_default(),
                            r.head_mass,
                            opt(r.max_certified_h),
                            r.certifies_target
                        );
                    }
                    out
                },
                Format::Json,
            )
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
