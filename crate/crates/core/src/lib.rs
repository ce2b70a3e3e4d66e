//! Numerical toolkit for the disordered copolymer model at a selective interface.
//!
//! The polymer visits the interface at the points of a renewal process with
//! return law `K(·)`, and each excursion between visits chooses a half-plane
//! by a fair coin. Charges `ω_n + h`, scaled by `λ`, reward the upper half-plane.
//!
//! * [`model`]: return laws, disorder laws, `log φ`, `log M`, `h^{(m)}`.
//! * [`partition`]: exact partition functions, free-energy Monte Carlo, localization certificates.
//! * [`bounds`]: critical-curve bounds and the weak-coupling quadrature.
//! * [`fracmom`]: fractional-moment delocalization certificates.
//! * [`renewal`]: renewal sampling, renewal mass function, occupation Laplace functionals.
//! * [`phase`] and [`experiment`]: phase-diagram scans and numerical experiments.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod fracmom;
pub mod model;
pub mod partition;
pub mod phase;
pub mod renewal;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::{h_m_curve, CouplingPoint, DisorderLaw, LawSpec, ModelSpec, ReturnLaw, ReturnLawKind};
pub use partition::{ConstrainedLogZProfile, DisorderSample, LocVerdict, LocalizationVerdict};
pub use special::log_phi;
pub use stats::MCEstimate;
