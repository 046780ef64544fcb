//! Noisy monotone binary cellular automata on `Z^d` and its finite tori.
//!
//! * [`rule`] parses and validates monotone tessellation rules.
//! * [`eroder`] decides the erosion property with an exact certificate.
//! * [`bounds`] evaluates the explicit low-noise constants.
//! * [`lattice`] runs synchronous noisy updates on periodic lattices.
//! * [`exact`] computes transfer operators on very small tori.
//! * [`stats`] estimates densities, correlations and decay rates.
//! * [`cli`] implements the `toomlab` command line.

pub mod bounds;
pub mod cli;
pub mod eroder;
pub mod error;
pub mod exact;
pub mod lattice;
mod lp;
pub mod rule;
pub mod stats;

pub use error::{Error, Result};
pub use eroder::{check_eroder, verify_certificate, ErosionCertificate, Verdict};
pub use lattice::{Engine, LatticeState, NoiseKind, NoiseModel, RngKey};
pub use rule::{builtin, RuleSpec, Spin};
