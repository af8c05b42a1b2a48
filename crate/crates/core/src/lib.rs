//! LASSO-ADMM detection for large-scale MIMO.
//!
//! Each real transmitted symbol is written as a one-hot selection over the
//! PAM alphabet, the selection constraint is folded into a stacked
//! least-squares system as a quadratic penalty, and the resulting standard
//! LASSO problem is solved with ADMM. The two-stage detector accepts the
//! reliable estimates of the first solve, cancels their interference and
//! re-solves for the rest.
//!
//! Modules:
//! - [`model`]: constellations, bit mapping, Rayleigh channels, complex to real conversion.
//! - [`sparse`]: the sparse-coding LASSO system and its reduced stage-2 form.
//! - [`admm`]: the ADMM LASSO solver.
//! - [`detect`]: LASSO, two-stage LASSO, MMSE, ZF and brute-force ML detectors.
//! - [`sim`]: Monte Carlo bit-error-rate campaigns.

pub mod admm;
pub mod detect;
mod error;
pub mod model;
pub mod sim;
pub mod sparse;

pub use error::{Error, Result};
