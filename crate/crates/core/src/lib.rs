//! Interior-boundary-condition Hamiltonians for polaron-type models: model
//! data, truncated Fock spaces, the singular map `G_mu` and the operators
//! built from it, and spectral experiments comparing them with the
//! renormalised cutoff Hamiltonians.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod ibc;
pub mod model;
pub mod params;
pub mod quadrature;
pub mod spectral;

pub use error::{IbcError, Result};
pub use fock::{build_grid, build_h_lambda, FockSpace, FockVector, GridScheme, OperatorHandle, RadialGrid};
pub use ibc::{DiagonalRule, IbcConfig, IbcOperators, NormEstimate};
pub use model::{Dispersion, FormFactor, Model};
pub use params::{classify_pair, ModelParameters, RegionVerdict};
pub use quadrature::{QuadratureSpec, TailMap};
pub use spectral::{
    convergence_study, ibc_vs_cutoff, lowest_eigenpairs, lowest_eigenvalues, threshold_experiment, ConvergenceReport,
    EigenOptions, IbcComparison, Renormalization, SpectralResult, ThresholdReport, ThresholdTarget,
};
