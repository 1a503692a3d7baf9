//! Eigensolver and the cutoff/IBC spectral experiments.

pub mod lanczos;
pub mod threshold;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::fock::{build_h_lambda, FockSpace};
use crate::ibc::{g_norm_estimate, IbcConfig, IbcOperators, NormEstimate};
use crate::quadrature::QuadratureSpec;

pub use lanczos::{
    lowest_eigenpairs, lowest_eigenvalues, DenseOperator, DiagonalOperator, EigenOptions, LinearOperator,
    SpectralResult,
};
pub use threshold::{threshold_experiment, ProbeSpec, ThresholdConfig, ThresholdReport, ThresholdTarget};

/// Which constant is added to `E_0(H_Lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Renormalization {
    /// The continuum integral `E_Lambda`.
    #[default]
    Continuum,
    /// The same sum evaluated on the radial grid.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda_values: Vec<f64>,
    pub e_lambda_values: Vec<f64>,
    pub raw_ground_energies: Vec<f64>,
    pub renormalized_ground_energies: Vec<f64>,
    /// `d_i = R_{i+1} - R_i` of the renormalized column; one shorter than the others.
    pub successive_differences: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl ConvergenceReport {
    pub const HEADER: [&'static str; 6] = [
        "lambda",
        "e_lambda",
        "raw_ground_energy",
        "renormalized_ground_energy",
        "successive_difference",
        "residual",
    ];

    /// One row per cutoff; the last difference is NaN.
    pub fn rows(&self) -> Vec<[f64; 6]> {
        (0..self.lambda_values.len())
            .map(|i| {
                [
                    self.lambda_values[i],
                    self.e_lambda_values[i],
                    self.raw_ground_energies[i],
                    self.renormalized_ground_energies[i],
                    self.successive_differences.get(i).copied().unwrap_or(f64::NAN),
                    self.residuals[i],
                ]
            })
            .collect()
    }

    pub fn differences_strictly_decreasing(&self) -> bool {
        self.successive_differences.windows(2).all(|d| d[1].abs() < d[0].abs())
    }
}

fn check_lambdas(space: &FockSpace, lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(IbcError::invalid("Lambdas", "empty list"));
    }
    for &l in lambdas {
        if !(l >= 0.0) {
            return Err(IbcError::invalid("Lambda", format!("{l} must be >= 0")));
        }
        if l > space.grid_cutoff {
            return Err(IbcError::CutoffExceedsGrid {
                cutoff: l,
                grid_cutoff: space.grid_cutoff,
            });
        }
    }
    Ok(())
}

fn renormalization_constant(
    space: &FockSpace,
    lambda: f64,
    rule: Renormalization,
    quad: &QuadratureSpec,
) -> Result<f64> {
    match rule {
        Renormalization::Continuum => space.model.e_lambda(lambda, quad),
        Renormalization::Grid => Ok(space.e_grid(lambda)),
    }
}

/// `E_0(H_Lambda)` and `E_0(H_Lambda) + E_Lambda` for each cutoff.
pub fn convergence_study(
    space: &Arc<FockSpace>,
    lambdas: &[f64],
    rule: Renormalization,
    opts: &EigenOptions,
    quad: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    check_lambdas(space, lambdas)?;
    let solved: Vec<(f64, SpectralResult)> = lambdas
        .par_iter()
        .map(|&l| {
            let e = renormalization_constant(space, l, rule, quad)?;
            let h = build_h_lambda(space, l)?;
            let res = lowest_eigenpairs(&h, opts)?.require_converged()?;
            Ok((e, res))
        })
        .collect::<Result<_>>()?;
    let e_lambda_values: Vec<f64> = solved.iter().map(|(e, _)| *e).collect();
    let raw: Vec<f64> = solved.iter().map(|(_, r)| r.ground_energy()).collect();
    let renormalized: Vec<f64> = raw.iter().zip(&e_lambda_values).map(|(a, b)| a + b).collect();
    Ok(ConvergenceReport {
        lambda_values: lambdas.to_vec(),
        successive_differences: renormalized.windows(2).map(|w| w[1] - w[0]).collect(),
        e_lambda_values,
        raw_ground_energies: raw,
        renormalized_ground_energies: renormalized,
        residuals: solved.iter().map(|(_, r)| r.residual_norms[0]).collect(),
        iterations: solved.iter().map(|(_, r)| r.iterations).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbcComparison {
    pub mu: f64,
    pub ibc_ground_energy: f64,
    pub ibc_residual: f64,
    pub convergence: ConvergenceReport,
    /// `|E_0(H_Lambda) + E_Lambda - E_0(H)|` per cutoff.
    pub gaps: Vec<f64>,
}

impl IbcComparison {
    pub const HEADER: [&'static str; 4] = ["lambda", "renormalized_ground_energy", "ibc_ground_energy", "gap"];

    pub fn rows(&self) -> Vec<[f64; 4]> {
        (0..self.gaps.len())
            .map(|i| {
                [
                    self.convergence.lambda_values[i],
                    self.convergence.renormalized_ground_energies[i],
                    self.ibc_ground_energy,
                    self.gaps[i],
                ]
            })
            .collect()
    }
}

/// Ground energy of the regularised IBC Hamiltonian.
pub fn ibc_ground_state(space: &Arc<FockSpace>, cfg: IbcConfig, opts: &EigenOptions) -> Result<SpectralResult> {
    let ops = Arc::new(IbcOperators::new(space, cfg)?);
    lowest_eigenpairs(&ops.h_handle(), opts)?.require_converged()
}

pub fn ibc_vs_cutoff(
    space: &Arc<FockSpace>,
    lambdas: &[f64],
    cfg: IbcConfig,
    rule: Renormalization,
    opts: &EigenOptions,
    quad: &QuadratureSpec,
) -> Result<IbcComparison> {
    if cfg.cutoff.is_some() {
        return Err(IbcError::invalid("cutoff", "the IBC side runs in regularised mode"));
    }
    let convergence = convergence_study(space, lambdas, rule, opts, quad)?;
    let ibc = ibc_ground_state(space, cfg, opts)?;
    let e = ibc.ground_energy();
    Ok(IbcComparison {
        mu: cfg.mu,
        ibc_ground_energy: e,
        ibc_residual: ibc.residual_norms[0],
        gaps: convergence
            .renormalized_ground_energies
            .iter()
            .map(|r| (r - e).abs())
            .collect(),
        convergence,
    })
}

/// `||G_mu||` by power iteration for each `mu`, in input order.
pub fn g_norm_sweep(space: &Arc<FockSpace>, base: IbcConfig, mus: &[f64], tol: f64) -> Result<Vec<NormEstimate>> {
    mus.par_iter()
        .map(|&mu| g_norm_estimate(space, base.with_mu(mu)?, tol))
        .collect()
}

pub const G_NORM_HEADER: [&str; 3] = ["mu", "g_norm", "iterations"];
