use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use nelson_ibc::spectral::{EigenOptions, Renormalization, ThresholdTarget};
use nelson_ibc::{build_grid, DiagonalRule, FockSpace, GridScheme, Model, ModelParameters, QuadratureSpec, TailMap};
use serde::{Deserialize, Serialize};

/// Everything a run needs; every block has defaults, so an empty file is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub quadrature: QuadratureConfig,
    pub solver: SolverConfig,
    pub region: RegionConfig,
    pub integral: IntegralConfig,
    pub spectrum: SpectrumConfig,
    pub convergence: ConvergenceConfig,
    pub gnorm: GnormConfig,
    pub threshold: ThresholdConfigToml,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `omega = sqrt(k^2 + m^2)`, `v = omega^{-1/2}`; `alpha`, `beta` must be 1/2, 1.
    Nelson,
    /// `omega = |k|^beta + m`, `v = |k|^-alpha`.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub mass: f64,
    pub coupling: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Nelson,
            alpha: 0.5,
            beta: 1.0,
            mass: 0.0,
            coupling: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model> {
        let params = ModelParameters::new(self.alpha, self.beta, self.mass, 1.0, 1.0)?;
        let model = match self.kind {
            ModelKind::Nelson => {
                if self.alpha != 0.5 || self.beta != 1.0 {
                    bail!("model.kind = \"nelson\" requires alpha = 0.5 and beta = 1");
                }
                Model::nelson(self.mass)
            }
            ModelKind::Power => Model::power(params),
        }
        .with_coupling(self.coupling);
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceChoice {
    SWave,
    LatticeFiber,
    LatticeFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Geometric,
    GaussLegendre,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub space: SpaceChoice,
    /// Radial nodes.
    pub m: usize,
    pub lambda_grid: f64,
    pub n_max: usize,
    pub angular_nodes: usize,
    pub scheme: SchemeChoice,
    pub nodes_per_panel: usize,
    /// Lattice spacing and half-width, for the lattice spaces.
    pub spacing: f64,
    pub extent: i32,
    /// Total momentum of the fiber.
    pub fiber_p: [f64; 3],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            space: SpaceChoice::SWave,
            m: 32,
            lambda_grid: 32.0,
            n_max: 2,
            angular_nodes: 16,
            scheme: SchemeChoice::Geometric,
            nodes_per_panel: 4,
            spacing: 1.0,
            extent: 1,
            fiber_p: [0.0; 3],
        }
    }
}

impl GridConfig {
    pub fn build(&self, model: &Model) -> Result<Arc<FockSpace>> {
        let space = match self.space {
            SpaceChoice::SWave => {
                if self.fiber_p != [0.0; 3] {
                    bail!("the s-wave space only supports fiber_p = [0, 0, 0]");
                }
                let scheme = match self.scheme {
                    SchemeChoice::Geometric => GridScheme::Geometric {
                        nodes_per_panel: self.nodes_per_panel,
                    },
                    SchemeChoice::GaussLegendre => GridScheme::GaussLegendre,
                    SchemeChoice::Midpoint => GridScheme::Midpoint,
                };
                let grid = build_grid(self.m, self.lambda_grid, scheme)?;
                FockSpace::s_wave(model, &grid, self.angular_nodes, self.n_max)?
            }
            SpaceChoice::LatticeFiber => {
                FockSpace::lattice_fiber(model, self.spacing, self.extent, self.n_max, self.fiber_p)?
            }
            SpaceChoice::LatticeFull => FockSpace::lattice_full(model, self.spacing, self.extent, self.n_max)?,
        };
        Ok(Arc::new(space))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            max_subdivisions: q.max_subdivisions,
            tail_map: q.tail_map,
        }
    }
}

impl QuadratureConfig {
    pub fn build(&self) -> Result<QuadratureSpec> {
        let q = QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
            tail_map: self.tail_map,
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_basis: usize,
    pub keep: usize,
    pub max_matvecs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = EigenOptions::default();
        Self {
            tol: o.tol,
            max_basis: o.max_basis,
            keep: o.keep,
            max_matvecs: o.max_matvecs,
        }
    }
}

impl SolverConfig {
    pub fn options(&self, k: usize, seed: u64) -> EigenOptions {
        EigenOptions {
            k,
            tol: self.tol,
            max_basis: self.max_basis,
            keep: self.keep,
            max_matvecs: self.max_matvecs,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub beta_samples: usize,
    /// Sample count for the brute-force maximisation check.
    pub check_samples: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            beta_samples: 400,
            check_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegralConfig {
    pub p: Vec<f64>,
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        Self {
            p: vec![0.0, 1.0, 10.0],
            omega: vec![0.0, 1.0],
            mu: vec![0.0, 1.0, 10.0],
            lambda: vec![1.0, 9.0, 10.0, 100.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalChoice {
    Collocated,
    Continuum,
}

impl DiagonalChoice {
    pub fn rule(&self, quadrature: QuadratureSpec) -> DiagonalRule {
        match self {
            Self::Collocated => DiagonalRule::Collocated,
            Self::Continuum => DiagonalRule::Continuum { quadrature },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub k: usize,
    pub mu: f64,
    /// Cutoff Hamiltonian `H_Lambda` when set, otherwise the IBC Hamiltonian.
    pub lambda: Option<f64>,
    pub diagonal: DiagonalChoice,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k: 4,
            mu: 1.0,
            lambda: None,
            diagonal: DiagonalChoice::Collocated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub renormalization: Renormalization,
    pub diagonal: DiagonalChoice,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![4.0, 8.0, 16.0, 32.0],
            mu: 1.0,
            renormalization: Renormalization::Continuum,
            diagonal: DiagonalChoice::Collocated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnormConfig {
    pub mus: Vec<f64>,
    pub tol: f64,
}

impl Default for GnormConfig {
    fn default() -> Self {
        Self {
            mus: vec![1.0, 10.0, 100.0, 1000.0],
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    LPower,
    OmegaPower,
    Both,
}

impl ThresholdChoice {
    pub fn targets(&self) -> Vec<ThresholdTarget> {
        match self {
            Self::LPower => vec![ThresholdTarget::LPower],
            Self::OmegaPower => vec![ThresholdTarget::OmegaPower],
            Self::Both => vec![ThresholdTarget::LPower, ThresholdTarget::OmegaPower],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfigToml {
    pub target: ThresholdChoice,
    /// Overrides the per-target default exponent grid.
    pub exponents: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<f64>>,
    pub probe_width: f64,
    pub mu: f64,
    /// Allowed distance of the fitted from the predicted threshold, per target.
    pub l_power_tolerance: f64,
    pub omega_power_tolerance: f64,
}

impl Default for ThresholdConfigToml {
    fn default() -> Self {
        Self {
            target: ThresholdChoice::Both,
            exponents: None,
            cutoffs: None,
            probe_width: 1.0,
            mu: 1.0,
            l_power_tolerance: 0.05,
            omega_power_tolerance: 0.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_desk_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.grid.m, 32);
        assert_eq!(cfg.grid.n_max, 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[model]\ngamma = 1.0\n").is_err());
    }

    #[test]
    fn invalid_parameters_are_named() {
        let cfg = RunConfig::from_toml("[model]\nkind = \"power\"\nalpha = 0.9\nbeta = 1.0\n").unwrap();
        let err = cfg.model.build().unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        let cfg = RunConfig::from_toml("[model]\nkind = \"power\"\nbeta = 2.5\n").unwrap();
        assert!(cfg.model.build().unwrap_err().to_string().contains("beta"));
    }

    #[test]
    fn nonzero_fiber_momentum_needs_a_lattice() {
        let mut cfg = RunConfig::default();
        cfg.grid.fiber_p = [0.5, 0.0, 0.0];
        let model = cfg.model.build().unwrap();
        assert!(cfg.grid.build(&model).is_err());
        cfg.grid.space = SpaceChoice::LatticeFiber;
        assert!(cfg.grid.build(&model).is_ok());
    }
}
