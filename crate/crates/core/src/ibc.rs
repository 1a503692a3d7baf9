//! The singular map `G_mu`, the operators `T_d`, `T_od`, `A` and the
//! Hamiltonian `H = (1 - G)^* L_mu (1 - G) + T - mu` on a truncated space.
//!
//! `T_od` is the integral part of `a(v) G_mu` and is evaluated as
//! `-(a L_mu^{-1} a* - D_mu)`, where `D_mu` is the part of `a L_mu^{-1} a*`
//! in which the annihilated boson is the one just created. `T_d` is the
//! multiplication by `-I_mu`. Under [`DiagonalRule::Collocated`] the
//! integral `I_mu` uses the same grid quadrature as `D_mu`, which makes every
//! operator identity hold to rounding and `H` independent of `mu`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::fock::ops::{annihilation_into, creation_into};
use crate::fock::{FockSpace, FockVector, OperatorHandle};
use crate::quadrature::QuadratureSpec;

/// How the diagonal integral `I_mu` is evaluated on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagonalRule {
    /// Grid quadrature, consistent with the discrete `a L^{-1} a*`.
    #[default]
    Collocated,
    /// Adaptive radial quadrature of the continuum integral.
    Continuum { quadrature: QuadratureSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbcConfig {
    pub mu: f64,
    /// `None` is the regularised mode; `Some(Lambda)` replaces `v` by `chi_Lambda v`.
    pub cutoff: Option<f64>,
    pub diagonal: DiagonalRule,
}

impl IbcConfig {
    pub fn new(mu: f64) -> Result<Self> {
        let cfg = Self {
            mu,
            cutoff: None,
            diagonal: DiagonalRule::Collocated,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cutoff(mut self, lambda: f64) -> Self {
        self.cutoff = Some(lambda);
        self
    }

    pub fn with_diagonal(mut self, rule: DiagonalRule) -> Self {
        self.diagonal = rule;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 1.0 && self.mu.is_finite()) {
            return Err(IbcError::invalid("mu", format!("{} must be finite and >= 1", self.mu)));
        }
        if let Some(l) = self.cutoff {
            if !(l >= 0.0) {
                return Err(IbcError::invalid("Lambda", format!("{l} must be >= 0")));
            }
        }
        if let DiagonalRule::Continuum { quadrature } = self.diagonal {
            quadrature.validate()?;
        }
        Ok(())
    }
}

/// Precomputed IBC operators for one space and one configuration.
#[derive(Debug, Clone)]
pub struct IbcOperators {
    space: Arc<FockSpace>,
    cfg: IbcConfig,
    v: Vec<f64>,
    l_mu: Vec<f64>,
    inv_l_mu: Vec<f64>,
    new_boson_diag: Vec<f64>,
    i_diag: Vec<f64>,
    e_grid: f64,
}

impl IbcOperators {
    pub fn new(space: &Arc<FockSpace>, cfg: IbcConfig) -> Result<Self> {
        cfg.validate()?;
        let lambda = cfg.cutoff.unwrap_or(space.grid_cutoff);
        let v = space.cutoff_form_factor(lambda)?;
        let l_mu: Vec<f64> = space.free_symbol().iter().map(|l| l + cfg.mu).collect();
        let inv_l_mu: Vec<f64> = l_mu.iter().map(|l| 1.0 / l).collect();
        let nb = &space.new_boson;
        let new_boson_diag: Vec<f64> = (0..space.dim())
            .map(|b| {
                nb.row(b)
                    .map(|e| {
                        let vk = v[nb.mode[e] as usize];
                        nb.coef[e] * vk * vk * inv_l_mu[nb.col[e] as usize]
                    })
                    .sum()
            })
            .collect();
        let e_grid = space.e_grid(lambda);
        let top = space.sector(space.n_max).range();
        let i_diag: Vec<f64> = match cfg.diagonal {
            DiagonalRule::Collocated => (0..space.dim())
                .map(|b| match (cfg.cutoff, top.contains(&b)) {
                    (None, false) => new_boson_diag[b] - e_grid,
                    (None, true) => -e_grid,
                    (Some(_), false) => new_boson_diag[b],
                    (Some(_), true) => 0.0,
                })
                .collect(),
            DiagonalRule::Continuum { quadrature } => {
                let model = space.model;
                (0..space.dim())
                    .into_par_iter()
                    .map(|b| {
                        let p = space.p_sq[b].sqrt();
                        let omega = space.field_energy[b];
                        match (cfg.cutoff, top.contains(&b)) {
                            (None, false) => model.i_mu_scalar(p, omega, cfg.mu, &quadrature),
                            (None, true) => Ok(-e_grid),
                            (Some(l), false) => model.i_mu_cutoff(p, omega, cfg.mu, l, false, &quadrature),
                            (Some(_), true) => Ok(0.0),
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self {
            space: Arc::clone(space),
            cfg,
            v,
            l_mu,
            inv_l_mu,
            new_boson_diag,
            i_diag,
            e_grid,
        })
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn config(&self) -> &IbcConfig {
        &self.cfg
    }

    /// `E_grid`: the grid value of the counter-term at the active cutoff.
    pub fn e_grid(&self) -> f64 {
        self.e_grid
    }

    /// Per-element value of `I_mu` used by `T_d`.
    pub fn diagonal_integral(&self) -> &[f64] {
        &self.i_diag
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn creation_into(&self, x: &[f64], y: &mut [f64]) {
        creation_into(&self.space, &self.v, x, y);
    }

    pub fn annihilation_into(&self, x: &[f64], y: &mut [f64]) {
        annihilation_into(&self.space, &self.v, x, y);
    }

    /// `y = G_mu x = -L_mu^{-1} a* x`.
    pub fn g_into(&self, x: &[f64], y: &mut [f64]) {
        self.creation_into(x, y);
        y.iter_mut().zip(&self.inv_l_mu).for_each(|(y, il)| *y *= -il);
    }

    /// `y = G_mu^* x = -a L_mu^{-1} x`.
    pub fn g_adjoint_into(&self, x: &[f64], y: &mut [f64]) {
        let scaled: Vec<f64> = x.iter().zip(&self.inv_l_mu).map(|(x, il)| -x * il).collect();
        self.annihilation_into(&scaled, y);
    }

    pub fn t_d_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut()
            .zip(x)
            .zip(&self.i_diag)
            .for_each(|((y, x), i)| *y = -i * x);
    }

    /// `y = T_od x = -(a L^{-1} a* - D) x`.
    pub fn t_od_into(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        self.creation_into(x, &mut tmp);
        tmp.iter_mut().zip(&self.inv_l_mu).for_each(|(t, il)| *t *= il);
        self.annihilation_into(&tmp, y);
        y.iter_mut()
            .zip(x)
            .zip(&self.new_boson_diag)
            .for_each(|((y, x), d)| *y = d * x - *y);
    }

    pub fn t_into(&self, x: &[f64], y: &mut [f64]) {
        self.t_od_into(x, y);
        y.iter_mut()
            .zip(x)
            .zip(&self.i_diag)
            .for_each(|((y, x), i)| *y -= i * x);
    }

    /// `y = A x = a (1 - G) x + T x`.
    pub fn a_into(&self, x: &[f64], y: &mut [f64]) {
        let mut gx = vec![0.0; x.len()];
        self.g_into(x, &mut gx);
        let reg: Vec<f64> = x.iter().zip(&gx).map(|(x, g)| x - g).collect();
        self.annihilation_into(&reg, y);
        let mut t = gx;
        self.t_into(x, &mut t);
        y.iter_mut().zip(&t).for_each(|(y, t)| *y += t);
    }

    /// `y = H x = (1 - G)^* L_mu (1 - G) x + T x - mu x`.
    pub fn h_into(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        let mut g = vec![0.0; n];
        self.g_into(x, &mut g);
        let lreg: Vec<f64> = x
            .iter()
            .zip(&g)
            .zip(&self.l_mu)
            .map(|((x, g), l)| l * (x - g))
            .collect();
        let mut back = g;
        self.g_adjoint_into(&lreg, &mut back);
        let mut t = vec![0.0; n];
        self.t_into(x, &mut t);
        for i in 0..n {
            y[i] = lreg[i] - back[i] + t[i] - self.cfg.mu * x[i];
        }
    }

    fn wrap(&self, psi: &FockVector, f: impl Fn(&Self, &[f64], &mut [f64])) -> FockVector {
        let mut out = FockVector::zeros(&self.space);
        f(self, psi.data(), out.data_mut());
        out
    }

    pub fn apply_g(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::g_into)
    }

    pub fn apply_g_adjoint(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::g_adjoint_into)
    }

    pub fn apply_t_d(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::t_d_into)
    }

    pub fn apply_t_od(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::t_od_into)
    }

    pub fn apply_t(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::t_into)
    }

    pub fn apply_a(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::a_into)
    }

    pub fn apply_h(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::h_into)
    }

    pub fn apply_creation(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::creation_into)
    }

    pub fn apply_annihilation(&self, psi: &FockVector) -> FockVector {
        self.wrap(psi, Self::annihilation_into)
    }

    /// Multiplication by `L_mu`.
    pub fn apply_free(&self, psi: &FockVector) -> FockVector {
        psi.multiplied(&self.l_mu)
    }

    /// Multiplication by `L_mu^{-1}`.
    pub fn apply_free_inverse(&self, psi: &FockVector) -> FockVector {
        psi.multiplied(&self.inv_l_mu)
    }

    /// `H` as a shareable handle for eigensolvers.
    pub fn h_handle(self: &Arc<Self>) -> OperatorHandle {
        let me = Arc::clone(self);
        OperatorHandle::new(&self.space, true, move |x, y| me.h_into(x, y))
    }

    /// `G_mu^* G_mu` as a handle.
    pub fn g_star_g_handle(self: &Arc<Self>) -> OperatorHandle {
        let me = Arc::clone(self);
        OperatorHandle::new(&self.space, true, move |x, y| {
            let mut g = vec![0.0; x.len()];
            me.g_into(x, &mut g);
            me.g_adjoint_into(&g, y);
        })
    }
}

pub fn apply_g(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_g(psi))
}

pub fn apply_g_adjoint(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_g_adjoint(psi))
}

pub fn apply_t_d(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_t_d(psi))
}

pub fn apply_t_od(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_t_od(psi))
}

pub fn apply_a(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_a(psi))
}

pub fn apply_h(psi: &FockVector, cfg: IbcConfig) -> Result<FockVector> {
    Ok(IbcOperators::new(psi.space(), cfg)?.apply_h(psi))
}

fn random_trials(space: &Arc<FockSpace>, trials: usize, seed: u64) -> Vec<FockVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| FockVector::random(space, &mut rng)).collect()
}

/// `max ||(T^mu - T^lambda) psi - (mu - lambda) G_mu^* G_lambda psi|| / ||psi||`.
pub fn check_t_difference_identity(
    space: &Arc<FockSpace>,
    cfg_mu: IbcConfig,
    cfg_lambda: IbcConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let om = IbcOperators::new(space, cfg_mu)?;
    let ol = IbcOperators::new(space, cfg_lambda)?;
    let dmu = cfg_mu.mu - cfg_lambda.mu;
    Ok(random_trials(space, trials, seed)
        .iter()
        .map(|psi| {
            let lhs = om.apply_t(psi).axpy(-1.0, &ol.apply_t(psi));
            let rhs = om.apply_g_adjoint(&ol.apply_g(psi)).scaled(dmu);
            lhs.axpy(-1.0, &rhs).norm() / psi.norm()
        })
        .fold(0.0, f64::max))
}

/// `max ||(1 - G_mu) psi - (1 - G_lambda) psi + (lambda - mu) L_mu^{-1} G_lambda psi|| / ||psi||`.
pub fn check_one_minus_g_identity(
    space: &Arc<FockSpace>,
    cfg_mu: IbcConfig,
    cfg_lambda: IbcConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let om = IbcOperators::new(space, cfg_mu)?;
    let ol = IbcOperators::new(space, cfg_lambda)?;
    let dlm = cfg_lambda.mu - cfg_mu.mu;
    Ok(random_trials(space, trials, seed)
        .iter()
        .map(|psi| {
            let gl = ol.apply_g(psi);
            let lhs = psi.axpy(-1.0, &om.apply_g(psi));
            let rhs = psi.axpy(-1.0, &gl).axpy(-dlm, &om.apply_free_inverse(&gl));
            lhs.axpy(-1.0, &rhs).norm() / psi.norm()
        })
        .fold(0.0, f64::max))
}

/// `max ||A^mu psi - A^lambda psi|| / ||psi||`.
pub fn check_a_independence(
    space: &Arc<FockSpace>,
    cfg_mu: IbcConfig,
    cfg_lambda: IbcConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let om = IbcOperators::new(space, cfg_mu)?;
    let ol = IbcOperators::new(space, cfg_lambda)?;
    Ok(random_trials(space, trials, seed)
        .iter()
        .map(|psi| om.apply_a(psi).axpy(-1.0, &ol.apply_a(psi)).norm() / psi.norm())
        .fold(0.0, f64::max))
}

/// `max ||H^mu psi - H^lambda psi|| / ||H^mu psi||`.
pub fn check_h_independence(
    space: &Arc<FockSpace>,
    cfg_mu: IbcConfig,
    cfg_lambda: IbcConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let om = IbcOperators::new(space, cfg_mu)?;
    let ol = IbcOperators::new(space, cfg_lambda)?;
    Ok(random_trials(space, trials, seed)
        .iter()
        .map(|psi| {
            let h = om.apply_h(psi);
            h.axpy(-1.0, &ol.apply_h(psi)).norm() / h.norm()
        })
        .fold(0.0, f64::max))
}

/// `max ||L_mu G_mu psi + a* psi|| / ||psi||`.
pub fn check_l_g_identity(space: &Arc<FockSpace>, cfg: IbcConfig, trials: usize, seed: u64) -> Result<f64> {
    let ops = IbcOperators::new(space, cfg)?;
    Ok(random_trials(space, trials, seed)
        .iter()
        .map(|psi| {
            let lg = ops.apply_free(&ops.apply_g(psi));
            lg.axpy(1.0, &ops.apply_creation(psi)).norm() / psi.norm()
        })
        .fold(0.0, f64::max))
}

/// `max |<phi, X psi> - <X phi, psi>| / (||phi|| ||psi||)` for `X = H`.
pub fn check_h_symmetry(space: &Arc<FockSpace>, cfg: IbcConfig, pairs: usize, seed: u64) -> Result<f64> {
    let ops = IbcOperators::new(space, cfg)?;
    let v = random_trials(space, 2 * pairs, seed);
    Ok(v.chunks(2)
        .map(|p| {
            let (phi, psi) = (&p[0], &p[1]);
            (phi.dot(&ops.apply_h(psi)) - ops.apply_h(phi).dot(psi)).abs() / (phi.norm() * psi.norm())
        })
        .fold(0.0, f64::max))
}

/// `max |<a* phi, psi> - <phi, a psi>| / (||phi|| ||psi||)`.
pub fn check_adjointness(space: &Arc<FockSpace>, cfg: IbcConfig, pairs: usize, seed: u64) -> Result<f64> {
    let ops = IbcOperators::new(space, cfg)?;
    let v = random_trials(space, 2 * pairs, seed);
    Ok(v.chunks(2)
        .map(|p| {
            let (phi, psi) = (&p[0], &p[1]);
            (ops.apply_creation(phi).dot(psi) - phi.dot(&ops.apply_annihilation(psi))).abs() / (phi.norm() * psi.norm())
        })
        .fold(0.0, f64::max))
}

/// Outcome of the power iteration for `||G_mu||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub mu: f64,
    pub norm: f64,
    pub iterations: usize,
}

/// Power iteration on `G_mu^* G_mu` from the normalised all-ones vector.
pub fn g_norm_estimate(space: &Arc<FockSpace>, cfg: IbcConfig, tol: f64) -> Result<NormEstimate> {
    g_norm_estimate_capped(space, cfg, tol, 10_000)
}

pub fn g_norm_estimate_capped(
    space: &Arc<FockSpace>,
    cfg: IbcConfig,
    tol: f64,
    max_iterations: usize,
) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return Err(IbcError::invalid("tol", "must be > 0"));
    }
    let ops = IbcOperators::new(space, cfg)?;
    let mut x = FockVector::from_data(space, vec![1.0; space.dim()])?;
    x = x.scaled(1.0 / x.norm());
    let mut previous = f64::NAN;
    for it in 1..=max_iterations {
        let gx = ops.apply_g(&x);
        let rayleigh = gx.dot(&gx);
        if rayleigh == 0.0 {
            return Ok(NormEstimate {
                mu: cfg.mu,
                norm: 0.0,
                iterations: it,
            });
        }
        let z = ops.apply_g_adjoint(&gx);
        if (rayleigh - previous).abs() <= tol * rayleigh {
            return Ok(NormEstimate {
                mu: cfg.mu,
                norm: rayleigh.sqrt(),
                iterations: it,
            });
        }
        previous = rayleigh;
        x = z.scaled(1.0 / z.norm());
    }
    Err(IbcError::NotConverged {
        iterations: max_iterations,
        residual: previous,
    })
}
