//! Growth of `||Xi^x G_mu phi||` on the one-boson sector as the boson
//! momentum range is enlarged, for `Xi = L_mu` or `Xi = Omega`.
//!
//! For a radial probe `phi` of the particle momentum, substituting
//! `q = p + k` and integrating the angle in closed form leaves
//! `||Xi^x G phi||^2 = int 4 pi q^2 phi(q)^2 dq int 2 pi k^2 |v|^2 J(q, k) dk`.
//! The `k` integral is split into dyadic shells `[R, 2R]`; the log-log slope
//! of the shell contributions against `R` changes sign at the exponent where
//! the norm stops being finite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::model::Model;
use crate::quadrature::gauss_legendre_on;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdTarget {
    /// `Xi = L_mu`, exponent kappa.
    LPower,
    /// `Xi = Omega`, exponent eta.
    OmegaPower,
}

impl ThresholdTarget {
    /// Exponent at which the norm diverges: `(2 - D)/4` or `(2 - D)/(2 beta)`.
    pub fn predicted(&self, model: &Model) -> f64 {
        let d = model.params.d();
        match self {
            Self::LPower => (2.0 - d) / 4.0,
            Self::OmegaPower => (2.0 - d) / (2.0 * model.params.beta),
        }
    }

    /// Default exponent grid: `0..=1` step 0.1 for `L`, `0..=2` step 0.2 for `Omega`.
    pub fn default_exponents(&self) -> Vec<f64> {
        let step = match self {
            Self::LPower => 0.1,
            Self::OmegaPower => 0.2,
        };
        (0..=10).map(|i| i as f64 * step).collect()
    }
}

/// Gaussian sector-0 probe `phi(q) = exp(-q^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub width: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub target: ThresholdTarget,
    pub exponents: Vec<f64>,
    /// Inner shell radii `R`; each shell is `[R, 2R]`.
    pub cutoffs: Vec<f64>,
    pub probe: ProbeSpec,
    pub mu: f64,
    pub q_nodes: usize,
    pub k_nodes: usize,
}

impl ThresholdConfig {
    pub fn new(target: ThresholdTarget) -> Self {
        Self {
            target,
            exponents: target.default_exponents(),
            cutoffs: (2..=20).map(|j| 2f64.powi(j)).collect(),
            probe: ProbeSpec::default(),
            mu: 1.0,
            q_nodes: 64,
            k_nodes: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub target: ThresholdTarget,
    pub exponent_grid: Vec<f64>,
    pub cutoff_grid: Vec<f64>,
    /// `norm_table[i][j]`: squared norm of the shell `[R_j, 2 R_j]` at exponent `i`.
    pub norm_table: Vec<Vec<f64>>,
    /// Fitted log-log slope per exponent.
    pub slopes: Vec<f64>,
    /// Exponent where the slope crosses zero; `None` when it does not.
    pub fitted_threshold: Option<f64>,
    /// Set when every slope has the same sign.
    pub boundary: bool,
    pub predicted_threshold: f64,
}

/// `int_{-1}^{1} (A - B s)^{n-1} ds` for `0 <= B < A`, stable in `B/A`.
pub fn angular_power(a: f64, b: f64, n: f64) -> f64 {
    let t = b / a;
    if t == 0.0 {
        return 2.0 * a.powf(n - 1.0);
    }
    let y = t.atanh();
    // [(1+t)^n - (1-t)^n] / (n t) = 2 (1-t^2)^{n/2} sinh(n y) / (n t)
    let sinh_ratio = if n == 0.0 { y } else { (n * y).sinh() / n };
    2.0 * a.powf(n - 1.0) * (1.0 - t * t).powf(n / 2.0) * sinh_ratio / t
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Squared norm of `Xi^x G_mu phi` restricted to boson momenta in `[r, 2r]`.
pub fn shell_norm_sq(model: &Model, cfg: &ThresholdConfig, x: f64, r: f64) -> f64 {
    let width = cfg.probe.width;
    let (qs, qw) = gauss_legendre_on(cfg.q_nodes, 0.0, 8.0 * width);
    let (ks, kw) = gauss_legendre_on(cfg.k_nodes, r, 2.0 * r);
    let pi = std::f64::consts::PI;
    let mut total = 0.0;
    for (&q, &wq) in qs.iter().zip(&qw) {
        let phi2 = (-q * q / (width * width)).exp();
        let mut inner = 0.0;
        for (&k, &wk) in ks.iter().zip(&kw) {
            let om = model.omega(k);
            let a = q * q + k * k + om + cfg.mu;
            let b = 2.0 * q * k;
            let j = match cfg.target {
                ThresholdTarget::LPower => angular_power(a, b, 2.0 * x - 1.0),
                ThresholdTarget::OmegaPower => om.powf(2.0 * x) * 2.0 / ((a - b) * (a + b)),
            };
            inner += wk * 2.0 * pi * k * k * model.v_sq(k) * j;
        }
        total += wq * 4.0 * pi * q * q * phi2 * inner;
    }
    total
}

pub fn threshold_experiment(model: &Model, cfg: &ThresholdConfig) -> Result<ThresholdReport> {
    if cfg.exponents.len() < 2 || cfg.cutoffs.len() < 4 {
        return Err(IbcError::invalid("threshold", "need >= 2 exponents and >= 4 cutoffs"));
    }
    if !cfg.cutoffs.iter().all(|&r| r > 0.0) || !cfg.exponents.windows(2).all(|p| p[0] < p[1]) {
        return Err(IbcError::invalid(
            "threshold",
            "cutoffs must be positive, exponents increasing",
        ));
    }
    if !(cfg.mu > 0.0) {
        return Err(IbcError::invalid("mu", "must be > 0"));
    }
    let norm_table: Vec<Vec<f64>> = cfg
        .exponents
        .par_iter()
        .map(|&x| cfg.cutoffs.iter().map(|&r| shell_norm_sq(model, cfg, x, r)).collect())
        .collect();
    if norm_table.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(IbcError::DegenerateFit("non-positive or non-finite shell norm".into()));
    }
    let half = cfg.cutoffs.len() / 2;
    let log_r: Vec<f64> = cfg.cutoffs[half..].iter().map(|r| r.ln()).collect();
    let slopes: Vec<f64> = norm_table
        .iter()
        .map(|row| {
            let log_s: Vec<f64> = row[half..].iter().map(|s| s.ln()).collect();
            ls_slope(&log_r, &log_s)
        })
        .collect();
    let mut fitted = None;
    for i in 0..slopes.len() - 1 {
        let (s0, s1) = (slopes[i], slopes[i + 1]);
        if s0 < 0.0 && s1 >= 0.0 {
            let (x0, x1) = (cfg.exponents[i], cfg.exponents[i + 1]);
            fitted = Some(x0 - s0 * (x1 - x0) / (s1 - s0));
            break;
        }
    }
    Ok(ThresholdReport {
        target: cfg.target,
        exponent_grid: cfg.exponents.clone(),
        cutoff_grid: cfg.cutoffs.clone(),
        norm_table,
        boundary: fitted.is_none(),
        slopes,
        fitted_threshold: fitted,
        predicted_threshold: cfg.target.predicted(model),
    })
}
