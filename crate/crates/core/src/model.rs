//! Dispersion relation, form factor, the sector symbol `L_mu`, the
//! renormalisation constant `E_Lambda` and the regularised diagonal integral
//! `I_mu`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::params::ModelParameters;
use crate::quadrature::{integrate_ball, integrate_semi_infinite, QuadratureSpec};

pub type Vec3 = [f64; 3];

pub fn norm3(k: &Vec3) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dispersion {
    /// `omega(k) = |k|^beta + mass`.
    Power { beta: f64, mass: f64 },
    /// `omega(k) = sqrt(k^2 + mass^2)`; `beta = 1`.
    MassiveRelativistic { mass: f64 },
}

impl Dispersion {
    pub fn omega(&self, k: f64) -> f64 {
        match *self {
            Self::Power { beta, mass } => k.powf(beta) + mass,
            Self::MassiveRelativistic { mass } => k.hypot(mass),
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Power { beta, .. } => beta,
            Self::MassiveRelativistic { .. } => 1.0,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            Self::Power { mass, .. } | Self::MassiveRelativistic { mass } => mass,
        }
    }

    pub fn is_massless(&self) -> bool {
        self.mass() == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormFactor {
    /// `v(k) = |k|^-alpha`.
    Power { alpha: f64 },
    /// `v = omega^{-1/2}`.
    InverseSqrtOmega,
}

/// A concrete model: parameters plus the functions `omega` and `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ModelParameters,
    pub dispersion: Dispersion,
    pub form_factor: FormFactor,
    /// Overall multiplier of `v`; every region result is independent of it.
    pub coupling: f64,
}

impl Model {
    pub fn new(
        params: ModelParameters,
        dispersion: Dispersion,
        form_factor: FormFactor,
        coupling: f64,
    ) -> Result<Self> {
        let model = Self {
            params,
            dispersion,
            form_factor,
            coupling,
        };
        model.validate()?;
        Ok(model)
    }

    /// Nelson model, `omega = sqrt(k^2 + m^2)` and `v = omega^{-1/2}`.
    pub fn nelson(mass: f64) -> Self {
        Self {
            params: ModelParameters::nelson(mass),
            dispersion: Dispersion::MassiveRelativistic { mass },
            form_factor: FormFactor::InverseSqrtOmega,
            coupling: 1.0,
        }
    }

    pub fn nelson_massless() -> Self {
        Self::nelson(0.0)
    }

    /// `omega = |k|^beta + m`, `v = |k|^-alpha`.
    pub fn power(params: ModelParameters) -> Self {
        Self {
            params,
            dispersion: Dispersion::Power {
                beta: params.beta,
                mass: params.mass,
            },
            form_factor: FormFactor::Power { alpha: params.alpha },
            coupling: 1.0,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub(crate) fn validate_coupling(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(IbcError::invalid("coupling", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.validate_coupling()?;
        if (self.dispersion.beta() - self.params.beta).abs() > 1e-12 {
            return Err(IbcError::invalid("beta", "dispersion exponent differs from parameters"));
        }
        if (self.dispersion.mass() - self.params.mass).abs() > 1e-12 {
            return Err(IbcError::invalid("mass", "dispersion mass differs from parameters"));
        }
        match self.form_factor {
            FormFactor::Power { alpha } if (alpha - self.params.alpha).abs() > 1e-12 => Err(IbcError::invalid(
                "alpha",
                "form factor exponent differs from parameters",
            )),
            FormFactor::InverseSqrtOmega if (2.0 * self.params.alpha - self.params.beta).abs() > 1e-12 => {
                Err(IbcError::invalid("alpha", "v = omega^-1/2 needs alpha = beta/2"))
            }
            _ => Ok(()),
        }
    }

    pub fn omega(&self, k: f64) -> f64 {
        self.dispersion.omega(k)
    }

    /// `|v(k)|` without the coupling multiplier.
    pub fn form_factor_abs(&self, k: f64) -> f64 {
        match self.form_factor {
            FormFactor::Power { alpha } => k.powf(-alpha),
            FormFactor::InverseSqrtOmega => 1.0 / self.omega(k).sqrt(),
        }
    }

    /// Coupled form factor `g |v(k)|`.
    pub fn v(&self, k: f64) -> f64 {
        self.coupling * self.form_factor_abs(k)
    }

    pub fn v_sq(&self, k: f64) -> f64 {
        let v = self.v(k);
        v * v
    }

    /// `L_mu(p, K) = p^2 + sum omega(k_i) + mu`.
    pub fn sector_symbol_l(&self, p: &Vec3, bosons: &[Vec3], mu: f64) -> f64 {
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        p2 + self.field_energy(bosons) + mu
    }

    pub fn field_energy(&self, bosons: &[Vec3]) -> f64 {
        bosons.iter().map(|k| self.omega(norm3(k))).sum()
    }

    /// Small-`r` exponent `s` of `r^2 |v|^2 / (r^2 + omega)`.
    pub fn ir_exponent(&self) -> f64 {
        let beta = self.params.beta;
        let massless = self.dispersion.is_massless();
        let alpha_v = match self.form_factor {
            FormFactor::Power { alpha } => alpha,
            FormFactor::InverseSqrtOmega if massless => beta / 2.0,
            FormFactor::InverseSqrtOmega => 0.0,
        };
        if massless {
            2.0 - 2.0 * alpha_v - beta
        } else {
            2.0 - 2.0 * alpha_v
        }
    }

    /// Power substitution exponent that removes the origin singularity.
    fn gamma(&self) -> f64 {
        1.0 / (self.ir_exponent() + 1.0).min(1.0)
    }

    /// `E_Lambda = int_{|k| <= Lambda} |v|^2 / (k^2 + omega) d^3k`.
    pub fn e_lambda(&self, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(IbcError::invalid("Lambda", format!("{lambda} must be >= 0")));
        }
        let f = |r: f64| 4.0 * PI * r * r * self.v_sq(r) / (r * r + self.omega(r));
        Ok(integrate_ball(f, lambda, self.gamma(), spec)?.value)
    }

    /// Closed form `4 pi ln(1 + Lambda)` for the massless Nelson model.
    pub fn e_lambda_nelson_massless(lambda: f64) -> f64 {
        4.0 * PI * lambda.ln_1p()
    }

    /// `I_mu(p, K)` for vector arguments.
    pub fn i_mu(&self, p: &Vec3, bosons: &[Vec3], mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        self.i_mu_scalar(norm3(p), self.field_energy(bosons), mu, spec)
    }

    /// `I_mu` as a function of `|p|` and `Omega(K)` only.
    pub fn i_mu_scalar(&self, p_norm: f64, omega_sum: f64, mu: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_mu(mu)?;
        let shift = p_norm * p_norm + omega_sum + mu;
        let f = |r: f64| {
            let w = self.omega(r);
            let c = r * r + w;
            let a = c + shift;
            let x = 2.0 * r * p_norm / a;
            // angular integral minus the subtraction, arranged so that it is
            // exactly zero when p = 0 and Omega_mu = 0
            let bracket = 2.0 * (atanh_ratio_minus_one(x) / a - shift / (a * c));
            2.0 * PI * r * r * self.v_sq(r) * bracket
        };
        Ok(integrate_semi_infinite(f, self.gamma(), spec)?.value)
    }

    /// The integral of `I_mu` restricted to `|k| <= Lambda`.
    ///
    /// With `subtract = false` the counter-term is omitted; the result then
    /// diverges with `Lambda`. With `subtract = true` it converges to `I_mu`.
    pub fn i_mu_cutoff(
        &self,
        p_norm: f64,
        omega_sum: f64,
        mu: f64,
        lambda: f64,
        subtract: bool,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        check_mu(mu)?;
        if !(lambda >= 0.0) {
            return Err(IbcError::invalid("Lambda", format!("{lambda} must be >= 0")));
        }
        let shift = p_norm * p_norm + omega_sum + mu;
        let f = |r: f64| {
            let w = self.omega(r);
            let c = r * r + w;
            let a = c + shift;
            let x = 2.0 * r * p_norm / a;
            let bracket = if subtract {
                2.0 * (atanh_ratio_minus_one(x) / a - shift / (a * c))
            } else {
                2.0 * atanh_ratio(x) / a
            };
            2.0 * PI * r * r * self.v_sq(r) * bracket
        };
        Ok(integrate_ball(f, lambda, self.gamma(), spec)?.value)
    }

    /// Randomised spot check of `|k|^beta <= omega <= |k|^beta + m`.
    pub fn check_dispersion_bounds(&self, samples: &[f64]) -> bool {
        let beta = self.params.beta;
        let m = self.params.mass;
        samples.iter().all(|&k| {
            let w = self.omega(k);
            let kb = k.powf(beta);
            kb <= w * (1.0 + 1e-14) && w <= (kb + m) * (1.0 + 1e-14)
        })
    }

    /// Randomised spot check of `c (1 + |k|^alpha)^-1 <= |v| <= |k|^-alpha`.
    pub fn check_form_factor_bounds(&self, samples: &[f64]) -> bool {
        let alpha = self.params.alpha;
        let c = self.params.coupling_lower_c;
        samples.iter().filter(|&&k| k > 0.0).all(|&k| {
            let v = self.form_factor_abs(k);
            c / (1.0 + k.powf(alpha)) <= v * (1.0 + 1e-14) && v <= k.powf(-alpha) * (1.0 + 1e-14)
        })
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(IbcError::invalid("mu", format!("{mu} must be finite and >= 0")));
    }
    Ok(())
}

/// `atanh(x) / x`, equal to 1 at `x = 0`.
pub fn atanh_ratio(x: f64) -> f64 {
    if x.abs() < 0.1 {
        1.0 + atanh_ratio_minus_one(x)
    } else {
        x.atanh() / x
    }
}

/// `atanh(x) / x - 1` without cancellation for small `x`.
pub fn atanh_ratio_minus_one(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        let mut term = x2;
        let mut sum = 0.0;
        for k in 1..=8 {
            sum += term / (2 * k + 1) as f64;
            term *= x2;
        }
        sum
    } else {
        x.atanh() / x - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::TailMap;

    #[test]
    fn symbol_examples() {
        let m = Model::nelson_massless();
        assert_eq!(m.sector_symbol_l(&[0.0; 3], &[], 1.0), 1.0);
        assert_eq!(m.sector_symbol_l(&[1.0, 0.0, 0.0], &[[0.0, 0.0, 2.0]], 0.0), 3.0);
        let p = [0.3, -0.2, 0.7];
        let ks = [[1.0, 2.0, 0.5], [0.1, 0.0, 0.0]];
        let base = m.sector_symbol_l(&p, &ks, 0.0);
        assert_eq!(m.sector_symbol_l(&p, &ks, 2.5), base + 2.5);
    }

    #[test]
    fn e_lambda_matches_closed_form() {
        let m = Model::nelson_massless();
        let spec = QuadratureSpec::default();
        for lambda in [1.0, 9.0, 10.0, 99.0, 100.0, 1000.0] {
            let e = m.e_lambda(lambda, &spec).unwrap();
            let exact = Model::e_lambda_nelson_massless(lambda);
            assert!((e - exact).abs() <= 1e-8 * exact, "{lambda}: {e} vs {exact}");
        }
        assert_eq!(m.e_lambda(0.0, &spec).unwrap(), 0.0);
        assert!((Model::e_lambda_nelson_massless(9.0) - 28.935_137_649_661_86).abs() < 1e-12);
    }

    #[test]
    fn i_mu_vanishes_at_origin() {
        let m = Model::nelson_massless();
        let v = m.i_mu(&[0.0; 3], &[], 0.0, &QuadratureSpec::default()).unwrap();
        assert!(v.abs() <= 1e-12, "{v}");
    }

    #[test]
    fn i_mu_negative_and_backends_agree() {
        let m = Model::nelson_massless();
        let a = m.i_mu_scalar(0.0, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        let spec = QuadratureSpec::default().with_tail_map(TailMap::ExpMap);
        let b = m.i_mu_scalar(0.0, 0.0, 1.0, &spec).unwrap();
        assert!(a < 0.0);
        assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn i_mu_nelson_closed_form_at_zero_momentum() {
        // p = 0: I = -4 pi mu int_0^inf dr / ((r + 1)(r^2 + r + mu))
        let m = Model::nelson_massless();
        let mu = 3.0;
        let oracle = crate::quadrature::integrate_rational_map(
            |r: f64| -4.0 * PI * mu / ((r + 1.0) * (r * r + r + mu)),
            1.0,
            &QuadratureSpec::default().tightened(100.0),
        )
        .unwrap()
        .value;
        let v = m.i_mu_scalar(0.0, 0.0, mu, &QuadratureSpec::default()).unwrap();
        assert!((v - oracle).abs() <= 1e-7 * oracle.abs());
    }

    #[test]
    fn cutoff_variants() {
        let m = Model::nelson_massless();
        let spec = QuadratureSpec::default();
        assert_eq!(m.i_mu_cutoff(0.0, 0.0, 1.0, 0.0, false, &spec).unwrap(), 0.0);
        let full = m.i_mu_scalar(0.0, 0.0, 1.0, &spec).unwrap();
        let mut prev_gap = f64::INFINITY;
        for lambda in [10.0, 100.0, 1e3, 1e4] {
            let sub = m.i_mu_cutoff(0.0, 0.0, 1.0, lambda, true, &spec).unwrap();
            let unsub = m.i_mu_cutoff(0.0, 0.0, 1.0, lambda, false, &spec).unwrap();
            let e = m.e_lambda(lambda, &spec).unwrap();
            assert!((sub - (unsub - e)).abs() < 1e-7 * e);
            let gap = (sub - full).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        // the unsubtracted integral grows like 4 pi ln Lambda
        let u1 = m.i_mu_cutoff(0.0, 0.0, 1.0, 1e3, false, &spec).unwrap();
        let u2 = m.i_mu_cutoff(0.0, 0.0, 1.0, 1e4, false, &spec).unwrap();
        let slope = (u2 - u1) / 10f64.ln();
        assert!((slope - 4.0 * PI).abs() < 0.05 * 4.0 * PI, "{slope}");
    }

    #[test]
    fn bounds_checks() {
        let samples: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        for m in [Model::nelson(0.0), Model::nelson(0.5)] {
            assert!(m.check_dispersion_bounds(&samples));
            assert!(m.check_form_factor_bounds(&samples));
        }
        let p = ModelParameters::new(0.3, 0.8, 0.2, 1.0, 1.0).unwrap();
        let m = Model::power(p);
        assert!(m.validate().is_ok());
        assert!(m.check_dispersion_bounds(&samples));
        assert!(m.check_form_factor_bounds(&samples));
    }

    #[test]
    fn atanh_ratio_is_smooth_across_switch() {
        for x in [0.0999999, 0.1, 0.1000001] {
            let direct = if x == 0.0 { 1.0 } else { f64::atanh(x) / x };
            assert!((atanh_ratio(x) - direct).abs() < 1e-15);
        }
        assert_eq!(atanh_ratio_minus_one(0.0), 0.0);
    }
}
