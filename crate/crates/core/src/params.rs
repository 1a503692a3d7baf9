//! Model parameters and the closed-form parameter-region formulas.
//!
//! Everything here is a pure function of `(alpha, beta, D)` and friends, where
//! `D = 1 - 2 alpha`. The admissible region for the self-adjointness result is
//! the piecewise bound returned by [`condition1_bound`]; [`max_f`] recovers
//! the same curve as the maximum over `s` of the minimum of the three
//! constraint lines returned by [`bound_functions`].

use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};

/// Left breakpoint `2(sqrt 2 - 1)` of the admissible-pair curve.
pub fn breakpoint_left() -> f64 {
    2.0 * (std::f64::consts::SQRT_2 - 1.0)
}

/// Right breakpoint `sqrt 5 - 1` of the admissible-pair curve.
pub fn breakpoint_right() -> f64 {
    5.0_f64.sqrt() - 1.0
}

/// Physical and analytic parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    /// Form factor exponent, `|v(k)| <= |k|^-alpha`.
    pub alpha: f64,
    /// Dispersion exponent, `|k|^beta <= omega(k)`.
    pub beta: f64,
    /// Dispersion offset, `omega(k) <= |k|^beta + mass`.
    pub mass: f64,
    /// Spectral shift.
    pub mu: f64,
    /// Constant in the lower bound `c (1 + |k|^alpha)^-1 <= |v(k)|`.
    pub coupling_lower_c: f64,
}

impl ModelParameters {
    /// Validates every construction-level invariant.
    pub fn new(alpha: f64, beta: f64, mass: f64, mu: f64, coupling_lower_c: f64) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            mass,
            mu,
            coupling_lower_c,
        };
        params.validate()?;
        Ok(params)
    }

    /// The Nelson model: `v = omega^{-1/2}`, `omega(k) = sqrt(k^2 + m^2)`.
    pub fn nelson(mass: f64) -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            mass,
            mu: 1.0,
            coupling_lower_c: 1.0,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            alpha,
            beta,
            mass,
            mu,
            coupling_lower_c,
        } = *self;
        if !(0.0..1.5).contains(&alpha) {
            return Err(IbcError::invalid("alpha", format!("{alpha} not in [0, 3/2)")));
        }
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(IbcError::invalid("beta", format!("{beta} not in (0, 2]")));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(IbcError::invalid("mass", format!("{mass} must be finite and >= 0")));
        }
        if !(mu >= 1.0 && mu.is_finite()) {
            return Err(IbcError::invalid("mu", format!("{mu} must be finite and >= 1")));
        }
        if !(coupling_lower_c > 0.0 && coupling_lower_c <= 1.0) {
            return Err(IbcError::invalid(
                "coupling_lower_c",
                format!("{coupling_lower_c} not in (0, 1]"),
            ));
        }
        let d = self.d();
        if !general_region(beta, d) {
            let range = if beta < 2.0 { "[0, beta)" } else { "(0, 2)" };
            return Err(IbcError::invalid(
                "alpha",
                format!("D = 1 - 2 alpha = {d} not in {range} for beta = {beta}"),
            ));
        }
        Ok(())
    }

    /// `D = 1 - 2 alpha`.
    pub fn d(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }

    /// The affine map `u(s) = (beta s - D) / 2`.
    pub fn u(&self, s: f64) -> f64 {
        u_map(s, self.beta, self.d())
    }

    pub fn theta_eps(&self, eps: f64) -> Result<f64> {
        theta_eps(self.beta, self.d(), eps)
    }

    pub fn q_map(&self, eta: f64, eps: f64) -> f64 {
        q_map(eta, eps, self.beta, self.d())
    }

    pub fn classify(&self) -> RegionVerdict {
        classify_pair(self.beta, self.d())
    }
}

/// `u(s) = (beta s - D) / 2`.
pub fn u_map(s: f64, beta: f64, d: f64) -> f64 {
    (beta * s - d) / 2.0
}

/// The exponent `theta_eps(beta, D)`.
///
/// Only defined for `0 < eps < beta - D`. At `beta = 2` that range forces the
/// lower branch, so the `2 - beta` denominator is never evaluated.
pub fn theta_eps(beta: f64, d: f64, eps: f64) -> Result<f64> {
    if !general_region(beta, d) {
        return Err(IbcError::invalid(
            "D",
            format!("({beta}, {d}) is not an admissible pair"),
        ));
    }
    let eps0 = beta - d;
    if !(eps > 0.0 && eps < eps0) {
        return Err(IbcError::invalid("eps", format!("{eps} not in (0, {eps0})")));
    }
    if d > (3.0 * beta - 2.0) / beta - eps {
        if beta >= 2.0 {
            return Err(IbcError::invalid("eps", "upper branch selected at beta = 2"));
        }
        Ok((2.0 - d - eps) / (2.0 - beta))
    } else {
        Ok((1.0 / beta).max(1.0))
    }
}

/// `q_eps(eta) = max(0, eta + eps - (beta + 2 - 2D) / (4 beta))`.
pub fn q_map(eta: f64, eps: f64, beta: f64, d: f64) -> f64 {
    (eta + eps - (beta + 2.0 - 2.0 * d) / (4.0 * beta)).max(0.0)
}

/// Which piece of the admissible-pair curve is active at a given `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition1Branch {
    /// `beta^2 / 2` on `(0, 2(sqrt 2 - 1))`.
    Small,
    /// `2 beta / (beta + 4)` on `[2(sqrt 2 - 1), sqrt 5 - 1)`.
    Middle,
    /// `(beta^2 - 2 beta + 2) / (beta + 1)` on `[sqrt 5 - 1, 2)`.
    Large,
    /// `2/3` at `beta = 2`, where additionally `D > 0` is required.
    Endpoint,
}

impl Condition1Branch {
    pub fn of(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(IbcError::invalid("beta", format!("{beta} not in (0, 2]")));
        }
        Ok(if beta < breakpoint_left() {
            Self::Small
        } else if beta < breakpoint_right() {
            Self::Middle
        } else if beta < 2.0 {
            Self::Large
        } else {
            Self::Endpoint
        })
    }

    pub fn index(self) -> u8 {
        match self {
            Self::Small => 0,
            Self::Middle => 1,
            Self::Large => 2,
            Self::Endpoint => 3,
        }
    }
}

pub fn small_branch(beta: f64) -> f64 {
    beta * beta / 2.0
}

pub fn middle_branch(beta: f64) -> f64 {
    2.0 * beta / (beta + 4.0)
}

pub fn large_branch(beta: f64) -> f64 {
    (beta * beta - 2.0 * beta + 2.0) / (beta + 1.0)
}

/// The older, massive-only bound `2 beta^2 / (beta^2 + 8)`.
pub fn old_bound(beta: f64) -> f64 {
    2.0 * beta * beta / (beta * beta + 8.0)
}

/// Upper bound on `D` for which the Hamiltonian is self-adjoint.
pub fn condition1_bound(beta: f64) -> Result<f64> {
    Ok(match Condition1Branch::of(beta)? {
        Condition1Branch::Small => small_branch(beta),
        Condition1Branch::Middle => middle_branch(beta),
        Condition1Branch::Large => large_branch(beta),
        Condition1Branch::Endpoint => 2.0 / 3.0,
    })
}

/// The four constraint lines in `s` whose intersection yields the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundFunctions {
    /// `D > beta s - 2` (the only lower bound).
    pub f4: f64,
    /// `D < s beta^2 / (beta + 2)`.
    pub f3: f64,
    /// `D < 2 - s (2 - beta)`.
    pub f11: f64,
    /// `D < (2 - s beta (2 - beta)) / (beta + 1)`.
    pub f12: f64,
}

impl BoundFunctions {
    /// `F(s) = min(f3, f11, f12)`.
    pub fn upper_envelope(&self) -> f64 {
        self.f3.min(self.f11).min(self.f12)
    }
}

pub fn bound_functions(s: f64, beta: f64) -> BoundFunctions {
    BoundFunctions {
        f4: beta * s - 2.0,
        f3: s * beta * beta / (beta + 2.0),
        f11: 2.0 - s * (2.0 - beta),
        f12: (2.0 - s * beta * (2.0 - beta)) / (beta + 1.0),
    }
}

/// Closed-form maximum of `F` over `s in [1, 2/beta)`, with its maximiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxF {
    pub value: f64,
    pub argmax: f64,
}

pub fn max_f(beta: f64) -> Result<MaxF> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(IbcError::invalid("beta", format!("{beta} not in (0, 2)")));
    }
    let argmax = match Condition1Branch::of(beta)? {
        // f3 meets f11 first
        Condition1Branch::Small => (beta + 2.0) / 2.0,
        // f3 meets f12 first
        Condition1Branch::Middle => 2.0 * (beta + 2.0) / (beta * (beta + 4.0)),
        _ => 1.0,
    };
    let value = match Condition1Branch::of(beta)? {
        Condition1Branch::Small | Condition1Branch::Middle => bound_functions(argmax, beta).f3,
        _ => bound_functions(1.0, beta).f12,
    };
    Ok(MaxF { value, argmax })
}

/// Numerical maximum of `F` on `[1, 2/beta]`: a grid scan followed by
/// golden-section refinement, valid because `F` is concave.
pub fn max_f_by_search(beta: f64, scan_points: usize) -> Result<MaxF> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(IbcError::invalid("beta", format!("{beta} not in (0, 2)")));
    }
    let n = scan_points.max(3);
    let (lo, hi) = (1.0, 2.0 / beta);
    let f = |s: f64| bound_functions(s, beta).upper_envelope();
    let h = (hi - lo) / (n - 1) as f64;
    let best = (0..n)
        .max_by(|&i, &j| f(lo + i as f64 * h).total_cmp(&f(lo + j as f64 * h)))
        .unwrap_or(0);
    let mut a = (lo + (best as f64 - 1.0) * h).max(lo);
    let mut b = (lo + (best as f64 + 1.0) * h).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-14 * b {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let argmax = (a + b) / 2.0;
    Ok(MaxF {
        value: f(argmax),
        argmax,
    })
}

/// Membership of a `(beta, D)` pair in the nested admissible regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub condition1: bool,
    pub condition1_bound: f64,
    /// `0 <= D < beta / 2`, with `0 < D < 1` at `beta = 2`.
    pub half_beta_region: bool,
    pub general: bool,
    pub old_condition: bool,
}

fn general_region(beta: f64, d: f64) -> bool {
    if beta < 2.0 {
        (0.0..beta).contains(&d)
    } else {
        d > 0.0 && d < 2.0
    }
}

/// Classifies an arbitrary pair; `beta` must lie in `(0, 2]`.
pub fn classify_pair(beta: f64, d: f64) -> RegionVerdict {
    let bound = condition1_bound(beta).unwrap_or(f64::NAN);
    let at_endpoint = beta >= 2.0;
    let condition1 = if at_endpoint {
        d > 0.0 && d < bound
    } else {
        d >= 0.0 && d < bound
    };
    let half_beta_region = if at_endpoint {
        d > 0.0 && d < 1.0
    } else {
        d >= 0.0 && d < beta / 2.0
    };
    RegionVerdict {
        condition1,
        condition1_bound: bound,
        half_beta_region,
        general: beta > 0.0 && beta <= 2.0 && general_region(beta, d),
        old_condition: d >= 0.0 && d < old_bound(beta),
    }
}

/// One sample of the region figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCurveRow {
    pub beta: f64,
    pub small: f64,
    pub middle: f64,
    pub large: f64,
    /// The active Condition-1 bound.
    pub condition1: f64,
    pub branch: Condition1Branch,
    pub old: f64,
    pub half_beta: f64,
    /// Upper edge of the general construction region.
    pub general: f64,
}

/// Samples every curve of the admissible-pairs figure on `(0, 2]`.
///
/// The grid is uniform, `beta_i = 2 i / n`, with both breakpoints inserted so
/// continuity of the piecewise bound can be checked directly.
pub fn emit_region_curves(beta_samples: usize) -> Result<Vec<RegionCurveRow>> {
    if beta_samples < 2 {
        return Err(IbcError::invalid("beta_samples", "need at least 2 samples"));
    }
    let mut betas: Vec<f64> = (1..=beta_samples)
        .map(|i| 2.0 * i as f64 / beta_samples as f64)
        .collect();
    betas.push(breakpoint_left());
    betas.push(breakpoint_right());
    betas.sort_by(f64::total_cmp);
    betas.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    betas
        .into_iter()
        .map(|beta| {
            Ok(RegionCurveRow {
                beta,
                small: small_branch(beta),
                middle: middle_branch(beta),
                large: large_branch(beta),
                condition1: condition1_bound(beta)?,
                branch: Condition1Branch::of(beta)?,
                old: old_bound(beta),
                half_beta: beta / 2.0,
                general: if beta < 2.0 { beta } else { 2.0 },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn u_map_values() {
        assert_eq!(u_map(1.0, 1.0, 0.0), 0.5);
        assert_eq!(u_map(0.0, 0.7, 0.3), -0.15);
        let beta = 0.8;
        let d = 0.2;
        assert!((u_map(2.0 / beta, beta, d) - (1.0 - d / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_eps(1.0, 0.0, 0.1).unwrap(), 1.0);
        let t = theta_eps(0.5, 0.45, 0.01).unwrap();
        assert!((t - 1.54 / 1.5).abs() < 1e-14);
        assert_eq!(theta_eps(2.0, 0.5, 0.01).unwrap(), 1.0);
    }

    #[test]
    fn theta_rejects_bad_eps() {
        assert!(theta_eps(1.0, 0.0, 0.0).is_err());
        assert!(theta_eps(1.0, 0.2, 0.8).is_err());
        assert!(theta_eps(2.0, 0.5, 1.6).is_err());
        assert!(theta_eps(2.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_map(0.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(q_map(0.5, 0.0, 1.0, 0.0), 0.0);
        assert!((q_map(0.9, 0.1, 1.0, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn condition1_examples() {
        assert!((condition1_bound(1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((condition1_bound(0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!((condition1_bound(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(condition1_bound(0.0).is_err());
        assert!(condition1_bound(2.1).is_err());
    }

    #[test]
    fn condition1_is_continuous() {
        for b in [breakpoint_left(), breakpoint_right()] {
            let below = condition1_bound(b - 1e-12).unwrap();
            let at = condition1_bound(b).unwrap();
            assert!((below - at).abs() < 1e-9, "{b}: {below} vs {at}");
        }
        assert!((small_branch(breakpoint_left()) - middle_branch(breakpoint_left())).abs() < 1e-12);
        assert!((middle_branch(breakpoint_right()) - large_branch(breakpoint_right())).abs() < 1e-12);
        assert!((large_branch(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((old_bound(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bound_function_examples() {
        let f = bound_functions(1.0, 1.0);
        assert_eq!((f.f4, f.f11, f.f12), (-1.0, 1.0, 0.5));
        assert!((f.f3 - 1.0 / 3.0).abs() < 1e-15);
        let f = bound_functions(1.2, 1.0);
        assert!((f.f3 - 0.4).abs() < 1e-15);
        assert!((f.f11 - 0.8).abs() < 1e-15);
        assert!((f.f12 - 0.4).abs() < 1e-15);
        let beta = 0.6;
        let f = bound_functions(2.0 / beta, beta);
        assert!((f.f11 - (2.0 - (2.0 / beta) * (2.0 - beta))).abs() < 1e-15);
    }

    #[test]
    fn max_f_examples() {
        let m = max_f(1.0).unwrap();
        assert!((m.value - 0.4).abs() < 1e-15 && (m.argmax - 1.2).abs() < 1e-15);
        let m = max_f(0.5).unwrap();
        assert!((m.value - 0.125).abs() < 1e-15 && (m.argmax - 1.25).abs() < 1e-15);
        let m = max_f(1.8).unwrap();
        assert!((m.value - 1.64 / 2.8).abs() < 1e-15 && m.argmax == 1.0);
        assert!(max_f(2.0).is_err());
    }

    #[test]
    fn search_agrees_with_closed_form() {
        for i in 1..200 {
            let beta = 0.01 * i as f64;
            let closed = max_f(beta).unwrap();
            let found = max_f_by_search(beta, 2000).unwrap();
            assert!((closed.value - found.value).abs() <= 1e-9, "beta {beta}");
        }
    }

    #[test]
    fn classify_examples() {
        let v = classify_pair(1.0, 0.0);
        assert!(v.condition1 && v.half_beta_region && v.general && v.old_condition);
        let v = classify_pair(2.0, 0.0);
        assert!(!v.condition1 && !v.general);
        let v = classify_pair(1.0, 0.45);
        assert!(!v.condition1 && v.half_beta_region);
        assert!(ModelParameters::nelson(0.0).classify().condition1);
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParameters::new(0.5, 1.0, 0.0, 1.0, 1.0).is_ok());
        assert!(ModelParameters::new(1.5, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParameters::new(0.5, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParameters::new(0.5, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParameters::new(0.5, 1.0, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParameters::new(0.5, 1.0, 0.0, 1.0, 0.0).is_err());
        // D = 0 is excluded at beta = 2
        assert!(ModelParameters::new(0.5, 2.0, 0.0, 1.0, 1.0).is_err());
        // D = 0.8 >= beta = 0.5
        assert!(ModelParameters::new(0.1, 0.5, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn region_rows_match_formulas() {
        let rows = emit_region_curves(200).unwrap();
        assert!(rows.iter().any(|r| r.beta == breakpoint_left()));
        let last = rows.last().unwrap();
        assert_eq!(last.beta, 2.0);
        assert_eq!(last.branch, Condition1Branch::Endpoint);
        assert!(emit_region_curves(1).is_err());
    }

    fn admissible() -> impl Strategy<Value = (f64, f64)> {
        (0.01f64..2.0).prop_flat_map(|beta| (Just(beta), 0.0..beta.min(1.0)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn theta_conclusions((beta, d) in admissible(), frac in 0.001f64..0.999) {
            let eps = frac * (beta - d);
            let theta = theta_eps(beta, d, eps).unwrap();
            prop_assert!(theta >= 1.0);
            prop_assert!(u_map(theta, beta, d) < 1.0);
            // The gap 1 + u(theta) - theta equals eps/2 on the upper branch.
            prop_assert!(1.0 + u_map(theta, beta, d) - theta >= eps / 2.0 - 1e-12);
        }

        #[test]
        fn regions_are_nested(beta in 0.001f64..=2.0, d in -0.1f64..2.0) {
            let v = classify_pair(beta, d);
            prop_assert!(!v.condition1 || v.half_beta_region);
            prop_assert!(!v.half_beta_region || v.general);
        }

        #[test]
        fn f4_inactive(beta in 0.01f64..1.999, t in 0.0f64..1.0) {
            let s = 1.0 + t * (2.0 / beta - 1.0);
            prop_assert!(bound_functions(s, beta).f4 < 0.0);
        }
    }
}
