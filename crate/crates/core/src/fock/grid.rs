use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::quadrature::gauss_legendre_on;

/// Node placement on `(0, Lambda_grid)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridScheme {
    /// `M` equal cells, one node at each cell centre.
    Midpoint,
    /// One `M`-point Gauss-Legendre rule on the whole interval.
    GaussLegendre,
    /// Dyadic panels `[0, L/2^(P-1)], ..., [L/2, L]` with a Gauss rule of
    /// `nodes_per_panel` points on each; `M` must be a multiple of it.
    Geometric { nodes_per_panel: usize },
}

impl Default for GridScheme {
    fn default() -> Self {
        Self::Geometric { nodes_per_panel: 4 }
    }
}

/// Radial nodes with weights that include the `4 pi r^2` measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lambda_grid: f64,
}

impl RadialGrid {
    /// Validated custom grid; `weights` must already include `4 pi r^2`.
    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>, lambda_grid: f64) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(IbcError::invalid("nodes", "need matching, non-empty nodes and weights"));
        }
        if !nodes.windows(2).all(|p| p[0] < p[1]) || nodes[0] <= 0.0 {
            return Err(IbcError::invalid("nodes", "must be positive and strictly increasing"));
        }
        if nodes[nodes.len() - 1] > lambda_grid {
            return Err(IbcError::invalid("nodes", "largest node exceeds Lambda_grid"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(IbcError::invalid("weights", "must be positive"));
        }
        Ok(Self {
            nodes,
            weights,
            lambda_grid,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes with `r <= lambda`.
    pub fn count_within(&self, lambda: f64) -> usize {
        self.nodes.iter().take_while(|&&r| r <= lambda).count()
    }
}

pub fn build_grid(m: usize, lambda_grid: f64, scheme: GridScheme) -> Result<RadialGrid> {
    if m < 2 {
        return Err(IbcError::invalid("M", format!("{m} < 2")));
    }
    if !(lambda_grid > 0.0 && lambda_grid.is_finite()) {
        return Err(IbcError::invalid("Lambda_grid", "must be finite and > 0"));
    }
    let (nodes, radial): (Vec<f64>, Vec<f64>) = match scheme {
        GridScheme::Midpoint => {
            let h = lambda_grid / m as f64;
            ((0..m).map(|i| (i as f64 + 0.5) * h).collect(), vec![h; m])
        }
        GridScheme::GaussLegendre => gauss_legendre_on(m, 0.0, lambda_grid),
        GridScheme::Geometric { nodes_per_panel } => {
            if nodes_per_panel == 0 || !m.is_multiple_of(nodes_per_panel) {
                return Err(IbcError::invalid(
                    "scheme",
                    format!("M = {m} is not a multiple of nodes_per_panel = {nodes_per_panel}"),
                ));
            }
            let panels = m / nodes_per_panel;
            let mut nodes = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            let mut lo = 0.0;
            for p in 0..panels {
                let hi = lambda_grid / 2f64.powi((panels - 1 - p) as i32);
                let (x, w) = gauss_legendre_on(nodes_per_panel, lo, hi);
                nodes.extend(x);
                weights.extend(w);
                lo = hi;
            }
            (nodes, weights)
        }
    };
    let weights = nodes.iter().zip(&radial).map(|(r, w)| 4.0 * PI * r * r * w).collect();
    RadialGrid::from_nodes(nodes, weights, lambda_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_two_nodes() {
        let g = build_grid(2, 1.0, GridScheme::Midpoint).unwrap();
        assert_eq!(g.nodes, vec![0.25, 0.75]);
        let vol: f64 = g.weights.iter().sum();
        // midpoint rule for 4 pi r^2 on [0, 1]: 4 pi (1/16 + 9/16) / 2
        assert!((vol - 4.0 * PI * 10.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_schemes_integrate_polynomials() {
        for scheme in [GridScheme::GaussLegendre, GridScheme::default()] {
            let g = build_grid(32, 32.0, scheme).unwrap();
            let vol: f64 = g.weights.iter().sum();
            let exact = 4.0 * PI * 32f64.powi(3) / 3.0;
            assert!((vol - exact).abs() < 1e-11 * exact);
            // int r^2 d^3k = 4 pi Lambda^5 / 5
            let m2: f64 = g.nodes.iter().zip(&g.weights).map(|(r, w)| r * r * w).sum();
            let exact = 4.0 * PI * 32f64.powi(5) / 5.0;
            assert!((m2 - exact).abs() < 1e-11 * exact);
        }
    }

    #[test]
    fn geometric_panel_boundaries() {
        let g = build_grid(32, 32.0, GridScheme::default()).unwrap();
        assert_eq!(g.count_within(4.0), 20);
        assert_eq!(g.count_within(32.0), 32);
        assert!(g.nodes[0] > 0.0 && g.nodes[0] < 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_grid(0, 1.0, GridScheme::Midpoint).is_err());
        assert!(build_grid(1, 1.0, GridScheme::Midpoint).is_err());
        assert!(build_grid(6, 1.0, GridScheme::Geometric { nodes_per_panel: 4 }).is_err());
        assert!(build_grid(4, -1.0, GridScheme::Midpoint).is_err());
        assert!(RadialGrid::from_nodes(vec![1.0, 0.5], vec![1.0, 1.0], 2.0).is_err());
    }
}
