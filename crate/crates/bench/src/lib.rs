//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use nelson_ibc::{build_grid, FockSpace, GridScheme, Model};

/// The s-wave space used by the acceptance runs: `M = 32`, `Lambda = 32`,
/// 16 angular nodes, two bosons.
pub fn desk_space() -> Arc<FockSpace> {
    space(32, 16)
}

pub fn space(m: usize, angular: usize) -> Arc<FockSpace> {
    let grid = build_grid(m, 32.0, GridScheme::default()).expect("valid grid");
    Arc::new(FockSpace::s_wave(&Model::nelson_massless(), &grid, angular, 2).expect("valid space"))
}
