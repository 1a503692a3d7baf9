//! Truncated symmetric Fock space over momentum grids and the free and
//! cutoff operators acting on it.

pub mod grid;
pub mod ops;
pub mod space;
pub mod vector;

pub use grid::{build_grid, GridScheme, RadialGrid};
pub use ops::{
    apply_annihilation, apply_creation, apply_field_energy, apply_free, apply_number, build_h_lambda, OperatorHandle,
};
pub use space::{BosonMode, FockSpace, SectorInfo, SpaceKind};
pub use vector::FockVector;
