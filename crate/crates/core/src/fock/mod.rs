// SPDX-License-Identifier: Apache-2.0

//! Antisymmetric Fock spaces of `n` fermions per site and their second-quantized operators.
//!
//! Per-site level order is g levels by ascending `m`, then e levels by ascending `m`.
//! Fermionic signs count occupied levels of the same site only; operators on different
//! sites commute.

mod basis;
mod coupled;
mod operators;
mod sparse;

pub use basis::{FockState, Orbital, SectorBasis, SectorConstraints, SingleParticleLevel};
pub use coupled::{casimir, coupled_basis, snap_twice_f, CoupledBasis, CoupledState};
pub use operators::{
    annihilation, creation, f_plus, lowering_operator, number_excited, one_body,
    raising_operator, sigma, total_f_operators, total_m, TotalAngularMomentum,
};
pub use sparse::SparseOperator;
pub(crate) use sparse::modulus;

use crate::angular::LevelStructure;
use crate::error::Result;

/// Builds a [`SectorBasis`]; see [`SectorBasis::build`].
pub fn build_sector(
    ls: LevelStructure,
    n: usize,
    site_count: usize,
    constraints: SectorConstraints,
) -> Result<SectorBasis> {
    SectorBasis::build(ls, n, site_count, constraints)
}
