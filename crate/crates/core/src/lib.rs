// SPDX-License-Identifier: Apache-2.0

//! Collective decay of several multilevel fermions per trap site.
//!
//! Modules, bottom-up:
//! - [`angular`]: exact Clebsch–Gordan algebra and identical-fermion multiplets
//! - [`fock`]: antisymmetric bases and second-quantized operators
//! - [`dipolar`]: Green's tensor, onsite trap integral, `R`/`I` coefficients
//! - [`liouvillian`]: effective Hamiltonian, recycling term, drives
//! - [`spectrum`]: eigenmodes, decay rates, numerical dark states
//! - [`darkcensus`]: analytic dark-state counting and superposition dark states
//! - [`dynamics`]: driven master-equation integration and preparation experiments
//!
//! The algebraic modules are generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! `f64`. Dynamics is `f64` only.

pub mod angular;
pub mod darkcensus;
pub mod dipolar;
pub mod dynamics;
mod error;
pub mod fock;
pub mod linalg;
pub mod liouvillian;
mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type Complex64 = num_complex::Complex<f64>;
pub type SparseOperatorF64 = fock::SparseOperator<f64>;
pub type SparseOperatorF32 = fock::SparseOperator<f32>;
pub type InteractionTensorF64 = dipolar::InteractionTensor<f64>;
pub type GeneratorSetF64 = liouvillian::GeneratorSet<f64>;
pub type CoupledBasisF64 = fock::CoupledBasis<f64>;
