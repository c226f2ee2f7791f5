// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::{total_f_operators, SectorBasis};
use crate::error::Result;
use crate::linalg::{hermitian_eigen_groups, normalize_phase};
use crate::scalar::Real;

/// One vector of the joint eigenbasis of `(n_e, F², F_z, F_g²)`.
#[derive(Clone, Debug)]
pub struct CoupledState<T: Real> {
    pub n_excited: usize,
    pub twice_f: i32,
    pub twice_m: i32,
    pub twice_fg: i32,
    /// Number of vectors in the basis carrying the same four labels.
    pub residual_multiplicity: usize,
    pub vector: DVector<Complex<T>>,
}

/// Orthonormal basis labeled by `(n_e, F, M, F_g)`.
#[derive(Clone, Debug)]
pub struct CoupledBasis<T: Real> {
    pub states: Vec<CoupledState<T>>,
}

impl<T: Real> CoupledBasis<T> {
    /// States with the given labels; `None` acts as a wildcard.
    pub fn select(
        &self,
        n_excited: Option<usize>,
        twice_f: Option<i32>,
        twice_m: Option<i32>,
        twice_fg: Option<i32>,
    ) -> Vec<&CoupledState<T>> {
        self.states
            .iter()
            .filter(|s| n_excited.is_none_or(|v| v == s.n_excited))
            .filter(|s| twice_f.is_none_or(|v| v == s.twice_f))
            .filter(|s| twice_m.is_none_or(|v| v == s.twice_m))
            .filter(|s| twice_fg.is_none_or(|v| v == s.twice_fg))
            .collect()
    }
}

/// Twice the `F` whose `F(F+1)` is closest to `value`.
pub fn snap_twice_f(value: f64) -> i32 {
    let f = (-1.0 + (1.0 + 4.0 * value.max(0.0)).sqrt()) / 2.0;
    (2.0 * f).round() as i32
}

/// `F(F+1)` for twice-valued `F`.
pub fn casimir(twice_f: i32) -> f64 {
    let f = f64::from(twice_f) / 2.0;
    f * (f + 1.0)
}

fn submatrix<T: Real>(m: &DMatrix<Complex<T>>, idx: &[usize]) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Joint eigenbasis of `(n_e, F², F_z, F_g²)` on a single-site basis.
///
/// `F²` is diagonalized per `(n_e, M)` block, then `F_g²` inside each `F` eigenspace.
pub fn coupled_basis<T: Real>(basis: &SectorBasis) -> Result<CoupledBasis<T>> {
    let ops = total_f_operators::<T>(basis)?;
    let f2 = ops.f_squared.to_dense();
    let fg2 = ops.fg_squared.to_dense();
    let dim = basis.dim();
    let mut states = Vec::with_capacity(dim);
    for ((n_e, twice_m), idx) in basis.sector_blocks() {
        let block = submatrix(&f2, &idx);
        let vg = submatrix(&fg2, &idx);
        for (lambda, vecs) in hermitian_eigen_groups(&block) {
            let twice_f = snap_twice_f(lambda.as_f64());
            let projected = vecs.adjoint() * &vg * &vecs;
            for (mu, w) in hermitian_eigen_groups(&projected) {
                let twice_fg = snap_twice_f(mu.as_f64());
                let local = &vecs * &w;
                let residual = local.ncols();
                for c in 0..local.ncols() {
                    let mut full = DVector::from_element(dim, Complex::new(T::zero(), T::zero()));
                    for (r, &i) in idx.iter().enumerate() {
                        full[i] = local[(r, c)];
                    }
                    normalize_phase(&mut full);
                    states.push(CoupledState {
                        n_excited: n_e,
                        twice_f,
                        twice_m,
                        twice_fg,
                        residual_multiplicity: residual,
                        vector: full,
                    });
                }
            }
        }
    }
    Ok(CoupledBasis { states })
}
