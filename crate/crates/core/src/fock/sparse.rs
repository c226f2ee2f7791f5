// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex sparse matrix in coordinate form, sorted by `(row, col)` with merged duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T: Real> {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseOperator { rows, cols, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, dim, (0..dim).map(|i| (i, i, Complex::new(T::one(), T::zero()))))
            .expect("diagonal indices in range")
    }

    /// Builds an operator, summing duplicate coordinates and dropping exact zeros.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex<T>)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}×{cols}"
                )));
            }
            *map.entry((r, c)).or_insert_with(Complex::zero) += v;
        }
        let entries = map.into_iter().filter(|(_, v)| !v.is_zero()).map(|((r, c), v)| (r, c, v)).collect();
        Ok(SparseOperator { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex<T>)] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(r, c)))
            .map(|k| self.entries[k].2)
            .unwrap_or_else(|_| Complex::zero())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        entries.sort_by_key(|a| (a.0, a.1));
        SparseOperator { rows: self.cols, cols: self.rows, entries }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let entries =
            self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).filter(|e| !e.2.is_zero()).collect();
        SparseOperator { rows: self.rows, cols: self.cols, entries }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("operator shapes differ".into()));
        }
        Self::from_triplets(
            self.rows,
            self.cols,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut by_row: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let triplets = self.entries.iter().flat_map(|&(r, k, a)| {
            by_row[k].iter().map(move |&(c, b)| (r, c, a * b))
        });
        Self::from_triplets(self.rows, other.cols, triplets.collect::<Vec<_>>())
    }

    pub fn apply(&self, v: &DVector<Complex<T>>) -> DVector<Complex<T>> {
        assert_eq!(v.len(), self.cols, "vector length must equal operator columns");
        let mut out = DVector::from_element(self.rows, Complex::zero());
        for &(r, c, a) in &self.entries {
            out[r] += a * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let mut m = DMatrix::from_element(self.rows, self.cols, Complex::zero());
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| acc.max(modulus(e.2)))
    }
}

pub(crate) fn modulus<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}
