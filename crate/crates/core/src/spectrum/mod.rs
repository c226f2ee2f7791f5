// SPDX-License-Identifier: Apache-2.0

//! Eigenmodes of `H_eff` with eigenvalues `λ = ε − iγ/2`, their `(n_e, M, F, F_g)` labels,
//! decay-rate grouping, and dark states as null spaces of the stacked lowering operators.

mod eigen;
mod report;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

pub use eigen::{eigen_block, BlockEigen};
pub use report::{classify, DegenerateGroup, ModeSummary, SpectrumReport};

use crate::dipolar::InteractionTensor;
use crate::error::Result;
use crate::fock::{casimir, snap_twice_f, total_f_operators, SectorBasis, SparseOperator};
use crate::linalg::{hermitian_eigen_groups, null_space};
use crate::liouvillian::{lowered_basis, lowering_family, recycling_rate};
use crate::scalar::Real;

/// `⟨F²⟩` must lie within this distance of `F(F+1)` for a label to be assigned.
pub const F_SNAP_TOLERANCE: f64 = 1e-6;
/// Relative singular-value threshold for dark-state null spaces.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-10;

/// Conserved labels of a mode; `None` marks an unresolved quantum number.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModeLabels {
    pub n_excited: usize,
    pub twice_m: Option<i32>,
    pub twice_f: Option<i32>,
    pub twice_fg: Option<i32>,
    /// `|⟨F²⟩ − F(F+1)|` for the nearest `F`.
    pub f_residual: f64,
}

/// One right eigenvector of `H_eff`.
#[derive(Clone, Debug)]
pub struct EigenMode<T: Real> {
    pub energy: T,
    pub decay: T,
    pub eigenvalue: Complex<T>,
    /// Unit-norm vector over the full basis.
    pub vector: DVector<Complex<T>>,
    pub labels: ModeLabels,
    /// `‖H v − λ v‖`.
    pub residual: T,
    /// Set when the sector containing the mode was numerically defective.
    pub defective: bool,
}

/// Group `(n_e, 2M)` blocks into sectors that `h` does not couple.
fn sectors<T: Real>(basis: &SectorBasis, h: &DMatrix<Complex<T>>) -> Vec<(usize, Option<i32>, Vec<usize>)> {
    let blocks: Vec<((usize, i32), Vec<usize>)> = basis.sector_blocks().into_iter().collect();
    let mut owner = vec![0usize; basis.dim()];
    for (b, (_, idx)) in blocks.iter().enumerate() {
        for &i in idx {
            owner[i] = b;
        }
    }
    let tol = T::lit(1e-13) * h.norm().max(T::one());
    let mut parent: Vec<usize> = (0..blocks.len()).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            if owner[r] != owner[c] {
                let z = h[(r, c)];
                if (z.re * z.re + z.im * z.im).sqrt() > tol {
                    let (a, b) = (root(&mut parent, owner[r]), root(&mut parent, owner[c]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for b in 0..blocks.len() {
        merged.entry(root(&mut parent, b)).or_default().push(b);
    }
    merged
        .into_values()
        .map(|members| {
            let n_e = blocks[members[0]].0 .0;
            let twice_m = if members.len() == 1 { Some(blocks[members[0]].0 .1) } else { None };
            let mut idx: Vec<usize> = members.iter().flat_map(|&b| blocks[b].1.clone()).collect();
            idx.sort_unstable();
            (n_e, twice_m, idx)
        })
        .collect()
}

fn sub<T: Real>(m: &DMatrix<Complex<T>>, idx: &[usize]) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

fn expectation<T: Real>(op: &DMatrix<Complex<T>>, v: &DVector<Complex<T>>) -> f64 {
    v.dotc(&(op * v)).re.as_f64()
}

/// Rotates an orthonormal set spanning an eigenspace onto eigenvectors of the Hermitian `op`.
fn diagonalize_within<T: Real>(
    op: &DMatrix<Complex<T>>,
    v: &DMatrix<Complex<T>>,
) -> Vec<DMatrix<Complex<T>>> {
    let projected = v.adjoint() * op * v;
    hermitian_eigen_groups(&projected).into_iter().map(|(_, w)| v * w).collect()
}

fn snap(value: f64) -> (Option<i32>, f64) {
    let t = snap_twice_f(value);
    let residual = (value - casimir(t)).abs();
    (if residual < F_SNAP_TOLERANCE { Some(t) } else { None }, residual)
}

/// All right eigenmodes of `h` on `basis`, sector by sector.
///
/// Sectors are the `(n_e, M)` blocks unless `h` couples different `M` (then the `n_e`
/// blocks). On a single-site basis, each numerically degenerate eigenspace is rotated onto
/// `F²` and then `F_g²` eigenvectors, and labels are snapped when within
/// [`F_SNAP_TOLERANCE`].
pub fn eigenmodes<T: Real>(basis: &SectorBasis, h: &DMatrix<Complex<T>>) -> Result<Vec<EigenMode<T>>> {
    let dim = basis.dim();
    let f_ops = if basis.site_count() == 1 {
        let ops = total_f_operators::<T>(basis)?;
        Some((ops.f_squared.to_dense(), ops.fg_squared.to_dense()))
    } else {
        None
    };
    let sector_list = sectors(basis, h);
    let per_sector: Vec<Result<Vec<EigenMode<T>>>> = sector_list
        .par_iter()
        .map(|(n_e, twice_m, idx)| {
            let block = sub(h, idx);
            let eig = eigen_block(&block)?;
            let embed = |local: &DVector<Complex<T>>| {
                let mut v = DVector::from_element(dim, Complex::new(T::zero(), T::zero()));
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = local[r];
                }
                v
            };
            let mut modes = Vec::with_capacity(idx.len());
            let n_clusters = eig.clusters.iter().copied().max().map_or(0, |m| m + 1);
            for cid in 0..n_clusters {
                let cols: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.clusters[k] == cid).collect();
                let v = DMatrix::from_fn(idx.len(), cols.len(), |r, c| eig.vectors[(r, cols[c])]);
                let mut labeled: Vec<(DVector<Complex<T>>, Option<i32>, Option<i32>, f64)> = Vec::new();
                match &f_ops {
                    Some((f2, fg2)) => {
                        let (f2s, fg2s) = (sub(f2, idx), sub(fg2, idx));
                        for fspace in diagonalize_within(&f2s, &v) {
                            for gspace in diagonalize_within(&fg2s, &fspace) {
                                for c in 0..gspace.ncols() {
                                    let local = gspace.column(c).into_owned();
                                    let (tf, res) = snap(expectation(&f2s, &local));
                                    let (tg, _) = snap(expectation(&fg2s, &local));
                                    labeled.push((local, tf, tg, res));
                                }
                            }
                        }
                    }
                    None => {
                        for c in 0..v.ncols() {
                            labeled.push((v.column(c).into_owned(), None, None, f64::NAN));
                        }
                    }
                }
                for (local, tf, tg, res) in labeled {
                    let lambda = local.dotc(&(&block * &local));
                    let residual = (&block * &local - &local * lambda).norm();
                    let mut vector = embed(&local);
                    crate::linalg::normalize_phase(&mut vector);
                    modes.push(EigenMode {
                        energy: lambda.re,
                        decay: -lambda.im * T::lit(2.0),
                        eigenvalue: lambda,
                        vector,
                        labels: ModeLabels {
                            n_excited: *n_e,
                            twice_m: *twice_m,
                            twice_f: tf,
                            twice_fg: tg,
                            f_residual: res,
                        },
                        residual,
                        defective: eig.defective,
                    });
                }
            }
            Ok(modes)
        })
        .collect();
    let mut out = Vec::with_capacity(dim);
    for r in per_sector {
        out.extend(r?);
    }
    Ok(out)
}

/// Decay-rate oracle `γ = Tr ℒ_rec(|k⟩⟨k|)` built once for a basis and tensor.
pub struct RecyclingOracle<T: Real> {
    lowering: Vec<SparseOperator<T>>,
    tensor: InteractionTensor<T>,
}

impl<T: Real> RecyclingOracle<T> {
    pub fn new(basis: &SectorBasis, tensor: &InteractionTensor<T>) -> Result<Self> {
        let mid = lowered_basis(basis)?;
        Ok(RecyclingOracle { lowering: lowering_family(basis, &mid)?, tensor: tensor.clone() })
    }

    /// Rate for a unit-norm state on the basis the oracle was built for.
    pub fn rate(&self, v: &DVector<Complex<T>>) -> T {
        recycling_rate(v, &self.lowering, &self.tensor)
    }
}

/// `γ_k = Tr ℒ_rec(|k⟩⟨k|)` for one mode.
pub fn decay_rate_via_recycling<T: Real>(mode: &EigenMode<T>, oracle: &RecyclingOracle<T>) -> T {
    oracle.rate(&mode.vector)
}

/// Orthonormal dark states of one `(n_e, M)` sector, as columns over the full basis.
#[derive(Clone, Debug)]
pub struct DarkSet<T: Real> {
    pub n_excited: usize,
    pub twice_m: i32,
    pub vectors: DMatrix<Complex<T>>,
}

impl<T: Real> DarkSet<T> {
    pub fn count(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Null space of the stacked `{𝒟⁻_{i,q}}` in every `(n_e ≥ 1, M)` sector of `basis`.
pub fn find_dark_states<T: Real>(basis: &SectorBasis) -> Result<Vec<DarkSet<T>>> {
    let mid = lowered_basis(basis)?;
    let lows: Vec<DMatrix<Complex<T>>> =
        lowering_family::<T>(basis, &mid)?.iter().map(|l| l.to_dense()).collect();
    let dim = basis.dim();
    let blocks: Vec<((usize, i32), Vec<usize>)> =
        basis.sector_blocks().into_iter().filter(|((ne, _), _)| *ne >= 1).collect();
    blocks
        .par_iter()
        .map(|((n_e, twice_m), idx)| {
            let mut rows: Vec<Vec<Complex<T>>> = Vec::new();
            for l in &lows {
                for r in 0..l.nrows() {
                    let row: Vec<Complex<T>> = idx.iter().map(|&c| l[(r, c)]).collect();
                    if row.iter().any(|z| z.re != T::zero() || z.im != T::zero()) {
                        rows.push(row);
                    }
                }
            }
            let stacked = DMatrix::from_fn(rows.len(), idx.len(), |r, c| rows[r][c]);
            let null = if rows.is_empty() {
                DMatrix::identity(idx.len(), idx.len())
            } else {
                null_space(&stacked, T::lit(NULL_SPACE_TOLERANCE))
            };
            let vectors = DMatrix::from_fn(dim, null.ncols(), |r, c| {
                idx.iter().position(|&i| i == r).map_or(Complex::new(T::zero(), T::zero()), |p| null[(p, c)])
            });
            Ok(DarkSet { n_excited: *n_e, twice_m: *twice_m, vectors })
        })
        .collect()
}

/// Total number of dark states per `n_e`.
pub fn dark_counts_by_excitation<T: Real>(sets: &[DarkSet<T>]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for s in sets {
        *out.entry(s.n_excited).or_default() += s.count();
    }
    out
}
