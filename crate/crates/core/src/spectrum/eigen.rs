// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fock::modulus;
use crate::linalg::complex_eigenvalues;
use crate::scalar::{cr, Real};

/// Right eigen-decomposition of one dense block.
#[derive(Clone, Debug)]
pub struct BlockEigen<T: Real> {
    pub values: Vec<Complex<T>>,
    /// Unit-norm right eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<Complex<T>>,
    /// Cluster id of every eigenvalue; equal ids mean numerically degenerate.
    pub clusters: Vec<usize>,
    /// Largest `‖Av − λv‖` over all returned vectors.
    pub max_residual: T,
    /// Set when a cluster has fewer independent eigenvectors than its size.
    pub defective: bool,
}

fn cluster_eigenvalues<T: Real>(values: &[Complex<T>], tol: T) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if modulus(values[i] - values[j]) <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Eigenvalues by Hessenberg QR; eigenvectors of each cluster of numerically equal
/// eigenvalues from the smallest right singular vectors of `A − λ̄I`.
pub fn eigen_block<T: Real>(a: &DMatrix<Complex<T>>) -> Result<BlockEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("eigen-decomposition needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(BlockEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
            clusters: Vec::new(),
            max_residual: T::zero(),
            defective: false,
        });
    }
    let scale = a.norm().max(T::one());
    let raw: Vec<Complex<T>> = if n == 1 {
        vec![a[(0, 0)]]
    } else {
        complex_eigenvalues(a).ok_or_else(|| Error::Eigen("QR iteration did not converge".into()))?
    };
    let cluster_tol = T::lit(1e-8) * scale;
    let defect_tol = T::lit(1e-6) * scale;
    let groups = cluster_eigenvalues(&raw, cluster_tol);
    let mut values = Vec::with_capacity(n);
    let mut clusters = Vec::with_capacity(n);
    let mut columns: Vec<DVector<Complex<T>>> = Vec::with_capacity(n);
    let mut defective = false;
    for (cid, g) in groups.iter().enumerate() {
        let k = g.len();
        let mean = g.iter().fold(cr(T::zero()), |acc, &i| acc + raw[i]) / cr(T::lit(k as f64));
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= mean;
        }
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
        if svd.singular_values[order[k - 1]] > defect_tol {
            defective = true;
        }
        for &row in order.iter().take(k) {
            let v = DVector::from_fn(n, |r, _| vt[(row, r)].conj());
            let lambda = v.dotc(&(a * &v));
            values.push(lambda);
            clusters.push(cid);
            columns.push(v);
        }
    }
    let vectors = DMatrix::from_fn(n, n, |r, col| columns[col][r]);
    let mut max_residual = T::zero();
    for (col, v) in columns.iter().enumerate() {
        let res = (a * v - v * values[col]).norm();
        max_residual = max_residual.max(res);
    }
    Ok(BlockEigen { values, vectors, clusters, max_residual, defective })
}
