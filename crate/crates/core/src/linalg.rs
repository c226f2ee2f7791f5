// SPDX-License-Identifier: Apache-2.0

//! Dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::fock::modulus;
use crate::scalar::Real;

pub(crate) fn degeneracy_tolerance<T: Real>(scale: T) -> T {
    let rel = T::lit(1e-9).max(T::default_epsilon() * T::lit(1e4));
    rel * scale.max(T::one())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues grouped into degenerate sets.
///
/// Groups come in ascending order; consecutive eigenvalues closer than `1e-9·max(‖A‖, 1)`
/// share a group. Each entry holds the mean eigenvalue and an orthonormal set of columns.
pub fn hermitian_eigen_groups<T: Real>(a: &DMatrix<Complex<T>>) -> Vec<(T, DMatrix<Complex<T>>)> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let tol = degeneracy_tolerance(a.norm());
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if eig.eigenvalues[i] - eig.eigenvalues[*g.last().unwrap()] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let mean = g.iter().fold(T::zero(), |acc, &i| acc + eig.eigenvalues[i])
                / T::lit(g.len() as f64);
            let cols = DMatrix::from_fn(n, g.len(), |r, c| eig.eigenvectors[(r, g[c])]);
            (mean, cols)
        })
        .collect()
}

/// Multiplies `v` by a phase so that its first significant component is real and positive.
pub fn normalize_phase<T: Real>(v: &mut DVector<Complex<T>>) {
    let max = v.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z)));
    if max == T::zero() {
        return;
    }
    let thresh = max * T::lit(1e-6);
    if let Some(z) = v.iter().copied().find(|z| modulus(*z) > thresh) {
        let r = modulus(z);
        let phase = Complex::new(z.re / r, -z.im / r);
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Right null space of `a`: singular values below `rel_tol·σ_max` count as zero.
///
/// Columns form a deterministic orthonormal basis (see [`canonical_subspace_basis`]).
/// A zero matrix has the whole space as null space.
pub fn null_space<T: Real>(a: &DMatrix<Complex<T>>, rel_tol: T) -> DMatrix<Complex<T>> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.expect("v_t requested");
    let smax = sv.iter().fold(T::zero(), |acc, &s| acc.max(s));
    let thresh = rel_tol * smax;
    let null_rows: Vec<usize> = if smax == T::zero() {
        (0..n).collect()
    } else {
        (0..sv.len()).filter(|&i| sv[i] < thresh).collect()
    };
    if null_rows.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let raw = DMatrix::from_fn(n, null_rows.len(), |r, c| vt[(null_rows[c], r)].conj());
    canonical_subspace_basis(&raw)
}

/// Deterministic orthonormal basis of the span of the orthonormal columns of `v`.
///
/// Canonical unit vectors are projected onto the subspace in index order and orthogonalized
/// by modified Gram–Schmidt; every accepted vector gets its phase fixed by
/// [`normalize_phase`]. The result depends only on the subspace, not on the input basis.
pub fn canonical_subspace_basis<T: Real>(v: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let (n, k) = v.shape();
    let mut accepted: Vec<DVector<Complex<T>>> = Vec::with_capacity(k);
    let accept = T::lit(1e-4);
    for i in 0..n {
        if accepted.len() == k {
            break;
        }
        // Projection of e_i onto the span: V V† e_i = V (row i of V)†.
        let coeffs = DVector::from_fn(k, |c, _| v[(i, c)].conj());
        let mut w = v * coeffs;
        for _ in 0..2 {
            for u in &accepted {
                let overlap = u.dotc(&w);
                w -= u * overlap;
            }
        }
        let norm = w.norm();
        if norm > accept {
            w /= Complex::new(norm, T::zero());
            normalize_phase(&mut w);
            accepted.push(w);
        }
    }
    let cols = accepted.len();
    DMatrix::from_fn(n, cols, |r, c| accepted[c][r])
}

/// Unitary rotation `[[c, s], [-s̄, c]]` that maps `(x, y)` to `(r, 0)`.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let (ax, ay) = (modulus(x), modulus(y));
    if ay == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    if ax == T::zero() {
        return (T::zero(), y.conj() / Complex::new(ay, T::zero()));
    }
    let r = ax.hypot(ay);
    (ax / r, (x / Complex::new(ax, T::zero())) * y.conj() / Complex::new(r, T::zero()))
}

/// Eigenvalue of the 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = Complex::new(T::lit(0.5), T::zero());
    let p = (a - d) * half;
    let root = nalgebra::ComplexField::sqrt(p * p + b * c);
    let (l1, l2) = (d + p + root, d + p - root);
    if modulus(l1 - d) <= modulus(l2 - d) {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of a general complex matrix by single-shift Hessenberg QR.
///
/// Wilkinson shifts with an exceptional shift every tenth sweep without deflation. Returns
/// `None` if some eigenvalue needs more than `30·n` sweeps.
pub fn complex_eigenvalues<T: Real>(a: &DMatrix<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let n = a.nrows();
    let scale = a.iter().fold(T::zero(), |m, z| m.max(modulus(*z)));
    if n == 0 || scale == T::zero() {
        return Some(vec![Complex::new(T::zero(), T::zero()); n]);
    }
    let cs = Complex::new(scale, T::zero());
    let mut h = (a / cs).hessenberg().h();
    let eps = T::default_epsilon();
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    loop {
        let mut lo = hi;
        while lo > 0 {
            let off = modulus(h[(lo, lo - 1)]);
            let diag = modulus(h[(lo, lo)]) + modulus(h[(lo - 1, lo - 1)]);
            if off <= eps * diag.max(eps) {
                h[(lo, lo - 1)] = Complex::new(T::zero(), T::zero());
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > 30 * n {
            return None;
        }
        let shift = if sweeps.is_multiple_of(10) {
            h[(hi, hi)] + Complex::new(T::lit(0.75) * modulus(h[(hi, hi - 1)]), T::zero())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let cc = Complex::new(c, T::zero());
            let first = if k > lo { k - 1 } else { lo };
            for j in first..=hi {
                let (u, v) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = cc * u + s * v;
                h[(k + 1, j)] = cc * v - s.conj() * u;
            }
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let (u, v) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = cc * u + s.conj() * v;
                h[(i, k + 1)] = cc * v - s * u;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Some((0..n).map(|i| h[(i, i)] * cs).collect())
}
