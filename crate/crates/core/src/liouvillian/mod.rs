// SPDX-License-Identifier: Apache-2.0

//! Master-equation generators: `H_eff = −Σ 𝒢^{ij}_{qq'} 𝒟⁺_{i,q} 𝒟⁻_{j,q'}`, the recycling
//! term `ℒ_rec(ρ) = 2 Σ I^{ij}_{qq'} 𝒟⁻_{j,q'} ρ 𝒟⁺_{i,q}`, and the coherent drives.

mod drives;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;

pub use drives::{
    pauli_reference_h_eff, polarization, raman_couplings, raman_hamiltonian,
    single_laser_hamiltonian, zeeman_hamiltonian, DriveSpec, RamanDriveSpec, ZeemanDriveSpec,
};

use crate::dipolar::InteractionTensor;
use crate::error::{Error, Result};
use crate::fock::{lowering_operator, SectorBasis, SectorConstraints, SparseOperator};
use crate::scalar::{c, Real};

/// Basis reached by one application of `𝒟⁻` from `basis` (n_e lowered by one, M free).
pub fn lowered_basis(basis: &SectorBasis) -> Result<SectorBasis> {
    let c = basis.constraints();
    let n_excited = c.n_excited.map(|ne| ne.saturating_sub(1));
    basis.with_constraints(SectorConstraints { n_excited, twice_m: None })
}

/// `𝒟⁻_{i,q}` for every `(i, q)`, ordered by the composite index `3i + q + 1`.
pub fn lowering_family<T: Real>(from: &SectorBasis, to: &SectorBasis) -> Result<Vec<SparseOperator<T>>> {
    let mut out = Vec::with_capacity(3 * from.site_count());
    for site in 0..from.site_count() {
        for q in -1..=1 {
            out.push(lowering_operator(site, q, from, to)?);
        }
    }
    Ok(out)
}

fn check_sites<T: Real>(basis: &SectorBasis, tensor: &InteractionTensor<T>) -> Result<()> {
    if basis.site_count() != tensor.site_count() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} sites, tensor {}",
            basis.site_count(),
            tensor.site_count()
        )));
    }
    Ok(())
}

fn accumulate_products<T: Real>(
    out: &mut DMatrix<Complex<T>>,
    lows: &[SparseOperator<T>],
    weights: &DMatrix<Complex<T>>,
    scale: Complex<T>,
) -> Result<()> {
    for a in 0..lows.len() {
        let la_dag = lows[a].adjoint();
        for b in 0..lows.len() {
            let w = weights[(a, b)];
            if w.is_zero() || lows[a].nnz() == 0 || lows[b].nnz() == 0 {
                continue;
            }
            let prod = la_dag.matmul(&lows[b])?;
            for &(r, col, v) in prod.entries() {
                out[(r, col)] += v * w * scale;
            }
        }
    }
    Ok(())
}

/// Effective non-Hermitian Hamiltonian on `basis`.
///
/// Products that leave `basis` (e.g. `M`-changing terms on an `M`-restricted sector) are
/// projected out.
pub fn build_h_eff<T: Real>(basis: &SectorBasis, tensor: &InteractionTensor<T>) -> Result<DMatrix<Complex<T>>> {
    check_sites(basis, tensor)?;
    let mid = lowered_basis(basis)?;
    let lows = lowering_family::<T>(basis, &mid)?;
    let i = c(T::zero(), T::one());
    let g = tensor.real_matrix() + tensor.imag_matrix() * i;
    let mut h = DMatrix::from_element(basis.dim(), basis.dim(), Complex::zero());
    accumulate_products(&mut h, &lows, &g, c(-T::one(), T::zero()))?;
    Ok(h)
}

/// One recycling term `2·weight·𝒟⁻_b ρ 𝒟⁺_a`.
#[derive(Clone, Copy, Debug)]
pub struct JumpTerm<T> {
    pub a: usize,
    pub b: usize,
    pub weight: Complex<T>,
}

/// Decay rate `Tr ℒ_rec(|v⟩⟨v|) = 2 Σ I_ab ⟨𝒟⁻_a v|𝒟⁻_b v⟩` of a normalized state.
pub fn recycling_rate<T: Real>(
    v: &DVector<Complex<T>>,
    lows: &[SparseOperator<T>],
    tensor: &InteractionTensor<T>,
) -> T {
    let w: Vec<DVector<Complex<T>>> = lows.iter().map(|l| l.apply(v)).collect();
    let im = tensor.imag_matrix();
    let mut total: Complex<T> = Complex::zero();
    for a in 0..w.len() {
        for b in 0..w.len() {
            let weight = im[(a, b)];
            if !weight.is_zero() {
                total += weight * w[a].dotc(&w[b]);
            }
        }
    }
    total.re * T::lit(2.0)
}

/// Everything needed to evaluate the master equation on a fixed-`n` basis.
#[derive(Clone, Debug)]
pub struct GeneratorSet<T: Real> {
    pub h_eff: DMatrix<Complex<T>>,
    pub h_drive: DMatrix<Complex<T>>,
    /// `𝒟⁻_{i,q}` acting within the basis, indexed by `3i + q + 1`.
    pub lowering: Vec<SparseOperator<T>>,
    /// Non-zero recycling weights `I_ab`.
    pub jumps: Vec<JumpTerm<T>>,
}

impl<T: Real> GeneratorSet<T> {
    /// Generators on a basis that resolves neither `n_e` nor `M`, as recycling mixes both.
    pub fn new(
        basis: &SectorBasis,
        tensor: &InteractionTensor<T>,
        h_drive: Option<DMatrix<Complex<T>>>,
    ) -> Result<Self> {
        check_sites(basis, tensor)?;
        if basis.constraints() != SectorConstraints::none() {
            return Err(Error::Config(
                "master-equation generators need a basis without n_e or M constraints".into(),
            ));
        }
        let d = basis.dim();
        let h_drive = h_drive.unwrap_or_else(|| DMatrix::from_element(d, d, Complex::zero()));
        if h_drive.shape() != (d, d) {
            return Err(Error::DimensionMismatch("drive Hamiltonian has the wrong shape".into()));
        }
        let h_eff = build_h_eff(basis, tensor)?;
        let lowering = lowering_family::<T>(basis, basis)?;
        let im = tensor.imag_matrix();
        let mut jumps = Vec::new();
        for a in 0..im.nrows() {
            for b in 0..im.ncols() {
                if !im[(a, b)].is_zero() && lowering[a].nnz() > 0 && lowering[b].nnz() > 0 {
                    jumps.push(JumpTerm { a, b, weight: im[(a, b)] });
                }
            }
        }
        Ok(GeneratorSet { h_eff, h_drive, lowering, jumps })
    }

    pub fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    /// `H_eff + H_drive`.
    pub fn hamiltonian(&self) -> DMatrix<Complex<T>> {
        &self.h_eff + &self.h_drive
    }

    /// `ℒ_rec(ρ)`.
    pub fn recycling(&self, rho: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
        let d = self.dim();
        let n = self.lowering.len();
        let mut lb_rho: Vec<Option<DMatrix<Complex<T>>>> = vec![None; n];
        let mut y: Vec<Option<DMatrix<Complex<T>>>> = vec![None; n];
        for j in &self.jumps {
            if lb_rho[j.b].is_none() {
                lb_rho[j.b] = Some(sparse_times_dense(&self.lowering[j.b], rho));
            }
            let term = lb_rho[j.b].as_ref().unwrap() * (j.weight * T::lit(2.0));
            match &mut y[j.a] {
                Some(acc) => *acc += term,
                slot => *slot = Some(term),
            }
        }
        let mut out = DMatrix::from_element(d, d, Complex::zero());
        for (a, ya) in y.iter().enumerate() {
            if let Some(ya) = ya {
                out += dense_times_sparse_adjoint(ya, &self.lowering[a]);
            }
        }
        out
    }
}

pub(crate) fn sparse_times_dense<T: Real>(
    op: &SparseOperator<T>,
    m: &DMatrix<Complex<T>>,
) -> DMatrix<Complex<T>> {
    let mut out = DMatrix::from_element(op.rows(), m.ncols(), Complex::zero());
    for &(r, k, v) in op.entries() {
        for col in 0..m.ncols() {
            out[(r, col)] += v * m[(k, col)];
        }
    }
    out
}

pub(crate) fn dense_times_sparse_adjoint<T: Real>(
    m: &DMatrix<Complex<T>>,
    op: &SparseOperator<T>,
) -> DMatrix<Complex<T>> {
    let mut out = DMatrix::from_element(m.nrows(), op.rows(), Complex::zero());
    for &(cidx, k, v) in op.entries() {
        let vc = v.conj();
        for r in 0..m.nrows() {
            out[(r, cidx)] += m[(r, k)] * vc;
        }
    }
    out
}

/// `dρ/dt = −i(Hρ − ρH†) + ℒ_rec(ρ)` with `H = H_eff + H_drive`.
pub fn lindblad_rhs<T: Real>(rho: &DMatrix<Complex<T>>, gens: &GeneratorSet<T>) -> Result<DMatrix<Complex<T>>> {
    if rho.shape() != (gens.dim(), gens.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {:?}, generators act on dimension {}",
            rho.shape(),
            gens.dim()
        )));
    }
    let h = gens.hamiltonian();
    let minus_i = c(T::zero(), -T::one());
    let coherent = (&h * rho - rho * h.adjoint()) * minus_i;
    Ok(coherent + gens.recycling(rho))
}

/// One classic fourth-order Runge–Kutta step of the master equation.
pub fn rk4_step<T: Real>(
    rho: &DMatrix<Complex<T>>,
    gens: &GeneratorSet<T>,
    dt: T,
) -> Result<DMatrix<Complex<T>>> {
    let half = dt * T::lit(0.5);
    let k1 = lindblad_rhs(rho, gens)?;
    let k2 = lindblad_rhs(&(rho + &k1 * c(half, T::zero())), gens)?;
    let k3 = lindblad_rhs(&(rho + &k2 * c(half, T::zero())), gens)?;
    let k4 = lindblad_rhs(&(rho + &k3 * c(dt, T::zero())), gens)?;
    let sixth = dt / T::lit(6.0);
    Ok(rho + (k1 + (k2 + k3) * c(T::lit(2.0), T::zero()) + k4) * c(sixth, T::zero()))
}
