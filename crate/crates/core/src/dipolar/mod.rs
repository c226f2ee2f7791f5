// SPDX-License-Identifier: Apache-2.0

//! Dipolar coupling coefficients: the vacuum Green's tensor, the onsite coefficients of a
//! Gaussian trap, and the polarization-projected `R`/`I` tensors.
//!
//! Spherical unit vectors are `e_0 = e_z` and `e_± = ∓(e_x ± i e_y)/√2`.

mod onsite;
pub mod quadrature;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use onsite::{
    maximize_log, onsite_maxima, onsite_tensors, onsite_u, shape_integral, u_scaling, u_tilde,
    OnsiteMaxima,
};

use crate::error::{Error, Result};
use crate::scalar::{c, cr, Real};

/// Transition linewidth (the rate unit) and wavenumber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec<T> {
    pub gamma: T,
    pub k0: T,
}

impl<T: Real> Default for TransitionSpec<T> {
    fn default() -> Self {
        TransitionSpec { gamma: T::one(), k0: T::one() }
    }
}

impl<T: Real> TransitionSpec<T> {
    pub fn new(gamma: T, k0: T) -> Result<Self> {
        if gamma <= T::zero() || k0 <= T::zero() {
            return Err(Error::Domain("gamma and k0 must be positive".into()));
        }
        Ok(TransitionSpec { gamma, k0 })
    }
}

/// Axially symmetric Gaussian trap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapGeometry<T: Real> {
    pub ell_perp: T,
    pub ell_z: T,
    /// Unit vector `e^L_z` along the tight (lattice) axis.
    pub lattice_axis: Vector3<T>,
}

impl<T: Real> TrapGeometry<T> {
    pub fn new(ell_perp: T, ell_z: T, lattice_axis: Vector3<T>) -> Result<Self> {
        if ell_perp <= T::zero() || ell_z <= T::zero() {
            return Err(Error::Domain("trap widths must be positive".into()));
        }
        let norm = lattice_axis.norm();
        if norm == T::zero() {
            return Err(Error::Domain("lattice axis must be nonzero".into()));
        }
        Ok(TrapGeometry { ell_perp, ell_z, lattice_axis: lattice_axis / norm })
    }

    /// Widths from depths in recoil units: `ℓ_n² = λ_L²/(8π²√ν_n)`.
    pub fn from_depths(lambda_l: T, nu_z: T, nu_perp: T, lattice_axis: Vector3<T>) -> Result<Self> {
        if lambda_l <= T::zero() || nu_z <= T::zero() || nu_perp <= T::zero() {
            return Err(Error::Domain("wavelength and depths must be positive".into()));
        }
        let width = |nu: T| {
            let pi = T::pi();
            (lambda_l * lambda_l / (T::lit(8.0) * pi * pi * nu.sqrt())).sqrt()
        };
        Self::new(width(nu_perp), width(nu_z), lattice_axis)
    }

    /// Isotropic trap of width `ell` (gives `U = 0`).
    pub fn isotropic(ell: T) -> Self {
        TrapGeometry { ell_perp: ell, ell_z: ell, lattice_axis: Vector3::z() }
    }
}

/// Trap positions (in units of `1/k_0` when `k_0 = 1`) and the common quantization axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteArray<T: Real> {
    pub positions: Vec<Vector3<T>>,
    pub quantization_axis: Vector3<T>,
}

impl<T: Real> SiteArray<T> {
    pub fn new(positions: Vec<Vector3<T>>, quantization_axis: Vector3<T>) -> Result<Self> {
        let norm = quantization_axis.norm();
        if norm == T::zero() {
            return Err(Error::Domain("quantization axis must be nonzero".into()));
        }
        if positions.is_empty() {
            return Err(Error::Domain("at least one site is required".into()));
        }
        Ok(SiteArray { positions, quantization_axis: quantization_axis / norm })
    }

    /// One site at the origin, quantized along `z`.
    pub fn single() -> Self {
        SiteArray { positions: vec![Vector3::zeros()], quantization_axis: Vector3::z() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Spherical basis `[e_{-1}, e_0, e_{+1}]` built from a quantization axis.
pub fn spherical_basis<T: Real>(axis: &Vector3<T>) -> [Vector3<Complex<T>>; 3] {
    let ez = axis.normalize();
    let reference =
        if ez.dot(&Vector3::y()).abs() < T::lit(0.9) { Vector3::y() } else { Vector3::x() };
    let ex = reference.cross(&ez).normalize();
    let ey = ez.cross(&ex);
    let s = T::one() / T::lit(2.0).sqrt();
    let complexify = |v: &Vector3<T>| v.map(cr);
    let (cx, cy) = (complexify(&ex), complexify(&ey));
    let i = c(T::zero(), T::one());
    let plus = (cx + cy * i) * cr(-s);
    let minus = (cx - cy * i) * cr(s);
    [minus, complexify(&ez), plus]
}

/// `e_q^* · v` without conjugating `v`.
pub fn spherical_component<T: Real>(e_q: &Vector3<Complex<T>>, v: &Vector3<Complex<T>>) -> Complex<T> {
    e_q.iter().zip(v.iter()).fold(cr(T::zero()), |acc, (a, b)| acc + a.conj() * b)
}

fn small_x_series<T: Real>(x: T) -> T {
    // (x cos x − sin x)/x³ = Σ_{k≥1} (−1)^k 2k x^{2k−2}/(2k+1)!
    let x2 = x * x;
    let mut sum = T::zero();
    let mut power = T::one();
    let mut fact = T::lit(6.0);
    for k in 1..=12 {
        let sign = if k % 2 == 1 { -T::one() } else { T::one() };
        sum += sign * T::lit(2.0 * k as f64) * power / fact;
        power *= x2;
        fact *= T::lit(((2 * k + 2) * (2 * k + 3)) as f64);
    }
    sum
}

/// Dyadic Green's tensor of a point dipole,
/// `(3Γ/4){(1−r̂r̂) e^{ix}/x + (1−3r̂r̂)(i e^{ix}/x² − e^{ix}/x³)}` with `x = k_0 r`.
pub fn green_tensor<T: Real>(r: &Vector3<T>, spec: &TransitionSpec<T>) -> Result<Matrix3<Complex<T>>> {
    let dist = r.norm();
    if dist == T::zero() {
        return Err(Error::Domain("Green's tensor is singular at r = 0".into()));
    }
    let x = spec.k0 * dist;
    let rr = (r / dist) * (r / dist).transpose();
    let p = Matrix3::identity() - rr;
    let q = Matrix3::identity() - rr * T::lit(3.0);
    let (s, co) = (x.sin(), x.cos());
    let x2 = x * x;
    let x3 = x2 * x;
    let re_p = co / x;
    let re_q = -s / x2 - co / x3;
    let im_p = s / x;
    let im_q = if x < T::lit(0.5) { small_x_series(x) } else { (x * co - s) / x3 };
    let pref = T::lit(0.75) * spec.gamma;
    Ok(Matrix3::from_fn(|a, b| {
        c(pref * (p[(a, b)] * re_p + q[(a, b)] * re_q), pref * (p[(a, b)] * im_p + q[(a, b)] * im_q))
    }))
}

/// `R` and `I` coefficients over the composite index `(site, q)`, stored as `3i + q + 1`.
#[derive(Clone, Debug)]
pub struct InteractionTensor<T: Real> {
    site_count: usize,
    real: DMatrix<Complex<T>>,
    imag: DMatrix<Complex<T>>,
}

impl<T: Real> InteractionTensor<T> {
    /// Builds a tensor from explicit `3N×3N` matrices.
    pub fn from_matrices(real: DMatrix<Complex<T>>, imag: DMatrix<Complex<T>>) -> Result<Self> {
        let n = real.nrows();
        if !n.is_multiple_of(3) || real.shape() != (n, n) || imag.shape() != (n, n) {
            return Err(Error::DimensionMismatch("R and I must be square 3N×3N".into()));
        }
        Ok(InteractionTensor { site_count: n / 3, real, imag })
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn index(site: usize, q: i32) -> usize {
        3 * site + (q + 1) as usize
    }

    pub fn r(&self, i: usize, j: usize, q: i32, qp: i32) -> Complex<T> {
        self.real[(Self::index(i, q), Self::index(j, qp))]
    }

    pub fn i(&self, i: usize, j: usize, q: i32, qp: i32) -> Complex<T> {
        self.imag[(Self::index(i, q), Self::index(j, qp))]
    }

    /// `𝒢 = R + iI`.
    pub fn g(&self, i: usize, j: usize, q: i32, qp: i32) -> Complex<T> {
        self.r(i, j, q, qp) + self.i(i, j, q, qp) * c(T::zero(), T::one())
    }

    pub fn real_matrix(&self) -> &DMatrix<Complex<T>> {
        &self.real
    }

    pub fn imag_matrix(&self) -> &DMatrix<Complex<T>> {
        &self.imag
    }

    /// Copy with the coherent part removed.
    pub fn without_coherent(&self) -> Self {
        InteractionTensor {
            site_count: self.site_count,
            real: DMatrix::zeros(self.real.nrows(), self.real.ncols()),
            imag: self.imag.clone(),
        }
    }

    /// Copy keeping only the diagonal `i = j, q = q'` dissipative entries.
    pub fn independent_decay(&self) -> Self {
        let n = self.imag.nrows();
        InteractionTensor {
            site_count: self.site_count,
            real: DMatrix::zeros(n, n),
            imag: DMatrix::from_fn(n, n, |a, b| if a == b { self.imag[(a, b)] } else { cr(T::zero()) }),
        }
    }
}

fn project<T: Real>(m: &Matrix3<T>, basis: &[Vector3<Complex<T>>; 3]) -> [[Complex<T>; 3]; 3] {
    let mc = m.map(cr);
    let mut out = [[cr(T::zero()); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let v = mc * basis[b];
            out[a][b] = spherical_component(&basis[a], &v);
        }
    }
    out
}

/// `R^{ij}_{qq'} = e_q^{*T} Re G^{ij} e_{q'}` and `I^{ij}_{qq'} = e_q^{*T} Im G^{ij} e_{q'}`.
///
/// Onsite blocks use the trap tensors, with `U` taken from `onsite_u_override` when given.
pub fn interaction_tensor<T: Real>(
    sites: &SiteArray<T>,
    geom: &TrapGeometry<T>,
    spec: &TransitionSpec<T>,
    onsite_u_override: Option<T>,
) -> Result<InteractionTensor<T>> {
    let n = sites.len();
    let basis = spherical_basis(&sites.quantization_axis);
    let u = onsite_u_override.unwrap_or_else(|| onsite_u(geom, spec));
    let (re_on, im_on) = onsite::onsite_tensors_with_u(u, &geom.lattice_axis, spec);
    let mut real = DMatrix::from_element(3 * n, 3 * n, cr(T::zero()));
    let mut imag = real.clone();
    for i in 0..n {
        for j in 0..n {
            let (re, im) = if i == j {
                (re_on, im_on)
            } else {
                let d = sites.positions[i] - sites.positions[j];
                if d.norm() == T::zero() {
                    return Err(Error::Domain(format!("sites {i} and {j} coincide")));
                }
                let g = green_tensor(&d, spec)?;
                (g.map(|z| z.re), g.map(|z| z.im))
            };
            let (pr, pi) = (project(&re, &basis), project(&im, &basis));
            for a in 0..3 {
                for b in 0..3 {
                    real[(3 * i + a, 3 * j + b)] = pr[a][b];
                    imag[(3 * i + a, 3 * j + b)] = pi[a][b];
                }
            }
        }
    }
    InteractionTensor::from_matrices(real, imag)
}
