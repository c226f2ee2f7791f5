// SPDX-License-Identifier: Apache-2.0

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_adaptive, integrate_gauss_legendre};
use super::{TransitionSpec, TrapGeometry};
use crate::scalar::Real;

const ABS_TOL: f64 = 1e-12;

/// Shape integral `J(ρ) = ∫_{-1}^{1} (3x²−1)/[(ρ²−1)x²+1]^{3/2} dx` with `ρ = ℓ_z/ℓ_⊥`.
///
/// Vanishes at `ρ = 1`. The adaptive rule is tried first; the composite 64-point
/// Gauss–Legendre rule is used if it fails to converge.
pub fn shape_integral<T: Real>(rho: T) -> T {
    let a = rho * rho - T::one();
    let f = |x: T| (T::lit(3.0) * x * x - T::one()) / (a * x * x + T::one()).powf(T::lit(1.5));
    let r = integrate_adaptive(f, -T::one(), T::one(), T::lit(ABS_TOL));
    if r.converged {
        r.value
    } else {
        integrate_gauss_legendre(f, -T::one(), T::one(), 64, 16)
    }
}

/// Onsite prefactor `U = 1/(24√π k_0³) ∫ (3x²−1)/[(ℓ_z²−ℓ_⊥²)x²+ℓ_⊥²]^{3/2} dx`.
pub fn onsite_u<T: Real>(geom: &TrapGeometry<T>, spec: &TransitionSpec<T>) -> T {
    let lp = geom.ell_perp;
    let kl = spec.k0 * lp;
    shape_integral(geom.ell_z / lp) / (T::lit(24.0) * T::pi().sqrt() * kl * kl * kl)
}

/// `(Re G^{ii}, Im G^{ii})`: `(3Γ/4)·U·(1 − 3 e^L_z ⊗ e^L_z)` and `(Γ/2)·1`.
pub fn onsite_tensors<T: Real>(
    geom: &TrapGeometry<T>,
    spec: &TransitionSpec<T>,
) -> (Matrix3<T>, Matrix3<T>) {
    onsite_tensors_with_u(onsite_u(geom, spec), &geom.lattice_axis, spec)
}

pub(crate) fn onsite_tensors_with_u<T: Real>(
    u: T,
    axis: &Vector3<T>,
    spec: &TransitionSpec<T>,
) -> (Matrix3<T>, Matrix3<T>) {
    let e = axis.normalize();
    let q = Matrix3::identity() - e * e.transpose() * T::lit(3.0);
    let re = q * (T::lit(0.75) * spec.gamma * u);
    let im = Matrix3::identity() * (spec.gamma * T::lit(0.5));
    (re, im)
}

/// Dimensionless shape function `Ũ(ρ)` of the depth scaling law.
pub fn u_tilde<T: Real>(rho: T) -> T {
    let pi = T::pi();
    let eight_pi2 = T::lit(8.0) * pi * pi;
    let c = eight_pi2 * eight_pi2.sqrt() / (T::lit(8.0) * pi * pi * pi * T::lit(24.0) * pi.sqrt());
    c * rho * rho.sqrt() * shape_integral(rho)
}

/// `U = (λ_0/λ_L)³ (ν_z ν_⊥)^{3/8} Ũ(ρ)`.
pub fn u_scaling<T: Real>(lambda0: T, lambda_l: T, nu_z: T, nu_perp: T, shape_ratio: T) -> T {
    let r = lambda0 / lambda_l;
    r * r * r * (nu_z * nu_perp).powf(T::lit(0.375)) * u_tilde(shape_ratio)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Maximizer of `f` on `[lo, hi]`: coarse scan on a log grid, then golden section on `ln x`.
pub fn maximize_log(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const GRID: usize = 200;
    let (la, lb) = (lo.ln(), hi.ln());
    let step = (lb - la) / GRID as f64;
    let best = (0..=GRID)
        .map(|i| la + step * i as f64)
        .max_by(|x, y| f(x.exp()).partial_cmp(&f(y.exp())).unwrap())
        .unwrap();
    let a = (best - step).max(la);
    let b = (best + step).min(lb);
    golden_section_max(|t| f(t.exp()), a, b, 1e-10).exp()
}

/// Locations of the extrema of `|U|` and their depth-ratio equivalents.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OnsiteMaxima {
    /// Maximizer of `|U|` over `ℓ_z/ℓ_⊥` at fixed `ℓ_⊥` (cigar-shaped trap).
    pub ell_z_over_ell_perp: f64,
    /// Maximizer of `|U|` over `ℓ_⊥/ℓ_z` at fixed `ℓ_z` (pancake-shaped trap).
    pub ell_perp_over_ell_z: f64,
    /// `ν_⊥/ν_z = (ℓ_z/ℓ_⊥)⁴` at the cigar maximum (fixed `ν_⊥`).
    pub nu_perp_over_nu_z: f64,
    /// `ν_z/ν_⊥ = (ℓ_⊥/ℓ_z)⁴` at the pancake maximum (fixed `ν_z`).
    pub nu_z_over_nu_perp: f64,
}

/// Searches both maxima over ratios in `(1, 10)`.
pub fn onsite_maxima() -> OnsiteMaxima {
    let cigar = maximize_log(|r| shape_integral::<f64>(r).abs(), 1.0 + 1e-6, 10.0);
    let pancake = maximize_log(|s| shape_integral::<f64>(1.0 / s).abs() / (s * s * s), 1.0 + 1e-6, 10.0);
    OnsiteMaxima {
        ell_z_over_ell_perp: cigar,
        ell_perp_over_ell_z: pancake,
        nu_perp_over_nu_z: cigar.powi(4),
        nu_z_over_nu_perp: pancake.powi(4),
    }
}
