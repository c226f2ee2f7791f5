// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex;
use num_traits::Zero;

use crate::angular::{clebsch_gordan, cq, HalfInt};
use crate::dipolar::{spherical_basis, spherical_component, SiteArray};
use crate::error::{Error, Result};
use crate::fock::{number_excited, one_body, raising_operator, SectorBasis, SingleParticleLevel};
use crate::scalar::{c, cr, Real};

/// Named polarization vector: `"z"`, `"x"`, `"y"`, `"sigma+"`, `"sigma-"` (relative to `axis`).
pub fn polarization<T: Real>(name: &str, axis: &Vector3<T>) -> Result<Vector3<Complex<T>>> {
    let [minus, zero, plus] = spherical_basis(axis);
    let v = match name.trim().to_ascii_lowercase().as_str() {
        "z" | "pi" | "e0" => zero,
        "sigma+" | "e+" | "plus" => plus,
        "sigma-" | "e-" | "minus" => minus,
        "x" => Vector3::x().map(cr),
        "y" => Vector3::y().map(cr),
        other => return Err(Error::Config(format!("unknown polarization {other:?}"))),
    };
    Ok(v)
}

fn normalized<T: Real>(v: &Vector3<Complex<T>>) -> Result<Vector3<Complex<T>>> {
    let n = v.iter().fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im).sqrt();
    if n == T::zero() {
        return Err(Error::Config("polarization vector must be nonzero".into()));
    }
    Ok(v.map(|z| z / cr(n)))
}

/// Single laser drive.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec<T: Real> {
    pub rabi: T,
    pub polarization: Vector3<Complex<T>>,
    pub detuning: T,
    pub phase: T,
    /// Laser wavevector `k_L`; zero means uniform phase across sites.
    pub wavevector: Vector3<T>,
}

impl<T: Real> DriveSpec<T> {
    pub fn new(rabi: T, polarization: Vector3<Complex<T>>, detuning: T) -> Result<Self> {
        Ok(DriveSpec {
            rabi,
            polarization: normalized(&polarization)?,
            detuning,
            phase: T::zero(),
            wavevector: Vector3::zeros(),
        })
    }
}

/// Two-photon Raman drive through an auxiliary manifold `f_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct RamanDriveSpec<T: Real> {
    pub f_s: HalfInt,
    pub omega1: T,
    pub omega2: T,
    pub pol1: Vector3<Complex<T>>,
    pub pol2: Vector3<Complex<T>>,
    pub delta: T,
    pub phases: (T, T),
}

/// Laser plus Zeeman splitting of the excited manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeemanDriveSpec<T: Real> {
    pub delta_z: T,
    pub delta: T,
    pub rabi: T,
    pub polarization: Vector3<Complex<T>>,
}

fn hermitian_from_one_body<T: Real>(
    basis: &SectorBasis,
    terms: &[(usize, usize, Complex<T>)],
) -> Result<DMatrix<Complex<T>>> {
    let op = one_body(basis, basis, terms)?;
    let dense = op.to_dense();
    Ok(&dense + dense.adjoint())
}

/// `H_L = −Σ_i Σ_q [Ω (e_q^*·ε_L) e^{i(k_L·r_i + φ)} 𝒟⁺_{i,q} + h.c.] − Δ n̂_e`.
pub fn single_laser_hamiltonian<T: Real>(
    basis: &SectorBasis,
    drive: &DriveSpec<T>,
    sites: &SiteArray<T>,
) -> Result<DMatrix<Complex<T>>> {
    if sites.len() != basis.site_count() {
        return Err(Error::DimensionMismatch("site list does not match the basis".into()));
    }
    let d = basis.dim();
    let mut h = DMatrix::from_element(d, d, Complex::zero());
    let sph = spherical_basis(&sites.quantization_axis);
    for (site, pos) in sites.positions.iter().enumerate() {
        let arg = drive.wavevector.dot(pos) + drive.phase;
        let phase = c(arg.cos(), arg.sin());
        for q in -1..=1 {
            let amp = spherical_component(&sph[(q + 1) as usize], &drive.polarization)
                * phase
                * cr(drive.rabi);
            if amp.is_zero() {
                continue;
            }
            let up = raising_operator::<T>(site, q, basis, basis)?.scale(-amp);
            let dense = up.to_dense();
            h += &dense + dense.adjoint();
        }
    }
    if drive.detuning != T::zero() {
        h -= number_excited::<T>(basis).to_dense() * cr(drive.detuning);
    }
    Ok(h)
}

/// Effective couplings `Ω^eff_{mn} = Σ_k Ω^{(2)*}_{s_k e_m} Ω^{(1)}_{s_k g_n} / Δ`,
/// returned as `(m_e, n_g, Ω^eff)` triples.
pub fn raman_couplings<T: Real>(
    ls: &crate::angular::LevelStructure,
    drive: &RamanDriveSpec<T>,
    axis: &Vector3<T>,
) -> Result<Vec<(HalfInt, HalfInt, Complex<T>)>> {
    let fs = drive.f_s;
    let allowed = |f: HalfInt| {
        (fs.twice() - f.twice()).abs() <= 2 && !(fs.twice() == 0 && f.twice() == 0)
            && (fs.twice() - f.twice()) % 2 == 0
    };
    if fs.twice() < 0 || !allowed(ls.f_g) || !allowed(ls.f_e) {
        log::warn!("no dipole-allowed Raman path through f_s = {fs} for {ls}; drive is zero");
        return Ok(Vec::new());
    }
    if drive.delta == T::zero() {
        return Err(Error::Config("Raman detuning must be nonzero".into()));
    }
    let biggest = drive.omega1.abs().max(drive.omega2.abs());
    if drive.delta.abs() < T::lit(10.0) * biggest {
        log::warn!("Raman detuning is not large compared to the single-photon Rabi frequencies");
    }
    let sph = spherical_basis(axis);
    let pol1 = normalized(&drive.pol1)?;
    let pol2 = normalized(&drive.pol2)?;
    // Ω^{(l)}_{a_m b_n} = Ω_l e^{iφ_l} ⟨f_b n; 1 m−n | f_a m⟩ (e*_{m−n}·ε^{(l)})
    let coupling = |omega: T, phi: T, pol: &Vector3<Complex<T>>, fa: HalfInt, ma: HalfInt, fb: HalfInt, nb: HalfInt| -> Result<Complex<T>> {
        let dq = ma.twice() - nb.twice();
        if dq.abs() > 2 {
            return Ok(Complex::zero());
        }
        let q = dq / 2;
        let cg: T = clebsch_gordan(fb, nb, HalfInt::ONE, HalfInt::from_int(q), fa, ma)?;
        let proj = spherical_component(&sph[(q + 1) as usize], pol);
        Ok(c(phi.cos(), phi.sin()) * proj * cr(omega * cg))
    };
    let mut out = Vec::new();
    for m in ls.f_e.projections() {
        for n in ls.f_g.projections() {
            let mut total: Complex<T> = Complex::zero();
            for k in fs.projections() {
                let o2 = coupling(drive.omega2, drive.phases.1, &pol2, fs, k, ls.f_e, m)?;
                let o1 = coupling(drive.omega1, drive.phases.0, &pol1, fs, k, ls.f_g, n)?;
                total += o2.conj() * o1;
            }
            let total = total / cr(drive.delta);
            if !total.is_zero() {
                out.push((m, n, total));
            }
        }
    }
    Ok(out)
}

/// `H_Raman = Σ_i Σ_{m,n} [Ω^eff_{mn} σ^{(i)}_{e_m g_n} + h.c.]`.
pub fn raman_hamiltonian<T: Real>(
    basis: &SectorBasis,
    drive: &RamanDriveSpec<T>,
    axis: &Vector3<T>,
) -> Result<DMatrix<Complex<T>>> {
    let couplings = raman_couplings(basis.level_structure(), drive, axis)?;
    let mut terms = Vec::new();
    for site in 0..basis.site_count() {
        for &(m, n, w) in &couplings {
            let e = basis.mode(site, SingleParticleLevel::e(m))?;
            let g = basis.mode(site, SingleParticleLevel::g(n))?;
            terms.push((e, g, w));
        }
    }
    hermitian_from_one_body(basis, &terms)
}

/// `H_Zeeman = −Σ [Ω_{e_m g_n} σ_{e_m g_n} + h.c.] + Σ_m (mΔ_z − Δ) σ_{e_m e_m}`.
pub fn zeeman_hamiltonian<T: Real>(
    basis: &SectorBasis,
    drive: &ZeemanDriveSpec<T>,
    sites: &SiteArray<T>,
) -> Result<DMatrix<Complex<T>>> {
    let laser = DriveSpec::new(drive.rabi, drive.polarization, drive.delta)?;
    let mut h = single_laser_hamiltonian(basis, &laser, sites)?;
    if drive.delta_z != T::zero() {
        let ls = *basis.level_structure();
        let mut terms = Vec::new();
        for site in 0..basis.site_count() {
            for m in ls.f_e.projections() {
                let e = basis.mode(site, SingleParticleLevel::e(m))?;
                terms.push((e, e, cr(T::lit(m.to_f64()) * drive.delta_z)));
            }
        }
        h += one_body(basis, basis, &terms)?.to_dense();
    }
    Ok(h)
}

/// Reference without any interference: each allowed transition decays on its own,
/// `H = −i(Γ/2) Σ_i Σ_{q,m} (C^q_m)² σ_{e_{m+q} g_m} σ_{g_m e_{m+q}}`.
pub fn pauli_reference_h_eff<T: Real>(basis: &SectorBasis, gamma: T) -> Result<DMatrix<Complex<T>>> {
    let ls = *basis.level_structure();
    let d = basis.dim();
    let mut h = DMatrix::from_element(d, d, Complex::zero());
    for (idx, s) in basis.states().iter().enumerate() {
        let mut rate = T::zero();
        for site in 0..basis.site_count() {
            for m in ls.f_g.projections() {
                for q in -1..=1 {
                    let me = m + HalfInt::from_int(q);
                    if !ls.f_e.admits(me) {
                        continue;
                    }
                    let g = basis.mode(site, SingleParticleLevel::g(m))?;
                    let e = basis.mode(site, SingleParticleLevel::e(me))?;
                    if s.occupied(e) && !s.occupied(g) {
                        let w: T = cq(&ls, q, m)?;
                        rate += w * w;
                    }
                }
            }
        }
        h[(idx, idx)] = c(T::zero(), -gamma * T::lit(0.5) * rate);
    }
    Ok(h)
}
