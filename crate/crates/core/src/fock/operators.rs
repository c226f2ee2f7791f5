// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex;
use num_traits::Zero;

use super::{FockState, Orbital, SectorBasis, SingleParticleLevel, SparseOperator};
use crate::angular::{cq, HalfInt};
use crate::error::{Error, Result};
use crate::scalar::{cr, Real};

fn check_compatible(from: &SectorBasis, to: &SectorBasis) -> Result<()> {
    if from.level_structure() != to.level_structure()
        || from.site_count() != to.site_count()
        || from.levels_per_site() != to.levels_per_site()
    {
        return Err(Error::DimensionMismatch("bases describe different systems".into()));
    }
    Ok(())
}

/// Parity of occupied modes strictly below `mode` within the same site block.
fn site_parity(s: u64, mode: usize, l: usize) -> bool {
    let base = mode - mode % l;
    let below = (s >> base) & ((1u64 << (mode - base)) - 1);
    below.count_ones() % 2 == 1
}

/// `ĉ†_a ĉ_b |s⟩` as `(sign, target)`, or `None` if it vanishes.
pub(crate) fn hop(s: FockState, a: usize, b: usize, l: usize) -> Option<(bool, FockState)> {
    if !s.occupied(b) {
        return None;
    }
    let s1 = s.0 & !(1u64 << b);
    let neg1 = site_parity(s1 | (1u64 << b), b, l);
    if s1 >> a & 1 == 1 {
        return None;
    }
    let neg2 = site_parity(s1, a, l);
    Some((neg1 ^ neg2, FockState(s1 | (1u64 << a))))
}

/// Sum of weighted one-body terms `Σ w ĉ†_a ĉ_b` mapping `from` into `to`.
///
/// Results that fall outside `to` are dropped, so a restricted `to` acts as a projection.
pub fn one_body<T: Real>(
    from: &SectorBasis,
    to: &SectorBasis,
    terms: &[(usize, usize, Complex<T>)],
) -> Result<SparseOperator<T>> {
    check_compatible(from, to)?;
    let l = from.levels_per_site();
    let mut triplets = Vec::new();
    for (col, &s) in from.states().iter().enumerate() {
        for &(a, b, w) in terms {
            if w.is_zero() {
                continue;
            }
            if let Some((neg, t)) = hop(s, a, b, l) {
                if let Some(row) = to.index_of(t) {
                    triplets.push((row, col, if neg { -w } else { w }));
                }
            }
        }
    }
    SparseOperator::from_triplets(to.dim(), from.dim(), triplets)
}

/// `σ^{(i)}_{a b} = ĉ†_{i,a} ĉ_{i,b}`.
pub fn sigma<T: Real>(
    site: usize,
    a: SingleParticleLevel,
    b: SingleParticleLevel,
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    let ma = from.mode(site, a)?;
    let mb = from.mode(site, b)?;
    one_body(from, to, &[(ma, mb, cr(T::one()))])
}

/// Single creation operator `ĉ†_{i,a}`; `to` normally holds one more fermion on `site`.
///
/// Only meaningful for single-site bases, where the particle number is not tied per site.
pub fn creation<T: Real>(
    site: usize,
    a: SingleParticleLevel,
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    check_compatible(from, to)?;
    let l = from.levels_per_site();
    let mode = from.mode(site, a)?;
    let mut triplets = Vec::new();
    for (col, &s) in from.states().iter().enumerate() {
        if s.occupied(mode) {
            continue;
        }
        let t = FockState(s.0 | 1u64 << mode);
        if let Some(row) = to.index_of(t) {
            let w = if site_parity(s.0, mode, l) { -T::one() } else { T::one() };
            triplets.push((row, col, cr(w)));
        }
    }
    SparseOperator::from_triplets(to.dim(), from.dim(), triplets)
}

/// Single annihilation operator `ĉ_{i,a}`.
pub fn annihilation<T: Real>(
    site: usize,
    a: SingleParticleLevel,
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    Ok(creation::<T>(site, a, to, from)?.adjoint())
}

fn lowering_terms<T: Real>(
    basis: &SectorBasis,
    site: usize,
    q: i32,
) -> Result<Vec<(usize, usize, Complex<T>)>> {
    if !(-1..=1).contains(&q) {
        return Err(Error::Domain(format!("polarization index q = {q} outside {{-1, 0, 1}}")));
    }
    let ls = *basis.level_structure();
    let mut terms = Vec::new();
    for m in ls.f_g.projections() {
        let me = m + HalfInt::from_int(q);
        if !ls.f_e.admits(me) {
            continue;
        }
        let w: T = cq(&ls, q, m)?;
        let g = basis.mode(site, SingleParticleLevel::g(m))?;
        let e = basis.mode(site, SingleParticleLevel::e(me))?;
        terms.push((g, e, cr(w)));
    }
    Ok(terms)
}

/// `𝒟⁻_{i,q} = Σ_m C^q_m σ^{(i)}_{g_m e_{m+q}}` from `from` into `to`.
pub fn lowering_operator<T: Real>(
    site: usize,
    q: i32,
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    let terms = lowering_terms::<T>(from, site, q)?;
    one_body(from, to, &terms)
}

/// `𝒟⁺_{i,q} = (𝒟⁻_{i,q})†` from `from` into `to`.
pub fn raising_operator<T: Real>(
    site: usize,
    q: i32,
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    Ok(lowering_operator::<T>(site, q, to, from)?.adjoint())
}

/// Diagonal `n̂_e`.
pub fn number_excited<T: Real>(basis: &SectorBasis) -> SparseOperator<T> {
    let d = (0..basis.dim()).map(|i| (i, i, cr(T::lit(basis.excited_count(i) as f64))));
    SparseOperator::from_triplets(basis.dim(), basis.dim(), d.collect::<Vec<_>>())
        .expect("diagonal in range")
}

/// Diagonal `F_z` (total projection `M`).
pub fn total_m<T: Real>(basis: &SectorBasis) -> SparseOperator<T> {
    let d = (0..basis.dim()).map(|i| (i, i, cr(T::lit(basis.twice_projection(i) as f64 / 2.0))));
    SparseOperator::from_triplets(basis.dim(), basis.dim(), d.collect::<Vec<_>>())
        .expect("diagonal in range")
}

/// `F_+` restricted to the given orbitals, from `from` into `to`.
pub fn f_plus<T: Real>(
    orbitals: &[Orbital],
    from: &SectorBasis,
    to: &SectorBasis,
) -> Result<SparseOperator<T>> {
    let ls = *from.level_structure();
    let mut terms = Vec::new();
    for site in 0..from.site_count() {
        for &orb in orbitals {
            let f = match orb {
                Orbital::G => ls.f_g,
                Orbital::E => ls.f_e,
            };
            for m in f.projections() {
                let up = m + HalfInt::ONE;
                if !f.admits(up) {
                    continue;
                }
                let (fv, mv) = (f.to_f64(), m.to_f64());
                let w = T::lit((fv * (fv + 1.0) - mv * (mv + 1.0)).sqrt());
                let a = from.mode(site, SingleParticleLevel { orbital: orb, m: up })?;
                let b = from.mode(site, SingleParticleLevel { orbital: orb, m })?;
                terms.push((a, b, cr(w)));
            }
        }
    }
    one_body(from, to, &terms)
}

fn fz_restricted<T: Real>(orbitals: &[Orbital], basis: &SectorBasis) -> Result<SparseOperator<T>> {
    let ls = *basis.level_structure();
    let mut terms = Vec::new();
    for site in 0..basis.site_count() {
        for &orb in orbitals {
            let f = match orb {
                Orbital::G => ls.f_g,
                Orbital::E => ls.f_e,
            };
            for m in f.projections() {
                let a = basis.mode(site, SingleParticleLevel { orbital: orb, m })?;
                terms.push((a, a, cr(T::lit(m.to_f64()))));
            }
        }
    }
    one_body(basis, basis, &terms)
}

/// `F² = F₋F₊ + F_z² + F_z` for the given orbitals on `basis`.
fn f_squared<T: Real>(orbitals: &[Orbital], basis: &SectorBasis) -> Result<SparseOperator<T>> {
    let c = basis.constraints();
    let raised = match c.twice_m {
        Some(tm) => Some(basis.with_constraints(crate::fock::SectorConstraints {
            twice_m: Some(tm + 2),
            ..c
        })?),
        None => None,
    };
    let aux = raised.as_ref().unwrap_or(basis);
    let fp = f_plus::<T>(orbitals, basis, aux)?;
    let fz = fz_restricted::<T>(orbitals, basis)?;
    fp.adjoint().matmul(&fp)?.add(&fz.matmul(&fz)?)?.add(&fz)
}

/// Total angular-momentum operators of a basis.
#[derive(Clone, Debug)]
pub struct TotalAngularMomentum<T: Real> {
    pub f_squared: SparseOperator<T>,
    pub f_z: SparseOperator<T>,
    /// `F²` of the ground-manifold fermions only.
    pub fg_squared: SparseOperator<T>,
}

/// `(F², F_z, F_g²)` on `basis`; any constraint on `M` is respected exactly.
pub fn total_f_operators<T: Real>(basis: &SectorBasis) -> Result<TotalAngularMomentum<T>> {
    if basis.site_count() != 1 {
        return Err(Error::Domain("total angular momentum operators need a single-site basis".into()));
    }
    Ok(TotalAngularMomentum {
        f_squared: f_squared(&[Orbital::G, Orbital::E], basis)?,
        f_z: total_m(basis),
        fg_squared: f_squared(&[Orbital::G], basis)?,
    })
}
