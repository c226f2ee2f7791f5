// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use serde::Serialize;

use super::states::{resolve_state, StateSpec};
use super::guard;
use crate::angular::LevelStructure;
use crate::dipolar::{interaction_tensor, SiteArray, TrapGeometry, TransitionSpec};
use crate::error::{Error, Result};
use crate::fock::{build_sector, FockState, SectorBasis, SectorConstraints};
use crate::liouvillian::{lindblad_rhs, GeneratorSet};
use crate::spectrum::find_dark_states;
use crate::Complex64;

/// Per-site factor of a product state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteState {
    /// Single-excitation dark state with the smallest `|M|`.
    Dark,
    /// Lowest ground-manifold Fock state.
    Ground,
    /// Fastest-decaying single-excitation mode at `M = 0`.
    Bright,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultisiteReport {
    pub states: Vec<SiteState>,
    pub dim: usize,
    /// `max |ℒ(|ψ⟩⟨ψ|)|`.
    pub liouvillian_residual: f64,
    /// `‖H_eff ψ‖`.
    pub h_eff_residual: f64,
    /// `Tr ℒ_rec(|ψ⟩⟨ψ|)`, the total emission rate.
    pub decay_rate: f64,
}

fn site_vector(
    state: SiteState,
    site: &SectorBasis,
    tensor: &crate::dipolar::InteractionTensor<f64>,
) -> Result<DVector<Complex64>> {
    match state {
        SiteState::Dark => {
            let mut sets: Vec<_> =
                find_dark_states::<f64>(site)?.into_iter().filter(|d| d.n_excited == 1 && d.count() > 0).collect();
            sets.sort_by_key(|d| (d.twice_m.abs(), d.twice_m));
            let set = sets.first().ok_or_else(|| Error::Config("no single-excitation dark state".into()))?;
            let v = set.vectors.column(0).into_owned();
            let n = v.norm();
            Ok(v.unscale(n))
        }
        SiteState::Ground => {
            let i = (0..site.dim())
                .find(|&i| site.excited_count(i) == 0)
                .ok_or_else(|| Error::Config("no ground-manifold state".into()))?;
            let mut v = DVector::zeros(site.dim());
            v[i] = Complex64::new(1.0, 0.0);
            Ok(v)
        }
        SiteState::Bright => {
            let sub = resolve_state("S", &StateSpec::Bright { twice_m: 0 }, site, tensor)?;
            Ok(sub.vectors.column(0).into_owned())
        }
    }
}

/// Applies the full master equation to a product of single-site states on `sites`.
pub fn multisite_dark_check(
    ls: LevelStructure,
    n: usize,
    sites: &SiteArray<f64>,
    geometry: &TrapGeometry<f64>,
    spec: &TransitionSpec<f64>,
    onsite_u: Option<f64>,
    states: &[SiteState],
) -> Result<MultisiteReport> {
    if states.len() != sites.len() {
        return Err(Error::DimensionMismatch(format!("{} site states for {} sites", states.len(), sites.len())));
    }
    let basis = build_sector(ls, n, sites.len(), SectorConstraints::none())?;
    guard(basis.dim())?;
    let single = build_sector(ls, n, 1, SectorConstraints::none())?;
    let local_tensor = interaction_tensor(&SiteArray::single(), geometry, spec, onsite_u)?;
    let factors: Vec<DVector<Complex64>> =
        states.iter().map(|s| site_vector(*s, &single, &local_tensor)).collect::<Result<_>>()?;
    let mut psi = DVector::zeros(basis.dim());
    for (i, &s) in basis.states().iter().enumerate() {
        let mut amp = Complex64::new(1.0, 0.0);
        for (site, f) in factors.iter().enumerate() {
            let local = single.index_of(FockState(basis.site_bits(s, site))).expect("per-site state");
            amp *= f[local];
        }
        psi[i] = amp;
    }
    let tensor = interaction_tensor(sites, geometry, spec, onsite_u)?;
    let gens = GeneratorSet::new(&basis, &tensor, None)?;
    let rho = &psi * psi.adjoint();
    let l = lindblad_rhs(&rho, &gens)?;
    let liouvillian_residual = l.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let h_eff_residual = (&gens.h_eff * &psi).norm();
    let decay_rate = gens.recycling(&rho).trace().re;
    Ok(MultisiteReport { states: states.to_vec(), dim: basis.dim(), liouvillian_residual, h_eff_residual, decay_rate })
}
