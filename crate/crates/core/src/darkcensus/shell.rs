// SPDX-License-Identifier: Apache-2.0

//! Multiplets of a single `f` shell and the parentage elements between them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::angular::{HalfInt, LevelStructure};
use crate::error::Result;
use crate::fock::{
    annihilation, build_sector, coupled_basis, creation, f_plus, Orbital, SectorBasis,
    SectorConstraints, SingleParticleLevel,
};
use crate::Complex64;

#[derive(Clone, Debug)]
pub(crate) struct ShellState {
    pub twice_f: i32,
    pub copy: usize,
    pub twice_m: i32,
    pub vector: DVector<Complex64>,
}

/// All `|α F M⟩` of `count` fermions in one orbital, with `M` ladders fixed by `F_−`.
#[derive(Clone, Debug)]
pub(crate) struct Shell {
    pub basis: SectorBasis,
    pub states: Vec<ShellState>,
    index: HashMap<(i32, usize, i32), usize>,
}

impl Shell {
    pub fn build(ls: &LevelStructure, orbital: Orbital, count: usize) -> Result<Option<Self>> {
        let f = shell_f(ls, orbital);
        if count > f.multiplicity() {
            return Ok(None);
        }
        let n_e = if orbital == Orbital::E { count } else { 0 };
        let basis = build_sector(*ls, count, 1, SectorConstraints::excited(n_e))?;
        let coupled = coupled_basis::<f64>(&basis)?;
        let lower = f_plus::<f64>(&[orbital], &basis, &basis)?.adjoint();
        let mut states = Vec::new();
        let mut copies: HashMap<i32, usize> = HashMap::new();
        for hw in coupled.states.iter().filter(|s| s.twice_m == s.twice_f) {
            let copy = copies.entry(hw.twice_f).or_insert(0);
            let mut v = hw.vector.clone();
            let mut tm = hw.twice_f;
            loop {
                states.push(ShellState { twice_f: hw.twice_f, copy: *copy, twice_m: tm, vector: v.clone() });
                if tm == -hw.twice_f {
                    break;
                }
                let (ff, mm) = (hw.twice_f as f64 / 2.0, tm as f64 / 2.0);
                let norm = ((ff + mm) * (ff - mm + 1.0)).sqrt();
                v = lower.apply(&v).unscale(norm);
                tm -= 2;
            }
            *copy += 1;
        }
        let index = states.iter().enumerate().map(|(i, s)| ((s.twice_f, s.copy, s.twice_m), i)).collect();
        Ok(Some(Self { basis, states, index }))
    }

    pub fn find(&self, twice_f: i32, copy: usize, twice_m: i32) -> Option<usize> {
        self.index.get(&(twice_f, copy, twice_m)).copied()
    }

    /// Distinct `(2F, copy)` labels.
    pub fn multiplets(&self) -> Vec<(i32, usize)> {
        let mut out: Vec<(i32, usize)> =
            self.states.iter().filter(|s| s.twice_m == s.twice_f).map(|s| (s.twice_f, s.copy)).collect();
        out.sort();
        out
    }

    fn columns(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.basis.dim(), self.states.len(), |r, c| self.states[c].vector[r])
    }
}

pub(crate) fn shell_f(ls: &LevelStructure, orbital: Orbital) -> HalfInt {
    match orbital {
        Orbital::G => ls.f_g,
        Orbital::E => ls.f_e,
    }
}

/// `⟨t|ĉ†_{g,m}|s⟩` between all states of two ground shells, one matrix per `m`.
pub(crate) fn creation_elements(
    from: &Shell,
    to: &Shell,
    ls: &LevelStructure,
) -> Result<HashMap<i32, DMatrix<Complex64>>> {
    let (s, t) = (from.columns(), to.columns());
    let mut out = HashMap::new();
    for m in ls.f_g.projections() {
        let op = creation::<f64>(0, SingleParticleLevel::g(m), &from.basis, &to.basis)?.to_dense();
        out.insert(m.twice(), t.adjoint() * op * &s);
    }
    Ok(out)
}

/// `⟨t|ĉ_{e,μ}|s⟩` between all states of two excited shells, one matrix per `μ`.
pub(crate) fn annihilation_elements(
    from: &Shell,
    to: &Shell,
    ls: &LevelStructure,
) -> Result<HashMap<i32, DMatrix<Complex64>>> {
    let (s, t) = (from.columns(), to.columns());
    let mut out = HashMap::new();
    for mu in ls.f_e.projections() {
        let op = annihilation::<f64>(0, SingleParticleLevel::e(mu), &from.basis, &to.basis)?.to_dense();
        out.insert(mu.twice(), t.adjoint() * op * &s);
    }
    Ok(out)
}
