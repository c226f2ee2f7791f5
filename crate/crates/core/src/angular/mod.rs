// SPDX-License-Identifier: Apache-2.0

//! Angular-momentum algebra: half-integers, exact Clebsch–Gordan coefficients, the
//! transition coefficients `C^q_m = ⟨f_g m; 1 q | f_e m+q⟩`, and multiplet bookkeeping
//! for identical fermions.
//!
//! Phases follow the Condon–Shortley convention throughout.

mod clebsch;
mod halfint;
mod multiplets;

use serde::{Deserialize, Serialize};

pub use clebsch::{clebsch_gordan, clebsch_gordan_exact, SqrtRational};
pub use halfint::HalfInt;
pub use multiplets::{
    couple_sectors, coupling_range, identical_fermion_multiplets, triangle, MultipletSet,
};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Structure class of a `f_g ↔ f_e` transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructureClass {
    /// `f_e = f_g − 1`
    MultiLambda,
    /// `f_e = f_g`
    MultiSquare,
    /// `f_e = f_g + 1`
    MultiV,
}

/// Ground and excited hyperfine manifolds of one atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelStructure {
    pub f_g: HalfInt,
    pub f_e: HalfInt,
    pub class: StructureClass,
}

impl LevelStructure {
    pub fn new(f_g: HalfInt, f_e: HalfInt) -> Result<Self> {
        if f_g.twice() < 0 || f_e.twice() < 0 {
            return Err(Error::LevelStructure(format!("negative spin in {f_g} ↔ {f_e}")));
        }
        let class = match f_e.twice() - f_g.twice() {
            -2 => StructureClass::MultiLambda,
            0 => StructureClass::MultiSquare,
            2 => StructureClass::MultiV,
            _ => {
                return Err(Error::LevelStructure(format!(
                    "f_g = {f_g} and f_e = {f_e} are not dipole coupled (|f_e − f_g| must be 0 or 1)"
                )))
            }
        };
        if f_g.twice() == 0 && f_e.twice() == 0 {
            return Err(Error::LevelStructure("0 ↔ 0 transition is dipole forbidden".into()));
        }
        Ok(LevelStructure { f_g, f_e, class })
    }

    /// Convenience constructor from twice the spins.
    pub fn from_twice(twice_fg: i32, twice_fe: i32) -> Result<Self> {
        Self::new(HalfInt::from_twice(twice_fg), HalfInt::from_twice(twice_fe))
    }

    /// Number of internal levels of one atom, `2f_g + 1 + 2f_e + 1`.
    pub fn levels_per_site(&self) -> usize {
        self.f_g.multiplicity() + self.f_e.multiplicity()
    }
}

impl std::fmt::Display for LevelStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}<->{}", self.f_g, self.f_e)
    }
}

/// Exact `C^q_m = ⟨f_g m; 1 q | f_e m+q⟩`.
pub fn cq_exact(ls: &LevelStructure, q: i32, m: HalfInt) -> Result<SqrtRational> {
    if !(-1..=1).contains(&q) {
        return Err(Error::Domain(format!("polarization index q = {q} outside {{-1, 0, 1}}")));
    }
    ls.f_g.check_parity(m)?;
    if m.twice().abs() > ls.f_g.twice() {
        return Err(Error::Domain(format!("|m| = {} exceeds f_g = {}", m.abs(), ls.f_g)));
    }
    let me = m + HalfInt::from_int(q);
    if me.twice().abs() > ls.f_e.twice() {
        return Ok(SqrtRational::zero());
    }
    clebsch_gordan_exact(ls.f_g, m, HalfInt::ONE, HalfInt::from_int(q), ls.f_e, me)
}

/// Floating-point `C^q_m`.
pub fn cq<T: Real>(ls: &LevelStructure, q: i32, m: HalfInt) -> Result<T> {
    Ok(cq_exact(ls, q, m)?.to_real())
}
