// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angular::{HalfInt, LevelStructure};
use crate::error::{Error, Result};

/// Ground or excited hyperfine manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orbital {
    G,
    E,
}

/// One internal level `|g_m⟩` or `|e_m⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SingleParticleLevel {
    pub orbital: Orbital,
    pub m: HalfInt,
}

impl SingleParticleLevel {
    pub fn g(m: HalfInt) -> Self {
        SingleParticleLevel { orbital: Orbital::G, m }
    }

    pub fn e(m: HalfInt) -> Self {
        SingleParticleLevel { orbital: Orbital::E, m }
    }

    /// Position in the per-site canonical ordering: g levels by ascending m, then e levels.
    pub fn index(&self, ls: &LevelStructure) -> Result<usize> {
        let f = match self.orbital {
            Orbital::G => ls.f_g,
            Orbital::E => ls.f_e,
        };
        if !f.admits(self.m) {
            return Err(Error::Domain(format!("level {self} does not exist for {ls}")));
        }
        let offset = match self.orbital {
            Orbital::G => 0,
            Orbital::E => ls.f_g.multiplicity(),
        };
        Ok(offset + ((self.m.twice() + f.twice()) / 2) as usize)
    }

    /// Inverse of [`SingleParticleLevel::index`].
    pub fn from_index(ls: &LevelStructure, idx: usize) -> Self {
        let ng = ls.f_g.multiplicity();
        if idx < ng {
            SingleParticleLevel::g(HalfInt::from_twice(2 * idx as i32 - ls.f_g.twice()))
        } else {
            SingleParticleLevel::e(HalfInt::from_twice(2 * (idx - ng) as i32 - ls.f_e.twice()))
        }
    }
}

impl fmt::Display for SingleParticleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orbital {
            Orbital::G => 'g',
            Orbital::E => 'e',
        };
        write!(f, "{o}{}", self.m)
    }
}

/// Occupation bitset; bit `site·L + level_index` marks an occupied mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockState(pub u64);

impl FockState {
    pub fn occupied(self, mode: usize) -> bool {
        self.0 >> mode & 1 == 1
    }

    pub fn popcount(self) -> usize {
        self.0.count_ones() as usize
    }
}

/// Optional conserved totals used to restrict a basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorConstraints {
    pub n_excited: Option<usize>,
    pub twice_m: Option<i32>,
}

impl SectorConstraints {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn excited(n_e: usize) -> Self {
        SectorConstraints { n_excited: Some(n_e), twice_m: None }
    }

    pub fn sector(n_e: usize, twice_m: i32) -> Self {
        SectorConstraints { n_excited: Some(n_e), twice_m: Some(twice_m) }
    }
}

/// Antisymmetric basis of `n` fermions per site on `site_count` sites.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    ls: LevelStructure,
    n: usize,
    site_count: usize,
    constraints: SectorConstraints,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

fn combinations(levels: usize, n: usize) -> Vec<u64> {
    if n == 0 {
        return vec![0];
    }
    if n > levels {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << n) - 1;
    let limit = 1u64 << levels;
    while v < limit {
        out.push(v);
        let t = v | (v - 1);
        let next = (t + 1) | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
        if next <= v {
            break;
        }
        v = next;
    }
    out
}

impl SectorBasis {
    /// Enumerates every state with `n` fermions on each site that satisfies `constraints`.
    ///
    /// An unsatisfiable constraint yields an empty basis, not an error.
    pub fn build(
        ls: LevelStructure,
        n: usize,
        site_count: usize,
        constraints: SectorConstraints,
    ) -> Result<Self> {
        let l = ls.levels_per_site();
        if site_count == 0 {
            return Err(Error::Domain("site_count must be at least 1".into()));
        }
        if n > l {
            return Err(Error::EmptySector(format!("{n} fermions exceed the {l} levels of {ls}")));
        }
        if site_count * l > 64 {
            return Err(Error::Guardrail(format!(
                "{site_count} sites × {l} levels exceed the 64-mode bitset"
            )));
        }
        let per_site = combinations(l, n);
        let mut states = Vec::new();
        let mut stack: Vec<(usize, u64)> = vec![(0, 0)];
        while let Some((site, acc)) = stack.pop() {
            if site == site_count {
                let s = FockState(acc);
                if Self::satisfies(&ls, site_count, s, &constraints) {
                    states.push(s);
                }
                continue;
            }
            for &p in &per_site {
                stack.push((site + 1, acc | p << (site * l)));
            }
        }
        states.sort_unstable();
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(SectorBasis { ls, n, site_count, constraints, states, index })
    }

    fn satisfies(ls: &LevelStructure, sites: usize, s: FockState, c: &SectorConstraints) -> bool {
        if let Some(ne) = c.n_excited {
            if excited_count(ls, sites, s) != ne {
                return false;
            }
        }
        if let Some(tm) = c.twice_m {
            if twice_projection(ls, sites, s) != tm {
                return false;
            }
        }
        true
    }

    /// Same structure and particle number with different constraints.
    pub fn with_constraints(&self, constraints: SectorConstraints) -> Result<Self> {
        Self::build(self.ls, self.n, self.site_count, constraints)
    }

    pub fn level_structure(&self) -> &LevelStructure {
        &self.ls
    }

    /// Fermions per site.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn constraints(&self) -> SectorConstraints {
        self.constraints
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> FockState {
        self.states[i]
    }

    pub fn index_of(&self, s: FockState) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn levels_per_site(&self) -> usize {
        self.ls.levels_per_site()
    }

    /// Global mode index of `level` on `site`.
    pub fn mode(&self, site: usize, level: SingleParticleLevel) -> Result<usize> {
        if site >= self.site_count {
            return Err(Error::Domain(format!("site {site} out of range")));
        }
        Ok(site * self.levels_per_site() + level.index(&self.ls)?)
    }

    pub fn excited_count(&self, i: usize) -> usize {
        excited_count(&self.ls, self.site_count, self.states[i])
    }

    pub fn twice_projection(&self, i: usize) -> i32 {
        twice_projection(&self.ls, self.site_count, self.states[i])
    }

    /// Occupation bits of one site, shifted to start at bit 0.
    pub fn site_bits(&self, s: FockState, site: usize) -> u64 {
        let l = self.levels_per_site();
        (s.0 >> (site * l)) & ((1u64 << l) - 1)
    }

    /// Basis indices grouped by `(n_e, 2M)`.
    pub fn sector_blocks(&self) -> BTreeMap<(usize, i32), Vec<usize>> {
        let mut out: BTreeMap<(usize, i32), Vec<usize>> = BTreeMap::new();
        for i in 0..self.dim() {
            out.entry((self.excited_count(i), self.twice_projection(i))).or_default().push(i);
        }
        out
    }

    /// Occupied levels of a state, site by site, in canonical order.
    pub fn describe(&self, s: FockState) -> String {
        let l = self.levels_per_site();
        let mut parts = Vec::new();
        for site in 0..self.site_count {
            let bits = self.site_bits(s, site);
            let levels: Vec<String> = (0..l)
                .filter(|b| bits >> b & 1 == 1)
                .map(|b| SingleParticleLevel::from_index(&self.ls, b).to_string())
                .collect();
            parts.push(levels.join(" "));
        }
        format!("|{}⟩", parts.join(" ; "))
    }

    /// Builds the state with the listed occupied levels on each site.
    pub fn state_from_levels(&self, per_site: &[Vec<SingleParticleLevel>]) -> Result<FockState> {
        if per_site.len() != self.site_count {
            return Err(Error::DimensionMismatch(format!(
                "{} site descriptions for {} sites",
                per_site.len(),
                self.site_count
            )));
        }
        let mut bits = 0u64;
        for (site, levels) in per_site.iter().enumerate() {
            if levels.len() != self.n {
                return Err(Error::Config(format!(
                    "site {site} lists {} levels, expected {}",
                    levels.len(),
                    self.n
                )));
            }
            for level in levels {
                let mode = self.mode(site, *level)?;
                if bits >> mode & 1 == 1 {
                    return Err(Error::Config(format!("level {level} listed twice (Pauli)")));
                }
                bits |= 1 << mode;
            }
        }
        Ok(FockState(bits))
    }
}

fn excited_count(ls: &LevelStructure, sites: usize, s: FockState) -> usize {
    let ng = ls.f_g.multiplicity();
    let l = ls.levels_per_site();
    let emask: u64 = ((1u64 << l) - 1) ^ ((1u64 << ng) - 1);
    (0..sites).map(|site| ((s.0 >> (site * l)) & emask).count_ones() as usize).sum()
}

fn twice_projection(ls: &LevelStructure, sites: usize, s: FockState) -> i32 {
    let l = ls.levels_per_site();
    let mut total = 0;
    for site in 0..sites {
        for b in 0..l {
            if s.0 >> (site * l + b) & 1 == 1 {
                total += SingleParticleLevel::from_index(ls, b).m.twice();
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gosper_enumeration_matches_binomials() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(20, 2).len(), 190);
        assert_eq!(combinations(10, 4).len(), 210);
        assert_eq!(combinations(5, 0), vec![0]);
        assert!(combinations(3, 4).is_empty());
    }

    #[test]
    fn level_index_roundtrip() {
        let ls = LevelStructure::from_twice(3, 5).unwrap();
        for i in 0..ls.levels_per_site() {
            let lv = SingleParticleLevel::from_index(&ls, i);
            assert_eq!(lv.index(&ls).unwrap(), i);
        }
    }
}
