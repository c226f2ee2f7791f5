// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HalfInt;
use crate::error::{Error, Result};

/// Multiset of total angular momenta `F` with multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultipletSet {
    entries: Vec<(HalfInt, usize)>,
}

impl MultipletSet {
    /// Builds a set from `(F, multiplicity)` pairs; zero multiplicities are dropped
    /// and repeated `F` values merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (HalfInt, usize)>) -> Self {
        let mut map: BTreeMap<HalfInt, usize> = BTreeMap::new();
        for (f, k) in pairs {
            if k > 0 {
                *map.entry(f).or_default() += k;
            }
        }
        MultipletSet { entries: map.into_iter().collect() }
    }

    /// Single multiplet `F` with multiplicity one.
    pub fn single(f: HalfInt) -> Self {
        Self::from_pairs([(f, 1)])
    }

    /// Entries sorted by ascending `F`.
    pub fn entries(&self) -> &[(HalfInt, usize)] {
        &self.entries
    }

    pub fn multiplicity(&self, f: HalfInt) -> usize {
        self.entries.iter().find(|(g, _)| *g == f).map_or(0, |(_, k)| *k)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of states `Σ (2F+1)·mult`.
    pub fn dimension(&self) -> usize {
        self.entries.iter().map(|(f, k)| f.multiplicity() * k).sum()
    }

    /// Number of multiplets `Σ mult`.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|(_, k)| k).sum()
    }

    pub fn values(&self) -> Vec<HalfInt> {
        self.entries.iter().map(|(f, _)| *f).collect()
    }
}

/// Multiplets allowed for `n` identical fermions sharing one spin-`f` orbital.
///
/// Occupation patterns are enumerated, their total projections histogrammed, and multiplets
/// peeled off from the top of the histogram.
pub fn identical_fermion_multiplets(f: HalfInt, n: usize) -> Result<MultipletSet> {
    if f.twice() < 0 {
        return Err(Error::Domain(format!("negative spin {f}")));
    }
    let levels = f.multiplicity();
    if n > levels {
        return Err(Error::EmptySector(format!("{n} fermions cannot occupy {levels} levels")));
    }
    if levels > 32 {
        return Err(Error::Domain(format!("spin {f} too large for enumeration")));
    }
    let mut histogram: BTreeMap<i32, usize> = BTreeMap::new();
    for mask in 0u64..(1u64 << levels) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let twice_m: i32 = (0..levels)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| 2 * b as i32 - f.twice())
            .sum();
        *histogram.entry(twice_m).or_default() += 1;
    }
    let mut pairs = Vec::new();
    for (&twice_m, &count) in histogram.iter().rev() {
        if twice_m < 0 {
            break;
        }
        let above = histogram.get(&(twice_m + 2)).copied().unwrap_or(0);
        debug_assert!(count >= above);
        pairs.push((HalfInt::from_twice(twice_m), count - above));
    }
    Ok(MultipletSet::from_pairs(pairs))
}

/// Couples every multiplet of `a` with an additional angular momentum `f2`.
pub fn couple_sectors(a: &MultipletSet, f2: HalfInt) -> MultipletSet {
    let mut pairs = Vec::new();
    for &(f1, k) in a.entries() {
        for f in coupling_range(f1, f2) {
            pairs.push((f, k));
        }
    }
    MultipletSet::from_pairs(pairs)
}

/// Values `|a−b|, …, a+b` in unit steps.
pub fn coupling_range(a: HalfInt, b: HalfInt) -> impl Iterator<Item = HalfInt> {
    let lo = (a.twice() - b.twice()).abs();
    let hi = a.twice() + b.twice();
    (lo..=hi).step_by(2).map(HalfInt::from_twice)
}

/// Triangle rule for three magnitudes.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}
