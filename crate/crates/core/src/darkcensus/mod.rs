// SPDX-License-Identifier: Apache-2.0

//! Analytic dark-state counting in the coupled basis.
//!
//! Sources are the multiplets `|ξ F M⟩` of an `n_e` sector, `ξ` being a ground-shell multiplet
//! of `n − n_e` fermions paired with an excited-shell multiplet of `n_e` fermions; targets are the
//! multiplets at `n_e − 1`. The dark space is rotation invariant, so it splits into `F` blocks and
//! within a block only the highest weight `M = F` needs to be examined. Decay amplitudes are
//! assembled from single-shell parentage elements of `ĉ†_g` and `ĉ_e` recoupled with
//! Clebsch–Gordan coefficients. The rank of the resulting source-by-channel matrix gives the
//! number of independent decay equations; a structural (bipartite-matching) rank built from
//! triangle rules alone is kept as the upper bound used for quick estimates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

mod shell;

use shell::{annihilation_elements, creation_elements, Shell};

use crate::angular::{
    clebsch_gordan, coupling_range, cq, identical_fermion_multiplets, triangle, HalfInt,
    LevelStructure, StructureClass,
};
use crate::error::{Error, Result};
use crate::fock::{lowering_operator, CoupledBasis, Orbital, SectorBasis};
use crate::linalg::null_space;
use crate::liouvillian::lowered_basis;
use crate::scalar::Real;
use crate::spectrum::{DarkSet, NULL_SPACE_TOLERANCE};
use crate::Complex64;

/// Relative singular-value cutoff for the decay-amplitude rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// A coupled multiplet `|(F_g, F_e) F⟩` with copy indices for repeated intermediate values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultipletLabel {
    pub twice_fg: i32,
    pub ground_copy: usize,
    pub twice_fe: i32,
    pub excited_copy: usize,
    pub twice_f: i32,
}

/// Bookkeeping for all sources sharing one total `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FGroup {
    pub twice_f: i32,
    pub sources: Vec<MultipletLabel>,
    /// Target multiplets reachable from at least one source.
    pub targets: Vec<MultipletLabel>,
    /// Rank permitted by triangle rules alone.
    pub structural_rank: usize,
    /// Rank of the decay amplitudes, i.e. the number of independent equations.
    pub rank: usize,
    /// Dark multiplets `sources − rank` (each carrying `2F+1` states).
    pub dark_multiplets: usize,
}

/// One `M` row of a census.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub twice_m: i32,
    pub states: usize,
    /// Distinct target states `|ξ' F' M−q⟩` reachable at this `M`.
    pub channels: usize,
    pub independent_equations: usize,
    pub predicted_darks: usize,
}

/// Census of one `(f_g, f_e, n, n_e)` sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorCensus {
    pub level_structure: LevelStructure,
    pub n: usize,
    pub n_excited: usize,
    pub f_groups: Vec<FGroup>,
    pub rows: Vec<CensusRow>,
}

impl SectorCensus {
    pub fn total_predicted(&self) -> usize {
        self.rows.iter().map(|r| r.predicted_darks).sum()
    }

    pub fn total_states(&self) -> usize {
        self.rows.iter().map(|r| r.states).sum()
    }

    pub fn predicted_at(&self, twice_m: i32) -> usize {
        self.rows.iter().find(|r| r.twice_m == twice_m).map_or(0, |r| r.predicted_darks)
    }
}

struct Sector {
    ground: Option<Shell>,
    excited: Option<Shell>,
    labels: Vec<MultipletLabel>,
}

impl Sector {
    fn build(ls: &LevelStructure, n: usize, n_e: usize) -> Result<Self> {
        let ground = Shell::build(ls, Orbital::G, n - n_e)?;
        let excited = Shell::build(ls, Orbital::E, n_e)?;
        let mut labels = Vec::new();
        if let (Some(g), Some(e)) = (&ground, &excited) {
            for (tg, gc) in g.multiplets() {
                for (te, ec) in e.multiplets() {
                    for f in coupling_range(HalfInt::from_twice(tg), HalfInt::from_twice(te)) {
                        labels.push(MultipletLabel {
                            twice_fg: tg,
                            ground_copy: gc,
                            twice_fe: te,
                            excited_copy: ec,
                            twice_f: f.twice(),
                        });
                    }
                }
            }
        }
        labels.sort();
        Ok(Self { ground, excited, labels })
    }

    /// Components `(ground state, excited state, CG)` of `|ξ F M⟩`.
    fn components(&self, label: &MultipletLabel, twice_m: i32) -> Result<Vec<(usize, usize, f64)>> {
        let (Some(g), Some(e)) = (&self.ground, &self.excited) else {
            return Ok(Vec::new());
        };
        let h = HalfInt::from_twice;
        let mut out = Vec::new();
        let mut tmg = -label.twice_fg;
        while tmg <= label.twice_fg {
            let tme = twice_m - tmg;
            if tme.abs() <= label.twice_fe {
                let w: f64 = clebsch_gordan(
                    h(label.twice_fg),
                    h(tmg),
                    h(label.twice_fe),
                    h(tme),
                    h(label.twice_f),
                    h(twice_m),
                )?;
                if w != 0.0 {
                    let gi = g.find(label.twice_fg, label.ground_copy, tmg).expect("ground ladder");
                    let ei = e.find(label.twice_fe, label.excited_copy, tme).expect("excited ladder");
                    out.push((gi, ei, w));
                }
            }
            tmg += 2;
        }
        Ok(out)
    }
}

fn connected(ls: &LevelStructure, s: &MultipletLabel, t: &MultipletLabel) -> bool {
    let h = HalfInt::from_twice;
    triangle(h(s.twice_f), HalfInt::ONE, h(t.twice_f))
        && triangle(h(s.twice_fg), ls.f_g, h(t.twice_fg))
        && triangle(h(t.twice_fe), ls.f_e, h(s.twice_fe))
}

/// Maximum bipartite matching (Kuhn's augmenting paths); equals the generic rank of a
/// matrix with the given nonzero pattern.
pub fn generic_rank(adjacency: &[Vec<usize>], right_count: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right_count];
    let mut size = 0;
    for u in 0..adjacency.len() {
        let mut seen = vec![false; right_count];
        if augment(u, adjacency, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Decay amplitudes `⟨ξ'F', F−q|𝒟⁻_q|ξ F, F⟩` of the highest-weight sources, one row per
/// `(target, q)` channel.
fn amplitude_matrix(
    ls: &LevelStructure,
    source: &Sector,
    target: &Sector,
    sources: &[MultipletLabel],
    targets: &[MultipletLabel],
    twice_f: i32,
) -> Result<DMatrix<Complex64>> {
    let (Some(g), Some(e), Some(g2), Some(e2)) =
        (&source.ground, &source.excited, &target.ground, &target.excited)
    else {
        return Ok(DMatrix::zeros(0, sources.len()));
    };
    let create = creation_elements(g, g2, ls)?;
    let remove = annihilation_elements(e, e2, ls)?;
    let src: Vec<Vec<(usize, usize, f64)>> =
        sources.iter().map(|s| source.components(s, twice_f)).collect::<Result<_>>()?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for t in targets {
        for q in -1..=1 {
            let tm = twice_f - 2 * q;
            if tm.abs() > t.twice_f {
                continue;
            }
            let tgt = target.components(t, tm)?;
            let mut row = vec![Complex64::new(0.0, 0.0); sources.len()];
            for (col, comps) in src.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in ls.f_g.projections() {
                    let mu = m + HalfInt::from_int(q);
                    if !ls.f_e.admits(mu) {
                        continue;
                    }
                    let c: f64 = cq(ls, q, m)?;
                    let (cg, ce) = (&create[&m.twice()], &remove[&mu.twice()]);
                    for &(ti_g, ti_e, wt) in &tgt {
                        for &(si_g, si_e, ws) in comps {
                            acc += cg[(ti_g, si_g)] * ce[(ti_e, si_e)] * (c * wt * ws);
                        }
                    }
                }
                row[col] = acc;
            }
            rows.push(row);
        }
    }
    Ok(DMatrix::from_fn(rows.len(), sources.len(), |r, c| rows[r][c]))
}

fn numerical_rank(a: &DMatrix<Complex64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Predicted dark states of the `(n, n_e)` sector, per total projection `M`.
pub fn census(ls: &LevelStructure, n: usize, n_excited: usize) -> Result<SectorCensus> {
    if n_excited == 0 || n_excited > n {
        return Err(Error::Domain(format!("census needs 1 <= n_e <= n, got n_e = {n_excited}, n = {n}")));
    }
    if n > ls.levels_per_site() {
        return Err(Error::EmptySector(format!("{n} fermions exceed the {} levels of {ls}", ls.levels_per_site())));
    }
    let source = Sector::build(ls, n, n_excited)?;
    let target = Sector::build(ls, n, n_excited - 1)?;
    let mut by_f: BTreeMap<i32, Vec<MultipletLabel>> = BTreeMap::new();
    for s in &source.labels {
        by_f.entry(s.twice_f).or_default().push(*s);
    }
    let mut f_groups = Vec::new();
    for (tf, group) in by_f {
        let reachable: Vec<MultipletLabel> = target
            .labels
            .iter()
            .filter(|t| group.iter().any(|s| connected(ls, s, t)))
            .copied()
            .collect();
        let adjacency: Vec<Vec<usize>> = group
            .iter()
            .map(|s| (0..reachable.len()).filter(|&k| connected(ls, s, &reachable[k])).collect())
            .collect();
        let structural_rank = generic_rank(&adjacency, reachable.len());
        let rank = numerical_rank(&amplitude_matrix(ls, &source, &target, &group, &reachable, tf)?);
        f_groups.push(FGroup {
            twice_f: tf,
            dark_multiplets: group.len() - rank,
            sources: group,
            targets: reachable,
            structural_rank,
            rank,
        });
    }
    let max_f = f_groups.iter().map(|g| g.twice_f).max().unwrap_or(-1);
    let parity = max_f.rem_euclid(2);
    let mut rows = Vec::new();
    let mut tm = -max_f;
    while tm <= max_f {
        let present: Vec<&FGroup> = f_groups.iter().filter(|g| g.twice_f >= tm.abs()).collect();
        let states = present.iter().map(|g| g.sources.len()).sum();
        let independent = present.iter().map(|g| g.rank).sum();
        let mut channel_set: Vec<(MultipletLabel, i32)> = Vec::new();
        for g in &present {
            for t in &g.targets {
                for q in [-2, 0, 2] {
                    let tmp = tm - q;
                    if tmp.abs() <= t.twice_f && !channel_set.contains(&(*t, tmp)) {
                        channel_set.push((*t, tmp));
                    }
                }
            }
        }
        rows.push(CensusRow {
            twice_m: tm,
            states,
            channels: channel_set.len(),
            independent_equations: independent,
            predicted_darks: states - independent,
        });
        tm += 2;
    }
    debug_assert!(rows.iter().all(|r| r.twice_m.rem_euclid(2) == parity));
    Ok(SectorCensus { level_structure: *ls, n, n_excited, f_groups, rows })
}

/// The `n = 4` census, identical machinery with two-stage intermediate labels.
pub fn census_n4(ls: &LevelStructure, n_excited: usize) -> Result<SectorCensus> {
    census(ls, 4, n_excited)
}

/// Single-excitation `n = 3` multiplets that are dark for any coupling strengths:
/// `(F_g, F)` with `F_g = 2f_g − 1` and `F` more than one unit above every target `F'`.
/// When three ground fermions do not fit in the shell there is no target and every such
/// multiplet is dark.
pub fn stretched_dark_rule(ls: &LevelStructure) -> Vec<(HalfInt, HalfInt)> {
    if ls.class == StructureClass::MultiLambda {
        return Vec::new();
    }
    let fg_pair = HalfInt::from_twice(2 * ls.f_g.twice() - 2);
    if fg_pair.twice() < 0 {
        return Vec::new();
    }
    let target_max = identical_fermion_multiplets(ls.f_g, 3).ok().and_then(|s| s.values().last().copied());
    let mut out: Vec<(HalfInt, HalfInt)> = coupling_range(fg_pair, ls.f_e)
        .filter(|f| target_max.is_none_or(|t| f.twice() > t.twice() + 2))
        .map(|f| (fg_pair, f))
        .collect();
    out.reverse();
    out
}

/// Superposition of coupled states annihilated by every `𝒟⁻_q`.
#[derive(Clone, Debug)]
pub struct DarkVector<T: Real> {
    pub n_excited: usize,
    pub twice_f: i32,
    pub twice_m: i32,
    /// `(2F_g, coefficient)` over the coupled states spanning the `(n_e, F, M)` space.
    pub components: Vec<(i32, Complex<T>)>,
    /// The state over the Fock basis.
    pub vector: DVector<Complex<T>>,
}

/// Result of [`solve_superposition`].
#[derive(Clone, Debug)]
pub enum SuperpositionOutcome<T: Real> {
    Dark(Vec<DarkVector<T>>),
    Bright,
}

/// Dark superpositions inside the span of coupled states sharing `(n_e, F, M)`.
pub fn solve_superposition<T: Real>(
    basis: &SectorBasis,
    coupled: &CoupledBasis<T>,
    n_excited: usize,
    twice_f: i32,
    twice_m: i32,
) -> Result<SuperpositionOutcome<T>> {
    let span = coupled.select(Some(n_excited), Some(twice_f), Some(twice_m), None);
    if span.is_empty() {
        return Err(Error::EmptySector(format!(
            "no coupled states with n_e = {n_excited}, 2F = {twice_f}, 2M = {twice_m}"
        )));
    }
    let dim = basis.dim();
    let v = DMatrix::from_fn(dim, span.len(), |r, c| span[c].vector[r]);
    let mid = lowered_basis(basis)?;
    let mut blocks = Vec::new();
    for site in 0..basis.site_count() {
        for q in -1..=1 {
            blocks.push(lowering_operator::<T>(site, q, basis, &mid)?.to_dense() * &v);
        }
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut stacked = DMatrix::zeros(rows, span.len());
    let mut offset = 0;
    for b in &blocks {
        stacked.view_mut((offset, 0), (b.nrows(), b.ncols())).copy_from(b);
        offset += b.nrows();
    }
    let null = null_space(&stacked, T::lit(NULL_SPACE_TOLERANCE));
    if null.ncols() == 0 {
        return Ok(SuperpositionOutcome::Bright);
    }
    let darks = (0..null.ncols())
        .map(|c| {
            let coeffs = null.column(c).into_owned();
            DarkVector {
                n_excited,
                twice_f,
                twice_m,
                components: span.iter().zip(coeffs.iter()).map(|(s, z)| (s.twice_fg, *z)).collect(),
                vector: &v * coeffs,
            }
        })
        .collect();
    Ok(SuperpositionOutcome::Dark(darks))
}

/// Predicted against numerical dark counts for one `M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusCheck {
    pub twice_m: i32,
    pub states: usize,
    pub channels: usize,
    pub predicted: usize,
    pub numerical: usize,
}

/// Compares a census with numerically found dark sets of the same `n_e`.
pub fn cross_check<T: Real>(census: &SectorCensus, dark_sets: &[DarkSet<T>]) -> Vec<CensusCheck> {
    census
        .rows
        .iter()
        .map(|r| CensusCheck {
            twice_m: r.twice_m,
            states: r.states,
            channels: r.channels,
            predicted: r.predicted_darks,
            numerical: dark_sets
                .iter()
                .filter(|d| d.n_excited == census.n_excited && d.twice_m == r.twice_m)
                .map(|d| d.count())
                .sum(),
        })
        .collect()
}
