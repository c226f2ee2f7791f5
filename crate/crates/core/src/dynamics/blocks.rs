// SPDX-License-Identifier: Apache-2.0

//! Block-sparse storage of `ρ`.
//!
//! The basis is split into the connected components of `H`; coherent evolution never mixes
//! component pairs `(i, j)`, and only the pairs reachable from `ρ₀` through quantum jumps are
//! stored.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::fock::SparseOperator;
use crate::liouvillian::GeneratorSet;
use crate::Complex64;

type M = DMatrix<Complex64>;
type Triplets = Vec<(usize, usize, Complex64)>;

fn triplets(m: &M) -> Triplets {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_zero() {
                out.push((r, c, m[(r, c)]));
            }
        }
    }
    out
}

/// `out += s·A·x` for sparse `A`.
fn add_left(out: &mut M, a: &Triplets, x: &M, s: Complex64) {
    for &(r, k, v) in a {
        let w = v * s;
        for c in 0..x.ncols() {
            out[(r, c)] += w * x[(k, c)];
        }
    }
}

/// `out += s·x·A†` for sparse `A`.
fn add_right_adjoint(out: &mut M, x: &M, a: &Triplets, s: Complex64) {
    for &(c, k, v) in a {
        let w = v.conj() * s;
        for r in 0..x.nrows() {
            out[(r, c)] += x[(r, k)] * w;
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Partition of the basis into components of the Hamiltonian graph.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    offset: Vec<usize>,
}

impl BlockLayout {
    pub fn from_hamiltonian(h: &M) -> Self {
        let d = h.nrows();
        let mut parent: Vec<usize> = (0..d).collect();
        for r in 0..d {
            for c in 0..d {
                if r != c && !h[(r, c)].is_zero() {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut label: HashMap<usize, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0; d];
        let mut offset = vec![0; d];
        for i in 0..d {
            let root = find(&mut parent, i);
            let b = *label.entry(root).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            block_of[i] = b;
            offset[i] = blocks[b].len();
            blocks[b].push(i);
        }
        BlockLayout { blocks, block_of, offset }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offset[i]
    }

    pub fn sub_matrix(&self, a: &M, i: usize, j: usize) -> M {
        let (bi, bj) = (&self.blocks[i], &self.blocks[j]);
        M::from_fn(bi.len(), bj.len(), |r, c| a[(bi[r], bj[c])])
    }
}

/// Restriction of a sparse operator to `block k ← block i` pieces.
#[derive(Clone, Debug)]
pub(crate) struct BlockOperator {
    pieces: HashMap<usize, Vec<(usize, M)>>,
    sparse: Vec<Vec<(usize, Triplets)>>,
}

impl BlockOperator {
    pub fn new(op: &SparseOperator<f64>, layout: &BlockLayout) -> Self {
        let mut pieces: HashMap<(usize, usize), M> = HashMap::new();
        for &(r, c, v) in op.entries() {
            let (bk, bi) = (layout.block_of(r), layout.block_of(c));
            let piece = pieces.entry((bk, bi)).or_insert_with(|| {
                M::from_element(layout.blocks[bk].len(), layout.blocks[bi].len(), Complex64::zero())
            });
            piece[(layout.offset(r), layout.offset(c))] += v;
        }
        let mut by_source: HashMap<usize, Vec<(usize, M)>> = HashMap::new();
        for ((bk, bi), m) in pieces {
            by_source.entry(bi).or_default().push((bk, m));
        }
        let mut sparse = vec![Vec::new(); layout.len()];
        for (source, v) in by_source.iter_mut() {
            v.sort_by_key(|(k, _)| *k);
            sparse[*source] = v.iter().map(|(k, m)| (*k, triplets(m))).collect();
        }
        BlockOperator { pieces: by_source, sparse }
    }

    fn sparse_images(&self, source: usize) -> &[(usize, Triplets)] {
        &self.sparse[source]
    }

    pub fn images(&self, source: usize) -> &[(usize, M)] {
        self.pieces.get(&source).map_or(&[], |v| v.as_slice())
    }
}

/// `ρ` stored on the reachable block pairs.
#[derive(Clone, Debug)]
pub struct BlockRho {
    pub pairs: Vec<(usize, usize)>,
    pub mats: Vec<M>,
}

impl BlockRho {
    pub fn zeros_like(&self) -> Self {
        BlockRho {
            pairs: self.pairs.clone(),
            mats: self.mats.iter().map(|m| M::from_element(m.nrows(), m.ncols(), Complex64::zero())).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            *a += b * Complex64::new(alpha, 0.0);
        }
    }

    pub fn to_dense(&self, layout: &BlockLayout, dim: usize) -> M {
        let mut out = M::from_element(dim, dim, Complex64::zero());
        for ((i, j), m) in self.pairs.iter().zip(&self.mats) {
            let (bi, bj) = (&layout.blocks[*i], &layout.blocks[*j]);
            for (r, &gr) in bi.iter().enumerate() {
                for (c, &gc) in bj.iter().enumerate() {
                    out[(gr, gc)] = m[(r, c)];
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Everything the integrator needs, precomputed on the block layout.
#[derive(Clone, Debug)]
pub(crate) struct BlockSystem {
    pub layout: BlockLayout,
    pub dim: usize,
    hamiltonians: Vec<M>,
    h_sparse: Vec<Triplets>,
    lowering: Vec<BlockOperator>,
    jumps: Vec<(usize, usize, Complex64)>,
    pub pair_index: HashMap<(usize, usize), usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl BlockSystem {
    pub fn new(gens: &GeneratorSet<f64>, rho0: &M) -> Self {
        let h = gens.hamiltonian();
        let layout = BlockLayout::from_hamiltonian(&h);
        let hamiltonians: Vec<M> = (0..layout.len()).map(|b| layout.sub_matrix(&h, b, b)).collect();
        let lowering: Vec<BlockOperator> = gens.lowering.iter().map(|l| BlockOperator::new(l, &layout)).collect();
        let jumps: Vec<(usize, usize, Complex64)> = gens.jumps.iter().map(|j| (j.a, j.b, j.weight)).collect();

        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue = VecDeque::new();
        for r in 0..rho0.nrows() {
            for c in 0..rho0.ncols() {
                if !rho0[(r, c)].is_zero() {
                    let p = (layout.block_of(r), layout.block_of(c));
                    if seen.insert(p) {
                        queue.push_back(p);
                    }
                }
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            for &(a, b, _) in &jumps {
                for (k, _) in lowering[b].images(i) {
                    for (l, _) in lowering[a].images(j) {
                        if seen.insert((*k, *l)) {
                            queue.push_back((*k, *l));
                        }
                    }
                }
            }
        }
        let pairs: Vec<(usize, usize)> = seen.into_iter().collect();
        let pair_index = pairs.iter().enumerate().map(|(n, p)| (*p, n)).collect();
        let h_sparse = hamiltonians.iter().map(triplets).collect();
        BlockSystem { layout, dim: h.nrows(), hamiltonians, h_sparse, lowering, jumps, pair_index, pairs }
    }

    pub fn stored_entries(&self) -> usize {
        self.pairs.iter().map(|(i, j)| self.layout.blocks[*i].len() * self.layout.blocks[*j].len()).sum()
    }

    pub fn split(&self, rho: &M) -> BlockRho {
        BlockRho {
            pairs: self.pairs.clone(),
            mats: self.pairs.iter().map(|(i, j)| self.layout.sub_matrix(rho, *i, *j)).collect(),
        }
    }

    /// `exp(−i H_b t)` for every block.
    pub fn propagators(&self, t: f64) -> Vec<M> {
        self.hamiltonians.iter().map(|h| (h * Complex64::new(0.0, -t)).exp()).collect()
    }

    /// `Φ(ρ) = U ρ U†` pair by pair.
    pub fn conjugate(&self, rho: &BlockRho, u: &[M]) -> BlockRho {
        BlockRho {
            pairs: rho.pairs.clone(),
            mats: rho
                .pairs
                .iter()
                .zip(&rho.mats)
                .map(|((i, j), m)| &u[*i] * m * u[*j].adjoint())
                .collect(),
        }
    }

    /// `ℒ_rec(ρ) = Σ_ab 2 I_ab L_b ρ L_a†`.
    pub fn recycle(&self, rho: &BlockRho) -> BlockRho {
        let mut out = rho.zeros_like();
        let mut left: Vec<Option<Vec<(usize, M)>>> = vec![None; self.lowering.len()];
        for ((i, j), m) in rho.pairs.iter().zip(&rho.mats) {
            left.iter_mut().for_each(|slot| *slot = None);
            for &(a, b, w) in &self.jumps {
                let lb = left[b].get_or_insert_with(|| {
                    self.lowering[b]
                        .sparse_images(*i)
                        .iter()
                        .map(|(k, lk)| {
                            let mut x = M::zeros(self.layout.blocks[*k].len(), m.ncols());
                            add_left(&mut x, lk, m, Complex64::new(1.0, 0.0));
                            (*k, x)
                        })
                        .collect()
                });
                for (l, la) in self.lowering[a].sparse_images(*j) {
                    for (k, x) in lb.iter() {
                        let idx = self.pair_index[&(*k, *l)];
                        add_right_adjoint(&mut out.mats[idx], x, la, w * 2.0);
                    }
                }
            }
        }
        out
    }
}

impl BlockSystem {
    /// `𝓛ρ = −i(Hρ − ρH†) + ℒ_rec(ρ)`.
    pub fn liouvillian(&self, rho: &BlockRho) -> BlockRho {
        let mut out = self.recycle(rho);
        let minus_i = Complex64::new(0.0, -1.0);
        for (((i, j), m), o) in rho.pairs.iter().zip(&rho.mats).zip(out.mats.iter_mut()) {
            add_left(o, &self.h_sparse[*i], m, minus_i);
            add_right_adjoint(o, m, &self.h_sparse[*j], -minus_i);
        }
        out
    }

    /// Upper bound on the Frobenius-induced norm of `𝓛`.
    pub fn norm_bound(&self) -> f64 {
        let h = self.hamiltonians.iter().map(|h| h.norm()).fold(0.0, f64::max);
        let l: Vec<f64> = self
            .lowering
            .iter()
            .map(|op| op.pieces.values().flatten().map(|(_, m)| m.norm_squared()).sum::<f64>().sqrt())
            .collect();
        let rec: f64 = self.jumps.iter().map(|(a, b, w)| 2.0 * w.norm() * l[*a] * l[*b]).sum();
        2.0 * h + rec
    }

    pub fn flatten(&self, rho: &BlockRho) -> Vec<Complex64> {
        rho.mats.iter().flat_map(|m| m.iter().copied()).collect()
    }

    pub fn unflatten(&self, flat: &[Complex64]) -> BlockRho {
        let mut k = 0;
        let mats = self
            .pairs
            .iter()
            .map(|(i, j)| {
                let (r, c) = (self.layout.blocks[*i].len(), self.layout.blocks[*j].len());
                let m = M::from_column_slice(r, c, &flat[k..k + r * c]);
                k += r * c;
                m
            })
            .collect();
        BlockRho { pairs: self.pairs.clone(), mats }
    }
}
