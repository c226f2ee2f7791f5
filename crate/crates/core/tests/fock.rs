// SPDX-License-Identifier: Apache-2.0

use fermidark::angular::{HalfInt, LevelStructure};
use fermidark::fock::{
    annihilation, build_sector, casimir, coupled_basis, creation, f_plus, lowering_operator,
    number_excited, raising_operator, sigma, total_f_operators, FockState, Orbital, SectorBasis,
    SectorConstraints, SingleParticleLevel,
};
use fermidark::linalg::hermitian_eigen_groups;
use fermidark::{Complex64, Error, SparseOperatorF64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

type M = DMatrix<Complex64>;

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn ls(tg: i32, te: i32) -> LevelStructure {
    LevelStructure::from_twice(tg, te).unwrap()
}

fn sector(l: LevelStructure, n: usize, c: SectorConstraints) -> SectorBasis {
    build_sector(l, n, 1, c).unwrap()
}

fn dense(op: &SparseOperatorF64) -> M {
    op.to_dense()
}

fn norm(m: &M) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn levels(l: &LevelStructure) -> Vec<SingleParticleLevel> {
    (0..l.levels_per_site()).map(|i| SingleParticleLevel::from_index(l, i)).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn sector_dimensions() {
    assert_eq!(sector(ls(1, 1), 2, SectorConstraints::none()).dim(), 6);
    assert_eq!(sector(ls(9, 9), 2, SectorConstraints::none()).dim(), 190);
    assert_eq!(sector(ls(3, 3), 3, SectorConstraints::excited(1)).dim(), 24);
}

#[test]
fn unsatisfiable_constraints_give_an_empty_basis() {
    let b = sector(ls(1, 1), 2, SectorConstraints::sector(0, 4));
    assert!(b.is_empty());
    assert!(matches!(build_sector(ls(1, 1), 5, 1, SectorConstraints::none()), Err(Error::EmptySector(_))));
}

#[test]
fn enumeration_is_sorted_and_duplicate_free() {
    let b = sector(ls(5, 7), 3, SectorConstraints::none());
    assert!(b.states().windows(2).all(|w| w[0] < w[1]));
    assert!(b.states().iter().all(|s| s.popcount() == 3));
    for (i, s) in b.states().iter().enumerate() {
        assert_eq!(b.index_of(*s), Some(i));
    }
}

/// First-quantized Slater determinant for ascending modes, as a dense tensor of size L^n.
fn slater(modes: &[usize], l: usize) -> Vec<f64> {
    let n = modes.len();
    let mut out = vec![0.0; l.pow(n as u32)];
    let mut perm: Vec<usize> = (0..n).collect();
    let norm = (1..=n).map(|k| k as f64).product::<f64>().sqrt();
    loop {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        let idx = perm.iter().fold(0, |acc, &p| acc * l + modes[p]);
        out[idx] += sign / norm;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `Σ_k 1⊗…⊗|a⟩⟨b|_k⊗…⊗1` applied to a first-quantized tensor.
fn apply_one_body(psi: &[f64], a: usize, b: usize, l: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; psi.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        for k in 0..n {
            let stride = l.pow((n - 1 - k) as u32);
            let digit = idx / stride % l;
            if digit == b {
                out[idx - b * stride + a * stride] += amp;
            }
        }
    }
    out
}

fn modes_of(s: FockState, l: usize) -> Vec<usize> {
    (0..l).filter(|&b| s.occupied(b)).collect()
}

fn check_against_first_quantization(l_s: LevelStructure, n: usize) {
    let b = sector(l_s, n, SectorConstraints::none());
    let l = l_s.levels_per_site();
    let tensors: Vec<Vec<f64>> = b.states().iter().map(|s| slater(&modes_of(*s, l), l)).collect();
    let lv = levels(&l_s);
    for a in 0..l {
        for c in 0..l {
            let op = dense(&sigma::<f64>(0, lv[a], lv[c], &b, &b).unwrap());
            for col in 0..b.dim() {
                let image = apply_one_body(&tensors[col], a, c, l, n);
                for row in 0..b.dim() {
                    let want: f64 = tensors[row].iter().zip(&image).map(|(x, y)| x * y).sum();
                    assert!((op[(row, col)].re - want).abs() < 1e-12 && op[(row, col)].im == 0.0);
                }
            }
        }
    }
}

#[test]
fn sigma_matches_first_quantized_oracle() {
    check_against_first_quantization(ls(1, 1), 2);
    check_against_first_quantization(ls(3, 1), 2);
    check_against_first_quantization(ls(1, 3), 3);
}

#[test]
fn hand_worked_four_level_elements() {
    let l_s = ls(1, 1);
    let b = sector(l_s, 2, SectorConstraints::none());
    let st = |x: &[SingleParticleLevel]| b.index_of(b.state_from_levels(&[x.to_vec()]).unwrap()).unwrap();
    let (gm, gp, em, ep) = (
        SingleParticleLevel::g(h(-1)),
        SingleParticleLevel::g(h(1)),
        SingleParticleLevel::e(h(-1)),
        SingleParticleLevel::e(h(1)),
    );
    // ĉ†_{g+} ĉ_{e+} ĉ†_{g−} ĉ†_{e+}|0⟩ = ĉ†_{g−} ĉ†_{g+}|0⟩ after two transpositions
    let s1 = dense(&sigma::<f64>(0, gp, ep, &b, &b).unwrap());
    assert_eq!(s1[(st(&[gm, gp]), st(&[gm, ep]))], Complex64::new(1.0, 0.0));
    // ĉ†_{g−} ĉ_{e−} ĉ†_{g+} ĉ†_{e−}|0⟩ = ĉ†_{g+} ĉ†_{g−}|0⟩ = −ĉ†_{g−} ĉ†_{g+}|0⟩
    let s2 = dense(&sigma::<f64>(0, gm, em, &b, &b).unwrap());
    assert_eq!(s2[(st(&[gm, gp]), st(&[gp, em]))], Complex64::new(-1.0, 0.0));
    let diag = dense(&sigma::<f64>(0, gm, gm, &b, &b).unwrap());
    assert_eq!(diag[(st(&[gm, ep]), st(&[gm, ep]))], Complex64::new(1.0, 0.0));
    assert_eq!(diag[(st(&[gp, ep]), st(&[gp, ep]))], Complex64::new(0.0, 0.0));
}

fn full_fock_sectors(l_s: LevelStructure) -> Vec<SectorBasis> {
    (0..=l_s.levels_per_site()).map(|n| sector(l_s, n, SectorConstraints::none())).collect()
}

#[test]
fn canonical_anticommutation_relations() {
    let l_s = ls(3, 1);
    let secs = full_fock_sectors(l_s);
    let lv = levels(&l_s);
    let top = lv.len();
    for n in 0..=top {
        for &a in &lv {
            for &b in &lv {
                let dim = secs[n].dim();
                let mut acc = M::zeros(dim, dim);
                if n < top {
                    let up = creation::<f64>(0, b, &secs[n], &secs[n + 1]).unwrap();
                    let down = annihilation::<f64>(0, a, &secs[n + 1], &secs[n]).unwrap();
                    acc += dense(&down.matmul(&up).unwrap());
                }
                if n > 0 {
                    let down = annihilation::<f64>(0, a, &secs[n], &secs[n - 1]).unwrap();
                    let up = creation::<f64>(0, b, &secs[n - 1], &secs[n]).unwrap();
                    acc += dense(&up.matmul(&down).unwrap());
                }
                let want = if a == b { M::identity(dim, dim) } else { M::zeros(dim, dim) };
                assert!(norm(&(acc - want)) < 1e-14, "n={n} a={a} b={b}");
            }
        }
    }
}

#[test]
fn swapped_creation_order_flips_sign() {
    let l_s = ls(3, 3);
    let secs = full_fock_sectors(l_s);
    let vac = DVector::from_element(1, Complex64::new(1.0, 0.0));
    let lv = levels(&l_s);
    for &a in &lv {
        for &b in &lv {
            if a == b {
                continue;
            }
            let ab = creation::<f64>(0, a, &secs[1], &secs[2])
                .unwrap()
                .apply(&creation::<f64>(0, b, &secs[0], &secs[1]).unwrap().apply(&vac));
            let ba = creation::<f64>(0, b, &secs[1], &secs[2])
                .unwrap()
                .apply(&creation::<f64>(0, a, &secs[0], &secs[1]).unwrap().apply(&vac));
            assert!((ab.norm() - 1.0).abs() < 1e-15);
            assert!((ab + ba).norm() < 1e-15);
        }
    }
}

#[test]
fn lowering_connects_neighbouring_sectors_only() {
    for (tg, te, n) in [(1, 1, 2), (3, 5, 2), (3, 3, 3), (5, 3, 2)] {
        let b = sector(ls(tg, te), n, SectorConstraints::none());
        for q in -1..=1 {
            let d = lowering_operator::<f64>(0, q, &b, &b).unwrap();
            assert!(d.nnz() > 0);
            for &(r, c, _) in d.entries() {
                assert_eq!(b.excited_count(r) + 1, b.excited_count(c));
                assert_eq!(b.twice_projection(r), b.twice_projection(c) - 2 * q);
            }
            let up = raising_operator::<f64>(0, q, &b, &b).unwrap();
            assert!(norm(&(dense(&up) - dense(&d).adjoint())) < 1e-15);
        }
    }
}

#[test]
fn lowering_annihilates_the_ground_manifold() {
    let b = sector(ls(5, 7), 2, SectorConstraints::excited(0));
    let all = b.with_constraints(SectorConstraints::none()).unwrap();
    for q in -1..=1 {
        let d = lowering_operator::<f64>(0, q, &b, &all).unwrap();
        assert_eq!(d.nnz(), 0);
    }
}

#[test]
fn two_level_singlet_is_annihilated() {
    let l_s = ls(1, 1);
    let b = sector(l_s, 2, SectorConstraints::none());
    let st = |x: [SingleParticleLevel; 2]| b.index_of(b.state_from_levels(&[x.to_vec()]).unwrap()).unwrap();
    let mut v = DVector::zeros(b.dim());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    v[st([SingleParticleLevel::g(h(1)), SingleParticleLevel::e(h(-1))])] = Complex64::new(r, 0.0);
    v[st([SingleParticleLevel::g(h(-1)), SingleParticleLevel::e(h(1))])] = Complex64::new(-r, 0.0);
    for q in -1..=1 {
        let d = lowering_operator::<f64>(0, q, &b, &b).unwrap();
        assert!(d.apply(&v).norm() < 1e-15, "q={q}");
    }
    let bright = {
        let mut w = v.clone();
        w[st([SingleParticleLevel::g(h(-1)), SingleParticleLevel::e(h(1))])] = Complex64::new(r, 0.0);
        w
    };
    assert!(lowering_operator::<f64>(0, 0, &b, &b).unwrap().apply(&bright).norm() > 0.5);
}

fn commutator(a: &M, b: &M) -> M {
    a * b - b * a
}

#[test]
fn total_angular_momentum_commutes_with_conserved_quantities() {
    for (tg, te, n) in [(3, 3, 2), (3, 5, 3), (5, 3, 2)] {
        let b = sector(ls(tg, te), n, SectorConstraints::none());
        let f = total_f_operators::<f64>(&b).unwrap();
        let f2 = dense(&f.f_squared);
        let fz = dense(&f.f_z);
        let ne = dense(&number_excited::<f64>(&b));
        assert!(norm(&commutator(&f2, &fz)) < 1e-10);
        assert!(norm(&commutator(&f2, &ne)) < 1e-10);
        assert!(norm(&(f2.adjoint() - &f2)) < 1e-12);
    }
}

#[test]
fn two_ground_fermions_carry_even_f_only() {
    for tf in [1, 3, 5, 7, 9] {
        let b = sector(ls(tf, tf), 2, SectorConstraints::excited(0));
        let f2 = dense(&total_f_operators::<f64>(&b).unwrap().f_squared);
        for (value, vecs) in hermitian_eigen_groups(&f2) {
            let tff = fermidark::fock::snap_twice_f(value);
            assert!((casimir(tff) - value).abs() < 1e-9);
            assert_eq!(tff % 4, 0, "f={tf}/2 F={}", tff / 2);
            assert_eq!(vecs.ncols() % (tff as usize + 1), 0);
        }
    }
}

/// Highest-weight count per (F_g, F) label, i.e. the multiplicities of each multiplet.
fn multiplets(b: &SectorBasis, n_e: usize) -> Vec<(i32, i32, usize)> {
    let cb = coupled_basis::<f64>(b).unwrap();
    let mut out: Vec<(i32, i32, usize)> = Vec::new();
    for s in cb.select(Some(n_e), None, None, None) {
        if s.twice_m == s.twice_f {
            match out.iter_mut().find(|e| e.0 == s.twice_fg && e.1 == s.twice_f) {
                Some(e) => e.2 += 1,
                None => out.push((s.twice_fg, s.twice_f, 1)),
            }
        }
    }
    out.sort();
    out
}

#[test]
fn three_fermion_square_multiplets() {
    let l_s = ls(3, 3);
    let b = sector(l_s, 3, SectorConstraints::excited(1));
    assert_eq!(multiplets(&b, 1), vec![(0, 3, 1), (4, 1, 1), (4, 3, 1), (4, 5, 1), (4, 7, 1)]);
    let ggg = sector(l_s, 3, SectorConstraints::excited(0));
    assert_eq!(multiplets(&ggg, 0), vec![(3, 3, 1)]);
}

#[test]
fn scalar_decay_operator_commutes_with_rotations() {
    for (tg, te, n) in [(3, 3, 2), (1, 3, 3), (5, 3, 2)] {
        let b = sector(ls(tg, te), n, SectorConstraints::none());
        let mut s = M::zeros(b.dim(), b.dim());
        for q in -1..=1 {
            let d = dense(&lowering_operator::<f64>(0, q, &b, &b).unwrap());
            s += d.adjoint() * d;
        }
        let f = total_f_operators::<f64>(&b).unwrap();
        let fp = dense(&f_plus::<f64>(&[Orbital::G, Orbital::E], &b, &b).unwrap());
        let fx = (&fp + fp.adjoint()).scale(0.5);
        for g in [dense(&f.f_squared), dense(&f.f_z), fx] {
            assert!(norm(&commutator(&s, &g)) < 1e-10);
        }
        assert!(norm(&(s.adjoint() - &s)) < 1e-12);
    }
}

#[test]
fn coupled_vectors_are_orthonormal_and_labelled() {
    for (tg, te, n) in [(1, 1, 2), (3, 3, 3), (3, 5, 2), (5, 5, 2)] {
        let b = sector(ls(tg, te), n, SectorConstraints::none());
        let cb = coupled_basis::<f64>(&b).unwrap();
        assert_eq!(cb.states.len(), b.dim());
        let v = M::from_columns(&cb.states.iter().map(|s| s.vector.clone()).collect::<Vec<_>>());
        let gram = v.adjoint() * &v;
        assert!(norm(&(gram - M::identity(b.dim(), b.dim()))) < 1e-12);
        let f = total_f_operators::<f64>(&b).unwrap();
        let f2 = dense(&f.f_squared);
        for s in &cb.states {
            let r = &f2 * &s.vector - s.vector.scale(casimir(s.twice_f));
            assert!(r.norm() < 1e-9);
        }
    }
}

fn overlap_magnitude(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm()
}

/// `|levels…⟩` in the listed creation order, expressed in the canonical basis.
fn ket(b: &SectorBasis, order: &[SingleParticleLevel]) -> (usize, f64) {
    let l_s = *b.level_structure();
    let idx: Vec<usize> = order.iter().map(|x| x.index(&l_s).unwrap()).collect();
    let inversions = (0..idx.len()).flat_map(|i| (i + 1..idx.len()).map(move |j| (i, j))).filter(|&(i, j)| idx[i] > idx[j]).count();
    let state = b.state_from_levels(&[order.to_vec()]).unwrap();
    (b.index_of(state).unwrap(), if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

fn superpose(b: &SectorBasis, terms: &[(f64, Vec<SingleParticleLevel>)]) -> DVector<Complex64> {
    let mut v = DVector::zeros(b.dim());
    for (w, order) in terms {
        let (i, sign) = ket(b, order);
        v[i] += Complex64::new(w * sign, 0.0);
    }
    v
}

#[test]
fn two_level_coupled_singlet_matches_explicit_vector() {
    let b = sector(ls(1, 1), 2, SectorConstraints::none());
    let cb = coupled_basis::<f64>(&b).unwrap();
    let found = cb.select(Some(1), Some(0), Some(0), None);
    assert_eq!(found.len(), 1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let want = superpose(
        &b,
        &[
            (r, vec![SingleParticleLevel::g(h(1)), SingleParticleLevel::e(h(-1))]),
            (-r, vec![SingleParticleLevel::g(h(-1)), SingleParticleLevel::e(h(1))]),
        ],
    );
    assert!((overlap_magnitude(&found[0].vector, &want) - 1.0).abs() < 1e-12);
}

#[test]
fn three_fermion_coupled_vectors_match_explicit_expansions() {
    let b = sector(ls(3, 3), 3, SectorConstraints::none());
    let cb = coupled_basis::<f64>(&b).unwrap();
    let (g, e) = (SingleParticleLevel::g, SingleParticleLevel::e);
    let r2 = 0.5f64.sqrt();
    let zero = superpose(
        &b,
        &[(r2, vec![g(h(3)), g(h(-3)), e(h(3))]), (-r2, vec![g(h(1)), g(h(-1)), e(h(3))])],
    );
    let r10 = 0.1f64.sqrt();
    let two = superpose(
        &b,
        &[
            (2.0 * r10, vec![g(h(-1)), g(h(3)), e(h(1))]),
            (-2.0 * r10, vec![g(h(1)), g(h(3)), e(h(-1))]),
            (-r10, vec![g(h(-3)), g(h(3)), e(h(3))]),
            (-r10, vec![g(h(-1)), g(h(1)), e(h(3))]),
        ],
    );
    let s0 = cb.select(Some(1), Some(3), Some(3), Some(0));
    let s2 = cb.select(Some(1), Some(3), Some(3), Some(4));
    assert_eq!((s0.len(), s2.len()), (1, 1));
    assert!((overlap_magnitude(&s0[0].vector, &zero) - 1.0).abs() < 1e-12);
    assert!((overlap_magnitude(&s2[0].vector, &two) - 1.0).abs() < 1e-12);
}

#[test]
fn sites_do_not_exchange_signs() {
    let l_s = ls(1, 1);
    let b = build_sector(l_s, 1, 2, SectorConstraints::none()).unwrap();
    let lv = levels(&l_s);
    for &a in &lv {
        for &c in &lv {
            let s0 = dense(&sigma::<f64>(0, a, c, &b, &b).unwrap());
            let s1 = dense(&sigma::<f64>(1, c, a, &b, &b).unwrap());
            assert!(norm(&commutator(&s0, &s1)) < 1e-15);
        }
    }
}

fn structure_strategy() -> impl Strategy<Value = (LevelStructure, usize)> {
    (0usize..5, 0i32..3, 1usize..5).prop_filter_map("valid", |(g, d, n)| {
        let tg = 2 * g as i32 + 1;
        let te = tg - 2 + 2 * d;
        let l_s = LevelStructure::from_twice(tg, te).ok()?;
        (n <= l_s.levels_per_site() && binomial(l_s.levels_per_site(), n) <= 2000).then_some((l_s, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_sector_dimensions_partition_the_space((l_s, n) in structure_strategy()) {
        let full = sector(l_s, n, SectorConstraints::none());
        prop_assert_eq!(full.dim(), binomial(l_s.levels_per_site(), n));
        let total: usize = full.sector_blocks().iter().map(|(&(ne, tm), idx)| {
            let sub = sector(l_s, n, SectorConstraints::sector(ne, tm));
            assert_eq!(sub.dim(), idx.len());
            sub.dim()
        }).sum();
        prop_assert_eq!(total, full.dim());
    }

    #[test]
    fn prop_lowering_respects_quantum_numbers((l_s, n) in structure_strategy(), q in -1i32..=1) {
        let b = sector(l_s, n, SectorConstraints::none());
        let d = lowering_operator::<f64>(0, q, &b, &b).unwrap();
        for &(r, c, _) in d.entries() {
            prop_assert_eq!(b.excited_count(r) + 1, b.excited_count(c));
            prop_assert_eq!(b.twice_projection(r) + 2 * q, b.twice_projection(c));
        }
    }
}
