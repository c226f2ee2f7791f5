// SPDX-License-Identifier: Apache-2.0

use fermidark::angular::{HalfInt, LevelStructure};
use fermidark::dipolar::{interaction_tensor, SiteArray, TransitionSpec, TrapGeometry};
use fermidark::fock::{
    build_sector, lowering_operator, number_excited, total_f_operators, SectorBasis, SectorConstraints,
    SingleParticleLevel,
};
use fermidark::liouvillian::{
    build_h_eff, lindblad_rhs, polarization, raman_couplings, raman_hamiltonian, rk4_step,
    single_laser_hamiltonian, zeeman_hamiltonian, DriveSpec, GeneratorSet, RamanDriveSpec, ZeemanDriveSpec,
};
use fermidark::linalg::complex_eigenvalues;
use fermidark::{Complex64, InteractionTensorF64};
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = DMatrix<Complex64>;
type V = DVector<Complex64>;

fn z(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn ls(tg: i32, te: i32) -> LevelStructure {
    LevelStructure::from_twice(tg, te).unwrap()
}

fn norm(m: &M) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn spec() -> TransitionSpec<f64> {
    TransitionSpec::new(1.0, 1.0).unwrap()
}

fn single_tensor(u: f64, lattice: Vector3<f64>) -> InteractionTensorF64 {
    let geom = TrapGeometry::new(0.1, 0.2, lattice).unwrap();
    interaction_tensor(&SiteArray::single(), &geom, &spec(), Some(u)).unwrap()
}

fn full(l: LevelStructure, n: usize) -> SectorBasis {
    build_sector(l, n, 1, SectorConstraints::none()).unwrap()
}

fn lowering_dense(b: &SectorBasis) -> Vec<M> {
    let mut out = Vec::new();
    for site in 0..b.site_count() {
        for q in -1..=1 {
            out.push(lowering_operator::<f64>(site, q, b, b).unwrap().to_dense());
        }
    }
    out
}

fn scalar_decay(b: &SectorBasis) -> M {
    lowering_dense(b).iter().fold(M::zeros(b.dim(), b.dim()), |acc, d| acc + d.adjoint() * d)
}

fn ket(b: &SectorBasis, levels: &[SingleParticleLevel]) -> usize {
    b.index_of(b.state_from_levels(&[levels.to_vec()]).unwrap()).unwrap()
}

fn g(t: i32) -> SingleParticleLevel {
    SingleParticleLevel::g(h(t))
}

fn e(t: i32) -> SingleParticleLevel {
    SingleParticleLevel::e(h(t))
}

/// `|G⟩, |S⟩, |D_0⟩` of the 1/2 ↔ 1/2 pair in canonical ordering.
fn two_level_states(b: &SectorBasis) -> (V, V, V) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut ground = V::zeros(b.dim());
    ground[ket(b, &[g(-1), g(1)])] = z(1.0);
    let mut s = V::zeros(b.dim());
    s[ket(b, &[g(1), e(-1)])] = z(r);
    s[ket(b, &[g(-1), e(1)])] = z(r);
    let mut d = V::zeros(b.dim());
    d[ket(b, &[g(1), e(-1)])] = z(r);
    d[ket(b, &[g(-1), e(1)])] = z(-r);
    (ground, s, d)
}

fn random_density(d: usize, rng: &mut ChaCha8Rng) -> M {
    let a = M::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Master equation written out densely, for comparison with the library's structured form.
fn rhs_oracle(rho: &M, hamiltonian: &M, lows: &[M], tensor: &InteractionTensorF64) -> M {
    let mi = Complex64::new(0.0, -1.0);
    let mut out = (hamiltonian * rho - rho * hamiltonian.adjoint()) * mi;
    let im = tensor.imag_matrix();
    for a in 0..lows.len() {
        for bb in 0..lows.len() {
            out += &lows[bb] * rho * lows[a].adjoint() * (im[(a, bb)] * 2.0);
        }
    }
    out
}

#[test]
fn h_eff_without_coherent_term_is_scalar_decay() {
    for (tg, te, n) in [(1, 1, 2), (3, 3, 3), (3, 5, 2), (5, 3, 2)] {
        let b = full(ls(tg, te), n);
        let heff = build_h_eff(&b, &single_tensor(0.0, Vector3::z())).unwrap();
        let want = scalar_decay(&b) * Complex64::new(0.0, -0.5);
        assert!(norm(&(heff - want)) < 1e-13);
    }
}

#[test]
fn h_eff_vanishes_on_the_ground_manifold() {
    let b = build_sector(ls(5, 7), 2, 1, SectorConstraints::excited(0)).unwrap();
    let heff = build_h_eff(&b, &single_tensor(3.0, Vector3::new(1.0, 0.0, 1.0))).unwrap();
    assert_eq!(norm(&heff), 0.0);
}

#[test]
fn doubly_excited_pair_decays_at_twice_gamma() {
    let b = full(ls(1, 1), 2);
    let heff = build_h_eff(&b, &single_tensor(0.0, Vector3::z())).unwrap();
    let ee = ket(&b, &[e(-1), e(1)]);
    let mut v = V::zeros(b.dim());
    v[ee] = z(1.0);
    let image = &heff * &v;
    let lambda = image[ee];
    assert!((image - v * lambda).norm() < 1e-14);
    assert!((-2.0 * lambda.im - 2.0).abs() < 1e-14);
}

#[test]
fn h_eff_conserves_excitations_and_projection() {
    let b = full(ls(3, 5), 2);
    for (u, axis) in [(0.0, Vector3::new(1.0, 1.0, 0.0)), (2.0, Vector3::z()), (2.0, Vector3::new(1.0, 0.0, 1.0))] {
        let heff = build_h_eff(&b, &single_tensor(u, axis)).unwrap();
        let m_conserved = u == 0.0 || axis == Vector3::z();
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                if heff[(r, c)].norm() > 1e-14 {
                    assert_eq!(b.excited_count(r), b.excited_count(c));
                    if m_conserved {
                        assert_eq!(b.twice_projection(r), b.twice_projection(c));
                    }
                }
            }
        }
    }
}

#[test]
fn h_eff_commutes_with_total_angular_momentum_without_coherent_term() {
    for (tg, te, n) in [(3, 3, 2), (3, 5, 3)] {
        let b = full(ls(tg, te), n);
        let heff = build_h_eff(&b, &single_tensor(0.0, Vector3::z())).unwrap();
        let f = total_f_operators::<f64>(&b).unwrap();
        for op in [f.f_squared.to_dense(), f.f_z.to_dense()] {
            assert!(norm(&(&heff * &op - &op * &heff)) < 1e-10);
        }
    }
}

fn eigenvalues(m: &M) -> Vec<Complex64> {
    complex_eigenvalues(m).expect("QR converges")
}

fn match_spectra(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.len() == b.len()
        && a.iter().all(|x| {
            let best = (0..b.len()).filter(|&j| !used[j]).min_by(|&i, &j| {
                (b[i] - x).norm().partial_cmp(&(b[j] - x).norm()).unwrap()
            });
            match best {
                Some(j) if (b[j] - x).norm() < tol => {
                    used[j] = true;
                    true
                }
                _ => false,
            }
        })
}

#[test]
fn spectrum_is_independent_of_lattice_orientation() {
    for (tg, te, n) in [(1, 1, 2), (3, 3, 2), (3, 5, 2), (3, 3, 3)] {
        let b = full(ls(tg, te), n);
        let reference = eigenvalues(&build_h_eff(&b, &single_tensor(5.0, Vector3::z())).unwrap());
        for theta in [0.3f64, 0.9, std::f64::consts::FRAC_PI_2, 2.5] {
            let axis = Vector3::new(theta.sin(), 0.0, theta.cos());
            let spectrum = eigenvalues(&build_h_eff(&b, &single_tensor(5.0, axis)).unwrap());
            assert!(match_spectra(&reference, &spectrum, 1e-9), "{tg}/{te} n={n} θ={theta}");
        }
    }
}

#[test]
fn rhs_matches_dense_oracle_and_preserves_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (tg, te, n, u) in [(1, 1, 2, 0.0), (3, 3, 2, 4.0), (1, 3, 2, 1.5)] {
        let b = full(ls(tg, te), n);
        let tensor = single_tensor(u, Vector3::new(0.2, 0.1, 1.0));
        let gens = GeneratorSet::new(&b, &tensor, None).unwrap();
        let lows = lowering_dense(&b);
        for _ in 0..3 {
            let rho = random_density(b.dim(), &mut rng);
            let rhs = lindblad_rhs(&rho, &gens).unwrap();
            let oracle = rhs_oracle(&rho, &gens.hamiltonian(), &lows, &tensor);
            assert!(norm(&(&rhs - oracle)) < 1e-12);
            assert!(rhs.trace().norm() < 1e-12);
            assert!(norm(&(&rhs - rhs.adjoint())) < 1e-12);
            let next = rk4_step(&rho, &gens, 0.01).unwrap();
            assert!((next.trace() - z(1.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn dark_projector_is_stationary() {
    let b = full(ls(1, 1), 2);
    let gens = GeneratorSet::new(&b, &single_tensor(0.0, Vector3::z()), None).unwrap();
    let (_, _, d) = two_level_states(&b);
    let rho = &d * d.adjoint();
    assert!(norm(&lindblad_rhs(&rho, &gens).unwrap()) < 1e-14);
}

#[test]
fn excitation_number_initially_drops_at_twice_gamma() {
    let b = full(ls(1, 1), 2);
    let gens = GeneratorSet::new(&b, &single_tensor(0.0, Vector3::z()), None).unwrap();
    let ee = ket(&b, &[e(-1), e(1)]);
    let mut rho = M::zeros(b.dim(), b.dim());
    rho[(ee, ee)] = z(1.0);
    let ne = number_excited::<f64>(&b).to_dense();
    let rate = (ne * lindblad_rhs(&rho, &gens).unwrap()).trace();
    assert!((rate - z(-2.0)).norm() < 1e-14);
}

#[test]
fn rhs_rejects_wrong_dimension() {
    let b = full(ls(1, 1), 2);
    let gens = GeneratorSet::new(&b, &single_tensor(0.0, Vector3::z()), None).unwrap();
    assert!(lindblad_rhs(&M::zeros(3, 3), &gens).is_err());
}

fn kernel_of_lowering(b: &SectorBasis) -> Vec<V> {
    let stacked = {
        let lows = lowering_dense(b);
        let mut s = M::zeros(lows.len() * b.dim(), b.dim());
        for (k, l) in lows.iter().enumerate() {
            s.view_mut((k * b.dim(), 0), (b.dim(), b.dim())).copy_from(l);
        }
        s
    };
    let gram = stacked.adjoint() * &stacked;
    let eig = gram.symmetric_eigen();
    (0..b.dim())
        .filter(|&k| eig.eigenvalues[k].abs() < 1e-10)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect()
}

#[test]
fn laser_never_connects_ground_states_to_dark_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (tg, te, n) in [(1, 1, 2), (3, 3, 3), (3, 5, 2), (5, 3, 2)] {
        let b = full(ls(tg, te), n);
        let darks: Vec<V> = kernel_of_lowering(&b)
            .into_iter()
            .filter(|v| (0..b.dim()).any(|i| v[i].norm() > 1e-8 && b.excited_count(i) > 0))
            .collect();
        assert!(!darks.is_empty() || (tg, te) == (5, 3));
        let grounds: Vec<usize> = (0..b.dim()).filter(|&i| b.excited_count(i) == 0).collect();
        let mut pols: Vec<Vector3<Complex64>> =
            ["z", "x", "y", "sigma+", "sigma-"].iter().map(|p| polarization(p, &Vector3::z()).unwrap()).collect();
        pols.push(Vector3::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        for pol in pols {
            let drive = DriveSpec::new(0.7, pol, 0.3).unwrap();
            let hl = single_laser_hamiltonian(&b, &drive, &SiteArray::single()).unwrap();
            assert!(norm(&(&hl - hl.adjoint())) < 1e-14);
            for d in &darks {
                let projected = d.adjoint() * &hl;
                for &gi in &grounds {
                    assert!(projected[(0, gi)].norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn pi_polarized_laser_couples_the_pair_ground_state_to_the_symmetric_state() {
    let b = full(ls(1, 1), 2);
    let (ground, s, d) = two_level_states(&b);
    let drive = DriveSpec::new(1.0, polarization("z", &Vector3::z()).unwrap(), 0.0).unwrap();
    let hl = single_laser_hamiltonian(&b, &drive, &SiteArray::single()).unwrap();
    let image = &hl * &ground;
    assert!((image.norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    assert!((s.dotc(&image).norm() - image.norm()).abs() < 1e-14);
    assert!(d.dotc(&image).norm() < 1e-15);
    let off = DriveSpec::new(0.0, polarization("z", &Vector3::z()).unwrap(), 0.0).unwrap();
    assert_eq!(norm(&single_laser_hamiltonian(&b, &off, &SiteArray::single()).unwrap()), 0.0);
}

fn raman(delta: f64) -> RamanDriveSpec<f64> {
    let pz = polarization("z", &Vector3::z()).unwrap();
    RamanDriveSpec { f_s: h(1), omega1: 2.0, omega2: 3.0, pol1: pz, pol2: pz, delta, phases: (0.0, 0.0) }
}

#[test]
fn raman_couplings_are_squared_pi_coefficients() {
    let l = ls(1, 1);
    let couplings = raman_couplings(&l, &raman(100.0), &Vector3::z()).unwrap();
    assert_eq!(couplings.len(), 2);
    for (m, n, w) in &couplings {
        assert_eq!(m, n);
        // Ω^(1)Ω^(2)/Δ · (C^0_m)², with (C^0_{±1/2})² = 1/3
        assert!((w.norm() - 6.0 / 100.0 / 3.0).abs() < 1e-15);
    }
    assert!((couplings[0].2 - couplings[1].2).norm() < 1e-15);
}

#[test]
fn raman_drive_couples_ground_to_dark_only() {
    let b = full(ls(1, 1), 2);
    let (ground, s, d) = two_level_states(&b);
    let hr = raman_hamiltonian(&b, &raman(100.0), &Vector3::z()).unwrap();
    assert!(norm(&(&hr - hr.adjoint())) < 1e-15);
    let image = &hr * &ground;
    assert!(s.dotc(&image).norm() < 1e-15);
    assert!((d.dotc(&image).norm() - image.norm()).abs() < 1e-15);
    assert!(image.norm() > 0.01);
    let half = raman_hamiltonian(&b, &raman(200.0), &Vector3::z()).unwrap();
    assert!(norm(&(half * z(2.0) - hr)) < 1e-15);
}

#[test]
fn raman_without_allowed_path_is_zero() {
    let mut drive = raman(100.0);
    drive.f_s = h(7);
    let b = full(ls(1, 1), 2);
    assert_eq!(norm(&raman_hamiltonian(&b, &drive, &Vector3::z()).unwrap()), 0.0);
}

#[test]
fn zeeman_hamiltonian_reduces_to_the_three_state_model() {
    let b = full(ls(1, 1), 2);
    let (ground, s, d) = two_level_states(&b);
    let (omega, dz, det) = (0.8, 1.3, 0.4);
    let pz = polarization("z", &Vector3::z()).unwrap();
    let drive = ZeemanDriveSpec { delta_z: dz, delta: det, rabi: omega, polarization: pz };
    let hz = zeeman_hamiltonian(&b, &drive, &SiteArray::single()).unwrap();
    let states = [&ground, &s, &d];
    let block = M::from_fn(3, 3, |r, c| states[r].dotc(&(&hz * states[c])));
    let tilde = omega * (2.0f64 / 3.0).sqrt();
    let want_abs = [[0.0, tilde, 0.0], [tilde, det, dz / 2.0], [0.0, dz / 2.0, det]];
    for r in 0..3 {
        for c in 0..3 {
            assert!((block[(r, c)].norm() - want_abs[r][c]).abs() < 1e-14, "({r},{c})");
        }
    }
    assert!((block[(1, 1)] - z(-det)).norm() < 1e-14 && (block[(2, 2)] - z(-det)).norm() < 1e-14);
}

#[test]
fn zeeman_limits() {
    let b = full(ls(3, 5), 2);
    let pol = polarization("x", &Vector3::z()).unwrap();
    let laser = single_laser_hamiltonian(&b, &DriveSpec::new(0.9, pol, 0.0).unwrap(), &SiteArray::single()).unwrap();
    let zero = ZeemanDriveSpec { delta_z: 0.0, delta: 0.0, rabi: 0.9, polarization: pol };
    assert!(norm(&(zeeman_hamiltonian(&b, &zero, &SiteArray::single()).unwrap() - &laser)) < 1e-15);
    let detuned = ZeemanDriveSpec { delta_z: 0.0, delta: 0.6, rabi: 0.9, polarization: pol };
    let ne = number_excited::<f64>(&b).to_dense();
    let diff = zeeman_hamiltonian(&b, &detuned, &SiteArray::single()).unwrap() - &laser + ne * z(0.6);
    assert!(norm(&diff) < 1e-14);
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_undriven_h_eff_never_amplifies(
        pos in proptest::collection::vec(vec3(), 2..=3),
        axis in vec3(),
        u in -5.0f64..5.0,
    ) {
        prop_assume!(axis.norm() > 0.1);
        for i in 0..pos.len() {
            for j in 0..i {
                prop_assume!((pos[i] - pos[j]).norm() > 0.1);
            }
        }
        let sites = SiteArray::new(pos.clone(), axis).unwrap();
        let geom = TrapGeometry::new(0.1, 0.15, Vector3::new(0.0, 1.0, 1.0)).unwrap();
        let tensor = interaction_tensor(&sites, &geom, &spec(), Some(u)).unwrap();
        let b = build_sector(ls(1, 3), 1, pos.len(), SectorConstraints::none()).unwrap();
        let heff = build_h_eff(&b, &tensor).unwrap();
        for lambda in eigenvalues(&heff) {
            prop_assert!(lambda.im <= 1e-10);
        }
    }

    #[test]
    fn prop_rhs_is_traceless_and_hermitian(seed in 0u64..1000, u in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = full(ls(3, 3), 2);
        let tensor = single_tensor(u, Vector3::new(1.0, 0.5, 0.2));
        let pol = Vector3::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let drive = DriveSpec::new(0.5, pol, 0.2).unwrap();
        let hd = single_laser_hamiltonian(&b, &drive, &SiteArray::single()).unwrap();
        let gens = GeneratorSet::new(&b, &tensor, Some(hd)).unwrap();
        let rho = random_density(b.dim(), &mut rng);
        let rhs = lindblad_rhs(&rho, &gens).unwrap();
        prop_assert!(rhs.trace().norm() < 1e-12);
        prop_assert!(norm(&(&rhs - rhs.adjoint())) < 1e-12);
        let recycled = gens.recycling(&rho).trace();
        let lost = ((&gens.h_eff * &rho - &rho * gens.h_eff.adjoint()) * Complex64::new(0.0, -1.0)).trace();
        prop_assert!((recycled + lost).norm() < 1e-12);
    }
}
