// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::states::{parse_state, resolve_state, Subspace};
use super::{integrate, DensityMatrix, IntegratorOptions, Method, TimeSeries, KRYLOV_TOLERANCE};
use crate::angular::{HalfInt, LevelStructure};
use crate::dipolar::{interaction_tensor, InteractionTensor, SiteArray, TrapGeometry, TransitionSpec};
use crate::error::{Error, Result};
use crate::fock::{build_sector, SectorBasis, SectorConstraints};
use crate::liouvillian::{
    polarization, raman_couplings, raman_hamiltonian, zeeman_hamiltonian, GeneratorSet,
    RamanDriveSpec, ZeemanDriveSpec,
};
use crate::Complex64;

fn half(value: Option<HalfInt>, twice: Option<i32>, key: &str) -> Result<HalfInt> {
    match (value, twice) {
        (Some(v), None) => Ok(v),
        (None, Some(t)) => Ok(HalfInt::from_twice(t)),
        (Some(v), Some(t)) if v.twice() == t => Ok(v),
        (Some(_), Some(_)) => Err(Error::Config(format!("{key} and twice_{key} disagree"))),
        (None, None) => Err(Error::Config(format!("missing {key} (or twice_{key})"))),
    }
}

/// `f_g`, `f_e` as `"9/2"` strings or doubled integers under `twice_f_g`, `twice_f_e`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_g: Option<HalfInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_e: Option<HalfInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twice_f_g: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twice_f_e: Option<i32>,
}

impl LevelSpec {
    pub fn new(ls: &LevelStructure) -> Self {
        LevelSpec { f_g: Some(ls.f_g), f_e: Some(ls.f_e), twice_f_g: None, twice_f_e: None }
    }

    pub fn resolve(&self) -> Result<LevelStructure> {
        LevelStructure::new(half(self.f_g, self.twice_f_g, "f_g")?, half(self.f_e, self.twice_f_e, "f_e")?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Raman,
    Zeeman,
    FreeDecay,
    MultisiteCheck,
}

fn default_detuning() -> f64 {
    1000.0
}

fn default_pol() -> String {
    "z".into()
}

/// Two-photon drive. Either `omega_eff` (split as `Ω₁ = Ω₂ = √|Ω^eff Δ|`) or both `omega1`
/// and `omega2` must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_s: Option<HalfInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twice_f_s: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_eff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    #[serde(default = "default_detuning")]
    pub delta: f64,
    #[serde(default = "default_pol")]
    pub pol1: String,
    #[serde(default = "default_pol")]
    pub pol2: String,
    #[serde(default)]
    pub phases: [f64; 2],
}

impl RamanConfig {
    fn rabi_pair(&self) -> Result<(f64, f64)> {
        match (self.omega_eff, self.omega1, self.omega2) {
            (Some(eff), None, None) => {
                let o = (eff * self.delta).abs().sqrt();
                Ok((o, if eff * self.delta < 0.0 { -o } else { o }))
            }
            (None, Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Config("Raman drive needs omega_eff, or omega1 and omega2".into())),
        }
    }
}

/// Laser plus excited-state Zeeman splitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanConfig {
    pub delta_z: f64,
    pub rabi: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_pol")]
    pub polarization: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub check_convergence: bool,
    #[serde(default)]
    pub keep_states: bool,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_samples() -> usize {
    401
}

/// One preparation or decay run. Times and rates are in units of `Γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub level_structure: LevelSpec,
    pub n: usize,
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman: Option<RamanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeeman: Option<ZeemanConfig>,
    /// Onsite coherent coefficient `U`; zero for an isotropic trap.
    #[serde(default)]
    pub onsite_u: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub initial_state: String,
    #[serde(default)]
    pub tracked: Vec<String>,
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<LevelStructure> {
        let ls = self.level_structure.resolve()?;
        if self.n == 0 || self.n > ls.levels_per_site() {
            return Err(Error::Config(format!("n = {} does not fit the {} levels of {ls}", self.n, ls.levels_per_site())));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.samples < 2 {
            return Err(Error::Config("samples must be at least 2".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        match self.scheme {
            Scheme::Raman if self.raman.is_none() => Err(Error::Config("raman scheme without a raman block".into())),
            Scheme::Zeeman if self.zeeman.is_none() => Err(Error::Config("zeeman scheme without a zeeman block".into())),
            Scheme::MultisiteCheck => {
                Err(Error::Config("multisite_check configs are run through multisite_dark_check".into()))
            }
            _ => Ok(ls),
        }
    }
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub dim: usize,
    pub series: TimeSeries,
}

struct Setup {
    basis: SectorBasis,
    tensor: InteractionTensor<f64>,
}

fn setup(config: &ExperimentConfig, ls: LevelStructure) -> Result<Setup> {
    let basis = build_sector(ls, config.n, 1, SectorConstraints::none())?;
    let spec = TransitionSpec::new(config.gamma, 1.0)?;
    let tensor = interaction_tensor(&SiteArray::single(), &TrapGeometry::isotropic(1.0), &spec, Some(config.onsite_u))?;
    Ok(Setup { basis, tensor })
}

fn drive(config: &ExperimentConfig, s: &Setup) -> Result<Option<DMatrix<Complex64>>> {
    let axis = Vector3::z();
    match config.scheme {
        Scheme::Raman => {
            let r = config.raman.as_ref().expect("validated");
            let (omega1, omega2) = r.rabi_pair()?;
            let spec = RamanDriveSpec {
                f_s: half(r.f_s, r.twice_f_s, "f_s")?,
                omega1,
                omega2,
                pol1: polarization(&r.pol1, &axis)?,
                pol2: polarization(&r.pol2, &axis)?,
                delta: r.delta,
                phases: (r.phases[0], r.phases[1]),
            };
            if raman_couplings(s.basis.level_structure(), &spec, &axis)?.is_empty() && omega1 * omega2 != 0.0 {
                return Err(Error::Config(format!(
                    "no Raman coupling for {} with f_s = {} and the chosen polarizations",
                    s.basis.level_structure(),
                    spec.f_s
                )));
            }
            Ok(Some(raman_hamiltonian(&s.basis, &spec, &axis)?))
        }
        Scheme::Zeeman => {
            let z = config.zeeman.as_ref().expect("validated");
            let spec = ZeemanDriveSpec {
                delta_z: z.delta_z,
                delta: z.delta,
                rabi: z.rabi,
                polarization: polarization(&z.polarization, &axis)?,
            };
            Ok(Some(zeeman_hamiltonian(&s.basis, &spec, &SiteArray::single())?))
        }
        _ => Ok(None),
    }
}

/// Runs any dynamical scheme.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let ls = config.validate()?;
    let s = setup(config, ls)?;
    let h_drive = drive(config, &s)?;
    let gens = GeneratorSet::new(&s.basis, &s.tensor, h_drive)?;
    let initial = resolve_state(&config.initial_state, &parse_state(&config.initial_state)?, &s.basis, &s.tensor)?;
    let rho0 = DensityMatrix::pure(&initial.vector()?)?;
    let names = if config.tracked.is_empty() { vec![config.initial_state.clone()] } else { config.tracked.clone() };
    let tracked: Vec<Subspace> = names
        .iter()
        .map(|n| resolve_state(n, &parse_state(n)?, &s.basis, &s.tensor))
        .collect::<Result<_>>()?;
    let options = IntegratorOptions {
        method: config.integrator.method,
        dt: config.integrator.dt,
        tolerance: config.integrator.tolerance.unwrap_or(KRYLOV_TOLERANCE),
        check_convergence: config.integrator.check_convergence,
        keep_states: config.integrator.keep_states,
    };
    let series = integrate(&rho0, &gens, &tracked, config.t_max, config.samples, &options)?;
    Ok(ExperimentOutcome { config: config.clone(), dim: s.basis.dim(), series })
}

fn require(config: &ExperimentConfig, scheme: Scheme) -> Result<()> {
    if config.scheme != scheme {
        return Err(Error::Config(format!("expected a {scheme:?} config, got {:?}", config.scheme)));
    }
    Ok(())
}

pub fn run_raman(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require(config, Scheme::Raman)?;
    run_experiment(config)
}

pub fn run_zeeman(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require(config, Scheme::Zeeman)?;
    run_experiment(config)
}

pub fn run_free_decay(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require(config, Scheme::FreeDecay)?;
    run_experiment(config)
}

/// Time-averaged leak `rate · ⟨P⟩` of the named population (trapezoidal mean).
pub fn zeno_leak_rate(series: &TimeSeries, name: &str, rate: f64) -> Option<f64> {
    let v = series.series(name)?;
    let t = &series.times;
    let span = t.last()? - t.first()?;
    if span <= 0.0 {
        return None;
    }
    let area: f64 = (1..v.len()).map(|k| 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1])).sum();
    Some(rate * area / span)
}

fn hermitian_sqrt(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch("fidelity of matrices with different shapes".into()));
    }
    let s = hermitian_sqrt(rho);
    let inner = &s * sigma * &s;
    let root = hermitian_sqrt(&inner);
    let tr = root.trace().re;
    Ok(tr * tr)
}
