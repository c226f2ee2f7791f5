// SPDX-License-Identifier: Apache-2.0

//! Time evolution of the driven master equation and the dark-state preparation runs.
//!
//! Everything here is `f64`. `ρ` is stored only on the block pairs of `H` reachable from `ρ₀`.
//! Two propagators are available. The default evaluates `exp(t𝓛)ρ` with an adaptive Krylov
//! method, so the generator is exponentiated rather than stepped. The alternative is a Lawson
//! (integrating-factor) fourth-order Runge–Kutta scheme with a fixed step, where
//! `−i(Hρ − ρH†)` is applied exactly block by block and only the recycling term goes through
//! the Runge–Kutta stages.

mod blocks;
mod experiment;
mod krylov;
mod multisite;
mod states;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::GeneratorSet;
use crate::Complex64;

pub use blocks::{BlockLayout, BlockRho};
pub use krylov::{expv, KrylovStats, KRYLOV_DIM};
pub use experiment::{
    fidelity, run_experiment, run_free_decay, run_raman, run_zeeman, zeno_leak_rate,
    ExperimentConfig, ExperimentOutcome, IntegratorConfig, LevelSpec, RamanConfig, Scheme,
    ZeemanConfig,
};
pub use multisite::{multisite_dark_check, MultisiteReport, SiteState};
pub use states::{parse_state, resolve_state, StateSpec, Subspace};

use blocks::BlockSystem;

/// Largest `dim²` accepted for a dense density matrix.
pub const MAX_RHO_ENTRIES: usize = 1 << 26;
/// Trace and Hermiticity tolerance for an initial state.
pub const STATE_TOLERANCE: f64 = 1e-10;
/// Step size as a fraction of the inverse fastest decay scale.
pub const STEP_FRACTION: f64 = 0.05;
/// Smallest step the integrator accepts.
pub const MIN_STEP: f64 = 1e-12;
/// Default local error per unit time of the Krylov propagator.
pub const KRYLOV_TOLERANCE: f64 = 1e-12;

fn guard(dim: usize) -> Result<()> {
    if dim.checked_mul(dim).is_none_or(|d2| d2 > MAX_RHO_ENTRIES) {
        return Err(Error::Guardrail(format!(
            "density matrix of dimension {dim} exceeds the {MAX_RHO_ENTRIES}-entry limit"
        )));
    }
    Ok(())
}

/// Deviations of a matrix from being a density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

/// Checks trace, Hermiticity and the smallest eigenvalue of `ρ`.
pub fn invariants(rho: &DMatrix<Complex64>) -> InvariantReport {
    let trace_error = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    let hermiticity_error = (rho - rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    InvariantReport { trace_error, hermiticity_error, min_eigenvalue }
}

/// A normalized Hermitian `ρ` on an unconstrained basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        guard(matrix.nrows())?;
        let report = invariants(&matrix);
        if report.trace_error > STATE_TOLERANCE || report.hermiticity_error > STATE_TOLERANCE {
            return Err(Error::Config(format!(
                "not a density matrix: trace error {:.2e}, Hermiticity error {:.2e}",
                report.trace_error, report.hermiticity_error
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn pure(psi: &nalgebra::DVector<Complex64>) -> Result<Self> {
        guard(psi.len())?;
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::Config("initial state vector is zero".into()));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Tr(Pρ)` for the orthogonal projector onto the columns of `vectors`.
    pub fn population(&self, vectors: &DMatrix<Complex64>) -> f64 {
        population(&self.matrix, vectors)
    }
}

fn population(rho: &DMatrix<Complex64>, vectors: &DMatrix<Complex64>) -> f64 {
    (vectors.adjoint() * rho * vectors).trace().re
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Krylov,
    Lawson,
}

/// Step control for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Lawson step; `None` picks `STEP_FRACTION` over the fastest decay scale.
    pub dt: Option<f64>,
    /// Krylov local error per unit time.
    pub tolerance: f64,
    /// Re-run with half the step (Lawson) or a thousandfold tighter tolerance (Krylov) and
    /// record the largest population change.
    pub check_convergence: bool,
    /// Keep `ρ` at every sample.
    pub keep_states: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::Krylov,
            dt: None,
            tolerance: KRYLOV_TOLERANCE,
            check_convergence: false,
            keep_states: false,
        }
    }
}

/// Sampled populations of a run.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries {
    /// In units of `1/Γ`.
    pub times: Vec<f64>,
    pub populations: Vec<(String, Vec<f64>)>,
    pub trace_drift: f64,
    pub hermiticity_error: f64,
    pub positivity_floor: f64,
    pub step: f64,
    pub steps: usize,
    /// Largest population change under step halving, when requested.
    pub convergence_delta: Option<f64>,
    pub stored_entries: usize,
    pub elapsed_seconds: f64,
    #[serde(skip)]
    pub states: Vec<DMatrix<Complex64>>,
}

impl TimeSeries {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.populations.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn max_of(&self, name: &str) -> Option<f64> {
        self.series(name).map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Sample index where `name` peaks.
    pub fn argmax(&self, name: &str) -> Option<usize> {
        let v = self.series(name)?;
        (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_over_invGamma");
        for (name, _) in &self.populations {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.10e}"));
            for (_, v) in &self.populations {
                out.push_str(&format!(",{:.12e}", v[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Decay scale used for the default step: the row-sum bound on the anti-Hermitian part of `H`.
pub fn decay_scale(gens: &GeneratorSet<f64>) -> f64 {
    let h = &gens.h_eff;
    let anti = (h - h.adjoint()) * Complex64::new(0.5, 0.0);
    (0..anti.nrows())
        .map(|r| anti.row(r).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct Stepper<'a> {
    sys: &'a BlockSystem,
    full: Vec<DMatrix<Complex64>>,
    half: Vec<DMatrix<Complex64>>,
    h: f64,
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a BlockSystem, h: f64) -> Self {
        Stepper { sys, full: sys.propagators(h), half: sys.propagators(h / 2.0), h }
    }

    fn step(&self, u: &BlockRho) -> BlockRho {
        let (sys, h) = (self.sys, self.h);
        let k1 = sys.recycle(u);
        let mut a = u.clone();
        a.axpy(h / 2.0, &k1);
        let k2 = sys.recycle(&sys.conjugate(&a, &self.half));
        let mut b = sys.conjugate(u, &self.half);
        b.axpy(h / 2.0, &k2);
        let k3 = sys.recycle(&b);
        let mut c = sys.conjugate(u, &self.full);
        c.axpy(h, &sys.conjugate(&k3, &self.half));
        let k4 = sys.recycle(&c);
        let mut base = u.clone();
        base.axpy(h / 6.0, &k1);
        let mut out = sys.conjugate(&base, &self.full);
        let mut mid = k2;
        mid.axpy(1.0, &k3);
        out.axpy(h / 3.0, &sys.conjugate(&mid, &self.half));
        out.axpy(h / 6.0, &k4);
        out
    }
}

enum Propagation {
    Lawson(f64),
    Krylov(f64),
}

fn run(
    sys: &BlockSystem,
    rho0: &DMatrix<Complex64>,
    observables: &[Subspace],
    times: &[f64],
    propagation: Propagation,
    keep_states: bool,
) -> Result<TimeSeries> {
    let dt = match propagation {
        Propagation::Lawson(dt) => dt,
        Propagation::Krylov(_) => 0.0,
    };
    let anorm = sys.norm_bound();
    let start = Instant::now();
    let mut u = sys.split(rho0);
    let mut populations: Vec<(String, Vec<f64>)> =
        observables.iter().map(|o| (o.name.clone(), Vec::with_capacity(times.len()))).collect();
    let mut series = TimeSeries {
        times: times.to_vec(),
        populations: Vec::new(),
        trace_drift: 0.0,
        hermiticity_error: 0.0,
        positivity_floor: f64::INFINITY,
        step: dt,
        steps: 0,
        convergence_delta: None,
        stored_entries: sys.stored_entries(),
        elapsed_seconds: 0.0,
        states: Vec::new(),
    };
    let mut steppers: Vec<(u64, Stepper)> = Vec::new();
    let mut t = times.first().copied().unwrap_or(0.0);
    for (k, &target) in times.iter().enumerate() {
        if k > 0 {
            let span = target - t;
            match propagation {
                Propagation::Lawson(dt) => {
                    let n = (span / dt).ceil().max(1.0) as usize;
                    let h = span / n as f64;
                    if !(h >= MIN_STEP) {
                        return Err(Error::Integrator(format!("step {h:.3e} underflows at t = {t}")));
                    }
                    let key = h.to_bits();
                    if !steppers.iter().any(|(b, _)| *b == key) {
                        steppers.push((key, Stepper::new(sys, h)));
                    }
                    let stepper = &steppers.iter().find(|(b, _)| *b == key).unwrap().1;
                    for _ in 0..n {
                        u = stepper.step(&u);
                    }
                    series.steps += n;
                }
                Propagation::Krylov(tol) => {
                    let mut stats = KrylovStats::default();
                    let mut apply = |x: &[Complex64]| sys.flatten(&sys.liouvillian(&sys.unflatten(x)));
                    let flat = expv(span, &sys.flatten(&u), anorm, tol, &mut apply, &mut stats)?;
                    u = sys.unflatten(&flat);
                    series.steps += stats.substeps;
                }
            }
            t = target;
            if !u.is_finite() {
                return Err(Error::Integrator(format!("non-finite density matrix at t = {t}")));
            }
        }
        let dense = u.to_dense(&sys.layout, sys.dim);
        let report = invariants(&dense);
        series.trace_drift = series.trace_drift.max(report.trace_error);
        series.hermiticity_error = series.hermiticity_error.max(report.hermiticity_error);
        series.positivity_floor = series.positivity_floor.min(report.min_eigenvalue);
        for (o, (_, v)) in observables.iter().zip(populations.iter_mut()) {
            v.push(population(&dense, &o.vectors));
        }
        if keep_states {
            series.states.push(dense);
        }
    }
    series.populations = populations;
    series.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(series)
}

/// Evolves `ρ₀` under `gens`, sampling the listed projector populations at `samples` evenly
/// spaced times in `[0, t_max]`.
pub fn integrate(
    rho0: &DensityMatrix,
    gens: &GeneratorSet<f64>,
    observables: &[Subspace],
    t_max: f64,
    samples: usize,
    options: &IntegratorOptions,
) -> Result<TimeSeries> {
    if rho0.dim() != gens.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, generators act on {}",
            rho0.dim(),
            gens.dim()
        )));
    }
    if let Some(o) = observables.iter().find(|o| o.vectors.nrows() != gens.dim()) {
        return Err(Error::DimensionMismatch(format!("observable {} lives on another basis", o.name)));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    if samples < 2 {
        return Err(Error::Config("at least two samples are required".into()));
    }
    let times: Vec<f64> = (0..samples).map(|k| t_max * k as f64 / (samples - 1) as f64).collect();
    let interval = times[1];
    let sys = BlockSystem::new(gens, rho0.matrix());
    log::debug!(
        "integrating {} blocks, {} stored entries of {}",
        sys.layout.len(),
        sys.stored_entries(),
        gens.dim() * gens.dim()
    );
    let (coarse, fine) = match options.method {
        Method::Lawson => {
            let dt = match options.dt {
                Some(dt) if dt > 0.0 => dt.min(interval),
                Some(dt) => return Err(Error::Config(format!("dt must be positive, got {dt}"))),
                None => {
                    let rate = decay_scale(gens);
                    if rate > 0.0 {
                        (STEP_FRACTION / rate).min(interval)
                    } else {
                        interval
                    }
                }
            };
            (Propagation::Lawson(dt), Propagation::Lawson(dt / 2.0))
        }
        Method::Krylov => {
            if !(options.tolerance > 0.0) {
                return Err(Error::Config(format!("tolerance must be positive, got {}", options.tolerance)));
            }
            (Propagation::Krylov(options.tolerance), Propagation::Krylov(options.tolerance * 1e-3))
        }
    };
    let mut series = run(&sys, rho0.matrix(), observables, &times, coarse, options.keep_states)?;
    if options.check_convergence {
        let fine = run(&sys, rho0.matrix(), observables, &times, fine, false)?;
        let delta = series
            .populations
            .iter()
            .zip(&fine.populations)
            .flat_map(|((_, a), (_, b))| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        series.convergence_delta = Some(delta);
    }
    Ok(series)
}
