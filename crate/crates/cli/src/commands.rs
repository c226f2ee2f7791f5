// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fermidark::angular::{HalfInt, LevelStructure};
use fermidark::darkcensus::{census, cross_check, CensusCheck};
use fermidark::dipolar::{
    interaction_tensor, onsite_maxima, shape_integral, u_scaling, u_tilde, SiteArray, TransitionSpec, TrapGeometry,
};
use fermidark::dynamics::{multisite_dark_check, run_experiment, ExperimentConfig, LevelSpec, Method, SiteState};
use fermidark::fock::{build_sector, SectorConstraints};
use fermidark::liouvillian::build_h_eff;
use fermidark::spectrum::{classify, dark_counts_by_excitation, eigenmodes, find_dark_states, DegenerateGroup};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{slug, RunManifest, Sink};
use crate::presets;

/// Census and numerics disagree, or a multi-site dark check failed.
#[derive(Debug)]
pub struct Mismatch(pub String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for Mismatch {}

fn label(ls: &LevelStructure, n: usize) -> String {
    slug(&format!("fg{}_fe{}_n{n}", ls.f_g, ls.f_e))
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!(fermidark::Error::Config(format!("{origin}: {e}"))))
}

/// Resolves `--preset`/`--config` into text, tagging where it came from.
fn source(
    table: &[(&str, &'static str)],
    preset: Option<&str>,
    config: Option<&Path>,
) -> Result<Option<(String, String)>> {
    match (preset, config) {
        (Some(_), Some(_)) => Err(anyhow!(fermidark::Error::Config("give either --preset or --config".into()))),
        (Some(name), None) => {
            let text = presets::lookup(table, name).ok_or_else(|| {
                anyhow!(fermidark::Error::Config(format!(
                    "unknown preset {name:?}; available: {}",
                    presets::names(table).join(", ")
                )))
            })?;
            Ok(Some((format!("preset:{name}"), text.to_string())))
        }
        (None, Some(path)) => Ok(Some((path.display().to_string(), read_config(path)?))),
        (None, None) => Ok(None),
    }
}

// ---------------------------------------------------------------- spectrum

/// One spectrum run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub level_structure: LevelSpec,
    pub n: usize,
    #[serde(default)]
    pub onsite_u: f64,
    #[serde(default = "one")]
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumBatch {
    #[serde(default)]
    #[allow(dead_code)]
    name: String,
    runs: Vec<SpectrumConfig>,
}

#[derive(Debug, Serialize)]
pub struct SpectrumSummary {
    pub level_structure: String,
    pub n: usize,
    pub dim: usize,
    /// Null-space dark states per `n_e`.
    pub dark_states: BTreeMap<usize, usize>,
    /// Modes with `γ` below the dark tolerance per `n_e`.
    pub dark_modes: BTreeMap<usize, usize>,
    pub inconsistent_groups: usize,
    pub groups: Vec<DegenerateGroup>,
}

pub struct SpectrumRequest<'a> {
    pub fg: Option<HalfInt>,
    pub fe: Option<HalfInt>,
    pub n: Option<usize>,
    pub onsite_u: f64,
    pub gamma: f64,
    pub preset: Option<&'a str>,
    pub config: Option<&'a Path>,
}

fn spectrum_one(cfg: &SpectrumConfig) -> Result<(SpectrumSummary, String)> {
    let ls = cfg.level_structure.resolve()?;
    let basis = build_sector(ls, cfg.n, 1, SectorConstraints::none())?;
    let spec = TransitionSpec::new(cfg.gamma, 1.0)?;
    let tensor = interaction_tensor(&SiteArray::single(), &TrapGeometry::isotropic(1.0), &spec, Some(cfg.onsite_u))?;
    let h = build_h_eff(&basis, &tensor)?;
    let report = classify(&eigenmodes::<f64>(&basis, &h)?);
    let dark_states = dark_counts_by_excitation(&find_dark_states::<f64>(&basis)?);
    let mut dark_modes = BTreeMap::new();
    for &ne in dark_states.keys() {
        dark_modes.insert(ne, report.dark_total(ne));
    }
    let csv = report.to_csv(cfg.gamma);
    let summary = SpectrumSummary {
        level_structure: ls.to_string(),
        n: cfg.n,
        dim: basis.dim(),
        dark_states,
        dark_modes,
        inconsistent_groups: report.groups.iter().filter(|g| !g.consistent).count(),
        groups: report.groups,
    };
    Ok((summary, csv))
}

pub fn spectrum(out: &Path, req: SpectrumRequest) -> Result<Vec<SpectrumSummary>> {
    let (origin, runs) = match source(presets::SPECTRA, req.preset, req.config)? {
        Some((origin, text)) => {
            let batch: SpectrumBatch = parse(&text, &origin)?;
            (Some(origin), batch.runs)
        }
        None => {
            let (fg, fe, n) = match (req.fg, req.fe, req.n) {
                (Some(fg), Some(fe), Some(n)) => (fg, fe, n),
                _ => bail!(fermidark::Error::Config("spectrum needs --fg, --fe and --n, or a preset/config".into())),
            };
            let ls = LevelStructure::new(fg, fe)?;
            let cfg = SpectrumConfig { level_structure: LevelSpec::new(&ls), n, onsite_u: req.onsite_u, gamma: req.gamma };
            (None, vec![cfg])
        }
    };
    let sink = Sink::create(out.join("spectrum"))?;
    let results: Vec<Result<(SpectrumConfig, SpectrumSummary, String)>> = runs
        .par_iter()
        .map(|cfg| spectrum_one(cfg).map(|(s, csv)| (cfg.clone(), s, csv)))
        .collect();
    let mut summaries = Vec::new();
    for r in results {
        let (cfg, summary, csv) = r?;
        let ls = cfg.level_structure.resolve()?;
        let manifest = RunManifest::new("spectrum", origin.clone(), &sink.dir, None, serde_json::to_value(&cfg)?);
        let name = label(&ls, cfg.n);
        sink.csv(&format!("spectrum_{name}.csv"), &manifest, &csv)?;
        sink.json(&format!("spectrum_{name}.json"), &manifest, &summary)?;
        let counts: Vec<String> = summary.dark_states.iter().map(|(ne, k)| format!("n_e={ne}: {k}")).collect();
        let total: usize = summary.dark_states.values().sum();
        println!("{} n={} U={}: {total} dark states ({})", summary.level_structure, cfg.n, cfg.onsite_u, counts.join(", "));
        if summary.dark_states != summary.dark_modes {
            log::warn!("eigenvalue-based dark counts {:?} differ from null-space counts", summary.dark_modes);
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

// ---------------------------------------------------------------- darks

#[derive(Clone, Debug, Serialize)]
pub struct DarksRow {
    pub n_excited: usize,
    #[serde(flatten)]
    pub check: CensusCheck,
}

#[derive(Debug, Serialize)]
pub struct DarksSummary {
    pub level_structure: String,
    pub n: usize,
    pub predicted: BTreeMap<usize, usize>,
    pub numerical: BTreeMap<usize, usize>,
    pub rows: Vec<DarksRow>,
    pub mismatches: usize,
}

pub fn darks(out: &Path, fg: HalfInt, fe: HalfInt, n: usize) -> Result<DarksSummary> {
    let ls = LevelStructure::new(fg, fe)?;
    let basis = build_sector(ls, n, 1, SectorConstraints::none())?;
    let sets = find_dark_states::<f64>(&basis)?;
    let censuses = (1..=n).into_par_iter().map(|ne| census(&ls, n, ne)).collect::<Vec<_>>();
    let mut rows = Vec::new();
    let (mut predicted, mut numerical) = (BTreeMap::new(), BTreeMap::new());
    for (ne, c) in (1..=n).zip(censuses) {
        let c = c?;
        let checks = cross_check(&c, &sets);
        predicted.insert(ne, checks.iter().map(|k| k.predicted).sum());
        numerical.insert(ne, checks.iter().map(|k| k.numerical).sum());
        rows.extend(checks.into_iter().map(|check| DarksRow { n_excited: ne, check }));
    }
    let mismatches = rows.iter().filter(|r| r.check.predicted != r.check.numerical).count();
    let summary = DarksSummary { level_structure: ls.to_string(), n, predicted, numerical, rows, mismatches };

    let sink = Sink::create(out.join("darks"))?;
    let config = serde_json::json!({ "level_structure": LevelSpec::new(&ls), "n": n });
    let manifest = RunManifest::new("darks", None, &sink.dir, None, config);
    let mut csv = String::from("f_g,f_e,n,n_e,M,states,channels,predicted,numerical\n");
    for r in &summary.rows {
        let c = &r.check;
        let _ = writeln!(
            csv,
            "{},{},{n},{},{},{},{},{},{}",
            ls.f_g,
            ls.f_e,
            r.n_excited,
            HalfInt::from_twice(c.twice_m),
            c.states,
            c.channels,
            c.predicted,
            c.numerical
        );
    }
    let name = label(&ls, n);
    sink.csv(&format!("darks_{name}.csv"), &manifest, &csv)?;
    sink.json(&format!("darks_{name}.json"), &manifest, &summary)?;
    for ne in 1..=n {
        println!("{ls} n={n} n_e={ne}: census {} numerical {}", summary.predicted[&ne], summary.numerical[&ne]);
    }
    if mismatches > 0 {
        return Err(anyhow!(Mismatch(format!("{mismatches} (n_e, M) sectors disagree for {ls} n={n}"))));
    }
    Ok(summary)
}

// ---------------------------------------------------------------- prepare

#[derive(Debug, Serialize)]
pub struct Peak {
    pub state: String,
    pub max: f64,
    pub t_at_max: f64,
    pub last: f64,
}

#[derive(Debug, Serialize)]
pub struct PrepareSummary {
    pub name: String,
    pub dim: usize,
    pub stored_entries: usize,
    pub steps: usize,
    pub trace_drift: f64,
    pub hermiticity_error: f64,
    pub positivity_floor: f64,
    pub convergence_delta: Option<f64>,
    pub peaks: Vec<Peak>,
}

pub struct PrepareRequest<'a> {
    pub preset: Option<&'a str>,
    pub config: Option<&'a Path>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub method: Option<Method>,
    pub check_convergence: bool,
}

pub fn prepare(out: &Path, req: PrepareRequest) -> Result<PrepareSummary> {
    let (origin, text) = source(presets::PREPARE, req.preset, req.config)?
        .ok_or_else(|| anyhow!(fermidark::Error::Config("prepare needs --preset or --config".into())))?;
    let mut cfg: ExperimentConfig = parse(&text, &origin)?;
    if let Some(t) = req.t_max {
        cfg.t_max = t;
    }
    if let Some(s) = req.samples {
        cfg.samples = s;
    }
    if let Some(m) = req.method {
        cfg.integrator.method = m;
    }
    cfg.integrator.check_convergence |= req.check_convergence;
    if cfg.name.is_empty() {
        cfg.name = req.preset.map(str::to_string).unwrap_or_else(|| "run".into());
    }
    let outcome = run_experiment(&cfg)?;
    let s = &outcome.series;
    let peaks = s
        .populations
        .iter()
        .map(|(name, v)| {
            let k = s.argmax(name).unwrap_or(0);
            Peak { state: name.clone(), max: v[k], t_at_max: s.times[k], last: *v.last().unwrap_or(&0.0) }
        })
        .collect();
    let summary = PrepareSummary {
        name: cfg.name.clone(),
        dim: outcome.dim,
        stored_entries: s.stored_entries,
        steps: s.steps,
        trace_drift: s.trace_drift,
        hermiticity_error: s.hermiticity_error,
        positivity_floor: s.positivity_floor,
        convergence_delta: s.convergence_delta,
        peaks,
    };
    let sink = Sink::create(out.join("prepare"))?;
    let manifest = RunManifest::new("prepare", Some(origin), &sink.dir, None, serde_json::to_value(&cfg)?);
    let name = slug(&cfg.name);
    sink.csv(&format!("prepare_{name}.csv"), &manifest, &s.to_csv())?;
    sink.json(&format!("prepare_{name}.json"), &manifest, &summary)?;
    println!(
        "{}: dim {} steps {} trace drift {:.2e} ({:.2}s)",
        summary.name, summary.dim, summary.steps, summary.trace_drift, s.elapsed_seconds
    );
    for p in &summary.peaks {
        println!("  {:<16} max {:.5} at t = {:.3}, final {:.5}", p.state, p.max, p.t_at_max, p.last);
    }
    Ok(summary)
}

// ---------------------------------------------------------------- onsite

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnsiteConfig {
    #[serde(default)]
    pub name: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub points: usize,
    pub lambda0_nm: f64,
    pub lambda_l_nm: f64,
    /// Depth of the tighter axis, in recoil energies.
    #[serde(default)]
    pub depths: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct OnsiteSummary {
    pub ell_z_over_ell_perp_at_max: f64,
    pub ell_perp_over_ell_z_at_max: f64,
    pub nu_perp_over_nu_z: f64,
    pub nu_z_over_nu_perp: f64,
    pub shape_integral_at_unit_ratio: f64,
}

pub struct OnsiteRequest<'a> {
    pub preset: Option<&'a str>,
    pub config: Option<&'a Path>,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub points: Option<usize>,
}

pub fn onsite(out: &Path, req: OnsiteRequest) -> Result<OnsiteSummary> {
    let preset = if req.preset.is_none() && req.config.is_none() { Some("onsite") } else { req.preset };
    let (origin, text) = source(presets::ONSITE, preset, req.config)?.expect("preset defaulted");
    let mut cfg: OnsiteConfig = parse(&text, &origin)?;
    cfg.min_ratio = req.min_ratio.unwrap_or(cfg.min_ratio);
    cfg.max_ratio = req.max_ratio.unwrap_or(cfg.max_ratio);
    cfg.points = req.points.unwrap_or(cfg.points);
    if !(cfg.min_ratio > 0.0 && cfg.max_ratio > cfg.min_ratio && cfg.points >= 2) {
        bail!(fermidark::Error::Config("onsite sweep needs 0 < min_ratio < max_ratio and points >= 2".into()));
    }
    let maxima = onsite_maxima();
    let summary = OnsiteSummary {
        ell_z_over_ell_perp_at_max: maxima.ell_z_over_ell_perp,
        ell_perp_over_ell_z_at_max: maxima.ell_perp_over_ell_z,
        nu_perp_over_nu_z: maxima.nu_perp_over_nu_z,
        nu_z_over_nu_perp: maxima.nu_z_over_nu_perp,
        shape_integral_at_unit_ratio: shape_integral(1.0f64),
    };
    let mut csv = String::from("ell_perp_over_ell_z,shape_integral,u_tilde");
    for d in &cfg.depths {
        let _ = write!(csv, ",u_depth_{d}");
    }
    csv.push('\n');
    let (la, lb) = (cfg.min_ratio.ln(), cfg.max_ratio.ln());
    for k in 0..cfg.points {
        let s = (la + (lb - la) * k as f64 / (cfg.points - 1) as f64).exp();
        // ρ = ℓ_z/ℓ_⊥ and ℓ ∝ ν^{-1/4}; the tighter axis sits at the listed depth.
        let rho = 1.0 / s;
        let _ = write!(csv, "{s:.10e},{:.12e},{:.12e}", shape_integral(rho), u_tilde(rho));
        for &nu in &cfg.depths {
            let (nu_z, nu_perp) = if rho >= 1.0 { (nu / rho.powi(4), nu) } else { (nu, nu * rho.powi(4)) };
            let _ = write!(csv, ",{:.12e}", u_scaling(cfg.lambda0_nm, cfg.lambda_l_nm, nu_z, nu_perp, rho));
        }
        csv.push('\n');
    }
    let sink = Sink::create(out.join("onsite"))?;
    let manifest = RunManifest::new("onsite", Some(origin), &sink.dir, None, serde_json::to_value(&cfg)?);
    sink.csv("onsite.csv", &manifest, &csv)?;
    sink.json("onsite.json", &manifest, &summary)?;
    println!(
        "|U| maxima: l_perp/l_z = {:.4} (nu_z/nu_perp = {:.3}), l_z/l_perp = {:.4} (nu_perp/nu_z = {:.3}); U(1) = {:.1e}",
        summary.ell_perp_over_ell_z_at_max,
        summary.nu_z_over_nu_perp,
        summary.ell_z_over_ell_perp_at_max,
        summary.nu_perp_over_nu_z,
        summary.shape_integral_at_unit_ratio
    );
    Ok(summary)
}

// ---------------------------------------------------------------- multisite

/// Largest residual accepted for a product dark state.
pub const MULTISITE_TOLERANCE: f64 = 1e-9;
/// Smallest emission rate expected from the bright control.
pub const BRIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Serialize)]
pub struct MultisiteRow {
    pub geometry: usize,
    pub separation: [f64; 3],
    pub states: Vec<SiteState>,
    pub liouvillian_residual: f64,
    pub h_eff_residual: f64,
    pub decay_rate: f64,
    pub pass: bool,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

pub fn multisite(out: &Path, fg: HalfInt, fe: HalfInt, n: usize, geometries: usize, seed: u64) -> Result<Vec<MultisiteRow>> {
    let ls = LevelStructure::new(fg, fe)?;
    let spec = TransitionSpec::new(1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let combos = [
        vec![SiteState::Dark, SiteState::Ground],
        vec![SiteState::Ground, SiteState::Dark],
        vec![SiteState::Dark, SiteState::Dark],
        vec![SiteState::Bright, SiteState::Ground],
    ];
    let mut jobs = Vec::new();
    for g in 0..geometries {
        // k0 r between 0.2 and 6 spans the near field and a wavelength.
        let sep = unit_vector(&mut rng) * rng.gen_range(0.2..6.0);
        let axis = unit_vector(&mut rng);
        let lattice = unit_vector(&mut rng);
        let (lp, lz) = (rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.3));
        let sites = SiteArray::new(vec![Vector3::zeros(), sep], axis)?;
        let geom = TrapGeometry::new(lp, lz, lattice)?;
        for states in &combos {
            jobs.push((g, sep, sites.clone(), geom, states.clone()));
        }
    }
    let rows: Vec<Result<MultisiteRow>> = jobs
        .par_iter()
        .map(|(g, sep, sites, geom, states)| {
            let r = multisite_dark_check(ls, n, sites, geom, &spec, None, states)?;
            let bright = states.contains(&SiteState::Bright);
            let pass = if bright {
                r.decay_rate > BRIGHT_FLOOR
            } else {
                r.liouvillian_residual <= MULTISITE_TOLERANCE && r.h_eff_residual <= MULTISITE_TOLERANCE
            };
            Ok(MultisiteRow {
                geometry: *g,
                separation: [sep.x, sep.y, sep.z],
                states: states.clone(),
                liouvillian_residual: r.liouvillian_residual,
                h_eff_residual: r.h_eff_residual,
                decay_rate: r.decay_rate,
                pass,
            })
        })
        .collect();
    let rows: Vec<MultisiteRow> = rows.into_iter().collect::<Result<_>>()?;

    let sink = Sink::create(out.join("multisite"))?;
    let config = serde_json::json!({
        "level_structure": LevelSpec::new(&ls), "n": n, "geometries": geometries, "seed": seed
    });
    let manifest = RunManifest::new("multisite", None, &sink.dir, Some(seed), config);
    let mut csv = String::from("geometry,rx,ry,rz,states,liouvillian_residual,h_eff_residual,decay_rate,pass\n");
    for r in &rows {
        let states: Vec<&str> = r
            .states
            .iter()
            .map(|s| match s {
                SiteState::Dark => "dark",
                SiteState::Ground => "ground",
                SiteState::Bright => "bright",
            })
            .collect();
        let _ = writeln!(
            csv,
            "{},{:.10e},{:.10e},{:.10e},{},{:.3e},{:.3e},{:.6e},{}",
            r.geometry,
            r.separation[0],
            r.separation[1],
            r.separation[2],
            states.join("+"),
            r.liouvillian_residual,
            r.h_eff_residual,
            r.decay_rate,
            r.pass
        );
    }
    let name = label(&ls, n);
    sink.csv(&format!("multisite_{name}.csv"), &manifest, &csv)?;
    sink.json(&format!("multisite_{name}.json"), &manifest, &rows)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows
        .iter()
        .filter(|r| !r.states.contains(&SiteState::Bright))
        .map(|r| r.liouvillian_residual.max(r.h_eff_residual))
        .fold(0.0, f64::max);
    println!("{ls} n={n}: {} products over {geometries} geometries, worst dark residual {worst:.2e}, {failed} failed", rows.len());
    if failed > 0 {
        return Err(anyhow!(Mismatch(format!("{failed} product-state checks failed"))));
    }
    Ok(rows)
}

/// Default output root when neither `--out` nor the environment variable is set.
pub fn default_root() -> PathBuf {
    PathBuf::from("fermidark-out")
}
