// SPDX-License-Identifier: Apache-2.0

//! Named states and subspaces.
//!
//! | name | meaning |
//! |------|---------|
//! | `\|g-5/2 g-1/2>` | Fock state; sites separated by `;` |
//! | `G_M` | `\|g_{−M} g_M⟩` (single site, `n = 2`) |
//! | `D_M` | single-excitation dark subspace at projection `M` |
//! | `S`, `S_M` | fastest-decaying single-excitation mode at `M` (default 0), `U = 0` |
//! | `ee`, `ground`, `ne=k` | whole excitation manifold |
//! | `F=3/2,M=1/2,ne=1[,Fg=2]` | coupled-basis subspace |

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::angular::HalfInt;
use crate::dipolar::InteractionTensor;
use crate::error::{Error, Result};
use crate::fock::{coupled_basis, Orbital, SectorBasis, SingleParticleLevel};
use crate::liouvillian::build_h_eff;
use crate::spectrum::{eigenmodes, find_dark_states};
use crate::Complex64;

/// Relative decay-rate window for the bright-mode group of `S_M`.
pub const BRIGHT_GROUP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateSpec {
    Fock(Vec<Vec<SingleParticleLevel>>),
    GroundPair(HalfInt),
    Dark { twice_m: i32 },
    Bright { twice_m: i32 },
    Manifold(usize),
    Coupled { n_excited: usize, twice_f: i32, twice_m: i32, twice_fg: Option<i32> },
}

/// Orthonormal columns spanning a named subspace.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub name: String,
    pub vectors: DMatrix<Complex64>,
}

impl Subspace {
    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    /// The single vector of a rank-one subspace.
    pub fn vector(&self) -> Result<DVector<Complex64>> {
        if self.rank() != 1 {
            return Err(Error::Config(format!(
                "{} spans {} states; a single state is required",
                self.name,
                self.rank()
            )));
        }
        Ok(self.vectors.column(0).into_owned())
    }
}

fn strip_braces(s: &str) -> &str {
    s.trim().trim_start_matches('{').trim_end_matches('}').trim()
}

fn parse_level(token: &str) -> Result<SingleParticleLevel> {
    let bad = || Error::Config(format!("cannot parse level {token:?}; expected e.g. g-1/2 or e3/2"));
    let mut chars = token.chars();
    let orbital = match chars.next() {
        Some('g') => Orbital::G,
        Some('e') => Orbital::E,
        _ => return Err(bad()),
    };
    let rest = strip_braces(chars.as_str().trim_start_matches('_'));
    let m = HalfInt::from_str(rest).map_err(|_| bad())?;
    Ok(SingleParticleLevel { orbital, m })
}

fn parse_fock(s: &str) -> Result<StateSpec> {
    let inner = s.trim().trim_start_matches('|').trim_end_matches('>').trim_end_matches('⟩');
    let sites = inner
        .split(';')
        .map(|site| site.split_whitespace().map(parse_level).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(StateSpec::Fock(sites))
}

fn parse_coupled(s: &str) -> Result<StateSpec> {
    let (mut ne, mut f, mut m, mut fg) = (None, None, None, None);
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in {s:?}")))?;
        let v = v.trim();
        match k.trim() {
            "ne" | "n_e" => {
                ne = Some(v.parse::<usize>().map_err(|_| Error::Config(format!("bad n_e {v:?}")))?)
            }
            "F" => f = Some(HalfInt::from_str(v)?.twice()),
            "M" => m = Some(HalfInt::from_str(v)?.twice()),
            "Fg" | "F_g" => fg = Some(HalfInt::from_str(v)?.twice()),
            other => return Err(Error::Config(format!("unknown label {other:?} in {s:?}"))),
        }
    }
    match (ne, f, m) {
        (Some(n_excited), Some(twice_f), Some(twice_m)) => {
            Ok(StateSpec::Coupled { n_excited, twice_f, twice_m, twice_fg: fg })
        }
        _ => Err(Error::Config(format!("coupled label {s:?} needs ne, F and M"))),
    }
}

/// Parses a state name; see the module table.
pub fn parse_state(name: &str) -> Result<StateSpec> {
    let s = name.trim();
    if s.starts_with('|') {
        return parse_fock(s);
    }
    if s.contains('=') && s.contains('F') {
        return parse_coupled(s);
    }
    if let Some(k) = s.strip_prefix("ne=") {
        let k = k.trim().parse().map_err(|_| Error::Config(format!("bad manifold {s:?}")))?;
        return Ok(StateSpec::Manifold(k));
    }
    match s {
        "ee" => return Ok(StateSpec::Manifold(2)),
        "ground" | "gg" => return Ok(StateSpec::Manifold(0)),
        "S" => return Ok(StateSpec::Bright { twice_m: 0 }),
        _ => {}
    }
    let labeled = |prefix: &str| s.strip_prefix(prefix).map(|r| HalfInt::from_str(strip_braces(r)));
    if let Some(m) = labeled("G_") {
        let m = m?;
        if m.twice() <= 0 {
            return Err(Error::Config(format!("G_M needs M > 0, got {s:?}")));
        }
        return Ok(StateSpec::GroundPair(m));
    }
    if let Some(m) = labeled("D_") {
        return Ok(StateSpec::Dark { twice_m: m?.twice() });
    }
    if let Some(m) = labeled("S_") {
        return Ok(StateSpec::Bright { twice_m: m?.twice() });
    }
    Err(Error::Config(format!("unrecognized state name {s:?}")))
}

fn single_site(basis: &SectorBasis, what: &str) -> Result<()> {
    if basis.site_count() != 1 {
        return Err(Error::Config(format!("{what} is defined for a single site only")));
    }
    Ok(())
}

fn orthonormal(cols: DMatrix<Complex64>) -> DMatrix<Complex64> {
    if cols.ncols() == 0 {
        return cols;
    }
    cols.qr().q()
}

fn unit(dim: usize, i: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, 1);
    m[(i, 0)] = Complex64::new(1.0, 0.0);
    m
}

fn fock_vector(basis: &SectorBasis, per_site: &[Vec<SingleParticleLevel>], name: &str) -> Result<DMatrix<Complex64>> {
    let s = basis.state_from_levels(per_site)?;
    let i = basis
        .index_of(s)
        .ok_or_else(|| Error::Config(format!("{name} is not in the basis")))?;
    Ok(unit(basis.dim(), i))
}

/// Resolves `spec` on `basis`; `tensor` supplies the decay structure for `S_M`.
pub fn resolve_state(
    name: &str,
    spec: &StateSpec,
    basis: &SectorBasis,
    tensor: &InteractionTensor<f64>,
) -> Result<Subspace> {
    let dim = basis.dim();
    let vectors = match spec {
        StateSpec::Fock(sites) => fock_vector(basis, sites, name)?,
        StateSpec::GroundPair(m) => {
            single_site(basis, "G_M")?;
            if basis.n() != 2 {
                return Err(Error::Config(format!("{name} needs n = 2, basis has n = {}", basis.n())));
            }
            fock_vector(basis, &[vec![SingleParticleLevel::g(-*m), SingleParticleLevel::g(*m)]], name)?
        }
        StateSpec::Manifold(k) => {
            let idx: Vec<usize> = (0..dim).filter(|&i| basis.excited_count(i) == *k).collect();
            let mut m = DMatrix::zeros(dim, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                m[(i, c)] = Complex64::new(1.0, 0.0);
            }
            m
        }
        StateSpec::Dark { twice_m } => {
            single_site(basis, "D_M")?;
            let sets = find_dark_states::<f64>(basis)?;
            let set = sets
                .into_iter()
                .find(|d| d.n_excited == 1 && d.twice_m == *twice_m)
                .filter(|d| d.count() > 0)
                .ok_or_else(|| Error::Config(format!("no single-excitation dark state at 2M = {twice_m}")))?;
            orthonormal(set.vectors)
        }
        StateSpec::Bright { twice_m } => {
            single_site(basis, "S_M")?;
            let h = build_h_eff(basis, &tensor.without_coherent())?;
            let modes: Vec<_> = eigenmodes(basis, &h)?
                .into_iter()
                .filter(|m| m.labels.n_excited == 1 && m.labels.twice_m == Some(*twice_m))
                .collect();
            let top = modes
                .iter()
                .map(|m| m.decay)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(top > 0.0) {
                return Err(Error::Config(format!("no decaying single-excitation mode at 2M = {twice_m}")));
            }
            let chosen: Vec<DVector<Complex64>> = modes
                .iter()
                .filter(|m| (m.decay - top).abs() <= BRIGHT_GROUP_TOLERANCE * top)
                .map(|m| m.vector.clone())
                .collect();
            orthonormal(DMatrix::from_columns(&chosen))
        }
        StateSpec::Coupled { n_excited, twice_f, twice_m, twice_fg } => {
            single_site(basis, "a coupled label")?;
            let cb = coupled_basis::<f64>(basis)?;
            let sel = cb.select(Some(*n_excited), Some(*twice_f), Some(*twice_m), *twice_fg);
            if sel.is_empty() {
                return Err(Error::Config(format!("no coupled states match {name}")));
            }
            let cols: Vec<DVector<Complex64>> = sel.iter().map(|s| s.vector.clone()).collect();
            DMatrix::from_columns(&cols)
        }
    };
    Ok(Subspace { name: name.to_string(), vectors })
}
