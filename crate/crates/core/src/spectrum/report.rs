// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EigenMode;
use crate::scalar::Real;

/// Relative tolerance for grouping decay rates.
pub const GROUP_TOLERANCE: f64 = 1e-7;
/// Modes with `γ` below this (in units of Γ) count as dark.
pub const DARK_TOLERANCE: f64 = 1e-9;

/// Scalar summary of one mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub n_excited: usize,
    pub twice_m: Option<i32>,
    pub twice_f: Option<i32>,
    pub twice_fg: Option<i32>,
    pub energy: f64,
    pub decay: f64,
    pub f_residual: f64,
    /// Index of the degenerate group the mode belongs to.
    pub group: usize,
}

/// Modes sharing `n_e` and, within tolerance, the complex eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateGroup {
    pub n_excited: usize,
    pub decay: f64,
    pub energy: f64,
    pub multiplicity: usize,
    /// Number of modes carrying each twice-`F` label.
    pub f_content: BTreeMap<i32, usize>,
    /// Modes without an `F` label.
    pub unlabeled: usize,
    /// True when every mode is labeled and each `F` appears in whole `2F+1` multiples.
    pub consistent: bool,
}

/// Classified spectrum of one basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub modes: Vec<ModeSummary>,
    pub groups: Vec<DegenerateGroup>,
    /// Dark modes per `(n_e, 2M)`; sectors without resolved `M` use `None`.
    pub dark_counts: Vec<DarkCount>,
    /// Set when two distinct groups had to be merged because they sat within tolerance.
    pub merged_groups: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarkCount {
    pub n_excited: usize,
    pub twice_m: Option<i32>,
    pub count: usize,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GROUP_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Groups modes by `(n_e, ε, γ)` and counts dark modes per sector.
pub fn classify<T: Real>(modes: &[EigenMode<T>]) -> SpectrumReport {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    let key = |i: usize| {
        let m = &modes[i];
        (m.labels.n_excited, m.decay.as_f64(), m.energy.as_f64())
    };
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.partial_cmp(&kb.1).unwrap())
            .then(ka.2.partial_cmp(&kb.2).unwrap())
    });
    let mut groups: Vec<(Vec<usize>, f64, f64, usize)> = Vec::new();
    let mut merged_groups = 0;
    for &i in &order {
        let (ne, g, e) = key(i);
        let hit = groups.iter().position(|(_, gg, ee, n)| *n == ne && close(*gg, g) && close(*ee, e));
        match hit {
            Some(k) => {
                let members = &groups[k].0;
                // A chain of near-equal values drifting apart counts as a merge.
                if members.iter().any(|&j| !close(key(j).1, g) || !close(key(j).2, e)) {
                    merged_groups += 1;
                }
                groups[k].0.push(i);
            }
            None => groups.push((vec![i], g, e, ne)),
        }
    }
    if merged_groups > 0 {
        log::warn!("{merged_groups} modes joined a group only within the grouping tolerance");
    }
    let mut group_of = vec![0usize; modes.len()];
    let mut out_groups = Vec::with_capacity(groups.len());
    for (gid, (members, g, e, ne)) in groups.iter().enumerate() {
        let mut f_content: BTreeMap<i32, usize> = BTreeMap::new();
        let mut unlabeled = 0;
        for &i in members {
            group_of[i] = gid;
            match modes[i].labels.twice_f {
                Some(tf) => *f_content.entry(tf).or_default() += 1,
                None => unlabeled += 1,
            }
        }
        let consistent =
            unlabeled == 0 && f_content.iter().all(|(tf, k)| k % (*tf as usize + 1) == 0);
        out_groups.push(DegenerateGroup {
            n_excited: *ne,
            decay: *g,
            energy: *e,
            multiplicity: members.len(),
            f_content,
            unlabeled,
            consistent,
        });
    }
    let mut dark: BTreeMap<(usize, Option<i32>), usize> = BTreeMap::new();
    let summaries = modes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let decay = m.decay.as_f64();
            if decay.abs() < DARK_TOLERANCE && m.labels.n_excited > 0 {
                *dark.entry((m.labels.n_excited, m.labels.twice_m)).or_default() += 1;
            }
            ModeSummary {
                n_excited: m.labels.n_excited,
                twice_m: m.labels.twice_m,
                twice_f: m.labels.twice_f,
                twice_fg: m.labels.twice_fg,
                energy: m.energy.as_f64(),
                decay,
                f_residual: m.labels.f_residual,
                group: group_of[i],
            }
        })
        .collect();
    SpectrumReport {
        modes: summaries,
        groups: out_groups,
        dark_counts: dark
            .into_iter()
            .map(|((n_excited, twice_m), count)| DarkCount { n_excited, twice_m, count })
            .collect(),
        merged_groups,
    }
}

fn half(t: Option<i32>) -> String {
    match t {
        Some(t) if t % 2 == 0 => format!("{}", t / 2),
        Some(t) => format!("{t}/2"),
        None => String::new(),
    }
}

impl SpectrumReport {
    /// Total dark modes with the given excitation number.
    pub fn dark_total(&self, n_excited: usize) -> usize {
        self.dark_counts.iter().filter(|d| d.n_excited == n_excited).map(|d| d.count).sum()
    }

    /// All dark modes.
    pub fn dark_sum(&self) -> usize {
        self.dark_counts.iter().map(|d| d.count).sum()
    }

    /// CSV with columns `n_e, M, F, epsilon_over_Gamma, gamma_over_Gamma, multiplicity`,
    /// one row per mode sorted by `(n_e, M, γ, ε)`; `multiplicity` is the size of the
    /// mode's degenerate group.
    pub fn to_csv(&self, gamma: f64) -> String {
        let mut rows: Vec<&ModeSummary> = self.modes.iter().collect();
        rows.sort_by(|a, b| {
            a.n_excited
                .cmp(&b.n_excited)
                .then(a.twice_m.cmp(&b.twice_m))
                .then(a.decay.partial_cmp(&b.decay).unwrap())
                .then(a.energy.partial_cmp(&b.energy).unwrap())
        });
        let mut s = String::from("n_e,M,F,epsilon_over_Gamma,gamma_over_Gamma,multiplicity\n");
        for m in rows {
            // Clamp signed zeros and roundoff so identical inputs print identically.
            let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
            let _ = writeln!(
                s,
                "{},{},{},{:.12},{:.12},{}",
                m.n_excited,
                half(m.twice_m),
                half(m.twice_f),
                clean(m.energy / gamma),
                clean(m.decay / gamma),
                self.groups[m.group].multiplicity
            );
        }
        s
    }
}
