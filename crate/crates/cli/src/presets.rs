// SPDX-License-Identifier: Apache-2.0

//! Figure presets shipped under `presets/` and compiled into the binary.

pub const PREPARE: &[(&str, &str)] = &[
    ("fig3c", include_str!("../../../presets/fig3c.json")),
    ("fig3d", include_str!("../../../presets/fig3d.json")),
    ("fig3e", include_str!("../../../presets/fig3e.json")),
    ("fig3f", include_str!("../../../presets/fig3f.json")),
    ("fig5c", include_str!("../../../presets/fig5c.json")),
    ("fig5d", include_str!("../../../presets/fig5d.json")),
    ("fig5e", include_str!("../../../presets/fig5e.json")),
    ("fig5f", include_str!("../../../presets/fig5f.json")),
];

pub const SPECTRA: &[(&str, &str)] = &[
    ("spectra-n2", include_str!("../../../presets/spectra-n2.json")),
    ("spectra-n3", include_str!("../../../presets/spectra-n3.json")),
    ("spectra-n4", include_str!("../../../presets/spectra-n4.json")),
];

pub const ONSITE: &[(&str, &str)] = &[("onsite", include_str!("../../../presets/onsite.json"))];

pub fn lookup(table: &[(&str, &'static str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names(table: &[(&str, &str)]) -> Vec<String> {
    table.iter().map(|(n, _)| n.to_string()).collect()
}
