//! Configurations shipped with the crate.

const PRESETS: &[(&str, &str)] = &[
    ("paper-duffing", include_str!("../../presets/paper-duffing.json")),
    ("paper-duffing-classical", include_str!("../../presets/paper-duffing-classical.json")),
    ("paper-duffing-matched-noise", include_str!("../../presets/paper-duffing-matched-noise.json")),
    ("fig1-harmonic", include_str!("../../presets/fig1-harmonic.json")),
    ("fig1-double-well", include_str!("../../presets/fig1-double-well.json")),
    ("fig1-driven-harmonic", include_str!("../../presets/fig1-driven-harmonic.json")),
    ("fig1-duffing", include_str!("../../presets/fig1-duffing.json")),
    ("reduced-action-quantum", include_str!("../../presets/reduced-action-quantum.json")),
];

/// Source text of a bundled preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
