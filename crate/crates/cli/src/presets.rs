//! Built-in model configurations, compiled into the binary.

/// `(name, aliases, description, toml)`.
const PRESETS: &[(&str, &[&str], &str, &str)] = &[
    (
        "three-state-heat",
        &["example-3.5"],
        "three-state drift switching, no noise",
        include_str!("../presets/three-state-heat.toml"),
    ),
    (
        "two-state-noisy",
        &["example-4.2"],
        "two-state drift and noise switching; a.s. stable, second moment unstable",
        include_str!("../presets/two-state-noisy.toml"),
    ),
    (
        "unstable-scalar",
        &["eq-16"],
        "single state, alpha = 2, beta = 1 (sample exponent 1/2)",
        include_str!("../presets/unstable-scalar.toml"),
    ),
    (
        "stable-scalar",
        &["eq-0"],
        "single state, alpha = 1, beta = 1 (sample exponent -1/2)",
        include_str!("../presets/stable-scalar.toml"),
    ),
    (
        "single-state-noiseless",
        &[],
        "single state, alpha = 0.1, no noise (exponent -0.9)",
        include_str!("../presets/single-state-noiseless.toml"),
    ),
];

/// Canonical name and text of a preset, looked up by name or alias.
pub fn find(name: &str) -> Option<(&'static str, &'static str)> {
    PRESETS
        .iter()
        .find(|(n, aliases, _, _)| *n == name || aliases.contains(&name))
        .map(|(n, _, _, text)| (*n, *text))
}

pub fn listing() -> String {
    PRESETS
        .iter()
        .map(|(n, aliases, d, _)| {
            if aliases.is_empty() {
                format!("  {n:<24} {d}")
            } else {
                format!("  {n:<24} {d} (alias: {})", aliases.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
