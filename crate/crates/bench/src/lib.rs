//! Criterion benchmarks for synthesis and simulation; see `benches/`.

use std::path::PathBuf;

/// Path of a scenario shipped with the command-line crate.
pub fn fixture(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "cli",
        "fixtures",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect()
}

/// Contents of a shipped scenario.
pub fn fixture_source(name: &str) -> String {
    let path = fixture(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
