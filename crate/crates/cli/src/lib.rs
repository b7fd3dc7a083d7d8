//! Command-line front end: scenario files in, JSON and CSV results out.

pub mod commands;
pub mod output;
pub mod scenario;
pub mod units;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub use scenario::{Scenario, ScenarioError};

/// Scenarios shipped with the binary, addressable by name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("table1", include_str!("../scenarios/table1.toml")),
    ("fig2a", include_str!("../scenarios/fig2a.toml")),
    ("fig2b", include_str!("../scenarios/fig2b.toml")),
    ("fig4b", include_str!("../scenarios/fig4b.toml")),
    ("figS2", include_str!("../scenarios/figS2.toml")),
];

/// Reads `source` from disk, or falls back to the bundled scenario of that name.
pub fn load(source: &Path) -> Result<Scenario> {
    let text = if source.exists() {
        std::fs::read_to_string(source).with_context(|| format!("reading {}", source.display()))?
    } else {
        let key = source.to_string_lossy();
        let key = key.trim_end_matches(".toml");
        BUNDLED
            .iter()
            .find(|(name, _)| *name == key)
            .map(|(_, text)| text.to_string())
            .with_context(|| {
                let names: Vec<_> = BUNDLED.iter().map(|b| b.0).collect();
                format!("{} not found (bundled scenarios: {})", source.display(), names.join(", "))
            })?
    };
    Scenario::from_toml(&text).with_context(|| format!("in scenario {}", source.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    KeyRate,
    Sweep,
    MonteCarlo,
}

pub fn run(command: Command, source: &Path, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let scenario = load(source)?;
    match command {
        Command::KeyRate => commands::keyrate(&scenario, out),
        Command::Sweep => commands::sweep_command(&scenario, out),
        Command::MonteCarlo => commands::montecarlo(&scenario, out, seed),
    }
}
