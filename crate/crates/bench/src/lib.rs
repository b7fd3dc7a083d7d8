//! Fixtures shared by the benchmarks.

use cvqpon::keyrate::KeyRateEngine;
use cvqpon::network::NetworkParams;
use cvqpon::presets;
use cvqpon::protocols::SymmetricScenario;

/// The eight-user experiment with its detector-referenced noise.
pub fn experiment() -> NetworkParams {
    presets::experiment_network(presets::EXPERIMENT_NOISE_REFERENCE).expect("preset is valid")
}

pub fn experiment_engine() -> KeyRateEngine {
    KeyRateEngine::new(experiment()).expect("preset is valid")
}

/// Symmetric network of `users` at 2 dB channel loss.
pub fn symmetric(users: usize) -> SymmetricScenario {
    presets::loss_study(users, presets::USER_STUDY_LOSS_DB)
}
