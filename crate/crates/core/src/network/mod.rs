//! Physical description of a 1:N broadcast network and its translation into
//! the multipartite covariance matrix of the equivalent entanglement-based
//! scheme.
//!
//! The provider's modulated coherent states are purified by a TMSV whose
//! Alice arm is split on a balanced beamsplitter (`A^x`, `A^p`). The signal
//! crosses a feeder link (`η_A`, `ε_A`), is divided 1:N, and each branch
//! crosses its own link (`η_B[l]`, `ε_B[l]`). Receivers heterodyne on a
//! balanced beamsplitter and each arm has a trusted detector of efficiency
//! `τ` and electronic noise `ν`, purified by a TMSV (`D`, `F`).

mod assembly;
pub mod closed_form;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use assembly::{
    assemble, attach_trusted_detectors, build_broadcast_state, build_broadcast_state_with,
    build_signal_stage, canonical_user_modes, SplitterTopology,
};
pub use closed_form::cross_user_correlation;

/// Detector efficiencies at or above this value are capped so the purifier
/// variance `1 + ν/(1−τ)` stays finite.
pub const MAX_DETECTOR_EFFICIENCY: f64 = 1.0 - 1e-9;

/// Where a quoted excess-noise figure is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReference {
    /// Added variance at the channel output, before the receiver.
    #[default]
    ChannelOutput,
    /// Added variance as seen in the detected record, i.e. already scaled by `τ`.
    Detector,
}

impl NoiseReference {
    /// Converts `noise` to the channel-output value used by the model.
    pub fn to_channel_output(self, noise: f64, efficiency: f64) -> f64 {
        match self {
            NoiseReference::ChannelOutput => noise,
            NoiseReference::Detector => noise / efficiency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Modulation variance per quadrature, SNU. The prepared thermal
    /// ensemble has quadrature variance `1 + modulation_variance`.
    pub modulation_variance: f64,
}

impl SourceParams {
    /// `V`, the TMSV variance of the equivalent entanglement-based source.
    pub fn variance(&self) -> f64 {
        1.0 + self.modulation_variance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// `η_A`, feeder link between provider and splitter.
    pub feeder_transmittance: f64,
    /// `ε_A`, excess noise added on the feeder, SNU at the feeder output.
    /// Zero in the analyzed regime; nonzero values correlate the users' noise.
    pub feeder_excess_noise: f64,
    /// `η_B[l]`, per-user drop link after the splitter.
    pub branch_transmittance: Vec<f64>,
    /// `ε_B[l]`, excess noise of each drop link, SNU at the channel output.
    pub branch_excess_noise: Vec<f64>,
    /// Splitting ratios; `None` means an equal 1/N division. Ratios may sum
    /// to less than one, the remainder going to the eavesdropper.
    #[serde(default)]
    pub split_ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// `τ[l]`, detection efficiency.
    pub efficiency: Vec<f64>,
    /// `ν[l]`, electronic noise variance per arm, SNU.
    pub electronic_noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub source: SourceParams,
    pub link: LinkParams,
    pub detectors: DetectorParams,
}

/// End-to-end channel seen by one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserChannel {
    /// `η_l`, total transmittance including the split.
    pub transmittance: f64,
    /// `ε_l`, total excess noise at the channel output, SNU.
    pub excess_noise: f64,
    pub efficiency: f64,
    pub electronic_noise: f64,
}

impl NetworkParams {
    /// Builds and validates a network.
    pub fn new(source: SourceParams, link: LinkParams, detectors: DetectorParams) -> Result<Self> {
        let p = Self {
            source,
            link,
            detectors,
        };
        p.validate()?;
        Ok(p)
    }

    /// Identical drop links and detectors for all users.
    #[allow(clippy::too_many_arguments)]
    pub fn symmetric(
        users: usize,
        modulation_variance: f64,
        feeder_transmittance: f64,
        branch_transmittance: f64,
        branch_excess_noise: f64,
        efficiency: f64,
        electronic_noise: f64,
    ) -> Result<Self> {
        Self::new(
            SourceParams {
                modulation_variance,
            },
            LinkParams {
                feeder_transmittance,
                feeder_excess_noise: 0.0,
                branch_transmittance: vec![branch_transmittance; users],
                branch_excess_noise: vec![branch_excess_noise; users],
                split_ratios: None,
            },
            DetectorParams {
                efficiency: vec![efficiency; users],
                electronic_noise: vec![electronic_noise; users],
            },
        )
    }

    /// Realizes given end-to-end channels with an ideal feeder (`η_A = 1`,
    /// `ε_A = 0`), equal splitting and drop links `η_B[l] = N·η_l`.
    pub fn from_user_channels(modulation_variance: f64, users: &[UserChannel]) -> Result<Self> {
        let n = users.len() as f64;
        Self::new(
            SourceParams {
                modulation_variance,
            },
            LinkParams {
                feeder_transmittance: 1.0,
                feeder_excess_noise: 0.0,
                branch_transmittance: users.iter().map(|u| u.transmittance * n).collect(),
                branch_excess_noise: users.iter().map(|u| u.excess_noise).collect(),
                split_ratios: None,
            },
            DetectorParams {
                efficiency: users.iter().map(|u| u.efficiency).collect(),
                electronic_noise: users.iter().map(|u| u.electronic_noise).collect(),
            },
        )
    }

    pub fn users(&self) -> usize {
        self.link.branch_transmittance.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.users();
        if n == 0 {
            return Err(invalid("users", "network needs at least one user"));
        }
        let v = self.source.modulation_variance;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid("modulation_variance", format!("must be finite and >= 0, got {v}")));
        }
        let ea = self.link.feeder_transmittance;
        if !(ea > 0.0 && ea <= 1.0) {
            return Err(invalid("feeder_transmittance", format!("must lie in (0, 1], got {ea}")));
        }
        let na = self.link.feeder_excess_noise;
        if !(na >= 0.0) || !na.is_finite() {
            return Err(invalid("feeder_excess_noise", format!("must be finite and >= 0, got {na}")));
        }
        let lens = [
            ("branch_excess_noise", self.link.branch_excess_noise.len()),
            ("efficiency", self.detectors.efficiency.len()),
            ("electronic_noise", self.detectors.electronic_noise.len()),
        ];
        for (field, len) in lens {
            if len != n {
                return Err(invalid(field, format!("has {len} entries for {n} users")));
            }
        }
        for l in 0..n {
            let eb = self.link.branch_transmittance[l];
            if !(eb > 0.0 && eb <= 1.0) {
                return Err(invalid(
                    format!("branch_transmittance[{l}]"),
                    format!("must lie in (0, 1], got {eb}"),
                ));
            }
            let nb = self.link.branch_excess_noise[l];
            if !(nb >= 0.0) || !nb.is_finite() {
                return Err(invalid(
                    format!("branch_excess_noise[{l}]"),
                    format!("must be finite and >= 0, got {nb}"),
                ));
            }
            let t = self.detectors.efficiency[l];
            if !(t > 0.0 && t <= 1.0) {
                return Err(invalid(
                    format!("efficiency[{l}]"),
                    format!("must lie in (0, 1], got {t}"),
                ));
            }
            let nu = self.detectors.electronic_noise[l];
            if !(nu >= 0.0) || !nu.is_finite() {
                return Err(invalid(
                    format!("electronic_noise[{l}]"),
                    format!("must be finite and >= 0, got {nu}"),
                ));
            }
        }
        if let Some(r) = &self.link.split_ratios {
            if r.len() != n {
                return Err(invalid("split_ratios", format!("has {} entries for {n} users", r.len())));
            }
            if r.iter().any(|&x| !(x > 0.0)) {
                return Err(invalid("split_ratios", "ratios must be positive"));
            }
            let total: f64 = r.iter().sum();
            if total > 1.0 + 1e-12 {
                return Err(invalid("split_ratios", format!("ratios sum to {total} > 1")));
            }
        }
        Ok(())
    }

    pub(crate) fn check_user(&self, l: usize) -> Result<()> {
        if l >= self.users() {
            return Err(Error::UserOutOfRange {
                index: l,
                users: self.users(),
            });
        }
        Ok(())
    }

    /// Fraction of the feeder output routed to user `l` by the splitter.
    pub fn split_fraction(&self, l: usize) -> f64 {
        match &self.link.split_ratios {
            Some(r) => r[l],
            None => 1.0 / self.users() as f64,
        }
    }

    /// `η_l = η_A·f_l·η_B[l]` (with `f_l = 1/N` for equal splitting).
    pub fn total_transmittance(&self, l: usize) -> f64 {
        self.link.feeder_transmittance * self.split_fraction(l) * self.link.branch_transmittance[l]
    }

    /// `ε_l = ε_A·f_l·η_B[l] + ε_B[l]`, SNU at the channel output.
    pub fn total_excess_noise(&self, l: usize) -> f64 {
        self.link.feeder_excess_noise * self.split_fraction(l) * self.link.branch_transmittance[l]
            + self.link.branch_excess_noise[l]
    }

    /// Detector efficiency after the `τ < 1` cap.
    pub fn efficiency(&self, l: usize) -> f64 {
        self.detectors.efficiency[l].min(MAX_DETECTOR_EFFICIENCY)
    }

    pub fn electronic_noise(&self, l: usize) -> f64 {
        self.detectors.electronic_noise[l]
    }

    /// `V_D = 1 + ν/(1−τ)`, variance of the trusted-noise purification.
    pub fn purifier_variance(&self, l: usize) -> f64 {
        1.0 + self.electronic_noise(l) / (1.0 - self.efficiency(l))
    }

    /// Sign of user `l`'s branch in the splitter's output (alternating `+, −, +, …`).
    pub fn branch_sign(&self, l: usize) -> f64 {
        if l % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn user_channel(&self, l: usize) -> UserChannel {
        UserChannel {
            transmittance: self.total_transmittance(l),
            excess_noise: self.total_excess_noise(l),
            efficiency: self.efficiency(l),
            electronic_noise: self.electronic_noise(l),
        }
    }

    /// Whether all users see identical channels and detectors.
    pub fn is_symmetric(&self) -> bool {
        let first = self.user_channel(0);
        (1..self.users()).all(|l| {
            let c = self.user_channel(l);
            (c.transmittance - first.transmittance).abs() <= 1e-15
                && (c.excess_noise - first.excess_noise).abs() <= 1e-15
                && c.efficiency == first.efficiency
                && c.electronic_noise == first.electronic_noise
        })
    }

    /// Copy with user `l`'s end-to-end transmittance and excess noise
    /// replaced; the feeder and splitter are kept, the drop link absorbs
    /// the change.
    pub fn with_user_channel(&self, l: usize, transmittance: f64, excess_noise: f64) -> Result<Self> {
        self.check_user(l)?;
        let reach = self.link.feeder_transmittance * self.split_fraction(l);
        let branch = transmittance / reach;
        if !(branch > 0.0 && branch <= 1.0 + 1e-12) {
            return Err(invalid(
                "transmittance",
                format!("{transmittance} not reachable through feeder and splitter ({reach})"),
            ));
        }
        let branch = branch.min(1.0);
        let branch_noise =
            excess_noise - self.link.feeder_excess_noise * self.split_fraction(l) * branch;
        if branch_noise < -1e-15 {
            return Err(invalid(
                "excess_noise",
                format!("{excess_noise} is below the feeder contribution"),
            ));
        }
        let mut out = self.clone();
        out.link.branch_transmittance[l] = branch;
        out.link.branch_excess_noise[l] = branch_noise.max(0.0);
        out.validate()?;
        Ok(out)
    }

    /// Variance of the x-arm homodyne record,
    /// `1 + [(V−1)η_l + ε_l]·τ/2 + ν_l`.
    pub fn detected_variance(&self, l: usize) -> f64 {
        let v = self.source.variance();
        1.0 + ((v - 1.0) * self.total_transmittance(l) + self.total_excess_noise(l))
            * 0.5
            * self.efficiency(l)
            + self.electronic_noise(l)
    }
}
