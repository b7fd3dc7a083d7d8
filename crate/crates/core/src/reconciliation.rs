//! Rate arithmetic of rate-adaptive LDPC reconciliation: puncturing,
//! shortening, AWGN capacity and bookkeeping of the measured `β` and FER.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A base code with optional puncturing (`p`) or shortening (`s`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    /// Information bits.
    pub k: u64,
    /// Codeword length.
    pub n: u64,
    pub punctured: u64,
    pub shortened: u64,
}

impl CodeSpec {
    pub fn new(k: u64, n: u64, punctured: u64, shortened: u64) -> Result<Self> {
        let spec = Self {
            k,
            n,
            punctured,
            shortened,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(invalid("k", format!("need 0 < k <= n, got k={} n={}", self.k, self.n)));
        }
        if self.punctured >= self.n {
            return Err(invalid("punctured", format!("{} >= n = {}", self.punctured, self.n)));
        }
        if self.shortened > self.k {
            return Err(invalid("shortened", format!("{} > k = {}", self.shortened, self.k)));
        }
        if self.punctured > 0 && self.shortened > 0 {
            return Err(invalid("shortened", "puncturing and shortening are exclusive"));
        }
        Ok(())
    }

    pub fn base_rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn adaptation(&self) -> Adaptation {
        if self.punctured > 0 {
            Adaptation::Punctured
        } else if self.shortened > 0 {
            Adaptation::Shortened
        } else {
            Adaptation::None
        }
    }

    pub fn effective_rate(&self) -> Result<f64> {
        match self.adaptation() {
            Adaptation::Shortened => shortened_rate(self),
            _ => punctured_rate(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    None,
    Punctured,
    Shortened,
}

/// `k/(n−p)`.
pub fn punctured_rate(spec: &CodeSpec) -> Result<f64> {
    spec.validate()?;
    if spec.shortened != 0 {
        return Err(invalid("shortened", "punctured rate of a shortened code"));
    }
    Ok(spec.k as f64 / (spec.n - spec.punctured) as f64)
}

/// `(k−s)/(n−s)`.
pub fn shortened_rate(spec: &CodeSpec) -> Result<f64> {
    spec.validate()?;
    if spec.punctured != 0 {
        return Err(invalid("punctured", "shortened rate of a punctured code"));
    }
    Ok((spec.k - spec.shortened) as f64 / (spec.n - spec.shortened) as f64)
}

/// `½ log2(1 + SNR)` bits per channel use.
pub fn awgn_capacity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(invalid("snr", format!("must be >= 0, got {snr}")));
    }
    Ok(0.5 * snr.ln_1p() / std::f64::consts::LN_2)
}

/// Drops digits beyond `decimals` (toward zero).
pub fn truncate_decimals(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    // The nudge keeps exact decimals such as 0.0093 from flooring to 0.0092.
    (x * scale * (1.0 + 1e-12)).trunc() / scale
}

/// Measured reconciliation performance of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconRecord {
    pub snr: f64,
    pub beta: f64,
    pub fer: f64,
    pub effective_rate: f64,
}

/// Expected direction of the FER relative to the base code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FerTrend {
    Unchanged,
    /// Puncturing removes redundancy, so more frames fail.
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptationDiagnostics {
    pub adaptation: Adaptation,
    pub base_rate: f64,
    pub effective_rate: f64,
    pub capacity: f64,
    /// The base code is at or above capacity, so the rate must be lowered.
    pub shortening_required: bool,
    /// The adapted code is still at or above capacity.
    pub rate_exceeds_capacity: bool,
    /// `|effective_rate − record.effective_rate|` after truncating both to 4 decimals.
    pub recorded_rate_mismatch: f64,
    pub fer_trend: FerTrend,
}

pub fn validate_adaptation(record: &ReconRecord, spec: &CodeSpec) -> Result<AdaptationDiagnostics> {
    if !(0.0..1.0).contains(&record.beta) {
        return Err(invalid("beta", format!("must lie in [0, 1), got {}", record.beta)));
    }
    if !(0.0..=1.0).contains(&record.fer) {
        return Err(invalid("fer", format!("must lie in [0, 1], got {}", record.fer)));
    }
    let capacity = awgn_capacity(record.snr)?;
    let effective = spec.effective_rate()?;
    let adaptation = spec.adaptation();
    Ok(AdaptationDiagnostics {
        adaptation,
        base_rate: spec.base_rate(),
        effective_rate: effective,
        capacity,
        shortening_required: spec.base_rate() >= capacity,
        rate_exceeds_capacity: effective >= capacity,
        recorded_rate_mismatch: (truncate_decimals(effective, 4)
            - truncate_decimals(record.effective_rate, 4))
        .abs(),
        fer_trend: match adaptation {
            Adaptation::None => FerTrend::Unchanged,
            Adaptation::Punctured => FerTrend::Higher,
            Adaptation::Shortened => FerTrend::Lower,
        },
    })
}

/// Base code of the experiment: rate 0.01, `n = 819 200`.
pub const BASE_K: u64 = 8192;
pub const BASE_N: u64 = 819_200;
/// SNR the base code was designed for.
pub const BASE_DESIGN_SNR: f64 = 0.007;

/// One row of the experiment's reconciliation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconRow {
    pub name: &'static str,
    pub snr: f64,
    pub punctured: u64,
    pub shortened: u64,
    /// Adapted rate as printed (4 decimals).
    pub printed_rate: f64,
    pub beta_percent: f64,
    pub fer_percent: f64,
}

const fn row(
    name: &'static str,
    snr: f64,
    punctured: u64,
    shortened: u64,
    printed_rate: f64,
    beta_percent: f64,
    fer_percent: f64,
) -> ReconRow {
    ReconRow {
        name,
        snr,
        punctured,
        shortened,
        printed_rate,
        beta_percent,
        fer_percent,
    }
}

pub const EXPERIMENT_RECONCILIATION: [ReconRow; 8] = [
    row("Bob1", 0.0077, 10_000, 0, 0.0101, 90.79, 4.5),
    row("Bob2", 0.0088, 130_000, 0, 0.0118, 93.23, 43.0),
    row("Bob3", 0.0091, 140_000, 0, 0.0120, 91.37, 22.3),
    row("Bob4", 0.0083, 70_000, 0, 0.0109, 91.5, 15.3),
    row("Bob5", 0.0096, 170_000, 0, 0.0126, 91.44, 13.6),
    row("Bob6", 0.00708, 0, 550, 0.0093, 91.9, 21.5),
    row("Bob7", 0.0082, 90_000, 0, 0.0112, 94.8, 55.4),
    row("Bob8", 0.0097, 170_000, 0, 0.0126, 90.78, 9.5),
];

impl ReconRow {
    pub fn spec(&self) -> CodeSpec {
        CodeSpec {
            k: BASE_K,
            n: BASE_N,
            punctured: self.punctured,
            shortened: self.shortened,
        }
    }

    pub fn record(&self) -> ReconRecord {
        ReconRecord {
            snr: self.snr,
            beta: self.beta_percent / 100.0,
            fer: self.fer_percent / 100.0,
            effective_rate: self.printed_rate,
        }
    }
}
