//! Time-sharing, untrusted and trusted broadcast protocols, the PLOB
//! benchmark and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::keyrate::{KeyRateEngine, TrustPartition};
use crate::network::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    TimeSharing,
    UntrustedBroadcast,
    TrustedBroadcast,
    Plob,
}

/// How the trust hierarchy of the trusted broadcast protocol is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustStrategy {
    /// Lowest untrusted key first; ties broken by user index.
    AscendingUntrustedKey,
    DescendingUntrustedKey,
    Explicit(Vec<usize>),
}

/// A trust strategy together with the order it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrustOrdering {
    pub strategy: TrustStrategy,
    pub realized_order: Vec<usize>,
}

impl TrustOrdering {
    pub fn realize(strategy: &TrustStrategy, untrusted_keys: &[f64]) -> Result<Self> {
        let n = untrusted_keys.len();
        let mut order: Vec<usize> = (0..n).collect();
        match strategy {
            TrustStrategy::AscendingUntrustedKey => {
                order.sort_by(|&a, &b| untrusted_keys[a].total_cmp(&untrusted_keys[b]))
            }
            TrustStrategy::DescendingUntrustedKey => {
                order.sort_by(|&a, &b| untrusted_keys[b].total_cmp(&untrusted_keys[a]))
            }
            TrustStrategy::Explicit(list) => {
                let mut seen = vec![false; n];
                for &u in list {
                    if u >= n || std::mem::replace(&mut seen[u], true) {
                        return Err(invalid(
                            "ordering",
                            format!("{list:?} is not a permutation of 0..{n}"),
                        ));
                    }
                }
                if list.len() != n {
                    return Err(invalid(
                        "ordering",
                        format!("{list:?} is not a permutation of 0..{n}"),
                    ));
                }
                order = list.clone();
            }
        }
        Ok(Self {
            strategy: strategy.clone(),
            realized_order: order,
        })
    }

    /// Partition of every user, indexed by user: each trusts all users
    /// ahead of it in the order.
    pub fn partitions(&self) -> Result<Vec<TrustPartition>> {
        let n = self.realized_order.len();
        let mut out = vec![TrustPartition::untrusted(0); n];
        for (pos, &u) in self.realized_order.iter().enumerate() {
            out[u] = TrustPartition::new(u, self.realized_order[..pos].iter().copied(), n)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub protocol: Protocol,
    /// Bits per symbol.
    pub per_user: Vec<f64>,
    pub total: f64,
    pub ordering: Option<TrustOrdering>,
    pub betas: Vec<f64>,
}

impl ProtocolResult {
    fn new(protocol: Protocol, per_user: Vec<f64>, betas: Vec<f64>) -> Self {
        Self {
            protocol,
            total: per_user.iter().sum(),
            per_user,
            ordering: None,
            betas,
        }
    }

    pub fn positive_users(&self) -> usize {
        self.per_user.iter().filter(|&&k| k > 0.0).count()
    }
}

/// One β per user; a single value is broadcast to every user.
pub fn resolve_betas(betas: &[f64], users: usize) -> Result<Vec<f64>> {
    let out = match betas.len() {
        1 => vec![betas[0]; users],
        n if n == users => betas.to_vec(),
        n => return Err(invalid("beta", format!("has {n} entries for {users} users"))),
    };
    if let Some(b) = out.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(invalid("beta", format!("must lie in [0, 1], got {b}")));
    }
    Ok(out)
}

/// `K^U_Σ`: every user treats all others as Eve.
pub fn untrusted_total(params: &NetworkParams, betas: &[f64]) -> Result<ProtocolResult> {
    untrusted_total_with(&KeyRateEngine::new(params.clone())?, betas)
}

pub fn untrusted_total_with(engine: &KeyRateEngine, betas: &[f64]) -> Result<ProtocolResult> {
    let betas = resolve_betas(betas, engine.users())?;
    let parts: Vec<_> = (0..engine.users()).map(TrustPartition::untrusted).collect();
    let keys = engine.key_rates(&parts, &betas)?;
    Ok(ProtocolResult::new(Protocol::UntrustedBroadcast, keys, betas))
}

/// `K^T_Σ`: hierarchical trust, each user trusting those before it.
pub fn trusted_total(
    params: &NetworkParams,
    betas: &[f64],
    strategy: &TrustStrategy,
) -> Result<ProtocolResult> {
    let engine = KeyRateEngine::new(params.clone())?;
    trusted_total_with(&engine, betas, strategy, None)
}

/// As [`trusted_total`]; pass `untrusted` to reuse already computed
/// untrusted keys for the ordering.
pub fn trusted_total_with(
    engine: &KeyRateEngine,
    betas: &[f64],
    strategy: &TrustStrategy,
    untrusted: Option<&ProtocolResult>,
) -> Result<ProtocolResult> {
    let betas = resolve_betas(betas, engine.users())?;
    let ordering = match (strategy, untrusted) {
        (TrustStrategy::Explicit(_), _) => TrustOrdering::realize(strategy, &vec![0.0; engine.users()])?,
        (_, Some(u)) => TrustOrdering::realize(strategy, &u.per_user)?,
        (_, None) => {
            let u = untrusted_total_with(engine, &betas)?;
            TrustOrdering::realize(strategy, &u.per_user)?
        }
    };
    let keys = engine.key_rates(&ordering.partitions()?, &betas)?;
    let mut out = ProtocolResult::new(Protocol::TrustedBroadcast, keys, betas);
    out.ordering = Some(ordering);
    Ok(out)
}

/// `K^TS_Σ`: the single-user key over user `designated`'s channel, shared
/// in time between all users. Without `designated` the links must be
/// identical.
pub fn time_sharing_total(
    params: &NetworkParams,
    betas: &[f64],
    designated: Option<usize>,
) -> Result<ProtocolResult> {
    let n = params.users();
    let betas = resolve_betas(betas, n)?;
    let user = match designated {
        Some(d) => {
            params.check_user(d)?;
            d
        }
        None if params.is_symmetric() && betas.iter().all(|&b| b == betas[0]) => 0,
        None => {
            return Err(invalid(
                "designated_user",
                "time sharing over unequal links needs a designated user",
            ))
        }
    };
    let single = NetworkParams::from_user_channels(
        params.source.modulation_variance,
        &[params.user_channel(user)],
    )?;
    let engine = KeyRateEngine::new(single)?;
    let total = engine.key_rate(0, &TrustPartition::untrusted(0), betas[user])?;
    let mut out = ProtocolResult::new(Protocol::TimeSharing, vec![total / n as f64; n], betas);
    out.total = total;
    Ok(out)
}

/// PLOB repeaterless bound `−log2(1−η)`; infinite at `η = 1`.
pub fn plob_bound(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1], got {eta}")));
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// PLOB of each user's end-to-end channel.
pub fn plob_total(params: &NetworkParams) -> Result<ProtocolResult> {
    let n = params.users();
    let per_user = (0..n)
        .map(|l| plob_bound(params.total_transmittance(l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolResult::new(Protocol::Plob, per_user, vec![1.0; n]))
}

/// `key × rate × (1 − FER)`, bits per second.
pub fn throughput(key_per_symbol: f64, symbol_rate: f64, fer: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fer) {
        return Err(invalid("fer", format!("must lie in [0, 1], got {fer}")));
    }
    if !(symbol_rate >= 0.0) || !symbol_rate.is_finite() {
        return Err(invalid("symbol_rate", format!("must be finite and >= 0, got {symbol_rate}")));
    }
    Ok(key_per_symbol * symbol_rate * (1.0 - fer))
}

/// All four protocol results on one network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub time_sharing: ProtocolResult,
    pub untrusted: ProtocolResult,
    pub trusted: ProtocolResult,
    pub plob: ProtocolResult,
}

pub fn compare(
    params: &NetworkParams,
    betas: &[f64],
    strategy: &TrustStrategy,
    designated: Option<usize>,
) -> Result<Comparison> {
    let engine = KeyRateEngine::new(params.clone())?;
    let untrusted = untrusted_total_with(&engine, betas)?;
    let trusted = trusted_total_with(&engine, betas, strategy, Some(&untrusted))?;
    Ok(Comparison {
        time_sharing: time_sharing_total(params, betas, designated)?,
        trusted,
        untrusted,
        plob: plob_total(params)?,
    })
}

/// Identical users behind an equal splitter, described by end-to-end quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricScenario {
    pub users: usize,
    /// SNU.
    pub modulation_variance: f64,
    /// `η_A η_B`, splitting excluded.
    pub channel_transmittance: f64,
    /// SNU at the channel output.
    pub excess_noise: f64,
    pub efficiency: f64,
    /// SNU.
    pub electronic_noise: f64,
    pub beta: f64,
}

impl SymmetricScenario {
    pub fn network(&self) -> Result<NetworkParams> {
        NetworkParams::symmetric(
            self.users,
            self.modulation_variance,
            1.0,
            self.channel_transmittance,
            self.excess_noise,
            self.efficiency,
            self.electronic_noise,
        )
    }
}

/// `ε = intercept + slope·V_mod`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearNoise {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearNoise {
    pub fn at(&self, modulation_variance: f64) -> f64 {
        self.intercept + self.slope * modulation_variance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Loss of `η_A η_B` in dB (positive numbers).
    ChannelLossDb,
    Users,
    ModulationVariance,
}

/// One grid point of a sweep: totals in bits per symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub users: usize,
    pub channel_transmittance: f64,
    pub modulation_variance: f64,
    pub excess_noise: f64,
    pub time_sharing: f64,
    pub untrusted: f64,
    pub trusted: f64,
    pub plob: f64,
    pub positive_untrusted: usize,
    pub positive_trusted: usize,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 11] = [
        "axis_value",
        "users",
        "channel_transmittance",
        "modulation_variance_snu",
        "excess_noise_snu",
        "time_sharing_bits_per_symbol",
        "untrusted_bits_per_symbol",
        "trusted_bits_per_symbol",
        "plob_bits_per_symbol",
        "positive_untrusted_users",
        "positive_trusted_users",
    ];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.axis_value.to_string(),
            self.users.to_string(),
            self.channel_transmittance.to_string(),
            self.modulation_variance.to_string(),
            self.excess_noise.to_string(),
            self.time_sharing.to_string(),
            self.untrusted.to_string(),
            self.trusted.to_string(),
            self.plob.to_string(),
            self.positive_untrusted.to_string(),
            self.positive_trusted.to_string(),
        ]
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(invalid("range", "needs finite bounds and at least one point"));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    if start == stop {
        return Err(invalid("range", "several points need distinct bounds"));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|k| start + step * k as f64).collect())
}

fn check_monotone(values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("range", "must be non-empty and finite"));
    }
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(invalid("range", "must be strictly monotone"));
    }
    Ok(())
}

/// Evaluates all protocols along `axis`. Rows follow the order of `values`
/// whatever the parallel schedule.
pub fn sweep(
    template: &SymmetricScenario,
    axis: SweepAxis,
    values: &[f64],
    strategy: &TrustStrategy,
    noise: Option<LinearNoise>,
) -> Result<Vec<SweepRow>> {
    check_monotone(values)?;
    values
        .par_iter()
        .map(|&x| {
            let mut s = template.clone();
            match axis {
                SweepAxis::ChannelLossDb => {
                    if x < 0.0 {
                        return Err(invalid("range", format!("loss must be >= 0 dB, got {x}")));
                    }
                    s.channel_transmittance = 10f64.powf(-x / 10.0);
                }
                SweepAxis::Users => {
                    if x < 1.0 || x.fract() != 0.0 {
                        return Err(invalid("range", format!("user count must be a positive integer, got {x}")));
                    }
                    s.users = x as usize;
                }
                SweepAxis::ModulationVariance => s.modulation_variance = x,
            }
            if let Some(model) = noise {
                s.excess_noise = model.at(s.modulation_variance);
            }
            let params = s.network()?;
            let c = compare(&params, &[s.beta], strategy, None)?;
            Ok(SweepRow {
                axis_value: x,
                users: s.users,
                channel_transmittance: s.channel_transmittance,
                modulation_variance: s.modulation_variance,
                excess_noise: s.excess_noise,
                time_sharing: c.time_sharing.total,
                untrusted: c.untrusted.total,
                trusted: c.trusted.total,
                plob: c.plob.total,
                positive_untrusted: c.untrusted.positive_users(),
                positive_trusted: c.trusted.positive_users(),
            })
        })
        .collect()
}
