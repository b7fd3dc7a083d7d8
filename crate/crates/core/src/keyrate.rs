//! Mutual informations, Holevo bounds and Devetak–Winter key rates.
//!
//! All quantities are per symbol: a symbol carries one Gaussian value in
//! each quadrature and is heterodyned by the user, so `I_AB` is the sum of
//! the two per-arm informations and `χ` conditions on both arms.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{Arm, CovarianceMatrix, ModeLabel, Quadrature};
use crate::network::{self, canonical_user_modes, NetworkParams};

/// Largest negative `χ` tolerated as round-off before it is reported as an error.
pub const HOLEVO_NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Which users a reference user counts as trusted; everything else is Eve's.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TrustPartition {
    reference: usize,
    trusted: BTreeSet<usize>,
}

impl TrustPartition {
    pub fn new(
        reference: usize,
        trusted: impl IntoIterator<Item = usize>,
        users: usize,
    ) -> Result<Self> {
        if reference >= users {
            return Err(Error::UserOutOfRange {
                index: reference,
                users,
            });
        }
        let trusted: BTreeSet<usize> = trusted.into_iter().collect();
        if trusted.contains(&reference) {
            return Err(invalid("trusted", "reference user cannot trust itself"));
        }
        if let Some(&bad) = trusted.iter().find(|&&j| j >= users) {
            return Err(Error::UserOutOfRange { index: bad, users });
        }
        Ok(Self { reference, trusted })
    }

    /// Every other user is attributed to Eve.
    pub fn untrusted(reference: usize) -> Self {
        Self {
            reference,
            trusted: BTreeSet::new(),
        }
    }

    pub fn all_trusted(reference: usize, users: usize) -> Result<Self> {
        Self::new(reference, (0..users).filter(|&j| j != reference), users)
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn trusted(&self) -> &BTreeSet<usize> {
        &self.trusted
    }

    /// True when no other user is left to Eve. Such bounds ignore what the
    /// reconciliation syndromes of the other users reveal and are not safe
    /// for key generation.
    pub fn is_all_trusted(&self, users: usize) -> bool {
        users > 1 && self.trusted.len() + 1 == users
    }

    pub fn is_subset_of(&self, other: &TrustPartition) -> bool {
        self.reference == other.reference && self.trusted.is_subset(&other.trusted)
    }
}

/// Per-arm signal-to-noise ratio of user `l`'s heterodyne record,
/// `(η_l τ/2)(V−1) / (1 + ν_l + ε_l τ/2)`.
pub fn snr(params: &NetworkParams, l: usize) -> Result<f64> {
    params.check_user(l)?;
    let tau = params.efficiency(l);
    let signal = 0.5 * params.total_transmittance(l) * tau * params.source.modulation_variance;
    let noise = 1.0 + params.electronic_noise(l) + 0.5 * params.total_excess_noise(l) * tau;
    Ok(signal / noise)
}

/// `I_AB` for one quadrature arm, `½ log2(1 + SNR)`.
pub fn mutual_information_ab_per_quadrature(params: &NetworkParams, l: usize) -> Result<f64> {
    Ok(0.5 * snr(params, l)?.ln_1p() / std::f64::consts::LN_2)
}

/// `I_AB` per symbol (both quadratures), `log2(1 + SNR)`.
pub fn mutual_information_ab(params: &NetworkParams, l: usize) -> Result<f64> {
    Ok(2.0 * mutual_information_ab_per_quadrature(params, l)?)
}

/// Mutual information between the x-arm records of users `i` and `j`,
/// `½ log2[V_i / (V_i − C_ij²/V_j)]`, per quadrature.
pub fn mutual_information_users(params: &NetworkParams, i: usize, j: usize) -> Result<f64> {
    let c = network::cross_user_correlation(params, i, j)?;
    let vi = params.detected_variance(i);
    let vj = params.detected_variance(j);
    let conditional = vi - c * c / vj;
    if !(conditional > 0.0) {
        return Err(Error::Numerical(format!(
            "conditional variance {conditional} of user {i} given user {j} is not positive"
        )));
    }
    Ok(0.5 * (vi / conditional).log2())
}

fn users_in(state: &CovarianceMatrix) -> usize {
    state
        .labels()
        .iter()
        .filter(|l| matches!(l, ModeLabel::User { arm: Arm::X, .. }))
        .count()
}

/// The trusted subsystem `ρ_{A B_ref C}`: Alice's arms plus the six modes of
/// the reference user and of every trusted user, in the state's order.
pub fn trusted_state(state: &CovarianceMatrix, partition: &TrustPartition) -> Result<CovarianceMatrix> {
    let users = users_in(state);
    for &u in std::iter::once(&partition.reference).chain(partition.trusted.iter()) {
        if u >= users {
            return Err(Error::UserOutOfRange { index: u, users });
        }
    }
    let mut keep = vec![ModeLabel::AliceX, ModeLabel::AliceP];
    keep.extend(canonical_user_modes(partition.reference));
    for &j in &partition.trusted {
        keep.extend(canonical_user_modes(j));
    }
    state.restrict(&keep)
}

/// `χ_{EB_ref} = S(ρ_{AB_ref C}) − S(ρ_{AC|B_ref})` on the detected state
/// `γ_AB''`, conditioning on x of `B^x_ref` and then p of `B^p_ref`.
pub fn holevo_bound(state: &CovarianceMatrix, partition: &TrustPartition) -> Result<f64> {
    let trusted = trusted_state(state, partition)?;
    let r = partition.reference;
    let joint = trusted.von_neumann_entropy()?;
    let conditioned = trusted
        .condition_on_homodyne(ModeLabel::User { user: r, arm: Arm::X }, Quadrature::X)?
        .condition_on_homodyne(ModeLabel::User { user: r, arm: Arm::P }, Quadrature::P)?
        .von_neumann_entropy()?;
    let chi = joint - conditioned;
    if chi < -HOLEVO_NEGATIVE_TOLERANCE {
        return Err(Error::Numerical(format!("negative Holevo bound {chi}")));
    }
    Ok(chi.max(0.0))
}

/// `max(0, β·I_AB − χ)`.
pub fn devetak_winter(beta: f64, mutual_information: f64, holevo: f64) -> f64 {
    (beta * mutual_information - holevo).max(0.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("must lie in [0, 1], got {beta}")));
    }
    Ok(())
}

/// Key per symbol of user `l`; assembles the network state on every call.
/// Use [`KeyRateEngine`] to evaluate several users or partitions.
pub fn key_rate(params: &NetworkParams, l: usize, partition: &TrustPartition, beta: f64) -> Result<f64> {
    KeyRateEngine::new(params.clone())?.key_rate(l, partition, beta)
}

/// One user's line of a [`KeyRateReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserKeyRecord {
    pub user: usize,
    pub trusted: Vec<usize>,
    /// Set for all-trusted partitions.
    pub unsafe_partition: bool,
    pub snr: f64,
    pub mutual_information: f64,
    /// Pairwise `I(B_user; B_j)` per quadrature, `None` on the diagonal.
    pub user_mutual_information: Option<Vec<Option<f64>>>,
    pub holevo: f64,
    pub beta: f64,
    pub key_per_symbol: f64,
    pub fer: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub users: Vec<UserKeyRecord>,
    pub symbol_rate: f64,
    pub total_key_per_symbol: f64,
    pub total_throughput: f64,
}

/// Holds the assembled `γ_AB''` of a network and evaluates keys against it.
#[derive(Debug, Clone)]
pub struct KeyRateEngine {
    params: NetworkParams,
    state: CovarianceMatrix,
}

impl KeyRateEngine {
    pub fn new(params: NetworkParams) -> Result<Self> {
        let state = network::assemble(&params)?;
        Ok(Self { params, state })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn state(&self) -> &CovarianceMatrix {
        &self.state
    }

    pub fn users(&self) -> usize {
        self.params.users()
    }

    pub fn holevo(&self, partition: &TrustPartition) -> Result<f64> {
        holevo_bound(&self.state, partition)
    }

    pub fn key_rate(&self, l: usize, partition: &TrustPartition, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        if partition.reference() != l {
            return Err(invalid(
                "partition",
                format!("reference user {} differs from user {l}", partition.reference()),
            ));
        }
        let i_ab = mutual_information_ab(&self.params, l)?;
        Ok(devetak_winter(beta, i_ab, self.holevo(partition)?))
    }

    /// Keys of all users with their partitions, evaluated in parallel.
    pub fn key_rates(&self, partitions: &[TrustPartition], betas: &[f64]) -> Result<Vec<f64>> {
        self.check_lengths(partitions.len(), betas.len())?;
        partitions
            .par_iter()
            .enumerate()
            .map(|(l, p)| self.key_rate(l, p, betas[l]))
            .collect()
    }

    fn check_lengths(&self, partitions: usize, betas: usize) -> Result<()> {
        let n = self.users();
        for found in [partitions, betas] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(())
    }

    /// Full per-user report. `partitions[l]` must reference user `l`.
    pub fn report(
        &self,
        partitions: &[TrustPartition],
        betas: &[f64],
        fers: &[f64],
        symbol_rate: f64,
        with_user_information: bool,
    ) -> Result<KeyRateReport> {
        self.check_lengths(partitions.len(), betas.len())?;
        self.check_lengths(fers.len(), betas.len())?;
        let n = self.users();
        let users: Vec<UserKeyRecord> = partitions
            .par_iter()
            .enumerate()
            .map(|(l, partition)| {
                let beta = betas[l];
                check_beta(beta)?;
                let i_ab = mutual_information_ab(&self.params, l)?;
                let holevo = self.holevo(partition)?;
                let key = devetak_winter(beta, i_ab, holevo);
                let user_mi = if with_user_information {
                    Some(
                        (0..n)
                            .map(|j| {
                                (j != l)
                                    .then(|| mutual_information_users(&self.params, l, j))
                                    .transpose()
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                } else {
                    None
                };
                Ok(UserKeyRecord {
                    user: l,
                    trusted: partition.trusted().iter().copied().collect(),
                    unsafe_partition: partition.is_all_trusted(n),
                    snr: snr(&self.params, l)?,
                    mutual_information: i_ab,
                    user_mutual_information: user_mi,
                    holevo,
                    beta,
                    key_per_symbol: key,
                    fer: fers[l],
                    throughput: crate::protocols::throughput(key, symbol_rate, fers[l])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(KeyRateReport {
            total_key_per_symbol: users.iter().map(|u| u.key_per_symbol).sum(),
            total_throughput: users.iter().map(|u| u.throughput).sum(),
            users,
            symbol_rate,
        })
    }
}
