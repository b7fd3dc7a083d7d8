use crate::error::{Error, Result};
use crate::gaussian::{Arm, CovarianceMatrix, ModeLabel};

use super::{DetectorParams, NetworkParams, SourceParams, MAX_DETECTOR_EFFICIENCY};

/// How the 1:N splitter is decomposed into two-port beamsplitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitterTopology {
    /// Chain of beamsplitters; stage `l` taps `f_l / (remaining)` of the light.
    Sequential,
    /// Balanced binary tree; needs an equal split and N a power of two.
    Tree,
}

impl SplitterTopology {
    pub fn default_for(params: &NetworkParams) -> Self {
        if params.link.split_ratios.is_none() && params.users().is_power_of_two() {
            SplitterTopology::Tree
        } else {
            SplitterTopology::Sequential
        }
    }
}

fn user(l: usize) -> ModeLabel {
    ModeLabel::User {
        user: l,
        arm: Arm::None,
    }
}

/// Alice's heterodyne arms and the outgoing signal, modes `[A^x, A^p, B]`.
///
/// A TMSV of variance `V = 1 + V_mod` on `(A, B)`, with `A` mixed with vacuum
/// on a balanced beamsplitter. The state is pure.
pub fn build_signal_stage(source: &SourceParams) -> Result<CovarianceMatrix> {
    let v = source.variance();
    CovarianceMatrix::vacuum(ModeLabel::AliceX)
        .tensor(&CovarianceMatrix::tmsv(v, ModeLabel::AliceP, ModeLabel::Signal)?)?
        .beamsplitter(ModeLabel::AliceX, ModeLabel::AliceP, 0.5)
}

/// `γ_AB'`: modes `[A^x, A^p, B_1 … B_N]` after the feeder, splitter and drop links.
pub fn build_broadcast_state(params: &NetworkParams) -> Result<CovarianceMatrix> {
    build_broadcast_state_with(params, SplitterTopology::default_for(params))
}

pub fn build_broadcast_state_with(
    params: &NetworkParams,
    topology: SplitterTopology,
) -> Result<CovarianceMatrix> {
    params.validate()?;
    let n = params.users();
    let mut state = build_signal_stage(&params.source)?.thermal_loss_channel(
        ModeLabel::Signal,
        params.link.feeder_transmittance,
        params.link.feeder_excess_noise,
    )?;
    state = match topology {
        SplitterTopology::Sequential => split_sequential(state, params)?,
        SplitterTopology::Tree => split_tree(state, n)?,
    };
    for l in 0..n {
        state = state.thermal_loss_channel(
            user(l),
            params.link.branch_transmittance[l],
            params.link.branch_excess_noise[l],
        )?;
    }
    let mut order = vec![ModeLabel::AliceX, ModeLabel::AliceP];
    order.extend((0..n).map(user));
    state.reorder(&order)
}

// Each tap keeps the sign of the incoming light and the through port flips it,
// so branch signs alternate +, −, +, …
fn split_sequential(mut state: CovarianceMatrix, params: &NetworkParams) -> Result<CovarianceMatrix> {
    let n = params.users();
    let fractions: Vec<f64> = (0..n).map(|l| params.split_fraction(l)).collect();
    let mut remaining: f64 = 1.0;
    let mut carrier = ModeLabel::Signal;
    let mut spent = false;
    for (l, &f) in fractions.iter().enumerate() {
        let t = (f / remaining).min(1.0);
        let last = l + 1 == n;
        if last && t >= 1.0 - 1e-12 {
            state = state.relabel(carrier, user(l))?;
            spent = true;
            break;
        }
        let port = state.fresh_ancilla();
        state = state
            .tensor(&CovarianceMatrix::vacuum(port))?
            .beamsplitter(carrier, port, t)?
            .relabel(carrier, user(l))?;
        carrier = port;
        remaining -= f;
    }
    if !spent {
        // Unallocated splitter output goes to the eavesdropper.
        state = state.trace_out(&[carrier])?;
    }
    Ok(state)
}

fn split_tree(mut state: CovarianceMatrix, n: usize) -> Result<CovarianceMatrix> {
    if !n.is_power_of_two() {
        return Err(Error::Domain(format!(
            "tree splitter needs a power-of-two user count, got {n}"
        )));
    }
    let mut leaves = vec![(ModeLabel::Signal, 1.0f64)];
    while leaves.len() < n {
        let mut next = Vec::with_capacity(2 * leaves.len());
        for (mode, sign) in leaves {
            let port = state.fresh_ancilla();
            state = state
                .tensor(&CovarianceMatrix::vacuum(port))?
                .beamsplitter(mode, port, 0.5)?;
            next.push((mode, sign));
            next.push((port, -sign));
        }
        leaves = next;
    }
    // Final relabel through temporaries: a leaf may already carry a name we
    // are about to assign.
    let temps: Vec<ModeLabel> = (0..n).map(|l| ModeLabel::Eve(usize::MAX - l)).collect();
    for (l, (mode, _)) in leaves.iter().enumerate() {
        state = state.relabel(*mode, temps[l])?;
    }
    for (l, (_, sign)) in leaves.iter().enumerate() {
        state = state.relabel(temps[l], user(l))?;
        let want = if l % 2 == 0 { 1.0 } else { -1.0 };
        if *sign != want {
            state = state.phase_flip(user(l))?;
        }
    }
    Ok(state)
}

/// Receiver modes of user `l` in canonical order:
/// `[B^x, D^x, F^x, B^p, D^p, F^p]`.
pub fn canonical_user_modes(l: usize) -> [ModeLabel; 6] {
    let mut out = [ModeLabel::AliceX; 6];
    for (k, arm) in [Arm::X, Arm::P].into_iter().enumerate() {
        out[3 * k] = ModeLabel::User { user: l, arm };
        out[3 * k + 1] = ModeLabel::Detector { user: l, arm };
        out[3 * k + 2] = ModeLabel::Purifier { user: l, arm };
    }
    out
}

/// `γ_AB''`: heterodyne split and trusted detector purifications for every
/// user, `2 + 6N` modes in canonical order `[A^x, A^p, user 1 modes, …]`.
pub fn attach_trusted_detectors(
    state: &CovarianceMatrix,
    detectors: &DetectorParams,
) -> Result<CovarianceMatrix> {
    let n = detectors.efficiency.len();
    if detectors.electronic_noise.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: detectors.electronic_noise.len(),
        });
    }
    let present = state
        .labels()
        .iter()
        .filter(|l| matches!(l, ModeLabel::User { arm: Arm::None, .. }))
        .count();
    if present != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: present,
        });
    }
    let mut out = state.clone();
    for l in 0..n {
        let tau = detectors.efficiency[l].min(MAX_DETECTOR_EFFICIENCY);
        let nu = detectors.electronic_noise[l];
        if !(tau > 0.0) || !(nu >= 0.0) {
            return Err(Error::Domain(format!("invalid detector {l}: tau={tau}, nu={nu}")));
        }
        let bx = ModeLabel::User { user: l, arm: Arm::X };
        let bp = ModeLabel::User { user: l, arm: Arm::P };
        let port = out.fresh_ancilla();
        out = out
            .tensor(&CovarianceMatrix::vacuum(port))?
            .beamsplitter(user(l), port, 0.5)?
            .relabel(user(l), bx)?
            .relabel(port, bp)?;
        let vd = 1.0 + nu / (1.0 - tau);
        for arm in [Arm::X, Arm::P] {
            let b = ModeLabel::User { user: l, arm };
            let d = ModeLabel::Detector { user: l, arm };
            let f = ModeLabel::Purifier { user: l, arm };
            out = out
                .tensor(&CovarianceMatrix::tmsv(vd, d, f)?)?
                .beamsplitter(b, d, tau)?;
        }
    }
    let mut order: Vec<ModeLabel> = state
        .labels()
        .iter()
        .copied()
        .filter(|l| !matches!(l, ModeLabel::User { .. }))
        .collect();
    for l in 0..n {
        order.extend(canonical_user_modes(l));
    }
    out.reorder(&order)
}

/// Full `γ_AB''` for a network.
pub fn assemble(params: &NetworkParams) -> Result<CovarianceMatrix> {
    let broadcast = build_broadcast_state(params)?;
    attach_trusted_detectors(&broadcast, &params.detectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Quadrature;

    #[test]
    fn signal_stage_without_modulation_is_vacuum() {
        let s = build_signal_stage(&SourceParams {
            modulation_variance: 0.0,
        })
        .unwrap();
        assert!((s.variance(ModeLabel::Signal, Quadrature::X).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.von_neumann_entropy().unwrap() < 1e-8);
    }

    #[test]
    fn signal_stage_alice_block() {
        // V = 4: Alice's arms have variance (V+1)/2 = 2.5 and cross-covariance (V-1)/2 = 1.5.
        let s = build_signal_stage(&SourceParams {
            modulation_variance: 3.0,
        })
        .unwrap();
        let ax = s.block(ModeLabel::AliceX, ModeLabel::AliceX).unwrap();
        let axp = s.block(ModeLabel::AliceX, ModeLabel::AliceP).unwrap();
        assert!((ax[(0, 0)] - 2.5).abs() < 1e-14 && (ax[(1, 1)] - 2.5).abs() < 1e-14);
        assert!((axp[(0, 0)] - 1.5).abs() < 1e-14 && (axp[(1, 1)] - 1.5).abs() < 1e-14);
        assert!(s.von_neumann_entropy().unwrap() < 1e-8);
    }

    #[test]
    fn single_lossless_user_matches_signal_stage() {
        let p = NetworkParams::symmetric(1, 2.0, 1.0, 1.0, 0.0, 0.9, 0.0).unwrap();
        let b = build_broadcast_state(&p).unwrap();
        let s = build_signal_stage(&p.source)
            .unwrap()
            .relabel(ModeLabel::Signal, user(0))
            .unwrap();
        assert!((b.matrix() - s.matrix()).amax() < 1e-14);
    }

    #[test]
    fn noisy_lossless_branch_adds_exact_noise() {
        let p = NetworkParams::symmetric(1, 2.0, 1.0, 1.0, 0.05, 0.9, 0.0).unwrap();
        let b = build_broadcast_state(&p).unwrap();
        let var = b.variance(user(0), Quadrature::X).unwrap();
        assert!((var - (1.0 + 2.0 + 0.05)).abs() < 1e-13);
    }

    #[test]
    fn unequal_split_sends_remainder_to_eve() {
        let mut p = NetworkParams::symmetric(2, 3.0, 1.0, 1.0, 0.0, 0.9, 0.0).unwrap();
        p.link.split_ratios = Some(vec![0.5, 0.3]);
        let b = build_broadcast_state(&p).unwrap();
        assert_eq!(b.modes(), 4);
        let v1 = b.variance(user(1), Quadrature::X).unwrap();
        assert!((v1 - (1.0 + 0.3 * 3.0)).abs() < 1e-13);
        assert!(b.von_neumann_entropy().unwrap() > 1e-3);
    }

    #[test]
    fn detector_stage_mode_count_and_order() {
        let p = NetworkParams::symmetric(3, 1.0, 0.9, 0.5, 0.01, 0.7, 0.05).unwrap();
        let g = assemble(&p).unwrap();
        assert_eq!(g.modes(), 2 + 6 * 3);
        assert_eq!(&g.labels()[2..8], &canonical_user_modes(0));
        assert!(g.is_bona_fide().unwrap());
    }

    #[test]
    fn detector_stage_rejects_mismatched_lengths() {
        let p = NetworkParams::symmetric(3, 1.0, 0.9, 0.5, 0.01, 0.7, 0.05).unwrap();
        let b = build_broadcast_state(&p).unwrap();
        let mut d = p.detectors.clone();
        d.efficiency.pop();
        d.electronic_noise.pop();
        assert!(matches!(
            attach_trusted_detectors(&b, &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
