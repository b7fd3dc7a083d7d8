//! Closed-form entries of the broadcast and detected covariance matrices.
//!
//! These are written directly from the channel parameters and serve as the
//! independent route against which the beamsplitter-cascade assembly is
//! checked. Sign conventions follow the assembly: users' branches carry
//! alternating signs `s_l = +, −, +, …`, so Alice–user correlations are
//! `s_l·√(η_l(V²−1)/2)·diag(1, −1)` and user–user correlations carry
//! `s_i·s_j`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{invalid, Result};
use crate::gaussian::{CovarianceMatrix, ModeLabel};

use super::NetworkParams;

fn pauli_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

fn put(m: &mut DMatrix<f64>, i: usize, j: usize, b: &Matrix2<f64>) {
    for r in 0..2 {
        for c in 0..2 {
            m[(2 * i + r, 2 * j + c)] = b[(r, c)];
            m[(2 * j + c, 2 * i + r)] = b[(r, c)];
        }
    }
}

/// Covariance between the drop-link outputs of users `i ≠ j` (same quadrature).
fn branch_cross(params: &NetworkParams, i: usize, j: usize) -> f64 {
    let v = params.source.variance();
    let shared = (params.split_fraction(i)
        * params.split_fraction(j)
        * params.link.branch_transmittance[i]
        * params.link.branch_transmittance[j])
        .sqrt();
    params.branch_sign(i)
        * params.branch_sign(j)
        * shared
        * (params.link.feeder_transmittance * (v - 1.0) + params.link.feeder_excess_noise)
}

/// `γ_AB'` written entry by entry, modes `[A^x, A^p, B_1 … B_N]`.
pub fn broadcast_state(params: &NetworkParams) -> Result<CovarianceMatrix> {
    params.validate()?;
    let n = params.users();
    let v = params.source.variance();
    let mut m = DMatrix::zeros(2 * (n + 2), 2 * (n + 2));
    let id = Matrix2::identity();
    put(&mut m, 0, 0, &(id * 0.5 * (v + 1.0)));
    put(&mut m, 1, 1, &(id * 0.5 * (v + 1.0)));
    put(&mut m, 0, 1, &(id * 0.5 * (v - 1.0)));
    for l in 0..n {
        let eta = params.total_transmittance(l);
        let ab = params.branch_sign(l) * (0.5 * eta * (v * v - 1.0)).sqrt();
        put(&mut m, 0, 2 + l, &(pauli_z() * ab));
        put(&mut m, 1, 2 + l, &(pauli_z() * ab));
        let diag = 1.0 + (v - 1.0) * eta + params.total_excess_noise(l);
        put(&mut m, 2 + l, 2 + l, &(id * diag));
        for k in (l + 1)..n {
            put(&mut m, 2 + l, 2 + k, &(id * branch_cross(params, l, k)));
        }
    }
    let mut labels = vec![ModeLabel::AliceX, ModeLabel::AliceP];
    labels.extend((0..n).map(|l| ModeLabel::User {
        user: l,
        arm: crate::gaussian::Arm::None,
    }));
    CovarianceMatrix::unchecked(m, labels)
}

/// The 6×6 covariance of one detected arm and its noise purification,
/// modes `(B^x, D^x, F^x)`; the p arm has the same block.
pub fn detector_block(params: &NetworkParams, l: usize) -> Result<DMatrix<f64>> {
    params.check_user(l)?;
    let v = params.source.variance();
    let tau = params.efficiency(l);
    let nu = params.electronic_noise(l);
    let eta = params.total_transmittance(l);
    let eps = params.total_excess_noise(l);
    let vd = params.purifier_variance(l);
    let signal = eps + (v - 1.0) * eta;

    let vb = params.detected_variance(l);
    let bd = tau * (2.0 * nu - (1.0 - tau) * signal) / (2.0 * (tau * (1.0 - tau)).sqrt());
    let bf = ((nu * nu + 2.0 * nu * (1.0 - tau)) / (1.0 - tau)).sqrt();
    let dd = 0.5 * (1.0 - tau) * (2.0 + signal) + tau * vd;
    let df = (tau * nu * (nu + 2.0 * (1.0 - tau)) / ((1.0 - tau) * (1.0 - tau))).sqrt();

    let id = Matrix2::identity();
    let mut m = DMatrix::zeros(6, 6);
    put(&mut m, 0, 0, &(id * vb));
    put(&mut m, 0, 1, &(id * bd));
    put(&mut m, 0, 2, &(pauli_z() * bf));
    put(&mut m, 1, 1, &(id * dd));
    put(&mut m, 1, 2, &(pauli_z() * df));
    put(&mut m, 2, 2, &(id * vd));
    Ok(m)
}

/// `C^x_{i,j}`: covariance between the x-arm records of users `i` and `j`,
/// `s_i s_j·(√(τ_i τ_j)/2)·(V−1)·√(η_i η_j)` when the feeder is noiseless.
///
/// For neighbouring users (`s_i s_j = −1`) this is
/// `−(τ/2)(V−1)√(η_i η_j)`.
pub fn cross_user_correlation(params: &NetworkParams, i: usize, j: usize) -> Result<f64> {
    params.check_user(i)?;
    params.check_user(j)?;
    if i == j {
        return Err(invalid("j", "cross-user correlation needs two distinct users"));
    }
    Ok(0.5 * (params.efficiency(i) * params.efficiency(j)).sqrt() * branch_cross(params, i, j))
}
