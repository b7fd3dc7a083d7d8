//! Zero-mean Gaussian states described by labeled covariance matrices.
//!
//! All variances are in shot-noise units (SNU): the vacuum quadrature
//! variance is 1. Quadratures are interleaved per mode, `(x_1, p_1, x_2, p_2,
//! ...)`, and the symplectic form is `Ω = ⊕ [[0, 1], [-1, 0]]`.
//!
//! Numerical policy near pure states (engineering choices, not physics):
//! symplectic eigenvalues within [`CLAMP_TOLERANCE`] below 1 are clamped to 1,
//! and homodyne conditioning uses a pseudo-inverse with relative cutoff
//! [`PINV_CUTOFF`].

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to accept a matrix as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Symplectic eigenvalues in `[1 - CLAMP_TOLERANCE, 1)` are reported as 1.
pub const CLAMP_TOLERANCE: f64 = 1e-9;
/// Singular-value cutoff (relative to the largest) for homodyne pseudo-inverses.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Allowed relative mismatch between the two copies of each `ν²` in the
/// doubled spectrum used for the Williamson decomposition.
const PAIRING_TOLERANCE: f64 = 1e-6;

/// A field quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Which heterodyne arm a receiver-side mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    X,
    P,
    None,
}

/// Identity of one optical mode inside a multimode state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Alice's purification arm that carries the x-quadrature record.
    AliceX,
    /// Alice's purification arm that carries the p-quadrature record.
    AliceP,
    /// The broadcast signal before splitting.
    Signal,
    /// Signal mode held by user `user` (before the heterodyne split when `arm` is `None`).
    User { user: usize, arm: Arm },
    /// Detector-side output of the trusted-noise purification for one arm.
    Detector { user: usize, arm: Arm },
    /// Idler of the trusted-noise purification for one arm.
    Purifier { user: usize, arm: Arm },
    /// A mode held by the eavesdropper.
    Eve(usize),
    /// Scratch mode (vacuum ports and similar).
    Ancilla(usize),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn arm(a: &Arm) -> &'static str {
            match a {
                Arm::X => "^x",
                Arm::P => "^p",
                Arm::None => "",
            }
        }
        match self {
            ModeLabel::AliceX => write!(f, "A^x"),
            ModeLabel::AliceP => write!(f, "A^p"),
            ModeLabel::Signal => write!(f, "B"),
            ModeLabel::User { user, arm: a } => write!(f, "B{}{}", user + 1, arm(a)),
            ModeLabel::Detector { user, arm: a } => write!(f, "D{}{}", user + 1, arm(a)),
            ModeLabel::Purifier { user, arm: a } => write!(f, "F{}{}", user + 1, arm(a)),
            ModeLabel::Eve(k) => write!(f, "E{k}"),
            ModeLabel::Ancilla(k) => write!(f, "anc{k}"),
        }
    }
}

/// Covariance matrix of a zero-mean Gaussian state over labeled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    labels: Vec<ModeLabel>,
}

impl CovarianceMatrix {
    /// Validates and wraps a covariance matrix.
    ///
    /// Checks dimensions, label uniqueness, finiteness, symmetry and the bona
    /// fide condition.
    pub fn new(matrix: DMatrix<f64>, labels: Vec<ModeLabel>) -> Result<Self> {
        let state = Self::unchecked(matrix, labels)?;
        let nu_min = state
            .symplectic_eigenvalues()?
            .last()
            .copied()
            .unwrap_or(1.0);
        if nu_min < 1.0 {
            return Err(Error::NotBonaFide(nu_min));
        }
        Ok(state)
    }

    /// Like [`CovarianceMatrix::new`] but skips the bona fide check.
    pub fn unchecked(matrix: DMatrix<f64>, labels: Vec<ModeLabel>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != 2 * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * labels.len(),
                found: matrix.nrows(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(*l) {
                return Err(Error::DuplicateMode(*l));
            }
        }
        check_entries(&matrix)?;
        Ok(Self { matrix, labels })
    }

    fn from_parts(matrix: DMatrix<f64>, labels: Vec<ModeLabel>) -> Self {
        debug_assert_eq!(matrix.nrows(), 2 * labels.len());
        Self { matrix, labels }
    }

    pub fn vacuum(label: ModeLabel) -> Self {
        Self::from_parts(DMatrix::identity(2, 2), vec![label])
    }

    /// Single-mode thermal state with quadrature variance `variance`.
    pub fn thermal(label: ModeLabel, variance: f64) -> Result<Self> {
        if !(variance >= 1.0) || !variance.is_finite() {
            return Err(Error::Domain(format!(
                "thermal variance must be finite and >= 1, got {variance}"
            )));
        }
        Ok(Self::from_parts(
            DMatrix::identity(2, 2) * variance,
            vec![label],
        ))
    }

    /// Two-mode squeezed vacuum with local variance `variance`.
    ///
    /// Diagonal blocks are `V·I`, off-diagonal blocks `√(V²−1)·diag(1, −1)`.
    pub fn tmsv(variance: f64, first: ModeLabel, second: ModeLabel) -> Result<Self> {
        if !(variance >= 1.0) || !variance.is_finite() {
            return Err(Error::Domain(format!(
                "TMSV variance must be finite and >= 1, got {variance}"
            )));
        }
        if first == second {
            return Err(Error::DuplicateMode(first));
        }
        let c = (variance * variance - 1.0).sqrt();
        let mut m = DMatrix::identity(4, 4) * variance;
        m[(0, 2)] = c;
        m[(2, 0)] = c;
        m[(1, 3)] = -c;
        m[(3, 1)] = -c;
        Ok(Self::from_parts(m, vec![first, second]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn modes(&self) -> usize {
        self.labels.len()
    }

    pub fn contains(&self, label: ModeLabel) -> bool {
        self.labels.contains(&label)
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .ok_or(Error::UnknownMode(label))
    }

    /// The 2×2 block between modes `a` and `b`.
    pub fn block(&self, a: ModeLabel, b: ModeLabel) -> Result<Matrix2<f64>> {
        let (i, j) = (2 * self.index_of(a)?, 2 * self.index_of(b)?);
        Ok(Matrix2::new(
            self.matrix[(i, j)],
            self.matrix[(i, j + 1)],
            self.matrix[(i + 1, j)],
            self.matrix[(i + 1, j + 1)],
        ))
    }

    pub fn covariance(
        &self,
        a: ModeLabel,
        qa: Quadrature,
        b: ModeLabel,
        qb: Quadrature,
    ) -> Result<f64> {
        let i = 2 * self.index_of(a)? + qa.offset();
        let j = 2 * self.index_of(b)? + qb.offset();
        Ok(self.matrix[(i, j)])
    }

    pub fn variance(&self, mode: ModeLabel, q: Quadrature) -> Result<f64> {
        self.covariance(mode, q, mode, q)
    }

    /// Direct sum of two states with disjoint labels; `other`'s modes are appended.
    pub fn tensor(&self, other: &CovarianceMatrix) -> Result<Self> {
        for l in &other.labels {
            if self.labels.contains(l) {
                return Err(Error::DuplicateMode(*l));
            }
        }
        let (n, m) = (self.matrix.nrows(), other.matrix.nrows());
        let mut out = DMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        out.view_mut((n, n), (m, m)).copy_from(&other.matrix);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self::from_parts(out, labels))
    }

    /// Reduced state on `keep` (Gaussian partial trace). Modes keep the order
    /// they have in `self`.
    pub fn restrict(&self, keep: &[ModeLabel]) -> Result<Self> {
        let mut idx = Vec::with_capacity(keep.len());
        for l in keep {
            idx.push(self.index_of(*l)?);
        }
        let mut seen = HashSet::new();
        for l in keep {
            if !seen.insert(*l) {
                return Err(Error::DuplicateMode(*l));
            }
        }
        idx.sort_unstable();
        Ok(self.select(&idx))
    }

    /// Same state with modes permuted into exactly the order of `order`,
    /// which must list every mode once.
    pub fn reorder(&self, order: &[ModeLabel]) -> Result<Self> {
        if order.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found: order.len(),
            });
        }
        let mut seen = HashSet::new();
        let mut idx = Vec::with_capacity(order.len());
        for l in order {
            if !seen.insert(*l) {
                return Err(Error::DuplicateMode(*l));
            }
            idx.push(self.index_of(*l)?);
        }
        Ok(self.select(&idx))
    }

    /// Drops the listed modes.
    pub fn trace_out(&self, drop: &[ModeLabel]) -> Result<Self> {
        for l in drop {
            self.index_of(*l)?;
        }
        let idx: Vec<usize> = (0..self.modes())
            .filter(|&i| !drop.contains(&self.labels[i]))
            .collect();
        Ok(self.select(&idx))
    }

    pub fn relabel(&self, from: ModeLabel, to: ModeLabel) -> Result<Self> {
        let i = self.index_of(from)?;
        if from != to && self.contains(to) {
            return Err(Error::DuplicateMode(to));
        }
        let mut out = self.clone();
        out.labels[i] = to;
        Ok(out)
    }

    fn select(&self, mode_idx: &[usize]) -> Self {
        let rows: Vec<usize> = mode_idx.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = rows.len();
        let out = DMatrix::from_fn(k, k, |r, c| self.matrix[(rows[r], rows[c])]);
        let labels = mode_idx.iter().map(|&m| self.labels[m]).collect();
        Self::from_parts(out, labels)
    }

    /// Applies a symplectic `s` (2k×2k) acting on the listed modes: `γ → S γ Sᵀ`.
    pub fn apply_local_symplectic(&self, modes: &[ModeLabel], s: &DMatrix<f64>) -> Result<Self> {
        let mut rows = Vec::with_capacity(2 * modes.len());
        for m in modes {
            let i = self.index_of(*m)?;
            rows.push(2 * i);
            rows.push(2 * i + 1);
        }
        if s.nrows() != rows.len() || s.ncols() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: s.nrows(),
            });
        }
        let n = self.matrix.nrows();
        let mut out = self.matrix.clone();
        // rows: out[rows, :] = S * γ[rows, :]
        let sub_rows = DMatrix::from_fn(rows.len(), n, |r, c| self.matrix[(rows[r], c)]);
        let new_rows = s * sub_rows;
        for (r, &ri) in rows.iter().enumerate() {
            for c in 0..n {
                out[(ri, c)] = new_rows[(r, c)];
            }
        }
        // columns: out[:, rows] = out[:, rows] * Sᵀ
        let sub_cols = DMatrix::from_fn(n, rows.len(), |r, c| out[(r, rows[c])]);
        let new_cols = sub_cols * s.transpose();
        for (c, &ci) in rows.iter().enumerate() {
            for r in 0..n {
                out[(r, ci)] = new_cols[(r, c)];
            }
        }
        symmetrize(&mut out);
        Ok(Self::from_parts(out, self.labels.clone()))
    }

    /// Beamsplitter of transmittance `t` between modes `a` and `b`:
    /// `a' = √t·a + √(1−t)·b`, `b' = −√(1−t)·a + √t·b` on both quadratures.
    pub fn beamsplitter(&self, a: ModeLabel, b: ModeLabel, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!(
                "beamsplitter transmittance must lie in [0, 1], got {t}"
            )));
        }
        if a == b {
            return Err(Error::DuplicateMode(a));
        }
        let (ct, rt) = (t.sqrt(), (1.0 - t).sqrt());
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            ct, 0.0, rt, 0.0,
            0.0, ct, 0.0, rt,
            -rt, 0.0, ct, 0.0,
            0.0, -rt, 0.0, ct,
        ]);
        self.apply_local_symplectic(&[a, b], &s)
    }

    /// Phase rotation by π on one mode (both quadratures change sign).
    pub fn phase_flip(&self, a: ModeLabel) -> Result<Self> {
        self.apply_local_symplectic(&[a], &(-DMatrix::identity(2, 2)))
    }

    /// Phase-insensitive two-mode squeezer of gain `gain ≥ 1` (amplifier on `a`, idler `b`).
    pub fn two_mode_squeezer(&self, a: ModeLabel, b: ModeLabel, gain: f64) -> Result<Self> {
        if !(gain >= 1.0) || !gain.is_finite() {
            return Err(Error::Domain(format!("amplifier gain must be >= 1, got {gain}")));
        }
        if a == b {
            return Err(Error::DuplicateMode(a));
        }
        let (g, h) = (gain.sqrt(), (gain - 1.0).sqrt());
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            g, 0.0, h, 0.0,
            0.0, g, 0.0, -h,
            h, 0.0, g, 0.0,
            0.0, -h, 0.0, g,
        ]);
        self.apply_local_symplectic(&[a, b], &s)
    }

    /// Phase-insensitive thermal-loss channel on `mode`: transmittance
    /// `transmittance` and `excess_noise` SNU added at the output.
    ///
    /// The environment is dilated explicitly and traced out afterwards: a
    /// vacuum port for pure loss, one arm of a TMSV of variance
    /// `1 + ε/(1−T)` for noisy loss, and a loss-plus-amplifier pair when
    /// `T = 1` with nonzero noise.
    pub fn thermal_loss_channel(
        &self,
        mode: ModeLabel,
        transmittance: f64,
        excess_noise: f64,
    ) -> Result<Self> {
        self.index_of(mode)?;
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::Domain(format!(
                "channel transmittance must lie in [0, 1], got {transmittance}"
            )));
        }
        if !(excess_noise >= 0.0) || !excess_noise.is_finite() {
            return Err(Error::Domain(format!(
                "excess noise must be finite and >= 0, got {excess_noise}"
            )));
        }
        let e1 = self.fresh_ancilla();
        let e2 = ModeLabel::Ancilla(match e1 {
            ModeLabel::Ancilla(k) => k + 1,
            _ => unreachable!(),
        });
        if excess_noise == 0.0 {
            return self
                .tensor(&Self::vacuum(e1))?
                .beamsplitter(mode, e1, transmittance)?
                .trace_out(&[e1]);
        }
        if transmittance < 1.0 {
            let w = 1.0 + excess_noise / (1.0 - transmittance);
            return self
                .tensor(&Self::tmsv(w, e1, e2)?)?
                .beamsplitter(mode, e1, transmittance)?
                .trace_out(&[e1, e2]);
        }
        let gain = 1.0 + 0.5 * excess_noise;
        self.tensor(&Self::vacuum(e1))?
            .tensor(&Self::vacuum(e2))?
            .beamsplitter(mode, e1, 1.0 / gain)?
            .two_mode_squeezer(mode, e2, gain)?
            .trace_out(&[e1, e2])
    }

    /// An `Ancilla` label not used in this state.
    pub fn fresh_ancilla(&self) -> ModeLabel {
        let next = self
            .labels
            .iter()
            .filter_map(|l| match l {
                ModeLabel::Ancilla(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        ModeLabel::Ancilla(next)
    }

    /// Symplectic spectrum in descending order, one value per mode.
    ///
    /// Computed as the square roots of the (doubly degenerate) eigenvalues of
    /// `−(γ^{1/2} Ω γ^{1/2})²`, which needs only symmetric decompositions.
    /// Falls back to the complex spectrum of `Ωγ` when `γ` is not positive
    /// definite (such a matrix is never bona fide).
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        check_entries(&self.matrix)?;
        let n = self.modes();
        if n == 0 {
            return Ok(Vec::new());
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        let min_eig = eig.eigenvalues.min();
        let mut nus = if min_eig > 0.0 {
            let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
            let root = &eig.eigenvectors * sqrt_d * eig.eigenvectors.transpose();
            let m = &root * omega(n) * &root;
            let mut mm = m.transpose() * &m;
            symmetrize(&mut mm);
            let mut sq: Vec<f64> = SymmetricEigen::new(mm).eigenvalues.iter().copied().collect();
            sq.sort_by(|a, b| b.total_cmp(a));
            let mut out = Vec::with_capacity(n);
            for pair in sq.chunks(2) {
                let (a, b) = (pair[0], pair[1]);
                if (a - b).abs() > PAIRING_TOLERANCE * a.abs().max(1.0) {
                    return Err(Error::Numerical(format!(
                        "symplectic spectrum pairing failed ({a} vs {b})"
                    )));
                }
                out.push((0.5 * (a + b)).max(0.0).sqrt());
            }
            out
        } else {
            let w = omega(n) * &self.matrix;
            let mut abs: Vec<f64> = w.complex_eigenvalues().iter().map(|z| z.norm()).collect();
            abs.sort_by(|a, b| b.total_cmp(a));
            abs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
        };
        for v in nus.iter_mut() {
            if *v < 1.0 && *v >= 1.0 - CLAMP_TOLERANCE {
                *v = 1.0;
            }
        }
        nus.sort_by(|a, b| b.total_cmp(a));
        Ok(nus)
    }

    pub fn is_bona_fide(&self) -> Result<bool> {
        Ok(self
            .symplectic_eigenvalues()?
            .iter()
            .all(|&v| v >= 1.0))
    }

    /// Von Neumann entropy in bits.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let nus = self.symplectic_eigenvalues()?;
        if let Some(&min) = nus.last() {
            if min < 1.0 {
                return Err(Error::NotBonaFide(min));
            }
        }
        Ok(nus.into_iter().map(entropy_g).sum())
    }

    /// State of the remaining modes after homodyning `quadrature` of `mode`.
    ///
    /// `γ' = γ_rest − σ (Π γ_m Π)^+ σᵀ`; the result does not depend on the outcome.
    pub fn condition_on_homodyne(&self, mode: ModeLabel, quadrature: Quadrature) -> Result<Self> {
        let proj = match quadrature {
            Quadrature::X => Matrix2::new(1.0, 0.0, 0.0, 0.0),
            Quadrature::P => Matrix2::new(0.0, 0.0, 0.0, 1.0),
        };
        let block = self.block(mode, mode)?;
        let projected = proj * block * proj;
        let svd = projected.svd(true, true);
        let cutoff = PINV_CUTOFF * svd.singular_values.max();
        let pinv = if svd.singular_values.max() > 0.0 {
            svd.pseudo_inverse(cutoff).map_err(|e| Error::Numerical(e.to_string()))?
        } else {
            Matrix2::zeros()
        };
        self.schur_update(mode, &pinv)
    }

    /// State of the remaining modes after heterodyning `mode`:
    /// `γ' = γ_rest − σ (γ_m + I)^{-1} σᵀ`.
    pub fn condition_on_heterodyne(&self, mode: ModeLabel) -> Result<Self> {
        let block = self.block(mode, mode)? + Matrix2::identity();
        let inv = block
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular heterodyne block".into()))?;
        self.schur_update(mode, &inv)
    }

    fn schur_update(&self, mode: ModeLabel, kernel: &Matrix2<f64>) -> Result<Self> {
        let m = self.index_of(mode)?;
        let keep: Vec<usize> = (0..self.modes()).filter(|&i| i != m).collect();
        let rest = self.select(&keep);
        let rows: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let sigma = DMatrix::from_fn(rows.len(), 2, |r, c| self.matrix[(rows[r], 2 * m + c)]);
        let k = DMatrix::from_column_slice(2, 2, kernel.as_slice());
        let mut out = rest.matrix - &sigma * k * sigma.transpose();
        symmetrize(&mut out);
        Ok(Self::from_parts(out, rest.labels))
    }
}

/// Gaussian entropy function `g(ν)` in bits; `g(1) = 0`.
pub fn entropy_g(nu: f64) -> f64 {
    if nu <= 1.0 {
        return 0.0;
    }
    let a = 0.5 * (nu + 1.0);
    let b = 0.5 * (nu - 1.0);
    a * a.log2() - b * b.log2()
}

/// Symplectic form for `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn check_entries(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs() / scale);
        }
    }
    if worst > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ModeLabel = ModeLabel::Ancilla(0);
    const B: ModeLabel = ModeLabel::Ancilla(1);
    const C: ModeLabel = ModeLabel::Ancilla(2);

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tmsv_vacuum_limit_is_identity() {
        let s = CovarianceMatrix::tmsv(1.0, A, B).unwrap();
        assert_eq!(s.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn tmsv_off_diagonal_magnitude() {
        let s = CovarianceMatrix::tmsv(2.0, A, B).unwrap();
        assert!(close(s.matrix()[(0, 2)], 3f64.sqrt(), 1e-15));
        assert!(close(s.matrix()[(1, 3)], -(3f64.sqrt()), 1e-15));
    }

    #[test]
    fn tmsv_rejects_sub_vacuum_variance() {
        assert!(matches!(
            CovarianceMatrix::tmsv(0.5, A, B),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tmsv_is_pure() {
        for v in [1.0, 1.5, 5.0, 101.0] {
            let s = CovarianceMatrix::tmsv(v, A, B).unwrap();
            for nu in s.symplectic_eigenvalues().unwrap() {
                assert!(close(nu, 1.0, 1e-9), "V={v}: {nu}");
            }
            assert!(s.von_neumann_entropy().unwrap() < 1e-8);
        }
    }

    #[test]
    fn thermal_spectrum_and_entropy() {
        let s = CovarianceMatrix::thermal(A, 3.0).unwrap();
        assert!(close(s.symplectic_eigenvalues().unwrap()[0], 3.0, 1e-12));
        assert!(close(s.von_neumann_entropy().unwrap(), 2.0, 1e-12));
        assert_eq!(CovarianceMatrix::vacuum(A).von_neumann_entropy().unwrap(), 0.0);
    }

    #[test]
    fn beamsplitter_identity_and_swap() {
        let s = CovarianceMatrix::thermal(A, 4.0)
            .unwrap()
            .tensor(&CovarianceMatrix::vacuum(B))
            .unwrap();
        assert_eq!(s.beamsplitter(A, B, 1.0).unwrap(), s);
        let swapped = s.beamsplitter(A, B, 0.0).unwrap();
        assert!(close(swapped.variance(A, Quadrature::X).unwrap(), 1.0, 1e-15));
        assert!(close(swapped.variance(B, Quadrature::P).unwrap(), 4.0, 1e-15));
    }

    #[test]
    fn balanced_beamsplitter_mixes_thermal_with_vacuum() {
        let v = 5.0;
        let s = CovarianceMatrix::vacuum(A)
            .tensor(&CovarianceMatrix::thermal(B, v).unwrap())
            .unwrap()
            .beamsplitter(A, B, 0.5)
            .unwrap();
        for m in [A, B] {
            for q in [Quadrature::X, Quadrature::P] {
                assert!(close(s.variance(m, q).unwrap(), 0.5 * (1.0 + v), 1e-14));
            }
        }
    }

    #[test]
    fn beamsplitter_rejects_bad_input() {
        let s = CovarianceMatrix::vacuum(A)
            .tensor(&CovarianceMatrix::vacuum(B))
            .unwrap();
        assert!(matches!(s.beamsplitter(A, B, 1.5), Err(Error::Domain(_))));
        assert!(matches!(s.beamsplitter(A, C, 0.5), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn tensor_and_restrict() {
        let t = CovarianceMatrix::tmsv(3.0, A, B).unwrap();
        let full = t.tensor(&CovarianceMatrix::vacuum(C)).unwrap();
        assert_eq!(full.modes(), 3);
        for i in 0..4 {
            assert_eq!(full.matrix()[(i, 4)], 0.0);
            assert_eq!(full.matrix()[(i, 5)], 0.0);
        }
        assert_eq!(full.restrict(&[A, B]).unwrap(), t);
        assert_eq!(full.restrict(full.labels()).unwrap(), full);
        assert!(matches!(t.tensor(&t), Err(Error::DuplicateMode(_))));
        assert!(matches!(t.restrict(&[C]), Err(Error::UnknownMode(_))));
        let marginal = t.restrict(&[A]).unwrap();
        assert_eq!(marginal.matrix(), &(DMatrix::identity(2, 2) * 3.0));
    }

    #[test]
    fn homodyne_on_tmsv() {
        let v = 3.0;
        let s = CovarianceMatrix::tmsv(v, A, B)
            .unwrap()
            .condition_on_homodyne(B, Quadrature::X)
            .unwrap();
        assert_eq!(s.labels(), &[A]);
        assert!(close(s.variance(A, Quadrature::X).unwrap(), 1.0 / v, 1e-14));
        assert!(close(s.variance(A, Quadrature::P).unwrap(), v, 1e-14));
    }

    #[test]
    fn heterodyne_on_tmsv() {
        // V − (V²−1)/(V+1) = 1 for every V: heterodyning one arm of a TMSV
        // leaves the other arm in a coherent state.
        for v in [2.0, 7.0] {
            let s = CovarianceMatrix::tmsv(v, A, B)
                .unwrap()
                .condition_on_heterodyne(B)
                .unwrap();
            assert!(close(s.variance(A, Quadrature::X).unwrap(), 1.0, 1e-13));
            assert!(close(s.variance(A, Quadrature::P).unwrap(), 1.0, 1e-13));
        }
    }

    #[test]
    fn conditioning_product_state_leaves_rest() {
        let t = CovarianceMatrix::tmsv(3.0, A, B).unwrap();
        let full = t.tensor(&CovarianceMatrix::thermal(C, 2.0).unwrap()).unwrap();
        assert_eq!(full.condition_on_homodyne(C, Quadrature::P).unwrap(), t);
        assert_eq!(full.condition_on_heterodyne(C).unwrap(), t);
    }

    #[test]
    fn new_rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            CovarianceMatrix::new(asym, vec![A]),
            Err(Error::NotSymmetric(_))
        ));
        let sub = DMatrix::identity(2, 2) * 0.5;
        assert!(matches!(
            CovarianceMatrix::new(sub, vec![A]),
            Err(Error::NotBonaFide(_))
        ));
        let nan = DMatrix::from_element(2, 2, f64::NAN);
        assert!(matches!(
            CovarianceMatrix::new(nan, vec![A]),
            Err(Error::NonFinite)
        ));
        assert!(matches!(
            CovarianceMatrix::new(DMatrix::identity(4, 4), vec![A, A]),
            Err(Error::DuplicateMode(_))
        ));
    }

    #[test]
    fn squeezed_vacuum_is_pure_with_unit_spectrum() {
        let s = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 4.0]);
        let st = CovarianceMatrix::new(s, vec![A]).unwrap();
        assert!(close(st.symplectic_eigenvalues().unwrap()[0], 1.0, 1e-12));
    }

    #[test]
    fn entropy_g_values() {
        assert_eq!(entropy_g(1.0), 0.0);
        assert!(close(entropy_g(3.0), 2.0, 1e-14));
        assert!(entropy_g(1.0 + 1e-12) < 1e-9);
    }
}
