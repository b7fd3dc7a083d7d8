//! Prepare-and-measure Monte Carlo, channel parameter estimation and
//! correlation analysis of the users' records.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::keyrate::{KeyRateEngine, TrustPartition};
use crate::network::NetworkParams;

/// Default CI width in standard deviations.
pub const DEFAULT_Z: f64 = 6.5;
/// Failure probability quoted with [`DEFAULT_Z`].
pub const DEFAULT_DELTA: f64 = 1e-10;
/// Smallest sample accepted by [`estimate_parameters`].
pub const MIN_ESTIMATION_SAMPLES: usize = 1000;

/// Alice's symbols and every user's heterodyne outcomes, SNU.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub alice_x: Vec<f64>,
    pub alice_p: Vec<f64>,
    /// `meas_x[l][k]`.
    pub meas_x: Vec<Vec<f64>>,
    pub meas_p: Vec<Vec<f64>>,
    pub seed: u64,
    pub ground_truth: NetworkParams,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.alice_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_x.is_empty()
    }

    pub fn users(&self) -> usize {
        self.meas_x.len()
    }

    /// Both quadratures of Alice's symbols, x then p.
    pub fn alice_pooled(&self) -> Vec<f64> {
        [self.alice_x.as_slice(), self.alice_p.as_slice()].concat()
    }

    /// Both quadratures of user `l`'s record, x then p.
    pub fn user_pooled(&self, l: usize) -> Vec<f64> {
        [self.meas_x[l].as_slice(), self.meas_p[l].as_slice()].concat()
    }

    /// CSV with columns `alice_x, alice_p, meas_x_1, meas_p_1, …`, one row per
    /// symbol, values in SNU.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["alice_x_snu".to_string(), "alice_p_snu".to_string()];
        for l in 1..=self.users() {
            header.push(format!("meas_x_{l}_snu"));
            header.push(format!("meas_p_{l}_snu"));
        }
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            write!(out, "{},{}", self.alice_x[k], self.alice_p[k])?;
            for l in 0..self.users() {
                write!(out, ",{},{}", self.meas_x[l][k], self.meas_p[l][k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normals(rng: &mut ChaCha20Rng, m: usize, sd: f64) -> Vec<f64> {
    (0..m)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

/// Simulates `m` symbols through the network.
///
/// Alice draws both quadratures from `N(0, V_mod)` on stream 0; feeder noise
/// is drawn on stream `N+1` and user `l`'s own noise on stream `l+1`, so
/// users can be generated in parallel and the batch depends only on `seed`.
/// User `l` records `s_l √(η_l τ_l/2)·a + feeder term + N(0, 1 + ν_l + τ_l ε_B[l]/2)`.
pub fn simulate_channel(params: &NetworkParams, m: usize, seed: u64) -> Result<SampleBatch> {
    params.validate()?;
    if m == 0 {
        return Err(invalid("m", "need at least one symbol"));
    }
    let n = params.users();
    let mut rng = stream(seed, 0);
    let sd = params.source.modulation_variance.sqrt();
    let alice_x = normals(&mut rng, m, sd);
    let alice_p = normals(&mut rng, m, sd);
    let mut rng = stream(seed, n as u64 + 1);
    let feeder_sd = params.link.feeder_excess_noise.sqrt();
    let feeder_x = normals(&mut rng, m, feeder_sd);
    let feeder_p = normals(&mut rng, m, feeder_sd);

    let users: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|l| {
            let tau = params.efficiency(l);
            let sign = params.branch_sign(l);
            let gain = sign * (0.5 * params.total_transmittance(l) * tau).sqrt();
            let feeder_gain = sign
                * (0.5 * params.split_fraction(l) * params.link.branch_transmittance[l] * tau).sqrt();
            let own = 1.0
                + params.electronic_noise(l)
                + 0.5 * tau * params.link.branch_excess_noise[l];
            let mut rng = stream(seed, l as u64 + 1);
            let mut arm = |alice: &[f64], feeder: &[f64]| {
                let noise = normals(&mut rng, m, own.sqrt());
                (0..m)
                    .map(|k| gain * alice[k] + feeder_gain * feeder[k] + noise[k])
                    .collect::<Vec<f64>>()
            };
            let x = arm(&alice_x, &feeder_x);
            let p = arm(&alice_p, &feeder_p);
            (x, p)
        })
        .collect();
    let (meas_x, meas_p) = users.into_iter().unzip();
    Ok(SampleBatch {
        alice_x,
        alice_p,
        meas_x,
        meas_p,
        seed,
        ground_truth: params.clone(),
    })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample covariance with divisor `M`.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    covariance(x, x)
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < min {
        return Err(invalid("samples", format!("need at least {min}, got {}", x.len())));
    }
    Ok(())
}

/// A point estimate with a Gaussian confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
    pub delta: f64,
}

impl EstimateWithCI {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Trusted detector calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub efficiency: f64,
    /// SNU.
    pub electronic_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterEstimates {
    pub transmittance: EstimateWithCI,
    /// SNU at the channel output.
    pub excess_noise: EstimateWithCI,
    /// `ĝ = Cov(meas, alice)/Var(alice)`.
    pub gain: f64,
    /// `Var(meas) − ĝ²·Var(alice)`.
    pub residual_variance: f64,
    pub samples: usize,
}

/// Method-of-moments estimates of `η` and `ε` from one arm's record.
///
/// `η̂ = 2ĝ²/τ` and `ε̂ = 2(σ̂² − 1 − ν)/τ` with `σ̂²` the residual variance.
/// Standard errors: `√(σ̂²/(M·Var(a)))` for `ĝ` and `σ̂²√(2/M)` for `σ̂²`;
/// intervals are mapped through the same formulas.
pub fn estimate_parameters(
    alice: &[f64],
    meas: &[f64],
    calibration: Calibration,
    z: f64,
) -> Result<ParameterEstimates> {
    check_pair(alice, meas, MIN_ESTIMATION_SAMPLES)?;
    let tau = calibration.efficiency;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(invalid("efficiency", format!("must lie in (0, 1], got {tau}")));
    }
    if !(z > 0.0) {
        return Err(invalid("z", format!("must be positive, got {z}")));
    }
    let m = alice.len() as f64;
    let var_a = variance(alice);
    if !(var_a > 0.0) {
        return Err(Error::Domain("Alice's symbols have zero variance".into()));
    }
    let g = covariance(meas, alice) / var_a;
    let residual = variance(meas) - g * g * var_a;
    let se_g = (residual / (m * var_a)).sqrt();
    let se_res = residual * (2.0 / m).sqrt();

    let eta = |gain: f64| 2.0 * gain * gain / tau;
    let lo_g = (g.abs() - z * se_g).max(0.0);
    let hi_g = g.abs() + z * se_g;
    let eps = |res: f64| 2.0 * (res - 1.0 - calibration.electronic_noise) / tau;
    let delta = if z == DEFAULT_Z { DEFAULT_DELTA } else { f64::NAN };
    Ok(ParameterEstimates {
        transmittance: EstimateWithCI {
            point: eta(g),
            lower: eta(lo_g),
            upper: eta(hi_g),
            z,
            delta,
        },
        excess_noise: EstimateWithCI {
            point: eps(residual),
            lower: eps(residual - z * se_res),
            upper: eps(residual + z * se_res),
            z,
            delta,
        },
        gain: g,
        residual_variance: residual,
        samples: alice.len(),
    })
}

/// Estimates for user `l` from both quadratures of a batch, with the
/// detector calibration taken from the batch's ground truth.
pub fn estimate_user(batch: &SampleBatch, l: usize, z: f64) -> Result<ParameterEstimates> {
    batch.ground_truth.check_user(l)?;
    let calibration = Calibration {
        efficiency: batch.ground_truth.efficiency(l),
        electronic_noise: batch.ground_truth.electronic_noise(l),
    };
    estimate_parameters(&batch.alice_pooled(), &batch.user_pooled(l), calibration, z)
}

/// Noise inferred from a user's record, `ξ_k = meas_k − ĝ·alice_k`.
pub fn infer_noise(meas: &[f64], alice: &[f64]) -> Result<Vec<f64>> {
    check_pair(alice, meas, 2)?;
    let var_a = variance(alice);
    if !(var_a > 0.0) {
        return Err(Error::Domain("Alice's symbols have zero variance".into()));
    }
    let g = covariance(meas, alice) / var_a;
    Ok(meas.iter().zip(alice).map(|(b, a)| b - g * a).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInformation {
    /// Bits; infinite when saturated.
    pub bits: f64,
    pub correlation: f64,
    /// Set when `|ρ̂|` is 1 to machine precision.
    pub saturated: bool,
}

/// Gaussian estimate `−½ log2(1 − ρ̂²)`.
pub fn empirical_mi(x: &[f64], y: &[f64]) -> Result<MutualInformation> {
    check_pair(x, y, MIN_ESTIMATION_SAMPLES)?;
    let (vx, vy) = (variance(x), variance(y));
    if !(vx > 0.0 && vy > 0.0) {
        return Err(Error::Domain("degenerate variance".into()));
    }
    let rho = (covariance(x, y) / (vx * vy).sqrt()).clamp(-1.0, 1.0);
    let one_minus = 1.0 - rho * rho;
    if one_minus <= 4.0 * f64::EPSILON {
        return Ok(MutualInformation {
            bits: f64::INFINITY,
            correlation: rho,
            saturated: true,
        });
    }
    Ok(MutualInformation {
        bits: -0.5 * one_minus.log2(),
        correlation: rho,
        saturated: false,
    })
}

/// Key at the edges and centre of the confidence region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyInterval {
    /// Lowest transmittance with highest noise.
    pub low: f64,
    pub point: f64,
    /// Highest transmittance with lowest noise.
    pub high: f64,
}

fn key_at(
    params: &NetworkParams,
    l: usize,
    eta: f64,
    eps: f64,
    beta: f64,
    partition: &TrustPartition,
) -> Result<f64> {
    if eta <= 0.0 {
        return Ok(0.0);
    }
    let reach = params.link.feeder_transmittance * params.split_fraction(l);
    let floor = params.link.feeder_excess_noise * params.split_fraction(l);
    let eta = eta.min(reach);
    let eps = eps.max(floor * eta / reach);
    let p = params.with_user_channel(l, eta, eps)?;
    KeyRateEngine::new(p)?.key_rate(l, partition, beta)
}

/// Key of user `l` with its channel replaced by the estimated one.
/// Estimates outside the physical range are clipped to it.
pub fn worst_case_key(
    params: &NetworkParams,
    l: usize,
    estimates: &ParameterEstimates,
    beta: f64,
    partition: &TrustPartition,
) -> Result<KeyInterval> {
    let t = &estimates.transmittance;
    let e = &estimates.excess_noise;
    let corners = [(t.lower, e.upper), (t.point, e.point), (t.upper, e.lower)];
    let keys = corners
        .par_iter()
        .map(|&(eta, eps)| key_at(params, l, eta, eps, beta, partition))
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyInterval {
        low: keys[0],
        point: keys[1],
        high: keys[2],
    })
}
