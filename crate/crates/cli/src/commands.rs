use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cvqpon::estimation::{
    empirical_mi, estimate_user, infer_noise, simulate_channel, worst_case_key, KeyInterval, ParameterEstimates,
};
use cvqpon::keyrate::{KeyRateEngine, KeyRateReport, TrustPartition};
use cvqpon::network::{NetworkParams, NoiseReference};
use cvqpon::protocols::{
    plob_total, sweep, time_sharing_total, untrusted_total_with, SweepAxis, SweepRow, TrustOrdering,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{path_for, write_atomic, write_csv, write_json, SCHEMA_VERSION};
use crate::scenario::Scenario;

#[derive(Serialize)]
struct Header<'a> {
    schema_version: u32,
    command: &'static str,
    scenario: &'a str,
    excess_noise_reference: NoiseReference,
}

impl<'a> Header<'a> {
    fn new(command: &'static str, s: &'a Scenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            scenario: &s.name,
            excess_noise_reference: s.excess_noise_reference,
        }
    }
}

#[derive(Serialize)]
struct KeyRateOutput<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    symbol_rate_hz: Option<f64>,
    user_names: Vec<String>,
    trust_order: Vec<usize>,
    untrusted: KeyRateReport,
    trusted: KeyRateReport,
    time_sharing_bits_per_symbol: Option<f64>,
    plob_bits_per_symbol: f64,
    network: &'a NetworkParams,
}

pub fn keyrate(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let params = s.network()?;
    let engine = KeyRateEngine::new(params.clone())?;
    let n = engine.users();
    let betas = s.betas();
    let fers = s.fers();
    let rate = s.symbol_rate.unwrap_or(0.0);

    let untrusted_keys = untrusted_total_with(&engine, &betas)?;
    let ordering = TrustOrdering::realize(&s.trust, &untrusted_keys.per_user)?;
    let untrusted_parts: Vec<_> = (0..n).map(TrustPartition::untrusted).collect();
    let untrusted = engine.report(&untrusted_parts, &betas, &fers, rate, true)?;
    let trusted = engine.report(&ordering.partitions()?, &betas, &fers, rate, false)?;
    let time_sharing = match s.time_sharing_user {
        Some(u) => Some(time_sharing_total(&params, &betas, Some(u))?.total),
        None if params.is_symmetric() && betas.iter().all(|&b| b == betas[0]) => {
            Some(time_sharing_total(&params, &betas, None)?.total)
        }
        None => None,
    };
    let names = s.user_names();

    let header: Vec<String> = [
        "user",
        "name",
        "transmittance",
        "excess_noise_snu",
        "snr",
        "mutual_information_bits_per_symbol",
        "beta",
        "fer",
        "holevo_untrusted_bits_per_symbol",
        "key_untrusted_bits_per_symbol",
        "holevo_trusted_bits_per_symbol",
        "key_trusted_bits_per_symbol",
        "throughput_untrusted_bit_per_s",
        "throughput_trusted_bit_per_s",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|l| {
            let (u, t) = (&untrusted.users[l], &trusted.users[l]);
            vec![
                l.to_string(),
                names[l].clone(),
                params.total_transmittance(l).to_string(),
                params.total_excess_noise(l).to_string(),
                u.snr.to_string(),
                u.mutual_information.to_string(),
                u.beta.to_string(),
                u.fer.to_string(),
                u.holevo.to_string(),
                u.key_per_symbol.to_string(),
                t.holevo.to_string(),
                t.key_per_symbol.to_string(),
                u.throughput.to_string(),
                t.throughput.to_string(),
            ]
        })
        .collect();

    let json = KeyRateOutput {
        header: Header::new("keyrate", s),
        symbol_rate_hz: s.symbol_rate,
        user_names: names,
        trust_order: ordering.realized_order.clone(),
        untrusted,
        trusted,
        time_sharing_bits_per_symbol: time_sharing,
        plob_bits_per_symbol: plob_total(&params)?.total,
        network: &params,
    };
    let json_path = path_for(out, &s.name, "keyrate.json");
    let csv_path = path_for(out, &s.name, "keyrate.csv");
    write_json(&json_path, &json)?;
    write_csv(&csv_path, &header, &rows)?;
    Ok(vec![json_path, csv_path])
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    axis: SweepAxis,
    rows: &'a [SweepRow],
}

pub fn sweep_rows(s: &Scenario) -> Result<Vec<SweepRow>> {
    let Some(spec) = &s.sweep else {
        bail!("scenario `{}` has no [sweep] table", s.name);
    };
    let Some(template) = s.symmetric_template() else {
        bail!("sweeps need identical users given as a [symmetric] table");
    };
    let series = if spec.series.is_empty() { vec![template.users] } else { spec.series.clone() };
    let mut rows = Vec::new();
    for users in series {
        let mut t = template.clone();
        t.users = users;
        rows.extend(sweep(&t, spec.axis, &spec.values, &s.trust, s.noise_model())?);
    }
    Ok(rows)
}

pub fn sweep_command(s: &Scenario, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = sweep_rows(s)?;
    let axis = s.sweep.as_ref().expect("checked by sweep_rows").axis;
    let mut header: Vec<String> = SweepRow::CSV_HEADER.iter().map(|h| h.to_string()).collect();
    header[0] = match axis {
        SweepAxis::ChannelLossDb => "channel_loss_db",
        SweepAxis::Users => "users_axis",
        SweepAxis::ModulationVariance => "modulation_variance_axis_snu",
    }
    .to_string();
    let csv_rows: Vec<Vec<String>> = rows.iter().map(SweepRow::csv_fields).collect();
    let json_path = path_for(out, &s.name, "sweep.json");
    let csv_path = path_for(out, &s.name, "sweep.csv");
    write_json(
        &json_path,
        &SweepOutput {
            header: Header::new("sweep", s),
            axis,
            rows: &rows,
        },
    )?;
    write_csv(&csv_path, &header, &csv_rows)?;
    Ok(vec![json_path, csv_path])
}

#[derive(Serialize)]
struct UserEstimate {
    user: usize,
    name: String,
    true_transmittance: f64,
    true_excess_noise_snu: f64,
    estimates: ParameterEstimates,
    transmittance_covered: bool,
    excess_noise_covered: bool,
    untrusted_key_bits_per_symbol: KeyInterval,
    alice_mutual_information_bits: f64,
}

#[derive(Serialize)]
struct MonteCarloOutput<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    samples: usize,
    seed: u64,
    z: f64,
    users: Vec<UserEstimate>,
    /// `[i][j]`, pooled quadratures, bits per sample; diagonal left at 0.
    user_mutual_information_bits: Vec<Vec<f64>>,
    /// Same for the noise inferred from each record.
    noise_mutual_information_bits: Vec<Vec<f64>>,
}

pub fn montecarlo(s: &Scenario, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let Some(spec) = &s.montecarlo else {
        bail!("scenario `{}` has no [montecarlo] table", s.name);
    };
    let seed = seed.unwrap_or(spec.seed);
    let params = s.network()?;
    let betas = s.betas();
    let names = s.user_names();
    let batch = simulate_channel(&params, spec.samples, seed)?;
    let n = batch.users();
    let alice = batch.alice_pooled();
    let records: Vec<Vec<f64>> = (0..n).map(|l| batch.user_pooled(l)).collect();
    let noise = records
        .iter()
        .map(|r| infer_noise(r, &alice))
        .collect::<cvqpon::Result<Vec<_>>>()?;

    let users = (0..n)
        .into_par_iter()
        .map(|l| -> Result<UserEstimate> {
            let e = estimate_user(&batch, l, spec.z)?;
            let key = worst_case_key(&params, l, &e, betas[l], &TrustPartition::untrusted(l))?;
            let (eta, eps) = (params.total_transmittance(l), params.total_excess_noise(l));
            Ok(UserEstimate {
                user: l,
                name: names[l].clone(),
                true_transmittance: eta,
                true_excess_noise_snu: eps,
                transmittance_covered: e.transmittance.contains(eta),
                excess_noise_covered: e.excess_noise.contains(eps),
                estimates: e,
                untrusted_key_bits_per_symbol: key,
                alice_mutual_information_bits: empirical_mi(&alice, &records[l])?.bits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = |data: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Ok(0.0) } else { Ok(empirical_mi(&data[i], &data[j])?.bits) })
                    .collect()
            })
            .collect()
    };

    let json_path = path_for(out, &s.name, "montecarlo.json");
    write_json(
        &json_path,
        &MonteCarloOutput {
            header: Header::new("montecarlo", s),
            samples: spec.samples,
            seed,
            z: spec.z,
            users,
            user_mutual_information_bits: matrix(&records)?,
            noise_mutual_information_bits: matrix(&noise)?,
        },
    )?;
    let mut written = vec![json_path];
    if spec.write_samples {
        let path = path_for(out, &s.name, "samples.csv");
        write_atomic(&path, |w| batch.write_csv(w).context("writing samples"))?;
        written.push(path);
    }
    Ok(written)
}
