//! TOML scenario files.
//!
//! ```toml
//! name = "example"
//! symbol_rate = "100 MBaud"
//! excess_noise_reference = "channel_output"   # or "detector"
//! trust_order = "ascending"                   # "descending" or [2, 0, 1]
//!
//! [source]
//! modulation_variance = "1.26 SNU"
//!
//! [[users]]
//! name = "Bob1"
//! transmittance = 0.0369          # end to end; or branch_transmittance with [feeder]
//! excess_noise = "0.794 mSNU"
//! efficiency = "68.5 %"
//! electronic_noise = "51.24 mSNU"
//! beta = "90.79 %"
//! fer = "4.5 %"
//! ```
//!
//! Identical users can be given as one `[symmetric]` table instead of
//! `[[users]]`. User indices (`trust_order`, `time_sharing_user`) count from 0.

use cvqpon::network::{LinkParams, NetworkParams, NoiseReference, UserChannel};
use cvqpon::protocols::{linear_grid, LinearNoise, SweepAxis, SymmetricScenario, TrustStrategy};
use thiserror::Error;

use crate::units::{self, Dimension};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid network: {0}")]
    Model(#[from] cvqpon::Error),
}

impl ScenarioError {
    pub fn field(path: &str, message: impl Into<String>) -> Self {
        ScenarioError::Field {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    /// Where every quoted per-user excess noise is referenced.
    pub excess_noise_reference: NoiseReference,
    /// Hz.
    pub symbol_rate: Option<f64>,
    pub trust: TrustStrategy,
    pub time_sharing_user: Option<usize>,
    pub modulation_variance: f64,
    pub network: NetworkSpec,
    pub sweep: Option<SweepSpec>,
    pub montecarlo: Option<MonteCarloSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Users {
        feeder: Option<Feeder>,
        users: Vec<UserSpec>,
    },
    /// Excess noise as quoted, before the reference is applied.
    Symmetric(SymmetricScenario),
}

/// Feeder link; its excess noise is always referenced at the feeder output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feeder {
    pub transmittance: f64,
    pub excess_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UserLink {
    /// Total transmittance including the split.
    EndToEnd(f64),
    /// Drop link after the splitter.
    Branch(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSpec {
    pub name: String,
    pub link: UserLink,
    /// As quoted.
    pub excess_noise: f64,
    pub efficiency: f64,
    pub electronic_noise: f64,
    pub beta: f64,
    pub fer: f64,
    pub split_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// One curve per user count; empty means the `[symmetric]` count.
    pub series: Vec<usize>,
    /// As quoted.
    pub noise_model: Option<LinearNoise>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
    pub z: f64,
    pub write_samples: bool,
}

struct Section<'a> {
    path: String,
    table: &'a toml::Table,
}

impl<'a> Section<'a> {
    fn new(path: String, table: &'a toml::Table, allowed: &[&str]) -> Result<Self> {
        if let Some(key) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            let at = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
            return Err(ScenarioError::field(
                &at,
                format!("unknown key, expected one of {}", allowed.join(", ")),
            ));
        }
        Ok(Self { path, table })
    }

    fn at(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<Option<f64>> {
        self.table.get(key).map(|v| units::parse(&self.at(key), v, dim)).transpose()
    }

    fn required(&self, key: &str, dim: Dimension) -> Result<f64> {
        self.quantity(key, dim)?
            .ok_or_else(|| ScenarioError::field(&self.at(key), "missing"))
    }

    fn bounded(&self, key: &str, dim: Dimension, check: Bound) -> Result<Option<f64>> {
        let Some(x) = self.quantity(key, dim)? else {
            return Ok(None);
        };
        let ok = match check {
            Bound::NonNegative => x >= 0.0,
            Bound::UnitOpen => x > 0.0 && x <= 1.0,
            Bound::UnitClosed => (0.0..=1.0).contains(&x),
            Bound::Positive => x > 0.0,
        };
        if !ok {
            return Err(ScenarioError::field(&self.at(key), format!("{x} {}", check.describe())));
        }
        Ok(Some(x))
    }

    fn bounded_required(&self, key: &str, dim: Dimension, check: Bound) -> Result<f64> {
        self.bounded(key, dim, check)?
            .ok_or_else(|| ScenarioError::field(&self.at(key), "missing"))
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(ScenarioError::field(&self.at(key), format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(ScenarioError::field(&self.at(key), format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(ScenarioError::field(&self.at(key), format!("expected true or false, found {v}"))),
        }
    }

    fn index_list(&self, key: &str, value: &toml::Value) -> Result<Vec<usize>> {
        let toml::Value::Array(items) = value else {
            return Err(ScenarioError::field(&self.at(key), "expected an array of integers"));
        };
        items
            .iter()
            .enumerate()
            .map(|(k, v)| match v {
                toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(ScenarioError::field(&format!("{}[{k}]", self.at(key)), "expected a non-negative integer")),
            })
            .collect()
    }

    fn child(&self, key: &str, allowed: &[&str]) -> Result<Option<Section<'a>>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Table(t)) => Section::new(self.at(key), t, allowed).map(Some),
            Some(v) => Err(ScenarioError::field(&self.at(key), format!("expected a table, found {}", v.type_str()))),
        }
    }
}

#[derive(Clone, Copy)]
enum Bound {
    NonNegative,
    Positive,
    UnitOpen,
    UnitClosed,
}

impl Bound {
    fn describe(self) -> &'static str {
        match self {
            Bound::NonNegative => "must be >= 0",
            Bound::Positive => "must be > 0",
            Bound::UnitOpen => "must lie in (0, 1]",
            Bound::UnitClosed => "must lie in [0, 1]",
        }
    }
}

const TOP: &[&str] = &[
    "name",
    "description",
    "excess_noise_reference",
    "symbol_rate",
    "trust_order",
    "time_sharing_user",
    "source",
    "feeder",
    "users",
    "symmetric",
    "sweep",
    "montecarlo",
];
const USER: &[&str] = &[
    "name",
    "transmittance",
    "branch_transmittance",
    "excess_noise",
    "efficiency",
    "electronic_noise",
    "beta",
    "fer",
    "split_ratio",
];
const SYMMETRIC: &[&str] = &[
    "users",
    "channel_transmittance",
    "excess_noise",
    "efficiency",
    "electronic_noise",
    "beta",
];
const SWEEP: &[&str] = &["axis", "start", "stop", "points", "values", "users", "excess_noise_model"];

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse()?;
        let top = Section::new(String::new(), &table, TOP)?;

        let name = top
            .string("name")?
            .ok_or_else(|| ScenarioError::field("name", "missing"))?
            .to_string();
        let description = top.string("description")?.map(str::to_string);
        let excess_noise_reference = match top.string("excess_noise_reference")? {
            None | Some("channel_output") => NoiseReference::ChannelOutput,
            Some("detector") => NoiseReference::Detector,
            Some(other) => {
                return Err(ScenarioError::field(
                    "excess_noise_reference",
                    format!("`{other}` is neither `channel_output` nor `detector`"),
                ))
            }
        };
        let symbol_rate = top.bounded("symbol_rate", Dimension::Rate, Bound::Positive)?;
        let trust = match table.get("trust_order") {
            None => TrustStrategy::AscendingUntrustedKey,
            Some(toml::Value::String(s)) if s == "ascending" => TrustStrategy::AscendingUntrustedKey,
            Some(toml::Value::String(s)) if s == "descending" => TrustStrategy::DescendingUntrustedKey,
            Some(v @ toml::Value::Array(_)) => TrustStrategy::Explicit(top.index_list("trust_order", v)?),
            Some(v) => {
                return Err(ScenarioError::field(
                    "trust_order",
                    format!("expected \"ascending\", \"descending\" or a list of user indices, found {v}"),
                ))
            }
        };
        let time_sharing_user = top.integer("time_sharing_user")?.map(|u| u as usize);

        let source = top
            .child("source", &["modulation_variance"])?
            .ok_or_else(|| ScenarioError::field("source", "missing"))?;
        let modulation_variance =
            source.bounded_required("modulation_variance", Dimension::Noise, Bound::NonNegative)?;

        let network = match (table.get("users"), top.child("symmetric", SYMMETRIC)?) {
            (Some(_), Some(_)) => {
                return Err(ScenarioError::field("symmetric", "give either [[users]] or [symmetric], not both"))
            }
            (None, None) => return Err(ScenarioError::field("users", "at least one user is required")),
            (None, Some(s)) => {
                if table.contains_key("feeder") {
                    return Err(ScenarioError::field("feeder", "not used with [symmetric]"));
                }
                NetworkSpec::Symmetric(parse_symmetric(&s, modulation_variance)?)
            }
            (Some(users), None) => parse_users(&top, users)?,
        };

        let sweep = top.child("sweep", SWEEP)?.map(|s| parse_sweep(&s)).transpose()?;
        let montecarlo = top
            .child("montecarlo", &["samples", "seed", "z", "write_samples"])?
            .map(|m| -> Result<MonteCarloSpec> {
                let samples = m.integer("samples")?.unwrap_or(1_000_000) as usize;
                if samples < cvqpon::estimation::MIN_ESTIMATION_SAMPLES {
                    return Err(ScenarioError::field(
                        &m.at("samples"),
                        format!("needs at least {} symbols", cvqpon::estimation::MIN_ESTIMATION_SAMPLES),
                    ));
                }
                Ok(MonteCarloSpec {
                    samples,
                    seed: m.integer("seed")?.unwrap_or(0),
                    z: m.bounded("z", Dimension::Fraction, Bound::Positive)?
                        .unwrap_or(cvqpon::estimation::DEFAULT_Z),
                    write_samples: m.boolean("write_samples")?.unwrap_or(false),
                })
            })
            .transpose()?;

        let scenario = Scenario {
            name,
            description,
            excess_noise_reference,
            symbol_rate,
            trust,
            time_sharing_user,
            modulation_variance,
            network,
            sweep,
            montecarlo,
        };
        scenario.check()?;
        Ok(scenario)
    }

    fn check(&self) -> Result<()> {
        let n = self.users();
        if let TrustStrategy::Explicit(order) = &self.trust {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(ScenarioError::field(
                    "trust_order",
                    format!("{order:?} is not a permutation of the {n} user indices"),
                ));
            }
        }
        if let Some(u) = self.time_sharing_user {
            if u >= n {
                return Err(ScenarioError::field("time_sharing_user", format!("{u} but there are {n} users")));
            }
        }
        if let NetworkSpec::Users { users, .. } = &self.network {
            for (k, u) in users.iter().enumerate() {
                if let UserLink::EndToEnd(t) = u.link {
                    if t * n as f64 > 1.0 + 1e-12 {
                        return Err(ScenarioError::field(
                            &format!("users[{k}].transmittance"),
                            format!("{t} exceeds the 1/{n} share of an equal splitter"),
                        ));
                    }
                }
            }
        }
        self.network()?;
        Ok(())
    }

    pub fn users(&self) -> usize {
        match &self.network {
            NetworkSpec::Users { users, .. } => users.len(),
            NetworkSpec::Symmetric(s) => s.users,
        }
    }

    pub fn user_names(&self) -> Vec<String> {
        match &self.network {
            NetworkSpec::Users { users, .. } => users.iter().map(|u| u.name.clone()).collect(),
            NetworkSpec::Symmetric(s) => (1..=s.users).map(|l| format!("user{l}")).collect(),
        }
    }

    /// Identical-user description with the excess noise at the channel output.
    pub fn symmetric_template(&self) -> Option<SymmetricScenario> {
        match &self.network {
            NetworkSpec::Symmetric(s) => {
                let mut s = s.clone();
                s.excess_noise = self.excess_noise_reference.to_channel_output(s.excess_noise, s.efficiency);
                Some(s)
            }
            NetworkSpec::Users { .. } => None,
        }
    }

    /// Excess-noise model with both coefficients at the channel output.
    pub fn noise_model(&self) -> Option<LinearNoise> {
        let model = self.sweep.as_ref()?.noise_model?;
        let efficiency = self.symmetric_template()?.efficiency;
        let r = self.excess_noise_reference;
        Some(LinearNoise {
            intercept: r.to_channel_output(model.intercept, efficiency),
            slope: r.to_channel_output(model.slope, efficiency),
        })
    }

    pub fn network(&self) -> Result<NetworkParams> {
        let r = self.excess_noise_reference;
        let params = match &self.network {
            NetworkSpec::Symmetric(_) => self.symmetric_template().expect("symmetric").network()?,
            NetworkSpec::Users { feeder: None, users } if users.iter().all(|u| matches!(u.link, UserLink::EndToEnd(_))) => {
                let channels: Vec<UserChannel> = users
                    .iter()
                    .map(|u| UserChannel {
                        transmittance: match u.link {
                            UserLink::EndToEnd(t) | UserLink::Branch(t) => t,
                        },
                        excess_noise: r.to_channel_output(u.excess_noise, u.efficiency),
                        efficiency: u.efficiency,
                        electronic_noise: u.electronic_noise,
                    })
                    .collect();
                NetworkParams::from_user_channels(self.modulation_variance, &channels)?
            }
            NetworkSpec::Users { feeder, users } => {
                let feeder = feeder.unwrap_or(Feeder {
                    transmittance: 1.0,
                    excess_noise: 0.0,
                });
                let mut p = NetworkParams::symmetric(users.len(), self.modulation_variance, 1.0, 1.0, 0.0, 1.0, 0.0)?;
                p.link = LinkParams {
                    feeder_transmittance: feeder.transmittance,
                    feeder_excess_noise: feeder.excess_noise,
                    branch_transmittance: users
                        .iter()
                        .map(|u| match u.link {
                            UserLink::Branch(t) | UserLink::EndToEnd(t) => t,
                        })
                        .collect(),
                    branch_excess_noise: users
                        .iter()
                        .map(|u| r.to_channel_output(u.excess_noise, u.efficiency))
                        .collect(),
                    split_ratios: users.iter().map(|u| u.split_ratio).collect(),
                };
                p.detectors.efficiency = users.iter().map(|u| u.efficiency).collect();
                p.detectors.electronic_noise = users.iter().map(|u| u.electronic_noise).collect();
                p.validate()?;
                p
            }
        };
        Ok(params)
    }

    pub fn betas(&self) -> Vec<f64> {
        match &self.network {
            NetworkSpec::Users { users, .. } => users.iter().map(|u| u.beta).collect(),
            NetworkSpec::Symmetric(s) => vec![s.beta; s.users],
        }
    }

    pub fn fers(&self) -> Vec<f64> {
        match &self.network {
            NetworkSpec::Users { users, .. } => users.iter().map(|u| u.fer).collect(),
            NetworkSpec::Symmetric(s) => vec![0.0; s.users],
        }
    }

    /// Writes the scenario back in the same format; [`Scenario::from_toml`]
    /// reads the result back to an equal value.
    pub fn to_toml(&self) -> String {
        use toml::{Table, Value};
        let mut top = Table::new();
        top.insert("name".into(), Value::String(self.name.clone()));
        if let Some(d) = &self.description {
            top.insert("description".into(), Value::String(d.clone()));
        }
        let reference = match self.excess_noise_reference {
            NoiseReference::ChannelOutput => "channel_output",
            NoiseReference::Detector => "detector",
        };
        top.insert("excess_noise_reference".into(), Value::String(reference.into()));
        if let Some(r) = self.symbol_rate {
            top.insert("symbol_rate".into(), units::format(r, Dimension::Rate));
        }
        let trust = match &self.trust {
            TrustStrategy::AscendingUntrustedKey => Value::String("ascending".into()),
            TrustStrategy::DescendingUntrustedKey => Value::String("descending".into()),
            TrustStrategy::Explicit(order) => Value::Array(order.iter().map(|&u| Value::Integer(u as i64)).collect()),
        };
        top.insert("trust_order".into(), trust);
        if let Some(u) = self.time_sharing_user {
            top.insert("time_sharing_user".into(), Value::Integer(u as i64));
        }
        let mut source = Table::new();
        source.insert("modulation_variance".into(), units::format(self.modulation_variance, Dimension::Noise));
        top.insert("source".into(), Value::Table(source));

        match &self.network {
            NetworkSpec::Symmetric(s) => {
                let mut t = Table::new();
                t.insert("users".into(), Value::Integer(s.users as i64));
                t.insert("channel_transmittance".into(), units::format(s.channel_transmittance, Dimension::Transmittance));
                t.insert("excess_noise".into(), units::format(s.excess_noise, Dimension::Noise));
                t.insert("efficiency".into(), units::format(s.efficiency, Dimension::Fraction));
                t.insert("electronic_noise".into(), units::format(s.electronic_noise, Dimension::Noise));
                t.insert("beta".into(), units::format(s.beta, Dimension::Fraction));
                top.insert("symmetric".into(), Value::Table(t));
            }
            NetworkSpec::Users { feeder, users } => {
                if let Some(f) = feeder {
                    let mut t = Table::new();
                    t.insert("transmittance".into(), units::format(f.transmittance, Dimension::Transmittance));
                    t.insert("excess_noise".into(), units::format(f.excess_noise, Dimension::Noise));
                    top.insert("feeder".into(), Value::Table(t));
                }
                let list = users
                    .iter()
                    .map(|u| {
                        let mut t = Table::new();
                        t.insert("name".into(), Value::String(u.name.clone()));
                        let (key, x) = match u.link {
                            UserLink::EndToEnd(x) => ("transmittance", x),
                            UserLink::Branch(x) => ("branch_transmittance", x),
                        };
                        t.insert(key.into(), units::format(x, Dimension::Transmittance));
                        t.insert("excess_noise".into(), units::format(u.excess_noise, Dimension::Noise));
                        t.insert("efficiency".into(), units::format(u.efficiency, Dimension::Fraction));
                        t.insert("electronic_noise".into(), units::format(u.electronic_noise, Dimension::Noise));
                        t.insert("beta".into(), units::format(u.beta, Dimension::Fraction));
                        t.insert("fer".into(), units::format(u.fer, Dimension::Fraction));
                        if let Some(r) = u.split_ratio {
                            t.insert("split_ratio".into(), units::format(r, Dimension::Fraction));
                        }
                        Value::Table(t)
                    })
                    .collect();
                top.insert("users".into(), Value::Array(list));
            }
        }

        if let Some(s) = &self.sweep {
            let mut t = Table::new();
            let (axis, dim) = axis_name(s.axis);
            t.insert("axis".into(), Value::String(axis.into()));
            let values = s
                .values
                .iter()
                .map(|&x| match dim {
                    Some(d) => units::format(x, d),
                    None => Value::Integer(x as i64),
                })
                .collect();
            t.insert("values".into(), Value::Array(values));
            if !s.series.is_empty() {
                t.insert("users".into(), Value::Array(s.series.iter().map(|&n| Value::Integer(n as i64)).collect()));
            }
            if let Some(m) = s.noise_model {
                let mut nm = Table::new();
                nm.insert("intercept".into(), units::format(m.intercept, Dimension::Noise));
                nm.insert("slope".into(), units::format(m.slope, Dimension::Fraction));
                t.insert("excess_noise_model".into(), Value::Table(nm));
            }
            top.insert("sweep".into(), Value::Table(t));
        }
        if let Some(m) = &self.montecarlo {
            let mut t = Table::new();
            t.insert("samples".into(), Value::Integer(m.samples as i64));
            t.insert("seed".into(), Value::Integer(m.seed as i64));
            t.insert("z".into(), Value::Float(m.z));
            t.insert("write_samples".into(), Value::Boolean(m.write_samples));
            top.insert("montecarlo".into(), Value::Table(t));
        }
        toml::to_string_pretty(&top).expect("scenario tables always serialize")
    }
}

fn axis_name(axis: SweepAxis) -> (&'static str, Option<Dimension>) {
    match axis {
        SweepAxis::ChannelLossDb => ("channel_loss", Some(Dimension::Loss)),
        SweepAxis::Users => ("users", None),
        SweepAxis::ModulationVariance => ("modulation_variance", Some(Dimension::Noise)),
    }
}

fn parse_symmetric(s: &Section, modulation_variance: f64) -> Result<SymmetricScenario> {
    let users = s.integer("users")?.ok_or_else(|| ScenarioError::field(&s.at("users"), "missing"))? as usize;
    if users == 0 {
        return Err(ScenarioError::field(&s.at("users"), "at least one user is required"));
    }
    Ok(SymmetricScenario {
        users,
        modulation_variance,
        channel_transmittance: s.bounded_required("channel_transmittance", Dimension::Transmittance, Bound::UnitOpen)?,
        excess_noise: s.bounded("excess_noise", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
        efficiency: s.bounded("efficiency", Dimension::Fraction, Bound::UnitOpen)?.unwrap_or(1.0),
        electronic_noise: s.bounded("electronic_noise", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
        beta: s.bounded("beta", Dimension::Fraction, Bound::UnitClosed)?.unwrap_or(1.0),
    })
}

fn parse_users(top: &Section, value: &toml::Value) -> Result<NetworkSpec> {
    let toml::Value::Array(items) = value else {
        return Err(ScenarioError::field("users", "expected an array of tables ([[users]])"));
    };
    if items.is_empty() {
        return Err(ScenarioError::field("users", "at least one user is required"));
    }
    let feeder = top
        .child("feeder", &["transmittance", "excess_noise"])?
        .map(|f| -> Result<Feeder> {
            Ok(Feeder {
                transmittance: f.bounded("transmittance", Dimension::Transmittance, Bound::UnitOpen)?.unwrap_or(1.0),
                excess_noise: f.bounded("excess_noise", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
            })
        })
        .transpose()?;
    let mut users = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        let path = format!("users[{k}]");
        let toml::Value::Table(t) = item else {
            return Err(ScenarioError::field(&path, "expected a table"));
        };
        let u = Section::new(path.clone(), t, USER)?;
        let end = u.bounded("transmittance", Dimension::Transmittance, Bound::UnitOpen)?;
        let branch = u.bounded("branch_transmittance", Dimension::Transmittance, Bound::UnitOpen)?;
        let link = match (end, branch) {
            (Some(x), None) if feeder.is_none() => UserLink::EndToEnd(x),
            (Some(_), None) => {
                return Err(ScenarioError::field(&u.at("transmittance"), "with [feeder] give branch_transmittance"))
            }
            (None, Some(x)) => UserLink::Branch(x),
            (Some(_), Some(_)) => {
                return Err(ScenarioError::field(&path, "give transmittance or branch_transmittance, not both"))
            }
            (None, None) => return Err(ScenarioError::field(&u.at("transmittance"), "missing")),
        };
        users.push(UserSpec {
            name: u.string("name")?.map_or_else(|| format!("user{}", k + 1), str::to_string),
            link,
            excess_noise: u.bounded("excess_noise", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
            efficiency: u.bounded("efficiency", Dimension::Fraction, Bound::UnitOpen)?.unwrap_or(1.0),
            electronic_noise: u.bounded("electronic_noise", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
            beta: u.bounded("beta", Dimension::Fraction, Bound::UnitClosed)?.unwrap_or(1.0),
            fer: u.bounded("fer", Dimension::Fraction, Bound::UnitClosed)?.unwrap_or(0.0),
            split_ratio: u.bounded("split_ratio", Dimension::Fraction, Bound::UnitOpen)?,
        });
    }
    let kinds = users.iter().filter(|u| matches!(u.link, UserLink::EndToEnd(_))).count();
    if kinds != 0 && kinds != users.len() {
        return Err(ScenarioError::field("users", "mixes transmittance and branch_transmittance"));
    }
    let ratios = users.iter().filter(|u| u.split_ratio.is_some()).count();
    if ratios != 0 && ratios != users.len() {
        return Err(ScenarioError::field("users", "split_ratio must be given for every user or none"));
    }
    if ratios != 0 && kinds != 0 {
        return Err(ScenarioError::field("users", "split_ratio needs branch_transmittance"));
    }
    Ok(NetworkSpec::Users { feeder, users })
}

fn parse_sweep(s: &Section) -> Result<SweepSpec> {
    let axis = match s.string("axis")? {
        Some("channel_loss") => SweepAxis::ChannelLossDb,
        Some("users") => SweepAxis::Users,
        Some("modulation_variance") => SweepAxis::ModulationVariance,
        Some(other) => {
            return Err(ScenarioError::field(
                &s.at("axis"),
                format!("`{other}` is not channel_loss, users or modulation_variance"),
            ))
        }
        None => return Err(ScenarioError::field(&s.at("axis"), "missing")),
    };
    let dim = axis_name(axis).1.unwrap_or(Dimension::Fraction);
    let values = match s.table.get("values") {
        Some(toml::Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, v)| units::parse(&format!("{}[{k}]", s.at("values")), v, dim))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(ScenarioError::field(&s.at("values"), "expected an array")),
        None => {
            let start = s.required("start", dim)?;
            let stop = s.required("stop", dim)?;
            let points = s.integer("points")?.ok_or_else(|| ScenarioError::field(&s.at("points"), "missing"))?;
            linear_grid(start, stop, points as usize)
                .map_err(|e| ScenarioError::field(&s.at("points"), e.to_string()))?
        }
    };
    if values.is_empty() {
        return Err(ScenarioError::field(&s.at("values"), "needs at least one value"));
    }
    let series = match s.table.get("users") {
        Some(v) => s.index_list("users", v)?,
        None => Vec::new(),
    };
    if series.contains(&0) {
        return Err(ScenarioError::field(&s.at("users"), "user counts must be positive"));
    }
    if axis == SweepAxis::Users && !series.is_empty() {
        return Err(ScenarioError::field(&s.at("users"), "not used when sweeping the user count"));
    }
    let noise_model = s
        .child("excess_noise_model", &["intercept", "slope"])?
        .map(|m| -> Result<LinearNoise> {
            Ok(LinearNoise {
                intercept: m.bounded("intercept", Dimension::Noise, Bound::NonNegative)?.unwrap_or(0.0),
                slope: m.bounded_required("slope", Dimension::Fraction, Bound::NonNegative)?,
            })
        })
        .transpose()?;
    Ok(SweepSpec {
        axis,
        values,
        series,
        noise_model,
    })
}
