//! Unit-suffixed quantities such as `"51.24 mSNU"`, `"68.5 %"`, `"3 dB"`
//! or `"100 MBaud"`. Bare numbers are read in the base unit.

use crate::scenario::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Variance in shot-noise units: `SNU`, `mSNU`.
    Noise,
    /// Plain ratio: bare or `%`.
    Fraction,
    /// Ratio that may also be given as a loss in `dB`.
    Transmittance,
    /// Loss in `dB`.
    Loss,
    /// Symbols per second: `Hz`, `kHz`, `MHz`, `GHz`, `Baud`, `kBaud`, `MBaud`, `GBaud`.
    Rate,
}

impl Dimension {
    fn scale(self, unit: &str) -> Option<Scale> {
        use Scale::*;
        let s = match (self, unit) {
            (_, "") => Linear(1.0),
            (Dimension::Noise, "SNU") => Linear(1.0),
            (Dimension::Noise, "mSNU") => Divided(1e3),
            (Dimension::Fraction | Dimension::Transmittance, "%") => Divided(1e2),
            (Dimension::Transmittance, "dB") => Decibel,
            (Dimension::Loss, "dB") => Linear(1.0),
            (Dimension::Rate, "Hz" | "Baud") => Linear(1.0),
            (Dimension::Rate, "kHz" | "kBaud") => Linear(1e3),
            (Dimension::Rate, "MHz" | "MBaud") => Linear(1e6),
            (Dimension::Rate, "GHz" | "GBaud") => Linear(1e9),
            _ => return None,
        };
        Some(s)
    }

    fn units(self) -> &'static str {
        match self {
            Dimension::Noise => "SNU or mSNU",
            Dimension::Fraction => "a bare ratio or %",
            Dimension::Transmittance => "a bare ratio, % or dB of loss",
            Dimension::Loss => "dB",
            Dimension::Rate => "Hz, kHz, MHz, GHz or the Baud equivalents",
        }
    }
}

enum Scale {
    Linear(f64),
    Divided(f64),
    Decibel,
}

pub fn parse(path: &str, value: &toml::Value, dim: Dimension) -> Result<f64, ScenarioError> {
    let (number, unit) = match value {
        toml::Value::Float(x) => (*x, ""),
        toml::Value::Integer(i) => (*i as f64, ""),
        toml::Value::String(s) => split(path, s)?,
        other => {
            return Err(ScenarioError::field(
                path,
                format!("expected a number or a quantity string, found {}", other.type_str()),
            ))
        }
    };
    let scale = dim.scale(unit).ok_or_else(|| {
        ScenarioError::field(path, format!("unit `{unit}` not accepted here, use {}", dim.units()))
    })?;
    let x = match scale {
        Scale::Linear(k) => number * k,
        Scale::Divided(k) => number / k,
        Scale::Decibel => 10f64.powf(-number / 10.0),
    };
    if !x.is_finite() {
        return Err(ScenarioError::field(path, "value is not finite"));
    }
    Ok(x)
}

fn split<'a>(path: &str, s: &'a str) -> Result<(f64, &'a str), ScenarioError> {
    let s = s.trim();
    let end = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(s.len());
    let number = s[..end]
        .parse::<f64>()
        .map_err(|_| ScenarioError::field(path, format!("cannot read a number from `{s}`")))?;
    Ok((number, s[end..].trim()))
}

/// Quantity string that [`parse`] reads back to exactly `x`.
pub fn format(x: f64, dim: Dimension) -> toml::Value {
    match dim {
        Dimension::Noise => toml::Value::String(format!("{x:?} SNU")),
        Dimension::Loss => toml::Value::String(format!("{x:?} dB")),
        Dimension::Rate => toml::Value::String(format!("{x:?} Hz")),
        Dimension::Fraction | Dimension::Transmittance => toml::Value::Float(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, d: Dimension) -> Result<f64, ScenarioError> {
        parse("x", &toml::Value::String(s.into()), d)
    }

    #[test]
    fn suffixes() {
        assert_eq!(p("51.24 mSNU", Dimension::Noise).unwrap(), 51.24e-3);
        assert_eq!(p("1.26 SNU", Dimension::Noise).unwrap(), 1.26);
        assert_eq!(p("68.5 %", Dimension::Fraction).unwrap(), 0.685);
        assert_eq!(p("95 %", Dimension::Fraction).unwrap(), 0.95);
        assert_eq!(p("100 MBaud", Dimension::Rate).unwrap(), 1e8);
        assert_eq!(p("1e8Hz", Dimension::Rate).unwrap(), 1e8);
        assert!((p("3 dB", Dimension::Transmittance).unwrap() - 0.501_187_233_6).abs() < 1e-10);
        assert_eq!(p("2.5 dB", Dimension::Loss).unwrap(), 2.5);
        assert_eq!(parse("x", &toml::Value::Integer(2), Dimension::Noise).unwrap(), 2.0);
    }

    #[test]
    fn wrong_units_name_the_field() {
        let e = p("3 dB", Dimension::Noise).unwrap_err().to_string();
        assert!(e.starts_with("x: unit `dB`"), "{e}");
        assert!(p("abc", Dimension::Noise).is_err());
        assert!(p("5 %", Dimension::Rate).is_err());
        assert!(parse("x", &toml::Value::Boolean(true), Dimension::Noise).is_err());
    }

    #[test]
    fn formatted_values_read_back() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-9, 123.0] {
            for d in [Dimension::Noise, Dimension::Loss, Dimension::Rate, Dimension::Fraction] {
                assert_eq!(parse("x", &format(x, d), d).unwrap(), x);
            }
        }
    }
}
