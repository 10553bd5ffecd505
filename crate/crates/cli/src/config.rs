//! Flat `key = value` scenario files with dotted section paths.
//!
//! Every key has a default; the effective (defaults materialized, values in
//! canonical base units) map is echoed into each report so a run can be
//! replayed exactly.

use std::collections::BTreeMap;
use std::fmt;

use crate::units::{format_quantity, parse_plain, parse_quantity};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// Value with a mandatory unit of the given base symbol.
    Quantity(&'static str),
    /// Voltage given either in volts or relative to full scale in dBFS.
    Amplitude,
    Plain,
    Integer,
    Bool,
    Choice(&'static [&'static str]),
    /// Comma-separated list of quantities (`None` for dimensionless) of fixed length.
    List(Option<&'static str>, usize),
}

impl Kind {
    /// Whether sweeps may vary this key.
    pub fn is_numeric(self) -> bool {
        matches!(self, Kind::Quantity(_) | Kind::Amplitude | Kind::Plain | Kind::Integer)
    }
}

pub struct KeySpec {
    pub path: &'static str,
    pub kind: Kind,
    pub default: &'static str,
}

const fn key(path: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec { path, kind, default }
}

pub const KEYS: &[KeySpec] = &[
    key("seed", Kind::Integer, "1"),
    key("stimulus.kind", Kind::Choice(&["sine", "ramp"]), "sine"),
    key("stimulus.amplitude", Kind::Amplitude, "-0.5dBFS"),
    key("stimulus.frequency", Kind::Quantity("Hz"), "100MHz"),
    key("stimulus.coherent", Kind::Bool, "true"),
    key("stimulus.samples", Kind::Integer, "4096"),
    key("stimulus.phase", Kind::Plain, "0"),
    key("stimulus.start", Kind::Quantity("V"), "-270mV"),
    key("stimulus.end", Kind::Quantity("V"), "270mV"),
    key("clock.fs", Kind::Quantity("Hz"), "1GHz"),
    key("clock.track_duty", Kind::Plain, "0.5"),
    key("clock.ck1_delay", Kind::Quantity("s"), "100ps"),
    key("clock.ck2_lead", Kind::Quantity("s"), "100ps"),
    key("frontend.full_scale", Kind::Quantity("V"), "500mV"),
    key("frontend.c_s", Kind::Quantity("F"), "500fF"),
    key("frontend.c_par", Kind::Quantity("F"), "50fF"),
    key("frontend.settling_tau", Kind::Quantity("s"), "0s"),
    key("frontend.kickback_amp", Kind::Quantity("V"), "0V"),
    key("frontend.kickback_mode", Kind::Choice(&["single_clock", "two_clock"]), "two_clock"),
    key("frontend.kickback_model", Kind::Choice(&["coherent", "random"]), "coherent"),
    key("comparator.v_ov", Kind::Quantity("V"), "450mV"),
    key("comparator.w_sum", Kind::Quantity("m"), "2um"),
    key("comparator.length", Kind::Quantity("m"), "60nm"),
    key("comparator.a_cc", Kind::Plain, "10"),
    key("comparator.c_ox", Kind::Quantity("F/m2"), "10fF/um2"),
    key("comparator.noise_sigma", Kind::Quantity("V"), "0V"),
    key("comparator.trims", Kind::List(Some("V"), 7), "0V,0V,0V,0V,0V,0V,0V"),
    key("metrics.linearity", Kind::Bool, "true"),
    key("metrics.spectrum", Kind::Bool, "true"),
    key("metrics.window", Kind::Choice(&["rectangular", "hann"]), "rectangular"),
    key("metrics.power", Kind::Quantity("W"), "700uW"),
    key("metrics.power_fractions", Kind::List(None, 4), "0.1,0.25,0.45,0.2"),
];

pub fn key_spec(path: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.path == path)
}

/// A parsed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    /// Amplitude given in dBFS.
    Dbfs(f64),
    Integer(u64),
    Bool(bool),
    Choice(String),
    List(Vec<f64>),
}

pub fn parse_value(spec: &KeySpec, text: &str) -> Result<Value, ConfigError> {
    let err = |m: String| ConfigError::new(spec.path, m);
    let text = text.trim();
    match spec.kind {
        Kind::Quantity(base) => parse_quantity(text, base).map(Value::Number).map_err(err),
        Kind::Amplitude => match text.strip_suffix("dBFS") {
            Some(db) => parse_plain(db).map(Value::Dbfs).map_err(err),
            None => parse_quantity(text, "V").map(Value::Number).map_err(err),
        },
        Kind::Plain => parse_plain(text).map(Value::Number).map_err(err),
        Kind::Integer => {
            text.parse::<u64>().map(Value::Integer).map_err(|_| err(format!("{text:?} is not a non-negative integer")))
        }
        Kind::Bool => match text {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(err(format!("{text:?} is not true/false"))),
        },
        Kind::Choice(options) => {
            if options.contains(&text) {
                Ok(Value::Choice(text.to_owned()))
            } else {
                Err(err(format!("{text:?} is not one of {options:?}")))
            }
        }
        Kind::List(unit, len) => {
            let items: Vec<&str> = text.split(',').map(str::trim).collect();
            if items.len() != len {
                return Err(err(format!("expected {len} comma-separated values, got {}", items.len())));
            }
            items
                .into_iter()
                .map(|item| match unit {
                    Some(base) => parse_quantity(item, base),
                    None => parse_plain(item),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Value::List)
                .map_err(err)
        }
    }
}

pub fn format_value(spec: &KeySpec, value: &Value) -> String {
    match (spec.kind, value) {
        (Kind::Quantity(base), Value::Number(v)) => format_quantity(*v, base),
        (Kind::Amplitude, Value::Number(v)) => format_quantity(*v, "V"),
        (Kind::Amplitude, Value::Dbfs(v)) => format!("{v}dBFS"),
        (_, Value::Number(v)) => format!("{v}"),
        (_, Value::Dbfs(v)) => format!("{v}dBFS"),
        (_, Value::Integer(v)) => v.to_string(),
        (_, Value::Bool(v)) => v.to_string(),
        (_, Value::Choice(v)) => v.clone(),
        (kind, Value::List(items)) => {
            let unit = match kind {
                Kind::List(Some(base), _) => base,
                _ => "",
            };
            items.iter().map(|v| format_quantity(*v, unit)).collect::<Vec<_>>().join(",")
        }
    }
}

/// Raw `key = value` pairs as written in a file.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("line {}", lineno + 1);
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(&loc, format!("expected `key = value`, got {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::new(loc, "empty key"));
        }
        if map.insert(k.to_owned(), v.to_owned()).is_some() {
            return Err(ConfigError::new(k, format!("duplicate key ({loc})")));
        }
    }
    Ok(map)
}

/// Typed, fully materialized configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<&'static str, Value>,
}

impl Config {
    /// Applies `overrides` on top of the defaults; unknown keys are errors.
    pub fn from_map(overrides: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        for k in overrides.keys() {
            if key_spec(k).is_none() {
                return Err(ConfigError::new(k.as_str(), "unknown key"));
            }
        }
        let mut values = BTreeMap::new();
        for spec in KEYS {
            let text = overrides.get(spec.path).map(String::as_str).unwrap_or(spec.default);
            values.insert(spec.path, parse_value(spec, text)?);
        }
        Ok(Self { values })
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_map(&parse_text(text)?)
    }

    /// Effective configuration in canonical form.
    pub fn echo(&self) -> BTreeMap<String, String> {
        KEYS.iter().map(|spec| (spec.path.to_owned(), format_value(spec, &self.values[spec.path]))).collect()
    }

    pub fn value(&self, path: &str) -> &Value {
        &self.values[path]
    }

    pub fn number(&self, path: &str) -> f64 {
        match self.value(path) {
            Value::Number(v) => *v,
            other => panic!("{path} is not a plain number: {other:?}"),
        }
    }

    pub fn integer(&self, path: &str) -> u64 {
        match self.value(path) {
            Value::Integer(v) => *v,
            other => panic!("{path} is not an integer: {other:?}"),
        }
    }

    pub fn flag(&self, path: &str) -> bool {
        match self.value(path) {
            Value::Bool(v) => *v,
            other => panic!("{path} is not a bool: {other:?}"),
        }
    }

    pub fn choice(&self, path: &str) -> &str {
        match self.value(path) {
            Value::Choice(v) => v,
            other => panic!("{path} is not a choice: {other:?}"),
        }
    }

    pub fn list(&self, path: &str) -> &[f64] {
        match self.value(path) {
            Value::List(v) => v,
            other => panic!("{path} is not a list: {other:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_materialize() {
        let c = Config::from_text("").unwrap();
        assert_eq!(c.number("clock.fs"), 1e9);
        assert_eq!(c.value("stimulus.amplitude"), &Value::Dbfs(-0.5));
        assert_eq!(c.list("comparator.trims").len(), 7);
        assert_eq!(c.echo().len(), KEYS.len());
    }

    #[test]
    fn echo_round_trips() {
        let text = "clock.fs = 2GHz\nfrontend.settling_tau = 108.57ps\nstimulus.amplitude = 200mV\n";
        let c = Config::from_text(text).unwrap();
        let again = Config::from_map(&c.echo()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.echo()["clock.fs"], "2e9Hz");
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\n  seed = 7   # trailing\n";
        assert_eq!(Config::from_text(text).unwrap().integer("seed"), 7);
    }

    #[test]
    fn errors_carry_paths() {
        let e = Config::from_text("clock.fs = 1e9").unwrap_err();
        assert_eq!(e.path, "clock.fs");
        assert!(e.message.contains("missing its unit"));
        let e = Config::from_text("clock.speed = 1GHz").unwrap_err();
        assert_eq!(e.path, "clock.speed");
        let e = Config::from_text("seed = 1\nseed = 2").unwrap_err();
        assert_eq!(e.path, "seed");
        let e = Config::from_text("just words").unwrap_err();
        assert_eq!(e.path, "line 1");
        let e = Config::from_text("comparator.trims = 0V,0V").unwrap_err();
        assert_eq!(e.path, "comparator.trims");
        let e = Config::from_text("frontend.kickback_mode = three_clock").unwrap_err();
        assert_eq!(e.path, "frontend.kickback_mode");
        let e = Config::from_text("clock.track_duty = 50%").unwrap_err();
        assert_eq!(e.path, "clock.track_duty");
    }

    #[test]
    fn numeric_keys() {
        assert!(key_spec("frontend.kickback_amp").unwrap().kind.is_numeric());
        assert!(!key_spec("frontend.kickback_mode").unwrap().kind.is_numeric());
        assert!(!key_spec("comparator.trims").unwrap().kind.is_numeric());
    }
}
