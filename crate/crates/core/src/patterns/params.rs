use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::PatternRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
}

/// Inclusive range of a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamRange {
    Float { min: f64, max: f64 },
    Int { min: i64, max: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(flatten)]
    pub range: ParamRange,
}

impl ParamSpec {
    pub const fn float(name: &'static str, min: f64, max: f64) -> Self {
        Self { name, range: ParamRange::Float { min, max } }
    }

    pub const fn int(name: &'static str, min: i64, max: i64) -> Self {
        Self { name, range: ParamRange::Int { min, max } }
    }

    pub(crate) fn sample(&self, rng: &mut PatternRng) -> ParamValue {
        match self.range {
            ParamRange::Float { min, max } => ParamValue::Float(rng.random_range(min..=max)),
            ParamRange::Int { min, max } => ParamValue::Int(rng.random_range(min..=max)),
        }
    }

    fn check(&self, value: ParamValue) -> std::result::Result<(), String> {
        match (self.range, value) {
            (ParamRange::Float { min, max }, ParamValue::Float(v)) => {
                if v.is_finite() && v >= min && v <= max {
                    Ok(())
                } else {
                    Err(format!("`{}` = {v} outside [{min}, {max}]", self.name))
                }
            }
            (ParamRange::Float { min, max }, ParamValue::Int(v)) => {
                let v = v as f64;
                if v >= min && v <= max {
                    Ok(())
                } else {
                    Err(format!("`{}` = {v} outside [{min}, {max}]", self.name))
                }
            }
            (ParamRange::Int { min, max }, ParamValue::Int(v)) => {
                if v >= min && v <= max {
                    Ok(())
                } else {
                    Err(format!("`{}` = {v} outside [{min}, {max}]", self.name))
                }
            }
            (ParamRange::Int { .. }, ParamValue::Float(v)) => {
                Err(format!("`{}` must be an integer, got {v}", self.name))
            }
        }
    }
}

/// Concrete parameter values keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, ParamValue>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.0.insert(name.to_owned(), value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.0.get(name).copied()
    }

    /// Float accessor; the instance must already be validated.
    pub fn f(&self, name: &str) -> f64 {
        match self.0.get(name) {
            Some(ParamValue::Float(v)) => *v,
            Some(ParamValue::Int(v)) => *v as f64,
            None => panic!("missing validated parameter `{name}`"),
        }
    }

    pub fn i(&self, name: &str) -> i64 {
        match self.0.get(name) {
            Some(ParamValue::Int(v)) => *v,
            Some(ParamValue::Float(v)) => *v as i64,
            None => panic!("missing validated parameter `{name}`"),
        }
    }

    pub fn validate(&self, pattern: &str, schema: &[ParamSpec]) -> Result<()> {
        let err = |reason: String| Error::Params { pattern: pattern.to_owned(), reason };
        for spec in schema {
            let v = self.get(spec.name).ok_or_else(|| err(format!("missing `{}`", spec.name)))?;
            spec.check(v).map_err(err)?;
        }
        if let Some(extra) = self.0.keys().find(|k| !schema.iter().any(|s| s.name == k.as_str())) {
            return Err(err(format!("unexpected parameter `{extra}`")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[ParamSpec] = &[ParamSpec::float("angle", -45.0, 45.0), ParamSpec::int("n", 1, 3)];

    #[test]
    fn validation_paths() {
        let ok = Params::new()
            .with("angle", ParamValue::Float(3.5))
            .with("n", ParamValue::Int(2));
        ok.validate("X", SCHEMA).unwrap();

        let out_of_range = ok.clone().with("angle", ParamValue::Float(46.0));
        assert!(out_of_range.validate("X", SCHEMA).is_err());
        let wrong_kind = ok.clone().with("n", ParamValue::Float(2.0));
        assert!(wrong_kind.validate("X", SCHEMA).is_err());
        let extra = ok.clone().with("zzz", ParamValue::Int(0));
        assert!(extra.validate("X", SCHEMA).is_err());
        let missing = Params::new().with("n", ParamValue::Int(1));
        assert!(missing.validate("X", SCHEMA).is_err());
    }

    #[test]
    fn json_keeps_value_kinds() {
        let p = Params::new()
            .with("a", ParamValue::Float(3.0))
            .with("b", ParamValue::Int(3))
            .with("c", ParamValue::Float(0.1 + 0.2));
        let s = serde_json::to_string(&p).unwrap();
        let back: Params = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
