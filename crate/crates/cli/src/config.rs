use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::CliError;

/// Version of the report layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: &str = "ncconc-report/1";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A single typed parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    fn to_json(&self) -> Value {
        match self {
            ParamValue::Bool(b) => Value::Bool(*b),
            ParamValue::Int(i) => Value::from(*i),
            ParamValue::Real(x) => Value::from(*x),
            ParamValue::Text(s) => Value::String(s.clone()),
        }
    }

    fn from_json(key: &str, v: &Value) -> Result<Option<Self>, CliError> {
        Ok(Some(match v {
            Value::Null => return Ok(None),
            Value::Bool(b) => ParamValue::Bool(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => ParamValue::Int(i),
                None => ParamValue::Real(n.as_f64().unwrap_or(f64::NAN)),
            },
            Value::String(s) => ParamValue::Text(s.clone()),
            _ => return Err(CliError::Usage(format!("parameter {key} must be a scalar"))),
        }))
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

fn stdout_path() -> String {
    "-".into()
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Two-word subcommand such as `"mc dominance"`.
    pub subcommand: String,
    #[serde(default)]
    pub params: Params,
    pub seed: u64,
    /// Output file; `-` is standard output.
    #[serde(default = "stdout_path")]
    pub out_path: String,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn new(subcommand: &str, params: Params, seed: u64) -> Self {
        Self { subcommand: subcommand.into(), params, seed, out_path: stdout_path(), format: Format::Json }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub artifact_version: String,
    /// The config with every default filled in.
    pub config: RunConfig,
    pub records: Vec<Value>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema_version: String,
    pub artifact_version: String,
    pub config: RunConfig,
    pub error: ErrorRecord,
}

impl ErrorReport {
    pub fn new(config: RunConfig, err: &CliError) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            artifact_version: ARTIFACT_VERSION.into(),
            config,
            error: ErrorRecord { kind: err.kind().into(), message: err.to_string() },
        }
    }
}

/// Flattens a serializable argument struct into a parameter map, dropping unset options.
pub fn to_params<T: Serialize>(args: &T) -> Result<Params, CliError> {
    let Value::Object(map) = serde_json::to_value(args).map_err(|e| CliError::Usage(e.to_string()))? else {
        return Err(CliError::Usage("arguments must form a key/value map".into()));
    };
    let mut out = Params::new();
    for (k, v) in &map {
        if let Some(p) = ParamValue::from_json(k, v)? {
            out.insert(k.clone(), p);
        }
    }
    Ok(out)
}

/// Reads a parameter map into a typed argument struct; unknown keys, missing
/// keys and type mismatches are usage errors.
pub fn from_params<T: DeserializeOwned>(params: &Params) -> Result<T, CliError> {
    let map = params.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))
}

/// A comma-separated list of reals, kept as one flat string parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let values = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad grid entry {p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("grid {s:?} has non-finite entries"));
        }
        Ok(Grid(values))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            List(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(Grid(vec![v])),
            Raw::List(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Grid {
    /// Entries as indices; fails on negative or fractional values.
    pub fn indices(&self) -> Result<Vec<usize>, CliError> {
        self.0
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Usage(format!("{v} is not an index")))
                }
            })
            .collect()
    }
}

/// Parses a kebab-case enum value through its serde representation.
pub fn parse_kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|e| e.to_string())
}
