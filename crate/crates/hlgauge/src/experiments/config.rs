//! Experiment configuration: schema-versioned JSON with exact exponents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::duality::DualityError;
use crate::exponents::{Exponent, ExponentError, ExponentVector};
use crate::mform::MformError;
use crate::mixed::NormError;
use crate::numfmt::g17;
use crate::scalar::ScalarField;
use crate::schedules::Condition;
use crate::tensor::{validate_shape, TensorError, TensorIoError, MAX_ORDER};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("hypothesis violated: {}", format_conditions(.0))]
    Hypothesis(Vec<Condition>),
    #[error("config is missing required input `{0}`")]
    MissingInput(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("scalar field mismatch: config says {expected}, input is {got}")]
    FieldMismatch {
        expected: ScalarField,
        got: ScalarField,
    },
    #[error("report validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error(transparent)]
    Mform(#[from] MformError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    TensorIo(#[from] TensorIoError),
}

fn format_conditions(conditions: &[Condition]) -> String {
    let failed: Vec<&str> = conditions
        .iter()
        .filter(|c| !c.holds)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        "unspecified condition".to_string()
    } else {
        failed.join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    HlVerify,
    InclusionDemo,
    RegularityProbe,
    ExponentTable,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::HlVerify => "hl_verify",
            ExperimentKind::InclusionDemo => "inclusion_demo",
            ExperimentKind::RegularityProbe => "regularity_probe",
            ExperimentKind::ExponentTable => "exponent_table",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign tensors are the default: they historically extremize ratios of this
/// kind. Over complex scalars "sign" means independent uniform phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorFamily {
    #[default]
    Rademacher,
    Gaussian,
    RankOne,
    Custom,
}

impl TensorFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            TensorFamily::Rademacher => "rademacher",
            TensorFamily::Gaussian => "gaussian",
            TensorFamily::RankOne => "rank_one",
            TensorFamily::Custom => "custom",
        }
    }
}

impl std::str::FromStr for TensorFamily {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rademacher" => Ok(TensorFamily::Rademacher),
            "gaussian" => Ok(TensorFamily::Gaussian),
            "rank_one" => Ok(TensorFamily::RankOne),
            "custom" => Ok(TensorFamily::Custom),
            other => Err(ExperimentError::Config(format!(
                "unknown tensor family `{other}`"
            ))),
        }
    }
}

fn default_trials() -> usize {
    1
}
fn default_restarts() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub m: usize,
    #[serde(default)]
    pub dims: Vec<usize>,
    pub scalar_field: ScalarField,
    #[serde(default)]
    pub tensor_family: TensorFamily,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub r: Option<Exponent>,
    #[serde(default)]
    pub p: Option<ExponentVector>,
    #[serde(default)]
    pub q: Option<ExponentVector>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub tensor_path: Option<String>,
}

impl ExperimentConfig {
    /// A minimal valid config; callers fill in kind-specific inputs.
    pub fn new(kind: ExperimentKind, m: usize) -> Self {
        ExperimentConfig {
            schema: CONFIG_SCHEMA,
            kind,
            m,
            dims: Vec::new(),
            scalar_field: ScalarField::Real,
            tensor_family: TensorFamily::default(),
            trials: default_trials(),
            seed: 0,
            r: None,
            p: None,
            q: None,
            restarts: default_restarts(),
            tol: default_tol(),
            tensor_path: None,
        }
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig =
            serde_json::from_slice(bytes).map_err(|e| ExperimentError::Json(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::Config(msg));
        if self.schema != CONFIG_SCHEMA {
            return fail(format!(
                "unsupported schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            ));
        }
        if self.m == 0 {
            return fail("m must be at least 1".to_string());
        }
        if self.m > MAX_ORDER {
            return fail(format!("m = {} exceeds the order guard {MAX_ORDER}", self.m));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".to_string());
        }
        if self.restarts == 0 {
            return fail("restarts must be at least 1".to_string());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return fail("tol must be a finite positive number".to_string());
        }
        let needs_dims = !matches!(self.kind, ExperimentKind::ExponentTable);
        if needs_dims {
            if self.dims.len() != self.m {
                return fail(format!(
                    "dims has {} entries but m = {}",
                    self.dims.len(),
                    self.m
                ));
            }
            validate_shape(&self.dims)?;
        }
        for (name, v) in [("p", &self.p), ("q", &self.q)] {
            if let Some(v) = v {
                if v.len() != self.m {
                    return fail(format!(
                        "{name} has {} entries but m = {}",
                        v.len(),
                        self.m
                    ));
                }
            }
        }
        match self.kind {
            ExperimentKind::HlVerify | ExperimentKind::ExponentTable => {
                if self.p.is_none() {
                    return Err(ExperimentError::MissingInput("p"));
                }
            }
            ExperimentKind::InclusionDemo | ExperimentKind::RegularityProbe => {
                if self.r.is_none() {
                    return Err(ExperimentError::MissingInput("r"));
                }
                if self.p.is_none() {
                    return Err(ExperimentError::MissingInput("p"));
                }
                if self.q.is_none() {
                    return Err(ExperimentError::MissingInput("q"));
                }
            }
        }
        if self.tensor_family == TensorFamily::Custom && self.tensor_path.is_none() {
            return Err(ExperimentError::MissingInput("tensor_path"));
        }
        Ok(())
    }

    /// Canonical JSON echo: fixed key order, `%.17g` floats, explicit nulls.
    pub fn to_canonical_json(&self) -> String {
        let mut out = String::from("{\"schema\":");
        out.push_str(&self.schema.to_string());
        out.push_str(",\"kind\":\"");
        out.push_str(self.kind.as_str());
        out.push_str("\",\"m\":");
        out.push_str(&self.m.to_string());
        out.push_str(",\"dims\":[");
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&d.to_string());
        }
        out.push_str("],\"scalar_field\":\"");
        out.push_str(self.scalar_field.as_str());
        out.push_str("\",\"tensor_family\":\"");
        out.push_str(self.tensor_family.as_str());
        out.push_str("\",\"trials\":");
        out.push_str(&self.trials.to_string());
        out.push_str(",\"seed\":");
        out.push_str(&self.seed.to_string());
        out.push_str(",\"r\":");
        out.push_str(&json_exponent(&self.r));
        out.push_str(",\"p\":");
        out.push_str(&json_exponent_vector(&self.p));
        out.push_str(",\"q\":");
        out.push_str(&json_exponent_vector(&self.q));
        out.push_str(",\"restarts\":");
        out.push_str(&self.restarts.to_string());
        out.push_str(",\"tol\":");
        out.push_str(&g17(self.tol));
        out.push_str(",\"tensor_path\":");
        match &self.tensor_path {
            None => out.push_str("null"),
            Some(p) => {
                out.push_str(&serde_json::to_string(p).expect("plain string"));
            }
        }
        out.push('}');
        out
    }
}

fn json_exponent(e: &Option<Exponent>) -> String {
    match e {
        None => "null".to_string(),
        Some(e) => format!("\"{e}\""),
    }
}

fn json_exponent_vector(v: &Option<ExponentVector>) -> String {
    match v {
        None => "null".to_string(),
        Some(v) => {
            let parts: Vec<String> = v.iter().map(|e| format!("\"{e}\"")).collect();
            format!("[{}]", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{exp, expvec};

    fn hl_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::HlVerify, 3);
        c.dims = vec![4, 4, 4];
        c.p = Some(expvec("4,4,4"));
        c.trials = 10;
        c.seed = 7;
        c
    }

    #[test]
    fn valid_config_round_trips_through_json() {
        let c = hl_config();
        c.validate().unwrap();
        let s = c.to_canonical_json();
        let back = ExperimentConfig::from_json_bytes(s.as_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_canonical_json(), s);
    }

    #[test]
    fn canonical_json_is_stable() {
        let c = hl_config();
        assert_eq!(
            c.to_canonical_json(),
            "{\"schema\":1,\"kind\":\"hl_verify\",\"m\":3,\"dims\":[4,4,4],\
             \"scalar_field\":\"real\",\"tensor_family\":\"rademacher\",\
             \"trials\":10,\"seed\":7,\"r\":null,\"p\":[\"4\",\"4\",\"4\"],\
             \"q\":null,\"restarts\":20,\"tol\":1e-10,\"tensor_path\":null}"
        );
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = hl_config();
        c.schema = 2;
        assert!(matches!(c.validate(), Err(ExperimentError::Config(_))));

        let mut c = hl_config();
        c.trials = 0;
        assert!(c.validate().is_err());

        let mut c = hl_config();
        c.dims = vec![4, 4];
        assert!(c.validate().is_err());

        let mut c = hl_config();
        c.dims = vec![101, 101, 101];
        assert!(c.validate().is_err());

        let mut c = hl_config();
        c.p = None;
        assert!(matches!(c.validate(), Err(ExperimentError::MissingInput("p"))));

        let mut c = hl_config();
        c.tensor_family = TensorFamily::Custom;
        assert!(matches!(
            c.validate(),
            Err(ExperimentError::MissingInput("tensor_path"))
        ));

        let mut c = hl_config();
        c.kind = ExperimentKind::InclusionDemo;
        c.q = Some(expvec("4,4,4"));
        assert!(matches!(c.validate(), Err(ExperimentError::MissingInput("r"))));
        c.r = Some(exp("2"));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_fields_and_decimals_are_rejected() {
        let s = hl_config().to_canonical_json().replace("\"seed\":7", "\"sneed\":7");
        assert!(ExperimentConfig::from_json_bytes(s.as_bytes()).is_err());
        let s = hl_config()
            .to_canonical_json()
            .replace("[\"4\",\"4\",\"4\"]", "[\"4.0\",\"4\",\"4\"]");
        assert!(ExperimentConfig::from_json_bytes(s.as_bytes()).is_err());
    }
}
