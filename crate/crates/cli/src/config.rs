use pqlap::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::path::Path;

/// Every value that influenced a run, after merging flags over the config
/// file over defaults. Serialized into the output header so a run can be
/// reproduced from its own artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub grid: usize,
    pub rtol: f64,
    pub atol: f64,
    pub x_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_scan: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_beta: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    pub fn new(command: &'static str) -> Self {
        let cfg = pqlap::shooting::ShootConfig::default();
        RunConfig {
            command,
            r: None,
            p: None,
            q: None,
            alpha: None,
            beta: None,
            grid: pqlap::DEFAULT_NODES,
            rtol: cfg.rtol,
            atol: cfg.atol,
            x_max: cfg.x_max,
            s_lo: None,
            s_hi: None,
            n_scan: None,
            direction: None,
            method: None,
            w_beta: None,
            alpha_min: None,
            alpha_max: None,
            n_alpha: None,
            beta_min: None,
            beta_max: None,
            n_beta: None,
            seed: 0,
            threads: None,
            out: None,
        }
    }
}

/// Flag-over-file option lookup. Unknown file keys are ignored; values must
/// have the expected JSON type.
pub struct Resolver {
    file: Value,
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            None => Value::Null,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::domain(format!("cannot read config {}: {e}", p.display()))
                })?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Error::domain(format!("config {}: {e}", p.display())))?;
                if !v.is_object() {
                    return Err(Error::domain("config file must be a JSON object"));
                }
                v
            }
        };
        Ok(Resolver { file })
    }

    fn entry(&self, key: &str) -> Option<&Value> {
        match self.file.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => Some(v),
        }
    }

    pub fn f64_opt(&self, key: &str, flag: Option<f64>) -> Result<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entry(key)
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::domain(format!("config key {key} must be a number")))
            })
            .transpose()
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key, flag)?.unwrap_or(default))
    }

    pub fn f64_req(&self, key: &str, flag: Option<f64>) -> Result<f64> {
        self.f64_opt(key, flag)?
            .ok_or_else(|| Error::domain(format!("{key} is required (flag --{} or config)", key.replace('_', "-"))))
    }

    pub fn usize_opt(&self, key: &str, flag: Option<usize>) -> Result<Option<usize>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entry(key)
            .map(|v| {
                v.as_u64().map(|n| n as usize).ok_or_else(|| {
                    Error::domain(format!("config key {key} must be a nonnegative integer"))
                })
            })
            .transpose()
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key, flag)?.unwrap_or(default))
    }

    pub fn u64(&self, key: &str, flag: Option<u64>, default: u64) -> Result<u64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.entry(key) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| {
                Error::domain(format!("config key {key} must be a nonnegative integer"))
            }),
        }
    }

    pub fn string(&self, key: &str, flag: Option<String>, default: &str) -> Result<String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.entry(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::domain(format!("config key {key} must be a string"))),
        }
    }

    pub fn string_opt(&self, key: &str, flag: Option<String>) -> Result<Option<String>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entry(key)
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::domain(format!("config key {key} must be a string")))
            })
            .transpose()
    }
}
