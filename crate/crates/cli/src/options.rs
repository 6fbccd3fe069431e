//! Resolved run options: flags first, then a JSON config file on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Parses `key=value` tokens into a map, rejecting unknown keys.
pub fn key_values(tokens: &[String], allowed: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for t in tokens {
        let (k, v) = t.split_once('=').ok_or_else(|| anyhow!("expected key=value, got {t:?}"))?;
        if !allowed.contains(&k) {
            bail!("unknown key {k:?} (expected one of {})", allowed.join(", "));
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| anyhow!("bad value for {key}: {v:?}")))
        .transpose()
}

fn need<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    num(map, key)?.ok_or_else(|| anyhow!("missing {key}="))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GrassmannianArgs {
    pub q: usize,
    pub n: usize,
    pub d: i32,
}

impl GrassmannianArgs {
    pub fn parse(tokens: &[String]) -> Result<Self> {
        let m = key_values(tokens, &["q", "n", "d"])?;
        Ok(GrassmannianArgs { q: need(&m, "q")?, n: need(&m, "n")?, d: need(&m, "d")? })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PosetifyArgs {
    pub facets: PathBuf,
    pub q: usize,
}

impl PosetifyArgs {
    /// `FILE q=N`
    pub fn parse(tokens: &[String]) -> Result<Self> {
        let (file, rest) = tokens.split_first().ok_or_else(|| anyhow!("--posetify needs a facet file"))?;
        let m = key_values(rest, &["q"])?;
        Ok(PosetifyArgs { facets: PathBuf::from(file), q: need(&m, "q")? })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct OneSided {
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct TwoSided {
    pub nu: f64,
    pub lambda: f64,
}

impl TwoSided {
    /// ν defaults to −1 when only λ is given.
    pub fn parse(tokens: &[String]) -> Result<Self> {
        let m = key_values(tokens, &["nu", "lambda"])?;
        Ok(TwoSided { nu: num(&m, "nu")?.unwrap_or(-1.0), lambda: need(&m, "lambda")? })
    }
}

impl OneSided {
    pub fn parse(tokens: &[String]) -> Result<Self> {
        let m = key_values(tokens, &["lambda"])?;
        Ok(OneSided { lambda: need(&m, "lambda")? })
    }
}

/// `auto`, `regular`, or `lambda=x` (fitted constants).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum EposetMode {
    Auto,
    Regular,
    Lambda(f64),
}

impl EposetMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(EposetMode::Auto),
            "regular" => Ok(EposetMode::Regular),
            _ => {
                let m = key_values(&[s.to_string()], &["lambda"])?;
                Ok(EposetMode::Lambda(need(&m, "lambda")?))
            }
        }
    }
}

/// Every flag of every command. A config file may set any of these keys.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub poset: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub grassmannian: Option<GrassmannianArgs>,
    pub facets: Option<PathBuf>,
    pub posetify: Option<PosetifyArgs>,
    pub jitter: Option<f64>,
    pub one_sided: Option<OneSided>,
    pub two_sided: Option<TwoSided>,
    pub eposet: Option<EposetMode>,
    pub only: Option<Vec<String>>,
    pub alphas: Option<Vec<f64>>,
    pub level: Option<i32>,
    pub dump: Option<String>,
}

impl Options {
    /// Keys present in the config object replace the flag values.
    pub fn with_config(self, path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let over: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let serde_json::Value::Object(over) = over else {
            bail!("config {} is not a JSON object", path.display());
        };
        let mut base = serde_json::to_value(&self)?;
        let obj = base.as_object_mut().expect("options serialize to an object");
        for (k, v) in over {
            obj.insert(k, v);
        }
        serde_json::from_value(base).with_context(|| format!("config {}", path.display()))
    }

    pub fn check(&self) -> Result<()> {
        if let Some(t) = self.trials {
            if t == 0 {
                bail!("trials must be positive");
            }
        }
        if let Some(j) = self.jitter {
            if !(j > 0.0 && j < 1.0) {
                bail!("jitter must lie in (0, 1)");
            }
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        Ok(())
    }
}
