//! Run configuration shared by the norm sweep and the verification suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FrakError, Result};
use crate::maximal::{ScaleWindow, Variant};
use crate::measure::{builtin, IfsSpec};

/// A generator (built-in name or path to an IFS JSON file) and its depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub name: String,
    pub depths: Vec<usize>,
}

impl GeneratorConfig {
    pub fn new(name: impl Into<String>, depths: impl Into<Vec<usize>>) -> Self {
        Self { name: name.into(), depths: depths.into() }
    }

    /// Resolves a built-in generator name, or else reads an IFS file.
    pub fn load(&self) -> Result<IfsSpec> {
        match builtin(&self.name) {
            Ok(ifs) => Ok(ifs),
            Err(FrakError::UnknownGenerator(_)) if Path::new(&self.name).is_file() => {
                IfsSpec::from_json_file(&self.name)
            }
            Err(e) => Err(e),
        }
    }
}

/// Sample sizes and parameters of the verification checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub exactness_cubes: usize,
    pub monotonicity_pairs: usize,
    /// `(k, u)` pairs for the monotonicity check.
    pub monotonicity: Vec<(usize, f64)>,
    pub poincare_alpha: f64,
    pub poincare_q: f64,
    pub poincare_cubes: usize,
    pub equivalence_alpha: f64,
    pub equivalence_us: Vec<f64>,
    pub chain_alphas: Vec<f64>,
    pub chain_p: f64,
    pub sobolev_k: usize,
    pub sobolev_p: f64,
    pub holder_k: usize,
    /// `(q, u)` exponent pairs.
    pub holder_pairs: Vec<(f64, f64)>,
    pub holder_trials: usize,
    /// Allowed factor between empirical constants at consecutive depths.
    pub stability_factor: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            exactness_cubes: 200,
            monotonicity_pairs: 500,
            monotonicity: vec![(1, 1.0), (2, 2.0)],
            poincare_alpha: 0.5,
            poincare_q: 2.0,
            poincare_cubes: 100,
            equivalence_alpha: 0.5,
            equivalence_us: vec![2.0, 3.0],
            chain_alphas: vec![0.7, 1.0, 1.3],
            chain_p: 2.0,
            sobolev_k: 1,
            sobolev_p: 1.0,
            holder_k: 2,
            holder_pairs: vec![(4.0, 1.0), (2.0, 1.0)],
            holder_trials: 200,
            stability_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generators: Vec<GeneratorConfig>,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    /// `"inf"` selects the supremum.
    #[serde(with = "extended_reals")]
    pub qs: Vec<f64>,
    pub us: Vec<f64>,
    /// `None` picks the sharp variant for non-integer and flat for integer alpha.
    pub variant: Option<Variant>,
    pub window: ScaleWindow,
    pub seed: u64,
    pub out: PathBuf,
    pub checks: CheckConfig,
    /// Budget overrides keyed by check name, e.g. `"monotonicity.exact"`.
    pub budgets: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            generators: vec![
                GeneratorConfig::new("cantor4", [3, 4, 5]),
                GeneratorConfig::new("interval", [8, 10]),
                GeneratorConfig::new("carpet", [2, 3]),
                GeneratorConfig::new("square", [3, 4]),
            ],
            alphas: vec![0.5, 1.0, 1.5],
            ps: vec![2.0],
            qs: vec![2.0, f64::INFINITY],
            us: vec![1.0, 2.0],
            variant: None,
            window: ScaleWindow::default(),
            seed: 20240611,
            out: PathBuf::from("out"),
            checks: CheckConfig::default(),
            budgets: BTreeMap::new(),
        }
    }
}

/// Lists of reals where infinity is written as the string `"inf"`.
mod extended_reals {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = values
            .iter()
            .map(|&v| if v.is_infinite() && v > 0.0 { Entry::Text("inf".into()) } else { Entry::Number(v) })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Entry::Number(v) => Ok(v),
                Entry::Text(t) if matches!(t.as_str(), "inf" | "infinity") => Ok(f64::INFINITY),
                Entry::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
            })
            .collect()
    }
}

fn positive_list(name: &str, values: &[f64], min: f64, allow_inf: bool) -> Result<()> {
    for &v in values {
        let ok = if v.is_infinite() { allow_inf && v > 0.0 } else { v >= min };
        if !ok || v.is_nan() {
            return Err(FrakError::InvalidParameter(format!("{name} value {v} out of range")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| FrakError::InvalidParameter(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FrakError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generators {
            if g.name.is_empty() {
                return Err(FrakError::InvalidParameter("empty generator name".into()));
            }
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a.is_finite()) {
                return Err(FrakError::NonpositiveAlpha(a));
            }
        }
        // the Calderón part of a norm report needs p > 1
        if let Some(p) = self.ps.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
            return Err(FrakError::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        positive_list("q", &self.qs, 1.0, true)?;
        positive_list("u", &self.us, 1.0, false)?;
        if !(self.window.resolution_multiple >= 1.0) {
            return Err(FrakError::InvalidParameter("resolution_multiple below 1".into()));
        }
        let c = &self.checks;
        for &(k, u) in &c.monotonicity {
            if k == 0 || !(u >= 1.0 && u.is_finite()) {
                return Err(FrakError::InvalidParameter(format!("monotonicity pair ({k}, {u})")));
            }
        }
        for a in [c.poincare_alpha, c.equivalence_alpha].iter().chain(&c.chain_alphas) {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(FrakError::NonpositiveAlpha(*a));
            }
        }
        positive_list("poincare_q", &[c.poincare_q], 1.0, false)?;
        positive_list("equivalence u", &c.equivalence_us, 1.0, false)?;
        if !(c.chain_p > 1.0 && c.chain_p.is_finite()) {
            return Err(FrakError::InvalidParameter(format!("chain_p = {} must exceed 1", c.chain_p)));
        }
        positive_list("sobolev_p", &[c.sobolev_p], 1.0, false)?;
        if c.sobolev_k == 0 {
            return Err(FrakError::InvalidParameter("sobolev_k must be positive".into()));
        }
        for &(q, u) in &c.holder_pairs {
            positive_list("holder exponent", &[q, u], 1.0, false)?;
        }
        if !(c.stability_factor >= 1.0) {
            return Err(FrakError::InvalidParameter("stability_factor below 1".into()));
        }
        for (name, &b) in &self.budgets {
            if b.is_nan() || b < 0.0 {
                return Err(FrakError::InvalidParameter(format!("budget {name} = {b}")));
            }
        }
        Ok(())
    }
}
