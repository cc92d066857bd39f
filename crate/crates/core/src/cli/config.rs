//! Scenario configuration, parsed from JSON with field-path error messages.

use serde::Serialize;
use serde_json::Value;

use crate::ale::{AleParams, SubtorusAction};
use crate::error::{LmcfError, Result};
use crate::flat::{FlatModel, ShrinkerModel, TranslatorModel};
use crate::flow::IntegratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    Shrinker {
        lambda: Vec<i64>,
    },
    Translator {
        lambda: Vec<i64>,
    },
    Ale {
        n: usize,
        alpha: Vec<f64>,
        h0: f64,
        a: i64,
        b: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Jsonl,
    Csv,
    Summary,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub c0: f64,
    pub horizon: Horizon,
    pub integrator: IntegratorConfig,
    /// Seeds on the initial level (per sheet for ALE models).
    pub seeds: usize,
    pub outputs: Vec<OutputKind>,
    pub seed: u64,
    /// Offset added to the character when building `χ`. Only for negative
    /// controls: any nonzero value breaks the drift law.
    pub a_h_offset: f64,
}

fn err(path: &str, message: impl Into<String>) -> LmcfError {
    LmcfError::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn reject_unknown(
    map: &serde_json::Map<String, Value>,
    prefix: &str,
    known: &[&str],
) -> Result<()> {
    for k in map.keys() {
        if !known.contains(&k.as_str()) {
            return Err(err(&join(prefix, k), "unknown field"));
        }
    }
    Ok(())
}

fn required<'a>(
    map: &'a serde_json::Map<String, Value>,
    prefix: &str,
    key: &str,
) -> Result<&'a Value> {
    map.get(key)
        .ok_or_else(|| err(&join(prefix, key), "missing field"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| err(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(err(path, "must be finite"));
    }
    Ok(x)
}

fn as_i64(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| err(path, "expected an integer"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| err(path, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn weights(
    map: &serde_json::Map<String, Value>,
    prefix: &str,
    allow_zero: bool,
) -> Result<Vec<i64>> {
    let path = join(prefix, "lambda");
    let arr = array(required(map, prefix, "lambda")?, &path)?;
    if arr.is_empty() {
        return Err(err(&path, "needs at least one weight"));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let p = format!("{path}[{i}]");
            let l = as_i64(v, &p)?;
            if l == 0 && !allow_zero {
                return Err(err(&p, "weights must be nonzero"));
            }
            Ok(l)
        })
        .collect()
}

fn parse_model(v: &Value) -> Result<ModelConfig> {
    let map = object(v, "model")?;
    let kind = required(map, "model", "type")?
        .as_str()
        .ok_or_else(|| err("model.type", "expected a string"))?;
    match kind {
        "shrinker" => {
            reject_unknown(map, "model", &["type", "lambda"])?;
            Ok(ModelConfig::Shrinker {
                lambda: weights(map, "model", false)?,
            })
        }
        "translator" => {
            reject_unknown(map, "model", &["type", "lambda"])?;
            Ok(ModelConfig::Translator {
                lambda: weights(map, "model", true)?,
            })
        }
        "ale" => {
            reject_unknown(map, "model", &["type", "n", "alpha", "h0", "a", "b"])?;
            let n = as_usize(required(map, "model", "n")?, "model.n")?;
            if n == 0 {
                return Err(err("model.n", "must be at least 1"));
            }
            let arr = array(required(map, "model", "alpha")?, "model.alpha")?;
            let mut alpha = Vec::with_capacity(n);
            for i in 0..n {
                let p = format!("model.alpha[{i}]");
                let a = as_f64(
                    arr.get(i).ok_or_else(|| {
                        err(&p, format!("missing entry: n = {n} needs {n} values"))
                    })?,
                    &p,
                )?;
                if !(a > 0.0) {
                    return Err(err(&p, "must be positive"));
                }
                alpha.push(a);
            }
            if arr.len() > n {
                return Err(err(
                    &format!("model.alpha[{n}]"),
                    format!("unexpected entry: n = {n}"),
                ));
            }
            let h0 = match map.get("h0") {
                Some(v) => as_f64(v, "model.h0")?,
                None => 0.0,
            };
            let a = as_i64(required(map, "model", "a")?, "model.a")?;
            let b = as_i64(required(map, "model", "b")?, "model.b")?;
            SubtorusAction::new(a, b, n).map_err(|e| err("model.b", e.to_string()))?;
            Ok(ModelConfig::Ale { n, alpha, h0, a, b })
        }
        other => Err(err("model.type", format!("unknown model '{other}'"))),
    }
}

fn parse_integrator(v: Option<&Value>) -> Result<IntegratorConfig> {
    let mut cfg = IntegratorConfig::default();
    let Some(v) = v else { return Ok(cfg) };
    let map = object(v, "integrator")?;
    reject_unknown(
        map,
        "integrator",
        &[
            "step",
            "projection_tol",
            "max_newton",
            "stop_margin",
            "approach_fraction",
            "project",
        ],
    )?;
    if let Some(x) = map.get("step") {
        cfg.step = as_f64(x, "integrator.step")?;
    }
    if let Some(x) = map.get("projection_tol") {
        cfg.projection_tol = as_f64(x, "integrator.projection_tol")?;
    }
    if let Some(x) = map.get("max_newton") {
        cfg.max_newton = as_usize(x, "integrator.max_newton")?;
    }
    if let Some(x) = map.get("stop_margin") {
        cfg.stop_margin = as_f64(x, "integrator.stop_margin")?;
    }
    if let Some(x) = map.get("approach_fraction") {
        cfg.approach_fraction = as_f64(x, "integrator.approach_fraction")?;
    }
    if let Some(x) = map.get("project") {
        cfg.project = x
            .as_bool()
            .ok_or_else(|| err("integrator.project", "expected a boolean"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn from_value(v: &Value) -> Result<Self> {
        let map = object(v, "")?;
        reject_unknown(
            map,
            "",
            &[
                "model",
                "c0",
                "horizon",
                "integrator",
                "seeds",
                "outputs",
                "seed",
                "a_h_offset",
            ],
        )?;
        let model = parse_model(required(map, "", "model")?)?;
        let c0 = as_f64(required(map, "", "c0")?, "c0")?;
        let horizon = match map.get("horizon") {
            None => Horizon::Auto,
            Some(Value::String(s)) if s == "auto" => Horizon::Auto,
            Some(x) => {
                let t = as_f64(x, "horizon")
                    .map_err(|_| err("horizon", "expected a positive number or \"auto\""))?;
                if !(t > 0.0) {
                    return Err(err("horizon", "must be positive"));
                }
                Horizon::Fixed(t)
            }
        };
        let integrator = parse_integrator(map.get("integrator"))?;
        let seeds = match map.get("seeds") {
            Some(x) => as_usize(x, "seeds")?,
            None => 16,
        };
        if seeds < 2 {
            return Err(err("seeds", "need at least 2 seeds"));
        }
        let outputs = match map.get("outputs") {
            None => vec![OutputKind::Jsonl, OutputKind::Csv, OutputKind::Summary],
            Some(x) => array(x, "outputs")?
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let p = format!("outputs[{i}]");
                    match o.as_str() {
                        Some("jsonl") => Ok(OutputKind::Jsonl),
                        Some("csv") => Ok(OutputKind::Csv),
                        Some("summary") => Ok(OutputKind::Summary),
                        Some("plot") => Ok(OutputKind::Plot),
                        _ => Err(err(&p, "expected one of jsonl, csv, summary, plot")),
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        };
        for (i, o) in outputs.iter().enumerate() {
            if outputs[..i].contains(o) {
                return Err(err(&format!("outputs[{i}]"), "duplicate artifact request"));
            }
        }
        let seed = match map.get("seed") {
            Some(x) => x
                .as_u64()
                .ok_or_else(|| err("seed", "expected a non-negative integer"))?,
            None => 0,
        };
        let a_h_offset = match map.get("a_h_offset") {
            Some(x) => as_f64(x, "a_h_offset")?,
            None => 0.0,
        };
        let cfg = Self {
            model,
            c0,
            horizon,
            integrator,
            seeds,
            outputs,
            seed,
            a_h_offset,
        };
        cfg.check_model()?;
        Ok(cfg)
    }

    /// Parses a single scenario or an array of scenarios.
    pub fn parse_document(text: &str) -> Result<Vec<Self>> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
        match &v {
            Value::Array(items) => {
                if items.is_empty() {
                    return Err(err("", "empty scenario list"));
                }
                items
                    .iter()
                    .enumerate()
                    .map(|(i, item)| {
                        Self::from_value(item).map_err(|e| match e {
                            LmcfError::Config { path, message } => {
                                let p = if path.is_empty() {
                                    format!("[{i}]")
                                } else {
                                    format!("[{i}].{path}")
                                };
                                LmcfError::Config { path: p, message }
                            }
                            other => other,
                        })
                    })
                    .collect()
            }
            _ => Ok(vec![Self::from_value(&v)?]),
        }
    }

    fn check_model(&self) -> Result<()> {
        match &self.model {
            ModelConfig::Shrinker { lambda } => {
                ShrinkerModel::new(lambda.clone())
                    .map_err(|e| err("model.lambda", e.to_string()))?;
            }
            ModelConfig::Translator { lambda } => {
                TranslatorModel::new(lambda.clone())
                    .map_err(|e| err("model.lambda", e.to_string()))?;
            }
            ModelConfig::Ale { .. } => {
                self.ale()?;
            }
        }
        Ok(())
    }

    pub fn flat_model(&self) -> Option<FlatModel> {
        match &self.model {
            ModelConfig::Shrinker { lambda } => Some(FlatModel::Shrinker(
                ShrinkerModel::new(lambda.clone()).ok()?,
            )),
            ModelConfig::Translator { lambda } => Some(FlatModel::Translator(
                TranslatorModel::new(lambda.clone()).ok()?,
            )),
            ModelConfig::Ale { .. } => None,
        }
    }

    /// Parameters and action of an ALE model.
    pub fn ale(&self) -> Result<(AleParams, SubtorusAction)> {
        match &self.model {
            ModelConfig::Ale { n, alpha, h0, a, b } => {
                let params = AleParams::new(alpha.clone(), *h0)
                    .map_err(|e| err("model.alpha", e.to_string()))?;
                let action =
                    SubtorusAction::new(*a, *b, *n).map_err(|e| err("model.b", e.to_string()))?;
                Ok((params, action))
            }
            _ => Err(err("model.type", "this command needs an ale model")),
        }
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_alpha_names_entry() {
        let v = serde_json::json!({"model": {"type": "ale", "n": 2, "alpha": [1.0], "a": 1, "b": 1}, "c0": 2.0});
        match ScenarioConfig::from_value(&v) {
            Err(LmcfError::Config { path, .. }) => assert_eq!(path, "model.alpha[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let v = serde_json::json!({"model": {"type": "shrinker", "lambda": [1, 1]}, "c0": 1.0});
        let c = ScenarioConfig::from_value(&v).unwrap();
        assert_eq!(c.horizon, Horizon::Auto);
        assert_eq!(c.integrator, IntegratorConfig::default());
    }
}
