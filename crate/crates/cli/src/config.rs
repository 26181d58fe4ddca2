//! Scenario config files: one TOML file describes one scenario run.
//!
//! ```toml
//! scenario = "coded_scaling"
//! replications = 1
//! base_seed = 7
//!
//! [params]
//! m = 0.3
//! k = "1:100:1"        # sweeps: scalar, list, or "start:stop:step"
//! ```

use serde::Deserialize;

/// Top-level config file shape, common to every scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub replications: u64,
    pub base_seed: u64,
    #[serde(default)]
    pub params: toml::Table,
}

impl RunConfig {
    /// Parses the file text; parse errors are validation failures and
    /// carry the offending key or span in the message.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config: {e}"))
    }

    /// Config-level checks that hold for every scenario.
    pub fn structural_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.replications == 0 {
            out.push("replications: must be at least 1, got 0".into());
        }
        out
    }
}

/// A sweepable numeric parameter: a single value, an explicit list, or
/// an inclusive `start:stop:step` range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Scalar(f64),
    List(Vec<f64>),
    Range(String),
}

impl Sweep {
    /// Expands to the concrete sweep values, in order.
    pub fn expand(&self, field: &str) -> Result<Vec<f64>, String> {
        let values = match self {
            Sweep::Scalar(x) => vec![*x],
            Sweep::List(xs) => xs.clone(),
            Sweep::Range(spec) => expand_range(spec).map_err(|e| format!("{field}: {e}"))?,
        };
        if values.is_empty() {
            return Err(format!("{field}: sweep expands to no values"));
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(format!("{field}: sweep value {v} is not finite"));
            }
        }
        Ok(values)
    }

    /// Expands and checks that every value is a nonnegative integer.
    pub fn expand_usize(&self, field: &str) -> Result<Vec<usize>, String> {
        self.expand(field)?
            .into_iter()
            .map(|v| {
                if v < 0.0 || v.fract().abs() > 1e-9 || v > u32::MAX as f64 {
                    Err(format!("{field}: expected a nonnegative integer, got {v}"))
                } else {
                    Ok(v.round() as usize)
                }
            })
            .collect()
    }
}

fn expand_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range must be start:stop:step, got {spec:?}"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !start.is_finite() || !stop.is_finite() || !step.is_finite() {
        return Err(format!("range bounds must be finite, got {spec:?}"));
    }
    if step <= 0.0 {
        return Err(format!("range step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("range stop {stop} is below start {start}"));
    }
    // inclusive of stop, tolerant of float drift at the last point
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Extracts a typed param struct from the `[params]` table, mapping
/// deserialization problems to a field-level message.
pub fn parse_params<T: serde::de::DeserializeOwned>(params: &toml::Table) -> Result<T, String> {
    toml::Value::Table(params.clone())
        .try_into()
        .map_err(|e| format!("params: {e}"))
}
