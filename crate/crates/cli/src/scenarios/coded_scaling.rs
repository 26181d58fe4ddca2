//! Coded multicast delivery load versus the number of users, against
//! the unicast baseline that grows linearly. Closed-form, so the table
//! is exact and replications are irrelevant.

use cachelab::coded::resource_blocks;

use crate::config::{parse_params, Sweep};
use crate::scenarios::{RunFailure, ScenarioInfo};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "coded_scaling",
    summary: "Delivery resource blocks of coded caching vs. unicast as users grow at fixed \
              per-user cache fraction m.",
    params: &[
        ("m", "per-user cache fraction M/N in (0, 1]"),
        ("k", "number of users; sweepable, positive integers"),
        (
            "memory_share",
            "allow non-integer K*m via memory sharing (default true); when false every \
             swept K must make t = K*m an integer",
        ),
    ],
    sweep_axes: &["k"],
    columns: &["k", "coded_resource_blocks", "unicast_resource_blocks"],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    m: f64,
    k: Sweep,
    #[serde(default = "default_true")]
    memory_share: bool,
}

fn default_true() -> bool {
    true
}

fn check(params: &toml::Table) -> Result<(Params, Vec<usize>), Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    if !p.m.is_finite() || p.m <= 0.0 || p.m > 1.0 {
        violations.push(format!("params.m: cache fraction must be in (0, 1], got {}", p.m));
    }
    let ks = match p.k.expand_usize("params.k") {
        Ok(ks) => ks,
        Err(e) => {
            violations.push(e);
            Vec::new()
        }
    };
    for &k in &ks {
        if k == 0 {
            violations.push("params.k: user count must be at least 1".into());
        } else if !p.memory_share {
            let t = k as f64 * p.m;
            if (t - t.round()).abs() > 1e-9 {
                violations.push(format!(
                    "params.k: t = K*m = {t} is not an integer for K = {k}; enable \
                     memory_share or choose m so that K*m is integral"
                ));
            }
        }
    }
    if violations.is_empty() {
        Ok((p, ks))
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

pub fn run(params: &toml::Table) -> Result<Vec<Vec<f64>>, RunFailure> {
    let (p, ks) = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    Ok(ks
        .into_iter()
        .map(|k| vec![k as f64, resource_blocks(k, p.m), k as f64])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> toml::Table {
        text.parse().unwrap()
    }

    #[test]
    fn rows_match_the_closed_form_and_the_unicast_baseline() {
        let rows = run(&table("m = 0.3\nk = \"1:100:1\"")).ok().unwrap();
        assert_eq!(rows.len(), 100);
        for row in &rows {
            let k = row[0];
            assert_eq!(row[1], resource_blocks(k as usize, 0.3));
            assert_eq!(row[2], k);
        }
    }

    #[test]
    fn non_integer_t_without_memory_sharing_names_the_constraint() {
        let v = validate(&table("m = 0.3\nk = [10, 11]\nmemory_share = false"));
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("t = K*m"), "{}", v[0]);
        assert!(v[0].contains("K = 11"), "{}", v[0]);
        assert!(validate(&table("m = 0.3\nk = [10, 20]\nmemory_share = false")).is_empty());
    }

    #[test]
    fn fraction_outside_unit_interval_is_a_violation() {
        let v = validate(&table("m = 1.5\nk = 4"));
        assert!(v[0].starts_with("params.m:"));
    }
}
