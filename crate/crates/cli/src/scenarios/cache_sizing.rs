//! Normalized cache-to-catalog size ratios over a grid of cache and
//! catalog byte sizes. Deterministic arithmetic; one row per pair.

use cachelab::popularity::normalized_cache_ratio;

use crate::config::{parse_params, Sweep};
use crate::scenarios::{RunFailure, ScenarioInfo};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "cache_sizing",
    summary: "Cache size as a fraction of catalog size (capped at 1) for every cache x \
              catalog pair; quantifies how little of a modern catalog an edge cache holds.",
    params: &[
        ("cache_bytes", "cache sizes in bytes; sweepable"),
        ("catalog_bytes", "catalog sizes in bytes; sweepable"),
    ],
    sweep_axes: &["cache_bytes", "catalog_bytes"],
    columns: &["cache_bytes", "catalog_bytes", "normalized_ratio"],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    cache_bytes: Sweep,
    catalog_bytes: Sweep,
}

fn check(params: &toml::Table) -> Result<(Vec<f64>, Vec<f64>), Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    let caches = p.cache_bytes.expand("params.cache_bytes").unwrap_or_else(|e| {
        violations.push(e);
        Vec::new()
    });
    let catalogs = p.catalog_bytes.expand("params.catalog_bytes").unwrap_or_else(|e| {
        violations.push(e);
        Vec::new()
    });
    for &c in caches.iter().chain(&catalogs) {
        if let Err(e) = normalized_cache_ratio(c, 1.0) {
            violations.push(format!("params: {e}"));
        }
    }
    if violations.is_empty() {
        Ok((caches, catalogs))
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

pub fn run(params: &toml::Table) -> Result<Vec<Vec<f64>>, RunFailure> {
    let (caches, catalogs) = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    let mut rows = Vec::with_capacity(caches.len() * catalogs.len());
    for &cache in &caches {
        for &catalog in &catalogs {
            let ratio = normalized_cache_ratio(cache, catalog).map_err(|e| RunFailure {
                message: e.to_string(),
                partial_rows: rows.clone(),
            })?;
            rows.push(vec![cache, catalog, ratio]);
        }
    }
    Ok(rows)
}
