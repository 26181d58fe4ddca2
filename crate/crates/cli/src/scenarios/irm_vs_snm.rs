//! How badly a static-popularity (IRM) model mispredicts cache
//! performance on ephemeral-content traffic, versus a prediction that
//! knows the shot-noise structure.
//!
//! Ground truth is SNM traffic. For each lifespan we measure the LRU
//! hit probability, then compare two predictions:
//!  - IRM fit: top-M mass of the whole-trace empirical frequencies,
//!    i.e. the best static model of the same trace;
//!  - SNM-aware: the cold-miss bound 1 - distinct/requests, which a
//!    generative model with known pulses yields for a cache that holds
//!    the live set.

use cachelab::cache::{default_warmup, process_trace, CacheState};
use cachelab::traffic::{generate_snm, SnmClass, SnmConfig};

use crate::config::{parse_params, Sweep};
use crate::scenarios::{
    mean_stderr, replication_seeds, run_replications, RunFailure, ScenarioInfo, SECONDS_PER_DAY,
};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "irm_vs_snm",
    summary: "Measured LRU hit probability on shot-noise traffic vs. the best-fit IRM \
              prediction and an SNM-aware prediction, swept over content lifespan.",
    params: &[
        ("arrival_per_day", "new contents per day"),
        ("lifespan_days", "content lifespan in days; sweepable"),
        ("volume", "expected requests per content over its lifespan"),
        ("horizon_days", "trace length in days"),
        ("cache_m", "cache capacity in contents"),
        ("correlated", "couple volume to lifespan via a common multiplier (default false)"),
    ],
    sweep_axes: &["lifespan_days"],
    columns: &[
        "lifespan_days",
        "measured_lru_hit",
        "measured_stderr",
        "irm_predicted_hit",
        "irm_predicted_stderr",
        "snm_predicted_hit",
        "snm_predicted_stderr",
    ],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    arrival_per_day: f64,
    lifespan_days: Sweep,
    volume: f64,
    horizon_days: f64,
    cache_m: usize,
    #[serde(default)]
    correlated: bool,
}

fn snm_config(p: &Params, lifespan_days: f64, seed: u64) -> SnmConfig {
    SnmConfig {
        content_arrival_rate: p.arrival_per_day / SECONDS_PER_DAY,
        classes: vec![SnmClass {
            lifespan: lifespan_days * SECONDS_PER_DAY,
            total_volume: p.volume,
            probability: 1.0,
        }],
        volume_lifespan_correlation: p.correlated,
        horizon: p.horizon_days * SECONDS_PER_DAY,
        seed,
    }
}

fn check(params: &toml::Table) -> Result<(Params, Vec<f64>), Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    let lifespans = p.lifespan_days.expand("params.lifespan_days").unwrap_or_else(|e| {
        violations.push(e);
        Vec::new()
    });
    if p.cache_m == 0 {
        violations.push("params.cache_m: cache must hold at least one content".into());
    }
    for &l in &lifespans {
        if let Err(e) = snm_config(&p, l, 0).validate() {
            violations.push(format!("params: {e}"));
        }
    }
    if violations.is_empty() {
        Ok((p, lifespans))
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

/// One replication at one lifespan: (measured, irm_pred, snm_pred).
fn run_one(p: &Params, lifespan_days: f64, seed: u64) -> Result<(f64, f64, f64), String> {
    let cfg = snm_config(p, lifespan_days, seed);
    let (contents, stream) = generate_snm(&cfg).map_err(|e| e.to_string())?;
    let events: Vec<_> = stream.collect();
    if contents.is_empty() || events.is_empty() {
        return Err(format!(
            "seed {seed}: trace realized no requests; raise arrival_per_day or volume"
        ));
    }
    let n = contents.len();

    let mut cache = CacheState::lru(p.cache_m);
    let warmup = default_warmup(events.len(), p.cache_m);
    let stats = process_trace(&mut cache, events.iter().cloned(), warmup, n)
        .map_err(|e| e.to_string())?;

    let mut counts = vec![0u64; n];
    for e in &events {
        counts[e.content_id] += 1;
    }
    let total: u64 = counts.iter().sum();
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let top: u64 = counts.iter().take(p.cache_m).sum();

    let irm_pred = top as f64 / total as f64;
    let snm_pred = 1.0 - distinct as f64 / total as f64;
    Ok((stats.hit_probability, irm_pred, snm_pred))
}

pub fn run(
    params: &toml::Table,
    base_seed: u64,
    replications: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>, RunFailure> {
    let (p, lifespans) = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    let seeds = replication_seeds(base_seed, replications);
    let mut rows = Vec::with_capacity(lifespans.len());
    for &l in &lifespans {
        let reps = run_replications(pool, &seeds, |s| run_one(&p, l, s)).map_err(|message| {
            RunFailure { message, partial_rows: rows.clone() }
        })?;
        let (measured, m_se) = mean_stderr(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
        let (irm, i_se) = mean_stderr(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
        let (snm, s_se) = mean_stderr(&reps.iter().map(|r| r.2).collect::<Vec<_>>());
        rows.push(vec![l, measured, m_se, irm, i_se, snm, s_se]);
    }
    Ok(rows)
}
