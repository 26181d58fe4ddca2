//! Effective cache-size gain from cooperative placement: when users
//! reach several caches, greedy placement spreads contents across them
//! and one cache of capacity M acts like a cache of gamma * M.

use cachelab::placement::{
    effective_cache_gain, greedy_place, objective, AccessGraph, PopularityModel,
};
use cachelab::popularity::ZipfPopularity;
use cachelab::rng::seeded_rng;
use rand::seq::index;

use crate::config::{parse_params, Sweep};
use crate::scenarios::{
    mean_stderr, replication_seeds, run_replications, RunFailure, ScenarioInfo,
};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "cooperative_gain",
    summary: "Effective cache-size gain of greedy cooperative placement on random bipartite \
              user-cache graphs, swept over the per-user coverage degree.",
    params: &[
        ("num_users", "number of users"),
        ("num_caches", "number of caches"),
        ("degree", "caches reachable per user; sweepable, 1..=num_caches"),
        ("catalog_n", "catalog size in contents"),
        ("alpha", "Zipf popularity exponent"),
        ("capacity", "per-cache capacity in contents"),
    ],
    sweep_axes: &["degree"],
    columns: &[
        "degree",
        "effective_gain",
        "gain_stderr",
        "greedy_objective",
        "objective_stderr",
    ],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    num_users: usize,
    num_caches: usize,
    degree: Sweep,
    catalog_n: usize,
    alpha: f64,
    capacity: usize,
}

fn check(params: &toml::Table) -> Result<(Params, Vec<usize>), Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    let degrees = p.degree.expand_usize("params.degree").unwrap_or_else(|e| {
        violations.push(e);
        Vec::new()
    });
    if p.num_users == 0 {
        violations.push("params.num_users: need at least one user".into());
    }
    if p.num_caches == 0 {
        violations.push("params.num_caches: need at least one cache".into());
    }
    for &d in &degrees {
        if d == 0 || d > p.num_caches {
            violations.push(format!(
                "params.degree: degree {d} must be in 1..={}",
                p.num_caches
            ));
        }
    }
    if p.capacity == 0 {
        violations.push("params.capacity: caches must hold at least one content".into());
    }
    if let Err(e) = ZipfPopularity::new(p.alpha, p.catalog_n.max(1)) {
        violations.push(format!("params.alpha: {e}"));
    }
    if p.catalog_n == 0 {
        violations.push("params.catalog_n: catalog must hold at least one content".into());
    }
    if violations.is_empty() {
        Ok((p, degrees))
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

fn run_one(p: &Params, probs: &[f64], degree: usize, seed: u64) -> Result<(f64, f64), String> {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::with_capacity(p.num_users * degree);
    for u in 0..p.num_users {
        for c in index::sample(&mut rng, p.num_caches, degree) {
            edges.push((u, c));
        }
    }
    let g = AccessGraph::new(
        p.num_users,
        p.num_caches,
        &edges,
        vec![p.capacity; p.num_caches],
        vec![1.0; p.num_users],
        PopularityModel::Shared(probs.to_vec()),
    )
    .map_err(|e| e.to_string())?;
    let obj = objective(&g, &greedy_place(&g)).map_err(|e| e.to_string())?;
    Ok((effective_cache_gain(&g), obj))
}

pub fn run(
    params: &toml::Table,
    base_seed: u64,
    replications: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>, RunFailure> {
    let (p, degrees) = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    let probs = ZipfPopularity::new(p.alpha, p.catalog_n)
        .map_err(|e| RunFailure { message: e.to_string(), partial_rows: Vec::new() })?
        .probabilities()
        .to_vec();
    let seeds = replication_seeds(base_seed, replications);
    let mut rows = Vec::with_capacity(degrees.len());
    for &d in &degrees {
        let reps = run_replications(pool, &seeds, |s| run_one(&p, &probs, d, s))
            .map_err(|message| RunFailure { message, partial_rows: rows.clone() })?;
        let (gain, g_se) = mean_stderr(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
        let (obj, o_se) = mean_stderr(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
        rows.push(vec![d as f64, gain, g_se, obj, o_se]);
    }
    Ok(rows)
}
