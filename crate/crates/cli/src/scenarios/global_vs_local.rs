//! Global versus local popularity learning. One shot-noise stream is
//! split uniformly over L locations; a static cache at location 0 is
//! refreshed every window from either the global estimate (all
//! locations pooled) or the local one. Sparse per-location traffic
//! starves the local estimator, so the global curve dominates.

use std::collections::HashSet;

use cachelab::cache::static_place;
use cachelab::estimation::{windowed_estimate, Level};
use cachelab::rng::substream;
use cachelab::traffic::{generate_snm, split_stream, Assignment, SnmClass, SnmConfig};

use crate::config::parse_params;
use crate::scenarios::{
    mean_stderr, replication_seeds, run_replications, RunFailure, ScenarioInfo, SECONDS_PER_DAY,
};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "global_vs_local",
    summary: "Hit probability over time at one location when its static cache is refreshed \
              from pooled global estimates vs. location-local estimates of the same split \
              shot-noise stream.",
    params: &[
        ("locations", "number of cache locations L sharing the stream"),
        ("arrival_per_day", "new contents per day (global)"),
        ("lifespan_days", "content lifespan in days"),
        ("volume", "expected requests per content; per-location per-content rate is \
                    volume / lifespan_days / locations"),
        ("horizon_days", "trace length in days"),
        ("window_days", "estimation window and refresh interval in days"),
        ("cache_m", "cache capacity in contents"),
    ],
    sweep_axes: &["window_index (implicit: one row per window)"],
    columns: &[
        "window_index",
        "hit_global",
        "hit_global_stderr",
        "hit_local",
        "hit_local_stderr",
    ],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    locations: usize,
    arrival_per_day: f64,
    lifespan_days: f64,
    volume: f64,
    horizon_days: f64,
    window_days: f64,
    cache_m: usize,
}

fn snm_config(p: &Params, seed: u64) -> SnmConfig {
    SnmConfig {
        content_arrival_rate: p.arrival_per_day / SECONDS_PER_DAY,
        classes: vec![SnmClass {
            lifespan: p.lifespan_days * SECONDS_PER_DAY,
            total_volume: p.volume,
            probability: 1.0,
        }],
        volume_lifespan_correlation: false,
        horizon: p.horizon_days * SECONDS_PER_DAY,
        seed,
    }
}

fn check(params: &toml::Table) -> Result<Params, Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    if p.locations < 2 {
        violations.push(format!(
            "params.locations: need at least 2 locations to compare, got {}",
            p.locations
        ));
    }
    if p.cache_m == 0 {
        violations.push("params.cache_m: cache must hold at least one content".into());
    }
    if !p.window_days.is_finite() || p.window_days <= 0.0 {
        violations.push(format!(
            "params.window_days: window must be positive, got {}",
            p.window_days
        ));
    } else if p.horizon_days < 2.0 * p.window_days {
        violations.push(format!(
            "params.horizon_days: need at least two windows, got horizon {} for window {}",
            p.horizon_days, p.window_days
        ));
    }
    if let Err(e) = snm_config(&p, 0).validate() {
        violations.push(format!("params: {e}"));
    }
    if violations.is_empty() {
        Ok(p)
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

/// Per-window hit rates at location 0 for one replication:
/// `(window, global_hit, local_hit)` for windows that saw traffic.
fn run_one(p: &Params, seed: u64) -> Result<Vec<(usize, f64, f64)>, String> {
    let cfg = snm_config(p, seed);
    let (contents, stream) = generate_snm(&cfg).map_err(|e| e.to_string())?;
    let n = contents.len();
    if n == 0 {
        return Err(format!("seed {seed}: no contents realized; raise arrival_per_day"));
    }
    let located =
        split_stream(stream, p.locations, Assignment::UniformRandom, substream(seed, 1_000))
            .map_err(|e| e.to_string())?;
    let mut merged: Vec<_> = located.into_iter().flatten().collect();
    merged.sort_by(|a, b| a.time.total_cmp(&b.time));

    let window = p.window_days * SECONDS_PER_DAY;
    let horizon = p.horizon_days * SECONDS_PER_DAY;
    let global = windowed_estimate(merged.iter(), n, window, horizon, Level::Global)
        .map_err(|e| e.to_string())?;
    let local = windowed_estimate(merged.iter(), n, window, horizon, Level::Local(0))
        .map_err(|e| e.to_string())?;
    let num_windows = global.len();

    // refresh the location-0 cache at each window boundary from the
    // previous window's estimate, then count hits inside the window
    let m = p.cache_m.min(n);
    let mut out = Vec::new();
    for w in 1..num_windows {
        let g_set: HashSet<usize> =
            static_place(&global[w - 1].frequencies, m).into_iter().collect();
        let l_set: HashSet<usize> =
            static_place(&local[w - 1].frequencies, m).into_iter().collect();
        let (mut g_hits, mut l_hits, mut total) = (0u64, 0u64, 0u64);
        for e in merged.iter().filter(|e| e.location_id == 0) {
            let wi = ((e.time / window) as usize).min(num_windows - 1);
            if wi != w {
                continue;
            }
            total += 1;
            g_hits += u64::from(g_set.contains(&e.content_id));
            l_hits += u64::from(l_set.contains(&e.content_id));
        }
        if total > 0 {
            out.push((w, g_hits as f64 / total as f64, l_hits as f64 / total as f64));
        }
    }
    Ok(out)
}

pub fn run(
    params: &toml::Table,
    base_seed: u64,
    replications: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>, RunFailure> {
    let p = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    let seeds = replication_seeds(base_seed, replications);
    let reps = run_replications(pool, &seeds, |s| run_one(&p, s))
        .map_err(|message| RunFailure { message, partial_rows: Vec::new() })?;

    let num_windows = (p.horizon_days / p.window_days).ceil() as usize;
    let mut rows = Vec::new();
    for w in 1..num_windows {
        let mut g = Vec::new();
        let mut l = Vec::new();
        for rep in &reps {
            if let Some(&(_, gh, lh)) = rep.iter().find(|&&(wi, _, _)| wi == w) {
                g.push(gh);
                l.push(lh);
            }
        }
        if g.is_empty() {
            continue; // no replication saw location-0 traffic here
        }
        let (gm, gse) = mean_stderr(&g);
        let (lm, lse) = mean_stderr(&l);
        rows.push(vec![w as f64, gm, gse, lm, lse]);
    }
    Ok(rows)
}
