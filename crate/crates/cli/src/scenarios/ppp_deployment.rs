//! Cache-aided cellular coverage on Poisson-deployed base stations:
//! outage, delivery rate, and cache hit rate versus BS density.

use cachelab::geometry::{
    sample_deployment, simulate_deployment, Fading, RadioParams, Rect,
};
use cachelab::popularity::ZipfPopularity;
use cachelab::rng::substream;

use crate::config::{parse_params, Sweep};
use crate::scenarios::{
    mean_stderr, replication_seeds, run_replications, RunFailure, ScenarioInfo,
};
use serde::Deserialize;

pub const INFO: ScenarioInfo = ScenarioInfo {
    name: "ppp_deployment",
    summary: "Monte Carlo coverage of cache-equipped base stations dropped as a Poisson \
              point process on a torus: a request succeeds when the nearest BS caches the \
              content and delivers it above the target SINR.",
    params: &[
        ("window_side", "square window side length in meters"),
        ("bs_intensity", "base stations per square meter; sweepable"),
        ("user_intensity", "users per square meter (deployment snapshot only)"),
        ("catalog_n", "catalog size in contents"),
        ("alpha", "Zipf popularity exponent"),
        ("cache_m", "per-BS cache capacity in contents (top-M placement)"),
        ("transmit_power", "BS transmit power in watts"),
        ("path_loss_exponent", "path-loss exponent, must exceed 2"),
        ("noise_power", "noise power in watts"),
        ("target_sinr_db", "SINR threshold in dB"),
        ("trials", "Monte Carlo trials per replication"),
    ],
    sweep_axes: &["bs_intensity"],
    columns: &[
        "bs_intensity",
        "outage",
        "outage_stderr",
        "avg_rate",
        "rate_stderr",
        "cache_hit",
        "hit_stderr",
    ],
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    window_side: f64,
    bs_intensity: Sweep,
    user_intensity: f64,
    catalog_n: usize,
    alpha: f64,
    cache_m: usize,
    transmit_power: f64,
    path_loss_exponent: f64,
    noise_power: f64,
    target_sinr_db: f64,
    trials: usize,
}

fn radio(p: &Params) -> RadioParams {
    RadioParams {
        transmit_power: p.transmit_power,
        path_loss_exponent: p.path_loss_exponent,
        fading: Fading::Rayleigh,
        noise_power: p.noise_power,
        target_sinr: 10f64.powf(p.target_sinr_db / 10.0),
    }
}

fn check(params: &toml::Table) -> Result<(Params, Vec<f64>), Vec<String>> {
    let p: Params = parse_params(params).map_err(|e| vec![e])?;
    let mut violations = Vec::new();
    let intensities = p.bs_intensity.expand("params.bs_intensity").unwrap_or_else(|e| {
        violations.push(e);
        Vec::new()
    });
    if let Err(e) = Rect::new(p.window_side, p.window_side) {
        violations.push(format!("params.window_side: {e}"));
    }
    for &b in &intensities {
        if b < 0.0 {
            violations.push(format!("params.bs_intensity: must be nonnegative, got {b}"));
        }
    }
    if p.user_intensity < 0.0 {
        violations.push(format!(
            "params.user_intensity: must be nonnegative, got {}",
            p.user_intensity
        ));
    }
    match ZipfPopularity::new(p.alpha, p.catalog_n.max(1)) {
        Err(e) => violations.push(format!("params.alpha: {e}")),
        Ok(_) if p.catalog_n == 0 => {
            violations.push("params.catalog_n: catalog must hold at least one content".into())
        }
        Ok(_) => {}
    }
    if p.cache_m > p.catalog_n {
        violations.push(format!(
            "params.cache_m: capacity {} exceeds the catalog size {}",
            p.cache_m, p.catalog_n
        ));
    }
    if let Err(e) = radio(&p).validate() {
        violations.push(format!("params: {e}"));
    }
    if p.trials == 0 {
        violations.push("params.trials: at least one trial required".into());
    }
    if violations.is_empty() {
        Ok((p, intensities))
    } else {
        Err(violations)
    }
}

pub fn validate(params: &toml::Table) -> Vec<String> {
    check(params).err().unwrap_or_default()
}

fn run_one(
    p: &Params,
    pop: &ZipfPopularity,
    bs_intensity: f64,
    seed: u64,
) -> Result<(f64, f64, f64), String> {
    let window = Rect::new(p.window_side, p.window_side).map_err(|e| e.to_string())?;
    let d = sample_deployment(window, bs_intensity, p.user_intensity, seed)
        .map_err(|e| e.to_string())?;
    let res = simulate_deployment(&d, &radio(p), pop, p.cache_m, p.trials, substream(seed, 7))
        .map_err(|e| format!("seed {seed}, bs_intensity {bs_intensity}: {e}"))?;
    Ok((res.outage_probability, res.avg_delivery_rate, res.cache_hit_rate))
}

pub fn run(
    params: &toml::Table,
    base_seed: u64,
    replications: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>, RunFailure> {
    let (p, intensities) = check(params).map_err(|v| RunFailure {
        message: v.join("; "),
        partial_rows: Vec::new(),
    })?;
    let pop = ZipfPopularity::new(p.alpha, p.catalog_n).map_err(|e| RunFailure {
        message: e.to_string(),
        partial_rows: Vec::new(),
    })?;
    let seeds = replication_seeds(base_seed, replications);
    let mut rows = Vec::with_capacity(intensities.len());
    for &b in &intensities {
        let reps = run_replications(pool, &seeds, |s| run_one(&p, &pop, b, s))
            .map_err(|message| RunFailure { message, partial_rows: rows.clone() })?;
        let (outage, o_se) = mean_stderr(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
        let (rate, r_se) = mean_stderr(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
        let (hit, h_se) = mean_stderr(&reps.iter().map(|r| r.2).collect::<Vec<_>>());
        rows.push(vec![b, outage, o_se, rate, r_se, hit, h_se]);
    }
    Ok(rows)
}
