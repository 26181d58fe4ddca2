//! The named experiments. Each scenario declares its schema once; the
//! runner builds tables from it and `describe` prints it, so the two
//! can never drift.

pub mod cache_sizing;
pub mod coded_scaling;
pub mod cooperative_gain;
pub mod global_vs_local;
pub mod irm_vs_snm;
pub mod ppp_deployment;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Static description of one scenario: summary, parameters, sweep axes,
/// and the output schema used verbatim at runtime.
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// (name, documentation incl. default) pairs for `[params]` keys.
    pub params: &'static [(&'static str, &'static str)],
    pub sweep_axes: &'static [&'static str],
    pub columns: &'static [&'static str],
}

pub fn all() -> &'static [&'static ScenarioInfo] {
    &[
        &irm_vs_snm::INFO,
        &global_vs_local::INFO,
        &coded_scaling::INFO,
        &cache_sizing::INFO,
        &ppp_deployment::INFO,
        &cooperative_gain::INFO,
    ]
}

pub fn info(name: &str) -> Option<&'static ScenarioInfo> {
    all().iter().find(|s| s.name == name).copied()
}

/// Dry-run parameter check; never simulates.
pub fn validate(name: &str, params: &toml::Table) -> Vec<String> {
    match name {
        "irm_vs_snm" => irm_vs_snm::validate(params),
        "global_vs_local" => global_vs_local::validate(params),
        "coded_scaling" => coded_scaling::validate(params),
        "cache_sizing" => cache_sizing::validate(params),
        "ppp_deployment" => ppp_deployment::validate(params),
        "cooperative_gain" => cooperative_gain::validate(params),
        other => vec![format!(
            "scenario: unknown scenario {other:?}; known: {}",
            all().iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
        )],
    }
}

/// A runtime failure, carrying whatever rows completed before it.
pub struct RunFailure {
    pub message: String,
    pub partial_rows: Vec<Vec<f64>>,
}

/// Executes the scenario: `replications` runs per sweep point, seeded
/// `base_seed + i`, aggregated to mean and standard error per point.
pub fn run(
    name: &str,
    params: &toml::Table,
    base_seed: u64,
    replications: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>, RunFailure> {
    match name {
        "irm_vs_snm" => irm_vs_snm::run(params, base_seed, replications, pool),
        "global_vs_local" => global_vs_local::run(params, base_seed, replications, pool),
        "coded_scaling" => coded_scaling::run(params),
        "cache_sizing" => cache_sizing::run(params),
        "ppp_deployment" => ppp_deployment::run(params, base_seed, replications, pool),
        "cooperative_gain" => cooperative_gain::run(params, base_seed, replications, pool),
        other => Err(RunFailure {
            message: format!("unknown scenario {other:?}"),
            partial_rows: Vec::new(),
        }),
    }
}

/// Replication seeds: `base_seed + i` for replication `i`.
pub fn replication_seeds(base_seed: u64, replications: u64) -> Vec<u64> {
    (0..replications).map(|i| base_seed.wrapping_add(i)).collect()
}

/// Sample mean and standard error of the mean; stderr is 0 for fewer
/// than two values.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs one closure per replication on the pool, preserving replication
/// order, so aggregation is independent of the thread count.
pub fn run_replications<T, F>(
    pool: &rayon::ThreadPool,
    seeds: &[u64],
    f: F,
) -> Result<Vec<T>, String>
where
    T: Send,
    F: Fn(u64) -> Result<T, String> + Sync,
{
    use rayon::prelude::*;
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
}
