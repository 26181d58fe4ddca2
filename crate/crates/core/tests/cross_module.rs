//! Cross-module checks: traffic feeding caches, estimators feeding
//! placement, and the degeneracies that tie the models together.

use cachelab::cache::{process_trace, static_place, CacheState};
use cachelab::estimation::{windowed_estimate, Level};
use cachelab::popularity::ZipfPopularity;
use cachelab::traffic::{
    generate_irm, generate_snm, IrmConfig, RequestEvent, SnmClass, SnmConfig,
};

const DAY: f64 = 86_400.0;

/// With pulse lifespans far beyond the horizon and a fixed per-content
/// rate, shot-noise traffic is a superposition of homogeneous Poisson
/// streams, i.e. IRM with uniform popularity over the arrived contents.
/// Hit probabilities of a policy on the two streams must agree.
#[test]
fn long_lived_snm_degenerates_to_irm() {
    let horizon = 100.0 * DAY;
    let rate_per_day = 2.0;
    let lifespan = 10_000.0 * DAY;
    let snm = SnmConfig {
        content_arrival_rate: 6.0 / DAY,
        classes: vec![SnmClass {
            lifespan,
            total_volume: rate_per_day * lifespan / DAY,
            probability: 1.0,
        }],
        volume_lifespan_correlation: false,
        horizon,
        seed: 41,
    };
    let (contents, stream) = generate_snm(&snm).unwrap();
    let events: Vec<RequestEvent> = stream.collect();
    let n = contents.len();
    assert!(n > 400, "arrival rate should realize a sizable catalog, got {n}");

    // Measure on the last tenth of the horizon; everything before is
    // warmup, so the cache and the live population are both settled.
    let cut = 0.9 * horizon;
    let warmup = events.iter().take_while(|e| e.time < cut).count();

    // The IRM twin: uniform popularity over the contents alive at the
    // middle of the measurement window, same per-content request rate.
    let live = contents.iter().filter(|c| c.arrival_time <= 0.95 * horizon).count();
    let irm = IrmConfig {
        lambda_total: live as f64 * rate_per_day / DAY,
        popularity: ZipfPopularity::new(0.0, live).unwrap(),
        horizon: 30.0 * DAY,
        seed: 42,
    };
    let irm_events: Vec<RequestEvent> = generate_irm(&irm).unwrap().collect();
    let irm_cut = 20.0 * DAY;
    let irm_warmup = irm_events.iter().take_while(|e| e.time < irm_cut).count();

    for make in [CacheState::lru, CacheState::lfu] {
        let mut snm_cache = make(60);
        let snm_stats =
            process_trace(&mut snm_cache, events.iter().cloned(), warmup, n).unwrap();
        let mut irm_cache = make(60);
        let irm_stats =
            process_trace(&mut irm_cache, irm_events.iter().cloned(), irm_warmup, live)
                .unwrap();

        let gap = (snm_stats.hit_probability - irm_stats.hit_probability).abs();
        let tol = 4.0 * (snm_stats.stderr + irm_stats.stderr);
        assert!(
            gap < tol,
            "{:?}: snm hit {} vs irm hit {} differ by {gap:.4} > {tol:.4}",
            snm_cache.policy(),
            snm_stats.hit_probability,
            irm_stats.hit_probability,
        );
    }
}

/// A static placement built from windowed frequency estimates should
/// capture nearly all of the mass an exact-popularity oracle captures.
#[test]
fn estimated_placement_approaches_the_oracle_mass() {
    let n = 400;
    let m = 40;
    let pop = ZipfPopularity::new(0.9, n).unwrap();
    let cfg = IrmConfig {
        lambda_total: 2_000.0 / DAY,
        popularity: pop.clone(),
        horizon: 10.0 * DAY,
        seed: 7,
    };
    let events: Vec<RequestEvent> = generate_irm(&cfg).unwrap().collect();
    let estimates =
        windowed_estimate(events.iter(), n, DAY, cfg.horizon, Level::Global).unwrap();
    let last = estimates.last().unwrap();
    assert!(!last.stale, "final window should have seen traffic");

    let placed = static_place(&last.frequencies, m);
    let mass: f64 = placed.iter().map(|&c| pop.prob(c)).sum();
    let oracle = pop.top_m_mass(m).unwrap();
    assert!(
        mass >= 0.9 * oracle,
        "estimated placement mass {mass:.4} fell below 0.9 x oracle {oracle:.4}"
    );
    assert!(mass <= oracle + 1e-12, "no placement can beat the top-M mass");
}

/// Short-lived contents at sparse per-content rates: a static placement
/// refreshed from the latest window estimate loses hit probability
/// monotonically as the refresh interval grows past the lifespan.
#[test]
fn stale_refresh_degrades_static_placement() {
    let horizon_days = 80.0;
    let refresh_days = [1.0, 4.0, 16.0];
    let m = 50;
    let mut mean_hits = [0.0f64; 3];
    let seeds = [11u64, 12, 13];

    for &seed in &seeds {
        let cfg = SnmConfig {
            content_arrival_rate: 100.0 / DAY,
            // rate 0.1 requests/content/day over a 5-day pulse
            classes: vec![SnmClass { lifespan: 5.0 * DAY, total_volume: 0.5, probability: 1.0 }],
            volume_lifespan_correlation: false,
            horizon: horizon_days * DAY,
            seed,
        };
        let (contents, stream) = generate_snm(&cfg).unwrap();
        let events: Vec<RequestEvent> = stream.collect();
        let n = contents.len();

        for (i, &interval) in refresh_days.iter().enumerate() {
            let window = interval * DAY;
            let estimates =
                windowed_estimate(events.iter(), n, window, cfg.horizon, Level::Global)
                    .unwrap();
            let mut cache: Option<CacheState> = None;
            let mut current = 0usize;
            let (mut hits, mut total) = (0u64, 0u64);
            for event in &events {
                let w = ((event.time / window) as usize).min(estimates.len() - 1);
                if w == 0 {
                    continue; // nothing to place from yet
                }
                if cache.is_none() || w != current {
                    let placed = static_place(&estimates[w - 1].frequencies, m);
                    cache = Some(CacheState::static_placement(m, placed).unwrap());
                    current = w;
                }
                total += 1;
                if cache.as_mut().unwrap().request(event.content_id) {
                    hits += 1;
                }
            }
            assert!(total > 2_000, "trace too thin: {total} measured events");
            mean_hits[i] += hits as f64 / total as f64 / seeds.len() as f64;
        }
    }

    assert!(
        mean_hits[0] > mean_hits[1] + 0.01 && mean_hits[1] > mean_hits[2] + 0.005,
        "hit probability should fall with the refresh interval, got {mean_hits:?}"
    );
}
