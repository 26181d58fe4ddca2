//! Single-cache trace-driven simulation.
//!
//! A [`CacheState`] holds up to M whole contents under one of four
//! policies: LRU and LFU evict dynamically, STATIC and ORACLE_STATIC keep
//! a fixed placement (the latter labels a placement taken from the true
//! popularity law rather than an estimate). [`process_trace`] replays a
//! request stream through a cache and measures the hit probability with
//! a batch-means standard error.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::popularity::ZipfPopularity;
use crate::stats::batch_means_stderr;
use crate::traffic::RequestEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Lru,
    Lfu,
    Static,
    OracleStatic,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Lru => "LRU",
            Policy::Lfu => "LFU",
            Policy::Static => "STATIC",
            Policy::OracleStatic => "ORACLE_STATIC",
        })
    }
}

#[derive(Debug, Clone)]
enum PolicyState {
    // recency order: (last-use stamp, content), oldest first
    Lru { order: BTreeSet<(u64, usize)>, stamp: HashMap<usize, u64>, clock: u64 },
    // eviction order: (in-cache frequency, last-use stamp, content)
    Lfu { order: BTreeSet<(u64, u64, usize)>, info: HashMap<usize, (u64, u64)>, clock: u64 },
    Fixed,
}

/// One cache: capacity, stored set, and eviction-policy bookkeeping.
#[derive(Debug, Clone)]
pub struct CacheState {
    policy: Policy,
    capacity: usize,
    stored: HashSet<usize>,
    policy_state: PolicyState,
}

impl CacheState {
    pub fn lru(capacity: usize) -> CacheState {
        CacheState {
            policy: Policy::Lru,
            capacity,
            stored: HashSet::new(),
            policy_state: PolicyState::Lru {
                order: BTreeSet::new(),
                stamp: HashMap::new(),
                clock: 0,
            },
        }
    }

    pub fn lfu(capacity: usize) -> CacheState {
        CacheState {
            policy: Policy::Lfu,
            capacity,
            stored: HashSet::new(),
            policy_state: PolicyState::Lfu {
                order: BTreeSet::new(),
                info: HashMap::new(),
                clock: 0,
            },
        }
    }

    /// A fixed placement that never evicts.
    pub fn static_placement<I>(capacity: usize, contents: I) -> Result<CacheState>
    where
        I: IntoIterator<Item = usize>,
    {
        let stored: HashSet<usize> = contents.into_iter().collect();
        if stored.len() > capacity {
            return Err(Error::InfeasiblePlacement(format!(
                "{} contents placed in a cache of capacity {capacity}",
                stored.len()
            )));
        }
        Ok(CacheState {
            policy: Policy::Static,
            capacity,
            stored,
            policy_state: PolicyState::Fixed,
        })
    }

    /// The IRM-optimal fixed placement: the M most popular contents of
    /// the true law.
    pub fn oracle_static(pop: &ZipfPopularity, capacity: usize) -> Result<CacheState> {
        if capacity > pop.len() {
            return Err(Error::InvalidParameter(format!(
                "cache capacity {capacity} exceeds catalog size {}",
                pop.len()
            )));
        }
        // probabilities are descending, so the top M are ids 0..M
        let mut cache = CacheState::static_placement(capacity, 0..capacity)?;
        cache.policy = Policy::OracleStatic;
        Ok(cache)
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stored(&self) -> &HashSet<usize> {
        &self.stored
    }

    pub fn contains(&self, content_id: usize) -> bool {
        self.stored.contains(&content_id)
    }

    /// Serves one request: returns whether it hit, updating policy state
    /// and (for dynamic policies) inserting the content on a miss.
    pub fn request(&mut self, content_id: usize) -> bool {
        let hit = self.stored.contains(&content_id);
        match &mut self.policy_state {
            PolicyState::Fixed => hit,
            PolicyState::Lru { order, stamp, clock } => {
                if hit {
                    let old = stamp[&content_id];
                    order.remove(&(old, content_id));
                } else {
                    if self.capacity == 0 {
                        return false;
                    }
                    if self.stored.len() == self.capacity {
                        let (_, victim) = order.pop_first().expect("full cache has entries");
                        stamp.remove(&victim);
                        self.stored.remove(&victim);
                    }
                    self.stored.insert(content_id);
                    assert!(self.stored.len() <= self.capacity);
                }
                order.insert((*clock, content_id));
                stamp.insert(content_id, *clock);
                *clock += 1;
                hit
            }
            PolicyState::Lfu { order, info, clock } => {
                if hit {
                    let (freq, last) = info[&content_id];
                    order.remove(&(freq, last, content_id));
                    order.insert((freq + 1, *clock, content_id));
                    info.insert(content_id, (freq + 1, *clock));
                } else {
                    if self.capacity == 0 {
                        return false;
                    }
                    if self.stored.len() == self.capacity {
                        // least frequent goes first; ties evict the least
                        // recently used
                        let (_, _, victim) = order.pop_first().expect("full cache has entries");
                        info.remove(&victim);
                        self.stored.remove(&victim);
                    }
                    self.stored.insert(content_id);
                    assert!(self.stored.len() <= self.capacity);
                    order.insert((1, *clock, content_id));
                    info.insert(content_id, (1, *clock));
                }
                *clock += 1;
                hit
            }
        }
    }
}

/// Hit-probability measurement over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct HitStats {
    pub requests: u64,
    pub hits: u64,
    pub hit_probability: f64,
    /// Standard error from batch means over 20 windows.
    pub stderr: f64,
    pub warmup_requests_excluded: u64,
}

/// Default warmup: the first 10% of events or 10·M requests, whichever
/// is larger.
pub fn default_warmup(total_events: usize, capacity: usize) -> usize {
    (total_events / 10).max(10 * capacity)
}

const STDERR_BATCHES: usize = 20;

/// Replays `events` through `cache`; the first `warmup` requests update
/// the cache but are excluded from the statistics.
pub fn process_trace<I>(
    cache: &mut CacheState,
    events: I,
    warmup: usize,
    catalog_size: usize,
) -> Result<HitStats>
where
    I: IntoIterator<Item = RequestEvent>,
{
    let mut outcomes = Vec::new();
    let mut seen = 0usize;
    for event in events {
        if event.content_id >= catalog_size {
            return Err(Error::TraceCorruption(format!(
                "content id {} outside catalog of size {catalog_size}",
                event.content_id
            )));
        }
        let hit = cache.request(event.content_id);
        if seen >= warmup {
            outcomes.push(hit);
        }
        seen += 1;
    }
    let requests = outcomes.len() as u64;
    let hits = outcomes.iter().filter(|&&h| h).count() as u64;
    Ok(HitStats {
        requests,
        hits,
        hit_probability: if requests > 0 { hits as f64 / requests as f64 } else { 0.0 },
        stderr: batch_means_stderr(&outcomes, STDERR_BATCHES),
        warmup_requests_excluded: seen.min(warmup) as u64,
    })
}

/// The M largest-estimate contents, ties broken toward lower ids.
pub fn static_place(estimates: &[f64], m: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..estimates.len()).collect();
    ids.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then_with(|| a.cmp(&b)));
    ids.truncate(m);
    ids
}

/// Closed-form hit probability of the optimal static placement under
/// IRM: the top-M popularity mass.
pub fn oracle_static_hit(pop: &ZipfPopularity, m: usize) -> Result<f64> {
    pop.top_m_mass(m)
}

pub const HIT_STATS_CSV_HEADER: &str = "policy,M,N,alpha,hit_prob,stderr,requests";

/// One CSV row in the [`HIT_STATS_CSV_HEADER`] schema.
pub fn hit_stats_csv_row(
    policy: Policy,
    m: usize,
    n: usize,
    alpha: f64,
    stats: &HitStats,
) -> String {
    format!(
        "{policy},{m},{n},{alpha},{},{},{}",
        stats.hit_probability, stats.stderr, stats.requests
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{generate_irm, IrmConfig};

    fn trace(ids: &[usize]) -> Vec<RequestEvent> {
        ids.iter()
            .enumerate()
            .map(|(i, &content_id)| RequestEvent {
                time: i as f64,
                content_id,
                location_id: 0,
                user_id: None,
            })
            .collect()
    }

    #[test]
    fn everything_fits() {
        let ids: Vec<usize> = (0..5).chain(0..5).chain(0..5).collect();
        let mut cache = CacheState::lru(5);
        let stats = process_trace(&mut cache, trace(&ids), 5, 5).unwrap();
        assert_eq!(stats.requests, 10);
        assert_eq!(stats.hit_probability, 1.0);
        assert_eq!(stats.warmup_requests_excluded, 5);
    }

    #[test]
    fn lru_ping_pong_never_hits() {
        let ids: Vec<usize> = (0..1000).map(|i| i % 2).collect();
        let mut cache = CacheState::lru(1);
        let stats = process_trace(&mut cache, trace(&ids), 100, 2).unwrap();
        assert_eq!(stats.hit_probability, 0.0);
    }

    #[test]
    fn lru_constant_content_always_hits() {
        let ids = vec![7usize; 1000];
        let mut cache = CacheState::lru(1);
        let stats = process_trace(&mut cache, trace(&ids), 10, 8).unwrap();
        assert_eq!(stats.hit_probability, 1.0);
    }

    #[test]
    fn lru_evicts_least_recent() {
        let mut cache = CacheState::lru(2);
        let hits: Vec<bool> = [0usize, 1, 0, 2, 1].iter().map(|&c| cache.request(c)).collect();
        assert_eq!(hits, vec![false, false, true, false, false]);
        let mut stored: Vec<usize> = cache.stored().iter().copied().collect();
        stored.sort_unstable();
        assert_eq!(stored, vec![1, 2]);
    }

    #[test]
    fn lfu_evicts_least_frequent() {
        let mut cache = CacheState::lfu(2);
        let hits: Vec<bool> = [0usize, 0, 1, 2, 1].iter().map(|&c| cache.request(c)).collect();
        // the twice-requested content 0 survives both evictions
        assert_eq!(hits, vec![false, true, false, false, false]);
        let mut stored: Vec<usize> = cache.stored().iter().copied().collect();
        stored.sort_unstable();
        assert_eq!(stored, vec![0, 1]);
    }

    #[test]
    fn zero_capacity_never_stores() {
        let mut cache = CacheState::lru(0);
        for c in 0..10 {
            assert!(!cache.request(c));
        }
        assert!(cache.stored().is_empty());
    }

    #[test]
    fn static_cache_never_changes() {
        let mut cache = CacheState::static_placement(2, [0, 1]).unwrap();
        let hits: Vec<bool> = [0usize, 2, 3, 1, 2].iter().map(|&c| cache.request(c)).collect();
        assert_eq!(hits, vec![true, false, false, true, false]);
        assert_eq!(cache.stored().len(), 2);
        assert!(cache.contains(0) && cache.contains(1));
    }

    #[test]
    fn overfull_placement_is_rejected() {
        assert!(matches!(
            CacheState::static_placement(1, [0, 1]),
            Err(Error::InfeasiblePlacement(_))
        ));
    }

    #[test]
    fn corrupt_trace_is_rejected() {
        let mut cache = CacheState::lru(2);
        let err = process_trace(&mut cache, trace(&[0, 5]), 0, 5).unwrap_err();
        assert!(matches!(err, Error::TraceCorruption(_)));
    }

    #[test]
    fn static_place_orders_by_estimate_then_id() {
        assert_eq!(static_place(&[0.1, 0.3, 0.2, 0.3], 2), vec![1, 3]);
        assert_eq!(static_place(&[0.25; 4], 2), vec![0, 1]);
        let pop = ZipfPopularity::new(0.8, 10).unwrap();
        assert_eq!(static_place(pop.probabilities(), 3), vec![0, 1, 2]);
    }

    #[test]
    fn capacity_is_never_exceeded() {
        let mut rng = crate::rng::seeded_rng(8);
        use rand::Rng;
        for policy in [CacheState::lru(3), CacheState::lfu(3)] {
            let mut cache = policy;
            for _ in 0..10_000 {
                cache.request(rng.random_range(0..50));
                assert!(cache.stored().len() <= 3);
            }
        }
    }

    #[test]
    fn oracle_hit_matches_popularity_example() {
        let pop = ZipfPopularity::new(1.0, 3).unwrap();
        let h = oracle_static_hit(&pop, 1).unwrap();
        assert!((h - 6.0 / 11.0).abs() < 1e-14);
        assert_eq!(oracle_static_hit(&pop, 0).unwrap(), 0.0);
    }

    #[test]
    fn policies_respect_the_static_bound_under_irm() {
        let n = 1000;
        let m = 50;
        let pop = ZipfPopularity::new(0.8, n).unwrap();
        let cfg = IrmConfig {
            lambda_total: 100.0,
            popularity: pop.clone(),
            horizon: 2e3,
            seed: 4242,
        };
        let events: Vec<_> = generate_irm(&cfg).unwrap().collect();
        let warmup = default_warmup(events.len(), m);
        let bound = pop.top_m_mass(m).unwrap();

        let mut results = Vec::new();
        let caches = [
            CacheState::lru(m),
            CacheState::lfu(m),
            CacheState::oracle_static(&pop, m).unwrap(),
            CacheState::static_placement(m, static_place(pop.probabilities(), m)).unwrap(),
        ];
        for mut cache in caches {
            let policy = cache.policy();
            let stats = process_trace(&mut cache, events.iter().copied(), warmup, n).unwrap();
            assert!(
                stats.hit_probability <= bound + 3.0 * stats.stderr,
                "{policy}: {} over bound {bound} (se {})",
                stats.hit_probability,
                stats.stderr
            );
            results.push((policy, stats));
        }
        // the optimal static placement attains the bound
        for (policy, stats) in &results {
            if matches!(policy, Policy::Static | Policy::OracleStatic) {
                assert!(
                    (stats.hit_probability - bound).abs() <= 3.0 * stats.stderr,
                    "{policy}: {} vs bound {bound}",
                    stats.hit_probability
                );
            }
        }
        // LRU does not beat the optimal static placement beyond noise
        let lru = &results[0].1;
        let stat = &results[3].1;
        assert!(lru.hit_probability <= stat.hit_probability + 3.0 * (lru.stderr + stat.stderr));
    }

    #[test]
    fn longer_traces_shrink_stderr() {
        let pop = ZipfPopularity::new(0.8, 200).unwrap();
        let run = |horizon: f64| {
            let cfg = IrmConfig {
                lambda_total: 100.0,
                popularity: pop.clone(),
                horizon,
                seed: 31,
            };
            let events: Vec<_> = generate_irm(&cfg).unwrap().collect();
            let mut cache = CacheState::lru(20);
            let warmup = default_warmup(events.len(), 20);
            process_trace(&mut cache, events, warmup, 200).unwrap().stderr
        };
        let ratio = run(1e3) / run(4e3);
        // quadrupling the sample should halve the error, give or take noise
        assert!(ratio > 1.3 && ratio < 3.0, "ratio = {ratio}");
    }

    #[test]
    fn csv_row_format() {
        let stats = HitStats {
            requests: 100,
            hits: 40,
            hit_probability: 0.4,
            stderr: 0.01,
            warmup_requests_excluded: 10,
        };
        assert_eq!(HIT_STATS_CSV_HEADER, "policy,M,N,alpha,hit_prob,stderr,requests");
        assert_eq!(
            hit_stats_csv_row(Policy::Lru, 5, 50, 0.8, &stats),
            "LRU,5,50,0.8,0.4,0.01,100"
        );
    }
}
