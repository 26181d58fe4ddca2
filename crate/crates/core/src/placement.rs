//! Cooperative content placement on a bipartite user–cache graph.
//!
//! Users reach a subset of caches; a request hits when any reachable
//! cache stores the content. Choosing what each cache stores to
//! maximize the weighted hit probability is a set-cover-like problem:
//! the objective is monotone and submodular in the set of
//! (cache, content) pairs, so greedy placement carries the classic
//! 1 − 1/e guarantee against the exhaustive optimum. Overlapping caches
//! should avoid storing the same objects twice, which is what buys the
//! effective cache-size multiplier over a single isolated cache.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::kahan_sum;

/// Content popularity seen by the users: one shared law, or one row
/// per user (e.g. predicted from a factorized request matrix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityModel {
    Shared(Vec<f64>),
    PerUser(Vec<Vec<f64>>),
}

/// Bipartite user–cache connectivity with per-cache capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessGraph {
    num_users: usize,
    num_caches: usize,
    num_contents: usize,
    cache_capacities: Vec<usize>,
    user_weights: Vec<f64>,
    popularity: PopularityModel,
    user_neighbors: Vec<Vec<usize>>,
    cache_users: Vec<Vec<usize>>,
}

impl AccessGraph {
    pub fn new(
        num_users: usize,
        num_caches: usize,
        edges: &[(usize, usize)],
        cache_capacities: Vec<usize>,
        user_weights: Vec<f64>,
        popularity: PopularityModel,
    ) -> Result<Self> {
        if num_users == 0 || num_caches == 0 {
            return Err(Error::InvalidParameter(
                "graph needs at least one user and one cache".into(),
            ));
        }
        if cache_capacities.len() != num_caches {
            return Err(Error::InvalidParameter(format!(
                "{} capacities for {} caches",
                cache_capacities.len(),
                num_caches
            )));
        }
        if user_weights.len() != num_users {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} users",
                user_weights.len(),
                num_users
            )));
        }
        if user_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("user weights must be finite and nonnegative".into()));
        }
        if user_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("total user weight must be positive".into()));
        }
        let check_row = |row: &[f64]| -> Result<()> {
            if row.is_empty() {
                return Err(Error::InvalidCatalog("popularity over an empty catalog".into()));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidParameter(
                    "popularity entries must be finite and nonnegative".into(),
                ));
            }
            if row.iter().sum::<f64>() > 1.0 + 1e-9 {
                return Err(Error::InvalidParameter("popularity mass exceeds 1".into()));
            }
            Ok(())
        };
        let num_contents = match &popularity {
            PopularityModel::Shared(row) => {
                check_row(row)?;
                row.len()
            }
            PopularityModel::PerUser(rows) => {
                if rows.len() != num_users {
                    return Err(Error::InvalidParameter(format!(
                        "{} popularity rows for {} users",
                        rows.len(),
                        num_users
                    )));
                }
                for row in rows {
                    check_row(row)?;
                }
                let n = rows[0].len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidParameter("popularity rows differ in length".into()));
                }
                n
            }
        };
        let mut user_neighbors = vec![BTreeSet::new(); num_users];
        let mut cache_users = vec![BTreeSet::new(); num_caches];
        for &(u, l) in edges {
            if u >= num_users || l >= num_caches {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {l}) outside {num_users} users x {num_caches} caches"
                )));
            }
            user_neighbors[u].insert(l);
            cache_users[l].insert(u);
        }
        Ok(AccessGraph {
            num_users,
            num_caches,
            num_contents,
            cache_capacities,
            user_weights,
            popularity,
            user_neighbors: user_neighbors.into_iter().map(|s| s.into_iter().collect()).collect(),
            cache_users: cache_users.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_caches(&self) -> usize {
        self.num_caches
    }

    pub fn num_contents(&self) -> usize {
        self.num_contents
    }

    pub fn capacity(&self, cache: usize) -> usize {
        self.cache_capacities[cache]
    }

    pub fn weight(&self, user: usize) -> f64 {
        self.user_weights[user]
    }

    pub fn total_weight(&self) -> f64 {
        kahan_sum(self.user_weights.iter().copied())
    }

    pub fn caches_of_user(&self, user: usize) -> &[usize] {
        &self.user_neighbors[user]
    }

    pub fn users_of_cache(&self, cache: usize) -> &[usize] {
        &self.cache_users[cache]
    }

    pub fn popularity(&self) -> &PopularityModel {
        &self.popularity
    }

    /// Probability that user u's next request is for content c.
    pub fn prob(&self, user: usize, content: usize) -> f64 {
        match &self.popularity {
            PopularityModel::Shared(row) => row[content],
            PopularityModel::PerUser(rows) => rows[user][content],
        }
    }

    /// Weight-averaged popularity across users, the law a single cache
    /// serving everyone would face.
    pub fn mean_popularity(&self) -> Vec<f64> {
        let w_total = self.total_weight();
        (0..self.num_contents)
            .map(|c| {
                kahan_sum((0..self.num_users).map(|u| self.user_weights[u] * self.prob(u, c)))
                    / w_total
            })
            .collect()
    }
}

/// Per-cache content sets. Feasible when every set fits its capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    per_cache: Vec<BTreeSet<usize>>,
}

impl Placement {
    pub fn empty(num_caches: usize) -> Self {
        Placement { per_cache: vec![BTreeSet::new(); num_caches] }
    }

    pub fn from_sets(per_cache: Vec<BTreeSet<usize>>) -> Self {
        Placement { per_cache }
    }

    /// Adds a content to a cache; false if it was already stored.
    pub fn insert(&mut self, cache: usize, content: usize) -> bool {
        self.per_cache[cache].insert(content)
    }

    pub fn cache_contents(&self, cache: usize) -> &BTreeSet<usize> {
        &self.per_cache[cache]
    }

    pub fn per_cache(&self) -> &[BTreeSet<usize>] {
        &self.per_cache
    }

    pub fn num_caches(&self) -> usize {
        self.per_cache.len()
    }
}

fn check_feasible(g: &AccessGraph, pl: &Placement) -> Result<()> {
    if pl.per_cache.len() != g.num_caches {
        return Err(Error::InfeasiblePlacement(format!(
            "placement covers {} caches, graph has {}",
            pl.per_cache.len(),
            g.num_caches
        )));
    }
    for (l, set) in pl.per_cache.iter().enumerate() {
        if set.len() > g.cache_capacities[l] {
            return Err(Error::InfeasiblePlacement(format!(
                "cache {l} stores {} contents, capacity {}",
                set.len(),
                g.cache_capacities[l]
            )));
        }
        if let Some(&c) = set.iter().find(|&&c| c >= g.num_contents) {
            return Err(Error::InfeasiblePlacement(format!(
                "cache {l} stores unknown content {c}"
            )));
        }
    }
    Ok(())
}

/// Weighted hit probability of a placement:
/// Σ_u w_u Σ_c p_{u,c} · 1[c stored in some cache adjacent to u] / Σ_u w_u.
pub fn objective(g: &AccessGraph, pl: &Placement) -> Result<f64> {
    check_feasible(g, pl)?;
    let mut total = 0.0;
    for u in 0..g.num_users {
        let mut covered: BTreeSet<usize> = BTreeSet::new();
        for &l in g.caches_of_user(u) {
            covered.extend(pl.per_cache[l].iter().copied());
        }
        total += g.weight(u) * kahan_sum(covered.iter().map(|&c| g.prob(u, c)));
    }
    Ok(total / g.total_weight())
}

/// Gain in the (unnormalized) objective from adding `content` to
/// `cache`, given which (user, content) pairs are already covered.
fn marginal_gain(g: &AccessGraph, covered: &[Vec<bool>], cache: usize, content: usize) -> f64 {
    g.users_of_cache(cache)
        .iter()
        .filter(|&&u| !covered[u][content])
        .map(|&u| g.weight(u) * g.prob(u, content))
        .sum()
}

fn greedy_with_order(g: &AccessGraph, cache_rank: impl Fn(usize) -> usize) -> Placement {
    let mut pl = Placement::empty(g.num_caches);
    let mut covered = vec![vec![false; g.num_contents]; g.num_users];
    let mut order: Vec<usize> = (0..g.num_caches).collect();
    order.sort_by_key(|&l| (cache_rank(l), l));
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for &l in &order {
            if pl.per_cache[l].len() >= g.cache_capacities[l].min(g.num_contents) {
                continue;
            }
            for c in 0..g.num_contents {
                if pl.per_cache[l].contains(&c) {
                    continue;
                }
                let gain = marginal_gain(g, &covered, l, c);
                // strict comparison keeps the first (rank, content) pair
                // on ties, making the outcome deterministic
                if best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, l, c));
                }
            }
        }
        match best {
            Some((_, l, c)) => {
                pl.insert(l, c);
                for &u in g.users_of_cache(l) {
                    covered[u][c] = true;
                }
            }
            None => return pl,
        }
    }
}

/// Greedy placement: repeatedly adds the (cache, content) pair with the
/// largest marginal objective gain, breaking ties toward the lower
/// cache id then the lower content id, until every cache is full.
pub fn greedy_place(g: &AccessGraph) -> Placement {
    greedy_with_order(g, |l| l)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        if k == 0 {
            return out;
        }
        // advance lexicographically
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Exact optimum by exhausting every combination of per-cache content
/// sets. Guarded: the search space Π_l binomial(N, M_l) must not
/// exceed 1e7 combinations.
pub fn brute_force_place(g: &AccessGraph) -> Result<Placement> {
    let sizes: Vec<usize> =
        (0..g.num_caches).map(|l| g.cache_capacities[l].min(g.num_contents)).collect();
    let mut space = 1.0f64;
    for &s in &sizes {
        space *= binomial_f64(g.num_contents, s);
        if space > BRUTE_FORCE_LIMIT {
            return Err(Error::InstanceTooLarge(format!(
                "placement search space exceeds {BRUTE_FORCE_LIMIT:e} combinations"
            )));
        }
    }
    let per_cache_choices: Vec<Vec<Vec<usize>>> =
        sizes.iter().map(|&s| combinations(g.num_contents, s)).collect();
    let mut best: Option<(f64, Placement)> = None;
    let mut current = Placement::empty(g.num_caches);
    fn recurse(
        g: &AccessGraph,
        choices: &[Vec<Vec<usize>>],
        cache: usize,
        current: &mut Placement,
        best: &mut Option<(f64, Placement)>,
    ) {
        if cache == choices.len() {
            let value = objective(g, current).expect("enumerated placements are feasible");
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                *best = Some((value, current.clone()));
            }
            return;
        }
        for combo in &choices[cache] {
            current.per_cache[cache] = combo.iter().copied().collect();
            recurse(g, choices, cache + 1, current, best);
        }
        current.per_cache[cache].clear();
    }
    recurse(g, &per_cache_choices, 0, &mut current, &mut best);
    Ok(best.expect("at least the empty placement is enumerated").1)
}

/// A time-shared mixture of integral placements: the schedule cycles
/// round-robin through the placements, and `distribution` gives the
/// resulting fraction of time each cache stores each content.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPlacement {
    pub schedule: Vec<Placement>,
    /// Per cache: (content, fraction of rounds stored), sorted by id.
    pub distribution: Vec<Vec<(usize, f64)>>,
    pub expected_objective: f64,
}

/// Fractional placement by time sharing. Greedy is rerun under rotated
/// cache tie-breaking; all rotations matching the best objective found
/// are kept and cycled round-robin, so the mixture's expected objective
/// equals the best integral placement found and symmetric instances
/// split their time evenly across the symmetric optima.
pub fn fractional_place(g: &AccessGraph, num_rounds: usize) -> Result<FractionalPlacement> {
    if num_rounds == 0 {
        return Err(Error::InvalidParameter("num_rounds must be at least 1".into()));
    }
    let mut candidates: Vec<(Placement, f64)> = Vec::new();
    for r in 0..num_rounds.min(g.num_caches) {
        let l = g.num_caches;
        let pl = greedy_with_order(g, |c| (c + l - r) % l);
        if candidates.iter().any(|(p, _)| *p == pl) {
            continue;
        }
        let value = objective(g, &pl)?;
        candidates.push((pl, value));
    }
    let best = candidates.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<Placement> = candidates
        .into_iter()
        .filter(|&(_, v)| v >= best - 1e-12 * (1.0 + best.abs()))
        .map(|(p, _)| p)
        .collect();
    let schedule: Vec<Placement> =
        (0..num_rounds).map(|i| kept[i % kept.len()].clone()).collect();
    let mut distribution = Vec::with_capacity(g.num_caches);
    for l in 0..g.num_caches {
        let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
        for pl in &schedule {
            for &c in pl.cache_contents(l) {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        distribution.push(
            counts.into_iter().map(|(c, k)| (c, k as f64 / num_rounds as f64)).collect(),
        );
    }
    let expected_objective =
        kahan_sum(schedule.iter().map(|pl| objective(g, pl).unwrap())) / num_rounds as f64;
    Ok(FractionalPlacement { schedule, distribution, expected_objective })
}

/// The factor γ such that one cache of size γ·M̄ (M̄ the mean capacity)
/// under the weight-averaged popularity matches the greedy cooperative
/// objective. Found by monotone search over the sorted popularity mass,
/// with linear interpolation between integer sizes. Degenerate graphs
/// with zero total capacity report γ = 1.
pub fn effective_cache_gain(g: &AccessGraph) -> f64 {
    let mean_capacity =
        g.cache_capacities.iter().sum::<usize>() as f64 / g.num_caches as f64;
    if mean_capacity <= 0.0 {
        return 1.0;
    }
    let achieved = objective(g, &greedy_place(g)).expect("greedy placement is feasible");
    let mut mean_pop = g.mean_popularity();
    mean_pop.sort_by(|a, b| b.total_cmp(a));
    // prefix masses of the best single-cache placement at each size
    let mut mass = Vec::with_capacity(mean_pop.len() + 1);
    mass.push(0.0);
    let mut acc = 0.0;
    for p in &mean_pop {
        acc += p;
        mass.push(acc);
    }
    let x = match mass.iter().position(|&m| m >= achieved - 1e-12) {
        Some(x) => x,
        None => mass.len() - 1, // achieved exceeds total mass only by rounding
    };
    let fractional_size = if x == 0 {
        0.0
    } else {
        let step = mass[x] - mass[x - 1];
        if step <= 0.0 {
            x as f64
        } else {
            (x - 1) as f64 + (achieved - mass[x - 1]) / step
        }
    };
    fractional_size / mean_capacity
}

#[derive(Serialize, Deserialize)]
struct UsersSection {
    count: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CachesSection {
    count: usize,
    capacities: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    users: UsersSection,
    caches: CachesSection,
    edges: Vec<(usize, usize)>,
    popularity: PopularityModel,
}

/// Serializes a graph as structured JSON with `users`, `caches`,
/// `edges` and `popularity` sections.
pub fn write_graph<W: Write>(mut writer: W, g: &AccessGraph) -> Result<()> {
    let mut edges = Vec::new();
    for u in 0..g.num_users {
        for &l in g.caches_of_user(u) {
            edges.push((u, l));
        }
    }
    let file = GraphFile {
        users: UsersSection { count: g.num_users, weights: g.user_weights.clone() },
        caches: CachesSection { count: g.num_caches, capacities: g.cache_capacities.clone() },
        edges,
        popularity: g.popularity.clone(),
    };
    serde_json::to_writer_pretty(&mut writer, &file)
        .map_err(|e| Error::Format(format!("graph serialization: {e}")))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Parses and validates a graph written by [`write_graph`].
pub fn read_graph<R: Read>(reader: R) -> Result<AccessGraph> {
    let file: GraphFile = serde_json::from_reader(reader)
        .map_err(|e| Error::Format(format!("graph parse: {e}")))?;
    AccessGraph::new(
        file.users.count,
        file.caches.count,
        &file.edges,
        file.caches.capacities,
        file.users.weights,
        file.popularity,
    )
}

/// Placement dump: CSV `cache_id,content_id`, sorted.
pub fn write_placement_csv<W: Write>(mut writer: W, pl: &Placement) -> Result<()> {
    writeln!(writer, "cache_id,content_id")?;
    for (l, set) in pl.per_cache.iter().enumerate() {
        for c in set {
            writeln!(writer, "{l},{c}")?;
        }
    }
    Ok(())
}
