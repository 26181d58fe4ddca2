//! Time-varying popularity estimation.
//!
//! Two estimators feed placement decisions:
//!
//! - windowed counting: empirical request frequencies per fixed-length
//!   time window, either per location (local) or over the union of all
//!   locations (global, which sees L times the request rate and so
//!   tracks popularity changes faster);
//! - low-rank factorization of the (sparse, partially observed)
//!   user×content rating matrix by alternating least squares, where a
//!   rating is the empirical request count of a user-content pair.

use std::collections::HashSet;
use std::io;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::traffic::RequestEvent;

/// Aggregation level of a windowed estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Only events of one location.
    Local(usize),
    /// The union of all locations' events.
    Global,
}

/// One window's popularity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    pub window_index: usize,
    pub start_time: f64,
    pub end_time: f64,
    /// Raw per-content request counts inside the window.
    pub counts: Vec<u64>,
    /// Normalized frequencies; for an empty window this repeats the
    /// previous window's estimate.
    pub frequencies: Vec<f64>,
    /// Set when the window saw no events and the estimate is a repeat.
    pub stale: bool,
}

/// Streaming windowed popularity counter; see [`windowed_estimate`] for
/// the one-shot driver.
#[derive(Debug)]
pub struct WindowedEstimator {
    n: usize,
    window_length: f64,
    num_windows: usize,
    level: Level,
    counts: Vec<u64>,
    current: usize,
    last_time: f64,
    // estimate carried into empty windows; uniform before any data
    last_frequencies: Vec<f64>,
    out: Vec<WindowEstimate>,
}

impl WindowedEstimator {
    pub fn new(n: usize, window_length: f64, horizon: f64, level: Level) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCatalog("catalog must hold at least one content".into()));
        }
        if !window_length.is_finite() || window_length <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "window length must be positive, got {window_length}"
            )));
        }
        if !horizon.is_finite() || horizon < window_length {
            return Err(Error::InvalidParameter(format!(
                "horizon must cover at least one window, got {horizon}"
            )));
        }
        let num_windows = (horizon / window_length).ceil() as usize;
        Ok(WindowedEstimator {
            n,
            window_length,
            num_windows,
            level,
            counts: vec![0; n],
            current: 0,
            last_time: 0.0,
            last_frequencies: vec![1.0 / n as f64; n],
            out: Vec::with_capacity(num_windows),
        })
    }

    fn close_window(&mut self) {
        let total: u64 = self.counts.iter().sum();
        let stale = total == 0;
        if !stale {
            for (f, &c) in self.last_frequencies.iter_mut().zip(&self.counts) {
                *f = c as f64 / total as f64;
            }
        }
        self.out.push(WindowEstimate {
            window_index: self.current,
            start_time: self.current as f64 * self.window_length,
            end_time: (self.current + 1) as f64 * self.window_length,
            counts: std::mem::replace(&mut self.counts, vec![0; self.n]),
            frequencies: self.last_frequencies.clone(),
            stale,
        });
        self.current += 1;
    }

    /// Feeds one event (events must arrive time-sorted). Events of other
    /// locations are ignored at local level.
    pub fn observe(&mut self, event: &RequestEvent) -> Result<()> {
        if event.time < self.last_time {
            return Err(Error::TraceCorruption(format!(
                "event at {} after one at {}",
                event.time, self.last_time
            )));
        }
        self.last_time = event.time;
        if event.content_id >= self.n {
            return Err(Error::TraceCorruption(format!(
                "content id {} outside catalog of size {}",
                event.content_id, self.n
            )));
        }
        if let Level::Local(loc) = self.level {
            if event.location_id != loc {
                return Ok(());
            }
        }
        let horizon = self.num_windows as f64 * self.window_length;
        if event.time > horizon {
            return Err(Error::TraceCorruption(format!(
                "event at {} beyond the horizon {horizon}",
                event.time
            )));
        }
        // the event exactly at the horizon belongs to the last window
        let w = ((event.time / self.window_length) as usize).min(self.num_windows - 1);
        while self.current < w {
            self.close_window();
        }
        self.counts[event.content_id] += 1;
        Ok(())
    }

    /// Closes all remaining windows (possibly stale) and returns the
    /// full window-indexed estimate sequence.
    pub fn finish(mut self) -> Vec<WindowEstimate> {
        while self.current < self.num_windows {
            self.close_window();
        }
        self.out
    }
}

/// Runs a [`WindowedEstimator`] over a whole event stream, emitting one
/// estimate per window boundary over `[0, horizon]`.
pub fn windowed_estimate<'a, I>(
    events: I,
    n: usize,
    window_length: f64,
    horizon: f64,
    level: Level,
) -> Result<Vec<WindowEstimate>>
where
    I: IntoIterator<Item = &'a RequestEvent>,
{
    let mut estimator = WindowedEstimator::new(n, window_length, horizon, level)?;
    for event in events {
        estimator.observe(event)?;
    }
    Ok(estimator.finish())
}

/// Windows from the arrival window (inclusive) until `content` first
/// ranks inside the estimated top `m` with a nonzero frequency, or
/// `None` if it never does. A delay of 1 means detection within the
/// window the content arrived in.
pub fn detection_delay(
    estimates: &[WindowEstimate],
    content: usize,
    arrival_time: f64,
    m: usize,
) -> Option<usize> {
    let first = estimates.iter().position(|e| e.end_time > arrival_time)?;
    for (offset, est) in estimates[first..].iter().enumerate() {
        let fc = est.frequencies[content];
        if fc <= 0.0 {
            continue;
        }
        // rank under the (frequency desc, id asc) order used for placement
        let rank = est
            .frequencies
            .iter()
            .enumerate()
            .filter(|&(j, &fj)| fj > fc || (fj == fc && j < content))
            .count();
        if rank < m {
            return Some(offset + 1);
        }
    }
    None
}

/// The sparse, partially observed user×content rating matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityMatrix {
    num_users: usize,
    num_contents: usize,
    observed: Vec<(usize, usize, f64)>,
}

impl PopularityMatrix {
    /// `observed` holds (user, content, rating) triples: ratings must be
    /// nonnegative and each pair may appear at most once.
    pub fn new(
        num_users: usize,
        num_contents: usize,
        observed: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(observed.len());
        for &(k, n, v) in &observed {
            if k >= num_users || n >= num_contents {
                return Err(Error::InvalidParameter(format!(
                    "entry ({k}, {n}) outside a {num_users}x{num_contents} matrix"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "rating for ({k}, {n}) must be finite and nonnegative, got {v}"
                )));
            }
            if !seen.insert((k, n)) {
                return Err(Error::InvalidParameter(format!("duplicate entry ({k}, {n})")));
            }
        }
        Ok(PopularityMatrix { num_users, num_contents, observed })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_contents(&self) -> usize {
        self.num_contents
    }

    pub fn observed(&self) -> &[(usize, usize, f64)] {
        &self.observed
    }
}

/// Rank-r factors: prediction for (user k, content n) is the dot product
/// of their factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    rank: usize,
    num_users: usize,
    num_contents: usize,
    user_factors: Vec<f64>,    // user k occupies [k*r, (k+1)*r)
    content_factors: Vec<f64>, // content n likewise
    /// Least-squares objective after every alternating half-step.
    pub objective_history: Vec<f64>,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_contents(&self) -> usize {
        self.num_contents
    }

    pub fn user_factor(&self, k: usize) -> &[f64] {
        &self.user_factors[k * self.rank..(k + 1) * self.rank]
    }

    pub fn content_factor(&self, n: usize) -> &[f64] {
        &self.content_factors[n * self.rank..(n + 1) * self.rank]
    }

    pub fn predict(&self, k: usize, n: usize) -> f64 {
        dot(self.user_factor(k), self.content_factor(n))
    }

    /// Root-mean-square prediction error over the given entries.
    pub fn rmse(&self, entries: &[(usize, usize, f64)]) -> f64 {
        if entries.is_empty() {
            return 0.0;
        }
        let sq: f64 = entries
            .iter()
            .map(|&(k, n, v)| {
                let d = v - self.predict(k, n);
                d * d
            })
            .sum();
        (sq / entries.len() as f64).sqrt()
    }

    /// The factors as a dense CSV matrix, r rows by K columns.
    pub fn user_matrix_csv(&self) -> String {
        matrix_csv(&self.user_factors, self.num_users, self.rank)
    }

    /// The factors as a dense CSV matrix, r rows by N columns.
    pub fn content_matrix_csv(&self) -> String {
        matrix_csv(&self.content_factors, self.num_contents, self.rank)
    }
}

fn matrix_csv(col_major_cols: &[f64], num_cols: usize, rank: usize) -> String {
    let mut s = String::new();
    for row in 0..rank {
        for col in 0..num_cols {
            if col > 0 {
                s.push(',');
            }
            s.push_str(&format!("{}", col_major_cols[col * rank + row]));
        }
        s.push('\n');
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Solves a x = b for a symmetric positive-semidefinite r x r system by
// Gauss-Jordan elimination with partial pivoting; components along
// singular directions are set to zero (any such choice minimizes the
// half-step objective, since b lies in the range of a).
fn solve_normal_equations(mut a: Vec<f64>, mut b: Vec<f64>, r: usize) -> Vec<f64> {
    let scale = a.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tol = 1e-12 * scale.max(1e-300);
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; r];
    let mut row_used = vec![false; r];
    for col in 0..r {
        let mut pivot = None;
        let mut best = tol;
        for row in 0..r {
            if !row_used[row] && a[row * r + col].abs() > best {
                best = a[row * r + col].abs();
                pivot = Some(row);
            }
        }
        let Some(p) = pivot else { continue };
        row_used[p] = true;
        pivot_of_col[col] = Some(p);
        let pv = a[p * r + col];
        for row in 0..r {
            if row == p {
                continue;
            }
            let factor = a[row * r + col] / pv;
            if factor == 0.0 {
                continue;
            }
            for j in 0..r {
                a[row * r + j] -= factor * a[p * r + j];
            }
            a[row * r + col] = 0.0;
            b[row] -= factor * b[p];
        }
    }
    let mut x = vec![0.0; r];
    for col in 0..r {
        if let Some(p) = pivot_of_col[col] {
            x[col] = b[p] / a[p * r + col];
        }
    }
    x
}

fn half_step(
    out_factors: &mut [f64],
    fixed_factors: &[f64],
    obs: &[Vec<(usize, f64)>],
    r: usize,
    lambda: f64,
) {
    for (k, entries) in obs.iter().enumerate() {
        let mut a = vec![0.0; r * r];
        for i in 0..r {
            a[i * r + i] = lambda;
        }
        let mut b = vec![0.0; r];
        for &(other, v) in entries {
            let f = &fixed_factors[other * r..(other + 1) * r];
            for i in 0..r {
                b[i] += v * f[i];
                for j in 0..r {
                    a[i * r + j] += f[i] * f[j];
                }
            }
        }
        let x = solve_normal_equations(a, b, r);
        out_factors[k * r..(k + 1) * r].copy_from_slice(&x);
    }
}

fn als_objective(p: &PopularityMatrix, user_f: &[f64], content_f: &[f64], r: usize, lambda: f64) -> f64 {
    let mut sq = 0.0;
    for &(k, n, v) in p.observed() {
        let d = v - dot(&user_f[k * r..(k + 1) * r], &content_f[n * r..(n + 1) * r]);
        sq += d * d;
    }
    let reg: f64 = user_f.iter().chain(content_f).map(|x| x * x).sum();
    sq + lambda * reg
}

/// Alternating least squares: minimizes the regularized squared error
/// over the observed entries. Each half-step solves its normal equations
/// in closed form, so the objective never increases; an increase beyond
/// rounding (or a non-finite objective) is reported as a numerical
/// failure. Deterministic for a given seed.
pub fn factorize(
    p: &PopularityMatrix,
    r: usize,
    lambda_reg: f64,
    max_iters: usize,
    seed: u64,
) -> Result<FactorPair> {
    if r == 0 {
        return Err(Error::InvalidRank("rank must be at least 1".into()));
    }
    if r > p.num_users().min(p.num_contents()) {
        return Err(Error::InvalidRank(format!(
            "rank {r} exceeds min dimension of a {}x{} matrix",
            p.num_users(),
            p.num_contents()
        )));
    }
    if p.observed().is_empty() {
        return Err(Error::InvalidParameter("no observed entries to fit".into()));
    }
    if !lambda_reg.is_finite() || lambda_reg < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "regularization must be finite and nonnegative, got {lambda_reg}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("need at least one iteration".into()));
    }

    let mut user_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_users()];
    let mut content_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_contents()];
    for &(k, n, v) in p.observed() {
        user_obs[k].push((n, v));
        content_obs[n].push((k, v));
    }

    let mut rng = seeded_rng(seed);
    let init_scale = 1.0 / (r as f64).sqrt();
    let mut user_f: Vec<f64> =
        (0..p.num_users() * r).map(|_| rng.random::<f64>() * init_scale).collect();
    let mut content_f: Vec<f64> =
        (0..p.num_contents() * r).map(|_| rng.random::<f64>() * init_scale).collect();

    let mut history = Vec::with_capacity(2 * max_iters);
    let mut prev = f64::INFINITY;
    for _ in 0..max_iters {
        for contents_turn in [false, true] {
            if contents_turn {
                half_step(&mut content_f, &user_f, &content_obs, r, lambda_reg);
            } else {
                half_step(&mut user_f, &content_f, &user_obs, r, lambda_reg);
            }
            let obj = als_objective(p, &user_f, &content_f, r, lambda_reg);
            if !obj.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "objective diverged to {obj} after {} half-steps",
                    history.len() + 1
                )));
            }
            if obj > prev + 1e-9 * (1.0 + prev.abs()) {
                return Err(Error::NumericalFailure(format!(
                    "objective increased from {prev} to {obj}"
                )));
            }
            history.push(obj);
            prev = obj;
        }
    }

    Ok(FactorPair {
        rank: r,
        num_users: p.num_users(),
        num_contents: p.num_contents(),
        user_factors: user_f,
        content_factors: content_f,
        objective_history: history,
    })
}

/// Per-location content scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationScores {
    pub scores: Vec<f64>,
    /// Set when the location had no users and the scores fell back to
    /// uniform.
    pub uniform_fallback: bool,
}

/// Scores every content per location as the mean predicted rating over
/// that location's users. Invariant to user ordering within a location;
/// a location without users gets uniform scores, flagged.
pub fn predict_popularity(
    f: &FactorPair,
    location_user_sets: &[Vec<usize>],
) -> Result<Vec<LocationScores>> {
    let mut out = Vec::with_capacity(location_user_sets.len());
    for users in location_user_sets {
        if users.is_empty() {
            out.push(LocationScores {
                scores: vec![1.0 / f.num_contents() as f64; f.num_contents()],
                uniform_fallback: true,
            });
            continue;
        }
        let mut users = users.clone();
        users.sort_unstable(); // fixed summation order
        let mut scores = vec![0.0; f.num_contents()];
        for &k in &users {
            if k >= f.num_users() {
                return Err(Error::InvalidParameter(format!(
                    "user {k} outside the factorized population of {}",
                    f.num_users()
                )));
            }
            for (n, s) in scores.iter_mut().enumerate() {
                *s += f.predict(k, n);
            }
        }
        for s in &mut scores {
            *s /= users.len() as f64;
        }
        out.push(LocationScores { scores, uniform_fallback: false });
    }
    Ok(out)
}

/// Writes the sparse matrix as `user_id,content_id,rating` CSV.
pub fn write_sparse_matrix<W: io::Write>(w: &mut W, p: &PopularityMatrix) -> Result<()> {
    writeln!(w, "user_id,content_id,rating")?;
    for &(k, n, v) in p.observed() {
        writeln!(w, "{k},{n},{v}")?;
    }
    Ok(())
}

/// Reads a sparse matrix written by [`write_sparse_matrix`]; dimensions
/// are inferred as one past the largest observed indices.
pub fn read_sparse_matrix<R: io::BufRead>(r: R) -> Result<PopularityMatrix> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == "user_id,content_id,rating" => {}
        Some(Ok(h)) => return Err(Error::Format(format!("unrecognized matrix header: {h:?}"))),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Format("empty matrix file: missing header".into())),
    }
    let mut observed = Vec::new();
    let mut num_users = 0;
    let mut num_contents = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err =
            |what: &str, got: &str| Error::Format(format!("line {}: bad {what} {got:?}", lineno + 2));
        let k: usize = match fields.next() {
            Some(s) => s.parse().map_err(|_| parse_err("user id", s))?,
            None => return Err(parse_err("row", &line)),
        };
        let n: usize = match fields.next() {
            Some(s) => s.parse().map_err(|_| parse_err("content id", s))?,
            None => return Err(parse_err("row", &line)),
        };
        let v: f64 = match fields.next() {
            Some(s) => s.parse().map_err(|_| parse_err("rating", s))?,
            None => return Err(parse_err("row", &line)),
        };
        if fields.next().is_some() {
            return Err(Error::Format(format!("line {}: too many fields", lineno + 2)));
        }
        num_users = num_users.max(k + 1);
        num_contents = num_contents.max(n + 1);
        observed.push((k, n, v));
    }
    PopularityMatrix::new(num_users, num_contents, observed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popularity::ZipfPopularity;
    use crate::traffic::{generate_irm, split_stream, Assignment, IrmConfig};
    use rand_distr::Distribution;

    fn event(time: f64, content_id: usize, location_id: usize) -> RequestEvent {
        RequestEvent { time, content_id, location_id, user_id: None }
    }

    #[test]
    fn stationary_estimates_converge_to_the_law() {
        let n = 10;
        let pop = ZipfPopularity::new(0.8, n).unwrap();
        let cfg = IrmConfig {
            lambda_total: 50.0,
            popularity: pop.clone(),
            horizon: 2000.0,
            seed: 61,
        };
        let events: Vec<_> = generate_irm(&cfg).unwrap().collect();
        let est = windowed_estimate(&events, n, 1000.0, 2000.0, Level::Global).unwrap();
        assert_eq!(est.len(), 2);
        let last = &est[1];
        assert!(!last.stale);
        let total: u64 = last.counts.iter().sum();
        for c in 0..n {
            let p = pop.prob(c);
            let sigma = (p * (1.0 - p) / total as f64).sqrt();
            assert!(
                (last.frequencies[c] - p).abs() <= 3.0 * sigma,
                "content {c}: {} vs {p}",
                last.frequencies[c]
            );
        }
    }

    #[test]
    fn single_event_gives_point_mass() {
        let est =
            windowed_estimate(&[event(0.5, 3, 0)], 5, 1.0, 1.0, Level::Local(0)).unwrap();
        assert_eq!(est.len(), 1);
        assert_eq!(est[0].frequencies, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(!est[0].stale);
    }

    #[test]
    fn local_level_ignores_other_locations() {
        let events = [event(0.1, 0, 0), event(0.2, 1, 1), event(0.3, 1, 1)];
        let est = windowed_estimate(&events, 2, 1.0, 1.0, Level::Local(0)).unwrap();
        assert_eq!(est[0].counts, vec![1, 0]);
        let est = windowed_estimate(&events, 2, 1.0, 1.0, Level::Local(1)).unwrap();
        assert_eq!(est[0].counts, vec![0, 2]);
    }

    #[test]
    fn global_counts_equal_sum_of_local_counts() {
        let cfg = IrmConfig {
            lambda_total: 10.0,
            popularity: ZipfPopularity::new(0.8, 20).unwrap(),
            horizon: 1000.0,
            seed: 17,
        };
        let events: Vec<_> = generate_irm(&cfg).unwrap().collect();
        let l = 10;
        let split = split_stream(events.clone(), l, Assignment::UniformRandom, 3).unwrap();
        let merged: Vec<_> = {
            let mut v: Vec<_> = split.iter().flatten().copied().collect();
            v.sort_by(|a, b| a.time.total_cmp(&b.time));
            v
        };
        let global = windowed_estimate(&merged, 20, 100.0, 1000.0, Level::Global).unwrap();
        let locals: Vec<_> = (0..l)
            .map(|loc| windowed_estimate(&merged, 20, 100.0, 1000.0, Level::Local(loc)).unwrap())
            .collect();
        for w in 0..10 {
            for c in 0..20 {
                let sum: u64 = locals.iter().map(|est| est[w].counts[c]).sum();
                assert_eq!(global[w].counts[c], sum);
            }
        }
    }

    #[test]
    fn empty_windows_repeat_the_previous_estimate() {
        let events = [event(0.5, 0, 0), event(3.5, 1, 0)];
        let est = windowed_estimate(&events, 2, 1.0, 4.0, Level::Global).unwrap();
        assert_eq!(est.len(), 4);
        assert_eq!(est[0].frequencies, vec![1.0, 0.0]);
        assert!(!est[0].stale);
        for w in [1, 2] {
            assert!(est[w].stale);
            assert_eq!(est[w].frequencies, vec![1.0, 0.0]);
            assert_eq!(est[w].counts, vec![0, 0]);
        }
        assert_eq!(est[3].frequencies, vec![0.0, 1.0]);
    }

    #[test]
    fn leading_empty_windows_are_uniform_and_stale() {
        let est = windowed_estimate(&[event(2.5, 1, 0)], 2, 1.0, 3.0, Level::Global).unwrap();
        assert!(est[0].stale && est[1].stale);
        assert_eq!(est[0].frequencies, vec![0.5, 0.5]);
        assert_eq!(est[2].frequencies, vec![0.0, 1.0]);
    }

    #[test]
    fn estimator_rejects_bad_streams() {
        let mut e = WindowedEstimator::new(2, 1.0, 2.0, Level::Global).unwrap();
        e.observe(&event(1.5, 0, 0)).unwrap();
        assert!(e.observe(&event(0.5, 0, 0)).is_err()); // time regression
        let mut e = WindowedEstimator::new(2, 1.0, 2.0, Level::Global).unwrap();
        assert!(e.observe(&event(0.5, 7, 0)).is_err()); // bad content
        let mut e = WindowedEstimator::new(2, 1.0, 2.0, Level::Global).unwrap();
        assert!(e.observe(&event(9.0, 0, 0)).is_err()); // beyond horizon
        assert!(WindowedEstimator::new(0, 1.0, 2.0, Level::Global).is_err());
        assert!(WindowedEstimator::new(2, 0.0, 2.0, Level::Global).is_err());
    }

    #[test]
    fn detection_delay_finds_the_first_qualifying_window() {
        let mut events = vec![
            event(0.1, 0, 0),
            event(0.2, 0, 0),
            event(1.1, 0, 0),
            event(3.2, 0, 0),
        ];
        // content 5 arrives at t = 2.2 but is only requested in window 4
        events.push(event(4.1, 5, 0));
        events.push(event(4.2, 5, 0));
        events.push(event(4.3, 0, 0));
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let est = windowed_estimate(&events, 6, 1.0, 5.0, Level::Global).unwrap();
        // windows 2 (arrival), 3, 4 (detected): delay 3
        assert_eq!(detection_delay(&est, 5, 2.2, 1), Some(3));
        // content 3 never appears
        assert_eq!(detection_delay(&est, 3, 2.2, 1), None);
        // zero-frequency contents never count as detected even though
        // low ids win ties in placement
        assert_eq!(detection_delay(&est, 1, 0.0, 6), None);
    }

    #[test]
    fn matrix_validation() {
        assert!(PopularityMatrix::new(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(PopularityMatrix::new(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(PopularityMatrix::new(2, 2, vec![(0, 2, 1.0)]).is_err());
        assert!(PopularityMatrix::new(2, 2, vec![(0, 0, -1.0)]).is_err());
        assert!(PopularityMatrix::new(2, 2, vec![(0, 0, f64::NAN)]).is_err());
        assert!(PopularityMatrix::new(2, 2, vec![(1, 1, 3.0)]).is_ok());
    }

    #[test]
    fn rank_one_exact_recovery() {
        let k = 15;
        let n = 12;
        let mut rng = seeded_rng(5);
        let u: Vec<f64> = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
        let mut entries = Vec::new();
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                entries.push((i, j, ui * vj));
            }
        }
        let p = PopularityMatrix::new(k, n, entries.clone()).unwrap();
        let f = factorize(&p, 1, 0.0, 30, 7).unwrap();
        assert!(f.rmse(&entries) < 1e-6, "rmse = {}", f.rmse(&entries));
    }

    #[test]
    fn all_zero_observations_give_zero_objective() {
        let entries: Vec<_> = (0..4).flat_map(|i| (0..3).map(move |j| (i, j, 0.0))).collect();
        let p = PopularityMatrix::new(4, 3, entries.clone()).unwrap();
        let f = factorize(&p, 2, 0.0, 5, 1).unwrap();
        assert!(f.objective_history.last().unwrap() < &1e-18);
        assert!(f.rmse(&entries) < 1e-12);
    }

    #[test]
    fn objective_is_monotone_on_noisy_data() {
        let k = 40;
        let n = 60;
        let r = 3;
        let mut rng = seeded_rng(9);
        let normal = rand_distr::Normal::new(0.0, 0.1).unwrap();
        let u: Vec<f64> = (0..k * r).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..n * r).map(|_| rng.random::<f64>()).collect();
        let mut entries = Vec::new();
        for i in 0..k {
            for j in 0..n {
                if rng.random::<f64>() < 0.3 {
                    let clean = dot(&u[i * r..(i + 1) * r], &v[j * r..(j + 1) * r]);
                    entries.push((i, j, (clean + normal.sample(&mut rng)).max(0.0)));
                }
            }
        }
        let p = PopularityMatrix::new(k, n, entries).unwrap();
        let f = factorize(&p, r, 0.1, 25, 3).unwrap();
        assert_eq!(f.objective_history.len(), 50);
        for w in f.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn held_out_error_stays_near_the_noise_floor() {
        // rank-5 ground truth plus sigma = 0.01 noise, 20% observed
        let k = 200;
        let n = 500;
        let r = 5;
        let sigma = 0.01;
        let mut rng = seeded_rng(13);
        let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
        let scale = 1.0 / (r as f64).sqrt();
        let u: Vec<f64> = (0..k * r).map(|_| (0.2 + 0.8 * rng.random::<f64>()) * scale).collect();
        let v: Vec<f64> = (0..n * r).map(|_| (0.2 + 0.8 * rng.random::<f64>()) * scale).collect();
        let mut train = Vec::new();
        let mut held_out = Vec::new();
        for i in 0..k {
            for j in 0..n {
                let clean = dot(&u[i * r..(i + 1) * r], &v[j * r..(j + 1) * r]);
                if rng.random::<f64>() < 0.2 {
                    train.push((i, j, clean + normal.sample(&mut rng)));
                } else {
                    held_out.push((i, j, clean));
                }
            }
        }
        let p = PopularityMatrix::new(k, n, train).unwrap();
        let f = factorize(&p, r, 0.01, 40, 21).unwrap();
        let rmse = f.rmse(&held_out);
        assert!(rmse < 5.0 * sigma, "held-out rmse = {rmse}");
    }

    #[test]
    fn factorize_is_deterministic_per_seed() {
        let entries = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)];
        let p = PopularityMatrix::new(2, 2, entries).unwrap();
        let a = factorize(&p, 1, 0.01, 10, 11).unwrap();
        let b = factorize(&p, 1, 0.01, 10, 11).unwrap();
        assert_eq!(a, b);
        let c = factorize(&p, 1, 0.01, 10, 12).unwrap();
        assert_ne!(a.user_factors, c.user_factors);
    }

    #[test]
    fn factorize_validation() {
        let p = PopularityMatrix::new(3, 4, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(factorize(&p, 0, 0.0, 5, 1), Err(Error::InvalidRank(_))));
        assert!(matches!(factorize(&p, 4, 0.0, 5, 1), Err(Error::InvalidRank(_))));
        assert!(factorize(&p, 1, -1.0, 5, 1).is_err());
        assert!(factorize(&p, 1, 0.0, 0, 1).is_err());
        let empty = PopularityMatrix::new(3, 4, Vec::new()).unwrap();
        assert!(factorize(&empty, 1, 0.0, 5, 1).is_err());
    }

    fn block_factors() -> FactorPair {
        // two disjoint user clusters with disjoint interests
        let mut entries = Vec::new();
        for k in 0..10 {
            for n in 0..10 {
                let same_block = (k < 5) == (n < 5);
                entries.push((k, n, if same_block { 1.0 } else { 0.0 }));
            }
        }
        let p = PopularityMatrix::new(10, 10, entries).unwrap();
        factorize(&p, 2, 1e-4, 50, 19).unwrap()
    }

    #[test]
    fn disjoint_clusters_get_disjoint_placements() {
        let f = block_factors();
        let scores =
            predict_popularity(&f, &[(0..5).collect(), (5..10).collect()]).unwrap();
        let top: Vec<Vec<usize>> = scores
            .iter()
            .map(|s| crate::cache::static_place(&s.scores, 5))
            .collect();
        let a: HashSet<usize> = top[0].iter().copied().collect();
        let b: HashSet<usize> = top[1].iter().copied().collect();
        assert!(a.is_disjoint(&b), "{a:?} vs {b:?}");
        assert!(a.iter().all(|&c| c < 5));
        assert!(b.iter().all(|&c| c >= 5));
    }

    #[test]
    fn prediction_reductions() {
        let f = block_factors();
        // a single user's location scores are that user's predicted row
        let scores = predict_popularity(&f, &[vec![3]]).unwrap();
        for n in 0..10 {
            assert_eq!(scores[0].scores[n], f.predict(3, n));
        }
        // identical user sets give identical scores
        let scores = predict_popularity(&f, &[vec![2], vec![2]]).unwrap();
        assert_eq!(scores[0], scores[1]);
        // user order within a location does not matter
        let a = predict_popularity(&f, &[vec![3, 1, 4]]).unwrap();
        let b = predict_popularity(&f, &[vec![4, 3, 1]]).unwrap();
        assert_eq!(a, b);
        // empty locations fall back to uniform, flagged
        let scores = predict_popularity(&f, &[vec![]]).unwrap();
        assert!(scores[0].uniform_fallback);
        assert!(scores[0].scores.iter().all(|&s| s == 0.1));
        // unknown users are an error
        assert!(predict_popularity(&f, &[vec![99]]).is_err());
    }

    #[test]
    fn sparse_matrix_roundtrip() {
        let p =
            PopularityMatrix::new(3, 4, vec![(0, 1, 1.5), (2, 3, 0.25), (1, 0, 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_sparse_matrix(&mut buf, &p).unwrap();
        let back = read_sparse_matrix(io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back, p);

        for bad in [
            "nope\n0,0,1\n",
            "user_id,content_id,rating\n0,0\n",
            "user_id,content_id,rating\n0,0,x\n",
            "user_id,content_id,rating\n0,0,1,9\n",
        ] {
            assert!(read_sparse_matrix(io::BufReader::new(bad.as_bytes())).is_err());
        }
    }
}
