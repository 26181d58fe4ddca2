//! Stochastic-geometry deployment model: cache-equipped base stations
//! and users dropped as planar Poisson point processes, evaluated by
//! Monte Carlo.
//!
//! Each trial drops a typical user uniformly in the window, associates
//! it with the nearest base station under the toroidal metric (wrapping
//! suppresses window-edge effects), draws a request from the popularity
//! law, and accepts delivery iff the downlink SINR clears the target
//! AND the nearest station caches the content. Cache misses count as
//! not-delivered-by-cache; hauling misses over the backhaul is outside
//! the radio scope. Trials use independent seed substreams, so results
//! are reproducible and accumulators merge associatively.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::popularity::ZipfPopularity;
use crate::rng::{seeded_rng, substream};
use crate::stats::mean_and_stderr;

/// Axis-aligned simulation window in meters, anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    width: f64,
    height: f64,
}

impl Rect {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !width.is_finite() || !height.is_finite() || width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "window must have positive finite sides, got {width} x {height}"
            )));
        }
        Ok(Rect { width, height })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Distance with wrap-around on both axes (the window as a torus).
    pub fn toroidal_distance(&self, a: Point, b: Point) -> f64 {
        let dx = (a.x - b.x).abs();
        let dx = dx.min(self.width - dx);
        let dy = (a.y - b.y).abs();
        let dy = dy.min(self.height - dy);
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Draws a homogeneous PPP restricted to the window: the point count is
/// Poisson(intensity × area) and positions are i.i.d. uniform.
pub fn sample_ppp(intensity: f64, window: &Rect, seed: u64) -> Result<Vec<Point>> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "intensity must be finite and nonnegative, got {intensity}"
        )));
    }
    let mean = intensity * window.area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = seeded_rng(seed);
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    Ok((0..count)
        .map(|_| Point {
            x: rng.random::<f64>() * window.width,
            y: rng.random::<f64>() * window.height,
        })
        .collect())
}

/// A sampled network snapshot: base stations and users in a window.
///
/// `bs_caches` optionally pins explicit static cache contents per base
/// station; `None` means every station stores the top-M contents of the
/// popularity law passed to [`simulate_deployment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub window: Rect,
    pub bs_intensity: f64,
    pub user_intensity: f64,
    pub bs_points: Vec<Point>,
    pub user_points: Vec<Point>,
    pub bs_caches: Option<Vec<BTreeSet<usize>>>,
}

/// Samples base stations and users as independent PPPs.
pub fn sample_deployment(
    window: Rect,
    bs_intensity: f64,
    user_intensity: f64,
    seed: u64,
) -> Result<Deployment> {
    let bs_points = sample_ppp(bs_intensity, &window, substream(seed, 0))?;
    let user_points = sample_ppp(user_intensity, &window, substream(seed, 1))?;
    Ok(Deployment {
        window,
        bs_intensity,
        user_intensity,
        bs_points,
        user_points,
        bs_caches: None,
    })
}

impl Deployment {
    pub fn validate(&self) -> Result<()> {
        if self.bs_points.iter().chain(&self.user_points).any(|&p| !self.window.contains(p)) {
            return Err(Error::InvalidParameter("point outside the window".into()));
        }
        if let Some(caches) = &self.bs_caches {
            if caches.len() != self.bs_points.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} cache sets for {} base stations",
                    caches.len(),
                    self.bs_points.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Rayleigh,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power, watts.
    pub transmit_power: f64,
    /// Path-loss exponent β; must exceed 2 for finite far-field interference.
    pub path_loss_exponent: f64,
    pub fading: Fading,
    /// Noise power, watts.
    pub noise_power: f64,
    /// Target SINR θ (linear, not dB).
    pub target_sinr: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !self.transmit_power.is_finite() || self.transmit_power <= 0.0 {
            return Err(Error::InvalidParameter("transmit power must be positive".into()));
        }
        if !self.path_loss_exponent.is_finite() || self.path_loss_exponent <= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must exceed 2, got {}",
                self.path_loss_exponent
            )));
        }
        if !self.noise_power.is_finite() || self.noise_power < 0.0 {
            return Err(Error::InvalidParameter("noise power must be nonnegative".into()));
        }
        if !self.target_sinr.is_finite() || self.target_sinr <= 0.0 {
            return Err(Error::InvalidParameter("target SINR must be positive".into()));
        }
        Ok(())
    }
}

/// Monte-Carlo estimates with standard errors over trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    /// Fraction of trials NOT served from the cache at target SINR.
    pub outage_probability: f64,
    pub outage_stderr: f64,
    /// Mean of hit × log2(1 + SINR), bits/s/Hz (misses contribute 0).
    pub avg_delivery_rate: f64,
    pub rate_stderr: f64,
    /// Fraction of trials whose request was cached at the serving BS.
    pub cache_hit_rate: f64,
    pub hit_stderr: f64,
    pub num_trials: usize,
}

fn nearest_bs(window: &Rect, stations: &[Point], user: Point) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, &bs) in stations.iter().enumerate() {
        let d = window.toroidal_distance(bs, user);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Evaluates one deployment: per trial, a typical user is dropped
/// uniformly, associated with the nearest base station (toroidal
/// metric), and its request (drawn from `pop`) succeeds iff the
/// downlink SINR reaches the target and the station caches the content.
///
/// Trial i consumes the seed substream i: user position, then the
/// request, then one fading gain per base station.
pub fn simulate_deployment(
    d: &Deployment,
    r: &RadioParams,
    pop: &ZipfPopularity,
    m: usize,
    num_trials: usize,
    seed: u64,
) -> Result<SimulationResult> {
    d.validate()?;
    r.validate()?;
    if d.bs_points.is_empty() {
        return Err(Error::DegenerateDeployment(
            "no base station fell inside the window".into(),
        ));
    }
    if num_trials == 0 {
        return Err(Error::InvalidParameter("at least one trial required".into()));
    }
    if m > pop.len() {
        return Err(Error::InvalidParameter(format!(
            "cache size {m} exceeds catalog {}",
            pop.len()
        )));
    }
    if let Some(caches) = &d.bs_caches {
        for set in caches {
            if set.len() > m {
                return Err(Error::InvalidParameter(format!(
                    "a base station stores {} contents, cache size is {m}",
                    set.len()
                )));
            }
            if set.iter().any(|&c| c >= pop.len()) {
                return Err(Error::InvalidParameter("cached content outside catalog".into()));
            }
        }
    }
    let request_dist = rand_distr::weighted::WeightedAliasIndex::new(pop.probabilities().to_vec())
        .map_err(|e| Error::InvalidParameter(format!("popularity weights: {e}")))?;
    let fading = match r.fading {
        Fading::Rayleigh => Some(Exp::new(1.0).expect("unit rate is valid")),
        Fading::None => None,
    };
    let mut hits = Vec::with_capacity(num_trials);
    let mut successes = Vec::with_capacity(num_trials);
    let mut rates = Vec::with_capacity(num_trials);
    for trial in 0..num_trials {
        let mut rng = seeded_rng(substream(seed, trial as u64));
        let user = Point {
            x: rng.random::<f64>() * d.window.width(),
            y: rng.random::<f64>() * d.window.height(),
        };
        let content = request_dist.sample(&mut rng);
        let gains: Vec<f64> = (0..d.bs_points.len())
            .map(|_| fading.as_ref().map_or(1.0, |f| f.sample(&mut rng)))
            .collect();
        let (serving, distance) = nearest_bs(&d.window, &d.bs_points, user);
        let power_at = |i: usize, dist: f64| {
            // clamp avoids a 0^-β singularity when a point coincides
            r.transmit_power * gains[i] * dist.max(1e-9).powf(-r.path_loss_exponent)
        };
        let signal = power_at(serving, distance);
        let mut interference = 0.0;
        for (i, &bs) in d.bs_points.iter().enumerate() {
            if i != serving {
                interference += power_at(i, d.window.toroidal_distance(bs, user));
            }
        }
        let sinr = signal / (r.noise_power + interference);
        let hit = match &d.bs_caches {
            Some(caches) => caches[serving].contains(&content),
            None => content < m,
        };
        hits.push(if hit { 1.0 } else { 0.0 });
        let success = hit && sinr >= r.target_sinr;
        successes.push(if success { 0.0 } else { 1.0 }); // outage indicator
        rates.push(if hit { (1.0 + sinr).log2() } else { 0.0 });
    }
    let (outage, outage_se) = mean_and_stderr(&successes);
    let (rate, rate_se) = mean_and_stderr(&rates);
    let (hit, hit_se) = mean_and_stderr(&hits);
    Ok(SimulationResult {
        outage_probability: outage,
        outage_stderr: outage_se,
        avg_delivery_rate: rate,
        rate_stderr: rate_se,
        cache_hit_rate: hit,
        hit_stderr: hit_se,
        num_trials,
    })
}

/// Snapshot export: CSV `x,y,kind` with kind ∈ {bs, user}.
pub fn write_snapshot_csv<W: Write>(mut writer: W, d: &Deployment) -> Result<()> {
    writeln!(writer, "x,y,kind")?;
    for p in &d.bs_points {
        writeln!(writer, "{},{},bs", p.x, p.y)?;
    }
    for p in &d.user_points {
        writeln!(writer, "{},{},user", p.x, p.y)?;
    }
    Ok(())
}

pub const RESULTS_CSV_HEADER: &str = "lambda_b,M,alpha,theta,outage,avg_rate,stderr";

/// One results row matching [`RESULTS_CSV_HEADER`]; `stderr` is the
/// outage standard error.
pub fn results_csv_row(
    lambda_b: f64,
    m: usize,
    alpha: f64,
    theta: f64,
    result: &SimulationResult,
) -> String {
    format!(
        "{lambda_b},{m},{alpha},{theta},{},{},{}",
        result.outage_probability, result.avg_delivery_rate, result.outage_stderr
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn km_window() -> Rect {
        Rect::new(1000.0, 1000.0).unwrap()
    }

    fn default_radio() -> RadioParams {
        RadioParams {
            transmit_power: 1.0,
            path_loss_exponent: 4.0,
            fading: Fading::Rayleigh,
            noise_power: 1e-9,
            target_sinr: 0.5,
        }
    }

    fn test_deployment(seed: u64) -> Deployment {
        sample_deployment(km_window(), 1e-4, 1e-4, seed).unwrap()
    }

    #[test]
    fn zero_intensity_gives_empty_set() {
        assert!(sample_ppp(0.0, &km_window(), 1).unwrap().is_empty());
        assert!(sample_ppp(-1.0, &km_window(), 1).is_err());
        assert!(Rect::new(0.0, 5.0).is_err());
        assert!(Rect::new(5.0, f64::NAN).is_err());
    }

    #[test]
    fn ppp_is_deterministic_and_in_window() {
        let w = km_window();
        let a = sample_ppp(1e-4, &w, 7).unwrap();
        let b = sample_ppp(1e-4, &w, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(1e-4, &w, 8).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|&p| w.contains(p)));
    }

    #[test]
    fn ppp_counts_match_poisson_moments() {
        // lambda = 1e-4 / m^2 over 1 km^2: mean count 100
        let w = km_window();
        let counts: Vec<f64> =
            (0..1000).map(|s| sample_ppp(1e-4, &w, s).unwrap().len() as f64).collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        // sample mean of 1000 Poisson(100) draws: sd = sqrt(100/1000)
        assert!((mean - 100.0).abs() < 3.0 * (100.0f64 / 1000.0).sqrt(), "mean {mean}");
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // (n-1) s^2 / sigma^2 ~ chi^2(n-1)
        let chi = ChiSquared::new(n - 1.0).unwrap();
        let lo = 100.0 * chi.inverse_cdf(0.005) / (n - 1.0);
        let hi = 100.0 * chi.inverse_cdf(0.995) / (n - 1.0);
        assert!(var > lo && var < hi, "variance {var} outside [{lo}, {hi}]");
    }

    #[test]
    fn ppp_counts_pass_chi_squared_fit() {
        // goodness-of-fit of 1000 counts against Poisson(20) at 0.01
        let w = km_window();
        let mean = 20.0f64;
        let counts: Vec<usize> =
            (0..1000).map(|s| sample_ppp(2e-5, &w, 1000 + s).unwrap().len()).collect();
        // bin counts, pooling tails so every expected count is >= 5
        let pmf = |k: usize| {
            let mut log_p = -mean + k as f64 * mean.ln();
            for i in 1..=k {
                log_p -= (i as f64).ln();
            }
            log_p.exp()
        };
        let (lo, hi) = (12usize, 28usize);
        let mut expected = vec![0.0; hi - lo + 3];
        let mut observed = vec![0.0; hi - lo + 3];
        for k in 0..200 {
            let bin = if k < lo { 0 } else if k > hi { expected.len() - 1 } else { k - lo + 1 };
            expected[bin] += 1000.0 * pmf(k);
        }
        for &c in &counts {
            let bin = if c < lo { 0 } else if c > hi { observed.len() - 1 } else { c - lo + 1 };
            observed[bin] += 1.0;
        }
        assert!(expected.iter().all(|&e| e >= 5.0), "bins too thin");
        let stat: f64 = expected
            .iter()
            .zip(&observed)
            .map(|(e, o)| (o - e) * (o - e) / e)
            .sum();
        let crit = ChiSquared::new((expected.len() - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi^2 {stat} exceeds {crit}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let d = test_deployment(3);
        let pop = ZipfPopularity::new(0.8, 100).unwrap();
        let r = default_radio();
        let a = simulate_deployment(&d, &r, &pop, 10, 500, 42).unwrap();
        let b = simulate_deployment(&d, &r, &pop, 10, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_deployment_is_degenerate() {
        let d = Deployment {
            window: km_window(),
            bs_intensity: 0.0,
            user_intensity: 0.0,
            bs_points: Vec::new(),
            user_points: Vec::new(),
            bs_caches: None,
        };
        let pop = ZipfPopularity::new(0.8, 10).unwrap();
        let err = simulate_deployment(&d, &default_radio(), &pop, 1, 10, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateDeployment(_)));
    }

    #[test]
    fn full_and_empty_caches_bound_the_hit_rate() {
        let d = test_deployment(5);
        let pop = ZipfPopularity::new(0.8, 50).unwrap();
        let r = default_radio();
        let full = simulate_deployment(&d, &r, &pop, 50, 800, 9).unwrap();
        assert_eq!(full.cache_hit_rate, 1.0);
        assert!(full.outage_probability < 1.0);
        let empty = simulate_deployment(&d, &r, &pop, 0, 800, 9).unwrap();
        assert_eq!(empty.cache_hit_rate, 0.0);
        assert_eq!(empty.avg_delivery_rate, 0.0);
        assert_eq!(empty.outage_probability, 1.0);
    }

    #[test]
    fn hit_rate_matches_the_popularity_mass() {
        // hits depend only on the request law: compare to top_m_mass
        let d = test_deployment(11);
        let pop = ZipfPopularity::new(0.8, 100).unwrap();
        let res = simulate_deployment(&d, &default_radio(), &pop, 10, 4000, 77).unwrap();
        let expected = pop.top_m_mass(10).unwrap();
        assert!(
            (res.cache_hit_rate - expected).abs() < 3.0 * res.hit_stderr,
            "hit {} vs mass {expected} (se {})",
            res.cache_hit_rate,
            res.hit_stderr
        );
    }

    #[test]
    fn skewness_raises_the_hit_rate() {
        // alpha 0.5 -> 1.2 at M/N = 0.1: separation beyond 3 sigma
        let d = test_deployment(13);
        let r = default_radio();
        let low = ZipfPopularity::new(0.5, 100).unwrap();
        let high = ZipfPopularity::new(1.2, 100).unwrap();
        let a = simulate_deployment(&d, &r, &low, 10, 4000, 21).unwrap();
        let b = simulate_deployment(&d, &r, &high, 10, 4000, 21).unwrap();
        assert!(
            b.cache_hit_rate - a.cache_hit_rate > 3.0 * (a.hit_stderr + b.hit_stderr),
            "{} vs {}",
            a.cache_hit_rate,
            b.cache_hit_rate
        );
    }

    #[test]
    fn outage_grows_with_target_and_noise() {
        let d = test_deployment(17);
        let pop = ZipfPopularity::new(0.8, 50).unwrap();
        let mut prev = -1.0;
        for theta_db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
            let r = RadioParams {
                target_sinr: 10.0f64.powf(theta_db / 10.0),
                ..default_radio()
            };
            let res = simulate_deployment(&d, &r, &pop, 25, 1500, 5).unwrap();
            assert!(res.outage_probability >= prev, "theta {theta_db} dB");
            prev = res.outage_probability;
        }
        let mut prev = -1.0;
        for noise_exp in [-12.0, -9.0, -6.0f64] {
            let r = RadioParams { noise_power: 10.0f64.powf(noise_exp), ..default_radio() };
            let res = simulate_deployment(&d, &r, &pop, 25, 1500, 5).unwrap();
            assert!(res.outage_probability >= prev, "noise 1e{noise_exp}");
            prev = res.outage_probability;
        }
    }

    #[test]
    fn toroidal_wrap_controls_edge_effects() {
        // doubling the window side at the same intensity should leave
        // outage within joint confidence bounds
        let pop = ZipfPopularity::new(0.8, 50).unwrap();
        let r = default_radio();
        let small = sample_deployment(km_window(), 1e-4, 0.0, 23).unwrap();
        let big =
            sample_deployment(Rect::new(2000.0, 2000.0).unwrap(), 1e-4, 0.0, 29).unwrap();
        let a = simulate_deployment(&small, &r, &pop, 50, 3000, 31).unwrap();
        let b = simulate_deployment(&big, &r, &pop, 50, 3000, 37).unwrap();
        assert!(
            (a.outage_probability - b.outage_probability).abs()
                < 4.0 * (a.outage_stderr + b.outage_stderr),
            "{} vs {}",
            a.outage_probability,
            b.outage_probability
        );
    }

    #[test]
    fn toroidal_distance_wraps() {
        let w = km_window();
        let a = Point { x: 990.0, y: 500.0 };
        let b = Point { x: 10.0, y: 500.0 };
        assert!((w.toroidal_distance(a, b) - 20.0).abs() < 1e-12);
        let c = Point { x: 500.0, y: 990.0 };
        let d = Point { x: 500.0, y: 30.0 };
        assert!((w.toroidal_distance(c, d) - 40.0).abs() < 1e-12);
        // nearest association picks the wrapped neighbor
        let stations = vec![Point { x: 500.0, y: 500.0 }, Point { x: 995.0, y: 500.0 }];
        let (idx, dist) = nearest_bs(&w, &stations, Point { x: 5.0, y: 500.0 });
        assert_eq!(idx, 1);
        assert!((dist - 10.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_caches_override_the_top_m_default() {
        let mut d = test_deployment(41);
        let pop = ZipfPopularity::new(0.8, 20).unwrap();
        let r = default_radio();
        let top2 = simulate_deployment(&d, &r, &pop, 2, 2000, 3).unwrap();
        // pinning {0, 1} everywhere must reproduce the default exactly
        d.bs_caches = Some(vec![BTreeSet::from([0, 1]); d.bs_points.len()]);
        let pinned = simulate_deployment(&d, &r, &pop, 2, 2000, 3).unwrap();
        assert_eq!(top2, pinned);
        // an oversized pinned cache is rejected
        d.bs_caches = Some(vec![BTreeSet::from([0, 1, 2]); d.bs_points.len()]);
        assert!(simulate_deployment(&d, &r, &pop, 2, 100, 3).is_err());
    }

    #[test]
    fn radio_params_are_validated() {
        let pop = ZipfPopularity::new(0.8, 10).unwrap();
        let d = test_deployment(43);
        let bad_beta = RadioParams { path_loss_exponent: 2.0, ..default_radio() };
        assert!(simulate_deployment(&d, &bad_beta, &pop, 1, 10, 1).is_err());
        let bad_theta = RadioParams { target_sinr: 0.0, ..default_radio() };
        assert!(simulate_deployment(&d, &bad_theta, &pop, 1, 10, 1).is_err());
        assert!(simulate_deployment(&d, &default_radio(), &pop, 11, 10, 1).is_err());
        assert!(simulate_deployment(&d, &default_radio(), &pop, 1, 0, 1).is_err());
    }

    #[test]
    fn snapshot_and_results_csv_formats() {
        let d = Deployment {
            window: km_window(),
            bs_intensity: 0.0,
            user_intensity: 0.0,
            bs_points: vec![Point { x: 1.5, y: 2.0 }],
            user_points: vec![Point { x: 3.0, y: 4.5 }],
            bs_caches: None,
        };
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &d).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,kind\n1.5,2,bs\n3,4.5,user\n");

        let res = SimulationResult {
            outage_probability: 0.25,
            outage_stderr: 0.01,
            avg_delivery_rate: 1.5,
            rate_stderr: 0.05,
            cache_hit_rate: 0.5,
            hit_stderr: 0.02,
            num_trials: 100,
        };
        assert_eq!(RESULTS_CSV_HEADER.split(',').count(), 7);
        assert_eq!(
            results_csv_row(1e-4, 10, 0.8, 0.5, &res),
            "0.0001,10,0.8,0.5,0.25,1.5,0.01"
        );
    }
}
