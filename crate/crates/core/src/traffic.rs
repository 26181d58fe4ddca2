//! Request-stream generation.
//!
//! Two traffic models drive every simulation in the toolkit:
//!
//! - IRM: each content n is requested according to an independent Poisson
//!   process with rate `lambda_total * p_n`, so the superposition is
//!   homogeneous Poisson with rate `lambda_total` and contents are drawn
//!   i.i.d. from the popularity law.
//! - SNM (shot noise): contents arrive over time as a Poisson process;
//!   each carries a rectangular request-rate pulse of a given lifespan and
//!   expected total volume, after which it is never requested again.
//!
//! Streams are lazy iterators: month-long horizons at CDN rates never
//! materialize all events at once. Times are seconds internally;
//! per-day helpers convert at the boundary.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::popularity::ZipfPopularity;
use crate::rng::{seeded_rng, substream, SeededRng};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// One timestamped content request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestEvent {
    /// Seconds since the start of the horizon.
    pub time: f64,
    pub content_id: usize,
    pub location_id: usize,
    pub user_id: Option<u64>,
}

/// Static-popularity Poisson traffic.
#[derive(Debug, Clone)]
pub struct IrmConfig {
    /// Aggregate request rate, requests per second.
    pub lambda_total: f64,
    pub popularity: ZipfPopularity,
    /// Horizon in seconds.
    pub horizon: f64,
    pub seed: u64,
}

impl IrmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda_total.is_finite() || self.lambda_total <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "request rate must be positive and finite, got {}",
                self.lambda_total
            )));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Mean request rate per content, in requests/content/day.
    pub fn per_content_rate_per_day(&self) -> f64 {
        self.lambda_total * SECONDS_PER_DAY / self.popularity.len() as f64
    }

    /// Rescales the aggregate rate so the mean per-content rate equals
    /// `target` requests/content/day.
    pub fn scale_to_sparse_regime(&self, target: f64) -> Result<IrmConfig> {
        if !target.is_finite() || target <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "target rate must be positive, got {target}"
            )));
        }
        let mut cfg = self.clone();
        cfg.lambda_total = target * self.popularity.len() as f64 / SECONDS_PER_DAY;
        Ok(cfg)
    }
}

/// Lazy IRM event stream; see [`generate_irm`].
pub struct IrmStream {
    rng: SeededRng,
    interarrival: Exp<f64>,
    sampler: rand_distr::weighted::WeightedAliasIndex<f64>,
    t: f64,
    horizon: f64,
}

/// Builds the IRM event iterator. Deterministic given the config seed;
/// events are strictly time-sorted.
pub fn generate_irm(cfg: &IrmConfig) -> Result<IrmStream> {
    cfg.validate()?;
    let sampler =
        rand_distr::weighted::WeightedAliasIndex::new(cfg.popularity.probabilities().to_vec())
            .map_err(|e| Error::InvalidParameter(format!("popularity weights: {e}")))?;
    let interarrival = Exp::new(cfg.lambda_total)
        .map_err(|e| Error::InvalidParameter(format!("request rate: {e}")))?;
    Ok(IrmStream {
        rng: seeded_rng(cfg.seed),
        interarrival,
        sampler,
        t: 0.0,
        horizon: cfg.horizon,
    })
}

impl Iterator for IrmStream {
    type Item = RequestEvent;

    fn next(&mut self) -> Option<RequestEvent> {
        self.t += self.interarrival.sample(&mut self.rng);
        if self.t > self.horizon {
            return None;
        }
        let content_id = self.sampler.sample(&mut self.rng);
        Some(RequestEvent { time: self.t, content_id, location_id: 0, user_id: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    Rectangular,
}

/// One realized shot-noise content: a rectangular request-rate pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoiseContent {
    pub content_id: usize,
    pub class_index: usize,
    pub arrival_time: f64,
    /// Pulse duration, seconds.
    pub lifespan: f64,
    /// Expected number of requests over the whole pulse.
    pub total_volume: f64,
    pub shape: PulseShape,
}

impl ShotNoiseContent {
    /// Instantaneous request rate inside the pulse.
    pub fn rate(&self) -> f64 {
        self.total_volume / self.lifespan
    }

    pub fn end_time(&self) -> f64 {
        self.arrival_time + self.lifespan
    }

    /// Poisson request times for this content alone, truncated to
    /// `horizon`. A zero-volume pulse yields no requests.
    pub fn request_times(&self, horizon: f64, mut rng: SeededRng) -> Vec<f64> {
        let rate = self.rate();
        if rate <= 0.0 {
            return Vec::new();
        }
        let exp = Exp::new(rate).expect("positive rate");
        let cutoff = self.end_time().min(horizon);
        let mut times = Vec::new();
        let mut t = self.arrival_time;
        loop {
            t += exp.sample(&mut rng);
            if t > cutoff {
                return times;
            }
            times.push(t);
        }
    }
}

/// One SNM content class: all contents of the class share the lifespan
/// and expected volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnmClass {
    /// Pulse duration, seconds.
    pub lifespan: f64,
    /// Expected requests per content of this class.
    pub total_volume: f64,
    /// Probability that a new content belongs to this class.
    pub probability: f64,
}

/// Shot-noise traffic configuration.
#[derive(Debug, Clone)]
pub struct SnmConfig {
    /// New contents per second.
    pub content_arrival_rate: f64,
    pub classes: Vec<SnmClass>,
    /// When set, each content draws one multiplier u ~ U[0.5, 1.5] and
    /// scales both lifespan and volume by it, so volume stays exactly
    /// proportional to lifespan within a class (popular contents live
    /// longer). When unset, contents take their class values verbatim.
    pub volume_lifespan_correlation: bool,
    /// Horizon in seconds.
    pub horizon: f64,
    pub seed: u64,
}

impl SnmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.content_arrival_rate.is_finite() || self.content_arrival_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "content arrival rate must be positive, got {}",
                self.content_arrival_rate
            )));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidParameter("class list must not be empty".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if !c.lifespan.is_finite() || c.lifespan <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "class {i}: lifespan must be positive, got {}",
                    c.lifespan
                )));
            }
            if !c.total_volume.is_finite() || c.total_volume <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "class {i}: volume must be positive, got {}",
                    c.total_volume
                )));
            }
            if !c.probability.is_finite() || c.probability < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "class {i}: probability must be nonnegative, got {}",
                    c.probability
                )));
            }
        }
        let psum: f64 = self.classes.iter().map(|c| c.probability).sum();
        if (psum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "class probabilities must sum to 1, got {psum}"
            )));
        }
        Ok(())
    }

    /// Mean requests/content/day, weighted over classes: a class-c
    /// content generates volume_c requests over lifespan_c.
    pub fn per_content_rate_per_day(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.probability * c.total_volume / (c.lifespan / SECONDS_PER_DAY))
            .sum()
    }

    /// Scales all class volumes by a common factor so the mean
    /// per-content rate equals `target` requests/content/day.
    pub fn scale_to_sparse_regime(&self, target: f64) -> Result<SnmConfig> {
        if !target.is_finite() || target <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "target rate must be positive, got {target}"
            )));
        }
        self.validate()?;
        let factor = target / self.per_content_rate_per_day();
        let mut cfg = self.clone();
        for c in &mut cfg.classes {
            c.total_volume *= factor;
        }
        Ok(cfg)
    }
}

/// Realizes the content arrival process: Poisson arrivals over the
/// horizon, each assigned a class (and the optional lifespan-volume
/// coupling multiplier).
fn realize_contents(cfg: &SnmConfig) -> Vec<ShotNoiseContent> {
    let mut rng = seeded_rng(substream(cfg.seed, 0));
    let exp = Exp::new(cfg.content_arrival_rate).expect("validated rate");
    let mut contents = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(&mut rng);
        if t > cfg.horizon {
            return contents;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut class_index = cfg.classes.len() - 1;
        for (i, c) in cfg.classes.iter().enumerate() {
            acc += c.probability;
            if u < acc {
                class_index = i;
                break;
            }
        }
        let class = &cfg.classes[class_index];
        let scale = if cfg.volume_lifespan_correlation {
            0.5 + rng.random::<f64>()
        } else {
            1.0
        };
        contents.push(ShotNoiseContent {
            content_id: contents.len(),
            class_index,
            arrival_time: t,
            lifespan: class.lifespan * scale,
            total_volume: class.total_volume * scale,
            shape: PulseShape::Rectangular,
        });
    }
}

struct PendingRequest {
    time: f64,
    content_id: usize,
    cutoff: f64,
    interarrival: Exp<f64>,
    rng: SeededRng,
}

impl PartialEq for PendingRequest {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.content_id == other.content_id
    }
}
impl Eq for PendingRequest {}
impl PartialOrd for PendingRequest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PendingRequest {
    // reversed: BinaryHeap is a max-heap, we want earliest-first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.content_id.cmp(&self.content_id))
    }
}

/// Lazy SNM event stream: a priority queue holds the next pending
/// request of every still-active pulse, so events come out time-sorted
/// without materializing whole pulses.
pub struct SnmStream {
    heap: BinaryHeap<PendingRequest>,
}

impl Iterator for SnmStream {
    type Item = RequestEvent;

    fn next(&mut self) -> Option<RequestEvent> {
        let mut head = self.heap.pop()?;
        let event = RequestEvent {
            time: head.time,
            content_id: head.content_id,
            location_id: 0,
            user_id: None,
        };
        head.time += head.interarrival.sample(&mut head.rng);
        if head.time <= head.cutoff {
            self.heap.push(head);
        }
        Some(event)
    }
}

/// Generates shot-noise traffic: returns the realized content list and
/// the (lazy, time-sorted) request stream.
///
/// Each content's request process draws from its own seed substream, so
/// the stream is reproducible and insensitive to interleaving.
pub fn generate_snm(cfg: &SnmConfig) -> Result<(Vec<ShotNoiseContent>, SnmStream)> {
    cfg.validate()?;
    let contents = realize_contents(cfg);
    let mut heap = BinaryHeap::with_capacity(contents.len());
    for c in &contents {
        let rate = c.rate();
        if rate <= 0.0 {
            continue;
        }
        let interarrival = Exp::new(rate).expect("positive rate");
        let mut rng = seeded_rng(substream(cfg.seed, 1 + c.content_id as u64));
        let first = c.arrival_time + interarrival.sample(&mut rng);
        let cutoff = c.end_time().min(cfg.horizon);
        if first <= cutoff {
            heap.push(PendingRequest {
                time: first,
                content_id: c.content_id,
                cutoff,
                interarrival,
                rng,
            });
        }
    }
    Ok((contents, SnmStream { heap }))
}

/// How events are assigned to cache locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    UniformRandom,
    RoundRobin,
}

/// Splits one stream across `l` locations. Every event lands in exactly
/// one output stream with its `location_id` set; the union of the
/// outputs is the input.
pub fn split_stream<I>(
    events: I,
    l: usize,
    assignment: Assignment,
    seed: u64,
) -> Result<Vec<Vec<RequestEvent>>>
where
    I: IntoIterator<Item = RequestEvent>,
{
    if l == 0 {
        return Err(Error::InvalidParameter("need at least one location".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut streams = vec![Vec::new(); l];
    for (i, mut event) in events.into_iter().enumerate() {
        let loc = match assignment {
            Assignment::UniformRandom => rng.random_range(0..l),
            Assignment::RoundRobin => i % l,
        };
        event.location_id = loc;
        streams[loc].push(event);
    }
    Ok(streams)
}

/// Writes a trace: header plus `time_seconds,content_id,location_id`
/// rows, with a trailing `user_id` column when any event carries one.
pub fn write_trace<W: io::Write>(w: &mut W, events: &[RequestEvent]) -> Result<()> {
    let with_users = events.iter().any(|e| e.user_id.is_some());
    if with_users {
        writeln!(w, "time_seconds,content_id,location_id,user_id")?;
    } else {
        writeln!(w, "time_seconds,content_id,location_id")?;
    }
    for e in events {
        match (with_users, e.user_id) {
            (true, Some(u)) => {
                writeln!(w, "{},{},{},{}", e.time, e.content_id, e.location_id, u)?
            }
            (true, None) => writeln!(w, "{},{},{},", e.time, e.content_id, e.location_id)?,
            (false, _) => writeln!(w, "{},{},{}", e.time, e.content_id, e.location_id)?,
        }
    }
    Ok(())
}

/// Reads a trace written by [`write_trace`]. Enforces the header, field
/// syntax, and nondecreasing timestamps.
pub fn read_trace<R: io::BufRead>(r: R) -> Result<Vec<RequestEvent>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty trace: missing header".into()))??;
    let with_users = match header.trim_end() {
        "time_seconds,content_id,location_id" => false,
        "time_seconds,content_id,location_id,user_id" => true,
        h => return Err(Error::Format(format!("unrecognized trace header: {h:?}"))),
    };
    let mut events = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_users { 4 } else { 3 };
        if fields.len() != expected {
            return Err(Error::Format(format!(
                "line {}: expected {expected} fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let time: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Format(format!("line {}: bad time {:?}", lineno + 2, fields[0])))?;
        let content_id: usize = fields[1].parse().map_err(|_| {
            Error::Format(format!("line {}: bad content id {:?}", lineno + 2, fields[1]))
        })?;
        let location_id: usize = fields[2].parse().map_err(|_| {
            Error::Format(format!("line {}: bad location id {:?}", lineno + 2, fields[2]))
        })?;
        let user_id = if with_users && !fields[3].is_empty() {
            Some(fields[3].parse().map_err(|_| {
                Error::Format(format!("line {}: bad user id {:?}", lineno + 2, fields[3]))
            })?)
        } else {
            None
        };
        if !time.is_finite() || time < 0.0 {
            return Err(Error::TraceCorruption(format!(
                "line {}: time {time} is not a nonnegative real",
                lineno + 2
            )));
        }
        if time < prev {
            return Err(Error::TraceCorruption(format!(
                "line {}: time {time} goes backwards (previous {prev})",
                lineno + 2
            )));
        }
        prev = time;
        events.push(RequestEvent { time, content_id, location_id, user_id });
    }
    Ok(events)
}
