//! Simulation and analysis toolkit for cache-enabled wireless networks.
//!
//! The library is organized around the pipeline of a caching study:
//!
//! - [`popularity`] — content catalogs, Zipf popularity laws, and the
//!   closed-form hit-probability bound with its power-law approximation.
//! - [`traffic`] — request-stream generators (static IRM and the
//!   time-varying shot-noise model) plus stream splitting across cache
//!   locations and trace file I/O.
//! - [`cache`] — single-cache trace-driven simulation with LRU / LFU /
//!   static policies and hit-probability measurement.
//! - [`estimation`] — windowed popularity counting at local or global
//!   aggregation levels and low-rank factorization of the user×content
//!   popularity matrix.
//! - [`coded`] — subfile placement, XOR multicast delivery, and decoding
//!   for the coded-caching scheme, plus the resource-block formula.
//! - [`placement`] — cooperative content placement on bipartite
//!   user–cache access graphs (greedy, exhaustive, fractional).
//! - [`geometry`] — Poisson-point-process base-station deployments and
//!   Monte-Carlo SINR/outage evaluation.
//!
//! All randomized components take explicit 64-bit seeds and use a
//! counter-based generator, so identical seeds reproduce identical
//! streams on every platform. See [`rng`].

pub mod cache;
pub mod coded;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod placement;
pub mod popularity;
pub mod rng;
pub mod stats;
pub mod traffic;

pub use error::{Error, Result};
