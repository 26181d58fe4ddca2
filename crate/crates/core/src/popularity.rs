//! Content catalogs and static Zipf popularity.
//!
//! A catalog is a dense range of content ids `[0, N)`. Static popularity
//! follows a Zipf law: the probability of the content at rank n (1-based)
//! is proportional to `n^-alpha`. Normalization is by the exact finite
//! sum, never a zeta-function approximation; the deliberately approximate
//! `(M/N)^(1-alpha)` formula lives in [`power_law_hit_approx`] and is
//! gated to the regime it is valid in.

use crate::error::{Error, Result};
use crate::stats::kahan_sum;

/// A dense content catalog with ids `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    size: usize,
}

impl Catalog {
    /// A catalog of `size` contents. Empty catalogs are rejected.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidCatalog("catalog must hold at least one content".into()));
        }
        Ok(Catalog { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, content_id: usize) -> bool {
        content_id < self.size
    }
}

/// A Zipf popularity law over a catalog: descending probabilities
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfPopularity {
    alpha: f64,
    probs: Vec<f64>,
}

impl ZipfPopularity {
    /// Builds the exact normalized Zipf pmf `p_n ∝ (n+1)^-alpha` over
    /// 0-based ids (so the most popular content has id 0).
    ///
    /// `alpha = 0` gives the uniform law; `alpha ≥ 1` is admitted even
    /// though the power-law hit approximation is not valid there.
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCatalog("catalog must hold at least one content".into()));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "zipf exponent must be finite and nonnegative, got {alpha}"
            )));
        }
        let mut probs: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-alpha)).collect();
        let norm = kahan_sum(probs.iter().copied());
        for p in &mut probs {
            *p /= norm;
        }
        debug_assert!(probs.windows(2).all(|w| w[0] >= w[1]));
        Ok(ZipfPopularity { alpha, probs })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Catalog size N.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty catalogs
    }

    /// Probability of content `id`.
    pub fn prob(&self, id: usize) -> f64 {
        self.probs[id]
    }

    /// The full probability vector, descending in id.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Mass of the `m` most popular contents: the static hit-probability
    /// upper bound for a cache of `m` whole contents.
    pub fn top_m_mass(&self, m: usize) -> Result<f64> {
        if m > self.probs.len() {
            return Err(Error::InvalidParameter(format!(
                "cache size {m} exceeds catalog size {}",
                self.probs.len()
            )));
        }
        Ok(kahan_sum(self.probs[..m].iter().copied()))
    }
}

/// The power-law approximation `(M/N)^(1-alpha)` of the top-M mass.
///
/// Only valid for `alpha` strictly inside (0, 1); other exponents are an
/// out-of-validity error rather than a silently wrong number.
pub fn power_law_hit_approx(m: usize, n: usize, alpha: f64) -> Result<f64> {
    if m == 0 || n == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 < M <= N, got M = {m}, N = {n}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::OutOfValidity(format!(
            "(M/N)^(1-alpha) requires 0 < alpha < 1, got {alpha}"
        )));
    }
    Ok((m as f64 / n as f64).powf(1.0 - alpha))
}

/// Cache size as a fraction of catalog size, capped at 1.
pub fn normalized_cache_ratio(cache_bytes: f64, catalog_bytes: f64) -> Result<f64> {
    if !cache_bytes.is_finite() || !catalog_bytes.is_finite() || cache_bytes <= 0.0 || catalog_bytes <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cache and catalog sizes must be positive, got {cache_bytes} and {catalog_bytes}"
        )));
    }
    Ok((cache_bytes / catalog_bytes).min(1.0))
}
