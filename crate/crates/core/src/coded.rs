//! Coded caching: symmetric subfile placement and XOR multicast delivery.
//!
//! With K users each caching a fraction m = M/N of the catalog such that
//! t = K·m is an integer, every file splits into binomial(K, t) subfiles,
//! one per t-subset of users, and user k caches exactly the subfiles
//! whose subset contains k. Delivery sends one XOR message per
//! (t+1)-subset of users; every user decodes its demand from its cache
//! plus the messages addressed to subsets containing it. The server load
//! is binomial(K, t+1) subfiles, i.e. K(1−m)/(1+Km) files, which stays
//! bounded as K grows — at the price of a subpacketization that grows
//! exponentially in K.
//!
//! Subsets are enumerated in ascending-bitmask (colexicographic) order
//! throughout, so placements and schedules are byte-for-byte
//! reproducible. Files are padded with zeros to a multiple of the
//! subfile count; decode strips the padding.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};

// materialized instances keep every subfile addressable; beyond this
// many subfiles per file the exhaustive machinery is pointless anyway
const MAX_SUBFILES: u128 = 1_000_000;

fn binomial_u128(k: usize, t: usize) -> u128 {
    if t > k {
        return 0;
    }
    let t = t.min(k - t);
    let mut acc: u128 = 1;
    for i in 0..t {
        acc = acc * (k - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// binomial(K, t), exactly, at any size.
pub fn subpacketization(k: usize, t: usize) -> Result<BigUint> {
    if t > k {
        return Err(Error::InvalidParameter(format!(
            "cannot choose {t} users out of {k}"
        )));
    }
    let t = t.min(k - t);
    let mut acc = BigUint::from(1u32);
    for i in 0..t {
        acc = acc * BigUint::from(k - i) / BigUint::from(i + 1);
    }
    Ok(acc)
}

/// Required resource blocks (files transmitted) to serve K users with
/// cache fraction m: K(1−m)/(1+Km).
///
/// When K·m lands on an integer t the value is computed as the exact
/// schedule size ratio (K−t)/(t+1), which the continuous formula equals
/// at integer t.
pub fn resource_blocks(k: usize, m: f64) -> f64 {
    debug_assert!(k >= 1);
    debug_assert!((0.0..=1.0).contains(&m));
    let km = k as f64 * m;
    let t = km.round();
    if (km - t).abs() < 1e-9 && t >= 0.0 && t <= k as f64 {
        (k as f64 - t) / (t + 1.0)
    } else {
        k as f64 * (1.0 - m) / (1.0 + km)
    }
}

/// All t-subsets of {0, …, k−1} as bitmasks in ascending order
/// (Gosper's hack).
fn subsets_of_size(k: usize, t: usize) -> Vec<u64> {
    let count = binomial_u128(k, t) as usize;
    let mut out = Vec::with_capacity(count);
    if t == 0 {
        out.push(0);
        return out;
    }
    if t > k {
        return out;
    }
    let limit = 1u64 << k;
    let mut mask = (1u64 << t) - 1;
    while mask < limit {
        out.push(mask);
        // next subset with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

/// Deterministic distinct file contents for verification runs.
pub fn synthetic_files(n: usize, file_bytes: usize) -> Vec<Vec<u8>> {
    (0..n)
        .map(|f| {
            (0..file_bytes)
                .map(|i| (f.wrapping_mul(131).wrapping_add(i.wrapping_mul(31)) % 251) as u8)
                .collect()
        })
        .collect()
}

/// A placed coded-caching system: K users, catalog of N equal-size
/// files, integer t = K·M/N, materialized subfiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedCachingInstance {
    k: usize,
    t: usize,
    files: Vec<Vec<u8>>, // padded
    original_len: usize,
    subfile_len: usize,
    subsets: Vec<u64>,
    subset_index: HashMap<u64, usize>,
}

impl CodedCachingInstance {
    /// Builds the placement for parameter t directly from file contents
    /// (all files must have equal length; zero-padding to a multiple of
    /// binomial(K, t) is applied and recorded).
    pub fn new(k: usize, t: usize, files: Vec<Vec<u8>>) -> Result<Self> {
        if k == 0 || k > 63 {
            return Err(Error::InvalidParameter(format!(
                "user count must be in [1, 63], got {k}"
            )));
        }
        if t > k {
            return Err(Error::InvalidParameter(format!("t = {t} exceeds K = {k}")));
        }
        if files.is_empty() {
            return Err(Error::InvalidCatalog("catalog must hold at least one file".into()));
        }
        let original_len = files[0].len();
        if files.iter().any(|f| f.len() != original_len) {
            return Err(Error::InvalidParameter("files must all have the same length".into()));
        }
        let num_subfiles = binomial_u128(k, t);
        if num_subfiles > MAX_SUBFILES {
            return Err(Error::InstanceTooLarge(format!(
                "binomial({k}, {t}) = {num_subfiles} subfiles per file"
            )));
        }
        let num_subfiles = num_subfiles as usize;
        let subfile_len = original_len.div_ceil(num_subfiles);
        let padded_len = subfile_len * num_subfiles;
        let mut files = files;
        for f in &mut files {
            f.resize(padded_len, 0);
        }
        let subsets = subsets_of_size(k, t);
        debug_assert_eq!(subsets.len(), num_subfiles);
        let subset_index = subsets.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(CodedCachingInstance {
            k,
            t,
            files,
            original_len,
            subfile_len,
            subsets,
            subset_index,
        })
    }

    pub fn num_users(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn catalog_size(&self) -> usize {
        self.files.len()
    }

    pub fn cache_fraction(&self) -> f64 {
        self.t as f64 / self.k as f64
    }

    pub fn num_subfiles(&self) -> usize {
        self.subsets.len()
    }

    pub fn subfile_len(&self) -> usize {
        self.subfile_len
    }

    pub fn padded_len(&self) -> usize {
        self.subfile_len * self.subsets.len()
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// The t-subset bitmasks, ascending.
    pub fn subsets(&self) -> &[u64] {
        &self.subsets
    }

    /// Original (unpadded) bytes of file n.
    pub fn file(&self, n: usize) -> &[u8] {
        &self.files[n][..self.original_len]
    }

    fn subfile(&self, file: usize, subset_pos: usize) -> &[u8] {
        &self.files[file][subset_pos * self.subfile_len..(subset_pos + 1) * self.subfile_len]
    }

    /// Subfile (file, subset) as stored in `user`'s cache; an error if
    /// the user does not cache that subset.
    pub fn cached_subfile(&self, user: usize, file: usize, subset: u64) -> Result<&[u8]> {
        if subset & (1 << user) == 0 {
            return Err(Error::DecodeFailure(format!(
                "user {user} does not cache subset {subset:#b}"
            )));
        }
        let pos = *self
            .subset_index
            .get(&subset)
            .ok_or_else(|| Error::DecodeFailure(format!("unknown subset {subset:#b}")))?;
        Ok(self.subfile(file, pos))
    }

    /// Labels (file, subset) of everything user k caches.
    pub fn user_cache(&self, user: usize) -> Vec<(usize, u64)> {
        let mut out = Vec::new();
        for file in 0..self.files.len() {
            for &s in &self.subsets {
                if s & (1 << user) != 0 {
                    out.push((file, s));
                }
            }
        }
        out
    }

    /// Bytes stored at user k: exactly M/N of the (padded) catalog.
    pub fn user_cache_bytes(&self, user: usize) -> u128 {
        self.user_cache(user).len() as u128 * self.subfile_len as u128
    }
}

/// The standard placement entry point: cache size M files out of N,
/// with t = K·M/N required integer (otherwise use [`memory_share`]).
/// File contents are synthesized deterministically.
pub fn place(k: usize, m: usize, n: usize, file_bytes: usize) -> Result<CodedCachingInstance> {
    if n == 0 {
        return Err(Error::InvalidCatalog("catalog must hold at least one file".into()));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("cache size {m} exceeds catalog {n}")));
    }
    if !(k * m).is_multiple_of(n) {
        return Err(Error::InvalidParameter(format!(
            "t = K*M/N = {k}*{m}/{n} is not an integer; use memory sharing"
        )));
    }
    CodedCachingInstance::new(k, (k * m) / n, synthetic_files(n, file_bytes))
}

/// One multicast message: the XOR of t+1 subfiles, addressed to a
/// (t+1)-subset of users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryMessage {
    pub user_subset: u64,
    pub payload: Vec<u8>,
}

/// The full delivery schedule for one demand vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverySchedule {
    pub demands: Vec<usize>,
    pub messages: Vec<DeliveryMessage>,
}

impl DeliverySchedule {
    pub fn total_bytes(&self) -> usize {
        self.messages.iter().map(|m| m.payload.len()).sum()
    }
}

fn check_demands(inst: &CodedCachingInstance, demands: &[usize]) -> Result<()> {
    if demands.len() != inst.k {
        return Err(Error::InvalidParameter(format!(
            "demand vector has {} entries for {} users",
            demands.len(),
            inst.k
        )));
    }
    if let Some(&d) = demands.iter().find(|&&d| d >= inst.files.len()) {
        return Err(Error::InvalidParameter(format!(
            "demand {d} outside catalog of size {}",
            inst.files.len()
        )));
    }
    Ok(())
}

/// Builds the delivery schedule: for every (t+1)-subset T of users, the
/// XOR over k ∈ T of subfile (demand_k, T∖{k}).
pub fn deliver(inst: &CodedCachingInstance, demands: &[usize]) -> Result<DeliverySchedule> {
    check_demands(inst, demands)?;
    let mut messages = Vec::new();
    for &subset in &subsets_of_size(inst.k, inst.t + 1) {
        let mut payload = vec![0u8; inst.subfile_len];
        for (user, &demand) in demands.iter().enumerate() {
            if subset & (1 << user) == 0 {
                continue;
            }
            let cached_by_others = subset & !(1 << user);
            let pos = inst.subset_index[&cached_by_others];
            for (b, s) in payload.iter_mut().zip(inst.subfile(demand, pos)) {
                *b ^= s;
            }
        }
        messages.push(DeliveryMessage { user_subset: subset, payload });
    }
    Ok(DeliverySchedule { demands: demands.to_vec(), messages })
}

/// Reconstructs user k's demanded file from its cache contents plus the
/// schedule, and strips the padding. Bit-exact by construction; a
/// missing or malformed message is a decode failure.
pub fn decode(
    inst: &CodedCachingInstance,
    schedule: &DeliverySchedule,
    user: usize,
) -> Result<Vec<u8>> {
    if user >= inst.k {
        return Err(Error::InvalidParameter(format!(
            "user {user} outside the {}-user system",
            inst.k
        )));
    }
    check_demands(inst, &schedule.demands)?;
    let mut by_subset: HashMap<u64, &[u8]> = HashMap::with_capacity(schedule.messages.len());
    for m in &schedule.messages {
        if m.payload.len() != inst.subfile_len {
            return Err(Error::DecodeFailure(format!(
                "message for subset {:#b} has {} bytes, expected {}",
                m.user_subset,
                m.payload.len(),
                inst.subfile_len
            )));
        }
        by_subset.insert(m.user_subset, &m.payload);
    }
    let demand = schedule.demands[user];
    let mut out = Vec::with_capacity(inst.padded_len());
    for &subset in &inst.subsets {
        if subset & (1 << user) != 0 {
            out.extend_from_slice(inst.cached_subfile(user, demand, subset)?);
            continue;
        }
        // recover subfile (demand, subset) from the message to subset ∪ {user}
        let target = subset | (1 << user);
        let payload = by_subset.get(&target).ok_or_else(|| {
            Error::DecodeFailure(format!("no message for subset {target:#b}"))
        })?;
        let mut piece = payload.to_vec();
        for other in 0..inst.k {
            if other == user || target & (1 << other) == 0 {
                continue;
            }
            let others_subset = target & !(1 << other);
            // others_subset contains `user`, so it is in user's cache
            let cached = inst.cached_subfile(user, schedule.demands[other], others_subset)?;
            for (b, s) in piece.iter_mut().zip(cached) {
                *b ^= s;
            }
        }
        out.extend_from_slice(&piece);
    }
    out.truncate(inst.original_len);
    Ok(out)
}

/// Human-readable schedule dump: one line per message,
/// `users;xor_of((file,{subset}),…)`.
pub fn schedule_dump(inst: &CodedCachingInstance, schedule: &DeliverySchedule) -> String {
    fn members(mask: u64) -> Vec<String> {
        (0..64).filter(|b| mask & (1 << b) != 0).map(|b| b.to_string()).collect()
    }
    let mut out = String::new();
    for m in &schedule.messages {
        let users = members(m.user_subset).join(",");
        let terms: Vec<String> = (0..inst.k)
            .filter(|u| m.user_subset & (1 << u) != 0)
            .map(|u| {
                let subset = m.user_subset & !(1 << u);
                format!("({},{{{}}})", schedule.demands[u], members(subset).join(","))
            })
            .collect();
        out.push_str(&format!("{users};xor_of({})\n", terms.join(",")));
    }
    out
}

/// A convex combination of two integer-t schemes realizing a
/// non-integer cache fraction: the first `prefix_len` bytes of every
/// file run at t_floor, the rest at t_ceil.
#[derive(Debug, Clone)]
pub struct MemoryShare {
    pub t_floor: usize,
    pub t_ceil: usize,
    /// Fraction of every file served by the t_floor scheme.
    pub weight_floor: f64,
    pub prefix_len: usize,
    pub file_bytes: usize,
    floor: CodedCachingInstance,
    ceil: Option<CodedCachingInstance>,
}

/// Schedules for both segments of a memory-shared system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryShareSchedule {
    pub floor: DeliverySchedule,
    pub ceil: Option<DeliverySchedule>,
}

/// Splits each file between the schemes at t = ⌊Km⌋ and t = ⌈Km⌉ with
/// weights chosen so per-user memory is exactly m·N files. Integer K·m
/// degenerates to the single matching scheme.
pub fn memory_share(k: usize, m: f64, n: usize, file_bytes: usize) -> Result<MemoryShare> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "cache fraction must lie in [0, 1], got {m}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidCatalog("catalog must hold at least one file".into()));
    }
    let km = k as f64 * m;
    let files = synthetic_files(n, file_bytes);
    if (km - km.round()).abs() < 1e-9 {
        let t = km.round() as usize;
        return Ok(MemoryShare {
            t_floor: t,
            t_ceil: t,
            weight_floor: 1.0,
            prefix_len: file_bytes,
            file_bytes,
            floor: CodedCachingInstance::new(k, t, files)?,
            ceil: None,
        });
    }
    let t_floor = km.floor() as usize;
    let t_ceil = t_floor + 1;
    let weight_floor = t_ceil as f64 - km;
    let prefix_len = ((file_bytes as f64) * weight_floor).round() as usize;
    let prefixes: Vec<Vec<u8>> = files.iter().map(|f| f[..prefix_len].to_vec()).collect();
    let suffixes: Vec<Vec<u8>> = files.iter().map(|f| f[prefix_len..].to_vec()).collect();
    Ok(MemoryShare {
        t_floor,
        t_ceil,
        weight_floor,
        prefix_len,
        file_bytes,
        floor: CodedCachingInstance::new(k, t_floor, prefixes)?,
        ceil: Some(CodedCachingInstance::new(k, t_ceil, suffixes)?),
    })
}

impl MemoryShare {
    pub fn is_degenerate(&self) -> bool {
        self.ceil.is_none()
    }

    pub fn deliver(&self, demands: &[usize]) -> Result<MemoryShareSchedule> {
        Ok(MemoryShareSchedule {
            floor: deliver(&self.floor, demands)?,
            ceil: self.ceil.as_ref().map(|i| deliver(i, demands)).transpose()?,
        })
    }

    pub fn decode(&self, schedule: &MemoryShareSchedule, user: usize) -> Result<Vec<u8>> {
        let mut out = decode(&self.floor, &schedule.floor, user)?;
        if let (Some(inst), Some(sched)) = (&self.ceil, &schedule.ceil) {
            out.extend(decode(inst, sched, user)?);
        }
        Ok(out)
    }

    /// Original bytes of file n (prefix plus suffix).
    pub fn file(&self, n: usize) -> Vec<u8> {
        let mut f = self.floor.file(n).to_vec();
        if let Some(ceil) = &self.ceil {
            f.extend_from_slice(ceil.file(n));
        }
        f
    }

    /// Load in files: the byte-weighted mixture of the two schemes'
    /// exact integer-t loads. Never worse than the linear interpolation
    /// between the integer points (up to byte rounding).
    pub fn expected_resource_blocks(&self) -> f64 {
        if self.file_bytes == 0 {
            return 0.0;
        }
        let k = self.floor.num_users();
        let rb = |t: usize| (k - t) as f64 / (t + 1) as f64;
        let suffix = self.file_bytes - self.prefix_len;
        (self.prefix_len as f64 * rb(self.t_floor)
            + suffix as f64 * rb(self.ceil.as_ref().map_or(self.t_floor, |c| c.t())))
            / self.file_bytes as f64
    }
}
