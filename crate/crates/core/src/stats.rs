//! Small numeric helpers: compensated summation and batch-mean errors.

/// Compensated (Neumaier) summation.
///
/// Keeps the rounding error of a long running sum at a few ulps instead of
/// growing with the number of terms, which matters when probability
/// vectors with 10^7 entries must sum to 1 within 1e-12.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean of a sample.
///
/// Returns `(mean, stderr)`; stderr is 0 for samples of size < 2.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Standard error of a 0/1 outcome sequence via batch means.
///
/// The sequence is split into `num_batches` windows of (near-)equal size;
/// the standard error of the per-window means is reported. Robust to the
/// serial correlation that eviction policies induce between consecutive
/// requests. Falls back to fewer windows when the sequence is short.
pub fn batch_means_stderr(outcomes: &[bool], num_batches: usize) -> f64 {
    let n = outcomes.len();
    let batches = num_batches.min(n).max(1);
    if batches < 2 {
        return 0.0;
    }
    let mut means = Vec::with_capacity(batches);
    let base = n / batches;
    let extra = n % batches;
    let mut start = 0;
    for b in 0..batches {
        let len = base + usize::from(b < extra);
        let hits = outcomes[start..start + len].iter().filter(|&&h| h).count();
        means.push(hits as f64 / len as f64);
        start += len;
    }
    let (_, se) = mean_and_stderr(&means);
    se
}
