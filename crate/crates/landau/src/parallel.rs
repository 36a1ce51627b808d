//! Deterministic work splitting.
//!
//! All reductions run over fixed-size blocks whose partial sums are combined
//! in index order, so the result is bit-identical no matter how many worker
//! threads execute the blocks. `LNDAU_THREADS` caps the worker count and can
//! only change wall-clock time, never output bytes.

const BLOCK: usize = 4096;

/// Worker count: min(available_parallelism, LNDAU_THREADS), at least 1.
pub fn worker_count() -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("LNDAU_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(hw);
    hw.min(cap).max(1)
}

/// Kahan-compensated sum of `f(i)` for `i in 0..n`, in index order.
pub fn sum_serial<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    kahan_range(0, n, &f)
}

fn kahan_range<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for i in lo..hi {
        let y = f(i) - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Deterministic parallel sum of `f(i)` for `i in 0..n`.
///
/// The index range is cut into fixed `BLOCK`-sized blocks; each block is
/// Kahan-summed serially and the per-block results are combined in block
/// order. The block size does not depend on the worker count, so the output
/// is bit-identical for any `LNDAU_THREADS`.
pub fn sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let workers = worker_count();
    if workers == 1 || n <= 4 * BLOCK {
        return block_sum_range(0, n.div_ceil(BLOCK), n, &f);
    }
    let n_blocks = n.div_ceil(BLOCK);
    let per = n_blocks.div_ceil(workers);
    let mut partials = vec![0.0f64; n_blocks];
    let f = &f;
    std::thread::scope(|scope| {
        let mut rest = partials.as_mut_slice();
        let mut first_block = 0usize;
        while !rest.is_empty() {
            let take = per.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            rest = tail;
            let start = first_block;
            first_block += take;
            scope.spawn(move || {
                for (bi, out) in head.iter_mut().enumerate() {
                    let b = start + bi;
                    *out = kahan_range(b * BLOCK, ((b + 1) * BLOCK).min(n), f);
                }
            });
        }
    });
    kahan_range(0, partials.len(), &|b| partials[b])
}

fn block_sum_range<F: Fn(usize) -> f64>(b_lo: usize, b_hi: usize, n: usize, f: &F) -> f64 {
    let partials: Vec<f64> = (b_lo..b_hi)
        .map(|b| kahan_range(b * BLOCK, ((b + 1) * BLOCK).min(n), f))
        .collect();
    kahan_range(0, partials.len(), &|b| partials[b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_serial_bitwise() {
        let n = 100_000usize;
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let serial = block_sum_range(0, n.div_ceil(BLOCK), n, &f);
        let parallel = sum(n, f);
        assert_eq!(serial.to_bits(), parallel.to_bits());
    }

    #[test]
    fn kahan_sums_accurately() {
        let n = 1_000_000;
        let s = sum_serial(n, |_| 0.1);
        assert!((s - 1.0e5).abs() < 1e-9);
    }
}
