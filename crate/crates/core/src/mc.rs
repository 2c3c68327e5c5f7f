//! Seeded Monte Carlo simulation of the moving-sum process.
//!
//! Replication `r` of a run with seed `s` draws its innovations from ChaCha8
//! stream `r` of key `s`, so every replication is reproducible on its own and
//! the result does not depend on how replications are spread over threads.
//! Replications are processed in fixed blocks whose partial results are
//! merged in replication order.

use std::ops::Range;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arl::{ArlEstimate, ArlMethod};
use crate::error::{Error, Result};
use crate::model::{threshold_from_h, ProcessSpec};
use crate::normal::quantile;

const BLOCK: u64 = 2048;

/// Share of capped runs above which a passage sample carries a warning.
pub const TRUNCATION_WARNING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: u64,
    pub seed: u64,
    /// Largest stopping index simulated; `None` means `max(10⁶, 1000 L)`.
    pub max_horizon: Option<u64>,
    /// Number of worker threads; `None` uses the global rayon pool.
    pub thread_hint: Option<usize>,
}

impl McConfig {
    pub fn new(replications: u64, seed: u64) -> Self {
        McConfig {
            replications,
            seed,
            max_horizon: None,
            thread_hint: None,
        }
    }

    pub fn with_max_horizon(mut self, cap: u64) -> Self {
        self.max_horizon = Some(cap);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.thread_hint = Some(threads);
        self
    }

    pub fn horizon_cap(&self, window: usize) -> u64 {
        self.max_horizon
            .unwrap_or_else(|| (1000 * window as u64).max(1_000_000))
    }

    fn validate(&self, spec: &ProcessSpec) -> Result<()> {
        ProcessSpec::new(spec.window, spec.mu, spec.sigma)?;
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.horizon_cap(spec.window) < spec.window as u64 {
            return Err(Error::invalid(
                "max_horizon must be at least the window length",
            ));
        }
        if self.thread_hint == Some(0) {
            return Err(Error::invalid("thread count must be positive"));
        }
        Ok(())
    }
}

/// A probability estimate from independent replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    /// Share of replications stopped at the horizon cap (0 for fixed-horizon runs).
    pub truncated_fraction: f64,
}

impl McResult {
    fn frequency(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        McResult {
            estimate: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            truncated_fraction: 0.0,
        }
    }
}

/// Standard normal variates of one replication.
struct NormalStream(ChaCha8Rng);

impl NormalStream {
    fn new(seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        NormalStream(rng)
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let u = ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        quantile(u)
    }
}

/// The first `n` standard normal variates of a replication.
pub fn replication_normals(seed: u64, replication: u64, n: usize) -> Vec<f64> {
    let mut s = NormalStream::new(seed, replication);
    (0..n).map(|_| s.next()).collect()
}

/// Raw moving sums of one replication, updated one innovation at a time.
struct Walker {
    stream: NormalStream,
    ring: Vec<f64>,
    pos: usize,
    sum: f64,
    mu: f64,
    sigma: f64,
}

impl Walker {
    /// Draws the first window; `sum()` is then the sum with index 0.
    fn new(spec: &ProcessSpec, seed: u64, replication: u64) -> Self {
        let mut stream = NormalStream::new(seed, replication);
        let ring: Vec<f64> = (0..spec.window)
            .map(|_| spec.mu + spec.sigma * stream.next())
            .collect();
        let sum = ring.iter().sum();
        Walker {
            stream,
            ring,
            pos: 0,
            sum,
            mu: spec.mu,
            sigma: spec.sigma,
        }
    }

    #[inline]
    fn sum(&self) -> f64 {
        self.sum
    }

    /// Slides the window by one innovation.
    #[inline]
    fn advance(&mut self) -> f64 {
        let e = self.mu + self.sigma * self.stream.next();
        self.sum += e - self.ring[self.pos];
        self.ring[self.pos] = e;
        self.pos += 1;
        if self.pos == self.ring.len() {
            self.pos = 0;
            self.sum = self.ring.iter().sum();
        }
        self.sum
    }
}

/// Innovations and raw moving sums (indices `0..windows`) of one replication,
/// exactly as the simulators see them.
pub fn replication_path(
    spec: &ProcessSpec,
    seed: u64,
    replication: u64,
    windows: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut w = Walker::new(spec, seed, replication);
    let mut sums = vec![w.sum()];
    while sums.len() < windows {
        sums.push(w.advance());
    }
    let n = spec.window + windows.saturating_sub(1);
    let eps = replication_normals(seed, replication, n)
        .into_iter()
        .map(|z| spec.mu + spec.sigma * z)
        .collect();
    (eps, sums)
}

/// Runs `work` on consecutive blocks of `reps` and returns the block results
/// in replication order.
fn run_blocks<T, F>(reps: Range<u64>, threads: Option<usize>, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let blocks: Vec<Range<u64>> = (reps.start..reps.end)
        .step_by(BLOCK as usize)
        .map(|s| s..(s + BLOCK).min(reps.end))
        .collect();
    let go = || blocks.par_iter().cloned().map(&work).collect::<Vec<T>>();
    match threads {
        None => Ok(go()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(go))
        }
    }
}

/// Estimate of `Pr(max_{0≤n≤M} ξ_n ≥ h)`.
pub fn simulate_bcp(spec: &ProcessSpec, m: usize, h: f64, cfg: &McConfig) -> Result<McResult> {
    cfg.validate(spec)?;
    let counts = crossing_counts(
        spec,
        m,
        &[h],
        cfg.seed,
        0..cfg.replications,
        cfg.thread_hint,
    )?;
    Ok(McResult::frequency(
        counts.cumulative[0][m],
        cfg.replications,
    ))
}

/// `max_{0≤n≤M} ξ_n` for every replication, in replication order.
pub fn simulate_window_maxima(spec: &ProcessSpec, m: usize, cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate(spec)?;
    let (mean, sd) = (spec.sum_mean(), spec.sum_sd());
    let blocks = run_blocks(0..cfg.replications, cfg.thread_hint, |reps| {
        reps.map(|r| {
            let mut w = Walker::new(spec, cfg.seed, r);
            let mut best = w.sum();
            for _ in 0..m {
                best = best.max(w.advance());
            }
            (best - mean) / sd
        })
        .collect::<Vec<f64>>()
    })?;
    Ok(blocks.concat())
}

/// Counts of replications that reached each threshold by each index.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCounts {
    pub replications: u64,
    /// `cumulative[i][j]`: replications with `max_{n≤j} ξ_n ≥ hs[i]`, `j = 0..=M`.
    pub cumulative: Vec<Vec<u64>>,
}

impl CrossingCounts {
    /// Estimated crossing probability of threshold `i` by index `j`.
    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.cumulative[i][j] as f64 / self.replications as f64
    }
}

/// First-crossing counts of several thresholds over a fixed horizon `M`,
/// using the replications in `reps`.
pub fn crossing_counts(
    spec: &ProcessSpec,
    m: usize,
    hs: &[f64],
    seed: u64,
    reps: Range<u64>,
    threads: Option<usize>,
) -> Result<CrossingCounts> {
    let (order, raw) = sorted_thresholds(spec, hs);
    let k = hs.len();
    let blocks = run_blocks(reps.clone(), threads, |block| {
        // first[i][j]: replications whose first crossing of sorted threshold i is at j.
        let mut first = vec![vec![0u64; m + 1]; k];
        for r in block {
            let mut w = Walker::new(spec, seed, r);
            let mut next = 0;
            let mut s = w.sum();
            #[allow(clippy::needless_range_loop)]
            for j in 0..=m {
                if j > 0 {
                    s = w.advance();
                }
                while next < k && s >= raw[next] {
                    first[next][j] += 1;
                    next += 1;
                }
                if next == k {
                    break;
                }
            }
        }
        first
    })?;
    let mut cumulative = vec![vec![0u64; m + 1]; k];
    for (slot, &i) in order.iter().enumerate() {
        let mut acc = 0;
        for j in 0..=m {
            acc += blocks.iter().map(|b| b[slot][j]).sum::<u64>();
            cumulative[i][j] = acc;
        }
    }
    Ok(CrossingCounts {
        replications: reps.end - reps.start,
        cumulative,
    })
}

/// Raw thresholds in ascending order, and the input index of each.
fn sorted_thresholds(spec: &ProcessSpec, hs: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by(|&a, &b| hs[a].total_cmp(&hs[b]));
    let raw = order
        .iter()
        .map(|&i| threshold_from_h(hs[i], spec).raw)
        .collect();
    (order, raw)
}

/// Simulated stopping indices `τ_h` of one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageSample {
    pub h: f64,
    pub window: usize,
    /// `τ_h` per replication; capped runs hold the cap.
    pub times: Vec<u64>,
    pub cap: u64,
    pub mean: f64,
    pub stderr: f64,
    pub truncated_fraction: f64,
    /// Set when more than 1% of the runs hit the cap (the mean is then biased low).
    pub warning: Option<String>,
}

impl PassageSample {
    fn from_times(h: f64, window: usize, times: Vec<u64>, truncated: u64, cap: u64) -> Self {
        let n = times.len() as f64;
        let mean = times.iter().map(|&t| t as f64).sum::<f64>() / n;
        let var = times
            .iter()
            .map(|&t| (t as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        let truncated_fraction = truncated as f64 / n;
        let warning = (truncated_fraction > TRUNCATION_WARNING).then(|| {
            format!(
                "{:.2}% of runs reached the cap {cap} without crossing; the mean is biased low",
                100.0 * truncated_fraction
            )
        });
        PassageSample {
            h,
            window,
            times,
            cap,
            mean,
            stderr: (var / n).sqrt(),
            truncated_fraction,
            warning,
        }
    }

    /// Empirical `Pr(τ_h / L ≤ t)`.
    pub fn empirical_cdf(&self, t: f64) -> f64 {
        let limit = t * self.window as f64;
        let hits = self
            .times
            .iter()
            .filter(|&&x| x < self.cap && x as f64 <= limit)
            .count();
        hits as f64 / self.times.len() as f64
    }
}

/// Stopping indices of one threshold.
pub fn simulate_passage(spec: &ProcessSpec, h: f64, cfg: &McConfig) -> Result<PassageSample> {
    Ok(simulate_passage_grid(spec, &[h], cfg)?.remove(0))
}

/// Stopping indices of several thresholds from the same replications.
///
/// Each run continues until the highest threshold is crossed or the cap is reached.
pub fn simulate_passage_grid(
    spec: &ProcessSpec,
    hs: &[f64],
    cfg: &McConfig,
) -> Result<Vec<PassageSample>> {
    cfg.validate(spec)?;
    if hs.is_empty() {
        return Err(Error::invalid("no thresholds given"));
    }
    let cap = cfg.horizon_cap(spec.window);
    let (order, raw) = sorted_thresholds(spec, hs);
    let k = hs.len();
    let blocks = run_blocks(0..cfg.replications, cfg.thread_hint, |block| {
        let mut times = vec![Vec::with_capacity((block.end - block.start) as usize); k];
        let mut truncated = vec![0u64; k];
        for r in block {
            let mut w = Walker::new(spec, cfg.seed, r);
            let mut next = 0;
            let mut s = w.sum();
            let mut n = 0u64;
            loop {
                while next < k && s >= raw[next] {
                    times[next].push(n);
                    next += 1;
                }
                if next == k || n == cap {
                    break;
                }
                s = w.advance();
                n += 1;
            }
            for i in next..k {
                times[i].push(cap);
                truncated[i] += 1;
            }
        }
        (times, truncated)
    })?;
    let mut out: Vec<Option<PassageSample>> = vec![None; k];
    for (slot, &i) in order.iter().enumerate() {
        let times: Vec<u64> = blocks
            .iter()
            .flat_map(|b| b.0[slot].iter().copied())
            .collect();
        let truncated = blocks.iter().map(|b| b.1[slot]).sum();
        out[i] = Some(PassageSample::from_times(
            hs[i],
            spec.window,
            times,
            truncated,
            cap,
        ));
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect())
}

/// Average run length from simulated stopping indices, with its standard error.
pub fn simulate_arl(spec: &ProcessSpec, h: f64, cfg: &McConfig) -> Result<ArlEstimate> {
    let s = simulate_passage(spec, h, cfg)?;
    Ok(ArlEstimate {
        value: s.mean,
        method: ArlMethod::Mc,
        stderr: Some(s.stderr),
        warning: s.warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::moving_sums;
    use crate::normal::sf;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = replication_normals(7, 3, 16);
        assert_eq!(a, replication_normals(7, 3, 16));
        assert_ne!(a, replication_normals(7, 4, 16));
        assert_ne!(a, replication_normals(8, 3, 16));
    }

    #[test]
    fn walker_matches_naive_sums() {
        let spec = ProcessSpec::new(7, 0.3, 2.0).unwrap();
        let (eps, sums) = replication_path(&spec, 11, 5, 500);
        let naive = moving_sums(&eps, 7).unwrap();
        assert_eq!(naive.len(), sums.len());
        for (a, b) in naive.iter().zip(&sums) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_window_is_marginal() {
        let spec = ProcessSpec::standard(10).unwrap();
        let r = simulate_bcp(&spec, 0, 1.0, &McConfig::new(40_000, 1)).unwrap();
        assert!((r.estimate - sf(1.0)).abs() < 3.0 * r.stderr);
        let r = simulate_bcp(&spec, 5, f64::NEG_INFINITY, &McConfig::new(100, 1)).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = ProcessSpec::standard(5).unwrap();
        let base = McConfig::new(5000, 42);
        let a = simulate_bcp(&spec, 5, 2.0, &base.with_threads(1)).unwrap();
        let b = simulate_bcp(&spec, 5, 2.0, &base.with_threads(3)).unwrap();
        assert_eq!(a, b);
        let a = simulate_passage(&spec, 1.5, &base.with_threads(1)).unwrap();
        let b = simulate_passage(&spec, 1.5, &base.with_threads(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn passage_caps_and_warns() {
        let spec = ProcessSpec::standard(5).unwrap();
        let cfg = McConfig::new(200, 3).with_max_horizon(5);
        let s = simulate_passage(&spec, 3.0, &cfg).unwrap();
        assert!(s.truncated_fraction > 0.5);
        assert!(s.warning.is_some());
        let s = simulate_passage(&spec, f64::NEG_INFINITY, &cfg).unwrap();
        assert!(s.times.iter().all(|&t| t == 0));
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn grid_agrees_with_single_thresholds() {
        let spec = ProcessSpec::standard(4).unwrap();
        let cfg = McConfig::new(3000, 9);
        let grid = simulate_passage_grid(&spec, &[2.0, 1.0], &cfg).unwrap();
        assert_eq!(grid[0], simulate_passage(&spec, 2.0, &cfg).unwrap());
        assert_eq!(grid[1], simulate_passage(&spec, 1.0, &cfg).unwrap());
        let counts = crossing_counts(&spec, 8, &[2.0, 1.0], 9, 0..3000, None).unwrap();
        let direct = grid[0].times.iter().filter(|&&t| t <= 8).count() as u64;
        assert_eq!(counts.cumulative[0][8], direct);
    }

    #[test]
    fn rejects_bad_configs() {
        let spec = ProcessSpec::standard(5).unwrap();
        assert!(simulate_bcp(&spec, 5, 1.0, &McConfig::new(0, 1)).is_err());
        assert!(simulate_bcp(&spec, 5, 1.0, &McConfig::new(10, 1).with_threads(0)).is_err());
        assert!(simulate_passage(&spec, 1.0, &McConfig::new(10, 1).with_max_horizon(2)).is_err());
    }
}
