//! Simulation of the throwing process and of its limiting law.
//!
//! Reproducibility contract: a batch is a pure function of (params, T,
//! replicates, seed) regardless of the worker count. Replicate i draws
//! from ChaCha8 seeded with the batch seed on stream i, workers process
//! contiguous replicate ranges, and outputs are placed by replicate
//! index. Normal variates come from `rand_distr::StandardNormal`
//! (ziggurat), which is deterministic under a pinned seed.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Params};

/// Simulation request: T rounds per replicate, a replicate count, the
/// batch seed, and the worker count (affects speed only, never values).
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub params: Params,
    pub rounds: u32,
    pub replicates: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    fn validate(&self) -> Result<(), Error> {
        if self.replicates < 1 {
            return Err(Error::InvalidParams("replicates must be >= 1".into()));
        }
        if self.rounds < 1 {
            return Err(Error::InvalidParams("rounds must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidParams("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Normalized samples (U − rT/n)/√T of one batch.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub config: SimConfig,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (unbiased); 0 for a single sample.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let k = self.values.len();
        if k < 2 {
            return 0.0;
        }
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (k as f64 - 1.0)).sqrt()
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev() / (self.values.len() as f64).sqrt()
    }

    /// CSV export: header `value`, one sample per line, LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"value\n")?;
        for v in &self.values {
            writeln!(w, "{v:.17e}")?;
        }
        Ok(())
    }

    /// Sidecar metadata as `key: value` lines.
    pub fn metadata_text(&self) -> String {
        format!(
            "n: {}\nr: {}\nT: {}\nreplicates: {}\nseed: {}\nworkers: {}\n",
            self.config.params.n(),
            self.config.params.r(),
            self.config.rounds,
            self.config.replicates,
            self.config.seed,
            self.config.workers,
        )
    }
}

/// Per-λ comparison of the empirical tail of |Û| with the
/// Hoeffding-union bound 2n·exp(−2λ²).
#[derive(Debug, Clone)]
pub struct TailReport {
    pub lambda_grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub hoeffding_bound: Vec<f64>,
}

impl TailReport {
    /// True when no grid point has its empirical tail above the bound.
    pub fn within_bound(&self) -> bool {
        self.empirical_tail
            .iter()
            .zip(&self.hoeffding_bound)
            .all(|(e, b)| e <= b)
    }
}

/// Reusable partial Fisher-Yates sampler of uniform r-subsets of
/// {0..n-1}. The index buffer persists across draws: partial shuffling
/// any fixed permutation still yields a uniform subset, so no reset is
/// needed and each draw costs r swaps.
pub struct SubsetSampler {
    indices: Vec<u32>,
}

impl SubsetSampler {
    pub fn new(n: u32) -> Self {
        SubsetSampler {
            indices: (0..n).collect(),
        }
    }

    /// Draws a uniform r-subset; the result is the first r entries of the
    /// internal buffer.
    pub fn sample<R: Rng>(&mut self, r: u32, rng: &mut R) -> &[u32] {
        let n = self.indices.len();
        let r = r as usize;
        for i in 0..r {
            let j = rng.gen_range(i..n);
            self.indices.swap(i, j);
        }
        &self.indices[..r]
    }
}

/// One uniform r-subset of {0..n-1}, as a sorted vector.
pub fn sample_round_subset<R: Rng>(n: u32, r: u32, rng: &mut R) -> Result<Vec<u32>, Error> {
    Params::new(n, r)?;
    let mut sampler = SubsetSampler::new(n);
    let mut out = sampler.sample(r, rng).to_vec();
    out.sort_unstable();
    Ok(out)
}

/// Maximum occupancy after T rounds of the process.
pub fn simulate_max<R: Rng>(params: Params, t: u32, rng: &mut R) -> u32 {
    let mut counts = vec![0u32; params.n() as usize];
    let mut sampler = SubsetSampler::new(params.n());
    for _ in 0..t {
        for &bin in sampler.sample(params.r(), rng) {
            counts[bin as usize] += 1;
        }
    }
    counts.into_iter().max().unwrap_or(0)
}

/// RNG for one replicate: batch seed, replicate index as the stream.
fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Runs the batch: `replicates` independent values of (U − rT/n)/√T.
pub fn sample_batch(config: &SimConfig) -> Result<SampleBatch, Error> {
    config.validate()?;
    let params = config.params;
    let t = config.rounds;
    let shift = params.drift_f64() * f64::from(t);
    let scale = f64::from(t).sqrt();
    let total = config.replicates;

    let run_range = |lo: u64, hi: u64, out: &mut [f64]| {
        for (slot, rep) in (lo..hi).enumerate() {
            let mut rng = replicate_rng(config.seed, rep);
            let u = simulate_max(params, t, &mut rng);
            out[slot] = (f64::from(u) - shift) / scale;
        }
    };

    let workers = config.workers.min(total as usize).max(1);
    let mut values = vec![0.0f64; total as usize];
    if workers == 1 {
        run_range(0, total, &mut values);
    } else {
        let chunk = total.div_ceil(workers as u64);
        std::thread::scope(|scope| {
            let mut rest: &mut [f64] = &mut values;
            let mut lo = 0u64;
            while lo < total {
                let hi = (lo + chunk).min(total);
                let (head, tail) = rest.split_at_mut((hi - lo) as usize);
                rest = tail;
                scope.spawn(move || run_range(lo, hi, head));
                lo = hi;
            }
        });
    }
    Ok(SampleBatch {
        values,
        config: *config,
    })
}

/// Samples the limiting law of Û: max{Y_1..Y_n} for the centered
/// equicorrelated Gaussian vector with covariance Γ, realized as
/// W_j = −S/(n−1) + (n/(n−1))·Z_j scaled by √(r(n−r)(n−1)/n³).
/// n = 1 is degenerate (zero variance) and returns zeros.
pub fn sample_limit_max<R: Rng>(params: Params, count: usize, rng: &mut R) -> Vec<f64> {
    let n = params.n();
    let r = params.r();
    if n == 1 || r == n {
        return vec![0.0; count];
    }
    let nf = f64::from(n);
    let rf = f64::from(r);
    let scale = (rf * (nf - rf) * (nf - 1.0) / (nf * nf * nf)).sqrt();
    let mut z = vec![0.0f64; n as usize];
    (0..count)
        .map(|_| {
            let mut sum = 0.0;
            for zj in z.iter_mut() {
                *zj = rng.sample(StandardNormal);
                sum += *zj;
            }
            let base = -sum / (nf - 1.0);
            let coef = nf / (nf - 1.0);
            let w_max = z
                .iter()
                .map(|&zj| base + coef * zj)
                .fold(f64::NEG_INFINITY, f64::max);
            scale * w_max
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic: sup-distance between the
/// empirical CDFs. Symmetric in its arguments.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, Error> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParams(
            "KS statistic needs two non-empty samples".into(),
        ));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.total_cmp(q));
    ys.sort_unstable_by(|p, q| p.total_cmp(q));
    let x_inc = 1.0 / xs.len() as f64;
    let y_inc = 1.0 / ys.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut diff = 0.0f64;
    let mut max_diff = 0.0f64;
    while i < xs.len() || j < ys.len() {
        match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                // consume all ties on both sides before comparing CDFs
                let v = x;
                while xs.get(i) == Some(&v) {
                    diff += x_inc;
                    i += 1;
                }
                while ys.get(j) == Some(&v) {
                    diff -= y_inc;
                    j += 1;
                }
            }
            (Some(&x), Some(&y)) if x < y => {
                diff += x_inc;
                i += 1;
            }
            (Some(_), Some(_)) => {
                diff -= y_inc;
                j += 1;
            }
            (Some(_), None) => {
                diff += x_inc;
                i += 1;
            }
            (None, Some(_)) => {
                diff -= y_inc;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
        max_diff = max_diff.max(diff.abs());
    }
    Ok(max_diff)
}

/// Asymptotic two-sample KS rejection threshold c(α)·√((m1+m2)/(m1·m2))
/// with the standard c(0.01) = 1.63.
pub fn ks_threshold_alpha_01(m1: usize, m2: usize) -> f64 {
    1.63 * ((m1 + m2) as f64 / (m1 as f64 * m2 as f64)).sqrt()
}

/// Empirical tail of |Û| on a λ grid, paired with 2n·exp(−2λ²).
/// Reporting only: no assertion is made here.
pub fn tail_check(batch: &SampleBatch, lambda_grid: &[f64]) -> Result<TailReport, Error> {
    if batch.values.is_empty() {
        return Err(Error::InvalidParams("empty batch".into()));
    }
    let increasing = lambda_grid.windows(2).all(|w| w[0] < w[1]);
    if lambda_grid.is_empty() || !increasing || lambda_grid[0] <= 0.0 {
        return Err(Error::InvalidParams(
            "lambda grid must be positive and strictly increasing".into(),
        ));
    }
    let n = f64::from(batch.config.params.n());
    let m = batch.values.len() as f64;
    let empirical_tail: Vec<f64> = lambda_grid
        .iter()
        .map(|&lam| batch.values.iter().filter(|v| v.abs() >= lam).count() as f64 / m)
        .collect();
    let hoeffding_bound: Vec<f64> = lambda_grid
        .iter()
        .map(|&lam| 2.0 * n * (-2.0 * lam * lam).exp())
        .collect();
    Ok(TailReport {
        lambda_grid: lambda_grid.to_vec(),
        empirical_tail,
        hoeffding_bound,
    })
}
