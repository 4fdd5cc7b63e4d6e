use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, radial_step, sample_first_coord, stationary_mean};
use crate::error::{invalid, Result};

/// Largest exponent summed into an exponential moment.
pub const EXP_CAP: f64 = 700.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub d: usize,
    /// Total chain length per run, burn-in included.
    pub n_steps: u64,
    pub burn_in: u64,
    pub bins: usize,
    pub seed: u64,
    /// Independent chains; each runs its own burn-in.
    pub shards: usize,
    /// Starting radius, `sqrt(d)` when absent.
    pub r0: Option<f64>,
    /// Histogram upper edge, `stationary_mean(d) + 8` when absent.
    pub r_max: Option<f64>,
    /// Rates `alpha` for `sum exp(alpha r^2)`.
    pub alphas: Vec<f64>,
    /// Excess over the mean counted as tail, default 5.
    pub tail_offset: f64,
}

impl McConfig {
    pub fn new(d: usize, n_steps: u64, seed: u64) -> Self {
        McConfig {
            d,
            n_steps,
            burn_in: 10_000,
            bins: 200,
            seed,
            shards: 8,
            r0: None,
            r_max: None,
            alphas: Vec::new(),
            tail_offset: 5.0,
        }
    }
}

/// Truncated exponential moment `sum exp(alpha r^2)` over samples with
/// `alpha r^2 <= 700`; the rest are counted in `capped`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub alpha: f64,
    pub sum: f64,
    pub capped: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub d: usize,
    pub seed: u64,
    pub bin_edges: Vec<f64>,
    /// Samples past the last edge are added to the last bin and to `overflow`.
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub n_samples: u64,
    pub burn_in: u64,
    pub shards: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub mean: f64,
    pub variance: f64,
    pub max_r: f64,
    pub tail_threshold: f64,
    pub tail_count: u64,
    pub exp_moments: Vec<ExpMoment>,
}

impl RadialHistogram {
    pub fn tail_fraction(&self) -> f64 {
        self.tail_count as f64 / self.n_samples as f64
    }

    /// Standard error of the mean, ignoring autocorrelation.
    pub fn naive_standard_error(&self) -> f64 {
        (self.variance / self.n_samples as f64).sqrt()
    }
}

struct Shard {
    counts: Vec<u64>,
    overflow: u64,
    n: u64,
    sum: f64,
    sum_sq: f64,
    max_r: f64,
    tail: u64,
    exp: Vec<(f64, u64)>,
}

/// Seed of shard `i`, a SplitMix64 step away from the run seed.
fn shard_seed(seed: u64, i: usize) -> u64 {
    let mut z = seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Histogram of the radial chain after burn-in.
pub fn mc_invariant(cfg: &McConfig) -> Result<RadialHistogram> {
    check_dim(cfg.d)?;
    if cfg.n_steps <= cfg.burn_in {
        return Err(invalid("n_steps", "must exceed burn_in"));
    }
    if cfg.bins == 0 || cfg.shards == 0 {
        return Err(invalid("bins", "bins and shards must be positive"));
    }
    let mean = stationary_mean(cfg.d)?;
    let r_max = cfg.r_max.unwrap_or(mean + 8.0);
    let r0 = cfg.r0.unwrap_or((cfg.d as f64).sqrt());
    if !(r_max > 0.0 && r0 >= 0.0 && r0.is_finite()) {
        return Err(invalid("r0", "radii must be finite and nonnegative"));
    }
    let samples = cfg.n_steps - cfg.burn_in;
    let per = samples / cfg.shards as u64;
    let extra = samples % cfg.shards as u64;
    let tail_threshold = mean + cfg.tail_offset;
    let width = r_max / cfg.bins as f64;

    let shards: Vec<Shard> = (0..cfg.shards)
        .into_par_iter()
        .map(|i| {
            let n = per + u64::from((i as u64) < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(cfg.seed, i));
            let mut r = r0;
            for _ in 0..cfg.burn_in {
                r = radial_step(r, sample_first_coord(cfg.d, &mut rng));
            }
            let mut s = Shard {
                counts: vec![0; cfg.bins],
                overflow: 0,
                n,
                sum: 0.0,
                sum_sq: 0.0,
                max_r: 0.0,
                tail: 0,
                exp: vec![(0.0, 0); cfg.alphas.len()],
            };
            for _ in 0..n {
                r = radial_step(r, sample_first_coord(cfg.d, &mut rng));
                let bin = (r / width) as usize;
                if bin >= cfg.bins {
                    s.overflow += 1;
                    s.counts[cfg.bins - 1] += 1;
                } else {
                    s.counts[bin] += 1;
                }
                s.sum += r;
                s.sum_sq += r * r;
                s.max_r = s.max_r.max(r);
                s.tail += u64::from(r > tail_threshold);
                for (acc, &alpha) in s.exp.iter_mut().zip(&cfg.alphas) {
                    let e = alpha * r * r;
                    if e <= EXP_CAP {
                        acc.0 += e.exp();
                    } else {
                        acc.1 += 1;
                    }
                }
            }
            s
        })
        .collect();

    let mut counts = vec![0u64; cfg.bins];
    let (mut overflow, mut n, mut sum, mut sum_sq, mut max_r, mut tail) = (0, 0, 0.0, 0.0, 0.0f64, 0);
    let mut exp: Vec<(f64, u64)> = vec![(0.0, 0); cfg.alphas.len()];
    for s in &shards {
        counts.iter_mut().zip(&s.counts).for_each(|(c, x)| *c += x);
        overflow += s.overflow;
        n += s.n;
        sum += s.sum;
        sum_sq += s.sum_sq;
        max_r = max_r.max(s.max_r);
        tail += s.tail;
        for (acc, x) in exp.iter_mut().zip(&s.exp) {
            acc.0 += x.0;
            acc.1 += x.1;
        }
    }
    let nf = n as f64;
    let m = sum / nf;
    let variance = if n > 1 {
        ((sum_sq - nf * m * m) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(RadialHistogram {
        d: cfg.d,
        seed: cfg.seed,
        bin_edges: (0..=cfg.bins).map(|i| i as f64 * width).collect(),
        counts,
        overflow,
        n_samples: n,
        burn_in: cfg.burn_in,
        shards: cfg.shards,
        sum,
        sum_sq,
        mean: m,
        variance,
        max_r,
        tail_threshold,
        tail_count: tail,
        exp_moments: cfg
            .alphas
            .iter()
            .zip(exp)
            .map(|(&alpha, (sum, capped))| ExpMoment { alpha, sum, capped })
            .collect(),
    })
}
