//! Synthetic clustered data and engine timings.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sgb_core::engine::{run_with_config, EngineConfig};
use sgb_core::{Dataset, GroupSet, Policy, Result, SimilaritySpec};

/// Fraction of points drawn uniformly over the whole domain.
pub const NOISE_FRACTION: f64 = 0.05;

/// Blob centres sit on a grid of this pitch (in units of ε), each jittered
/// by up to a quarter pitch, so any two blobs are at least 4ε apart.
pub const CLUSTER_SPACING: f64 = 8.0;

/// Target points per blob when the cluster count is not given.
pub const POINTS_PER_CLUSTER: usize = 64;

pub fn default_clusters(n: usize) -> usize {
    (n / POINTS_PER_CLUSTER).max(1)
}

/// `n` points in 2D: `clusters` Gaussian blobs clipped to radius 0.45ε
/// (so each blob is All-ε-connected) plus uniform noise over the whole
/// square. Blob centres are jittered grid points, so blobs never interact
/// and clique sizes stay bounded as `n` grows.
pub fn generate(n: usize, clusters: usize, eps: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clusters = clusters.max(1);
    let per_row = (clusters as f64).sqrt().ceil() as usize;
    let pitch = CLUSTER_SPACING * eps;
    let side = per_row as f64 * pitch;
    let jitter = 0.25 * pitch;
    let centres: Vec<[f64; 2]> = (0..clusters)
        .map(|c| {
            let (row, col) = ((c / per_row) as f64, (c % per_row) as f64);
            [
                (col + 0.5) * pitch + rng.random_range(-jitter..jitter),
                (row + 0.5) * pitch + rng.random_range(-jitter..jitter),
            ]
        })
        .collect();
    let normal = Normal::new(0.0, 0.15 * eps).expect("valid sigma");
    let radius = 0.45 * eps;
    let noise = (n as f64 * NOISE_FRACTION) as usize;
    let mut out = Vec::with_capacity(n);
    for i in 0..n - noise {
        let c = centres[i % clusters];
        loop {
            let (dx, dy): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
            if dx.hypot(dy) < radius {
                out.push(vec![c[0] + dx, c[1] + dy]);
                break;
            }
        }
    }
    for _ in 0..noise {
        out.push(vec![rng.random_range(0.0..side), rng.random_range(0.0..side)]);
    }
    out
}

pub fn timed_run(points: &[Vec<f64>], spec: SimilaritySpec, policy: Policy, config: EngineConfig) -> Result<(GroupSet, Duration)> {
    let ds = Dataset::from_points(2, points.iter().cloned())?;
    let start = Instant::now();
    let gs = run_with_config(ds.tuples(), spec, policy, config)?;
    Ok((gs, start.elapsed()))
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub groups: usize,
    pub mean_k: f64,
    pub indexed: Duration,
    pub all_pairs: Option<Duration>,
}

impl BenchRow {
    pub const HEADER: &'static str = "       n   groups   mean_k   indexed_ms  all_pairs_ms";
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8} {:>8} {:>8.2} {:>12.1}", self.n, self.groups, self.mean_k, self.indexed.as_secs_f64() * 1e3)?;
        match self.all_pairs {
            Some(d) => write!(f, " {:>13.1}", d.as_secs_f64() * 1e3),
            None => write!(f, " {:>13}", "-"),
        }
    }
}

/// Times bounds+index and, if `baseline`, the all-pairs configuration.
pub fn measure(points: &[Vec<f64>], spec: SimilaritySpec, policy: Policy, baseline: bool) -> Result<BenchRow> {
    let (gs, indexed) = timed_run(points, spec, policy, EngineConfig::default())?;
    let all_pairs = if baseline { Some(timed_run(points, spec, policy, EngineConfig::ALL_PAIRS)?.1) } else { None };
    let members: usize = gs.groups.iter().map(Vec::len).sum();
    let mean_k = if gs.groups.is_empty() { 0.0 } else { members as f64 / gs.groups.len() as f64 };
    Ok(BenchRow { n: points.len(), groups: gs.groups.len(), mean_k, indexed, all_pairs })
}
