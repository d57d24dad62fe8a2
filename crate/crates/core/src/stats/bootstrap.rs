//! Paired bootstrap significance for corpus-level metrics.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexical::BleuStats;

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// Metric of A minus metric of B on the full sample.
    pub observed_delta: f64,
    /// Two-sided percentile p-value for delta = 0.
    pub p: f64,
    pub ci95: (f64, f64),
    pub resamples: usize,
}

/// Resamples `n` example indices with replacement `resamples` times and
/// evaluates `delta` on each draw. Resample `r` uses ChaCha8 stream `r` of
/// `seed`, so the result does not depend on how rayon splits the work.
pub fn paired_bootstrap<F>(n: usize, resamples: usize, seed: u64, delta: F) -> Result<BootstrapResult>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    if resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let observed_delta = delta(&all);

    let mut deltas: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let draw: Vec<usize> = (0..n).map(|_| (rng.next_u64() % n as u64) as usize).collect();
            delta(&draw)
        })
        .collect();

    let le = deltas.iter().filter(|&&d| d <= 0.0).count() as f64 / resamples as f64;
    let ge = deltas.iter().filter(|&&d| d >= 0.0).count() as f64 / resamples as f64;
    let p = (2.0 * le.min(ge)).min(1.0);

    deltas.sort_by(f64::total_cmp);
    let at = |q: f64| deltas[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok(BootstrapResult {
        observed_delta,
        p,
        ci95: (at(0.025), at(0.975)),
        resamples,
    })
}

/// BLEU(A) - BLEU(B) under paired resampling of examples.
pub fn bootstrap_bleu(a: &[BleuStats], b: &[BleuStats], resamples: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    paired_bootstrap(a.len(), resamples, seed, |idx| {
        let sa: BleuStats = idx.iter().map(|&i| a[i]).sum();
        let sb: BleuStats = idx.iter().map(|&i| b[i]).sum();
        sa.score() - sb.score()
    })
}

/// Difference of success rates (booleans per dialog) under resampling.
pub fn bootstrap_rate(a: &[bool], b: &[bool], resamples: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    paired_bootstrap(a.len(), resamples, seed, |idx| {
        let hits = |v: &[bool]| idx.iter().filter(|&&i| v[i]).count() as f64;
        (hits(a) - hits(b)) / idx.len() as f64
    })
}
