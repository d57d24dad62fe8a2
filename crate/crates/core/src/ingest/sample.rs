//! Seeded few-shot sampling of dialogs.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Corpus;

/// Number of dialogs drawn per task for few-shot fine-tuning.
pub const DEFAULT_FEWSHOT_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSpec {
    pub k: usize,
    pub seed: u64,
}

impl FewShotSpec {
    pub fn new(k: usize, seed: u64) -> Self {
        FewShotSpec { k, seed }
    }
}

/// Draws `spec.k` distinct dialogs.
///
/// Dialog ids are sorted lexicographically and shuffled with a ChaCha8
/// stream keyed by the seed, so the selection depends only on the set of ids
/// and the seed, not on file order. The selected dialogs are returned in
/// their input order.
pub fn sample_fewshot(corpus: &Corpus, spec: &FewShotSpec) -> Result<Corpus> {
    if spec.k == 0 {
        return Err(Error::Config("few-shot k must be positive".into()));
    }
    let n = corpus.dialogs.len();
    if spec.k > n {
        return Err(Error::InsufficientDialogs {
            requested: spec.k,
            available: n,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| corpus.dialogs[a].dialog_id.cmp(&corpus.dialogs[b].dialog_id));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }

    let mut chosen = order[..spec.k].to_vec();
    chosen.sort_unstable();
    let dialogs = chosen.into_iter().map(|i| corpus.dialogs[i].clone()).collect();
    Ok(Corpus::new(corpus.source_tag.clone(), dialogs))
}
