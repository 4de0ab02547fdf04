use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{TrainConfig, TrainError};
use crate::corpus::AtepcSentence;

/// Groups per-aspect copies of the same sentence, in first-appearance order.
pub fn group_copies(corpus: &[AtepcSentence]) -> Vec<Vec<&AtepcSentence>> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<&AtepcSentence>> = Vec::new();
    for s in corpus {
        let key = s.sentence();
        match index.get(&key) {
            Some(&g) => groups[g].push(s),
            None => {
                index.insert(key, groups.len());
                groups.push(vec![s]);
            }
        }
    }
    groups
}

/// Number of (train, test) sentence groups for a corpus of `groups` sentences.
pub fn split_sizes(groups: usize, cfg: &TrainConfig) -> (usize, usize) {
    if groups >= cfg.train_size + cfg.test_size {
        (cfg.train_size, cfg.test_size)
    } else {
        let test = (groups as f64 * 0.1).round() as usize;
        (groups - test, test)
    }
}

/// Seeded shuffle of sentences (copies stay together), then a train/test
/// partition. Falls back to 90/10 when the corpus is smaller than the
/// configured sizes.
pub fn split(
    corpus: &[AtepcSentence],
    cfg: &TrainConfig,
) -> Result<(Vec<AtepcSentence>, Vec<AtepcSentence>), TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut groups = group_copies(corpus);
    let (n_train, n_test) = split_sizes(groups.len(), cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    groups.shuffle(&mut rng);
    let flatten = |gs: &[Vec<&AtepcSentence>]| gs.iter().flatten().map(|s| (*s).clone()).collect::<Vec<_>>();
    Ok((flatten(&groups[..n_train]), flatten(&groups[n_train..n_train + n_test])))
}
