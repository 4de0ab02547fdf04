//! Joint training: summed tag and polarity cross-entropy, mini-batch Adam,
//! evaluation on the held-out split after every epoch.

mod loss;
mod optim;
mod split;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use loss::{joint_loss, joint_loss_with_grad, LossBreakdown, LossGrad, LossWeights};
pub use optim::Adam;
pub use split::{group_copies, split, split_sizes};

use crate::corpus::{AtepcSentence, Polarity, Span, Tag};
use crate::eval::{evaluate, EvalError};
use crate::lcf::{AbsaModel, LcfModel, ModelConfig, ModelError, Vocab};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub batch_size: usize,
    pub num_epochs: usize,
    pub learning_rate: f64,
    pub tag_loss_weight: f64,
    pub polarity_loss_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            train_size: 2250,
            test_size: 250,
            batch_size: 16,
            num_epochs: 6,
            learning_rate: 2e-4,
            tag_loss_weight: 1.0,
            polarity_loss_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.num_epochs == 0 {
            return Err(TrainError::Config("batch_size and num_epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.tag_loss_weight > 0.0) || !(self.polarity_loss_weight > 0.0) {
            return Err(TrainError::Config("loss weights must be positive".into()));
        }
        Ok(())
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { tag: self.tag_loss_weight, polarity: self.polarity_loss_weight }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub tag_loss: f64,
    pub polarity_loss: f64,
    pub ate_f1: Option<f64>,
    pub apc_f1: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// Equality of everything except wall-clock time.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        self.epochs.len() == other.epochs.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.tag_loss.to_bits() == b.tag_loss.to_bits()
                    && a.polarity_loss.to_bits() == b.polarity_loss.to_bits()
                    && a.ate_f1.map(f64::to_bits) == b.ate_f1.map(f64::to_bits)
                    && a.apc_f1.map(f64::to_bits) == b.apc_f1.map(f64::to_bits)
            })
    }

    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("record serializes") + "\n")
            .collect()
    }
}

/// A sentence copy in model form.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub ids: Vec<usize>,
    /// `None` marks padding.
    pub tags: Vec<Option<Tag>>,
    pub focus: Option<(Span, Polarity)>,
}

impl Example {
    pub fn from_sentence(s: &AtepcSentence, vocab: &Vocab) -> Self {
        Example { ids: vocab.encode(&s.tokens), tags: s.tags.iter().copied().map(Some).collect(), focus: s.focused() }
    }
}

/// Loss of one example in inference mode (no dropout).
pub fn example_loss(model: &LcfModel, ex: &Example, weights: LossWeights) -> Result<LossBreakdown, TrainError> {
    let out = model.forward(&ex.ids, ex.focus.map(|f| f.0))?;
    joint_loss(&out.tag_logits, &ex.tags, out.polarity_logits.as_ref(), ex.focus.map(|f| f.1), weights)
}

/// Loss and parameter gradient of one example; dropout is active when `rng`
/// is given.
pub fn example_loss_and_grad(
    model: &LcfModel,
    ex: &Example,
    weights: LossWeights,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(LossBreakdown, Vec<f64>), TrainError> {
    let (out, cache) = model.forward_train(&ex.ids, ex.focus.map(|f| f.0), rng)?;
    let (loss, grad) = joint_loss_with_grad(
        &out.tag_logits,
        &ex.tags,
        out.polarity_logits.as_ref(),
        ex.focus.map(|f| f.1),
        weights,
    )?;
    let grads = model.backward(&cache, &grad.d_tag, grad.d_polarity.as_ref());
    Ok((loss, grads))
}

/// Averaged loss terms and summed gradient of one mini-batch. Per-example
/// work runs in parallel; the reduction is in batch order so results do not
/// depend on scheduling.
pub fn batch_gradient(
    model: &LcfModel,
    batch: &[&Example],
    weights: LossWeights,
    dropout_seed: Option<(u64, u64)>,
) -> Result<(f64, f64, Vec<f64>), TrainError> {
    let parts: Vec<Result<(LossBreakdown, Vec<f64>), TrainError>> = batch
        .par_iter()
        .enumerate()
        .map(|(k, ex)| match dropout_seed {
            Some((seed, stream)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream.wrapping_add(k as u64));
                example_loss_and_grad(model, ex, weights, Some(&mut rng))
            }
            None => example_loss_and_grad(model, ex, weights, None),
        })
        .collect();
    let mut sum = vec![0.0; model.num_params()];
    let (mut tag, mut pol) = (0.0, 0.0);
    let scale = 1.0 / batch.len() as f64;
    for part in parts {
        let (loss, g) = part?;
        tag += loss.tag;
        pol += loss.polarity.unwrap_or(0.0);
        for (s, v) in sum.iter_mut().zip(&g) {
            *s += v * scale;
        }
    }
    Ok((tag * scale, pol * scale, sum))
}

/// Trains `model` in place on `train`, evaluating on `test` after each epoch.
/// `on_epoch` sees each finished epoch (checkpointing, logging).
pub fn fit(
    model: &mut AbsaModel,
    train: &[AtepcSentence],
    test: &[AtepcSentence],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord, &AbsaModel) -> Result<(), TrainError>,
) -> Result<TrainHistory, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let max_len = model.model.config().max_len;
    if let Some(s) = train.iter().chain(test).find(|s| s.len() > max_len) {
        return Err(TrainError::Config(format!(
            "sentence of {} tokens exceeds max_len {max_len}: {:?}",
            s.len(),
            s.sentence()
        )));
    }
    let examples: Vec<Example> = train.iter().map(|s| Example::from_sentence(s, &model.vocab)).collect();
    let weights = cfg.loss_weights();
    let dropout = model.model.config().dropout > 0.0;
    let mut adam = Adam::new(model.model.num_params(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.num_epochs {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let (mut tag_sum, mut pol_sum, mut batches) = (0.0, 0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let stream = adam.steps() * cfg.batch_size as u64;
            let seed = dropout.then_some((cfg.seed ^ 0x5eed_d120_u64, stream));
            let (tag, pol, grads) = batch_gradient(&model.model, &batch, weights, seed)?;
            if !tag.is_finite() || !pol.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFinite { epoch, batch: b });
            }
            adam.step(model.model.params_mut(), &grads);
            for p in model.model.params_mut() {
                *p = *p as f32 as f64;
            }
            tag_sum += tag;
            pol_sum += pol;
            batches += 1;
        }

        let (ate_f1, apc_f1) = if test.is_empty() {
            (None, None)
        } else {
            let report = evaluate(model, test)?;
            (Some(report.ate_f1), Some(report.apc_f1_macro))
        };
        let record = EpochRecord {
            epoch,
            tag_loss: tag_sum / batches as f64,
            polarity_loss: pol_sum / batches as f64,
            ate_f1,
            apc_f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        tracing::info!(
            epoch,
            tag_loss = record.tag_loss,
            polarity_loss = record.polarity_loss,
            ate_f1 = ?record.ate_f1,
            apc_f1 = ?record.apc_f1,
            "epoch finished"
        );
        on_epoch(&record, model)?;
        history.epochs.push(record);
    }
    Ok(history)
}

/// Everything produced by [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AbsaModel,
    pub history: TrainHistory,
    pub train: Vec<AtepcSentence>,
    pub test: Vec<AtepcSentence>,
}

/// Splits `corpus`, builds the vocabulary from the training split, initializes
/// a model from `model_config` and trains it.
pub fn train(model_config: &ModelConfig, corpus: &[AtepcSentence], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(model_config, corpus, cfg, &mut |_, _| Ok(()))
}

pub fn train_with(
    model_config: &ModelConfig,
    corpus: &[AtepcSentence],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord, &AbsaModel) -> Result<(), TrainError>,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let (train_set, test_set) = split(corpus, cfg)?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let vocab = Vocab::build(train_set.iter().flat_map(|s| &s.tokens));
    let config = ModelConfig { vocab_size: vocab.len(), ..model_config.clone() };
    let mut model = AbsaModel::new(vocab, LcfModel::new(config)?)?;
    tracing::info!(
        train = train_set.len(),
        test = test_set.len(),
        vocab = model.vocab.len(),
        params = model.model.num_params(),
        "training"
    );
    let history = fit(&mut model, &train_set, &test_set, cfg, on_epoch)?;
    Ok(TrainOutcome { model, history, train: train_set, test: test_set })
}
