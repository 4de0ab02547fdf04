use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::corpus::{Polarity, Tag};
use crate::lcf::linalg::{log_sum_exp, softmax};
use crate::lcf::{NUM_POLARITIES, NUM_TAGS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub tag: f64,
    pub polarity: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { tag: 1.0, polarity: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Mean token cross-entropy over non-padding positions.
    pub tag: f64,
    pub polarity: Option<f64>,
    /// Weighted sum of both terms.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub d_tag: Vec<[f64; NUM_TAGS]>,
    pub d_polarity: Option<[f64; NUM_POLARITIES]>,
}

/// Weighted sum of the mean tag cross-entropy (positions whose gold tag is
/// `None` are padding and ignored) and the polarity cross-entropy.
pub fn joint_loss(
    tag_logits: &[[f64; NUM_TAGS]],
    gold_tags: &[Option<Tag>],
    polarity_logits: Option<&[f64; NUM_POLARITIES]>,
    gold_polarity: Option<Polarity>,
    weights: LossWeights,
) -> Result<LossBreakdown, TrainError> {
    joint_loss_with_grad(tag_logits, gold_tags, polarity_logits, gold_polarity, weights).map(|(l, _)| l)
}

/// [`joint_loss`] together with its gradient at the logits.
pub fn joint_loss_with_grad(
    tag_logits: &[[f64; NUM_TAGS]],
    gold_tags: &[Option<Tag>],
    polarity_logits: Option<&[f64; NUM_POLARITIES]>,
    gold_polarity: Option<Polarity>,
    weights: LossWeights,
) -> Result<(LossBreakdown, LossGrad), TrainError> {
    if tag_logits.len() != gold_tags.len() {
        return Err(TrainError::Shape(format!(
            "{} tag logit rows for {} gold tags",
            tag_logits.len(),
            gold_tags.len()
        )));
    }
    if polarity_logits.is_some() != gold_polarity.is_some() {
        return Err(TrainError::Shape("polarity logits and gold polarity must be given together".into()));
    }

    let active = gold_tags.iter().filter(|t| t.is_some()).count();
    let mut tag = 0.0;
    let mut d_tag = vec![[0.0; NUM_TAGS]; tag_logits.len()];
    if active > 0 {
        let scale = weights.tag / active as f64;
        for ((logits, gold), grad) in tag_logits.iter().zip(gold_tags).zip(&mut d_tag) {
            let Some(gold) = gold else { continue };
            tag += log_sum_exp(logits) - logits[gold.index()];
            let p = softmax(logits);
            for (c, g) in grad.iter_mut().enumerate() {
                *g = scale * (p[c] - if c == gold.index() { 1.0 } else { 0.0 });
            }
        }
        tag /= active as f64;
    }

    let mut polarity = None;
    let mut d_polarity = None;
    if let (Some(logits), Some(gold)) = (polarity_logits, gold_polarity) {
        polarity = Some(log_sum_exp(logits) - logits[gold.index()]);
        let p = softmax(logits);
        let mut g = [0.0; NUM_POLARITIES];
        for (c, v) in g.iter_mut().enumerate() {
            *v = weights.polarity * (p[c] - if c == gold.index() { 1.0 } else { 0.0 });
        }
        d_polarity = Some(g);
    }

    let total = weights.tag * tag + weights.polarity * polarity.unwrap_or(0.0);
    Ok((LossBreakdown { tag, polarity, total }, LossGrad { d_tag, d_polarity }))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct textbook cross-entropy: -ln(exp(z_y) / Σ exp(z)).
    fn ce_oracle(logits: &[f64], gold: usize) -> f64 {
        let denom: f64 = logits.iter().map(|z| z.exp()).sum();
        -(logits[gold].exp() / denom).ln()
    }

    #[test]
    fn uniform_logits_give_ln3() {
        let l = joint_loss(
            &[[0.0; 3], [0.0; 3]],
            &[Some(Tag::O), Some(Tag::BeginAspect)],
            Some(&[0.0; 3]),
            Some(Polarity::Neutral),
            LossWeights::default(),
        )
        .unwrap();
        assert!((l.tag - 3f64.ln()).abs() < 1e-12);
        assert!((l.polarity.unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!((l.total - 2.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn absent_polarity_is_tag_only() {
        let l = joint_loss(&[[1.0, 0.0, -1.0]], &[Some(Tag::O)], None, None, LossWeights::default()).unwrap();
        assert_eq!(l.polarity, None);
        assert_eq!(l.total, l.tag);
    }

    #[test]
    fn two_token_case_matches_oracle() {
        let tags = [[2.0, -1.0, 0.5], [0.1, 1.7, -0.3]];
        let pol = [0.3, -0.2, 1.1];
        let w = LossWeights { tag: 1.0, polarity: 0.5 };
        let l = joint_loss(&tags, &[Some(Tag::O), Some(Tag::BeginAspect)], Some(&pol), Some(Polarity::Positive), w).unwrap();
        let expected_tag = (ce_oracle(&tags[0], 0) + ce_oracle(&tags[1], 1)) / 2.0;
        let expected = expected_tag + 0.5 * ce_oracle(&pol, 0);
        assert!((l.total - expected).abs() < 1e-12, "{} vs {expected}", l.total);
    }

    #[test]
    fn padding_contributes_nothing() {
        let base = joint_loss_with_grad(&[[0.2, 0.1, -0.4]], &[Some(Tag::BeginAspect)], None, None, LossWeights::default()).unwrap();
        let padded = joint_loss_with_grad(
            &[[0.2, 0.1, -0.4], [9.0, -3.0, 4.0]],
            &[Some(Tag::BeginAspect), None],
            None,
            None,
            LossWeights::default(),
        )
        .unwrap();
        assert_eq!(base.0, padded.0);
        assert_eq!(padded.1.d_tag[1], [0.0; 3]);
    }

    #[test]
    fn shape_errors() {
        assert!(joint_loss(&[[0.0; 3]], &[], None, None, LossWeights::default()).is_err());
        assert!(joint_loss(&[[0.0; 3]], &[Some(Tag::O)], Some(&[0.0; 3]), None, LossWeights::default()).is_err());
    }

    #[test]
    fn gradient_matches_difference() {
        let tags = [[0.4, -0.2, 0.9], [1.0, 0.0, -1.0]];
        let gold = [Some(Tag::InsideAspect), Some(Tag::O)];
        let pol = [0.1, 0.2, -0.3];
        let w = LossWeights { tag: 0.7, polarity: 1.3 };
        let (_, g) = joint_loss_with_grad(&tags, &gold, Some(&pol), Some(Polarity::Negative), w).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for c in 0..3 {
                let mut up = tags;
                let mut down = tags;
                up[i][c] += h;
                down[i][c] -= h;
                let f = |t: &[[f64; 3]]| joint_loss(t, &gold, Some(&pol), Some(Polarity::Negative), w).unwrap().total;
                let fd = (f(&up) - f(&down)) / (2.0 * h);
                assert!((fd - g.d_tag[i][c]).abs() < 1e-8);
            }
        }
    }
}
