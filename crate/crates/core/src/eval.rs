//! Exact-match span F1 for aspect extraction, accuracy and macro F1 for
//! aspect polarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AtepcSentence, Polarity, Span, Tag, Token};
use crate::lcf::{decode_bio, AspectModel, ModelError};
use crate::train::group_copies;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("length mismatch: {pred} predictions for {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Precision and recall of empty denominators are 1 (no false positives,
    /// no false negatives).
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Prf {
        let precision = if predicted == 0 { 1.0 } else { tp as f64 / predicted as f64 };
        let recall = if gold == 0 { 1.0 } else { tp as f64 / gold as f64 };
        Prf { precision, recall, f1: harmonic(precision, recall) }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Aspect spans of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanSet {
    pub sentence: usize,
    pub spans: BTreeSet<Span>,
}

impl SpanSet {
    pub fn new(sentence: usize, spans: impl IntoIterator<Item = Span>) -> Self {
        SpanSet { sentence, spans: spans.into_iter().collect() }
    }
}

fn by_sentence(sets: &[SpanSet]) -> BTreeMap<usize, BTreeSet<Span>> {
    let mut out: BTreeMap<usize, BTreeSet<Span>> = BTreeMap::new();
    for s in sets {
        out.entry(s.sentence).or_default().extend(s.spans.iter().copied());
    }
    out
}

/// Exact-match span precision, recall and F1 summed over sentences.
pub fn span_f1(pred: &[SpanSet], gold: &[SpanSet]) -> Prf {
    let pred = by_sentence(pred);
    let gold = by_sentence(gold);
    let empty = BTreeSet::new();
    let tp: usize = pred
        .iter()
        .map(|(id, spans)| spans.intersection(gold.get(id).unwrap_or(&empty)).count())
        .sum();
    let n_pred = pred.values().map(BTreeSet::len).sum();
    let n_gold = gold.values().map(BTreeSet::len).sum();
    Prf::from_counts(tp, n_pred, n_gold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApcMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Classes that occur in gold or predictions.
    pub per_class: BTreeMap<Polarity, ClassMetrics>,
}

/// Multiclass accuracy and macro F1. Classes absent from both gold and
/// predictions are left out of the macro mean.
pub fn apc_metrics(pred: &[Polarity], gold: &[Polarity]) -> Result<ApcMetrics, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch { pred: pred.len(), gold: gold.len() });
    }
    let correct = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    let accuracy = if gold.is_empty() { 1.0 } else { correct as f64 / gold.len() as f64 };
    let mut per_class = BTreeMap::new();
    for class in Polarity::ALL {
        let n_pred = pred.iter().filter(|p| **p == class).count();
        let n_gold = gold.iter().filter(|g| **g == class).count();
        if n_pred == 0 && n_gold == 0 {
            continue;
        }
        let tp = pred.iter().zip(gold).filter(|(p, g)| **p == class && **g == class).count();
        let precision = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
        let recall = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
        per_class.insert(class, ClassMetrics { precision, recall, f1: harmonic(precision, recall), support: n_gold });
    }
    let macro_f1 = if per_class.is_empty() {
        1.0
    } else {
        per_class.values().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
    };
    Ok(ApcMetrics { accuracy, macro_f1, per_class })
}

/// Evaluation summary over a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Distinct sentences after collapsing per-aspect copies.
    pub sentences: usize,
    pub gold_aspects: usize,
    pub predicted_aspects: usize,
    pub ate_precision: f64,
    pub ate_recall: f64,
    pub ate_f1: f64,
    /// Polarity on gold spans.
    pub apc_accuracy: f64,
    pub apc_f1_macro: f64,
    pub apc_per_class: BTreeMap<Polarity, ClassMetrics>,
    /// Exact span and polarity match on predicted spans.
    pub joint_precision: f64,
    pub joint_recall: f64,
    pub joint_f1: f64,
    /// Ill-formed predicted tag sequences repaired during decoding.
    pub bio_repairs: usize,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One collapsed test sentence with its gold annotation.
struct GoldSentence<'a> {
    tokens: &'a [Token],
    spans: Vec<Span>,
    labelled: Vec<(Span, Polarity)>,
}

fn collapse(test: &[AtepcSentence]) -> Vec<GoldSentence<'_>> {
    group_copies(test)
        .into_iter()
        .map(|copies| {
            let mut labelled: Vec<(Span, Polarity)> = copies.iter().filter_map(|s| s.focused()).collect();
            labelled.sort();
            labelled.dedup_by_key(|(s, _)| *s);
            GoldSentence { tokens: &copies[0].tokens, spans: copies[0].spans(), labelled }
        })
        .collect()
}

struct SentenceOutcome {
    predicted: Vec<Span>,
    predicted_polarity: Vec<Polarity>,
    gold_span_polarity: Vec<Polarity>,
    repairs: usize,
}

/// Runs the model over de-duplicated test sentences: span F1 on predicted
/// tags, polarity metrics on gold spans, and joint span+polarity F1.
pub fn evaluate(model: &dyn AspectModel, test: &[AtepcSentence]) -> Result<MetricReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let gold = collapse(test);
    let outcomes: Vec<Result<SentenceOutcome, EvalError>> = gold
        .par_iter()
        .map(|g| {
            let decoded = decode_bio(&model.tag(g.tokens)?);
            let predicted_polarity = model.classify(g.tokens, &decoded.spans)?.into_iter().map(|(p, _)| p).collect();
            let gold_spans: Vec<Span> = g.labelled.iter().map(|(s, _)| *s).collect();
            let gold_span_polarity = model.classify(g.tokens, &gold_spans)?.into_iter().map(|(p, _)| p).collect();
            Ok(SentenceOutcome {
                predicted: decoded.spans,
                predicted_polarity,
                gold_span_polarity,
                repairs: decoded.repairs,
            })
        })
        .collect();

    let mut pred_sets = Vec::with_capacity(gold.len());
    let mut gold_sets = Vec::with_capacity(gold.len());
    let mut pred_pol = Vec::new();
    let mut gold_pol = Vec::new();
    let (mut joint_tp, mut joint_pred, mut joint_gold) = (0, 0, 0);
    let mut repairs = 0;
    for (id, (g, outcome)) in gold.iter().zip(outcomes).enumerate() {
        let o = outcome?;
        repairs += o.repairs;
        pred_sets.push(SpanSet::new(id, o.predicted.iter().copied()));
        gold_sets.push(SpanSet::new(id, g.spans.iter().copied()));
        pred_pol.extend(o.gold_span_polarity);
        gold_pol.extend(g.labelled.iter().map(|(_, p)| *p));

        let gold_pairs: BTreeSet<(Span, Polarity)> = g.labelled.iter().copied().collect();
        let pred_pairs: BTreeSet<(Span, Polarity)> =
            o.predicted.iter().copied().zip(o.predicted_polarity).collect();
        joint_tp += pred_pairs.intersection(&gold_pairs).count();
        joint_pred += pred_pairs.len();
        joint_gold += gold_pairs.len();
    }
    let ate = span_f1(&pred_sets, &gold_sets);
    let apc = apc_metrics(&pred_pol, &gold_pol)?;
    let joint = Prf::from_counts(joint_tp, joint_pred, joint_gold);
    Ok(MetricReport {
        sentences: gold.len(),
        gold_aspects: gold_sets.iter().map(|s| s.spans.len()).sum(),
        predicted_aspects: pred_sets.iter().map(|s| s.spans.len()).sum(),
        ate_precision: ate.precision,
        ate_recall: ate.recall,
        ate_f1: ate.f1,
        apc_accuracy: apc.accuracy,
        apc_f1_macro: apc.macro_f1,
        apc_per_class: apc.per_class,
        joint_precision: joint.precision,
        joint_recall: joint.recall,
        joint_f1: joint.f1,
        bio_repairs: repairs,
    })
}

/// Plain-text table with one row per model and ATE / APC F1 columns.
pub fn render_table(rows: &[(&str, &MetricReport)]) -> String {
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>7} | {:>7}", "", "ATE", "APC");
    let _ = writeln!(out, "{}", "-".repeat(width + 20));
    for (name, r) in rows {
        let _ = writeln!(out, "{:<width$} | {:>7.4} | {:>7.4}", name, r.ate_f1, r.apc_f1_macro);
    }
    out
}

/// Detailed single-report breakdown.
pub fn render_details(r: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sentences        {}", r.sentences);
    let _ = writeln!(out, "gold aspects     {}", r.gold_aspects);
    let _ = writeln!(out, "predicted        {}", r.predicted_aspects);
    let _ = writeln!(out, "ATE  P/R/F1      {:.4} / {:.4} / {:.4}", r.ate_precision, r.ate_recall, r.ate_f1);
    let _ = writeln!(out, "APC  acc / F1    {:.4} / {:.4}", r.apc_accuracy, r.apc_f1_macro);
    for (class, m) in &r.apc_per_class {
        let _ = writeln!(out, "  {:<9} P {:.4}  R {:.4}  F1 {:.4}  n={}", class.as_str(), m.precision, m.recall, m.f1, m.support);
    }
    let _ = writeln!(out, "joint P/R/F1     {:.4} / {:.4} / {:.4}", r.joint_precision, r.joint_recall, r.joint_f1);
    let _ = writeln!(out, "BIO repairs      {}", r.bio_repairs);
    out
}

/// Test double that answers with the gold annotation of known sentences and
/// all-O / Neutral otherwise.
pub struct EchoOracle {
    tags: HashMap<String, Vec<Tag>>,
    polarity: HashMap<(String, Span), Polarity>,
    max_len: usize,
}

impl EchoOracle {
    pub fn new(sentences: &[AtepcSentence]) -> Self {
        let mut tags = HashMap::new();
        let mut polarity = HashMap::new();
        for s in sentences {
            let key = s.sentence();
            if let Some((span, p)) = s.focused() {
                polarity.insert((key.clone(), span), p);
            }
            tags.insert(key, s.tags.clone());
        }
        let max_len = sentences.iter().map(AtepcSentence::len).max().unwrap_or(1).max(1);
        EchoOracle { tags, polarity, max_len }
    }
}

impl AspectModel for EchoOracle {
    fn max_len(&self) -> usize {
        self.max_len
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Tag>, ModelError> {
        let key = crate::corpus::join_tokens(tokens);
        Ok(self.tags.get(&key).cloned().unwrap_or_else(|| vec![Tag::O; tokens.len()]))
    }

    fn classify(&self, tokens: &[Token], spans: &[Span]) -> Result<Vec<(Polarity, f64)>, ModelError> {
        let key = crate::corpus::join_tokens(tokens);
        Ok(spans
            .iter()
            .map(|s| match self.polarity.get(&(key.clone(), *s)) {
                Some(p) => (*p, 1.0),
                None => (Polarity::Neutral, 1.0 / 3.0),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Polarity::{Negative as N, Neutral as U, Positive as P};

    fn set(id: usize, spans: &[(usize, usize)]) -> SpanSet {
        SpanSet::new(id, spans.iter().map(|&(a, b)| Span::new(a, b)))
    }

    #[test]
    fn identical_sets_score_one() {
        let g = [set(0, &[(1, 1), (3, 4)]), set(1, &[(0, 0)])];
        assert_eq!(span_f1(&g, &g), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn half_overlap() {
        let prf = span_f1(&[set(0, &[(1, 1), (3, 3)])], &[set(0, &[(1, 1), (6, 6)])]);
        assert_eq!(prf, Prf { precision: 0.5, recall: 0.5, f1: 0.5 });
    }

    #[test]
    fn empty_prediction_convention() {
        let prf = span_f1(&[set(0, &[])], &[set(0, &[(2, 2)])]);
        assert_eq!(prf, Prf { precision: 1.0, recall: 0.0, f1: 0.0 });
        assert_eq!(span_f1(&[], &[]), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn partial_overlap_gets_no_credit() {
        let prf = span_f1(&[set(0, &[(1, 2)])], &[set(0, &[(1, 3)])]);
        assert_eq!(prf.f1, 0.0);
    }

    #[test]
    fn apc_examples() {
        let all = apc_metrics(&[P, N, U], &[P, N, U]).unwrap();
        assert_eq!((all.accuracy, all.macro_f1), (1.0, 1.0));
        let two_thirds = apc_metrics(&[P, P, N], &[P, N, N]).unwrap();
        assert_eq!(two_thirds.accuracy, 2.0 / 3.0);
        // P: precision 1/2, recall 1 -> 2/3; N: precision 1, recall 1/2 -> 2/3
        assert!((two_thirds.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        let single = apc_metrics(&[N, N], &[N, N]).unwrap();
        assert_eq!(single.macro_f1, 1.0);
        assert_eq!(single.per_class.len(), 1);
    }

    #[test]
    fn apc_length_mismatch() {
        assert!(matches!(apc_metrics(&[P], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn table_has_one_row_per_model() {
        let r = MetricReport {
            sentences: 1,
            gold_aspects: 1,
            predicted_aspects: 1,
            ate_precision: 1.0,
            ate_recall: 1.0,
            ate_f1: 1.0,
            apc_accuracy: 1.0,
            apc_f1_macro: 1.0,
            apc_per_class: BTreeMap::new(),
            joint_precision: 1.0,
            joint_recall: 1.0,
            joint_f1: 1.0,
            bio_repairs: 0,
        };
        let t = render_table(&[("baseline", &r), ("lcf", &r)]);
        assert_eq!(t.lines().count(), 4);
        assert!(t.contains("ATE") && t.contains("APC"));
    }
}
