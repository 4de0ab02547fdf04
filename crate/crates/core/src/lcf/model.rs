//! Word-level pre-norm transformer encoder with a BIO tag head on every token
//! and a polarity head over LCF-weighted, mean-pooled encoder states.
//!
//! All parameters live in one flat `Vec<f64>` described by a [`Layout`], so the
//! optimizer, checkpointing and gradient checks work over a single buffer.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::linalg::{
    gelu, gelu_grad, layer_norm, layer_norm_backward, linear, linear_backward, LayerNormCache,
};
use super::{lcf_weights, ModelConfig, ModelError};
use crate::corpus::Span;

pub const NUM_TAGS: usize = 3;
pub const NUM_POLARITIES: usize = 3;

#[derive(Debug, Clone, Copy)]
struct Seg {
    start: usize,
    end: usize,
}

impl Seg {
    fn of<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.start..self.end]
    }

    fn of_mut<'a>(&self, v: &'a mut [f64]) -> &'a mut [f64] {
        &mut v[self.start..self.end]
    }
}

/// Mutable views of two segments where `a` precedes `b`.
fn two_mut(v: &mut [f64], a: Seg, b: Seg) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start, "segments out of order");
    let (lo, hi) = v.split_at_mut(b.start);
    (&mut lo[a.start..a.end], &mut hi[..b.end - b.start])
}

/// Name and shape of one parameter tensor inside the flat buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layout {
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

impl Layout {
    fn push(&mut self, name: String, shape: &[usize]) -> Seg {
        let spec = TensorSpec { name, shape: shape.to_vec(), offset: self.total };
        let seg = Seg { start: self.total, end: self.total + spec.numel() };
        self.total = seg.end;
        self.tensors.push(spec);
        seg
    }

    /// Tensor containing flat parameter index `i`.
    pub fn tensor_of(&self, i: usize) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.offset <= i && i < t.offset + t.numel())
    }
}

#[derive(Debug, Clone)]
struct LayerIndex {
    ln1_g: Seg,
    ln1_b: Seg,
    wq: Seg,
    bq: Seg,
    wk: Seg,
    bk: Seg,
    wv: Seg,
    bv: Seg,
    wo: Seg,
    bo: Seg,
    ln2_g: Seg,
    ln2_b: Seg,
    w1: Seg,
    b1: Seg,
    w2: Seg,
    b2: Seg,
}

#[derive(Debug, Clone)]
struct Index {
    tok: Seg,
    pos: Seg,
    layers: Vec<LayerIndex>,
    lnf_g: Seg,
    lnf_b: Seg,
    tag_w: Seg,
    tag_b: Seg,
    pol_w: Seg,
    pol_b: Seg,
}

fn build_layout(c: &ModelConfig) -> (Layout, Index) {
    let d = c.d_model;
    let mut l = Layout::default();
    let tok = l.push("embed.token".into(), &[c.vocab_size, d]);
    let pos = l.push("embed.position".into(), &[c.max_len, d]);
    let layers = (0..c.n_layers)
        .map(|i| {
            let p = |s: &str| format!("layer{i}.{s}");
            LayerIndex {
                ln1_g: l.push(p("ln1.gamma"), &[d]),
                ln1_b: l.push(p("ln1.beta"), &[d]),
                wq: l.push(p("attn.wq"), &[d, d]),
                bq: l.push(p("attn.bq"), &[d]),
                wk: l.push(p("attn.wk"), &[d, d]),
                bk: l.push(p("attn.bk"), &[d]),
                wv: l.push(p("attn.wv"), &[d, d]),
                bv: l.push(p("attn.bv"), &[d]),
                wo: l.push(p("attn.wo"), &[d, d]),
                bo: l.push(p("attn.bo"), &[d]),
                ln2_g: l.push(p("ln2.gamma"), &[d]),
                ln2_b: l.push(p("ln2.beta"), &[d]),
                w1: l.push(p("ffn.w1"), &[d, c.d_ff]),
                b1: l.push(p("ffn.b1"), &[c.d_ff]),
                w2: l.push(p("ffn.w2"), &[c.d_ff, d]),
                b2: l.push(p("ffn.b2"), &[d]),
            }
        })
        .collect();
    let lnf_g = l.push("final_ln.gamma".into(), &[d]);
    let lnf_b = l.push("final_ln.beta".into(), &[d]);
    let tag_w = l.push("tag_head.w".into(), &[d, NUM_TAGS]);
    let tag_b = l.push("tag_head.b".into(), &[NUM_TAGS]);
    let pol_w = l.push("polarity_head.w".into(), &[d, NUM_POLARITIES]);
    let pol_b = l.push("polarity_head.b".into(), &[NUM_POLARITIES]);
    let index = Index { tok, pos, layers, lnf_g, lnf_b, tag_w, tag_b, pol_w, pol_b };
    (l, index)
}

/// Parameter layout implied by `config`.
pub fn layout_for(config: &ModelConfig) -> Layout {
    build_layout(config).0
}

/// Output of one forward call.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub tag_logits: Vec<[f64; NUM_TAGS]>,
    pub polarity_logits: Option<[f64; NUM_POLARITIES]>,
}

struct LayerCache {
    ln1: LayerNormCache,
    a: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    attn_mask: Option<Vec<f64>>,
    ln2: LayerNormCache,
    b: Vec<f64>,
    pre_act: Vec<f64>,
    act: Vec<f64>,
    ffn_mask: Option<Vec<f64>>,
}

/// Activations kept from a training forward pass for [`LcfModel::backward`].
pub struct ForwardCache {
    ids: Vec<usize>,
    embed_mask: Option<Vec<f64>>,
    layers: Vec<LayerCache>,
    final_ln: LayerNormCache,
    states: Vec<f64>,
    pool_weights: Option<Vec<f64>>,
    pooled: Option<Vec<f64>>,
}

impl ForwardCache {
    /// Final encoder states, `n × d_model` row-major.
    pub fn states(&self) -> &[f64] {
        &self.states
    }
}

pub struct LcfModel {
    config: ModelConfig,
    layout: Layout,
    index: Index,
    params: Vec<f64>,
    encoder_runs: AtomicUsize,
}

impl Clone for LcfModel {
    fn clone(&self) -> Self {
        LcfModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            index: self.index.clone(),
            params: self.params.clone(),
            encoder_runs: AtomicUsize::new(0),
        }
    }
}

impl std::fmt::Debug for LcfModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LcfModel")
            .field("config", &self.config)
            .field("num_params", &self.params.len())
            .finish()
    }
}

fn dropout_mask(len: usize, p: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Option<Vec<f64>> {
    let rng = rng.as_deref_mut()?;
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    Some((0..len).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect())
}

fn apply_mask(x: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        for (v, k) in x.iter_mut().zip(m) {
            *v *= k;
        }
    }
}

impl LcfModel {
    /// Fresh model with parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let (layout, index) = build_layout(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embed = Normal::new(0.0, 0.1).expect("valid normal");
        for seg in [index.tok, index.pos] {
            for p in seg.of_mut(&mut params) {
                *p = embed.sample(&mut rng);
            }
        }
        let xavier = |params: &mut [f64], rng: &mut ChaCha8Rng, seg: Seg, fan_in: usize, fan_out: usize| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("valid bound");
            for p in seg.of_mut(params) {
                *p = dist.sample(rng);
            }
        };
        let (d, ff) = (config.d_model, config.d_ff);
        for layer in &index.layers {
            for seg in [layer.ln1_g, layer.ln2_g] {
                seg.of_mut(&mut params).fill(1.0);
            }
            for seg in [layer.wq, layer.wk, layer.wv, layer.wo] {
                xavier(&mut params, &mut rng, seg, d, d);
            }
            xavier(&mut params, &mut rng, layer.w1, d, ff);
            xavier(&mut params, &mut rng, layer.w2, ff, d);
        }
        index.lnf_g.of_mut(&mut params).fill(1.0);
        xavier(&mut params, &mut rng, index.tag_w, d, NUM_TAGS);
        xavier(&mut params, &mut rng, index.pol_w, d, NUM_POLARITIES);
        // parameters are kept exactly representable in the f32 checkpoint format
        for p in &mut params {
            *p = *p as f32 as f64;
        }
        Ok(LcfModel { config, layout, index, params, encoder_runs: AtomicUsize::new(0) })
    }

    /// Rebuilds a model from a config and a flat parameter buffer.
    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self, ModelError> {
        config.validate()?;
        let (layout, index) = build_layout(&config);
        if params.len() != layout.total {
            return Err(ModelError::Checkpoint(format!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(LcfModel { config, layout, index, params, encoder_runs: AtomicUsize::new(0) })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Number of encoder passes executed since construction.
    pub fn encoder_runs(&self) -> usize {
        self.encoder_runs.load(Ordering::Relaxed)
    }

    pub fn check_input(&self, ids: &[usize], spans: &[Span]) -> Result<(), ModelError> {
        if ids.len() > self.config.max_len {
            return Err(ModelError::TooLong { len: ids.len(), max: self.config.max_len });
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(ModelError::TokenOutOfRange { id, vocab_size: self.config.vocab_size });
        }
        if let Some(span) = spans.iter().find(|s| !s.fits(ids.len())) {
            return Err(ModelError::SpanOutOfRange { span: *span, len: ids.len() });
        }
        Ok(())
    }

    /// LCF multipliers for a sequence of length `n` focused on `span`.
    pub fn polarity_weights(&self, n: usize, span: Span) -> Vec<f64> {
        lcf_weights(self.config.lcf_mode, n, span, self.config.srd_threshold)
    }

    /// `Σᵢ wᵢ·statesᵢ / n`. Positions with zero weight are skipped, so they
    /// contribute exactly nothing.
    pub fn pool(&self, states: &[f64], weights: &[f64]) -> Vec<f64> {
        let d = self.config.d_model;
        let n = weights.len();
        let mut pooled = vec![0.0; d];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (acc, s) in pooled.iter_mut().zip(&states[i * d..(i + 1) * d]) {
                *acc += w * s;
            }
        }
        for v in &mut pooled {
            *v /= n as f64;
        }
        pooled
    }

    /// Tag head applied to encoder states of `n` tokens.
    pub fn tag_logits(&self, states: &[f64], n: usize) -> Vec<[f64; NUM_TAGS]> {
        let ix = &self.index;
        let flat = linear(
            states,
            ix.tag_w.of(&self.params),
            ix.tag_b.of(&self.params),
            n,
            self.config.d_model,
            NUM_TAGS,
        );
        flat.chunks_exact(NUM_TAGS).map(|c| [c[0], c[1], c[2]]).collect()
    }

    /// LCF transform, pooling and polarity head for one focused span.
    pub fn span_polarity_logits(&self, states: &[f64], n: usize, span: Span) -> [f64; NUM_POLARITIES] {
        let w = self.polarity_weights(n, span);
        self.polarity_logits(&self.pool(states, &w))
    }

    fn polarity_logits(&self, pooled: &[f64]) -> [f64; NUM_POLARITIES] {
        let ix = &self.index;
        let out = linear(
            pooled,
            ix.pol_w.of(&self.params),
            ix.pol_b.of(&self.params),
            1,
            self.config.d_model,
            NUM_POLARITIES,
        );
        [out[0], out[1], out[2]]
    }

    fn run_encoder(&self, ids: &[usize], mut rng: Option<&mut ChaCha8Rng>) -> ForwardCache {
        self.encoder_runs.fetch_add(1, Ordering::Relaxed);
        let c = &self.config;
        let (n, d, ff, heads, hd) = (ids.len(), c.d_model, c.d_ff, c.n_heads, c.head_dim());
        let p = &self.params;
        let ix = &self.index;
        let scale = 1.0 / (hd as f64).sqrt();

        let mut h = vec![0.0; n * d];
        let tok = ix.tok.of(p);
        let pos = ix.pos.of(p);
        for (i, &id) in ids.iter().enumerate() {
            for j in 0..d {
                h[i * d + j] = tok[id * d + j] + pos[i * d + j];
            }
        }
        let embed_mask = dropout_mask(n * d, c.dropout, &mut rng);
        apply_mask(&mut h, &embed_mask);

        let mut layers = Vec::with_capacity(c.n_layers);
        for li in &ix.layers {
            let (a, ln1) = layer_norm(&h, li.ln1_g.of(p), li.ln1_b.of(p), n, d);
            let q = linear(&a, li.wq.of(p), li.bq.of(p), n, d, d);
            let k = linear(&a, li.wk.of(p), li.bk.of(p), n, d, d);
            let v = linear(&a, li.wv.of(p), li.bv.of(p), n, d, d);
            let mut probs = vec![0.0; heads * n * n];
            let mut ctx = vec![0.0; n * d];
            for hh in 0..heads {
                let off = hh * hd;
                for i in 0..n {
                    let row = &mut probs[(hh * n + i) * n..(hh * n + i + 1) * n];
                    let qi = &q[i * d + off..i * d + off + hd];
                    let mut max = f64::NEG_INFINITY;
                    for (j, r) in row.iter_mut().enumerate() {
                        let kj = &k[j * d + off..j * d + off + hd];
                        *r = qi.iter().zip(kj).map(|(x, y)| x * y).sum::<f64>() * scale;
                        max = max.max(*r);
                    }
                    let mut sum = 0.0;
                    for r in row.iter_mut() {
                        *r = (*r - max).exp();
                        sum += *r;
                    }
                    for r in row.iter_mut() {
                        *r /= sum;
                    }
                    let ci = &mut ctx[i * d + off..i * d + off + hd];
                    for (j, &pij) in row.iter().enumerate() {
                        let vj = &v[j * d + off..j * d + off + hd];
                        for (cv, vv) in ci.iter_mut().zip(vj) {
                            *cv += pij * vv;
                        }
                    }
                }
            }
            let mut attn_out = linear(&ctx, li.wo.of(p), li.bo.of(p), n, d, d);
            let attn_mask = dropout_mask(n * d, c.dropout, &mut rng);
            apply_mask(&mut attn_out, &attn_mask);
            for (x, o) in h.iter_mut().zip(&attn_out) {
                *x += o;
            }

            let (b, ln2) = layer_norm(&h, li.ln2_g.of(p), li.ln2_b.of(p), n, d);
            let pre_act = linear(&b, li.w1.of(p), li.b1.of(p), n, d, ff);
            let act: Vec<f64> = pre_act.iter().map(|&x| gelu(x)).collect();
            let mut ffn_out = linear(&act, li.w2.of(p), li.b2.of(p), n, ff, d);
            let ffn_mask = dropout_mask(n * d, c.dropout, &mut rng);
            apply_mask(&mut ffn_out, &ffn_mask);
            for (x, o) in h.iter_mut().zip(&ffn_out) {
                *x += o;
            }
            layers.push(LayerCache { ln1, a, q, k, v, probs, ctx, attn_mask, ln2, b, pre_act, act, ffn_mask });
        }
        let (states, final_ln) = layer_norm(&h, ix.lnf_g.of(p), ix.lnf_b.of(p), n, d);
        ForwardCache {
            ids: ids.to_vec(),
            embed_mask,
            layers,
            final_ln,
            states,
            pool_weights: None,
            pooled: None,
        }
    }

    /// Final encoder states (`n × d_model`) in inference mode.
    pub fn encode(&self, ids: &[usize]) -> Result<Vec<f64>, ModelError> {
        self.check_input(ids, &[])?;
        Ok(self.run_encoder(ids, None).states)
    }

    /// One encoder pass feeding both heads. Polarity logits are produced only
    /// when a focused span is given.
    pub fn forward(&self, ids: &[usize], focused: Option<Span>) -> Result<ForwardOutput, ModelError> {
        let spans: Vec<Span> = focused.into_iter().collect();
        let (tag_logits, polarity) = self.forward_spans(ids, &spans)?;
        Ok(ForwardOutput { tag_logits, polarity_logits: polarity.into_iter().next() })
    }

    /// Tag logits plus polarity logits for every span, from a single encoder
    /// pass.
    #[allow(clippy::type_complexity)]
    pub fn forward_spans(
        &self,
        ids: &[usize],
        spans: &[Span],
    ) -> Result<(Vec<[f64; NUM_TAGS]>, Vec<[f64; NUM_POLARITIES]>), ModelError> {
        self.check_input(ids, spans)?;
        let n = ids.len();
        let states = self.run_encoder(ids, None).states;
        let tags = self.tag_logits(&states, n);
        let polarity = spans.iter().map(|span| self.span_polarity_logits(&states, n, *span)).collect();
        Ok((tags, polarity))
    }

    /// Training forward pass. Dropout is active when `rng` is given.
    pub fn forward_train(
        &self,
        ids: &[usize],
        focused: Option<Span>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(ForwardOutput, ForwardCache), ModelError> {
        let spans: Vec<Span> = focused.into_iter().collect();
        self.check_input(ids, &spans)?;
        let n = ids.len();
        let mut cache = self.run_encoder(ids, rng);
        let tag_logits = self.tag_logits(&cache.states, n);
        let mut polarity_logits = None;
        if let Some(span) = focused {
            let w = self.polarity_weights(n, span);
            let pooled = self.pool(&cache.states, &w);
            polarity_logits = Some(self.polarity_logits(&pooled));
            cache.pool_weights = Some(w);
            cache.pooled = Some(pooled);
        }
        Ok((ForwardOutput { tag_logits, polarity_logits }, cache))
    }

    /// Gradient of the loss with respect to every parameter, given the loss
    /// gradients at the tag logits and (if present) the polarity logits.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_tag: &[[f64; NUM_TAGS]],
        d_polarity: Option<&[f64; NUM_POLARITIES]>,
    ) -> Vec<f64> {
        let c = &self.config;
        let (n, d, ff, heads, hd) = (cache.ids.len(), c.d_model, c.d_ff, c.n_heads, c.head_dim());
        let p = &self.params;
        let ix = &self.index;
        let scale = 1.0 / (hd as f64).sqrt();
        let mut grads = vec![0.0; self.params.len()];

        let d_tag_flat: Vec<f64> = d_tag.iter().flatten().copied().collect();
        let (gw, gb) = two_mut(&mut grads, ix.tag_w, ix.tag_b);
        let mut d_states = linear_backward(&cache.states, ix.tag_w.of(p), &d_tag_flat, gw, gb, n, d, NUM_TAGS);

        if let (Some(dp), Some(pooled), Some(w)) = (d_polarity, &cache.pooled, &cache.pool_weights) {
            let (gw, gb) = two_mut(&mut grads, ix.pol_w, ix.pol_b);
            let d_pooled = linear_backward(pooled, ix.pol_w.of(p), dp, gw, gb, 1, d, NUM_POLARITIES);
            for (i, &wi) in w.iter().enumerate() {
                let s = wi / n as f64;
                for j in 0..d {
                    d_states[i * d + j] += s * d_pooled[j];
                }
            }
        }

        let (gg, gb) = two_mut(&mut grads, ix.lnf_g, ix.lnf_b);
        let mut dh = layer_norm_backward(&cache.final_ln, ix.lnf_g.of(p), &d_states, gg, gb, n, d);

        for (li, lc) in ix.layers.iter().zip(&cache.layers).rev() {
            // feed-forward residual branch
            let mut dy = dh.clone();
            apply_mask(&mut dy, &lc.ffn_mask);
            let (gw, gb) = two_mut(&mut grads, li.w2, li.b2);
            let mut d_act = linear_backward(&lc.act, li.w2.of(p), &dy, gw, gb, n, ff, d);
            for (g, &x) in d_act.iter_mut().zip(&lc.pre_act) {
                *g *= gelu_grad(x);
            }
            let (gw, gb) = two_mut(&mut grads, li.w1, li.b1);
            let db = linear_backward(&lc.b, li.w1.of(p), &d_act, gw, gb, n, d, ff);
            let (gg, gb) = two_mut(&mut grads, li.ln2_g, li.ln2_b);
            let d_ln2 = layer_norm_backward(&lc.ln2, li.ln2_g.of(p), &db, gg, gb, n, d);
            for (x, g) in dh.iter_mut().zip(&d_ln2) {
                *x += g;
            }

            // attention residual branch
            let mut d_out = dh.clone();
            apply_mask(&mut d_out, &lc.attn_mask);
            let (gw, gb) = two_mut(&mut grads, li.wo, li.bo);
            let d_ctx = linear_backward(&lc.ctx, li.wo.of(p), &d_out, gw, gb, n, d, d);
            let mut dq = vec![0.0; n * d];
            let mut dk = vec![0.0; n * d];
            let mut dv = vec![0.0; n * d];
            let mut d_probs = vec![0.0; n];
            for hh in 0..heads {
                let off = hh * hd;
                for i in 0..n {
                    let probs = &lc.probs[(hh * n + i) * n..(hh * n + i + 1) * n];
                    let dci = &d_ctx[i * d + off..i * d + off + hd];
                    for j in 0..n {
                        let vj = &lc.v[j * d + off..j * d + off + hd];
                        d_probs[j] = dci.iter().zip(vj).map(|(a, b)| a * b).sum();
                        let dvj = &mut dv[j * d + off..j * d + off + hd];
                        for (g, &dc) in dvj.iter_mut().zip(dci) {
                            *g += probs[j] * dc;
                        }
                    }
                    let dot: f64 = probs.iter().zip(&d_probs).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        let ds = probs[j] * (d_probs[j] - dot) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        for t in 0..hd {
                            dq[i * d + off + t] += ds * lc.k[j * d + off + t];
                            dk[j * d + off + t] += ds * lc.q[i * d + off + t];
                        }
                    }
                }
            }
            let mut da = vec![0.0; n * d];
            for (w, b, g) in [(li.wq, li.bq, &dq), (li.wk, li.bk, &dk), (li.wv, li.bv, &dv)] {
                let (gw, gb) = two_mut(&mut grads, w, b);
                let part = linear_backward(&lc.a, w.of(p), g, gw, gb, n, d, d);
                for (x, y) in da.iter_mut().zip(&part) {
                    *x += y;
                }
            }
            let (gg, gb) = two_mut(&mut grads, li.ln1_g, li.ln1_b);
            let d_ln1 = layer_norm_backward(&lc.ln1, li.ln1_g.of(p), &da, gg, gb, n, d);
            for (x, g) in dh.iter_mut().zip(&d_ln1) {
                *x += g;
            }
        }

        apply_mask(&mut dh, &cache.embed_mask);
        let (g_tok, g_pos) = two_mut(&mut grads, ix.tok, ix.pos);
        for (i, &id) in cache.ids.iter().enumerate() {
            for j in 0..d {
                g_tok[id * d + j] += dh[i * d + j];
                g_pos[i * d + j] += dh[i * d + j];
            }
        }
        grads
    }
}
