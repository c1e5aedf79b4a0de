//! Text encoders producing the dense feature representation consumed by the
//! topic models, with optional token-level attention exposure.
//!
//! Three kinds are provided: a one-hidden-layer network over normalized
//! bag-of-words counts, an averaged token-embedding encoder (uniform or
//! learned attention), and an adapter that looks up precomputed contextual
//! embeddings by document id.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Linear;
use crate::preprocess::{BowVector, TokenSeq, Vocabulary};

/// Default feature dimension, matching the 500-unit feed-forward head used
/// for the transformer baselines.
pub const DEFAULT_D_H: usize = 500;

/// Dense document representation, optionally with per-token attention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedText {
    pub h: Vec<f64>,
    /// (token, weight) pairs covering the whole token sequence; weights are
    /// non-negative and sum to 1 when present.
    pub attention: Option<Vec<(String, f64)>>,
}

impl EncodedText {
    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

/// Which encoder to build and its size parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderSpec {
    /// One hidden tanh layer over L1-normalized bag-of-words counts.
    BowMlp { d_h: usize },
    /// Mean of learned token embeddings through tanh; with
    /// `learned_attention` the mean is weighted by a softmax over scores
    /// from a single scoring vector.
    EmbedAvg { d_h: usize, learned_attention: bool },
    /// Precomputed embeddings looked up by document id.
    External { path: String },
}

impl EncoderSpec {
    pub fn bow_mlp() -> EncoderSpec {
        EncoderSpec::BowMlp { d_h: DEFAULT_D_H }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EncoderSpec::BowMlp { .. } => "bow_mlp",
            EncoderSpec::EmbedAvg { .. } => "embed_avg",
            EncoderSpec::External { .. } => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EncoderSpec::BowMlp { d_h } | EncoderSpec::EmbedAvg { d_h, .. } => {
                if *d_h == 0 {
                    return Err(Error::InvalidConfig("encoder d_h must be >= 1".into()));
                }
            }
            EncoderSpec::External { .. } => {}
        }
        Ok(())
    }
}

impl Default for EncoderSpec {
    fn default() -> Self {
        EncoderSpec::bow_mlp()
    }
}

/// The per-document inputs an encoder may consume. `token_ids` carries the
/// vocabulary index for every token (None for out-of-vocabulary ones) and
/// stays parallel to `tokens`.
#[derive(Debug, Clone, Copy)]
pub struct EncoderInput<'a> {
    pub doc_id: &'a str,
    pub tokens: &'a TokenSeq,
    pub token_ids: &'a [Option<usize>],
    pub bow: &'a BowVector,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BowMlpEncoder {
    pub proj: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EmbedAvgEncoder {
    /// One row per vocabulary entry, [V, d_h].
    pub embeddings: Array2<f64>,
    /// Scoring vector for learned attention; None means uniform weights.
    pub score: Option<Array1<f64>>,
}

impl EmbedAvgEncoder {
    /// Attention weights over the in-vocabulary token positions and the
    /// pooled embedding. Weight vector is parallel to the full token list,
    /// with zeros at out-of-vocabulary positions.
    fn pool(&self, token_ids: &[Option<usize>]) -> (Array1<f64>, Vec<f64>) {
        let d_h = self.embeddings.ncols();
        let in_vocab: Vec<(usize, usize)> = token_ids
            .iter()
            .enumerate()
            .filter_map(|(pos, id)| id.map(|idx| (pos, idx)))
            .collect();
        let mut weights = vec![0.0; token_ids.len()];
        let mut pooled = Array1::zeros(d_h);
        if in_vocab.is_empty() {
            return (pooled, weights);
        }
        let attn: Vec<f64> = match &self.score {
            Some(score) => {
                let scores: Vec<f64> = in_vocab
                    .iter()
                    .map(|(_, idx)| score.dot(&self.embeddings.row(*idx)))
                    .collect();
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let sum: f64 = exp.iter().sum();
                exp.into_iter().map(|e| e / sum).collect()
            }
            None => vec![1.0 / in_vocab.len() as f64; in_vocab.len()],
        };
        for ((pos, idx), a) in in_vocab.iter().zip(attn.iter()) {
            weights[*pos] = *a;
            pooled.scaled_add(*a, &self.embeddings.row(*idx));
        }
        (pooled, weights)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEncoder {
    pub(crate) vectors: HashMap<String, Vec<f64>>,
    pub(crate) d_h: usize,
}

impl ExternalEncoder {
    pub fn new(vectors: HashMap<String, Vec<f64>>, d_h: usize) -> ExternalEncoder {
        ExternalEncoder { vectors, d_h }
    }

    pub fn dim(&self) -> usize {
        self.d_h
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.vectors.keys().map(|s| s.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn lookup(&self, id: &str) -> Result<&[f64]> {
        self.vectors
            .get(id)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingEmbedding { id: id.to_string() })
    }
}

/// A (possibly trainable) text encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEncoder {
    pub(crate) state: EncoderState,
    d_h: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum EncoderState {
    BowMlp(BowMlpEncoder),
    EmbedAvg(EmbedAvgEncoder),
    External(ExternalEncoder),
}

/// Gradients for the trainable encoder kinds.
#[derive(Debug, Clone)]
pub(crate) enum EncoderGrads {
    BowMlp(Linear),
    EmbedAvg {
        embeddings: Array2<f64>,
        score: Option<Array1<f64>>,
    },
    None,
}

impl EncoderGrads {
    pub(crate) fn flat(&self) -> Vec<&[f64]> {
        match self {
            EncoderGrads::BowMlp(grad) => vec![
                grad.w.as_slice().expect("standard layout"),
                grad.b.as_slice().expect("standard layout"),
            ],
            EncoderGrads::EmbedAvg { embeddings, score } => {
                let mut out = vec![embeddings.as_slice().expect("standard layout")];
                if let Some(score) = score {
                    out.push(score.as_slice().expect("standard layout"));
                }
                out
            }
            EncoderGrads::None => Vec::new(),
        }
    }
}

/// Cached per-batch activations for the backward pass.
pub(crate) struct EncoderForward {
    /// [B, d_h] encoded batch.
    pub h: Array2<f64>,
    cache: ForwardCache,
}

enum ForwardCache {
    BowMlp {
        x_norm: Array2<f64>,
    },
    EmbedAvg {
        /// Per document: in-vocabulary embedding rows and their weights.
        token_ids: Vec<Vec<usize>>,
        weights: Vec<Vec<f64>>,
    },
    Fixed,
}

impl TextEncoder {
    /// Build a fresh encoder. Trainable kinds are initialized from the seeded
    /// generator and sized to the vocabulary; the external kind is loaded
    /// from its embeddings file.
    pub fn build(
        spec: &EncoderSpec,
        vocab: &Vocabulary,
        rng: &mut ChaCha8Rng,
    ) -> Result<TextEncoder> {
        spec.validate()?;
        match spec {
            EncoderSpec::BowMlp { d_h } => Ok(TextEncoder {
                state: EncoderState::BowMlp(BowMlpEncoder {
                    proj: Linear::init(vocab.len(), *d_h, rng),
                }),
                d_h: *d_h,
            }),
            EncoderSpec::EmbedAvg {
                d_h,
                learned_attention,
            } => {
                let scale = 1.0 / (*d_h as f64).sqrt();
                let mut embeddings = Array2::zeros((vocab.len(), *d_h));
                for v in embeddings.iter_mut() {
                    let n: f64 = rng.sample(StandardNormal);
                    *v = n * scale;
                }
                let score = if *learned_attention {
                    let mut s = Array1::zeros(*d_h);
                    for v in s.iter_mut() {
                        let n: f64 = rng.sample(StandardNormal);
                        *v = n * scale;
                    }
                    Some(s)
                } else {
                    None
                };
                Ok(TextEncoder {
                    state: EncoderState::EmbedAvg(EmbedAvgEncoder { embeddings, score }),
                    d_h: *d_h,
                })
            }
            EncoderSpec::External { path } => {
                let external = load_external_embeddings(Path::new(path))?;
                Ok(TextEncoder::from_external(external))
            }
        }
    }

    pub fn from_external(external: ExternalEncoder) -> TextEncoder {
        let d_h = external.d_h;
        TextEncoder {
            state: EncoderState::External(external),
            d_h,
        }
    }

    pub fn d_h(&self) -> usize {
        self.d_h
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.state {
            EncoderState::BowMlp(_) => "bow_mlp",
            EncoderState::EmbedAvg(_) => "embed_avg",
            EncoderState::External(_) => "external",
        }
    }

    pub fn is_trainable(&self) -> bool {
        !matches!(self.state, EncoderState::External(_))
    }

    /// Encode one document. Deterministic for fixed parameters.
    pub fn encode(&self, input: &EncoderInput<'_>) -> Result<EncodedText> {
        match &self.state {
            EncoderState::BowMlp(enc) => {
                let x = normalized_bow(input.bow, enc.proj.in_dim())?;
                let h = enc.proj.w.dot(&x) + &enc.proj.b;
                Ok(EncodedText {
                    h: h.mapv(f64::tanh).to_vec(),
                    attention: None,
                })
            }
            EncoderState::EmbedAvg(enc) => {
                check_parallel(input)?;
                let (pooled, weights) = enc.pool(input.token_ids);
                let any = weights.iter().any(|w| *w > 0.0);
                let attention = any.then(|| {
                    input
                        .tokens
                        .tokens()
                        .iter()
                        .zip(weights.iter())
                        .map(|(t, w)| (t.clone(), *w))
                        .collect()
                });
                Ok(EncodedText {
                    h: pooled.mapv(f64::tanh).to_vec(),
                    attention,
                })
            }
            EncoderState::External(enc) => Ok(EncodedText {
                h: enc.lookup(input.doc_id)?.to_vec(),
                attention: None,
            }),
        }
    }

    /// Encode a batch for training, keeping the activations the backward
    /// pass needs.
    pub(crate) fn forward_batch(&self, inputs: &[EncoderInput<'_>]) -> Result<EncoderForward> {
        let b = inputs.len();
        match &self.state {
            EncoderState::BowMlp(enc) => {
                let v = enc.proj.in_dim();
                let mut x_norm = Array2::zeros((b, v));
                for (i, input) in inputs.iter().enumerate() {
                    let total = input.bow.total() as f64;
                    if total > 0.0 {
                        for (idx, count) in &input.bow.counts {
                            if *idx >= v {
                                return Err(dim_error("bow_mlp input", v, *idx + 1));
                            }
                            x_norm[[i, *idx]] = *count as f64 / total;
                        }
                    }
                }
                let h = enc.proj.forward(&x_norm).mapv(f64::tanh);
                Ok(EncoderForward {
                    h,
                    cache: ForwardCache::BowMlp { x_norm },
                })
            }
            EncoderState::EmbedAvg(enc) => {
                let d_h = enc.embeddings.ncols();
                let mut h = Array2::zeros((b, d_h));
                let mut all_ids = Vec::with_capacity(b);
                let mut all_weights = Vec::with_capacity(b);
                for (i, input) in inputs.iter().enumerate() {
                    check_parallel(input)?;
                    let (pooled, weights) = enc.pool(input.token_ids);
                    h.row_mut(i).assign(&pooled.mapv(f64::tanh));
                    let mut ids = Vec::new();
                    let mut kept = Vec::new();
                    for (pos, id) in input.token_ids.iter().enumerate() {
                        if let Some(idx) = id {
                            ids.push(*idx);
                            kept.push(weights[pos]);
                        }
                    }
                    all_ids.push(ids);
                    all_weights.push(kept);
                }
                Ok(EncoderForward {
                    h,
                    cache: ForwardCache::EmbedAvg {
                        token_ids: all_ids,
                        weights: all_weights,
                    },
                })
            }
            EncoderState::External(enc) => {
                let mut h = Array2::zeros((b, enc.d_h));
                for (i, input) in inputs.iter().enumerate() {
                    let vec = enc.lookup(input.doc_id)?;
                    for (j, v) in vec.iter().enumerate() {
                        h[[i, j]] = *v;
                    }
                }
                Ok(EncoderForward {
                    h,
                    cache: ForwardCache::Fixed,
                })
            }
        }
    }

    /// Backpropagate the gradient w.r.t. the encoded batch into parameter
    /// gradients.
    pub(crate) fn backward_batch(
        &self,
        forward: &EncoderForward,
        g_h: &Array2<f64>,
    ) -> EncoderGrads {
        match (&self.state, &forward.cache) {
            (EncoderState::BowMlp(enc), ForwardCache::BowMlp { x_norm }) => {
                // h = tanh(a); dL/da = dL/dh * (1 - h^2)
                let g_a = g_h * &forward.h.mapv(|v| 1.0 - v * v);
                let mut grad = enc.proj.zeros_like();
                enc.proj.backward(x_norm, &g_a, &mut grad);
                EncoderGrads::BowMlp(grad)
            }
            (EncoderState::EmbedAvg(enc), ForwardCache::EmbedAvg { token_ids, weights }) => {
                let g_pooled = g_h * &forward.h.mapv(|v| 1.0 - v * v);
                let mut g_emb = Array2::zeros(enc.embeddings.raw_dim());
                let mut g_score = enc.score.as_ref().map(|s| Array1::zeros(s.raw_dim()));
                for (i, (ids, w)) in token_ids.iter().zip(weights.iter()).enumerate() {
                    if ids.is_empty() {
                        continue;
                    }
                    let gp = g_pooled.row(i);
                    // pooled = sum_t w_t * e_t: direct embedding gradient.
                    for (t, idx) in ids.iter().enumerate() {
                        g_emb.row_mut(*idx).scaled_add(w[t], &gp);
                    }
                    if let (Some(score), Some(g_score)) = (&enc.score, g_score.as_mut()) {
                        // Through the attention weights: dL/dw_t = e_t . gp,
                        // softmax jacobian to scores s_t = score . e_t.
                        let g_w: Vec<f64> = ids
                            .iter()
                            .map(|idx| enc.embeddings.row(*idx).dot(&gp))
                            .collect();
                        let dot: f64 = g_w.iter().zip(w.iter()).map(|(g, w)| g * w).sum();
                        for (t, idx) in ids.iter().enumerate() {
                            let g_s = w[t] * (g_w[t] - dot);
                            g_emb.row_mut(*idx).scaled_add(g_s, &score.view());
                            g_score.scaled_add(g_s, &enc.embeddings.row(*idx));
                        }
                    }
                }
                EncoderGrads::EmbedAvg {
                    embeddings: g_emb,
                    score: g_score,
                }
            }
            (EncoderState::External(_), _) => EncoderGrads::None,
            _ => unreachable!("forward cache kind matches encoder kind"),
        }
    }

    /// Flat views over trainable parameters, fixed order, paired with
    /// [`EncoderGrads::flat`].
    pub(crate) fn flat_params_mut(&mut self) -> Vec<&mut [f64]> {
        match &mut self.state {
            EncoderState::BowMlp(enc) => vec![
                enc.proj.w.as_slice_mut().expect("standard layout"),
                enc.proj.b.as_slice_mut().expect("standard layout"),
            ],
            EncoderState::EmbedAvg(enc) => {
                let mut out = vec![enc.embeddings.as_slice_mut().expect("standard layout")];
                if let Some(score) = &mut enc.score {
                    out.push(score.as_slice_mut().expect("standard layout"));
                }
                out
            }
            EncoderState::External(_) => Vec::new(),
        }
    }
}

fn check_parallel(input: &EncoderInput<'_>) -> Result<()> {
    if input.token_ids.len() != input.tokens.len() {
        return Err(dim_error(
            "token id list",
            input.tokens.len(),
            input.token_ids.len(),
        ));
    }
    Ok(())
}

fn dim_error(context: &str, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch {
        context: context.to_string(),
        expected,
        got,
    }
}

fn normalized_bow(bow: &BowVector, v: usize) -> Result<Array1<f64>> {
    let mut x = Array1::zeros(v);
    let total = bow.total() as f64;
    if total > 0.0 {
        for (idx, count) in &bow.counts {
            if *idx >= v {
                return Err(dim_error("bag-of-words input", v, *idx + 1));
            }
            x[*idx] = *count as f64 / total;
        }
    }
    Ok(x)
}

/// Resolve each token of a sequence to its vocabulary index.
pub fn resolve_token_ids(tokens: &TokenSeq, vocab: &Vocabulary) -> Vec<Option<usize>> {
    tokens
        .tokens()
        .iter()
        .map(|t| vocab.index_of(t))
        .collect()
}

/// Load precomputed embeddings: a header line `id dim`, then one
/// whitespace-separated row per document: `id v1 v2 ... vD`.
pub fn load_external_embeddings(path: &Path) -> Result<ExternalEncoder> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty embeddings file".into(),
    })?;
    if !header.trim_start().starts_with("id") {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header starting with \"id\", found {header:?}"),
        });
    }

    let mut vectors = HashMap::new();
    let mut d_h: Option<usize> = None;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id = parts.next().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "missing id".into(),
        })?;
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("bad value {p:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "row has no embedding values".into(),
            });
        }
        match d_h {
            None => d_h = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(dim_error("external embedding row", d, values.len()));
            }
            _ => {}
        }
        vectors.insert(id.to_string(), values);
    }
    let d_h = d_h.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "embeddings file has no rows".into(),
    })?;
    Ok(ExternalEncoder { vectors, d_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{to_bow, TokenSeq};
    use rand::SeedableRng;
    use std::io::Write as _;

    fn vocab3() -> Vocabulary {
        Vocabulary::from_tokens(vec!["alpha".into(), "beta".into(), "gamma".into()]).unwrap()
    }

    fn make_input<'a>(
        tokens: &'a TokenSeq,
        token_ids: &'a [Option<usize>],
        bow: &'a BowVector,
    ) -> EncoderInput<'a> {
        EncoderInput {
            doc_id: "d",
            tokens,
            token_ids,
            bow,
        }
    }

    #[test]
    fn bow_mlp_zero_input_gives_tanh_of_bias() {
        let vocab = vocab3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut enc = TextEncoder::build(&EncoderSpec::BowMlp { d_h: 4 }, &vocab, &mut rng).unwrap();
        // Zero weights and bias -> h must be exactly tanh(0) = 0.
        if let EncoderState::BowMlp(e) = &mut enc.state {
            e.proj.w.fill(0.0);
            e.proj.b.fill(0.0);
        }
        let tokens = TokenSeq::new(vec![]);
        let ids = resolve_token_ids(&tokens, &vocab);
        let bow = to_bow(&tokens, &vocab);
        let out = enc.encode(&make_input(&tokens, &ids, &bow)).unwrap();
        assert_eq!(out.h, vec![0.0; 4]);
        assert!(out.attention.is_none());
    }

    #[test]
    fn embed_avg_single_token_is_tanh_of_embedding() {
        let vocab = vocab3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = TextEncoder::build(
            &EncoderSpec::EmbedAvg {
                d_h: 5,
                learned_attention: false,
            },
            &vocab,
            &mut rng,
        )
        .unwrap();
        let tokens = TokenSeq::new(vec!["beta".into()]);
        let ids = resolve_token_ids(&tokens, &vocab);
        let bow = to_bow(&tokens, &vocab);
        let out = enc.encode(&make_input(&tokens, &ids, &bow)).unwrap();
        if let EncoderState::EmbedAvg(e) = &enc.state {
            let expected: Vec<f64> = e.embeddings.row(1).mapv(f64::tanh).to_vec();
            assert_eq!(out.h, expected);
        }
        let attn = out.attention.unwrap();
        assert_eq!(attn.len(), 1);
        assert!((attn[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_avg_attention_normalized_and_full_length() {
        let vocab = vocab3();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let enc = TextEncoder::build(
            &EncoderSpec::EmbedAvg {
                d_h: 6,
                learned_attention: true,
            },
            &vocab,
            &mut rng,
        )
        .unwrap();
        let tokens = TokenSeq::new(vec![
            "alpha".into(),
            "unknownword".into(),
            "gamma".into(),
            "beta".into(),
        ]);
        let ids = resolve_token_ids(&tokens, &vocab);
        let bow = to_bow(&tokens, &vocab);
        let out = enc.encode(&make_input(&tokens, &ids, &bow)).unwrap();
        let attn = out.attention.unwrap();
        assert_eq!(attn.len(), tokens.len());
        let sum: f64 = attn.iter().map(|(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(attn.iter().all(|(_, w)| *w >= 0.0));
        assert_eq!(attn[1].1, 0.0, "out-of-vocabulary token gets zero weight");
    }

    #[test]
    fn embed_avg_uniform_is_permutation_invariant() {
        let vocab = vocab3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = TextEncoder::build(
            &EncoderSpec::EmbedAvg {
                d_h: 4,
                learned_attention: false,
            },
            &vocab,
            &mut rng,
        )
        .unwrap();
        let a = TokenSeq::new(vec!["alpha".into(), "beta".into(), "gamma".into()]);
        let b = TokenSeq::new(vec!["gamma".into(), "alpha".into(), "beta".into()]);
        let ids_a = resolve_token_ids(&a, &vocab);
        let ids_b = resolve_token_ids(&b, &vocab);
        let bow_a = to_bow(&a, &vocab);
        let bow_b = to_bow(&b, &vocab);
        let ha = enc.encode(&make_input(&a, &ids_a, &bow_a)).unwrap().h;
        let hb = enc.encode(&make_input(&b, &ids_b, &bow_b)).unwrap().h;
        for (x, y) in ha.iter().zip(hb.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn external_lookup_returns_exact_vector() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "id dim").unwrap();
        writeln!(file, "d1 0.5 -1.0 2.0 0.0").unwrap();
        writeln!(file, "d2 1.0 1.0 1.0 1.0").unwrap();
        let external = load_external_embeddings(file.path()).unwrap();
        assert_eq!(external.dim(), 4);
        let enc = TextEncoder::from_external(external);
        assert_eq!(enc.d_h(), 4);
        let tokens = TokenSeq::new(vec![]);
        let ids: Vec<Option<usize>> = vec![];
        let bow = BowVector {
            counts: Default::default(),
            vocab_size: 0,
        };
        let input = EncoderInput {
            doc_id: "d1",
            tokens: &tokens,
            token_ids: &ids,
            bow: &bow,
        };
        let out = enc.encode(&input).unwrap();
        assert_eq!(out.h, vec![0.5, -1.0, 2.0, 0.0]);

        let missing = EncoderInput {
            doc_id: "nope",
            ..input
        };
        assert!(matches!(
            enc.encode(&missing),
            Err(Error::MissingEmbedding { .. })
        ));
    }

    #[test]
    fn external_rejects_mixed_dimensions() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "id dim").unwrap();
        writeln!(file, "a 1 2 3 4 5 6 7 8").unwrap();
        writeln!(file, "b 1 2 3 4 5 6 7 8 9").unwrap();
        assert!(matches!(
            load_external_embeddings(file.path()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn external_rejects_empty_file() {
        let file = tempfile::NamedTempFile::new().unwrap();
        assert!(load_external_embeddings(file.path()).is_err());
        let mut header_only = tempfile::NamedTempFile::new().unwrap();
        writeln!(header_only, "id dim").unwrap();
        assert!(load_external_embeddings(header_only.path()).is_err());
    }

    #[test]
    fn encode_dim_always_matches_spec() {
        let vocab = vocab3();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for spec in [
            EncoderSpec::BowMlp { d_h: 11 },
            EncoderSpec::EmbedAvg {
                d_h: 11,
                learned_attention: true,
            },
        ] {
            let enc = TextEncoder::build(&spec, &vocab, &mut rng).unwrap();
            let tokens = TokenSeq::new(vec!["alpha".into(), "beta".into()]);
            let ids = resolve_token_ids(&tokens, &vocab);
            let bow = to_bow(&tokens, &vocab);
            let out = enc.encode(&make_input(&tokens, &ids, &bow)).unwrap();
            assert_eq!(out.dim(), 11);
        }
    }
}
