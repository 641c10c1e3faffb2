//! Back-off n-gram language models over a restricted vocabulary.
//!
//! A model is held in the same shape as its ARPA serialization: for every
//! listed n-gram a log10 probability and, for n-grams that serve as
//! contexts, a log10 back-off weight. Scoring only ever reads this table, so
//! a model reloaded from disk scores bit-identically to the one that wrote it.
//!
//! Sentences are scored with `order - 1` leading `<s>` symbols and a final
//! `</s>`; `</s>` is predicted, `<s>` is only ever context. Tokens outside
//! the vocabulary (and literal reserved symbols in text) score as `<unk>`.

mod arpa;
mod train;
mod vocab;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use train::train_lm;
pub use vocab::{build_vocabulary, Vocabulary, BOS, EOS, UNK};

pub(crate) const UNK_ID: u32 = 0;
pub(crate) const BOS_ID: u32 = 1;
pub(crate) const EOS_ID: u32 = 2;

/// log10 probability written for symbols that are never predicted.
pub const LOG10_ZERO: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Interpolated modified Kneser-Ney; orders whose count-of-counts leave
    /// the discounts undefined fall back to Witten-Bell.
    #[serde(rename = "kn")]
    KneserNey,
    #[serde(rename = "wb")]
    WittenBell,
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kn" => Ok(Smoothing::KneserNey),
            "wb" => Ok(Smoothing::WittenBell),
            other => Err(Error::Parameter(format!(
                "unknown smoothing '{other}' (expected kn or wb)"
            ))),
        }
    }
}

impl Smoothing {
    pub fn tag(self) -> &'static str {
        match self {
            Smoothing::KneserNey => "kn",
            Smoothing::WittenBell => "wb",
        }
    }
}

/// How one order of the model was estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum OrderEstimate {
    KneserNey { order: usize, discounts: [f64; 3] },
    WittenBell { order: usize },
}

/// Training provenance stored next to the ARPA file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmMetadata {
    pub order: usize,
    pub smoothing: Smoothing,
    pub min_count: usize,
    pub training_sentences: u64,
    pub training_token_count: u64,
    pub estimates: Vec<OrderEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

pub(crate) type Table = HashMap<Box<[u32]>, Entry>;

#[derive(Debug, Clone)]
pub struct NGramLm {
    order: usize,
    words: Vec<String>,
    index: HashMap<String, u32>,
    vocabulary: Vocabulary,
    /// `tables[k - 1]` holds the k-grams.
    tables: Vec<Table>,
    metadata: Option<LmMetadata>,
}

impl NGramLm {
    /// Assembles a model from its word list and n-gram tables. `words` must
    /// start with `<unk>`, `<s>`, `</s>` and every word must have a unigram.
    pub(crate) fn from_parts(words: Vec<String>, tables: Vec<Table>, metadata: Option<LmMetadata>) -> Result<Self> {
        let order = tables.len();
        if order == 0 {
            return Err(Error::Parameter("model order must be at least 1".into()));
        }
        if words.len() < 3 || words[0] != UNK || words[1] != BOS || words[2] != EOS {
            return Err(Error::Validation("model must contain <unk>, <s> and </s>".into()));
        }
        let index: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        if index.len() != words.len() {
            return Err(Error::Validation("duplicate unigram in model".into()));
        }
        if let Some(missing) = (0..words.len() as u32).find(|id| !tables[0].contains_key(&[*id][..])) {
            return Err(Error::Validation(format!(
                "word '{}' has no unigram entry",
                words[missing as usize]
            )));
        }
        let min_count = metadata.as_ref().map_or(1, |m| m.min_count);
        let vocabulary = Vocabulary::from_tokens(words[3..].iter().cloned(), min_count);
        Ok(Self {
            order,
            words,
            index,
            vocabulary,
            tables,
            metadata,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn metadata(&self) -> Option<&LmMetadata> {
        self.metadata.as_ref()
    }

    pub fn training_token_count(&self) -> Option<u64> {
        self.metadata.as_ref().map(|m| m.training_token_count)
    }

    /// Every symbol the model can predict: the content vocabulary plus
    /// `<unk>` and `</s>`.
    pub fn predictable_words(&self) -> impl Iterator<Item = &str> + '_ {
        self.words
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as u32 != BOS_ID)
            .map(|(_, w)| w.as_str())
    }

    /// Number of listed n-grams per order, lowest first.
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    /// Listed n-grams of one order (1-based) as words, in no particular order.
    pub fn ngrams(&self, order: usize) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.tables
            .get(order.wrapping_sub(1))
            .into_iter()
            .flat_map(|t| t.keys())
            .map(|k| k.iter().map(|&id| self.words[id as usize].as_str()).collect())
    }

    pub(crate) fn word_id(&self, token: &str) -> u32 {
        if vocab::is_reserved(token) {
            return UNK_ID;
        }
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    fn context_id(&self, token: &str) -> u32 {
        match token {
            BOS => BOS_ID,
            EOS => EOS_ID,
            t => self.word_id(t),
        }
    }

    pub(crate) fn words(&self) -> &[String] {
        &self.words
    }

    pub(crate) fn tables(&self) -> &[Table] {
        &self.tables
    }

    /// Back-off query over word ids. Only the last `order - 1` ids of
    /// `history` are consulted.
    fn log10_prob_ids(&self, history: &[u32], word: u32, key: &mut Vec<u32>) -> f64 {
        let max_ctx = history.len().min(self.order - 1);
        let mut backoff = 0.0;
        for ctx_len in (0..=max_ctx).rev() {
            let ctx = &history[history.len() - ctx_len..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[ctx_len].get(key.as_slice()) {
                return backoff + e.log10_prob;
            }
            if ctx_len > 0 {
                if let Some(bo) = self.tables[ctx_len - 1].get(ctx).and_then(|e| e.log10_backoff) {
                    backoff += bo;
                }
            }
        }
        // every word id has a unigram (checked at construction)
        unreachable!("word id {word} has no unigram")
    }

    /// Conditional probability of `word` after `context`. Context symbols may
    /// include `<s>`; unknown words map to `<unk>`.
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let history: Vec<u32> = context.iter().map(|t| self.context_id(t)).collect();
        let word = if word == EOS { EOS_ID } else { self.word_id(word) };
        10f64.powf(self.log10_prob_ids(&history, word, &mut Vec::new()))
    }

    /// Sum of log10 probabilities of the sentence's tokens and `</s>`, and
    /// the number of predicted events (tokens + 1).
    pub fn sentence_log10_prob<S: AsRef<str>>(&self, sentence: &[S]) -> (f64, usize) {
        let mut history = vec![BOS_ID; self.order - 1];
        let mut key = Vec::with_capacity(self.order);
        let mut total = 0.0;
        for tok in sentence {
            let id = self.word_id(tok.as_ref());
            total += self.log10_prob_ids(&history, id, &mut key);
            history.push(id);
        }
        total += self.log10_prob_ids(&history, EOS_ID, &mut key);
        (total, sentence.len() + 1)
    }

    /// Per-token cross-entropy in nats:
    /// `-(1 / (L + 1)) * sum ln P(w_i | history)` over the `L` tokens and `</s>`.
    pub fn cross_entropy<S: AsRef<str>>(&self, sentence: &[S]) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::Parameter("cannot score an empty sentence".into()));
        }
        let (log10, events) = self.sentence_log10_prob(sentence);
        Ok(-log10 * std::f64::consts::LN_10 / events as f64)
    }

    /// exp of the event-weighted mean cross-entropy over a corpus side.
    pub fn perplexity<'a, I>(&self, sentences: I) -> Result<f64>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        Ok(self.corpus_cross_entropy(sentences)?.exp())
    }

    /// Event-weighted mean cross-entropy (nats per predicted token).
    pub fn corpus_cross_entropy<'a, I>(&self, sentences: I) -> Result<f64>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut log10 = 0.0;
        let mut events = 0usize;
        for s in sentences {
            let (l, n) = self.sentence_log10_prob(s);
            log10 += l;
            events += n;
        }
        if events == 0 {
            return Err(Error::Parameter("cannot score an empty corpus".into()));
        }
        Ok(-log10 * std::f64::consts::LN_10 / events as f64)
    }

    pub fn to_arpa_string(&self) -> String {
        arpa::write_arpa(self)
    }

    pub fn from_arpa_str(text: &str) -> Result<Self> {
        let (words, tables) = arpa::parse_arpa(text).map_err(|(line, message)| Error::Parse {
            path: PathBuf::from("<arpa>"),
            line,
            message,
        })?;
        Self::from_parts(words, tables, None)
    }

    /// Writes `path` (ARPA) and, when training metadata is known, a
    /// `<stem>.meta.json` sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_arpa_string()).map_err(|e| Error::io(path, e))?;
        if let Some(meta) = &self.metadata {
            let side = sidecar_path(path);
            let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
            fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (words, tables) = arpa::parse_arpa(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })?;
        let side = sidecar_path(path);
        let metadata = if side.exists() {
            let raw = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            let meta: LmMetadata = serde_json::from_str(&raw).map_err(|e| Error::Parse {
                path: side.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
            Some(meta)
        } else {
            None
        };
        Self::from_parts(words, tables, metadata)
    }
}

pub fn sidecar_path(arpa: &Path) -> PathBuf {
    arpa.with_extension("meta.json")
}
