//! Parallel corpora: loading, preprocessing and reproducible subsampling.
//!
//! Text is expected to be pre-tokenized: one sentence per line, tokens
//! separated by whitespace. Every pair keeps the 0-based line index it had in
//! the original files, so any downstream artifact can be resolved against the
//! untouched bitext.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Original line index of a sentence pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub u32);

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for PairId {
    fn from(v: u32) -> Self {
        PairId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub id: PairId,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl SentencePair {
    pub fn new(id: impl Into<PairId>, source: Vec<String>, target: Vec<String>) -> Self {
        Self {
            id: id.into(),
            source,
            target,
        }
    }

    /// Builds a pair from whitespace-tokenized strings.
    pub fn from_text(id: impl Into<PairId>, source: &str, target: &str) -> Self {
        Self::new(id, tokenize(source), tokenize(target))
    }

    pub fn source_len(&self) -> usize {
        self.source.len()
    }

    pub fn target_len(&self) -> usize {
        self.target.len()
    }
}

/// An ordered, immutable collection of sentence pairs (ascending by id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    pairs: Vec<SentencePair>,
    total_source_tokens: u64,
    total_target_tokens: u64,
}

impl Corpus {
    /// Pairs must have strictly ascending ids.
    pub fn new(name: impl Into<String>, pairs: Vec<SentencePair>) -> Result<Self> {
        if let Some(w) = pairs.windows(2).find(|w| w[0].id >= w[1].id) {
            return Err(Error::Validation(format!(
                "pair ids must be strictly ascending, found {} before {}",
                w[0].id, w[1].id
            )));
        }
        Ok(Self::from_sorted(name.into(), pairs))
    }

    fn from_sorted(name: String, pairs: Vec<SentencePair>) -> Self {
        let total_source_tokens = pairs.iter().map(|p| p.source_len() as u64).sum();
        let total_target_tokens = pairs.iter().map(|p| p.target_len() as u64).sum();
        Self {
            name,
            pairs,
            total_source_tokens,
            total_target_tokens,
        }
    }

    /// Builds a corpus from parallel line slices, assigning ids 0..n.
    pub fn from_lines(name: impl Into<String>, source: &[&str], target: &[&str]) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::Alignment {
                source_lines: source.len(),
                target_lines: target.len(),
            });
        }
        let pairs = source
            .iter()
            .zip(target)
            .enumerate()
            .map(|(i, (s, t))| SentencePair::from_text(i as u32, s, t))
            .collect();
        Ok(Self::from_sorted(name.into(), pairs))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_source_tokens(&self) -> u64 {
        self.total_source_tokens
    }

    pub fn total_target_tokens(&self) -> u64 {
        self.total_target_tokens
    }

    pub fn ids(&self) -> impl Iterator<Item = PairId> + '_ {
        self.pairs.iter().map(|p| p.id)
    }

    pub fn get(&self, id: PairId) -> Option<&SentencePair> {
        self.pairs
            .binary_search_by_key(&id, |p| p.id)
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn source_side(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.pairs.iter().map(|p| p.source.as_slice())
    }

    pub fn target_side(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.pairs.iter().map(|p| p.target.as_slice())
    }

    /// Sub-corpus made of the given ids. Unknown ids are a consistency error.
    pub fn subset(&self, name: impl Into<String>, ids: &[PairId]) -> Result<Corpus> {
        let mut sorted = ids.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let pairs = sorted
            .iter()
            .map(|&id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::Consistency(format!("pair id {id} not found in corpus '{}'", self.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus::from_sorted(name.into(), pairs))
    }

    /// Writes the corpus as two parallel text files plus an id sidecar
    /// (one original id per line, ascending).
    pub fn write(&self, source_path: &Path, target_path: &Path, ids_path: &Path) -> Result<()> {
        write_lines(source_path, self.pairs.iter().map(|p| p.source.join(" ")))?;
        write_lines(target_path, self.pairs.iter().map(|p| p.target.join(" ")))?;
        write_lines(ids_path, self.pairs.iter().map(|p| p.id.to_string()))
    }
}

pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: format!("invalid UTF-8 at byte {}", e.utf8_error().valid_up_to()),
    })
}

pub(crate) fn text_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

pub(crate) fn write_lines<I, S>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for line in lines {
        out.write_all(line.as_ref().as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads a bitext; pair `i` is line `i` of both files.
pub fn load_parallel(source_path: &Path, target_path: &Path) -> Result<Corpus> {
    let source = read_text(source_path)?;
    let target = read_text(target_path)?;
    let name = source_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::from_lines(name, &text_lines(&source), &text_lines(&target))
}

/// Reads a monolingual token-sequence file (e.g. a test set side).
pub fn load_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = read_text(path)?;
    Ok(text.lines().map(tokenize).collect())
}

/// Reads an id-list file: one pair id per line, `#` lines ignored.
pub fn read_id_list(path: &Path) -> Result<Vec<PairId>> {
    let text = read_text(path)?;
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = line.parse::<u32>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("bad pair id '{line}': {e}"),
        })?;
        ids.push(PairId(id));
    }
    Ok(ids)
}

/// Lowercases (optionally) and drops pairs where either side is empty or
/// longer than `max_len` tokens. Retained pairs keep their ids.
pub fn preprocess(corpus: &Corpus, max_len: usize, lowercase: bool) -> Corpus {
    let norm = |toks: &[String]| -> Vec<String> {
        if lowercase {
            toks.iter().map(|t| t.to_lowercase()).collect()
        } else {
            toks.to_vec()
        }
    };
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| (1..=max_len).contains(&p.source_len()) && (1..=max_len).contains(&p.target_len()))
        .map(|p| SentencePair::new(p.id, norm(&p.source), norm(&p.target)))
        .collect();
    Corpus::from_sorted(corpus.name.clone(), pairs)
}

/// Uniform random subset of whole pairs whose source tokens stay within
/// `target_size_tokens`: seeded shuffle, then the longest fitting prefix.
/// A budget at or above the corpus size returns the whole corpus.
pub fn sample_general_subset(corpus: &Corpus, target_size_tokens: u64, seed: u64) -> Corpus {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut used = 0u64;
    let mut keep = Vec::new();
    for idx in order {
        let len = corpus.pairs[idx].source_len() as u64;
        if used + len > target_size_tokens {
            break;
        }
        used += len;
        keep.push(idx);
    }
    keep.sort_unstable();
    let pairs = keep.into_iter().map(|i| corpus.pairs[i].clone()).collect();
    Corpus::from_sorted(format!("{}.sample", corpus.name), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn write(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, content).unwrap();
        p
    }

    fn synthetic(n: usize) -> Corpus {
        let pairs = (0..n)
            .map(|i| {
                let len = 5 + (i * 7919) % 26;
                let src = (0..len).map(|j| format!("w{}", (i + j) % 97)).collect();
                let tgt = (0..len).map(|j| format!("v{}", (i + j) % 89)).collect();
                SentencePair::new(i as u32, src, tgt)
            })
            .collect();
        Corpus::new("synthetic", pairs).unwrap()
    }

    #[test]
    fn load_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "a.src", "");
        let t = write(dir.path(), "a.tgt", "");
        let c = load_parallel(&s, &t).unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(c.total_source_tokens(), 0);
        assert_eq!(c.total_target_tokens(), 0);
    }

    #[test]
    fn load_two_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "a.src", "a b\nc");
        let t = write(dir.path(), "a.tgt", "x\ny z");
        let c = load_parallel(&s, &t).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.pairs()[0], SentencePair::from_text(0, "a b", "x"));
        assert_eq!(c.pairs()[1], SentencePair::from_text(1, "c", "y z"));
        assert_eq!(c.total_source_tokens(), 3);
        assert_eq!(c.total_target_tokens(), 3);
    }

    #[test]
    fn load_misaligned() {
        let dir = tempfile::tempdir().unwrap();
        let s = write(dir.path(), "a.src", "a\nb\nc\n");
        let t = write(dir.path(), "a.tgt", "x\ny\n");
        let err = load_parallel(&s, &t).unwrap_err();
        assert!(matches!(
            err,
            Error::Alignment {
                source_lines: 3,
                target_lines: 2
            }
        ));
        assert!(err.to_string().contains('3') && err.to_string().contains('2'));
    }

    #[test]
    fn load_invalid_utf8() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("bad.src");
        fs::write(&s, [0x61, 0xff, 0x0a]).unwrap();
        let t = write(dir.path(), "ok.tgt", "x\n");
        assert!(matches!(load_parallel(&s, &t), Err(Error::Input { .. })));
        let missing = dir.path().join("missing.src");
        assert!(matches!(load_parallel(&missing, &t), Err(Error::Io { .. })));
    }

    #[test]
    fn preprocess_length_filter() {
        let long: Vec<String> = (0..51).map(|i| format!("t{i}")).collect();
        let ten: Vec<String> = (0..10).map(|i| format!("t{i}")).collect();
        let sixty: Vec<String> = (0..60).map(|i| format!("t{i}")).collect();
        let c = Corpus::new(
            "c",
            vec![
                SentencePair::new(0, long, vec!["x".into()]),
                SentencePair::new(1, ten.clone(), sixty),
                SentencePair::new(2, ten.clone(), ten.clone()),
            ],
        )
        .unwrap();
        let p = preprocess(&c, 50, true);
        assert_eq!(p.ids().collect::<Vec<_>>(), vec![PairId(2)]);
    }

    #[test]
    fn preprocess_lowercases_and_drops_empty() {
        let c = Corpus::from_lines("c", &["Hello WORLD", "", "ok"], &["HALLO Welt", "x", ""]).unwrap();
        let p = preprocess(&c, 50, true);
        assert_eq!(p.len(), 1);
        assert_eq!(p.pairs()[0], SentencePair::from_text(0, "hello world", "hallo welt"));
        let keep_case = preprocess(&c, 50, false);
        assert_eq!(keep_case.pairs()[0].source, vec!["Hello", "WORLD"]);
    }

    #[test]
    fn sample_full_budget_returns_everything() {
        let c = synthetic(50);
        let s = sample_general_subset(&c, c.total_source_tokens(), 3);
        assert_eq!(s.pairs(), c.pairs());
        assert!(sample_general_subset(&c, 0, 3).is_empty());
    }

    #[test]
    fn sample_is_deterministic_and_within_budget() {
        let c = synthetic(1000);
        let budget = c.total_source_tokens() / 10;
        let a = sample_general_subset(&c, budget, 1);
        let b = sample_general_subset(&c, budget, 1);
        assert_eq!(a, b);
        let frac = a.total_source_tokens() as f64 / c.total_source_tokens() as f64;
        assert!(frac > 0.09 && frac <= 0.10, "fraction {frac}");
        assert!(a.pairs().windows(2).all(|w| w[0].id < w[1].id));
    }

    #[test]
    fn sample_seeds_differ() {
        let c = synthetic(10_000);
        let budget = c.total_source_tokens() / 5;
        let a: BTreeSet<_> = sample_general_subset(&c, budget, 1).ids().collect();
        let b: BTreeSet<_> = sample_general_subset(&c, budget, 2).ids().collect();
        assert_ne!(a, b);
    }

    #[test]
    fn subset_rejects_unknown_ids() {
        let c = synthetic(5);
        assert!(c.subset("s", &[PairId(1), PairId(9)]).is_err());
        let s = c.subset("s", &[PairId(3), PairId(1)]).unwrap();
        assert_eq!(s.ids().collect::<Vec<_>>(), vec![PairId(1), PairId(3)]);
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        let sent = prop::collection::vec("[a-zA-Z]{1,3}", 0..8);
        prop::collection::vec((sent.clone(), sent), 0..30).prop_map(|rows| {
            let pairs = rows
                .into_iter()
                .enumerate()
                .map(|(i, (s, t))| SentencePair::new(i as u32, s, t))
                .collect();
            Corpus::new("arb", pairs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn preprocess_idempotent_and_order_preserving(c in arb_corpus(), max_len in 1usize..8) {
            let once = preprocess(&c, max_len, true);
            let twice = preprocess(&once, max_len, true);
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.pairs().windows(2).all(|w| w[0].id < w[1].id));
            let src: u64 = once.pairs().iter().map(|p| p.source_len() as u64).sum();
            let tgt: u64 = once.pairs().iter().map(|p| p.target_len() as u64).sum();
            prop_assert_eq!(src, once.total_source_tokens());
            prop_assert_eq!(tgt, once.total_target_tokens());
            for p in once.pairs() {
                prop_assert!(p.source_len() >= 1 && p.source_len() <= max_len);
                prop_assert!(p.target_len() >= 1 && p.target_len() <= max_len);
            }
        }
    }
}
