//! Bilingual cross-entropy difference scores and rankings.
//!
//! For a pair `s` with source side `s_f` and target side `s_e`:
//!
//! ```text
//! CED(s) = (H_in(s_f) - H_gen(s_f)) + (H_in(s_e) - H_gen(s_e))
//! ```
//!
//! Lower is more in-domain. Rankings sort ascending by CED with ties broken
//! by ascending pair id.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Corpus, PairId};
use crate::error::{Error, Result};
use crate::ngram_lm::NGramLm;

pub const SCORES_HEADER: &str = "pair_id\th_if\th_gf\th_ie\th_ge\tced";

/// Allowed gap between a stored CED and the one recomputed from its parts.
pub const CED_CONSISTENCY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CedRecord {
    pub pair_id: PairId,
    pub h_if: f64,
    pub h_gf: f64,
    pub h_ie: f64,
    pub h_ge: f64,
    pub ced: f64,
}

impl CedRecord {
    pub fn new(pair_id: PairId, h_if: f64, h_gf: f64, h_ie: f64, h_ge: f64) -> Self {
        Self {
            pair_id,
            h_if,
            h_gf,
            h_ie,
            h_ge,
            ced: (h_if - h_gf) + (h_ie - h_ge),
        }
    }

    pub fn recomputed_ced(&self) -> f64 {
        (self.h_if - self.h_gf) + (self.h_ie - self.h_ge)
    }
}

/// The four models used for scoring.
#[derive(Debug, Clone, Copy)]
pub struct ScoringModels<'a> {
    pub in_source: &'a NGramLm,
    pub general_source: &'a NGramLm,
    pub in_target: &'a NGramLm,
    pub general_target: &'a NGramLm,
}

/// Scores every pair of `bitext`. Work is spread over `workers` threads;
/// output is always in corpus order.
pub fn compute_ced(bitext: &Corpus, models: ScoringModels<'_>, workers: usize) -> Result<Vec<CedRecord>> {
    if bitext.is_empty() {
        return Err(Error::Parameter("cannot score an empty bitext".into()));
    }
    let score = |p: &crate::corpus::SentencePair| -> Result<CedRecord> {
        Ok(CedRecord::new(
            p.id,
            models.in_source.cross_entropy(&p.source)?,
            models.general_source.cross_entropy(&p.source)?,
            models.in_target.cross_entropy(&p.target)?,
            models.general_target.cross_entropy(&p.target)?,
        ))
    };
    if workers <= 1 {
        return bitext.pairs().iter().map(score).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| bitext.pairs().par_iter().map(score).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingOrigin {
    Relevance,
    Random,
    Imported,
}

impl fmt::Display for RankingOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankingOrigin::Relevance => "relevance",
            RankingOrigin::Random => "random",
            RankingOrigin::Imported => "imported",
        })
    }
}

impl FromStr for RankingOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relevance" => Ok(RankingOrigin::Relevance),
            "random" => Ok(RankingOrigin::Random),
            "imported" => Ok(RankingOrigin::Imported),
            other => Err(Error::Validation(format!("unknown ranking origin '{other}'"))),
        }
    }
}

/// Pair ids, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub order: Vec<PairId>,
    pub origin: RankingOrigin,
    pub seed: Option<u64>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Checks that this ranking is a permutation of the bitext's pair ids.
    pub fn validate_against(&self, bitext: &Corpus) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &id in &self.order {
            if !seen.insert(id) {
                return Err(Error::Consistency(format!("pair id {id} ranked twice")));
            }
            if bitext.get(id).is_none() {
                return Err(Error::Consistency(format!("ranked pair id {id} is not in the bitext")));
            }
        }
        if seen.len() != bitext.len() {
            return Err(Error::Consistency(format!(
                "ranking covers {} of {} pairs",
                seen.len(),
                bitext.len()
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let header = format!("# origin={} seed={}", self.origin, seed);
        crate::corpus::write_lines(
            path,
            std::iter::once(header).chain(self.order.iter().map(|id| id.to_string())),
        )
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty ranking file".into()))?;
        let mut origin = None;
        let mut seed = None;
        for field in header
            .strip_prefix('#')
            .ok_or_else(|| perr(1, "missing '# origin=... seed=...' header".into()))?
            .split_whitespace()
        {
            match field.split_once('=') {
                Some(("origin", v)) => origin = Some(v.parse().map_err(|e: Error| perr(1, e.to_string()))?),
                Some(("seed", "none")) => seed = None,
                Some(("seed", v)) => seed = Some(v.parse().map_err(|_| perr(1, format!("bad seed '{v}'")))?),
                _ => return Err(perr(1, format!("unexpected header field '{field}'"))),
            }
        }
        let origin = origin.ok_or_else(|| perr(1, "header lacks origin".into()))?;
        let mut order = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let id: u32 = line.parse().map_err(|_| perr(i + 1, format!("bad pair id '{line}'")))?;
            order.push(PairId(id));
        }
        Ok(Ranking { order, origin, seed })
    }
}

/// Ascending CED, ties by ascending pair id.
pub fn rank_bitext(records: &[CedRecord]) -> Ranking {
    rank_with_origin(records, RankingOrigin::Relevance)
}

pub fn rank_with_origin(records: &[CedRecord], origin: RankingOrigin) -> Ranking {
    let mut sorted: Vec<&CedRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.ced.total_cmp(&b.ced).then(a.pair_id.cmp(&b.pair_id)));
    Ranking {
        order: sorted.into_iter().map(|r| r.pair_id).collect(),
        origin,
        seed: None,
    }
}

/// Seeded uniform permutation of the bitext's pair ids.
pub fn random_ranking(bitext: &Corpus, seed: u64) -> Ranking {
    let mut order: Vec<PairId> = bitext.ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    Ranking {
        order,
        origin: RankingOrigin::Random,
        seed: Some(seed),
    }
}

pub fn scores_to_tsv(records: &[CedRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(SCORES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.pair_id, r.h_if, r.h_gf, r.h_ie, r.h_ge, r.ced
        ));
    }
    out
}

pub fn write_scores(path: &Path, records: &[CedRecord]) -> Result<()> {
    fs::write(path, scores_to_tsv(records)).map_err(|e| Error::io(path, e))
}

/// Reads a scores TSV without checking it against any bitext.
pub fn read_scores(path: &Path) -> Result<Vec<CedRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&text, path)
}

fn parse_scores(text: &str, path: &Path) -> Result<Vec<CedRecord>> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SCORES_HEADER => {}
        Some((_, h)) => return Err(perr(1, format!("unexpected header '{h}'"))),
        None => return Err(perr(1, "empty scores file".into())),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(perr(no, format!("expected 6 fields, found {}", fields.len())));
        }
        let pair_id: u32 = fields[0]
            .trim()
            .parse()
            .map_err(|_| perr(no, format!("bad pair_id '{}'", fields[0])))?;
        let mut nums = [0f64; 5];
        for (slot, (name, raw)) in nums
            .iter_mut()
            .zip(["h_if", "h_gf", "h_ie", "h_ge", "ced"].iter().zip(&fields[1..]))
        {
            *slot = raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(no, format!("non-numeric {name} '{raw}'")))?;
        }
        records.push(CedRecord {
            pair_id: PairId(pair_id),
            h_if: nums[0],
            h_gf: nums[1],
            h_ie: nums[2],
            h_ge: nums[3],
            ced: nums[4],
        });
    }
    Ok(records)
}

/// Reads externally produced scores (e.g. from neural models) and checks
/// them against the bitext. Records come back in corpus order.
pub fn import_external_scores(path: &Path, bitext: &Corpus) -> Result<Vec<CedRecord>> {
    let records = read_scores(path)?;
    validate_scores(records, bitext)
}

pub fn validate_scores(records: Vec<CedRecord>, bitext: &Corpus) -> Result<Vec<CedRecord>> {
    let mut by_id: HashMap<PairId, CedRecord> = HashMap::with_capacity(records.len());
    let mut duplicates = BTreeSet::new();
    let mut extra = BTreeSet::new();
    let mut inconsistent = Vec::new();
    for r in records {
        if bitext.get(r.pair_id).is_none() {
            extra.insert(r.pair_id);
        }
        if (r.ced - r.recomputed_ced()).abs() > CED_CONSISTENCY_TOLERANCE {
            inconsistent.push(r.pair_id);
        }
        if by_id.insert(r.pair_id, r).is_some() {
            duplicates.insert(r.pair_id);
        }
    }
    let missing: Vec<PairId> = bitext.ids().filter(|id| !by_id.contains_key(id)).collect();

    let mut problems = Vec::new();
    let list = |ids: &mut dyn Iterator<Item = &PairId>| ids.map(ToString::to_string).collect::<Vec<_>>().join(", ");
    if !missing.is_empty() {
        problems.push(format!("missing pair ids: {}", list(&mut missing.iter())));
    }
    if !extra.is_empty() {
        problems.push(format!("unknown pair ids: {}", list(&mut extra.iter())));
    }
    if !duplicates.is_empty() {
        problems.push(format!("duplicate pair ids: {}", list(&mut duplicates.iter())));
    }
    if !inconsistent.is_empty() {
        problems.push(format!(
            "ced inconsistent with entropies for pair ids: {}",
            list(&mut inconsistent.iter())
        ));
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems.join("; ")));
    }
    Ok(bitext.ids().map(|id| by_id[&id]).collect())
}
