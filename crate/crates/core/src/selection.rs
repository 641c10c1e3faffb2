//! Per-epoch training subsets.
//!
//! Three regimes are supported:
//!
//! * **static**: the same top-ranked prefix every epoch;
//! * **sampling**: every epoch draws `n` pairs without replacement, weighted
//!   by min-max scaled and inverted CED;
//! * **gradual**: epoch `i` uses the top `n(i) = alpha * |G| * beta^floor((i - 1) / eta)`
//!   pairs of the ranking.
//!
//! Manifests list ids ascending. Token accounting is always on the source side.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{Corpus, PairId};
use crate::error::{Error, Result};
use crate::scoring::{CedRecord, Ranking};

pub const DEFAULT_EPOCHS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "size", rename_all = "lowercase")]
pub enum Budget {
    Tokens(u64),
    Sentences(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Static { budget: Budget },
    Sampling { budget: Budget, seed: u64 },
    Gradual { alpha: f64, beta: f64, eta: usize },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Static { .. } => "static",
            Method::Sampling { .. } => "sampling",
            Method::Gradual { .. } => "gradual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionSchedule {
    pub method: Method,
    pub epochs: usize,
}

impl SelectionSchedule {
    pub fn new(method: Method, epochs: usize) -> Result<Self> {
        let s = Self { method, epochs };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if let Method::Gradual { alpha, beta, eta } = self.method {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
            }
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::Parameter(format!("beta must lie in (0, 1], got {beta}")));
            }
            if eta < 1 {
                return Err(Error::Parameter("eta must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn params(&self) -> Value {
        let budget = |b: Budget| match b {
            Budget::Tokens(t) => json!({"unit": "tokens", "size": t}),
            Budget::Sentences(n) => json!({"unit": "sentences", "size": n}),
        };
        let mut params = match self.method {
            Method::Static { budget: b } | Method::Sampling { budget: b, .. } => {
                json!({"budget": budget(b)})
            }
            Method::Gradual { alpha, beta, eta } => json!({
                "alpha": alpha,
                "beta": beta,
                "eta": eta,
                "unit": "sentences",
            }),
        };
        params["epochs"] = json!(self.epochs);
        params["vocabulary"] = json!("fixed-complete-bitext");
        params
    }

    fn seed(&self) -> Option<u64> {
        match self.method {
            Method::Sampling { seed, .. } => Some(seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochManifest {
    pub epoch: usize,
    pub pair_ids: Vec<PairId>,
    pub source_tokens: u64,
    pub cumulative_source_tokens: u64,
}

fn source_tokens(bitext: &Corpus, ids: &[PairId]) -> Result<u64> {
    ids.iter()
        .map(|&id| {
            bitext
                .get(id)
                .map(|p| p.source_len() as u64)
                .ok_or_else(|| Error::Consistency(format!("pair id {id} not found in bitext")))
        })
        .sum()
}

/// Longest ranking prefix whose source tokens stay within `budget`,
/// returned ascending by id.
pub fn select_static(ranking: &Ranking, bitext: &Corpus, budget: u64) -> Result<Vec<PairId>> {
    let lens = ranking
        .order
        .iter()
        .map(|&id| {
            bitext
                .get(id)
                .map(|p| p.source_len() as u64)
                .ok_or_else(|| Error::Consistency(format!("ranked pair id {id} not found in bitext")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = token_prefix_len(lens.into_iter(), budget);
    Ok(sorted(&ranking.order[..n]))
}

/// Number of leading items whose cumulative length is `<= budget`.
fn token_prefix_len(lens: impl Iterator<Item = u64>, budget: u64) -> usize {
    let mut used = 0u64;
    let mut n = 0;
    for len in lens {
        if used + len > budget {
            break;
        }
        used += len;
        n += 1;
    }
    n
}

fn sorted(ids: &[PairId]) -> Vec<PairId> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v
}

fn select_by_budget(ranking: &Ranking, bitext: &Corpus, budget: Budget) -> Result<Vec<PairId>> {
    match budget {
        Budget::Tokens(t) => select_static(ranking, bitext, t),
        Budget::Sentences(n) => Ok(sorted(&ranking.order[..n.min(ranking.len())])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEntry {
    pub pair_id: PairId,
    /// Min-max scaled, inverted CED in `[0, 1]`.
    pub scaled: f64,
    pub weight: f64,
}

/// Sampling distribution over pairs, in the order of the input records.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    entries: Vec<WeightEntry>,
}

impl SamplingWeights {
    pub fn entries(&self) -> &[WeightEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pair with the largest weight; ties go to the smallest id.
    pub fn argmax(&self) -> Option<PairId> {
        self.entries
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight).then(b.pair_id.cmp(&a.pair_id)))
            .map(|e| e.pair_id)
    }
}

/// `scaled = 1 - (ced - min) / (max - min)` and `weight = scaled / sum(scaled)`.
/// When every score is equal all pairs get `scaled = 1` (uniform weights).
pub fn compute_sampling_weights(records: &[CedRecord]) -> Result<SamplingWeights> {
    if records.is_empty() {
        return Err(Error::Parameter("no records to weight".into()));
    }
    let min = records.iter().map(|r| r.ced).fold(f64::INFINITY, f64::min);
    let max = records.iter().map(|r| r.ced).fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let scaled: Vec<f64> = records
        .iter()
        .map(|r| if range > 0.0 { 1.0 - (r.ced - min) / range } else { 1.0 })
        .collect();
    let total: f64 = scaled.iter().sum();
    let entries = records
        .iter()
        .zip(scaled)
        .map(|(r, s)| WeightEntry {
            pair_id: r.pair_id,
            scaled: s,
            weight: s / total,
        })
        .collect();
    Ok(SamplingWeights { entries })
}

/// Generator for one epoch: ChaCha8 keyed by `seed`, stream `epoch`.
fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// Pairs in sampling order for one epoch (exponential keys
/// `-ln(u) / w`, smallest first). Zero-weight pairs follow all positive-weight
/// pairs in uniformly random order.
fn epoch_draw_order(weights: &SamplingWeights, seed: u64, epoch: usize) -> Vec<PairId> {
    let mut rng = epoch_rng(seed, epoch);
    let mut keyed: Vec<(bool, f64, PairId)> = weights
        .entries
        .iter()
        .map(|e| {
            // u in (0, 1]
            let u: f64 = 1.0 - rng.random::<f64>();
            if e.weight > 0.0 {
                (false, -u.ln() / e.weight, e.pair_id)
            } else {
                (true, u, e.pair_id)
            }
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

/// Draws `n` distinct pairs for `epoch`, ascending by id. Deterministic in
/// `(weights, n, seed, epoch)` and independent across epochs.
pub fn sample_epoch(weights: &SamplingWeights, n: usize, seed: u64, epoch: usize) -> Result<Vec<PairId>> {
    if n > weights.len() {
        return Err(Error::Parameter(format!(
            "cannot draw {n} pairs from a population of {}",
            weights.len()
        )));
    }
    let order = epoch_draw_order(weights, seed, epoch);
    Ok(sorted(&order[..n]))
}

/// Token-budget variant of [`sample_epoch`]: the longest prefix of the
/// epoch's draw order that fits in `budget` source tokens.
pub fn sample_epoch_tokens(
    weights: &SamplingWeights,
    bitext: &Corpus,
    budget: u64,
    seed: u64,
    epoch: usize,
) -> Result<Vec<PairId>> {
    let order = epoch_draw_order(weights, seed, epoch);
    let lens = order
        .iter()
        .map(|&id| {
            bitext
                .get(id)
                .map(|p| p.source_len() as u64)
                .ok_or_else(|| Error::Consistency(format!("weighted pair id {id} not found in bitext")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = token_prefix_len(lens.into_iter(), budget);
    Ok(sorted(&order[..n]))
}

/// Sentence count for `epoch` (1-based), rounded to nearest with a floor of 1.
pub fn gradual_size(population: usize, alpha: f64, beta: f64, eta: usize, epoch: usize) -> usize {
    let step = (epoch - 1) / eta;
    let exact = alpha * population as f64 * beta.powi(step as i32);
    // nudge absorbs representation error in beta^k so exact halves round up
    let n = (exact * (1.0 + 1e-12)).round() as usize;
    n.clamp(1, population.max(1))
}

pub fn gradual_schedule(population: usize, alpha: f64, beta: f64, eta: usize, epochs: usize) -> Vec<usize> {
    (1..=epochs)
        .map(|i| gradual_size(population, alpha, beta, eta, i))
        .collect()
}

/// Expands a schedule into one manifest per epoch. `weights` must be given
/// exactly when the method is sampling.
pub fn build_epoch_manifests(
    ranking: &Ranking,
    bitext: &Corpus,
    schedule: &SelectionSchedule,
    weights: Option<&SamplingWeights>,
) -> Result<Vec<EpochManifest>> {
    schedule.validate()?;
    ranking.validate_against(bitext)?;
    let epochs: Vec<usize> = (1..=schedule.epochs).collect();

    let per_epoch: Vec<Vec<PairId>> = match (schedule.method, weights) {
        (Method::Static { budget }, None) => {
            let ids = select_by_budget(ranking, bitext, budget)?;
            vec![ids; schedule.epochs]
        }
        (Method::Sampling { budget, seed }, Some(w)) => {
            if w.len() != bitext.len() {
                return Err(Error::Parameter(format!(
                    "sampling weights cover {} pairs but the bitext has {}",
                    w.len(),
                    bitext.len()
                )));
            }
            epochs
                .par_iter()
                .map(|&e| match budget {
                    Budget::Sentences(n) => sample_epoch(w, n, seed, e),
                    Budget::Tokens(t) => sample_epoch_tokens(w, bitext, t, seed, e),
                })
                .collect::<Result<_>>()?
        }
        (Method::Gradual { alpha, beta, eta }, None) => epochs
            .iter()
            .map(|&e| {
                let n = gradual_size(ranking.len(), alpha, beta, eta, e);
                sorted(&ranking.order[..n.min(ranking.len())])
            })
            .collect(),
        (Method::Sampling { .. }, None) => return Err(Error::Parameter("sampling requires sampling weights".into())),
        (_, Some(_)) => {
            return Err(Error::Parameter(format!(
                "sampling weights given for method {}",
                schedule.method.name()
            )))
        }
    };

    let mut cumulative = 0u64;
    per_epoch
        .into_iter()
        .zip(epochs)
        .map(|(pair_ids, epoch)| {
            let source_tokens = source_tokens(bitext, &pair_ids)?;
            cumulative += source_tokens;
            Ok(EpochManifest {
                epoch,
                pair_ids,
                source_tokens,
                cumulative_source_tokens: cumulative,
            })
        })
        .collect()
}

/// Tokens observed over all epochs relative to `baseline_epochs` passes over
/// the complete bitext.
pub fn relative_training_time(manifests: &[EpochManifest], bitext: &Corpus, baseline_epochs: usize) -> Result<f64> {
    if manifests.is_empty() {
        return Err(Error::Parameter("no manifests".into()));
    }
    let denom = baseline_epochs as f64 * bitext.total_source_tokens() as f64;
    if denom == 0.0 {
        return Err(Error::Parameter("baseline has no tokens".into()));
    }
    let observed: u64 = manifests.iter().map(|m| m.source_tokens).sum();
    Ok(observed as f64 / denom)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLine {
    epoch: usize,
    method: String,
    pair_ids: Vec<PairId>,
    source_tokens: u64,
    params: Value,
    seed: Option<u64>,
}

/// JSON Lines, one object per epoch.
pub fn manifests_to_jsonl(manifests: &[EpochManifest], schedule: &SelectionSchedule) -> String {
    let params = schedule.params();
    let mut out = String::new();
    for m in manifests {
        let line = ManifestLine {
            epoch: m.epoch,
            method: schedule.method.name().to_string(),
            pair_ids: m.pair_ids.clone(),
            source_tokens: m.source_tokens,
            params: params.clone(),
            seed: schedule.seed(),
        };
        out.push_str(&serde_json::to_string(&line).expect("manifest serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifests(path: &Path, manifests: &[EpochManifest], schedule: &SelectionSchedule) -> Result<()> {
    fs::write(path, manifests_to_jsonl(manifests, schedule)).map_err(|e| Error::io(path, e))
}

/// A manifest file read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedManifests {
    pub method: String,
    pub manifests: Vec<EpochManifest>,
}

pub fn read_manifests(path: &Path) -> Result<LoadedManifests> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut method = None;
    let mut manifests = Vec::new();
    let mut cumulative = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        match &method {
            None => method = Some(parsed.method.clone()),
            Some(m) if *m != parsed.method => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("method changes from {m} to {}", parsed.method),
                })
            }
            _ => {}
        }
        cumulative += parsed.source_tokens;
        manifests.push(EpochManifest {
            epoch: parsed.epoch,
            pair_ids: parsed.pair_ids,
            source_tokens: parsed.source_tokens,
            cumulative_source_tokens: cumulative,
        });
    }
    Ok(LoadedManifests {
        method: method.unwrap_or_default(),
        manifests,
    })
}

/// Per-epoch sizes and relative training time (the bar data of a schedule plot).
pub fn summary_json(
    manifests: &[EpochManifest],
    schedule: &SelectionSchedule,
    bitext: &Corpus,
    baseline_epochs: usize,
) -> Result<Value> {
    let rtt = relative_training_time(manifests, bitext, baseline_epochs)?;
    let sizes: Vec<Value> = manifests
        .iter()
        .map(|m| {
            json!({
                "epoch": m.epoch,
                "sentences": m.pair_ids.len(),
                "source_tokens": m.source_tokens,
                "cumulative_source_tokens": m.cumulative_source_tokens,
            })
        })
        .collect();
    Ok(json!({
        "method": schedule.method.name(),
        "params": schedule.params(),
        "seed": schedule.seed(),
        "bitext_pairs": bitext.len(),
        "bitext_source_tokens": bitext.total_source_tokens(),
        "baseline_epochs": baseline_epochs,
        "relative_training_time": rtt,
        "epochs": sizes,
    }))
}

/// Writes `epoch_<k>.src` / `epoch_<k>.tgt` for every manifest.
pub fn emit_epoch_text(dir: &Path, manifests: &[EpochManifest], bitext: &Corpus) -> Result<()> {
    let lookup: HashMap<PairId, &crate::corpus::SentencePair> = bitext.pairs().iter().map(|p| (p.id, p)).collect();
    for m in manifests {
        let pairs = m
            .pair_ids
            .iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Consistency(format!("pair id {id} not found in bitext")))
            })
            .collect::<Result<Vec<_>>>()?;
        crate::corpus::write_lines(
            &dir.join(format!("epoch_{}.src", m.epoch)),
            pairs.iter().map(|p| p.source.join(" ")),
        )?;
        crate::corpus::write_lines(
            &dir.join(format!("epoch_{}.tgt", m.epoch)),
            pairs.iter().map(|p| p.target.join(" ")),
        )?;
    }
    Ok(())
}
