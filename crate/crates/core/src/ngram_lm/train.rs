//! Interpolated modified Kneser-Ney estimation.
//!
//! The highest order uses raw counts; lower orders use continuation counts
//! (number of distinct left extensions). Every sentence is padded with
//! `order - 1` `<s>` symbols, so every lower-order n-gram has at least one
//! left extension.
//!
//! For an order with counts `c(h w)`:
//!
//! ```text
//! P(w | h) = max(c(h w) - D(c), 0) / c(h) + gamma(h) * P_lower(w | h')
//! gamma(h) = (D1 N1(h) + D2 N2(h) + D3 N3+(h)) / c(h)
//! ```
//!
//! with the discounts estimated from count-of-counts `n1..n4`. When those
//! are undefined or out of range the order is estimated with Witten-Bell:
//!
//! ```text
//! P(w | h) = (c(h w) + T(h) * P_lower(w | h')) / (c(h) + T(h))
//! ```
//!
//! The unigram level interpolates with the uniform distribution over all
//! predictable symbols, so `<unk>` and unseen vocabulary words keep
//! non-zero mass. Interpolation weights double as ARPA back-off weights.

use std::collections::HashMap;

use super::{
    Entry, LmMetadata, NGramLm, OrderEstimate, Smoothing, Table, Vocabulary, BOS, BOS_ID, EOS, EOS_ID, LOG10_ZERO, UNK,
    UNK_ID,
};
use crate::error::{Error, Result};

type Counts = HashMap<Box<[u32]>, u64>;

#[derive(Default)]
struct ContextStats {
    total: u64,
    types: u64,
    n1: u64,
    n2: u64,
    n3_plus: u64,
}

enum Discounting {
    KneserNey([f64; 3]),
    WittenBell,
}

/// Trains a back-off model on one corpus side. Tokens outside `vocab` are
/// counted as `<unk>`.
pub fn train_lm<'a, I>(sentences: I, vocab: &Vocabulary, order: usize, smoothing: Smoothing) -> Result<NGramLm>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if order < 1 {
        return Err(Error::Parameter(format!("order must be at least 1, got {order}")));
    }

    let mut words: Vec<String> = vec![UNK.into(), BOS.into(), EOS.into()];
    words.extend(vocab.tokens().map(str::to_owned));
    let index: HashMap<&str, u32> = words[3..]
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32 + 3))
        .collect();

    let mut top = Counts::new();
    let mut n_sentences = 0u64;
    let mut n_tokens = 0u64;
    let mut seq: Vec<u32> = Vec::new();
    for sentence in sentences {
        n_sentences += 1;
        n_tokens += sentence.len() as u64;
        seq.clear();
        seq.resize(order - 1, BOS_ID);
        seq.extend(
            sentence
                .iter()
                .map(|t| index.get(t.as_str()).copied().unwrap_or(UNK_ID)),
        );
        seq.push(EOS_ID);
        for end in order - 1..seq.len() {
            *top.entry(seq[end + 1 - order..=end].into()).or_default() += 1;
        }
    }
    if n_sentences == 0 {
        return Err(Error::Training("cannot train on an empty corpus".into()));
    }

    // counts[k - 1] holds k-gram counts
    let mut counts: Vec<Counts> = vec![Counts::new(); order];
    counts[order - 1] = top;
    for k in (1..order).rev() {
        let mut lower = Counts::new();
        for gram in counts[k].keys() {
            *lower.entry(gram[1..].into()).or_default() += 1;
        }
        counts[k - 1] = lower;
    }

    let predictable = (words.len() - 1) as f64;
    let uniform = 1.0 / predictable;

    let mut probs: Vec<HashMap<Box<[u32]>, f64>> = Vec::with_capacity(order);
    let mut gammas: Vec<HashMap<Box<[u32]>, f64>> = Vec::with_capacity(order);
    let mut estimates = Vec::with_capacity(order);

    for k in 1..=order {
        let level = &counts[k - 1];
        let discounting = match smoothing {
            Smoothing::KneserNey => {
                modified_kn_discounts(level).map_or(Discounting::WittenBell, Discounting::KneserNey)
            }
            Smoothing::WittenBell => Discounting::WittenBell,
        };
        estimates.push(match discounting {
            Discounting::KneserNey(d) => OrderEstimate::KneserNey { order: k, discounts: d },
            Discounting::WittenBell => OrderEstimate::WittenBell { order: k },
        });

        let mut stats: HashMap<&[u32], ContextStats> = HashMap::new();
        for (gram, &c) in level {
            let s = stats.entry(&gram[..k - 1]).or_default();
            s.total += c;
            s.types += 1;
            match c {
                1 => s.n1 += 1,
                2 => s.n2 += 1,
                _ => s.n3_plus += 1,
            }
        }

        let gamma: HashMap<Box<[u32]>, f64> = stats
            .iter()
            .map(|(&ctx, s)| {
                let g = match discounting {
                    Discounting::KneserNey([d1, d2, d3]) => {
                        (d1 * s.n1 as f64 + d2 * s.n2 as f64 + d3 * s.n3_plus as f64) / s.total as f64
                    }
                    Discounting::WittenBell => s.types as f64 / (s.total + s.types) as f64,
                };
                (ctx.into(), g)
            })
            .collect();

        let lower_prob = |gram: &[u32]| -> f64 {
            if k == 1 {
                uniform
            } else {
                probs[k - 2][&gram[1..]]
            }
        };

        let mut level_probs: HashMap<Box<[u32]>, f64> = HashMap::with_capacity(level.len());
        for (gram, &c) in level {
            let ctx = &gram[..k - 1];
            let s = &stats[ctx];
            let g = gamma[ctx];
            let p = match discounting {
                Discounting::KneserNey(d) => {
                    let disc = d[(c.min(3) - 1) as usize];
                    (c as f64 - disc).max(0.0) / s.total as f64 + g * lower_prob(gram)
                }
                Discounting::WittenBell => (c as f64 + s.types as f64 * lower_prob(gram)) / (s.total + s.types) as f64,
            };
            level_probs.insert(gram.clone(), p);
        }
        if k == 1 {
            // unseen predictable words receive only interpolated mass
            let g = gamma.get(&[][..]).copied().unwrap_or(1.0);
            for id in 0..words.len() as u32 {
                if id != BOS_ID {
                    level_probs.entry(Box::new([id])).or_insert(g * uniform);
                }
            }
        }
        probs.push(level_probs);
        gammas.push(gamma);
    }

    let mut tables: Vec<Table> = probs
        .into_iter()
        .map(|level| {
            level
                .into_iter()
                .map(|(gram, p)| {
                    (
                        gram,
                        Entry {
                            log10_prob: p.log10(),
                            log10_backoff: None,
                        },
                    )
                })
                .collect()
        })
        .collect();

    // <s>^j are contexts but never predicted
    for j in 1..order {
        tables[j - 1].insert(
            vec![BOS_ID; j].into_boxed_slice(),
            Entry {
                log10_prob: LOG10_ZERO,
                log10_backoff: None,
            },
        );
    }
    if order == 1 {
        tables[0].insert(
            Box::new([BOS_ID]),
            Entry {
                log10_prob: LOG10_ZERO,
                log10_backoff: None,
            },
        );
    }
    for k in 2..=order {
        for (ctx, &g) in &gammas[k - 1] {
            let entry = tables[k - 2]
                .get_mut(ctx)
                .expect("every context is a listed lower-order n-gram");
            entry.log10_backoff = Some(g.log10());
        }
    }

    let metadata = LmMetadata {
        order,
        smoothing,
        min_count: vocab.min_count(),
        training_sentences: n_sentences,
        training_token_count: n_tokens,
        estimates,
    };
    NGramLm::from_parts(words, tables, Some(metadata))
}

/// Chen & Goodman discounts `[D1, D2, D3+]`, or `None` when the
/// count-of-counts leave them undefined or outside `(0, k)`.
fn modified_kn_discounts(counts: &Counts) -> Option<[f64; 3]> {
    let mut n = [0u64; 5];
    for &c in counts.values() {
        if (1..=4).contains(&c) {
            n[c as usize] += 1;
        }
    }
    if n[1..].contains(&0) {
        return None;
    }
    let [n1, n2, n3, n4] = [n[1] as f64, n[2] as f64, n[3] as f64, n[4] as f64];
    let y = n1 / (n1 + 2.0 * n2);
    let d = [
        1.0 - 2.0 * y * n2 / n1,
        2.0 - 3.0 * y * n3 / n2,
        3.0 - 4.0 * y * n4 / n3,
    ];
    let valid = d
        .iter()
        .enumerate()
        .all(|(i, &di)| di.is_finite() && di > 0.0 && di < (i + 1) as f64);
    valid.then_some(d)
}
