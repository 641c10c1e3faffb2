//! Selection diagnostics: test-vocabulary coverage, per-pair selection
//! frequencies and a language-model fit proxy for in-domain quality.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Corpus, PairId};
use crate::error::{Error, Result};
use crate::ngram_lm::{build_vocabulary, train_lm, Smoothing};
use crate::scoring::Ranking;
use crate::selection::EpochManifest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub method: String,
    pub test_types: usize,
    pub unseen_types: usize,
}

/// Distinct test source types that never occur on the source side of any
/// pair selected in any epoch.
pub fn unseen_word_types<S: AsRef<[String]>>(
    test_source: &[S],
    manifests: &[EpochManifest],
    bitext: &Corpus,
) -> Result<CoverageReport> {
    let test: HashSet<&str> = test_source
        .iter()
        .flat_map(|s| s.as_ref().iter().map(String::as_str))
        .collect();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut visited: HashSet<PairId> = HashSet::new();
    for m in manifests {
        for &id in &m.pair_ids {
            if !visited.insert(id) {
                continue;
            }
            let pair = bitext
                .get(id)
                .ok_or_else(|| Error::Consistency(format!("manifest pair id {id} not in bitext")))?;
            seen.extend(pair.source.iter().map(String::as_str));
        }
    }
    Ok(CoverageReport {
        method: String::new(),
        test_types: test.len(),
        unseen_types: test.iter().filter(|t| !seen.contains(*t)).count(),
    })
}

/// Coverage for several labelled manifest sets against one test set.
pub fn coverage_table<S: AsRef<[String]>>(
    test_source: &[S],
    methods: &[(String, Vec<EpochManifest>)],
    bitext: &Corpus,
) -> Result<Vec<CoverageReport>> {
    methods
        .iter()
        .map(|(label, manifests)| {
            let mut r = unseen_word_types(test_source, manifests, bitext)?;
            r.method = label.clone();
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyReport {
    pub epochs: usize,
    /// Ids never selected are absent (frequency 0).
    pub counts: BTreeMap<PairId, usize>,
}

impl FrequencyReport {
    pub fn frequency(&self, id: PairId) -> usize {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    /// Frequencies in ranking order (best-ranked first).
    pub fn by_rank(&self, ranking: &Ranking) -> Vec<usize> {
        ranking.order.iter().map(|&id| self.frequency(id)).collect()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn selection_frequencies(manifests: &[EpochManifest]) -> Result<FrequencyReport> {
    if manifests.is_empty() {
        return Err(Error::Parameter("no manifests".into()));
    }
    let mut counts = BTreeMap::new();
    for m in manifests {
        for &id in &m.pair_ids {
            *counts.entry(id).or_default() += 1;
        }
    }
    Ok(FrequencyReport {
        epochs: manifests.len(),
        counts,
    })
}

/// Average ranks (1-based), ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho with tie correction (Pearson correlation of average
/// ranks). `None` when either input is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub const PROXY_ORDER: usize = 5;

/// Cross-entropy (nats per token) of the dev target side under a fresh
/// n-gram model trained on the selected pairs' target side, using the full
/// selection vocabulary.
pub fn proxy_domain_fit(selected: &[PairId], bitext: &Corpus, in_domain_dev: &Corpus) -> Result<f64> {
    proxy_domain_fit_with_order(selected, bitext, in_domain_dev, PROXY_ORDER)
}

pub fn proxy_domain_fit_with_order(
    selected: &[PairId],
    bitext: &Corpus,
    in_domain_dev: &Corpus,
    order: usize,
) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::Parameter("proxy fit needs a non-empty selection".into()));
    }
    if in_domain_dev.is_empty() {
        return Err(Error::Parameter("proxy fit needs a non-empty dev set".into()));
    }
    let chosen = bitext.subset("selection", selected)?;
    let vocab = build_vocabulary(chosen.target_side(), 1);
    let lm = train_lm(chosen.target_side(), &vocab, order, Smoothing::KneserNey)?;
    lm.corpus_cross_entropy(in_domain_dev.target_side())
}

/// Aligned-column text table for coverage reports.
pub fn coverage_text_table(reports: &[CoverageReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>12}",
        "method", "test_types", "unseen_types"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>12}",
            r.method, r.test_types, r.unseen_types
        );
    }
    out
}

pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::from("method,test_types,unseen_types\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{}", r.method, r.test_types, r.unseen_types);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, SentencePair};
    use crate::scoring::RankingOrigin;
    use crate::selection::{build_epoch_manifests, gradual_schedule, Method, SelectionSchedule};

    fn manifest(epoch: usize, ids: &[u32]) -> EpochManifest {
        EpochManifest {
            epoch,
            pair_ids: ids.iter().copied().map(PairId).collect(),
            source_tokens: 0,
            cumulative_source_tokens: 0,
        }
    }

    fn bitext() -> Corpus {
        Corpus::from_lines("b", &["a b", "c d", "e f", "a g"], &["1", "2", "3", "4"]).unwrap()
    }

    #[test]
    fn coverage_basic_cases() {
        let b = bitext();
        let test = vec![tokenize("a c z"), tokenize("g g")];
        let full = unseen_word_types(&test, &[manifest(1, &[0, 1, 2, 3])], &b).unwrap();
        assert_eq!((full.test_types, full.unseen_types), (4, 1));
        let none = unseen_word_types(&test, &[], &b).unwrap();
        assert_eq!(none.unseen_types, none.test_types);
        let some = unseen_word_types(&test, &[manifest(1, &[0]), manifest(2, &[3])], &b).unwrap();
        assert_eq!(some.unseen_types, 2);
        assert!(matches!(
            unseen_word_types(&test, &[manifest(1, &[9])], &b),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn coverage_is_monotone_in_manifests() {
        let b = bitext();
        let test = vec![tokenize("a b c d e f g h")];
        let mut ms = Vec::new();
        let mut last = unseen_word_types(&test, &ms, &b).unwrap().unseen_types;
        for (e, id) in [2u32, 0, 2, 3, 1].into_iter().enumerate() {
            ms.push(manifest(e + 1, &[id]));
            let now = unseen_word_types(&test, &ms, &b).unwrap().unseen_types;
            assert!(now <= last);
            last = now;
        }
        assert_eq!(last, 1);
    }

    #[test]
    fn frequencies_static_and_sum() {
        let ms: Vec<_> = (1..=5).map(|e| manifest(e, &[1, 3])).collect();
        let f = selection_frequencies(&ms).unwrap();
        assert_eq!(f.frequency(PairId(1)), 5);
        assert_eq!(f.frequency(PairId(3)), 5);
        assert_eq!(f.frequency(PairId(0)), 0);
        assert_eq!(f.total(), 10);
        assert!(selection_frequencies(&[]).is_err());
    }

    #[test]
    fn frequencies_gradual_non_increasing_by_rank() {
        let pairs = (0..100).map(|i| SentencePair::from_text(i, "x", "y")).collect();
        let b = Corpus::new("b", pairs).unwrap();
        let order: Vec<PairId> = (0..100).map(|i| PairId((i * 37) % 100)).collect();
        let r = Ranking {
            order,
            origin: RankingOrigin::Relevance,
            seed: None,
        };
        let s = SelectionSchedule::new(
            Method::Gradual {
                alpha: 0.9,
                beta: 0.7,
                eta: 2,
            },
            16,
        )
        .unwrap();
        let ms = build_epoch_manifests(&r, &b, &s, None).unwrap();
        let f = selection_frequencies(&ms).unwrap();
        let by_rank = f.by_rank(&r);
        assert!(by_rank.windows(2).all(|w| w[0] >= w[1]));
        let sizes = gradual_schedule(100, 0.9, 0.7, 2, 16);
        for (rank, &freq) in by_rank.iter().enumerate() {
            assert_eq!(freq, sizes.iter().filter(|&&n| n > rank).count());
        }
        let total: usize = ms.iter().map(|m| m.pair_ids.len()).sum();
        assert_eq!(f.total(), total);
    }

    #[test]
    fn spearman_known_values() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&x, &[5.0, 6.0, 7.0, 8.0, 7.5]).unwrap() - 0.9).abs() < 1e-12);
        assert!((spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // ties: ranks of y are [1.5, 1.5, 3, 4, 5]
        let rho = spearman(&x, &[1.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let expected = 9.5 / (10.0f64 * 9.5).sqrt();
        assert!((rho - expected).abs() < 1e-12);
        assert!(spearman(&x, &[1.0; 5]).is_none());
    }

    #[test]
    fn proxy_fit_prefers_matching_text() {
        let med = [
            "the dose of insulin",
            "take the tablet daily",
            "insulin dose per day",
            "the tablet dose",
        ];
        let news = [
            "the market fell sharply",
            "stocks rose on monday",
            "the bank cut rates",
            "markets rallied",
        ];
        let src: Vec<&str> = med.iter().chain(&news).copied().collect();
        let b = Corpus::from_lines("b", &src, &src).unwrap();
        let dev = Corpus::from_lines(
            "dev",
            &["the insulin tablet", "dose daily"],
            &["the insulin tablet", "dose daily"],
        )
        .unwrap();
        let med_ids: Vec<PairId> = (0..4).map(PairId).collect();
        let news_ids: Vec<PairId> = (4..8).map(PairId).collect();
        let fit_med = proxy_domain_fit(&med_ids, &b, &dev).unwrap();
        let fit_news = proxy_domain_fit(&news_ids, &b, &dev).unwrap();
        assert!(fit_med < fit_news, "{fit_med} vs {fit_news}");
        assert_eq!(fit_med, proxy_domain_fit(&med_ids, &b, &dev).unwrap());
        assert!(proxy_domain_fit(&[], &b, &dev).is_err());
    }

    #[test]
    fn tables_render() {
        let reports = vec![
            CoverageReport {
                method: "static".into(),
                test_types: 10,
                unseen_types: 4,
            },
            CoverageReport {
                method: "sampling".into(),
                test_types: 10,
                unseen_types: 2,
            },
        ];
        let text = coverage_text_table(&reports);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(
            coverage_csv(&reports),
            "method,test_types,unseen_types\nstatic,10,4\nsampling,10,2\n"
        );
    }
}
