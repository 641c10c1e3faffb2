mod common;

use common::ArpaOracle;
use dynsel::corpus::{Corpus, SentencePair};
use dynsel::ngram_lm::{build_vocabulary, train_lm, NGramLm, Smoothing};
use dynsel::scoring::{compute_ced, ScoringModels};
use proptest::prelude::*;

fn train_four(in_domain: &Corpus, general: &Corpus, order: usize, smoothing: Smoothing) -> Vec<NGramLm> {
    let sv = build_vocabulary(in_domain.source_side(), 1);
    let tv = build_vocabulary(in_domain.target_side(), 1);
    vec![
        train_lm(in_domain.source_side(), &sv, order, smoothing).unwrap(),
        train_lm(general.source_side(), &sv, order, smoothing).unwrap(),
        train_lm(in_domain.target_side(), &tv, order, smoothing).unwrap(),
        train_lm(general.target_side(), &tv, order, smoothing).unwrap(),
    ]
}

fn oracles(lms: &[NGramLm]) -> Vec<ArpaOracle> {
    lms.iter().map(|lm| ArpaOracle::parse(&lm.to_arpa_string())).collect()
}

fn models(lms: &[NGramLm]) -> ScoringModels<'_> {
    ScoringModels {
        in_source: &lms[0],
        general_source: &lms[1],
        in_target: &lms[2],
        general_target: &lms[3],
    }
}

#[test]
fn ced_matches_oracle_for_each_order_and_smoothing() {
    let bitext = common::toy_general();
    for order in 1..=4 {
        for smoothing in [Smoothing::KneserNey, Smoothing::WittenBell] {
            let lms = train_four(
                &common::toy_in_domain(),
                &common::toy_general_sample(),
                order,
                smoothing,
            );
            let o = oracles(&lms);
            let records = compute_ced(&bitext, models(&lms), 1).unwrap();
            for (r, pair) in records.iter().zip(bitext.pairs()) {
                let h = [
                    o[0].cross_entropy(&pair.source),
                    o[1].cross_entropy(&pair.source),
                    o[2].cross_entropy(&pair.target),
                    o[3].cross_entropy(&pair.target),
                ];
                let ced = (h[0] - h[1]) + (h[2] - h[3]);
                assert!(
                    (r.h_if - h[0]).abs() < 1e-9,
                    "order {order} {smoothing:?} pair {}",
                    r.pair_id
                );
                assert!((r.h_ge - h[3]).abs() < 1e-9);
                assert!((r.ced - ced).abs() < 1e-9, "{} vs {ced}", r.ced);
            }
        }
    }
}

#[test]
fn parallel_scoring_matches_sequential() {
    let bitext = common::toy_general();
    let lms = train_four(
        &common::toy_in_domain(),
        &common::toy_general_sample(),
        3,
        Smoothing::KneserNey,
    );
    let one = compute_ced(&bitext, models(&lms), 1).unwrap();
    let many = compute_ced(&bitext, models(&lms), 8).unwrap();
    assert_eq!(one, many);
}

#[test]
fn oracle_distributions_sum_to_one() {
    let g = common::toy_general();
    let vocab = build_vocabulary(g.source_side(), 1);
    for smoothing in [Smoothing::KneserNey, Smoothing::WittenBell] {
        let lm = train_lm(g.source_side(), &vocab, 3, smoothing).unwrap();
        let o = ArpaOracle::parse(&lm.to_arpa_string());
        let words = o.predictable();
        for ctx in [
            vec![],
            vec!["<s>", "<s>"],
            vec!["the"],
            vec!["the", "dose"],
            vec!["zzz", "qqq"],
        ] {
            let sum: f64 = words.iter().map(|w| o.prob(&ctx, w)).sum();
            assert!((sum - 1.0).abs() < 1e-9, "{smoothing:?} {ctx:?}: {sum}");
            for w in &words {
                assert!((lm.prob(&ctx, w) - o.prob(&ctx, w)).abs() < 1e-12);
            }
        }
    }
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..8)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

fn bitext(n: std::ops::Range<usize>) -> impl Strategy<Value = Corpus> {
    prop::collection::vec((sentence(), sentence()), n).prop_map(|v| {
        let pairs = v
            .into_iter()
            .enumerate()
            .map(|(i, (s, t))| SentencePair::new(i as u32, s, t))
            .collect();
        Corpus::new("p", pairs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ced_is_oracle_consistent_on_random_corpora(
        in_domain in bitext(2..8),
        general in bitext(2..8),
        scored in bitext(1..10),
        order in 1usize..4,
    ) {
        let lms = train_four(&in_domain, &general, order, Smoothing::KneserNey);
        let o = oracles(&lms);
        let records = compute_ced(&scored, models(&lms), 2).unwrap();
        for (r, pair) in records.iter().zip(scored.pairs()) {
            let ced = (o[0].cross_entropy(&pair.source) - o[1].cross_entropy(&pair.source))
                + (o[2].cross_entropy(&pair.target) - o[3].cross_entropy(&pair.target));
            prop_assert!((r.ced - ced).abs() < 1e-9);
            prop_assert!((r.ced - r.recomputed_ced()).abs() < 1e-12);
        }
    }
}
