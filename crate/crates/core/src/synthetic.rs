//! Seeded mixed-domain toy bitexts for tests, benchmarks and demos.
//!
//! Two domains ("med" and "gen") draw content words from disjoint Zipfian
//! vocabularies and share a small set of function words. A fraction of the
//! general bitext is in-domain; the in-domain corpus, test set and dev set are
//! drawn from the in-domain generator only. Target tokens are the source
//! tokens with a `t` prefix.

use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_lines, Corpus, SentencePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub general_pairs: usize,
    pub in_domain_share: f64,
    pub in_domain_pairs: usize,
    pub test_sentences: usize,
    pub dev_pairs: usize,
    pub content_vocab: usize,
    pub function_words: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a content word is borrowed from the other domain.
    pub leakage: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            general_pairs: 1000,
            in_domain_share: 0.15,
            in_domain_pairs: 400,
            test_sentences: 200,
            dev_pairs: 200,
            content_vocab: 600,
            function_words: 30,
            min_len: 5,
            max_len: 20,
            leakage: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub in_domain: Corpus,
    pub general: Corpus,
    /// `true` for general-bitext pairs generated from the in-domain source.
    pub general_is_in_domain: Vec<bool>,
    pub test_source: Vec<Vec<String>>,
    pub dev: Corpus,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Domain {
    Med,
    Gen,
}

struct Generator {
    rng: ChaCha8Rng,
    content: WeightedIndex<f64>,
    function: WeightedIndex<f64>,
    cfg: BenchmarkConfig,
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("non-empty vocabulary")
}

impl Generator {
    fn new(cfg: &BenchmarkConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            content: zipf(cfg.content_vocab),
            function: zipf(cfg.function_words),
            cfg: cfg.clone(),
        }
    }

    fn sentence(&mut self, domain: Domain) -> Vec<String> {
        let len = self.rng.random_range(self.cfg.min_len..=self.cfg.max_len);
        (0..len)
            .map(|_| {
                if self.rng.random_bool(0.3) {
                    format!("fn{}", self.function.sample(&mut self.rng))
                } else {
                    let mut d = domain;
                    if self.rng.random_bool(self.cfg.leakage) {
                        d = if d == Domain::Med { Domain::Gen } else { Domain::Med };
                    }
                    let prefix = if d == Domain::Med { "med" } else { "gen" };
                    format!("{prefix}{}", self.content.sample(&mut self.rng))
                }
            })
            .collect()
    }

    fn pair(&mut self, id: u32, domain: Domain) -> SentencePair {
        let source = self.sentence(domain);
        let target = source.iter().map(|t| format!("t{t}")).collect();
        SentencePair::new(id, source, target)
    }
}

pub fn generate(cfg: &BenchmarkConfig) -> Benchmark {
    let mut g = Generator::new(cfg);

    let mut general = Vec::with_capacity(cfg.general_pairs);
    let mut labels = Vec::with_capacity(cfg.general_pairs);
    for i in 0..cfg.general_pairs {
        let med = g.rng.random_bool(cfg.in_domain_share);
        labels.push(med);
        general.push(g.pair(i as u32, if med { Domain::Med } else { Domain::Gen }));
    }
    let in_domain = (0..cfg.in_domain_pairs)
        .map(|i| g.pair(i as u32, Domain::Med))
        .collect();
    let test_source = (0..cfg.test_sentences).map(|_| g.sentence(Domain::Med)).collect();
    let dev = (0..cfg.dev_pairs).map(|i| g.pair(i as u32, Domain::Med)).collect();

    Benchmark {
        in_domain: Corpus::new("in_domain", in_domain).expect("ascending ids"),
        general: Corpus::new("general", general).expect("ascending ids"),
        general_is_in_domain: labels,
        test_source,
        dev: Corpus::new("dev", dev).expect("ascending ids"),
    }
}

impl Benchmark {
    /// Writes `in_domain.{src,tgt}`, `general.{src,tgt}`, `test.src` and
    /// `dev.{src,tgt}` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let both = |c: &Corpus, stem: &str| -> Result<()> {
            write_lines(
                &dir.join(format!("{stem}.src")),
                c.pairs().iter().map(|p| p.source.join(" ")),
            )?;
            write_lines(
                &dir.join(format!("{stem}.tgt")),
                c.pairs().iter().map(|p| p.target.join(" ")),
            )
        };
        both(&self.in_domain, "in_domain")?;
        both(&self.general, "general")?;
        both(&self.dev, "dev")?;
        write_lines(&dir.join("test.src"), self.test_source.iter().map(|s| s.join(" ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let cfg = BenchmarkConfig::default();
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.general, b.general);
        assert_eq!(a.general.len(), 1000);
        let share = a.general_is_in_domain.iter().filter(|&&m| m).count() as f64 / 1000.0;
        assert!((0.1..0.2).contains(&share), "{share}");
        assert!(a.general.pairs().iter().all(|p| (5..=20).contains(&p.source_len())));
        let other = generate(&BenchmarkConfig { seed: 2, ..cfg });
        assert_ne!(a.general, other.general);
    }
}
