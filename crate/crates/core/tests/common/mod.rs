//! Shared helpers for integration tests: an independent ARPA reader and
//! back-off scorer, fixture builders and a CLI runner.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use dynsel::corpus::{Corpus, SentencePair};

/// Minimal ARPA back-off model, written from the file format alone.
pub struct ArpaOracle {
    order: usize,
    /// n-gram (space-joined) -> (log10 prob, log10 backoff)
    grams: HashMap<String, (f64, f64)>,
}

impl ArpaOracle {
    pub fn parse(text: &str) -> ArpaOracle {
        let mut grams = HashMap::new();
        let mut order = 0;
        let mut section = 0usize;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "\\data\\" || line.starts_with("ngram ") {
                continue;
            }
            if line == "\\end\\" {
                break;
            }
            if let Some(rest) = line.strip_prefix('\\') {
                section = rest.split('-').next().unwrap().parse().unwrap();
                order = order.max(section);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let prob: f64 = fields[0].parse().unwrap();
            let words = fields[1..=section].join(" ");
            let backoff = fields.get(section + 1).map_or(0.0, |b| b.parse().unwrap());
            grams.insert(words, (prob, backoff));
        }
        ArpaOracle { order, grams }
    }

    pub fn read(path: &Path) -> ArpaOracle {
        ArpaOracle::parse(&std::fs::read_to_string(path).unwrap())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn known(&self, word: &str) -> bool {
        word != "<s>" && self.grams.contains_key(word)
    }

    /// Maps a text token onto the model's vocabulary.
    pub fn map(&self, word: &str) -> String {
        if self.known(word) {
            word.to_string()
        } else {
            "<unk>".to_string()
        }
    }

    /// log10 P(word | history), using at most order-1 history words.
    pub fn log10_prob(&self, history: &[String], word: &str) -> f64 {
        let keep = history.len().min(self.order - 1);
        let h = &history[history.len() - keep..];
        self.backoff_prob(h, word)
    }

    fn backoff_prob(&self, h: &[String], word: &str) -> f64 {
        let mut key = h.join(" ");
        if !key.is_empty() {
            key.push(' ');
        }
        key.push_str(word);
        if let Some(&(p, _)) = self.grams.get(&key) {
            return p;
        }
        if h.is_empty() {
            panic!("word {word} missing from unigrams");
        }
        let bo = self.grams.get(&h.join(" ")).map_or(0.0, |&(_, b)| b);
        bo + self.backoff_prob(&h[1..], word)
    }

    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let h: Vec<String> = context.iter().map(|w| w.to_string()).collect();
        10f64.powf(self.log10_prob(&h, word))
    }

    /// Per-token cross-entropy in nats, counting the end-of-sentence event.
    pub fn cross_entropy(&self, sentence: &[String]) -> f64 {
        let mut history: Vec<String> = vec!["<s>".to_string(); self.order - 1];
        let mut total = 0.0;
        for w in sentence.iter().map(|w| self.map(w)).chain(["</s>".to_string()]) {
            total += self.log10_prob(&history, &w);
            history.push(w);
        }
        -total * std::f64::consts::LN_10 / (sentence.len() + 1) as f64
    }

    /// Every word that can be predicted: all unigrams except `<s>`.
    pub fn predictable(&self) -> Vec<String> {
        self.grams
            .keys()
            .filter(|k| !k.contains(' ') && k.as_str() != "<s>")
            .cloned()
            .collect()
    }
}

pub fn toks(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

pub fn corpus(name: &str, lines: &[(&str, &str)]) -> Corpus {
    let pairs = lines
        .iter()
        .enumerate()
        .map(|(i, (s, t))| SentencePair::new(i as u32, toks(s), toks(t)))
        .collect();
    Corpus::new(name, pairs).unwrap()
}

/// Twenty mixed pairs; half look like the tiny in-domain corpus.
pub fn toy_general() -> Corpus {
    corpus(
        "toy",
        &[
            ("the patient takes the dose", "der patient nimmt die dosis"),
            ("stocks fell on monday", "aktien fielen am montag"),
            ("the dose is too high", "die dosis ist zu hoch"),
            ("the team won the match", "das team gewann das spiel"),
            ("ask the doctor about the dose", "frag den arzt nach der dosis"),
            ("the market opened late", "der markt öffnete spät"),
            ("the patient feels better", "der patient fühlt sich besser"),
            ("rain is expected tomorrow", "morgen wird regen erwartet"),
            ("take one tablet daily", "nimm täglich eine tablette"),
            ("the striker scored twice", "der stürmer traf zweimal"),
            ("side effects are rare", "nebenwirkungen sind selten"),
            ("the bank raised rates", "die bank erhöhte die zinsen"),
            ("the doctor checks the patient", "der arzt untersucht den patienten"),
            ("prices rose again", "die preise stiegen wieder"),
            ("store the tablets in a dry place", "lagern sie die tabletten trocken"),
            ("the coach was fired", "der trainer wurde entlassen"),
            (
                "a high dose causes side effects",
                "eine hohe dosis verursacht nebenwirkungen",
            ),
            ("the election is in may", "die wahl ist im mai"),
            ("xylophone quartz zephyr", "xylophon quarz zephir"),
            ("the", "die"),
        ],
    )
}

pub fn toy_in_domain() -> Corpus {
    corpus(
        "in",
        &[
            ("the patient takes one tablet", "der patient nimmt eine tablette"),
            ("the doctor changes the dose", "der arzt ändert die dosis"),
            ("side effects of the dose", "nebenwirkungen der dosis"),
            ("the patient sees the doctor", "der patient sieht den arzt"),
            ("take the tablet with water", "nimm die tablette mit wasser"),
        ],
    )
}

pub fn toy_general_sample() -> Corpus {
    corpus(
        "gs",
        &[
            ("the market fell", "der markt fiel"),
            ("the team lost the match", "das team verlor das spiel"),
            ("rates rose on monday", "die zinsen stiegen am montag"),
            ("the patient is home", "der patient ist zu hause"),
            ("prices fell again", "die preise fielen wieder"),
        ],
    )
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dynsel")
}

pub fn dynsel(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn dynsel_ok(args: &[&str]) -> Output {
    let out = dynsel(args);
    assert!(
        out.status.success(),
        "dynsel {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
