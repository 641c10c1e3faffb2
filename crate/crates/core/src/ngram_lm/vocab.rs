use std::collections::{BTreeMap, BTreeSet};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

pub(crate) fn is_reserved(token: &str) -> bool {
    matches!(token, UNK | BOS | EOS)
}

/// Content tokens admitted to a language model. The reserved `<unk>`, `<s>`
/// and `</s>` symbols are implicit members and never appear in `tokens`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: BTreeSet<String>,
    min_count: usize,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens.into_iter().map(Into::into).filter(|t| !is_reserved(t)).collect();
        Self { tokens, min_count }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    /// Content tokens in lexicographic order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(String::as_str)
    }

    pub fn content_len(&self) -> usize {
        self.tokens.len()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }
}

/// Keeps every token occurring at least `min_count` times.
pub fn build_vocabulary<'a, I>(sentences: I, min_count: usize) -> Vocabulary
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for sentence in sentences {
        for tok in sentence {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let min_count = min_count.max(1);
    Vocabulary::from_tokens(
        counts.into_iter().filter(|&(_, c)| c >= min_count).map(|(t, _)| t),
        min_count,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn side(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| tokenize(l)).collect()
    }

    #[test]
    fn singletons_only_gives_empty_vocabulary() {
        let s = side(&["a b c", "d e"]);
        let v = build_vocabulary(s.iter().map(Vec::as_slice), 2);
        assert_eq!(v.content_len(), 0);
    }

    #[test]
    fn threshold_is_inclusive() {
        let s = side(&["a a b", "a c", "c"]);
        let v = build_vocabulary(s.iter().map(Vec::as_slice), 2);
        assert_eq!(v.tokens().collect::<Vec<_>>(), vec!["a", "c"]);
        let s = side(&["a a b", "a c"]);
        let v = build_vocabulary(s.iter().map(Vec::as_slice), 2);
        assert_eq!(v.tokens().collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn reserved_literals_are_not_content() {
        let s = side(&["<s> <s> </s> </s> <unk> <unk> x x"]);
        let v = build_vocabulary(s.iter().map(Vec::as_slice), 2);
        assert_eq!(v.tokens().collect::<Vec<_>>(), vec!["x"]);
    }
}
