//! ARPA text format.
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! parsing a written file restores every log10 value bit for bit.

use std::collections::HashMap;
use std::fmt::Write;

use super::{Entry, NGramLm, Table, BOS, EOS, UNK};

pub(super) fn write_arpa(lm: &NGramLm) -> String {
    let words = lm.words();
    let mut out = String::new();
    out.push_str("\\data\\\n");
    for (k, table) in lm.tables().iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", k + 1, table.len());
    }
    for (k, table) in lm.tables().iter().enumerate() {
        let _ = write!(out, "\n\\{}-grams:\n", k + 1);
        let mut keys: Vec<&Box<[u32]>> = table.keys().collect();
        keys.sort_unstable();
        for key in keys {
            let e = &table[key];
            let _ = write!(out, "{}\t", e.log10_prob);
            for (i, &id) in key.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&words[id as usize]);
            }
            if let Some(bo) = e.log10_backoff {
                let _ = write!(out, "\t{bo}");
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

type ParseError = (usize, String);

/// Words, log10 probability and optional log10 backoff of one line.
type RawEntry<'a> = (Vec<&'a str>, f64, Option<f64>);

/// Returns the word list (reserved symbols first, then content words in
/// order of first appearance among the unigrams) and id-keyed tables.
pub(super) fn parse_arpa(text: &str) -> Result<(Vec<String>, Vec<Table>), ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    // header
    let mut declared: Vec<usize> = Vec::new();
    let mut seen_data = false;
    let mut first_section = None;
    for (no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if line == "\\data\\" {
            seen_data = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (k, n) = rest
                .split_once('=')
                .ok_or((no, format!("malformed count line '{line}'")))?;
            let k: usize = k.trim().parse().map_err(|_| (no, format!("bad order in '{line}'")))?;
            let n: usize = n.trim().parse().map_err(|_| (no, format!("bad count in '{line}'")))?;
            if k != declared.len() + 1 {
                return Err((no, format!("n-gram counts out of order at order {k}")));
            }
            declared.push(n);
            continue;
        }
        if section_order(line).is_some() {
            first_section = Some((no, line));
            break;
        }
        return Err((no, format!("unexpected line in header: '{line}'")));
    }
    if !seen_data || declared.is_empty() {
        return Err((1, "missing \\data\\ header".into()));
    }
    let order = declared.len();

    let mut raw: Vec<Vec<RawEntry>> = vec![Vec::new(); order];
    let mut current = match first_section {
        Some((no, line)) => expect_section(no, line, 1)?,
        None => return Err((0, "no n-gram sections".into())),
    };
    let mut ended = false;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            ended = true;
            break;
        }
        if line.starts_with('\\') {
            current = expect_section(no, line, current + 1)?;
            if current > order {
                return Err((
                    no,
                    format!("section for order {current} exceeds declared order {order}"),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let n = current;
        if fields.len() != n + 1 && fields.len() != n + 2 {
            return Err((no, format!("expected {n}-gram entry, got '{line}'")));
        }
        let prob: f64 = fields[0]
            .parse()
            .map_err(|_| (no, format!("bad probability '{}'", fields[0])))?;
        let backoff = match fields.get(n + 1) {
            Some(b) => Some(b.parse::<f64>().map_err(|_| (no, format!("bad back-off '{b}'")))?),
            None => None,
        };
        if backoff.is_some() && n == order {
            return Err((no, "highest-order entry carries a back-off weight".into()));
        }
        raw[n - 1].push((fields[1..=n].to_vec(), prob, backoff));
    }
    if !ended {
        return Err((0, "missing \\end\\ marker".into()));
    }
    for (k, (entries, &n)) in raw.iter().zip(&declared).enumerate() {
        if entries.len() != n {
            return Err((
                0,
                format!("order {} declares {n} entries but lists {}", k + 1, entries.len()),
            ));
        }
    }

    let mut words: Vec<String> = vec![UNK.into(), BOS.into(), EOS.into()];
    let mut index: HashMap<&str, u32> = [(UNK, 0), (BOS, 1), (EOS, 2)].into_iter().collect();
    let mut reserved_seen = [false; 3];
    for (gram, _, _) in &raw[0] {
        let w = gram[0];
        match index.get(w) {
            Some(&id) if id < 3 => reserved_seen[id as usize] = true,
            Some(_) => return Err((0, format!("duplicate unigram '{w}'"))),
            None => {
                index.insert(w, words.len() as u32);
                words.push(w.to_string());
            }
        }
    }
    if let Some(i) = reserved_seen.iter().position(|s| !s) {
        return Err((0, format!("unigram section lacks {}", words[i])));
    }

    let mut tables: Vec<Table> = Vec::with_capacity(order);
    for (k, entries) in raw.into_iter().enumerate() {
        let mut table = Table::with_capacity(entries.len());
        for (gram, log10_prob, log10_backoff) in entries {
            let key = gram
                .iter()
                .map(|w| {
                    index
                        .get(w)
                        .copied()
                        .ok_or((0, format!("{}-gram uses unknown word '{w}'", k + 1)))
                })
                .collect::<Result<Box<[u32]>, _>>()?;
            if table
                .insert(
                    key,
                    Entry {
                        log10_prob,
                        log10_backoff,
                    },
                )
                .is_some()
            {
                return Err((0, format!("duplicate {}-gram '{}'", k + 1, gram.join(" "))));
            }
        }
        tables.push(table);
    }
    Ok((words, tables))
}

fn section_order(line: &str) -> Option<usize> {
    line.strip_prefix('\\')?.strip_suffix("-grams:")?.parse().ok()
}

fn expect_section(no: usize, line: &str, want: usize) -> Result<usize, ParseError> {
    match section_order(line) {
        Some(k) if k == want => Ok(k),
        Some(k) => Err((no, format!("expected \\{want}-grams: section, found order {k}"))),
        None => Err((no, format!("unexpected section marker '{line}'"))),
    }
}
