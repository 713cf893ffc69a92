//! Cleaning and structural reconciliation of a verse-aligned parallel corpus.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use unicode_normalization::char::compose;

use crate::corpus::{ParallelGap, Token, Verse, VerseId, VersePair};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LEN: usize = 100;

const MIDDLE_DOTS: [char; 2] = ['\u{00B7}', '\u{2027}'];
const APOSTROPHES: [char; 2] = ['\'', '\u{2019}'];
const COMBINING: [char; 3] = ['\u{0300}', '\u{0301}', '\u{0323}'];
const MAJOR_PUNCT: [&str; 5] = [".", ";", ":", "?", "!"];

fn is_hebrew(c: char) -> bool {
    ('\u{0590}'..='\u{05FF}').contains(&c)
}

fn is_syllable_mark(c: char) -> bool {
    MIDDLE_DOTS.contains(&c) || APOSTROPHES.contains(&c)
}

fn is_combining(c: char) -> bool {
    COMBINING.contains(&c)
}

/// Record of what preprocessing removed or reconciled. All id lists are
/// sorted by (book, chapter, verse, suffix).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParallelReport {
    pub missing_in_source: Vec<VerseId>,
    pub missing_in_target: Vec<VerseId>,
    /// Verses split on both sides into the same number of fragments.
    pub split_verses: Vec<(VerseId, usize)>,
    /// Verses dropped because the two sides split differently:
    /// (id, source fragments, target fragments).
    pub unpaired_splits: Vec<(VerseId, usize, usize)>,
    /// Verses dropped because normalization removed every token on a side.
    pub emptied_verses: Vec<VerseId>,
    pub removed_symbols: BTreeMap<char, usize>,
}

impl ParallelReport {
    pub fn is_empty(&self) -> bool {
        self.missing_in_source.is_empty()
            && self.missing_in_target.is_empty()
            && self.split_verses.is_empty()
            && self.unpaired_splits.is_empty()
            && self.emptied_verses.is_empty()
            && self.removed_symbols.is_empty()
    }

    fn sort(&mut self) {
        self.missing_in_source.sort();
        self.missing_in_target.sort();
        self.split_verses.sort();
        self.unpaired_splits.sort();
        self.emptied_verses.sort();
    }

    pub fn to_text(&self) -> String {
        let ids = |v: &[VerseId]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str(&format!("missing_in_source\t{}\n", ids(&self.missing_in_source)));
        out.push_str(&format!("missing_in_target\t{}\n", ids(&self.missing_in_target)));
        let splits: Vec<String> = self.split_verses.iter().map(|(i, n)| format!("{i}/{n}")).collect();
        out.push_str(&format!("split_verses\t{}\n", splits.join(" ")));
        let unpaired: Vec<String> = self
            .unpaired_splits
            .iter()
            .map(|(i, s, t)| format!("{i}/{s}/{t}"))
            .collect();
        out.push_str(&format!("unpaired_splits\t{}\n", unpaired.join(" ")));
        out.push_str(&format!("emptied_verses\t{}\n", ids(&self.emptied_verses)));
        let removed: Vec<String> = self
            .removed_symbols
            .iter()
            .map(|(c, n)| format!("U+{:04X}={n}", *c as u32))
            .collect();
        out.push_str(&format!("removed_symbols\t{}\n", removed.join(" ")));
        out
    }
}

/// Cleans one token form. Returns `None` when nothing is left, in which case
/// the caller drops the token.
pub fn normalize_token(form: &str) -> Option<String> {
    normalize_counting(form, &mut BTreeMap::new())
}

fn normalize_counting(form: &str, removed: &mut BTreeMap<char, usize>) -> Option<String> {
    let chars: Vec<char> = form.chars().filter(|&c| {
        if is_hebrew(c) {
            *removed.entry(c).or_default() += 1;
            false
        } else {
            true
        }
    }).collect();

    let mut out: Vec<char> = Vec::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        if is_syllable_mark(c) {
            let prev_alpha = out.last().is_some_and(|p| p.is_alphabetic());
            let next_alpha = chars[i + 1..]
                .iter()
                .find(|n| !is_syllable_mark(**n))
                .is_some_and(|n| n.is_alphabetic());
            if prev_alpha && next_alpha {
                *removed.entry(c).or_default() += 1;
                continue;
            }
        } else if is_combining(c) {
            if let Some(base) = out.last_mut() {
                if let Some(composed) = compose(*base, c) {
                    *base = composed;
                    continue;
                }
            }
        }
        out.push(c);
    }
    if out.is_empty() {
        None
    } else {
        Some(out.into_iter().collect())
    }
}

/// Whole-token replacements applied after normalization (`from<TAB>to`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitutions(HashMap<String, String>);

impl Substitutions {
    pub fn parse(content: &str) -> Result<Substitutions> {
        let mut map = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(idx + 1, "expected from<TAB>to"))?;
            if from.is_empty() || to.is_empty() || to.chars().any(char::is_whitespace) {
                return Err(Error::format(idx + 1, "substitution forms must be non-empty single tokens"));
            }
            map.insert(from.to_string(), to.to_string());
        }
        Ok(Substitutions(map))
    }

    pub fn get(&self, form: &str) -> Option<&str> {
        self.0.get(form).map(String::as_str)
    }
}

/// Splits a verse longer than `max_len` into suffixed fragments, preferring
/// to cut after the last major punctuation token inside the window.
pub fn split_long_verse(verse: &Verse, max_len: usize) -> Result<Vec<Verse>> {
    if max_len == 0 {
        return Err(Error::Parameter("max_len must be positive".into()));
    }
    if verse.len() <= max_len {
        return Ok(vec![verse.clone()]);
    }
    if verse.id.suffix.is_some() {
        return Err(Error::integrity(&verse.id, "already a fragment, cannot split further"));
    }
    let mut chunks: Vec<&[Token]> = Vec::new();
    let mut rest: &[Token] = &verse.tokens;
    while rest.len() > max_len {
        let window = &rest[..max_len];
        let cut = window
            .iter()
            .rposition(|t| MAJOR_PUNCT.contains(&t.form.as_str()))
            .map_or(max_len, |p| p + 1);
        let (head, tail) = rest.split_at(cut);
        chunks.push(head);
        rest = tail;
    }
    if !rest.is_empty() {
        chunks.push(rest);
    }
    if chunks.len() > 26 {
        return Err(Error::integrity(
            &verse.id,
            format!("{} fragments needed, suffixes a..z allow 26", chunks.len()),
        ));
    }
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, tokens)| Verse {
            id: verse.id.with_suffix(Some((b'a' + i as u8) as char)),
            tokens: tokens.to_vec(),
        })
        .collect())
}

/// Outcome of checking two parallel sides for correspondence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verified {
    pub pairs: Vec<VersePair>,
    pub report: ParallelReport,
}

/// Turns the result of [`crate::corpus::parse_parallel`] into the surviving
/// pairs plus a report of everything that did not correspond. Other errors
/// pass through.
pub fn verify_parallel(parsed: Result<Vec<VersePair>>) -> Result<Verified> {
    match parsed {
        Ok(pairs) => Ok(Verified {
            pairs,
            report: ParallelReport::default(),
        }),
        Err(Error::ParallelGap(gap)) => {
            let ParallelGap {
                pairs,
                missing_in_source,
                missing_in_target,
            } = *gap;
            let mut report = ParallelReport {
                missing_in_source,
                missing_in_target,
                ..Default::default()
            };
            report.sort();
            Ok(Verified { pairs, report })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct PreprocessOptions {
    pub max_len: usize,
    pub substitutions: Substitutions,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            max_len: DEFAULT_MAX_LEN,
            substitutions: Substitutions::default(),
        }
    }
}

fn clean_verse(verse: &Verse, opts: &PreprocessOptions, removed: &mut BTreeMap<char, usize>) -> Verse {
    let mut tokens: Vec<Token> = Vec::with_capacity(verse.len());
    for tok in &verse.tokens {
        // A token that starts with a combining mark belongs to the previous one.
        if tok.form.starts_with(is_combining) {
            if let Some(prev) = tokens.last_mut() {
                let joined = format!("{}{}", prev.form, tok.form);
                if let Some(form) = normalize_counting(&joined, removed) {
                    prev.form = form;
                }
                continue;
            }
        }
        let Some(mut form) = normalize_counting(&tok.form, removed) else {
            continue;
        };
        if let Some(sub) = opts.substitutions.get(&form) {
            form = sub.to_string();
        }
        tokens.push(Token {
            form,
            tag: tok.tag.clone(),
            truth: tok.truth.clone(),
        });
    }
    Verse {
        id: verse.id.clone(),
        tokens,
    }
}

/// Normalizes every token, splits over-long verses on both sides and
/// re-pairs fragments. Pairs whose sides split into different fragment
/// counts are dropped and reported.
pub fn preprocess_corpus(pairs: &[VersePair], opts: &PreprocessOptions) -> Result<(Vec<VersePair>, ParallelReport)> {
    let mut report = ParallelReport::default();
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let source = clean_verse(&pair.source, opts, &mut report.removed_symbols);
        let target = clean_verse(&pair.target, opts, &mut report.removed_symbols);
        if source.is_empty() || target.is_empty() {
            report.emptied_verses.push(pair.target.id.clone());
            continue;
        }
        let s_frags = split_long_verse(&source, opts.max_len)?;
        let t_frags = split_long_verse(&target, opts.max_len)?;
        if s_frags.len() != t_frags.len() {
            report
                .unpaired_splits
                .push((pair.target.id.clone(), s_frags.len(), t_frags.len()));
            continue;
        }
        if s_frags.len() > 1 {
            report.split_verses.push((pair.target.id.clone(), s_frags.len()));
        }
        out.extend(
            s_frags
                .into_iter()
                .zip(t_frags)
                .map(|(source, target)| VersePair { source, target }),
        );
    }
    report.sort();
    Ok((out, report))
}
