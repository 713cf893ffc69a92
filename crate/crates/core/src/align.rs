//! Word alignments: Pharaoh-style files and a built-in IBM Model 1 aligner.
//!
//! Links are stored as `(target position, source position)`. Alignment files
//! written by this crate use that order; files produced by tools that emit
//! `source-target` are read with [`LinkOrder::SourceTarget`].

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::corpus::{Verse, VersePair};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LinkOrder {
    #[default]
    TargetSource,
    SourceTarget,
}

impl FromStr for LinkOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<LinkOrder> {
        match s {
            "target-source" => Ok(LinkOrder::TargetSource),
            "source-target" => Ok(LinkOrder::SourceTarget),
            other => Err(Error::Parameter(format!(
                "unknown link order {other:?} (expected target-source or source-target)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    pub links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Alignment {
        Alignment {
            links: links.into_iter().collect(),
        }
    }

    /// Source positions linked to target position `t`, ascending.
    pub fn sources_of(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.range((t, 0)..=(t, usize::MAX)).map(|&(_, s)| s)
    }

    pub fn check_bounds(&self, pair: &VersePair) -> Result<()> {
        let (tl, sl) = (pair.target.len(), pair.source.len());
        for &(t, s) in &self.links {
            if t >= tl || s >= sl {
                return Err(Error::integrity(
                    pair.id(),
                    format!("link {t}-{s} outside target length {tl} / source length {sl}"),
                ));
            }
        }
        Ok(())
    }

    /// Number of target positions carrying two or more links.
    pub fn one_to_many(&self) -> usize {
        let mut count = 0;
        let mut last: Option<(usize, usize)> = None;
        for &(t, _) in &self.links {
            match last {
                Some((lt, n)) if lt == t => {
                    if n == 1 {
                        count += 1;
                    }
                    last = Some((t, n + 1));
                }
                _ => last = Some((t, 1)),
            }
        }
        count
    }

    /// `t-s` pairs sorted by (t, s), space separated.
    pub fn to_line(&self) -> String {
        let mut out = String::new();
        for (i, (t, s)) in self.links.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{t}-{s}");
        }
        out
    }
}

fn parse_index(raw: &str, line: usize, token: &str) -> Result<usize> {
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::format(line, format!("malformed link {token:?}")));
    }
    raw.parse()
        .map_err(|_| Error::format(line, format!("index out of range in {token:?}")))
}

/// Parses an alignment file: one line per verse pair, in corpus order. A
/// leading bare integer (a line id) is discarded.
pub fn parse_alignment_file(content: &str, order: LinkOrder) -> Result<Vec<Alignment>> {
    let mut out = Vec::new();
    let body = content.strip_suffix('\n').unwrap_or(content);
    if body.is_empty() && content.is_empty() {
        return Ok(out);
    }
    for (idx, line) in body.split('\n').enumerate() {
        let line_no = idx + 1;
        let mut tokens = line.split_whitespace().peekable();
        if let Some(first) = tokens.peek() {
            if !first.contains('-') && first.bytes().all(|b| b.is_ascii_digit()) {
                tokens.next();
            }
        }
        let mut links = BTreeSet::new();
        for token in tokens {
            if token.starts_with('-') {
                return Err(Error::format(line_no, format!("negative index in {token:?}")));
            }
            let (a, b) = token
                .split_once('-')
                .ok_or_else(|| Error::format(line_no, format!("malformed link {token:?}")))?;
            if b.starts_with('-') {
                return Err(Error::format(line_no, format!("negative index in {token:?}")));
            }
            let a = parse_index(a, line_no, token)?;
            let b = parse_index(b, line_no, token)?;
            links.insert(match order {
                LinkOrder::TargetSource => (a, b),
                LinkOrder::SourceTarget => (b, a),
            });
        }
        out.push(Alignment { links });
    }
    Ok(out)
}

pub fn serialize_alignments(alignments: &[Alignment]) -> String {
    let mut out = String::new();
    for a in alignments {
        out.push_str(&a.to_line());
        out.push('\n');
    }
    out
}

/// Verifies that there is one alignment per pair and every link is in range.
pub fn check_alignments(pairs: &[VersePair], alignments: &[Alignment]) -> Result<()> {
    if pairs.len() != alignments.len() {
        return Err(Error::Parameter(format!(
            "{} verse pairs but {} alignment lines",
            pairs.len(),
            alignments.len()
        )));
    }
    pairs.iter().zip(alignments).try_for_each(|(p, a)| a.check_bounds(p))
}

/// One-to-many statistic over a whole corpus: (count, total target tokens).
pub fn one_to_many_rate(pairs: &[VersePair], alignments: &[Alignment]) -> (usize, usize) {
    let count = alignments.iter().map(Alignment::one_to_many).sum();
    let total = pairs.iter().map(|p| p.target.len()).sum();
    (count, total)
}

/// Serialized name of the empty source word.
pub const NULL_WORD: &str = "<null>";

/// IBM Model 1 lexical translation probabilities t(target | source).
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationTable {
    source_vocab: Vec<String>,
    target_vocab: Vec<String>,
    source_index: HashMap<String, u32>,
    target_index: HashMap<String, u32>,
    probs: HashMap<(u32, u32), f64>,
}

impl TranslationTable {
    /// Probability of `target` given `source` (`None` = the empty word).
    pub fn prob(&self, source: Option<&str>, target: &str) -> f64 {
        let s = match source {
            None => 0,
            Some(w) => match self.source_index.get(w) {
                Some(&i) => i,
                None => return 0.0,
            },
        };
        match self.target_index.get(target) {
            Some(&t) => self.probs.get(&(s, t)).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// Most probable target form for `source`, ties to the smaller form.
    pub fn best_target(&self, source: &str) -> Option<(&str, f64)> {
        let &s = self.source_index.get(source)?;
        self.probs
            .iter()
            .filter(|((si, _), _)| *si == s)
            .map(|(&(_, t), &p)| (self.target_vocab[t as usize].as_str(), p))
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Entries as (source, target, probability), the empty word written as
    /// [`NULL_WORD`], sorted by source then target.
    pub fn entries(&self) -> Vec<(&str, &str, f64)> {
        let mut rows: Vec<(&str, &str, f64)> = self
            .probs
            .iter()
            .map(|(&(s, t), &p)| {
                let src = if s == 0 { NULL_WORD } else { self.source_vocab[s as usize].as_str() };
                (src, self.target_vocab[t as usize].as_str(), p)
            })
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        rows
    }

    /// `source<TAB>target<TAB>probability`, probabilities at 12 significant digits.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (s, t, p) in self.entries() {
            let _ = writeln!(out, "{s}\t{t}\t{}", format_sig(p, 12));
        }
        out
    }

    pub fn from_tsv(content: &str) -> Result<TranslationTable> {
        let mut b = VocabBuilder::default();
        let mut probs = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::format(idx + 1, "expected source<TAB>target<TAB>probability"));
            }
            let p: f64 = f[2]
                .parse()
                .map_err(|_| Error::format(idx + 1, format!("bad probability {:?}", f[2])))?;
            let s = if f[0] == NULL_WORD { 0 } else { b.source(f[0]) };
            let t = b.target(f[1]);
            probs.insert((s, t), p);
        }
        Ok(b.finish(probs))
    }
}

#[derive(Default)]
struct VocabBuilder {
    source_vocab: Vec<String>,
    target_vocab: Vec<String>,
    source_index: HashMap<String, u32>,
    target_index: HashMap<String, u32>,
}

impl VocabBuilder {
    fn source(&mut self, w: &str) -> u32 {
        if self.source_vocab.is_empty() {
            self.source_vocab.push(NULL_WORD.to_string());
        }
        if let Some(&i) = self.source_index.get(w) {
            return i;
        }
        let i = self.source_vocab.len() as u32;
        self.source_vocab.push(w.to_string());
        self.source_index.insert(w.to_string(), i);
        i
    }

    fn target(&mut self, w: &str) -> u32 {
        if let Some(&i) = self.target_index.get(w) {
            return i;
        }
        let i = self.target_vocab.len() as u32;
        self.target_vocab.push(w.to_string());
        self.target_index.insert(w.to_string(), i);
        i
    }

    fn finish(mut self, probs: HashMap<(u32, u32), f64>) -> TranslationTable {
        if self.source_vocab.is_empty() {
            self.source_vocab.push(NULL_WORD.to_string());
        }
        TranslationTable {
            source_vocab: self.source_vocab,
            target_vocab: self.target_vocab,
            source_index: self.source_index,
            target_index: self.target_index,
            probs,
        }
    }
}

/// `%.{digits}g`-style formatting.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0".into() } else { value.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{value:.decimals$}"))
    }
}

/// Result of [`train_ibm1`].
#[derive(Clone, Debug)]
pub struct Ibm1Model {
    pub table: TranslationTable,
    /// Corpus log-likelihood under the initial parameters and after each
    /// EM iteration (`iterations + 1` values).
    pub log_likelihoods: Vec<f64>,
}

struct Encoded {
    /// Source ids with the empty word (0) prepended.
    source: Vec<u32>,
    target: Vec<u32>,
}

type Counts = HashMap<(u32, u32), f64>;

const CHUNK: usize = 64;

fn expectation(sents: &[Encoded], probs: &Counts) -> (Counts, f64) {
    let mut counts: Counts = HashMap::new();
    let mut ll = 0.0;
    for sent in sents {
        let norm = (sent.source.len() as f64).ln();
        for &t in &sent.target {
            let z: f64 = sent.source.iter().map(|&s| probs[&(s, t)]).sum();
            ll += z.ln() - norm;
            for &s in &sent.source {
                *counts.entry((s, t)).or_default() += probs[&(s, t)] / z;
            }
        }
    }
    (counts, ll)
}

/// Runs the E step chunk by chunk and merges in chunk order, so the sums do
/// not depend on the thread count.
fn expectation_all(sents: &[Encoded], probs: &Counts) -> (Counts, f64) {
    #[cfg(feature = "parallel")]
    let parts: Vec<(Counts, f64)> = sents.par_chunks(CHUNK).map(|c| expectation(c, probs)).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Counts, f64)> = sents.chunks(CHUNK).map(|c| expectation(c, probs)).collect();

    let mut total: Counts = HashMap::new();
    let mut ll = 0.0;
    for (counts, part_ll) in parts {
        // HashMap iteration order varies; accumulate through sorted keys.
        let mut keys: Vec<_> = counts.into_iter().collect();
        keys.sort_by_key(|(k, _)| *k);
        for (k, v) in keys {
            *total.entry(k).or_default() += v;
        }
        ll += part_ll;
    }
    (total, ll)
}

fn maximization(counts: &Counts) -> Counts {
    let mut keys: Vec<_> = counts.iter().map(|(&k, &v)| (k, v)).collect();
    keys.sort_by_key(|(k, _)| *k);
    let mut totals: HashMap<u32, f64> = HashMap::new();
    for &((s, _), v) in &keys {
        *totals.entry(s).or_default() += v;
    }
    keys.into_iter().map(|((s, t), v)| ((s, t), v / totals[&s])).collect()
}

/// Trains IBM Model 1 t(target | source) with an empty source word. The
/// table starts uniform over the target forms co-occurring with each source
/// form.
pub fn train_ibm1(pairs: &[VersePair], iterations: usize) -> Result<Ibm1Model> {
    if iterations == 0 {
        return Err(Error::Parameter("iterations must be at least 1".into()));
    }
    let mut vocab = VocabBuilder::default();
    let sents: Vec<Encoded> = pairs
        .iter()
        .map(|p| {
            let mut source = vec![0];
            source.extend(p.source.forms().map(|w| vocab.source(w)));
            let target = p.target.forms().map(|w| vocab.target(w)).collect();
            Encoded { source, target }
        })
        .collect();
    if vocab.target_vocab.is_empty() {
        return Err(Error::Parameter("empty vocabulary".into()));
    }

    let mut cooc: HashMap<u32, BTreeSet<u32>> = HashMap::new();
    for sent in &sents {
        for &s in &sent.source {
            cooc.entry(s).or_default().extend(sent.target.iter().copied());
        }
    }
    let mut probs: Counts = HashMap::new();
    for (s, targets) in &cooc {
        let p = 1.0 / targets.len() as f64;
        for &t in targets {
            probs.insert((*s, t), p);
        }
    }

    let mut log_likelihoods = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let (counts, ll) = expectation_all(&sents, &probs);
        log_likelihoods.push(ll);
        probs = maximization(&counts);
    }
    let (_, ll) = expectation_all(&sents, &probs);
    log_likelihoods.push(ll);
    Ok(Ibm1Model {
        table: vocab.finish(probs),
        log_likelihoods,
    })
}

/// Links each target token to its most probable source token; the empty
/// word wins ties (it sits at position -1) and produces no link.
pub fn align_pair(table: &TranslationTable, source: &Verse, target: &Verse) -> Alignment {
    let mut links = BTreeSet::new();
    for (t, tf) in target.forms().enumerate() {
        let mut best = table.prob(None, tf);
        let mut best_pos: Option<usize> = None;
        for (s, sf) in source.forms().enumerate() {
            let p = table.prob(Some(sf), tf);
            if p > best {
                best = p;
                best_pos = Some(s);
            }
        }
        if let Some(s) = best_pos {
            links.insert((t, s));
        }
    }
    Alignment { links }
}

pub fn align_corpus(table: &TranslationTable, pairs: &[VersePair]) -> Vec<Alignment> {
    #[cfg(feature = "parallel")]
    let iter = pairs.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = pairs.iter();
    iter.map(|p| align_pair(table, &p.source, &p.target)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VerseId;

    fn pair(src: &str, tgt: &str) -> VersePair {
        let id = VerseId::new("T", 1, 1);
        VersePair {
            source: Verse::from_text(id.clone(), src),
            target: Verse::from_text(id, tgt),
        }
    }

    #[test]
    fn parses_figure_style_lines() {
        let a = parse_alignment_file("0-0 1-2 2-3\n", LinkOrder::TargetSource).unwrap();
        assert_eq!(a, vec![Alignment::new([(0, 0), (1, 2), (2, 3)])]);
        let a = parse_alignment_file("1 0-0 1-2 2-3 3-5 4-5 5-5 5-6\n", LinkOrder::TargetSource).unwrap();
        assert_eq!(a[0].sources_of(5).collect::<Vec<_>>(), [5, 6]);
        assert_eq!(a[0].sources_of(1).collect::<Vec<_>>(), [2]);
        assert_eq!(a[0].one_to_many(), 1);
    }

    #[test]
    fn empty_line_is_empty_alignment() {
        let a = parse_alignment_file("\n0-0\n", LinkOrder::TargetSource).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a[0].links.is_empty());
        assert_eq!(parse_alignment_file("", LinkOrder::TargetSource).unwrap().len(), 0);
    }

    #[test]
    fn one_to_many_link() {
        let a = parse_alignment_file("5-5 5-6", LinkOrder::TargetSource).unwrap();
        assert_eq!(a[0].sources_of(5).collect::<Vec<_>>(), [5, 6]);
    }

    #[test]
    fn source_target_order_flips() {
        let a = parse_alignment_file("0-1 2-3", LinkOrder::SourceTarget).unwrap();
        assert_eq!(a[0], Alignment::new([(1, 0), (3, 2)]));
    }

    #[test]
    fn malformed_tokens() {
        for (text, frag) in [("0-0 x-1", "x-1"), ("0-0 1:2", "1:2"), ("0-", "0-"), ("-1-2", "-1-2"), ("1--2", "1--2")] {
            match parse_alignment_file(text, LinkOrder::TargetSource) {
                Err(Error::Format { line: 1, message }) => assert!(message.contains(frag), "{message}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn bounds_checked_against_pair() {
        let p = pair("a b", "c");
        assert!(Alignment::new([(0, 1)]).check_bounds(&p).is_ok());
        assert!(Alignment::new([(1, 0)]).check_bounds(&p).is_err());
        assert!(Alignment::new([(0, 2)]).check_bounds(&p).is_err());
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(0.5, 12), "0.5");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_sig(1.234e-7, 12), "1.234e-07");
        assert_eq!(format_sig(0.0, 12), "0");
    }

    #[test]
    fn identical_single_tokens() {
        let m = train_ibm1(&[pair("a", "a")], 5).unwrap();
        assert_eq!(m.table.prob(Some("a"), "a"), 1.0);
        assert_eq!(m.table.prob(None, "a"), 1.0);
    }

    #[test]
    fn more_iterations_never_lower_likelihood() {
        let pairs = [pair("the house", "la maison"), pair("the", "la")];
        let one = train_ibm1(&pairs, 1).unwrap();
        let two = train_ibm1(&pairs, 2).unwrap();
        assert!(two.log_likelihoods.last().unwrap() >= one.log_likelihoods.last().unwrap());
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(train_ibm1(&[], 3).is_err());
        assert!(train_ibm1(&[pair("a", "b")], 0).is_err());
    }

    #[test]
    fn table_rows_normalize() {
        let pairs = [pair("the house", "la maison"), pair("the", "la"), pair("a house", "une maison")];
        let m = train_ibm1(&pairs, 4).unwrap();
        let mut sums: HashMap<&str, f64> = HashMap::new();
        for (s, _, p) in m.table.entries() {
            *sums.entry(s).or_default() += p;
        }
        for (s, total) in sums {
            assert!((total - 1.0).abs() < 1e-9, "{s}: {total}");
        }
    }

    #[test]
    fn tsv_round_trip() {
        let pairs = [pair("the house", "la maison"), pair("the", "la")];
        let m = train_ibm1(&pairs, 3).unwrap();
        let text = m.table.to_tsv();
        let back = TranslationTable::from_tsv(&text).unwrap();
        assert_eq!(back.to_tsv(), text);
        assert!(text.lines().next().unwrap().starts_with("<null>\t"));
    }

    #[test]
    fn diagonal_table_aligns_diagonally() {
        let tsv = "a\tx\t0.8\na\ty\t0.1\na\tz\t0.1\nb\tx\t0.1\nb\ty\t0.8\nb\tz\t0.1\nc\tx\t0.1\nc\ty\t0.1\nc\tz\t0.8\n<null>\tx\t0.3\n<null>\ty\t0.3\n<null>\tz\t0.3\n";
        let table = TranslationTable::from_tsv(tsv).unwrap();
        let p = pair("a b c", "x y z");
        assert_eq!(align_pair(&table, &p.source, &p.target), Alignment::new([(0, 0), (1, 1), (2, 2)]));
    }

    #[test]
    fn unknown_target_unlinked_and_ties_to_lower_index() {
        let table = TranslationTable::from_tsv("a\tx\t0.5\nb\tx\t0.5\n").unwrap();
        let p = pair("a b", "x q");
        assert_eq!(align_pair(&table, &p.source, &p.target), Alignment::new([(0, 0)]));
        let p = pair("b a", "x");
        assert_eq!(align_pair(&table, &p.source, &p.target), Alignment::new([(0, 0)]));
    }
}
