//! Core data types and the plain-text formats shared by every pipeline stage.
//!
//! Three formats live here:
//!
//! * tagset files: one `LABEL<TAB>description` per line, `#` comments allowed;
//! * vertical corpora: blank-line separated blocks, each opening with
//!   `# id=<book>:<chapter>:<verse>[suffix]` followed by `form<TAB>tag` (one
//!   column) or `form<TAB>initial<TAB>truth` (two columns) lines;
//! * id-prefixed parallel text: `<verse id><TAB><space separated tokens>`.
//!
//! All of them are UTF-8 with LF line endings.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label reserved for target tokens that received no projected tag.
pub const UNK: &str = "UNK";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tag(String);

impl Tag {
    pub fn new(label: impl Into<String>) -> Result<Tag> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::format(0, "empty tag label"));
        }
        if label.chars().any(char::is_whitespace) {
            return Err(Error::format(0, format!("tag label {label:?} contains whitespace")));
        }
        Ok(Tag(label))
    }

    pub fn unk() -> Tag {
        Tag(UNK.to_string())
    }

    pub fn is_unk(&self) -> bool {
        self.0 == UNK
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Tag {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Tag {
    type Error = Error;
    fn try_from(value: String) -> Result<Tag> {
        Tag::new(value)
    }
}

impl From<Tag> for String {
    fn from(tag: Tag) -> String {
        tag.0
    }
}

impl FromStr for Tag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Tag> {
        Tag::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TagsetEntry {
    pub label: Tag,
    pub description: String,
}

/// A closed, ordered inventory of tag labels.
#[derive(Clone, Debug, Serialize)]
pub struct Tagset {
    pub name: String,
    pub entries: Vec<TagsetEntry>,
    #[serde(skip)]
    members: HashSet<String>,
}

impl PartialEq for Tagset {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.entries == other.entries
    }
}

impl Tagset {
    /// Parses `LABEL<TAB>description` lines. Blank lines and lines starting
    /// with `#` are skipped. The reserved `UNK` label is refused.
    pub fn parse(name: impl Into<String>, content: &str) -> Result<Tagset> {
        let mut entries = Vec::new();
        let mut members = HashSet::new();
        for (idx, raw) in content.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (label, description) = match raw.split_once('\t') {
                Some((l, d)) => (l, d),
                None => (raw, ""),
            };
            if label.is_empty() {
                return Err(Error::format(line_no, "empty tag label"));
            }
            let tag = Tag::new(label).map_err(|_| {
                Error::format(line_no, format!("invalid tag label {label:?}"))
            })?;
            if tag.is_unk() {
                return Err(Error::format(line_no, "label UNK is reserved"));
            }
            if !members.insert(label.to_string()) {
                return Err(Error::DuplicateLabel {
                    label: label.to_string(),
                    line: line_no,
                });
            }
            entries.push(TagsetEntry {
                label: tag,
                description: description.to_string(),
            });
        }
        Ok(Tagset {
            name: name.into(),
            entries,
            members,
        })
    }

    pub fn from_labels<I, S>(name: impl Into<String>, labels: I) -> Result<Tagset>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let content: String = labels
            .into_iter()
            .map(|l| format!("{}\t\n", l.as_ref()))
            .collect();
        Tagset::parse(name, &content)
    }

    /// The target tagset shipped with the crate (42 Igbo tags).
    pub fn igbo() -> Tagset {
        Tagset::parse("igbo", include_str!("../data/igbo.tagset"))
            .expect("bundled igbo tagset is valid")
    }

    /// A Penn Treebank style English tagset used as the default source side.
    pub fn penn() -> Tagset {
        Tagset::parse("penn", include_str!("../data/penn.tagset"))
            .expect("bundled penn tagset is valid")
    }

    pub fn contains(&self, label: &str) -> bool {
        self.members.contains(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &Tag> {
        self.entries.iter().map(|e| &e.label)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(e.label.as_str());
            out.push('\t');
            out.push_str(&e.description);
            out.push('\n');
        }
        out
    }
}

/// `book:chapter:verse` with an optional fragment suffix (`Mak:16:8a`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VerseId {
    pub book: String,
    pub chapter: u32,
    pub verse: u32,
    pub suffix: Option<char>,
}

impl VerseId {
    pub fn new(book: impl Into<String>, chapter: u32, verse: u32) -> VerseId {
        VerseId {
            book: book.into(),
            chapter,
            verse,
            suffix: None,
        }
    }

    pub fn with_suffix(&self, suffix: Option<char>) -> VerseId {
        VerseId {
            suffix,
            ..self.clone()
        }
    }

    /// The id with any fragment suffix removed.
    pub fn base(&self) -> VerseId {
        self.with_suffix(None)
    }
}

impl fmt::Display for VerseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.book, self.chapter, self.verse)?;
        if let Some(s) = self.suffix {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for VerseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<VerseId> {
        let bad = || Error::format(0, format!("invalid verse id {s:?}"));
        let mut parts = s.rsplitn(3, ':');
        let verse_part = parts.next().ok_or_else(bad)?;
        let chapter_part = parts.next().ok_or_else(bad)?;
        let book = parts.next().ok_or_else(bad)?;
        if book.is_empty() || book.chars().any(char::is_whitespace) {
            return Err(bad());
        }
        let chapter: u32 = chapter_part.parse().map_err(|_| bad())?;
        let (digits, suffix) = match verse_part.chars().last() {
            Some(c) if c.is_ascii_lowercase() => (&verse_part[..verse_part.len() - 1], Some(c)),
            _ => (verse_part, None),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let verse: u32 = digits.parse().map_err(|_| bad())?;
        if chapter == 0 || verse == 0 || chapter_part.starts_with('+') {
            return Err(bad());
        }
        Ok(VerseId {
            book: book.to_string(),
            chapter,
            verse,
            suffix,
        })
    }
}

impl TryFrom<String> for VerseId {
    type Error = Error;
    fn try_from(value: String) -> Result<VerseId> {
        value.parse()
    }
}

impl From<VerseId> for String {
    fn from(id: VerseId) -> String {
        id.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    /// Current (or initial-state) tag.
    pub tag: Option<Tag>,
    /// Truth-state tag; only set in two-column corpora.
    pub truth: Option<Tag>,
}

impl Token {
    pub fn new(form: impl Into<String>) -> Token {
        Token {
            form: form.into(),
            tag: None,
            truth: None,
        }
    }

    pub fn tagged(form: impl Into<String>, tag: Tag) -> Token {
        Token {
            form: form.into(),
            tag: Some(tag),
            truth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verse {
    pub id: VerseId,
    pub tokens: Vec<Token>,
}

impl Verse {
    pub fn new(id: VerseId, tokens: Vec<Token>) -> Verse {
        Verse { id, tokens }
    }

    /// Untagged verse from whitespace separated text.
    pub fn from_text(id: VerseId, text: &str) -> Verse {
        Verse {
            id,
            tokens: text.split_whitespace().map(Token::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Columns {
    One,
    Two,
}

impl Columns {
    pub fn count(self) -> usize {
        match self {
            Columns::One => 1,
            Columns::Two => 2,
        }
    }

    pub fn from_count(n: usize) -> Result<Columns> {
        match n {
            1 => Ok(Columns::One),
            2 => Ok(Columns::Two),
            n => Err(Error::Parameter(format!("tag column count must be 1 or 2, got {n}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub verses: Vec<Verse>,
    pub tagset_name: String,
    pub columns: Columns,
}

impl TaggedCorpus {
    /// Checks id uniqueness, non-empty verses and tag presence for `columns`.
    pub fn new(verses: Vec<Verse>, columns: Columns, tagset_name: impl Into<String>) -> Result<Self> {
        let corpus = TaggedCorpus {
            verses,
            tagset_name: tagset_name.into(),
            columns,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for v in &self.verses {
            if !seen.insert(&v.id) {
                return Err(Error::integrity(&v.id, "duplicate verse id"));
            }
            if v.tokens.is_empty() {
                return Err(Error::integrity(&v.id, "verse has no tokens"));
            }
            for (pos, t) in v.tokens.iter().enumerate() {
                if t.tag.is_none() || (self.columns == Columns::Two && t.truth.is_none()) {
                    return Err(Error::Serialize {
                        verse: v.id.to_string(),
                        position: pos,
                        message: "missing tag column".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn token_count(&self) -> usize {
        self.verses.iter().map(Verse::len).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = &VerseId> {
        self.verses.iter().map(|v| &v.id)
    }

    pub fn index(&self) -> HashMap<&VerseId, usize> {
        self.verses.iter().enumerate().map(|(i, v)| (&v.id, i)).collect()
    }

    pub fn get(&self, id: &VerseId) -> Option<&Verse> {
        self.verses.iter().find(|v| &v.id == id)
    }

    /// One-column copy carrying the current tags only.
    pub fn current_column(&self) -> TaggedCorpus {
        let verses = self
            .verses
            .iter()
            .map(|v| Verse {
                id: v.id.clone(),
                tokens: v
                    .tokens
                    .iter()
                    .map(|t| Token {
                        form: t.form.clone(),
                        tag: t.tag.clone(),
                        truth: None,
                    })
                    .collect(),
            })
            .collect();
        TaggedCorpus {
            verses,
            tagset_name: self.tagset_name.clone(),
            columns: Columns::One,
        }
    }
}

const ID_HEADER: &str = "# id=";
const TAGSET_HEADER: &str = "# tagset=";

/// Parses the vertical format. A leading `# tagset=<name>` line is accepted
/// before the first block.
pub fn parse_vertical(content: &str, expected: Columns) -> Result<TaggedCorpus> {
    let mut verses: Vec<Verse> = Vec::new();
    let mut seen: HashSet<VerseId> = HashSet::new();
    let mut tagset_name = String::new();
    let mut current: Option<Verse> = None;
    let fields_per_line = 1 + expected.count();

    let finish = |verse: Option<Verse>, line: usize, verses: &mut Vec<Verse>| -> Result<()> {
        if let Some(v) = verse {
            if v.tokens.is_empty() {
                return Err(Error::format(line, format!("verse {} has no tokens", v.id)));
            }
            verses.push(v);
        }
        Ok(())
    };

    for (idx, line) in content.split('\n').enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            finish(current.take(), line_no, &mut verses)?;
            continue;
        }
        if let Some(rest) = line.strip_prefix(ID_HEADER) {
            finish(current.take(), line_no, &mut verses)?;
            let id: VerseId = rest
                .parse()
                .map_err(|_| Error::format(line_no, format!("invalid verse id {rest:?}")))?;
            if !seen.insert(id.clone()) {
                return Err(Error::format(line_no, format!("duplicate verse id {id}")));
            }
            current = Some(Verse::new(id, Vec::new()));
            continue;
        }
        if let Some(rest) = line.strip_prefix(TAGSET_HEADER) {
            if verses.is_empty() && current.is_none() && tagset_name.is_empty() {
                tagset_name = rest.to_string();
                continue;
            }
            return Err(Error::format(line_no, "tagset header must precede all verses"));
        }
        let Some(verse) = current.as_mut() else {
            return Err(Error::format(line_no, "token line outside a verse block"));
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != fields_per_line {
            return Err(Error::format(
                line_no,
                format!(
                    "verse {}: expected {} tab-separated fields, found {}",
                    verse.id,
                    fields_per_line,
                    fields.len()
                ),
            ));
        }
        if fields[0].is_empty() || fields[0].chars().any(char::is_whitespace) {
            return Err(Error::format(line_no, format!("verse {}: invalid token form", verse.id)));
        }
        let tag = |s: &str| {
            Tag::new(s).map_err(|_| {
                Error::format(line_no, format!("verse {}: invalid tag {s:?}", verse.id))
            })
        };
        let token = Token {
            form: fields[0].to_string(),
            tag: Some(tag(fields[1])?),
            truth: match expected {
                Columns::One => None,
                Columns::Two => Some(tag(fields[2])?),
            },
        };
        verse.tokens.push(token);
    }
    let last_line = content.split('\n').count();
    finish(current.take(), last_line, &mut verses)?;
    Ok(TaggedCorpus {
        verses,
        tagset_name,
        columns: expected,
    })
}

/// Exact inverse of [`parse_vertical`]. Blocks are separated by a single
/// blank line and the output ends with one LF.
pub fn serialize_vertical(corpus: &TaggedCorpus) -> Result<String> {
    let mut out = String::new();
    if !corpus.tagset_name.is_empty() {
        out.push_str(TAGSET_HEADER);
        out.push_str(&corpus.tagset_name);
        out.push('\n');
    }
    for (vi, verse) in corpus.verses.iter().enumerate() {
        if vi > 0 {
            out.push('\n');
        }
        out.push_str(ID_HEADER);
        out.push_str(&verse.id.to_string());
        out.push('\n');
        for (pos, token) in verse.tokens.iter().enumerate() {
            let missing = |what: &str| Error::Serialize {
                verse: verse.id.to_string(),
                position: pos,
                message: format!("missing {what} tag"),
            };
            let tag = token.tag.as_ref().ok_or_else(|| missing("current"))?;
            out.push_str(&token.form);
            out.push('\t');
            out.push_str(tag.as_str());
            if corpus.columns == Columns::Two {
                let truth = token.truth.as_ref().ok_or_else(|| missing("truth"))?;
                out.push('\t');
                out.push_str(truth.as_str());
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VersePair {
    pub source: Verse,
    pub target: Verse,
}

impl VersePair {
    pub fn id(&self) -> &VerseId {
        &self.target.id
    }
}

/// Parallel files that did not line up: the matched pairs plus every id
/// found on one side only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelGap {
    pub pairs: Vec<VersePair>,
    pub missing_in_source: Vec<VerseId>,
    pub missing_in_target: Vec<VerseId>,
}

impl fmt::Display for ParallelGap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ids: &[VerseId]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "parallel texts do not correspond")?;
        if !self.missing_in_target.is_empty() {
            write!(f, "; missing in target: {}", join(&self.missing_in_target))?;
        }
        if !self.missing_in_source.is_empty() {
            write!(f, "; missing in source: {}", join(&self.missing_in_source))?;
        }
        Ok(())
    }
}

fn parse_parallel_side(content: &str) -> Result<Vec<Verse>> {
    let mut verses = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').unwrap_or((line, ""));
        let id: VerseId = id
            .parse()
            .map_err(|_| Error::format(line_no, format!("invalid verse id {id:?}")))?;
        let verse = Verse::from_text(id, text);
        if verse.is_empty() {
            return Err(Error::format(line_no, format!("verse {} has no tokens", verse.id)));
        }
        if !seen.insert(verse.id.clone()) {
            return Err(Error::format(line_no, format!("duplicate verse id {}", verse.id)));
        }
        verses.push(verse);
    }
    Ok(verses)
}

/// Pairs two id-prefixed texts by verse id, in source order. Any id present
/// on one side only yields [`Error::ParallelGap`] carrying the full report.
pub fn parse_parallel(source: &str, target: &str) -> Result<Vec<VersePair>> {
    let source = parse_parallel_side(source)?;
    let target = parse_parallel_side(target)?;
    let source_ids: HashSet<&VerseId> = source.iter().map(|v| &v.id).collect();
    let mut missing_in_source: BTreeSet<VerseId> = BTreeSet::new();
    for v in &target {
        if !source_ids.contains(&v.id) {
            missing_in_source.insert(v.id.clone());
        }
    }
    let mut by_id: HashMap<VerseId, Verse> = target.into_iter().map(|v| (v.id.clone(), v)).collect();
    let mut pairs = Vec::new();
    let mut missing_in_target = BTreeSet::new();
    for s in source {
        match by_id.remove(&s.id) {
            Some(t) => pairs.push(VersePair { source: s, target: t }),
            None => {
                missing_in_target.insert(s.id.clone());
            }
        }
    }
    if missing_in_source.is_empty() && missing_in_target.is_empty() {
        Ok(pairs)
    } else {
        Err(Error::ParallelGap(Box::new(ParallelGap {
            pairs,
            missing_in_source: missing_in_source.into_iter().collect(),
            missing_in_target: missing_in_target.into_iter().collect(),
        })))
    }
}

/// Writes one side of a parallel corpus in the id-prefixed format.
pub fn serialize_parallel_side<'a>(verses: impl IntoIterator<Item = &'a Verse>) -> String {
    let mut out = String::new();
    for v in verses {
        out.push_str(&v.id.to_string());
        out.push('\t');
        for (i, f) in v.forms().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(f);
        }
        out.push('\n');
    }
    out
}

/// Copies tags from a one-column corpus onto the source side of each pair.
/// Forms must agree token for token.
pub fn attach_source_tags(pairs: &mut [VersePair], tagged: &TaggedCorpus) -> Result<()> {
    let index = tagged.index();
    for pair in pairs.iter_mut() {
        let id = &pair.source.id;
        let tv = index
            .get(id)
            .map(|&i| &tagged.verses[i])
            .ok_or_else(|| Error::integrity(id, "no source tags for verse"))?;
        if tv.len() != pair.source.len() {
            return Err(Error::integrity(
                id,
                format!("source has {} tokens, tag file has {}", pair.source.len(), tv.len()),
            ));
        }
        for (pos, (tok, tagged_tok)) in pair.source.tokens.iter_mut().zip(&tv.tokens).enumerate() {
            if tok.form != tagged_tok.form {
                return Err(Error::integrity(
                    id,
                    format!("token {pos}: form {:?} differs from tagged {:?}", tok.form, tagged_tok.form),
                ));
            }
            tok.tag = tagged_tok.tag.clone();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(s: &str) -> Tag {
        Tag::new(s).unwrap()
    }

    #[test]
    fn tagset_parses_single_entry() {
        let ts = Tagset::parse("t", "NNC\tCommon noun").unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.entries[0].label, tag("NNC"));
        assert_eq!(ts.entries[0].description, "Common noun");
        assert!(ts.contains("NNC"));
        assert!(!ts.contains("nnc"));
    }

    #[test]
    fn tagset_rejects_duplicates_and_empty_labels() {
        match Tagset::parse("t", "PREP\tPreposition\nPREP\tAgain") {
            Err(Error::DuplicateLabel { label, line }) => {
                assert_eq!(label, "PREP");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Tagset::parse("t", "\tno label"),
            Err(Error::Format { line: 1, .. })
        ));
        assert!(Tagset::parse("t", "").unwrap().is_empty());
    }

    #[test]
    fn unk_is_never_a_member() {
        assert!(Tagset::parse("t", "UNK\tunknown").is_err());
        assert!(!Tagset::igbo().contains(UNK));
        assert!(!Tagset::penn().contains(UNK));
    }

    #[test]
    fn bundled_igbo_tagset() {
        let ts = Tagset::igbo();
        assert_eq!(ts.len(), 42);
        assert_eq!(ts.entries[0].label.as_str(), "NNP");
        assert_eq!(ts.entries.last().unwrap().label.as_str(), "VrV");
        for l in ["NNC", "PREP", "CD", "VrV", "SYM"] {
            assert!(ts.contains(l), "{l}");
        }
    }

    #[test]
    fn verse_id_round_trip() {
        for s in ["Matiu:1:1", "Mak:16:8a", "1Jon:2:3", "a:b:1:2"] {
            let id: VerseId = s.parse().unwrap();
            assert_eq!(id.to_string(), s);
        }
        let id: VerseId = "Mak:16:8b".parse().unwrap();
        assert_eq!(id.suffix, Some('b'));
        assert_eq!(id.base().to_string(), "Mak:16:8");
        for bad in ["Matiu:0:1", "Matiu:1", ":1:1", "Matiu:1:1A", "Matiu:1:x", "M t:1:1"] {
            assert!(bad.parse::<VerseId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn vertical_one_column() {
        let c = parse_vertical("# id=Matiu:1:1\nMatiu\tNNP\n1\tCD", Columns::One).unwrap();
        assert_eq!(c.verses.len(), 1);
        let v = &c.verses[0];
        assert_eq!(v.id, VerseId::new("Matiu", 1, 1));
        assert_eq!(v.tokens[0], Token::tagged("Matiu", tag("NNP")));
        assert_eq!(v.tokens[1], Token::tagged("1", tag("CD")));
    }

    #[test]
    fn vertical_two_columns() {
        let c = parse_vertical("# id=Matiu:1:1\nAkwukwo\tNN\tNNC\n", Columns::Two).unwrap();
        let t = &c.verses[0].tokens[0];
        assert_eq!(t.tag, Some(tag("NN")));
        assert_eq!(t.truth, Some(tag("NNC")));
    }

    #[test]
    fn vertical_errors() {
        let err = parse_vertical("# id=Matiu:1:1\nAkwukwo\tNN\n", Columns::Two).unwrap_err();
        match err {
            Error::Format { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("Matiu:1:1"));
            }
            e => panic!("{e:?}"),
        }
        assert!(parse_vertical("# id=A:1:1\nx\tT\n\n# id=A:1:1\ny\tT\n", Columns::One).is_err());
        assert!(parse_vertical("# id=A:1:1\n\n# id=A:1:2\ny\tT\n", Columns::One).is_err());
        assert!(parse_vertical("x\tT\n", Columns::One).is_err());
    }

    #[test]
    fn serialize_layout() {
        let text = "# id=A:1:1\nx\tT\n\n# id=A:1:2\ny\tU\nz\tT\n";
        let c = parse_vertical(text, Columns::One).unwrap();
        assert_eq!(serialize_vertical(&c).unwrap(), text);
        let one = parse_vertical("# id=A:1:1\nx\tT\n", Columns::One).unwrap();
        let s = serialize_vertical(&one).unwrap();
        assert!(s.ends_with("T\n") && !s.ends_with("\n\n"));
        assert_eq!(serialize_vertical(&TaggedCorpus::new(vec![], Columns::One, "").unwrap()).unwrap(), "");
    }

    #[test]
    fn serialize_missing_truth_fails() {
        let mut c = parse_vertical("# id=A:1:1\nx\tT\tU\ny\tT\tT\n", Columns::Two).unwrap();
        c.verses[0].tokens[1].truth = None;
        match serialize_vertical(&c) {
            Err(Error::Serialize { verse, position, .. }) => {
                assert_eq!(verse, "A:1:1");
                assert_eq!(position, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tagset_header_round_trips() {
        let text = "# tagset=igbo\n# id=A:1:1\nx\tNNC\n";
        let c = parse_vertical(text, Columns::One).unwrap();
        assert_eq!(c.tagset_name, "igbo");
        assert_eq!(serialize_vertical(&c).unwrap(), text);
    }

    #[test]
    fn parallel_pairs_by_id() {
        let pairs = parse_parallel(
            "Matiu:1:2\tAbraham became father to Isaac ;\n",
            "Matiu:1:2\tEbreham muru Aizik ;\n",
        )
        .unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].source.len(), 6);
        assert_eq!(pairs[0].target.forms().collect::<Vec<_>>(), ["Ebreham", "muru", "Aizik", ";"]);
    }

    #[test]
    fn parallel_empty_verse_is_format_error() {
        assert!(matches!(
            parse_parallel("Matiu:1:1\t\n", "Matiu:1:1\t\n"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn parallel_gap_lists_all_ids() {
        let src = (1..=5).map(|v| format!("Matiu:1:{v}\tw{v}\n")).collect::<String>();
        let tgt = [1, 2, 3, 4, 6].iter().map(|v| format!("Matiu:1:{v}\tx{v}\n")).collect::<String>();
        match parse_parallel(&src, &tgt) {
            Err(Error::ParallelGap(gap)) => {
                assert_eq!(gap.pairs.len(), 4);
                assert_eq!(gap.missing_in_target, vec![VerseId::new("Matiu", 1, 5)]);
                assert_eq!(gap.missing_in_source, vec![VerseId::new("Matiu", 1, 6)]);
                assert!(gap.to_string().contains("Matiu:1:5"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn attach_tags_checks_forms() {
        let mut pairs = parse_parallel("A:1:1\ta b\n", "A:1:1\tc d\n").unwrap();
        let tagged = parse_vertical("# id=A:1:1\na\tX\nb\tY\n", Columns::One).unwrap();
        attach_source_tags(&mut pairs, &tagged).unwrap();
        assert_eq!(pairs[0].source.tokens[1].tag, Some(tag("Y")));
        let wrong = parse_vertical("# id=A:1:1\na\tX\nq\tY\n", Columns::One).unwrap();
        assert!(attach_source_tags(&mut pairs, &wrong).is_err());
    }
}
