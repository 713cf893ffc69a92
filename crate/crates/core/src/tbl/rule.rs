use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::corpus::{Tag, TaggedCorpus};
use crate::error::{Error, Result};

use super::template::{Field, Slot, Template};

/// Context value seen at positions outside the verse.
pub const BOUNDARY: &str = "<OOB>";

pub const DEFAULT_THRESHOLD: i64 = 2;

/// Rewrites `from` to `to` where every template slot matches `values`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub from: Tag,
    pub to: Tag,
    pub template: Template,
    pub values: Vec<String>,
    pub score: i64,
}

impl Rule {
    pub fn new(from: Tag, to: Tag, template: Template, values: Vec<String>) -> Result<Rule> {
        if from == to {
            return Err(Error::Parameter(format!("rule rewrites {from} to itself")));
        }
        if values.len() != template.slots.len() {
            return Err(Error::Parameter(format!(
                "template {} has {} slots, got {} values",
                template.id,
                template.slots.len(),
                values.len()
            )));
        }
        Ok(Rule {
            from,
            to,
            template,
            values,
            score: 0,
        })
    }

    /// Compares by (template id, from, to, slot values), ignoring score.
    pub fn canonical_cmp(&self, other: &Rule) -> Ordering {
        (&self.template.id, &self.from, &self.to, &self.values).cmp(&(
            &other.template.id,
            &other.from,
            &other.to,
            &other.values,
        ))
    }

    /// True iff the tag at `pos` is `from` and every slot matches.
    pub fn applies(&self, words: &[&str], tags: &[&str], pos: usize) -> bool {
        if tags[pos] != self.from.as_str() {
            return false;
        }
        self.template
            .slots
            .iter()
            .zip(&self.values)
            .all(|(slot, value)| context_value(words, tags, pos, *slot) == value)
    }

    pub fn to_line(&self) -> String {
        let mut ctx = String::new();
        for (i, (slot, value)) in self.template.slots.iter().zip(&self.values).enumerate() {
            if i > 0 {
                ctx.push(';');
            }
            let _ = write!(ctx, "{slot}={}", escape_value(value));
        }
        format!(
            "from={} to={} tpl={} ctx={} score={}",
            self.from, self.to, self.template.id, ctx, self.score
        )
    }

    pub fn parse_line(line: &str) -> Result<Rule> {
        let mut from = None;
        let mut to = None;
        let mut tpl = None;
        let mut ctx = None;
        let mut score = None;
        for field in line.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::format(0, format!("malformed rule field {field:?}")))?;
            let slot = match key {
                "from" => &mut from,
                "to" => &mut to,
                "tpl" => &mut tpl,
                "ctx" => &mut ctx,
                "score" => &mut score,
                other => return Err(Error::format(0, format!("unknown rule field {other:?}"))),
            };
            if slot.replace(value).is_some() {
                return Err(Error::format(0, format!("repeated rule field {key:?}")));
            }
        }
        fn need<'a>(v: Option<&'a str>, name: &str) -> Result<&'a str> {
            v.ok_or_else(|| Error::format(0, format!("rule lacks {name}=")))
        }
        let from = Tag::new(need(from, "from")?)?;
        let to = Tag::new(need(to, "to")?)?;
        let tpl_id = need(tpl, "tpl")?;
        let score: i64 = need(score, "score")?
            .parse()
            .map_err(|_| Error::format(0, "score must be an integer"))?;
        let mut slots = Vec::new();
        let mut values = Vec::new();
        for part in need(ctx, "ctx")?.split(';') {
            let close = part
                .find("]=")
                .ok_or_else(|| Error::format(0, format!("malformed context {part:?}")))?;
            slots.push(part[..=close].parse::<Slot>()?);
            values.push(unescape_value(&part[close + 2..])?);
        }
        let template = Template::new(tpl_id, slots)?;
        let mut rule = Rule::new(from, to, template, values)?;
        rule.score = score;
        Ok(rule)
    }
}

fn context_value<'a>(words: &[&'a str], tags: &[&'a str], pos: usize, slot: Slot) -> &'a str {
    let q = pos as isize + slot.offset as isize;
    if q < 0 || q as usize >= words.len() {
        return BOUNDARY;
    }
    match slot.field {
        Field::Word => words[q as usize],
        Field::Tag => tags[q as usize],
    }
}

fn escape_value(v: &str) -> String {
    if v == BOUNDARY {
        return v.to_string();
    }
    let mut out = String::with_capacity(v.len());
    for (i, c) in v.chars().enumerate() {
        match c {
            '%' => out.push_str("%25"),
            ';' => out.push_str("%3B"),
            '<' if i == 0 => out.push_str("%3C"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_value(v: &str) -> Result<String> {
    let mut out = String::with_capacity(v.len());
    let mut rest = v;
    while let Some(i) = rest.find('%') {
        out.push_str(&rest[..i]);
        let code = rest.get(i + 1..i + 3).ok_or_else(|| Error::format(0, format!("bad escape in {v:?}")))?;
        out.push(match code {
            "25" => '%',
            "3B" => ';',
            "3C" => '<',
            _ => return Err(Error::format(0, format!("bad escape in {v:?}"))),
        });
        rest = &rest[i + 3..];
    }
    out.push_str(rest);
    if out.is_empty() {
        return Err(Error::format(0, "empty context value"));
    }
    Ok(out)
}

/// A learned rule sequence. Order is significant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleList {
    pub rules: Vec<Rule>,
    pub threshold: i64,
}

impl RuleList {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# transformation rules, applied top to bottom\n");
        out.push_str("# scoring=frozen-state application=left-to-right-cascade\n");
        let _ = writeln!(out, "# threshold={}", self.threshold);
        for r in &self.rules {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse(content: &str) -> Result<RuleList> {
        let mut rules = Vec::new();
        let mut threshold = DEFAULT_THRESHOLD;
        for (idx, line) in content.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# threshold=") {
                threshold = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(idx + 1, "threshold must be an integer"))?;
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = Rule::parse_line(line).map_err(|e| match e {
                Error::Format { message, .. } => Error::format(idx + 1, message),
                other => Error::format(idx + 1, other.to_string()),
            })?;
            rules.push(rule);
        }
        Ok(RuleList { rules, threshold })
    }
}

fn verse_columns(corpus: &TaggedCorpus) -> Vec<(Vec<&str>, Vec<&str>, Vec<Option<&str>>)> {
    corpus
        .verses
        .iter()
        .map(|v| {
            let words = v.tokens.iter().map(|t| t.form.as_str()).collect();
            let tags = v
                .tokens
                .iter()
                .map(|t| t.tag.as_ref().map_or(BOUNDARY, Tag::as_str))
                .collect();
            let truth = v.tokens.iter().map(|t| t.truth.as_ref().map(Tag::as_str)).collect();
            (words, tags, truth)
        })
        .collect()
}

/// Fixed minus broken over every position where the rule fires against the
/// corpus as it stands (no cascading between positions).
pub fn score_rule(rule: &Rule, corpus: &TaggedCorpus) -> i64 {
    let mut score = 0;
    for (words, tags, truth) in verse_columns(corpus) {
        for pos in 0..words.len() {
            if !rule.applies(&words, &tags, pos) {
                continue;
            }
            let Some(truth) = truth[pos] else { continue };
            if truth == rule.to.as_str() {
                score += 1;
            } else if truth == rule.from.as_str() {
                score -= 1;
            }
        }
    }
    score
}

/// Instantiates every template at every error position of a two-column
/// corpus, with `from` = current tag and `to` = truth.
pub fn generate_candidates(corpus: &TaggedCorpus, templates: &[Template]) -> BTreeSet<CanonicalRule> {
    let mut out = BTreeSet::new();
    for (words, tags, truth) in verse_columns(corpus) {
        for pos in 0..words.len() {
            let Some(truth) = truth[pos] else { continue };
            if truth == tags[pos] {
                continue;
            }
            for tpl in templates {
                let values = tpl
                    .slots
                    .iter()
                    .map(|s| context_value(&words, &tags, pos, *s).to_string())
                    .collect();
                let rule = Rule::new(
                    Tag::new(tags[pos]).expect("corpus tags are valid"),
                    Tag::new(truth).expect("corpus tags are valid"),
                    tpl.clone(),
                    values,
                )
                .expect("from differs from truth");
                out.insert(CanonicalRule(rule));
            }
        }
    }
    out
}

/// Orders rules canonically, for sets and tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalRule(pub Rule);

impl Ord for CanonicalRule {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.canonical_cmp(&other.0)
    }
}

impl PartialOrd for CanonicalRule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
