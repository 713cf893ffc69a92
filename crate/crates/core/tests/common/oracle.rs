//! Brute-force reference for the rule learner: enumerates every rule over a
//! four-word, three-tag vocabulary and scores it naively.
#![allow(dead_code)]

use std::cmp::Ordering;

use tagbridge::corpus::{Columns, Tag, TaggedCorpus, Token, Verse, VerseId};
use tagbridge::tbl::{Field, Rule, Slot, Template, BOUNDARY};

pub const WORDS: &[&str] = &["a", "b", "c", "d"];
pub const TAGS: &[&str] = &["A", "B", "C"];

pub fn slot_pool() -> Vec<Vec<Slot>> {
    vec![
        vec![Slot::tag(-1)],
        vec![Slot::tag(1)],
        vec![Slot::word(0)],
        vec![Slot::word(-1)],
        vec![Slot::tag(-2)],
        vec![Slot::tag(-1), Slot::word(0)],
        vec![Slot::tag(-1), Slot::tag(1)],
    ]
}

pub fn build(verses: &[Vec<(usize, usize, usize)>]) -> TaggedCorpus {
    let verses = verses
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let tokens = v
                .iter()
                .map(|&(w, t, g)| Token {
                    form: WORDS[w].into(),
                    tag: Some(Tag::new(TAGS[t]).unwrap()),
                    truth: Some(Tag::new(TAGS[g]).unwrap()),
                })
                .collect();
            Verse::new(VerseId::new("T", 1, i as u32 + 1), tokens)
        })
        .collect();
    TaggedCorpus::new(verses, Columns::Two, "t").unwrap()
}

pub fn value_at(words: &[String], tags: &[String], pos: usize, slot: Slot) -> String {
    let q = pos as i64 + slot.offset as i64;
    if q < 0 || q >= words.len() as i64 {
        return BOUNDARY.to_string();
    }
    match slot.field {
        Field::Word => words[q as usize].clone(),
        Field::Tag => tags[q as usize].clone(),
    }
}

pub fn fires(rule: &Rule, words: &[String], tags: &[String], pos: usize) -> bool {
    tags[pos] == rule.from.as_str()
        && rule
            .template
            .slots
            .iter()
            .zip(&rule.values)
            .all(|(s, v)| &value_at(words, tags, pos, *s) == v)
}

pub fn columns(c: &TaggedCorpus) -> Vec<(Vec<String>, Vec<String>, Vec<String>)> {
    c.verses
        .iter()
        .map(|v| {
            (
                v.tokens.iter().map(|t| t.form.clone()).collect(),
                v.tokens.iter().map(|t| t.tag.clone().unwrap().to_string()).collect(),
                v.tokens.iter().map(|t| t.truth.clone().unwrap().to_string()).collect(),
            )
        })
        .collect()
}

/// (frozen score, cascaded improvement)
pub fn naive_scores(rule: &Rule, c: &TaggedCorpus) -> (i64, i64) {
    let (mut frozen, mut realized) = (0, 0);
    for (words, tags, truth) in columns(c) {
        for pos in 0..words.len() {
            if fires(rule, &words, &tags, pos) {
                frozen += (truth[pos] == rule.to.as_str()) as i64 - (truth[pos] == rule.from.as_str()) as i64;
            }
        }
        let mut sim = tags.clone();
        for pos in 0..words.len() {
            if fires(rule, &words, &sim, pos) {
                sim[pos] = rule.to.to_string();
                realized += (truth[pos] == rule.to.as_str()) as i64 - (truth[pos] == rule.from.as_str()) as i64;
            }
        }
    }
    (frozen, realized)
}

pub fn all_rules(templates: &[Template]) -> Vec<Rule> {
    let mut out = Vec::new();
    for tpl in templates {
        let mut combos: Vec<Vec<String>> = vec![Vec::new()];
        for s in &tpl.slots {
            let vocab: &[&str] = if s.field == Field::Word { WORDS } else { TAGS };
            let mut next = Vec::new();
            for prefix in &combos {
                for v in vocab.iter().copied().chain([BOUNDARY]) {
                    let mut p = prefix.clone();
                    p.push(v.to_string());
                    next.push(p);
                }
            }
            combos = next;
        }
        for from in TAGS {
            for to in TAGS {
                if from == to {
                    continue;
                }
                for values in &combos {
                    let r = Rule::new(Tag::new(*from).unwrap(), Tag::new(*to).unwrap(), tpl.clone(), values.clone()).unwrap();
                    out.push(r);
                }
            }
        }
    }
    out
}

pub fn canonical(a: &Rule, b: &Rule) -> Ordering {
    (&a.template.id, a.from.as_str(), a.to.as_str(), &a.values).cmp(&(&b.template.id, b.from.as_str(), b.to.as_str(), &b.values))
}

pub fn oracle_first(c: &TaggedCorpus, templates: &[Template], theta: i64) -> Option<(Rule, i64)> {
    let mut best: Option<(Rule, i64)> = None;
    for r in all_rules(templates) {
        let (score, realized) = naive_scores(&r, c);
        if score <= theta || realized <= theta {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bs)) => score > *bs || (score == *bs && canonical(&r, b) == Ordering::Less),
        };
        if better {
            best = Some((r, score));
        }
    }
    best
}
