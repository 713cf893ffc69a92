//! Transformation-based learning over tag sequences.

mod learn;
mod rule;
mod template;

use std::collections::HashMap;

pub use learn::{learn, learn_traced, LearnTrace};
pub use rule::{generate_candidates, score_rule, CanonicalRule, Rule, RuleList, BOUNDARY, DEFAULT_THRESHOLD};
pub use template::{default_templates, parse_templates, templates_to_text, Field, Slot, Template, MAX_OFFSET};

use crate::corpus::{Tag, TaggedCorpus, Verse};
use crate::par;

const BOUNDARY_ID: u32 = u32::MAX;
const NO_MATCH: u32 = u32::MAX - 1;

#[derive(Default)]
pub(crate) struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub(crate) fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }

    pub(crate) fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }

    pub(crate) fn name(&self, id: u32) -> &str {
        if id == BOUNDARY_ID {
            BOUNDARY
        } else {
            &self.names[id as usize]
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }
}

#[inline]
pub(crate) fn slot_value(words: &[u32], tags: &[u32], pos: usize, slot: Slot) -> u32 {
    let q = pos as isize + slot.offset as isize;
    if q < 0 || q as usize >= words.len() {
        return BOUNDARY_ID;
    }
    match slot.field {
        Field::Word => words[q as usize],
        Field::Tag => tags[q as usize],
    }
}

struct CompiledRule {
    from: u32,
    to: u32,
    slots: Vec<(Slot, u32)>,
}

impl CompiledRule {
    #[inline]
    fn fires(&self, words: &[u32], tags: &[u32], pos: usize) -> bool {
        tags[pos] == self.from && self.slots.iter().all(|&(s, v)| slot_value(words, tags, pos, s) == v)
    }

    fn run(&self, words: &[u32], tags: &mut [u32]) {
        for pos in 0..tags.len() {
            if self.fires(words, tags, pos) {
                tags[pos] = self.to;
            }
        }
    }
}

fn compile(rules: &RuleList, words: &mut Interner, tags: &mut Interner) -> Vec<CompiledRule> {
    rules
        .rules
        .iter()
        .map(|r| CompiledRule {
            from: tags.intern(r.from.as_str()),
            to: tags.intern(r.to.as_str()),
            slots: r
                .template
                .slots
                .iter()
                .zip(&r.values)
                .map(|(&s, v)| {
                    let id = if v == BOUNDARY {
                        BOUNDARY_ID
                    } else {
                        let vocab = match s.field {
                            Field::Word => &*words,
                            Field::Tag => &*tags,
                        };
                        vocab.get(v).unwrap_or(NO_MATCH)
                    };
                    (s, id)
                })
                .collect(),
        })
        .collect()
}

/// Rewrites the current tags of `corpus` with `rules`, in list order, each
/// rule sweeping every verse left to right with immediate updates.
pub fn apply(rules: &RuleList, corpus: &TaggedCorpus) -> TaggedCorpus {
    if rules.is_empty() {
        return corpus.clone();
    }
    let mut words = Interner::default();
    let mut tags = Interner::default();
    let encoded: Vec<(Vec<u32>, Vec<u32>)> = corpus
        .verses
        .iter()
        .map(|v| {
            let w = v.tokens.iter().map(|t| words.intern(&t.form)).collect();
            let t = v
                .tokens
                .iter()
                .map(|t| t.tag.as_ref().map_or(NO_MATCH, |tag| tags.intern(tag.as_str())))
                .collect();
            (w, t)
        })
        .collect();
    let compiled = compile(rules, &mut words, &mut tags);
    let tags = &tags;
    let compiled = &compiled;

    let verses = par::map(corpus.verses.iter().zip(encoded).collect(), |(verse, (w, mut t)): (&Verse, _)| {
        for rule in compiled {
            rule.run(&w, &mut t);
        }
        let tokens = verse
            .tokens
            .iter()
            .zip(&t)
            .map(|(tok, &id)| {
                let mut tok = tok.clone();
                if id != NO_MATCH {
                    tok.tag = Some(Tag::new(tags.name(id)).expect("interned tags are valid"));
                }
                tok
            })
            .collect();
        Verse::new(verse.id.clone(), tokens)
    });
    TaggedCorpus {
        verses,
        tagset_name: corpus.tagset_name.clone(),
        columns: corpus.columns,
    }
}

/// Positions whose current tag differs from the truth tag.
pub fn error_count(corpus: &TaggedCorpus) -> usize {
    corpus
        .verses
        .iter()
        .flat_map(|v| &v.tokens)
        .filter(|t| t.truth.is_some() && t.tag != t.truth)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_vertical, serialize_vertical, Columns};

    fn tag(s: &str) -> Tag {
        Tag::new(s).unwrap()
    }

    fn rule(from: &str, to: &str, slots: &[Slot], values: &[&str]) -> Rule {
        let tpl = Template::new("t", slots.to_vec()).unwrap();
        Rule::new(tag(from), tag(to), tpl, values.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn tags_of(c: &TaggedCorpus) -> Vec<Vec<&str>> {
        c.verses
            .iter()
            .map(|v| v.tokens.iter().map(|t| t.tag.as_ref().unwrap().as_str()).collect())
            .collect()
    }

    #[test]
    fn empty_rules_identity() {
        let c = parse_vertical("# id=T:1:1\na\tA\nb\tB\n", Columns::One).unwrap();
        assert_eq!(apply(&RuleList::default(), &c), c);
    }

    #[test]
    fn cascades_left_to_right() {
        let c = parse_vertical("# id=T:1:1\nq\tB\nr\tA\ns\tA\nt\tA\n", Columns::One).unwrap();
        let rules = RuleList {
            rules: vec![rule("A", "B", &[Slot::tag(-1)], &["B"])],
            threshold: 2,
        };
        assert_eq!(tags_of(&apply(&rules, &c)), vec![vec!["B", "B", "B", "B"]]);
    }

    #[test]
    fn right_context_sees_old_tags() {
        let c = parse_vertical("# id=T:1:1\nq\tA\nr\tA\ns\tB\n", Columns::One).unwrap();
        let rules = RuleList {
            rules: vec![rule("A", "B", &[Slot::tag(1)], &["B"])],
            threshold: 2,
        };
        assert_eq!(tags_of(&apply(&rules, &c)), vec![vec!["A", "B", "B"]]);
    }

    #[test]
    fn boundary_and_unknown_values() {
        let c = parse_vertical("# id=T:1:1\nq\tA\nr\tA\n", Columns::One).unwrap();
        let rules = RuleList {
            rules: vec![
                rule("A", "C", &[Slot::word(-1)], &[BOUNDARY]),
                rule("A", "D", &[Slot::word(0)], &["never-seen"]),
            ],
            threshold: 2,
        };
        assert_eq!(tags_of(&apply(&rules, &c)), vec![vec!["C", "A"]]);
    }

    #[test]
    fn rule_order_matters() {
        let c = parse_vertical("# id=T:1:1\nq\tA\n", Columns::One).unwrap();
        let ab = rule("A", "B", &[Slot::word(0)], &["q"]);
        let bc = rule("B", "C", &[Slot::word(0)], &["q"]);
        let fwd = RuleList { rules: vec![ab.clone(), bc.clone()], threshold: 2 };
        let rev = RuleList { rules: vec![bc, ab], threshold: 2 };
        assert_eq!(tags_of(&apply(&fwd, &c)), vec![vec!["C"]]);
        assert_eq!(tags_of(&apply(&rev, &c)), vec![vec!["B"]]);
    }

    #[test]
    fn apply_keeps_truth_and_shape() {
        let text = "# id=T:1:1\nq\tA\tB\nr\tA\tA\n";
        let c = parse_vertical(text, Columns::Two).unwrap();
        let rules = RuleList {
            rules: vec![rule("A", "B", &[Slot::word(0)], &["q"])],
            threshold: 2,
        };
        let out = apply(&rules, &c);
        assert_eq!(error_count(&c), 1);
        assert_eq!(error_count(&out), 0);
        assert_eq!(serialize_vertical(&out).unwrap(), "# id=T:1:1\nq\tB\tB\nr\tA\tA\n");
    }
}
