use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use smallvec::SmallVec;

use crate::corpus::{Columns, Tag, TaggedCorpus};
use crate::error::{Error, Result};

use super::rule::{Rule, RuleList, BOUNDARY};
use super::template::{Field, Template};
use super::{slot_value, Interner, BOUNDARY_ID};

type Ctx = SmallVec<[u32; 4]>;

/// Rule identity without its to-tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Base {
    tpl: u16,
    from: u32,
    ctx: Ctx,
}

/// Per-base counts: `bad` = firing positions already correct, `goods` =
/// firing positions whose truth is the given to-tag.
#[derive(Default)]
struct Counts {
    bad: i64,
    goods: SmallVec<[(u32, i64); 2]>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct RankKey {
    tpl: u16,
    from: u32,
    to: u32,
    values: Ctx,
    raw: Ctx,
}

struct Entry {
    score: i64,
    rank: Reverse<RankKey>,
    base: Base,
    to: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.score, &self.rank).cmp(&(other.score, &other.rank))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sorted position of each interned string, with the boundary marker
/// ranked among them as its literal text.
struct Ranks {
    by_id: Vec<u32>,
    boundary: u32,
}

impl Ranks {
    fn new(vocab: &Interner) -> Ranks {
        let mut order: Vec<(&str, u32)> = (0..vocab.len() as u32).map(|id| (vocab.name(id), id)).collect();
        order.push((BOUNDARY, BOUNDARY_ID));
        order.sort();
        let mut by_id = vec![0; vocab.len()];
        let mut boundary = 0;
        for (rank, (_, id)) in order.into_iter().enumerate() {
            if id == BOUNDARY_ID {
                boundary = rank as u32;
            } else {
                by_id[id as usize] = rank as u32;
            }
        }
        Ranks { by_id, boundary }
    }

    fn of(&self, id: u32) -> u32 {
        if id == BOUNDARY_ID {
            self.boundary
        } else {
            self.by_id[id as usize]
        }
    }
}

/// Summary of one learning run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnTrace {
    pub rules: RuleList,
    pub initial_errors: usize,
    /// Training-set error count after each accepted rule.
    pub errors_after: Vec<usize>,
    /// Errors fixed minus errors introduced by each accepted rule.
    pub realized: Vec<i64>,
    /// Candidates skipped because applying them would not beat the threshold.
    pub rejected: usize,
}

struct Learner<'a> {
    templates: &'a [Template],
    theta: i64,
    words: Vec<Vec<u32>>,
    tags: Vec<Vec<u32>>,
    truth: Vec<Vec<u32>>,
    word_vocab: Interner,
    tag_vocab: Interner,
    word_ranks: Ranks,
    tag_ranks: Ranks,
    tpl_ranks: Vec<u16>,
    window: usize,
    counts: HashMap<Base, Counts>,
    heap: BinaryHeap<Entry>,
}

impl<'a> Learner<'a> {
    fn new(corpus: &TaggedCorpus, templates: &'a [Template], theta: i64) -> Learner<'a> {
        let mut word_vocab = Interner::default();
        let mut tag_vocab = Interner::default();
        let mut words = Vec::with_capacity(corpus.verses.len());
        let mut tags = Vec::with_capacity(corpus.verses.len());
        let mut truth = Vec::with_capacity(corpus.verses.len());
        for v in &corpus.verses {
            words.push(v.tokens.iter().map(|t| word_vocab.intern(&t.form)).collect());
            tags.push(
                v.tokens
                    .iter()
                    .map(|t| tag_vocab.intern(t.tag.as_ref().expect("validated").as_str()))
                    .collect(),
            );
            truth.push(
                v.tokens
                    .iter()
                    .map(|t| tag_vocab.intern(t.truth.as_ref().expect("validated").as_str()))
                    .collect(),
            );
        }
        let mut tpl_order: Vec<usize> = (0..templates.len()).collect();
        tpl_order.sort_by(|&a, &b| templates[a].id.cmp(&templates[b].id));
        let mut tpl_ranks = vec![0u16; templates.len()];
        for (rank, idx) in tpl_order.into_iter().enumerate() {
            tpl_ranks[idx] = rank as u16;
        }
        let window = templates
            .iter()
            .flat_map(|t| &t.slots)
            .filter(|s| s.field == Field::Tag)
            .map(|s| s.offset.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        Learner {
            templates,
            theta,
            words,
            tags,
            truth,
            word_ranks: Ranks::new(&word_vocab),
            tag_ranks: Ranks::new(&tag_vocab),
            word_vocab,
            tag_vocab,
            tpl_ranks,
            window,
            counts: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn visit(&mut self, v: usize, q: usize, sign: i64, dirty: &mut HashSet<Base>) {
        let (words, tags) = (&self.words[v], &self.tags[v]);
        let from = tags[q];
        let truth = self.truth[v][q];
        for (ti, tpl) in self.templates.iter().enumerate() {
            let ctx: Ctx = tpl.slots.iter().map(|&s| slot_value(words, tags, q, s)).collect();
            let base = Base { tpl: ti as u16, from, ctx };
            let counts = self.counts.entry(base.clone()).or_default();
            if truth == from {
                counts.bad += sign;
            } else if let Some(g) = counts.goods.iter_mut().find(|(to, _)| *to == truth) {
                g.1 += sign;
            } else {
                counts.goods.push((truth, sign));
            }
            dirty.insert(base);
        }
    }

    fn score(&self, base: &Base, to: u32) -> i64 {
        let c = &self.counts[base];
        let good = c.goods.iter().find(|(t, _)| *t == to).map_or(0, |g| g.1);
        good - c.bad
    }

    fn rank(&self, base: &Base, to: u32) -> RankKey {
        let slots = &self.templates[base.tpl as usize].slots;
        RankKey {
            tpl: self.tpl_ranks[base.tpl as usize],
            from: self.tag_ranks.of(base.from),
            to: self.tag_ranks.of(to),
            values: slots
                .iter()
                .zip(&base.ctx)
                .map(|(s, &id)| match s.field {
                    Field::Word => self.word_ranks.of(id),
                    Field::Tag => self.tag_ranks.of(id),
                })
                .collect(),
            raw: base.ctx.clone(),
        }
    }

    fn push(&mut self, base: &Base) {
        let c = &self.counts[base];
        let mut fresh = Vec::new();
        for &(to, good) in &c.goods {
            let score = good - c.bad;
            if score > self.theta {
                fresh.push((to, score));
            }
        }
        for (to, score) in fresh {
            let rank = Reverse(self.rank(base, to));
            self.heap.push(Entry {
                score,
                rank,
                base: base.clone(),
                to,
            });
        }
    }

    /// Cascading dry run: per verse, the positions that would change, plus
    /// fixed minus broken.
    fn dry_run(&self, base: &Base, to: u32) -> (Vec<(usize, Vec<usize>)>, i64) {
        let slots = &self.templates[base.tpl as usize].slots;
        let mut changes = Vec::new();
        let mut realized = 0;
        for (v, tags) in self.tags.iter().enumerate() {
            if !tags.contains(&base.from) {
                continue;
            }
            let words = &self.words[v];
            let truth = &self.truth[v];
            let mut sim = tags.clone();
            let mut changed = Vec::new();
            for pos in 0..sim.len() {
                if sim[pos] == base.from
                    && slots
                        .iter()
                        .zip(&base.ctx)
                        .all(|(&s, &val)| slot_value(words, &sim, pos, s) == val)
                {
                    sim[pos] = to;
                    changed.push(pos);
                    if truth[pos] == to {
                        realized += 1;
                    } else if truth[pos] == base.from {
                        realized -= 1;
                    }
                }
            }
            if !changed.is_empty() {
                changes.push((v, changed));
            }
        }
        (changes, realized)
    }

    fn commit(&mut self, changes: &[(usize, Vec<usize>)], to: u32) {
        let mut dirty = HashSet::new();
        for (v, changed) in changes {
            let v = *v;
            let len = self.tags[v].len();
            let mut affected: Vec<usize> = changed
                .iter()
                .flat_map(|&p| p.saturating_sub(self.window)..(p + self.window + 1).min(len))
                .collect();
            affected.sort_unstable();
            affected.dedup();
            for &q in &affected {
                self.visit(v, q, -1, &mut dirty);
            }
            for &p in changed {
                self.tags[v][p] = to;
            }
            for &q in &affected {
                self.visit(v, q, 1, &mut dirty);
            }
        }
        for base in &dirty {
            self.push(base);
        }
    }

    fn to_rule(&self, base: &Base, to: u32, score: i64) -> Rule {
        let template = self.templates[base.tpl as usize].clone();
        let values = template
            .slots
            .iter()
            .zip(&base.ctx)
            .map(|(s, &id)| match s.field {
                Field::Word => self.word_vocab.name(id).to_string(),
                Field::Tag => self.tag_vocab.name(id).to_string(),
            })
            .collect();
        let tag = |id| Tag::new(self.tag_vocab.name(id)).expect("interned tags are valid");
        let mut rule = Rule::new(tag(base.from), tag(to), template, values).expect("from differs from to");
        rule.score = score;
        rule
    }

    fn errors(&self) -> usize {
        self.tags
            .iter()
            .zip(&self.truth)
            .map(|(t, g)| t.iter().zip(g).filter(|(a, b)| a != b).count())
            .sum()
    }

    fn run(mut self) -> LearnTrace {
        let mut dirty = HashSet::new();
        for v in 0..self.tags.len() {
            for q in 0..self.tags[v].len() {
                self.visit(v, q, 1, &mut dirty);
            }
        }
        for base in &dirty {
            self.push(base);
        }
        let initial_errors = self.errors();
        let mut errors = initial_errors;
        let mut trace = LearnTrace {
            rules: RuleList {
                rules: Vec::new(),
                threshold: self.theta,
            },
            initial_errors,
            errors_after: Vec::new(),
            realized: Vec::new(),
            rejected: 0,
        };
        let mut rejected: Vec<(Base, u32)> = Vec::new();
        let mut rejected_set: HashSet<(Base, u32)> = HashSet::new();
        while let Some(entry) = self.heap.pop() {
            if self.score(&entry.base, entry.to) != entry.score
                || rejected_set.contains(&(entry.base.clone(), entry.to))
            {
                continue;
            }
            let (changes, realized) = self.dry_run(&entry.base, entry.to);
            if realized <= self.theta {
                trace.rejected += 1;
                rejected_set.insert((entry.base.clone(), entry.to));
                rejected.push((entry.base, entry.to));
                continue;
            }
            self.commit(&changes, entry.to);
            errors = (errors as i64 - realized) as usize;
            trace.rules.rules.push(self.to_rule(&entry.base, entry.to, entry.score));
            trace.realized.push(realized);
            trace.errors_after.push(errors);
            rejected_set.clear();
            for (base, _) in std::mem::take(&mut rejected) {
                self.push(&base);
            }
        }
        debug_assert_eq!(errors, self.errors());
        trace
    }
}

/// Greedy error-driven learning from the current column toward the truth
/// column of a two-column corpus.
///
/// Candidates are ranked by their score against the frozen state, ties going
/// to the canonically smallest rule. A candidate is accepted only if applying
/// it (left to right, cascading) removes more than `theta` errors; otherwise
/// the next candidate is tried. Learning stops when no candidate scores above
/// `theta`.
pub fn learn(corpus: &TaggedCorpus, templates: &[Template], theta: i64) -> Result<RuleList> {
    learn_traced(corpus, templates, theta).map(|t| t.rules)
}

pub fn learn_traced(corpus: &TaggedCorpus, templates: &[Template], theta: i64) -> Result<LearnTrace> {
    if theta < 1 {
        return Err(Error::Parameter(format!("threshold must be at least 1, got {theta}")));
    }
    if templates.is_empty() {
        return Err(Error::Parameter("no templates given".into()));
    }
    if templates.len() > u16::MAX as usize {
        return Err(Error::Parameter("too many templates".into()));
    }
    let mut ids = HashSet::new();
    if let Some(t) = templates.iter().find(|t| !ids.insert(&t.id)) {
        return Err(Error::Parameter(format!("duplicate template id {:?}", t.id)));
    }
    if corpus.columns != Columns::Two {
        return Err(Error::Parameter("training needs a two-column corpus".into()));
    }
    corpus.validate()?;
    Ok(Learner::new(corpus, templates, theta).run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_vertical, Columns};
    use crate::tbl::{apply, default_templates, error_count, Slot};

    fn corpus(text: &str) -> TaggedCorpus {
        parse_vertical(text, Columns::Two).unwrap()
    }

    #[test]
    fn toy_word_context() {
        // 5 tokens, all A; truth B exactly after "x".
        let c = corpus("# id=T:1:1\nx\tA\tA\ny\tA\tB\nx\tA\tA\nz\tA\tB\nx\tA\tA\n\n# id=T:1:2\nx\tA\tA\nw\tA\tB\n");
        let tpl = Template::new("word-1", vec![Slot::word(-1)]).unwrap();
        let rules = learn(&c, &[tpl], 2).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules.rules[0];
        assert_eq!((r.from.as_str(), r.to.as_str(), r.values[0].as_str(), r.score), ("A", "B", "x", 3));
        assert_eq!(error_count(&apply(&rules, &c)), 0);
    }

    #[test]
    fn zero_errors_learn_nothing() {
        let c = corpus("# id=T:1:1\nx\tA\tA\ny\tB\tB\n");
        assert!(learn(&c, &default_templates(), 1).unwrap().is_empty());
    }

    #[test]
    fn threshold_gate() {
        let c = corpus("# id=T:1:1\nx\tA\tA\ny\tA\tB\nx\tA\tA\nz\tA\tB\nx\tA\tA\nw\tA\tB\n");
        let tpl = Template::new("word-1", vec![Slot::word(-1)]).unwrap();
        assert!(learn(&c, &[tpl.clone()], 10).unwrap().is_empty());
        assert_eq!(learn(&c, &[tpl], 2).unwrap().len(), 1);
    }

    #[test]
    fn parameter_errors() {
        let c = corpus("# id=T:1:1\nx\tA\tB\n");
        assert!(learn(&c, &default_templates(), 0).is_err());
        assert!(learn(&c, &[], 2).is_err());
        let one = parse_vertical("# id=T:1:1\nx\tA\n", Columns::One).unwrap();
        assert!(learn(&one, &default_templates(), 2).is_err());
    }

    #[test]
    fn cascade_gate_skips_harmful_rule() {
        // A->B if tag[-1]=B scores 3 on the frozen state but cascades into the
        // following A tokens, whose truth is A.
        let mut text = String::new();
        for v in 1..=3 {
            text.push_str(&format!("# id=T:1:{v}\nq\tB\tB\nr\tA\tB\ns\tA\tA\nt\tA\tA\nu\tA\tA\n\n"));
        }
        let c = corpus(&text);
        let tpl = Template::new("tag-1", vec![Slot::tag(-1)]).unwrap();
        let trace = learn_traced(&c, &[tpl], 2).unwrap();
        assert!(trace.rules.is_empty());
        assert_eq!(trace.rejected, 1);
    }

    #[test]
    fn replay_matches_trace() {
        let c = corpus(
            "# id=T:1:1\na\tNN\tNNC\nb\tIN\tPREP\nc\tNN\tVrV\nd\tNN\tNNC\n\n\
             # id=T:1:2\na\tNN\tNNC\nb\tIN\tPREP\nc\tNN\tVrV\ne\tNN\tNNC\n\n\
             # id=T:1:3\na\tNN\tNNC\nb\tIN\tPREP\nc\tNN\tVrV\nf\tVBD\tVrV\n",
        );
        let trace = learn_traced(&c, &default_templates(), 1).unwrap();
        assert!(!trace.rules.is_empty());
        for w in trace.realized.iter() {
            assert!(*w > 1);
        }
        let final_errors = *trace.errors_after.last().unwrap();
        assert_eq!(error_count(&apply(&trace.rules, &c)), final_errors);
    }
}
