//! The iterative loop: grow a gold slice, learn rules from it, re-transform
//! the initial corpus, evaluate.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Columns, TaggedCorpus, Tagset, Token, Verse, VerseId};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, state_label, MetricsRecord};
use crate::tbl::{apply, learn, RuleList, Template};

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Fraction of all verses added to the gold slice per iteration.
    pub increment: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            increment: 0.05,
            iterations: 10,
            seed: 0,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.increment > 0.0 && self.increment <= 1.0) {
            return Err(Error::Parameter(format!("increment {} outside (0, 1]", self.increment)));
        }
        if self.increment * self.iterations as f64 > 1.0 + 1e-9 {
            return Err(Error::Parameter(format!(
                "{} iterations of {} exceed the corpus",
                self.iterations, self.increment
            )));
        }
        Ok(())
    }

    /// Gold slice size after iteration `i` on a corpus of `n` verses.
    pub fn slice_size(&self, i: usize, n: usize) -> usize {
        ((i as f64 * self.increment * n as f64).round() as usize).min(n)
    }
}

/// Gold ids after iteration `i`, in corpus order. `prev` holds the ids
/// selected through iteration `i - 1`.
///
/// Iteration 1 takes verses from the start of the corpus; later iterations
/// sample the remaining verses with a generator seeded by (seed, i).
pub fn select_slice(prev: &[VerseId], i: usize, schedule: &Schedule, all: &[VerseId]) -> Vec<VerseId> {
    let target = schedule.slice_size(i, all.len());
    let chosen: HashSet<&VerseId> = prev.iter().collect();
    let need = target.saturating_sub(chosen.len());
    let mut rest: Vec<&VerseId> = all.iter().filter(|id| !chosen.contains(id)).collect();
    let picked: HashSet<&VerseId> = if i <= 1 {
        rest.into_iter().take(need).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        rng.set_stream(i as u64);
        let need = need.min(rest.len());
        let (head, _) = rest.partial_shuffle(&mut rng, need);
        head.iter().copied().collect()
    };
    all.iter()
        .filter(|id| chosen.contains(id) || picked.contains(id))
        .cloned()
        .collect()
}

/// All gold slices of a schedule, index 0 being the empty slice.
pub fn plan_slices(schedule: &Schedule, all: &[VerseId]) -> Vec<Vec<VerseId>> {
    let mut out = vec![Vec::new()];
    for i in 1..=schedule.iterations {
        let next = select_slice(out.last().expect("non-empty"), i, schedule, all);
        out.push(next);
    }
    out
}

/// Two-column corpus over `gold_ids`: current tag from `initial`, truth
/// from `gold`.
pub fn make_training_corpus(gold: &TaggedCorpus, initial: &TaggedCorpus, gold_ids: &[VerseId]) -> Result<TaggedCorpus> {
    let gold_ix: HashMap<&VerseId, &Verse> = gold.verses.iter().map(|v| (&v.id, v)).collect();
    let init_ix: HashMap<&VerseId, &Verse> = initial.verses.iter().map(|v| (&v.id, v)).collect();
    let mut verses = Vec::with_capacity(gold_ids.len());
    for id in gold_ids {
        let g = gold_ix.get(id).ok_or_else(|| Error::integrity(id, "verse missing from the gold corpus"))?;
        let s = init_ix
            .get(id)
            .ok_or_else(|| Error::integrity(id, "verse missing from the initial corpus"))?;
        if g.len() != s.len() {
            return Err(Error::integrity(
                id,
                format!("gold has {} tokens, initial state has {}", g.len(), s.len()),
            ));
        }
        let tokens = s
            .tokens
            .iter()
            .zip(&g.tokens)
            .map(|(s, g)| Token {
                form: s.form.clone(),
                tag: s.tag.clone(),
                truth: g.tag.clone(),
            })
            .collect();
        verses.push(Verse::new(id.clone(), tokens));
    }
    TaggedCorpus::new(verses, Columns::Two, gold.tagset_name.clone())
}

/// Learns on the selected verses and re-transforms the initial corpus.
pub fn train_and_apply(
    initial: &TaggedCorpus,
    truth: &TaggedCorpus,
    gold_ids: &[VerseId],
    templates: &[Template],
    theta: i64,
) -> Result<(RuleList, TaggedCorpus)> {
    let training = make_training_corpus(truth, initial, gold_ids)?;
    let rules = learn(&training, templates, theta)?;
    let snapshot = apply(&rules, initial);
    Ok((rules, snapshot))
}

#[derive(Clone, Debug)]
pub struct BootstrapConfig {
    pub schedule: Schedule,
    pub templates: Vec<Template>,
    pub theta: i64,
    pub tagset: Tagset,
    /// Also evaluate on the verses no iteration selects.
    pub holdout: bool,
}

#[derive(Clone, Debug)]
pub struct BootstrapState {
    pub iteration: usize,
    pub gold_ids: Vec<VerseId>,
    pub snapshot: TaggedCorpus,
    pub rules: RuleList,
    pub metrics: MetricsRecord,
    pub holdout: Option<MetricsRecord>,
}

/// Checks that `gold` and `initial` hold the same verses with the same
/// token counts, in the same order.
pub fn check_parallel_states(gold: &TaggedCorpus, initial: &TaggedCorpus) -> Result<()> {
    if gold.verses.len() != initial.verses.len() {
        return Err(Error::integrity(
            "*",
            format!("gold has {} verses, initial state has {}", gold.verses.len(), initial.verses.len()),
        ));
    }
    for (g, s) in gold.verses.iter().zip(&initial.verses) {
        if g.id != s.id {
            return Err(Error::integrity(&g.id, format!("initial state has {} at this position", s.id)));
        }
        if g.len() != s.len() {
            return Err(Error::integrity(
                &g.id,
                format!("gold has {} tokens, initial state has {}", g.len(), s.len()),
            ));
        }
    }
    Ok(())
}

fn restrict(corpus: &TaggedCorpus, keep: &HashSet<&VerseId>) -> TaggedCorpus {
    TaggedCorpus {
        verses: corpus.verses.iter().filter(|v| keep.contains(&v.id)).cloned().collect(),
        tagset_name: corpus.tagset_name.clone(),
        columns: corpus.columns,
    }
}

/// Runs the loop with a simulated annotator (gold tags stand in for
/// corrections), calling `on_state` for states 0..=iterations in order.
pub fn run_bootstrap_with(
    initial: &TaggedCorpus,
    gold: &TaggedCorpus,
    config: &BootstrapConfig,
    mut on_state: impl FnMut(&BootstrapState) -> Result<()>,
) -> Result<Vec<BootstrapState>> {
    config.schedule.validate()?;
    check_parallel_states(gold, initial)?;
    let all: Vec<VerseId> = initial.ids().cloned().collect();
    let slices = plan_slices(&config.schedule, &all);
    let final_ids: HashSet<&VerseId> = slices.last().expect("non-empty").iter().collect();
    let holdout_ids: HashSet<&VerseId> = all.iter().filter(|id| !final_ids.contains(id)).collect();
    let holdout_gold = config.holdout.then(|| restrict(gold, &holdout_ids));

    let mut states = Vec::with_capacity(slices.len());
    for (i, ids) in slices.into_iter().enumerate() {
        let (rules, snapshot) = if i == 0 {
            (
                RuleList {
                    rules: Vec::new(),
                    threshold: config.theta,
                },
                initial.clone(),
            )
        } else {
            train_and_apply(initial, gold, &ids, &config.templates, config.theta)?
        };
        let metrics = evaluate(state_label(i), &snapshot, gold, &config.tagset)?;
        let holdout = match &holdout_gold {
            Some(h) => Some(evaluate(state_label(i), &snapshot, h, &config.tagset)?),
            None => None,
        };
        let state = BootstrapState {
            iteration: i,
            gold_ids: ids,
            snapshot,
            rules,
            metrics,
            holdout,
        };
        on_state(&state)?;
        states.push(state);
    }
    Ok(states)
}

pub fn run_bootstrap(initial: &TaggedCorpus, gold: &TaggedCorpus, config: &BootstrapConfig) -> Result<Vec<BootstrapState>> {
    run_bootstrap_with(initial, gold, config, |_| Ok(()))
}
