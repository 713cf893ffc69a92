//! Human-in-the-loop annotation over a project directory: serve the
//! selected slice, store per-verse corrections, retrain.
//!
//! All state is recovered from the directory: the iteration index is the
//! number of rows in `metrics.csv` minus one, the current slice is
//! `gold-ids/iter-<i+1>.ids`, and a verse counts as corrected once
//! `gold/<id>.cols` exists.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{select_slice, train_and_apply};
use crate::corpus::{serialize_vertical, Columns, Tag, TaggedCorpus, Tagset, Verse, VerseId};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, state_label, MetricsRecord};
use crate::project::{ids_to_text, read_ids, read_vertical, write_atomic, Project};
use crate::tbl::{RuleList, Template};

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("verses still pending: {}", join(.0))]
    Pending(Vec<VerseId>),
    #[error("verse {0} is not pending")]
    NotPending(VerseId),
    #[error("labels not in the target tagset: {}", .0.join(", "))]
    InvalidTags(Vec<String>),
    #[error("token index {index} out of range for verse {verse} ({len} tokens)")]
    BadIndex { verse: VerseId, index: usize, len: usize },
    #[error("slice {0} has not been selected")]
    NotSelected(usize),
    #[error(transparent)]
    Data(#[from] Error),
}

fn join(ids: &[VerseId]) -> String {
    ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub index: usize,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionBatch {
    pub verse_id: VerseId,
    #[serde(default)]
    pub corrections: Vec<Correction>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TokenView {
    pub index: usize,
    pub form: String,
    pub tag: String,
    /// The tag differs from the previous state's tag.
    pub changed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerseView {
    pub id: VerseId,
    pub tokens: Vec<TokenView>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceView {
    pub iteration: usize,
    pub verses: Vec<VerseView>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Status {
    pub iteration: usize,
    pub total_verses: usize,
    pub selected_verses: usize,
    pub corrected_verses: usize,
    pub pending_verses: usize,
    pub pending: Vec<VerseId>,
    pub metrics: Vec<MetricsRecord>,
    pub tagset: String,
}

#[derive(Clone, Debug)]
pub struct Session {
    project: Project,
    tagset: Tagset,
    templates: Vec<Template>,
    initial: TaggedCorpus,
    reference: Option<TaggedCorpus>,
    metrics: Vec<MetricsRecord>,
    snapshot: TaggedCorpus,
    previous: Option<TaggedCorpus>,
    /// Cumulative gold ids selected for iteration `iteration + 1`.
    slice: Vec<VerseId>,
    corrected: BTreeSet<VerseId>,
}

fn gold_store(project: &Project) -> Result<BTreeSet<VerseId>> {
    let dir = project.gold_dir();
    let mut out = BTreeSet::new();
    if !dir.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".cols") {
            out.insert(stem.parse()?);
        }
    }
    Ok(out)
}

impl Session {
    /// Loads a project, initialising state 0 and the first slice if the
    /// directory has none yet. Requires `snapshots/IgbTC-0.cols`.
    pub fn load(root: impl Into<PathBuf>) -> Result<Session> {
        let project = Project::open(root)?;
        let initial_path = project.snapshot(0);
        if !initial_path.exists() {
            return Err(Error::Parameter(format!("missing {}", initial_path.display())));
        }
        let initial = project.initial_state()?;
        let reference = project.reference_gold()?;
        let mut session = Session {
            tagset: project.tagset()?,
            templates: project.templates()?,
            snapshot: initial.clone(),
            previous: None,
            initial,
            reference,
            metrics: project.read_metrics()?,
            slice: Vec::new(),
            corrected: gold_store(&project)?,
            project,
        };
        if session.metrics.is_empty() {
            let record = session.evaluate(0, &session.initial)?;
            session.project.write_rules(0, &RuleList { rules: Vec::new(), threshold: session.project.config.theta })?;
            write_atomic(&session.project.gold_ids(0), "")?;
            session.project.write_metrics(std::slice::from_ref(&record))?;
            session.metrics.push(record);
        }
        let i = session.iteration();
        if i > 0 {
            session.snapshot = read_vertical(&session.project.snapshot(i), Columns::One)?;
            session.previous = Some(read_vertical(&session.project.snapshot(i - 1), Columns::One)?);
        }
        session.slice = session.selected(i + 1)?;
        Ok(session)
    }

    /// Gold ids for iteration `n`, selecting and persisting them if needed.
    fn selected(&self, n: usize) -> Result<Vec<VerseId>> {
        let path = self.project.gold_ids(n);
        if path.exists() {
            return read_ids(&path);
        }
        let prev = if n == 0 { Vec::new() } else { read_ids(&self.project.gold_ids(n - 1)).unwrap_or_default() };
        let all: Vec<VerseId> = self.initial.ids().cloned().collect();
        let ids = select_slice(&prev, n, &self.project.config.schedule, &all);
        write_atomic(&path, &ids_to_text(&ids))?;
        Ok(ids)
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn tagset(&self) -> &Tagset {
        &self.tagset
    }

    pub fn iteration(&self) -> usize {
        self.metrics.len() - 1
    }

    pub fn metrics(&self) -> &[MetricsRecord] {
        &self.metrics
    }

    pub fn pending(&self) -> Vec<VerseId> {
        self.slice.iter().filter(|id| !self.corrected.contains(id)).cloned().collect()
    }

    pub fn status(&self) -> Status {
        let pending = self.pending();
        Status {
            iteration: self.iteration(),
            total_verses: self.initial.verses.len(),
            selected_verses: self.slice.len(),
            corrected_verses: self.corrected.len(),
            pending_verses: pending.len(),
            pending,
            metrics: self.metrics.clone(),
            tagset: self.tagset.name.clone(),
        }
    }

    fn gold_corpus(&self) -> Result<TaggedCorpus> {
        let mut verses = Vec::with_capacity(self.corrected.len());
        for id in &self.corrected {
            let c = read_vertical(&self.project.gold_verse(id), Columns::One)?;
            verses.extend(c.verses);
        }
        TaggedCorpus::new(verses, Columns::One, self.tagset.name.clone())
    }

    fn evaluate(&self, i: usize, snapshot: &TaggedCorpus) -> Result<MetricsRecord> {
        match &self.reference {
            Some(gold) => evaluate(state_label(i), snapshot, gold, &self.tagset),
            None => evaluate(state_label(i), snapshot, &self.gold_corpus()?, &self.tagset),
        }
    }

    /// Pending verses of slice `n` with their current tags.
    pub fn slice_view(&self, n: usize) -> std::result::Result<SliceView, AnnotateError> {
        if n == 0 || n > self.iteration() + 1 {
            return Err(AnnotateError::NotSelected(n));
        }
        let prev: HashMap<&VerseId, &Verse> = self
            .previous
            .iter()
            .flat_map(|c| &c.verses)
            .map(|v| (&v.id, v))
            .collect();
        let current: HashMap<&VerseId, &Verse> = self.snapshot.verses.iter().map(|v| (&v.id, v)).collect();
        let ids = if n == self.iteration() + 1 { self.pending() } else { Vec::new() };
        let verses = ids
            .into_iter()
            .map(|id| {
                let v = current[&id];
                let before = prev.get(&id);
                let tokens = v
                    .tokens
                    .iter()
                    .enumerate()
                    .map(|(index, t)| TokenView {
                        index,
                        form: t.form.clone(),
                        tag: t.tag.as_ref().map(|t| t.to_string()).unwrap_or_default(),
                        changed: before.is_some_and(|b| b.tokens[index].tag != t.tag),
                    })
                    .collect();
                VerseView { id, tokens }
            })
            .collect();
        Ok(SliceView { iteration: n, verses })
    }

    /// Stores a corrected verse in the gold store. Tokens not mentioned in
    /// the batch keep their current tag.
    pub fn submit(&mut self, batch: &CorrectionBatch) -> std::result::Result<(), AnnotateError> {
        let id = &batch.verse_id;
        if !self.slice.contains(id) || self.corrected.contains(id) {
            return Err(AnnotateError::NotPending(id.clone()));
        }
        let verse = self
            .snapshot
            .get(id)
            .ok_or_else(|| AnnotateError::NotPending(id.clone()))?;
        let mut invalid: Vec<String> = batch
            .corrections
            .iter()
            .filter(|c| !self.tagset.contains(&c.tag))
            .map(|c| c.tag.clone())
            .collect();
        if !invalid.is_empty() {
            invalid.sort();
            invalid.dedup();
            return Err(AnnotateError::InvalidTags(invalid));
        }
        let mut gold = verse.clone();
        for c in &batch.corrections {
            let len = gold.tokens.len();
            let tok = gold.tokens.get_mut(c.index).ok_or(AnnotateError::BadIndex {
                verse: id.clone(),
                index: c.index,
                len,
            })?;
            tok.tag = Some(Tag::new(&c.tag)?);
        }
        let corpus = TaggedCorpus::new(vec![gold], Columns::One, self.tagset.name.clone())?;
        write_atomic(&self.project.gold_verse(id), &serialize_vertical(&corpus)?)?;
        self.corrected.insert(id.clone());
        Ok(())
    }

    /// Retrains on the gold store, re-transforms the initial state, selects
    /// the next slice and records the new metrics.
    pub fn iterate(&mut self) -> std::result::Result<MetricsRecord, AnnotateError> {
        let pending = self.pending();
        if !pending.is_empty() {
            return Err(AnnotateError::Pending(pending));
        }
        let next = self.iteration() + 1;
        let truth = self.gold_corpus()?;
        let (rules, snapshot) = train_and_apply(
            &self.initial,
            &truth,
            &self.slice,
            &self.templates,
            self.project.config.theta,
        )?;
        let record = self.evaluate(next, &snapshot)?;
        self.project.write_snapshot(next, &snapshot)?;
        self.project.write_rules(next, &rules)?;
        let following = self.selected(next + 1)?;
        let mut metrics = self.metrics.clone();
        metrics.push(record.clone());
        // metrics.csv is written last: it is what marks the iteration done.
        self.project.write_metrics(&metrics)?;
        self.metrics = metrics;
        self.previous = Some(std::mem::replace(&mut self.snapshot, snapshot));
        self.slice = following;
        Ok(record)
    }
}
