//! Cross-lingual tag projection through word alignments.
//!
//! Every target token collects the tags of the source tokens it is linked
//! to. Tokens with several candidates are resolved by candidate multiplicity
//! first, then by the corpus-wide ratio `C(tag, word) / C(tag)`, then by
//! label order.

use std::collections::HashMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::align::Alignment;
use crate::corpus::{Columns, Tag, TaggedCorpus, Token, Verse, VersePair};
use crate::error::{Error, Result};

/// Candidate tags of one target token, in increasing source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub word: String,
    pub candidates: Vec<Tag>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProjectionStats {
    pair_counts: HashMap<(Tag, String), u64>,
    tag_counts: HashMap<Tag, u64>,
}

impl ProjectionStats {
    /// C(tag, word).
    pub fn pair_count(&self, tag: &Tag, word: &str) -> u64 {
        self.pair_counts
            .get(&(tag.clone(), word.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// C(tag).
    pub fn tag_count(&self, tag: &Tag) -> u64 {
        self.tag_counts.get(tag).copied().unwrap_or(0)
    }

    pub fn add(&mut self, tag: &Tag, word: &str, n: u64) {
        *self.pair_counts.entry((tag.clone(), word.to_string())).or_default() += n;
        *self.tag_counts.entry(tag.clone()).or_default() += n;
    }

    /// P(word | tag) as C(tag, word) / C(tag); zero when C(tag) is zero.
    pub fn ratio(&self, tag: &Tag, word: &str) -> f64 {
        let denom = self.tag_count(tag);
        if denom == 0 {
            0.0
        } else {
            self.pair_count(tag, word) as f64 / denom as f64
        }
    }

    pub fn merge(&mut self, other: ProjectionStats) {
        for (k, v) in other.pair_counts {
            *self.pair_counts.entry(k).or_default() += v;
        }
        for (k, v) in other.tag_counts {
            *self.tag_counts.entry(k).or_default() += v;
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Tag, &str, u64)> {
        self.pair_counts.iter().map(|((t, w), &n)| (t, w.as_str(), n))
    }
}

/// Collects the candidate tags for each target token of `pair`. Source
/// tokens must carry tags.
pub fn collect_candidates(pair: &VersePair, alignment: &Alignment) -> Result<Vec<CandidateSet>> {
    let source_tags: Vec<&Tag> = pair
        .source
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            t.tag.as_ref().ok_or_else(|| {
                Error::integrity(pair.id(), format!("source token {i} has no tag"))
            })
        })
        .collect::<Result<_>>()?;
    candidates_with_tags(&pair.target, &source_tags, alignment)
}

/// Same as [`collect_candidates`] with the source tags passed separately.
pub fn candidates_with_tags(target: &Verse, source_tags: &[&Tag], alignment: &Alignment) -> Result<Vec<CandidateSet>> {
    let mut out: Vec<CandidateSet> = target
        .tokens
        .iter()
        .map(|t| CandidateSet {
            word: t.form.clone(),
            candidates: Vec::new(),
        })
        .collect();
    for &(t, s) in &alignment.links {
        if t >= out.len() {
            return Err(Error::integrity(&target.id, format!("link {t}-{s}: target position out of range")));
        }
        let tag = source_tags.get(s).ok_or_else(|| {
            Error::integrity(
                &target.id,
                format!("link {t}-{s}: source position out of range ({} source tags)", source_tags.len()),
            )
        })?;
        // links are sorted by (t, s), so pushes arrive in source order
        out[t].candidates.push((*tag).clone());
    }
    Ok(out)
}

/// Counts every (candidate tag, word) occurrence before disambiguation.
pub fn build_stats<'a>(sets: impl IntoIterator<Item = &'a CandidateSet>) -> ProjectionStats {
    let mut stats = ProjectionStats::default();
    for cs in sets {
        for tag in &cs.candidates {
            stats.add(tag, &cs.word, 1);
        }
    }
    stats
}

/// Resolves a non-empty candidate multiset to a single tag.
pub fn disambiguate(cs: &CandidateSet, stats: &ProjectionStats) -> Result<Tag> {
    if cs.candidates.is_empty() {
        return Err(Error::Parameter(format!("no candidate tags for {:?}", cs.word)));
    }
    let mut multiplicity: Vec<(&Tag, usize)> = Vec::new();
    for tag in &cs.candidates {
        match multiplicity.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, n)) => *n += 1,
            None => multiplicity.push((tag, 1)),
        }
    }
    let top = multiplicity.iter().map(|(_, n)| *n).max().unwrap_or(0);
    let tied: Vec<&Tag> = multiplicity
        .iter()
        .filter(|(_, n)| *n == top)
        .map(|(t, _)| *t)
        .collect();
    if tied.len() == 1 {
        return Ok(tied[0].clone());
    }
    let best = tied
        .into_iter()
        .map(|t| (t, stats.ratio(t, &cs.word)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .expect("at least two tied tags");
    Ok(best.0.clone())
}

/// Initial projected corpus plus the one-to-many statistic.
#[derive(Clone, Debug)]
pub struct Projection {
    pub corpus: TaggedCorpus,
    pub one_to_many: usize,
    pub unaligned: usize,
    pub total_tokens: usize,
    pub stats: ProjectionStats,
}

impl Projection {
    pub fn one_to_many_fraction(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.one_to_many as f64 / self.total_tokens as f64
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionSummary {
    pub total_tokens: usize,
    pub one_to_many: usize,
    pub one_to_many_fraction: f64,
    pub unaligned: usize,
}

impl From<&Projection> for ProjectionSummary {
    fn from(p: &Projection) -> Self {
        ProjectionSummary {
            total_tokens: p.total_tokens,
            one_to_many: p.one_to_many,
            one_to_many_fraction: p.one_to_many_fraction(),
            unaligned: p.unaligned,
        }
    }
}

/// Projects source tags onto every target verse. Unaligned tokens get UNK.
pub fn project_corpus(pairs: &[VersePair], alignments: &[Alignment], tagset_name: &str) -> Result<Projection> {
    if pairs.len() != alignments.len() {
        return Err(Error::Parameter(format!(
            "{} verse pairs but {} alignments",
            pairs.len(),
            alignments.len()
        )));
    }
    #[cfg(feature = "parallel")]
    let iter = pairs.par_iter().zip(alignments.par_iter());
    #[cfg(not(feature = "parallel"))]
    let iter = pairs.iter().zip(alignments.iter());
    let per_verse: Vec<Vec<CandidateSet>> = iter
        .map(|(p, a)| collect_candidates(p, a))
        .collect::<Result<_>>()?;

    let stats = build_stats(per_verse.iter().flatten());
    let mut one_to_many = 0;
    let mut unaligned = 0;
    let mut verses = Vec::with_capacity(pairs.len());
    for (pair, sets) in pairs.iter().zip(&per_verse) {
        let mut tokens = Vec::with_capacity(sets.len());
        for cs in sets {
            let tag = match cs.candidates.len() {
                0 => {
                    unaligned += 1;
                    Tag::unk()
                }
                n => {
                    if n >= 2 {
                        one_to_many += 1;
                    }
                    disambiguate(cs, &stats)?
                }
            };
            tokens.push(Token::tagged(cs.word.clone(), tag));
        }
        verses.push(Verse::new(pair.target.id.clone(), tokens));
    }
    let total_tokens = verses.iter().map(Verse::len).sum();
    Ok(Projection {
        corpus: TaggedCorpus::new(verses, Columns::One, tagset_name)?,
        one_to_many,
        unaligned,
        total_tokens,
        stats,
    })
}
