//! Accuracy, error rate and transformation rate, plus report emission.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Tag, TaggedCorpus, Tagset, Verse, VerseId};
use crate::error::{Error, Result};
use crate::par;

pub const CSV_HEADER: &str = "state,accuracy,error_rate,transformation_rate,token_total,correct_count,in_target_tagset_count";

/// Evaluation of one corpus state. The counts are authoritative; the rates
/// are derived from them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub state: String,
    pub accuracy: f64,
    pub error_rate: f64,
    pub transformation_rate: f64,
    pub token_total: u64,
    pub correct_count: u64,
    pub in_target_tagset_count: u64,
}

impl MetricsRecord {
    pub fn from_counts(state: impl Into<String>, token_total: u64, correct_count: u64, in_target_tagset_count: u64) -> Self {
        let ratio = |n: u64| if token_total == 0 { 0.0 } else { n as f64 / token_total as f64 };
        let accuracy = ratio(correct_count);
        MetricsRecord {
            state: state.into(),
            accuracy,
            error_rate: 1.0 - accuracy,
            transformation_rate: ratio(in_target_tagset_count),
            token_total,
            correct_count,
            in_target_tagset_count,
        }
    }
}

pub fn state_label(i: usize) -> String {
    format!("IgbTC-{i}")
}

#[derive(Default, Clone, Copy)]
struct Tally {
    total: u64,
    correct: u64,
    in_tagset: u64,
    in_tagset_correct: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            total: self.total + o.total,
            correct: self.correct + o.correct,
            in_tagset: self.in_tagset + o.in_tagset,
            in_tagset_correct: self.in_tagset_correct + o.in_tagset_correct,
        }
    }
}

/// Pairs every gold verse with the predicted verse of the same id.
fn pair_up<'a>(predicted: &'a TaggedCorpus, gold: &'a TaggedCorpus) -> Result<Vec<(&'a Verse, &'a Verse)>> {
    let index: HashMap<&VerseId, &Verse> = predicted.verses.iter().map(|v| (&v.id, v)).collect();
    gold.verses
        .iter()
        .map(|g| {
            let p = index
                .get(&g.id)
                .ok_or_else(|| Error::integrity(&g.id, "verse missing from the predicted corpus"))?;
            if p.len() != g.len() {
                return Err(Error::integrity(
                    &g.id,
                    format!("predicted has {} tokens, gold has {}", p.len(), g.len()),
                ));
            }
            Ok((*p, g))
        })
        .collect()
}

fn tally(predicted: &TaggedCorpus, gold: &TaggedCorpus, tagset: Option<&Tagset>) -> Result<Tally> {
    let pairs = pair_up(predicted, gold)?;
    let parts = par::map(pairs, |(p, g)| {
        let mut t = Tally::default();
        for (pt, gt) in p.tokens.iter().zip(&g.tokens) {
            t.total += 1;
            let correct = pt.tag.is_some() && pt.tag == gt.tag;
            let member = matches!((&pt.tag, tagset), (Some(tag), Some(ts)) if ts.contains(tag.as_str()));
            t.correct += correct as u64;
            t.in_tagset += member as u64;
            t.in_tagset_correct += (correct && member) as u64;
        }
        t
    });
    Ok(parts.into_iter().fold(Tally::default(), |a, b| a + b))
}

/// Metrics of `predicted` over the verses of `gold` (matched by id).
pub fn evaluate(state: impl Into<String>, predicted: &TaggedCorpus, gold: &TaggedCorpus, tagset: &Tagset) -> Result<MetricsRecord> {
    let t = tally(predicted, gold, Some(tagset))?;
    Ok(MetricsRecord::from_counts(state, t.total, t.correct, t.in_tagset))
}

/// Fraction of tokens whose tag equals the gold tag. Both corpora must
/// hold the same verses.
pub fn accuracy(predicted: &TaggedCorpus, gold: &TaggedCorpus) -> Result<f64> {
    if predicted.verses.len() != gold.verses.len() {
        let extra = predicted
            .verses
            .iter()
            .find(|v| gold.get(&v.id).is_none())
            .map_or_else(|| "?".to_string(), |v| v.id.to_string());
        return Err(Error::integrity(extra, "verse missing from the gold corpus"));
    }
    let t = tally(predicted, gold, None)?;
    Ok(MetricsRecord::from_counts("", t.total, t.correct, 0).accuracy)
}

/// Fraction of tokens carrying a label of `tagset`.
pub fn transformation_rate(corpus: &TaggedCorpus, tagset: &Tagset) -> f64 {
    let (total, member) = corpus
        .verses
        .iter()
        .flat_map(|v| &v.tokens)
        .fold((0u64, 0u64), |(n, m), t| {
            let hit = t.tag.as_ref().is_some_and(|tag| tagset.contains(tag.as_str()));
            (n + 1, m + hit as u64)
        });
    MetricsRecord::from_counts("", total, 0, member).transformation_rate
}

/// Fraction of tokens that carry a target-tagset label and match gold.
pub fn transformed_and_correct_rate(predicted: &TaggedCorpus, gold: &TaggedCorpus, tagset: &Tagset) -> Result<f64> {
    let t = tally(predicted, gold, Some(tagset))?;
    Ok(MetricsRecord::from_counts("", t.total, t.in_tagset_correct, 0).accuracy)
}

/// Token counts keyed by (gold tag, predicted tag).
pub fn confusion(predicted: &TaggedCorpus, gold: &TaggedCorpus) -> Result<BTreeMap<(String, String), u64>> {
    let mut out = BTreeMap::new();
    let label = |t: &Option<Tag>| t.as_ref().map_or_else(|| "-".to_string(), |t| t.to_string());
    for (p, g) in pair_up(predicted, gold)? {
        for (pt, gt) in p.tokens.iter().zip(&g.tokens) {
            *out.entry((label(&gt.tag), label(&pt.tag))).or_insert(0) += 1;
        }
    }
    Ok(out)
}

pub fn confusion_to_text(matrix: &BTreeMap<(String, String), u64>) -> String {
    let mut out = String::from("gold\tpredicted\tcount\n");
    for ((g, p), n) in matrix {
        let _ = writeln!(out, "{g}\t{p}\t{n}");
    }
    out
}

pub fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// Human-readable table, one row per state.
pub fn report_table(records: &[MetricsRecord]) -> String {
    let width = records.iter().map(|r| r.state.len()).max().unwrap_or(0).max("state".len());
    let mut out = format!("{:<width$}  {:>9}  {:>19}\n", "state", "accuracy", "transformation_rate");
    for r in records {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>19}",
            r.state,
            percent(r.accuracy),
            percent(r.transformation_rate)
        );
    }
    out
}

pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
    }
    out
}

pub fn csv_row(r: &MetricsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        r.state, r.accuracy, r.error_rate, r.transformation_rate, r.token_total, r.correct_count, r.in_target_tagset_count
    )
}

/// Parses [`to_csv`] output. Rates are recomputed from the count columns.
pub fn parse_csv(content: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::format(1, format!("expected header {CSV_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::format(idx + 1, format!("expected 7 fields, got {}", fields.len())));
        }
        let count = |i: usize| -> Result<u64> {
            fields[i]
                .parse()
                .map_err(|_| Error::format(idx + 1, format!("bad count {:?}", fields[i])))
        };
        let (total, correct, member) = (count(4)?, count(5)?, count(6)?);
        if correct > total || member > total {
            return Err(Error::format(idx + 1, "count exceeds token_total"));
        }
        out.push(MetricsRecord::from_counts(fields[0], total, correct, member));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    Accuracy,
    TransformationRate,
}

/// Plot-ready `state<TAB>value` lines.
pub fn series(records: &[MetricsRecord], which: Series) -> String {
    let mut out = String::new();
    for r in records {
        let v = match which {
            Series::Accuracy => r.accuracy,
            Series::TransformationRate => r.transformation_rate,
        };
        let _ = writeln!(out, "{}\t{}", r.state, v);
    }
    out
}
