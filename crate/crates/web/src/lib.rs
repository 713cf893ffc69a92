//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Each function takes and returns plain strings so the page needs no
//! bindings beyond what `wasm-bindgen` generates.

use std::fmt::Write as _;

use tagbridge::align::Alignment;
use tagbridge::bootstrap::{run_bootstrap, BootstrapConfig, Schedule};
use tagbridge::corpus::{parse_vertical, serialize_vertical, Columns, Tag, Tagset, Token, Verse, VerseId, VersePair};
use tagbridge::metrics::to_csv;
use tagbridge::projection::project_corpus;
use tagbridge::synth::{generate_synthetic, SynthConfig};
use tagbridge::tbl::{apply, default_templates, learn_traced, parse_templates};
use wasm_bindgen::prelude::*;

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// Generates a synthetic corpus, projects it and runs the bootstrap loop.
/// Returns the metrics as CSV, one row per state.
#[wasm_bindgen]
pub fn simulate(
    verses: usize,
    alignment_noise: f64,
    lexicon_divergence: f64,
    increment: f64,
    iterations: usize,
    seed: u64,
) -> Result<String, String> {
    let synth = generate_synthetic(&SynthConfig {
        verses,
        alignment_noise,
        lexicon_divergence,
        seed,
        ..SynthConfig::default()
    })
    .map_err(err)?;
    let tagset = Tagset::igbo();
    let initial = project_corpus(&synth.pairs, &synth.alignments, &tagset.name).map_err(err)?.corpus;
    let config = BootstrapConfig {
        schedule: Schedule { increment, iterations, seed },
        templates: default_templates(),
        theta: 2,
        tagset,
        holdout: false,
    };
    let states = run_bootstrap(&initial, &synth.gold, &config).map_err(err)?;
    let records: Vec<_> = states.into_iter().map(|s| s.metrics).collect();
    Ok(to_csv(&records))
}

/// Learns rules from a two-column corpus (form, current tag, true tag) and
/// returns the rule file followed by the corrected corpus. An empty
/// template text selects the default templates.
#[wasm_bindgen]
pub fn learn_rules(corpus: &str, templates: &str, theta: i64) -> Result<String, String> {
    let corpus = parse_vertical(corpus, Columns::Two).map_err(err)?;
    let templates = if templates.trim().is_empty() {
        default_templates()
    } else {
        parse_templates(templates).map_err(err)?
    };
    let trace = learn_traced(&corpus, &templates, theta).map_err(err)?;
    let mut out = trace.rules.to_text();
    let _ = writeln!(out, "\n# errors {} -> {}", trace.initial_errors, trace.errors_after.last().unwrap_or(&trace.initial_errors));
    out.push_str(&serialize_vertical(&apply(&trace.rules, &corpus.current_column())).map_err(err)?);
    Ok(out)
}

/// Projects the tags of one tagged source sentence (`word/TAG` tokens)
/// onto a target sentence through zero-based `t-s` links. Returns `word<TAB>tag`
/// lines; unaligned words get UNK.
#[wasm_bindgen]
pub fn project_verse(source: &str, target: &str, links: &str) -> Result<String, String> {
    let id = VerseId::new("demo", 1, 1);
    let source_tokens = source
        .split_whitespace()
        .map(|t| {
            let (form, tag) = t.rsplit_once('/').ok_or_else(|| format!("{t:?} is not word/TAG"))?;
            Ok(Token::tagged(form, Tag::new(tag).map_err(err)?))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let pair = VersePair {
        source: Verse::new(id.clone(), source_tokens),
        target: Verse::from_text(id, target),
    };
    let mut parsed = Vec::new();
    for l in links.split_whitespace() {
        let (t, s) = l.split_once('-').ok_or_else(|| format!("malformed link {l:?}"))?;
        let t = t.parse::<usize>().map_err(|_| format!("malformed link {l:?}"))?;
        let s = s.parse::<usize>().map_err(|_| format!("malformed link {l:?}"))?;
        parsed.push((t, s));
    }
    let p = project_corpus(&[pair], &[Alignment::new(parsed)], "").map_err(err)?;
    let mut out = String::new();
    for t in &p.corpus.verses[0].tokens {
        let _ = writeln!(out, "{}\t{}", t.form, t.tag.as_ref().map_or("", |t| t.as_str()));
    }
    Ok(out)
}
