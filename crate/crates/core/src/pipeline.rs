//! Pipeline stages over a project directory. Each stage reads the files
//! of the previous one and writes its own.

use std::fmt::Write as _;
use std::path::Path;

use crate::align::{
    align_corpus, check_alignments, parse_alignment_file, serialize_alignments, train_ibm1, Alignment, LinkOrder,
};
use crate::bootstrap::run_bootstrap_with;
use crate::corpus::{attach_source_tags, parse_parallel, serialize_parallel_side, serialize_vertical, Columns, TaggedCorpus, VersePair};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsRecord};
use crate::preprocess::{preprocess_corpus, verify_parallel, ParallelReport, PreprocessOptions, Substitutions};
use crate::project::{read_text, read_vertical, write_atomic, Project};
use crate::projection::{project_corpus, ProjectionSummary};
use crate::synth::{generate_synthetic, SynthConfig, SyntheticCorpus};

fn required<'a>(value: &'a Option<std::path::PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Parameter(format!("project.conf does not set {key}")))
}

fn require_file(path: &Path, produced_by: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "missing {} (run `{produced_by}` first)",
            path.display()
        )))
    }
}

/// Cleans the raw parallel text and writes the `preprocessed/` files.
pub fn preprocess(project: &Project) -> Result<ParallelReport> {
    let c = &project.config;
    let source = read_text(&project.resolve(required(&c.source_text, "source_text")?))?;
    let target = read_text(&project.resolve(required(&c.target_text, "target_text")?))?;
    let verified = verify_parallel(parse_parallel(&source, &target))?;
    let mut pairs = verified.pairs;
    let tagged = match &c.source_tags {
        Some(p) => {
            let tags = read_vertical(&project.resolve(p), Columns::One)?;
            attach_source_tags(&mut pairs, &tags)?;
            true
        }
        None => false,
    };
    let substitutions = match &c.substitutions {
        Some(p) => Substitutions::parse(&read_text(&project.resolve(p))?)?,
        None => Substitutions::default(),
    };
    let opts = PreprocessOptions {
        max_len: c.max_len,
        substitutions,
    };
    let (pairs, mut report) = preprocess_corpus(&pairs, &opts)?;
    report.missing_in_source = verified.report.missing_in_source;
    report.missing_in_target = verified.report.missing_in_target;
    write_pairs(project, &pairs, tagged)?;
    write_atomic(&project.preprocess_report(), &report.to_text())?;
    Ok(report)
}

fn write_pairs(project: &Project, pairs: &[VersePair], tagged: bool) -> Result<()> {
    write_atomic(
        &project.preprocessed_source(),
        &serialize_parallel_side(pairs.iter().map(|p| &p.source)),
    )?;
    write_atomic(
        &project.preprocessed_target(),
        &serialize_parallel_side(pairs.iter().map(|p| &p.target)),
    )?;
    if tagged {
        let source = TaggedCorpus::new(pairs.iter().map(|p| p.source.clone()).collect(), Columns::One, "source")?;
        write_atomic(&project.preprocessed_source_tags(), &serialize_vertical(&source)?)?;
    }
    Ok(())
}

/// Preprocessed pairs, with source tags attached when present.
pub fn load_pairs(project: &Project) -> Result<Vec<VersePair>> {
    require_file(&project.preprocessed_source(), "preprocess")?;
    let source = read_text(&project.preprocessed_source())?;
    let target = read_text(&project.preprocessed_target())?;
    let mut pairs = parse_parallel(&source, &target)?;
    let tags = project.preprocessed_source_tags();
    if tags.exists() {
        attach_source_tags(&mut pairs, &read_vertical(&tags, Columns::One)?)?;
    }
    Ok(pairs)
}

pub fn load_alignments(project: &Project, pairs: &[VersePair]) -> Result<Vec<Alignment>> {
    let path = project.alignments();
    require_file(&path, "align")?;
    let alignments = parse_alignment_file(&read_text(&path)?, LinkOrder::TargetSource)?;
    check_alignments(pairs, &alignments)?;
    Ok(alignments)
}

/// Trains IBM Model 1 on the preprocessed pairs and writes Viterbi links
/// and the translation table. Returns the per-iteration log-likelihoods.
pub fn align_ibm1(project: &Project) -> Result<Vec<f64>> {
    let pairs = load_pairs(project)?;
    let model = train_ibm1(&pairs, project.config.ibm1_iterations)?;
    let alignments = align_corpus(&model.table, &pairs);
    write_atomic(&project.ttable(), &model.table.to_tsv())?;
    write_atomic(&project.alignments(), &serialize_alignments(&alignments))?;
    Ok(model.log_likelihoods)
}

/// Checks an external alignment file against the preprocessed pairs and
/// stores it in target-source order.
pub fn align_import(project: &Project, file: &Path, order: LinkOrder) -> Result<usize> {
    let pairs = load_pairs(project)?;
    let alignments = parse_alignment_file(&read_text(file)?, order)?;
    check_alignments(&pairs, &alignments)?;
    write_atomic(&project.alignments(), &serialize_alignments(&alignments))?;
    Ok(alignments.len())
}

/// Projects source tags through the alignments into `snapshots/IgbTC-0.cols`.
pub fn project(project: &Project) -> Result<ProjectionSummary> {
    let pairs = load_pairs(project)?;
    if !project.preprocessed_source_tags().exists() {
        return Err(Error::Parameter(format!(
            "missing {} (set source_tags and run `preprocess`)",
            project.preprocessed_source_tags().display()
        )));
    }
    let alignments = load_alignments(project, &pairs)?;
    let tagset = project.tagset()?;
    let p = project_corpus(&pairs, &alignments, &tagset.name)?;
    let summary = ProjectionSummary::from(&p);
    project.write_snapshot(0, &p.corpus)?;
    let mut log = String::new();
    let _ = writeln!(log, "tokens\t{}", summary.total_tokens);
    let _ = writeln!(log, "one_to_many\t{}", summary.one_to_many);
    let _ = writeln!(log, "one_to_many_fraction\t{}", summary.one_to_many_fraction);
    let _ = writeln!(log, "unaligned\t{}", summary.unaligned);
    write_atomic(&project.projection_log(), &log)?;
    Ok(summary)
}

/// Runs the full loop against the reference gold corpus and persists every
/// state plus the metrics files.
pub fn bootstrap(project: &Project) -> Result<Vec<MetricsRecord>> {
    require_file(&project.snapshot(0), "project")?;
    let initial = project.initial_state()?;
    let gold = project
        .reference_gold()?
        .ok_or_else(|| Error::Parameter("project.conf does not set gold".into()))?;
    let config = project.bootstrap_config()?;
    let mut records = Vec::new();
    let mut holdout = Vec::new();
    run_bootstrap_with(&initial, &gold, &config, |state| {
        project.write_state(state)?;
        records.push(state.metrics.clone());
        holdout.extend(state.holdout.clone());
        Ok(())
    })?;
    project.write_metrics(&records)?;
    if config.holdout {
        write_atomic(&project.holdout_csv(), &metrics::to_csv(&holdout))?;
    }
    Ok(records)
}

/// Writes a synthetic corpus as preprocessed input, alignments and gold,
/// and points the project configuration at the gold file.
pub fn synth(project: &mut Project, config: &SynthConfig) -> Result<SyntheticCorpus> {
    let s = generate_synthetic(config)?;
    write_pairs(project, &s.pairs, true)?;
    write_atomic(&project.alignments(), &serialize_alignments(&s.alignments))?;
    write_atomic(&project.path("gold.cols"), &serialize_vertical(&s.gold)?)?;
    project.config.gold = Some("gold.cols".into());
    project.save_config()?;
    Ok(s)
}
