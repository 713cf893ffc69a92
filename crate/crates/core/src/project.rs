//! Project directories: configuration, file layout and atomic persistence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::align::LinkOrder;
use crate::bootstrap::{BootstrapConfig, BootstrapState, Schedule};
use crate::corpus::{parse_vertical, serialize_vertical, Columns, TaggedCorpus, Tagset, VerseId};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsRecord, Series};
use crate::tbl::{default_templates, parse_templates, RuleList, Template, DEFAULT_THRESHOLD};

pub const CONFIG_FILE: &str = "project.conf";

/// `key = value` settings of a project. Paths are relative to the project
/// root unless absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectConfig {
    /// Raw source side, `id<TAB>text` per line.
    pub source_text: Option<PathBuf>,
    /// Raw target side, `id<TAB>text` per line.
    pub target_text: Option<PathBuf>,
    /// One-column vertical file tagging the raw source tokens.
    pub source_tags: Option<PathBuf>,
    pub substitutions: Option<PathBuf>,
    pub max_len: usize,
    /// Target tagset file; the bundled Igbo tagset when unset.
    pub target_tagset: Option<PathBuf>,
    pub alignment_order: LinkOrder,
    pub ibm1_iterations: usize,
    /// Reference gold corpus of the target side.
    pub gold: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub theta: i64,
    pub schedule: Schedule,
    pub holdout: bool,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            source_text: None,
            target_text: None,
            source_tags: None,
            substitutions: None,
            max_len: crate::preprocess::DEFAULT_MAX_LEN,
            target_tagset: None,
            alignment_order: LinkOrder::TargetSource,
            ibm1_iterations: 10,
            gold: None,
            templates: None,
            theta: DEFAULT_THRESHOLD,
            schedule: Schedule::default(),
            holdout: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::format(line, format!("invalid value {value:?} for {key}")))
}

impl ProjectConfig {
    pub fn parse(content: &str) -> Result<ProjectConfig> {
        let mut c = ProjectConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = idx + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let (key, value) = text
                .split_once('=')
                .ok_or_else(|| Error::format(line, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::format(line, format!("duplicate key {key}")));
            }
            let path = || Some(PathBuf::from(value));
            match key {
                "source_text" => c.source_text = path(),
                "target_text" => c.target_text = path(),
                "source_tags" => c.source_tags = path(),
                "substitutions" => c.substitutions = path(),
                "max_len" => c.max_len = parse_value(line, key, value)?,
                "target_tagset" => c.target_tagset = path(),
                "alignment_order" => {
                    c.alignment_order = value.parse().map_err(|e: Error| Error::format(line, e.to_string()))?
                }
                "ibm1_iterations" => c.ibm1_iterations = parse_value(line, key, value)?,
                "gold" => c.gold = path(),
                "templates" => c.templates = path(),
                "theta" => c.theta = parse_value(line, key, value)?,
                "increment" => c.schedule.increment = parse_value(line, key, value)?,
                "iterations" => c.schedule.iterations = parse_value(line, key, value)?,
                "seed" => c.schedule.seed = parse_value(line, key, value)?,
                "holdout" => c.holdout = parse_value(line, key, value)?,
                other => return Err(Error::format(line, format!("unknown key {other:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.theta < 1 {
            return Err(Error::Parameter(format!("theta must be at least 1, got {}", self.theta)));
        }
        if self.max_len == 0 {
            return Err(Error::Parameter("max_len must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut path = |key: &str, p: &Option<PathBuf>| {
            if let Some(p) = p {
                let _ = writeln!(out, "{key} = {}", p.display());
            }
        };
        path("source_text", &self.source_text);
        path("target_text", &self.target_text);
        path("source_tags", &self.source_tags);
        path("substitutions", &self.substitutions);
        path("target_tagset", &self.target_tagset);
        path("gold", &self.gold);
        path("templates", &self.templates);
        let order = match self.alignment_order {
            LinkOrder::TargetSource => "target-source",
            LinkOrder::SourceTarget => "source-target",
        };
        let _ = writeln!(out, "max_len = {}", self.max_len);
        let _ = writeln!(out, "alignment_order = {order}");
        let _ = writeln!(out, "ibm1_iterations = {}", self.ibm1_iterations);
        let _ = writeln!(out, "theta = {}", self.theta);
        let _ = writeln!(out, "increment = {}", self.schedule.increment);
        let _ = writeln!(out, "iterations = {}", self.schedule.iterations);
        let _ = writeln!(out, "seed = {}", self.schedule.seed);
        let _ = writeln!(out, "holdout = {}", self.holdout);
        out
    }
}

/// Writes `content` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_vertical(path: &Path, columns: Columns) -> Result<TaggedCorpus> {
    parse_vertical(&read_text(path)?, columns).map_err(|e| match e {
        Error::Format { line, message } => Error::Format {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn read_ids(path: &Path) -> Result<Vec<VerseId>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|e: Error| Error::format(i + 1, e.to_string())))
        .collect()
}

pub fn ids_to_text(ids: &[VerseId]) -> String {
    ids.iter().map(|id| format!("{id}\n")).collect()
}

/// A project directory and its loaded configuration.
#[derive(Clone, Debug)]
pub struct Project {
    pub root: PathBuf,
    pub config: ProjectConfig,
}

impl Project {
    /// Opens `root`, reading `project.conf` if present.
    pub fn open(root: impl Into<PathBuf>) -> Result<Project> {
        let root = root.into();
        let conf = root.join(CONFIG_FILE);
        let config = if conf.exists() {
            ProjectConfig::parse(&read_text(&conf)?).map_err(|e| match e {
                Error::Format { line, message } => Error::Format {
                    line,
                    message: format!("{}: {message}", conf.display()),
                },
                other => other,
            })?
        } else {
            ProjectConfig::default()
        };
        Ok(Project { root, config })
    }

    pub fn save_config(&self) -> Result<()> {
        write_atomic(&self.root.join(CONFIG_FILE), &self.config.to_text())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn preprocessed_source(&self) -> PathBuf {
        self.path("preprocessed/source.txt")
    }

    pub fn preprocessed_target(&self) -> PathBuf {
        self.path("preprocessed/target.txt")
    }

    pub fn preprocessed_source_tags(&self) -> PathBuf {
        self.path("preprocessed/source.cols")
    }

    pub fn preprocess_report(&self) -> PathBuf {
        self.path("preprocess-report.txt")
    }

    pub fn alignments(&self) -> PathBuf {
        self.path("alignments.txt")
    }

    pub fn ttable(&self) -> PathBuf {
        self.path("ttable.tsv")
    }

    pub fn projection_log(&self) -> PathBuf {
        self.path("projection.log")
    }

    pub fn snapshot(&self, i: usize) -> PathBuf {
        self.path(&format!("snapshots/IgbTC-{i}.cols"))
    }

    pub fn rules(&self, i: usize) -> PathBuf {
        self.path(&format!("rules/iter-{i}.rules"))
    }

    pub fn gold_ids(&self, i: usize) -> PathBuf {
        self.path(&format!("gold-ids/iter-{i}.ids"))
    }

    pub fn metrics_csv(&self) -> PathBuf {
        self.path("metrics.csv")
    }

    pub fn holdout_csv(&self) -> PathBuf {
        self.path("metrics-holdout.csv")
    }

    pub fn gold_dir(&self) -> PathBuf {
        self.path("gold")
    }

    pub fn gold_verse(&self, id: &VerseId) -> PathBuf {
        self.gold_dir().join(format!("{id}.cols"))
    }

    pub fn tagset(&self) -> Result<Tagset> {
        match &self.config.target_tagset {
            None => Ok(Tagset::igbo()),
            Some(p) => {
                let p = self.resolve(p);
                let name = p.file_stem().map_or_else(|| "target".into(), |s| s.to_string_lossy().into_owned());
                Tagset::parse(name, &read_text(&p)?)
            }
        }
    }

    pub fn templates(&self) -> Result<Vec<Template>> {
        match &self.config.templates {
            None => Ok(default_templates()),
            Some(p) => parse_templates(&read_text(&self.resolve(p))?),
        }
    }

    pub fn bootstrap_config(&self) -> Result<BootstrapConfig> {
        Ok(BootstrapConfig {
            schedule: self.config.schedule.clone(),
            templates: self.templates()?,
            theta: self.config.theta,
            tagset: self.tagset()?,
            holdout: self.config.holdout,
        })
    }

    pub fn initial_state(&self) -> Result<TaggedCorpus> {
        read_vertical(&self.snapshot(0), Columns::One)
    }

    pub fn reference_gold(&self) -> Result<Option<TaggedCorpus>> {
        match &self.config.gold {
            None => Ok(None),
            Some(p) => read_vertical(&self.resolve(p), Columns::One).map(Some),
        }
    }

    pub fn read_metrics(&self) -> Result<Vec<MetricsRecord>> {
        let p = self.metrics_csv();
        if !p.exists() {
            return Ok(Vec::new());
        }
        metrics::parse_csv(&read_text(&p)?)
    }

    /// Writes `metrics.csv`, the two series files and the text report.
    pub fn write_metrics(&self, records: &[MetricsRecord]) -> Result<()> {
        write_atomic(&self.path("series/accuracy.tsv"), &metrics::series(records, Series::Accuracy))?;
        write_atomic(
            &self.path("series/transformation_rate.tsv"),
            &metrics::series(records, Series::TransformationRate),
        )?;
        write_atomic(&self.path("report.txt"), &metrics::report_table(records))?;
        write_atomic(&self.metrics_csv(), &metrics::to_csv(records))
    }

    pub fn write_rules(&self, i: usize, rules: &RuleList) -> Result<()> {
        write_atomic(&self.rules(i), &rules.to_text())
    }

    pub fn read_rules(&self, i: usize) -> Result<RuleList> {
        RuleList::parse(&read_text(&self.rules(i))?)
    }

    pub fn write_snapshot(&self, i: usize, corpus: &TaggedCorpus) -> Result<()> {
        write_atomic(&self.snapshot(i), &serialize_vertical(corpus)?)
    }

    /// Persists the files of one bootstrap state (not the metrics).
    pub fn write_state(&self, state: &BootstrapState) -> Result<()> {
        let i = state.iteration;
        self.write_snapshot(i, &state.snapshot)?;
        self.write_rules(i, &state.rules)?;
        write_atomic(&self.gold_ids(i), &ids_to_text(&state.gold_ids))
    }
}
