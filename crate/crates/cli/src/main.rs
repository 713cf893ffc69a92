use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tagbridge::align::LinkOrder;
use tagbridge::corpus::{serialize_vertical, Columns, Tagset};
use tagbridge::metrics::{self, evaluate, CSV_HEADER};
use tagbridge::project::{read_text, read_vertical, write_atomic, Project};
use tagbridge::synth::SynthConfig;
use tagbridge::tbl::{apply, learn_traced, parse_templates, RuleList};
use tagbridge::{pipeline, Error};

/// Cross-lingual POS tag projection and transformation-based bootstrapping.
///
/// Every subcommand works on a project directory holding `project.conf`
/// and the files produced by earlier stages. File arguments are resolved
/// against the project directory unless absolute.
#[derive(Parser)]
#[command(name = "tagbridge", version)]
struct Cli {
    /// Project directory.
    #[arg(long, global = true, default_value = ".")]
    project: PathBuf,
    /// Worker threads for parallel stages (default: available cores).
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and split the parallel text; writes preprocessed/.
    Preprocess,
    /// Produce word alignments in alignments.txt.
    #[command(subcommand)]
    Align(AlignCommand),
    /// Project source tags onto the target side; writes snapshots/IgbTC-0.cols.
    Project,
    /// Learn one rule list from a two-column (current, truth) corpus.
    Train(TrainArgs),
    /// Apply a rule list to a corpus.
    Apply(ApplyArgs),
    /// Run the full loop with the gold corpus as simulated annotator.
    Bootstrap(BootstrapArgs),
    /// Compare a predicted corpus with a gold corpus.
    Eval(EvalArgs),
    /// Generate a synthetic parallel corpus with gold tags and alignments.
    Synth(SynthArgs),
    /// Serve the annotation HTTP API.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum AlignCommand {
    /// Train IBM Model 1 on the preprocessed pairs (ibm1_iterations rounds).
    TrainIbm1,
    /// Import an external alignment file, one line of `i-j` links per verse.
    Import {
        file: PathBuf,
        /// Link order in the file: target-source or source-target
        /// (default: alignment_order from project.conf).
        #[arg(long)]
        order: Option<LinkOrder>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Two-column vertical corpus.
    #[arg(long)]
    input: PathBuf,
    /// Rule file to write.
    #[arg(long)]
    output: PathBuf,
    /// Template file (default: the project templates).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Minimum score; a rule must improve by more than this.
    #[arg(long)]
    theta: Option<i64>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    rules: PathBuf,
    /// One-column vertical corpus.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Number of iterations (saved to project.conf).
    #[arg(long)]
    iterations: Option<usize>,
    /// Fraction of verses added per iteration (saved to project.conf).
    #[arg(long)]
    increment: Option<f64>,
    /// Seed for slice selection (saved to project.conf).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Target tagset file (default: the project tagset).
    #[arg(long)]
    tagset: Option<PathBuf>,
    /// State label written in the first column.
    #[arg(long, default_value = "eval")]
    state: String,
    /// Also print the (gold, predicted) confusion counts.
    #[arg(long)]
    confusion: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    verses: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Probability of re-linking a target token.
    #[arg(long, default_value_t = 0.15)]
    alignment_noise: f64,
    /// Probability that a lexicon entry maps to another source category.
    #[arg(long, default_value_t = 0.1)]
    lexicon_divergence: f64,
    /// Probability that a token carries a tag shared by both tagsets.
    #[arg(long, default_value_t = 0.08)]
    shared_rate: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global thread pool is set once");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut project = Project::open(&cli.project)?;
    match cli.command {
        Command::Preprocess => {
            let report = pipeline::preprocess(&project)?;
            print!("{}", report.to_text());
        }
        Command::Align(AlignCommand::TrainIbm1) => {
            let ll = pipeline::align_ibm1(&project)?;
            for (i, v) in ll.iter().enumerate() {
                println!("iteration {i}\tlog-likelihood {v}");
            }
        }
        Command::Align(AlignCommand::Import { file, order }) => {
            let order = order.unwrap_or(project.config.alignment_order);
            let n = pipeline::align_import(&project, &project.resolve(&file), order)?;
            println!("imported {n} alignment lines");
        }
        Command::Project => {
            let s = pipeline::project(&project)?;
            println!("tokens\t{}", s.total_tokens);
            println!("one_to_many\t{}\t{}", s.one_to_many, metrics::percent(s.one_to_many_fraction));
            println!("unaligned\t{}", s.unaligned);
        }
        Command::Train(a) => {
            let corpus = read_vertical(&project.resolve(&a.input), Columns::Two)?;
            let templates = match &a.templates {
                Some(p) => parse_templates(&read_text(&project.resolve(p))?)?,
                None => project.templates()?,
            };
            let theta = a.theta.unwrap_or(project.config.theta);
            let trace = learn_traced(&corpus, &templates, theta)?;
            write_atomic(&project.resolve(&a.output), &trace.rules.to_text())?;
            let last = trace.errors_after.last().copied().unwrap_or(trace.initial_errors);
            println!("{} rules; errors {} -> {}", trace.rules.len(), trace.initial_errors, last);
        }
        Command::Apply(a) => {
            let rules = RuleList::parse(&read_text(&project.resolve(&a.rules))?)?;
            let corpus = read_vertical(&project.resolve(&a.input), Columns::One)?;
            write_atomic(&project.resolve(&a.output), &serialize_vertical(&apply(&rules, &corpus))?)?;
        }
        Command::Bootstrap(a) => {
            let s = &mut project.config.schedule;
            let changed = a.iterations.is_some() || a.increment.is_some() || a.seed.is_some();
            s.iterations = a.iterations.unwrap_or(s.iterations);
            s.increment = a.increment.unwrap_or(s.increment);
            s.seed = a.seed.unwrap_or(s.seed);
            if changed {
                project.config.validate()?;
                project.save_config()?;
            }
            let records = pipeline::bootstrap(&project)?;
            print!("{}", metrics::report_table(&records));
        }
        Command::Eval(a) => {
            let pred = read_vertical(&project.resolve(&a.pred), Columns::One)?;
            let gold = read_vertical(&project.resolve(&a.gold), Columns::One)?;
            let tagset = match &a.tagset {
                Some(p) => load_tagset(&project.resolve(p))?,
                None => project.tagset()?,
            };
            let record = evaluate(a.state, &pred, &gold, &tagset)?;
            println!("{CSV_HEADER}");
            print!("{}", metrics::csv_row(&record));
            if a.confusion {
                print!("{}", metrics::confusion_to_text(&metrics::confusion(&pred, &gold)?));
            }
        }
        Command::Synth(a) => {
            let config = SynthConfig {
                verses: a.verses,
                seed: a.seed,
                alignment_noise: a.alignment_noise,
                lexicon_divergence: a.lexicon_divergence,
                shared_rate: a.shared_rate,
                ..SynthConfig::default()
            };
            std::fs::create_dir_all(&project.root).map_err(|e| Error::io(&project.root, e))?;
            let s = pipeline::synth(&mut project, &config)?;
            println!("verses\t{}", s.pairs.len());
            println!("tokens\t{}", s.total_tokens);
            println!("shared_fraction\t{}", s.shared_fraction());
        }
        Command::Serve(a) => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(Path::new("tokio runtime"), e))?;
            runtime
                .block_on(tagbridge_service::run(a.addr, project.root.clone(), |addr| {
                    println!("listening on http://{addr}");
                }))
                .map_err(|e| Error::io(&project.root, e))?;
        }
    }
    Ok(())
}

fn load_tagset(path: &Path) -> Result<Tagset, Error> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Tagset::parse(name, &read_text(path)?)
}
