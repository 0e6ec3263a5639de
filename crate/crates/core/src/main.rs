use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Args, Parser, Subcommand};

use frostkit::annotate::KindSet;
use frostkit::chain::PlanLevel;
use frostkit::control::MatchPolicy;
use frostkit::eval::report::{Bootstrap, EvalConfig};
use frostkit::pipeline::{self, Context, RunSummary, TextField};
use frostkit::pretrain::{DEFAULT_MASK_TOKEN, DEFAULT_N_MAX};
use frostkit::record::{read_records, RecognizerChoice, RunConfig};

const GAZETTEER_ENV: &str = "FROSTKIT_GAZETTEER";

#[derive(Parser)]
#[command(name = "frostkit", version, about = "Entity-chain content planning tools for summarization corpora")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Entity kinds to annotate, comma separated.
    #[arg(long, global = true, default_value = "named,date,number")]
    kinds: KindSet,
    #[arg(long, global = true, default_value = "summary")]
    level: PlanLevel,
    /// passthrough, heuristic or external.
    #[arg(long, global = true, default_value = "heuristic")]
    recognizer: RecognizerChoice,
    /// Side file of named-entity spans for the external recognizer.
    #[arg(long, global = true)]
    entities_file: Option<PathBuf>,
    /// Disable Porter stemming in ROUGE.
    #[arg(long, global = true)]
    no_stem: bool,
    #[arg(long, global = true)]
    no_case_fold: bool,
    #[arg(long, global = true)]
    no_whitespace_collapse: bool,
    #[arg(long, global = true, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    #[arg(long, global = true, default_value = DEFAULT_MASK_TOKEN)]
    mask_token: String,
    /// Seed for bootstrap resampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stop at the first bad record with exit code 2.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Args)]
struct Io {
    /// Input JSON Lines; stdin when omitted.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fill each record's entity spans.
    Annotate {
        #[command(flatten)]
        io: Io,
        /// summary, document or predicted.
        #[arg(long, default_value = "summary")]
        field: TextField,
    },
    /// Build chain-augmented training targets.
    Augment {
        #[command(flatten)]
        io: Io,
    },
    /// Keep records whose summary chain is fully supported by the document.
    Filter {
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[arg(long)]
        kept: PathBuf,
        #[arg(long)]
        rejected: PathBuf,
    },
    /// Drop unsupported entities from predicted chains and emit forced prefixes.
    DropPrompt {
        #[command(flatten)]
        io: Io,
        /// Documents keyed by id; otherwise each record's own document is used.
        #[arg(long)]
        documents: Option<PathBuf>,
    },
    /// Score predictions against references and source documents.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        documents: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit a CSV header and row instead of JSON.
        #[arg(long)]
        csv: bool,
        /// Bootstrap confidence intervals with this many resamples.
        #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
        bootstrap: Option<usize>,
    },
    /// Corpus statistics of the target summaries.
    Stats {
        #[command(flatten)]
        io: Io,
        /// Render a markdown table row with this dataset name.
        #[arg(long, num_args = 0..=1, default_missing_value = "corpus")]
        markdown: Option<String>,
    },
    /// Gap-sentence pretraining examples.
    PretrainPrep {
        #[command(flatten)]
        io: Io,
        /// Read plain text, one document per line.
        #[arg(long)]
        text: bool,
    },
}

fn open_input(path: Option<&Path>) -> anyhow::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load(path: &Path) -> anyhow::Result<Vec<frostkit::record::DatasetRecord>> {
    let reader = open_input(Some(path))?;
    Ok(read_records(reader, &path.display().to_string())?)
}

fn report_failures(summary: &RunSummary) {
    for f in &summary.failures {
        match &f.id {
            Some(id) => eprintln!("warning: line {} (id {id:?}): {}", f.line, f.message),
            None => eprintln!("warning: line {}: {}", f.line, f.message),
        }
    }
    if !summary.failures.is_empty() {
        eprintln!("{} records processed, {} skipped", summary.records, summary.failures.len());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    if g.n_max == 0 {
        bail!(frostkit::Error::InvalidNMax);
    }
    let config = RunConfig {
        kinds: g.kinds,
        level: g.level,
        recognizer: g.recognizer,
        stemming: !g.no_stem,
        policy: MatchPolicy {
            case_fold: !g.no_case_fold,
            whitespace_collapse: !g.no_whitespace_collapse,
        },
        n_max: g.n_max,
        mask_token: g.mask_token,
        seed: g.seed,
    };
    let gazetteer = std::env::var_os(GAZETTEER_ENV).map(PathBuf::from);
    let annotator = pipeline::build_annotator(&config, g.entities_file.as_deref(), gazetteer.as_deref())?;
    let ctx = Context {
        config,
        annotator,
        strict: g.strict,
    };

    match cli.command {
        Command::Annotate { io, field } => {
            let mut out = open_output(io.output.as_deref())?;
            let s = pipeline::cmd_annotate(open_input(io.input.as_deref())?, &mut out, &ctx, field)?;
            out.flush()?;
            report_failures(&s);
        }
        Command::Augment { io } => {
            let mut out = open_output(io.output.as_deref())?;
            let s = pipeline::cmd_augment(open_input(io.input.as_deref())?, &mut out, &ctx)?;
            out.flush()?;
            report_failures(&s);
        }
        Command::Filter { input, kept, rejected } => {
            let mut k = open_output(Some(&kept))?;
            let mut r = open_output(Some(&rejected))?;
            let (s, counts) = pipeline::cmd_filter(open_input(input.as_deref())?, &mut k, &mut r, &ctx)?;
            k.flush()?;
            r.flush()?;
            report_failures(&s);
            println!("{}", serde_json::to_string(&counts)?);
        }
        Command::DropPrompt { io, documents } => {
            let docs = documents.as_deref().map(load).transpose()?;
            let mut out = open_output(io.output.as_deref())?;
            let s = pipeline::cmd_drop_prompt(open_input(io.input.as_deref())?, docs.as_deref(), &mut out, &ctx)?;
            out.flush()?;
            report_failures(&s);
        }
        Command::Evaluate {
            predictions,
            references,
            documents,
            output,
            csv,
            bootstrap,
        } => {
            let eval = EvalConfig {
                stemming: ctx.config.stemming,
                policy: ctx.config.policy,
                bootstrap: bootstrap.map(|resamples| Bootstrap {
                    resamples,
                    seed: ctx.config.seed,
                }),
            };
            let (p, r, d) = (load(&predictions)?, load(&references)?, load(&documents)?);
            let mut out = open_output(output.as_deref())?;
            let report = pipeline::cmd_evaluate(&p, &r, &d, &mut out, &ctx, &eval, csv)?;
            out.flush()?;
            for id in &report.failed {
                eprintln!("warning: could not score id {id:?}");
            }
        }
        Command::Stats { io, markdown } => {
            let mut out = open_output(io.output.as_deref())?;
            let (s, _) = pipeline::cmd_stats(open_input(io.input.as_deref())?, &mut out, &ctx, markdown.as_deref())?;
            out.flush()?;
            report_failures(&s);
        }
        Command::PretrainPrep { io, text } => {
            let mut out = open_output(io.output.as_deref())?;
            let s = pipeline::cmd_pretrain_prep(open_input(io.input.as_deref())?, &mut out, &ctx, text)?;
            out.flush()?;
            report_failures(&s);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
