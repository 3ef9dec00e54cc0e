//! `attrib`: build, judge and score attribution datasets.

mod config;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use attrib_core::client::{GenerationClient, HttpClient, MockClient, RecordingClient, ReplayClient};
use attrib_core::evaluator::{evaluate_batch, oracle_client, FewShotSet};
use attrib_core::export::{instruction_records, ExportFormat};
use attrib_core::jsonl::{
    read_examples, read_records, read_values, write_records, ReadMode, DATASET_FORMAT_VERSION,
    PREDICTION_FORMAT_VERSION, REPORT_FORMAT_VERSION,
};
use attrib_core::metrics::{report, EvalReport};
use attrib_core::repurpose::{read_source_records, repurpose_all, Dataset, MappingTable};
use attrib_core::retrieval::{Bm25Index, Bm25Params, Passage, DEFAULT_B, DEFAULT_K1, INDEX_FORMAT_VERSION};
use attrib_core::sample::{sample, SampleOptions};
use attrib_core::simulate::{prepare_records, simulate_dataset, Endpoints, QaInput};
use attrib_core::{AttributionLabel, Prediction, PromptVariant};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "attrib", about = "Attribution evaluation toolkit")]
struct Cli {
    /// Flat TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Skip unknown JSON fields and unknown source labels instead of failing
    #[arg(long, global = true)]
    lenient: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a fact-checking, NLI or summarization dataset to attribution examples
    Repurpose {
        #[arg(long)]
        dataset: Dataset,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// JSON object of {"dataset": {"label": "Attributable" | ... | "drop"}} overrides
        #[arg(long)]
        mapping_file: Option<PathBuf>,
    },
    /// Build a BM25 index over a {"doc_id","text"} JSONL corpus
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K1)]
        k1: f64,
        #[arg(long, default_value_t = DEFAULT_B)]
        b: f64,
    },
    /// Generate labeled examples from QA records
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Where to write dropped record ids and reasons
        #[arg(long)]
        drops: Option<PathBuf>,
        /// mock:TABLE, replay:CASSETTE, http or record:CASSETTE
        #[arg(long)]
        substituter: Option<String>,
        /// Same forms as --substituter
        #[arg(long)]
        longifier: Option<String>,
        #[arg(long)]
        longify: bool,
    },
    /// Ask a model to judge each example
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        variant: Option<PromptVariant>,
        #[arg(long)]
        shots: Option<usize>,
        /// Demonstrations JSONL (defaults to the built-in three)
        #[arg(long)]
        demos: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        /// Answer every prompt with its gold label
        #[arg(long, conflicts_with_all = ["mock_table", "replay"])]
        oracle: bool,
        #[arg(long, conflicts_with = "replay")]
        mock_table: Option<PathBuf>,
        /// Serve responses from a recorded cassette; no network access
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Save every exchange to this cassette
        #[arg(long, conflicts_with = "replay")]
        record: Option<PathBuf>,
    },
    /// Score predictions against gold labels
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write examples as instruction-tuning records or plain JSONL
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: ExportFormat,
        #[arg(long)]
        output: PathBuf,
    },
    /// Seeded subsample that keeps input order
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long)]
        stratify: bool,
        #[arg(long)]
        allow_fewer: bool,
    },
}

struct Ctx {
    cfg: RunConfig,
    mode: ReadMode,
    lenient: bool,
}

fn version_text() -> String {
    format!(
        "{}\ndataset format {DATASET_FORMAT_VERSION}\nprediction format {PREDICTION_FORMAT_VERSION}\nreport format {REPORT_FORMAT_VERSION}\nindex format {INDEX_FORMAT_VERSION}",
        env!("CARGO_PKG_VERSION")
    )
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(version_text().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let lenient = cli.lenient || cfg.lenient.unwrap_or(false);
    let ctx = Ctx {
        cfg,
        mode: if lenient { ReadMode::Lenient } else { ReadMode::Strict },
        lenient,
    };
    match cli.command {
        Command::Repurpose {
            dataset,
            input,
            output,
            mapping_file,
        } => cmd_repurpose(&ctx, dataset, &input, &output, mapping_file.as_deref()),
        Command::Index { corpus, output, k1, b } => cmd_index(&corpus, &output, Bm25Params { k1, b }),
        Command::Simulate {
            input,
            index,
            output,
            drops,
            substituter,
            longifier,
            longify,
        } => cmd_simulate(&ctx, &input, &index, &output, drops.as_deref(), substituter, longifier, longify),
        Command::Evaluate {
            input,
            output,
            variant,
            shots,
            demos,
            budget,
            oracle,
            mock_table,
            replay,
            record,
        } => {
            let source = match (oracle, mock_table, replay) {
                (true, _, _) => Source::Oracle,
                (_, Some(p), _) => Source::Mock(p),
                (_, _, Some(p)) => Source::Replay(p),
                _ => Source::Http,
            };
            cmd_evaluate(&ctx, &input, &output, variant, shots, demos, budget, source, record)
        }
        Command::Score {
            predictions,
            gold,
            output,
        } => cmd_score(&ctx, &predictions, &gold, &output),
        Command::Export { input, format, output } => cmd_export(&ctx, &input, format, &output),
        Command::Sample {
            input,
            output,
            n,
            stratify,
            allow_fewer,
        } => cmd_sample(&ctx, &input, &output, n, stratify, allow_fewer),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn cmd_repurpose(ctx: &Ctx, dataset: Dataset, input: &Path, output: &Path, mapping: Option<&Path>) -> Result<()> {
    let mut table = MappingTable::default();
    if let Some(p) = mapping {
        table = table.with_overrides_file(p)?;
    }
    let records = read_source_records(dataset, input).with_context(|| format!("reading {}", input.display()))?;
    let run = repurpose_all(records, table, ctx.cfg.seed.unwrap_or(0))?;
    write_records(output, &run.examples)?;
    print_json(&run.summary())?;
    for e in &run.unknown {
        eprintln!("{}: {e}", if ctx.lenient { "warning" } else { "error" });
    }
    if !run.unknown.is_empty() && !ctx.lenient {
        bail!("{} record(s) with unknown labels (use --lenient to skip them)", run.unknown.len());
    }
    Ok(())
}

fn cmd_index(corpus: &Path, output: &Path, params: Bm25Params) -> Result<()> {
    let passages: Vec<Passage> = read_records(corpus)?;
    let idx = Bm25Index::build(passages, params)?;
    idx.save(output)?;
    eprintln!("indexed {} passages (avg length {:.1})", idx.len(), idx.avg_len());
    Ok(())
}

/// Reads QA lines, dropping unknown keys first in lenient mode.
fn read_qa(path: &Path, mode: ReadMode) -> Result<Vec<QaInput>> {
    const KEYS: [&str; 5] = ["id", "question", "answers", "positive_context", "source"];
    let mut out = Vec::new();
    for (line, mut v) in read_values(path)? {
        if let (ReadMode::Lenient, Some(map)) = (mode, v.as_object_mut()) {
            map.retain(|k, _| KEYS.contains(&k.as_str()));
        }
        out.push(serde_json::from_value(v).with_context(|| format!("{}:{line}", path.display()))?);
    }
    Ok(out)
}

/// A client plus an optional cassette to flush once the run is over.
enum Endpoint {
    Plain(Box<dyn GenerationClient>),
    Recording(RecordingClient<Box<dyn GenerationClient>>),
}

impl Endpoint {
    fn client(&self) -> &dyn GenerationClient {
        match self {
            Endpoint::Plain(c) => c.as_ref(),
            Endpoint::Recording(r) => r,
        }
    }

    fn finish(&self) -> Result<()> {
        if let Endpoint::Recording(r) = self {
            r.save()?;
            eprintln!("recorded {} exchange(s)", r.len());
        }
        Ok(())
    }
}

fn http(ctx: &Ctx, model: Option<&str>) -> Result<Box<dyn GenerationClient>> {
    Ok(Box::new(HttpClient::new(ctx.cfg.endpoint(model))?))
}

fn endpoint_from_arg(ctx: &Ctx, arg: &str, model: Option<&str>) -> Result<Endpoint> {
    let name = model.or(ctx.cfg.model_id.as_deref()).unwrap_or("mock");
    let (kind, path) = arg.split_once(':').unwrap_or((arg, ""));
    Ok(match (kind, path) {
        ("http", "") => Endpoint::Plain(http(ctx, model)?),
        ("mock", p) if !p.is_empty() => Endpoint::Plain(Box::new(MockClient::from_file(name, Path::new(p))?)),
        ("replay", p) if !p.is_empty() => Endpoint::Plain(Box::new(ReplayClient::load(Path::new(p), None)?)),
        ("record", p) if !p.is_empty() => Endpoint::Recording(RecordingClient::new(http(ctx, model)?, p)),
        _ => bail!("bad endpoint {arg:?}; expected mock:PATH, replay:PATH, http or record:PATH"),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ctx: &Ctx,
    input: &Path,
    index: &Path,
    output: &Path,
    drops_path: Option<&Path>,
    substituter: Option<String>,
    longifier: Option<String>,
    longify: bool,
) -> Result<()> {
    let mut cfg = ctx.cfg.simulation()?;
    cfg.longify |= longify;
    cfg.validate()?;
    let idx = Bm25Index::load(index).with_context(|| format!("loading index {}", index.display()))?;
    let inputs = read_qa(input, ctx.mode)?;

    let sub = substituter
        .map(|s| endpoint_from_arg(ctx, &s, ctx.cfg.substituter_model_id.as_deref()))
        .transpose()?;
    let long = longifier
        .map(|s| endpoint_from_arg(ctx, &s, ctx.cfg.longifier_model_id.as_deref()))
        .transpose()?;
    let eps = Endpoints {
        longifier: long.as_ref().map(Endpoint::client),
        substituter: sub.as_ref().map(Endpoint::client),
    };

    let (records, mut drops) = prepare_records(&inputs, Some(&idx), &cfg);
    let out = simulate_dataset(&records, &cfg, &eps, Some(&idx))?;
    for e in sub.iter().chain(long.iter()) {
        e.finish()?;
    }
    write_records(output, &out.examples)?;
    drops.extend(out.drops.iter().cloned());
    if let Some(p) = drops_path {
        write_records(p, &drops)?;
    }
    let counts = out.label_counts();
    for l in AttributionLabel::ALL {
        println!("{} {}", l.as_str(), counts[l.index()]);
    }
    println!("dropped {}", drops.len());
    Ok(())
}

enum Source {
    Oracle,
    Mock(PathBuf),
    Replay(PathBuf),
    Http,
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    ctx: &Ctx,
    input: &Path,
    output: &Path,
    variant: Option<PromptVariant>,
    shots: Option<usize>,
    demos: Option<PathBuf>,
    budget: Option<usize>,
    source: Source,
    record: Option<PathBuf>,
) -> Result<()> {
    let variant = ctx.cfg.variant(variant)?;
    let eval = ctx.cfg.eval(budget);
    let examples = read_examples(input, ctx.mode)?;
    let shots = shots.or(ctx.cfg.shots).unwrap_or(0);
    let demo_set = match shots {
        0 => None,
        n => {
            let set = match demos.or_else(|| ctx.cfg.demos.clone()) {
                Some(p) => FewShotSet::from_file(&p)?,
                None => FewShotSet::builtin(),
            };
            if set.len() != n {
                bail!("--shots {n} but the demonstration set has {}", set.len());
            }
            Some(set)
        }
    };

    let inner: Box<dyn GenerationClient> = match source {
        Source::Oracle => Box::new(oracle_client(&examples, variant, demo_set.as_ref(), &eval)?),
        Source::Mock(p) => Box::new(MockClient::from_file(
            ctx.cfg.model_id.as_deref().unwrap_or("mock"),
            &p,
        )?),
        Source::Replay(p) => Box::new(ReplayClient::load(&p, ctx.cfg.model_id.as_deref())?),
        Source::Http => http(ctx, None)?,
    };
    let endpoint = match record {
        Some(p) => Endpoint::Recording(RecordingClient::new(inner, p)),
        None => Endpoint::Plain(inner),
    };

    eprintln!("evaluating {} example(s) with {} ({variant}, {shots}-shot)", examples.len(), endpoint.client().model_id());
    let preds = evaluate_batch(&examples, variant, demo_set.as_ref(), endpoint.client(), &eval);
    endpoint.finish()?;
    write_records(output, &preds)?;
    let failed = preds.iter().filter(|p| p.error.is_some()).count();
    let unparsed = preds.iter().filter(|p| p.error.is_none() && p.predicted.is_none()).count();
    eprintln!("wrote {} prediction(s): {failed} failed, {unparsed} unparsed", preds.len());
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    format_version: u32,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn cmd_score(ctx: &Ctx, predictions: &Path, gold: &Path, output: &Path) -> Result<()> {
    let preds: Vec<Prediction> = read_records(predictions)?;
    if preds.is_empty() {
        bail!("{} holds no predictions", predictions.display());
    }
    let gold: HashMap<String, AttributionLabel> = read_examples(gold, ctx.mode)?
        .into_iter()
        .filter_map(|e| e.label.map(|l| (e.id, l)))
        .collect();
    let r = report(&preds, &gold)?;
    let file = ReportFile {
        format_version: REPORT_FORMAT_VERSION,
        report: &r,
    };
    std::fs::write(output, serde_json::to_string_pretty(&file)? + "\n")
        .with_context(|| format!("writing {}", output.display()))?;
    println!("micro-F1 {:.3}", r.micro_f1);
    println!("F1 Attributable {:.3}", r.f1.attributable);
    println!("F1 Contradictory {:.3}", r.f1.contradictory);
    println!("F1 Extrapolatory {:.3}", r.f1.extrapolatory);
    if r.unparsed > 0 {
        println!("unparsed {}", r.unparsed);
    }
    Ok(())
}

fn cmd_export(ctx: &Ctx, input: &Path, format: ExportFormat, output: &Path) -> Result<()> {
    let examples = read_examples(input, ctx.mode)?;
    match format {
        ExportFormat::Plain => write_records(output, &examples)?,
        ExportFormat::InstructionTuning => {
            let recs = instruction_records(&examples).map_err(|e| anyhow!("{e}"))?;
            write_records(output, &recs)?;
        }
    }
    eprintln!("exported {} example(s)", examples.len());
    Ok(())
}

fn cmd_sample(ctx: &Ctx, input: &Path, output: &Path, n: usize, stratify: bool, allow_fewer: bool) -> Result<()> {
    let examples = read_examples(input, ctx.mode)?;
    let opts = SampleOptions {
        n,
        seed: ctx.cfg.seed.unwrap_or(0),
        stratify,
        allow_fewer,
    };
    let picked = sample(&examples, opts)?;
    write_records(output, &picked)?;
    eprintln!("sampled {} of {}", picked.len(), examples.len());
    Ok(())
}
