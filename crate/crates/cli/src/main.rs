use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kgqa_core::config::{Config, EmbedderConfig, GeneratorConfig, NliConfig, StsConfig};
use kgqa_core::corpus::{self, Document, LoadMode};
use kgqa_core::generation::{
    AnswerGenerator, FixtureGenerator, HttpGenerator, SubprocessGenerator,
};
use kgqa_core::harness::{self, Category, GroupBy, MetricProviders, SystemAnswers};
use kgqa_core::kg_embedding::{self, synthetic, TripleSplit};
use kgqa_core::knowledge_graph::{self, KnowledgeGraph};
use kgqa_core::metrics::{
    EmbeddingSts, NliProvider, StsProvider, StubNli, SubprocessNli, SubprocessSts,
};
use kgqa_core::reasoning::QaEngine;
use kgqa_core::vector_store::{self, Embedder, HashingEmbedder, SubprocessEmbedder};

#[derive(Parser)]
#[command(
    name = "kgqa",
    version,
    about = "Knowledge-graph assisted medical question answering"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the disease knowledge graph from section documents.
    BuildKg(BuildKgArgs),
    /// Embed documents into a vector index.
    Index(IndexArgs),
    /// Answer one question.
    Ask(AskArgs),
    /// Score system answers against a test set and print report tables.
    Eval(EvalArgs),
    /// TransE link prediction over the graph.
    #[command(subcommand)]
    KgEmbed(KgEmbedCommand),
    /// Preprocess and chunk documents into paragraphs.
    GenqChunk(ChunkArgs),
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Args)]
struct CorpusArgs {
    /// Documents file, one JSON record per line.
    #[arg(long)]
    docs: PathBuf,
    /// Skip malformed records with a warning instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Use document text as is, without abbreviation expansion and
    /// coreference resolution.
    #[arg(long)]
    no_preprocess: bool,
}

#[derive(Args)]
struct BuildKgArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Disease → CUI map linking synonymous diseases.
    #[arg(long)]
    cui_map: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Fixture,
    Subprocess,
    Http,
}

#[derive(Args)]
struct AskArgs {
    #[arg(long)]
    question: String,
    #[arg(long, default_value = "q0")]
    question_id: String,
    /// Graph directory written by `build-kg`.
    #[arg(long)]
    kg: PathBuf,
    /// Index directory written by `index`.
    #[arg(long)]
    index: PathBuf,
    /// Generator back end; defaults to the configured one.
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    /// Fixture answers file for the fixture provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Program and arguments for the subprocess provider.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    command: Vec<String>,
    /// Endpoint for the HTTP provider.
    #[arg(long)]
    url: Option<String>,
    /// Return the first candidate instead of reranking.
    #[arg(long)]
    no_joint_reasoning: bool,
    /// Generate from empty contexts instead of retrieved ones.
    #[arg(long)]
    no_vdb: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fuzzy_threshold: Option<f64>,
    /// Print the full decision record as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Test set file: {"id","question","category","gold_answer"} lines.
    #[arg(long)]
    testset: PathBuf,
    /// A system's answers as NAME=PATH; repeat for each system.
    #[arg(long = "system", required = true, value_parser = parse_system)]
    systems: Vec<(String, PathBuf)>,
    /// System the others are compared against.
    #[arg(long)]
    reference: Option<String>,
    /// Comma-separated metric names; defaults to the configured list.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<String>,
    /// Keep only questions every system answered within this many words.
    #[arg(long)]
    max_words: Option<usize>,
    /// Stub NLI table, overriding the configured NLI provider.
    #[arg(long)]
    nli_stub: Option<PathBuf>,
    /// Skip questions a system did not answer instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Directory for records, summaries and the text report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_system(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

#[derive(Subcommand)]
enum KgEmbedCommand {
    /// Split the graph, train TransE and report test ranking metrics.
    Train(KgTrainArgs),
    /// Recompute test ranking metrics for a saved model.
    Eval(KgEvalArgs),
    /// Answer a triplet-pattern question by graph lookup.
    Query(KgQueryArgs),
}

#[derive(Args)]
struct GraphSource {
    /// Graph directory written by `build-kg`.
    #[arg(long, required_unless_present = "synthetic")]
    kg: Option<PathBuf>,
    /// Use the built-in 60-entity patterned graph instead.
    #[arg(long, conflicts_with = "kg")]
    synthetic: bool,
    /// Split seed; defaults to the configured one.
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Args)]
struct KgTrainArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Model output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Args)]
struct KgEvalArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Model directory written by `kg-embed train`.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct KgQueryArgs {
    #[arg(long)]
    kg: PathBuf,
    #[arg(long)]
    question: String,
}

#[derive(Args)]
struct ChunkArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 256)]
    max_tokens: usize,
    /// Paragraphs output file.
    #[arg(long)]
    out: PathBuf,
}

/// Write a line to stdout, propagating I/O errors.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(io::stdout().lock(), $($arg)*)?
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::BuildKg(args) => build_kg(&config, args),
        Command::Index(args) => index(&config, args),
        Command::Ask(args) => ask(&config, args),
        Command::Eval(args) => eval(&config, args),
        Command::KgEmbed(KgEmbedCommand::Train(args)) => kg_train(&config, args),
        Command::KgEmbed(KgEmbedCommand::Eval(args)) => kg_eval(&config, args),
        Command::KgEmbed(KgEmbedCommand::Query(args)) => kg_query(&config, args),
        Command::GenqChunk(args) => genq_chunk(args),
        Command::ShowConfig => {
            write!(io::stdout().lock(), "{}", config.to_toml_string()?)?;
            Ok(())
        }
    }
}

fn load_mode(lenient: bool) -> LoadMode {
    if lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Vec<Document>> {
    let loaded = corpus::load_documents(&args.docs, load_mode(args.lenient))?;
    warn_all(&loaded.warnings);
    if args.no_preprocess {
        Ok(loaded.records)
    } else {
        Ok(corpus::preprocess_documents(&loaded.records, None)?)
    }
}

fn make_embedder(config: &Config) -> Result<Box<dyn Embedder>> {
    Ok(match &config.retrieval.embedder {
        EmbedderConfig::Hashing => Box::new(HashingEmbedder::new(config.retrieval.dim)?),
        EmbedderConfig::Subprocess { command } => {
            Box::new(SubprocessEmbedder::spawn(command, config.retrieval.dim)?)
        }
    })
}

fn build_kg(config: &Config, args: BuildKgArgs) -> Result<()> {
    let docs = load_corpus(&args.corpus)?;
    let mut build = config.kg.build.clone();
    if args.corpus.lenient {
        build.mode = LoadMode::Lenient;
    }
    let (mut kg, warnings) = knowledge_graph::build_graph(&docs, &build)?;
    warn_all(&warnings);
    if let Some(path) = &args.cui_map {
        let (linked, warnings) =
            knowledge_graph::link_synonyms(kg, &knowledge_graph::load_cui_map(path)?)?;
        warn_all(&warnings);
        kg = linked;
    }
    knowledge_graph::persist_graph(&kg, &args.out)?;
    say!(
        "{} entities, {} triples → {}",
        kg.entities().len(),
        kg.triples().len(),
        args.out.display()
    );
    Ok(())
}

fn index(config: &Config, args: IndexArgs) -> Result<()> {
    let docs = load_corpus(&args.corpus)?;
    let embedder = make_embedder(config)?;
    let (index, warnings) =
        vector_store::build_index(&docs, embedder.as_ref(), load_mode(args.corpus.lenient))?;
    warn_all(&warnings);
    vector_store::persist_index(&index, &args.out)?;
    say!(
        "{} vectors of dim {} → {}",
        index.len(),
        index.dim(),
        args.out.display()
    );
    Ok(())
}

fn make_generator(config: &Config, args: &AskArgs) -> Result<Box<dyn AnswerGenerator>> {
    let configured = config.generator.clone();
    let chosen = match args.provider {
        None => configured,
        Some(ProviderKind::Fixture) => GeneratorConfig::Fixture {
            path: match (&args.fixtures, configured) {
                (Some(p), _) => p.clone(),
                (None, GeneratorConfig::Fixture { path }) => path,
                _ => bail!("the fixture provider needs --fixtures"),
            },
        },
        Some(ProviderKind::Subprocess) => GeneratorConfig::Subprocess {
            command: match configured {
                _ if !args.command.is_empty() => args.command.clone(),
                GeneratorConfig::Subprocess { command } => command,
                _ => bail!("the subprocess provider needs --command"),
            },
        },
        Some(ProviderKind::Http) => GeneratorConfig::Http {
            url: match (&args.url, configured) {
                (Some(u), _) => u.clone(),
                (None, GeneratorConfig::Http { url }) => url,
                _ => bail!("the http provider needs --url"),
            },
        },
    };
    Ok(match chosen {
        GeneratorConfig::Fixture { path } => Box::new(FixtureGenerator::load(&path)?),
        GeneratorConfig::Subprocess { command } => Box::new(SubprocessGenerator::spawn(&command)?),
        GeneratorConfig::Http { url } => Box::new(HttpGenerator::new(url)),
        GeneratorConfig::Unset => bail!("no answer generator configured; pass --provider"),
    })
}

fn ask(config: &Config, args: AskArgs) -> Result<()> {
    let kg = knowledge_graph::load_graph(&args.kg)?;
    let index = vector_store::load_index(&args.index)?;
    let embedder = make_embedder(config)?;
    let generator = make_generator(config, &args)?;
    let aliases = config.relation_aliases();
    let mut opts = config.ask_options();
    opts.joint_reasoning = !args.no_joint_reasoning;
    opts.use_vdb = !args.no_vdb;
    if let Some(k) = args.k {
        opts.k = k;
    }
    if let Some(t) = args.fuzzy_threshold {
        opts.fuzzy_threshold = t;
    }
    let engine = QaEngine {
        kg: &kg,
        index: &index,
        embedder: embedder.as_ref(),
        generator: generator.as_ref(),
        aliases: &aliases,
    };
    let answer = engine.answer_question(&args.question_id, &args.question, &opts)?;
    if args.json {
        say!("{}", serde_json::to_string(&answer)?);
    } else {
        say!("{}", answer.answer_text);
    }
    Ok(())
}

fn make_sts<'a>(config: &Config, embedder: &'a dyn Embedder) -> Result<Box<dyn StsProvider + 'a>> {
    Ok(match &config.sts {
        StsConfig::Embedding => Box::new(EmbeddingSts::new(embedder)),
        StsConfig::Subprocess { command } => Box::new(SubprocessSts::spawn(command)?),
    })
}

fn make_nli(config: &Config, stub: Option<&Path>) -> Result<Option<Box<dyn NliProvider>>> {
    if let Some(path) = stub {
        return Ok(Some(Box::new(StubNli::load(path)?)));
    }
    Ok(match &config.entailment.nli {
        NliConfig::Stub { path } => Some(Box::new(StubNli::load(path)?)),
        NliConfig::Subprocess { command } => Some(Box::new(SubprocessNli::spawn(command)?)),
        NliConfig::Unset => None,
    })
}

fn eval(config: &Config, args: EvalArgs) -> Result<()> {
    let mode = if args.lenient {
        LoadMode::Lenient
    } else {
        config.eval.mode
    };
    let loaded = harness::load_testset(&args.testset, mode)?;
    warn_all(&loaded.warnings);
    let mut testset = loaded.records;
    let metric_names = if args.metrics.is_empty() {
        config.eval.metrics.clone()
    } else {
        args.metrics.clone()
    };
    let metrics = harness::parse_metrics(&metric_names)?;
    if let Some(reference) = &args.reference {
        if !args.systems.iter().any(|(n, _)| n == reference) {
            bail!("reference system `{reference}` is not among the --system entries");
        }
    }
    let mut systems: Vec<(String, SystemAnswers)> = Vec::new();
    for (name, path) in &args.systems {
        if systems.iter().any(|(n, _)| n == name) {
            bail!("system `{name}` given twice");
        }
        let answers = harness::load_system_answers(path)
            .with_context(|| format!("loading answers for `{name}`"))?;
        systems.push((name.clone(), answers));
    }
    if let Some(max_words) = args.max_words {
        let mut kept = Vec::new();
        for (_, answers) in systems.iter_mut() {
            let (filtered, ids) = harness::length_filter(answers, max_words)?;
            *answers = filtered;
            kept.push(ids);
        }
        let keep: std::collections::HashSet<String> =
            harness::kept_intersection(&kept).into_iter().collect();
        let before = testset.len();
        testset.retain(|q| keep.contains(&q.id));
        log::info!("length filter kept {} of {before} questions", testset.len());
        if testset.is_empty() {
            bail!("no question survives the {max_words}-word length filter for every system");
        }
    }

    let embedder = make_embedder(config)?;
    let sts = make_sts(config, embedder.as_ref())?;
    let nli = make_nli(config, args.nli_stub.as_deref())?;
    let providers = MetricProviders {
        embedder: embedder.as_ref(),
        sts: sts.as_ref(),
        nli: nli.as_deref(),
        contradiction_threshold: config.entailment.threshold,
    };
    let mut records = Vec::new();
    for (name, answers) in &systems {
        let (recs, warnings) =
            harness::run_evaluation(&testset, name, answers, &metrics, &providers, mode)?;
        warn_all(&warnings);
        records.extend(recs);
    }
    let categories: BTreeMap<String, Category> =
        testset.iter().map(|q| (q.id.clone(), q.category)).collect();
    let reference = args.reference.as_deref();
    let (overall, warnings) =
        harness::summarize_scores(&records, &categories, GroupBy::Overall, reference)?;
    warn_all(&warnings);
    let (by_category, warnings) =
        harness::summarize_scores(&records, &categories, GroupBy::Category, reference)?;
    warn_all(&warnings);
    let report = format!(
        "{}{}",
        harness::render_table(&overall),
        harness::render_table(&by_category)
    );
    write!(io::stdout().lock(), "{report}")?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        harness::write_records(&out.join("records.jsonl"), &records)?;
        harness::write_summary(&out.join("summary_overall.jsonl"), &overall)?;
        harness::write_summary(&out.join("summary_category.jsonl"), &by_category)?;
        fs::write(out.join("report.txt"), &report)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn load_split(config: &Config, source: &GraphSource) -> Result<TripleSplit> {
    let seed = source.split_seed.unwrap_or(config.split.seed);
    let ratios = config.split.ratios;
    Ok(if source.synthetic {
        let g = synthetic::patterned_graph();
        kg_embedding::split_triples(&g.triples, g.entity_labels, ratios, seed)?
    } else {
        let dir = source
            .kg
            .as_ref()
            .context("--kg or --synthetic is required")?;
        let kg: KnowledgeGraph = knowledge_graph::load_graph(dir)?;
        kg_embedding::split_graph(&kg, ratios, seed)?
    })
}

fn kg_train(config: &Config, args: KgTrainArgs) -> Result<()> {
    let split = load_split(config, &args.source)?;
    let mut train = config.transe.clone();
    if let Some(seed) = args.seed {
        train.seed = seed;
    }
    if let Some(epochs) = args.max_epochs {
        train.max_epochs = epochs;
    }
    let outcome = kg_embedding::train_transe(&split, &train)?;
    kg_embedding::persist_model(&outcome.model, &args.out)?;
    let test = if split.test.is_empty() {
        None
    } else {
        Some(kg_embedding::rank_metrics(&outcome.model, &split.test)?)
    };
    let report = json!({
        "train": split.train.len(),
        "valid": split.valid.len(),
        "test": split.test.len(),
        "moved_to_train": split.moved_to_train,
        "epochs": outcome.history.len(),
        "stopped_early": outcome.stopped_early,
        "initial_loss": outcome.initial_loss,
        "final_loss": outcome.final_loss,
        "best_valid_mrr": outcome.best_valid_mrr,
        "ranking": "raw",
        "test_metrics": test,
    });
    fs::write(
        args.out.join("history.json"),
        serde_json::to_string_pretty(&outcome.history)?,
    )
    .with_context(|| format!("writing history to {}", args.out.display()))?;
    say!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn kg_eval(config: &Config, args: KgEvalArgs) -> Result<()> {
    let split = load_split(config, &args.source)?;
    let model = kg_embedding::load_model(&args.model)?;
    if model.entity_count() != split.entity_count {
        bail!(
            "model has {} entities but the graph has {}",
            model.entity_count(),
            split.entity_count
        );
    }
    let report = kg_embedding::rank_metrics(&model, &split.test)?;
    say!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn kg_query(config: &Config, args: KgQueryArgs) -> Result<()> {
    let kg = knowledge_graph::load_graph(&args.kg)?;
    let answer = kg_embedding::triplet_query(
        &args.question,
        &kg,
        &config.relation_aliases(),
        config.matching.fuzzy_threshold,
    )?;
    say!("{}", serde_json::to_string(&answer)?);
    Ok(())
}

fn genq_chunk(args: ChunkArgs) -> Result<()> {
    let docs = load_corpus(&args.corpus)?;
    let paragraphs = corpus::chunk_paragraphs(&docs, args.max_tokens)?;
    corpus::write_paragraphs(&args.out, &paragraphs)?;
    say!(
        "{} paragraphs from {} documents → {}",
        paragraphs.len(),
        docs.len(),
        args.out.display()
    );
    Ok(())
}
