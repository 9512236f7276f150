//! `nestner`: convert, cluster, train, predict and evaluate nested NER models.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 numeric failure.

mod config;
mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use nestner::brown::{brown_cluster, collect_counts};
use nestner::corpus::conll::{write_joint, write_two_level};
use nestner::corpus::{documents_to_enamex, Document};
use nestner::eval::{evaluate_corpus, EvalReport, Mode};
use nestner::features::{load_clusters, load_embeddings, FeatureExtractor, FeatureTemplate};
use nestner::nested::{train_nested, NestedModel, Strategy};
use nestner::synthetic::{generate_documents, split, SyntheticConfig};

use config::{Settings, UsageError};
use io::{load_corpus, write_conversion_report, InputFormat, TextOptions};

#[derive(Debug, Parser)]
#[command(
    name = "nestner",
    version,
    about = "Nested named-entity recognition with linear-chain CRFs"
)]
struct Cli {
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ENAMEX markup to CoNLL columns, with a sidecar report of dropped entities.
    Convert(ConvertArgs),
    /// Brown clusters from raw or annotated text.
    Cluster(ClusterArgs),
    /// Train a nested model directory.
    Train(TrainArgs),
    /// Tag a corpus with a trained model.
    Predict(PredictArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Write a seeded synthetic nested-entity corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Columns {
    /// surface, level-1 tag, level-2 tag
    TwoLevel,
    /// surface, joint tag
    Joint,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    #[command(flatten)]
    text: TextOptions,
    #[arg(long, value_enum, default_value_t = Columns::TwoLevel)]
    columns: Columns,
    /// Sidecar report path [default: OUTPUT.report]
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    /// Number of active clusters.
    #[arg(short, default_value_t = 64)]
    m: usize,
    /// Words rarer than this become <UNK>.
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    #[command(flatten)]
    text: TextOptions,
}

#[derive(Debug, Args)]
struct TrainArgs {
    input: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Brown cluster paths file; enables cluster features.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Word embedding text file; enables embedding features.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// Feature template file (key=value lines).
    #[arg(long)]
    template: Option<PathBuf>,
    /// key=value defaults, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    l2_sigma: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    convergence_tol: Option<f64>,
    /// lbfgs or gradient_descent
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lbfgs_history: Option<usize>,
    #[arg(long)]
    min_feature_count: Option<usize>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    #[command(flatten)]
    text: TextOptions,
    /// Train and score all strategies with sentence segmentation on and off.
    #[arg(long, requires = "eval_on")]
    runs_matrix: bool,
    /// ENAMEX gold file scored by each cell of --runs-matrix.
    #[arg(long)]
    eval_on: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Separated,
    Joint,
    Hybrid,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Separated => Strategy::Separated,
            StrategyArg::Joint => Strategy::Joint,
            StrategyArg::Hybrid => Strategy::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Conll,
    Enamex,
}

#[derive(Debug, Args)]
struct PredictArgs {
    model_dir: PathBuf,
    input: PathBuf,
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Conll)]
    format: OutputFormat,
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Extract with this template instead of the model's own; must match the model.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    input_format: InputFormat,
    #[command(flatten)]
    text: TextOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Level1,
    Level2,
    AllLevels,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Level1 => Mode::Level1,
            ModeArg::Level2 => Mode::Level2,
            ModeArg::AllLevels => Mode::AllLevels,
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    gold: PathBuf,
    pred: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::AllLevels)]
    mode: ModeArg,
    /// Re-project spans onto syllables before matching.
    #[arg(long)]
    syllable: bool,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    gold_format: InputFormat,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pred_format: InputFormat,
    #[command(flatten)]
    text: TextOptions,
}

#[derive(Debug, Args)]
struct SynthArgs {
    output: PathBuf,
    #[arg(long, default_value_t = 500)]
    sentences: usize,
    #[arg(long, default_value_t = 2018)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    sentences_per_document: usize,
    /// Add streets named after people, whose level-2 type depends on the inner entity.
    #[arg(long)]
    context_dependent: bool,
    /// Write the last (1 - ratio) of the documents here instead of OUTPUT.
    #[arg(long)]
    heldout: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<nestner::Error>() {
            return match e {
                nestner::Error::NonFiniteObjective => 3,
                nestner::Error::Config(_) | nestner::Error::UnknownSegmenter(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Convert(a) => convert(a),
        Command::Cluster(a) => cluster(a),
        Command::Train(a) if a.runs_matrix => runs_matrix(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    }
}

fn convert(a: ConvertArgs) -> Result<()> {
    let corpus = load_corpus(&a.input, InputFormat::Enamex, &a.text)?;
    let mut out = Vec::new();
    match a.columns {
        Columns::TwoLevel => write_two_level(&mut out, &corpus.docs)?,
        Columns::Joint => write_joint(&mut out, &corpus.docs)?,
    }
    fs::write(&a.output, out).with_context(|| format!("writing {}", a.output.display()))?;
    let report = a.report.unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".report");
        p.into()
    });
    let summary = write_conversion_report(&report, &a.input, &corpus)?;
    println!("{summary}");
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let mut lines: Vec<Vec<String>> = Vec::new();
    for path in &a.inputs {
        let corpus = load_corpus(path, a.input_format, &a.text)?;
        lines.extend(
            corpus
                .docs
                .iter()
                .flat_map(|d| &d.sentences)
                .map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect()),
        );
    }
    let counts = collect_counts(&lines, a.min_count)?;
    let tree = brown_cluster(&counts, a.m)?;
    let mut out = Vec::new();
    tree.write_paths(&mut out)?;
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "clustered {} word types from {} sentences with m={} into {}",
        tree.words.len(),
        lines.len(),
        a.m,
        a.out.display()
    );
    Ok(())
}

/// Flags as `key -> value`, for layering over the config file.
fn train_flags(a: &TrainArgs) -> Vec<(&'static str, Option<String>)> {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    vec![
        (
            "strategy",
            a.strategy.map(|s| Strategy::from(s).to_string()),
        ),
        ("clusters", path(&a.clusters)),
        ("embeddings", path(&a.embeddings)),
        ("embedding_dim", a.embedding_dim.map(|x| x.to_string())),
        ("template", path(&a.template)),
        ("l2_sigma", a.l2_sigma.map(|x| x.to_string())),
        ("max_iterations", a.max_iterations.map(|x| x.to_string())),
        ("convergence_tol", a.convergence_tol.map(|x| x.to_string())),
        ("optimizer", a.optimizer.clone()),
        ("learning_rate", a.learning_rate.map(|x| x.to_string())),
        ("lbfgs_history", a.lbfgs_history.map(|x| x.to_string())),
        (
            "min_feature_count",
            a.min_feature_count.map(|x| x.to_string()),
        ),
        ("sent_seg", a.text.sent_seg.map(|x| x.to_string())),
        ("segmenter", a.text.segmenter.clone()),
    ]
}

fn build_extractor(settings: &Settings) -> Result<FeatureExtractor> {
    let mut template = match settings.get("template") {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading template {path}"))?
            .parse::<FeatureTemplate>()
            .with_context(|| format!("template {path}"))?,
        None => FeatureTemplate::default(),
    };
    let clusters = match settings.get("clusters") {
        Some(path) => {
            template.use_clusters = true;
            Some(load_clusters(path).with_context(|| format!("cluster file {path}"))?)
        }
        None => None,
    };
    let embeddings = match settings.get("embeddings") {
        Some(path) => {
            let dim = match settings.parse::<usize>("embedding_dim")? {
                Some(d) => d,
                None => template
                    .embedding_dim
                    .unwrap_or(config::DEFAULT_EMBEDDING_DIM),
            };
            template.embedding_dim = Some(dim);
            Some(load_embeddings(path, dim).with_context(|| format!("embedding file {path}"))?)
        }
        None => None,
    };
    Ok(FeatureExtractor::new(template, clusters, embeddings)?)
}

fn record_settings(model: &mut NestedModel, settings: &Settings) {
    for m in [&mut model.level1, &mut model.level2, &mut model.joint]
        .into_iter()
        .flatten()
    {
        for (k, v) in settings.iter() {
            m.metadata.insert(format!("config.{k}"), v.to_string());
        }
    }
}

fn print_training_summary(model: &NestedModel) {
    for (name, m) in [
        ("level-1", &model.level1),
        ("level-2", &model.level2),
        ("joint", &model.joint),
    ] {
        if let Some(m) = m {
            println!(
                "{name}: labels={} features={} iterations={} final_objective={}",
                m.n_labels(),
                m.features().len(),
                m.metadata["train.iterations"],
                m.metadata["train.final_objective"],
            );
        }
    }
}

fn fit(
    corpus: &[Document],
    settings: &Settings,
    extractor: &FeatureExtractor,
) -> Result<NestedModel> {
    let strategy: Strategy = settings.parse("strategy")?.expect("strategy has a default");
    let config = settings.train_config()?;
    let sentences: Vec<_> = corpus.iter().flat_map(|d| d.sentences.clone()).collect();
    info!("training {strategy} on {} sentences", sentences.len());
    let mut model = train_nested(&sentences, strategy, extractor, &config)?;
    record_settings(&mut model, settings);
    Ok(model)
}

fn train(a: TrainArgs) -> Result<()> {
    let settings = Settings::resolve(a.config.as_deref(), train_flags(&a))?;
    let text = settings.text_options()?;
    let extractor = build_extractor(&settings)?;
    let corpus = load_corpus(&a.input, a.input_format, &text)?;
    for line in settings.echo() {
        println!("config: {line}");
    }
    let model = fit(&corpus.docs, &settings, &extractor)?;
    model
        .save(&a.model_out)
        .with_context(|| format!("writing model to {}", a.model_out.display()))?;
    print_training_summary(&model);
    println!("model written to {}", a.model_out.display());
    Ok(())
}

fn runs_matrix(a: TrainArgs) -> Result<()> {
    let gold_path = a.eval_on.clone().expect("clap requires --eval-on");
    let base = Settings::resolve(a.config.as_deref(), train_flags(&a))?;
    let extractor = build_extractor(&base)?;
    for line in base.echo() {
        println!("config: {line}");
    }
    let mut summary = Vec::new();
    for sent_seg in [true, false] {
        let text = TextOptions {
            sent_seg: Some(config::OnOff::from(sent_seg)),
            segmenter: base.get("segmenter").map(str::to_string),
        };
        let train_corpus = load_corpus(&a.input, InputFormat::Enamex, &text)?;
        let gold = load_corpus(&gold_path, InputFormat::Enamex, &text)?;
        for strategy in Strategy::ALL {
            let cell = format!("{strategy}-sentseg-{}", config::OnOff::from(sent_seg));
            let settings = base
                .with("strategy", strategy.to_string())
                .with("sent_seg", config::OnOff::from(sent_seg).to_string());
            let model = fit(&train_corpus.docs, &settings, &extractor)?;
            let dir = a.model_out.join(&cell);
            model.save(&dir)?;
            let pred = predict_documents(&model, &extractor, &gold.docs)?;
            let report = evaluate_corpus(&gold.docs, &pred, Mode::AllLevels, false)?;
            fs::write(dir.join("report.txt"), report.render())?;
            println!("== {cell} ==");
            print!("{}", report.render());
            summary.push((cell, report.overall().f1));
        }
    }
    println!("== summary (all levels F1) ==");
    for (cell, f1) in summary {
        println!("{cell:<26}{f1:>8.2}");
    }
    Ok(())
}

fn predict_documents(
    model: &NestedModel,
    extractor: &FeatureExtractor,
    docs: &[Document],
) -> Result<Vec<Document>> {
    let sentences: Vec<_> = docs.iter().flat_map(|d| d.sentences.clone()).collect();
    let mut predicted = model.predict_corpus(extractor, &sentences)?.into_iter();
    Ok(docs
        .iter()
        .map(|d| Document {
            id: d.id.clone(),
            sentences: predicted.by_ref().take(d.sentences.len()).collect(),
        })
        .collect())
}

fn model_template(model: &NestedModel) -> Result<FeatureTemplate> {
    model
        .template_fingerprint()
        .parse()
        .context("model carries an unreadable feature template")
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = NestedModel::load(&a.model_dir)
        .with_context(|| format!("loading model {}", a.model_dir.display()))?;
    let mut template = match &a.template {
        Some(path) => fs::read_to_string(path)
            .with_context(|| format!("reading template {}", path.display()))?
            .parse()
            .with_context(|| format!("template {}", path.display()))?,
        None => model_template(&model)?,
    };
    let clusters = a
        .clusters
        .as_ref()
        .map(load_clusters)
        .transpose()
        .context("cluster file")?;
    let embeddings = match &a.embeddings {
        Some(path) => {
            let dim = template
                .embedding_dim
                .unwrap_or(config::DEFAULT_EMBEDDING_DIM);
            template.embedding_dim = Some(dim);
            Some(load_embeddings(path, dim).context("embedding file")?)
        }
        None => None,
    };
    let extractor = FeatureExtractor::new(template, clusters, embeddings)?;
    model.check_fingerprint(&extractor.fingerprint())?;
    let corpus = load_corpus(&a.input, a.input_format, &a.text)?;
    let pred = predict_documents(&model, &extractor, &corpus.docs)?;
    let out = match a.format {
        OutputFormat::Conll => {
            let mut buf = Vec::new();
            write_two_level(&mut buf, &pred)?;
            buf
        }
        OutputFormat::Enamex => documents_to_enamex(&pred, true)?.into_bytes(),
    };
    fs::write(&a.output, out).with_context(|| format!("writing {}", a.output.display()))?;
    let n: usize = pred.iter().map(|d| d.sentences.len()).sum();
    let entities: usize = pred
        .iter()
        .flat_map(|d| &d.sentences)
        .map(|s| s.entities.len())
        .sum();
    println!(
        "tagged {n} sentences with the {} model, {entities} entities, written to {}",
        model.strategy,
        a.output.display()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let gold = load_corpus(&a.gold, a.gold_format, &a.text)?;
    let pred = load_corpus(&a.pred, a.pred_format, &a.text)?;
    let report: EvalReport = evaluate_corpus(&gold.docs, &pred.docs, a.mode.into(), a.syllable)?;
    print!("{}", report.render());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.ratio) {
        return Err(UsageError(format!("--ratio must be in [0, 1], got {}", a.ratio)).into());
    }
    let docs = generate_documents(&SyntheticConfig {
        sentences: a.sentences,
        seed: a.seed,
        context_dependent: a.context_dependent,
        sentences_per_document: a.sentences_per_document,
    });
    let write = |path: &Path, docs: &[Document]| -> Result<()> {
        fs::write(path, documents_to_enamex(docs, true)?)
            .with_context(|| format!("writing {}", path.display()))
    };
    match &a.heldout {
        Some(heldout) => {
            let (train, test) = split(&docs, a.ratio);
            write(&a.output, &train)?;
            write(heldout, &test)?;
            println!(
                "wrote {} training documents to {} and {} held-out documents to {}",
                train.len(),
                a.output.display(),
                test.len(),
                heldout.display()
            );
        }
        None => {
            write(&a.output, &docs)?;
            println!("wrote {} documents to {}", docs.len(), a.output.display());
        }
    }
    Ok(())
}
