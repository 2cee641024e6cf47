use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tc_core::augment::{AugmentOpKind, Augmenter, Temperature, TranslationClient};
use tc_core::corpus::{
    load_dataset, load_lexicon, load_stop_words, tokenize, Origin, RawExample, SynonymLexicon, TokenizedExample,
    Vocabulary,
};
use tc_core::curriculum::{Preset, ScheduleKind};
use tc_core::mining::SamplerKind;
use tc_core::net::gradcheck_suite;
use tc_core::rng::{self, Purpose};
use tc_core::synth::SynthConfig;
use tc_core::trainer::{
    load_grid, run_experiment, write_metrics_csv, write_report, Checkpoint, RunConfig, Trainer,
};

const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Curriculum data augmentation for few-shot text classification.
#[derive(Debug, Parser)]
#[command(name = "tc", version)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run config (train) or grid file (experiment), TOML.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (augment, experiment) or directory (train).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Augment a JSON Lines file.
    Augment(AugmentArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a JSON Lines file.
    Eval(EvalArgs),
    /// Run an experiment grid and write the report.
    Experiment,
    /// Check analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Input JSON Lines with `text` and `label`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "eda")]
    technique: AugmentOpKind,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Synonym lexicon, `word<TAB>syn1,syn2`.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    stop_words: Option<PathBuf>,
    /// Word-dropout probability for pervasive_dropout.
    #[arg(long)]
    dropout_p: Option<f64>,
    /// HTTP endpoint for round-trip translation.
    #[arg(long)]
    translation_url: Option<String>,
    #[arg(long, default_value = "de")]
    pivot: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Stop after this many updates; resume later with --resume.
    #[arg(long)]
    stop_after: Option<u64>,
    /// Select the best model on the test split.
    #[arg(long)]
    validate_on_test: bool,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sampler: Option<SamplerArg>,
    #[arg(long)]
    technique: Option<AugmentOpKind>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    eval_every: Option<u64>,
    /// Multiplies every stage budget.
    #[arg(long)]
    budget_scale: Option<f64>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Train on the generated corpus instead of files.
    #[arg(long)]
    synthetic: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
enum SamplerArg {
    Random,
    HardNegative,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// JSON Lines evaluation set.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Number of random configurations.
    #[arg(long, default_value_t = 20)]
    configs: usize,
}

#[derive(Serialize)]
struct AugmentedRecord<'a> {
    text: String,
    label: &'a str,
    origin: Origin,
}

fn cmd_augment(cli: &Cli, args: &AugmentArgs) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let tau = Temperature::new(args.tau)?;
    let file = File::open(&args.input).with_context(|| format!("{}", args.input.display()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("{}", args.input.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawExample = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: bad record", args.input.display(), i + 1))?;
        let tokens = tokenize(&raw.text).with_context(|| format!("{}:{}", args.input.display(), i + 1))?;
        rows.push((raw, tokens));
    }
    let mut lexicon = match &args.lexicon {
        Some(p) => load_lexicon(p)?,
        None => SynonymLexicon::default(),
    };
    if let Some(p) = &args.stop_words {
        lexicon = lexicon.without_stop_words(&load_stop_words(p)?);
    }
    let vocab = Vocabulary::from_tokens(rows.iter().flat_map(|(_, t)| t.iter()));
    let mut augmenter = Augmenter::new(args.technique, Arc::new(lexicon), Arc::new(vocab))?;
    if let Some(p) = args.dropout_p {
        augmenter = augmenter.with_dropout_p(p)?;
    }
    if let Some(url) = &args.translation_url {
        augmenter = augmenter.with_translator(Arc::new(TranslationClient::http(url.clone(), args.pivot.clone())));
    }
    let mut out = output(cli.out.as_deref())?;
    for (i, (raw, tokens)) in rows.iter().enumerate() {
        let mut r = rng::stream(seed, Purpose::Cli, i as u64);
        let ex = augmenter.augment(&TokenizedExample::original(tokens.clone(), 0), tau, &mut r);
        let text = if ex.tokens == *tokens { raw.text.clone() } else { ex.text() };
        let record = AugmentedRecord {
            text,
            label: &raw.label,
            origin: ex.origin,
        };
        serde_json::to_writer(&mut out, &record)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("{}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Defaults, then the config file, then flags.
fn run_config(cli: &Cli, args: &TrainArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let t = &mut cfg.train;
    if let Some(s) = cli.seed {
        t.seed = s;
    }
    if let Some(s) = args.schedule {
        t.schedule = s;
    }
    if let Some(p) = args.preset {
        t.preset = Some(p);
        t.budgets = None;
    }
    if let Some(v) = args.tau {
        t.tau = Temperature::new(v)?;
    }
    if let Some(s) = args.sampler {
        t.sampler = match s {
            SamplerArg::Random => SamplerKind::Random,
            SamplerArg::HardNegative => SamplerKind::HardNegative,
        };
    }
    if let Some(k) = args.technique {
        t.technique = k;
    }
    if let Some(v) = args.lr {
        t.lr = v;
    }
    if let Some(v) = args.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = args.eval_every {
        t.eval_every = Some(v);
    }
    if let Some(v) = args.budget_scale {
        t.budget_scale = v;
    }
    if args.validate_on_test {
        t.validate_on_test = true;
    }
    let d = &mut cfg.data;
    if let Some(v) = args.n_c {
        d.n_c = Some(v);
    }
    for (flag, slot) in [
        (&args.train, &mut d.train),
        (&args.val, &mut d.val),
        (&args.test, &mut d.test),
        (&args.lexicon, &mut d.lexicon),
    ] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    if args.synthetic && d.synthetic.is_none() {
        d.synthetic = Some(SynthConfig::default());
    }
    Ok(cfg)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> anyhow::Result<()> {
    let cfg = run_config(cli, args)?;
    let mut trainer = match &args.resume {
        Some(p) => {
            let ckpt = Checkpoint::load(p)?;
            let mut data_cfg = cfg.clone();
            data_cfg.train = ckpt.config.clone();
            Trainer::resume(ckpt, data_cfg.prepare_data()?)?
        }
        None => Trainer::new(cfg.train.clone(), cfg.prepare_data()?)?,
    };
    let result = match args.stop_after {
        Some(u) => {
            trainer.run_until(u)?;
            trainer.result()?
        }
        None => trainer.run()?,
    };
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))?;
            let metrics = dir.join("metrics.csv");
            write_metrics_csv(&result.history, BufWriter::new(File::create(&metrics)?))
                .with_context(|| format!("{}", metrics.display()))?;
            trainer.checkpoint().save(dir.join("checkpoint.json"))?;
        }
        None => write_metrics_csv(&result.history, io::stdout().lock())?,
    }
    let test = result.test_accuracy.map_or("nan".to_string(), |a| a.to_string());
    eprintln!(
        "best_accuracy={} best_update={} test_accuracy={} updates={} fallback_triplets={}/{}",
        result.best_accuracy,
        result.best_update,
        test,
        result.total_updates,
        result.fallback_triplets,
        result.mined_triplets
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let data = load_dataset(&args.data)?;
    println!("accuracy={}", ckpt.evaluate(&data)?);
    Ok(())
}

fn cmd_experiment(cli: &Cli) -> anyhow::Result<()> {
    let Some(path) = &cli.config else {
        bail!("experiment needs --config <grid.toml>");
    };
    let mut grid = load_grid(path)?;
    if let Some(s) = cli.seed {
        grid.seed_offset = s;
    }
    let reports = run_experiment(&grid)?;
    let mut out = output(cli.out.as_deref())?;
    write_report(&reports, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_gradcheck(cli: &Cli, args: &GradcheckArgs) -> anyhow::Result<bool> {
    let reports = gradcheck_suite(cli.seed.unwrap_or(0), args.configs)?;
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let coords: usize = reports.iter().map(|r| r.coords_checked).sum();
    println!("max_rel_error={worst:e} configs={} coords={coords}", reports.len());
    Ok(worst < GRADCHECK_TOLERANCE)
}

/// The error chain, skipping causes already spelled out by their wrapper.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if msg.is_empty() {
            msg = part;
        } else if !msg.ends_with(&part) {
            msg = format!("{msg}: {part}");
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TC_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Augment(a) => cmd_augment(&cli, a).map(|_| true),
        Command::Train(a) => cmd_train(&cli, a).map(|_| true),
        Command::Eval(a) => cmd_eval(a).map(|_| true),
        Command::Experiment => cmd_experiment(&cli).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(&cli, a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: gradient check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
