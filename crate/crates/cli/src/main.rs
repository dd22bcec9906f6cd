use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use memocl::adapt::{AdaptConfig, AdaptMode, DEFAULT_DELTA, DEFAULT_ETA, DEFAULT_NUM_AUG};
use memocl::augment::{
    AugmenterSet, ParaphraseRuleSet, SynonymLexicon, WordVectorTable, DEFAULT_NEIGHBOR_COUNT,
    DEFAULT_REPLACEMENT_RATE,
};
use memocl::data::synth::SynthConfig;
use memocl::data::{apply_shift, load_dataset, load_shift_spec, save_dataset, Dataset};
use memocl::experiment::{adapt_log, train_checkpoint, Benchmark, Method, SourceConfig};
use memocl::model::{
    accuracy, load_checkpoint, save_checkpoint, split_words, Checkpoint, OptimizerKind, TrainConfig,
};
use memocl::outcome::{read_log, write_log, OutcomeRecord};
use memocl::report::{render_jsonl, render_table, seed_metrics, summarize};
use memocl::suite::{synth_config, Fixture, Settings};

/// Bad flags, missing inputs or inconsistent configuration; exits with 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "memocl", version, about = "Test-time adaptation experiments on text streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic benchmark fixture.
    Generate(GenerateArgs),
    /// Apply a lexical shift spec to a dataset.
    Shift(ShiftArgs),
    /// Train the source classifier.
    Train(TrainArgs),
    /// Score the frozen model or a test-time augmentation baseline.
    Evaluate(EvaluateArgs),
    /// Run MEMO or MEMO-CL over a stream.
    Adapt(AdaptArgs),
    /// Summarize outcome logs against the baseline.
    Report(ReportArgs),
    /// Run every method on a fixture directory with its shipped settings.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "MEMOCL_OUT_DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct AugArgs {
    /// Synonym lexicon (word<TAB>syn,syn,...).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Word vectors in text format.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Paraphrase rules (pattern<TAB>replacement).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Per-token replacement probability for lexicon and vector augmenters.
    #[arg(long, default_value_t = DEFAULT_REPLACEMENT_RATE)]
    rate: f64,
    /// Neighbours considered by the vector augmenter.
    #[arg(long, default_value_t = DEFAULT_NEIGHBOR_COUNT)]
    neighbors: usize,
}

impl AugArgs {
    /// Without any resource the copies are the input itself.
    fn build(&self) -> Result<AugmenterSet> {
        if self.lexicon.is_none() && self.vectors.is_none() && self.rules.is_none() {
            return Ok(AugmenterSet::identity());
        }
        let mut b = AugmenterSet::builder()
            .replacement_rate(self.rate)
            .neighbor_count(self.neighbors);
        if let Some(p) = &self.lexicon {
            b = b.lexicon(SynonymLexicon::load(input(p)?).with_context(|| ctx(p))?);
        }
        if let Some(p) = &self.vectors {
            b = b.vectors(WordVectorTable::load(input(p)?).with_context(|| ctx(p))?);
        }
        if let Some(p) = &self.rules {
            b = b.rules(ParaphraseRuleSet::load(input(p)?).with_context(|| ctx(p))?);
        }
        Ok(b.build()?)
    }

    fn manifest(&self) -> Value {
        json!({
            "lexicon": self.lexicon,
            "vectors": self.vectors,
            "rules": self.rules,
            "replacement_rate": self.rate,
            "neighbor_count": self.neighbors,
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator seed; the shipped fixture uses the default.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ShiftArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    aug: AugArgs,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 7)]
    init_seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Seed for the per-epoch shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset to stream (usually the shifted test split).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    aug: AugArgs,
    /// Stream seed; repeat for a sweep.
    #[arg(long = "seed", default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_NUM_AUG)]
    num_aug: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_parser = parse_eval_method)]
    method: Method,
    #[command(flatten)]
    stream: StreamArgs,
    /// Labeled source-domain split, required by tta-weighted.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    weight_lr: f64,
    #[arg(long, default_value_t = 200)]
    weight_epochs: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Memo,
    MemoCl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args)]
struct AdaptArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "on")]
    smf: Switch,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    lr: f64,
    #[arg(long, value_enum, default_value = "sgd")]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Attempt cap for the margin filter; defaults to 10 x num-aug.
    #[arg(long)]
    max_attempts: Option<usize>,
    #[command(flatten)]
    stream: StreamArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Outcome logs; one must come from the baseline.
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    #[arg(long, default_value_t = memocl::data::DEFAULT_NUM_GROUPS)]
    groups: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value = "fixtures/benchmark")]
    fixture: PathBuf,
    /// Subset of methods, comma separated; all by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Vec<Method>,
    /// Override the fixture's seed list; repeat for a sweep.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: memocl::Error| e.to_string())
}

fn parse_eval_method(s: &str) -> std::result::Result<Method, String> {
    let m = parse_method(s)?;
    if m.adapt_settings().is_some() {
        return Err(format!(
            "{s} adapts weights; use the adapt command (evaluate takes baseline, tta-hard, tta-soft, tta-average, tta-weighted)"
        ));
    }
    Ok(m)
}

fn ctx(p: &Path) -> String {
    format!("reading {}", p.display())
}

fn input(p: &Path) -> Result<&Path> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(usage(format!("input file not found: {}", p.display())))
    }
}

fn read_dataset(p: &Path) -> Result<Dataset> {
    load_dataset(input(p)?).with_context(|| ctx(p))
}

fn out_dir(out: &OutArgs) -> Result<&Path> {
    std::fs::create_dir_all(&out.out)
        .with_context(|| format!("creating output directory {}", out.out.display()))?;
    Ok(&out.out)
}

fn write_manifest(dir: &Path, name: &str, command: &str, config: Value, outputs: &[String]) -> Result<()> {
    let manifest = json!({
        "tool": "memocl",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "outputs": outputs,
    });
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn log_name(method: Method, seed: u64) -> String {
    format!("{}-seed{seed}.jsonl", method.name())
}

fn write_logs(dir: &Path, method: Method, logs: &[(u64, Vec<OutcomeRecord>)]) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (seed, log) in logs {
        let name = log_name(method, *seed);
        let path = dir.join(&name);
        write_log(&path, log).with_context(|| format!("writing {}", path.display()))?;
        names.push(name);
    }
    Ok(names)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let dir = out_dir(&args.out)?;
    let cfg = SynthConfig {
        seed: args.seed.unwrap_or(synth_config().seed),
        ..synth_config()
    };
    let fixture = Fixture::generate(&cfg, Settings::default())?;
    fixture.save(dir)?;
    println!(
        "wrote fixture to {} ({} train, {} test records)",
        dir.display(),
        fixture.train.len(),
        fixture.test.len()
    );
    Ok(())
}

fn cmd_shift(args: &ShiftArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let spec = load_shift_spec(input(&args.spec)?).with_context(|| ctx(&args.spec))?;
    let dir = out_dir(&args.out)?;
    let shifted = apply_shift(&data, &spec)?;
    save_dataset(&dir.join("shifted.jsonl"), &shifted)?;
    let config = json!({ "data": args.data, "spec": args.spec });
    write_manifest(dir, "shift.manifest.json", "shift", config, &["shifted.jsonl".into()])
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let set = args.aug.build()?;
    let dir = out_dir(&args.out)?;
    let cfg = SourceConfig {
        dim: args.dim,
        init_scale: args.init_scale,
        init_seed: args.init_seed,
        train: TrainConfig {
            epochs: args.epochs,
            eta: args.lr,
            batch_size: args.batch_size,
            seed: args.seed,
        },
    };
    let ckpt = train_checkpoint(&data, &set, &cfg)?;
    save_checkpoint(&dir.join("checkpoint.json"), &ckpt)?;
    let encoded: Vec<(Vec<usize>, usize)> = data
        .records
        .iter()
        .map(|r| (ckpt.vocab.lookup_all(&split_words(&r.text)), r.label))
        .collect();
    let acc = accuracy(&ckpt.params, &encoded)?;
    println!("training accuracy {:.4} ({} records)", acc, data.len());
    let config = json!({
        "data": args.data,
        "augmenters": args.aug.manifest(),
        "source": cfg,
    });
    write_manifest(dir, "train.manifest.json", "train", config, &["checkpoint.json".into()])
}

struct Loaded {
    checkpoint: Checkpoint,
    data: Dataset,
    set: AugmenterSet,
}

fn load_stream_inputs(args: &StreamArgs) -> Result<Loaded> {
    if args.num_aug == 0 {
        return Err(usage("--num-aug must be at least 1"));
    }
    let checkpoint = load_checkpoint(input(&args.checkpoint)?).with_context(|| ctx(&args.checkpoint))?;
    let data = read_dataset(&args.data)?;
    let set = args.aug.build()?;
    Ok(Loaded { checkpoint, data, set })
}

fn stream_manifest(args: &StreamArgs) -> Value {
    json!({
        "checkpoint": args.checkpoint,
        "data": args.data,
        "augmenters": args.aug.manifest(),
        "seeds": args.seeds,
        "num_aug": args.num_aug,
    })
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.method == Method::TtaWeighted && args.calibration.is_none() {
        return Err(usage("tta-weighted needs a labeled --calibration split"));
    }
    let inputs = load_stream_inputs(&args.stream)?;
    let calibration = args.calibration.as_deref().map(read_dataset).transpose()?;
    let dir = out_dir(&args.out)?;
    let bench = Benchmark {
        checkpoint: &inputs.checkpoint,
        target: &inputs.data,
        calibration: calibration.as_ref(),
        augmenters: &inputs.set,
        episodic: AdaptConfig::default(),
        continual: AdaptConfig::default(),
        tta_num_aug: args.stream.num_aug,
        weight_eta: args.weight_lr,
        weight_epochs: args.weight_epochs,
    };
    let runs = bench.run(&[args.method], &args.stream.seeds)?;
    let logs: Vec<(u64, Vec<OutcomeRecord>)> = runs.into_iter().map(|r| (r.seed, r.log)).collect();
    let outputs = write_logs(dir, args.method, &logs)?;
    let config = json!({
        "method": args.method.name(),
        "stream": stream_manifest(&args.stream),
        "calibration": args.calibration,
        "weight_lr": args.weight_lr,
        "weight_epochs": args.weight_epochs,
    });
    let name = format!("{}.manifest.json", args.method.name());
    write_manifest(dir, &name, "evaluate", config, &outputs)?;
    println!("wrote {} log(s) to {}", outputs.len(), dir.display());
    Ok(())
}

fn cmd_adapt(args: &AdaptArgs) -> Result<()> {
    let inputs = load_stream_inputs(&args.stream)?;
    let cfg = AdaptConfig {
        delta: args.delta,
        num_aug: args.stream.num_aug,
        eta: args.lr,
        optimizer: match args.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        },
        mode: match args.mode {
            ModeArg::Memo => AdaptMode::Episodic,
            ModeArg::MemoCl => AdaptMode::Continual,
        },
        smf_enabled: matches!(args.smf, Switch::On),
        max_attempts: args.max_attempts.unwrap_or(10 * args.stream.num_aug),
        steps_per_sample: args.steps,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let dir = out_dir(&args.out)?;
    let method = Method::adaptation(cfg.mode, cfg.smf_enabled);
    let mut logs = Vec::new();
    let mut fallbacks = Vec::new();
    for &seed in &args.stream.seeds {
        let records = memocl::data::stream(&inputs.data, seed);
        let (log, _) = adapt_log(&inputs.checkpoint, &records, &cfg, &inputs.set, seed)?;
        fallbacks.push(log.iter().filter(|r| r.fallback == Some(true)).count());
        logs.push((seed, log));
    }
    let outputs = write_logs(dir, method, &logs)?;
    let config = json!({
        "method": method.name(),
        "adapt": cfg,
        "stream": stream_manifest(&args.stream),
        "fallback_counts": fallbacks,
    });
    let name = format!("{}.manifest.json", method.name());
    write_manifest(dir, &name, "adapt", config, &outputs)?;
    println!("wrote {} log(s) to {}", outputs.len(), dir.display());
    Ok(())
}

fn report(logs: &[Vec<OutcomeRecord>], groups: usize, dir: &Path) -> Result<String> {
    let per_seed = seed_metrics(logs, groups).map_err(|e| usage(e.to_string()))?;
    let summaries = summarize(&per_seed);
    let table = render_table(&summaries);
    std::fs::write(dir.join("report.txt"), &table)?;
    std::fs::write(dir.join("report.jsonl"), render_jsonl(&summaries))?;
    Ok(table)
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let logs = args
        .logs
        .iter()
        .map(|p| read_log(input(p)?).with_context(|| ctx(p)))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&args.out)?;
    let table = report(&logs, args.groups, dir)?;
    print!("{table}");
    let config = json!({ "logs": args.logs, "groups": args.groups });
    write_manifest(
        dir,
        "report.manifest.json",
        "report",
        config,
        &["report.txt".into(), "report.jsonl".into()],
    )
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    if !args.fixture.is_dir() {
        return Err(usage(format!("fixture directory not found: {}", args.fixture.display())));
    }
    let fixture = Fixture::load(&args.fixture).with_context(|| ctx(&args.fixture))?;
    let dir = out_dir(&args.out)?;
    let set = fixture.augmenters()?;
    let ckpt = fixture.train_checkpoint(&set)?;
    save_checkpoint(&dir.join("checkpoint.json"), &ckpt)?;
    let mut methods = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.clone()
    };
    if !methods.contains(&Method::Baseline) {
        methods.insert(0, Method::Baseline);
    }
    let seeds = if args.seeds.is_empty() {
        fixture.settings.seeds.clone()
    } else {
        args.seeds.clone()
    };
    let runs = fixture.benchmark(&ckpt, &set).run(&methods, &seeds)?;
    let mut outputs = vec!["checkpoint.json".to_string()];
    for run in &runs {
        let name = log_name(run.method, run.seed);
        write_log(&dir.join(&name), &run.log)?;
        outputs.push(name);
    }
    let logs: Vec<Vec<OutcomeRecord>> = runs.into_iter().map(|r| r.log).collect();
    let table = report(&logs, fixture.shifted.num_groups, dir)?;
    print!("{table}");
    outputs.extend(["report.txt".to_string(), "report.jsonl".to_string()]);
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    let config = json!({
        "fixture": args.fixture,
        "methods": names,
        "seeds": seeds,
        "settings": fixture.settings,
    });
    write_manifest(dir, "benchmark.manifest.json", "benchmark", config, &outputs)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Shift(a) => cmd_shift(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Adapt(a) => cmd_adapt(a),
        Command::Report(a) => cmd_report(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<memocl::Error>() {
        Some(memocl::Error::InvalidInput(_) | memocl::Error::Validation(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
