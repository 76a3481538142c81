//! `punctasr` command-line tool: scoring, alignment inspection, text
//! normalization and restoration, corpus splitting and synthesis, toy
//! transducer training, decoding and real-time-factor benchmarking.
//!
//! Machine-readable output goes to stdout as JSON or JSONL; diagnostics go to
//! stderr. Exit codes: 0 success, 2 utterance-id mismatch or missing audio
//! durations, 3 configuration error or unsupported mode, 4 training
//! divergence, 1 anything else.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use punctasr::metrics::{
    mpssw_test, pair_by_id, render_alignment, score_corpus, CorpusScore, Metric, UtteranceReport,
};
use punctasr::pipeline::{
    export_writer, ingest, rtf_bench, split_proportion, synth_toy_corpus, FeatureRef, SynthConfig,
};
use punctasr::text::{
    normalize, CommandRestorer, IdentityRestorer, PunctuationConfig, Restorer, RuleRestorer, Transcript,
    TranscriptRecord, ViewKind,
};
use punctasr::transducer::{
    train_with, Architecture, CharVocab, Checkpoint, LossWeights, ModeId, ModelConfig, TrainConfig, TransducerModel,
    CHECKPOINT_VERSION,
};
use punctasr::Error;

/// Failures that map to a dedicated exit code but have no library error.
#[derive(Debug)]
enum CliFailure {
    MissingAudio(String),
    UnsupportedMode(String),
}

impl std::fmt::Display for CliFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliFailure::MissingAudio(id) => write!(f, "utterance `{id}` has no audio_seconds"),
            CliFailure::UnsupportedMode(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliFailure {}

#[derive(Parser, Debug)]
#[command(name = "punctasr", about = "Punctuation- and case-aware ASR scoring and toy transducer training")]
#[command(disable_version_flag = true)]
struct Cli {
    /// JSON file with optional `punctuation` and `model` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the tool and checkpoint format versions.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score hypotheses against references (JSONL of {id, text}).
    Score(ScoreArgs),
    /// Print the alignment of one or all utterances on the chosen views.
    AlignView(AlignViewArgs),
    /// Normalize transcripts: drop punctuation and lowercase.
    Normalize(IoArgs),
    /// Auto-punctuate normalized transcripts.
    Restore(RestoreArgs),
    /// Keep punctuated references on a fraction of a corpus.
    Split(SplitArgs),
    /// Generate a synthetic toy corpus.
    Synth(SynthArgs),
    /// Train a transducer on a corpus.
    Train(TrainArgs),
    /// Greedy-decode features with a checkpoint.
    Decode(DecodeArgs),
    /// Measure the real-time factor of decoding.
    RtfBench(RtfArgs),
    /// Matched-pair significance test between two systems.
    Significance(SignificanceArgs),
}

#[derive(Args, Debug)]
struct ScoreArgs {
    reference: PathBuf,
    hypothesis: PathBuf,
    /// Include per-utterance reports.
    #[arg(long)]
    per_utt: bool,
    /// Include alignment dumps for every utterance and view.
    #[arg(long)]
    dump_align: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct AlignViewArgs {
    reference: PathBuf,
    hypothesis: PathBuf,
    /// Only this utterance.
    #[arg(long)]
    id: Option<String>,
    /// View label (p-c, p-nc, np-c, np-nc); all views when omitted.
    #[arg(long)]
    view: Option<String>,
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Input JSONL of {id, text}; `-` reads stdin.
    input: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RestorerKind {
    Identity,
    Rule,
    Command,
}

#[derive(Args, Debug)]
struct RestoreArgs {
    /// Input JSONL of {id, text}; `-` reads stdin.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "rule")]
    restorer: RestorerKind,
    /// Command line of an external restorer (text on stdin, text on stdout).
    #[arg(long, required_if_eq("restorer", "command"))]
    command: Option<String>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    corpus: PathBuf,
    #[arg(long)]
    p_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    min_words: usize,
    #[arg(long, default_value_t = 4)]
    max_words: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArchArg {
    PunctOnly,
    #[value(name = "2dec")]
    TwoDec,
    Cond,
}

impl From<ArchArg> for Architecture {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::PunctOnly => Architecture::PunctuatedOnly,
            ArchArg::TwoDec => Architecture::TwoDecoder,
            ArchArg::Cond => Architecture::ConditionedPredictor,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "cond")]
    arch: ArchArg,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Keep punctuated references on this fraction of the corpus first.
    #[arg(long)]
    p_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
    /// Gradient norm limit; 0 disables clipping.
    #[arg(long, default_value_t = 5.0)]
    clip_norm: f64,
    /// Sets the encoder, predictor and joiner widths.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    token_embed_dim: Option<usize>,
    #[arg(long)]
    mode_embed_dim: Option<usize>,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Loss log (JSONL); stdout when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Norm,
    Punct,
    Both,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    checkpoint: PathBuf,
    /// JSONL rows with `id` and `features`.
    features: PathBuf,
    #[arg(long, value_enum, default_value = "punct")]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct RtfArgs {
    checkpoint: PathBuf,
    /// JSONL rows with `id`, `features` and `audio_seconds`.
    features: PathBuf,
    #[arg(long, value_enum, default_value = "punct")]
    mode: ModeArg,
}

#[derive(Args, Debug)]
struct SignificanceArgs {
    reference: PathBuf,
    system_a: PathBuf,
    system_b: PathBuf,
    /// wer, puncer, caseer or pcwer.
    #[arg(long, default_value = "wer")]
    metric: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    punctuation: Option<PunctuationConfig>,
    #[serde(default)]
    model: Option<ModelConfig>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: FileConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(p) = &cfg.punctuation {
            p.validate()?;
        }
        Ok(cfg)
    }

    fn punctuation(&self) -> PunctuationConfig {
        self.punctuation.clone().unwrap_or_default()
    }
}

/// A JSONL row carrying features; other corpus fields are ignored.
#[derive(Debug, Deserialize)]
struct FeatureRow {
    id: String,
    features: Option<FeatureRef>,
    #[serde(default)]
    audio_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DecodedRow<'a> {
    id: &'a str,
    mode: &'static str,
    text: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<CliFailure>() {
        return match f {
            CliFailure::MissingAudio(_) => 2,
            CliFailure::UnsupportedMode(_) => 3,
        };
    }
    match err.downcast_ref::<Error>() {
        Some(Error::IdMismatch { .. }) => 2,
        Some(Error::Config(_) | Error::Mode(_) | Error::Architecture(_)) => 3,
        Some(Error::Divergence { .. }) => 4,
        _ => 1,
    }
}

fn open_input(path: &Path) -> anyhow::Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(std::io::stdin().lock()));
    }
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(std::io::BufReader::new(file)))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut rows = Vec::new();
    for (i, line) in open_input(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_transcripts(path: &Path, cfg: &PunctuationConfig) -> anyhow::Result<Vec<Transcript>> {
    let records: Vec<TranscriptRecord> = read_jsonl(path)?;
    Ok(records.iter().map(|r| Transcript::from_record(r, cfg)).collect())
}

fn stdout() -> BufWriter<std::io::StdoutLock<'static>> {
    BufWriter::new(std::io::stdout().lock())
}

fn write_json_line(out: &mut impl Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn parse_view(label: &str) -> anyhow::Result<ViewKind> {
    Ok(label.parse::<ViewKind>().map_err(|_| Error::Config(format!("unknown view `{label}`")))?)
}

fn cmd_score(args: &ScoreArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let pairs = pair_by_id(read_transcripts(&args.reference, &punct)?, read_transcripts(&args.hypothesis, &punct)?)?;
    let reports = score_corpus(&pairs, args.threads.max(1))?;
    let score = CorpusScore::from_utterances(reports, args.per_utt);
    let mut value = serde_json::to_value(&score)?;
    if args.dump_align {
        let dumps: Vec<String> = pairs
            .iter()
            .flat_map(|(r, h)| ViewKind::ALL.iter().map(move |&v| render_alignment(r, h, v)))
            .collect();
        value["alignments"] = serde_json::to_value(dumps)?;
    }
    let mut out = stdout();
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn cmd_align_view(args: &AlignViewArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let pairs = pair_by_id(read_transcripts(&args.reference, &punct)?, read_transcripts(&args.hypothesis, &punct)?)?;
    let views = match &args.view {
        Some(v) => vec![parse_view(v)?],
        None => ViewKind::ALL.to_vec(),
    };
    let selected: Vec<_> = pairs
        .iter()
        .filter(|(r, _)| args.id.as_deref().is_none_or(|id| r.utterance_id == id))
        .collect();
    if let (Some(id), true) = (&args.id, selected.is_empty()) {
        return Err(Error::IdMismatch {
            missing_hyp: vec![id.clone()],
            missing_ref: vec![id.clone()],
            duplicates: Vec::new(),
        }
        .into());
    }
    let mut out = stdout();
    for (r, h) in selected {
        for &v in &views {
            writeln!(out, "{}", render_alignment(r, h, v))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_normalize(args: &IoArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let mut out = stdout();
    for t in read_transcripts(&args.input, &punct)? {
        write_json_line(&mut out, &normalize(&t).to_record())?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_restore(args: &RestoreArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let restorer: Box<dyn Restorer> = match args.restorer {
        RestorerKind::Identity => Box::new(IdentityRestorer),
        RestorerKind::Rule => Box::new(RuleRestorer),
        RestorerKind::Command => Box::new(CommandRestorer::from_command_line(
            args.command.as_deref().context("--command is required")?,
        )?),
    };
    let transcripts = read_transcripts(&args.input, &punct)?;
    let mut failures = 0;
    let mut out = stdout();
    for t in &transcripts {
        let n = normalize(t);
        match punctasr::text::restore(&n, restorer.as_ref(), &punct) {
            Ok(p) => write_json_line(&mut out, &p.to_record())?,
            Err(e) => {
                failures += 1;
                eprintln!("{e}");
            }
        }
    }
    out.flush()?;
    if failures > 0 && failures == transcripts.len() {
        bail!("restoration failed for every utterance");
    }
    Ok(())
}

fn cmd_split(args: &SplitArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let ingested = ingest(&args.corpus, &cfg.punctuation())?;
    report_dropped(&ingested.dropped);
    let split = split_proportion(&ingested.corpus, args.p_fraction, args.seed)?;
    let mut out = stdout();
    export_writer(&split, &mut out)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let synth = SynthConfig {
        seed: args.seed,
        n_samples: args.n,
        min_words: args.min_words,
        max_words: args.max_words,
        noise: args.noise,
        ..SynthConfig::default()
    };
    let corpus = synth_toy_corpus(&synth, &cfg.punctuation())?;
    let mut out = stdout();
    export_writer(&corpus, &mut out)?;
    Ok(())
}

fn report_dropped(dropped: &[punctasr::pipeline::DroppedSample]) {
    for d in dropped {
        if let Ok(line) = serde_json::to_string(d) {
            eprintln!("dropped: {line}");
        }
    }
}

fn cmd_train(args: &TrainArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let ingested = ingest(&args.corpus, &punct)?;
    report_dropped(&ingested.dropped);
    let mut corpus = ingested.corpus;
    if let Some(p) = args.p_fraction {
        corpus = split_proportion(&corpus, p, args.seed)?;
    }
    let vocab = CharVocab::from_punctuation(&punct);
    let examples = corpus.training_examples(&vocab)?;
    let feature_dim = examples.first().map(|e| e.features.dim()).context("corpus is empty")?;

    let mut model_cfg = cfg.model.clone().unwrap_or_default();
    model_cfg.architecture = args.arch.into();
    model_cfg.vocab_size = vocab.len();
    model_cfg.blank_index = vocab.blank();
    model_cfg.feature_dim = feature_dim;
    if let Some(h) = args.hidden {
        model_cfg.encoder_hidden = h;
        model_cfg.predictor_hidden = h;
        model_cfg.joiner_hidden = h;
    }
    if let Some(d) = args.token_embed_dim {
        model_cfg.token_embed_dim = d;
    }
    if let Some(d) = args.mode_embed_dim {
        model_cfg.mode_embed_dim = d;
    }
    let model = TransducerModel::new(model_cfg, args.seed)?;
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        momentum: args.momentum,
        seed: args.seed,
        weights: LossWeights::new(args.alpha).map_err(|e| Error::Config(e.to_string()))?,
        weight_decay: args.weight_decay,
        clip_norm: (args.clip_norm > 0.0).then_some(args.clip_norm),
        threads: 1,
    };
    eprintln!(
        "training {:?} on {} samples (punctuated fraction {:.4}), {} parameters",
        model.config.architecture,
        corpus.len(),
        corpus.punctuation_fraction(),
        model.params.parameter_count()
    );
    let mut log_out: Box<dyn Write> = match &args.log {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(stdout()),
    };
    let mut write_err = None;
    let outcome = train_with(model, &examples, &train_cfg, |entry| {
        eprintln!("epoch {} loss {:.6}", entry.epoch, entry.loss);
        if write_err.is_none() {
            write_err = write_json_line(&mut log_out, entry).err();
        }
    });
    log_out.flush()?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let outcome = match outcome {
        Err(Error::Divergence { epoch, last_finite }) => {
            eprintln!("diverged at epoch {epoch}; last finite losses: {last_finite:?}");
            return Err(Error::Divergence { epoch, last_finite }.into());
        }
        other => other?,
    };
    Checkpoint::from_model(&outcome.model, Some(&vocab)).save(&args.out)?;
    Ok(())
}

fn load_checkpoint(path: &Path) -> anyhow::Result<(TransducerModel, CharVocab)> {
    let ckpt = Checkpoint::load(path)?;
    let vocab = ckpt.vocab.clone().context("checkpoint has no vocabulary")?;
    Ok((ckpt.to_model()?, vocab))
}

/// The requested output modes, checked against the architecture.
fn modes_for(model: &TransducerModel, mode: ModeArg) -> anyhow::Result<Vec<Option<ModeId>>> {
    let arch = model.config.architecture;
    let wanted: Vec<ModeId> = match mode {
        ModeArg::Norm => vec![ModeId::Normalized],
        ModeArg::Punct => vec![ModeId::Punctuated],
        ModeArg::Both => vec![ModeId::Normalized, ModeId::Punctuated],
    };
    wanted
        .into_iter()
        .map(|m| {
            if arch == Architecture::PunctuatedOnly {
                if m == ModeId::Normalized {
                    return Err(CliFailure::UnsupportedMode(format!(
                        "a {arch:?} checkpoint cannot produce normalized output"
                    ))
                    .into());
                }
                Ok(None)
            } else {
                Ok(Some(m))
            }
        })
        .collect()
}

fn load_feature_rows(path: &Path) -> anyhow::Result<Vec<(String, punctasr::transducer::FeatureSequence, Option<f64>)>> {
    let base = path.parent();
    read_jsonl::<FeatureRow>(path)?
        .into_iter()
        .map(|row| {
            let features = row
                .features
                .with_context(|| format!("utterance `{}` has no features", row.id))?
                .load(base)?;
            Ok((row.id, features, row.audio_seconds))
        })
        .collect()
}

fn cmd_decode(args: &DecodeArgs) -> anyhow::Result<()> {
    let (model, vocab) = load_checkpoint(&args.checkpoint)?;
    let modes = modes_for(&model, args.mode)?;
    let rows = load_feature_rows(&args.features)?;
    let mut out = stdout();
    for (id, features, _) in &rows {
        for &mode in &modes {
            let decoded = model.greedy_decode(features, mode)?;
            let row = DecodedRow {
                id,
                mode: decoded.mode.short_name(),
                text: vocab.decode(&decoded.tokens),
            };
            write_json_line(&mut out, &row)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_rtf_bench(args: &RtfArgs) -> anyhow::Result<()> {
    let (model, _) = load_checkpoint(&args.checkpoint)?;
    let modes = modes_for(&model, args.mode)?;
    if modes.len() != 1 {
        return Err(CliFailure::UnsupportedMode("rtf-bench times one mode at a time".into()).into());
    }
    let rows = load_feature_rows(&args.features)?;
    if let Some((id, _, _)) = rows.iter().find(|r| r.2.is_none()) {
        return Err(CliFailure::MissingAudio(id.clone()).into());
    }
    let report = rtf_bench(&model, &rows, modes[0])?;
    let mut out = stdout();
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn per_utterance(reference: Vec<Transcript>, hyp: Vec<Transcript>) -> anyhow::Result<Vec<UtteranceReport>> {
    Ok(score_corpus(&pair_by_id(reference, hyp)?, 1)?)
}

fn cmd_significance(args: &SignificanceArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let punct = cfg.punctuation();
    let metric: Metric = args.metric.parse().map_err(|_| Error::Config(format!("unknown metric `{}`", args.metric)))?;
    let reference = read_transcripts(&args.reference, &punct)?;
    let a = per_utterance(reference.clone(), read_transcripts(&args.system_a, &punct)?)?;
    let b = per_utterance(reference, read_transcripts(&args.system_b, &punct)?)?;
    let result = mpssw_test(&a, &b, metric)?;
    let mut out = stdout();
    serde_json::to_writer_pretty(&mut out, &result)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.version {
        println!(
            "punctasr {} (checkpoint format {})",
            env!("CARGO_PKG_VERSION"),
            CHECKPOINT_VERSION
        );
        return Ok(());
    }
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        None => bail!("no subcommand given; see --help"),
        Some(Command::Score(a)) => cmd_score(&a, &cfg),
        Some(Command::AlignView(a)) => cmd_align_view(&a, &cfg),
        Some(Command::Normalize(a)) => cmd_normalize(&a, &cfg),
        Some(Command::Restore(a)) => cmd_restore(&a, &cfg),
        Some(Command::Split(a)) => cmd_split(&a, &cfg),
        Some(Command::Synth(a)) => cmd_synth(&a, &cfg),
        Some(Command::Train(a)) => cmd_train(&a, &cfg),
        Some(Command::Decode(a)) => cmd_decode(&a),
        Some(Command::RtfBench(a)) => cmd_rtf_bench(&a),
        Some(Command::Significance(a)) => cmd_significance(&a, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
