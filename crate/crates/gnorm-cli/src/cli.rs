//! The `gnorm` command surface: flag grammar, config construction, and
//! the six subcommands (`gen`, `softmax`, `layernorm`, `sweep`, `luts`,
//! `compare`).
//!
//! Every command follows the same shape: resolve a corpus (a file with
//! sidecar, or a synthesized one fully determined by seed, shape, and
//! generator), build a validated engine configuration from flags, run,
//! and export artifacts through the atomic writer. All numeric flags echo
//! into the run manifest so a silent default can never skew a comparison
//! between two artifact sets.
//!
//! `--jobs` fans row evaluation out to a worker pool; the per-row errors
//! are collected back in row order before any statistic is computed, so
//! every output byte is independent of the worker count.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnorm_core::fxp::FxpFormat;
use gnorm_core::harness::{
    compare_engines, run_sweep, Base2Softmax, Corpus, ErrorStats, ExactLayerNorm, ExactSoftmax,
    Generator, HarnessError, HistogramSpec, RowEngine, SweepBase, SweepKnob, DEFAULT_THRESHOLDS,
};
use gnorm_core::layernorm::{
    layernorm_latency, EpsilonPolicy, LayerNormConfig, LayerNormEngine, NewtonIterations,
};
use gnorm_core::softmax::{build_luts, softmax_latency, SoftmaxConfig, SoftmaxEngine};
use gnorm_core::Mode;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::corpus_io;
use crate::error::CliError;
use crate::report;

// --- Argument grammar ---------------------------------------------------------

/// Golden model of normalization-guaranteed softmax and layernorm units:
/// run corpora through the datapaths and export error statistics.
#[derive(Debug, Parser)]
#[command(name = "gnorm", version, about)]
pub struct Cli {
    /// Seed for synthesized corpora.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Worker threads for row evaluation; 0 uses every core. Output bytes
    /// are identical at any job count.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Directory artifacts are written into (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Which stats artifacts to write.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,

    /// The subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// The subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a corpus file (raw codes plus JSON sidecar).
    Gen(GenArgs),
    /// Run the softmax unit over a corpus and export error statistics.
    Softmax(SoftmaxArgs),
    /// Run the layernorm unit over a corpus and export error statistics.
    Layernorm(LayernormArgs),
    /// Score one design knob at several levels over a fixed corpus.
    Sweep(SweepArgs),
    /// Emit the exponential tables as ROM initialization hex files.
    Luts(LutsArgs),
    /// Contrast several engines on the same corpus.
    Compare(CompareArgs),
}

/// Stats artifact selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// JSON stats only.
    Json,
    /// CSV stats only.
    Csv,
    /// Both (the default).
    Both,
}

impl OutputFormat {
    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

/// Datapath selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Exact integer datapath.
    Bit,
    /// Float emulation of the same algorithm.
    Float,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Bit => Mode::BitAccurate,
            ModeArg::Float => Mode::FloatEmulation,
        }
    }
}

/// Synthetic corpus distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    /// Zero-mean Gaussian logits with `--std`.
    Gaussian,
    /// Uniform reals in `[--lo, --hi)`.
    Uniform,
    /// Gaussian with a per-row standard deviation swept `--std-lo..--std-hi`.
    Attention,
}

/// Shape, distribution, and element format of a synthesized corpus.
#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Rows to synthesize.
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,

    /// Columns (row length) to synthesize.
    #[arg(long, default_value_t = 64)]
    pub cols: usize,

    /// Distribution rows are drawn from.
    #[arg(long, value_enum, default_value_t = GeneratorKind::Gaussian)]
    pub generator: GeneratorKind,

    /// Gaussian standard deviation.
    #[arg(long, default_value_t = 4.0)]
    pub std: f64,

    /// Uniform lower bound.
    #[arg(long, default_value_t = -16.0, allow_negative_numbers = true)]
    pub lo: f64,

    /// Uniform upper bound.
    #[arg(long, default_value_t = 16.0, allow_negative_numbers = true)]
    pub hi: f64,

    /// Smallest per-row standard deviation for `attention`.
    #[arg(long, default_value_t = 1.0)]
    pub std_lo: f64,

    /// Largest per-row standard deviation for `attention`.
    #[arg(long, default_value_t = 8.0)]
    pub std_hi: f64,

    /// Element word width in bits.
    #[arg(long, default_value_t = 8)]
    pub word_bits: u32,

    /// Element fraction bits.
    #[arg(long, default_value_t = 3)]
    pub frac_bits: u32,

    /// Synthesize unsigned codes (default is signed).
    #[arg(long)]
    pub unsigned: bool,
}

impl SynthArgs {
    fn generator(&self) -> Generator {
        match self.generator {
            GeneratorKind::Gaussian => Generator::Gaussian { std: self.std },
            GeneratorKind::Uniform => Generator::Uniform { lo: self.lo, hi: self.hi },
            GeneratorKind::Attention => {
                Generator::AttentionLike { std_lo: self.std_lo, std_hi: self.std_hi }
            }
        }
    }

    fn generator_json(&self) -> Value {
        match self.generator {
            GeneratorKind::Gaussian => json!({ "gaussian": { "std": self.std } }),
            GeneratorKind::Uniform => json!({ "uniform": { "lo": self.lo, "hi": self.hi } }),
            GeneratorKind::Attention => {
                json!({ "attention": { "std_lo": self.std_lo, "std_hi": self.std_hi } })
            }
        }
    }

    fn synthesize(&self, seed: u64) -> Result<(Corpus, Value), CliError> {
        let fmt = FxpFormat::new(self.word_bits, self.frac_bits, !self.unsigned)
            .map_err(CliError::usage)?;
        let corpus = Corpus::generated(self.rows, self.cols, fmt, self.generator(), seed)
            .map_err(CliError::usage)?;
        let desc = json!({
            "kind": "generated",
            "rows": self.rows,
            "cols": self.cols,
            "format": fmt.to_string(),
            "seed": seed,
            "generator": self.generator_json(),
        });
        Ok((corpus, desc))
    }
}

/// A corpus by file, or synthesized on the fly.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus file (raw codes plus JSON sidecar). Omitted, a corpus is
    /// synthesized from the shape and generator flags.
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    /// Shape and distribution used when no file is given.
    #[command(flatten)]
    pub synth: SynthArgs,
}

impl CorpusArgs {
    fn resolve(&self, seed: u64) -> Result<(Corpus, Value), CliError> {
        match &self.corpus {
            Some(path) => {
                let corpus = corpus_io::read_corpus(path)?;
                let name = path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                let desc = json!({
                    "kind": "file",
                    "name": name,
                    "rows": corpus.rows(),
                    "cols": corpus.cols(),
                    "format": corpus.format().to_string(),
                });
                Ok((corpus, desc))
            }
            None => self.synth.synthesize(seed),
        }
    }
}

/// `gen` flags.
#[derive(Debug, Args)]
pub struct GenArgs {
    /// Shape and distribution of the corpus to synthesize.
    #[command(flatten)]
    pub synth: SynthArgs,

    /// Corpus file name, relative to --out-dir; the sidecar and manifest
    /// take the same stem.
    #[arg(long, short = 'o', default_value = "corpus.bin")]
    pub out: PathBuf,
}

/// `softmax` flags.
#[derive(Debug, Args)]
pub struct SoftmaxArgs {
    /// Corpus to evaluate.
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Datapath to run.
    #[arg(long, value_enum, default_value_t = ModeArg::Bit)]
    pub mode: ModeArg,

    /// Argument-split radix `R` (power of two; the engine's input format
    /// carries `log2 R` fraction bits).
    #[arg(long, default_value_t = 8)]
    pub radix: u32,

    /// Coarse table entries.
    #[arg(long, default_value_t = 7)]
    pub coarse_entries: u32,

    /// Table word width in bits.
    #[arg(long, default_value_t = 16)]
    pub lut_word_bits: u32,

    /// Table fraction bits.
    #[arg(long, default_value_t = 15)]
    pub lut_frac_bits: u32,

    /// Engine input word width in bits.
    #[arg(long, default_value_t = 8)]
    pub input_bits: u32,

    /// Output probability scale `b`: probabilities are codes in units of
    /// `2^-b`.
    #[arg(long, default_value_t = 15)]
    pub out_bits: u32,

    /// Extra divider precision `P`.
    #[arg(long, default_value_t = 16)]
    pub div_precision: u32,
}

impl SoftmaxArgs {
    fn build_config(&self) -> Result<SoftmaxConfig, CliError> {
        if self.radix < 2 || !self.radix.is_power_of_two() {
            return Err(CliError::usage(format!(
                "--radix must be a power of two >= 2, got {}",
                self.radix
            )));
        }
        let input_fmt = FxpFormat::new(self.input_bits, self.radix.ilog2(), true)
            .map_err(CliError::usage)?;
        let lut_fmt = FxpFormat::new(self.lut_word_bits, self.lut_frac_bits, false)
            .map_err(CliError::usage)?;
        let cfg = SoftmaxConfig {
            mode: self.mode.into(),
            radix: self.radix,
            coarse_entries: self.coarse_entries,
            lut_fmt,
            input_fmt,
            out_bits: self.out_bits,
            div_precision: self.div_precision,
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

/// Zero-variance handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsilonArg {
    /// Emit zeros for degenerate rows.
    ZeroOutput,
    /// Substitute one working-format LSB of variance.
    AddOneUlp,
}

impl From<EpsilonArg> for EpsilonPolicy {
    fn from(e: EpsilonArg) -> EpsilonPolicy {
        match e {
            EpsilonArg::ZeroOutput => EpsilonPolicy::ZeroOutput,
            EpsilonArg::AddOneUlp => EpsilonPolicy::AddOneUlp,
        }
    }
}

/// `layernorm` flags.
#[derive(Debug, Args)]
pub struct LayernormArgs {
    /// Corpus to evaluate.
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Datapath to run.
    #[arg(long, value_enum, default_value_t = ModeArg::Bit)]
    pub mode: ModeArg,

    /// Fixed Newton iteration count. Defaults: 2 in bit mode; float mode
    /// iterates to convergence unless this is given.
    #[arg(long)]
    pub newton_iters: Option<u32>,

    /// Zero-variance handling.
    #[arg(long, value_enum, default_value_t = EpsilonArg::ZeroOutput)]
    pub epsilon: EpsilonArg,
}

impl LayernormArgs {
    fn build_config(&self, cols: usize) -> Result<LayerNormConfig, CliError> {
        let mut cfg = match self.mode {
            ModeArg::Bit => LayerNormConfig::bit_accurate(cols),
            ModeArg::Float => LayerNormConfig::float_emulation(cols),
        };
        if let Some(k) = self.newton_iters {
            cfg.newton_iters = NewtonIterations::Fixed(k);
        }
        cfg.epsilon_policy = self.epsilon.into();
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

/// Sweepable design knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnobArg {
    /// Residual table size `R` (softmax, bit mode).
    ResidualEntries,
    /// Table fraction width, with the output scale and divider resized to
    /// match (softmax, bit mode).
    LutFracBits,
    /// Newton iteration count (layernorm, float emulation).
    NewtonIters,
    /// Divider precision `P` at fixed output scale (softmax, bit mode).
    DivPrecision,
}

impl From<KnobArg> for SweepKnob {
    fn from(k: KnobArg) -> SweepKnob {
        match k {
            KnobArg::ResidualEntries => SweepKnob::ResidualEntries,
            KnobArg::LutFracBits => SweepKnob::LutFracBits,
            KnobArg::NewtonIters => SweepKnob::NewtonIters,
            KnobArg::DivPrecision => SweepKnob::DivPrecision,
        }
    }
}

/// `sweep` flags.
#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Corpus to evaluate (held fixed across levels).
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Knob to walk.
    #[arg(long, value_enum)]
    pub knob: KnobArg,

    /// Comma-separated, strictly increasing levels (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<u64>,
}

/// `luts` flags.
#[derive(Debug, Args)]
pub struct LutsArgs {
    /// Argument-split radix `R` (power of two; also the residual entry
    /// count).
    #[arg(long, default_value_t = 8)]
    pub radix: u32,

    /// Coarse table entries.
    #[arg(long, default_value_t = 7)]
    pub coarse_entries: u32,

    /// Table word width in bits.
    #[arg(long, default_value_t = 16)]
    pub lut_word_bits: u32,

    /// Table fraction bits.
    #[arg(long, default_value_t = 15)]
    pub lut_frac_bits: u32,
}

impl LutsArgs {
    fn build_config(&self) -> Result<SoftmaxConfig, CliError> {
        if self.radix < 2 || !self.radix.is_power_of_two() {
            return Err(CliError::usage(format!(
                "--radix must be a power of two >= 2, got {}",
                self.radix
            )));
        }
        let lut_fmt = FxpFormat::new(self.lut_word_bits, self.lut_frac_bits, false)
            .map_err(CliError::usage)?;
        let input_fmt =
            FxpFormat::new(8, self.radix.ilog2(), true).map_err(CliError::usage)?;
        let cfg = SoftmaxConfig {
            radix: self.radix,
            coarse_entries: self.coarse_entries,
            lut_fmt,
            input_fmt,
            ..SoftmaxConfig::default()
        };
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

/// Engines `compare` can contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    /// Softmax, exact integer datapath.
    SoftmaxBit,
    /// Softmax, float emulation.
    SoftmaxFloat,
    /// Exact `f64` softmax baseline.
    SoftmaxExact,
    /// Shift-only-denominator softmax baseline (deliberately
    /// unnormalized).
    Base2,
    /// Layernorm, exact integer datapath.
    LayernormBit,
    /// Layernorm, float emulation.
    LayernormFloat,
    /// Exact `f64` layernorm baseline.
    LayernormExact,
}

impl EngineKind {
    fn build(self, cols: usize) -> Result<Box<dyn RowEngine>, CliError> {
        Ok(match self {
            EngineKind::SoftmaxBit => Box::new(
                SoftmaxEngine::new(SoftmaxConfig::default()).map_err(CliError::usage)?,
            ),
            EngineKind::SoftmaxFloat => Box::new(
                SoftmaxEngine::new(SoftmaxConfig {
                    mode: Mode::FloatEmulation,
                    ..SoftmaxConfig::default()
                })
                .map_err(CliError::usage)?,
            ),
            EngineKind::SoftmaxExact => Box::new(ExactSoftmax),
            EngineKind::Base2 => Box::new(Base2Softmax),
            EngineKind::LayernormBit => Box::new(
                LayerNormEngine::new(LayerNormConfig::bit_accurate(cols))
                    .map_err(CliError::usage)?,
            ),
            EngineKind::LayernormFloat => Box::new(
                LayerNormEngine::new(LayerNormConfig::float_emulation(cols))
                    .map_err(CliError::usage)?,
            ),
            EngineKind::LayernormExact => Box::new(ExactLayerNorm),
        })
    }
}

/// `compare` flags.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Corpus every engine is scored on.
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Engines to contrast (at least two).
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = vec![
            EngineKind::SoftmaxBit,
            EngineKind::SoftmaxFloat,
            EngineKind::SoftmaxExact,
            EngineKind::Base2,
        ]
    )]
    pub engines: Vec<EngineKind>,
}

// --- Execution --------------------------------------------------------------------

/// Runs one parsed invocation to completion.
pub fn run(cli: Cli) -> Result<(), CliError> {
    fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
    match &cli.command {
        Command::Gen(args) => cmd_gen(&cli, args),
        Command::Softmax(args) => cmd_softmax(&cli, args),
        Command::Layernorm(args) => cmd_layernorm(&cli, args),
        Command::Sweep(args) => cmd_sweep(&cli, args),
        Command::Luts(args) => cmd_luts(&cli, args),
        Command::Compare(args) => cmd_compare(&cli, args),
    }
}

/// Maps a harness error onto the exit-code contract: a rejected spec is a
/// usage problem, anything raised while crunching rows is a data problem.
fn harness_err(e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidSpec(_) => CliError::usage(e),
        other => CliError::data(other),
    }
}

/// Per-row errors, evaluated by `jobs` workers, collected in row order.
pub fn collect_errors_parallel(
    corpus: &Corpus,
    engine: &dyn RowEngine,
    jobs: usize,
) -> Result<Vec<f64>, CliError> {
    let eval = || {
        (0..corpus.rows())
            .into_par_iter()
            .map(|r| engine.norm_error(&corpus.row_codes(r), corpus.format()))
            .collect::<Result<Vec<f64>, HarnessError>>()
    };
    let samples = if jobs == 0 {
        eval()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(CliError::usage)?;
        pool.install(eval)
    };
    samples.map_err(harness_err)
}

/// Writes the stats/manifest bundle for one distribution run and prints
/// the summary.
#[allow(clippy::too_many_arguments)]
fn emit_run(
    cli: &Cli,
    command: &str,
    engine_name: &str,
    mode: Mode,
    corpus: &Corpus,
    corpus_desc: Value,
    config: Value,
    latency_cycles: u64,
    stats: &ErrorStats,
) -> Result<(), CliError> {
    let mut files = Vec::new();
    let mut outputs = Vec::new();
    if cli.format.json() {
        let doc = report::stats_json(
            engine_name,
            mode.as_str(),
            corpus.rows(),
            corpus.cols(),
            latency_cycles,
            config.clone(),
            stats,
        );
        let name = format!("{command}_stats.json");
        files.push((cli.out_dir.join(&name), report::json_bytes(&doc)));
        outputs.push(name);
    }
    if cli.format.csv() {
        let name = format!("{command}_stats.csv");
        files.push((cli.out_dir.join(&name), report::stats_csv(stats).into_bytes()));
        outputs.push(name);
    }
    let manifest = report::manifest_json(command, cli.seed, corpus_desc, config, &outputs);
    files.push((cli.out_dir.join(format!("{command}_manifest.json")), report::json_bytes(&manifest)));
    report::write_outputs(&files)?;

    println!(
        "{engine_name}: {} rows of {} cols, latency {} cycles",
        stats.count,
        corpus.cols(),
        latency_cycles
    );
    println!("  mean error {:e}, max {:e}", stats.mean, stats.max);
    for &(t, f) in &stats.fraction_below {
        println!("  below {t:e}: {:.3}%", f * 100.0);
    }
    for name in &outputs {
        println!("wrote {}", cli.out_dir.join(name).display());
    }
    Ok(())
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> Result<(), CliError> {
    let (corpus, desc) = args.synth.synthesize(cli.seed)?;
    let out_path = cli.out_dir.join(&args.out);
    let sidecar = corpus_io::sidecar_path(&out_path);

    let basename = |p: &PathBuf| {
        p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    };
    let outputs = vec![basename(&out_path), basename(&sidecar)];
    let manifest = report::manifest_json("gen", cli.seed, desc, json!({}), &outputs);

    let files = vec![
        (out_path.clone(), corpus_io::encode_codes(&corpus)),
        (sidecar, corpus_io::sidecar_bytes(&corpus)),
        (out_path.with_extension("manifest.json"), report::json_bytes(&manifest)),
    ];
    report::write_outputs(&files)?;
    println!(
        "wrote {} ({}x{} {})",
        out_path.display(),
        corpus.rows(),
        corpus.cols(),
        corpus.format()
    );
    Ok(())
}

fn cmd_softmax(cli: &Cli, args: &SoftmaxArgs) -> Result<(), CliError> {
    let cfg = args.build_config()?;
    let (corpus, desc) = args.corpus.resolve(cli.seed)?;
    let engine = SoftmaxEngine::new(cfg.clone()).map_err(CliError::usage)?;
    let samples = collect_errors_parallel(&corpus, &engine, cli.jobs)?;
    let stats = ErrorStats::from_samples(&samples, HistogramSpec::default(), &DEFAULT_THRESHOLDS)
        .map_err(harness_err)?;
    emit_run(
        cli,
        "softmax",
        engine.name(),
        cfg.mode,
        &corpus,
        desc,
        report::softmax_config_json(&cfg),
        softmax_latency(corpus.cols()),
        &stats,
    )
}

fn cmd_layernorm(cli: &Cli, args: &LayernormArgs) -> Result<(), CliError> {
    let (corpus, desc) = args.corpus.resolve(cli.seed)?;
    let cfg = args.build_config(corpus.cols())?;
    let engine = LayerNormEngine::new(cfg.clone()).map_err(CliError::usage)?;
    let samples = collect_errors_parallel(&corpus, &engine, cli.jobs)?;
    let stats = ErrorStats::from_samples(&samples, HistogramSpec::default(), &DEFAULT_THRESHOLDS)
        .map_err(harness_err)?;
    emit_run(
        cli,
        "layernorm",
        engine.name(),
        cfg.mode,
        &corpus,
        desc,
        report::layernorm_config_json(&cfg),
        layernorm_latency(corpus.cols()),
        &stats,
    )
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let (corpus, desc) = args.corpus.resolve(cli.seed)?;
    let base = SweepBase {
        softmax: SoftmaxConfig::default(),
        layernorm: LayerNormConfig::float_emulation(corpus.cols()),
    };
    let knob: SweepKnob = args.knob.into();
    let points = run_sweep(&corpus, knob, &args.levels, &base).map_err(harness_err)?;

    let config = json!({
        "knob": knob.as_str(),
        "levels": args.levels,
        "base": {
            "softmax": report::softmax_config_json(&base.softmax),
            "layernorm": report::layernorm_config_json(&base.layernorm),
        },
    });
    let mut files = Vec::new();
    let mut outputs = Vec::new();
    if cli.format.csv() {
        files.push((cli.out_dir.join("sweep.csv"), report::sweep_csv(&points).into_bytes()));
        outputs.push("sweep.csv".to_string());
    }
    if cli.format.json() {
        files.push((cli.out_dir.join("sweep.json"), report::json_bytes(&report::sweep_json(&points))));
        outputs.push("sweep.json".to_string());
    }
    let manifest = report::manifest_json("sweep", cli.seed, desc, config, &outputs);
    files.push((cli.out_dir.join("sweep_manifest.json"), report::json_bytes(&manifest)));
    report::write_outputs(&files)?;

    for p in &points {
        println!(
            "{} = {}: mean error {:e}, max {:e} over {} rows",
            p.knob.as_str(),
            p.level,
            p.mean_error,
            p.max_error,
            p.rows_evaluated
        );
    }
    for name in &outputs {
        println!("wrote {}", cli.out_dir.join(name).display());
    }
    Ok(())
}

fn cmd_luts(cli: &Cli, args: &LutsArgs) -> Result<(), CliError> {
    let cfg = args.build_config()?;
    let (coarse, residual) = build_luts(&cfg).map_err(CliError::usage)?;
    let to_file = |lines: Vec<String>| {
        let mut s = lines.join("\n");
        s.push('\n');
        s.into_bytes()
    };

    let outputs = vec!["softmax_coarse.hex".to_string(), "softmax_residual.hex".to_string()];
    let manifest = report::manifest_json(
        "luts",
        cli.seed,
        json!(null),
        report::softmax_config_json(&cfg),
        &outputs,
    );
    let files = vec![
        (cli.out_dir.join("softmax_coarse.hex"), to_file(coarse.hex_lines())),
        (cli.out_dir.join("softmax_residual.hex"), to_file(residual.hex_lines())),
        (cli.out_dir.join("luts_manifest.json"), report::json_bytes(&manifest)),
    ];
    report::write_outputs(&files)?;
    println!(
        "wrote {} ({} entries) and {} ({} entries)",
        cli.out_dir.join("softmax_coarse.hex").display(),
        coarse.entries.len(),
        cli.out_dir.join("softmax_residual.hex").display(),
        residual.entries.len()
    );
    Ok(())
}

fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<(), CliError> {
    let (corpus, desc) = args.corpus.resolve(cli.seed)?;
    let engines: Vec<Box<dyn RowEngine>> = args
        .engines
        .iter()
        .map(|&k| k.build(corpus.cols()))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&dyn RowEngine> = engines.iter().map(AsRef::as_ref).collect();
    let results = compare_engines(&corpus, &refs).map_err(harness_err)?;

    let config = json!({
        "engines": results.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
    });
    let mut files = Vec::new();
    let mut outputs = Vec::new();
    if cli.format.json() {
        let doc = report::compare_json(&desc, &results);
        files.push((cli.out_dir.join("compare.json"), report::json_bytes(&doc)));
        outputs.push("compare.json".to_string());
    }
    if cli.format.csv() {
        files.push((cli.out_dir.join("compare.csv"), report::compare_csv(&results).into_bytes()));
        outputs.push("compare.csv".to_string());
    }
    let manifest = report::manifest_json("compare", cli.seed, desc, config, &outputs);
    files.push((cli.out_dir.join("compare_manifest.json"), report::json_bytes(&manifest)));
    report::write_outputs(&files)?;

    for (name, stats) in &results {
        println!("{name}: mean error {:e}, max {:e}", stats.mean, stats.max);
    }
    for name in &outputs {
        println!("wrote {}", cli.out_dir.join(name).display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Cli {
        Cli::try_parse_from(argv).expect("argv should parse")
    }

    #[test]
    fn softmax_flags_build_a_validated_config() {
        let cli = parse(&["gnorm", "softmax", "--mode", "float", "--radix", "16"]);
        let Command::Softmax(args) = &cli.command else { panic!("wrong subcommand") };
        let cfg = args.build_config().unwrap();
        assert_eq!(cfg.mode, Mode::FloatEmulation);
        assert_eq!(cfg.radix, 16);
        assert_eq!(cfg.input_fmt.frac_bits(), 4, "input fraction must track log2(radix)");
    }

    #[test]
    fn bad_radix_is_a_usage_error() {
        let cli = parse(&["gnorm", "softmax", "--radix", "6"]);
        let Command::Softmax(args) = &cli.command else { panic!("wrong subcommand") };
        assert_eq!(args.build_config().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn layernorm_newton_flag_overrides_the_schedule() {
        let cli = parse(&["gnorm", "layernorm", "--mode", "float", "--newton-iters", "4"]);
        let Command::Layernorm(args) = &cli.command else { panic!("wrong subcommand") };
        let cfg = args.build_config(64).unwrap();
        assert_eq!(cfg.newton_iters, NewtonIterations::Fixed(4));
        assert_eq!(cfg.mode, Mode::FloatEmulation);
    }

    #[test]
    fn zero_newton_iters_in_bit_mode_is_rejected() {
        let cli = parse(&["gnorm", "layernorm", "--newton-iters", "0"]);
        let Command::Layernorm(args) = &cli.command else { panic!("wrong subcommand") };
        assert_eq!(args.build_config(64).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn synthetic_corpora_are_seed_deterministic() {
        let cli = parse(&["gnorm", "--seed", "11", "softmax", "--rows", "3", "--cols", "4"]);
        let Command::Softmax(args) = &cli.command else { panic!("wrong subcommand") };
        let (a, _) = args.corpus.resolve(11).unwrap();
        let (b, _) = args.corpus.resolve(11).unwrap();
        for r in 0..3 {
            assert_eq!(a.row_codes(r), b.row_codes(r));
        }
    }

    #[test]
    fn global_flags_parse_after_the_subcommand() {
        let cli = parse(&["gnorm", "sweep", "--knob", "newton-iters", "--levels", "1,2,3",
            "--seed", "9", "--jobs", "2"]);
        assert_eq!(cli.seed, 9);
        assert_eq!(cli.jobs, 2);
        let Command::Sweep(args) = &cli.command else { panic!("wrong subcommand") };
        assert_eq!(args.levels, vec![1, 2, 3]);
        assert_eq!(SweepKnob::from(args.knob).as_str(), "newton-iters");
    }

    #[test]
    fn parallel_and_serial_error_collection_agree() {
        let cli = parse(&["gnorm", "softmax", "--rows", "40", "--cols", "8"]);
        let Command::Softmax(args) = &cli.command else { panic!("wrong subcommand") };
        let (corpus, _) = args.corpus.resolve(7).unwrap();
        let engine = SoftmaxEngine::new(args.build_config().unwrap()).unwrap();
        let serial = collect_errors_parallel(&corpus, &engine, 1).unwrap();
        let parallel = collect_errors_parallel(&corpus, &engine, 8).unwrap();
        assert_eq!(serial, parallel, "worker count must not reorder or change samples");
    }
}
