//! Measurement harness: corpora, error metrics, sweeps, and baselines.
//!
//! The question this module answers is always the same: *how far from
//! normalized are the outputs?* For softmax that is `|1 - Σp|`; for
//! layernorm it is `|1 - σ|` of the normalized values. Both engines, their
//! exact `f64` references, and a deliberately unnormalized base-2 baseline
//! all plug in behind one [`RowEngine`] trait, so every distribution,
//! comparison, and sweep is computed by the same code path.
//!
//! Corpora are generated lazily: a row is a pure function of
//! `(seed, generator, shape, row index)` via a per-row counter-mode RNG
//! stream, so a hundred-thousand-row corpus costs no memory, any row can be
//! regenerated in isolation, and parallel evaluation cannot perturb the
//! data no matter how the rows are scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::fxp::{quantize, FxpError, FxpFormat, QuantTensor, Rounding};
use crate::layernorm::{LayerNormConfig, LayerNormEngine, LayerNormError};
use crate::softmax::{SoftmaxConfig, SoftmaxEngine, SoftmaxError};
use crate::util::{floor_log2, pow2};
use crate::Mode;

// --- Errors ----------------------------------------------------------------

/// Errors raised by harness construction and runs.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// A softmax engine rejected its configuration or input.
    Softmax(SoftmaxError),
    /// A layernorm engine rejected its configuration or input.
    LayerNorm(LayerNormError),
    /// A fixed-point format or tensor problem.
    Fxp(FxpError),
    /// A harness parameter that does not describe a runnable measurement
    /// (bad histogram bounds, malformed sweep levels, too few engines...).
    InvalidSpec(String),
}

impl core::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HarnessError::Softmax(e) => write!(f, "softmax: {e}"),
            HarnessError::LayerNorm(e) => write!(f, "layernorm: {e}"),
            HarnessError::Fxp(e) => write!(f, "fixed-point: {e}"),
            HarnessError::InvalidSpec(why) => write!(f, "invalid harness spec: {why}"),
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<SoftmaxError> for HarnessError {
    fn from(e: SoftmaxError) -> Self {
        HarnessError::Softmax(e)
    }
}

impl From<LayerNormError> for HarnessError {
    fn from(e: LayerNormError) -> Self {
        HarnessError::LayerNorm(e)
    }
}

impl From<FxpError> for HarnessError {
    fn from(e: FxpError) -> Self {
        HarnessError::Fxp(e)
    }
}

// --- Histograms --------------------------------------------------------------

/// Log-spaced histogram layout for normalization errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    /// Number of bins between `lo` and `hi`.
    pub bins: usize,
    /// Lower edge of the first bin; smaller samples land in `underflow`.
    pub lo: f64,
    /// Upper edge of the last bin; samples at or above land in `overflow`.
    pub hi: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec { bins: 64, lo: 1e-12, hi: 1e-1 }
    }
}

impl HistogramSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.bins == 0 || !(self.lo > 0.0) || !(self.hi > self.lo) || !self.hi.is_finite() {
            return Err(HarnessError::InvalidSpec(format!(
                "histogram needs bins >= 1 and 0 < lo < hi, got bins={} lo={} hi={}",
                self.bins, self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Counts of error samples in log-spaced bins, plus the two tails.
///
/// Zero is a common and meaningful error value (exactly normalized rows),
/// so the underflow tail is part of the report, not an artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// The layout this histogram was filled under.
    pub spec: HistogramSpec,
    /// Samples below `spec.lo` (including exact zeros).
    pub underflow: u64,
    /// Per-bin counts, length `spec.bins`.
    pub counts: Vec<u64>,
    /// Samples at or above `spec.hi`.
    pub overflow: u64,
}

impl Histogram {
    /// An empty histogram with the given layout.
    pub fn new(spec: HistogramSpec) -> Result<Self, HarnessError> {
        spec.validate()?;
        Ok(Histogram { spec, underflow: 0, counts: vec![0; spec.bins], overflow: 0 })
    }

    /// Adds one non-negative sample.
    pub fn add(&mut self, x: f64) {
        debug_assert!(x >= 0.0 && !x.is_nan(), "error samples are absolute values");
        if x < self.spec.lo {
            self.underflow += 1;
        } else if x >= self.spec.hi {
            self.overflow += 1;
        } else {
            let lg_lo = libm::log10(self.spec.lo);
            let lg_hi = libm::log10(self.spec.hi);
            let frac = (libm::log10(x) - lg_lo) / (lg_hi - lg_lo);
            let i = ((frac * self.spec.bins as f64) as usize).min(self.spec.bins - 1);
            self.counts[i] += 1;
        }
    }

    /// The `bins + 1` bin edges, log-spaced from `lo` to `hi`.
    pub fn edges(&self) -> Vec<f64> {
        let lg_lo = libm::log10(self.spec.lo);
        let lg_hi = libm::log10(self.spec.hi);
        (0..=self.spec.bins)
            .map(|i| libm::pow(10.0, lg_lo + (lg_hi - lg_lo) * i as f64 / self.spec.bins as f64))
            .collect()
    }

    /// Total samples across tails and bins.
    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.counts.iter().sum::<u64>()
    }
}

/// The error thresholds every report tabulates by default: the headline
/// 0.2e-6 figure plus two coarser reference points.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.2e-6, 1e-6, 1e-3];

/// Summary statistics of one error distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats {
    /// Number of rows measured.
    pub count: usize,
    /// Mean error.
    pub mean: f64,
    /// Largest error.
    pub max: f64,
    /// `(threshold, fraction of samples strictly below it)` pairs.
    pub fraction_below: Vec<(f64, f64)>,
    /// Log-spaced histogram of the samples.
    pub histogram: Histogram,
}

impl ErrorStats {
    /// Summarizes a sample set under a histogram layout and thresholds.
    pub fn from_samples(
        samples: &[f64],
        spec: HistogramSpec,
        thresholds: &[f64],
    ) -> Result<Self, HarnessError> {
        if samples.is_empty() {
            return Err(HarnessError::InvalidSpec("no error samples to summarize".into()));
        }
        let mut histogram = Histogram::new(spec)?;
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for &x in samples {
            histogram.add(x);
            sum += x;
            max = max.max(x);
        }
        let n = samples.len() as f64;
        let fraction_below = thresholds
            .iter()
            .map(|&t| (t, samples.iter().filter(|&&x| x < t).count() as f64 / n))
            .collect();
        Ok(ErrorStats { count: samples.len(), mean: sum / n, max, fraction_below, histogram })
    }
}

// --- Corpora -----------------------------------------------------------------

/// Distribution a generated corpus draws its rows from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// Zero-mean gaussian logits/activations with a fixed scale.
    Gaussian {
        /// Standard deviation of every element.
        std: f64,
    },
    /// Independent uniform values over `[lo, hi]`.
    Uniform {
        /// Inclusive lower bound.
        lo: f64,
        /// Inclusive upper bound.
        hi: f64,
    },
    /// Gaussian rows whose scale itself varies per row — the shape
    /// attention score rows take, where some heads run hot and others
    /// nearly uniform.
    AttentionLike {
        /// Smallest per-row standard deviation.
        std_lo: f64,
        /// Largest per-row standard deviation.
        std_hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Generated(Generator),
    Materialized(QuantTensor),
}

/// A deterministic corpus of quantized rows.
///
/// Generated corpora never materialize: each row comes from its own RNG
/// stream keyed by the row index, so contents are a pure function of
/// `(seed, generator, shape)` regardless of evaluation order. Values are
/// quantized to the corpus format with nearest-even rounding; generator
/// tails that fall outside the format clip to its edges, which is exactly
/// what happens to real activations entering an integer unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    rows: usize,
    cols: usize,
    format: FxpFormat,
    seed: u64,
    source: Source,
}

impl Corpus {
    /// A lazily generated corpus.
    pub fn generated(
        rows: usize,
        cols: usize,
        format: FxpFormat,
        generator: Generator,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if rows == 0 || cols == 0 {
            return Err(HarnessError::InvalidSpec(format!(
                "corpus shape {rows}x{cols} has no elements"
            )));
        }
        let ok = match generator {
            Generator::Gaussian { std } => std > 0.0 && std.is_finite(),
            Generator::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Generator::AttentionLike { std_lo, std_hi } => {
                std_lo > 0.0 && std_lo <= std_hi && std_hi.is_finite()
            }
        };
        if !ok {
            return Err(HarnessError::InvalidSpec(format!(
                "generator parameters out of range: {generator:?}"
            )));
        }
        Ok(Corpus { rows, cols, format, seed, source: Source::Generated(generator) })
    }

    /// Wraps an already materialized tensor (e.g. one loaded from a file).
    pub fn from_tensor(tensor: QuantTensor) -> Self {
        Corpus {
            rows: tensor.rows(),
            cols: tensor.cols(),
            format: tensor.format(),
            seed: 0,
            source: Source::Materialized(tensor),
        }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element format.
    pub fn format(&self) -> FxpFormat {
        self.format
    }

    /// Seed the generated rows are keyed by (zero for materialized data).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The codes of row `r`.
    pub fn row_codes(&self, r: usize) -> Vec<i64> {
        assert!(r < self.rows, "row {r} out of {} rows", self.rows);
        match &self.source {
            Source::Materialized(t) => t.row(r).to_vec(),
            Source::Generated(g) => {
                // One independent stream per row: same cipher key (the
                // seed), different counter stream (the row index).
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(r as u64);
                let reals = self.generate_row(g, &mut rng);
                reals
                    .iter()
                    .map(|&x| quantize(x, self.format, Rounding::NearestEven).code())
                    .collect()
            }
        }
    }

    /// Row `r` dequantized into reals.
    pub fn row_reals(&self, r: usize) -> Vec<f64> {
        self.row_codes(r)
            .iter()
            .map(|&c| c as f64 * self.format.resolution())
            .collect()
    }

    fn generate_row(&self, g: &Generator, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *g {
            Generator::Gaussian { std } => {
                (0..self.cols).map(|_| std * standard_normal(rng)).collect()
            }
            Generator::Uniform { lo, hi } => {
                (0..self.cols).map(|_| lo + (hi - lo) * unit_half_open(rng)).collect()
            }
            Generator::AttentionLike { std_lo, std_hi } => {
                let std = std_lo + (std_hi - std_lo) * unit_half_open(rng);
                (0..self.cols).map(|_| std * standard_normal(rng)).collect()
            }
        }
    }
}

/// Uniform in `[0, 1)` with 53 random bits.
fn unit_half_open(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * pow2(-53)
}

/// Uniform in `(0, 1]` — safe as a logarithm argument.
fn unit_open_closed(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * pow2(-53)
}

/// Standard normal via Box-Muller. One draw consumes two uniforms; the
/// sine twin is discarded so every sample is a fixed two-word cost, which
/// keeps row streams aligned and reproducible.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open_closed(rng);
    let u2 = unit_half_open(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

// --- Row engines ----------------------------------------------------------------

/// Anything that can score one row's normalization error.
///
/// Implementations requantize the row if its format differs from what they
/// were configured for, so one corpus can feed engines with different
/// input formats (as configuration sweeps do).
pub trait RowEngine: Sync {
    /// Short stable name for reports.
    fn name(&self) -> &'static str;
    /// The normalization error of one row of codes in `fmt`.
    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError>;
}

/// Requantizes codes from one format to another through the real domain.
fn requantize(codes: &[i64], from: FxpFormat, to: FxpFormat) -> Vec<i64> {
    codes
        .iter()
        .map(|&c| quantize(c as f64 * from.resolution(), to, Rounding::NearestEven).code())
        .collect()
}

impl RowEngine for SoftmaxEngine {
    fn name(&self) -> &'static str {
        match self.config().mode {
            Mode::BitAccurate => "softmax-bit",
            Mode::FloatEmulation => "softmax-float",
        }
    }

    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError> {
        let input_fmt = self.config().input_fmt;
        let result = if fmt == input_fmt {
            self.eval_row(codes)?
        } else {
            self.eval_row(&requantize(codes, fmt, input_fmt))?
        };
        Ok(result.sum_error)
    }
}

impl RowEngine for LayerNormEngine {
    fn name(&self) -> &'static str {
        match self.config().mode {
            Mode::BitAccurate => "layernorm-bit",
            Mode::FloatEmulation => "layernorm-float",
        }
    }

    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError> {
        let input_fmt = self.config().input_fmt;
        let result = if fmt == input_fmt {
            self.eval_row(codes)?
        } else {
            self.eval_row(&requantize(codes, fmt, input_fmt))?
        };
        Ok(result.sigma_error)
    }
}

/// Exact `f64` softmax as a baseline: its normalization error is pure
/// floating-point summation noise, the floor any approximation is judged
/// against.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSoftmax;

impl RowEngine for ExactSoftmax {
    fn name(&self) -> &'static str {
        "softmax-exact"
    }

    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError> {
        let reals: Vec<f64> = codes.iter().map(|&c| c as f64 * fmt.resolution()).collect();
        let p = crate::softmax::softmax_exact(&reals)?;
        Ok((1.0 - p.iter().sum::<f64>()).abs())
    }
}

/// Exact `f64` layernorm as a baseline. Degenerate rows (zero variance)
/// score an error of 1.0, matching the engines' zero-output convention.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactLayerNorm;

impl RowEngine for ExactLayerNorm {
    fn name(&self) -> &'static str {
        "layernorm-exact"
    }

    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError> {
        let reals: Vec<f64> = codes.iter().map(|&c| c as f64 * fmt.resolution()).collect();
        match crate::layernorm::layernorm_exact(&reals, None) {
            Ok(out) => {
                Ok((1.0 - crate::util::population_std(&out)).abs())
            }
            Err(LayerNormError::DegenerateRow) => Ok(1.0),
            Err(e) => Err(e.into()),
        }
    }
}

/// The contrast baseline: base-2 exponentials normalized by a denominator
/// truncated to a power of two.
///
/// `p_i = 2^(x_i - max) / 2^floor(log2(Σ 2^(x_j - max)))` — the division is
/// a free shift in hardware, but the sum of the outputs lands anywhere in
/// `[1, 2)`, which is exactly the normalization failure the measured units
/// are built to avoid.
pub fn base2_unnormalized_softmax(row: &[f64]) -> Result<Vec<f64>, HarnessError> {
    if row.is_empty() {
        return Err(SoftmaxError::EmptyRow.into());
    }
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&x| libm::exp2(x - max)).collect();
    let s: f64 = e.iter().sum();
    debug_assert!(s >= 1.0, "the max element contributes 2^0");
    let denom = pow2(floor_log2(s));
    Ok(e.iter().map(|&v| v / denom).collect())
}

/// [`base2_unnormalized_softmax`] behind the [`RowEngine`] interface.
#[derive(Debug, Clone, Copy, Default)]
pub struct Base2Softmax;

impl RowEngine for Base2Softmax {
    fn name(&self) -> &'static str {
        "softmax-base2"
    }

    fn norm_error(&self, codes: &[i64], fmt: FxpFormat) -> Result<f64, HarnessError> {
        let reals: Vec<f64> = codes.iter().map(|&c| c as f64 * fmt.resolution()).collect();
        let p = base2_unnormalized_softmax(&reals)?;
        Ok((1.0 - p.iter().sum::<f64>()).abs())
    }
}

// --- Runs ---------------------------------------------------------------------

/// Scores every corpus row through one engine and summarizes the errors.
pub fn run_distribution(
    corpus: &Corpus,
    engine: &dyn RowEngine,
    spec: HistogramSpec,
    thresholds: &[f64],
) -> Result<ErrorStats, HarnessError> {
    let samples = collect_errors(corpus, engine)?;
    ErrorStats::from_samples(&samples, spec, thresholds)
}

/// The raw per-row error samples for one engine over one corpus.
pub fn collect_errors(corpus: &Corpus, engine: &dyn RowEngine) -> Result<Vec<f64>, HarnessError> {
    (0..corpus.rows())
        .map(|r| engine.norm_error(&corpus.row_codes(r), corpus.format()))
        .collect()
}

/// Runs several engines over one corpus and pairs each name with its
/// error summary. At least two engines are required — a comparison of one
/// thing is a distribution, and [`run_distribution`] already does that.
pub fn compare_engines(
    corpus: &Corpus,
    engines: &[&dyn RowEngine],
) -> Result<Vec<(String, ErrorStats)>, HarnessError> {
    if engines.len() < 2 {
        return Err(HarnessError::InvalidSpec(format!(
            "comparison needs at least two engines, got {}",
            engines.len()
        )));
    }
    engines
        .iter()
        .map(|e| {
            let stats =
                run_distribution(corpus, *e, HistogramSpec::default(), &DEFAULT_THRESHOLDS)?;
            Ok((String::from(e.name()), stats))
        })
        .collect()
}

// --- Sweeps ---------------------------------------------------------------------

/// Which design parameter a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKnob {
    /// Softmax residual-table size `R` (a power of two). Each level also
    /// moves the input format to `log2(R)` fraction bits — that coupling
    /// is what makes the table's argument split exact — and the corpus is
    /// requantized accordingly. Note the row-sum metric is not expected
    /// to fall as `R` rises: the scale-and-divide stage renormalizes
    /// whatever the tables produce, so this knob mostly shifts the input
    /// format's range/resolution trade, a diagnostic rather than a
    /// precision dial.
    ResidualEntries,
    /// Softmax table fraction width. Each level runs the whole datapath at
    /// that width: output scale `out_bits` tracks it and the divider keeps
    /// one extra bit (`div_precision = width + 1`), mirroring how a
    /// hardware generation would be resized. Sweeping the table alone
    /// would tell nothing — the scale-and-divide stage renormalizes
    /// whatever the tables produce.
    LutFracBits,
    /// Newton iteration count for the layernorm reciprocal square root.
    /// Most informative in float emulation, where output quantization does
    /// not mask the tail iterations.
    NewtonIters,
    /// Softmax divider precision `P` at fixed output scale.
    DivPrecision,
}

impl SweepKnob {
    /// Stable lowercase name, used in reports and file output.
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKnob::ResidualEntries => "residual-entries",
            SweepKnob::LutFracBits => "lut-frac-bits",
            SweepKnob::NewtonIters => "newton-iters",
            SweepKnob::DivPrecision => "div-precision",
        }
    }
}

impl core::fmt::Display for SweepKnob {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error summary of one sweep level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// The swept knob.
    pub knob: SweepKnob,
    /// The level the knob was set to.
    pub level: u64,
    /// Mean normalization error over the corpus at this level.
    pub mean_error: f64,
    /// Largest normalization error over the corpus at this level.
    pub max_error: f64,
    /// Rows scored.
    pub rows_evaluated: usize,
}

/// Baseline configurations a sweep perturbs one knob of.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepBase {
    /// Softmax configuration for the softmax-side knobs.
    pub softmax: SoftmaxConfig,
    /// Layernorm configuration for [`SweepKnob::NewtonIters`].
    pub layernorm: LayerNormConfig,
}

/// Walks `knob` through `levels` (strictly increasing, at least two) and
/// scores the corpus at each level.
pub fn run_sweep(
    corpus: &Corpus,
    knob: SweepKnob,
    levels: &[u64],
    base: &SweepBase,
) -> Result<Vec<SweepPoint>, HarnessError> {
    if levels.len() < 2 {
        return Err(HarnessError::InvalidSpec(format!(
            "a sweep needs at least two levels, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidSpec(format!(
            "sweep levels must be strictly increasing, got {levels:?}"
        )));
    }
    levels
        .iter()
        .map(|&level| {
            let samples = match knob {
                SweepKnob::NewtonIters => {
                    let iters = u32::try_from(level).map_err(|_| {
                        HarnessError::InvalidSpec(format!("iteration count {level} out of range"))
                    })?;
                    let cfg = LayerNormConfig {
                        newton_iters: crate::layernorm::NewtonIterations::Fixed(iters),
                        ..base.layernorm.clone()
                    };
                    let engine = LayerNormEngine::new(cfg)?;
                    collect_errors(corpus, &engine)?
                }
                _ => {
                    let cfg = softmax_config_at(knob, level, &base.softmax)?;
                    let engine = SoftmaxEngine::new(cfg)?;
                    collect_errors(corpus, &engine)?
                }
            };
            let n = samples.len();
            let mean = samples.iter().sum::<f64>() / n as f64;
            let max = samples.iter().copied().fold(0.0f64, f64::max);
            Ok(SweepPoint { knob, level, mean_error: mean, max_error: max, rows_evaluated: n })
        })
        .collect()
}

/// The softmax configuration one sweep level denotes.
fn softmax_config_at(
    knob: SweepKnob,
    level: u64,
    base: &SoftmaxConfig,
) -> Result<SoftmaxConfig, HarnessError> {
    let narrow =
        || HarnessError::InvalidSpec(format!("{knob} level {level} out of range"));
    let cfg = match knob {
        SweepKnob::ResidualEntries => {
            let radix = u32::try_from(level).map_err(|_| narrow())?;
            let input_fmt = FxpFormat::new(
                base.input_fmt.word_bits(),
                if radix.is_power_of_two() { radix.ilog2() } else { base.input_fmt.frac_bits() },
                base.input_fmt.is_signed(),
            )?;
            SoftmaxConfig { radix, input_fmt, ..base.clone() }
        }
        SweepKnob::LutFracBits => {
            let width = u32::try_from(level).map_err(|_| narrow())?;
            let lut_fmt = FxpFormat::new(base.lut_fmt.word_bits(), width, false)?;
            SoftmaxConfig { lut_fmt, out_bits: width, div_precision: width + 1, ..base.clone() }
        }
        SweepKnob::DivPrecision => {
            let p = u32::try_from(level).map_err(|_| narrow())?;
            SoftmaxConfig { div_precision: p, ..base.clone() }
        }
        SweepKnob::NewtonIters => unreachable!("handled by the layernorm arm"),
    };
    cfg.validate()?;
    Ok(cfg)
}

// --- Tests -----------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layernorm::NewtonIterations;

    fn small_gaussian(rows: usize, cols: usize, seed: u64) -> Corpus {
        Corpus::generated(
            rows,
            cols,
            FxpFormat::I8F3,
            Generator::Gaussian { std: 1.0 },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn histogram_places_decades_in_expected_bins() {
        let mut h = Histogram::new(HistogramSpec::default()).unwrap();
        // 64 bins over 11 decades: 1e-7 sits at fraction 5/11 of the axis.
        h.add(1e-7);
        let expected = (5.0 / 11.0 * 64.0) as usize;
        assert_eq!(h.counts[expected], 1);

        h.add(0.0);
        h.add(1e-13);
        assert_eq!(h.underflow, 2);
        h.add(0.1);
        h.add(5.0);
        assert_eq!(h.overflow, 2);
        assert_eq!(h.total(), 5);

        let edges = h.edges();
        assert_eq!(edges.len(), 65);
        assert!((edges[0] - 1e-12).abs() < 1e-24);
        assert!((edges[64] - 1e-1).abs() < 1e-13);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn histogram_rejects_bad_specs() {
        assert!(Histogram::new(HistogramSpec { bins: 0, ..Default::default() }).is_err());
        assert!(Histogram::new(HistogramSpec { lo: 0.0, ..Default::default() }).is_err());
        assert!(Histogram::new(HistogramSpec { lo: 1.0, hi: 0.5, bins: 4 }).is_err());
    }

    #[test]
    fn error_stats_summarize_known_samples() {
        let samples = [0.0, 1e-9, 1e-5, 0.5];
        let stats =
            ErrorStats::from_samples(&samples, HistogramSpec::default(), &DEFAULT_THRESHOLDS)
                .unwrap();
        assert_eq!(stats.count, 4);
        assert_eq!(stats.max, 0.5);
        assert!((stats.mean - (1e-9 + 1e-5 + 0.5) / 4.0).abs() < 1e-18);
        assert_eq!(stats.fraction_below[0], (0.2e-6, 0.5));
        assert_eq!(stats.fraction_below[1], (1e-6, 0.5));
        assert_eq!(stats.fraction_below[2], (1e-3, 0.75));
        assert_eq!(stats.histogram.total(), 4);

        assert!(ErrorStats::from_samples(&[], HistogramSpec::default(), &[]).is_err());
    }

    #[test]
    fn corpus_rows_are_reproducible_and_stream_independent() {
        let c = small_gaussian(100, 16, 7);
        // Same row fetched twice is identical; a rebuilt corpus agrees.
        assert_eq!(c.row_codes(42), c.row_codes(42));
        let c2 = small_gaussian(100, 16, 7);
        assert_eq!(c.row_codes(99), c2.row_codes(99));
        // Different rows and different seeds disagree.
        assert_ne!(c.row_codes(0), c.row_codes(1));
        let c3 = small_gaussian(100, 16, 8);
        assert_ne!(c.row_codes(0), c3.row_codes(0));
    }

    #[test]
    fn gaussian_corpus_has_roughly_the_requested_scale() {
        let c = Corpus::generated(
            200,
            64,
            FxpFormat::I8F3,
            Generator::Gaussian { std: 2.0 },
            11,
        )
        .unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut n = 0usize;
        for r in 0..c.rows() {
            for x in c.row_reals(r) {
                sum += x;
                sum_sq += x * x;
                n += 1;
            }
        }
        let mean = sum / n as f64;
        let std = libm::sqrt(sum_sq / n as f64 - mean * mean);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((std - 2.0).abs() < 0.1, "std {std}");
    }

    #[test]
    fn attention_like_rows_vary_in_scale() {
        let c = Corpus::generated(
            64,
            64,
            FxpFormat::I8F3,
            Generator::AttentionLike { std_lo: 1.0, std_hi: 8.0 },
            3,
        )
        .unwrap();
        let row_std = |r: usize| {
            let xs = c.row_reals(r);
            let mu = xs.iter().sum::<f64>() / xs.len() as f64;
            libm::sqrt(xs.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64)
        };
        let stds: Vec<f64> = (0..c.rows()).map(row_std).collect();
        let lo = stds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = stds.iter().copied().fold(0.0f64, f64::max);
        assert!(hi > 2.0 * lo, "row scales did not vary: {lo}..{hi}");
    }

    #[test]
    fn corpus_validation_rejects_nonsense() {
        let fmt = FxpFormat::I8F3;
        assert!(Corpus::generated(0, 4, fmt, Generator::Gaussian { std: 1.0 }, 0).is_err());
        assert!(Corpus::generated(4, 0, fmt, Generator::Gaussian { std: 1.0 }, 0).is_err());
        assert!(Corpus::generated(4, 4, fmt, Generator::Gaussian { std: 0.0 }, 0).is_err());
        assert!(Corpus::generated(4, 4, fmt, Generator::Uniform { lo: 1.0, hi: 1.0 }, 0).is_err());
        assert!(
            Corpus::generated(4, 4, fmt, Generator::AttentionLike { std_lo: 2.0, std_hi: 1.0 }, 0)
                .is_err()
        );
    }

    #[test]
    fn materialized_corpus_returns_its_rows() {
        let t = QuantTensor::from_codes(2, 3, FxpFormat::I8F3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let c = Corpus::from_tensor(t);
        assert_eq!(c.row_codes(1), [4, 5, 6]);
        assert_eq!(c.row_reals(0), [0.125, 0.25, 0.375]);
    }

    #[test]
    fn base2_baseline_misses_normalization_as_documented() {
        // Two equal logits: sum 2 is a power of two, normalized exactly.
        let p = base2_unnormalized_softmax(&[0.0, 0.0]).unwrap();
        assert_eq!(p, [0.5, 0.5]);
        // Three equal logits: sum 3 truncates to denominator 2 and the
        // output sum is 1.5 — a 50% normalization error.
        let p = base2_unnormalized_softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, [0.5, 0.5, 0.5]);
        // A single logit is exact.
        let p = base2_unnormalized_softmax(&[3.0]).unwrap();
        assert_eq!(p, [1.0]);
        assert!(base2_unnormalized_softmax(&[]).is_err());
    }

    #[test]
    fn distribution_run_scores_every_row() {
        let corpus = small_gaussian(50, 8, 5);
        let engine = SoftmaxEngine::new(SoftmaxConfig::default()).unwrap();
        let stats =
            run_distribution(&corpus, &engine, HistogramSpec::default(), &DEFAULT_THRESHOLDS)
                .unwrap();
        assert_eq!(stats.count, 50);
        assert_eq!(stats.histogram.total(), 50);
        // Bit-accurate softmax keeps the sum within (N+2) output LSBs.
        assert!(stats.max <= 10.0 / 32768.0, "max {}", stats.max);
    }

    #[test]
    fn exact_engines_sit_at_the_float_noise_floor() {
        let corpus = small_gaussian(20, 16, 9);
        let sm = collect_errors(&corpus, &ExactSoftmax).unwrap();
        assert!(sm.iter().all(|&e| e < 1e-12));
        let ln = collect_errors(&corpus, &ExactLayerNorm).unwrap();
        assert!(ln.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn compare_requires_two_engines_and_names_results() {
        let corpus = small_gaussian(10, 8, 1);
        let bit = SoftmaxEngine::new(SoftmaxConfig::default()).unwrap();
        assert!(compare_engines(&corpus, &[&bit]).is_err());

        let float = SoftmaxEngine::new(SoftmaxConfig {
            mode: Mode::FloatEmulation,
            ..SoftmaxConfig::default()
        })
        .unwrap();
        let results = compare_engines(&corpus, &[&bit, &float, &Base2Softmax]).unwrap();
        assert_eq!(results.len(), 3);
        assert_eq!(results[0].0, "softmax-bit");
        assert_eq!(results[1].0, "softmax-float");
        assert_eq!(results[2].0, "softmax-base2");
        // The float algorithm is at the noise floor; the base-2 baseline
        // is catastrophically unnormalized by comparison.
        assert!(results[1].1.max < 1e-12);
        assert!(results[2].1.max > 0.05);
    }

    #[test]
    fn sweep_validates_levels() {
        let corpus = small_gaussian(5, 8, 2);
        let base = SweepBase {
            softmax: SoftmaxConfig::default(),
            layernorm: LayerNormConfig::float_emulation(8),
        };
        assert!(run_sweep(&corpus, SweepKnob::DivPrecision, &[16], &base).is_err());
        assert!(run_sweep(&corpus, SweepKnob::DivPrecision, &[16, 16], &base).is_err());
        assert!(run_sweep(&corpus, SweepKnob::DivPrecision, &[17, 16], &base).is_err());
    }

    #[test]
    fn newton_sweep_error_shrinks_with_iterations() {
        let corpus = small_gaussian(40, 32, 13);
        let base = SweepBase {
            softmax: SoftmaxConfig::default(),
            layernorm: LayerNormConfig {
                newton_iters: NewtonIterations::Fixed(1),
                ..LayerNormConfig::float_emulation(32)
            },
        };
        let points = run_sweep(&corpus, SweepKnob::NewtonIters, &[1, 2, 3, 4], &base).unwrap();
        assert_eq!(points.len(), 4);
        for w in points.windows(2) {
            assert!(
                w[1].mean_error <= w[0].mean_error,
                "iteration {} mean {} rose above iteration {} mean {}",
                w[1].level,
                w[1].mean_error,
                w[0].level,
                w[0].mean_error
            );
        }
        // Quadratic convergence is fast: four iterations reach the floor.
        assert!(points[3].mean_error < 1e-12);
    }

    #[test]
    fn lut_width_sweep_error_shrinks_with_width() {
        let corpus = small_gaussian(40, 16, 17);
        let base = SweepBase {
            softmax: SoftmaxConfig::default(),
            layernorm: LayerNormConfig::float_emulation(16),
        };
        let points =
            run_sweep(&corpus, SweepKnob::LutFracBits, &[8, 10, 12, 15], &base).unwrap();
        for w in points.windows(2) {
            assert!(
                w[1].mean_error <= w[0].mean_error,
                "width {} mean {} rose above width {} mean {}",
                w[1].level,
                w[1].mean_error,
                w[0].level,
                w[0].mean_error
            );
        }
    }

    #[test]
    fn residual_sweep_requantizes_the_corpus_per_level() {
        // Levels 4 and 8 imply different input formats (2 and 3 fraction
        // bits); the sweep must run both without shape or range errors.
        let corpus = small_gaussian(20, 8, 19);
        let base = SweepBase {
            softmax: SoftmaxConfig::default(),
            layernorm: LayerNormConfig::float_emulation(8),
        };
        let points = run_sweep(&corpus, SweepKnob::ResidualEntries, &[4, 8], &base).unwrap();
        assert_eq!(points.len(), 2);
        assert!(points.iter().all(|p| p.rows_evaluated == 20));
    }
}
