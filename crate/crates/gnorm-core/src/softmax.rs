//! Softmax datapath: two-table exponential plus scale-and-divide
//! normalization.
//!
//! The unit computes, for one row of logits `x`:
//!
//! 1. `Δ_i = max(x) - x_i`, so every exponent argument is non-negative and
//!    the largest element maps to exactly 1.0.
//! 2. `y_i ≈ e^(-Δ_i)` via two small tables. With the input carrying
//!    `log2(R)` fraction bits, the code `Δ` splits as `Δ = R*frac + rem`,
//!    and the real argument factors as
//!    `e^(-Δ/R) = e^(-frac) * e^(-rem/R)`:
//!    a coarse table indexed by `frac` times a residual table indexed by
//!    `rem`, one fixed-point multiply per element. Arguments past the end
//!    of the coarse table are clamped to zero — the true value there is
//!    below one table LSB anyway.
//! 3. `Z = Σ y_i`, then one shift-subtract division produces the scale
//!    factor `F = floor(2^(b+P) / Z)`, and each output is
//!    `Y_i = floor(y_i * F / 2^P)` — a probability in units of `2^-b`.
//!
//! Because the normalization happens in the integer domain, the output sum
//! `Σ Y_i` lands within a few codes of `2^b` by construction: writing
//! `δ_F < 1` for the scale-factor truncation and `δ_i < 1` for each output
//! truncation, `2^b - Σ Y_i = δ_F * Z / 2^P + Σ δ_i`, which is non-negative
//! and at most one code per nonzero term plus one more for the scale. No
//! downstream correction pass is needed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::fxp::{fxp_mul, quantize, shift_subtract_divide, FxpFormat, FxpValue, Rounding};
use crate::util::pow2;
use crate::Mode;

// --- Errors ----------------------------------------------------------------

/// Errors raised by softmax configuration and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SoftmaxError {
    /// A configuration whose fields are individually or jointly invalid.
    InvalidConfig(String),
    /// A row with no elements; softmax of nothing is undefined.
    EmptyRow,
    /// The accumulated denominator was zero. Unreachable through the engine:
    /// the maximum element always contributes the top table code.
    ZeroDenominator,
}

impl core::fmt::Display for SoftmaxError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SoftmaxError::InvalidConfig(why) => write!(f, "invalid softmax config: {why}"),
            SoftmaxError::EmptyRow => write!(f, "softmax of an empty row"),
            SoftmaxError::ZeroDenominator => write!(f, "softmax denominator accumulated to zero"),
        }
    }
}

impl core::error::Error for SoftmaxError {}

// --- Configuration ----------------------------------------------------------

/// Static parameters of the softmax unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftmaxConfig {
    /// Float emulation or exact integer datapath.
    pub mode: Mode,
    /// Radix `R` of the argument decomposition; must be a power of two and
    /// must equal `2^input_fmt.frac_bits` so that the code-domain split
    /// `Δ = R*frac + rem` is the real-domain split `Δ/R = frac + rem/R`.
    pub radix: u32,
    /// Number of coarse-table entries; arguments with `frac` at or past
    /// this index clamp to zero.
    pub coarse_entries: u32,
    /// Format of both table entry sets (unsigned, at least one integer bit
    /// so 1.0 is representable).
    pub lut_fmt: FxpFormat,
    /// Format of the input logits.
    pub input_fmt: FxpFormat,
    /// Output probability scale: probabilities are codes in units of
    /// `2^-out_bits`.
    pub out_bits: u32,
    /// Extra precision `P` carried by the scale factor
    /// `F = floor(2^(out_bits + P) / Z)`.
    pub div_precision: u32,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig {
            mode: Mode::BitAccurate,
            radix: 8,
            coarse_entries: 7,
            lut_fmt: FxpFormat::U16F15,
            input_fmt: FxpFormat::I8F3,
            out_bits: 15,
            div_precision: 16,
        }
    }
}

impl SoftmaxConfig {
    /// Checks every cross-field constraint the datapath relies on.
    pub fn validate(&self) -> Result<(), SoftmaxError> {
        if !self.radix.is_power_of_two() || self.radix < 2 {
            return Err(SoftmaxError::InvalidConfig(format!(
                "radix must be a power of two >= 2, got {}",
                self.radix
            )));
        }
        if self.input_fmt.frac_bits() != self.radix.ilog2() {
            return Err(SoftmaxError::InvalidConfig(format!(
                "input format {} must carry log2(radix) = {} fraction bits so the \
                 code split delta = radix*frac + rem matches the real split",
                self.input_fmt,
                self.radix.ilog2()
            )));
        }
        if self.coarse_entries == 0 {
            return Err(SoftmaxError::InvalidConfig("coarse table needs at least one entry".into()));
        }
        if self.lut_fmt.is_signed() || self.lut_fmt.word_bits() <= self.lut_fmt.frac_bits() {
            return Err(SoftmaxError::InvalidConfig(format!(
                "table format {} must be unsigned with an integer bit so 1.0 has a code",
                self.lut_fmt
            )));
        }
        if self.lut_fmt.frac_bits() == 0 {
            return Err(SoftmaxError::InvalidConfig(
                "table format needs at least one fraction bit".into(),
            ));
        }
        if self.out_bits == 0 || self.div_precision == 0 {
            return Err(SoftmaxError::InvalidConfig(
                "out_bits and div_precision must be nonzero".into(),
            ));
        }
        if self.out_bits + self.div_precision > 63 {
            return Err(SoftmaxError::InvalidConfig(format!(
                "out_bits + div_precision = {} exceeds the 63-bit divider width",
                self.out_bits + self.div_precision
            )));
        }
        Ok(())
    }
}

// --- Lookup tables -----------------------------------------------------------

/// Which of the two exponential tables an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutKind {
    /// Entries `e^-k` for integer `k` — selected by the upper bits of `Δ`.
    Coarse,
    /// Entries `e^(-r/R)` for `r` in `0..R` — selected by the low bits.
    Residual,
}

/// One table's codes plus enough metadata to emit a memory image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LutImage {
    /// Which table this is.
    pub kind: LutKind,
    /// Entry codes, strictly decreasing.
    pub entries: Vec<i64>,
    /// Format the codes are in.
    pub fmt: FxpFormat,
}

impl LutImage {
    /// One lowercase hex word per entry, zero-padded to the word width —
    /// the line format ROM initialization files use.
    pub fn hex_lines(&self) -> Vec<String> {
        let digits = (self.fmt.word_bits() as usize).div_ceil(4);
        self.entries.iter().map(|&c| format!("{c:0digits$x}")).collect()
    }
}

/// Builds both exponential tables for `cfg`.
///
/// Entry values are the mathematical constants `e^-k` and `e^(-r/R)`
/// rounded to nearest-even in the table format. The builder rejects widths
/// at which neighboring entries collide: strict decrease is what makes the
/// approximation order-preserving, so a table that loses it is a
/// configuration error, not a quieter approximation.
pub fn build_luts(cfg: &SoftmaxConfig) -> Result<(LutImage, LutImage), SoftmaxError> {
    cfg.validate()?;
    let coarse: Vec<i64> = (0..cfg.coarse_entries)
        .map(|k| quantize(libm::exp(-(k as f64)), cfg.lut_fmt, Rounding::NearestEven).code())
        .collect();
    let residual: Vec<i64> = (0..cfg.radix)
        .map(|r| {
            quantize(libm::exp(-(r as f64) / cfg.radix as f64), cfg.lut_fmt, Rounding::NearestEven)
                .code()
        })
        .collect();
    for (name, t) in [("coarse", &coarse), ("residual", &residual)] {
        if t.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SoftmaxError::InvalidConfig(format!(
                "{name} table entries are not strictly decreasing at {}",
                cfg.lut_fmt
            )));
        }
    }
    Ok((
        LutImage { kind: LutKind::Coarse, entries: coarse, fmt: cfg.lut_fmt },
        LutImage { kind: LutKind::Residual, entries: residual, fmt: cfg.lut_fmt },
    ))
}

// --- Row preprocessing --------------------------------------------------------

/// Subtracts every element from the row maximum: `Δ_i = max(x) - x_i`.
///
/// All distances are non-negative and the maximum maps to zero, which is
/// what lets the exponential stage work in `[0, ∞)` only and guarantees at
/// least one full-scale `y` in every row.
pub fn max_subtract(row: &[i64]) -> Result<Vec<u64>, SoftmaxError> {
    let max = *row.iter().max().ok_or(SoftmaxError::EmptyRow)?;
    Ok(row.iter().map(|&x| (max - x) as u64).collect())
}

/// Splits a distance code into `(frac, rem)` with `Δ = R*frac + rem`.
///
/// Pure wiring in hardware: `frac` is the code with its low `log2(R)` bits
/// dropped, `rem` is those bits.
pub fn decompose(delta: u64, radix: u32) -> (u64, u64) {
    debug_assert!(radix.is_power_of_two() && radix >= 2);
    let lg = radix.ilog2();
    (delta >> lg, delta & u64::from(radix - 1))
}

/// Computes the scale factor `F = floor(2^(out_bits + P) / Z)` with one
/// restoring division.
pub fn fxp_div_scale(z: u64, out_bits: u32, div_precision: u32) -> Result<u64, SoftmaxError> {
    if z == 0 {
        return Err(SoftmaxError::ZeroDenominator);
    }
    debug_assert!(out_bits + div_precision <= 63);
    let dmax = 1u64 << (out_bits + div_precision);
    let (q, _) = shift_subtract_divide(dmax, z).map_err(|_| SoftmaxError::ZeroDenominator)?;
    Ok(q)
}

// --- Engine -------------------------------------------------------------------

/// Result of evaluating one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxRowResult {
    /// Output probabilities in real units. In bit-accurate mode these are
    /// the output codes times `2^-out_bits`.
    pub probs: Vec<f64>,
    /// Raw output codes in units of `2^-out_bits`; `None` in float
    /// emulation, which has no code-domain output.
    pub prob_codes: Option<Vec<i64>>,
    /// Accumulated denominator `Z` in real units.
    pub denominator: f64,
    /// Applied scale factor in real units: `F / 2^P` in bit-accurate mode,
    /// `1 / Z` in float emulation.
    pub scale: f64,
    /// Normalization error of this row, `|1 - Σ probs|`.
    pub sum_error: f64,
    /// Whether any intermediate saturated. Always false for in-range
    /// inputs with the default configuration.
    pub saturated: bool,
}

/// The softmax unit: configuration plus its two burned-in tables.
#[derive(Debug, Clone)]
pub struct SoftmaxEngine {
    cfg: SoftmaxConfig,
    coarse: LutImage,
    residual: LutImage,
}

impl SoftmaxEngine {
    /// Validates the configuration and builds the tables.
    pub fn new(cfg: SoftmaxConfig) -> Result<Self, SoftmaxError> {
        let (coarse, residual) = build_luts(&cfg)?;
        Ok(SoftmaxEngine { cfg, coarse, residual })
    }

    /// The configuration this engine was built with.
    pub fn config(&self) -> &SoftmaxConfig {
        &self.cfg
    }

    /// The coarse and residual table images.
    pub fn luts(&self) -> (&LutImage, &LutImage) {
        (&self.coarse, &self.residual)
    }

    /// Table-based `e^-Δ` in the code domain: one fixed-point multiply, or
    /// zero when `Δ` falls past the coarse table.
    pub fn exp_approx_code(&self, delta: u64) -> i64 {
        let (frac, rem) = decompose(delta, self.cfg.radix);
        if frac >= u64::from(self.cfg.coarse_entries) {
            return 0;
        }
        let a = FxpValue::new(self.coarse.entries[frac as usize], self.cfg.lut_fmt)
            .expect("table codes fit the table format by construction");
        let b = FxpValue::new(self.residual.entries[rem as usize], self.cfg.lut_fmt)
            .expect("table codes fit the table format by construction");
        // Entries are at most 1.0, so the product is too: never saturates.
        fxp_mul(a, b, self.cfg.lut_fmt).code()
    }

    /// The same factorization over `f64`: `e^-frac * e^(-rem/R)`, with the
    /// same clamp to zero past the coarse table.
    pub fn exp_approx_real(&self, delta: u64) -> f64 {
        let (frac, rem) = decompose(delta, self.cfg.radix);
        if frac >= u64::from(self.cfg.coarse_entries) {
            return 0.0;
        }
        libm::exp(-(frac as f64)) * libm::exp(-(rem as f64) / self.cfg.radix as f64)
    }

    /// Runs one row of logit codes (in `input_fmt`) through the unit.
    pub fn eval_row(&self, row: &[i64]) -> Result<SoftmaxRowResult, SoftmaxError> {
        debug_assert!(
            row.iter().all(|&c| self.cfg.input_fmt.contains(c)),
            "logit codes must fit {}",
            self.cfg.input_fmt
        );
        match self.cfg.mode {
            Mode::BitAccurate => self.eval_row_bit(row),
            Mode::FloatEmulation => self.eval_row_float(row),
        }
    }

    fn eval_row_bit(&self, row: &[i64]) -> Result<SoftmaxRowResult, SoftmaxError> {
        let deltas = max_subtract(row)?;
        let y: Vec<i64> = deltas.iter().map(|&d| self.exp_approx_code(d)).collect();
        // The max element has delta zero and contributes the full-scale
        // table code, so Z >= 2^lut_frac > 0 always.
        let z: u64 = y.iter().map(|&v| v as u64).sum();
        let f = fxp_div_scale(z, self.cfg.out_bits, self.cfg.div_precision)?;
        let p = self.cfg.div_precision;
        let codes: Vec<i64> =
            y.iter().map(|&v| ((v as u128 * f as u128) >> p) as i64).collect();
        let out_scale = pow2(-(self.cfg.out_bits as i32));
        let probs: Vec<f64> = codes.iter().map(|&c| c as f64 * out_scale).collect();
        let sum: f64 = probs.iter().sum();
        Ok(SoftmaxRowResult {
            probs,
            prob_codes: Some(codes),
            denominator: z as f64 * self.cfg.lut_fmt.resolution(),
            scale: f as f64 * pow2(-(p as i32)),
            sum_error: (1.0 - sum).abs(),
            saturated: false,
        })
    }

    fn eval_row_float(&self, row: &[i64]) -> Result<SoftmaxRowResult, SoftmaxError> {
        let deltas = max_subtract(row)?;
        let y: Vec<f64> = deltas.iter().map(|&d| self.exp_approx_real(d)).collect();
        let z: f64 = y.iter().sum();
        debug_assert!(z >= 1.0, "max element contributes 1.0");
        let probs: Vec<f64> = y.iter().map(|&v| v / z).collect();
        let sum: f64 = probs.iter().sum();
        Ok(SoftmaxRowResult {
            probs,
            prob_codes: None,
            denominator: z,
            scale: 1.0 / z,
            sum_error: (1.0 - sum).abs(),
            saturated: false,
        })
    }
}

// --- References ---------------------------------------------------------------

/// Exact softmax over `f64`, with the standard max-subtraction for range
/// safety. The measurement baseline every approximation is scored against.
pub fn softmax_exact(row: &[f64]) -> Result<Vec<f64>, SoftmaxError> {
    if row.is_empty() {
        return Err(SoftmaxError::EmptyRow);
    }
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&x| libm::exp(x - max)).collect();
    let z: f64 = e.iter().sum();
    Ok(e.iter().map(|&v| v / z).collect())
}

/// Cycles to stream one row of `n` elements through the unit: one element
/// per cycle, with division overlapped behind the accumulation of the next
/// row, so the row cost is exactly `n`.
pub fn softmax_latency(n: usize) -> u64 {
    assert!(n >= 1, "softmax of an empty row has no latency");
    n as u64
}

// --- Tests ----------------------------------------------------------------
