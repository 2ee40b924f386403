//! Layernorm datapath: streaming moments and a Newton reciprocal square
//! root seeded by leading-one detection.
//!
//! For one row `x` of `C` elements the unit computes
//! `out_i = (x_i - mean) / sqrt(var)` (population variance), optionally
//! followed by a per-column affine `gamma * out + beta`. The interesting
//! hardware is the reciprocal square root: instead of rooting and dividing,
//! the unit iterates
//!
//! ```text
//! x_{k+1} = (x_k + 1 / (x_k * n)) / 2
//! ```
//!
//! which converges quadratically to `1/sqrt(n)` and needs only the divider
//! and multiplier already present. Two tricks keep the iteration count at
//! two in the integer datapath:
//!
//! - **Range reduction.** The variance is shifted by an even power of two
//!   into `[1, 4)` before iterating, and the result is shifted back by half
//!   that power afterwards — exact, because halving an even exponent stays
//!   an integer shift.
//! - **Leading-one seeding.** With `2^L <= n < 2^(L+1)`, the seed
//!   `x_0 = 2^(-floor((L+1)/2))` starts within 42% of the true root, so two
//!   quadratic steps land within ~1e-3 worst case and far closer for the
//!   variance values real workloads produce.
//!
//! The variance itself is formed from streamed moments as the exact
//! integer `(C * Σx² - (Σx)²) / C²`, one truncating divide at working
//! precision — never the float-style "mean of squares minus squared mean"
//! with two separate roundings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::fxp::{shift_subtract_divide, FxpFormat, FxpValue, Quantized};
use crate::util::{floor_log2, mean, pow2, population_std};
use crate::Mode;

// --- Errors ----------------------------------------------------------------

/// Errors raised by layernorm configuration and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerNormError {
    /// A configuration whose fields are individually or jointly invalid.
    InvalidConfig(String),
    /// A row whose length disagrees with the configured column count.
    ShapeMismatch {
        /// Configured column count.
        expected: usize,
        /// Length of the row actually provided.
        got: usize,
    },
    /// An operand outside a primitive's domain (non-positive reciprocal
    /// square root input, or an operand that underflows the iteration's
    /// precision).
    InvalidInput(String),
    /// A row the exact reference cannot normalize: fewer than two elements
    /// or zero variance.
    DegenerateRow,
}

impl core::fmt::Display for LayerNormError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LayerNormError::InvalidConfig(why) => write!(f, "invalid layernorm config: {why}"),
            LayerNormError::ShapeMismatch { expected, got } => {
                write!(f, "row has {got} elements but the engine is configured for {expected}")
            }
            LayerNormError::InvalidInput(why) => write!(f, "invalid operand: {why}"),
            LayerNormError::DegenerateRow => {
                write!(f, "row has fewer than two elements or zero variance")
            }
        }
    }
}

impl core::error::Error for LayerNormError {}

// --- Configuration ----------------------------------------------------------

/// How many Newton steps the reciprocal square root runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NewtonIterations {
    /// Exactly this many steps — the hardware schedule.
    Fixed(u32),
    /// Iterate until the step size falls below `tol`, up to `max_iters`
    /// steps. Only meaningful in float emulation, where "step size" is a
    /// real number.
    Converge {
        /// Stop once `|x_{k+1} - x_k| <= tol`.
        tol: f64,
        /// Hard cap on steps regardless of convergence.
        max_iters: u32,
    },
}

/// What to do when a row's variance is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonPolicy {
    /// Emit all zeros and skip the reciprocal square root entirely. No
    /// epsilon contaminates the non-degenerate path, which is what keeps
    /// the unit's variance guarantee sharp.
    ZeroOutput,
    /// Substitute one working-format LSB for the zero variance and proceed.
    AddOneUlp,
}

/// Optional per-column scale and shift applied after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    /// Per-column scale, length `cols`.
    pub gamma: Vec<f64>,
    /// Per-column shift, length `cols`.
    pub beta: Vec<f64>,
}

/// Static parameters of the layernorm unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormConfig {
    /// Float emulation or exact integer datapath.
    pub mode: Mode,
    /// Format of the input (and output) tensor elements.
    pub input_fmt: FxpFormat,
    /// Row length `C` the unit is built for.
    pub cols: usize,
    /// Internal format moments, variance, and the Newton iteration run at.
    pub working_fmt: FxpFormat,
    /// Newton schedule for the reciprocal square root.
    pub newton_iters: NewtonIterations,
    /// Zero-variance handling.
    pub epsilon_policy: EpsilonPolicy,
    /// Optional per-column affine; `None` means pure normalization.
    pub affine: Option<Affine>,
}

impl LayerNormConfig {
    /// Integer-datapath configuration: two Newton steps at 24 fraction
    /// bits, zero-output on degenerate rows, no affine.
    pub fn bit_accurate(cols: usize) -> Self {
        LayerNormConfig {
            mode: Mode::BitAccurate,
            input_fmt: FxpFormat::I8F3,
            cols,
            working_fmt: FxpFormat::U32F24,
            newton_iters: NewtonIterations::Fixed(2),
            epsilon_policy: EpsilonPolicy::ZeroOutput,
            affine: None,
        }
    }

    /// Float-emulation configuration: iterate to a 2^-30 step (or 30
    /// steps), zero-output on degenerate rows, no affine.
    pub fn float_emulation(cols: usize) -> Self {
        LayerNormConfig {
            mode: Mode::FloatEmulation,
            newton_iters: NewtonIterations::Converge {
                tol: 1.0 / (1u64 << 30) as f64,
                max_iters: 30,
            },
            ..LayerNormConfig::bit_accurate(cols)
        }
    }

    /// Checks every cross-field constraint the datapath relies on.
    pub fn validate(&self) -> Result<(), LayerNormError> {
        if self.cols < 2 {
            return Err(LayerNormError::InvalidConfig(format!(
                "cols = {} but variance needs at least two elements",
                self.cols
            )));
        }
        if self.cols > 1 << 16 {
            return Err(LayerNormError::InvalidConfig(format!(
                "cols = {} exceeds the 2^16 the moment accumulators are sized for",
                self.cols
            )));
        }
        let wf = self.working_fmt;
        if wf.is_signed() {
            return Err(LayerNormError::InvalidConfig(
                "working format must be unsigned; variance is non-negative".into(),
            ));
        }
        if wf.frac_bits() > 31 {
            return Err(LayerNormError::InvalidConfig(
                "working format is limited to 31 fraction bits so 2^(2*frac) fits the divider"
                    .into(),
            ));
        }
        if wf.frac_bits() < 2 * self.input_fmt.frac_bits() {
            return Err(LayerNormError::InvalidConfig(format!(
                "working format {} cannot hold the variance of {} inputs without losing \
                 bits before the divide (needs at least {} fraction bits)",
                wf,
                self.input_fmt,
                2 * self.input_fmt.frac_bits()
            )));
        }
        let span = self.input_fmt.max_real() - self.input_fmt.min_real();
        if span * span / 4.0 > wf.max_real() {
            return Err(LayerNormError::InvalidConfig(format!(
                "working format {} cannot represent the worst-case variance {} of {} inputs",
                wf,
                span * span / 4.0,
                self.input_fmt
            )));
        }
        // The variance numerator, shifted to working precision, must fit
        // the 64-bit divider: it is bounded by cols^2 * 2^word_bits.
        let cols_bits = usize::BITS - (self.cols - 1).leading_zeros();
        if 2 * cols_bits + wf.word_bits() > 64 {
            return Err(LayerNormError::InvalidConfig(format!(
                "cols = {} at working format {} overflows the 64-bit variance divide",
                self.cols, wf
            )));
        }
        if self.mode == Mode::BitAccurate {
            match self.newton_iters {
                NewtonIterations::Fixed(k) if k >= 1 => {}
                NewtonIterations::Fixed(_) => {
                    return Err(LayerNormError::InvalidConfig(
                        "bit-accurate mode needs at least one Newton step".into(),
                    ));
                }
                NewtonIterations::Converge { .. } => {
                    return Err(LayerNormError::InvalidConfig(
                        "bit-accurate mode runs a fixed Newton schedule; convergence-driven \
                         iteration is a float-emulation notion"
                            .into(),
                    ));
                }
            }
        }
        if let Some(affine) = &self.affine {
            if affine.gamma.len() != self.cols || affine.beta.len() != self.cols {
                return Err(LayerNormError::InvalidConfig(format!(
                    "affine vectors must have length cols = {}; got gamma {} beta {}",
                    self.cols,
                    affine.gamma.len(),
                    affine.beta.len()
                )));
            }
            if affine.gamma.iter().chain(&affine.beta).any(|v| !v.is_finite()) {
                return Err(LayerNormError::InvalidConfig(
                    "affine parameters must be finite".into(),
                ));
            }
        }
        Ok(())
    }
}

// --- Moments -----------------------------------------------------------------

/// Streamed first and second moments of one row, in the code domain.
///
/// Accumulators are wide enough that no supported format and column count
/// can overflow them; the sizing constraints live in
/// [`LayerNormConfig::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MomentAccumulator {
    /// Σ code.
    pub sum: i128,
    /// Σ code², exact.
    pub sum_sq: u128,
    /// Number of codes accumulated.
    pub count: usize,
}

impl MomentAccumulator {
    /// Folds one code into the moments.
    pub fn push(&mut self, code: i64) {
        self.sum += i128::from(code);
        self.sum_sq += (i128::from(code) * i128::from(code)) as u128;
        self.count += 1;
    }
}

/// Accumulates both moments of a row, checking its length first.
pub fn accumulate_moments(
    row: &[i64],
    expected_cols: usize,
) -> Result<MomentAccumulator, LayerNormError> {
    if row.len() != expected_cols {
        return Err(LayerNormError::ShapeMismatch { expected: expected_cols, got: row.len() });
    }
    let mut acc = MomentAccumulator::default();
    for &c in row {
        acc.push(c);
    }
    Ok(acc)
}

/// Real-domain `(mean, variance)` from accumulated moments.
///
/// Both come from exact integer arithmetic with a single rounding into
/// `f64`: the mean is `Σc / (count * 2^f)` and the variance is
/// `(count * Σc² - (Σc)²) / (count² * 2^(2f))`. The integer numerator is
/// non-negative by construction, so the variance can never come out
/// negative the way the cancelling float form can.
pub fn variance(acc: &MomentAccumulator, fmt: FxpFormat) -> (f64, f64) {
    assert!(acc.count > 0, "variance of zero samples");
    let n = acc.count as i128;
    let num = n * acc.sum_sq as i128 - acc.sum * acc.sum;
    debug_assert!(num >= 0, "integer variance numerator is non-negative by Cauchy-Schwarz");
    let f = fmt.frac_bits() as i32;
    let mean = acc.sum as f64 / (acc.count as f64 * pow2(f));
    let var = num as f64 / ((acc.count * acc.count) as f64 * pow2(2 * f));
    (mean, var)
}

// --- Reciprocal square root ----------------------------------------------------

/// Seed exponent for `1/sqrt(n)` from the leading-one position: with
/// `2^l <= n < 2^(l+1)`, the seed `2^(-floor((l+1)/2))` is within a factor
/// `sqrt(2)` of the root, i.e. at most ~42% relative error.
fn seed_exponent(l: i32) -> i32 {
    -(l + 1).div_euclid(2)
}

/// Leading-one seed for the Newton iteration, in the operand's own format.
///
/// Returns the power of two `2^(-floor((l+1)/2))` quantized into
/// `n.format()`; the saturation flag fires when that power is not
/// representable (an operand so extreme the engine would have
/// range-reduced it first).
pub fn lod_initial_guess(n: FxpValue) -> Result<Quantized, LayerNormError> {
    if n.code() <= 0 {
        return Err(LayerNormError::InvalidInput(format!(
            "reciprocal square root needs a positive operand, got code {}",
            n.code()
        )));
    }
    let fmt = n.format();
    let l = (n.code() as u64).ilog2() as i32 - fmt.frac_bits() as i32;
    let exp = fmt.frac_bits() as i32 + seed_exponent(l);
    let (code, saturated) = if exp < 0 {
        (1, true) // seed below one LSB: pin to the smallest nonzero code
    } else if exp as u32 >= 63 || !fmt.contains(1i64 << exp) {
        (fmt.max_code(), true)
    } else {
        (1i64 << exp, false)
    };
    Ok(Quantized { value: FxpValue::new(code, fmt).expect("seed code fits by construction"), saturated })
}

/// One Newton step toward `1/sqrt(n)`: `(x + 1/(x*n)) / 2`.
pub fn newton_rsqrt_step(x: f64, n: f64) -> f64 {
    0.5 * (x + 1.0 / (x * n))
}

/// Newton reciprocal square root over `f64`, seeded by leading-one detect.
///
/// Returns the estimate and the number of steps actually taken. With
/// [`NewtonIterations::Converge`] the iteration stops at the first step
/// smaller than `tol`; the cap bounds the worst case.
pub fn newton_rsqrt(n: f64, iters: NewtonIterations) -> Result<(f64, u32), LayerNormError> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(LayerNormError::InvalidInput(format!(
            "reciprocal square root needs a positive finite operand, got {n}"
        )));
    }
    let mut x = pow2(seed_exponent(floor_log2(n)));
    match iters {
        NewtonIterations::Fixed(k) => {
            for _ in 0..k {
                x = newton_rsqrt_step(x, n);
            }
            Ok((x, k))
        }
        NewtonIterations::Converge { tol, max_iters } => {
            let mut taken = 0;
            while taken < max_iters {
                let next = newton_rsqrt_step(x, n);
                taken += 1;
                let done = (next - x).abs() <= tol;
                x = next;
                if done {
                    break;
                }
            }
            Ok((x, taken))
        }
    }
}

/// Newton reciprocal square root in the code domain at `frac_bits`
/// fraction bits, truncating exactly where the datapath truncates.
///
/// Each step computes `d = (x * n) >> frac`, divides `2^(2*frac)` by `d`
/// with the restoring divider, and averages with a right shift. The caller
/// is expected to have range-reduced `n` near 1.0; operands so small that
/// `x * n` underflows to zero are rejected rather than silently mis-iterated.
pub fn newton_rsqrt_codes(
    n_code: u64,
    frac_bits: u32,
    iters: u32,
) -> Result<u64, LayerNormError> {
    if n_code == 0 {
        return Err(LayerNormError::InvalidInput(
            "reciprocal square root needs a positive operand, got code 0".into(),
        ));
    }
    debug_assert!(frac_bits <= 31, "2^(2*frac) must fit the 64-bit divider");
    let l = n_code.ilog2() as i32 - frac_bits as i32;
    let exp = frac_bits as i32 + seed_exponent(l);
    if !(0..=62).contains(&exp) {
        return Err(LayerNormError::InvalidInput(format!(
            "operand 2^{l} is outside this precision's seed range; range-reduce it first"
        )));
    }
    let mut x = 1u64 << exp;
    for _ in 0..iters {
        let d = (x as u128 * n_code as u128) >> frac_bits;
        if d == 0 {
            return Err(LayerNormError::InvalidInput(
                "operand underflows the iteration precision; range-reduce it first".into(),
            ));
        }
        let (r, _) = shift_subtract_divide(1u64 << (2 * frac_bits), d as u64)
            .expect("divisor is nonzero");
        x = (x + r) >> 1;
    }
    Ok(x)
}

// --- Engine --------------------------------------------------------------------

/// Result of evaluating one row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormRowResult {
    /// Output values in real units. In bit-accurate mode these are the
    /// output codes times the input format's resolution.
    pub out: Vec<f64>,
    /// Raw output codes in the input format; `None` in float emulation.
    pub out_codes: Option<Vec<i64>>,
    /// Row mean the datapath used, in real units.
    pub mean: f64,
    /// Row (population) variance the datapath used, in real units.
    pub variance: f64,
    /// Reciprocal square root estimate applied, in real units.
    pub rsqrt: f64,
    /// Normalization error `|1 - σ|`, where `σ` is the population standard
    /// deviation of the normalized values at full internal precision —
    /// before the optional affine and before requantization to the output
    /// format, so the metric isolates the normalizer itself.
    pub sigma_error: f64,
    /// Whether any output saturated the output format.
    pub saturated: bool,
}

/// The layernorm unit.
#[derive(Debug, Clone)]
pub struct LayerNormEngine {
    cfg: LayerNormConfig,
    /// Affine parameters quantized at working precision for the integer
    /// path (nearest-even, the same rule table constants use).
    affine_codes: Option<(Vec<i64>, Vec<i64>)>,
}

impl LayerNormEngine {
    /// Validates the configuration and precomputes affine codes.
    pub fn new(cfg: LayerNormConfig) -> Result<Self, LayerNormError> {
        cfg.validate()?;
        let affine_codes = cfg.affine.as_ref().map(|a| {
            let wf = cfg.working_fmt.frac_bits() as i32;
            let q = |v: f64| crate::util::round_half_even(v * pow2(wf)) as i64;
            (a.gamma.iter().map(|&g| q(g)).collect(), a.beta.iter().map(|&b| q(b)).collect())
        });
        Ok(LayerNormEngine { cfg, affine_codes })
    }

    /// The configuration this engine was built with.
    pub fn config(&self) -> &LayerNormConfig {
        &self.cfg
    }

    /// Runs one row of codes (in `input_fmt`) through the unit.
    pub fn eval_row(&self, row: &[i64]) -> Result<LayerNormRowResult, LayerNormError> {
        if row.len() != self.cfg.cols {
            return Err(LayerNormError::ShapeMismatch {
                expected: self.cfg.cols,
                got: row.len(),
            });
        }
        debug_assert!(
            row.iter().all(|&c| self.cfg.input_fmt.contains(c)),
            "input codes must fit {}",
            self.cfg.input_fmt
        );
        match self.cfg.mode {
            Mode::BitAccurate => self.eval_row_bit(row),
            Mode::FloatEmulation => self.eval_row_float(row),
        }
    }

    fn eval_row_bit(&self, row: &[i64]) -> Result<LayerNormRowResult, LayerNormError> {
        let cfg = &self.cfg;
        let f = cfg.input_fmt.frac_bits() as u32;
        let wf = cfg.working_fmt.frac_bits() as u32;
        let acc = accumulate_moments(row, cfg.cols)?;
        let c = cfg.cols as i128;

        // Mean at working precision: (Σc << (wf - f)) / C, truncating
        // toward zero like the sign-magnitude divider does.
        let mean_q = ((acc.sum << (wf - f)) / c) as i64;

        // Variance from the exact integer numerator C*Σc² - (Σc)², shifted
        // to working precision and divided by C² in ONE truncating divide,
        // so the result is within one working-format LSB of exact.
        let num = c * acc.sum_sq as i128 - acc.sum * acc.sum;
        debug_assert!(num >= 0);
        let shifted = (num as u128) << (wf - 2 * f);
        debug_assert!(shifted <= u64::MAX as u128, "sizing enforced by validate()");
        let (mut var_q, _) =
            shift_subtract_divide(shifted as u64, (cfg.cols * cfg.cols) as u64)
                .expect("cols >= 2");

        let mean_real = mean_q as f64 * pow2(-(wf as i32));

        if var_q == 0 {
            match cfg.epsilon_policy {
                EpsilonPolicy::ZeroOutput => {
                    // Degenerate row: emit zeros, skip the root entirely.
                    return Ok(LayerNormRowResult {
                        out: alloc::vec![0.0; cfg.cols],
                        out_codes: Some(alloc::vec![0; cfg.cols]),
                        mean: mean_real,
                        variance: 0.0,
                        rsqrt: 0.0,
                        sigma_error: 1.0,
                        saturated: false,
                    });
                }
                EpsilonPolicy::AddOneUlp => var_q = 1,
            }
        }
        let var_real = var_q as f64 * pow2(-(wf as i32));

        // Range-reduce by an even power of two so the operand sits in
        // [1, 4) at working precision; shift back by half afterwards.
        let l = var_q.ilog2() as i32 - wf as i32;
        let e = if l % 2 == 0 { l } else { l - 1 };
        let reduced = if e >= 0 { var_q >> e } else { var_q << (-e) };
        let iters = match cfg.newton_iters {
            NewtonIterations::Fixed(k) => k,
            NewtonIterations::Converge { .. } => unreachable!("rejected by validate()"),
        };
        let x = newton_rsqrt_codes(reduced, wf, iters)?;
        let half = e / 2;
        let rsqrt_wide = if half >= 0 { x >> half } else { x << (-half) };

        // Normalize, then (optionally) scale-shift, then requantize.
        let out_fmt = cfg.input_fmt;
        let mut t_reals = Vec::with_capacity(cfg.cols);
        let mut out_codes = Vec::with_capacity(cfg.cols);
        let mut saturated = false;
        for (i, &code) in row.iter().enumerate() {
            let centered = ((code as i128) << (wf - f)) - mean_q as i128;
            let t = centered * rsqrt_wide as i128 / (1i128 << wf);
            t_reals.push(t as f64 * pow2(-(wf as i32)));
            let t = match &self.affine_codes {
                Some((gamma, beta)) => {
                    t * gamma[i] as i128 / (1i128 << wf) + beta[i] as i128
                }
                None => t,
            };
            let q = clamp_to(t / (1i128 << (wf - f)), out_fmt);
            saturated |= q.saturated;
            out_codes.push(q.code());
        }
        let out: Vec<f64> =
            out_codes.iter().map(|&c| c as f64 * out_fmt.resolution()).collect();
        let sigma_error = (1.0 - population_std(&t_reals)).abs();
        Ok(LayerNormRowResult {
            out,
            out_codes: Some(out_codes),
            mean: mean_real,
            variance: var_real,
            rsqrt: rsqrt_wide as f64 * pow2(-(wf as i32)),
            sigma_error,
            saturated,
        })
    }

    fn eval_row_float(&self, row: &[i64]) -> Result<LayerNormRowResult, LayerNormError> {
        let cfg = &self.cfg;
        let acc = accumulate_moments(row, cfg.cols)?;
        let (mu, mut var) = variance(&acc, cfg.input_fmt);
        let reals: Vec<f64> =
            row.iter().map(|&c| c as f64 * cfg.input_fmt.resolution()).collect();

        if var == 0.0 {
            match cfg.epsilon_policy {
                EpsilonPolicy::ZeroOutput => {
                    return Ok(LayerNormRowResult {
                        out: alloc::vec![0.0; cfg.cols],
                        out_codes: None,
                        mean: mu,
                        variance: 0.0,
                        rsqrt: 0.0,
                        sigma_error: 1.0,
                        saturated: false,
                    });
                }
                EpsilonPolicy::AddOneUlp => var = cfg.working_fmt.resolution(),
            }
        }

        let (r, _) = newton_rsqrt(var, cfg.newton_iters)?;
        let normalized: Vec<f64> = reals.iter().map(|&x| (x - mu) * r).collect();
        let sigma_error = (1.0 - population_std(&normalized)).abs();
        let out = match &cfg.affine {
            Some(a) => normalized
                .iter()
                .zip(a.gamma.iter().zip(&a.beta))
                .map(|(&v, (&g, &b))| v * g + b)
                .collect(),
            None => normalized,
        };
        Ok(LayerNormRowResult {
            out,
            out_codes: None,
            mean: mu,
            variance: var,
            rsqrt: r,
            sigma_error,
            saturated: false,
        })
    }
}

/// Clamps a wide code into `fmt` with a saturation flag.
fn clamp_to(code: i128, fmt: FxpFormat) -> Quantized {
    let lo = fmt.min_code() as i128;
    let hi = fmt.max_code() as i128;
    let (c, saturated) =
        if code < lo { (fmt.min_code(), true) } else if code > hi { (fmt.max_code(), true) } else { (code as i64, false) };
    Quantized { value: FxpValue::new(c, fmt).expect("clamped into range"), saturated }
}

// --- References -----------------------------------------------------------------

/// Exact layernorm over `f64`: population statistics, no epsilon.
///
/// Rows the operation is mathematically undefined on (fewer than two
/// elements, zero variance) are an error — the reference does not invent a
/// convention for them.
pub fn layernorm_exact(row: &[f64], affine: Option<&Affine>) -> Result<Vec<f64>, LayerNormError> {
    if row.len() < 2 {
        return Err(LayerNormError::DegenerateRow);
    }
    let mu = mean(row);
    let sd = population_std(row);
    if sd == 0.0 {
        return Err(LayerNormError::DegenerateRow);
    }
    let normalized = row.iter().map(|&x| (x - mu) / sd);
    Ok(match affine {
        Some(a) => {
            assert_eq!(a.gamma.len(), row.len(), "gamma length must match the row");
            assert_eq!(a.beta.len(), row.len(), "beta length must match the row");
            normalized.zip(a.gamma.iter().zip(&a.beta)).map(|(v, (&g, &b))| v * g + b).collect()
        }
        None => normalized.collect(),
    })
}

/// Cycles to stream one row of `n` elements through the unit: one element
/// per cycle plus one trailing cycle for the root-and-scale bubble that
/// cannot overlap the next row.
pub fn layernorm_latency(n: usize) -> u64 {
    assert!(n >= 2, "layernorm needs at least two elements");
    n as u64 + 1
}

// --- Tests -----------------------------------------------------------------
