//! Fixed-point formats, quantization, and the shared integer primitives.
//!
//! Every datapath in this crate is assembled from the handful of operations
//! defined here: quantize a real into an integer code, multiply two codes
//! with truncation, divide two codes with a restoring shift-subtract loop,
//! and locate the leading one of a code. Each primitive is written to be
//! bit-identical to a straightforward hardware implementation, so a test
//! that passes against this module is a statement about the RTL, not about
//! `f64` luck.
//!
//! Conventions used throughout:
//!
//! - A code `c` in format `(w, f)` represents the real value `c / 2^f`.
//! - Signed formats are two's complement; unsigned formats are plain binary.
//! - Out-of-range results saturate to the format edge and raise a sticky
//!   flag. Nothing in this crate ever wraps.
//! - Arithmetic truncates toward zero. Round-to-nearest-even exists only
//!   for quantizing real constants (inputs, table entries) into codes.

use alloc::vec::Vec;

use crate::util::{pow2, round_half_even};

// --- Errors ----------------------------------------------------------------

/// Errors raised by fixed-point construction and primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FxpError {
    /// Word/fraction widths that do not describe a representable format.
    InvalidFormat {
        /// Requested word width in bits.
        word_bits: u32,
        /// Requested fraction width in bits.
        frac_bits: u32,
    },
    /// Division with a zero denominator.
    DivideByZero,
    /// Leading-one detection on zero, which has no leading one.
    LodOfZero,
    /// A raw code that does not fit the format it was paired with.
    CodeOutOfRange {
        /// The offending code.
        code: i64,
        /// Word width of the target format.
        word_bits: u32,
        /// Whether the target format is signed.
        signed: bool,
    },
    /// A buffer whose length disagrees with the declared shape.
    ShapeMismatch {
        /// Number of elements the shape calls for.
        expected: usize,
        /// Number of elements actually provided.
        got: usize,
    },
}

impl core::fmt::Display for FxpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            FxpError::InvalidFormat { word_bits, frac_bits } => write!(
                f,
                "invalid fixed-point format: word_bits={word_bits} frac_bits={frac_bits} \
                 (need 4 <= word_bits <= 63 and frac_bits <= word_bits)"
            ),
            FxpError::DivideByZero => write!(f, "shift-subtract divide by zero"),
            FxpError::LodOfZero => write!(f, "leading-one detect of zero"),
            FxpError::CodeOutOfRange { code, word_bits, signed } => write!(
                f,
                "code {code} does not fit a {}{word_bits}-bit word",
                if signed { "signed " } else { "unsigned " }
            ),
            FxpError::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected} elements, got {got}")
            }
        }
    }
}

impl core::error::Error for FxpError {}

// --- Formats ---------------------------------------------------------------

/// A fixed-point format: word width, fraction width, signedness.
///
/// `word_bits` counts every bit in the stored code, sign included. Codes are
/// carried in `i64`, so word widths from 4 through 63 bits are supported;
/// intermediate products are widened to `i128` internally, which keeps even
/// the widest format pair exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpFormat {
    word_bits: u32,
    frac_bits: u32,
    signed: bool,
}

impl FxpFormat {
    /// Signed 8-bit word with 3 fraction bits: the engines' tensor I/O
    /// format, covering [-16, 15.875] in steps of 1/8.
    pub const I8F3: FxpFormat = FxpFormat { word_bits: 8, frac_bits: 3, signed: true };

    /// Unsigned 16-bit word with 15 fraction bits: one integer bit plus
    /// fifteen fraction bits, covering [0, 2) — the exponential-table format.
    pub const U16F15: FxpFormat = FxpFormat { word_bits: 16, frac_bits: 15, signed: false };

    /// Unsigned 32-bit word with 24 fraction bits: the layernorm working
    /// format, covering [0, 256) with 2^-24 resolution.
    pub const U32F24: FxpFormat = FxpFormat { word_bits: 32, frac_bits: 24, signed: false };

    /// Builds a format after validating the widths.
    pub fn new(word_bits: u32, frac_bits: u32, signed: bool) -> Result<Self, FxpError> {
        if !(4..=63).contains(&word_bits) || frac_bits > word_bits {
            return Err(FxpError::InvalidFormat { word_bits, frac_bits });
        }
        Ok(FxpFormat { word_bits, frac_bits, signed })
    }

    /// Word width in bits, sign included.
    pub fn word_bits(self) -> u32 {
        self.word_bits
    }

    /// Fraction width in bits.
    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    /// Whether codes are two's-complement signed.
    pub fn is_signed(self) -> bool {
        self.signed
    }

    /// Smallest representable code.
    pub fn min_code(self) -> i64 {
        if self.signed {
            -(1i64 << (self.word_bits - 1))
        } else {
            0
        }
    }

    /// Largest representable code.
    pub fn max_code(self) -> i64 {
        if self.signed {
            (1i64 << (self.word_bits - 1)) - 1
        } else {
            ((1u64 << self.word_bits) - 1) as i64
        }
    }

    /// Whether `code` fits this format.
    pub fn contains(self, code: i64) -> bool {
        (self.min_code()..=self.max_code()).contains(&code)
    }

    /// Value of one least-significant bit, `2^-frac_bits`.
    pub fn resolution(self) -> f64 {
        pow2(-(self.frac_bits as i32))
    }

    /// Smallest representable real value.
    pub fn min_real(self) -> f64 {
        self.min_code() as f64 * self.resolution()
    }

    /// Largest representable real value.
    pub fn max_real(self) -> f64 {
        self.max_code() as f64 * self.resolution()
    }

    /// Bytes needed to store one code in packed little-endian form.
    pub fn code_bytes(self) -> usize {
        self.word_bits.div_ceil(8) as usize
    }
}

impl core::fmt::Display for FxpFormat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let tag = if self.signed { 'i' } else { 'u' };
        write!(f, "{tag}{}f{}", self.word_bits, self.frac_bits)
    }
}

// --- Values ----------------------------------------------------------------

/// One fixed-point value: a code plus the format that gives it meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxpValue {
    code: i64,
    format: FxpFormat,
}

impl FxpValue {
    /// Pairs a code with a format, rejecting codes outside the format.
    pub fn new(code: i64, format: FxpFormat) -> Result<Self, FxpError> {
        if !format.contains(code) {
            return Err(FxpError::CodeOutOfRange {
                code,
                word_bits: format.word_bits,
                signed: format.signed,
            });
        }
        Ok(FxpValue { code, format })
    }

    /// The stored integer code.
    pub fn code(self) -> i64 {
        self.code
    }

    /// The format the code is interpreted in.
    pub fn format(self) -> FxpFormat {
        self.format
    }

    /// The represented real value, `code / 2^frac_bits`.
    pub fn to_real(self) -> f64 {
        dequantize(self)
    }
}

/// Result of an operation that may have saturated.
///
/// The `saturated` flag is sticky in the sense that every routine which
/// combines several `Quantized` results ORs the flags together; a clean
/// pipeline run is one that ends with the flag still false.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantized {
    /// The (possibly clamped) value.
    pub value: FxpValue,
    /// True if the exact result fell outside the format and was clamped.
    pub saturated: bool,
}

impl Quantized {
    /// Shorthand for the stored code.
    pub fn code(self) -> i64 {
        self.value.code
    }

    /// Shorthand for the represented real value.
    pub fn to_real(self) -> f64 {
        self.value.to_real()
    }
}

/// Clamps a wide integer result into `fmt`, flagging saturation.
fn clamp_code(exact: i128, fmt: FxpFormat) -> Quantized {
    let lo = fmt.min_code() as i128;
    let hi = fmt.max_code() as i128;
    let (code, saturated) = if exact < lo {
        (fmt.min_code(), true)
    } else if exact > hi {
        (fmt.max_code(), true)
    } else {
        (exact as i64, false)
    };
    Quantized { value: FxpValue { code, format: fmt }, saturated }
}

// --- Quantization ----------------------------------------------------------

/// Rounding applied when a real value is scaled into code units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Round to nearest, ties to even. Used for constants baked into the
    /// design: table entries and quantized input tensors.
    NearestEven,
    /// Truncate toward zero. This is what the arithmetic inside the
    /// datapaths does, so it is also offered at the quantization boundary.
    Truncate,
}

/// Quantizes a real value into `fmt`, saturating at the format edges.
///
/// The scaled value `x * 2^frac_bits` is rounded per `rounding` and then
/// clamped into the code range; `saturated` reports whether clamping moved
/// it. `x` must not be NaN — there is no code for "not a number" in any
/// hardware format, so that is treated as a caller bug rather than an error
/// value.
pub fn quantize(x: f64, fmt: FxpFormat, rounding: Rounding) -> Quantized {
    assert!(!x.is_nan(), "cannot quantize NaN");
    let scaled = x * pow2(fmt.frac_bits as i32);
    let rounded = match rounding {
        Rounding::NearestEven => round_half_even(scaled),
        Rounding::Truncate => libm::trunc(scaled),
    };
    // 2^63 as f64 is exact; anything at or beyond it cannot fit an i64 code
    // (the widest format stops at 63 bits), so clamp before the cast.
    const I64_EDGE: f64 = 9_223_372_036_854_775_808.0;
    if rounded >= I64_EDGE {
        return Quantized { value: FxpValue { code: fmt.max_code(), format: fmt }, saturated: true };
    }
    if rounded < -I64_EDGE {
        return Quantized { value: FxpValue { code: fmt.min_code(), format: fmt }, saturated: true };
    }
    clamp_code(rounded as i128, fmt)
}

/// Recovers the real value of a code: `code / 2^frac_bits`.
///
/// Exact whenever `|code| < 2^53`, which covers every format narrower than
/// 54 bits; wider codes round to the nearest `f64` once.
pub fn dequantize(v: FxpValue) -> f64 {
    v.code as f64 * pow2(-(v.format.frac_bits as i32))
}

// --- Primitives ------------------------------------------------------------

/// Fixed-point multiply: full-width product, then truncate into `out`.
///
/// The product is formed exactly (codes are at most 63 bits, so `i128`
/// holds it), carries `a.frac + b.frac` fraction bits, and is aligned to
/// `out.frac_bits` by dropping low bits toward zero — the same thing a
/// datapath does when it taps the upper slice of a multiplier output.
/// Results outside `out` saturate and set the flag.
pub fn fxp_mul(a: FxpValue, b: FxpValue, out: FxpFormat) -> Quantized {
    let prod = i128::from(a.code) * i128::from(b.code);
    let shift =
        a.format.frac_bits as i32 + b.format.frac_bits as i32 - out.frac_bits as i32;
    let aligned = if shift >= 0 {
        // Integer division truncates toward zero, matching the hardware's
        // drop-low-bits-of-the-magnitude behavior.
        prod / (1i128 << shift)
    } else {
        match prod.checked_mul(1i128 << (-shift)) {
            Some(p) => p,
            None => {
                // Left-aligning overflowed 128 bits; the true value is far
                // outside any representable format, so clamp by sign.
                let code = if prod < 0 { out.min_code() } else { out.max_code() };
                return Quantized { value: FxpValue { code, format: out }, saturated: true };
            }
        }
    };
    clamp_code(aligned, out)
}

/// Restoring shift-subtract division on unsigned codes.
///
/// Walks the numerator MSB-first, shifting one bit at a time into a partial
/// remainder and subtracting the denominator whenever it fits — exactly the
/// loop a bit-serial divider array runs. Returns `(quotient, remainder)`
/// with `quotient = floor(numerator / denominator)` and
/// `numerator = quotient * denominator + remainder`, `remainder < denominator`.
pub fn shift_subtract_divide(numerator: u64, denominator: u64) -> Result<(u64, u64), FxpError> {
    if denominator == 0 {
        return Err(FxpError::DivideByZero);
    }
    let den = denominator as u128;
    let mut rem: u128 = 0;
    let mut quot: u64 = 0;
    for i in (0..u64::BITS).rev() {
        rem = (rem << 1) | ((numerator >> i) & 1) as u128;
        quot <<= 1;
        if rem >= den {
            rem -= den;
            quot |= 1;
        }
    }
    Ok((quot, rem as u64))
}

/// Leading-one detect: the position `L` of the most significant set bit,
/// so that `2^L <= n < 2^(L+1)`.
pub fn leading_one_detect(n: u64) -> Result<u32, FxpError> {
    if n == 0 {
        return Err(FxpError::LodOfZero);
    }
    Ok(n.ilog2())
}

// --- Tensors ---------------------------------------------------------------

/// A dense row-major matrix of codes sharing one format.
///
/// This is the unit of work both engines consume: each row is one softmax
/// or layernorm invocation. All codes are validated against the format at
/// construction, so downstream code can treat every element as in-range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTensor {
    rows: usize,
    cols: usize,
    format: FxpFormat,
    codes: Vec<i64>,
}

impl QuantTensor {
    /// Wraps pre-existing codes, validating shape and range.
    pub fn from_codes(
        rows: usize,
        cols: usize,
        format: FxpFormat,
        codes: Vec<i64>,
    ) -> Result<Self, FxpError> {
        let expected = rows
            .checked_mul(cols)
            .ok_or(FxpError::ShapeMismatch { expected: usize::MAX, got: codes.len() })?;
        if codes.len() != expected {
            return Err(FxpError::ShapeMismatch { expected, got: codes.len() });
        }
        if let Some(&bad) = codes.iter().find(|&&c| !format.contains(c)) {
            return Err(FxpError::CodeOutOfRange {
                code: bad,
                word_bits: format.word_bits,
                signed: format.signed,
            });
        }
        Ok(QuantTensor { rows, cols, format, codes })
    }

    /// Quantizes a real buffer into a tensor; the flag reports whether any
    /// element saturated.
    pub fn from_reals(
        rows: usize,
        cols: usize,
        format: FxpFormat,
        data: &[f64],
        rounding: Rounding,
    ) -> Result<(Self, bool), FxpError> {
        let expected = rows
            .checked_mul(cols)
            .ok_or(FxpError::ShapeMismatch { expected: usize::MAX, got: data.len() })?;
        if data.len() != expected {
            return Err(FxpError::ShapeMismatch { expected, got: data.len() });
        }
        let mut saturated = false;
        let codes = data
            .iter()
            .map(|&x| {
                let q = quantize(x, format, rounding);
                saturated |= q.saturated;
                q.code()
            })
            .collect();
        Ok((QuantTensor { rows, cols, format, codes }, saturated))
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shared element format.
    pub fn format(&self) -> FxpFormat {
        self.format
    }

    /// Flat row-major code storage.
    pub fn codes(&self) -> &[i64] {
        &self.codes
    }

    /// Borrow of row `r`'s codes. Panics if `r` is out of bounds, like any
    /// slice index.
    pub fn row(&self, r: usize) -> &[i64] {
        &self.codes[r * self.cols..(r + 1) * self.cols]
    }

    /// Row `r` dequantized into reals.
    pub fn dequantize_row(&self, r: usize) -> Vec<f64> {
        self.row(r)
            .iter()
            .map(|&c| c as f64 * self.format.resolution())
            .collect()
    }
}

// --- Tests -----------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_rejects_bad_widths() {
        assert!(FxpFormat::new(3, 0, false).is_err());
        assert!(FxpFormat::new(64, 0, false).is_err());
        assert!(FxpFormat::new(8, 9, true).is_err());
        assert!(FxpFormat::new(4, 4, false).is_ok());
        assert!(FxpFormat::new(63, 63, true).is_ok());
    }

    #[test]
    fn format_code_ranges() {
        assert_eq!(FxpFormat::I8F3.min_code(), -128);
        assert_eq!(FxpFormat::I8F3.max_code(), 127);
        assert_eq!(FxpFormat::U16F15.min_code(), 0);
        assert_eq!(FxpFormat::U16F15.max_code(), 65535);
        assert_eq!(FxpFormat::I8F3.min_real(), -16.0);
        assert_eq!(FxpFormat::I8F3.max_real(), 15.875);
        assert_eq!(FxpFormat::I8F3.resolution(), 0.125);
        assert_eq!(FxpFormat::U32F24.code_bytes(), 4);
        assert_eq!(FxpFormat::I8F3.code_bytes(), 1);
    }

    #[test]
    fn quantize_table_constants() {
        // Hand-checked codes for the two table entries the softmax engine
        // leans on hardest: round(e^-1 * 2^15) and round(e^-0.5 * 2^15).
        let e1 = quantize(libm::exp(-1.0), FxpFormat::U16F15, Rounding::NearestEven);
        assert_eq!(e1.code(), 12055);
        assert!(!e1.saturated);
        let eh = quantize(libm::exp(-0.5), FxpFormat::U16F15, Rounding::NearestEven);
        assert_eq!(eh.code(), 19875);
        assert!(!eh.saturated);
    }

    #[test]
    fn quantize_saturates_at_format_edges() {
        let hi = quantize(20.0, FxpFormat::I8F3, Rounding::NearestEven);
        assert_eq!(hi.code(), 127);
        assert!(hi.saturated);

        let lo = quantize(-100.0, FxpFormat::I8F3, Rounding::NearestEven);
        assert_eq!(lo.code(), -128);
        assert!(lo.saturated);

        // Exactly representable extremes are not "saturation".
        let edge = quantize(-16.0, FxpFormat::I8F3, Rounding::NearestEven);
        assert_eq!(edge.code(), -128);
        assert!(!edge.saturated);

        // A huge magnitude must clamp rather than wrap through the cast.
        let huge = quantize(1e300, FxpFormat::U16F15, Rounding::NearestEven);
        assert_eq!(huge.code(), 65535);
        assert!(huge.saturated);
        let nhuge = quantize(-1e300, FxpFormat::I8F3, Rounding::Truncate);
        assert_eq!(nhuge.code(), -128);
        assert!(nhuge.saturated);
    }

    #[test]
    fn quantize_rounding_modes_differ_as_specified() {
        // 0.9375 is exactly 7.5 LSBs at three fraction bits: nearest-even
        // goes up to the even code 8, truncation drops to 7.
        let ne = quantize(0.9375, FxpFormat::I8F3, Rounding::NearestEven);
        assert_eq!(ne.code(), 8);
        let tr = quantize(0.9375, FxpFormat::I8F3, Rounding::Truncate);
        assert_eq!(tr.code(), 7);

        // Truncation is toward zero, not toward negative infinity.
        let neg = quantize(-0.9375, FxpFormat::I8F3, Rounding::Truncate);
        assert_eq!(neg.code(), -7);
    }

    #[test]
    fn quantize_dequantize_round_trip_error_is_half_lsb() {
        let fmt = FxpFormat::I8F3;
        let mut x = -16.0;
        while x <= 15.875 {
            let q = quantize(x, fmt, Rounding::NearestEven);
            assert!(!q.saturated, "{x} should be in range");
            assert!(
                (q.to_real() - x).abs() <= fmt.resolution() / 2.0 + 1e-15,
                "round-trip error too large at {x}"
            );
            x += 0.013;
        }
    }

    #[test]
    fn fxp_mul_matches_hand_computed_product() {
        // 12055 * 19875 = 239_593_125; shifted down 15 bits and truncated
        // that is 7311 — the code for e^-1 * e^-0.5 in the table format.
        let a = FxpValue::new(12055, FxpFormat::U16F15).unwrap();
        let b = FxpValue::new(19875, FxpFormat::U16F15).unwrap();
        let p = fxp_mul(a, b, FxpFormat::U16F15);
        assert_eq!(p.code(), 7311);
        assert!(!p.saturated);
    }

    #[test]
    fn fxp_mul_truncates_toward_zero_for_negative_products() {
        // (-7/8) * (5/8) = -35/64 = -4.375 LSBs at three fraction bits.
        // Toward-zero truncation gives -4; floor would give -5.
        let a = FxpValue::new(-7, FxpFormat::I8F3).unwrap();
        let b = FxpValue::new(5, FxpFormat::I8F3).unwrap();
        let p = fxp_mul(a, b, FxpFormat::I8F3);
        assert_eq!(p.code(), -4);
    }

    #[test]
    fn fxp_mul_saturates_and_flags() {
        let a = FxpValue::new(127, FxpFormat::I8F3).unwrap();
        let p = fxp_mul(a, a, FxpFormat::I8F3);
        assert_eq!(p.code(), 127);
        assert!(p.saturated);

        let n = FxpValue::new(-128, FxpFormat::I8F3).unwrap();
        let q = fxp_mul(n, a, FxpFormat::I8F3);
        assert_eq!(q.code(), -128);
        assert!(q.saturated);
    }

    #[test]
    fn fxp_mul_widens_fraction_without_losing_bits() {
        // Aligning to a wider fraction is a pure left shift: 3 * 5 codes at
        // f3*f3 -> f9 means 15 << 3 = 120.
        let a = FxpValue::new(3, FxpFormat::I8F3).unwrap();
        let b = FxpValue::new(5, FxpFormat::I8F3).unwrap();
        let out = FxpFormat::new(16, 9, true).unwrap();
        assert_eq!(fxp_mul(a, b, out).code(), 120);
    }

    #[test]
    fn divide_matches_hand_computed_scale_factor() {
        // floor(2^31 / 49152) = 43690 remainder 32768: the scale factor for
        // a denominator of 1.5 in the table format.
        let (q, r) = shift_subtract_divide(1u64 << 31, 49152).unwrap();
        assert_eq!(q, 43690);
        assert_eq!(r, 32768);
    }

    #[test]
    fn divide_is_floor_division_exhaustively_for_small_operands() {
        for num in 0..256u64 {
            for den in 1..256u64 {
                let (q, r) = shift_subtract_divide(num, den).unwrap();
                assert_eq!(q, num / den, "{num}/{den}");
                assert_eq!(r, num % den, "{num}%{den}");
            }
        }
    }

    #[test]
    fn divide_handles_full_width_operands() {
        let (q, r) = shift_subtract_divide(u64::MAX, 1).unwrap();
        assert_eq!(q, u64::MAX);
        assert_eq!(r, 0);
        let (q, r) = shift_subtract_divide(u64::MAX, u64::MAX).unwrap();
        assert_eq!(q, 1);
        assert_eq!(r, 0);
        let (q, r) = shift_subtract_divide(1, u64::MAX).unwrap();
        assert_eq!(q, 0);
        assert_eq!(r, 1);
    }

    #[test]
    fn divide_by_zero_is_an_error() {
        assert_eq!(shift_subtract_divide(5, 0), Err(FxpError::DivideByZero));
    }

    #[test]
    fn leading_one_detect_brackets_the_input() {
        assert_eq!(leading_one_detect(1).unwrap(), 0);
        assert_eq!(leading_one_detect(2).unwrap(), 1);
        assert_eq!(leading_one_detect(3).unwrap(), 1);
        assert_eq!(leading_one_detect(4).unwrap(), 2);
        assert_eq!(leading_one_detect(1 << 15).unwrap(), 15);
        assert_eq!(leading_one_detect(u64::MAX).unwrap(), 63);
        for n in [1u64, 7, 100, 4097, 1 << 40] {
            let l = leading_one_detect(n).unwrap();
            assert!(1u64 << l <= n);
            assert!(n < (1u128 << (l + 1)) as u64 || l == 63);
        }
        assert_eq!(leading_one_detect(0), Err(FxpError::LodOfZero));
    }

    #[test]
    fn tensor_validates_shape_and_range() {
        let fmt = FxpFormat::I8F3;
        assert!(matches!(
            QuantTensor::from_codes(2, 3, fmt, alloc::vec![0; 5]),
            Err(FxpError::ShapeMismatch { expected: 6, got: 5 })
        ));
        assert!(matches!(
            QuantTensor::from_codes(1, 2, fmt, alloc::vec![0, 200]),
            Err(FxpError::CodeOutOfRange { code: 200, .. })
        ));
        let t = QuantTensor::from_codes(2, 2, fmt, alloc::vec![-128, 0, 1, 127]).unwrap();
        assert_eq!(t.row(1), &[1, 127]);
        assert_eq!(t.dequantize_row(0), alloc::vec![-16.0, 0.0]);
    }

    #[test]
    fn tensor_from_reals_reports_saturation() {
        let fmt = FxpFormat::I8F3;
        let (t, sat) =
            QuantTensor::from_reals(1, 3, fmt, &[0.5, -2.25, 0.0], Rounding::NearestEven).unwrap();
        assert!(!sat);
        assert_eq!(t.row(0), &[4, -18, 0]);

        let (t, sat) =
            QuantTensor::from_reals(1, 2, fmt, &[100.0, 0.0], Rounding::NearestEven).unwrap();
        assert!(sat);
        assert_eq!(t.row(0), &[127, 0]);
    }
}
