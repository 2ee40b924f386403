//! Small numeric helpers shared across modules.
//!
//! Everything in here is deliberately branch-simple: these functions sit on
//! the quantization path, so they must behave identically on every platform
//! and be easy to audit against the datapath they model.

/// Exact power of two as `f64`, built directly from the exponent field.
///
/// Valid for any exponent a normal `f64` can carry. Using the bit pattern
/// avoids a `powi` call whose rounding we would then have to argue about.
pub(crate) fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e), "pow2 exponent out of range: {e}");
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Floor of log2 for a positive, finite, normal `f64`.
///
/// Reads the exponent field, so it is exact where `libm::log2` followed by a
/// floor could land on the wrong side of a power of two.
pub(crate) fn floor_log2(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite(), "floor_log2 needs a positive finite value: {x}");
    debug_assert!(x >= f64::MIN_POSITIVE, "floor_log2 does not handle subnormals: {x}");
    ((x.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

/// Round to the nearest integer, ties to even, returned as `f64`.
///
/// This is the rounding used when burning real constants into lookup-table
/// codes. Written out longhand so the tie rule is explicit rather than
/// inherited from whatever the platform's `rint` mode happens to be.
pub(crate) fn round_half_even(x: f64) -> f64 {
    let f = libm::floor(x);
    let d = x - f;
    if d < 0.5 {
        f
    } else if d > 0.5 {
        f + 1.0
    } else if libm::fmod(f, 2.0) == 0.0 {
        f
    } else {
        f + 1.0
    }
}

/// Population mean of a slice. Empty slices are the caller's bug.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divide by `n`, not `n - 1`).
///
/// Two-pass form: the centered sum of squares does not suffer the
/// catastrophic cancellation the one-pass form does, and the harness leans
/// on this being trustworthy down to ~1e-12.
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let mu = mean(xs);
    let ss = xs.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>();
    libm::sqrt(ss / xs.len() as f64)
}
