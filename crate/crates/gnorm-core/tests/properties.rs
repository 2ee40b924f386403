//! Property tests: randomized invariants of the primitives and both
//! datapaths, including exact big-integer recomputations of the integer
//! paths so no width or shift bug can hide behind matching `u64` habits.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use gnorm_core::fxp::{
    dequantize, fxp_mul, leading_one_detect, quantize, shift_subtract_divide, FxpFormat,
    FxpValue, Rounding,
};
use gnorm_core::harness::{base2_unnormalized_softmax, Corpus, Generator, Histogram, HistogramSpec};
use gnorm_core::layernorm::{
    layernorm_exact, lod_initial_guess, newton_rsqrt_codes, LayerNormConfig, LayerNormEngine,
};
use gnorm_core::softmax::{softmax_exact, SoftmaxConfig, SoftmaxEngine};
use gnorm_core::Mode;

/// Floor division on big integers (both operands positive here).
fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a / b
}

fn i8f3_row(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-128i64..=127, 1..=max_len)
}

proptest! {
    // --- fixed-point primitives --------------------------------------------

    #[test]
    fn quantize_round_trip_is_within_half_lsb(x in -16.0f64..=15.875) {
        let fmt = FxpFormat::I8F3;
        let q = quantize(x, fmt, Rounding::NearestEven);
        prop_assert!(fmt.contains(q.code()));
        prop_assert!((q.to_real() - x).abs() <= fmt.resolution() / 2.0 + 1e-12);
    }

    #[test]
    fn quantize_truncate_never_moves_away_from_zero(x in -200.0f64..=200.0) {
        let fmt = FxpFormat::I8F3;
        let q = quantize(x, fmt, Rounding::Truncate);
        prop_assert!(fmt.contains(q.code()));
        if !q.saturated {
            prop_assert!(q.to_real().abs() <= x.abs() + 1e-12);
            prop_assert!((q.to_real() - x).abs() < fmt.resolution());
        }
    }

    #[test]
    fn quantize_is_total_for_any_finite_input(
        x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        word in 4u32..=63,
        frac_off in 0u32..=63,
        signed in any::<bool>(),
    ) {
        let fmt = FxpFormat::new(word, frac_off % (word + 1), signed).unwrap();
        let q = quantize(x, fmt, Rounding::NearestEven);
        prop_assert!(fmt.contains(q.code()));
    }

    #[test]
    fn fxp_mul_matches_exact_rational_truncation(a in -128i64..=127, b in -128i64..=127) {
        // i8f3 * i8f3 -> i8f3: exact product has 6 fraction bits; the unit
        // keeps 3, truncating toward zero after the sign.
        let fmt = FxpFormat::I8F3;
        let av = FxpValue::new(a, fmt).unwrap();
        let bv = FxpValue::new(b, fmt).unwrap();
        let got = fxp_mul(av, bv, fmt);
        let exact = a as i128 * b as i128; // 6 fraction bits
        let expect = exact / 8; // toward zero
        if (fmt.min_code() as i128..=fmt.max_code() as i128).contains(&expect) {
            prop_assert!(!got.saturated);
            prop_assert_eq!(got.code() as i128, expect);
        } else {
            prop_assert!(got.saturated);
        }
    }

    #[test]
    fn divide_agrees_with_machine_division(num in any::<u64>(), den in 1u64..) {
        let (q, r) = shift_subtract_divide(num, den).unwrap();
        prop_assert_eq!(q, num / den);
        prop_assert_eq!(r, num % den);
        // Reconstruction is exact and the remainder is proper.
        prop_assert_eq!(q.wrapping_mul(den).wrapping_add(r), num);
        prop_assert!(r < den);
    }

    #[test]
    fn leading_one_detect_brackets(n in 1u64..) {
        let l = leading_one_detect(n).unwrap();
        prop_assert!(1u64 << l <= n);
        if l < 63 {
            prop_assert!(n < 1u64 << (l + 1));
        }
    }

    #[test]
    fn dequantize_scales_by_the_fraction(code in -128i64..=127) {
        let v = FxpValue::new(code, FxpFormat::I8F3).unwrap();
        prop_assert_eq!(dequantize(v), code as f64 / 8.0);
    }

    // --- softmax ------------------------------------------------------------

    #[test]
    fn softmax_bit_sum_is_within_n_plus_two_codes_of_full_scale(row in i8f3_row(64)) {
        let engine = SoftmaxEngine::new(SoftmaxConfig::default()).unwrap();
        let r = engine.eval_row(&row).unwrap();
        let sum: i64 = r.prob_codes.as_deref().unwrap().iter().sum();
        let n = row.len() as i64;
        // Truncation only ever undershoots, and by less than one output
        // code per nonzero term plus one for the scale factor.
        prop_assert!(sum <= 1 << 15, "sum {} above full scale for {:?}", sum, row);
        prop_assert!(sum >= (1 << 15) - (n + 2), "sum {} too low for {:?}", sum, row);
    }

    #[test]
    fn softmax_bit_output_recomputes_under_exact_big_integers(row in i8f3_row(32)) {
        // Recompute the whole integer path with BigInt: y from the table
        // codes, Z, F = floor(2^31/Z), Y_i = floor(y_i*F/2^16). Any width
        // or shift slip in the u64/u128 path shows up here.
        let engine = SoftmaxEngine::new(SoftmaxConfig::default()).unwrap();
        let r = engine.eval_row(&row).unwrap();
        let max = *row.iter().max().unwrap();
        let y: Vec<BigInt> = row
            .iter()
            .map(|&c| BigInt::from(engine.exp_approx_code((max - c) as u64)))
            .collect();
        let z: BigInt = y.iter().sum();
        prop_assert!(!z.is_zero());
        let f = floor_div(&BigInt::from(1u64 << 31), &z);
        let got = r.prob_codes.unwrap();
        for (yi, gi) in y.iter().zip(got) {
            let want = floor_div(&(yi * &f), &BigInt::from(1u64 << 16));
            prop_assert_eq!(want.to_i64().unwrap(), gi);
        }
    }

    #[test]
    fn softmax_bit_preserves_ranking(row in i8f3_row(24)) {
        let engine = SoftmaxEngine::new(SoftmaxConfig::default()).unwrap();
        let r = engine.eval_row(&row).unwrap();
        let out = r.prob_codes.unwrap();
        for i in 0..row.len() {
            for j in 0..row.len() {
                if row[i] > row[j] {
                    prop_assert!(out[i] >= out[j], "order broken at {} vs {}", i, j);
                } else if row[i] == row[j] {
                    prop_assert_eq!(out[i], out[j]);
                }
            }
        }
    }

    #[test]
    fn softmax_float_sums_to_one(row in i8f3_row(64)) {
        let engine = SoftmaxEngine::new(
            SoftmaxConfig { mode: Mode::FloatEmulation, ..SoftmaxConfig::default() },
        ).unwrap();
        let r = engine.eval_row(&row).unwrap();
        prop_assert!(r.sum_error <= 1e-12, "sum_error {}", r.sum_error);
    }

    #[test]
    fn softmax_exact_matches_its_own_invariants(row in prop::collection::vec(-16.0f64..16.0, 1..32)) {
        let p = softmax_exact(&row).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    // --- layernorm ------------------------------------------------------------

    #[test]
    fn layernorm_bit_moments_recompute_under_exact_big_integers(
        row in prop::collection::vec(-128i64..=127, 4..=64),
    ) {
        let cols = row.len();
        let engine = LayerNormEngine::new(LayerNormConfig::bit_accurate(cols)).unwrap();
        let r = engine.eval_row(&row).unwrap();

        let sum: BigInt = row.iter().map(|&c| BigInt::from(c)).sum();
        let sum_sq: BigInt = row.iter().map(|&c| BigInt::from(c) * BigInt::from(c)).sum();
        let c = BigInt::from(cols);

        // mean_q = trunc((sum << 21) / C) toward zero; BigInt division
        // truncates toward zero like the sign-magnitude divider.
        let mean_q = (sum.clone() << 21) / &c;
        let got_mean = BigInt::from((r.mean * 16777216.0) as i64);
        prop_assert_eq!(&mean_q, &got_mean);

        // var_q = floor(((C*sum_sq - sum^2) << 18) / C^2); the numerator is
        // non-negative so floor and truncation agree.
        let num = &c * &sum_sq - &sum * &sum;
        prop_assert!(!num.is_negative());
        let var_q = (num << 18) / (&c * &c);
        let got_var = BigInt::from((r.variance * 16777216.0) as u64);
        prop_assert_eq!(&var_q, &got_var);
    }

    #[test]
    fn layernorm_float_normalizes_nondegenerate_rows(
        row in prop::collection::vec(-128i64..=127, 4..=64),
    ) {
        prop_assume!(row.iter().any(|&c| c != row[0]));
        let engine = LayerNormEngine::new(LayerNormConfig::float_emulation(row.len())).unwrap();
        let r = engine.eval_row(&row).unwrap();
        prop_assert!(r.sigma_error <= 1e-9, "sigma_error {}", r.sigma_error);
        let mean_out: f64 = r.out.iter().sum::<f64>() / row.len() as f64;
        prop_assert!(mean_out.abs() <= 1e-9, "mean {}", mean_out);
    }

    #[test]
    fn layernorm_bit_stays_close_to_exact_normalization(
        row in prop::collection::vec(-128i64..=127, 8..=64),
    ) {
        prop_assume!(row.iter().any(|&c| c != row[0]));
        let engine = LayerNormEngine::new(LayerNormConfig::bit_accurate(row.len())).unwrap();
        let r = engine.eval_row(&row).unwrap();
        // Two Newton steps from a leading-one seed leave at most ~4e-3
        // relative error in the root; everything else is working-format
        // truncation noise well below that.
        prop_assert!(r.sigma_error <= 5e-3, "sigma_error {}", r.sigma_error);
    }

    #[test]
    fn lod_seed_error_is_below_sqrt2_minus_one(code in 1i64..=0xffff_ffff) {
        let fmt = FxpFormat::U32F24;
        let v = FxpValue::new(code, fmt).unwrap();
        let seed = lod_initial_guess(v).unwrap();
        if !seed.saturated {
            let err = (seed.to_real() * v.to_real().sqrt() - 1.0).abs();
            prop_assert!(err <= 0.41422, "seed error {} at code {}", err, code);
        }
    }

    #[test]
    fn newton_codes_converge_in_the_reduced_range(n in (1u64 << 24)..(1u64 << 26)) {
        // Over [1, 4) at 24 fraction bits, two truncating steps land within
        // half a percent of the true reciprocal square root.
        let x = newton_rsqrt_codes(n, 24, 2).unwrap();
        let err = (x as f64 / 16777216.0 * (n as f64 / 16777216.0).sqrt() - 1.0).abs();
        prop_assert!(err <= 5e-3, "error {} at n {}", err, n);
    }

    #[test]
    fn layernorm_exact_output_is_standardized(
        row in prop::collection::vec(-16.0f64..16.0, 4..=32),
    ) {
        let spread = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - row.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-6);
        let out = layernorm_exact(&row, None).unwrap();
        let n = out.len() as f64;
        let mu = out.iter().sum::<f64>() / n;
        let var = out.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / n;
        prop_assert!(mu.abs() <= 1e-10);
        prop_assert!((var - 1.0).abs() <= 1e-9);
    }

    // --- harness ------------------------------------------------------------

    #[test]
    fn histogram_conserves_every_sample(samples in prop::collection::vec(0.0f64..=1.0, 0..200)) {
        let mut h = Histogram::new(HistogramSpec::default()).unwrap();
        for &s in &samples {
            h.add(s);
        }
        prop_assert_eq!(h.total(), samples.len() as u64);
    }

    #[test]
    fn base2_baseline_sum_lands_in_one_to_two(row in prop::collection::vec(-16.0f64..16.0, 1..32)) {
        // The denominator is the sum truncated to a power of two, so the
        // output sum is exactly sum/2^floor(log2(sum)) in [1, 2).
        let p = base2_unnormalized_softmax(&row).unwrap();
        let s: f64 = p.iter().sum();
        prop_assert!((1.0 - 1e-12..2.0 + 1e-12).contains(&s), "sum {}", s);
    }

    #[test]
    fn corpus_rows_are_pure_functions_of_their_index(seed in any::<u64>(), r in 0usize..50) {
        let mk = || Corpus::generated(
            50, 8, FxpFormat::I8F3, Generator::Gaussian { std: 1.5 }, seed,
        ).unwrap();
        prop_assert_eq!(mk().row_codes(r), mk().row_codes(r));
    }
}
