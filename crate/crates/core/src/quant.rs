//! Compatible uniform quantizers.
//!
//! A `b`-bit quantizer with dynamic range `L_limit` has step
//! `alpha(b) = L_limit / 2^(b-1)` and levels `k * alpha(b)` for
//! `|k * alpha(b)| <= L_limit - alpha(b)`: 2^b - 1 symmetric levels including
//! zero, and every level set is contained in the next wider one. Bitwidths
//! 0 and 1 both have the single level 0.
//!
//! The fixed-point decoder works on integers in units of `L_limit / 2^32`
//! ([`FRAC_BITS`]). Every level of every bitwidth up to [`MAX_BITS`] is an
//! exact integer in these units, so sums and comparisons are exact.

use crate::error::{Error, Result};

/// Fractional bits of the scaled-integer representation.
pub const FRAC_BITS: u32 = 32;

/// Widest bitwidth the fixed-point decoder accepts.
pub const MAX_BITS: u32 = FRAC_BITS;

/// Quantization step of a `b`-bit quantizer; `None` for `b = 0`.
pub fn alpha_of_b(b: u32, l_limit: f64) -> Option<f64> {
    if b == 0 {
        None
    } else {
        Some(l_limit / 2f64.powi(b as i32 - 1))
    }
}

/// Largest representable magnitude, `L_limit - alpha(b)` (0 for b <= 1).
pub fn clip_limit(b: u32, l_limit: f64) -> f64 {
    match alpha_of_b(b, l_limit) {
        Some(a) if b > 1 => l_limit - a,
        _ => 0.0,
    }
}

/// Bitwidth for a (trained) step size: `round(log2(L_limit/alpha) + 1)`,
/// halves rounded up, negative results clamped to 0.
pub fn b_of_alpha(alpha: f64, l_limit: f64) -> u32 {
    let v = (l_limit / alpha).log2() + 1.0;
    let r = (v + 0.5).floor();
    if r.is_nan() || r <= 0.0 {
        0
    } else {
        r as u32
    }
}

/// Clips `x` to the `b`-bit range and rounds to the nearest level, ties away
/// from zero.
pub fn quantize_fixed(x: f64, b: u32, l_limit: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("quantizer input"));
    }
    Ok(match alpha_of_b(b, l_limit) {
        Some(alpha) if b > 1 => level_index(x, b, l_limit) as f64 * alpha,
        _ => 0.0,
    })
}

/// Sorted level set of the `b`-bit quantizer (`b >= 1`).
pub fn levels(b: u32, l_limit: f64) -> Vec<f64> {
    let Some(alpha) = alpha_of_b(b, l_limit) else {
        return Vec::new();
    };
    let kmax = (1i64 << (b - 1)) - 1;
    (-kmax..=kmax).map(|k| k as f64 * alpha).collect()
}

fn level_index(x: f64, b: u32, l_limit: f64) -> i64 {
    let kmax = ((1i64 << (b - 1)) - 1) as f64;
    let scaled = x * 2f64.powi(b as i32 - 1) / l_limit;
    scaled.round().clamp(-kmax, kmax) as i64
}

/// Quantizers in the scaled-integer domain, parameterized by `L_limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    l_limit: f64,
}

impl FixedPoint {
    pub fn new(l_limit: f64) -> Result<FixedPoint> {
        if !(l_limit.is_finite() && l_limit > 0.0) {
            return Err(Error::Param(format!("L_limit must be positive, got {l_limit}")));
        }
        Ok(FixedPoint { l_limit })
    }

    pub fn l_limit(&self) -> f64 {
        self.l_limit
    }

    /// Quantizes a real value straight to integer units.
    #[inline]
    pub fn from_real(&self, x: f64, b: u32) -> i64 {
        if b <= 1 {
            return 0;
        }
        debug_assert!(b <= MAX_BITS);
        level_index(x, b, self.l_limit) << (FRAC_BITS + 1 - b)
    }

    /// Requantizes an integer-unit value to `b` bits.
    #[inline]
    pub fn quantize(&self, v: i64, b: u32) -> i64 {
        if b <= 1 {
            return 0;
        }
        debug_assert!(b <= MAX_BITS);
        let shift = FRAC_BITS + 1 - b;
        let step = 1i64 << shift;
        let clip = (1i64 << FRAC_BITS) - step;
        let mag = v.unsigned_abs().min(clip as u64) as i64;
        let q = ((mag + step / 2) >> shift) << shift;
        if v < 0 {
            -q
        } else {
            q
        }
    }

    #[inline]
    pub fn to_real(&self, v: i64) -> f64 {
        v as f64 * (1.0 / (1u64 << FRAC_BITS) as f64) * self.l_limit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn step_sizes() {
        assert_eq!(alpha_of_b(3, 8.0), Some(2.0));
        assert_eq!(alpha_of_b(4, 8.0), Some(1.0));
        assert_eq!(alpha_of_b(1, 8.0), Some(8.0));
        assert_eq!(alpha_of_b(0, 8.0), None);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_fixed(1.3, 3, 8.0).unwrap(), 2.0);
        assert_eq!(quantize_fixed(-9.0, 4, 8.0).unwrap(), -7.0);
        assert_eq!(quantize_fixed(3.0, 3, 8.0).unwrap(), 4.0);
        assert_eq!(quantize_fixed(-3.0, 3, 8.0).unwrap(), -4.0);
        assert_eq!(quantize_fixed(5.3, 1, 8.0).unwrap(), 0.0);
        assert_eq!(quantize_fixed(5.3, 0, 8.0).unwrap(), 0.0);
        assert!(quantize_fixed(f64::NAN, 3, 8.0).is_err());
        assert!(quantize_fixed(f64::INFINITY, 3, 8.0).is_err());
    }

    #[test]
    fn bitwidth_conversion() {
        assert_eq!(b_of_alpha(1.0, 8.0), 4);
        assert_eq!(b_of_alpha(2.0, 8.0), 3);
        assert_eq!(b_of_alpha(1.5, 8.0), 3);
        assert_eq!(b_of_alpha(16.0, 8.0), 0);
        assert_eq!(b_of_alpha(1e6, 8.0), 0);
        assert_eq!(b_of_alpha(8.0 / 2f64.powf(2.6), 8.0), 4);
        assert_eq!(b_of_alpha(8.0 / 2f64.powf(2.4), 8.0), 3);
    }

    #[test]
    fn level_sets() {
        assert_eq!(levels(2, 8.0), vec![-4.0, 0.0, 4.0]);
        assert_eq!(levels(3, 8.0), vec![-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0]);
        assert_eq!(levels(1, 8.0), vec![0.0]);
        assert!(levels(0, 8.0).is_empty());
    }

    #[test]
    fn lattice_nesting_and_round_trip() {
        for l in [4.0, 8.0, 16.0] {
            for b in 1..=12u32 {
                let small = levels(b, l);
                let big = levels(b + 1, l);
                assert_eq!(small.len(), (1usize << b) - 1);
                assert!(small.iter().all(|x| big.contains(x)), "b={b} L={l}");
                assert_eq!(*small.last().unwrap(), clip_limit(b, l));
                assert_eq!(b_of_alpha(alpha_of_b(b, l).unwrap(), l), b);
            }
        }
    }

    #[test]
    fn integer_domain_matches_real_domain() {
        let fx = FixedPoint::new(8.0).unwrap();
        for b in 0..=10 {
            for i in -200..=200 {
                let x = i as f64 * 0.05;
                let v = fx.from_real(x, b);
                assert_eq!(fx.to_real(v), quantize_fixed(x, b, 8.0).unwrap(), "x={x} b={b}");
                assert_eq!(fx.quantize(v, b), v);
            }
        }
    }

    #[test]
    fn requantize_ties_away_from_zero() {
        let fx = FixedPoint::new(8.0).unwrap();
        // 3.0 at 4 bits requantized to 3 bits is a tie between 2 and 4
        let v = fx.from_real(3.0, 4);
        assert_eq!(fx.to_real(fx.quantize(v, 3)), 4.0);
        assert_eq!(fx.to_real(fx.quantize(-v, 3)), -4.0);
        // saturation
        let big = fx.from_real(7.0, 4) * 3;
        assert_eq!(fx.to_real(fx.quantize(big, 3)), 6.0);
    }

    proptest! {
        #[test]
        fn symmetric(x in -20.0f64..20.0, b in 0u32..12, li in 0usize..3) {
            let l = [4.0, 8.0, 16.0][li];
            prop_assert_eq!(quantize_fixed(-x, b, l).unwrap(), -quantize_fixed(x, b, l).unwrap());
        }

        #[test]
        fn error_bound_inside_range(x in -16.0f64..16.0, b in 1u32..12, li in 0usize..3) {
            let l = [4.0, 8.0, 16.0][li];
            let alpha = alpha_of_b(b, l).unwrap();
            prop_assume!(x.abs() <= clip_limit(b, l));
            let q = quantize_fixed(x, b, l).unwrap();
            prop_assert!((q - x).abs() <= alpha / 2.0 + 1e-12);
        }

        #[test]
        fn idempotent_and_on_lattice(x in -20.0f64..20.0, b in 0u32..12) {
            let q = quantize_fixed(x, b, 8.0).unwrap();
            prop_assert_eq!(quantize_fixed(q, b, 8.0).unwrap(), q);
            if b >= 1 {
                prop_assert!(levels(b, 8.0).contains(&q));
            }
        }

        #[test]
        fn integer_requantize_symmetric(v in -(1i64 << 34)..(1i64 << 34), b in 0u32..=MAX_BITS) {
            let fx = FixedPoint::new(8.0).unwrap();
            prop_assert_eq!(fx.quantize(-v, b), -fx.quantize(v, b));
        }
    }
}
