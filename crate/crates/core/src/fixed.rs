//! Exact circle coordinates with 256 fractional bits.
//!
//! A [`Fixed256`] is an element of ℝ/ℤ represented as an integer modulo 2^256,
//! so addition and multiplication by integers are exact and wrap correctly.

use num_bigint::BigUint;
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fixed256 {
    hi: u128,
    lo: u128,
}

impl Fixed256 {
    pub const ZERO: Fixed256 = Fixed256 { hi: 0, lo: 0 };

    pub fn from_parts(hi: u128, lo: u128) -> Self {
        Fixed256 { hi, lo }
    }

    /// floor(2^256 · p / q) mod 2^256 for a rational angle p/q.
    pub fn from_ratio(p: i64, q: u64) -> Self {
        assert!(q > 0, "denominator must be positive");
        let q_big = BigUint::from(q);
        let p_mod = p.rem_euclid(q as i64) as u64;
        let scaled = (BigUint::from(p_mod) << 256u32) / q_big;
        Self::from_biguint(&scaled)
    }

    /// The golden-ratio conjugate (√5 − 1)/2, truncated to 256 bits.
    pub fn golden() -> Self {
        // sqrt(5 · 2^512) = √5 · 2^256; subtract 2^256 and halve.
        let five = BigUint::from(5u32) << 512u32;
        let root = five.sqrt();
        let one = BigUint::from(1u32) << 256u32;
        Self::from_biguint(&((root - one) >> 1u32))
    }

    fn from_biguint(v: &BigUint) -> Self {
        let digits = v.to_u64_digits();
        let limb = |i: usize| digits.get(i).copied().unwrap_or(0) as u128;
        Fixed256 {
            lo: limb(0) | (limb(1) << 64),
            hi: limb(2) | (limb(3) << 64),
        }
    }

    pub fn wrapping_add(self, o: Self) -> Self {
        let (lo, carry) = self.lo.overflowing_add(o.lo);
        let hi = self.hi.wrapping_add(o.hi).wrapping_add(carry as u128);
        Fixed256 { hi, lo }
    }

    pub fn wrapping_neg(self) -> Self {
        let inv = Fixed256 {
            hi: !self.hi,
            lo: !self.lo,
        };
        inv.wrapping_add(Fixed256 { hi: 0, lo: 1 })
    }

    pub fn wrapping_sub(self, o: Self) -> Self {
        self.wrapping_add(o.wrapping_neg())
    }

    /// k · self mod 1.
    pub fn wrapping_mul_int(self, k: i64) -> Self {
        let m = k.unsigned_abs();
        let mut acc = Fixed256::ZERO;
        let mut base = self;
        let mut bits = m;
        while bits > 0 {
            if bits & 1 == 1 {
                acc = acc.wrapping_add(base);
            }
            base = base.wrapping_add(base);
            bits >>= 1;
        }
        if k < 0 {
            acc.wrapping_neg()
        } else {
            acc
        }
    }

    pub fn to_f64(self) -> f64 {
        // Top 128 bits carry far more precision than f64 needs.
        self.hi as f64 / 2f64.powi(128)
    }

    /// Circular orientation of three points: +1 if counterclockwise, −1 if
    /// clockwise, 0 if any two coincide.
    pub fn orientation(a: Self, b: Self, c: Self) -> i8 {
        if a == b || b == c || a == c {
            return 0;
        }
        let db = b.wrapping_sub(a);
        let dc = c.wrapping_sub(a);
        if db < dc {
            1
        } else {
            -1
        }
    }
}

impl Ord for Fixed256 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.hi, self.lo).cmp(&(other.hi, other.lo))
    }
}

impl PartialOrd for Fixed256 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Fixed256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed256({:032x}{:032x})", self.hi, self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_value() {
        let g = Fixed256::golden().to_f64();
        assert!((g - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_and_multiples() {
        let q = Fixed256::from_ratio(1, 4);
        assert_eq!(q.wrapping_mul_int(4), Fixed256::ZERO);
        assert_eq!(q.wrapping_mul_int(-1), Fixed256::from_ratio(3, 4));
        assert_eq!(q.to_f64(), 0.25);
    }

    #[test]
    fn orientation_basic() {
        let a = Fixed256::from_ratio(1, 10);
        let b = Fixed256::from_ratio(5, 10);
        let c = Fixed256::from_ratio(9, 10);
        assert_eq!(Fixed256::orientation(a, b, c), 1);
        assert_eq!(Fixed256::orientation(b, c, a), 1);
        assert_eq!(Fixed256::orientation(b, a, c), -1);
        assert_eq!(Fixed256::orientation(a, a, c), 0);
    }

    #[test]
    fn mul_matches_repeated_add() {
        let g = Fixed256::golden();
        let mut acc = Fixed256::ZERO;
        for _ in 0..1000 {
            acc = acc.wrapping_add(g);
        }
        assert_eq!(acc, g.wrapping_mul_int(1000));
        assert_eq!(acc.wrapping_add(g.wrapping_mul_int(-1000)), Fixed256::ZERO);
    }
}
