//! Truncated 2-adic integers: residues mod 2^m with explicit precision tracking.
//!
//! A [`PadicInt`] stores a residue in `[0, 2^m)` together with its precision
//! `m`. Ring operations propagate the minimum precision of their operands, so
//! a result is never claimed to more digits than its inputs support. Division
//! is restricted to units (odd residues) and to exact division by powers of
//! two, which lowers precision accordingly.

use thiserror::Error;

/// Largest supported precision. Residues live in a `u64`.
pub const MAX_PRECISION: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("residue {0} is not a unit mod 2^{1}")]
    NotAUnit(u64, u32),
    #[error("mixed precisions {0} and {1}")]
    MixedPrecision(u32, u32),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("valuation of {0} mod 2^{1} is below {2}, exact shift impossible")]
    InexactShift(u64, u32, u32),
}

/// A 2-adic integer known modulo `2^precision`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicInt {
    residue: u64,
    precision: u32,
}

#[inline]
pub(crate) fn mask(precision: u32) -> u64 {
    debug_assert!(precision >= 1 && precision <= MAX_PRECISION);
    if precision == MAX_PRECISION {
        u64::MAX
    } else {
        (1u64 << precision) - 1
    }
}

impl PadicInt {
    /// Truncates `residue` to the given precision. `precision` must lie in
    /// `1..=64`.
    pub fn new(residue: u64, precision: u32) -> Self {
        assert!(
            precision >= 1 && precision <= MAX_PRECISION,
            "precision {} out of range 1..=64",
            precision
        );
        PadicInt {
            residue: residue & mask(precision),
            precision,
        }
    }

    /// Embeds a signed integer, reducing mod 2^precision.
    pub fn from_i64(value: i64, precision: u32) -> Self {
        Self::new(value as u64, precision)
    }

    pub fn zero(precision: u32) -> Self {
        Self::new(0, precision)
    }

    pub fn one(precision: u32) -> Self {
        Self::new(1, precision)
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    pub fn is_unit(&self) -> bool {
        self.residue & 1 == 1
    }

    /// 2-adic valuation of the residue. `None` means the residue vanishes
    /// mod 2^m, i.e. the valuation is at or beyond the precision horizon.
    pub fn val2(&self) -> Option<u32> {
        if self.residue == 0 {
            None
        } else {
            let v = self.residue.trailing_zeros();
            debug_assert!(v < self.precision);
            Some(v)
        }
    }

    /// Multiplicative inverse of a unit, by Newton iteration on x -> x(2 - ax).
    pub fn inv_unit(&self) -> Result<PadicInt, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NotAUnit(self.residue, self.precision));
        }
        let m = mask(self.precision);
        let a = self.residue;
        // a * a == 1 mod 8 for odd a, so x = a is correct to 3 bits already.
        let mut x = a;
        for _ in 0..6 {
            let ax = a.wrapping_mul(x);
            x = x.wrapping_mul(2u64.wrapping_sub(ax));
        }
        debug_assert_eq!(a.wrapping_mul(x) & m, 1);
        Ok(PadicInt::new(x, self.precision))
    }

    /// Exact division by 2^s. Requires every set bit at or beyond s; the
    /// result is known to `precision - s` digits only.
    pub fn shr_exact(&self, s: u32) -> Result<PadicInt, PadicError> {
        if s == 0 {
            return Ok(*self);
        }
        if s >= self.precision {
            return Err(PadicError::InexactShift(self.residue, self.precision, s));
        }
        if self.residue.trailing_zeros() < s && self.residue != 0 {
            return Err(PadicError::InexactShift(self.residue, self.precision, s));
        }
        Ok(PadicInt::new(self.residue >> s, self.precision - s))
    }

    /// Reinterprets at lower precision.
    pub fn truncate(&self, m: u32) -> PadicInt {
        assert!(m >= 1 && m <= self.precision);
        PadicInt::new(self.residue, m)
    }

    /// Reinterprets the canonical integer representative at higher precision.
    /// This is a choice of lift, not new information; callers that widen must
    /// account for it.
    pub fn widen(&self, m: u32) -> PadicInt {
        assert!(m >= self.precision && m <= MAX_PRECISION);
        PadicInt::new(self.residue, m)
    }

    pub fn pow(&self, mut e: u32) -> PadicInt {
        let mut base = *self;
        let mut acc = PadicInt::one(self.precision);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn meet(a: Self, b: Self) -> u32 {
        a.precision.min(b.precision)
    }
}

impl std::ops::Add for PadicInt {
    type Output = PadicInt;
    fn add(self, rhs: PadicInt) -> PadicInt {
        let p = PadicInt::meet(self, rhs);
        PadicInt::new(self.residue.wrapping_add(rhs.residue), p)
    }
}

impl std::ops::Sub for PadicInt {
    type Output = PadicInt;
    fn sub(self, rhs: PadicInt) -> PadicInt {
        let p = PadicInt::meet(self, rhs);
        PadicInt::new(self.residue.wrapping_sub(rhs.residue), p)
    }
}

impl std::ops::Mul for PadicInt {
    type Output = PadicInt;
    fn mul(self, rhs: PadicInt) -> PadicInt {
        let p = PadicInt::meet(self, rhs);
        let prod = (self.residue as u128).wrapping_mul(rhs.residue as u128);
        PadicInt::new(prod as u64, p)
    }
}

impl std::ops::Neg for PadicInt {
    type Output = PadicInt;
    fn neg(self) -> PadicInt {
        PadicInt::new(0u64.wrapping_sub(self.residue), self.precision)
    }
}

impl std::fmt::Debug for PadicInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (mod 2^{})", self.residue, self.precision)
    }
}

impl std::fmt::Display for PadicInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.residue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn val2_examples() {
        assert_eq!(PadicInt::new(12, 8).val2(), Some(2));
        assert_eq!(PadicInt::new(0, 8).val2(), None);
        assert_eq!(PadicInt::new(1, 1).val2(), Some(0));
        assert_eq!(PadicInt::new(96, 5).val2(), None); // 96 mod 32 == 0
    }

    #[test]
    fn inv_unit_known_value() {
        let a = PadicInt::new(3, 8);
        let inv = a.inv_unit().unwrap();
        assert_eq!(inv.residue(), 171);
        assert_eq!((a * inv).residue(), 1);
    }

    #[test]
    fn inv_unit_rejects_even() {
        assert!(matches!(
            PadicInt::new(6, 8).inv_unit(),
            Err(PadicError::NotAUnit(6, 8))
        ));
    }

    #[test]
    fn inv_unit_full_width() {
        let a = PadicInt::new(0xdead_beef_1234_5677, 64);
        let inv = a.inv_unit().unwrap();
        assert_eq!((a * inv).residue(), 1);
    }

    #[test]
    fn precision_propagates_as_minimum() {
        let a = PadicInt::new(7, 16);
        let b = PadicInt::new(5, 8);
        assert_eq!((a + b).precision(), 8);
        assert_eq!((a * b).precision(), 8);
        assert_eq!((a - b).precision(), 8);
    }

    #[test]
    fn shr_exact_drops_precision() {
        let a = PadicInt::new(8, 6);
        let b = a.shr_exact(3).unwrap();
        assert_eq!(b.residue(), 1);
        assert_eq!(b.precision(), 3);
        assert!(PadicInt::new(4, 6).shr_exact(3).is_err());
    }

    #[test]
    fn zero_shifts_within_precision() {
        let z = PadicInt::zero(6);
        let s = z.shr_exact(2).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.precision(), 4);
    }

    #[test]
    fn neg_and_sub_agree() {
        let a = PadicInt::new(13, 10);
        let b = PadicInt::new(200, 10);
        assert_eq!(a - b, a + (-b));
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let a = PadicInt::new(11, 20);
        assert_eq!(a.pow(5), a * a * a * a * a);
        assert_eq!(a.pow(0), PadicInt::one(20));
    }
}
