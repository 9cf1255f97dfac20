//! Pixel grid coordinates and their 2-adic encoding.
//!
//! A coordinate in `[0, 2^n)` is encoded by reversing its n bits, which is the
//! inverse Monna map restricted to the grid: nearby pixels share leading
//! fraction bits exactly when their encodings are 2-adically close.

use crate::padic::PadicInt;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// Integer pixel coordinate on a 2^resolution grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridCoord {
    pub value: u64,
    pub resolution: u32,
}

impl GridCoord {
    pub fn new(value: u64, resolution: u32) -> Self {
        assert!(resolution >= 1 && resolution <= 64);
        assert!(
            resolution == 64 || value < (1u64 << resolution),
            "coordinate {} out of range for {} bits",
            value,
            resolution
        );
        GridCoord { value, resolution }
    }
}

/// Bit-reversal encoding of a grid coordinate as a 2-adic integer of
/// precision `resolution`.
pub fn grid_encode(c: GridCoord) -> PadicInt {
    let n = c.resolution;
    let r = c.value.reverse_bits() >> (64 - n);
    PadicInt::new(r, n)
}

/// Monna map on truncated 2-adic integers: digit a_v goes to weight
/// 2^{-(v+1)}, yielding an exact rational in [0, 1).
pub fn monna(a: PadicInt) -> BigRational {
    let m = a.precision();
    let rev = a.residue().reverse_bits() >> (64 - m);
    BigRational::new(BigInt::from(rev), BigInt::one() << m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn encode_examples() {
        assert_eq!(grid_encode(GridCoord::new(1, 3)).residue(), 4);
        assert_eq!(grid_encode(GridCoord::new(4, 3)).residue(), 1);
        assert_eq!(grid_encode(GridCoord::new(0, 3)).residue(), 0);
    }

    #[test]
    fn monna_examples() {
        let half = monna(PadicInt::new(1, 1));
        assert_eq!(half, BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert!(monna(PadicInt::new(0, 4)).is_zero());
        // 6 = 011 reading digits upward: 0/2 + 1/4 + 1/8
        assert_eq!(
            monna(PadicInt::new(6, 3)),
            BigRational::new(BigInt::from(3), BigInt::from(8))
        );
    }

    #[test]
    fn monna_inverts_grid_encode() {
        for n in 1..=10u32 {
            for c in 0..(1u64 << n).min(256) {
                let enc = grid_encode(GridCoord::new(c, n));
                let frac = monna(enc);
                let scaled = frac * BigRational::from(BigInt::one() << n);
                assert_eq!(scaled, BigRational::from(BigInt::from(c)));
            }
        }
    }
}
