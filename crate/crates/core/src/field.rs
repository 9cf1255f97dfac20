//! The degree-n unramified extension of Q_2, realised on its coordinate side.
//!
//! An integral element is a sequence of m digit tuples in {0,1}^n, obtained by
//! interleaving the binary digits of n coordinate residues. Under the maximum
//! norm on coordinates this realisation is isometric to the extension field
//! with its canonical absolute value, which is all the clustering layer needs:
//! distances, ball measures and the Haar normalisation giving the ring of
//! integers total measure 1.

use crate::padic::{mask, PadicError, PadicInt};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Integral element of the degree-`dim` unramified extension, truncated to
/// `digits.len()` levels. Digit tuples are packed into `u64`s: bit `i` of
/// `digits[level]` is the `level`-th binary digit of coordinate `i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UnramifiedElement {
    dim: u32,
    digits: Vec<u64>,
}

impl UnramifiedElement {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn precision(&self) -> u32 {
        self.digits.len() as u32
    }

    /// Digit tuple at a level, packed as a `u64` with `dim` significant bits.
    pub fn digit(&self, level: u32) -> u64 {
        self.digits[level as usize]
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Level of the first nonzero digit tuple; `None` if the element vanishes
    /// to its full precision.
    pub fn norm_level(&self) -> Option<u32> {
        self.digits.iter().position(|&d| d != 0).map(|p| p as u32)
    }
}

/// Interleaves n coordinates of equal precision into one field element.
pub fn encode_vector(coords: &[PadicInt]) -> Result<UnramifiedElement, PadicError> {
    assert!(!coords.is_empty() && coords.len() <= 64, "dim must be 1..=64");
    let m = coords[0].precision();
    for c in coords {
        if c.precision() != m {
            return Err(PadicError::MixedPrecision(m, c.precision()));
        }
    }
    let mut digits = vec![0u64; m as usize];
    for (i, c) in coords.iter().enumerate() {
        let r = c.residue();
        for (level, slot) in digits.iter_mut().enumerate() {
            *slot |= ((r >> level) & 1) << i;
        }
    }
    Ok(UnramifiedElement {
        dim: coords.len() as u32,
        digits,
    })
}

/// Recovers the coordinate residues from the digit tuples.
pub fn decode_vector(elem: &UnramifiedElement) -> Vec<PadicInt> {
    let m = elem.precision();
    assert!(m >= 1, "cannot decode an element with no digits");
    let mut out = Vec::with_capacity(elem.dim as usize);
    for i in 0..elem.dim {
        let mut r = 0u64;
        for (level, d) in elem.digits.iter().enumerate() {
            r |= ((d >> i) & 1) << level;
        }
        out.push(PadicInt::new(r & mask(m), m));
    }
    out
}

/// Level of the first digit tuple where the two elements differ. `None`
/// means they agree to full shared precision: the distance is below
/// resolution and counts as zero.
pub fn dist_level(a: &UnramifiedElement, b: &UnramifiedElement) -> Result<Option<u32>, PadicError> {
    if a.dim != b.dim {
        return Err(PadicError::ShapeMismatch {
            expected: a.dim as usize,
            got: b.dim as usize,
        });
    }
    let shared = a.precision().min(b.precision());
    for level in 0..shared as usize {
        if a.digits[level] != b.digits[level] {
            return Ok(Some(level as u32));
        }
    }
    Ok(None)
}

/// Exact rational 2^{-exp}.
pub fn pow2_inv(exp: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << exp)
}

/// Ultrametric distance 2^{-level of first differing digit}, or 0 below
/// resolution.
pub fn dist_k(a: &UnramifiedElement, b: &UnramifiedElement) -> Result<BigRational, PadicError> {
    Ok(match dist_level(a, b)? {
        Some(level) => pow2_inv(level as u64),
        None => BigRational::zero(),
    })
}

/// Haar measure of a ball of digit depth `depth` in the degree-`dim`
/// extension, normalised so the full ring of integers has measure 1. The
/// residue field has 2^dim elements, so each extra digit level divides the
/// measure by 2^dim.
pub fn ball_measure(depth: u32, dim: u32) -> BigRational {
    pow2_inv(depth as u64 * dim as u64)
}
