//! Sparse multivariate polynomials over Z/2^m and over F2.
//!
//! Terms are kept in a BTreeMap keyed by exponent vectors under graded
//! reverse lexicographic order, so iteration order is canonical and the last
//! key is the leading monomial. Zero coefficients are never stored. The
//! Z/2^m variant tracks one precision for the whole polynomial; exact
//! division by a 2-power content lowers that precision, mirroring scalar
//! behaviour.

use crate::padic::{mask, PadicInt};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MPolyError {
    #[error("variable count mismatch: {0} vs {1}")]
    NvarsMismatch(usize, usize),
    #[error("evaluation point has {got} coordinates, polynomial has {expected} variables")]
    PointShape { expected: usize, got: usize },
    #[error("the zero polynomial has no content")]
    ZeroPolynomial,
}

/// Exponent vector, ordered by total degree and then reverse lexicographic
/// comparison: among equal degrees the monomial with the smaller exponent at
/// the last differing variable is the larger one.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mono(Vec<u8>);

impl Mono {
    pub fn one(nvars: usize) -> Self {
        Mono(vec![0; nvars])
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Mono(e)
    }

    pub fn from_exps(exps: Vec<u8>) -> Self {
        Mono(exps)
    }

    pub fn exps(&self) -> &[u8] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        debug_assert_eq!(self.0.len(), other.0.len());
        Mono(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(&a, &b)| a <= b)
    }

    /// other / self, assuming divisibility.
    pub fn div_into(&self, other: &Mono) -> Mono {
        debug_assert!(self.divides(other));
        Mono(
            other
                .0
                .iter()
                .zip(self.0.iter())
                .map(|(&b, &a)| b - a)
                .collect(),
        )
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a.max(b))
                .collect(),
        )
    }

    /// True when lcm(a, b) == a * b, i.e. supports are disjoint.
    pub fn coprime(&self, other: &Mono) -> bool {
        self.0
            .iter()
            .zip(other.0.iter())
            .all(|(&a, &b)| a == 0 || b == 0)
    }

    /// Drops variable `var`, substituting 1 for it.
    fn without_var(&self, var: usize) -> Mono {
        let mut e = self.0.clone();
        e.remove(var);
        Mono(e)
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        debug_assert_eq!(self.0.len(), other.0.len());
        let d = self.degree().cmp(&other.degree());
        if d != std::cmp::Ordering::Equal {
            return d;
        }
        for i in (0..self.0.len()).rev() {
            if self.0[i] != other.0[i] {
                return other.0[i].cmp(&self.0[i]);
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn fmt_mono(m: &Mono, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    let mut first = true;
    for (i, &e) in m.exps().iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write!(f, "x{}", i + 1)?;
        if e > 1 {
            write!(f, "^{}", e)?;
        }
    }
    if first {
        write!(f, "1")?;
    }
    Ok(())
}

/// Polynomial over Z/2^precision in `nvars` variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct MPoly {
    nvars: usize,
    precision: u32,
    terms: BTreeMap<Mono, u64>,
}

impl MPoly {
    pub fn zero(nvars: usize, precision: u32) -> Self {
        assert!(precision >= 1 && precision <= crate::padic::MAX_PRECISION);
        MPoly {
            nvars,
            precision,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: PadicInt, nvars: usize) -> Self {
        let mut p = MPoly::zero(nvars, c.precision());
        p.insert(Mono::one(nvars), c.residue());
        p
    }

    pub fn var(i: usize, nvars: usize, precision: u32) -> Self {
        let mut p = MPoly::zero(nvars, precision);
        p.insert(Mono::var(i, nvars), 1);
        p
    }

    /// Linear form sum coeffs[i] * x_{i+1}.
    pub fn linear_form(coeffs: &[PadicInt], precision: u32) -> Self {
        let n = coeffs.len();
        let mut p = MPoly::zero(n, precision);
        for (i, c) in coeffs.iter().enumerate() {
            debug_assert_eq!(c.precision(), precision);
            p.insert(Mono::var(i, n), c.residue());
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Mono, u64)>>(
        nvars: usize,
        precision: u32,
        terms: I,
    ) -> Self {
        let mut p = MPoly::zero(nvars, precision);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars);
            let cur = p.terms.get(&m).copied().unwrap_or(0);
            p.insert(m, cur.wrapping_add(c));
        }
        p
    }

    fn insert(&mut self, m: Mono, c: u64) {
        let c = c & mask(self.precision);
        if c != 0 {
            self.terms.insert(m, c);
        } else {
            self.terms.remove(&m);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, PadicInt)> {
        let prec = self.precision;
        self.terms.iter().map(move |(m, &c)| (m, PadicInt::new(c, prec)))
    }

    pub fn coefficient(&self, m: &Mono) -> PadicInt {
        PadicInt::new(self.terms.get(m).copied().unwrap_or(0), self.precision)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys();
        match it.next() {
            None => true,
            Some(first) => {
                let d = first.degree();
                it.all(|m| m.degree() == d)
            }
        }
    }

    fn binop<F: Fn(u64, u64) -> u64>(&self, other: &MPoly, f: F) -> MPoly {
        assert_eq!(self.nvars, other.nvars, "nvars mismatch");
        let precision = self.precision.min(other.precision);
        let mut out = MPoly::zero(self.nvars, precision);
        let keys: BTreeSet<&Mono> = self.terms.keys().chain(other.terms.keys()).collect();
        for k in keys {
            let a = self.terms.get(k).copied().unwrap_or(0);
            let b = other.terms.get(k).copied().unwrap_or(0);
            out.insert(k.clone(), f(a, b));
        }
        out
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        self.binop(other, |a, b| a.wrapping_add(b))
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.binop(other, |a, b| a.wrapping_sub(b))
    }

    pub fn neg(&self) -> MPoly {
        let mut out = MPoly::zero(self.nvars, self.precision);
        for (m, &c) in &self.terms {
            out.insert(m.clone(), 0u64.wrapping_sub(c));
        }
        out
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars, "nvars mismatch");
        let precision = self.precision.min(other.precision);
        let mut acc: BTreeMap<Mono, u64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                let m = ma.mul(mb);
                let e = acc.entry(m).or_insert(0);
                *e = e.wrapping_add(ca.wrapping_mul(cb));
            }
        }
        let mut out = MPoly::zero(self.nvars, precision);
        for (m, c) in acc {
            out.insert(m, c);
        }
        out
    }

    pub fn scale(&self, s: PadicInt) -> MPoly {
        let precision = self.precision.min(s.precision());
        let mut out = MPoly::zero(self.nvars, precision);
        for (m, &c) in &self.terms {
            out.insert(m.clone(), c.wrapping_mul(s.residue()));
        }
        out
    }

    pub fn eval(&self, point: &[PadicInt]) -> Result<PadicInt, MPolyError> {
        if point.len() != self.nvars {
            return Err(MPolyError::PointShape {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut precision = self.precision;
        for p in point {
            precision = precision.min(p.precision());
        }
        let msk = mask(precision);
        let mut acc: u64 = 0;
        for (m, &c) in &self.terms {
            let mut t = c;
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    t = t.wrapping_mul(point[i].residue());
                }
            }
            acc = acc.wrapping_add(t);
        }
        Ok(PadicInt::new(acc & msk, precision))
    }

    /// Partial derivatives with respect to every variable.
    pub fn gradient(&self) -> Vec<MPoly> {
        (0..self.nvars)
            .map(|i| {
                let mut out = MPoly::zero(self.nvars, self.precision);
                for (m, &c) in &self.terms {
                    let e = m.exps()[i];
                    if e == 0 {
                        continue;
                    }
                    let mut exps = m.exps().to_vec();
                    exps[i] -= 1;
                    let cur = out
                        .terms
                        .get(&Mono::from_exps(exps.clone()))
                        .copied()
                        .unwrap_or(0);
                    out.insert(
                        Mono::from_exps(exps),
                        cur.wrapping_add(c.wrapping_mul(e as u64)),
                    );
                }
                out
            })
            .collect()
    }

    pub fn reduce_mod2(&self) -> MPolyF2 {
        let mut terms = BTreeSet::new();
        for (m, &c) in &self.terms {
            if c & 1 == 1 {
                terms.insert(m.clone());
            }
        }
        MPolyF2 {
            nvars: self.nvars,
            terms,
        }
    }

    /// Largest s with 2^s dividing every coefficient; `None` for zero.
    pub fn content(&self) -> Option<u32> {
        self.terms
            .values()
            .map(|&c| c.trailing_zeros())
            .min()
    }

    /// Divides off the 2-power content. The returned polynomial is known to
    /// `precision - s` digits only.
    pub fn content_normalize(&self) -> Result<(MPoly, u32), MPolyError> {
        let s = self.content().ok_or(MPolyError::ZeroPolynomial)?;
        if s == 0 {
            return Ok((self.clone(), 0));
        }
        debug_assert!(s < self.precision);
        let mut out = MPoly::zero(self.nvars, self.precision - s);
        for (m, &c) in &self.terms {
            out.insert(m.clone(), c >> s);
        }
        Ok((out, s))
    }

    /// Substitutes 1 for variable `var` and renumbers the remaining
    /// variables, merging any terms that collide.
    pub fn specialize(&self, var: usize) -> MPoly {
        assert!(var < self.nvars);
        let mut out = MPoly::zero(self.nvars - 1, self.precision);
        for (m, &c) in &self.terms {
            let nm = m.without_var(var);
            let cur = out.terms.get(&nm).copied().unwrap_or(0);
            out.insert(nm, cur.wrapping_add(c));
        }
        out
    }

    pub fn truncate(&self, m: u32) -> MPoly {
        assert!(m >= 1 && m <= self.precision);
        let mut out = MPoly::zero(self.nvars, m);
        for (mono, &c) in &self.terms {
            out.insert(mono.clone(), c);
        }
        out
    }
}

impl std::fmt::Display for MPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, &c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c != 1 || m.is_one() {
                write!(f, "{}", c)?;
                if !m.is_one() {
                    write!(f, "*")?;
                }
            }
            if !m.is_one() {
                fmt_mono(m, f)?;
            }
        }
        Ok(())
    }
}

/// Polynomial over F2: the set of monomials with coefficient 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct MPolyF2 {
    nvars: usize,
    terms: BTreeSet<Mono>,
}

impl MPolyF2 {
    pub fn zero(nvars: usize) -> Self {
        MPolyF2 {
            nvars,
            terms: BTreeSet::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        let mut t = BTreeSet::new();
        t.insert(Mono::one(nvars));
        MPolyF2 { nvars, terms: t }
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        let mut t = BTreeSet::new();
        t.insert(Mono::var(i, nvars));
        MPolyF2 { nvars, terms: t }
    }

    pub fn from_monomials<I: IntoIterator<Item = Mono>>(nvars: usize, monos: I) -> Self {
        let mut p = MPolyF2::zero(nvars);
        for m in monos {
            assert_eq!(m.nvars(), nvars);
            p.toggle(m);
        }
        p
    }

    fn toggle(&mut self, m: Mono) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().next().unwrap().is_one()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Mono> {
        self.terms.iter()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|m| m.degree()).max()
    }

    /// Largest monomial in the graded reverse lexicographic order.
    pub fn leading_monomial(&self) -> Option<&Mono> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, other: &MPolyF2) -> MPolyF2 {
        assert_eq!(self.nvars, other.nvars, "nvars mismatch");
        let mut out = self.clone();
        for m in &other.terms {
            out.toggle(m.clone());
        }
        out
    }

    pub fn mul(&self, other: &MPolyF2) -> MPolyF2 {
        assert_eq!(self.nvars, other.nvars, "nvars mismatch");
        let mut out = MPolyF2::zero(self.nvars);
        for a in &self.terms {
            for b in &other.terms {
                out.toggle(a.mul(b));
            }
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono) -> MPolyF2 {
        let mut out = MPolyF2::zero(self.nvars);
        for t in &self.terms {
            out.terms.insert(t.mul(m));
        }
        out
    }

    pub fn square(&self) -> MPolyF2 {
        // Frobenius: squaring is monomial-wise over F2.
        let mut out = MPolyF2::zero(self.nvars);
        for t in &self.terms {
            out.terms.insert(t.mul(t));
        }
        out
    }

    pub fn eval(&self, point: &[u8]) -> Result<u8, MPolyError> {
        if point.len() != self.nvars {
            return Err(MPolyError::PointShape {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = 0u8;
        'terms: for m in &self.terms {
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 && point[i] & 1 == 0 {
                    continue 'terms;
                }
            }
            acc ^= 1;
        }
        Ok(acc)
    }

    pub fn specialize(&self, var: usize) -> MPolyF2 {
        assert!(var < self.nvars);
        let mut out = MPolyF2::zero(self.nvars - 1);
        for m in &self.terms {
            out.toggle(m.without_var(var));
        }
        out
    }
}

impl std::fmt::Display for MPolyF2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            fmt_mono(m, f)?;
        }
        Ok(())
    }
}
