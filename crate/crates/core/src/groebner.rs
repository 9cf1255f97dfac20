//! Buchberger's algorithm over F2 under graded reverse lexicographic order.
//!
//! Coefficient arithmetic is XOR, so every polynomial is monic and the
//! S-polynomial of two basis elements needs no coefficient bookkeeping.
//! Bases returned by `buchberger` are reduced: no leading monomial divides
//! another and every element is in normal form with respect to the rest.

use crate::mpoly::{Mono, MPolyF2};
use std::collections::BTreeSet;

/// Remainder of `f` on division by `basis`. Every term of the result is
/// divisible by no leading monomial of the basis.
pub fn normal_form(f: &MPolyF2, basis: &[MPolyF2]) -> MPolyF2 {
    let nvars = f.nvars();
    let mut p = f.clone();
    let mut r = MPolyF2::zero(nvars);
    while let Some(lead) = p.leading_monomial().cloned() {
        let mut reduced = false;
        for g in basis {
            if let Some(lm) = g.leading_monomial() {
                if lm.divides(&lead) {
                    p = p.add(&g.mul_mono(&lm.div_into(&lead)));
                    reduced = true;
                    break;
                }
            }
        }
        if !reduced {
            // move the irreducible leading term over to the remainder
            r = r.add(&MPolyF2::from_monomials(nvars, [lead.clone()]));
            p = p.add(&MPolyF2::from_monomials(nvars, [lead]));
        }
    }
    r
}

fn s_polynomial(f: &MPolyF2, g: &MPolyF2) -> MPolyF2 {
    let lf = f.leading_monomial().unwrap();
    let lg = g.leading_monomial().unwrap();
    let l = lf.lcm(lg);
    f.mul_mono(&lf.div_into(&l)).add(&g.mul_mono(&lg.div_into(&l)))
}

/// Reduced Groebner basis of the ideal generated by `gens`.
pub fn buchberger(gens: &[MPolyF2]) -> Vec<MPolyF2> {
    let nvars = match gens.first() {
        Some(g) => g.nvars(),
        None => return Vec::new(),
    };
    let mut basis: Vec<MPolyF2> = Vec::new();
    for g in gens {
        assert_eq!(g.nvars(), nvars, "nvars mismatch");
        let r = normal_form(g, &basis);
        if !r.is_zero() {
            basis.push(r);
        }
    }

    let mut pairs: BTreeSet<(u32, usize, usize)> = BTreeSet::new();
    let enqueue = |pairs: &mut BTreeSet<(u32, usize, usize)>, basis: &[MPolyF2], i: usize, j: usize| {
        let li = basis[i].leading_monomial().unwrap();
        let lj = basis[j].leading_monomial().unwrap();
        // disjoint leading supports reduce to zero, skip them outright
        if !li.coprime(lj) {
            pairs.insert((li.lcm(lj).degree(), i, j));
        }
    };
    for j in 1..basis.len() {
        for i in 0..j {
            enqueue(&mut pairs, &basis, i, j);
        }
    }

    while let Some(&(d, i, j)) = pairs.iter().next() {
        pairs.remove(&(d, i, j));
        let s = s_polynomial(&basis[i], &basis[j]);
        let r = normal_form(&s, &basis);
        if r.is_zero() {
            continue;
        }
        basis.push(r);
        let j = basis.len() - 1;
        for i in 0..j {
            enqueue(&mut pairs, &basis, i, j);
        }
    }

    reduce_basis(basis)
}

fn reduce_basis(mut basis: Vec<MPolyF2>) -> Vec<MPolyF2> {
    // drop elements whose leading monomial another element's divides
    let mut keep: Vec<MPolyF2> = Vec::new();
    'outer: for (i, g) in basis.iter().enumerate() {
        let lg = g.leading_monomial().unwrap();
        for (j, h) in basis.iter().enumerate() {
            if i == j {
                continue;
            }
            let lh = h.leading_monomial().unwrap();
            if lh.divides(lg) && (lh != lg || j < i) {
                continue 'outer;
            }
        }
        keep.push(g.clone());
    }
    basis = keep;

    // tail-reduce each element against the others until stable
    loop {
        let mut changed = false;
        for i in 0..basis.len() {
            let others: Vec<MPolyF2> = basis
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, g)| g.clone())
                .collect();
            let r = normal_form(&basis[i], &others);
            if r != basis[i] {
                debug_assert!(!r.is_zero());
                basis[i] = r;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    basis.sort();
    basis
}

/// Zero-dimensionality test by the staircase criterion: the quotient ring is
/// finite iff for every variable some leading monomial is a pure power of
/// it. The unit ideal (empty variety) counts as zero dimensional.
pub fn is_zero_dimensional(basis: &[MPolyF2]) -> bool {
    if basis.iter().any(|g| g.is_one()) {
        return true;
    }
    if basis.is_empty() {
        return false;
    }
    let nvars = basis[0].nvars();
    (0..nvars).all(|v| {
        basis.iter().any(|g| {
            let lm = g.leading_monomial().unwrap();
            lm.exps()[v] > 0 && lm.exps().iter().enumerate().all(|(i, &e)| i == v || e == 0)
        })
    })
}

/// Number of standard monomials (monomials outside the leading-term ideal),
/// or `None` when that staircase is infinite.
pub fn staircase_count(basis: &[MPolyF2]) -> Option<u64> {
    if !is_zero_dimensional(basis) {
        return None;
    }
    let nvars = basis[0].nvars();
    let leads: Vec<&Mono> = basis.iter().map(|g| g.leading_monomial().unwrap()).collect();
    // per-variable exponent bound: the pure power x_v^k caps exponents at k
    let mut caps = vec![0u8; nvars];
    for v in 0..nvars {
        for lm in &leads {
            if lm.exps()[v] > 0 && lm.exps().iter().enumerate().all(|(i, &e)| i == v || e == 0) {
                caps[v] = lm.exps()[v];
            }
        }
    }
    let mut count = 0u64;
    let mut exps = vec![0u8; nvars];
    loop {
        let m = Mono::from_exps(exps.clone());
        if !leads.iter().any(|lm| lm.divides(&m)) {
            count += 1;
        }
        // odometer over the box [0, caps)
        let mut v = 0;
        loop {
            if v == nvars {
                return Some(count);
            }
            exps[v] += 1;
            if exps[v] < caps[v].max(1) {
                break;
            }
            exps[v] = 0;
            v += 1;
        }
    }
}

/// Common zeros of `polys` in F2^nvars by exhaustive enumeration. Points
/// come out in counting order with the first variable as least significant
/// bit.
pub fn f2_points(polys: &[MPolyF2], nvars: usize) -> Vec<Vec<u8>> {
    assert!(nvars <= 20, "exhaustive search over F2^{} is too large", nvars);
    let mut out = Vec::new();
    for word in 0u32..(1u32 << nvars) {
        let point: Vec<u8> = (0..nvars).map(|i| ((word >> i) & 1) as u8).collect();
        if polys.iter().all(|p| p.eval(&point).unwrap() == 0) {
            out.push(point);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpoly::Mono;

    fn f2(nvars: usize, monos: &[&[u8]]) -> MPolyF2 {
        MPolyF2::from_monomials(nvars, monos.iter().map(|e| Mono::from_exps(e.to_vec())))
    }

    #[test]
    fn division_leaves_irreducible_remainder() {
        // f = x1^2 x2 + x2^2, basis {x1^2 + x2}
        let f = f2(2, &[&[2, 1], &[0, 2]]);
        let g = f2(2, &[&[2, 0], &[0, 1]]);
        let r = normal_form(&f, &[g.clone()]);
        // x1^2 x2 -> x2^2, cancels the other term
        assert!(r.is_zero());
        let h = f2(2, &[&[2, 0], &[0, 0]]);
        let r2 = normal_form(&h, &[g]);
        assert_eq!(r2, f2(2, &[&[0, 1], &[0, 0]]));
    }

    #[test]
    fn basis_of_simple_ideal() {
        // {x1 + x2, x2^2 + 1} is already a reduced basis
        let gens = [f2(2, &[&[1, 0], &[0, 1]]), f2(2, &[&[0, 2], &[0, 0]])];
        let gb = buchberger(&gens);
        assert_eq!(gb.len(), 2);
        assert!(is_zero_dimensional(&gb));
        assert_eq!(staircase_count(&gb), Some(2));
        let pts = f2_points(&gb, 2);
        assert_eq!(pts, vec![vec![1, 1]]);
    }

    #[test]
    fn unit_ideal_collapses_to_one() {
        let gens = [f2(1, &[&[1], &[0]]), f2(1, &[&[1]])];
        let gb = buchberger(&gens);
        assert_eq!(gb.len(), 1);
        assert!(gb[0].is_one());
        assert!(is_zero_dimensional(&gb));
        assert_eq!(staircase_count(&gb), Some(0));
        assert!(f2_points(&gb, 1).is_empty());
    }

    #[test]
    fn positive_dimension_detected() {
        let gens = [f2(3, &[&[1, 1, 0]])];
        let gb = buchberger(&gens);
        assert!(!is_zero_dimensional(&gb));
        assert_eq!(staircase_count(&gb), None);
    }

    #[test]
    fn spairs_of_output_reduce_to_zero() {
        // nontrivial S-pair: {x1 x2 + x3^2, x1 x3 + x2} forces new elements
        let gens = [f2(3, &[&[1, 1, 0], &[0, 0, 2]]), f2(3, &[&[1, 0, 1], &[0, 1, 0]])];
        let gb = buchberger(&gens);
        for i in 0..gb.len() {
            for j in (i + 1)..gb.len() {
                let lf = gb[i].leading_monomial().unwrap();
                let lg = gb[j].leading_monomial().unwrap();
                let l = lf.lcm(lg);
                let s = gb[i]
                    .mul_mono(&lf.div_into(&l))
                    .add(&gb[j].mul_mono(&lg.div_into(&l)));
                assert!(normal_form(&s, &gb).is_zero());
            }
        }
        // the inputs lie in the ideal the basis generates
        for g in &gens {
            assert!(normal_form(g, &gb).is_zero());
        }
    }

    #[test]
    fn reduced_basis_is_canonical() {
        let gens_a = [f2(2, &[&[1, 0], &[0, 1]]), f2(2, &[&[2, 0], &[0, 0]])];
        let gens_b = [f2(2, &[&[2, 0], &[0, 0]]), f2(2, &[&[1, 0], &[0, 1]])];
        assert_eq!(buchberger(&gens_a), buchberger(&gens_b));
    }

    #[test]
    fn normal_form_is_idempotent() {
        let gens = [f2(3, &[&[1, 1, 0], &[0, 0, 2]]), f2(3, &[&[1, 0, 1], &[0, 1, 0]])];
        let gb = buchberger(&gens);
        let f = f2(3, &[&[3, 1, 1], &[1, 0, 0], &[0, 0, 1]]);
        let r = normal_form(&f, &gb);
        assert_eq!(normal_form(&r, &gb), r);
    }
}
