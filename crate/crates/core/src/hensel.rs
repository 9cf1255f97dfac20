//! Unit-pivot linear algebra over Z/2^m and Newton lifting of approximate
//! roots.
//!
//! Everything here leans on one fact: an element of Z/2^m is invertible iff
//! it is odd. Elimination therefore only ever pivots on odd entries, and a
//! matrix that cannot supply a full set of odd pivots is rejected rather
//! than factored, since dividing by an even number would silently lose
//! digits.

use crate::mpoly::MPoly;
use crate::padic::PadicInt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HenselError {
    #[error("only {0} unit pivots found, matrix does not have full row rank over Z/2^m")]
    RankDeficient(usize),
    #[error("jacobian of the selected subsystem is singular mod 2")]
    SingularJacobian,
    #[error("no square subsystem has an invertible jacobian mod 2 at the start point")]
    NoLiftableSubsystem,
    #[error("residue search frontier grew to {0} points, root is not isolated enough")]
    FiberOverflow(usize),
}

/// Nullspace basis in staircase form: vector `t` has a 1 in free column `t`
/// and zeros in the other free columns.
#[derive(Debug, Clone)]
pub struct StaircaseBasis {
    pub vectors: Vec<Vec<PadicInt>>,
    pub pivot_cols: Vec<usize>,
    pub free_cols: Vec<usize>,
    pub precision: u32,
}

/// Basis of the right nullspace of `rows`, found by Gauss-Jordan
/// elimination on odd pivots only. Columns are scanned left to right and
/// candidate pivot rows top down, so the pivot set is deterministic.
/// Fails if any row cannot be completed to a unit pivot, including rows
/// that vanish entirely.
pub fn nullspace_staircase(rows: &[Vec<PadicInt>]) -> Result<StaircaseBasis, HenselError> {
    let nrows = rows.len();
    assert!(nrows > 0);
    let ncols = rows[0].len();
    let precision = rows[0][0].precision();
    let mut a: Vec<Vec<PadicInt>> = rows
        .iter()
        .map(|r| {
            assert_eq!(r.len(), ncols, "ragged matrix");
            r.iter()
                .map(|x| {
                    assert_eq!(x.precision(), precision, "mixed precision row");
                    *x
                })
                .collect()
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut pivot_row_of_col = vec![usize::MAX; ncols];
    let mut next_row = 0;
    for col in 0..ncols {
        if next_row == nrows {
            break;
        }
        let Some(r) = (next_row..nrows).find(|&r| a[r][col].is_unit()) else {
            continue;
        };
        a.swap(next_row, r);
        let inv = a[next_row][col].inv_unit().unwrap();
        for c in 0..ncols {
            a[next_row][c] = a[next_row][c] * inv;
        }
        for r in 0..nrows {
            if r != next_row && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in 0..ncols {
                    a[r][c] = a[r][c] - f * a[next_row][c];
                }
            }
        }
        pivot_row_of_col[col] = next_row;
        pivot_cols.push(col);
        next_row += 1;
    }
    if next_row < nrows {
        return Err(HenselError::RankDeficient(next_row));
    }

    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();
    let vectors = free_cols
        .iter()
        .map(|&fc| {
            (0..ncols)
                .map(|c| {
                    if c == fc {
                        PadicInt::one(precision)
                    } else if pivot_row_of_col[c] != usize::MAX {
                        -a[pivot_row_of_col[c]][fc]
                    } else {
                        PadicInt::zero(precision)
                    }
                })
                .collect()
        })
        .collect();

    Ok(StaircaseBasis {
        vectors,
        pivot_cols,
        free_cols,
        precision,
    })
}

fn det_mod2(rows: &[Vec<u8>]) -> u8 {
    let n = rows.len();
    let mut m: Vec<u32> = rows
        .iter()
        .map(|r| r.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (((b & 1) as u32) << i)))
        .collect();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| (m[r] >> col) & 1 == 1) else {
            return 0;
        };
        m.swap(col, p);
        for r in 0..n {
            if r != col && (m[r] >> col) & 1 == 1 {
                m[r] ^= m[col];
            }
        }
    }
    1
}

/// Picks the subsystem to lift with: `nvars` polynomials whose Jacobian at
/// the given mod-2 point is invertible. Candidates are ordered by total
/// degree and then by their index in `system`; polynomials whose whole
/// gradient vanishes mod 2 at the point can never contribute a usable row
/// and are dropped before the search. Returns indices into `system` for the
/// first combination, in that ordering, whose Jacobian is a unit.
pub fn select_subsystem(system: &[MPoly], point_mod2: &[u8]) -> Option<Vec<usize>> {
    let nvars = point_mod2.len();
    let grad_rows: Vec<Vec<u8>> = system
        .iter()
        .map(|f| {
            f.gradient()
                .iter()
                .map(|g| g.reduce_mod2().eval(point_mod2).unwrap())
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..system.len())
        .filter(|&i| grad_rows[i].iter().any(|&b| b == 1))
        .collect();
    order.sort_by_key(|&i| (system[i].degree().unwrap_or(0), i));

    if order.len() < nvars {
        return None;
    }
    let mut choice = vec![0usize; nvars];
    // lexicographic combinations over `order`
    fn search(
        order: &[usize],
        grad_rows: &[Vec<u8>],
        nvars: usize,
        start: usize,
        depth: usize,
        choice: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if depth == nvars {
            let rows: Vec<Vec<u8>> = choice.iter().map(|&i| grad_rows[i].clone()).collect();
            if det_mod2(&rows) == 1 {
                return Some(choice.clone());
            }
            return None;
        }
        for k in start..order.len() {
            choice[depth] = order[k];
            if let Some(found) = search(order, grad_rows, nvars, k + 1, depth + 1, choice) {
                return Some(found);
            }
        }
        None
    }
    search(&order, &grad_rows, nvars, 0, 0, &mut choice)
}

/// Solves J x = b over Z/2^precision; `None` when J has no full set of odd
/// pivots.
fn solve_unit(j: &[Vec<PadicInt>], b: &[PadicInt]) -> Option<Vec<PadicInt>> {
    let n = b.len();
    let mut aug: Vec<Vec<PadicInt>> = (0..n)
        .map(|r| {
            let mut row = j[r].clone();
            row.push(b[r]);
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| aug[r][col].is_unit())?;
        aug.swap(col, p);
        let inv = aug[col][col].inv_unit().unwrap();
        for c in col..=n {
            aug[col][c] = aug[col][c] * inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col];
                for c in col..=n {
                    aug[r][c] = aug[r][c] - f * aug[col][c];
                }
            }
        }
    }
    Some((0..n).map(|r| aug[r][n]).collect())
}

#[derive(Debug, Clone)]
pub struct LiftReport {
    pub solution: Vec<PadicInt>,
    /// Indices into the system of the equations that drove the iteration.
    pub subsystem: Vec<usize>,
    /// Minimum 2-adic valuation of the subsystem residual after each Newton
    /// step, clamped to the working precision.
    pub step_valuations: Vec<u32>,
}

fn residual_valuation(vals: &[PadicInt], precision: u32) -> u32 {
    vals.iter()
        .map(|v| v.val2().unwrap_or(precision))
        .min()
        .unwrap_or(precision)
}

/// Newton iteration x <- x - J(x)^{-1} F(x) on the subsystem of `system`
/// selected by `subsystem`, starting from a mod-2 root. Valuation of the
/// residual doubles each step, so `ceil(log2 target)` + 1 steps suffice for
/// an exact root mod 2^target.
pub fn newton_lift(
    system: &[MPoly],
    subsystem: &[usize],
    start_mod2: &[u8],
    target_precision: u32,
) -> Result<LiftReport, HenselError> {
    let n = start_mod2.len();
    assert_eq!(subsystem.len(), n, "need as many equations as unknowns");
    let p = target_precision;
    let polys: Vec<&MPoly> = subsystem.iter().map(|&i| &system[i]).collect();
    let grads: Vec<Vec<MPoly>> = polys.iter().map(|f| f.gradient()).collect();

    let mut x: Vec<PadicInt> = start_mod2
        .iter()
        .map(|&b| PadicInt::new((b & 1) as u64, p))
        .collect();

    let eval_f = |x: &[PadicInt]| -> Vec<PadicInt> {
        polys.iter().map(|f| f.eval(x).unwrap()).collect()
    };
    debug_assert!(residual_valuation(&eval_f(&x), p) >= 1, "start is not a root mod 2");

    let steps = if p <= 1 { 1 } else { p.next_power_of_two().trailing_zeros() + 1 };
    let mut step_valuations = Vec::with_capacity(steps as usize);
    for step in 0..steps {
        let jac: Vec<Vec<PadicInt>> = grads
            .iter()
            .map(|row| row.iter().map(|g| g.eval(&x).unwrap()).collect())
            .collect();
        let fx = eval_f(&x);
        let delta = solve_unit(&jac, &fx).ok_or(HenselError::SingularJacobian)?;
        for i in 0..n {
            x[i] = x[i] - delta[i];
        }
        let val = residual_valuation(&eval_f(&x), p);
        debug_assert!(val >= (1u32 << (step + 1).min(31)).min(p));
        step_valuations.push(val);
        if val >= p {
            break;
        }
    }

    Ok(LiftReport {
        solution: x,
        subsystem: subsystem.to_vec(),
        step_valuations,
    })
}

/// Subsystem selection and Newton iteration in one call: picks the square
/// subsystem of `system` via `select_subsystem` and lifts the mod-2 root.
pub fn lift_point(
    system: &[MPoly],
    start_mod2: &[u8],
    target_precision: u32,
) -> Result<LiftReport, HenselError> {
    let subsystem =
        select_subsystem(system, start_mod2).ok_or(HenselError::NoLiftableSubsystem)?;
    newton_lift(system, &subsystem, start_mod2, target_precision)
}

/// One root found by `lift_point_bfs`, with how it was reached.
#[derive(Debug, Clone)]
pub struct AdaptiveLift {
    pub solution: Vec<PadicInt>,
    /// Equations that drove the Newton tail; empty when the residue search
    /// walked all the way to the target on its own.
    pub subsystem: Vec<usize>,
    /// Residual valuation of the subsystem after each Newton step.
    pub step_valuations: Vec<u32>,
    /// Residue bits fixed by search before Newton took over.
    pub seed_bits: u32,
    /// 2-adic valuation of the Jacobian determinant at the Newton seed.
    pub jacobian_valuation: u32,
}

fn det_padic(a: &[Vec<PadicInt>]) -> PadicInt {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut acc = PadicInt::zero(a[0][0].precision());
    for r in 0..n {
        let minor: Vec<Vec<PadicInt>> = (0..n)
            .filter(|&i| i != r)
            .map(|i| a[i][1..].to_vec())
            .collect();
        let term = a[r][0] * det_padic(&minor);
        acc = if r % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

fn adjugate(a: &[Vec<PadicInt>]) -> Vec<Vec<PadicInt>> {
    let n = a.len();
    if n == 1 {
        return vec![vec![PadicInt::one(a[0][0].precision())]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let minor: Vec<Vec<PadicInt>> = (0..n)
                        .filter(|&r| r != j)
                        .map(|r| (0..n).filter(|&c| c != i).map(|c| a[r][c]).collect())
                        .collect();
                    let d = det_padic(&minor);
                    if (i + j) % 2 == 0 {
                        d
                    } else {
                        -d
                    }
                })
                .collect()
        })
        .collect()
}

/// Shortlist size for the subset search in `select_by_valuation`. Rows are
/// ranked by their best entry valuation, so the determinant-minimizing
/// subset is almost always inside a short prefix.
const VALUATION_SHORTLIST: usize = 12;

/// Square subsystem whose Jacobian determinant at the definite point has
/// the smallest 2-adic valuation, searched over subsets of the shortlist.
/// `grad_vals` holds one evaluated gradient row per equation. Returns the
/// chosen row indices and the determinant valuation.
fn select_by_valuation(grad_vals: &[Vec<PadicInt>], nvars: usize) -> Option<(Vec<usize>, u32)> {
    let row_val = |r: &[PadicInt]| {
        r.iter()
            .map(|x| x.val2().unwrap_or(x.precision()))
            .min()
            .unwrap_or(0)
    };
    let mut order: Vec<usize> = (0..grad_vals.len())
        .filter(|&i| grad_vals[i].iter().any(|x| !x.is_zero()))
        .collect();
    if order.len() < nvars {
        return None;
    }
    order.sort_by_key(|&i| (row_val(&grad_vals[i]), i));
    order.truncate(VALUATION_SHORTLIST.max(nvars));

    let mut best: Option<(Vec<usize>, u32)> = None;
    let mut choice = vec![0usize; nvars];
    fn search(
        order: &[usize],
        grad_vals: &[Vec<PadicInt>],
        nvars: usize,
        start: usize,
        depth: usize,
        choice: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, u32)>,
    ) {
        if depth == nvars {
            let rows: Vec<Vec<PadicInt>> =
                choice.iter().map(|&i| grad_vals[i].clone()).collect();
            if let Some(v) = det_padic(&rows).val2() {
                if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
                    let mut idx = choice.clone();
                    idx.sort_unstable();
                    *best = Some((idx, v));
                }
            }
            return;
        }
        for k in start..order.len() {
            choice[depth] = order[k];
            search(order, grad_vals, nvars, k + 1, depth + 1, choice, best);
        }
    }
    search(&order, grad_vals, nvars, 0, 0, &mut choice, &mut best);
    best
}

/// Newton iteration on a subsystem whose Jacobian determinant has
/// valuation `w` at the seed. Each step solves J d = F through the
/// adjugate and divides by the determinant, which is exact because the
/// residual valuation stays strictly above 2w. The residual valuation
/// obeys v' >= 2(v - w), so it still at least doubles relative to the
/// offset w; iteration stops once the residual vanishes mod 2^target.
/// Returns None when the guarantee breaks down or the working precision
/// cannot certify the target.
fn newton_tail(
    system: &[MPoly],
    subsystem: &[usize],
    seed: &[PadicInt],
    w: u32,
    target: u32,
) -> Option<(Vec<PadicInt>, Vec<u32>)> {
    let n = seed.len();
    let polys: Vec<&MPoly> = subsystem.iter().map(|&i| &system[i]).collect();
    let grads: Vec<Vec<MPoly>> = polys.iter().map(|f| f.gradient()).collect();
    let mut y: Vec<PadicInt> = seed.to_vec();
    let mut step_valuations = Vec::new();
    let mut prev_tau: Option<u32> = None;

    for _ in 0..64 {
        let f: Vec<PadicInt> = polys.iter().map(|p| p.eval(&y).unwrap()).collect();
        let res_prec = f.iter().map(|v| v.precision()).min().unwrap();
        let tau = f
            .iter()
            .map(|v| v.val2().unwrap_or(v.precision()))
            .min()
            .unwrap();
        if let Some(prev) = prev_tau {
            step_valuations.push(tau.min(target));
            if tau >= target {
                return Some((y, step_valuations));
            }
            // quadratic progress, clamped by what the precision can show
            if tau < (2 * prev.saturating_sub(w)).min(res_prec) {
                return None;
            }
        } else if tau >= target {
            return Some((y, step_valuations));
        }
        if tau <= 2 * w || res_prec.saturating_sub(w) < target {
            return None;
        }
        let jac: Vec<Vec<PadicInt>> = grads
            .iter()
            .map(|row| row.iter().map(|g| g.eval(&y).unwrap()).collect())
            .collect();
        let det = det_padic(&jac);
        let dv = det.val2()?;
        debug_assert_eq!(dv, w, "determinant valuation must be stable along the lift");
        let unit_inv = det.shr_exact(dv).unwrap().inv_unit().unwrap();
        let adj = adjugate(&jac);
        for i in 0..n {
            let mut s = PadicInt::zero(res_prec);
            for k in 0..n {
                s = s + adj[i][k] * f[k];
            }
            let d = s.shr_exact(dv).expect("residual valuation exceeds 2w") * unit_inv;
            y[i] = y[i] - d;
        }
        prev_tau = Some(tau);
    }
    None
}

/// Finds every residue vector mod 2^target that solves `filter` above a
/// mod-2 point, by refining residues bit by bit and switching to Newton
/// as soon as some square subsystem of `pool` has a Jacobian determinant
/// of valuation w strictly below the bits already fixed. At that point
/// every filter solution extending the seed lies in a known residue cube
/// around the Newton root, so the seed leaves the search frontier.
///
/// `pool` supplies the Newton subsystems. Its polynomials may be ideal
/// combinations of `filter` divided by contents of up to `slack` bits,
/// so a filter solution mod 2^target drives the pool only to valuation
/// target - slack. A valuation-w pool Jacobian therefore pins filter
/// solutions only mod 2^(target - w - slack): the cube around a Newton
/// root spans the top w + slack bits of each coordinate, and a cube
/// point is kept exactly when the full filter vanishes there mod
/// 2^target. Points whose pool Jacobian stays too degenerate are carried
/// to the target precision by search alone. With pool equal to filter,
/// slack 0, and a unit Jacobian at the start this reduces to plain
/// Newton lifting from the mod-2 point.
///
/// Returns one entry per distinct solution mod 2^target; the list is empty
/// when the mod-2 point extends no further.
pub fn lift_point_bfs(
    filter: &[MPoly],
    pool: &[MPoly],
    slack: u32,
    start_mod2: &[u8],
    target: u32,
    fiber_cap: usize,
) -> Result<Vec<AdaptiveLift>, HenselError> {
    let nvars = start_mod2.len();
    assert!(!filter.is_empty() && !pool.is_empty());
    let pmin = filter
        .iter()
        .chain(pool.iter())
        .map(|p| p.precision())
        .min()
        .unwrap();
    assert!(target >= 1 && target <= pmin, "target beyond system precision");
    for p in filter.iter().chain(pool.iter()) {
        assert_eq!(p.nvars(), nvars, "arity mismatch");
    }
    let grads_all: Vec<Vec<MPoly>> = pool.iter().map(|p| p.gradient()).collect();

    let start: Vec<PadicInt> = start_mod2
        .iter()
        .map(|&b| PadicInt::new((b & 1) as u64, pmin))
        .collect();
    debug_assert!(
        pool.iter()
            .all(|p| p.eval(&start).unwrap().val2().map_or(true, |v| v >= 1)),
        "start is not a pool root mod 2"
    );
    // pool roots need not satisfy the filter mod 2; cull those before
    // refining any bits
    let filter_vanishes = |pt: &[PadicInt], depth: u32| {
        filter
            .iter()
            .all(|p| p.eval(pt).unwrap().val2().map_or(true, |v| v >= depth))
    };
    if !filter_vanishes(&start, 1) {
        return Ok(Vec::new());
    }

    let mut out: Vec<AdaptiveLift> = Vec::new();
    let mut frontier = vec![start];
    for j in 1..target {
        let mut next: Vec<Vec<PadicInt>> = Vec::new();
        for y in &frontier {
            let grad_vals: Vec<Vec<PadicInt>> = grads_all
                .iter()
                .map(|row| row.iter().map(|g| g.eval(y).unwrap()).collect())
                .collect();
            if let Some((sub, w)) = select_by_valuation(&grad_vals, nvars) {
                // j > w makes the subsystem root above this seed unique;
                // the tail itself checks that the pool residual has
                // already cleared 2w bits
                if w < j {
                    if let Some((solution, step_valuations)) =
                        newton_tail(pool, &sub, y, w, target)
                    {
                        let width = w + slack;
                        if width as usize * nvars > 12 {
                            return Err(HenselError::FiberOverflow(
                                1usize << (width as usize * nvars),
                            ));
                        }
                        if width == 0 {
                            // unit Jacobian, exact pool: the root is the
                            // sole extension and already filter-checked
                            // by construction
                            if filter_vanishes(&solution, target) {
                                out.push(AdaptiveLift {
                                    solution,
                                    subsystem: sub,
                                    step_valuations,
                                    seed_bits: j,
                                    jacobian_valuation: w,
                                });
                            }
                            continue;
                        }
                        let mask = (1u64 << width) - 1;
                        let shift = target.saturating_sub(width);
                        for c in 0..(1u64 << (width as usize * nvars)) {
                            let sib: Vec<PadicInt> = solution
                                .iter()
                                .enumerate()
                                .map(|(v, s)| {
                                    let bits = (c >> (v as u32 * width)) & mask;
                                    *s + PadicInt::new(bits << shift, s.precision())
                                })
                                .collect();
                            if filter_vanishes(&sib, target) {
                                out.push(AdaptiveLift {
                                    solution: sib,
                                    subsystem: sub.clone(),
                                    step_valuations: step_valuations.clone(),
                                    seed_bits: j,
                                    jacobian_valuation: w,
                                });
                            }
                        }
                        continue;
                    }
                }
            }
            let bump = PadicInt::new(1u64 << j, pmin);
            for bits in 0..(1u32 << nvars) {
                let mut child = y.clone();
                for (v, c) in child.iter_mut().enumerate() {
                    if (bits >> v) & 1 == 1 {
                        *c = *c + bump;
                    }
                }
                let alive = filter
                    .iter()
                    .all(|p| p.eval(&child).unwrap().val2().map_or(true, |v| v > j));
                if alive {
                    next.push(child);
                }
            }
        }
        if next.len() > fiber_cap {
            return Err(HenselError::FiberOverflow(next.len()));
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    for y in frontier {
        out.push(AdaptiveLift {
            solution: y,
            subsystem: Vec::new(),
            step_valuations: Vec::new(),
            seed_bits: target,
            jacobian_valuation: 0,
        });
    }

    let mut seen = std::collections::BTreeSet::new();
    out.retain(|lift| {
        let key: Vec<u64> = lift
            .solution
            .iter()
            .map(|x| x.truncate(target).residue())
            .collect();
        seen.insert(key)
    });
    Ok(out)
}
