//! Five-point relative pose over the 2-adic integers.
//!
//! From five point correspondences the epipolar constraints give a 5x9
//! linear system whose nullspace (generically 4-dimensional) spans a
//! pencil of candidate essential matrices E(x) = sum_t x_t E_t.  The
//! essential variety is cut out inside the pencil by the determinant and
//! the nine trace cubics, the entries of 2*E*E^T*E - tr(E*E^T)*E.  We
//! split that variety into component systems whose mod-2 solutions have
//! unit Jacobians, enumerate the mod-2 points chart by chart, and lift
//! each one with Newton's method to the requested precision.

use crate::hensel::{self, HenselError, StaircaseBasis};
use crate::groebner;
use crate::mat::{self, Mat3, Vec3};
use crate::mpoly::{MPoly, MPolyF2, Mono};
use crate::padic::PadicInt;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Number of pencil coordinates (the nullspace of five epipolar rows).
pub const PENCIL_VARS: usize = 4;

/// Upper bound on component systems before an overflow warning is set.
pub const COMPONENT_SOFT_LIMIT: usize = 24;

/// Reasons a sample must be redrawn rather than solved.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ResampleReason {
    /// The 5x9 epipolar system does not have a 4-dimensional nullspace.
    RankDeficient,
    /// Every entry of the pencil vanishes mod 2, so no chart can open.
    DegeneratePencil,
    /// Column elimination found no pivot in some stage.
    PivotFailure,
    /// All candidate mod-2 points failed to lift or verify.
    NoCandidates,
    /// Content division ate too much precision for the requested target.
    PrecisionLoss,
}

impl fmt::Display for ResampleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ResampleReason::RankDeficient => "rank-deficient epipolar system",
            ResampleReason::DegeneratePencil => "pencil vanishes mod 2",
            ResampleReason::PivotFailure => "triangularization pivot failure",
            ResampleReason::NoCandidates => "no verified candidates",
            ResampleReason::PrecisionLoss => "insufficient precision after content division",
        };
        f.write_str(s)
    }
}

/// Five projective correspondences (u_j, u'_j) at a common precision.
#[derive(Clone, Debug)]
pub struct EpipolarSample {
    pairs: [(Vec3, Vec3); 5],
    precision: u32,
}

impl EpipolarSample {
    /// Invariant: all thirty coordinates share one precision.
    pub fn new(pairs: [(Vec3, Vec3); 5]) -> Self {
        let precision = pairs[0].0[0].precision();
        for (u, v) in &pairs {
            for c in u.iter().chain(v.iter()) {
                assert_eq!(c.precision(), precision, "mixed-precision sample");
            }
        }
        EpipolarSample { pairs, precision }
    }

    pub fn pairs(&self) -> &[(Vec3, Vec3); 5] {
        &self.pairs
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    fn map_coords(&self, f: impl Fn(&PadicInt) -> PadicInt) -> Self {
        let g = |v: &Vec3| [f(&v[0]), f(&v[1]), f(&v[2])];
        let pairs = std::array::from_fn(|i| {
            (g(&self.pairs[i].0), g(&self.pairs[i].1))
        });
        EpipolarSample::new(pairs)
    }

    /// Lift every coordinate to precision `m` via its canonical integer
    /// representative.  The widened sample is the instance actually solved.
    pub fn widen(&self, m: u32) -> Self {
        self.map_coords(|c| c.widen(m))
    }

    /// Forgets digits beyond `m`.
    pub fn truncate(&self, m: u32) -> Self {
        self.map_coords(|c| c.truncate(m))
    }
}

/// Row of the epipolar system: r_{3(j-1)+k} = u_j * u'_k, so that
/// r . vec(E) = u^T E u' for a row-major vectorization of E.
pub fn epipolar_row(u: &Vec3, up: &Vec3) -> [PadicInt; 9] {
    std::array::from_fn(|i| u[i / 3] * up[i % 3])
}

/// Basis of the solution pencil E(x) = x_1 E_1 + ... + x_4 E_4.
#[derive(Clone, Debug)]
pub struct PencilE {
    pub basis: [Mat3; 4],
    /// Entry polynomials of E(x), linear in the pencil coordinates.
    pub entries: [[MPoly; 3]; 3],
    /// Flat row-major entry positions where E(x) restricts to a bare x_t.
    pub free_positions: Vec<usize>,
    pub precision: u32,
}

/// Builds the symbolic pencil from four basis matrices.
pub fn pencil_from_basis(basis: [Mat3; 4]) -> PencilE {
    let precision = basis[0][0][0].precision();
    let entries = std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let coeffs: Vec<PadicInt> = (0..4).map(|t| basis[t][r][c]).collect();
            MPoly::linear_form(&coeffs, precision)
        })
    });
    PencilE { basis, entries, free_positions: Vec::new(), precision }
}

/// Solves the 5x9 epipolar system for its nullspace pencil.
///
/// The staircase basis leaves an x_t alone in each free position, which
/// later pins chart points to concrete matrix entries.
pub fn solve_linear_five(sample: &EpipolarSample) -> Result<PencilE, ResampleReason> {
    let rows: Vec<Vec<PadicInt>> = sample
        .pairs
        .iter()
        .map(|(u, v)| epipolar_row(u, v).to_vec())
        .collect();
    let ns: StaircaseBasis = match hensel::nullspace_staircase(&rows) {
        Ok(b) => b,
        Err(HenselError::RankDeficient(_)) => return Err(ResampleReason::RankDeficient),
        Err(_) => return Err(ResampleReason::RankDeficient),
    };
    if ns.vectors.len() != PENCIL_VARS {
        return Err(ResampleReason::RankDeficient);
    }
    let basis: [Mat3; 4] = std::array::from_fn(|t| {
        let arr: [PadicInt; 9] = std::array::from_fn(|i| ns.vectors[t][i]);
        mat::vec9_to_mat(&arr)
    });
    let free_positions = ns.free_cols.clone();
    let mut pencil = pencil_from_basis(basis);
    pencil.free_positions = free_positions;
    Ok(pencil)
}

fn poly_dot3(a: &[MPoly; 3], b: &[MPoly; 3]) -> MPoly {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

/// Rows of 2*E*E^T - tr(E*E^T)*I as entry polynomials.
fn gram_matrix(p: &PencilE) -> [[MPoly; 3]; 3] {
    let two = PadicInt::from_i64(2, p.precision);
    let mut dots: Vec<Vec<MPoly>> = vec![vec![MPoly::zero(PENCIL_VARS, p.precision); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let d = poly_dot3(&p.entries[i], &p.entries[j]);
            dots[j][i] = d.clone();
            dots[i][j] = d;
        }
    }
    let tr = dots[0][0].add(&dots[1][1]).add(&dots[2][2]);
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let g = dots[i][j].scale(two);
            if i == j { g.sub(&tr) } else { g }
        })
    })
}

fn det_poly(e: &[[MPoly; 3]; 3]) -> MPoly {
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| {
        e[r0][c0].mul(&e[r1][c1]).sub(&e[r0][c1].mul(&e[r1][c0]))
    };
    e[0][0]
        .mul(&minor(1, 2, 1, 2))
        .sub(&e[0][1].mul(&minor(1, 2, 0, 2)))
        .add(&e[0][2].mul(&minor(1, 2, 0, 1)))
}

/// The nine trace cubics (entries of (2*E*E^T - tr(E*E^T)*I) * E, row-major)
/// and the determinant cubic.
pub fn trace_cubics(p: &PencilE) -> ([MPoly; 9], MPoly) {
    let g = gram_matrix(p);
    let cubics = std::array::from_fn(|a| {
        let (i, j) = (a / 3, a % 3);
        g[i][0]
            .mul(&p.entries[0][j])
            .add(&g[i][1].mul(&p.entries[1][j]))
            .add(&g[i][2].mul(&p.entries[2][j]))
    });
    (cubics, det_poly(&p.entries))
}

/// Mod-2 linearization: the sum L of all nine entries of E mod 2.
///
/// Over F_2 the Gram trace is the Frobenius square L^2, so each trace
/// cubic reduces to L^2 times an entry of E and the whole cubic part of
/// the variety collapses to the hyperplane L = 0.  Returns an error when
/// the pencil vanishes identically mod 2.
pub fn compute_l(p: &PencilE) -> Result<MPolyF2, ResampleReason> {
    let mut all_zero = true;
    let mut l = MPolyF2::zero(PENCIL_VARS);
    let mut q = MPolyF2::zero(PENCIL_VARS);
    for i in 0..3 {
        for j in 0..3 {
            let ebar = p.entries[i][j].reduce_mod2();
            if !ebar.is_zero() {
                all_zero = false;
            }
            l = l.add(&ebar);
            q = q.add(&ebar.square());
        }
    }
    if all_zero {
        return Err(ResampleReason::DegeneratePencil);
    }
    assert_eq!(q, l.square(), "Gram trace must reduce to the Frobenius square");
    Ok(l)
}

/// Mod-2 candidate points of the full cubic system in P^3(F_2).
#[derive(Clone, Debug)]
pub struct Mod2Candidates {
    /// Points of P^3(F_2) where L, all nine cubics, and det vanish mod 2.
    pub points: Vec<[u8; 4]>,
    /// Set when L and det both vanish mod 2, so every point qualifies.
    pub all_points_pass: bool,
}

/// Brute-forces the fifteen points of P^3(F_2) against the cubic system.
pub fn mod2_candidate_points(cubics: &[MPoly; 9], det: &MPoly, l: &MPolyF2) -> Mod2Candidates {
    let det2 = det.reduce_mod2();
    let red: Vec<MPolyF2> = cubics.iter().map(|c| c.reduce_mod2()).collect();
    let mut points = Vec::new();
    for w in 1u32..16 {
        let pt: [u8; 4] = std::array::from_fn(|i| ((w >> i) & 1) as u8);
        let ok = l.eval(&pt).unwrap() == 0
            && det2.eval(&pt).unwrap() == 0
            && red.iter().all(|c| c.eval(&pt).unwrap() == 0);
        if ok {
            points.push(pt);
        }
    }
    let all_points_pass = l.is_zero() && det2.is_zero();
    Mod2Candidates { points, all_points_pass }
}

/// Lower-triangular column reduction T = E * U of the pencil.
#[derive(Clone, Debug)]
pub struct Triangularization {
    /// Lower-triangular entry polynomials after row content division.
    pub t: [[MPoly; 3]; 3],
    /// Original pencil columns in pivot order.
    pub column_order: [usize; 3],
    /// Power of two divided off each row.
    pub row_shifts: [u32; 3],
    /// Reduced-column minors before content division, kept for syzygies.
    minors: [[MPoly; 2]; 2],
}

fn row_content(polys: &[&MPoly]) -> u32 {
    polys.iter().filter_map(|p| p.content()).min().unwrap_or(0)
}

/// Exact division of every coefficient by 2^s; drops s digits of precision.
fn shift_right(p: &MPoly, s: u32) -> MPoly {
    if s == 0 {
        return p.clone();
    }
    let terms: Vec<(Mono, u64)> = p
        .terms()
        .map(|(m, c)| {
            debug_assert_eq!(c.residue() & ((1u64 << s) - 1), 0, "inexact row shift");
            (m.clone(), c.residue() >> s)
        })
        .collect();
    MPoly::from_terms(p.nvars(), p.precision() - s, terms)
}

/// Fraction-free column elimination of the pencil into lower-triangular
/// form, top row first.  T11 is a pivot linear entry, T22 the resulting
/// 2x2 column minor, and T33 equals det(E) up to the column permutation
/// sign.  Powers of two common to a row are divided off afterwards.
pub fn triangularize_columns(p: &PencilE) -> Result<Triangularization, ResampleReason> {
    let e = &p.entries;
    let c0 = (0..3)
        .find(|&c| !e[0][c].is_zero())
        .ok_or(ResampleReason::PivotFailure)?;
    let minor2 = |r: usize, c: usize| {
        e[0][c0].mul(&e[r][c]).sub(&e[0][c].mul(&e[r][c0]))
    };
    let rest: Vec<usize> = (0..3).filter(|&c| c != c0).collect();
    let c1 = *rest
        .iter()
        .find(|&&c| !minor2(1, c).is_zero())
        .ok_or(ResampleReason::PivotFailure)?;
    let c2 = *rest.iter().find(|&&c| c != c1).expect("third column");

    let column_order = [c0, c1, c2];
    // Sign of the column permutation applied to det(E).
    let mut perm = column_order;
    let mut sign_neg = false;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if perm[i] > perm[j] {
                perm.swap(i, j);
                sign_neg = !sign_neg;
            }
        }
    }
    let t11 = e[0][c0].clone();
    let t21 = e[1][c0].clone();
    let t31 = e[2][c0].clone();
    let minors = [
        [minor2(1, c1), minor2(1, c2)],
        [minor2(2, c1), minor2(2, c2)],
    ];
    let det = det_poly(e);
    let t33_raw = if sign_neg { det.neg() } else { det };

    let prec = p.precision;
    let zero = || MPoly::zero(PENCIL_VARS, prec);
    let s1 = row_content(&[&t11]);
    let s2 = row_content(&[&t21, &minors[0][0]]);
    let s3 = row_content(&[&t31, &minors[1][0], &t33_raw]);
    if prec <= s1.max(s2).max(s3) {
        return Err(ResampleReason::PrecisionLoss);
    }
    let t = [
        [shift_right(&t11, s1), zero(), zero()],
        [shift_right(&t21, s2), shift_right(&minors[0][0], s2), zero()],
        [
            shift_right(&t31, s3),
            shift_right(&minors[1][0], s3),
            shift_right(&t33_raw, s3),
        ],
    ];
    Ok(Triangularization { t, column_order, row_shifts: [s1, s2, s3], minors })
}

/// One system of polynomials cutting out a piece of the trace variety.
#[derive(Clone, Debug)]
pub struct ComponentSystem {
    pub polys: Vec<MPoly>,
    /// Short human-readable tag describing how the system arose.
    pub provenance: String,
}

/// Output of the case-split decomposition.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub components: Vec<ComponentSystem>,
    /// Case-split systems surviving absorption pruning.
    pub pruned_branches: usize,
    /// Set when the split produced more systems than the soft limit.
    pub overflow: bool,
}

/// Scales a nonzero polynomial so its highest odd coefficient is 1.
fn unit_normalize(p: MPoly) -> MPoly {
    let terms: Vec<(Mono, PadicInt)> = p.terms().map(|(m, c)| (m.clone(), c)).collect();
    for (_, c) in terms.iter().rev() {
        if c.residue() & 1 == 1 {
            let inv = c.inv_unit().expect("odd coefficient");
            return p.scale(inv);
        }
    }
    p
}

fn normalized(p: &MPoly) -> Option<MPoly> {
    if p.is_zero() {
        return None;
    }
    let (q, _) = p.content_normalize().expect("nonzero");
    Some(unit_normalize(q))
}

/// Attempts to factor a mod-2 quadratic into two linear forms, trying all
/// products of nonzero homogeneous linear forms in the pencil variables.
fn factor_quadratic_mod2(q: &MPolyF2) -> Option<(MPolyF2, MPolyF2)> {
    let forms: Vec<MPolyF2> = (1u32..16)
        .map(|w| {
            let mut f = MPolyF2::zero(PENCIL_VARS);
            for i in 0..PENCIL_VARS {
                if (w >> i) & 1 == 1 {
                    f = f.add(&MPolyF2::var(i, PENCIL_VARS));
                }
            }
            f
        })
        .collect();
    for (a, fa) in forms.iter().enumerate() {
        for fb in &forms[a..] {
            if fa.mul(fb) == *q {
                return Some((fa.clone(), fb.clone()));
            }
        }
    }
    None
}

/// Lifts a mod-2 form to the given precision with 0/1 coefficients.
fn lift_mod2(f: &MPolyF2, precision: u32) -> MPoly {
    let terms: Vec<(Mono, u64)> = f.monomials().map(|m| (m.clone(), 1u64)).collect();
    MPoly::from_terms(f.nvars(), precision, terms)
}

type PolySet = BTreeSet<MPoly>;

fn absorb(sets: Vec<(PolySet, String)>) -> Vec<(PolySet, String)> {
    let mut kept: Vec<(PolySet, String)> = Vec::new();
    for (s, tag) in sets {
        if s.is_empty() {
            continue;
        }
        if kept.iter().any(|(k, _)| k.is_subset(&s)) {
            continue;
        }
        kept.retain(|(k, _)| !s.is_subset(k));
        kept.push((s, tag));
    }
    kept
}

/// Case-split decomposition of the trace variety over the pencil.
///
/// The Gram identity (2*E*E^T - tr*I) * T = 0 on the variety unfolds row
/// by row against the triangular columns of T: each Gram row annihilates
/// each column, and a column dies either through its own pivot factor or
/// through the Gram entries meeting its support.  Determinant branches
/// pick one triangular factor or the determinant itself.  Absorption
/// drops any branch system containing another, and quadratic members
/// whose mod-2 reduction splits into linear forms split the component.
///
/// Two guaranteed covers are appended: the original cubic system itself,
/// and the same system enriched with exact-division syzygy quartics,
/// (E_b M_a - E_a M_b) / 2 together with Gram-against-reduced-column
/// combinations.  The quartics vanish on the whole variety by exactness
/// yet keep odd gradients at points where every raw cubic gradient is
/// even.  Members whose precision would drop below `min_precision` after
/// content division are omitted from the enriched system.
pub fn decompose_trace_variety(
    p: &PencilE,
    cubics: &[MPoly; 9],
    det: &MPoly,
    tri: &Triangularization,
    min_precision: u32,
) -> Decomposition {
    let gram = gram_matrix(p);
    let g: Vec<Vec<Option<MPoly>>> = (0..3)
        .map(|i| (0..3).map(|j| normalized(&gram[i][j])).collect())
        .collect();
    let t11 = normalized(&tri.t[0][0]);
    let t22 = normalized(&tri.t[1][1]);
    let t33 = normalized(&tri.t[2][2]);
    let det_n = normalized(det);

    // Row i of the Gram matrix annihilates triangular column k when either
    // the column's pivot factor vanishes or the Gram entries meeting the
    // column's support do.  Collapsing over the three columns leaves four
    // choices per row; leftover cross terms are dropped here and caught by
    // final verification.
    let row_options = |i: usize| -> Vec<Vec<&Option<MPoly>>> {
        vec![
            vec![&t33],
            vec![&t22, &g[i][2]],
            vec![&t11, &g[i][1], &g[i][2]],
            vec![&g[i][0], &g[i][1], &g[i][2]],
        ]
    };
    let det_options: Vec<&Option<MPoly>> = vec![&t11, &t22, &t33, &det_n];

    let mut raw: Vec<(PolySet, String)> = Vec::new();
    for a0 in row_options(0) {
        for a1 in row_options(1) {
            for a2 in row_options(2) {
                for (di, d) in det_options.iter().enumerate() {
                    let mut set = PolySet::new();
                    for q in a0.iter().chain(&a1).chain(&a2).chain(std::iter::once(d)) {
                        if let Some(q) = q {
                            set.insert(q.clone());
                        }
                    }
                    if !set.is_empty() {
                        raw.push((set, format!("split/det{}", di)));
                    }
                }
            }
        }
    }
    let pruned = absorb(raw);

    // Split components along mod-2 factorable quadratics.
    let mut work: Vec<(PolySet, String)> = pruned;
    let mut done: Vec<(PolySet, String)> = Vec::new();
    while let Some((set, tag)) = work.pop() {
        let target = set.iter().find_map(|q| {
            if q.degree() != Some(2) {
                return None;
            }
            let red = q.reduce_mod2();
            if red.is_zero() {
                return None;
            }
            factor_quadratic_mod2(&red).map(|f| (q.clone(), f))
        });
        match target {
            None => done.push((set, tag)),
            Some((q, (fa, fb))) => {
                let mut halves = vec![fa.clone()];
                if fb != fa {
                    halves.push(fb);
                }
                for h in halves {
                    let mut next = set.clone();
                    next.remove(&q);
                    next.insert(unit_normalize(lift_mod2(&h, q.precision())));
                    work.push((next, format!("{}+factor", tag)));
                }
            }
        }
    }
    let mut components = absorb(done);
    components.sort_by(|a, b| a.0.cmp(&b.0));
    let pruned_branches = components.len();
    let overflow = pruned_branches > COMPONENT_SOFT_LIMIT;

    // Guaranteed covers.  The ten original cubics cut out the variety
    // exactly; the enriched system adds quartics that vanish on the whole
    // variety while keeping unit Jacobians where cubic gradients die.
    // The guaranteed covers must reduce mod 2 to the raw system, so only
    // unit scaling is allowed here; dividing out content would erase even
    // generators from the reduction.
    let mut base = PolySet::new();
    for c in cubics.iter().chain(std::iter::once(det)) {
        if !c.is_zero() {
            base.insert(unit_normalize(c.clone()));
        }
    }
    let mut enriched = base.clone();
    let push_syzygy = |s: &MPoly, enriched: &mut PolySet| {
        if let Some(q) = normalized(s) {
            if q.precision() >= min_precision {
                enriched.insert(q);
            }
        }
    };
    let flat = |a: usize| &p.entries[a / 3][a % 3];
    for a in 0..9 {
        for b in (a + 1)..9 {
            let d = flat(b).mul(&cubics[a]).sub(&flat(a).mul(&cubics[b]));
            push_syzygy(&d, &mut enriched);
        }
    }
    // Gram row 0 against each reduced column: positions 1 and 2 of the row
    // hold the even entries 2*e1.e2 and 2*e1.e3, so the dot product with a
    // reduced column (0, minor, minor) has content and the exact quotient
    // still vanishes on the variety.
    let zero = MPoly::zero(PENCIL_VARS, p.precision);
    for k in 0..2 {
        let col = [zero.clone(), tri.minors[0][k].clone(), tri.minors[1][k].clone()];
        let s = poly_dot3(
            &[gram[0][0].clone(), gram[0][1].clone(), gram[0][2].clone()],
            &col,
        );
        push_syzygy(&s, &mut enriched);
    }

    let mut out: Vec<ComponentSystem> = Vec::new();
    out.push(ComponentSystem {
        polys: enriched.into_iter().collect(),
        provenance: "cubics+syzygies".to_string(),
    });
    out.push(ComponentSystem {
        polys: base.into_iter().collect(),
        provenance: "cubics".to_string(),
    });
    for (set, tag) in components {
        out.push(ComponentSystem { polys: set.into_iter().collect(), provenance: tag });
    }
    Decomposition { components: out, pruned_branches, overflow }
}

/// The full symbolic system attached to one pencil.
#[derive(Clone, Debug)]
pub struct TraceSystem {
    pub cubics: [MPoly; 9],
    pub det_cubic: MPoly,
    pub l: MPolyF2,
    pub components: Vec<ComponentSystem>,
}

/// Builds the symbolic trace system for a pencil in one call.
pub fn build_trace_system(
    p: &PencilE,
    min_precision: u32,
) -> Result<(TraceSystem, Decomposition), ResampleReason> {
    let (cubics, det_cubic) = trace_cubics(p);
    let l = compute_l(p)?;
    let tri = triangularize_columns(p)?;
    let decomp = decompose_trace_variety(p, &cubics, &det_cubic, &tri, min_precision);
    let ts = TraceSystem {
        cubics,
        det_cubic,
        l,
        components: decomp.components.clone(),
    };
    Ok((ts, decomp))
}

/// One verified candidate essential matrix.
#[derive(Clone, Debug)]
pub struct CandidatePoint {
    /// Pencil coordinates at the output precision.
    pub x: [PadicInt; 4],
    /// E = sum x_t E_t at the output precision.
    pub e: Mat3,
    /// Canonical projective representative of `e`.
    pub e_canonical: Mat3,
    /// Index of the component system the point came from.
    pub component: usize,
    /// Chart coordinate that was pinned to 1.
    pub chart: usize,
    /// Residual valuations after each Newton step.
    pub step_valuations: Vec<u32>,
}

/// Solver output with per-run diagnostics.
#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub candidates: Vec<CandidatePoint>,
    pub component_count: usize,
    pub pruned_branches: usize,
    pub component_overflow: bool,
    /// Chart systems skipped because their mod-2 variety had positive dimension.
    pub skipped_positive_dimensional: usize,
    /// Mod-2 points that failed to produce a liftable subsystem.
    pub lift_failures: usize,
    /// Lifted points rejected by final verification.
    pub rejected: usize,
    /// Set when two distinct lifts verified from one mod-2 chart point.
    pub lift_ambiguity: bool,
}

const HEADROOM: u32 = 16;

/// Bound on the residue search frontier per mod-2 point. True roots keep
/// only a handful of live refinements per bit, so hitting this means the
/// chart variety is effectively not isolated there.
const FIBER_CAP: usize = 256;

/// Solves the five-point problem at output precision `m`.
///
/// Internally works at min(64, m + 16) bits so that content divisions in
/// the component construction keep at least `m` bits.  Each component is
/// processed chart by chart (x_j = 1 for j = 1..4); a projective point is
/// attributed to its first chart with unit coordinate.  Per chart: reduce
/// the specialized system mod 2, keep it only when zero-dimensional,
/// enumerate its F_2 points, find every root above each point by residue
/// search with a Newton tail (membership judged against the original
/// cubics, Newton subsystems drawn from the component), then verify all
/// ten cubics and the five epipolar constraints at precision `m`.
///
/// The Jacobian of the trace system is singular mod 2 at every essential
/// matrix, because the linearized trace form vanishes there and takes all
/// nine cubic gradients with it. Lifting therefore cannot start from the
/// mod-2 points directly; the residue search first pins enough bits for a
/// valuation-w Jacobian subsystem to certify a unique root.
pub fn five_point_solve(
    sample: &EpipolarSample,
    m: u32,
) -> Result<SolveOutput, ResampleReason> {
    assert!((1..=64).contains(&m), "precision out of range");
    let mw = (m + HEADROOM).min(64);
    let base = if sample.precision() > m {
        sample.truncate(m)
    } else {
        sample.clone()
    };
    let wide = base.widen(mw);
    let pencil = solve_linear_five(&wide)?;
    let (cubics, det) = trace_cubics(&pencil);
    compute_l(&pencil)?;
    let tri = triangularize_columns(&pencil)?;
    let decomp = decompose_trace_variety(&pencil, &cubics, &det, &tri, m);

    let sample_m = base.widen(m);
    let check_rows: Vec<[PadicInt; 9]> = sample_m
        .pairs
        .iter()
        .map(|(u, v)| epipolar_row(u, v))
        .collect();

    let mut found: BTreeMap<[u64; 9], CandidatePoint> = BTreeMap::new();
    let mut skipped = 0usize;
    let mut lift_failures = 0usize;
    let mut rejected = 0usize;
    let mut ambiguity = false;

    // the residue search refines against the original cubics, which keep
    // the full working precision; component polynomials only feed its
    // Newton subsystems
    let filter_by_chart: Vec<Vec<MPoly>> = (0..PENCIL_VARS)
        .map(|chart| {
            cubics
                .iter()
                .chain(std::iter::once(&det))
                .map(|p| p.specialize(chart))
                .collect()
        })
        .collect();

    // Shared tail of both search passes: truncate to output precision,
    // verify, and dedup on the canonical form of E. Returns the number of
    // lifts that verified.
    let absorb = |lifts: &[hensel::AdaptiveLift],
                  chart: usize,
                  component: usize,
                  found: &mut BTreeMap<[u64; 9], CandidatePoint>,
                  rejected: &mut usize|
     -> usize {
        let mut verified = 0usize;
        for lift in lifts {
            let mut x: [PadicInt; 4] = [PadicInt::new(1, m); 4];
            let mut k = 0;
            for t in 0..PENCIL_VARS {
                if t != chart {
                    x[t] = lift.solution[k].truncate(m);
                    k += 1;
                }
            }
            let e = assemble_e(&pencil.basis, &x, m);
            if !verify_candidate(&cubics, &det, &x, &e, &check_rows, m) {
                *rejected += 1;
                continue;
            }
            verified += 1;
            let canon = mat::mat_canonicalize(&e).expect("verified E is nonzero").0;
            let key: [u64; 9] = std::array::from_fn(|i| canon[i / 3][i % 3].residue());
            found.entry(key).or_insert(CandidatePoint {
                x,
                e,
                e_canonical: canon,
                component,
                chart,
                step_valuations: lift.step_valuations.clone(),
            });
        }
        verified
    };

    for (ci, comp) in decomp.components.iter().enumerate() {
        let lift_prec = comp.polys.iter().map(|p| p.precision()).min().unwrap_or(mw);
        if lift_prec < m {
            return Err(ResampleReason::PrecisionLoss);
        }
        // content divisions cost the component this many bits relative to
        // the cubics; the search widens its residue cubes to match
        let slack = mw.saturating_sub(lift_prec);
        for chart in 0..PENCIL_VARS {
            let specialized: Vec<MPoly> =
                comp.polys.iter().map(|p| p.specialize(chart)).collect();
            let reduced: Vec<MPolyF2> = specialized
                .iter()
                .map(|p| p.reduce_mod2())
                .filter(|p| !p.is_zero())
                .collect();
            if reduced.is_empty() {
                skipped += 1;
                continue;
            }
            let gb = groebner::buchberger(&reduced);
            if !groebner::is_zero_dimensional(&gb) {
                skipped += 1;
                continue;
            }
            for pt in groebner::f2_points(&gb, PENCIL_VARS - 1) {
                let mut ybar = [0u8; 4];
                let mut k = 0;
                for t in 0..PENCIL_VARS {
                    if t == chart {
                        ybar[t] = 1;
                    } else {
                        ybar[t] = pt[k];
                        k += 1;
                    }
                }
                // First-unit attribution: an earlier odd coordinate means
                // the point belongs to an earlier chart. Roots agree with
                // their seed mod 2, so attribution survives the lift.
                if ybar[..chart].iter().any(|&b| b == 1) {
                    continue;
                }
                let lifts = match hensel::lift_point_bfs(
                    &filter_by_chart[chart],
                    &specialized,
                    slack,
                    &pt,
                    m,
                    FIBER_CAP,
                ) {
                    Ok(lifts) if lifts.is_empty() => {
                        lift_failures += 1;
                        continue;
                    }
                    Ok(lifts) => lifts,
                    Err(_) => {
                        lift_failures += 1;
                        continue;
                    }
                };
                if absorb(&lifts, chart, ci, &mut found, &mut rejected) >= 2 {
                    ambiguity = true;
                }
            }
        }
    }

    // The component pass alone is not exhaustive: a branch system only
    // certifies roots of its own branch, so its residue cubes may omit
    // roots of the full system below the same node, and covering systems
    // are usually skipped as positive-dimensional mod 2. Search every
    // admissible chart seed once more with the cubics serving as their own
    // Newton pool; for that pairing the certified cubes capture every root
    // above a node, so the candidate set is complete up to the frontier
    // cap.
    let covering = decomp
        .components
        .iter()
        .position(|c| c.provenance == "cubics")
        .expect("covering system is always emitted");
    for chart in 0..PENCIL_VARS {
        let reduced: Vec<MPolyF2> = filter_by_chart[chart]
            .iter()
            .map(|p| p.reduce_mod2())
            .filter(|p| !p.is_zero())
            .collect();
        for word in 0u8..8 {
            let pt: Vec<u8> = (0..PENCIL_VARS as u8 - 1).map(|i| (word >> i) & 1).collect();
            let mut ybar = [0u8; 4];
            let mut k = 0;
            for t in 0..PENCIL_VARS {
                if t == chart {
                    ybar[t] = 1;
                } else {
                    ybar[t] = pt[k];
                    k += 1;
                }
            }
            if ybar[..chart].iter().any(|&b| b == 1) {
                continue;
            }
            if !reduced.iter().all(|p| p.eval(&pt).expect("arity") == 0) {
                continue;
            }
            let lifts = match hensel::lift_point_bfs(
                &filter_by_chart[chart],
                &filter_by_chart[chart],
                0,
                &pt,
                m,
                FIBER_CAP,
            ) {
                // an empty result is authoritative here: nothing lies
                // above this seed
                Ok(lifts) => lifts,
                Err(_) => {
                    lift_failures += 1;
                    continue;
                }
            };
            if absorb(&lifts, chart, covering, &mut found, &mut rejected) >= 2 {
                ambiguity = true;
            }
        }
    }

    if found.is_empty() {
        return Err(ResampleReason::NoCandidates);
    }
    Ok(SolveOutput {
        candidates: found.into_values().collect(),
        component_count: decomp.components.len(),
        pruned_branches: decomp.pruned_branches,
        component_overflow: decomp.overflow,
        skipped_positive_dimensional: skipped,
        lift_failures,
        rejected,
        lift_ambiguity: ambiguity,
    })
}

fn assemble_e(basis: &[Mat3; 4], x: &[PadicInt; 4], m: u32) -> Mat3 {
    let mut e = mat::mat_zero(m);
    for t in 0..4 {
        let bt = mat::mat_truncate(&basis[t], m);
        e = mat::mat_add(&e, &mat::mat_scale(x[t], &bt));
    }
    e
}

/// Final acceptance check: all ten cubics and the five epipolar residuals
/// must vanish at the requested precision.
fn verify_candidate(
    cubics: &[MPoly; 9],
    det: &MPoly,
    x: &[PadicInt; 4],
    e: &Mat3,
    rows: &[[PadicInt; 9]],
    m: u32,
) -> bool {
    let xs: Vec<PadicInt> = x.to_vec();
    for c in cubics.iter().chain(std::iter::once(det)) {
        let v = c.eval(&xs).expect("arity");
        if v.truncate(m.min(v.precision())).residue() != 0 {
            return false;
        }
    }
    let v9 = mat::mat_to_vec9(e);
    for r in rows {
        let mut acc = PadicInt::new(0, m);
        for i in 0..9 {
            acc = acc + r[i] * v9[i];
        }
        assert_eq!(acc.residue(), 0, "epipolar residual must vanish for a pencil point");
    }
    true
}
