//! Synthetic stereo scenes with exact 2-adic ground truth.
//!
//! A relative pose is built from a Cayley rotation and a translation with a
//! unit coordinate, the ground-truth essential matrix is their product, and
//! correspondences are drawn so the epipolar form vanishes to full working
//! precision.  Outliers replace the second point by an unconstrained draw.

use crate::mat::{
    dot3, mat_identity, mat_inv_unit, mat_mul, mat_sub, mat_trace, mat_transpose, skew, vec_mat,
    Mat3, Vec3,
};
use crate::padic::PadicInt;
use rand::Rng;
use thiserror::Error;

/// Attempts at drawing a point whose epipolar line is a unit vector before
/// the generator gives up.  A line is even only when the random image point
/// hits the kernel of the reduced matrix, so for any usable ground truth the
/// loop exits almost immediately.
const LINE_RETRIES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SceneError {
    #[error("matrix is not skew-symmetric")]
    NotSkew,
    #[error("skew matrix has an odd entry")]
    NotEven,
    #[error("translation vanishes mod 2")]
    ZeroTranslation,
    #[error("epipolar line stayed even after bounded retries")]
    DegenerateEpipolarLine,
}

/// Cayley transform R = (I - S)(I + S)^{-1} of a skew-symmetric S with even
/// entries.  Evenness keeps I + S congruent to the identity mod 2, so the
/// inverse exists and R is a rotation: R^T R = I and det R = 1 at the
/// precision of S.
pub fn cayley_rotation(s: &Mat3) -> Result<Mat3, SceneError> {
    for i in 0..3 {
        for j in 0..3 {
            if s[j][i] != -s[i][j] {
                return Err(SceneError::NotSkew);
            }
        }
    }
    if s.iter().flatten().any(|e| e.is_unit()) {
        return Err(SceneError::NotEven);
    }
    let id = mat_identity(s[0][0].precision());
    let num = mat_sub(&id, s);
    let den = [
        [id[0][0] + s[0][0], s[0][1], s[0][2]],
        [s[1][0], id[1][1] + s[1][1], s[1][2]],
        [s[2][0], s[2][1], id[2][2] + s[2][2]],
    ];
    let inv = mat_inv_unit(&den).expect("I + S is a unit for even S");
    Ok(mat_mul(&num, &inv))
}

/// Essential matrix [t]_x R for translation t and rotation R.  The
/// translation must have a unit coordinate, otherwise every epipolar line
/// degenerates mod 2.
pub fn make_essential(t: &Vec3, r: &Mat3) -> Result<Mat3, SceneError> {
    if t.iter().all(|c| !c.is_unit()) {
        return Err(SceneError::ZeroTranslation);
    }
    Ok(mat_mul(&skew(t), r))
}

/// Skew-symmetric matrix with random even entries, suitable for
/// [`cayley_rotation`].
pub fn random_even_skew<R: Rng>(rng: &mut R, precision: u32) -> Mat3 {
    let axis = [
        PadicInt::new(rng.gen::<u64>() & !1, precision),
        PadicInt::new(rng.gen::<u64>() & !1, precision),
        PadicInt::new(rng.gen::<u64>() & !1, precision),
    ];
    skew(&axis)
}

/// Random translation with at least one unit coordinate.
pub fn random_translation<R: Rng>(rng: &mut R, precision: u32) -> Vec3 {
    let mut t = [
        PadicInt::new(rng.gen::<u64>(), precision),
        PadicInt::new(rng.gen::<u64>(), precision),
        PadicInt::new(rng.gen::<u64>() | 1, precision),
    ];
    // Shuffle which coordinate carries the forced unit so the epipole is not
    // biased towards one axis.
    let k = (rng.gen::<u32>() % 3) as usize;
    t.swap(2, k);
    t
}

/// Completes a correspondence for a fixed first point.  The epipolar line
/// l = u^T E is required to be nonzero; with v its minimal coordinate
/// valuation, the coordinate of u' at that pivot is solved by exact division
/// so that l . u' = 0 mod 2^{m-v}, the remaining coordinates are free (the
/// last is pinned to 1 whenever it is not the pivot).  Returns the pair
/// truncated to the effective precision m - v.
fn complete_match<R: Rng>(
    e_gt: &Mat3,
    u: &Vec3,
    rng: &mut R,
) -> Result<((Vec3, Vec3), u32), SceneError> {
    let m = e_gt[0][0].precision();
    let l = vec_mat(u, e_gt);
    let v = match l.iter().filter_map(|c| c.val2()).min() {
        Some(v) => v,
        None => return Err(SceneError::DegenerateEpipolarLine),
    };
    let pivot = (0..3).find(|&j| l[j].val2() == Some(v)).unwrap();
    let eff = m - v;

    let mut up = [PadicInt::zero(m); 3];
    for (j, c) in up.iter_mut().enumerate() {
        if j == pivot {
            continue;
        }
        *c = if j == 2 {
            PadicInt::one(m)
        } else {
            PadicInt::new(rng.gen::<u64>(), m)
        };
    }
    let mut rest = PadicInt::zero(m);
    for j in 0..3 {
        if j != pivot {
            rest = rest + l[j] * up[j];
        }
    }
    // Every non-pivot coordinate of l also has valuation >= v, so the shift
    // is exact.
    let rest = rest.shr_exact(v).expect("pivot valuation is minimal");
    let unit = l[pivot].shr_exact(v).expect("pivot valuation is exact");
    let inv = unit.inv_unit().expect("shifted pivot is a unit");
    up[pivot] = (-rest * inv).widen(m);

    let pair = (
        [u[0].truncate(eff), u[1].truncate(eff), u[2].truncate(eff)],
        [up[0].truncate(eff), up[1].truncate(eff), up[2].truncate(eff)],
    );
    Ok((pair, eff))
}

/// Draws one inlier correspondence for `e_gt`.  The first point is
/// (a, b, 1) with random a, b; it is redrawn while its epipolar line is
/// even, so the effective precision of the returned pair equals the
/// precision of `e_gt`.
pub fn sample_correspondence<R: Rng>(
    e_gt: &Mat3,
    rng: &mut R,
) -> Result<((Vec3, Vec3), u32), SceneError> {
    let m = e_gt[0][0].precision();
    for _ in 0..LINE_RETRIES {
        let u = [
            PadicInt::new(rng.gen::<u64>(), m),
            PadicInt::new(rng.gen::<u64>(), m),
            PadicInt::one(m),
        ];
        let l = vec_mat(&u, e_gt);
        if l.iter().any(|c| c.is_unit()) {
            return complete_match(e_gt, &u, rng);
        }
    }
    Err(SceneError::DegenerateEpipolarLine)
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub e_gt: Mat3,
    pub pairs: Vec<(Vec3, Vec3)>,
    /// Flags the pairs whose second point was replaced by a fresh draw.
    pub outliers: Vec<bool>,
}

/// Generates a full scene: random pose, `points` correspondences, and a
/// fraction of outliers whose second point ignores the epipolar constraint.
pub fn generate_scene<R: Rng>(
    rng: &mut R,
    precision: u32,
    points: usize,
    outlier_frac: f64,
) -> Result<SyntheticScene, SceneError> {
    assert!(
        (0.0..=1.0).contains(&outlier_frac),
        "outlier fraction {} out of range",
        outlier_frac
    );
    let r = cayley_rotation(&random_even_skew(rng, precision))?;
    let t = random_translation(rng, precision);
    let e_gt = make_essential(&t, &r)?;

    let mut pairs = Vec::with_capacity(points);
    let mut outliers = Vec::with_capacity(points);
    for _ in 0..points {
        let ((u, mut up), eff) = sample_correspondence(&e_gt, rng)?;
        debug_assert_eq!(eff, precision);
        let is_outlier = rng.gen_bool(outlier_frac);
        if is_outlier {
            up = [
                PadicInt::new(rng.gen::<u64>(), precision),
                PadicInt::new(rng.gen::<u64>(), precision),
                PadicInt::one(precision),
            ];
        }
        pairs.push((u, up));
        outliers.push(is_outlier);
    }
    Ok(SyntheticScene {
        e_gt,
        pairs,
        outliers,
    })
}

/// Residual of the epipolar form at one pair, u^T E u'.
pub fn epipolar_residual(e: &Mat3, u: &Vec3, up: &Vec3) -> PadicInt {
    dot3(&vec_mat(u, e), up)
}

/// Checks the trace constraint 2 E E^T E - tr(E E^T) E = 0 and det E = 0
/// numerically at the precision of `e`.
pub fn satisfies_trace_identity(e: &Mat3) -> bool {
    let m = e[0][0].precision();
    let ee_t = mat_mul(e, &mat_transpose(e));
    let two = PadicInt::from_i64(2, m);
    let lhs = mat_sub(
        &crate::mat::mat_scale(two, &mat_mul(&ee_t, e)),
        &crate::mat::mat_scale(mat_trace(&ee_t), e),
    );
    lhs.iter().flatten().all(|c| c.is_zero()) && crate::mat::mat_det(e).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{mat_det, mat_zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: i64, m: u32) -> PadicInt {
        PadicInt::from_i64(v, m)
    }

    #[test]
    fn cayley_of_zero_skew_is_identity() {
        let r = cayley_rotation(&mat_zero(8)).unwrap();
        assert_eq!(r, mat_identity(8));
    }

    #[test]
    fn cayley_rotation_is_orthogonal() {
        let m = 16;
        let s = skew(&[p(10, m), p(-6, m), p(2, m)]);
        let r = cayley_rotation(&s).unwrap();
        assert_eq!(mat_mul(&mat_transpose(&r), &r), mat_identity(m));
        assert_eq!(mat_det(&r), PadicInt::one(m));
    }

    #[test]
    fn odd_skew_is_rejected() {
        let m = 8;
        let s = skew(&[p(1, m), p(0, m), p(0, m)]);
        assert_eq!(cayley_rotation(&s), Err(SceneError::NotEven));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = 8;
        let mut s = mat_zero(m);
        s[0][1] = p(2, m);
        s[1][0] = p(2, m);
        assert_eq!(cayley_rotation(&s), Err(SceneError::NotSkew));
    }

    #[test]
    fn essential_of_unit_x_translation() {
        let m = 8;
        let t = [p(1, m), p(0, m), p(0, m)];
        let e = make_essential(&t, &mat_identity(m)).unwrap();
        let expect = [
            [p(0, m), p(0, m), p(0, m)],
            [p(0, m), p(0, m), p(-1, m)],
            [p(0, m), p(1, m), p(0, m)],
        ];
        assert_eq!(e, expect);
    }

    #[test]
    fn even_translation_is_rejected() {
        let m = 4;
        let t = [p(2, m), p(4, m), p(6, m)];
        assert_eq!(
            make_essential(&t, &mat_identity(m)),
            Err(SceneError::ZeroTranslation)
        );
    }

    #[test]
    fn ground_truth_satisfies_the_trace_identity() {
        let m = 16;
        let s = skew(&[p(10, m), p(-6, m), p(2, m)]);
        let r = cayley_rotation(&s).unwrap();
        let e = make_essential(&[p(3, m), p(2, m), p(7, m)], &r).unwrap();
        assert!(satisfies_trace_identity(&e));
        assert!(!satisfies_trace_identity(&mat_identity(m)));
    }

    #[test]
    fn sampled_pairs_lie_on_the_epipolar_line() {
        let m = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_even_skew(&mut rng, m);
        let r = cayley_rotation(&s).unwrap();
        let e = make_essential(&random_translation(&mut rng, m), &r).unwrap();
        for _ in 0..50 {
            let ((u, up), eff) = sample_correspondence(&e, &mut rng).unwrap();
            assert_eq!(eff, m);
            assert!(epipolar_residual(&e, &u, &up).is_zero());
            assert_eq!(u[2], PadicInt::one(m));
        }
    }

    #[test]
    fn pivot_coordinate_is_forced_by_exact_division() {
        let m = 8;
        let t = [p(1, m), p(0, m), p(0, m)];
        let e = make_essential(&t, &mat_identity(m)).unwrap();
        // u = (0,0,1) has line (0,1,0): the pivot is the middle coordinate
        // and the forced value is 0, while the last stays pinned to 1.
        let u = [p(0, m), p(0, m), p(1, m)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ((_, up), eff) = complete_match(&e, &u, &mut rng).unwrap();
        assert_eq!(eff, m);
        assert!(up[1].is_zero());
        assert_eq!(up[2], PadicInt::one(m));
        assert!(epipolar_residual(&e, &u, &up).is_zero());
    }

    #[test]
    fn zero_matrix_has_no_usable_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            sample_correspondence(&mat_zero(8), &mut rng),
            Err(SceneError::DegenerateEpipolarLine)
        );
    }

    #[test]
    fn generated_scene_mixes_inliers_and_outliers() {
        let m = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scene = generate_scene(&mut rng, m, 200, 0.3).unwrap();
        assert_eq!(scene.pairs.len(), 200);
        let flagged = scene.outliers.iter().filter(|&&o| o).count();
        assert!((30..=90).contains(&flagged), "outlier count {}", flagged);
        let mut broken = 0usize;
        for (i, (u, up)) in scene.pairs.iter().enumerate() {
            let r = epipolar_residual(&scene.e_gt, u, up);
            if scene.outliers[i] {
                broken += usize::from(!r.is_zero());
            } else {
                assert!(r.is_zero());
            }
        }
        // A replaced point satisfies the constraint only by accident.
        assert!(broken * 10 >= flagged * 9, "{} of {}", broken, flagged);
    }
}
