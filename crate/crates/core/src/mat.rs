//! Fixed-size 3x3 matrix and 3-vector arithmetic over truncated 2-adics.

use crate::padic::PadicInt;

pub type Vec3 = [PadicInt; 3];
pub type Mat3 = [[PadicInt; 3]; 3];

pub fn mat_zero(m: u32) -> Mat3 {
    [[PadicInt::zero(m); 3]; 3]
}

pub fn mat_identity(m: u32) -> Mat3 {
    let mut a = mat_zero(m);
    for i in 0..3 {
        a[i][i] = PadicInt::one(m);
    }
    a
}

pub fn mat_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][j] - b[i][j];
        }
    }
    c
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let p = a[0][0].precision().min(b[0][0].precision());
    let mut c = mat_zero(p);
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = PadicInt::zero(p);
            for k in 0..3 {
                acc = acc + a[i][k] * b[k][j];
            }
            c[i][j] = acc;
        }
    }
    c
}

pub fn mat_scale(s: PadicInt, a: &Mat3) -> Mat3 {
    let mut c = *a;
    for row in c.iter_mut() {
        for e in row.iter_mut() {
            *e = s * *e;
        }
    }
    c
}

pub fn mat_transpose(a: &Mat3) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[j][i];
        }
    }
    c
}

pub fn mat_det(a: &Mat3) -> PadicInt {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn mat_trace(a: &Mat3) -> PadicInt {
    a[0][0] + a[1][1] + a[2][2]
}

/// Flattens row-major.
pub fn mat_to_vec9(a: &Mat3) -> [PadicInt; 9] {
    let mut out = [a[0][0]; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = a[i][j];
        }
    }
    out
}

pub fn vec9_to_mat(v: &[PadicInt; 9]) -> Mat3 {
    let mut a = [[v[0]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = v[3 * i + j];
        }
    }
    a
}

/// Cross-product matrix: skew(t) * x == t x x.
pub fn skew(t: &Vec3) -> Mat3 {
    let p = t[0].precision();
    let z = PadicInt::zero(p);
    [
        [z, -t[2], t[1]],
        [t[2], z, -t[0]],
        [-t[1], t[0], z],
    ]
}

pub fn mat_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    let p = a[0][0].precision().min(v[0].precision());
    let mut out = [PadicInt::zero(p); 3];
    for i in 0..3 {
        let mut acc = PadicInt::zero(p);
        for k in 0..3 {
            acc = acc + a[i][k] * v[k];
        }
        out[i] = acc;
    }
    out
}

pub fn vec_mat(v: &Vec3, a: &Mat3) -> Vec3 {
    let p = a[0][0].precision().min(v[0].precision());
    let mut out = [PadicInt::zero(p); 3];
    for j in 0..3 {
        let mut acc = PadicInt::zero(p);
        for k in 0..3 {
            acc = acc + v[k] * a[k][j];
        }
        out[j] = acc;
    }
    out
}

pub fn dot3(a: &Vec3, b: &Vec3) -> PadicInt {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Inverse of a matrix that is invertible mod 2 (odd determinant).
pub fn mat_inv_unit(a: &Mat3) -> Option<Mat3> {
    let det = mat_det(a);
    let det_inv = det.inv_unit().ok()?;
    let c = |r1: usize, c1: usize, r2: usize, c2: usize| a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1];
    // adjugate, row-major
    let adj = [
        [c(1, 1, 2, 2), c(0, 2, 2, 1), c(0, 1, 1, 2)],
        [c(1, 2, 2, 0), c(0, 0, 2, 2), c(0, 2, 1, 0)],
        [c(1, 0, 2, 1), c(0, 1, 2, 0), c(0, 0, 1, 1)],
    ];
    Some(mat_scale(det_inv, &adj))
}

/// Projective normal form: scales the matrix by the inverse of the unit
/// part of its first minimal-valuation entry (row-major), so that entry
/// becomes the pure power 2^v. Unit multiples of a matrix share one normal
/// form. Returns the canonical matrix with the pivot's flat index and
/// valuation; `None` for the zero matrix.
pub fn mat_canonicalize(a: &Mat3) -> Option<(Mat3, usize, u32)> {
    let flat = mat_to_vec9(a);
    let mut pivot: Option<(usize, u32)> = None;
    for (i, e) in flat.iter().enumerate() {
        if let Some(v) = e.val2() {
            if pivot.map_or(true, |(_, pv)| v < pv) {
                pivot = Some((i, v));
            }
        }
    }
    let (idx, v) = pivot?;
    let unit = PadicInt::new(flat[idx].residue() >> v, flat[idx].precision());
    let scale = unit.inv_unit().expect("unit part is odd");
    Some((mat_scale(scale, a), idx, v))
}

pub fn mat_widen(a: &Mat3, m: u32) -> Mat3 {
    let mut c = *a;
    for row in c.iter_mut() {
        for e in row.iter_mut() {
            *e = e.widen(m);
        }
    }
    c
}

pub fn mat_truncate(a: &Mat3, m: u32) -> Mat3 {
    let mut c = *a;
    for row in c.iter_mut() {
        for e in row.iter_mut() {
            *e = e.truncate(m);
        }
    }
    c
}
