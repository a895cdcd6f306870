//! Vector algebra in E⁴.
//!
//! [`Vec4`] is a plain coordinate quadruple and [`Frame4`] an ordered,
//! positively oriented orthonormal frame `(T, M1, M2, M3)`. Frames are built
//! with a modified Gram-Schmidt pass that re-orthogonalizes once, and missing
//! frame vectors are filled in deterministically from the canonical basis.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for rank deficiency in [`gram_schmidt`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Tolerance on pairwise inner products accepted by [`complete_frame`].
const ORTHONORMAL_TOL: f64 = 1e-8;

/// A point or vector in E⁴.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec4(pub [f64; 4]);

impl Vec4 {
    pub const ZERO: Vec4 = Vec4([0.0; 4]);

    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Vec4([x1, x2, x3, x4])
    }

    /// Canonical basis vector `e_{i+1}` (zero based index).
    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 4];
        c[i] = 1.0;
        Vec4(c)
    }

    pub fn dot(self, other: Vec4) -> f64 {
        dot(self, other)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Largest coordinate difference in absolute value.
    pub fn max_abs_diff(self, other: Vec4) -> f64 {
        (self - other).0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Index<usize> for Vec4 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec4 {
    type Output = Vec4;
    fn add(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl AddAssign for Vec4 {
    fn add_assign(&mut self, o: Vec4) {
        *self = *self + o;
    }
}

impl Sub for Vec4 {
    type Output = Vec4;
    fn sub(self, o: Vec4) -> Vec4 {
        Vec4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Vec4 {
    type Output = Vec4;
    fn neg(self) -> Vec4 {
        Vec4(self.0.map(|c| -c))
    }
}

impl Mul<f64> for Vec4 {
    type Output = Vec4;
    fn mul(self, s: f64) -> Vec4 {
        Vec4(self.0.map(|c| c * s))
    }
}

impl Mul<Vec4> for f64 {
    type Output = Vec4;
    fn mul(self, v: Vec4) -> Vec4 {
        v * self
    }
}

impl Div<f64> for Vec4 {
    type Output = Vec4;
    fn div(self, s: f64) -> Vec4 {
        Vec4(self.0.map(|c| c / s))
    }
}

/// Euclidean inner product.
pub fn dot(u: Vec4, v: Vec4) -> f64 {
    u.0[0] * v.0[0] + u.0[1] * v.0[1] + u.0[2] * v.0[2] + u.0[3] * v.0[3]
}

/// Determinant of the 4×4 matrix whose rows are `rows`.
pub fn det4(rows: [Vec4; 4]) -> f64 {
    let m = rows.map(|r| r.0);
    let minor = |r: usize, c0: usize, c1: usize| m[r][c0] * m[r + 1][c1] - m[r][c1] * m[r + 1][c0];
    // Laplace expansion over the first two rows against the last two.
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut det = 0.0;
    for &(a, b) in &pairs {
        let rest: Vec<usize> = (0..4).filter(|&c| c != a && c != b).collect();
        let sign = if (a + b + 1) % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * minor(0, a, b) * minor(2, rest[0], rest[1]);
    }
    det
}

/// An ordered orthonormal frame `(T, M1, M2, M3)` of E⁴.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame4 {
    pub t: Vec4,
    pub m1: Vec4,
    pub m2: Vec4,
    pub m3: Vec4,
}

impl Frame4 {
    pub const CANONICAL: Frame4 = Frame4 {
        t: Vec4::new(1.0, 0.0, 0.0, 0.0),
        m1: Vec4::new(0.0, 1.0, 0.0, 0.0),
        m2: Vec4::new(0.0, 0.0, 1.0, 0.0),
        m3: Vec4::new(0.0, 0.0, 0.0, 1.0),
    };

    pub fn from_vectors(v: [Vec4; 4]) -> Self {
        Frame4 { t: v[0], m1: v[1], m2: v[2], m3: v[3] }
    }

    pub fn vectors(&self) -> [Vec4; 4] {
        [self.t, self.m1, self.m2, self.m3]
    }

    pub fn normals(&self) -> [Vec4; 3] {
        [self.m1, self.m2, self.m3]
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.vectors();
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in i..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(v[i], v[j]) - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        det4(self.vectors())
    }

    /// Components of `w` along `(T, M1, M2, M3)`.
    pub fn coords(&self, w: Vec4) -> [f64; 4] {
        self.vectors().map(|e| dot(e, w))
    }

    /// Ambient vector with components `c` along `(T, M1, M2, M3)`.
    pub fn compose(&self, c: [f64; 4]) -> Vec4 {
        self.t * c[0] + self.m1 * c[1] + self.m2 * c[2] + self.m3 * c[3]
    }

    /// Applies a constant rotation to the normal part: `M'_j = Σ_i r[j][i] M_i`.
    pub fn rotate_normals(&self, r: [[f64; 3]; 3]) -> Frame4 {
        let m = self.normals();
        let row = |j: usize| m[0] * r[j][0] + m[1] * r[j][1] + m[2] * r[j][2];
        Frame4 { t: self.t, m1: row(0), m2: row(1), m3: row(2) }
    }

    /// Rotates `(M2, M3)` by `angle` radians, fixing `T` and `M1`.
    pub fn rotate_m2_m3(&self, angle: f64) -> Frame4 {
        let (s, c) = angle.sin_cos();
        self.rotate_normals([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    }

    /// Re-orthonormalizes the frame keeping `tangent` as the exact first
    /// vector. The normals are Gram-Schmidt corrected in order.
    pub fn reanchor(&self, tangent: Vec4) -> Result<Frame4> {
        let v = gram_schmidt(&[tangent, self.m1, self.m2, self.m3], DEFAULT_RANK_TOL)?;
        Ok(Frame4::from_vectors([v[0], v[1], v[2], v[3]]))
    }
}

/// Removes from `w` its components along the orthonormal set `basis`,
/// sweeping twice.
fn reject(w: Vec4, basis: &[Vec4]) -> Vec4 {
    let mut r = w;
    for _ in 0..2 {
        for &q in basis {
            r = r - q * dot(q, r);
        }
    }
    r
}

/// Modified Gram-Schmidt with one re-orthogonalization sweep.
///
/// Fails with `RankDeficient(k)` (1-based) when the residual of the k-th
/// input falls below `tol` times its norm.
pub fn gram_schmidt(vs: &[Vec4], tol: f64) -> Result<Vec<Vec4>> {
    if vs.is_empty() || vs.len() > 4 {
        return Err(Error::InvalidInput(format!(
            "gram_schmidt takes 1 to 4 vectors, got {}",
            vs.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("gram_schmidt tolerance must be positive".into()));
    }
    let mut out: Vec<Vec4> = Vec::with_capacity(vs.len());
    for (k, &w) in vs.iter().enumerate() {
        let scale = w.norm();
        let r = reject(w, &out);
        let rn = r.norm();
        if !(scale > 0.0) || rn < tol * scale {
            return Err(Error::RankDeficient(k + 1));
        }
        out.push(r / rn);
    }
    Ok(out)
}

/// Extends 1 to 3 orthonormal vectors to a positively oriented [`Frame4`].
///
/// Free slots are filled by running the canonical basis `e1..e4` in index
/// order through Gram-Schmidt against the accumulated set, skipping
/// dependent candidates. If the result is negatively oriented the last
/// completed vector is negated.
pub fn complete_frame(partial: &[Vec4]) -> Result<Frame4> {
    if partial.is_empty() || partial.len() > 3 {
        return Err(Error::InvalidInput(format!(
            "complete_frame takes 1 to 3 vectors, got {}",
            partial.len()
        )));
    }
    let mut defect = 0.0_f64;
    for (i, &a) in partial.iter().enumerate() {
        for (j, &b) in partial.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((dot(a, b) - target).abs());
        }
    }
    if !(defect <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal(defect));
    }

    let mut acc: Vec<Vec4> = partial.to_vec();
    for i in 0..4 {
        if acc.len() == 4 {
            break;
        }
        let r = reject(Vec4::basis(i), &acc);
        let rn = r.norm();
        if rn < DEFAULT_RANK_TOL {
            continue;
        }
        acc.push(r / rn);
    }
    debug_assert_eq!(acc.len(), 4);
    let mut frame = Frame4::from_vectors([acc[0], acc[1], acc[2], acc[3]]);
    if frame.determinant() < 0.0 {
        frame.m3 = -frame.m3;
    }
    Ok(frame)
}
