//! Fixed-size complex linear algebra for the polarization space {H, V} and
//! the joint path ⊗ polarization space.
//!
//! Everything here is `Copy` and allocation free. Joint components are
//! indexed `2 * path + pol`, where `path` is 0/1 for whichever pair of path
//! states is current (a/b before BS1, 1/2 inside the interferometer, c/d
//! after BS2) and `pol` is 0 for H, 1 for V.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

pub type ComplexAmp = Complex64;

pub const ZERO: ComplexAmp = Complex64::new(0.0, 0.0);
pub const ONE: ComplexAmp = Complex64::new(1.0, 0.0);
pub const I: ComplexAmp = Complex64::new(0.0, 1.0);

/// Amplitudes over {|H⟩, |V⟩}. Not necessarily normalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolVector {
    pub h: ComplexAmp,
    pub v: ComplexAmp,
}

impl PolVector {
    pub const H: PolVector = PolVector { h: ONE, v: ZERO };
    pub const V: PolVector = PolVector { h: ZERO, v: ONE };
    pub const ZERO: PolVector = PolVector { h: ZERO, v: ZERO };

    pub const fn new(h: ComplexAmp, v: ComplexAmp) -> Self {
        PolVector { h, v }
    }

    pub fn norm_sq(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn scale(&self, c: ComplexAmp) -> Self {
        PolVector::new(self.h * c, self.v * c)
    }

    pub fn max_abs_diff(&self, other: &PolVector) -> f64 {
        (self.h - other.h).norm().max((self.v - other.v).norm())
    }

    pub fn is_finite(&self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }
}

/// 2×2 operator on polarization, rows and columns ordered (H, V).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolOperator {
    pub m: [[ComplexAmp; 2]; 2],
}

impl PolOperator {
    pub const fn new(m: [[ComplexAmp; 2]; 2]) -> Self {
        PolOperator { m }
    }

    pub const fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub const fn zero() -> Self {
        Self::scalar(ZERO)
    }

    pub const fn scalar(c: ComplexAmp) -> Self {
        PolOperator::new([[c, ZERO], [ZERO, c]])
    }

    /// σx = |V⟩⟨H| + |H⟩⟨V|.
    pub const fn sigma_x() -> Self {
        PolOperator::new([[ZERO, ONE], [ONE, ZERO]])
    }

    /// |H⟩⟨H|
    pub const fn project_h() -> Self {
        PolOperator::new([[ONE, ZERO], [ZERO, ZERO]])
    }

    /// |V⟩⟨V|
    pub const fn project_v() -> Self {
        PolOperator::new([[ZERO, ZERO], [ZERO, ONE]])
    }

    pub fn apply(&self, x: PolVector) -> PolVector {
        let m = &self.m;
        PolVector::new(m[0][0] * x.h + m[0][1] * x.v, m[1][0] * x.h + m[1][1] * x.v)
    }

    /// `self · rhs`, i.e. `rhs` acts first.
    pub fn compose(&self, rhs: &PolOperator) -> PolOperator {
        let (a, b) = (&self.m, &rhs.m);
        let mut c = [[ZERO; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        PolOperator::new(c)
    }

    pub fn adjoint(&self) -> PolOperator {
        let m = &self.m;
        PolOperator::new([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn scale(&self, c: ComplexAmp) -> PolOperator {
        let mut out = self.m;
        out.iter_mut().flatten().for_each(|x| *x *= c);
        PolOperator::new(out)
    }

    pub fn max_abs_diff(&self, other: &PolOperator) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// ‖U†U − I‖_max ≤ tol
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().compose(self).max_abs_diff(&Self::identity()) <= tol
    }
}

impl Add for PolOperator {
    type Output = PolOperator;
    fn add(self, rhs: PolOperator) -> PolOperator {
        let mut out = self.m;
        for (x, y) in out.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *x += y;
        }
        PolOperator::new(out)
    }
}

impl Sub for PolOperator {
    type Output = PolOperator;
    fn sub(self, rhs: PolOperator) -> PolOperator {
        self + rhs.scale(-ONE)
    }
}

impl Mul for PolOperator {
    type Output = PolOperator;
    fn mul(self, rhs: PolOperator) -> PolOperator {
        self.compose(&rhs)
    }
}

impl Mul<PolVector> for PolOperator {
    type Output = PolVector;
    fn mul(self, rhs: PolVector) -> PolVector {
        self.apply(rhs)
    }
}

pub fn apply(op: &PolOperator, vec: PolVector) -> PolVector {
    op.apply(vec)
}

pub fn compose(a: &PolOperator, b: &PolOperator) -> PolOperator {
    a.compose(b)
}

pub fn norm_sq(vec: &PolVector) -> f64 {
    vec.norm_sq()
}

/// Two path states, each carrying a polarization vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointVector {
    pub c: [ComplexAmp; 4],
}

impl JointVector {
    pub const ZERO: JointVector = JointVector { c: [ZERO; 4] };

    /// |path⟩ ⊗ pol
    pub fn product(path: usize, pol: PolVector) -> Self {
        let mut c = [ZERO; 4];
        c[2 * path] = pol.h;
        c[2 * path + 1] = pol.v;
        JointVector { c }
    }

    /// Polarization part on one path, i.e. (⟨path| ⊗ I)|ψ⟩.
    pub fn on_path(&self, path: usize) -> PolVector {
        PolVector::new(self.c[2 * path], self.c[2 * path + 1])
    }

    pub fn norm_sq(&self) -> f64 {
        self.c.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// 4×4 operator on path ⊗ polarization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOperator {
    pub m: [[ComplexAmp; 4]; 4],
}

impl JointOperator {
    pub fn identity() -> Self {
        Self::kron(&[[ONE, ZERO], [ZERO, ONE]], &PolOperator::identity())
    }

    /// `path ⊗ pol`
    pub fn kron(path: &[[ComplexAmp; 2]; 2], pol: &PolOperator) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (p, prow) in path.iter().enumerate() {
            for (q, &pq) in prow.iter().enumerate() {
                for s in 0..2 {
                    for t in 0..2 {
                        m[2 * p + s][2 * q + t] = pq * pol.m[s][t];
                    }
                }
            }
        }
        JointOperator { m }
    }

    /// Acts as `pol[k]` on path k, leaving the paths unmixed.
    pub fn path_diagonal(pol: [PolOperator; 2]) -> Self {
        let p0 = [[ONE, ZERO], [ZERO, ZERO]];
        let p1 = [[ZERO, ZERO], [ZERO, ONE]];
        Self::kron(&p0, &pol[0]).add(&Self::kron(&p1, &pol[1]))
    }

    /// |path⟩⟨path| ⊗ I
    pub fn path_projector(path: usize) -> Self {
        let mut pol = [PolOperator::zero(); 2];
        pol[path] = PolOperator::identity();
        Self::path_diagonal(pol)
    }

    /// I ⊗ pol
    pub fn polarization(pol: &PolOperator) -> Self {
        Self::kron(&[[ONE, ZERO], [ZERO, ONE]], pol)
    }

    fn add(&self, rhs: &JointOperator) -> JointOperator {
        let mut m = self.m;
        for (x, y) in m.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *x += y;
        }
        JointOperator { m }
    }

    pub fn apply(&self, x: &JointVector) -> JointVector {
        let mut c = [ZERO; 4];
        for (ci, row) in c.iter_mut().zip(self.m.iter()) {
            *ci = row.iter().zip(x.c.iter()).map(|(a, b)| a * b).sum();
        }
        JointVector { c }
    }

    /// `self · rhs`
    pub fn compose(&self, rhs: &JointOperator) -> JointOperator {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, mij) in row.iter_mut().enumerate() {
                *mij = (0..4).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        JointOperator { m }
    }

    pub fn adjoint(&self) -> JointOperator {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, mij) in row.iter_mut().enumerate() {
                *mij = self.m[j][i].conj();
            }
        }
        JointOperator { m }
    }

    pub fn max_abs_diff(&self, other: &JointOperator) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().compose(self).max_abs_diff(&Self::identity()) <= tol
    }

    /// Idempotent and Hermitian.
    pub fn is_projector(&self, tol: f64) -> bool {
        self.compose(self).max_abs_diff(self) <= tol && self.adjoint().max_abs_diff(self) <= tol
    }
}

impl Mul for JointOperator {
    type Output = JointOperator;
    fn mul(self, rhs: JointOperator) -> JointOperator {
        self.compose(&rhs)
    }
}

impl Mul<JointVector> for JointOperator {
    type Output = JointVector;
    fn mul(self, rhs: JointVector) -> JointVector {
        self.apply(&rhs)
    }
}
