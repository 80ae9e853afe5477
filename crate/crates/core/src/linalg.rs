//! Small dense 3×3 tensor arithmetic, generic over [`Scalar`].

use crate::dual::Scalar;

pub type Vec3 = [f64; 3];

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S = f64>(pub [[S; 3]; 3]);

impl<S: Scalar> Mat3<S> {
    pub fn zeros() -> Self {
        Mat3([[S::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = S::constant(1.0);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> S) -> Self {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> S {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> S {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cofactor matrix, so that `inverse = cofactor(A)ᵀ / det(A)`.
    pub fn cofactor(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Mat3([
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ])
    }

    /// Inverse; `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.value() == 0.0 {
            return None;
        }
        let cof = self.cofactor();
        let inv_det = det.recip();
        Some(Self::from_fn(|i, j| cof.0[j][i] * inv_det))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| {
            self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j] + self.0[i][2] * other.0[2][j]
        })
    }

    pub fn scale(&self, s: S) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + other.0[i][j])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - other.0[i][j])
    }

    /// Double contraction `A : B = Σ Aᵢⱼ Bᵢⱼ`.
    pub fn ddot(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc += self.0[i][j] * other.0[i][j];
            }
        }
        acc
    }

    pub fn values(&self) -> Mat3<f64> {
        Mat3::from_fn(|i, j| self.0[i][j].value())
    }
}

impl Mat3<f64> {
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3(rows)
    }

    pub fn diag(d: [f64; 3]) -> Self {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        std::array::from_fn(|i| self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2])
    }

    /// Row-major flattening.
    pub fn flat(&self) -> [f64; 9] {
        std::array::from_fn(|k| self.0[k / 3][k % 3])
    }
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = Mat3::from_rows([[2.0, 0.3, -1.0], [0.1, 1.5, 0.2], [0.4, -0.2, 3.0]]);
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&Mat3::identity()) < 1e-14);
        assert!(Mat3::<f64>::zeros().inverse().is_none());
    }

    #[test]
    fn determinant_of_triangular() {
        let a = Mat3::from_rows([[2.0, 5.0, 7.0], [0.0, 3.0, 11.0], [0.0, 0.0, 4.0]]);
        assert_eq!(a.det(), 24.0);
    }
}
