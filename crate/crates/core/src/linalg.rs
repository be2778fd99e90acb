//! Just enough 2×2 linear algebra for the planar and toral maps.

pub type Vec2 = [f64; 2];

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([[a, 0.0], [0.0, b]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    /// Spectral norm: square root of the largest eigenvalue of `MᵀM`.
    pub fn op_norm(&self) -> f64 {
        let m = &self.0;
        let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let q = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        let r = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let half_tr = 0.5 * (p + r);
        let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        (half_tr + disc).sqrt()
    }
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diagonal_and_rotation() {
        assert!((Mat2::diag(3.0, -0.5).op_norm() - 3.0).abs() < 1e-15);
        let (s, c) = 0.3f64.sin_cos();
        assert!((Mat2([[c, -s], [s, c]]).op_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat2([[2.0, 1.0], [1.0, 1.0]]);
        let i = m.inverse().unwrap();
        let p = m.mul(&i);
        assert!((p.0[0][0] - 1.0).abs() < 1e-15 && p.0[0][1].abs() < 1e-15);
        assert!(Mat2([[1.0, 2.0], [2.0, 4.0]]).inverse().is_none());
    }
}
