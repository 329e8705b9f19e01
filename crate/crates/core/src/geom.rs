use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A point or displacement in the plane. Units depend on context: meters
/// for positions, meters per second for velocities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Vec2::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Scales the vector down so its norm does not exceed `max`.
    pub fn clamp_norm(self, max: f64) -> Vec2 {
        let n = self.norm();
        if n > max && n > 0.0 {
            self * (max / n)
        } else {
            self
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn from_slice(s: &[f64]) -> Vec2 {
        Vec2::new(s[0], s[1])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`, used for covariances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub const fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add_diagonal(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx + s, self.xy, self.yy + s)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        (half_tr + r, half_tr - r)
    }

    /// Eigen decomposition: descending eigenvalues and the unit eigenvector of
    /// the larger one. The second eigenvector is its perpendicular.
    pub fn eigen(&self) -> (f64, f64, Vec2) {
        let (l0, l1) = self.eigenvalues();
        let angle = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        (l0, l1, Vec2::new(angle.cos(), angle.sin()))
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quad(&self, v: Vec2) -> f64 {
        self.xx * v.x * v.x + 2.0 * self.xy * v.x * v.y + self.yy * v.y * v.y
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Lower Cholesky factor `(l11, l21, l22)`, or `None` if not positive definite.
    pub fn cholesky(&self) -> Option<(f64, f64, f64)> {
        if self.xx <= 0.0 {
            return None;
        }
        let l11 = self.xx.sqrt();
        let l21 = self.xy / l11;
        let rem = self.yy - l21 * l21;
        if rem <= 0.0 {
            return None;
        }
        Some((l11, l21, rem.sqrt()))
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_rotated_diagonal() {
        // R diag(4, 1) Rᵀ with R a 30° rotation.
        let a = 30f64.to_radians();
        let (c, s) = (a.cos(), a.sin());
        let m = Sym2::new(4.0 * c * c + s * s, 3.0 * c * s, 4.0 * s * s + c * c);
        let (l0, l1, u) = m.eigen();
        assert!((l0 - 4.0).abs() < 1e-12);
        assert!((l1 - 1.0).abs() < 1e-12);
        let mu = m.mul_vec(u);
        assert!((mu - u * 4.0).norm() < 1e-12);
    }

    #[test]
    fn eigen_of_axis_aligned_with_larger_y() {
        let m = Sym2::new(1.0, 0.0, 9.0);
        let (l0, l1, u) = m.eigen();
        assert_eq!((l0, l1), (9.0, 1.0));
        assert!(u.x.abs() < 1e-12 && (u.y.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_and_cholesky() {
        let m = Sym2::new(2.0, 0.5, 1.0);
        let inv = m.inverse().unwrap();
        let v = Vec2::new(0.3, -1.2);
        assert!((inv.mul_vec(m.mul_vec(v)) - v).norm() < 1e-12);
        let (l11, l21, l22) = m.cholesky().unwrap();
        assert!((l11 * l11 - 2.0).abs() < 1e-12);
        assert!((l21 * l21 + l22 * l22 - 1.0).abs() < 1e-12);
        assert!(Sym2::new(1.0, 2.0, 1.0).cholesky().is_none());
    }
}
