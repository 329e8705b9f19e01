use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{Sym2, Vec2};

/// Closed ellipse `{q : (q - center)ᵀ cov⁻¹ (q - center) <= threshold}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidRepr", into = "EllipsoidRepr")]
pub struct Ellipsoid {
    center: Vec2,
    cov: Sym2,
    threshold: f64,
    inv: Sym2,
    /// Semi-axis lengths, major first.
    axes: (f64, f64),
    /// Unit direction of the major axis.
    major: Vec2,
}

#[derive(Serialize, Deserialize)]
struct EllipsoidRepr {
    center: Vec2,
    cov: Sym2,
    threshold: f64,
}

impl TryFrom<EllipsoidRepr> for Ellipsoid {
    type Error = crate::Error;
    fn try_from(r: EllipsoidRepr) -> Result<Self> {
        Ellipsoid::new(r.center, r.cov, r.threshold)
    }
}

impl From<Ellipsoid> for EllipsoidRepr {
    fn from(e: Ellipsoid) -> Self {
        EllipsoidRepr {
            center: e.center,
            cov: e.cov,
            threshold: e.threshold,
        }
    }
}

/// Relative slack on boundary tests so points exactly on a boundary count as
/// inside despite rounding.
const BOUNDARY_SLACK: f64 = 1e-9;

impl Ellipsoid {
    pub fn new(center: Vec2, cov: Sym2, threshold: f64) -> Result<Self> {
        if !center.is_finite() || !cov.is_finite() {
            return Err(invalid("ellipsoid center and shape must be finite"));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(invalid(format!(
                "ellipsoid threshold must be positive, got {threshold}"
            )));
        }
        let (l0, l1, major) = cov.eigen();
        if !(l1 > 0.0) {
            return Err(invalid(format!(
                "ellipsoid shape must be positive definite, eigenvalues {l0}, {l1}"
            )));
        }
        let inv = cov
            .inverse()
            .ok_or_else(|| invalid("ellipsoid shape is singular"))?;
        Ok(Ellipsoid {
            center,
            cov,
            threshold,
            inv,
            axes: ((threshold * l0).sqrt(), (threshold * l1).sqrt()),
            major,
        })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn cov(&self) -> Sym2 {
        self.cov
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn semi_axes(&self) -> (f64, f64) {
        self.axes
    }

    pub fn major_axis(&self) -> Vec2 {
        self.major
    }

    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        Ellipsoid::new(self.center, self.cov, threshold)
    }

    pub fn translated(&self, offset: Vec2) -> Self {
        Ellipsoid {
            center: self.center + offset,
            ..self.clone()
        }
    }

    pub fn mahalanobis_sq(&self, q: Vec2) -> f64 {
        self.inv.quad(q - self.center)
    }

    pub fn contains(&self, q: Vec2) -> bool {
        self.mahalanobis_sq(q) <= self.threshold * (1.0 + BOUNDARY_SLACK)
    }

    /// Euclidean distance from `q` to the ellipse (zero inside).
    pub fn distance(&self, q: Vec2) -> f64 {
        if self.contains(q) {
            return 0.0;
        }
        let d = q - self.center;
        let perp = Vec2::new(-self.major.y, self.major.x);
        let y0 = d.dot(self.major).abs();
        let y1 = d.dot(perp).abs();
        distance_to_axis_aligned(self.axes.0, self.axes.1, y0, y1)
    }

    /// Whether the closed disk of radius `r` around `q` meets the ellipse,
    /// i.e. `q` lies in the Minkowski sum of the ellipse and the disk.
    pub fn intersects_disk(&self, q: Vec2, r: f64) -> bool {
        let d = (q - self.center).norm();
        if d - self.axes.0 > r * (1.0 + BOUNDARY_SLACK) + BOUNDARY_SLACK {
            return false;
        }
        if d <= self.axes.1 + r {
            return true;
        }
        self.distance(q) <= r * (1.0 + BOUNDARY_SLACK) + BOUNDARY_SLACK
    }

    /// Signed clearance of `q`: distance to the ellipse when outside, and
    /// minus a depth estimate (fraction of the minor semi-axis) inside.
    pub fn clearance(&self, q: Vec2) -> f64 {
        let m = self.mahalanobis_sq(q);
        if m <= self.threshold {
            -(1.0 - (m / self.threshold).sqrt()) * self.axes.1
        } else {
            self.distance(q)
        }
    }
}

/// Distance from `(y0, y1)`, both non-negative and outside the ellipse, to
/// the ellipse with semi-axes `e0 >= e1` aligned with the coordinate axes.
/// Robust bisection on the Lagrange-multiplier equation of the closest point.
fn distance_to_axis_aligned(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let sbar = root(r0, z0, z1, g);
            let x0 = r0 * y0 / (sbar + r0);
            let x1 = y1 / (sbar + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}
