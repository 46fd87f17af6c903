//! Minimal planar vector type and similarity transforms.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn normalized(self) -> Vec2 {
        self / self.norm()
    }

    /// Counterclockwise quarter turn, `[[0, -1], [1, 0]]`.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Clockwise quarter turn. Applied to the unit tangent of a
    /// counterclockwise curve it yields the outward normal.
    #[inline]
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    #[inline]
    pub fn rotated(self, cos: f64, sin: f64) -> Vec2 {
        Vec2::new(cos * self.x - sin * self.y, sin * self.x + cos * self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// `x ↦ shift + scale · R(angle) · x`, with `scale > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub cos: f64,
    pub sin: f64,
    pub shift: Vec2,
}

impl Default for Similarity {
    fn default() -> Self {
        Similarity::IDENTITY
    }
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        scale: 1.0,
        cos: 1.0,
        sin: 0.0,
        shift: Vec2::ZERO,
    };

    pub fn rotation(angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Similarity {
            cos,
            sin,
            ..Similarity::IDENTITY
        }
    }

    pub fn scaling(scale: f64) -> Self {
        Similarity {
            scale,
            ..Similarity::IDENTITY
        }
    }

    pub fn translation(shift: Vec2) -> Self {
        Similarity {
            shift,
            ..Similarity::IDENTITY
        }
    }

    #[inline]
    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        self.shift + self.apply_vector(p)
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(self.cos, self.sin) * self.scale
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        let cos = self.cos * inner.cos - self.sin * inner.sin;
        let sin = self.sin * inner.cos + self.cos * inner.sin;
        Similarity {
            scale: self.scale * inner.scale,
            cos,
            sin,
            shift: self.apply_point(inner.shift),
        }
    }
}

/// Shortest distance between two positions on a loop of length `period`.
#[inline]
pub fn periodic_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}
