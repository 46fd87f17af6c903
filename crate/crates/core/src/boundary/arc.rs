//! Parametric C² arcs in local (untransformed) coordinates.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Radial profile `r(θ)` of a curve given in polar form about a centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Radial {
    /// `(|cos θ / a|^m + |sin θ / b|^m)^(-1/m)`, `m ≥ 2`.
    Superellipse { a: f64, b: f64, exponent: f64 },
    /// `a0 + Σ_k cos[k-1]·cos(kθ) + sin[k-1]·sin(kθ)`.
    Fourier { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
}

impl Radial {
    /// `(r, r', r'')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            Radial::Superellipse { a, b, exponent } => {
                let m = *exponent;
                let (s, c) = theta.sin_cos();
                let w = c / a;
                let z = s / b;
                let (aw, az) = (w.abs(), z.abs());
                let g = aw.powf(m) + az.powf(m);
                let g1 = -(m / a) * aw.powf(m - 1.0) * w.signum() * s + (m / b) * az.powf(m - 1.0) * z.signum() * c;
                let g2 = -(m / a) * ((m - 1.0) * aw.powf(m - 2.0) * (-s / a) * s + aw.powf(m - 1.0) * w.signum() * c)
                    + (m / b) * ((m - 1.0) * az.powf(m - 2.0) * (c / b) * c - az.powf(m - 1.0) * z.signum() * s);
                let e = -1.0 / m;
                let r = g.powf(e);
                let r1 = e * g.powf(e - 1.0) * g1;
                let r2 = e * ((e - 1.0) * g.powf(e - 2.0) * g1 * g1 + g.powf(e - 1.0) * g2);
                (r, r1, r2)
            }
            Radial::Fourier { a0, cos, sin } => {
                let mut r = *a0;
                let mut r1 = 0.0;
                let mut r2 = 0.0;
                for (k, &ak) in cos.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    r += ak * c;
                    r1 -= ak * kf * s;
                    r2 -= ak * kf * kf * c;
                }
                for (k, &bk) in sin.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    r += bk * s;
                    r1 += bk * kf * c;
                    r2 -= bk * kf * kf * s;
                }
                (r, r1, r2)
            }
        }
    }
}

/// A single C² arc. The parameter runs over `domain()`; counterclockwise
/// traversal of the whole boundary is the caller's responsibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Arc {
    /// `from + t (to - from)`, `t ∈ [0, 1]`.
    Segment { from: Vec2, to: Vec2 },
    /// `center + radius (cos t, sin t)`, `t ∈ [start, end]`, `start < end`.
    Circular { center: Vec2, radius: f64, start: f64, end: f64 },
    /// `center + (a cos t, b sin t)`.
    Elliptic { center: Vec2, a: f64, b: f64, start: f64, end: f64 },
    /// `center + r(t) (cos t, sin t)`.
    Polar { center: Vec2, radial: Radial, start: f64, end: f64 },
}

impl Arc {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Arc::Segment { .. } => (0.0, 1.0),
            Arc::Circular { start, end, .. } | Arc::Elliptic { start, end, .. } | Arc::Polar { start, end, .. } => {
                (*start, *end)
            }
        }
    }

    /// Position and first two parameter derivatives.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        match self {
            Arc::Segment { from, to } => {
                let d = *to - *from;
                (*from + d * t, d, Vec2::ZERO)
            }
            Arc::Circular { center, radius, .. } => {
                let (s, c) = t.sin_cos();
                (
                    *center + Vec2::new(c, s) * *radius,
                    Vec2::new(-s, c) * *radius,
                    Vec2::new(-c, -s) * *radius,
                )
            }
            Arc::Elliptic { center, a, b, .. } => {
                let (s, c) = t.sin_cos();
                (
                    *center + Vec2::new(a * c, b * s),
                    Vec2::new(-a * s, b * c),
                    Vec2::new(-a * c, -b * s),
                )
            }
            Arc::Polar { center, radial, .. } => {
                let (r, r1, r2) = radial.eval(t);
                let (s, c) = t.sin_cos();
                let e = Vec2::new(c, s);
                let ep = Vec2::new(-s, c);
                (*center + e * r, e * r1 + ep * r, e * (r2 - r) + ep * (2.0 * r1))
            }
        }
    }
}
