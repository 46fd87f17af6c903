//! Closed planar boundary curves built from C² arcs.
//!
//! A [`BoundaryCurve`] is a counterclockwise chain of [`Arc`]s placed in the
//! plane by a [`Similarity`]. Pointwise geometry is exposed through
//! [`BoundaryPoint`]: the outward normal is the clockwise quarter turn of the
//! unit tangent and curvature is positive where the domain is locally
//! convex, so a circle of radius `R` has `κ = 1/R`.
//!
//! Besides the per-arc parameter `(arc, t)` every point has a *global*
//! parameter `u ∈ [0, n_arcs)`: the integer part selects the arc and the
//! fractional part is the normalized local parameter. `u` is continuous across
//! junctions, which is what the nearest-point searches work in.

mod arc;
pub mod catalog;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

pub use arc::{Arc, Radial};

use crate::error::{Error, Result};
use crate::geom::{Similarity, Vec2};
use crate::numeric::{gauss_kronrod, gauss_legendre5};

/// Default normal-jump threshold below which a junction counts as C¹.
pub const DEFAULT_CORNER_ANGLE_TOL: f64 = 1e-6;

/// Arclength-table nodes per requested sample.
const TABLE_OVERSAMPLING: usize = 16;

/// Pointwise boundary geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub arc: usize,
    pub t: f64,
    /// Arclength from the start of arc 0.
    pub s: f64,
    pub position: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

/// Geometry at an arc junction where the normal jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerInfo {
    /// Index of the arc that ends at this corner.
    pub junction: usize,
    /// Arclength of the corner.
    pub s: f64,
    pub position: Vec2,
    pub nu_minus: Vec2,
    pub nu_plus: Vec2,
    pub delta_nu: Vec2,
    /// Signed turning angle of the normal (positive for convex corners).
    pub angle: f64,
    pub convex: bool,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    arcs: Vec<Arc>,
    frame: Similarity,
    closure_tolerance: f64,
    arc_lengths: Vec<f64>,
    arc_starts: Vec<f64>,
    length: f64,
    table: OnceLock<ArclengthTable>,
    diameter: OnceLock<f64>,
}

impl BoundaryCurve {
    /// Validates and builds a curve. Arcs must chain head to tail, close up,
    /// be regular, not self-intersect, and run counterclockwise.
    pub fn new(arcs: Vec<Arc>, frame: Similarity) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::Construction("curve has no arcs".into()));
        }
        if !(frame.scale > 0.0 && frame.scale.is_finite()) {
            return Err(Error::Construction(format!("invalid scale {}", frame.scale)));
        }
        for (i, a) in arcs.iter().enumerate() {
            let (t0, t1) = a.domain();
            if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
                return Err(Error::Construction(format!("arc {i} has empty parameter interval")));
            }
        }
        let mut extent: f64 = 0.0;
        for a in &arcs {
            let (t0, t1) = a.domain();
            for k in 0..=8 {
                let (p, _, _) = a.eval(t0 + (t1 - t0) * k as f64 / 8.0);
                extent = extent.max(p.norm());
            }
        }
        let closure_tolerance = 1e-9 * (1.0 + extent) * frame.scale;

        let mut curve = BoundaryCurve {
            arcs,
            frame,
            closure_tolerance,
            arc_lengths: Vec::new(),
            arc_starts: Vec::new(),
            length: 0.0,
            table: OnceLock::new(),
            diameter: OnceLock::new(),
        };

        for i in 0..curve.arcs.len() {
            let j = (i + 1) % curve.arcs.len();
            let end = curve.derivs(i, curve.arcs[i].domain().1).0;
            let start = curve.derivs(j, curve.arcs[j].domain().0).0;
            if end.dist(start) > curve.closure_tolerance {
                return Err(Error::Construction(format!(
                    "arc {i} ends {} away from the start of arc {j}",
                    end.dist(start)
                )));
            }
        }

        for i in 0..curve.arcs.len() {
            let (t0, t1) = curve.arcs[i].domain();
            for k in 0..=64 {
                let t = t0 + (t1 - t0) * k as f64 / 64.0;
                let (_, d1, _) = curve.derivs(i, t);
                if !(d1.norm() > 0.0) || !d1.is_finite() {
                    return Err(Error::Construction(format!("arc {i} is not regular at t = {t}")));
                }
            }
        }

        let mut start = 0.0;
        for i in 0..curve.arcs.len() {
            let (t0, t1) = curve.arcs[i].domain();
            let len = curve.arc_integral(i, t0, t1, |_, d1, _| d1.norm());
            if !(len > 0.0) {
                return Err(Error::Construction(format!("arc {i} has zero length")));
            }
            curve.arc_starts.push(start);
            curve.arc_lengths.push(len);
            start += len;
        }
        curve.length = start;

        if curve.signed_area() <= 0.0 {
            return Err(Error::Construction("curve is not counterclockwise".into()));
        }
        curve.check_simple()?;
        Ok(curve)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn frame(&self) -> &Similarity {
        &self.frame
    }

    /// Always true: clockwise input is rejected at construction.
    pub fn is_counterclockwise(&self) -> bool {
        true
    }

    pub fn closure_tolerance(&self) -> f64 {
        self.closure_tolerance
    }

    /// Total arclength.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc_lengths
    }

    /// Arclength at which each arc starts.
    pub fn arc_starts(&self) -> &[f64] {
        &self.arc_starts
    }

    /// Same curve placed by `outer ∘ frame`.
    pub fn transformed(&self, outer: &Similarity) -> BoundaryCurve {
        let scale = outer.scale;
        BoundaryCurve {
            arcs: self.arcs.clone(),
            frame: outer.compose(&self.frame),
            closure_tolerance: self.closure_tolerance * scale,
            arc_lengths: self.arc_lengths.iter().map(|l| l * scale).collect(),
            arc_starts: self.arc_starts.iter().map(|l| l * scale).collect(),
            length: self.length * scale,
            table: OnceLock::new(),
            diameter: OnceLock::new(),
        }
    }

    pub fn scaled(&self, c: f64) -> BoundaryCurve {
        self.transformed(&Similarity::scaling(c))
    }

    pub fn rotated(&self, angle: f64) -> BoundaryCurve {
        self.transformed(&Similarity::rotation(angle))
    }

    pub fn translated(&self, v: Vec2) -> BoundaryCurve {
        self.transformed(&Similarity::translation(v))
    }

    /// World-space position and parameter derivatives on arc `i`.
    #[inline]
    pub fn derivs(&self, i: usize, t: f64) -> (Vec2, Vec2, Vec2) {
        let (p, d1, d2) = self.arcs[i].eval(t);
        (
            self.frame.apply_point(p),
            self.frame.apply_vector(d1),
            self.frame.apply_vector(d2),
        )
    }

    /// Signed curvature from parameter derivatives.
    #[inline]
    pub fn curvature(&self, i: usize, t: f64) -> f64 {
        let (_, d1, d2) = self.derivs(i, t);
        d1.cross(d2) / d1.norm().powi(3)
    }

    /// `∫_{t0}^{t1} g(p, p', p'') dt` on arc `i` by adaptive Gauss–Kronrod.
    pub fn arc_integral<G: Fn(Vec2, Vec2, Vec2) -> f64>(&self, i: usize, t0: f64, t1: f64, g: G) -> f64 {
        // Split into a few panels so the adaptive rule sees local structure.
        let panels = 16;
        let tol = 1e-14 * (1.0 + self.frame.scale);
        (0..panels)
            .map(|k| {
                let a = t0 + (t1 - t0) * k as f64 / panels as f64;
                let b = t0 + (t1 - t0) * (k + 1) as f64 / panels as f64;
                gauss_kronrod(
                    |t| {
                        let (p, d1, d2) = self.derivs(i, t);
                        g(p, d1, d2)
                    },
                    a,
                    b,
                    tol,
                )
            })
            .sum()
    }

    /// `∮ g ds` summed over all arcs, where `g` receives the boundary point.
    pub fn boundary_integral<G: Fn(&BoundaryPoint) -> f64>(&self, g: G) -> f64 {
        (0..self.arcs.len())
            .map(|i| {
                let (t0, t1) = self.arcs[i].domain();
                self.arc_integral(i, t0, t1, |p, d1, d2| {
                    let bp = self.point_from_derivs(i, f64::NAN, f64::NAN, p, d1, d2);
                    g(&bp) * d1.norm()
                })
            })
            .sum()
    }

    fn signed_area(&self) -> f64 {
        (0..self.arcs.len())
            .map(|i| {
                let (t0, t1) = self.arcs[i].domain();
                0.5 * self.arc_integral(i, t0, t1, |p, d1, _| p.cross(d1))
            })
            .sum()
    }

    fn point_from_derivs(&self, arc: usize, t: f64, s: f64, p: Vec2, d1: Vec2, d2: Vec2) -> BoundaryPoint {
        let speed = d1.norm();
        let tangent = d1 / speed;
        BoundaryPoint {
            arc,
            t,
            s,
            position: p,
            tangent,
            normal: tangent.perp_cw(),
            curvature: d1.cross(d2) / (speed * speed * speed),
        }
    }

    /// Geometry at `(arc, t)`.
    pub fn eval(&self, arc: usize, t: f64) -> Result<BoundaryPoint> {
        let a = self
            .arcs
            .get(arc)
            .ok_or_else(|| Error::Domain(format!("arc index {arc} out of range")))?;
        let (t0, t1) = a.domain();
        let slack = 1e-12 * (t1 - t0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::Domain(format!("parameter {t} outside [{t0}, {t1}] on arc {arc}")));
        }
        let t = t.clamp(t0, t1);
        Ok(self.point_at(arc, t))
    }

    /// Unchecked evaluation, including the arclength coordinate.
    pub fn point_at(&self, arc: usize, t: f64) -> BoundaryPoint {
        let (p, d1, d2) = self.derivs(arc, t);
        let s = self.arclength_at(arc, t);
        self.point_from_derivs(arc, t, s, p, d1, d2)
    }

    /// Arclength coordinate of `(arc, t)`.
    pub fn arclength_at(&self, arc: usize, t: f64) -> f64 {
        let t0 = self.arcs[arc].domain().0;
        self.arc_starts[arc] + self.arc_integral_short(arc, t0, t)
    }

    fn arc_integral_short(&self, arc: usize, a: f64, b: f64) -> f64 {
        let tol = 1e-13 * (1.0 + self.frame.scale);
        gauss_kronrod(|t| self.derivs(arc, t).1.norm(), a, b, tol)
    }

    /// Global parameter of `(arc, t)`.
    pub fn global_param(&self, arc: usize, t: f64) -> f64 {
        let (t0, t1) = self.arcs[arc].domain();
        arc as f64 + (t - t0) / (t1 - t0)
    }

    /// Inverse of [`global_param`](Self::global_param), wrapping modulo the arc count.
    pub fn split_global(&self, u: f64) -> (usize, f64) {
        let n = self.arcs.len();
        let u = u.rem_euclid(n as f64);
        let mut arc = u.floor() as usize;
        let mut frac = u - arc as f64;
        if arc >= n {
            arc = n - 1;
            frac = 1.0;
        }
        let (t0, t1) = self.arcs[arc].domain();
        (arc, t0 + frac * (t1 - t0))
    }

    /// Position and derivatives with respect to the global parameter.
    #[inline]
    pub fn derivs_global(&self, u: f64) -> (Vec2, Vec2, Vec2) {
        let (arc, t) = self.split_global(u);
        let (t0, t1) = self.arcs[arc].domain();
        let k = t1 - t0;
        let (p, d1, d2) = self.derivs(arc, t);
        (p, d1 * k, d2 * (k * k))
    }

    pub fn point_global(&self, u: f64) -> BoundaryPoint {
        let (arc, t) = self.split_global(u);
        self.point_at(arc, t)
    }

    /// Position and outward normals at the end of arc `i` and the start of
    /// the following arc.
    pub fn junction(&self, i: usize) -> (Vec2, Vec2, Vec2) {
        let j = (i + 1) % self.arcs.len();
        let (p, d_minus, _) = self.derivs(i, self.arcs[i].domain().1);
        let (_, d_plus, _) = self.derivs(j, self.arcs[j].domain().0);
        (p, d_minus.normalized().perp_cw(), d_plus.normalized().perp_cw())
    }

    /// Corners: junctions whose normal jump exceeds `angle_tol` radians.
    pub fn detect_corners(&self, angle_tol: f64) -> Vec<CornerInfo> {
        (0..self.arcs.len())
            .filter_map(|i| {
                let (position, nu_minus, nu_plus) = self.junction(i);
                let angle = nu_minus.cross(nu_plus).atan2(nu_minus.dot(nu_plus));
                (angle.abs() > angle_tol).then(|| CornerInfo {
                    junction: i,
                    s: (self.arc_starts[i] + self.arc_lengths[i]) % self.length,
                    position,
                    nu_minus,
                    nu_plus,
                    delta_nu: nu_plus - nu_minus,
                    angle,
                    convex: nu_minus.cross(nu_plus) > 0.0,
                })
            })
            .collect()
    }

    /// Corners at the default angle tolerance.
    pub fn corners(&self) -> Vec<CornerInfo> {
        self.detect_corners(DEFAULT_CORNER_ANGLE_TOL)
    }

    /// Signed normal-turning angles at every junction, including C¹ ones.
    pub fn junction_angles(&self) -> Vec<f64> {
        (0..self.arcs.len())
            .map(|i| {
                let (_, a, b) = self.junction(i);
                a.cross(b).atan2(a.dot(b))
            })
            .collect()
    }

    /// Table for arclength ↦ parameter inversion; built on first use.
    fn default_table(&self) -> &ArclengthTable {
        self.table.get_or_init(|| ArclengthTable::build(self, TABLE_OVERSAMPLING * 1024))
    }

    /// The point at arclength `s` (taken modulo the length).
    pub fn point_at_arclength(&self, s: f64) -> BoundaryPoint {
        let s = s.rem_euclid(self.length);
        let (arc, t) = self.default_table().invert(self, s);
        let (p, d1, d2) = self.derivs(arc, t);
        self.point_from_derivs(arc, t, s, p, d1, d2)
    }

    /// `n` points equispaced in arclength. Single-arc curves start at `s = 0`;
    /// curves with junctions are offset by half a step so no sample lands on a
    /// junction.
    pub fn resample_arclength(&self, n: usize) -> Result<Vec<BoundaryPoint>> {
        if n < 1 {
            return Err(Error::Configuration("sample count must be positive".into()));
        }
        let table = ArclengthTable::build(self, TABLE_OVERSAMPLING * n);
        let step = self.length / n as f64;
        let offset = if self.arcs.len() > 1 { 0.5 } else { 0.0 };
        Ok((0..n)
            .map(|k| {
                let s = (k as f64 + offset) * step;
                let (arc, t) = table.invert(self, s);
                let (p, d1, d2) = self.derivs(arc, t);
                self.point_from_derivs(arc, t, s, p, d1, d2)
            })
            .collect())
    }

    /// `(min ⟨y, ν⟩ > 0, min ⟨y, ν⟩)` over `n` arclength samples.
    pub fn check_starshaped(&self, n: usize) -> Result<(bool, f64)> {
        let min = self
            .resample_arclength(n)?
            .iter()
            .map(|p| p.position.dot(p.normal))
            .fold(f64::INFINITY, f64::min);
        Ok((min > 0.0, min))
    }

    /// Diameter of a dense sampling (cached).
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            let pts: Vec<Vec2> = self
                .resample_arclength(1024)
                .expect("positive count")
                .iter()
                .map(|p| p.position)
                .chain((0..self.arcs.len()).map(|i| self.junction(i).0))
                .collect();
            let mut d: f64 = 0.0;
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    d = d.max(a.dist(*b));
                }
            }
            d
        })
    }

    /// Axis-aligned bounding box `(min, max)` of a dense sampling.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..self.arcs.len() {
            let (t0, t1) = self.arcs[i].domain();
            for k in 0..=512 {
                let p = self.derivs(i, t0 + (t1 - t0) * k as f64 / 512.0).0;
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Closed polyline through dense samples and every junction, in order.
    /// Used for winding-number insideness.
    pub fn polygon(&self, per_arc_min: usize, total: usize) -> Vec<Vec2> {
        let mut out = Vec::new();
        for i in 0..self.arcs.len() {
            let (t0, t1) = self.arcs[i].domain();
            let k = ((total as f64 * self.arc_lengths[i] / self.length).ceil() as usize).max(per_arc_min);
            for j in 0..k {
                out.push(self.derivs(i, t0 + (t1 - t0) * j as f64 / k as f64).0);
            }
        }
        out
    }

    fn check_simple(&self) -> Result<()> {
        let n_total = (64 * self.arcs.len()).clamp(256, 1024);
        let poly = self.polygon(8, n_total);
        let n = poly.len();
        for i in 0..n {
            let (a0, a1) = (poly[i], poly[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (b0, b1) = (poly[j], poly[(j + 1) % n]);
                if segments_cross(a0, a1, b0, b1) {
                    return Err(Error::Construction(format!(
                        "curve self-intersects near ({:.4}, {:.4})",
                        a0.x, a0.y
                    )));
                }
            }
        }
        Ok(())
    }

    /// `∮ κ ds` by quadrature plus the signed corner turning angles; `2π` for a
    /// simple closed counterclockwise curve.
    pub fn total_turning(&self) -> f64 {
        let smooth: f64 = (0..self.arcs.len())
            .map(|i| {
                let (t0, t1) = self.arcs[i].domain();
                self.arc_integral(i, t0, t1, |_, d1, d2| d1.cross(d2) / d1.norm_sq())
            })
            .sum();
        smooth + self.junction_angles().iter().sum::<f64>()
    }
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Cumulative arclength at parameter nodes, per arc.
#[derive(Debug, Clone)]
struct ArclengthTable {
    /// `nodes[arc]` holds `(t, s_local)` pairs, first at the arc start.
    nodes: Vec<Vec<(f64, f64)>>,
}

impl ArclengthTable {
    fn build(curve: &BoundaryCurve, resolution: usize) -> Self {
        let nodes = (0..curve.arcs.len())
            .map(|i| {
                let (t0, t1) = curve.arcs[i].domain();
                let k = ((resolution as f64 * curve.arc_lengths[i] / curve.length).ceil() as usize).max(8);
                let mut acc = 0.0;
                let mut out = Vec::with_capacity(k + 1);
                out.push((t0, 0.0));
                for j in 0..k {
                    let a = t0 + (t1 - t0) * j as f64 / k as f64;
                    let b = t0 + (t1 - t0) * (j + 1) as f64 / k as f64;
                    acc += gauss_legendre5(|t| curve.derivs(i, t).1.norm(), a, b);
                    out.push((b, acc));
                }
                // Snap the table end to the quadrature length of the arc.
                let scale = curve.arc_lengths[i] / acc;
                for n in out.iter_mut() {
                    n.1 *= scale;
                }
                out
            })
            .collect();
        ArclengthTable { nodes }
    }

    /// `(arc, t)` at global arclength `s ∈ [0, L)`: linear interpolation in
    /// the table, polished by Newton steps on the node-local integral.
    fn invert(&self, curve: &BoundaryCurve, s: f64) -> (usize, f64) {
        let starts = &curve.arc_starts;
        let arc = match starts.partition_point(|&a| a <= s) {
            0 => 0,
            k => k - 1,
        };
        let local = (s - starts[arc]).clamp(0.0, curve.arc_lengths[arc]);
        let nodes = &self.nodes[arc];
        let j = match nodes.partition_point(|n| n.1 <= local) {
            0 => 0,
            k => (k - 1).min(nodes.len() - 2),
        };
        let (ta, sa) = nodes[j];
        let (tb, sb) = nodes[j + 1];
        let mut t = ta + (tb - ta) * (local - sa) / (sb - sa);
        for _ in 0..3 {
            let here = sa + gauss_legendre5(|x| curve.derivs(arc, x).1.norm(), ta, t);
            let speed = curve.derivs(arc, t).1.norm();
            t = (t - (here - local) / speed).clamp(ta, tb);
        }
        (arc, t)
    }
}

/// Full turn, for callers comparing total turning.
pub const FULL_TURN: f64 = 2.0 * PI;
