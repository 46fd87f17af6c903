//! Distance to the boundary sampled on a uniform grid.
//!
//! Every cell centre gets its distance `d`, the arclength/parameter of its
//! nearest boundary point, an inside flag and the distance gap to the best
//! well-separated competitor. Cells with a small gap approximate the
//! singular set Σ (points with more than one nearest boundary point).

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryCurve;
use crate::error::{Error, Result};
use crate::geom::{periodic_gap, Vec2};
use crate::projection::{Foot, Projector, SampleRing};

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 16;

/// Boundary samples used by [`DistanceField::build_default`].
pub const DEFAULT_RING_SAMPLES: usize = 1024;

/// Uniform square cells. Cell `(i, j)` is centred at `((i0 + i) h, (j0 + j) h)`,
/// so the origin is always a cell centre when it lies in the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(h: f64, i0: i64, j0: i64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Configuration(format!("grid spacing must be positive, got {h}")));
        }
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::Configuration(format!(
                "grid needs at least {MIN_CELLS} cells per axis, got {nx}x{ny}"
            )));
        }
        Ok(GridSpec { h, i0, j0, nx, ny })
    }

    /// Grid of spacing `h` covering the curve with the given margin (default
    /// 5% of the larger extent, never less than `2h`).
    pub fn with_spacing(curve: &BoundaryCurve, h: f64, margin: Option<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Configuration(format!("grid spacing must be positive, got {h}")));
        }
        let (lo, hi) = curve.bounding_box();
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let margin = margin.unwrap_or(0.05 * extent).max(2.0 * h);
        let i0 = ((lo.x - margin) / h).floor() as i64;
        let i1 = ((hi.x + margin) / h).ceil() as i64;
        let j0 = ((lo.y - margin) / h).floor() as i64;
        let j1 = ((hi.y + margin) / h).ceil() as i64;
        let nx = ((i1 - i0 + 1) as usize).max(MIN_CELLS);
        let ny = ((j1 - j0 + 1) as usize).max(MIN_CELLS);
        GridSpec::new(h, i0, j0, nx, ny)
    }

    /// Grid with about `nx × ny` cells covering the curve. The spacing is
    /// fixed by the tighter axis, so the cell counts may come out slightly
    /// different from the request.
    pub fn covering(curve: &BoundaryCurve, nx: usize, ny: usize, margin: Option<f64>) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::Configuration(format!(
                "grid needs at least {MIN_CELLS} cells per axis, got {nx}x{ny}"
            )));
        }
        let (lo, hi) = curve.bounding_box();
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let m = margin.unwrap_or(0.05 * extent);
        let h = ((hi.x - lo.x + 2.0 * m) / (nx - 3) as f64).max((hi.y - lo.y + 2.0 * m) / (ny - 3) as f64);
        GridSpec::with_spacing(curve, h, Some(m))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new((self.i0 + i as i64) as f64 * self.h, (self.j0 + j as i64) as f64 * self.h)
    }

    /// `(min, max)` corners of the covered rectangle (cell edges).
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let half = Vec2::new(0.5 * self.h, 0.5 * self.h);
        (self.center(0, 0) - half, self.center(self.nx - 1, self.ny - 1) + half)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        let (lo, hi) = self.bounds();
        x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y
    }

    /// Cell whose centre is closest to `x`.
    pub fn cell_of(&self, x: Vec2) -> Option<(usize, usize)> {
        if !self.contains(x) {
            return None;
        }
        let i = ((x.x / self.h).round() as i64 - self.i0).clamp(0, self.nx as i64 - 1) as usize;
        let j = ((x.y / self.h).round() as i64 - self.j0).clamp(0, self.ny as i64 - 1) as usize;
        Some((i, j))
    }

    /// Neighbour of `(i, j)` shifted by `(di, dj)`, if on the grid.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<(usize, usize)> {
        let a = i as i64 + di;
        let b = j as i64 + dj;
        (a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny).then_some((a as usize, b as usize))
    }
}

/// Result of [`DistanceField::project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldProjection {
    pub foot: Foot,
    pub distance: f64,
    pub is_singular: bool,
}

#[derive(Debug, Clone)]
pub struct DistanceField {
    curve: BoundaryCurve,
    grid: GridSpec,
    ring: SampleRing,
    separation: f64,
    threshold: f64,
    d: Vec<f64>,
    inside: Vec<bool>,
    foot_u: Vec<f64>,
    foot_s: Vec<f64>,
    gap: Vec<f64>,
    sigma: Vec<bool>,
}

struct Cell {
    d: f64,
    inside: bool,
    u: f64,
    s: f64,
    gap: f64,
}

impl DistanceField {
    /// Builds the field with `m` dense boundary samples (`m ≥ 256`).
    pub fn build(curve: &BoundaryCurve, grid: GridSpec, m: usize) -> Result<Self> {
        if m < 256 {
            return Err(Error::Configuration(format!("need at least 256 boundary samples, got {m}")));
        }
        let (lo, hi) = curve.bounding_box();
        let (blo, bhi) = grid.bounds();
        let pad = 2.0 * grid.h;
        if lo.x - pad < blo.x || lo.y - pad < blo.y || hi.x + pad > bhi.x || hi.y + pad > bhi.y {
            return Err(Error::Construction("grid does not contain the curve with a 2h margin".into()));
        }
        let ring = SampleRing::new(curve, m)?;
        let polygon = curve.polygon(8, 2 * m);
        let separation = 10.0 * grid.h;
        let threshold = 2.0 * grid.h;

        let cells: Vec<Cell> = (0..grid.len())
            .into_par_iter()
            .map_init(
                || Vec::with_capacity(ring.len()),
                |buf, idx| {
                    let x = grid.center(idx % grid.nx, idx / grid.nx);
                    ring.dist2_into(x, buf);
                    let near = ring.nearest_from(curve, x, buf, Some(separation), threshold);
                    let foot = near.foot;
                    let inside = if foot.distance < 1e-12 {
                        winding_number(&polygon, x) != 0
                    } else {
                        inside_near_foot(curve, x, &foot)
                    };
                    Cell { d: foot.distance, inside, u: foot.u, s: foot.s, gap: near.gap }
                },
            )
            .collect();

        let sigma = cells.iter().map(|c| c.inside && c.gap <= threshold).collect();
        Ok(DistanceField {
            curve: curve.clone(),
            grid,
            ring,
            separation,
            threshold,
            d: cells.iter().map(|c| c.d).collect(),
            inside: cells.iter().map(|c| c.inside).collect(),
            foot_u: cells.iter().map(|c| c.u).collect(),
            foot_s: cells.iter().map(|c| c.s).collect(),
            gap: cells.iter().map(|c| c.gap).collect(),
            sigma,
        })
    }

    /// Field on a grid of spacing `h` with [`DEFAULT_RING_SAMPLES`] samples.
    pub fn build_default(curve: &BoundaryCurve, h: f64) -> Result<Self> {
        let m = DEFAULT_RING_SAMPLES.max((curve.length() / h).ceil() as usize);
        DistanceField::build(curve, GridSpec::with_spacing(curve, h, None)?, m)
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ring(&self) -> &SampleRing {
        &self.ring
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    /// Gap threshold for the singular mask (`2h`).
    pub fn sigma_threshold(&self) -> f64 {
        self.threshold
    }

    /// Minimum arclength separation of competing nearest points (`10h`).
    pub fn separation(&self) -> f64 {
        self.separation
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.d[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[self.grid.index(i, j)]
    }

    /// Global boundary parameter of the nearest point.
    #[inline]
    pub fn nearest_param(&self, i: usize, j: usize) -> f64 {
        self.foot_u[self.grid.index(i, j)]
    }

    #[inline]
    pub fn nearest_arclength(&self, i: usize, j: usize) -> f64 {
        self.foot_s[self.grid.index(i, j)]
    }

    #[inline]
    pub fn multiplicity_gap(&self, i: usize, j: usize) -> f64 {
        self.gap[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_singular(&self, i: usize, j: usize) -> bool {
        self.sigma[self.grid.index(i, j)]
    }

    /// Area of the flagged cells.
    pub fn singular_measure(&self) -> f64 {
        self.sigma.iter().filter(|&&s| s).count() as f64 * self.grid.h * self.grid.h
    }

    /// Area of the inside cells.
    pub fn inside_area(&self) -> f64 {
        self.inside.iter().filter(|&&s| s).count() as f64 * self.grid.h * self.grid.h
    }

    /// Nearest boundary point of an arbitrary point in the box: the feet of
    /// the four surrounding cells are re-minimized locally and the best wins.
    pub fn project(&self, x: Vec2) -> Result<FieldProjection> {
        let g = &self.grid;
        let (i, j) = g
            .cell_of(x)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) outside the grid", x.x, x.y)))?;
        let fi = ((x.x / g.h).floor() as i64 - g.i0).clamp(0, g.nx as i64 - 2) as usize;
        let fj = ((x.y / g.h).floor() as i64 - g.j0).clamp(0, g.ny as i64 - 2) as usize;
        let m = self.ring.len();
        let mut best: Option<Foot> = None;
        for (a, b) in [(fi, fj), (fi + 1, fj), (fi, fj + 1), (fi + 1, fj + 1)] {
            // a shift of the query by δ moves the foot by δ / (1 − dκ) along
            // the curve, which blows up near centres of curvature
            let u = self.nearest_param(a, b);
            let (arc, t) = self.curve.split_global(u);
            let jac = 1.0 - self.distance(a, b) * self.curve.curvature(arc, t);
            let reach = 4.0 * g.h + 2.0 * g.h / jac.max(1e-300);
            if !(jac > 0.0) || 2.0 * reach >= self.curve.length() {
                // the global search dominates every local candidate
                best = Some(self.ring.nearest(&self.curve, x, None, 0.0).foot);
                break;
            }
            let window = 8 + (reach / self.ring.spacing()).ceil() as usize;
            let start = self.ring.index_below(u);
            let mut arg = start;
            let mut dmin = f64::INFINITY;
            for k in 0..=2 * window {
                let idx = (start + m + k - window) % m;
                let d = self.ring.point(idx).dist(x);
                if d < dmin {
                    dmin = d;
                    arg = idx;
                }
            }
            let foot = self.ring.refine(&self.curve, x, arg);
            if best.is_none_or(|b| foot.distance < b.distance) {
                best = Some(foot);
            }
        }
        let foot = best.expect("four candidates");
        Ok(FieldProjection { foot, distance: foot.distance, is_singular: self.is_singular(i, j) })
    }

    /// Whether two cells' nearest points are within `4h` of each other along
    /// the boundary, i.e. no cut-locus or projection jump lies between them.
    pub fn feet_continuous(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        let sa = self.nearest_arclength(a.0, a.1);
        let sb = self.nearest_arclength(b.0, b.1);
        periodic_gap(sa, sb, self.curve.length()) <= 4.0 * self.grid.h
    }

    /// Inside, non-singular neighbour with a continuous nearest point.
    pub fn regular_neighbor(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<(usize, usize)> {
        let n = self.grid.offset(i, j, di, dj)?;
        (self.is_inside(n.0, n.1) && !self.is_singular(n.0, n.1) && self.feet_continuous((i, j), n)).then_some(n)
    }

    /// Finite-difference derivative of a cell quantity along one axis:
    /// central when both neighbours are regular, one-sided when only one is.
    pub fn axis_derivative<F: Fn(usize, usize) -> f64>(
        &self,
        i: usize,
        j: usize,
        axis: usize,
        value: F,
    ) -> Option<f64> {
        let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
        let h = self.grid.h;
        let plus = self.regular_neighbor(i, j, di, dj);
        let minus = self.regular_neighbor(i, j, -di, -dj);
        match (plus, minus) {
            (Some(p), Some(q)) => Some((value(p.0, p.1) - value(q.0, q.1)) / (2.0 * h)),
            (Some(p), None) => Some((value(p.0, p.1) - value(i, j)) / h),
            (None, Some(q)) => Some((value(i, j) - value(q.0, q.1)) / h),
            (None, None) => None,
        }
    }

    /// Gradient of `d` at a regular cell.
    pub fn gradient(&self, i: usize, j: usize) -> Option<Vec2> {
        if !self.is_inside(i, j) || self.is_singular(i, j) {
            return None;
        }
        let gx = self.axis_derivative(i, j, 0, |a, b| self.distance(a, b))?;
        let gy = self.axis_derivative(i, j, 1, |a, b| self.distance(a, b))?;
        Some(Vec2::new(gx, gy))
    }

    /// Writes `x,y,d,inside,sigma` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,d,inside,sigma")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let c = self.grid.center(i, j);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    c.x,
                    c.y,
                    self.distance(i, j),
                    self.is_inside(i, j) as u8,
                    self.is_singular(i, j) as u8
                )?;
            }
        }
        Ok(())
    }
}

impl Projector for DistanceField {
    fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    fn nearest(&self, x: Vec2) -> Result<Foot> {
        self.project(x).map(|p| p.foot)
    }

    fn resolution(&self) -> f64 {
        self.grid.h
    }
}

/// Insideness of `x` from its nearest boundary point `foot` (at positive
/// distance). At a junction the interior tangent cone is the intersection
/// (convex) or union (concave) of the two inner half-planes.
pub fn inside_near_foot(curve: &BoundaryCurve, x: Vec2, foot: &Foot) -> bool {
    let at_junction = curve.num_arcs() > 1 && (foot.u - foot.u.round()).abs() < 1e-9;
    if at_junction {
        let k = (foot.u.round() as usize + curve.num_arcs() - 1) % curve.num_arcs();
        let (_, nu_minus, nu_plus) = curve.junction(k);
        let a = (x - foot.point).dot(nu_minus) < 0.0;
        let b = (x - foot.point).dot(nu_plus) < 0.0;
        if nu_minus.cross(nu_plus) >= 0.0 {
            a && b
        } else {
            a || b
        }
    } else {
        let (arc, t) = curve.split_global(foot.u);
        let nu = curve.derivs(arc, t).1.normalized().perp_cw();
        (x - foot.point).dot(nu) < 0.0
    }
}

/// Winding number of a closed polygon around `p`; points on an edge count as 0.
pub fn winding_number(poly: &[Vec2], p: Vec2) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let side = (b - a).cross(p - a);
        if side == 0.0 {
            let within = (p - a).dot(p - b) <= 0.0;
            if within {
                return 0;
            }
        }
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}
