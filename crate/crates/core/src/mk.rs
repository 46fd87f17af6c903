//! Closed-form rolling layer of the Monge–Kantorovich (sandpile) system
//!
//! ```text
//! −div(v ∇u) = f,  |∇u| ≤ 1,  u = 0 on ∂Ω,  (1 − |∇u|) v = 0
//! ```
//!
//! with `u = d_Ω` and, off the cut locus,
//! `v_f(x) = ∫₀^τ f(x − tν) (1 − (d + t)κ) / (1 − dκ) dt`, where `ν`, `κ`
//! are taken at the nearest boundary point `π(x)`, `d = d_Ω(x)` and
//! `τ = λ(π(x)) − d`. On the cut locus `v_f = 0`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPoint;
use crate::cutlocus::{cut_samples, cut_value, CutSample};
use crate::distfield::{inside_near_foot, DistanceField, GridSpec};
use crate::error::{Error, Result};
use crate::geom::{periodic_gap, Vec2};
use crate::integrals::ScalarField;
use crate::numeric::{adaptive_simpson, median};
use crate::projection::{ExactProjector, Projector};
use crate::symmetry::{assemble_report, CriterionTolerances, PointValue, SymmetryReport};

const QUAD_TOL: f64 = 1e-12;

/// Source term `f` of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceField {
    Constant { gamma: f64 },
    Field { field: ScalarField },
}

impl SourceField {
    pub fn constant(gamma: f64) -> Self {
        SourceField::Constant { gamma }
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            SourceField::Constant { gamma } => *gamma,
            SourceField::Field { field } => field.eval(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            SourceField::Constant { gamma } => Some(*gamma),
            SourceField::Field { field } => field.as_constant(),
        }
    }
}

/// `v_f` at one point with the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VfValue {
    pub value: f64,
    pub singular: bool,
    pub d: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub tau: f64,
}

/// Ray integral from depth `d` to `d + τ` along the inward normal at `y`.
fn ray_vf(y: &BoundaryPoint, d: f64, tau: f64, f: &SourceField) -> Result<f64> {
    if tau <= 0.0 {
        return Ok(0.0);
    }
    let jac0 = 1.0 - d * y.curvature;
    if jac0 <= 1e-12 {
        return Err(Error::DegenerateChart { depth: d, jacobian: jac0 });
    }
    let x = y.position - y.normal * d;
    Ok(adaptive_simpson(
        |t| f.eval(x - y.normal * t) * (1.0 - (d + t) * y.curvature) / jac0,
        0.0,
        tau,
        QUAD_TOL,
    ))
}

/// `v_f(x)` for an interior point. Points whose two best nearest points are
/// equally close (gap below `1e-9 × diameter`) are on the cut locus and get 0.
pub fn vf_at(proj: &ExactProjector<'_>, x: Vec2, f: &SourceField, tol: f64) -> Result<VfValue> {
    let curve = proj.curve();
    let diam = curve.diameter();
    let near = proj.nearest_with_gap(x, 1e-3 * curve.length());
    let foot = near.foot;
    if foot.distance > 0.0 && !inside_near_foot(curve, x, &foot) {
        return Err(Error::Domain(format!("point ({}, {}) is outside the domain", x.x, x.y)));
    }
    let y = curve.point_global(foot.u);
    let d = foot.distance;
    if near.gap <= 1e-9 * diam {
        return Ok(VfValue { value: 0.0, singular: true, d, kappa: y.curvature, lambda: d, tau: 0.0 });
    }
    let lambda = cut_value(proj, &y, tol)?;
    let tau = (lambda - d).max(0.0);
    let value = ray_vf(&y, d, tau, f)?;
    Ok(VfValue { value, singular: false, d, kappa: y.curvature, lambda, tau })
}

/// Boundary trace `v_f(y) = ∫₀^λ f(y − tν)(1 − tκ) dt`. Corner points
/// return the limit value 0 with the flag set.
pub fn vf_boundary(proj: &ExactProjector<'_>, y: &BoundaryPoint, f: &SourceField, tol: f64) -> Result<(f64, bool)> {
    let curve = proj.curve();
    if curve.corners().iter().any(|c| periodic_gap(c.s, y.s, curve.length()) <= 10.0 * tol) {
        return Ok((0.0, true));
    }
    let lambda = cut_value(proj, y, tol)?;
    Ok((ray_vf(y, 0.0, lambda, f)?, false))
}

/// Trace from a precomputed cut sample.
pub fn vf_trace_sample(sample: &CutSample, f: &SourceField) -> Result<f64> {
    if sample.corner_limit {
        return Ok(0.0);
    }
    ray_vf(&sample.point, 0.0, sample.lambda, f)
}

/// Grid solution of the system with `u = d_Ω` and `v = v_f`.
#[derive(Debug, Clone, Serialize)]
pub struct MKSolution {
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: Vec<f64>,
    /// `−div(v∇u) − f` on cells with a regular 3×3 neighbourhood, NaN elsewhere.
    pub residual: Vec<f64>,
    pub singular: Vec<bool>,
    pub inside: Vec<bool>,
    /// Finite-difference `|∇u|` where available, NaN elsewhere.
    pub grad_norm: Vec<f64>,
    #[serde(skip)]
    pub table: LambdaTable,
}

/// Arclength table of cut values used to interpolate `λ(π(x))` on the grid.
#[derive(Debug, Clone, Default)]
pub struct LambdaTable {
    s: Vec<f64>,
    lambda: Vec<f64>,
    length: f64,
}

impl LambdaTable {
    pub fn from_samples(samples: &[CutSample], length: f64) -> Self {
        LambdaTable {
            s: samples.iter().map(|c| c.point.s).collect(),
            lambda: samples.iter().map(|c| c.lambda).collect(),
            length,
        }
    }

    /// Periodic linear interpolation; samples must be sorted by arclength.
    pub fn at(&self, s: f64) -> f64 {
        let n = self.s.len();
        let s = s.rem_euclid(self.length);
        let k = self.s.partition_point(|&v| v <= s);
        let (a, b) = if k == 0 { (n - 1, 0) } else { (k - 1, k % n) };
        let sa = if k == 0 { self.s[a] - self.length } else { self.s[a] };
        let sb = if b == 0 && k != 0 { self.s[b] + self.length } else { self.s[b] };
        let w = if sb > sa { (s - sa) / (sb - sa) } else { 0.0 };
        self.lambda[a] + w * (self.lambda[b] - self.lambda[a])
    }
}

/// `v_f` on every cell of the field's grid. `λ` at the nearest point is
/// interpolated from `max(2048, 2L/h)` exact cut values and capped by
/// `1/κ`; curvature is read at the nearest point itself.
pub fn vf_field(field: &DistanceField, f: &SourceField, tol: f64) -> Result<MKSolution> {
    let curve = field.curve();
    let g = *field.grid();
    let proj = ExactProjector::new(curve)?;
    let n_table = 2048usize.max((2.0 * curve.length() / g.h).ceil() as usize);
    let table = LambdaTable::from_samples(&cut_samples(&proj, n_table, tol)?, curve.length());

    let cells: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % g.nx, idx / g.nx);
            if !field.is_inside(i, j) || field.is_singular(i, j) {
                return Ok((0.0, 0.0));
            }
            let d = field.distance(i, j);
            let y = curve.point_global(field.nearest_param(i, j));
            let mut lambda = table.at(field.nearest_arclength(i, j));
            if y.curvature > 0.0 {
                lambda = lambda.min(1.0 / y.curvature);
            }
            let tau = (lambda - d).max(0.0);
            if 1.0 - d * y.curvature <= 1e-12 {
                // focal cell: τ vanishes up to rounding
                return Ok((0.0, 0.0));
            }
            Ok((ray_vf(&y, d, tau, f)?, tau))
        })
        .collect::<Result<_>>()?;
    let v: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let tau: Vec<f64> = cells.iter().map(|c| c.1).collect();

    let grads: Vec<Option<Vec2>> =
        (0..g.len()).into_par_iter().map(|idx| field.gradient(idx % g.nx, idx / g.nx)).collect();
    let flux: Vec<Option<Vec2>> = grads.iter().zip(&v).map(|(gr, &vv)| gr.map(|gr| gr * vv)).collect();

    let regular = |i: usize, j: usize| field.is_inside(i, j) && !field.is_singular(i, j);
    let residual: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % g.nx, idx / g.nx);
            if i == 0 || j == 0 || i + 1 >= g.nx || j + 1 >= g.ny {
                return f64::NAN;
            }
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    if !regular(a, b) || !field.feet_continuous((i, j), (a, b)) {
                        return f64::NAN;
                    }
                }
            }
            let fl = |a: usize, b: usize| flux[g.index(a, b)];
            match (fl(i + 1, j), fl(i - 1, j), fl(i, j + 1), fl(i, j - 1)) {
                (Some(e), Some(w), Some(n), Some(s)) => {
                    let div = (e.x - w.x + n.y - s.y) / (2.0 * g.h);
                    -div - f.eval(g.center(i, j))
                }
                _ => f64::NAN,
            }
        })
        .collect();

    Ok(MKSolution {
        grid: g,
        u: (0..g.len()).map(|idx| if field.is_inside(idx % g.nx, idx / g.nx) { field.distance(idx % g.nx, idx / g.nx) } else { 0.0 }).collect(),
        v,
        tau,
        residual,
        singular: (0..g.len()).map(|idx| field.is_singular(idx % g.nx, idx / g.nx)).collect(),
        inside: (0..g.len()).map(|idx| field.is_inside(idx % g.nx, idx / g.nx)).collect(),
        grad_norm: grads.iter().map(|gr| gr.map_or(f64::NAN, |v| v.norm())).collect(),
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub cells: usize,
    pub max_abs: f64,
    pub median_abs: f64,
    /// `Σ |r| h²`.
    pub l1: f64,
}

/// Weak-form comparison for the tent `ψ_ε = min(d/ε, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakForm {
    pub eps: f64,
    /// `(1/ε) ∫_{d<ε} v ⟨∇u, ∇d⟩`, with `∇u = ∇d` a unit vector.
    pub flux: f64,
    /// `∫_Ω f ψ_ε`.
    pub psi_integral: f64,
    pub difference: f64,
}

impl MKSolution {
    pub fn residual_stats(&self) -> ResidualStats {
        let vals: Vec<f64> = self.residual.iter().filter(|r| !r.is_nan()).map(|r| r.abs()).collect();
        ResidualStats {
            cells: vals.len(),
            max_abs: vals.iter().copied().fold(0.0, f64::max),
            median_abs: median(&vals),
            l1: vals.iter().sum::<f64>() * self.grid.h * self.grid.h,
        }
    }

    pub fn max_v(&self) -> f64 {
        self.v.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max (1 − |∇u|) v` over cells with a finite-difference gradient.
    pub fn complementarity(&self) -> f64 {
        self.grad_norm
            .iter()
            .zip(&self.v)
            .filter(|(g, _)| !g.is_nan())
            .map(|(g, v)| (1.0 - g) * v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|v|` jump between non-singular inside neighbours whose
    /// nearest points are close along the boundary.
    pub fn max_jump(&self, field: &DistanceField) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !self.inside[g.index(i, j)] || self.singular[g.index(i, j)] {
                    continue;
                }
                for (di, dj) in [(1, 0), (0, 1)] {
                    if let Some(n) = field.regular_neighbor(i, j, di, dj) {
                        worst = worst.max((self.v[g.index(i, j)] - self.v[g.index(n.0, n.1)]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Weak-form comparison on the field the solution was built from. Cells
    /// within `ε + h` of the boundary are split into 4×4 sub-cells, each
    /// projected onto the boundary; deeper cells have `ψ_ε = 1`.
    pub fn weak_form(&self, field: &DistanceField, f: &SourceField, eps: f64) -> Result<WeakForm> {
        const SUB: usize = 4;
        let g = &self.grid;
        let curve = field.curve();
        let hs = g.h / SUB as f64;
        let parts: Vec<(f64, f64)> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % g.nx, idx / g.nx);
                let c = g.center(i, j);
                let d = field.distance(i, j);
                if d >= eps + g.h {
                    let psi = if field.is_inside(i, j) { f.eval(c) * g.h * g.h } else { 0.0 };
                    return Ok((0.0, psi));
                }
                let (mut flux, mut psi) = (0.0, 0.0);
                for b in 0..SUB {
                    for a in 0..SUB {
                        let x = c + Vec2::new((a as f64 + 0.5) * hs - 0.5 * g.h, (b as f64 + 0.5) * hs - 0.5 * g.h);
                        let p = field.project(x)?;
                        if p.distance <= 0.0 || !inside_near_foot(curve, x, &p.foot) {
                            continue;
                        }
                        psi += f.eval(x) * (p.distance / eps).min(1.0);
                        if p.distance < eps && !p.is_singular {
                            let y = curve.point_global(p.foot.u);
                            let lambda = self.table.at(p.foot.s);
                            let lambda = if y.curvature > 0.0 { lambda.min(1.0 / y.curvature) } else { lambda };
                            if 1.0 - p.distance * y.curvature > 1e-12 {
                                flux += ray_vf(&y, p.distance, (lambda - p.distance).max(0.0), f)?;
                            }
                        }
                    }
                }
                Ok((flux * hs * hs, psi * hs * hs))
            })
            .collect::<Result<_>>()?;
        let flux = parts.iter().map(|p| p.0).sum::<f64>() / eps;
        let psi_integral = parts.iter().map(|p| p.1).sum::<f64>();
        Ok(WeakForm { eps, flux, psi_integral, difference: (flux - psi_integral).abs() })
    }

    /// Writes `x,y,u,v,tau,residual,singular` rows for inside cells.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,u,v,tau,residual,singular")?;
        let g = &self.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                if !self.inside[k] {
                    continue;
                }
                let c = g.center(i, j);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    c.x, c.y, self.u[k], self.v[k], self.tau[k], self.residual[k], self.singular[k] as u8
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MkVerdict {
    pub gamma: f64,
    pub trace_min: f64,
    pub trace_max: f64,
    pub trace_mean: f64,
    pub report: SymmetryReport,
}

/// Criterion evaluated on `v_f|∂Ω / γ` for a constant source `γ > 0`.
pub fn mk_verdict(
    proj: &ExactProjector<'_>,
    gamma: f64,
    samples: &[CutSample],
    tols: &CriterionTolerances,
) -> Result<MkVerdict> {
    if !(gamma > 0.0) {
        return Err(Error::Configuration(format!("source must be a positive constant, got {gamma}")));
    }
    let f = SourceField::constant(gamma);
    let traced: Vec<CutSample> = samples
        .iter()
        .map(|s| Ok(CutSample { phi: vf_trace_sample(s, &f)? / gamma, ..*s }))
        .collect::<Result<_>>()?;
    let smooth: Vec<f64> = traced.iter().filter(|s| !s.corner_limit).map(|s| s.phi * gamma).collect();
    if smooth.is_empty() {
        return Err(Error::Configuration("no smooth samples".into()));
    }
    let at = crate::symmetry::max_curvature_point(proj, samples, tols.cut_tol)?;
    let (trace0, _) = vf_boundary(proj, &at.y0, &f, tols.cut_tol)?;
    let report = assemble_report(proj.curve(), &traced, PointValue { phi: trace0 / gamma, ..at }, tols)?;
    Ok(MkVerdict {
        gamma,
        trace_min: smooth.iter().copied().fold(f64::INFINITY, f64::min),
        trace_max: smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        trace_mean: smooth.iter().sum::<f64>() / smooth.len() as f64,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::catalog;

    #[test]
    fn disk_closed_form() {
        let c = catalog::circle(1.0).unwrap();
        let p = ExactProjector::new(&c).unwrap();
        let one = SourceField::constant(1.0);
        let v = vf_at(&p, Vec2::new(0.5, 0.0), &one, 1e-9).unwrap();
        assert!((v.value - 0.25).abs() < 1e-10);
        assert!((v.tau - 0.5).abs() < 1e-10);
        let centre = vf_at(&p, Vec2::new(0.0, 0.0), &one, 1e-9).unwrap();
        assert!(centre.singular);
        assert_eq!(centre.value, 0.0);
        let near = vf_at(&p, Vec2::new(0.0, 0.999999), &one, 1e-9).unwrap();
        assert!((near.value - 0.5).abs() < 1e-6);
        assert!(matches!(vf_at(&p, Vec2::new(1.5, 0.0), &one, 1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_trace_linear_in_gamma() {
        let c = catalog::circle(1.0).unwrap();
        let p = ExactProjector::new(&c).unwrap();
        let y = c.point_at_arclength(1.0);
        let (one, corner) = vf_boundary(&p, &y, &SourceField::constant(1.0), 1e-9).unwrap();
        let (three, _) = vf_boundary(&p, &y, &SourceField::constant(3.0), 1e-9).unwrap();
        assert!(!corner);
        assert!((one - 0.5).abs() < 1e-12);
        assert!((three - 1.5).abs() < 1e-12);
    }

    #[test]
    fn square_corner_trace() {
        let sq = catalog::square(2.0).unwrap();
        let p = ExactProjector::new(&sq).unwrap();
        let corner = sq.corners()[0];
        let y = sq.point_at_arclength(corner.s);
        let (v, flag) = vf_boundary(&p, &y, &SourceField::constant(1.0), 1e-6).unwrap();
        assert!(flag);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lambda_table_interpolates_periodically() {
        let c = catalog::circle(1.0).unwrap();
        let mut samples = Vec::new();
        for k in 0..4 {
            let y = c.point_at_arclength(k as f64);
            samples.push(CutSample { point: y, lambda: k as f64, phi: 0.0, lambda_kappa: 0.0, corner_limit: false });
        }
        let t = LambdaTable::from_samples(&samples, 6.0);
        assert!((t.at(1.5) - 1.5).abs() < 1e-12);
        // between s = 3 (λ 3) and s = 6 ≡ 0 (λ 0)
        assert!((t.at(4.5) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let c = catalog::circle(1.0).unwrap();
        let p = ExactProjector::new(&c).unwrap();
        let tols = CriterionTolerances::for_curve(&c);
        assert!(matches!(mk_verdict(&p, 0.0, &[], &tols), Err(Error::Configuration(_))));
    }
}
