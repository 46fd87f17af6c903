//! Cut values along inward normals, the criterion function φ, and the
//! normal-ray chart `X(σ, t) = Y(σ) − t N(σ)`.
//!
//! The cut value of a smooth boundary point `y` is the largest depth `t`
//! for which `y` is still the nearest boundary point of `y − t ν(y)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{BoundaryCurve, BoundaryPoint};
use crate::error::{Error, Result};
use crate::geom::{periodic_gap, Vec2};
use crate::numeric::{adaptive_simpson, golden_max};
use crate::projection::Projector;

/// Default bisection tolerance: `1e-6 × diameter`.
pub fn default_tol(curve: &BoundaryCurve) -> f64 {
    1e-6 * curve.diameter()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutSample {
    pub point: BoundaryPoint,
    pub lambda: f64,
    pub phi: f64,
    pub lambda_kappa: f64,
    /// Sample sits on (or within `10 tol` of) a corner; `λ` and `φ` are
    /// reported as their limit 0.
    pub corner_limit: bool,
}

/// Whether `y` is still the nearest boundary point of `y − t ν(y)`.
///
/// "Nearest" is up to a distance slack of `max(5 tol, 3h)` between the foot
/// and `y`, `h` being the projector's resolution. Points the projector
/// cannot handle (outside a grid) count as false.
pub fn predicate<P: Projector + ?Sized>(proj: &P, y: &BoundaryPoint, t: f64, tol: f64) -> Result<bool> {
    let x = y.position - y.normal * t;
    let slack = (5.0 * tol).max(3.0 * proj.resolution());
    match proj.nearest(x) {
        Ok(foot) => Ok(foot.point.dist(y.position) <= slack),
        Err(Error::Domain(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Cut value of a smooth boundary point by bisection on [`predicate`].
///
/// The bracket is `[0, min(diameter, 1/κ⁺)]`; the upper end is returned as
/// is when the predicate still holds just below it, which makes focal
/// points and disks exact.
pub fn cut_value<P: Projector + ?Sized>(proj: &P, y: &BoundaryPoint, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Configuration(format!("tolerance must be positive, got {tol}")));
    }
    let diam = proj.curve().diameter();
    let upper = if y.curvature > 0.0 { diam.min(1.0 / y.curvature) } else { diam };
    if predicate(proj, y, upper - tol, tol)? {
        return Ok(upper);
    }
    if !predicate(proj, y, tol, tol)? {
        return Err(Error::DegenerateRay { s: y.s, t: tol });
    }
    let (mut lo, mut hi) = (tol, upper - tol);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if predicate(proj, y, mid, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `φ = ∫₀^λ (1 − tκ) dt = λ − λ²κ/2` for a planar curve.
#[inline]
pub fn phi_2d(lambda: f64, kappa: f64) -> f64 {
    lambda - 0.5 * lambda * lambda * kappa
}

/// `φ = ∫₀^λ ∏ⱼ (1 − tκⱼ) dt` for a vector of principal curvatures.
pub fn phi_general(lambda: f64, kappas: &[f64]) -> f64 {
    if kappas.len() == 1 {
        return phi_2d(lambda, kappas[0]);
    }
    adaptive_simpson(|t| kappas.iter().map(|k| 1.0 - t * k).product(), 0.0, lambda, 1e-10)
}

/// Cut sample at one boundary point; corner points get the corner limit.
pub fn cut_sample<P: Projector + ?Sized>(proj: &P, y: BoundaryPoint, tol: f64, corner_s: &[f64]) -> Result<CutSample> {
    let length = proj.curve().length();
    if corner_s.iter().any(|&c| periodic_gap(c, y.s, length) <= 10.0 * tol) {
        return Ok(CutSample { point: y, lambda: 0.0, phi: 0.0, lambda_kappa: 0.0, corner_limit: true });
    }
    let lambda = cut_value(proj, &y, tol)?;
    Ok(CutSample {
        point: y,
        lambda,
        phi: phi_2d(lambda, y.curvature),
        lambda_kappa: lambda * y.curvature,
        corner_limit: false,
    })
}

/// Cut samples at `n` arclength-equispaced boundary points, computed in parallel.
pub fn cut_samples<P: Projector + ?Sized>(proj: &P, n: usize, tol: f64) -> Result<Vec<CutSample>> {
    let curve = proj.curve();
    let corner_s: Vec<f64> = curve.corners().iter().map(|c| c.s).collect();
    curve
        .resample_arclength(n)?
        .into_par_iter()
        .map(|y| cut_sample(proj, y, tol, &corner_s))
        .collect()
}

/// `max κλ` over samples away from corners.
pub fn verify_kd(samples: &[CutSample]) -> f64 {
    samples
        .iter()
        .filter(|s| !s.corner_limit)
        .map(|s| s.lambda_kappa)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Cut data at the point of maximal curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocalCheck {
    pub point: BoundaryPoint,
    pub kappa: f64,
    pub lambda: f64,
    /// `|κλ − 1|`.
    pub residual: f64,
}

/// Point of maximal curvature: the best sample, refined by golden-section
/// search on its arc between the neighbouring samples.
pub fn argmax_curvature(curve: &BoundaryCurve, samples: &[BoundaryPoint]) -> Option<BoundaryPoint> {
    let n = samples.len();
    let (i, best) = samples.iter().enumerate().max_by(|a, b| a.1.curvature.total_cmp(&b.1.curvature))?;
    let arc = best.arc;
    let (t0, t1) = curve.arcs()[arc].domain();
    let periodic = curve.num_arcs() == 1;
    let neighbor_t = |j: usize, fallback: f64| {
        let p = &samples[j];
        if p.arc == arc {
            p.t
        } else {
            fallback
        }
    };
    let mut lo = neighbor_t((i + n - 1) % n, t0);
    let mut hi = neighbor_t((i + 1) % n, t1);
    if periodic {
        let period = t1 - t0;
        lo = best.t - (best.t - samples[(i + n - 1) % n].t).rem_euclid(period);
        hi = best.t + (samples[(i + 1) % n].t - best.t).rem_euclid(period);
    } else {
        if lo > best.t {
            lo = t0;
        }
        if hi < best.t {
            hi = t1;
        }
    }
    let (t, _) = golden_max(|t| curve.curvature(arc, t), lo, hi, 1e-12 * (t1 - t0));
    let t = if periodic { t0 + (t - t0).rem_euclid(t1 - t0) } else { t.clamp(t0, t1) };
    let refined = curve.point_at(arc, t);
    Some(if refined.curvature >= best.curvature { refined } else { *best })
}

/// Focal identity `λ(y₀) κ(y₀) = 1` at the maximal-curvature point.
pub fn focal_check<P: Projector + ?Sized>(proj: &P, samples: &[CutSample], tol: f64) -> Result<FocalCheck> {
    let curve = proj.curve();
    if !curve.corners().is_empty() {
        return Err(Error::Inapplicable("focal identity needs a smooth boundary".into()));
    }
    let points: Vec<BoundaryPoint> = samples.iter().map(|s| s.point).collect();
    let y0 = argmax_curvature(curve, &points).ok_or_else(|| Error::Configuration("no samples".into()))?;
    if y0.curvature <= 0.0 {
        return Err(Error::Inapplicable("maximal curvature is not positive".into()));
    }
    let lambda = cut_value(proj, &y0, tol)?;
    Ok(FocalCheck { point: y0, kappa: y0.curvature, lambda, residual: (lambda * y0.curvature - 1.0).abs() })
}

/// Writes `s,x,y,nx,ny,kappa,lambda,phi,kappa_lambda` rows.
pub fn write_samples_csv<W: Write>(samples: &[CutSample], mut w: W) -> io::Result<()> {
    writeln!(w, "s,x,y,nx,ny,kappa,lambda,phi,kappa_lambda")?;
    for s in samples {
        let p = &s.point;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            p.s, p.position.x, p.position.y, p.normal.x, p.normal.y, p.curvature, s.lambda, s.phi, s.lambda_kappa
        )?;
    }
    Ok(())
}

/// Tabulated normal-ray chart over an arclength interval free of corners.
#[derive(Debug, Clone, Serialize)]
pub struct NormalRayChart {
    pub sigma_range: (f64, f64),
    pub sigma: Vec<f64>,
    pub y: Vec<Vec2>,
    pub n: Vec<Vec2>,
    pub k: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl NormalRayChart {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `J(σᵢ, t) = 1 − t K(σᵢ)`.
    #[inline]
    pub fn jacobian(&self, i: usize, t: f64) -> f64 {
        1.0 - t * self.k[i]
    }

    /// `X(σᵢ, t)`.
    #[inline]
    pub fn point(&self, i: usize, t: f64) -> Vec2 {
        self.y[i] - self.n[i] * t
    }

    /// Smallest `J(σ, t)` over the sampled rays and `t ∈ [0, Λ(σ)]`.
    pub fn min_jacobian(&self) -> f64 {
        (0..self.len())
            .map(|i| self.jacobian(i, 0.0).min(self.jacobian(i, self.lambda[i])))
            .fold(f64::INFINITY, f64::min)
    }

    /// Injectivity at sampling resolution: every chart point
    /// `X(σᵢ, Λᵢ j/(depth+1))` projects back onto `Y(σᵢ)`.
    pub fn check_injective<P: Projector + ?Sized>(&self, proj: &P, depth: usize, tol: f64) -> Result<bool> {
        let curve = proj.curve();
        let slack = (5.0 * tol).max(3.0 * proj.resolution());
        for i in 0..self.len() {
            for j in 1..=depth {
                let x = self.point(i, self.lambda[i] * j as f64 / (depth + 1) as f64);
                let foot = proj.nearest(x)?;
                if periodic_gap(foot.s, self.sigma[i], curve.length()) > slack {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Chart over `[s0, s1]` with `n` rays at the midpoints of equal subintervals.
pub fn build_ray_chart<P: Projector + ?Sized>(proj: &P, s0: f64, s1: f64, n: usize, tol: f64) -> Result<NormalRayChart> {
    let curve = proj.curve();
    if !(s1 > s0) || n == 0 {
        return Err(Error::Configuration("empty chart interval".into()));
    }
    let length = curve.length();
    for c in curve.corners() {
        let rel = (c.s - s0).rem_euclid(length);
        if rel > 0.0 && rel < s1 - s0 {
            return Err(Error::Configuration(format!("chart interval contains a corner at s = {}", c.s)));
        }
    }
    let points: Vec<BoundaryPoint> = (0..n)
        .map(|i| {
            let s = s0 + (i as f64 + 0.5) * (s1 - s0) / n as f64;
            let mut p = curve.point_at_arclength(s);
            p.s = s;
            p
        })
        .collect();
    let lambda: Vec<f64> = points.par_iter().map(|p| cut_value(proj, p, tol)).collect::<Result<_>>()?;
    Ok(NormalRayChart {
        sigma_range: (s0, s1),
        sigma: points.iter().map(|p| p.s).collect(),
        y: points.iter().map(|p| p.position).collect(),
        n: points.iter().map(|p| p.normal).collect(),
        k: points.iter().map(|p| p.curvature).collect(),
        lambda,
    })
}
