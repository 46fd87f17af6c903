//! Web solutions `u = h(d_Ω)` of `−div(A(|∇u|)∇u) = 1` reduced to single
//! normal rays. Along a ray of curvature `κ` and cut value `λ` the flux
//! `F(t) = A(|h′|) h′ (1 − tκ)` satisfies `F′ = 1 − tκ`, `F(λ) = 0`, so
//! `F(t) = −∫_t^λ (1 − sκ) ds` and `−F(0) = φ`. Here `h′` is the derivative
//! along the outward normal, negative inside.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryPoint;
use crate::cutlocus::CutSample;
use crate::error::{Error, Result};
use crate::geom::periodic_gap;
use crate::numeric::{adaptive_simpson, invert_increasing};
use crate::projection::Projector;
use crate::symmetry::{assemble_report, max_curvature_point, CriterionTolerances, PointValue, SymmetryReport, Verdict};

type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Operator `u ↦ −div(A(|∇u|)∇u)`, described by `A`.
#[derive(Clone)]
pub enum DivergenceOperator {
    /// `A ≡ 1`.
    Laplace,
    /// `A(r) = r^{p−2}`, `p > 1`.
    PLaplace { p: f64 },
    /// `A` with `m(r) = A(r) r` strictly increasing on `[0, r_max]`.
    Custom { name: String, a: Coefficient, r_max: f64 },
}

impl fmt::Debug for DivergenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Upper end of `r` for the built-in operators.
const BUILTIN_R_MAX: f64 = 1e12;

impl DivergenceOperator {
    pub fn p_laplace(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Configuration(format!("p-Laplace exponent must exceed 1, got {p}")));
        }
        Ok(DivergenceOperator::PLaplace { p })
    }

    pub fn custom(name: impl Into<String>, a: impl Fn(f64) -> f64 + Send + Sync + 'static, r_max: f64) -> Result<Self> {
        let op = DivergenceOperator::Custom { name: name.into(), a: Arc::new(a), r_max };
        op.check_monotone()?;
        Ok(op)
    }

    /// `laplace` or `plap:<p>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("laplace") {
            return Ok(DivergenceOperator::Laplace);
        }
        if let Some(p) = t.strip_prefix("plap:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Configuration(format!("invalid p-Laplace exponent '{p}'")))?;
            return DivergenceOperator::p_laplace(p);
        }
        Err(Error::Configuration(format!("unknown operator '{t}' (expected laplace or plap:<p>)")))
    }

    pub fn label(&self) -> String {
        match self {
            DivergenceOperator::Laplace => "laplace".into(),
            DivergenceOperator::PLaplace { p } => format!("plap:{p}"),
            DivergenceOperator::Custom { name, .. } => name.clone(),
        }
    }

    pub fn r_max(&self) -> f64 {
        match self {
            DivergenceOperator::Custom { r_max, .. } => *r_max,
            _ => BUILTIN_R_MAX,
        }
    }

    #[inline]
    pub fn a(&self, r: f64) -> f64 {
        match self {
            DivergenceOperator::Laplace => 1.0,
            DivergenceOperator::PLaplace { p } => r.powf(p - 2.0),
            DivergenceOperator::Custom { a, .. } => a(r),
        }
    }

    /// `m(r) = A(r) r`, with `m(0) = 0`.
    #[inline]
    pub fn m(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.a(r) * r
        }
    }

    /// `A(|q|) q = sign(q) m(|q|)`, finite at `q = 0` for `p < 2` as well.
    #[inline]
    pub fn flux_of(&self, q: f64) -> f64 {
        if q == 0.0 {
            0.0
        } else {
            q.signum() * self.m(q.abs())
        }
    }

    /// Inverse of `m` by bisection to machine precision.
    pub fn m_inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 || !y.is_finite() {
            return Err(Error::OperatorRange(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        match invert_increasing(|r| self.m(r), y, self.r_max(), 0.0) {
            Some(r) if r <= self.r_max() => Ok(r),
            _ => Err(Error::OperatorRange(y)),
        }
    }

    /// Strict monotonicity of `m` on a 1024-point grid of `[0, r_check]`,
    /// `r_check = min(r_max, 10)`.
    pub fn check_monotone(&self) -> Result<()> {
        let top = self.r_max().min(10.0);
        let mut prev = self.m(0.0);
        if prev != 0.0 {
            return Err(Error::Configuration(format!("{}: m(0) = {prev}, expected 0", self.label())));
        }
        for k in 1..1024 {
            let r = top * k as f64 / 1023.0;
            let v = self.m(r);
            if !(v > prev) {
                return Err(Error::Configuration(format!("{}: m(r) = A(r) r not increasing at r = {r}", self.label())));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Profile of a web solution along one normal ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WebProfile {
    pub origin: Option<BoundaryPoint>,
    pub kappa: f64,
    pub lambda: f64,
    pub t: Vec<f64>,
    /// `g(t) = F(t) / (1 − tκ)`, the value of `A(|h′|) h′`.
    pub g: Vec<f64>,
    pub hprime: Vec<f64>,
    pub flux: Vec<f64>,
}

impl WebProfile {
    pub fn hprime0(&self) -> f64 {
        self.hprime[0]
    }

    /// `F(t₀)` at the first grid point.
    pub fn flux0(&self) -> f64 {
        self.flux[0]
    }

    pub fn flux_end(&self) -> f64 {
        *self.flux.last().expect("non-empty profile")
    }
}

/// `∫_t^λ (1 − sκ) ds = (λ − t)(1 − κ(λ + t)/2)`.
#[inline]
pub fn tail_integral(kappa: f64, lambda: f64, t: f64) -> f64 {
    (lambda - t) * (1.0 - 0.5 * kappa * (lambda + t))
}

/// `g(t) = −∫_t^λ (1 − sκ) ds / (1 − tκ)`, extended by 0 at `t = λ`.
#[inline]
pub fn flux_density(kappa: f64, lambda: f64, t: f64) -> f64 {
    if t >= lambda {
        return 0.0;
    }
    -tail_integral(kappa, lambda, t) / (1.0 - t * kappa)
}

/// Solves the ray reduction on the given `t` samples (within `[0, λ]`).
pub fn web_profile(op: &DivergenceOperator, kappa: f64, lambda: f64, t: &[f64]) -> Result<WebProfile> {
    if !(lambda >= 0.0) {
        return Err(Error::Configuration(format!("cut value must be nonnegative, got {lambda}")));
    }
    if kappa * lambda > 1.0 + 1e-12 {
        return Err(Error::InvalidRay(kappa * lambda));
    }
    if t.is_empty() {
        return Err(Error::Configuration("empty t grid".into()));
    }
    let mut g = Vec::with_capacity(t.len());
    let mut hprime = Vec::with_capacity(t.len());
    let mut flux = Vec::with_capacity(t.len());
    for &ti in t {
        if !(0.0..=lambda).contains(&ti) {
            return Err(Error::Configuration(format!("t = {ti} outside [0, {lambda}]")));
        }
        let gi = flux_density(kappa, lambda, ti);
        let hp = gi.signum() * op.m_inverse(gi.abs())?;
        let hp = if gi == 0.0 { 0.0 } else { hp };
        g.push(gi);
        hprime.push(hp);
        flux.push(op.flux_of(hp) * (1.0 - ti * kappa));
    }
    Ok(WebProfile { origin: None, kappa, lambda, t: t.to_vec(), g, hprime, flux })
}

/// Profile on `n ≥ 2` equispaced points of `[0, λ]` for a cut sample.
pub fn sample_profile(op: &DivergenceOperator, sample: &CutSample, n: usize) -> Result<WebProfile> {
    let n = n.max(2);
    let t: Vec<f64> = (0..n).map(|k| sample.lambda * k as f64 / (n - 1) as f64).collect();
    let mut prof = web_profile(op, sample.point.curvature, sample.lambda, &t)?;
    prof.origin = Some(sample.point);
    Ok(prof)
}

/// Boundary arc `Γ` given by arclength endpoints; wraps when `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaArc {
    pub start: f64,
    pub end: f64,
}

impl GammaArc {
    pub fn new(start: f64, end: f64) -> Self {
        GammaArc { start, end }
    }

    /// Arc of half-width `half` around `s` on a curve of length `length`.
    pub fn around(s: f64, half: f64, length: f64) -> Self {
        GammaArc { start: (s - half).rem_euclid(length), end: (s + half).rem_euclid(length) }
    }

    pub fn contains(&self, s: f64, length: f64) -> bool {
        let s = s.rem_euclid(length);
        let (a, b) = (self.start.rem_euclid(length), self.end.rem_euclid(length));
        if self.end - self.start >= length {
            true
        } else if a <= b {
            (a..=b).contains(&s)
        } else {
            s >= a || s <= b
        }
    }
}

/// The identity `A(|∇u|) u_ν = −φ` at the maximal-curvature point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Teo10 {
    pub y0: BoundaryPoint,
    pub kappa: f64,
    pub lambda: f64,
    pub phi: f64,
    pub hprime0: f64,
    /// `A(|h′(0)|) h′(0)`.
    pub flux0: f64,
    pub residual: f64,
}

fn gamma_argmax<P: Projector + ?Sized>(
    proj: &P,
    samples: &[CutSample],
    gamma: &GammaArc,
    tol: f64,
) -> Result<(PointValue, f64, bool)> {
    let length = proj.curve().length();
    let inside: Vec<CutSample> =
        samples.iter().filter(|s| gamma.contains(s.point.s, length)).copied().collect();
    if inside.iter().all(|s| s.corner_limit) {
        return Err(Error::Configuration("no smooth samples on the arc".into()));
    }
    let global = max_curvature_point(proj, samples, tol)?;
    let mut local = max_curvature_point(proj, &inside, tol)?;
    if !gamma.contains(local.y0.s, length) {
        // refinement left the arc: the maximum over the arc sits at its edge
        let best = inside
            .iter()
            .filter(|s| !s.corner_limit)
            .max_by(|a, b| a.point.curvature.total_cmp(&b.point.curvature))
            .expect("smooth sample on the arc");
        local = PointValue { y0: best.point, lambda: best.lambda, phi: best.phi };
    }
    let scale = global.y0.curvature.abs().max(1.0);
    let attained = local.y0.curvature >= global.y0.curvature - 1e-6 * scale;
    Ok((local, global.y0.curvature, attained))
}

/// Builds the profile at the maximal-curvature point of `Γ` and compares the
/// boundary flux with `−φ(y₀)`. Fails when the global maximum of the
/// curvature is not attained on `Γ`.
pub fn teo10_residual<P: Projector + ?Sized>(
    proj: &P,
    samples: &[CutSample],
    gamma: &GammaArc,
    op: &DivergenceOperator,
    tol: f64,
) -> Result<Teo10> {
    let (at, global, attained) = gamma_argmax(proj, samples, gamma, tol)?;
    if !attained {
        return Err(Error::HypothesisViolation(format!(
            "maximal curvature {global:.6} is not attained on the arc (best there {:.6})",
            at.y0.curvature
        )));
    }
    teo10_at(op, at)
}

fn teo10_at(op: &DivergenceOperator, at: PointValue) -> Result<Teo10> {
    let prof = web_profile(op, at.y0.curvature, at.lambda, &[0.0])?;
    let flux0 = op.flux_of(prof.hprime0());
    Ok(Teo10 {
        y0: at.y0,
        kappa: at.y0.curvature,
        lambda: at.lambda,
        phi: at.phi,
        hprime0: prof.hprime0(),
        flux0,
        residual: (flux0 + at.phi).abs(),
    })
}

/// Collar diagnostic of `A(|∇u|)⟨∇u, ∇d⟩ ≤ φ(y₀) + o(1)` on `{d < ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarDefect {
    pub eps: f64,
    /// `max A(|∇u|)⟨∇u, ∇d⟩ − φ(y₀)` over the collar.
    pub defect: f64,
    /// `(1/ε) ∫_{d<ε} A(|∇u|)⟨∇u, ∇d⟩`.
    pub collar_flux: f64,
    /// `∫_Ω ψ_ε` with `ψ_ε = min(d/ε, 1)`.
    pub psi_integral: f64,
    /// `φ(y₀) |∂Ω|`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialWebRecord {
    pub operator: String,
    pub gamma: GammaArc,
    pub kappa_max: f64,
    pub kappa_max_on_gamma: f64,
    /// Maximal curvature attained on `Γ`.
    pub condition_i: bool,
    /// `max (−A(|h′(0)|)h′(0))` over all samples.
    pub boundary_flux_max: f64,
    pub boundary_flux_max_on_gamma: f64,
    /// Maximum of the boundary flux attained on `Γ`.
    pub condition_ii_prime: bool,
    pub teo10: Teo10,
    pub collar: Vec<CollarDefect>,
    pub report: SymmetryReport,
    pub verdict: Verdict,
    pub failed_checks: Vec<String>,
}

/// Hypothesis record for a boundary arc `Γ`, each ray solved with its own
/// `κ` and `λ`. The verdict follows the criterion with `φ` replaced by the
/// boundary flux `−A(|h′(0)|)h′(0)`.
pub fn teopartialweb_check<P: Projector + ?Sized>(
    proj: &P,
    samples: &[CutSample],
    gamma: &GammaArc,
    op: &DivergenceOperator,
    eps: &[f64],
    tols: &CriterionTolerances,
) -> Result<PartialWebRecord> {
    let curve = proj.curve();
    let length = curve.length();
    let (at, kappa_max, condition_i) = gamma_argmax(proj, samples, gamma, tols.cut_tol)?;
    let teo10 = teo10_at(op, at)?;

    let fluxes: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            if s.corner_limit {
                return Ok(0.0);
            }
            let prof = web_profile(op, s.point.curvature, s.lambda, &[0.0])?;
            Ok(-op.flux_of(prof.hprime0()))
        })
        .collect::<Result<_>>()?;
    let smooth = || samples.iter().zip(&fluxes).filter(|(s, _)| !s.corner_limit);
    let boundary_flux_max = smooth().map(|(_, &f)| f).fold(f64::NEG_INFINITY, f64::max);
    let boundary_flux_max_on_gamma = smooth()
        .filter(|(s, _)| gamma.contains(s.point.s, length))
        .map(|(_, &f)| f)
        .fold(f64::NEG_INFINITY, f64::max);
    let condition_ii_prime = boundary_flux_max_on_gamma >= boundary_flux_max - tols.phi_slack;

    let w = length / samples.len() as f64;
    let collar = eps
        .iter()
        .map(|&e| {
            let parts: Vec<(f64, f64, f64)> = samples
                .par_iter()
                .filter(|s| !s.corner_limit)
                .map(|s| {
                    let (k, l) = (s.point.curvature, s.lambda);
                    let top = e.min(l);
                    let worst = (0..=16)
                        .map(|q| -flux_density(k, l, top * q as f64 / 16.0))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let band = adaptive_simpson(|t| tail_integral(k, l, t), 0.0, top, 1e-12) / e;
                    let psi = adaptive_simpson(|t| (t / e).min(1.0) * (1.0 - t * k), 0.0, l, 1e-12);
                    (worst, band, psi)
                })
                .collect();
            CollarDefect {
                eps: e,
                defect: parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) - teo10.phi,
                collar_flux: w * parts.iter().map(|p| p.1).sum::<f64>(),
                psi_integral: w * parts.iter().map(|p| p.2).sum::<f64>(),
                bound: teo10.phi * length,
            }
        })
        .collect();

    let traced: Vec<CutSample> =
        samples.iter().zip(&fluxes).map(|(s, &f)| CutSample { phi: f, ..*s }).collect();
    let report = assemble_report(curve, &traced, PointValue { phi: -teo10.flux0, ..at }, tols)?;
    let mut failed_checks = Vec::new();
    if !condition_i {
        failed_checks.push(format!(
            "maximal curvature {kappa_max:.6} not attained on the arc (best there {:.6})",
            at.y0.curvature
        ));
    }
    if !condition_ii_prime {
        failed_checks.push(format!(
            "boundary flux maximum {boundary_flux_max:.6} not attained on the arc (best there {boundary_flux_max_on_gamma:.6})"
        ));
    }
    failed_checks.extend(report.failed_checks.iter().cloned());
    let verdict = if report.verdict == Verdict::Inapplicable {
        Verdict::Inapplicable
    } else if !condition_i {
        Verdict::HypothesesNotMet
    } else {
        report.verdict
    };
    Ok(PartialWebRecord {
        operator: op.label(),
        gamma: *gamma,
        kappa_max,
        kappa_max_on_gamma: at.y0.curvature,
        condition_i,
        boundary_flux_max,
        boundary_flux_max_on_gamma,
        condition_ii_prime,
        teo10,
        collar,
        report,
        verdict,
        failed_checks,
    })
}

/// Arclength distance from `s` to the arc, 0 inside.
pub fn distance_to_arc(gamma: &GammaArc, s: f64, length: f64) -> f64 {
    if gamma.contains(s, length) {
        0.0
    } else {
        periodic_gap(s, gamma.start, length).min(periodic_gap(s, gamma.end, length))
    }
}
