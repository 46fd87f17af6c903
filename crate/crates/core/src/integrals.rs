//! Boundary and bulk integral identities: perimeter, area, the Minkowski
//! formula `∮ κ⟨y, ν⟩ ds = |∂Ω|` with its corner correction, and the
//! normal-ray change of variables
//! `∫_Ω h = ∮ ∫₀^λ h(y − tν)(1 − tκ) dt ds`.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCurve;
use crate::cutlocus::{cut_sample, CutSample};
use crate::distfield::DistanceField;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::numeric::adaptive_simpson;
use crate::projection::Projector;

/// Floor of the denominator in [`IntegralReport::rel_residual`].
pub const REL_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub samples_used: usize,
}

impl IntegralReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, samples_used: usize) -> Self {
        let abs_residual = (lhs - rhs).abs();
        IntegralReport {
            name: name.into(),
            lhs,
            rhs,
            abs_residual,
            rel_residual: abs_residual / rhs.abs().max(REL_EPS),
            samples_used,
        }
    }
}

pub fn perimeter(curve: &BoundaryCurve) -> f64 {
    curve.length()
}

/// `½ ∮ ⟨y, ν⟩ ds`.
pub fn area(curve: &BoundaryCurve) -> f64 {
    0.5 * curve.boundary_integral(|p| p.position.dot(p.normal))
}

/// `∮ κ⟨y, ν⟩ ds` and the number of integrand evaluations.
fn curvature_moment(curve: &BoundaryCurve) -> (f64, usize) {
    let evals = Cell::new(0usize);
    let v = curve.boundary_integral(|p| {
        evals.set(evals.get() + 1);
        p.curvature * p.position.dot(p.normal)
    });
    (v, evals.get())
}

/// Minkowski formula on a boundary without corners.
pub fn minkowski_residual(curve: &BoundaryCurve) -> Result<IntegralReport> {
    if !curve.corners().is_empty() {
        return Err(Error::Inapplicable("boundary has corners; use the cornered variant".into()));
    }
    let (lhs, n) = curvature_moment(curve);
    Ok(IntegralReport::new("minkowski", lhs, perimeter(curve), n))
}

/// Minkowski formula with the corner correction, split into its parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorneredMinkowski {
    pub report: IntegralReport,
    pub curvature_integral: f64,
    /// `Σ ⟨yᵢ, R Δν(yᵢ)⟩` over every arc junction, `R` the counterclockwise
    /// quarter turn.
    pub corner_sum: f64,
    pub corner_terms: Vec<f64>,
}

/// `|∂Ω| = ∮ κ⟨y, ν⟩ ds − Σ ⟨yᵢ, R Δν(yᵢ)⟩`; requires every corner convex.
pub fn minkowski_residual_corners(curve: &BoundaryCurve) -> Result<CorneredMinkowski> {
    if curve.corners().iter().any(|c| !c.convex) {
        return Err(Error::OutOfScope("concave corner present".into()));
    }
    let (curvature_integral, n) = curvature_moment(curve);
    let corner_terms: Vec<f64> = (0..curve.num_arcs())
        .map(|i| {
            let (y, nu_minus, nu_plus) = curve.junction(i);
            y.dot((nu_plus - nu_minus).perp())
        })
        .collect();
    let corner_sum: f64 = corner_terms.iter().sum();
    Ok(CorneredMinkowski {
        report: IntegralReport::new(
            "minkowski_corners",
            curvature_integral - corner_sum,
            perimeter(curve),
            n + corner_terms.len(),
        ),
        curvature_integral,
        corner_sum,
        corner_terms,
    })
}

/// Built-in scalar fields on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    X,
    Y,
    NormSquared,
    /// `Σ c · x^i · y^j` over `(c, i, j)` terms.
    Polynomial { terms: Vec<(f64, u32, u32)> },
}

impl ScalarField {
    pub fn one() -> Self {
        ScalarField::Constant { value: 1.0 }
    }

    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::X => p.x,
            ScalarField::Y => p.y,
            ScalarField::NormSquared => p.norm_sq(),
            ScalarField::Polynomial { terms } => {
                terms.iter().map(|&(c, i, j)| c * p.x.powi(i as i32) * p.y.powi(j as i32)).sum()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScalarField::Constant { value } => format!("const({value})"),
            ScalarField::X => "x".into(),
            ScalarField::Y => "y".into(),
            ScalarField::NormSquared => "|x|^2".into(),
            ScalarField::Polynomial { .. } => "polynomial".into(),
        }
    }

    /// `H` with `∂H/∂x = h` and `H(0, y) = 0`.
    pub fn x_antiderivative(&self, p: Vec2) -> f64 {
        match self {
            ScalarField::Constant { value } => value * p.x,
            ScalarField::X => 0.5 * p.x * p.x,
            ScalarField::Y => p.x * p.y,
            ScalarField::NormSquared => p.x.powi(3) / 3.0 + p.x * p.y * p.y,
            ScalarField::Polynomial { terms } => terms
                .iter()
                .map(|&(c, i, j)| c * p.x.powi(i as i32 + 1) * p.y.powi(j as i32) / (i + 1) as f64)
                .sum(),
        }
    }

    /// Whether the field is a constant (the ray integral is then `c φ`).
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

/// Ray integral `∫₀^λ h(y − tν)(1 − tκ) dt` of one sample.
pub fn ray_integral(sample: &CutSample, field: &ScalarField) -> f64 {
    if sample.corner_limit || sample.lambda == 0.0 {
        return 0.0;
    }
    let p = &sample.point;
    adaptive_simpson(
        |t| field.eval(p.position - p.normal * t) * (1.0 - t * p.curvature),
        0.0,
        sample.lambda,
        1e-10,
    )
}

/// `∫_Ω h = ∮ H ν_x ds` by the divergence theorem, `H` the
/// [`ScalarField::x_antiderivative`].
pub fn bulk_integral(curve: &BoundaryCurve, field: &ScalarField) -> f64 {
    curve.boundary_integral(|p| field.x_antiderivative(p.position) * p.normal.x)
}

/// Ray side (`lhs`) against the divergence-theorem value (`rhs`).
pub fn cov_exact_residual(curve: &BoundaryCurve, samples: &[CutSample], field: &ScalarField) -> Result<IntegralReport> {
    let lhs = cov_integral_from_samples(curve, samples, field)?;
    Ok(IntegralReport::new(format!("cov_exact[{}]", field.label()), lhs, bulk_integral(curve, field), samples.len()))
}

/// Ray side of the change of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovIntegral {
    pub value: f64,
    pub samples_used: usize,
    /// Degenerate rays skipped.
    pub skipped: usize,
    /// Arclength fraction those rays represent.
    pub coverage_deficit: f64,
}

/// Ray side from precomputed cut samples, which must be arclength
/// equispaced (as produced by [`crate::cutlocus::cut_samples`]).
pub fn cov_integral_from_samples(curve: &BoundaryCurve, samples: &[CutSample], field: &ScalarField) -> Result<f64> {
    if curve.corners().iter().any(|c| !c.convex) {
        return Err(Error::OutOfScope("change of variables with concave corners".into()));
    }
    let parts: Vec<f64> = samples.par_iter().map(|s| ray_integral(s, field)).collect();
    Ok(sample_quadrature(curve, samples, &parts))
}

/// `∮ g ds` from the values of `g` at arclength-equispaced samples. A cell
/// straddling an arc junction is split there and each part takes the value
/// of the nearest sample on its own side, so a jump of `g` at a junction
/// (a curvature jump, say) costs O(h²) instead of O(h).
pub fn sample_quadrature(curve: &BoundaryCurve, samples: &[CutSample], values: &[f64]) -> f64 {
    let n = samples.len();
    let step = curve.length() / n as f64;
    let mut total = step * values.iter().sum::<f64>();
    if curve.num_arcs() < 2 || n < 3 {
        return total;
    }
    // cell k is [k step, (k + 1) step] with the sample at its centre
    for &sj in curve.arc_starts() {
        let k = ((sj / step).floor() as usize).min(n - 1);
        let lo = k as f64 * step;
        if samples[k].point.s >= sj {
            total += (sj - lo) * (values[(k + n - 1) % n] - values[k]);
        } else {
            total += (lo + step - sj) * (values[(k + 1) % n] - values[k]);
        }
    }
    total
}

/// Ray side of the change of variables over `n ≥ 1024` midpoint samples.
/// Degenerate rays are skipped and reported.
pub fn cov_integral<P: Projector + ?Sized>(proj: &P, field: &ScalarField, n: usize, tol: f64) -> Result<CovIntegral> {
    let curve = proj.curve();
    if n < 1024 {
        return Err(Error::Configuration(format!("need at least 1024 boundary samples, got {n}")));
    }
    if curve.corners().iter().any(|c| !c.convex) {
        return Err(Error::OutOfScope("change of variables with concave corners".into()));
    }
    let corner_s: Vec<f64> = curve.corners().iter().map(|c| c.s).collect();
    let parts: Vec<Option<f64>> = curve
        .resample_arclength(n)?
        .into_par_iter()
        .map(|y| match cut_sample(proj, y, tol, &corner_s) {
            Ok(s) => Ok(Some(ray_integral(&s, field))),
            Err(Error::DegenerateRay { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let w = curve.length() / n as f64;
    let skipped = parts.iter().filter(|p| p.is_none()).count();
    Ok(CovIntegral {
        value: w * parts.iter().flatten().sum::<f64>(),
        samples_used: n,
        skipped,
        coverage_deficit: skipped as f64 / n as f64,
    })
}

/// Grid quadrature of `∫_Ω h`: midpoint rule over the inside cells whose
/// centre lies at least `0.3 h` from the boundary. The inset balances the
/// cells straddling the boundary so the error is first order and small.
pub fn grid_integral(field: &DistanceField, h_field: &ScalarField) -> (f64, usize) {
    let g = field.grid();
    let inset = 0.3 * g.h;
    let mut total = 0.0;
    let mut count = 0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if field.is_inside(i, j) && field.distance(i, j) >= inset {
                total += h_field.eval(g.center(i, j));
                count += 1;
            }
        }
    }
    (total * g.h * g.h, count)
}

/// Ray side (`lhs`) against grid side (`rhs`).
pub fn cov_residual(
    curve: &BoundaryCurve,
    samples: &[CutSample],
    h_field: &ScalarField,
    field: &DistanceField,
) -> Result<IntegralReport> {
    let lhs = cov_integral_from_samples(curve, samples, h_field)?;
    let (rhs, cells) = grid_integral(field, h_field);
    Ok(IntegralReport::new(format!("cov[{}]", h_field.label()), lhs, rhs, samples.len() + cells))
}

/// Arclength average of φ against `|Ω| / |∂Ω|`; samples must be arclength
/// equispaced.
pub fn mean_value_check(curve: &BoundaryCurve, samples: &[CutSample]) -> IntegralReport {
    let phi: Vec<f64> = samples.iter().map(|s| s.phi).collect();
    let avg = sample_quadrature(curve, samples, &phi) / curve.length();
    IntegralReport::new("mean_phi", avg, area(curve) / perimeter(curve), samples.len())
}
