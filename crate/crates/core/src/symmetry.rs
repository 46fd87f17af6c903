//! The ball criterion: at a point `y₀` of maximal curvature, a starshaped
//! domain with `φ(y₀) ≥ |Ω|/|∂Ω|` must be a ball. The chain behind it is
//! `ratio·H(y) ≤ ratio·H(y₀) ≤ φ(y₀)H(y₀) ≤ 1/n`, the last step being the
//! bound `max f = 1/n` for the auxiliary function `f` below.

use serde::Serialize;

use crate::boundary::{BoundaryCurve, BoundaryPoint, DEFAULT_CORNER_ANGLE_TOL};
use crate::cutlocus::{argmax_curvature, cut_value, phi_2d, CutSample};
use crate::error::{Error, Result};
use crate::integrals::{area, perimeter};
use crate::projection::Projector;

/// Minimum number of smooth samples for a report.
pub const MIN_SMOOTH_SAMPLES: usize = 64;

/// `f(x) = (Σxⱼ/(n−1)) ∫₀¹ ∏(1 − s xⱼ) ds`, with `n − 1 = x.len()`.
/// The product is expanded and integrated exactly.
pub fn f_value(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    // coeffs[k] multiplies s^k in ∏(1 − s xⱼ).
    let mut coeffs = vec![1.0];
    for &xj in x {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * xj;
        }
        coeffs = next;
    }
    let integral: f64 = coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum();
    x.iter().sum::<f64>() / x.len() as f64 * integral
}

/// Grid maximum of `f` over `[−3, 1]^{n−1} ∩ {Σx ≥ 0}` with `res` nodes per
/// axis (endpoints included).
pub fn f_max_bruteforce(n: usize, res: usize) -> Result<(f64, Vec<f64>)> {
    if !(2..=4).contains(&n) {
        return Err(Error::Configuration(format!("dimension must be 2, 3 or 4, got {n}")));
    }
    if res < 200 {
        return Err(Error::Configuration(format!("resolution must be at least 200, got {res}")));
    }
    let axis: Vec<f64> = (0..res).map(|k| -3.0 + 4.0 * k as f64 / (res - 1) as f64).collect();
    let dims = n - 1;
    let mut idx = vec![0usize; dims];
    let mut x = vec![0.0; dims];
    let mut best = (f64::NEG_INFINITY, vec![0.0; dims]);
    loop {
        for d in 0..dims {
            x[d] = axis[idx[d]];
        }
        if x.iter().sum::<f64>() >= 0.0 {
            let v = f_value(&x);
            if v > best.0 {
                best = (v, x.clone());
            }
        }
        let mut d = 0;
        loop {
            if d == dims {
                return Ok(best);
            }
            idx[d] += 1;
            if idx[d] < res {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerStatus {
    None,
    ConvexOnly,
    ConcavePresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Ball,
    HypothesesNotMet,
    Inapplicable,
}

/// Which hypothesis established a ball verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// C¹ boundary with `φ(y₀) ≥ ratio`.
    MaxCurvature,
    /// `φ` constant on the smooth part of the boundary.
    ConstantPhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionTolerances {
    /// Absolute slack in `φ(y₀) ≥ ratio − slack`.
    pub phi_slack: f64,
    /// Relative spread below which φ counts as constant.
    pub constancy: f64,
    /// Bisection tolerance for the cut value at `y₀`.
    pub cut_tol: f64,
}

impl CriterionTolerances {
    pub fn for_curve(curve: &BoundaryCurve) -> Self {
        let d = curve.diameter();
        CriterionTolerances { phi_slack: 1e-4 * d, constancy: 1e-3, cut_tol: 1e-6 * d }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub y0: BoundaryPoint,
    pub h_max: f64,
    pub lambda_at_y0: f64,
    pub phi_at_y0: f64,
    pub area: f64,
    pub perimeter: f64,
    pub ratio: f64,
    pub hypothesis_h: bool,
    pub hypothesis_phi: bool,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_mean: f64,
    pub phi_constancy: f64,
    /// `max φH` over smooth samples.
    pub basic_bound_max: f64,
    /// Spread `max κ − min κ` over smooth samples.
    pub curvature_spread: f64,
    pub corner_status: CornerStatus,
    /// Signed normal-turning angles of the corners.
    pub corner_angles: Vec<f64>,
    pub starshaped: bool,
    pub starshaped_min: f64,
    pub smooth_samples: usize,
    pub verdict: Verdict,
    pub route: Option<Route>,
    pub failed_checks: Vec<String>,
    pub notes: Vec<String>,
}

/// Criterion value at the maximal-curvature point, as supplied to
/// [`assemble_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub y0: BoundaryPoint,
    pub lambda: f64,
    pub phi: f64,
}

/// Locates `y₀` (refined argmax of curvature over smooth samples) and its
/// cut value and φ.
pub fn max_curvature_point<P: Projector + ?Sized>(proj: &P, samples: &[CutSample], cut_tol: f64) -> Result<PointValue> {
    let smooth: Vec<BoundaryPoint> = samples.iter().filter(|s| !s.corner_limit).map(|s| s.point).collect();
    let y0 = argmax_curvature(proj.curve(), &smooth).ok_or_else(|| Error::Configuration("no smooth samples".into()))?;
    let lambda = cut_value(proj, &y0, cut_tol)?;
    Ok(PointValue { y0, lambda, phi: phi_2d(lambda, y0.curvature) })
}

/// Full report from cut samples (arclength equispaced).
pub fn criterion_report<P: Projector + ?Sized>(
    proj: &P,
    samples: &[CutSample],
    tols: &CriterionTolerances,
) -> Result<SymmetryReport> {
    check_sample_count(samples)?;
    let at_y0 = max_curvature_point(proj, samples, tols.cut_tol)?;
    assemble_report(proj.curve(), samples, at_y0, tols)
}

fn check_sample_count(samples: &[CutSample]) -> Result<usize> {
    let smooth = samples.iter().filter(|s| !s.corner_limit).count();
    if smooth < MIN_SMOOTH_SAMPLES {
        return Err(Error::Configuration(format!(
            "need at least {MIN_SMOOTH_SAMPLES} smooth samples, got {smooth}"
        )));
    }
    Ok(smooth)
}

/// Assembles the report from samples whose `phi` field holds the criterion
/// values and from the value at `y₀`. Used directly when φ comes from
/// another source (a boundary trace).
pub fn assemble_report(
    curve: &BoundaryCurve,
    samples: &[CutSample],
    at_y0: PointValue,
    tols: &CriterionTolerances,
) -> Result<SymmetryReport> {
    let smooth_samples = check_sample_count(samples)?;
    let smooth: Vec<&CutSample> = samples.iter().filter(|s| !s.corner_limit).collect();
    let area = area(curve);
    let perimeter = perimeter(curve);
    let ratio = area / perimeter;

    let phis: Vec<f64> = smooth.iter().map(|s| s.phi).collect();
    let phi_min = phis.iter().copied().fold(f64::INFINITY, f64::min);
    let phi_max = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let phi_mean = phis.iter().sum::<f64>() / phis.len() as f64;
    let phi_constancy = (phi_max - phi_min) / phi_mean;
    let basic_bound_max = smooth.iter().map(|s| s.phi * s.point.curvature).fold(f64::NEG_INFINITY, f64::max);
    let kappas = smooth.iter().map(|s| s.point.curvature);
    let curvature_spread =
        kappas.clone().fold(f64::NEG_INFINITY, f64::max) - kappas.fold(f64::INFINITY, f64::min);
    let sample_kappa_max = smooth.iter().map(|s| s.point.curvature).fold(f64::NEG_INFINITY, f64::max);

    let corners = curve.detect_corners(DEFAULT_CORNER_ANGLE_TOL);
    let corner_status = if corners.is_empty() {
        CornerStatus::None
    } else if corners.iter().all(|c| c.convex) {
        CornerStatus::ConvexOnly
    } else {
        CornerStatus::ConcavePresent
    };
    let (starshaped, starshaped_min) = curve.check_starshaped(samples.len().max(256))?;

    let hypothesis_h = at_y0.y0.curvature >= sample_kappa_max - 1e-12 * sample_kappa_max.abs().max(1.0);
    let hypothesis_phi = at_y0.phi >= ratio - tols.phi_slack;
    let constant_phi = phi_constancy <= tols.constancy;

    let mut failed_checks = Vec::new();
    let mut notes = Vec::new();
    if !starshaped {
        failed_checks.push("starshaped".to_string());
        notes.push(format!("not starshaped about the origin: min <y, nu> = {starshaped_min:.6e}"));
    }
    if corner_status == CornerStatus::ConcavePresent {
        failed_checks.push("no-concave-corners".to_string());
        if constant_phi {
            let lambda_mean = smooth.iter().map(|s| s.lambda).sum::<f64>() / smooth.len() as f64;
            let kappa_mean = smooth.iter().map(|s| s.point.curvature).sum::<f64>() / smooth.len() as f64;
            notes.push(format!(
                "phi is constant ({phi_mean:.6}) on the smooth part of the boundary with lambda = {lambda_mean:.6} \
                 and kappa = {kappa_mean:.6}, yet the domain is not a ball"
            ));
        }
    }

    let (verdict, route) = if !starshaped || corner_status == CornerStatus::ConcavePresent {
        (Verdict::Inapplicable, None)
    } else if corner_status == CornerStatus::None && hypothesis_h && hypothesis_phi {
        (Verdict::Ball, Some(Route::MaxCurvature))
    } else if constant_phi {
        (Verdict::Ball, Some(Route::ConstantPhi))
    } else {
        if !hypothesis_h {
            failed_checks.push("max-curvature".to_string());
        }
        if !hypothesis_phi {
            failed_checks.push(format!("phi(y0) = {:.6} < ratio = {:.6}", at_y0.phi, ratio));
        }
        if corner_status == CornerStatus::ConvexOnly {
            failed_checks.push(format!("phi not constant (spread {phi_constancy:.3e})"));
        }
        (Verdict::HypothesesNotMet, None)
    };
    if verdict == Verdict::Ball {
        notes.push(format!("curvature spread over the boundary: {curvature_spread:.3e}"));
    }

    Ok(SymmetryReport {
        y0: at_y0.y0,
        h_max: at_y0.y0.curvature,
        lambda_at_y0: at_y0.lambda,
        phi_at_y0: at_y0.phi,
        area,
        perimeter,
        ratio,
        hypothesis_h,
        hypothesis_phi,
        phi_min,
        phi_max,
        phi_mean,
        phi_constancy,
        basic_bound_max,
        curvature_spread,
        corner_status,
        corner_angles: corners.iter().map(|c| c.angle).collect(),
        starshaped,
        starshaped_min,
        smooth_samples,
        verdict,
        route,
        failed_checks,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRecord {
    pub s: f64,
    /// `ratio · H(y)`.
    pub ratio_h: f64,
    /// `ratio · H(y₀)`.
    pub ratio_h0: f64,
    /// `φ(y₀) H(y₀)`.
    pub phi0_h0: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCheck {
    pub records: Vec<ChainRecord>,
    /// Samples where `ratio·H(y) ≤ ratio·H(y₀)` fails.
    pub curvature_link_failures: usize,
    /// `ratio·H(y₀) ≤ φ(y₀)H(y₀)`.
    pub phi_link: bool,
    /// `φ(y₀)H(y₀) ≤ 1/2 + tol`.
    pub bound_link: bool,
    pub holds: bool,
    /// First failing link, if any.
    pub first_failure: Option<String>,
}

/// Pointwise check of `ratio·H(y) ≤ ratio·H(y₀) ≤ φ(y₀)H(y₀) ≤ 1/2`.
pub fn inequality_chain_check(report: &SymmetryReport, samples: &[CutSample], tol: f64) -> ChainCheck {
    let ratio_h0 = report.ratio * report.h_max;
    let phi0_h0 = report.phi_at_y0 * report.h_max;
    let records: Vec<ChainRecord> = samples
        .iter()
        .filter(|s| !s.corner_limit)
        .map(|s| ChainRecord {
            s: s.point.s,
            ratio_h: report.ratio * s.point.curvature,
            ratio_h0,
            phi0_h0,
            bound: 0.5,
        })
        .collect();
    let curvature_link_failures = records.iter().filter(|r| r.ratio_h > r.ratio_h0 + tol).count();
    let phi_link = ratio_h0 <= phi0_h0 + tol;
    let bound_link = phi0_h0 <= 0.5 + tol;
    let first_failure = if curvature_link_failures > 0 {
        Some("ratio*H(y) <= ratio*H(y0)".to_string())
    } else if !phi_link {
        Some("ratio*H(y0) <= phi(y0)*H(y0)".to_string())
    } else if !bound_link {
        Some("phi(y0)*H(y0) <= 1/2".to_string())
    } else {
        None
    };
    ChainCheck {
        records,
        curvature_link_failures,
        phi_link,
        bound_link,
        holds: first_failure.is_none(),
        first_failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_value_examples() {
        assert!((f_value(&[1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(f_value(&[0.0]), 0.0);
        assert!((f_value(&[1.0, 1.0]) - 1.0 / 3.0).abs() < 1e-15);
        // n = 2 closed form x − x²/2.
        for k in 0..20 {
            let x = -3.0 + 0.2 * k as f64;
            assert!((f_value(&[x]) - (x - x * x / 2.0)).abs() < 1e-13);
        }
        // ∫₀¹ (1 − 2s)(1 + s) ds = 1 − 1/2 − 2/3 = −1/6, times mean 1/2.
        assert!((f_value(&[2.0, -1.0]) + 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn f_max_small_cases() {
        let (v, x) = f_max_bruteforce(2, 401).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(f_max_bruteforce(5, 200).is_err());
        assert!(f_max_bruteforce(2, 50).is_err());
    }
}
