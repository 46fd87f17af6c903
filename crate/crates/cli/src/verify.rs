//! The identity suite behind `cutloc verify`.

use cutloc_core::cutlocus::{focal_check, verify_kd, CutSample};
use cutloc_core::distfield::DistanceField;
use cutloc_core::integrals::{
    cov_exact_residual, cov_residual, mean_value_check, minkowski_residual, minkowski_residual_corners,
    IntegralReport, ScalarField,
};
use cutloc_core::projection::{ExactProjector, Projector};
use cutloc_core::symmetry::{criterion_report, f_max_bruteforce, inequality_chain_check, CriterionTolerances};
use cutloc_core::{BoundaryCurve, Error, Result};
use serde::Serialize;

/// Adaptive boundary quadrature.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Ray-side sums over the equispaced cut samples.
pub const RAY_SUM_TOL: f64 = 1e-5;
pub const GRID_TOL: f64 = 2e-2;
pub const KD_TOL: f64 = 1e-6;
pub const FOCAL_TOL: f64 = 1e-3;
pub const F_MAX_TOL: f64 = 1e-4;
pub const BASIC_BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    OutOfScope,
    Inapplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// The quantity compared against `tolerance`.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub report: Option<IntegralReport>,
    pub detail: Option<String>,
}

impl Check {
    fn measured(name: impl Into<String>, value: f64, tolerance: f64, report: Option<IntegralReport>) -> Self {
        Check {
            name: name.into(),
            status: if value <= tolerance { Status::Pass } else { Status::Fail },
            value: Some(value),
            tolerance: Some(tolerance),
            report,
            detail: None,
        }
    }

    fn not_run(name: impl Into<String>, status: Status, why: impl Into<String>) -> Self {
        Check { name: name.into(), status, value: None, tolerance: None, report: None, detail: Some(why.into()) }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Maps the scope errors of the core to a status; other errors propagate.
    fn from_error(name: &str, e: Error) -> Result<Self> {
        match e {
            Error::Inapplicable(m) => Ok(Check::not_run(name, Status::Inapplicable, m)),
            Error::OutOfScope(m) => Ok(Check::not_run(name, Status::OutOfScope, m)),
            e => Err(e),
        }
    }
}

fn relative(name: &str, r: Result<IntegralReport>, tol: f64) -> Result<Check> {
    match r {
        Ok(r) => Ok(Check::measured(name, r.rel_residual, tol, Some(r))),
        Err(e) => Check::from_error(name, e),
    }
}

pub fn run(
    proj: &ExactProjector<'_>,
    samples: &[CutSample],
    field: &DistanceField,
    tols: &CriterionTolerances,
) -> Result<Vec<Check>> {
    let curve: &BoundaryCurve = proj.curve();
    let concave = curve.corners().iter().any(|c| !c.convex);
    let mut out = Vec::new();

    out.push(relative("minkowski", minkowski_residual(curve), QUADRATURE_TOL)?);
    out.push(match minkowski_residual_corners(curve) {
        Ok(m) => Check::measured("minkowski_corners", m.report.rel_residual, QUADRATURE_TOL, Some(m.report.clone()))
            .with_detail(format!(
                "curvature integral {:e}, corner sum {:e} over {} corners",
                m.curvature_integral,
                m.corner_sum,
                m.corner_terms.len()
            )),
        Err(e) => Check::from_error("minkowski_corners", e)?,
    });

    let fields = [ScalarField::one(), ScalarField::NormSquared];
    for h in &fields {
        let name = format!("cov_exact[{}]", h.label());
        out.push(if concave {
            Check::not_run(name, Status::Skipped, "concave corners")
        } else {
            relative(&name, cov_exact_residual(curve, samples, h), RAY_SUM_TOL)?
                .with_detail("ray side against the divergence theorem")
        });
    }
    for h in &fields {
        let name = format!("cov_grid[{}]", h.label());
        out.push(if concave {
            Check::not_run(name, Status::Skipped, "concave corners")
        } else {
            relative(&name, cov_residual(curve, samples, h, field), GRID_TOL)?
                .with_detail(format!("ray side against grid quadrature at h = {:e}", field.h()))
        });
    }
    out.push(if concave {
        Check::not_run("mean_phi", Status::Skipped, "concave corners")
    } else {
        let r = mean_value_check(curve, samples);
        Check::measured("mean_phi", r.rel_residual, RAY_SUM_TOL, Some(r))
    });

    let kd = verify_kd(samples);
    out.push(Check::measured("kd", kd - 1.0, KD_TOL, None).with_detail(format!("max kappa*lambda = {kd:e}")));
    out.push(match focal_check(proj, samples, tols.cut_tol) {
        Ok(f) => Check::measured("focal", (f.kappa * f.lambda - 1.0).abs(), FOCAL_TOL, None)
            .with_detail(format!("kappa = {:e}, lambda = {:e} at s = {:e}", f.kappa, f.lambda, f.point.s)),
        Err(e) => Check::from_error("focal", e)?,
    });

    for (n, res) in [(2usize, 401usize), (3, 401), (4, 201)] {
        let (v, x) = f_max_bruteforce(n, res)?;
        out.push(
            Check::measured(format!("f_max[n={n}]"), (v - 1.0 / n as f64).abs(), F_MAX_TOL, None)
                .with_detail(format!("max {v:e} at {x:?}")),
        );
    }

    let basic = samples
        .iter()
        .filter(|s| !s.corner_limit)
        .map(|s| s.phi * s.point.curvature)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(
        Check::measured("basic_bound", basic - 0.5, BASIC_BOUND_TOL, None)
            .with_detail(format!("max phi*kappa = {basic:e}")),
    );

    out.push(if concave {
        Check::not_run("criterion", Status::Skipped, "concave corners")
    } else {
        let rep = criterion_report(proj, samples, tols)?;
        if !rep.starshaped {
            Check::not_run("criterion", Status::Inapplicable, "domain is not starshaped about the origin")
        } else {
            let chain = inequality_chain_check(&rep, samples, tols.cut_tol);
            let ok = chain.curvature_link_failures == 0 && chain.bound_link;
            Check {
                name: "criterion".into(),
                status: if ok { Status::Pass } else { Status::Fail },
                value: None,
                tolerance: None,
                report: None,
                detail: Some(format!(
                    "verdict {:?}; curvature link failures {}, bound link {}, phi link {}",
                    rep.verdict, chain.curvature_link_failures, chain.bound_link, chain.phi_link
                )),
            }
        }
    });
    Ok(out)
}
