//! Acceptance run: one line per criterion, then a single verdict.
//!
//! `cargo test -p cutloc-cli --test acceptance -- --nocapture`

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cutloc_core::boundary::catalog::{self, ShapeSpec};
use cutloc_core::cutlocus::{cut_samples, cut_value, focal_check, phi_2d, verify_kd, CutSample};
use cutloc_core::distfield::DistanceField;
use cutloc_core::integrals::{cov_residual, mean_value_check, minkowski_residual, minkowski_residual_corners, ScalarField};
use cutloc_core::mk::{mk_verdict, vf_field, SourceField};
use cutloc_core::projection::ExactProjector;
use cutloc_core::symmetry::{criterion_report, f_max_bruteforce, CornerStatus, CriterionTolerances, Verdict};
use cutloc_core::web::{teo10_residual, web_profile, DivergenceOperator, GammaArc};
use cutloc_core::BoundaryCurve;

const SAMPLES: usize = 2048;

/// Collects failed conditions and the numbers worth printing.
#[derive(Default)]
struct Tally {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

struct Shape {
    spec: ShapeSpec,
    curve: BoundaryCurve,
    samples: Vec<CutSample>,
}

fn catalog_samples() -> &'static [Shape] {
    static CELL: OnceLock<Vec<Shape>> = OnceLock::new();
    CELL.get_or_init(|| {
        catalog::representative_specs()
            .into_iter()
            .map(|spec| {
                let curve = spec.build().unwrap();
                let p = ExactProjector::new(&curve).unwrap();
                let samples = cut_samples(&p, SAMPLES, 1e-6 * curve.diameter()).unwrap();
                Shape { spec, curve, samples }
            })
            .collect()
    })
}

fn ball_characterization(t: &mut Tally) {
    for r in [0.5, 1.0, 3.0] {
        let start = Instant::now();
        let c = catalog::circle(r).unwrap();
        let p = ExactProjector::new(&c).unwrap();
        let tols = CriterionTolerances::for_curve(&c);
        let s = cut_samples(&p, SAMPLES, tols.cut_tol).unwrap();
        let rep = criterion_report(&p, &s, &tols).unwrap();
        let elapsed = start.elapsed();
        let phi_err = s.iter().map(|x| (x.phi - r / 2.0).abs()).fold(0.0, f64::max);
        t.check(phi_err <= 1e-6, format!("R = {r}: phi off by {phi_err:e}"));
        t.check((rep.ratio - r / 2.0).abs() <= 1e-8, format!("R = {r}: ratio {}", rep.ratio));
        t.check(rep.verdict == Verdict::Ball, format!("R = {r}: verdict {:?}", rep.verdict));
        t.check(elapsed <= Duration::from_secs(1), format!("R = {r}: {elapsed:?}"));
        t.note(format!("R={r} max|phi-R/2|={phi_err:.1e} {:.0}ms", elapsed.as_secs_f64() * 1e3));
    }
}

fn non_ball_rejection(t: &mut Tally) {
    let e = catalog::ellipse(2.0, 1.0).unwrap();
    let p = ExactProjector::new(&e).unwrap();
    let tols = CriterionTolerances::for_curve(&e);
    let s = cut_samples(&p, SAMPLES, tols.cut_tol).unwrap();
    let rep = criterion_report(&p, &s, &tols).unwrap();
    let at_major = (rep.y0.position.x.abs() - 2.0).abs() < 1e-6 && rep.y0.position.y.abs() < 1e-6;
    t.check(at_major, format!("y0 at ({}, {})", rep.y0.position.x, rep.y0.position.y));
    t.check((rep.phi_at_y0 - 0.25).abs() <= 1e-3, format!("phi(y0) = {}", rep.phi_at_y0));
    t.check((rep.ratio - 0.6485).abs() <= 1e-3, format!("ratio = {}", rep.ratio));
    t.check((rep.ratio - 2.0 * PI / e.length()).abs() <= 1e-12, "ratio is not 2 pi / perimeter");
    t.check(rep.verdict == Verdict::HypothesesNotMet, format!("verdict {:?}", rep.verdict));
    let vertex_phi = |s: f64| {
        let y = e.point_at_arclength(s);
        phi_2d(cut_value(&p, &y, tols.cut_tol).unwrap(), y.curvature)
    };
    let (phi_major, phi_minor) = (vertex_phi(0.0), vertex_phi(e.length() / 4.0));
    t.check((phi_major - 0.25).abs() <= 1e-3, format!("phi at major vertex {phi_major}"));
    t.check((phi_minor - 0.875).abs() <= 1e-3, format!("phi at minor vertex {phi_minor}"));
    t.check((rep.phi_min - 0.25).abs() <= 1e-3 && (rep.phi_max - 0.875).abs() <= 1e-3, "phi range");
    t.note(format!(
        "phi(y0)={:.6} ratio={:.6} range=[{:.6}, {:.6}]",
        rep.phi_at_y0, rep.ratio, rep.phi_min, rep.phi_max
    ));
}

fn am_gm_bound(t: &mut Tally) {
    let mut equal = 0;
    let mut worst = f64::NEG_INFINITY;
    for sh in catalog_samples() {
        let p = ExactProjector::new(&sh.curve).unwrap();
        let rep = criterion_report(&p, &sh.samples, &CriterionTolerances::for_curve(&sh.curve)).unwrap();
        if !rep.starshaped || rep.corner_status == CornerStatus::ConcavePresent {
            continue;
        }
        for s in sh.samples.iter().filter(|s| !s.corner_limit) {
            let ph = s.phi * s.point.curvature;
            worst = worst.max(ph);
            t.check(ph <= 0.5 + 1e-6, format!("{}: phi*H = {ph} at s = {}", sh.spec.name(), s.point.s));
            if (s.lambda_kappa - 1.0).abs() <= 1e-6 {
                equal += 1;
                t.check((ph - 0.5).abs() <= 1e-6, format!("{}: no equality at s = {}", sh.spec.name(), s.point.s));
            }
        }
    }
    t.check(equal > 0, "no sample with kappa*lambda = 1");
    t.note(format!("max phi*H={worst:.9} equality samples={equal}"));
}

fn f_maximum(t: &mut Tally) {
    for (n, res) in [(2usize, 401usize), (3, 401), (4, 201)] {
        let (v, x) = f_max_bruteforce(n, res).unwrap();
        t.check((v - 1.0 / n as f64).abs() <= 1e-4, format!("n = {n}: max {v}"));
        t.check(x.iter().all(|xi| (xi - 1.0).abs() <= 0.05), format!("n = {n}: argmax {x:?}"));
        t.note(format!("n={n} max={v:.6}"));
    }
}

fn minkowski(t: &mut Tally) {
    let mut worst = 0.0f64;
    for sh in catalog_samples().iter().filter(|s| s.curve.corners().is_empty()) {
        let r = minkowski_residual(&sh.curve).unwrap();
        worst = worst.max(r.rel_residual);
        t.check(r.rel_residual <= 1e-6, format!("{}: {}", sh.spec.name(), r.rel_residual));
    }
    let sq = minkowski_residual_corners(&catalog::square(2.0).unwrap()).unwrap();
    t.check(sq.curvature_integral.abs() <= 1e-12, format!("square curvature integral {}", sq.curvature_integral));
    t.check((sq.corner_sum + 8.0).abs() <= 1e-10, format!("square corner sum {}", sq.corner_sum));
    t.check(sq.report.abs_residual <= 1e-10, format!("square residual {}", sq.report.abs_residual));
    let mut c1 = 0.0f64;
    for c in [catalog::stadium(1.0, 2.0).unwrap(), catalog::rounded_polygon(4, 1.0, 0.2).unwrap()] {
        let m = minkowski_residual_corners(&c).unwrap();
        c1 = m.corner_terms.iter().fold(c1, |a, b| a.max(b.abs()));
    }
    t.check(c1 <= 1e-10, format!("C1 corner term {c1}"));
    t.note(format!(
        "smooth rel<={worst:.1e} square corners={} residual={:.1e} C1 terms<={c1:.1e}",
        sq.corner_sum, sq.report.abs_residual
    ));
}

fn change_of_variables(t: &mut Tally) {
    let mut ratios = Vec::new();
    for c in [catalog::circle(1.0).unwrap(), catalog::ellipse(2.0, 1.0).unwrap()] {
        let p = ExactProjector::new(&c).unwrap();
        let s = cut_samples(&p, SAMPLES, 1e-6 * c.diameter()).unwrap();
        let coarse = DistanceField::build_default(&c, 1.0 / 64.0).unwrap();
        let fine = DistanceField::build_default(&c, 1.0 / 128.0).unwrap();
        for h in [ScalarField::one(), ScalarField::NormSquared] {
            let a = cov_residual(&c, &s, &h, &coarse).unwrap().rel_residual;
            let b = cov_residual(&c, &s, &h, &fine).unwrap().rel_residual;
            let q = b / a;
            t.check(a <= 2e-2, format!("{}: residual {a} at h = 1/64", h.label()));
            t.check((0.4..=0.6).contains(&q), format!("{}: refinement ratio {q}", h.label()));
            ratios.push(format!("{:.3}", q));
        }
    }
    let mut worst = 0.0f64;
    for sh in catalog_samples().iter().filter(|s| s.curve.corners().is_empty()) {
        let r = mean_value_check(&sh.curve, &sh.samples);
        worst = worst.max(r.rel_residual);
        t.check(r.rel_residual <= 1e-5, format!("{}: mean phi {}", sh.spec.name(), r.rel_residual));
    }
    t.note(format!("ratios=[{}] mean-value rel<={worst:.1e}", ratios.join(", ")));
}

fn kd_and_focal(t: &mut Tally) {
    let (mut kd, mut focal) = (0.0f64, 0.0f64);
    for sh in catalog_samples() {
        let v = verify_kd(&sh.samples);
        kd = kd.max(v);
        t.check(v <= 1.0 + 1e-6, format!("{}: max kappa*lambda {v}", sh.spec.name()));
        if sh.curve.corners().is_empty() {
            let p = ExactProjector::new(&sh.curve).unwrap();
            let f = focal_check(&p, &sh.samples, 1e-6 * sh.curve.diameter()).unwrap();
            focal = focal.max(f.residual);
            t.check(f.residual <= 1e-3, format!("{}: |kappa*lambda - 1| = {}", sh.spec.name(), f.residual));
        }
    }
    t.note(format!("max kappa*lambda={kd:.9} focal residual<={focal:.1e}"));
}

fn monge_kantorovich(t: &mut Tally) {
    let disk = catalog::circle(1.0).unwrap();
    let one = SourceField::constant(1.0);
    let mut l1 = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0] {
        let f = DistanceField::build_default(&disk, h).unwrap();
        let sol = vf_field(&f, &one, 1e-6 * disk.diameter()).unwrap();
        let g = sol.grid;
        let mut err = 0.0f64;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                if sol.inside[k] && !sol.singular[k] {
                    err = err.max((sol.v[k] - g.center(i, j).norm() / 2.0).abs());
                }
            }
        }
        t.check(err <= 3.0 * h, format!("h = {h}: v error {err}"));
        let st = sol.residual_stats();
        if h == 1.0 / 128.0 {
            t.check(st.median_abs <= 0.05, format!("median residual {}", st.median_abs));
            let comp = sol.complementarity();
            t.check(comp <= 5.0 * h * sol.max_v(), format!("complementarity {comp}"));
            t.note(format!("v err={:.1}h median={:.1e} compl={comp:.1e}", err / h, st.median_abs));
        }
        l1.push(st.l1);
    }
    t.check(l1[1] < l1[0], format!("L1 residual not decreasing: {l1:?}"));

    let cases = [
        (catalog::circle(1.0).unwrap(), Verdict::Ball),
        (catalog::ellipse(2.0, 1.0).unwrap(), Verdict::HypothesesNotMet),
        (catalog::union_disks(2.0, 2.0).unwrap(), Verdict::Inapplicable),
    ];
    for (c, expected) in cases {
        let p = ExactProjector::new(&c).unwrap();
        let tols = CriterionTolerances::for_curve(&c);
        let s = cut_samples(&p, SAMPLES, tols.cut_tol).unwrap();
        let v = mk_verdict(&p, 1.0, &s, &tols).unwrap();
        t.check(v.report.verdict == expected, format!("mk verdict {:?}, expected {expected:?}", v.report.verdict));
        match expected {
            Verdict::Ball => {
                let off = (v.trace_min - 0.5).abs().max((v.trace_max - 0.5).abs());
                t.check(off <= 1e-6, format!("disk trace off by {off}"));
            }
            Verdict::Inapplicable => {
                t.check(v.report.notes.iter().any(|n| n.contains("not a ball")), "union note missing");
                for x in s.iter().filter(|x| !x.corner_limit) {
                    let ok = (x.phi - 1.0).abs() <= 1e-3
                        && (x.lambda - 2.0).abs() <= 1e-3
                        && (x.point.curvature - 0.5).abs() <= 1e-3;
                    t.check(ok, format!("union sample s = {}", x.point.s));
                }
            }
            Verdict::HypothesesNotMet => {}
        }
    }
    t.note(format!("L1 {:.2e} -> {:.2e}", l1[0], l1[1]));
}

fn web_identity(t: &mut Tally) {
    let disk = catalog::circle(1.0).unwrap();
    let p = ExactProjector::new(&disk).unwrap();
    let s = cut_samples(&p, 512, 1e-9).unwrap();
    let all = GammaArc::new(0.0, disk.length());
    let lap = DivergenceOperator::Laplace;
    let r = teo10_residual(&p, &s, &all, &lap, 1e-9).unwrap();
    t.check(r.residual <= 1e-10, format!("disk laplace residual {}", r.residual));
    t.check((r.hprime0 + 0.5).abs() <= 1e-10, format!("disk laplace h'(0) = {}", r.hprime0));
    let plap = DivergenceOperator::parse("plap:4").unwrap();
    let q = teo10_residual(&p, &s, &all, &plap, 1e-9).unwrap();
    let expect = -(0.5f64).powf(1.0 / 3.0);
    t.check((q.hprime0 - expect).abs() <= 1e-10, format!("disk r^2 h'(0) = {}", q.hprime0));
    t.check((q.hprime0.powi(3) + q.phi).abs() <= 1e-10, "h'(0)^3 != -phi");

    let e = catalog::ellipse(2.0, 1.0).unwrap();
    let pe = ExactProjector::new(&e).unwrap();
    let se = cut_samples(&pe, SAMPLES, 1e-6 * e.diameter()).unwrap();
    let gamma = GammaArc::around(0.0, 0.05 * e.length(), e.length());
    let re = teo10_residual(&pe, &se, &gamma, &lap, 1e-6 * e.diameter()).unwrap();
    t.check(re.residual <= 1e-4, format!("ellipse residual {}", re.residual));

    // focal rays: every disk ray and the ellipse's major vertex
    let mut worst = 0.0f64;
    for op in [&lap, &plap] {
        for (k, l) in [(1.0, 1.0), (re.kappa, re.lambda)] {
            let prof = web_profile(op, k, l, &[0.0, 0.5 * l, l]).unwrap();
            worst = worst.max(prof.flux_end().abs());
        }
    }
    t.check(worst <= 1e-10, format!("flux at ray end {worst}"));
    t.note(format!(
        "disk residual={:.1e} h'(0)[r^2]={:.12} ellipse residual={:.1e} |F(lambda)|<={worst:.1e}",
        r.residual, q.hprime0, re.residual
    ));
}

fn cross_validation(t: &mut Tally) {
    let h = 1.0 / 128.0;
    let mut worst = (0.0f64, "");
    for sh in catalog_samples() {
        let field = DistanceField::build_default(&sh.curve, h).unwrap();
        let tol = 1e-6 * sh.curve.diameter();
        let exact = ExactProjector::new(&sh.curve).unwrap();
        let a = cut_samples(&exact, 512, tol).unwrap();
        let b = cut_samples(&field, 512, tol).unwrap();
        let diff = a.iter().zip(&b).map(|(x, y)| (x.lambda - y.lambda).abs()).fold(0.0, f64::max);
        if diff > worst.0 {
            worst = (diff, sh.spec.name());
        }
        t.check(diff <= 5.0 * h, format!("{}: {:.2}h", sh.spec.name(), diff / h));
    }
    t.note(format!("max |exact - field| = {:.2}h ({})", worst.0 / h, worst.1));
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn property_suite(t: &mut Tally) {
    let mut worst = 0.0f64;
    for base in [catalog::ellipse(2.0, 1.0).unwrap(), catalog::fourier(1.0, &[0.0, 0.08, 0.05], &[0.0, 0.03]).unwrap()] {
        let p = ExactProjector::new(&base).unwrap();
        for c in [0.5, 2.0, 3.7] {
            let big = base.scaled(c);
            let pb = ExactProjector::new(&big).unwrap();
            for k in 0..16 {
                let frac = (k as f64 + 0.21) / 16.0;
                let y = base.point_at_arclength(frac * base.length());
                let yc = big.point_at_arclength(frac * big.length());
                let tol = 1e-11 * base.diameter();
                let l = cut_value(&p, &y, tol).unwrap();
                let lc = cut_value(&pb, &yc, tol * c).unwrap();
                let errs = [
                    rel(yc.curvature, y.curvature / c),
                    rel(lc, c * l),
                    rel(phi_2d(lc, yc.curvature), c * phi_2d(l, y.curvature)),
                ];
                let e = errs.iter().fold(0.0f64, |a, b| a.max(*b));
                worst = worst.max(e);
                t.check(e <= 1e-8, format!("dilation by {c} at {frac}: {errs:?}"));
            }
        }
    }
    for base in [catalog::circle(1.0).unwrap(), catalog::ellipse(2.0, 1.0).unwrap(), catalog::union_disks(2.0, 2.0).unwrap()] {
        let verdict = |curve: &BoundaryCurve| {
            let p = ExactProjector::new(curve).unwrap();
            let tols = CriterionTolerances::for_curve(curve);
            let s = cut_samples(&p, 512, tols.cut_tol).unwrap();
            let r = criterion_report(&p, &s, &tols).unwrap();
            (r.verdict, r.ratio)
        };
        let (v0, r0) = verdict(&base);
        for (c, angle) in [(0.4, 0.7), (2.5, -2.1)] {
            let (v1, r1) = verdict(&base.scaled(c).rotated(angle));
            t.check(v0 == v1, format!("verdict changed from {v0:?} to {v1:?}"));
            t.check(rel(r1, c * r0) <= 1e-8, format!("ratio scaling {}", rel(r1, c * r0)));
        }
    }

    let bin = env!("CARGO_BIN_EXE_cutloc");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for d in &dirs {
        let mut texts = Vec::new();
        for args in [&["--shape", "ellipse", "report"][..], &["--shape", "fourier", "web", "--operator", "plap:3"]] {
            let out = Command::new(bin).args(["--samples", "1024", "--out", d.path().to_str().unwrap()]).args(args).output().unwrap();
            t.check(out.status.success(), format!("{args:?} failed"));
            texts.push(out.stdout);
        }
        texts.push(fs::read(d.path().join("report.json")).unwrap_or_default());
        texts.push(fs::read(d.path().join("web.json")).unwrap_or_default());
        outputs.push(texts);
    }
    t.check(outputs[0] == outputs[1], "JSON output differs between runs");
    t.note(format!("dilation rel<={worst:.1e}; JSON identical across runs: {}", outputs[0] == outputs[1]));
}

type Criterion = (&'static str, fn(&mut Tally));

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 11] = [
        ("ball characterization", ball_characterization),
        ("non-ball rejection", non_ball_rejection),
        ("AM-GM bound on phi*H", am_gm_bound),
        ("f-function maximum", f_maximum),
        ("Minkowski formula", minkowski),
        ("change of variables and mean value", change_of_variables),
        ("kappa*lambda bound and focal identity", kd_and_focal),
        ("Monge-Kantorovich", monge_kantorovich),
        ("web identity", web_identity),
        ("exact vs grid cut values", cross_validation),
        ("property suite", property_suite),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let mut tally = Tally::default();
        run(&mut tally);
        let ok = tally.failures.is_empty();
        println!(
            "criterion {:>2} {} {title} [{:.2}s]: {}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            if ok { tally.notes.join("; ") } else { tally.failures.join("; ") }
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    let total = start.elapsed();
    println!("acceptance total {:.1}s", total.as_secs_f64());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(total < Duration::from_secs(60), "acceptance took {total:?}");
}

