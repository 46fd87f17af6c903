use approx::assert_relative_eq;
use cutloc_core::boundary::catalog;
use cutloc_core::cutlocus::cut_value;
use cutloc_core::distfield::DistanceField;
use cutloc_core::projection::{ExactProjector, Projector};
use cutloc_core::Vec2;
use std::f64::consts::PI;

/// Dense samples of the ellipse `(a cos θ, b sin θ)`, independent of the
/// library's arc machinery.
fn ellipse_cloud(a: f64, b: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(a * th.cos(), b * th.sin())
        })
        .collect()
}

fn brute_distance(cloud: &[Vec2], x: Vec2) -> f64 {
    cloud.iter().map(|p| (*p - x).norm_sq()).fold(f64::INFINITY, f64::min).sqrt()
}

#[test]
fn ellipse_perimeter_against_dense_quadrature() {
    let n = 1_000_000;
    let dth = 2.0 * PI / n as f64;
    let oracle: f64 = (0..n)
        .map(|k| {
            let th = (k as f64 + 0.5) * dth;
            (4.0 * th.sin().powi(2) + th.cos().powi(2)).sqrt() * dth
        })
        .sum();
    assert_relative_eq!(oracle, 9.688448220547675, max_relative = 1e-12);
    let e = catalog::ellipse(2.0, 1.0).unwrap();
    assert_relative_eq!(e.length(), oracle, max_relative = 1e-10);
}

#[test]
fn fourier_curvature_against_polar_formula() {
    let c = catalog::fourier(1.0, &[0.0, 0.0, 0.1], &[]).unwrap();
    for k in 0..97 {
        let y = c.point_at_arclength(c.length() * k as f64 / 97.0);
        let th = y.position.y.atan2(y.position.x);
        let r = 1.0 + 0.1 * (3.0 * th).cos();
        let r1 = -0.3 * (3.0 * th).sin();
        let r2 = -0.9 * (3.0 * th).cos();
        assert_relative_eq!(y.position.norm(), r, epsilon = 1e-12);
        let kappa = (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5);
        assert_relative_eq!(y.curvature, kappa, epsilon = 1e-10);
    }
}

#[test]
fn projector_and_field_against_brute_force_distance() {
    let e = catalog::ellipse(2.0, 1.0).unwrap();
    let cloud = ellipse_cloud(2.0, 1.0, 1_000_000);
    let exact = ExactProjector::new(&e).unwrap();
    let field = DistanceField::build_default(&e, 1.0 / 32.0).unwrap();
    let g = *field.grid();
    let mut checked = 0;
    for j in (0..g.ny).step_by(9) {
        for i in (0..g.nx).step_by(7) {
            let x = g.center(i, j);
            let oracle = brute_distance(&cloud, x);
            assert!((field.distance(i, j) - oracle).abs() < 1e-8, "cell ({i}, {j})");
            assert!((exact.nearest(x).unwrap().distance - oracle).abs() < 1e-8);
            let inside = (x.x / 2.0).powi(2) + x.y * x.y < 1.0;
            if oracle > 1e-9 {
                assert_eq!(field.is_inside(i, j), inside, "cell ({i}, {j})");
            }
            checked += 1;
        }
    }
    assert!(checked > 100);
}

/// `λ(y)` as the radius of the largest disk inside `Ω` tangent at `y`.
fn tangent_ball_lambda(cloud: &[Vec2], y: Vec2, nu: Vec2, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..60 {
        let t = 0.5 * (lo + hi);
        if brute_distance(cloud, y - nu * t) >= t - 1e-10 {
            lo = t;
        } else {
            hi = t;
        }
    }
    lo
}

#[test]
fn cut_values_against_tangent_balls() {
    let e = catalog::ellipse(2.0, 1.0).unwrap();
    let cloud = ellipse_cloud(2.0, 1.0, 200_000);
    let p = ExactProjector::new(&e).unwrap();
    for k in 0..24 {
        let y = e.point_at_arclength(e.length() * (k as f64 + 0.3) / 24.0);
        let lambda = cut_value(&p, &y, 1e-9).unwrap();
        let oracle = tangent_ball_lambda(&cloud, y.position, y.normal, 2.0);
        assert!((lambda - oracle).abs() < 2e-4, "s = {}: {lambda} vs {oracle}", y.s);
    }
    // vertices: focal at the major vertex, distance to the centre at the minor one
    let major = e.point_at_arclength(0.0);
    assert_relative_eq!(cut_value(&p, &major, 1e-9).unwrap(), 0.5, epsilon = 1e-8);
    let minor = e.point_at_arclength(e.length() / 4.0);
    assert_relative_eq!(cut_value(&p, &minor, 1e-9).unwrap(), 1.0, epsilon = 1e-7);
}

#[test]
fn square_cut_values_are_diagonal_distances() {
    let sq = catalog::square(2.0).unwrap();
    let p = ExactProjector::new(&sq).unwrap();
    for k in 1..40 {
        let y = sq.point_at_arclength(2.0 * k as f64 / 40.0 + 1.0);
        // on a side, λ is the distance to the nearer diagonal along the normal
        let along = if y.normal.x.abs() > 0.5 { y.position.y } else { y.position.x };
        let oracle = 1.0 - along.abs();
        if oracle < 1e-3 {
            continue;
        }
        assert_relative_eq!(cut_value(&p, &y, 1e-9).unwrap(), oracle, epsilon = 1e-7);
    }
}

#[test]
fn field_singular_cells_sit_on_the_medial_axis() {
    let sq = catalog::square(2.0).unwrap();
    let field = DistanceField::build_default(&sq, 1.0 / 32.0).unwrap();
    let g = *field.grid();
    let mut flagged = 0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if field.is_singular(i, j) {
                let c = g.center(i, j);
                // within a few cells of a diagonal
                assert!((c.x.abs() - c.y.abs()).abs() <= 3.0 * g.h, "({}, {})", c.x, c.y);
                flagged += 1;
            }
        }
    }
    assert!(flagged >= 4 * 30);
}

#[test]
fn field_cut_values_at_focal_rays() {
    // every ray of a disk ends at the centre, where the feet fan out
    let h = 1.0 / 128.0;
    for c in [catalog::circle(1.0).unwrap(), catalog::union_disks(2.0, 2.0).unwrap()] {
        let field = DistanceField::build_default(&c, h).unwrap();
        let exact = ExactProjector::new(&c).unwrap();
        for k in 0..40 {
            let y = c.point_at_arclength(c.length() * (k as f64 + 0.37) / 40.0);
            if c.corners().iter().any(|q| (q.s - y.s).abs() < 0.2) {
                continue;
            }
            let a = cut_value(&exact, &y, 1e-7).unwrap();
            let b = cut_value(&field, &y, 1e-7).unwrap();
            assert!((a - b).abs() <= h, "s = {}: {a} vs {b}", y.s);
        }
    }
}

/// Largest distance from a flagged cell centre to the known cut locus, and
/// the flagged area.
fn flagged_spread(field: &DistanceField, locus: impl Fn(Vec2) -> f64) -> (f64, f64) {
    let g = field.grid();
    let mut worst: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if field.is_singular(i, j) {
                worst = worst.max(locus(g.center(i, j)));
            }
        }
    }
    (worst, field.singular_measure())
}

#[test]
fn singular_cells_sit_on_the_cut_locus() {
    let seg = |x: Vec2, half: f64| {
        let t = x.x.clamp(-half, half);
        ((x.x - t).powi(2) + x.y * x.y).sqrt()
    };
    let diag = |x: Vec2| (x.x - x.y).abs().min((x.x + x.y).abs()) / 2f64.sqrt();
    type Locus = Box<dyn Fn(Vec2) -> f64>;
    let shapes: [(_, Locus); 3] = [
        (catalog::circle(1.0).unwrap(), Box::new(|x: Vec2| x.norm())),
        (catalog::ellipse(2.0, 1.0).unwrap(), Box::new(move |x| seg(x, 1.5))),
        (catalog::square(2.0).unwrap(), Box::new(diag)),
    ];
    for (curve, locus) in &shapes {
        let mut areas = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let field = DistanceField::build_default(curve, h).unwrap();
            let (worst, area) = flagged_spread(&field, locus);
            assert!(area > 0.0);
            assert!(worst <= 3.0 * h, "flagged cell {worst} from the locus at h = {h}");
            areas.push(area);
        }
        // a point or a curve in the plane: the flagged area shrinks with h
        assert!(areas[1] < 0.75 * areas[0], "{areas:?}");
    }
}
