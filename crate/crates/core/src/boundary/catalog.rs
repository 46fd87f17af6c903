//! Built-in shapes and the JSON shape-definition format.
//!
//! ```json
//! { "type": "ellipse", "a": 2.0, "b": 1.0, "center": [0.0, 0.0], "rotation": 0.3 }
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Arc, BoundaryCurve, Radial};
use crate::error::{Error, Result};
use crate::geom::{Similarity, Vec2};

/// Shape-specific parameters, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeKind {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Superellipse { a: f64, b: f64, exponent: f64 },
    /// Regular polygon with side normals at angles `2πk/sides`, sides at
    /// distance `inradius` from the centre, corners filleted by circular arcs
    /// of radius `corner_radius` (0 keeps sharp corners).
    RoundedPolygon { sides: usize, inradius: f64, corner_radius: f64 },
    /// Axis-aligned square.
    Square { side: f64 },
    /// Rectangle of width `length` and height `2 radius` with semicircular caps.
    Stadium { radius: f64, length: f64 },
    /// Union of two disks of equal `radius` whose centres lie `separation`
    /// apart on the x-axis.
    UnionDisks { radius: f64, separation: f64 },
    /// `r(θ) = a0 + Σ cos[k-1] cos kθ + sin[k-1] sin kθ`.
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub kind: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// Counterclockwise rotation about the centre, radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind) -> Self {
        ShapeSpec { kind, center: None, rotation: None }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ShapeKind::Circle { .. } => "circle",
            ShapeKind::Ellipse { .. } => "ellipse",
            ShapeKind::Superellipse { .. } => "superellipse",
            ShapeKind::RoundedPolygon { .. } => "rounded_polygon",
            ShapeKind::Square { .. } => "square",
            ShapeKind::Stadium { .. } => "stadium",
            ShapeKind::UnionDisks { .. } => "union_disks",
            ShapeKind::Fourier { .. } => "fourier",
        }
    }

    pub fn build(&self) -> Result<BoundaryCurve> {
        let arcs = arcs_for(&self.kind)?;
        let shift = self.center.map(Vec2::from).unwrap_or(Vec2::ZERO);
        let frame = Similarity::translation(shift).compose(&Similarity::rotation(self.rotation.unwrap_or(0.0)));
        BoundaryCurve::new(arcs, frame)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Construction(format!("{name} must be positive and finite, got {v}")))
    }
}

fn arcs_for(kind: &ShapeKind) -> Result<Vec<Arc>> {
    let full = |c: Vec2, r: f64| Arc::Circular { center: c, radius: r, start: 0.0, end: 2.0 * PI };
    Ok(match kind {
        &ShapeKind::Circle { radius } => {
            positive("radius", radius)?;
            vec![full(Vec2::ZERO, radius)]
        }
        &ShapeKind::Ellipse { a, b } => {
            positive("a", a)?;
            positive("b", b)?;
            vec![Arc::Elliptic { center: Vec2::ZERO, a, b, start: 0.0, end: 2.0 * PI }]
        }
        &ShapeKind::Superellipse { a, b, exponent } => {
            positive("a", a)?;
            positive("b", b)?;
            if !(exponent >= 2.0 && exponent.is_finite()) {
                return Err(Error::Construction(format!("exponent must be at least 2, got {exponent}")));
            }
            vec![Arc::Polar {
                center: Vec2::ZERO,
                radial: Radial::Superellipse { a, b, exponent },
                start: 0.0,
                end: 2.0 * PI,
            }]
        }
        &ShapeKind::RoundedPolygon { sides, inradius, corner_radius } => {
            if sides < 3 {
                return Err(Error::Construction(format!("polygon needs at least 3 sides, got {sides}")));
            }
            positive("inradius", inradius)?;
            if !(corner_radius >= 0.0 && corner_radius < inradius) {
                return Err(Error::Construction(format!(
                    "corner_radius must lie in [0, inradius), got {corner_radius}"
                )));
            }
            rounded_polygon_arcs(sides, inradius, corner_radius)
        }
        &ShapeKind::Square { side } => {
            positive("side", side)?;
            let h = side / 2.0;
            let v = [Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h), Vec2::new(-h, -h)];
            (0..4).map(|i| Arc::Segment { from: v[i], to: v[(i + 1) % 4] }).collect()
        }
        &ShapeKind::Stadium { radius, length } => {
            positive("radius", radius)?;
            positive("length", length)?;
            let (r, l) = (radius, length / 2.0);
            vec![
                Arc::Segment { from: Vec2::new(-l, -r), to: Vec2::new(l, -r) },
                Arc::Circular { center: Vec2::new(l, 0.0), radius: r, start: -PI / 2.0, end: PI / 2.0 },
                Arc::Segment { from: Vec2::new(l, r), to: Vec2::new(-l, r) },
                Arc::Circular { center: Vec2::new(-l, 0.0), radius: r, start: PI / 2.0, end: 1.5 * PI },
            ]
        }
        &ShapeKind::UnionDisks { radius, separation } => {
            positive("radius", radius)?;
            positive("separation", separation)?;
            let c = separation / 2.0;
            if c >= radius {
                return Err(Error::Construction("disks do not overlap".into()));
            }
            let y = (radius * radius - c * c).sqrt();
            let beta = PI - (y / c).atan();
            let gamma = (y / c).atan();
            vec![
                Arc::Circular { center: Vec2::new(c, 0.0), radius, start: -beta, end: beta },
                Arc::Circular { center: Vec2::new(-c, 0.0), radius, start: gamma, end: 2.0 * PI - gamma },
            ]
        }
        ShapeKind::Fourier { a0, cos, sin } => {
            let radial = Radial::Fourier { a0: *a0, cos: cos.clone(), sin: sin.clone() };
            for k in 0..4096 {
                let (r, _, _) = radial.eval(2.0 * PI * k as f64 / 4096.0);
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Construction("Fourier radius must stay positive".into()));
                }
            }
            vec![Arc::Polar { center: Vec2::ZERO, radial, start: 0.0, end: 2.0 * PI }]
        }
    })
}

fn rounded_polygon_arcs(n: usize, a: f64, rho: f64) -> Vec<Arc> {
    let alpha = |k: usize| 2.0 * PI * k as f64 / n as f64;
    let half = PI / n as f64;
    // Corner k sits between sides k and k + 1.
    let corner = |k: usize| Vec2::from_angle(alpha(k) + half) * ((a - rho) / half.cos());
    let mut arcs = Vec::with_capacity(2 * n);
    for k in 0..n {
        let prev = corner((k + n - 1) % n);
        let next = corner(k);
        let normal = Vec2::from_angle(alpha(k));
        arcs.push(Arc::Segment { from: prev + normal * rho, to: next + normal * rho });
        if rho > 0.0 {
            arcs.push(Arc::Circular { center: next, radius: rho, start: alpha(k), end: alpha(k) + 2.0 * half });
        }
    }
    arcs
}

pub fn circle(radius: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Circle { radius }).build()
}

pub fn ellipse(a: f64, b: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Ellipse { a, b }).build()
}

pub fn superellipse(a: f64, b: f64, exponent: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Superellipse { a, b, exponent }).build()
}

pub fn rounded_polygon(sides: usize, inradius: f64, corner_radius: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::RoundedPolygon { sides, inradius, corner_radius }).build()
}

pub fn square(side: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Square { side }).build()
}

pub fn stadium(radius: f64, length: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Stadium { radius, length }).build()
}

pub fn union_disks(radius: f64, separation: f64) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::UnionDisks { radius, separation }).build()
}

pub fn fourier(a0: f64, cos: &[f64], sin: &[f64]) -> Result<BoundaryCurve> {
    ShapeSpec::new(ShapeKind::Fourier { a0, cos: cos.to_vec(), sin: sin.to_vec() }).build()
}

/// One representative of every catalog entry, with its name.
pub fn representative_specs() -> Vec<ShapeSpec> {
    [
        ShapeKind::Circle { radius: 1.0 },
        ShapeKind::Ellipse { a: 2.0, b: 1.0 },
        ShapeKind::Superellipse { a: 1.0, b: 1.0, exponent: 4.0 },
        ShapeKind::RoundedPolygon { sides: 4, inradius: 1.0, corner_radius: 0.2 },
        ShapeKind::Square { side: 2.0 },
        ShapeKind::Stadium { radius: 1.0, length: 2.0 },
        ShapeKind::UnionDisks { radius: 2.0, separation: 2.0 },
        ShapeKind::Fourier { a0: 1.0, cos: vec![0.0, 0.0, 0.1], sin: vec![] },
    ]
    .into_iter()
    .map(ShapeSpec::new)
    .collect()
}

pub fn all_shapes() -> Vec<BoundaryCurve> {
    representative_specs().iter().map(|s| s.build().expect("catalog shape")).collect()
}

/// Catalog names with their parameter schemas (`name → type`).
pub fn schemas() -> Vec<(&'static str, Vec<(&'static str, &'static str)>)> {
    let with_placement = |mut v: Vec<(&'static str, &'static str)>| {
        v.push(("center", "[x,y]"));
        v.push(("rotation", "number"));
        v
    };
    vec![
        ("circle", with_placement(vec![("radius", "number")])),
        ("ellipse", with_placement(vec![("a", "number"), ("b", "number")])),
        (
            "superellipse",
            with_placement(vec![("a", "number"), ("b", "number"), ("exponent", "number")]),
        ),
        (
            "rounded_polygon",
            with_placement(vec![("sides", "integer"), ("inradius", "number"), ("corner_radius", "number")]),
        ),
        ("square", with_placement(vec![("side", "number")])),
        ("stadium", with_placement(vec![("radius", "number"), ("length", "number")])),
        ("union_disks", with_placement(vec![("radius", "number"), ("separation", "number")])),
        (
            "fourier",
            with_placement(vec![("a0", "number"), ("cos", "[number]"), ("sin", "[number]")]),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_placement() {
        let s = ShapeSpec::from_json(r#"{"type":"ellipse","a":2,"b":1,"center":[1,2],"rotation":0.5}"#).unwrap();
        assert_eq!(s.kind, ShapeKind::Ellipse { a: 2.0, b: 1.0 });
        assert_eq!(s.center, Some([1.0, 2.0]));
        let c = s.build().unwrap();
        let p = c.eval(0, 0.0).unwrap().position;
        let expect = Vec2::new(1.0, 2.0) + Vec2::from_angle(0.5) * 2.0;
        assert!(p.dist(expect) < 1e-14);
    }

    #[test]
    fn parse_fourier() {
        let s = ShapeSpec::from_json(r#"{"type":"fourier","a0":1.0,"cos":[0,0,0.1],"sin":[]}"#).unwrap();
        let c = s.build().unwrap();
        assert!((c.eval(0, 0.0).unwrap().position.x - 1.1).abs() < 1e-15);
    }

    #[test]
    fn parse_error_has_location() {
        let err = ShapeSpec::from_json("{\n  \"type\": \"circle\",\n  \"radius\": ,\n}").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ShapeSpec::from_json(r#"{"type":"blob"}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(circle(-1.0).is_err());
        assert!(union_disks(1.0, 3.0).is_err());
        assert!(rounded_polygon(4, 1.0, 1.0).is_err());
        assert!(fourier(0.5, &[0.6], &[]).is_err());
        assert!(superellipse(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn perimeters_of_simple_shapes() {
        assert!((square(2.0).unwrap().length() - 8.0).abs() < 1e-12);
        assert!((stadium(1.0, 2.0).unwrap().length() - (4.0 + 2.0 * PI)).abs() < 1e-12);
        // Rounded square: 4 straight pieces of 2 − 2ρ plus one full circle of radius ρ.
        let rs = rounded_polygon(4, 1.0, 0.2).unwrap();
        assert!((rs.length() - (4.0 * 1.6 + 2.0 * PI * 0.2)).abs() < 1e-12);
        assert!(rs.corners().is_empty());
        let hex = rounded_polygon(6, 1.0, 0.0).unwrap();
        assert_eq!(hex.corners().len(), 6);
    }

    #[test]
    fn schemas_cover_catalog() {
        let names: Vec<_> = schemas().iter().map(|s| s.0).collect();
        for spec in representative_specs() {
            assert!(names.contains(&spec.name()));
        }
    }
}
