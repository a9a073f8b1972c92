//! Parametric 2D connector cross-sections.
//!
//! Shapes supply exact signed-distance queries to the contact simulator and
//! analytic boundaries to oracle tests. A cross-section is an outer
//! primitive plus optional inner features (cut-outs or bosses) combined by
//! CSG min/max; features flip containment locally but the outer boundary is
//! what boundary sampling and containment checks refer to.

use serde::{Deserialize, Serialize};

use crate::cloud::{Point2, PointCloud2};
use crate::error::{Error, Result};
use crate::se2::SymmetryGroup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Primitive {
    Circle {
        radius: f64,
    },
    RoundedRect {
        width: f64,
        height: f64,
        corner_radius: f64,
    },
    /// Simple polygon, vertices in counter-clockwise order.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOp {
    /// Boss: material added inside the outer boundary.
    Add,
    /// Cut-out: material removed, e.g. a receptacle tongue.
    Subtract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerFeature {
    pub op: FeatureOp,
    pub shape: CrossSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    #[serde(flatten)]
    pub primitive: Primitive,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inner_features: Vec<InnerFeature>,
}

impl CrossSection {
    pub fn circle(radius: f64) -> Self {
        CrossSection {
            primitive: Primitive::Circle { radius },
            inner_features: Vec::new(),
        }
    }

    pub fn rounded_rect(width: f64, height: f64, corner_radius: f64) -> Self {
        CrossSection {
            primitive: Primitive::RoundedRect {
                width,
                height,
                corner_radius,
            },
            inner_features: Vec::new(),
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        CrossSection {
            primitive: Primitive::Polygon { vertices },
            inner_features: Vec::new(),
        }
    }

    pub fn with_feature(mut self, op: FeatureOp, shape: CrossSection) -> Self {
        self.inner_features.push(InnerFeature { op, shape });
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.primitive {
            Primitive::Circle { radius } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidShape(format!("circle radius {radius} <= 0")));
                }
            }
            Primitive::RoundedRect {
                width,
                height,
                corner_radius,
            } => {
                if *width <= 0.0 || *height <= 0.0 {
                    return Err(Error::InvalidShape(format!(
                        "rounded rect {width}x{height} has a non-positive side"
                    )));
                }
                if *corner_radius < 0.0 || *corner_radius > width.min(*height) / 2.0 {
                    return Err(Error::InvalidShape(format!(
                        "corner radius {corner_radius} outside [0, min(w,h)/2]"
                    )));
                }
            }
            Primitive::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidShape("polygon needs >= 3 vertices".into()));
                }
                if polygon_signed_area(vertices) <= 0.0 {
                    return Err(Error::InvalidShape(
                        "polygon vertices must be counter-clockwise".into(),
                    ));
                }
                if !polygon_is_simple(vertices) {
                    return Err(Error::InvalidShape("polygon is self-intersecting".into()));
                }
            }
        }
        for feature in &self.inner_features {
            feature.shape.validate()?;
            // The outer boundary must enclose every feature.
            for p in boundary_samples(&feature.shape.primitive, 64) {
                if primitive_signed_distance(&self.primitive, p) >= 0.0 {
                    return Err(Error::InvalidShape(
                        "inner feature extends past the outer boundary".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Signed distance in mm: negative inside, positive outside, zero on the
/// boundary. Subtract features carve their region out of the interior; add
/// features extend it.
pub fn signed_distance(shape: &CrossSection, point: Point2) -> f64 {
    let mut d = primitive_signed_distance(&shape.primitive, point);
    for feature in &shape.inner_features {
        let fd = signed_distance(&feature.shape, point);
        d = match feature.op {
            FeatureOp::Subtract => d.max(-fd),
            FeatureOp::Add => d.min(fd),
        };
    }
    d
}

/// Strict interior test; boundary points count as outside.
pub fn contains(shape: &CrossSection, point: Point2) -> bool {
    signed_distance(shape, point) < 0.0
}

fn primitive_signed_distance(primitive: &Primitive, p: Point2) -> f64 {
    match primitive {
        Primitive::Circle { radius } => p.norm() - radius,
        Primitive::RoundedRect {
            width,
            height,
            corner_radius,
        } => {
            let qx = p.x.abs() - (width / 2.0 - corner_radius);
            let qy = p.y.abs() - (height / 2.0 - corner_radius);
            let outside = Point2::new(qx.max(0.0), qy.max(0.0)).norm();
            outside + qx.max(qy).min(0.0) - corner_radius
        }
        Primitive::Polygon { vertices } => polygon_signed_distance(vertices, p),
    }
}

fn polygon_signed_area(vertices: &[[f64; 2]]) -> f64 {
    let mut acc = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / 2.0
}

fn polygon_is_simple(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        for j in i + 1..n {
            // Skip adjacent edges (they share a vertex).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
            let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(a1: [f64; 2], a2: [f64; 2], b1: [f64; 2], b2: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn polygon_signed_distance(vertices: &[[f64; 2]], p: Point2) -> f64 {
    // Winding number for sign, minimum segment distance for magnitude.
    let mut winding = 0i32;
    let mut min_d2 = f64::INFINITY;
    let n = vertices.len();
    for i in 0..n {
        let a = Point2::new(vertices[i][0], vertices[i][1]);
        let b = Point2::new(vertices[(i + 1) % n][0], vertices[(i + 1) % n][1]);

        let e = b - a;
        let w = p - a;
        let t = (w.dot(e) / e.norm_squared()).clamp(0.0, 1.0);
        let d2 = (w - e * t).norm_squared();
        min_d2 = min_d2.min(d2);

        let is_left = e.cross(w);
        if a.y <= p.y {
            if b.y > p.y && is_left > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && is_left < 0.0 {
            winding -= 1;
        }
    }
    let d = min_d2.sqrt();
    if winding != 0 {
        -d
    } else {
        d
    }
}

/// `n` points approximately uniform in arc length along the outer boundary,
/// starting at the parameterization origin of each primitive.
pub fn sample_boundary(shape: &CrossSection, n: usize) -> PointCloud2 {
    PointCloud2::new(boundary_samples(&shape.primitive, n))
}

fn boundary_samples(primitive: &Primitive, n: usize) -> Vec<Point2> {
    assert!(n >= 1, "boundary sampling needs at least one point");
    match primitive {
        Primitive::Circle { radius } => (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Point2::new(radius * a.cos(), radius * a.sin())
            })
            .collect(),
        Primitive::RoundedRect {
            width,
            height,
            corner_radius,
        } => {
            let path = rounded_rect_path(*width, *height, *corner_radius);
            let perimeter: f64 = path.iter().map(|piece| piece.length()).sum();
            (0..n)
                .map(|i| point_along_path(&path, perimeter * i as f64 / n as f64))
                .collect()
        }
        Primitive::Polygon { vertices } => {
            let m = vertices.len();
            let mut lengths = Vec::with_capacity(m);
            let mut perimeter = 0.0;
            for i in 0..m {
                let a = Point2::new(vertices[i][0], vertices[i][1]);
                let b = Point2::new(vertices[(i + 1) % m][0], vertices[(i + 1) % m][1]);
                let len = (b - a).norm();
                lengths.push(len);
                perimeter += len;
            }
            (0..n)
                .map(|i| {
                    let mut s = perimeter * i as f64 / n as f64;
                    let mut edge = 0;
                    while edge < m - 1 && s > lengths[edge] {
                        s -= lengths[edge];
                        edge += 1;
                    }
                    let a = Point2::new(vertices[edge][0], vertices[edge][1]);
                    let b = Point2::new(
                        vertices[(edge + 1) % m][0],
                        vertices[(edge + 1) % m][1],
                    );
                    let t = if lengths[edge] > 0.0 { s / lengths[edge] } else { 0.0 };
                    a + (b - a) * t
                })
                .collect()
        }
    }
}

enum PathPiece {
    Line { from: Point2, to: Point2 },
    Arc { center: Point2, radius: f64, start_angle: f64, sweep: f64 },
}

impl PathPiece {
    fn length(&self) -> f64 {
        match self {
            PathPiece::Line { from, to } => (*to - *from).norm(),
            PathPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn at(&self, s: f64) -> Point2 {
        match self {
            PathPiece::Line { from, to } => {
                let len = (*to - *from).norm();
                let t = if len > 0.0 { s / len } else { 0.0 };
                *from + (*to - *from) * t
            }
            PathPiece::Arc { center, radius, start_angle, sweep } => {
                let a = start_angle + sweep.signum() * s / radius;
                *center + Point2::new(a.cos(), a.sin()) * *radius
            }
        }
    }
}

/// Counter-clockwise boundary path starting at the bottom of the right edge.
fn rounded_rect_path(width: f64, height: f64, corner_radius: f64) -> Vec<PathPiece> {
    use std::f64::consts::FRAC_PI_2;
    let a = width / 2.0 - corner_radius;
    let b = height / 2.0 - corner_radius;
    let w = width / 2.0;
    let h = height / 2.0;
    let cr = corner_radius;
    vec![
        PathPiece::Line { from: Point2::new(w, -b), to: Point2::new(w, b) },
        PathPiece::Arc { center: Point2::new(a, b), radius: cr, start_angle: 0.0, sweep: FRAC_PI_2 },
        PathPiece::Line { from: Point2::new(a, h), to: Point2::new(-a, h) },
        PathPiece::Arc { center: Point2::new(-a, b), radius: cr, start_angle: FRAC_PI_2, sweep: FRAC_PI_2 },
        PathPiece::Line { from: Point2::new(-w, b), to: Point2::new(-w, -b) },
        PathPiece::Arc { center: Point2::new(-a, -b), radius: cr, start_angle: std::f64::consts::PI, sweep: FRAC_PI_2 },
        PathPiece::Line { from: Point2::new(-a, -h), to: Point2::new(a, -h) },
        PathPiece::Arc { center: Point2::new(a, -b), radius: cr, start_angle: -FRAC_PI_2, sweep: FRAC_PI_2 },
    ]
}

fn point_along_path(path: &[PathPiece], mut s: f64) -> Point2 {
    for piece in path {
        let len = piece.length();
        if s <= len || std::ptr::eq(piece, path.last().unwrap()) {
            return piece.at(s.min(len));
        }
        s -= len;
    }
    unreachable!("path parameter out of range")
}

/// A peg/hole pair with its rotational symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorPreset {
    pub name: String,
    pub peg: CrossSection,
    pub hole: CrossSection,
    pub symmetry: SymmetryGroup,
}

impl ConnectorPreset {
    pub fn validate(&self) -> Result<()> {
        self.peg.validate()?;
        self.hole.validate()?;
        self.symmetry.validate()?;
        // Hole outer boundary must strictly contain the centered peg.
        for p in boundary_samples(&self.peg.primitive, 512) {
            if primitive_signed_distance(&self.hole.primitive, p) >= 0.0 {
                return Err(Error::InvalidShape(format!(
                    "preset {}: hole does not strictly contain the peg",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Built-in connector presets.
///
/// Flavours follow common audio, 8-pin, and USB-C plugs but the dimensions
/// are scaled-down defaults chosen so that every evaluation pose, including
/// the extreme corner offsets under rotation, keeps the whole cross-section
/// inside the default sensing area. Override them in the experiment config
/// to study other geometries.
pub fn preset_catalog() -> Vec<ConnectorPreset> {
    let tongue = CrossSection::rounded_rect(2.6, 0.4, 0.2);
    vec![
        ConnectorPreset {
            name: "audio-jack-like".into(),
            peg: CrossSection::circle(1.75),
            hole: CrossSection::circle(1.85),
            symmetry: SymmetryGroup::Circular,
        },
        ConnectorPreset {
            name: "lightning-like".into(),
            peg: CrossSection::rounded_rect(4.6, 1.1, 0.55),
            hole: CrossSection::rounded_rect(4.9, 1.4, 0.7)
                .with_feature(FeatureOp::Subtract, tongue),
            symmetry: SymmetryGroup::Cyclic(2),
        },
        ConnectorPreset {
            name: "usbc-like".into(),
            peg: CrossSection::rounded_rect(5.4, 1.7, 0.85),
            hole: CrossSection::rounded_rect(5.6, 1.9, 0.95),
            symmetry: SymmetryGroup::Cyclic(2),
        },
    ]
}

/// Look up a preset by name.
pub fn preset_by_name(name: &str) -> Result<ConnectorPreset> {
    preset_catalog()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}' (available: {})",
                preset_catalog()
                    .iter()
                    .map(|p| p.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

/// Half the gap between hole and peg outer boundaries along +x, used by
/// tests to compare preset tolerances.
pub fn nominal_clearance(preset: &ConnectorPreset) -> f64 {
    let probe = |shape: &Primitive| -> f64 {
        // Distance from origin to the boundary along +x via bisection.
        let mut lo = 0.0;
        let mut hi = 100.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if primitive_signed_distance(shape, Point2::new(mid, 0.0)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    probe(&preset.hole.primitive) - probe(&preset.peg.primitive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_signed_distance_examples() {
        let c = CrossSection::circle(2.0);
        assert_eq!(signed_distance(&c, Point2::new(0.0, 0.0)), -2.0);
        assert_eq!(signed_distance(&c, Point2::new(2.0, 0.0)), 0.0);
        assert!((signed_distance(&c, Point2::new(3.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rounded_rect_center_distance_matches_sampled_boundary() {
        // Independent oracle: minimum distance to a densely sampled boundary.
        let (w, h, cr) = (8.0, 2.0, 1.0);
        let shape = CrossSection::rounded_rect(w, h, cr);
        let q = Point2::new(0.0, 0.0);

        let mut min_d = f64::INFINITY;
        let steps = 200_000;
        // Walk edges and corner arcs directly.
        let (a, b) = (w / 2.0 - cr, h / 2.0 - cr);
        for i in 0..steps {
            let t = i as f64 / steps as f64;
            let candidates = [
                Point2::new(w / 2.0, -b + 2.0 * b * t),
                Point2::new(-w / 2.0, -b + 2.0 * b * t),
                Point2::new(-a + 2.0 * a * t, h / 2.0),
                Point2::new(-a + 2.0 * a * t, -h / 2.0),
                Point2::new(a, b) + Point2::new((t * std::f64::consts::FRAC_PI_2).cos(), (t * std::f64::consts::FRAC_PI_2).sin()) * cr,
                Point2::new(-a, b) + Point2::new(-(t * std::f64::consts::FRAC_PI_2).sin(), (t * std::f64::consts::FRAC_PI_2).cos()) * cr,
                Point2::new(-a, -b) + Point2::new(-(t * std::f64::consts::FRAC_PI_2).cos(), -(t * std::f64::consts::FRAC_PI_2).sin()) * cr,
                Point2::new(a, -b) + Point2::new((t * std::f64::consts::FRAC_PI_2).sin(), -(t * std::f64::consts::FRAC_PI_2).cos()) * cr,
            ];
            for c in candidates {
                min_d = min_d.min((c - q).norm());
            }
        }
        let sd = signed_distance(&shape, q);
        assert!(sd < 0.0);
        assert!((sd.abs() - min_d).abs() < 1e-6, "sd={sd} oracle={min_d}");
        assert!((sd - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn contains_examples() {
        let c = CrossSection::circle(1.0);
        assert!(contains(&c, Point2::new(0.5, 0.0)));
        assert!(!contains(&c, Point2::new(1.0, 0.0)));

        let square = CrossSection::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        square.validate().unwrap();
        assert!(contains(&square, Point2::new(0.5, 0.5)));
        assert!(!contains(&square, Point2::new(1.5, 0.5)));
    }

    #[test]
    fn contains_agrees_with_signed_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let shapes = vec![
            CrossSection::circle(1.5),
            CrossSection::rounded_rect(4.0, 2.0, 0.5),
            CrossSection::polygon(vec![[-1.0, -1.0], [2.0, -0.5], [1.0, 1.5], [-0.5, 1.0]]),
            CrossSection::rounded_rect(5.0, 3.0, 1.0)
                .with_feature(FeatureOp::Subtract, CrossSection::circle(0.5)),
        ];
        for shape in &shapes {
            for _ in 0..2000 {
                let p = Point2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
                assert_eq!(contains(shape, p), signed_distance(shape, p) < 0.0);
            }
        }
    }

    #[test]
    fn signed_distance_is_one_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let shapes = vec![
            CrossSection::circle(1.75),
            CrossSection::rounded_rect(4.6, 1.1, 0.55),
            CrossSection::polygon(vec![[-2.0, -1.0], [2.0, -1.0], [2.5, 0.5], [0.0, 2.0], [-2.5, 0.5]]),
            preset_catalog()[1].hole.clone(),
        ];
        for shape in &shapes {
            for _ in 0..5000 {
                let p = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let q = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let lhs = (signed_distance(shape, p) - signed_distance(shape, q)).abs();
                assert!(lhs <= (p - q).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn subtract_feature_flips_containment_locally() {
        let hole = &preset_catalog()[1].hole;
        // Tongue centre is carved out of the opening.
        assert!(!contains(hole, Point2::new(0.0, 0.0)));
        assert!(signed_distance(hole, Point2::new(0.0, 0.0)) > 0.0);
        // Between tongue and outer wall is still inside.
        assert!(contains(hole, Point2::new(0.0, 0.55)));
        // Outside the outer wall.
        assert!(!contains(hole, Point2::new(3.0, 0.0)));
    }

    #[test]
    fn circle_boundary_sampling_is_uniform() {
        let samples = sample_boundary(&CrossSection::circle(1.0), 4);
        assert_eq!(samples.len(), 4);
        for (i, p) in samples.points.iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            let expected_angle = std::f64::consts::FRAC_PI_2 * i as f64;
            let angle = p.y.atan2(p.x).rem_euclid(2.0 * std::f64::consts::PI);
            assert!((angle - expected_angle).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let shapes = vec![
            CrossSection::circle(1.85),
            CrossSection::rounded_rect(8.0, 2.0, 1.0),
            CrossSection::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
        ];
        for shape in &shapes {
            for p in &sample_boundary(shape, 100).points {
                assert!(signed_distance(shape, *p).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rounded_rect_perimeter_from_samples() {
        let (w, h, cr) = (8.0, 2.0, 1.0);
        let samples = sample_boundary(&CrossSection::rounded_rect(w, h, cr), 1000);
        let mut perimeter = 0.0;
        for i in 0..samples.len() {
            let a = samples.points[i];
            let b = samples.points[(i + 1) % samples.len()];
            perimeter += (b - a).norm();
        }
        let analytic = 2.0 * (w - 2.0 * cr) + 2.0 * (h - 2.0 * cr)
            + 2.0 * std::f64::consts::PI * cr;
        assert!(
            (perimeter - analytic).abs() / analytic < 1e-3,
            "sampled {perimeter} vs analytic {analytic}"
        );
    }

    #[test]
    fn sampling_commutes_with_rigid_motion_for_polygons() {
        use crate::se2::Pose2;
        let vertices = vec![[-2.0, -1.0], [2.0, -1.0], [2.5, 0.5], [0.0, 2.0], [-2.5, 0.5]];
        let pose = Pose2::new(0.7, 1.3, -0.4);
        let moved: Vec<[f64; 2]> = vertices
            .iter()
            .map(|v| {
                let q = pose.apply(Point2::new(v[0], v[1]));
                [q.x, q.y]
            })
            .collect();
        let direct = sample_boundary(&CrossSection::polygon(moved), 97);
        let then_moved = sample_boundary(&CrossSection::polygon(vertices), 97).transformed(&pose);
        for (a, b) in direct.points.iter().zip(then_moved.points.iter()) {
            assert!((*a - *b).norm() < 1e-9);
        }
    }

    #[test]
    fn catalog_has_three_valid_presets() {
        let catalog = preset_catalog();
        assert_eq!(catalog.len(), 3);
        for preset in &catalog {
            preset.validate().unwrap();
        }
    }

    #[test]
    fn usbc_clearance_is_tighter_than_lightning() {
        let catalog = preset_catalog();
        let lightning = catalog.iter().find(|p| p.name == "lightning-like").unwrap();
        let usbc = catalog.iter().find(|p| p.name == "usbc-like").unwrap();
        assert!(nominal_clearance(usbc) < nominal_clearance(lightning));
        assert!(nominal_clearance(usbc) > 0.0);
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(CrossSection::circle(-1.0).validate().is_err());
        assert!(CrossSection::rounded_rect(2.0, 1.0, 0.8).validate().is_err());
        assert!(CrossSection::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).validate().is_err());
        // Clockwise square.
        assert!(CrossSection::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
            .validate()
            .is_err());
        // Self-intersecting bowtie.
        assert!(CrossSection::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
            .validate()
            .is_err());
        // Feature poking out of the outer boundary.
        assert!(CrossSection::circle(1.0)
            .with_feature(FeatureOp::Subtract, CrossSection::circle(2.0))
            .validate()
            .is_err());
    }

    #[test]
    fn shape_json_round_trip() {
        let shape = preset_catalog()[1].hole.clone();
        let json = serde_json::to_string(&shape).unwrap();
        assert!(json.contains("\"variant\":\"rounded_rect\""));
        let back: CrossSection = serde_json::from_str(&json).unwrap();
        assert_eq!(shape, back);
    }
}
