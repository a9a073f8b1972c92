//! Point and point-cloud types shared across the pipeline.
//!
//! Clouds are plain `Vec`s of points in millimetres. Operations preserve
//! input order, which keeps downstream spatial indexing and report output
//! deterministic.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(&self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(&self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Unordered set of 2D points (mm).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud2 {
    pub points: Vec<Point2>,
}

impl PointCloud2 {
    pub fn new(points: Vec<Point2>) -> Self {
        PointCloud2 { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Point2> {
        if self.points.is_empty() {
            return None;
        }
        let mut sum = Point2::new(0.0, 0.0);
        for p in &self.points {
            sum = sum + *p;
        }
        Some(sum * (1.0 / self.points.len() as f64))
    }

    pub fn translated(&self, d: Point2) -> PointCloud2 {
        PointCloud2::new(self.points.iter().map(|p| *p + d).collect())
    }

    pub fn transformed(&self, pose: &crate::se2::Pose2) -> PointCloud2 {
        PointCloud2::new(self.points.iter().map(|p| pose.apply(*p)).collect())
    }
}

/// Unordered set of 3D points (mm).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud3 {
    pub points: Vec<Point3>,
}

impl PointCloud3 {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud3 { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_z(&self) -> Option<f64> {
        self.points.iter().map(|p| p.z).fold(None, |acc, z| {
            Some(match acc {
                None => z,
                Some(m) => m.max(z),
            })
        })
    }

    /// Shift x/y in place; used to re-express grid clouds in the sensor
    /// frame (origin at the grid centre).
    pub fn translated_xy(&self, dx: f64, dy: f64) -> PointCloud3 {
        PointCloud3::new(
            self.points
                .iter()
                .map(|p| Point3::new(p.x + dx, p.y + dy, p.z))
                .collect(),
        )
    }
}
