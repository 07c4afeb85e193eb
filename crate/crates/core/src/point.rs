//! Points of R³, the plane R², and the one-point compactification R³∪{∞}.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn dist(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// The (x, y) part, dropping z.
    pub fn plane(self) -> PlanePoint {
        PlanePoint::new(self.x, self.y)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A point of the (x, y)-plane, identified with (x, y, 0).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn l1_dist(self, other: PlanePoint) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn to_vec3(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = PlanePoint;
    fn mul(self, s: f64) -> PlanePoint {
        PlanePoint::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A point of R³ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedPoint {
    Finite(Vec3),
    Infinity,
}

impl ExtendedPoint {
    pub fn finite(x: f64, y: f64, z: f64) -> Self {
        ExtendedPoint::Finite(Vec3::new(x, y, z))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Vec3> {
        match *self {
            ExtendedPoint::Finite(v) => Some(v),
            ExtendedPoint::Infinity => None,
        }
    }

    /// The planar part of a point lying in the plane z = 0 (or ∞).
    /// Returns `None` for ∞.
    pub fn planar(&self) -> Option<PlanePoint> {
        self.as_finite().map(Vec3::plane)
    }

    /// Chordal distance on R³∪{∞}: the Euclidean distance between the
    /// images on the Riemann sphere of radius 1 (so the diameter is 2).
    pub fn chordal_dist(&self, other: &ExtendedPoint) -> f64 {
        match (self, other) {
            (ExtendedPoint::Infinity, ExtendedPoint::Infinity) => 0.0,
            (ExtendedPoint::Finite(p), ExtendedPoint::Infinity)
            | (ExtendedPoint::Infinity, ExtendedPoint::Finite(p)) => 2.0 / sqrt1p_sq(p.norm()),
            (ExtendedPoint::Finite(p), ExtendedPoint::Finite(q)) => {
                2.0 * p.dist(*q) / (sqrt1p_sq(p.norm()) * sqrt1p_sq(q.norm()))
            }
        }
    }
}

impl From<Vec3> for ExtendedPoint {
    fn from(v: Vec3) -> Self {
        ExtendedPoint::Finite(v)
    }
}

impl From<PlanePoint> for ExtendedPoint {
    fn from(p: PlanePoint) -> Self {
        ExtendedPoint::Finite(p.to_vec3())
    }
}

impl fmt::Display for ExtendedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedPoint::Finite(v) => v.fmt(f),
            ExtendedPoint::Infinity => f.write_str("∞"),
        }
    }
}

// sqrt(1 + r²) without overflow for huge r.
fn sqrt1p_sq(r: f64) -> f64 {
    1f64.hypot(r)
}
