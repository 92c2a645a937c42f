//! 3D geometry kernel: points, closed axis-aligned boxes and line-of-sight
//! classification of a straight segment against a set of buildings.

use serde::{Deserialize, Serialize};

use crate::error::GeomError;

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_to(&self, other: &Point3) -> f64 {
        distance(*self, *other)
    }

    pub fn translated(&self, by: Point3) -> Point3 {
        Point3::new(self.x + by.x, self.y + by.y, self.z + by.z)
    }

    /// Lexicographic `(x, y, z)` ordering under `f64::total_cmp`.
    pub fn lex_cmp(&self, other: &Point3) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.z.total_cmp(&other.z))
    }

    fn axis(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl std::fmt::Display for Point3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Point3, b: Point3) -> f64 {
    (a.x - b.x).hypot(a.y - b.y).hypot(a.z - b.z)
}

/// A closed axis-aligned volume, used for buildings and search regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct Aabb {
    min: Point3,
    max: Point3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    min: [f64; 3],
    max: [f64; 3],
}

impl TryFrom<RawBox> for Aabb {
    type Error = GeomError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        let [x0, y0, z0] = raw.min;
        let [x1, y1, z1] = raw.max;
        Aabb::new(Point3::new(x0, y0, z0), Point3::new(x1, y1, z1))
    }
}

impl From<Aabb> for RawBox {
    fn from(b: Aabb) -> Self {
        RawBox {
            min: [b.min.x, b.min.y, b.min.z],
            max: [b.max.x, b.max.y, b.max.z],
        }
    }
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self, GeomError> {
        if !min.is_finite() || !max.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(GeomError::InvertedBox { min, max });
        }
        Ok(Self { min, max })
    }

    /// Degenerate box holding a single point.
    pub fn point(p: Point3) -> Result<Self, GeomError> {
        Self::new(p, p)
    }

    pub fn min(&self) -> Point3 {
        self.min
    }

    pub fn max(&self) -> Point3 {
        self.max
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|axis| {
            let v = p.axis(axis);
            v >= self.min.axis(axis) && v <= self.max.axis(axis)
        })
    }

    pub fn translated(&self, by: Point3) -> Aabb {
        Aabb {
            min: self.min.translated(by),
            max: self.max.translated(by),
        }
    }

    /// Grows (or, for negative `margin`, shrinks) every face by `margin`.
    /// Shrinking past the center collapses that axis onto its midpoint.
    pub fn inflated(&self, margin: f64) -> Aabb {
        let grow = |lo: f64, hi: f64| {
            let (a, b) = (lo - margin, hi + margin);
            if a <= b {
                (a, b)
            } else {
                let mid = 0.5 * (lo + hi);
                (mid, mid)
            }
        };
        let (x0, x1) = grow(self.min.x, self.max.x);
        let (y0, y1) = grow(self.min.y, self.max.y);
        let (z0, z1) = grow(self.min.z, self.max.z);
        Aabb {
            min: Point3::new(x0, y0, z0),
            max: Point3::new(x1, y1, z1),
        }
    }
}

/// Whether the closed segment `[a, b]` touches the closed box.
///
/// Slab clipping of the parameter interval `t ∈ [0, 1]`. Axes along which the
/// segment does not move are handled by a direct containment test so that a
/// segment lying in a face plane still counts as touching.
pub fn segment_intersects_box(a: Point3, b: Point3, bx: &Aabb) -> bool {
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for axis in 0..3 {
        let origin = a.axis(axis);
        let delta = b.axis(axis) - origin;
        let (lo, hi) = (bx.min.axis(axis), bx.max.axis(axis));
        if delta == 0.0 {
            if origin < lo || origin > hi {
                return false;
            }
            continue;
        }
        let mut t0 = (lo - origin) / delta;
        let mut t1 = (hi - origin) / delta;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}

/// Outcome of a line-of-sight query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LosResult {
    blockers: Vec<usize>,
}

impl LosResult {
    pub fn is_clear(&self) -> bool {
        self.blockers.is_empty()
    }

    /// Indices of the buildings crossed, ascending.
    pub fn blockers(&self) -> &[usize] {
        &self.blockers
    }
}

pub fn line_of_sight(a: Point3, b: Point3, buildings: &[Aabb]) -> LosResult {
    let blockers = buildings
        .iter()
        .enumerate()
        .filter(|(_, bx)| segment_intersects_box(a, b, bx))
        .map(|(i, _)| i)
        .collect();
    LosResult { blockers }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn street_building() -> Aabb {
        Aabb::new(Point3::new(10.0, 0.0, -30.0), Point3::new(20.0, 50.0, 30.0)).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point3::ORIGIN, Point3::ORIGIN), 0.0);
        let d = distance(Point3::ORIGIN, Point3::new(30.0, 0.0, 10.0));
        assert!((d - 1000f64.sqrt()).abs() < 1e-12);
        assert!((d - 31.6228).abs() < 1e-4);
        assert_eq!(
            distance(Point3::new(1.0, 2.0, 3.0), Point3::new(1.0, 2.0, 7.0)),
            4.0
        );
    }

    #[test]
    fn inverted_box_is_rejected() {
        let err = Aabb::new(Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 1.0));
        assert!(matches!(err, Err(GeomError::InvertedBox { .. })));
        assert!(matches!(
            Aabb::new(Point3::new(f64::NAN, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)),
            Err(GeomError::NonFinite)
        ));
    }

    #[test]
    fn reference_geometry_is_blocked() {
        let a = Point3::ORIGIN;
        let b = Point3::new(30.0, 0.0, 10.0);
        assert!(segment_intersects_box(a, b, &street_building()));
        let los = line_of_sight(a, b, &[street_building()]);
        assert!(!los.is_clear());
        assert_eq!(los.blockers(), &[0]);
    }

    #[test]
    fn segment_above_building_is_clear() {
        let a = Point3::new(0.0, 0.0, 100.0);
        let b = Point3::new(30.0, 0.0, 100.0);
        assert!(!segment_intersects_box(a, b, &street_building()));
    }

    #[test]
    fn empty_scene_is_clear() {
        let los = line_of_sight(Point3::ORIGIN, Point3::new(5.0, 5.0, 5.0), &[]);
        assert!(los.is_clear());
        assert!(los.blockers().is_empty());
    }

    #[test]
    fn face_contact_counts() {
        let bx = Aabb::new(Point3::ORIGIN, Point3::new(1.0, 1.0, 1.0)).unwrap();
        // Ends exactly on the x = 0 face.
        assert!(segment_intersects_box(
            Point3::new(-1.0, 0.5, 0.5),
            Point3::new(0.0, 0.5, 0.5),
            &bx
        ));
        // Runs along an edge.
        assert!(segment_intersects_box(
            Point3::new(-1.0, 1.0, 1.0),
            Point3::new(2.0, 1.0, 1.0),
            &bx
        ));
        // Stops just short.
        assert!(!segment_intersects_box(
            Point3::new(-1.0, 0.5, 0.5),
            Point3::new(-1e-9, 0.5, 0.5),
            &bx
        ));
    }

    #[test]
    fn degenerate_segment_is_point_containment() {
        let bx = street_building();
        let inside = Point3::new(15.0, 10.0, 0.0);
        let outside = Point3::new(25.0, 10.0, 0.0);
        assert!(segment_intersects_box(inside, inside, &bx));
        assert!(!segment_intersects_box(outside, outside, &bx));
    }

    #[test]
    fn overlapping_buildings_are_reported_independently() {
        let b0 = street_building();
        let b1 = Aabb::new(Point3::new(12.0, -5.0, 0.0), Point3::new(14.0, 5.0, 5.0)).unwrap();
        let los = line_of_sight(Point3::ORIGIN, Point3::new(30.0, 0.0, 10.0), &[b0, b1]);
        assert_eq!(los.blockers(), &[0, 1]);
    }

    #[test]
    fn inflate_and_shrink() {
        let bx = Aabb::new(Point3::ORIGIN, Point3::new(2.0, 2.0, 2.0)).unwrap();
        let grown = bx.inflated(1.0);
        assert_eq!(grown.min(), Point3::new(-1.0, -1.0, -1.0));
        let collapsed = bx.inflated(-5.0);
        assert_eq!(collapsed.min(), Point3::new(1.0, 1.0, 1.0));
        assert_eq!(collapsed.max(), Point3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn box_serde_rejects_inverted() {
        let ok: Aabb = serde_json::from_str(r#"{"min":[0,0,0],"max":[1,1,1]}"#).unwrap();
        assert_eq!(ok.max(), Point3::new(1.0, 1.0, 1.0));
        assert!(serde_json::from_str::<Aabb>(r#"{"min":[2,0,0],"max":[1,1,1]}"#).is_err());
    }
}
