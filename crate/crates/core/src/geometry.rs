//! Planar geometry: points, polylines with arc-length lookup, and oriented
//! rectangles with a separating-axis overlap test.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Left-hand normal (counter-clockwise rotation by 90 degrees).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Position and heading (radians, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// A polyline with precomputed cumulative arc length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub distance: f64,
}

impl Polyline {
    /// Returns `None` when fewer than two points are given or any segment has
    /// zero length.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in points.windows(2) {
            let seg = w[0].dist(w[1]);
            if !(seg > 0.0 && seg.is_finite()) {
                return None;
            }
            acc += seg;
            cumulative.push(acc);
        }
        Some(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("polyline has points")
    }

    pub fn first(&self) -> Vec2 {
        self.points[0]
    }

    pub fn last(&self) -> Vec2 {
        *self.points.last().expect("polyline has points")
    }

    /// Index of the segment containing arc length `s`. At an interior vertex
    /// the following segment is chosen; at the far end, the last segment.
    fn segment_at(&self, s: f64) -> usize {
        let nseg = self.points.len() - 1;
        // first cumulative value strictly greater than s
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(nseg - 1)
    }

    /// Pose at arc length `s`, clamped to `[0, length]`.
    pub fn pose_at(&self, s: f64) -> Pose {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((s - self.cumulative[i]) / seg_len).clamp(0.0, 1.0);
        let p = a.lerp(b, t);
        Pose {
            x: p.x,
            y: p.y,
            heading: (b.y - a.y).atan2(b.x - a.x),
        }
    }

    /// Closest point on the polyline to `p`.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection {
            s: 0.0,
            distance: f64::INFINITY,
        };
        for (i, w) in self.points.windows(2).enumerate() {
            let d = w[1] - w[0];
            let len2 = d.dot(d);
            let t = ((p - w[0]).dot(d) / len2).clamp(0.0, 1.0);
            let q = w[0] + d.scale(t);
            let dist = q.dist(p);
            if dist < best.distance {
                best = Projection {
                    s: self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i]),
                    distance: dist,
                };
            }
        }
        best
    }

    /// Minimum distance between two polylines (segment pairs, exact).
    pub fn min_distance(&self, other: &Polyline) -> f64 {
        let mut best = f64::INFINITY;
        for a in self.points.windows(2) {
            for b in other.points.windows(2) {
                best = best.min(segment_distance(a[0], a[1], b[0], b[1]));
            }
        }
        best
    }
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d.scale(t))
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    let da = a1 - a0;
    let db = b1 - b0;
    let denom = cross(da, db);
    if denom != 0.0 {
        let t = cross(b0 - a0, db) / denom;
        let u = cross(b0 - a0, da) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Oriented rectangle centred on a pose; `length` runs along the heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn new(pose: Pose, length: f64, width: f64) -> Self {
        Self {
            center: pose.position(),
            heading: pose.heading,
            length,
            width,
        }
    }

    fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_heading(self.heading);
        [u, u.perp()]
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let hl = u.scale(self.length / 2.0);
        let hw = v.scale(self.width / 2.0);
        let c = self.center;
        [c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw]
    }

    pub fn bounding_radius(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }

    /// Half-extent of the rectangle projected on a unit axis.
    fn radius_on(&self, axis: Vec2) -> f64 {
        let [u, v] = self.axes();
        0.5 * self.length * u.dot(axis).abs() + 0.5 * self.width * v.dot(axis).abs()
    }

    /// Closed-set overlap: touching edges count as overlapping. `eps` absorbs
    /// rounding on exactly touching configurations.
    pub fn overlaps(&self, other: &OrientedRect, eps: f64) -> bool {
        let d = other.center - self.center;
        if d.norm() > self.bounding_radius() + other.bounding_radius() + eps {
            return false;
        }
        for axis in self.axes().into_iter().chain(other.axes()) {
            let separation = d.dot(axis).abs();
            if separation > self.radius_on(axis) + other.radius_on(axis) + eps {
                return false;
            }
        }
        true
    }

    /// Whether a point lies inside (closed).
    pub fn contains(&self, p: Vec2, eps: f64) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.length / 2.0 + eps && d.dot(v).abs() <= self.width / 2.0 + eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_rejects_degenerate() {
        assert!(Polyline::new(vec![Vec2::new(0.0, 0.0)]).is_none());
        assert!(Polyline::new(vec![Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)]).is_none());
    }

    #[test]
    fn vertex_heading_uses_following_segment() {
        let pl = Polyline::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
        ])
        .unwrap();
        let p = pl.pose_at(10.0);
        assert_eq!((p.x, p.y), (10.0, 0.0));
        assert!((p.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        // end of polyline keeps the last segment's heading
        let end = pl.pose_at(20.0);
        assert_eq!((end.x, end.y), (10.0, 10.0));
        assert!((end.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn projection_finds_nearest_segment() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0)]).unwrap();
        let pr = pl.project(Vec2::new(30.0, 4.0));
        assert_eq!(pr.s, 30.0);
        assert_eq!(pr.distance, 4.0);
    }

    #[test]
    fn crossing_segments_have_zero_distance() {
        let a = Polyline::new(vec![Vec2::new(-5.0, 0.0), Vec2::new(5.0, 0.0)]).unwrap();
        let b = Polyline::new(vec![Vec2::new(0.0, -5.0), Vec2::new(0.0, 5.0)]).unwrap();
        assert_eq!(a.min_distance(&b), 0.0);
        let c = Polyline::new(vec![Vec2::new(-5.0, 3.0), Vec2::new(5.0, 3.0)]).unwrap();
        assert!((a.min_distance(&c) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_rects_separate_on_diagonal() {
        let a = OrientedRect::new(Pose { x: 0.0, y: 0.0, heading: std::f64::consts::FRAC_PI_4 }, 4.0, 1.0);
        let b = OrientedRect::new(Pose { x: 2.2, y: -2.2, heading: std::f64::consts::FRAC_PI_4 }, 4.0, 1.0);
        // centres are 3.11 apart along the shared minor axis; widths sum to 1
        assert!(!a.overlaps(&b, 1e-9));
        let c = OrientedRect::new(Pose { x: 0.3, y: -0.3, heading: std::f64::consts::FRAC_PI_4 }, 4.0, 1.0);
        assert!(a.overlaps(&c, 1e-9));
    }
}
