//! Smooth bounded domains and their tubular-neighbourhood operations.
//!
//! Every point `x` within distance `δ` of the boundary has a unique
//! decomposition `x = p + d·ν(p)` with `p` on the boundary, `ν` the outward
//! unit normal and `d` the signed distance (negative inside). Reflection maps
//! `p + d·ν(p)` to `p − d·ν(p)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane. One-dimensional domains only use the first coordinate.
pub type Point = [f64; 2];

/// Number of samples used to seed closest-point searches on star-shaped curves.
const STAR_SEED_SAMPLES: usize = 1024;
const STAR_CURVATURE_SAMPLES: usize = 4096;
const STAR_OVERLAP_SAMPLES: usize = 512;
const TUBE_SAFETY: f64 = 0.5;

/// JSON description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Star2d {
        center: [f64; 2],
        /// `cos[k]` multiplies `cos(kθ)`; `cos[0]` is the mean radius.
        cos: Vec<f64>,
        /// `sin[k]` multiplies `sin(kθ)`; `sin[0]` is ignored.
        #[serde(default)]
        sin: Vec<f64>,
    },
}

/// Where on the boundary a [`BoundaryPoint`] sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryParam {
    /// Interval endpoint: 0 for the left end, 1 for the right end.
    End(usize),
    /// Polar angle around the domain centre, in `[0, 2π)`.
    Angle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub position: Point,
    pub param: BoundaryParam,
}

#[derive(Debug, Clone)]
struct StarCurve {
    center: Point,
    cos: Vec<f64>,
    sin: Vec<f64>,
    seeds: Vec<Point>,
}

impl StarCurve {
    /// `(r, r', r'')` at angle `theta`.
    fn radius_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
        for (k, &a) in self.cos.iter().enumerate() {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            r += a * c;
            r1 -= a * kf * s;
            r2 -= a * kf * kf * c;
        }
        for (k, &b) in self.sin.iter().enumerate().skip(1) {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            r += b * s;
            r1 += b * kf * c;
            r2 -= b * kf * kf * s;
        }
        (r, r1, r2)
    }

    fn radius(&self, theta: f64) -> f64 {
        self.radius_derivs(theta).0
    }

    /// Curve point and its first two derivatives with respect to `theta`.
    fn curve(&self, theta: f64) -> (Point, Point, Point) {
        let (r, r1, r2) = self.radius_derivs(theta);
        let (s, c) = theta.sin_cos();
        let p = [self.center[0] + r * c, self.center[1] + r * s];
        let d1 = [r1 * c - r * s, r1 * s + r * c];
        let d2 = [(r2 - r) * c - 2.0 * r1 * s, (r2 - r) * s + 2.0 * r1 * c];
        (p, d1, d2)
    }

    fn normal(&self, theta: f64) -> Point {
        let (_, t, _) = self.curve(theta);
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    }

    fn curvature(&self, theta: f64) -> f64 {
        let (r, r1, r2) = self.radius_derivs(theta);
        (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
    }

    fn contains(&self, x: Point) -> bool {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let rho = dx.hypot(dy);
        rho < self.radius(dy.atan2(dx))
    }

    /// Angle of the closest curve point to `x`.
    fn closest_angle(&self, x: Point) -> f64 {
        let m = self.seeds.len();
        let dist2 = |p: &Point| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
        let best = (0..m)
            .min_by(|&i, &j| dist2(&self.seeds[i]).total_cmp(&dist2(&self.seeds[j])))
            .unwrap_or(0);
        let step = TAU / m as f64;
        let seed = best as f64 * step;

        // g(θ) = |γ(θ) − x|²/2; safeguarded Newton on g'(θ) = 0.
        let dg = |th: f64| {
            let (p, d1, d2) = self.curve(th);
            let e = [p[0] - x[0], p[1] - x[1]];
            let g1 = e[0] * d1[0] + e[1] * d1[1];
            let g2 = d1[0] * d1[0] + d1[1] * d1[1] + e[0] * d2[0] + e[1] * d2[1];
            (g1, g2)
        };
        let mut lo = seed - step;
        let mut hi = seed + step;
        let (glo, _) = dg(lo);
        let (ghi, _) = dg(hi);
        if !(glo <= 0.0 && ghi >= 0.0) {
            // No bracket: plain Newton from the seed.
            let mut th = seed;
            for _ in 0..50 {
                let (g1, g2) = dg(th);
                if g2 <= 0.0 {
                    break;
                }
                let delta = g1 / g2;
                th -= delta;
                if delta.abs() < 1e-16 {
                    break;
                }
            }
            return th.rem_euclid(TAU);
        }
        let mut th = seed;
        for _ in 0..100 {
            let (g1, g2) = dg(th);
            if g1 == 0.0 {
                break;
            }
            if g1 < 0.0 {
                lo = th;
            } else {
                hi = th;
            }
            let newton = th - g1 / g2;
            let next = if g2 > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let moved = (next - th).abs();
            th = next;
            if moved <= 1e-15 * (1.0 + th.abs()) || hi - lo <= 1e-15 {
                break;
            }
        }
        th.rem_euclid(TAU)
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
    Star(StarCurve),
}

/// A validated smooth bounded domain in one or two dimensions.
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    spec: DomainSpec,
    shape: Shape,
    tubular_radius: f64,
    diameter: f64,
    bbox: (Point, Point),
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

impl DomainGeometry {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let shape = match &spec {
            DomainSpec::Interval { a, b } => {
                if !finite(&[*a, *b]) || !(a < b) {
                    return Err(Error::InvalidDomain(format!("interval needs a < b, got ({a}, {b})")));
                }
                Shape::Interval { a: *a, b: *b }
            }
            DomainSpec::Disk { center, radius } => {
                if !finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
                }
                Shape::Disk { center: *center, radius: *radius }
            }
            DomainSpec::Star2d { center, cos, sin } => {
                if cos.is_empty() || !finite(cos) || !finite(sin) || !finite(center) {
                    return Err(Error::InvalidDomain("star2d needs finite Fourier coefficients".into()));
                }
                let mut curve = StarCurve {
                    center: *center,
                    cos: cos.clone(),
                    sin: sin.clone(),
                    seeds: Vec::new(),
                };
                let min_r = (0..STAR_CURVATURE_SAMPLES)
                    .map(|i| curve.radius(TAU * i as f64 / STAR_CURVATURE_SAMPLES as f64))
                    .fold(f64::INFINITY, f64::min);
                if min_r <= 0.0 {
                    return Err(Error::InvalidDomain(format!(
                        "star2d radius function must stay positive, sampled minimum {min_r}"
                    )));
                }
                curve.seeds = (0..STAR_SEED_SAMPLES)
                    .map(|i| curve.curve(TAU * i as f64 / STAR_SEED_SAMPLES as f64).0)
                    .collect();
                Shape::Star(curve)
            }
        };

        let (diameter, bbox) = match &shape {
            Shape::Interval { a, b } => (b - a, ([*a, 0.0], [*b, 0.0])),
            Shape::Disk { center, radius } => (
                2.0 * radius,
                (
                    [center[0] - radius, center[1] - radius],
                    [center[0] + radius, center[1] + radius],
                ),
            ),
            Shape::Star(curve) => {
                let pts: Vec<Point> = (0..STAR_CURVATURE_SAMPLES)
                    .map(|i| curve.curve(TAU * i as f64 / STAR_CURVATURE_SAMPLES as f64).0)
                    .collect();
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in &pts {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                let coarse: Vec<Point> = pts.iter().step_by(16).copied().collect();
                let mut diam: f64 = 0.0;
                for (i, p) in coarse.iter().enumerate() {
                    for q in &coarse[i + 1..] {
                        diam = diam.max(norm([p[0] - q[0], p[1] - q[1]]));
                    }
                }
                let margin = 1e-3 * diam;
                (
                    diam,
                    ([lo[0] - margin, lo[1] - margin], [hi[0] + margin, hi[1] + margin]),
                )
            }
        };

        let tubular_radius = match &shape {
            Shape::Interval { a, b } => 0.5 * (b - a),
            Shape::Disk { radius, .. } => *radius,
            Shape::Star(curve) => star_tubular_radius(curve, diameter),
        };
        if !(tubular_radius > 0.0) {
            return Err(Error::DegenerateGeometry(format!(
                "tubular radius estimate {tubular_radius} is not positive"
            )));
        }

        Ok(Self { spec, shape, tubular_radius, diameter, bbox })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    /// Spatial dimension, 1 or 2.
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Geometric tolerance, relative to the diameter.
    pub fn eps_geo(&self) -> f64 {
        1e-12 * self.diameter
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        self.bbox
    }

    /// Radius `δ` of a tubular neighbourhood on which the normal
    /// parametrisation is injective.
    pub fn tubular_radius(&self) -> f64 {
        self.tubular_radius
    }

    /// Centre used for polar boundary parameters (midpoint for intervals).
    pub fn center(&self) -> Point {
        match &self.shape {
            Shape::Interval { a, b } => [0.5 * (a + b), 0.0],
            Shape::Disk { center, .. } => *center,
            Shape::Star(c) => c.center,
        }
    }

    /// Open-set membership test.
    pub fn contains(&self, x: Point) -> bool {
        match &self.shape {
            Shape::Interval { a, b } => x[0] > *a && x[0] < *b,
            Shape::Disk { center, radius } => norm([x[0] - center[0], x[1] - center[1]]) < *radius,
            Shape::Star(curve) => curve.contains(x),
        }
    }

    /// Closest boundary point and signed distance, without the uniqueness check.
    pub fn project(&self, x: Point) -> (BoundaryPoint, f64) {
        match &self.shape {
            Shape::Interval { a, b } => {
                let (end, p) = if x[0] - a <= b - x[0] { (0, *a) } else { (1, *b) };
                let d = (a - x[0]).max(x[0] - b);
                (BoundaryPoint { position: [p, 0.0], param: BoundaryParam::End(end) }, d)
            }
            Shape::Disk { center, radius } => {
                let v = [x[0] - center[0], x[1] - center[1]];
                let rho = norm(v);
                let theta = if rho > 0.0 { v[1].atan2(v[0]).rem_euclid(TAU) } else { 0.0 };
                let (s, c) = theta.sin_cos();
                let p = [center[0] + radius * c, center[1] + radius * s];
                (BoundaryPoint { position: p, param: BoundaryParam::Angle(theta) }, rho - radius)
            }
            Shape::Star(curve) => {
                let theta = curve.closest_angle(x);
                let p = curve.curve(theta).0;
                let dist = norm([x[0] - p[0], x[1] - p[1]]);
                let d = if curve.contains(x) { -dist } else { dist };
                (BoundaryPoint { position: p, param: BoundaryParam::Angle(theta) }, d)
            }
        }
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.project(x).1
    }

    pub fn closest_boundary_point(&self, x: Point) -> Result<BoundaryPoint> {
        let (bp, d) = self.project(x);
        self.check_tube(d)?;
        Ok(bp)
    }

    fn check_tube(&self, d: f64) -> Result<()> {
        if d.abs() >= self.tubular_radius || !d.is_finite() {
            return Err(Error::OutsideTubularNeighborhood { distance: d, radius: self.tubular_radius });
        }
        Ok(())
    }

    pub fn outward_normal(&self, p: &BoundaryPoint) -> Point {
        match (&self.shape, p.param) {
            (Shape::Interval { .. }, BoundaryParam::End(0)) => [-1.0, 0.0],
            (Shape::Interval { .. }, _) => [1.0, 0.0],
            (Shape::Disk { .. }, BoundaryParam::Angle(th)) => {
                let (s, c) = th.sin_cos();
                [c, s]
            }
            (Shape::Star(curve), BoundaryParam::Angle(th)) => curve.normal(th),
            (_, BoundaryParam::End(_)) => [f64::NAN, f64::NAN],
        }
    }

    /// Signed curvature of the boundary at `p` (positive where the domain is convex).
    /// Zero for intervals.
    pub fn curvature(&self, p: &BoundaryPoint) -> f64 {
        match (&self.shape, p.param) {
            (Shape::Disk { radius, .. }, _) => 1.0 / radius,
            (Shape::Star(curve), BoundaryParam::Angle(th)) => curve.curvature(th),
            _ => 0.0,
        }
    }

    /// Orthogonal reflection across the boundary.
    pub fn reflect(&self, x: Point) -> Result<Point> {
        let (bp, d) = self.project(x);
        self.check_tube(d)?;
        let nu = self.outward_normal(&bp);
        let p = bp.position;
        Ok(match self.dim() {
            1 => [p[0] - d * nu[0], 0.0],
            _ => [p[0] - d * nu[0], p[1] - d * nu[1]],
        })
    }

    /// Boundary point for a given parameter.
    pub fn boundary_point(&self, param: BoundaryParam) -> BoundaryPoint {
        let position = match (&self.shape, param) {
            (Shape::Interval { a, .. }, BoundaryParam::End(0)) => [*a, 0.0],
            (Shape::Interval { b, .. }, _) => [*b, 0.0],
            (Shape::Disk { center, radius }, BoundaryParam::Angle(th)) => {
                let (s, c) = th.sin_cos();
                [center[0] + radius * c, center[1] + radius * s]
            }
            (Shape::Star(curve), BoundaryParam::Angle(th)) => curve.curve(th).0,
            (_, BoundaryParam::End(_)) => [f64::NAN, f64::NAN],
        };
        BoundaryPoint { position, param }
    }

    /// `m` boundary points, equally spaced in the boundary parameter
    /// (both endpoints for intervals).
    pub fn boundary_samples(&self, m: usize) -> Vec<BoundaryPoint> {
        match self.shape {
            Shape::Interval { .. } => {
                vec![self.boundary_point(BoundaryParam::End(0)), self.boundary_point(BoundaryParam::End(1))]
            }
            _ => (0..m)
                .map(|i| self.boundary_point(BoundaryParam::Angle(TAU * i as f64 / m as f64)))
                .collect(),
        }
    }
}

/// Reach estimate for a star-shaped curve: half the smallest radius of
/// curvature, shrunk until sampled normal segments stop crossing.
fn star_tubular_radius(curve: &StarCurve, diameter: f64) -> f64 {
    let max_kappa = (0..STAR_CURVATURE_SAMPLES)
        .map(|i| curve.curvature(TAU * i as f64 / STAR_CURVATURE_SAMPLES as f64).abs())
        .fold(0.0, f64::max);
    let mut delta = if max_kappa > 0.0 { TUBE_SAFETY / max_kappa } else { diameter };
    delta = delta.min(0.5 * diameter);

    let m = STAR_OVERLAP_SAMPLES;
    let pts: Vec<(Point, Point)> = (0..m)
        .map(|i| {
            let th = TAU * i as f64 / m as f64;
            (curve.curve(th).0, curve.normal(th))
        })
        .collect();
    for _ in 0..200 {
        if !normal_segments_cross(&pts, delta) {
            return delta;
        }
        delta *= 0.9;
    }
    0.0
}

fn normal_segments_cross(pts: &[(Point, Point)], delta: f64) -> bool {
    let seg = |(p, n): &(Point, Point)| -> (Point, Point) {
        (
            [p[0] - delta * n[0], p[1] - delta * n[1]],
            [p[0] + delta * n[0], p[1] + delta * n[1]],
        )
    };
    let segs: Vec<(Point, Point)> = pts.iter().map(seg).collect();
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if segments_intersect(segs[i], segs[j]) {
                return true;
            }
        }
    }
    false
}

fn segments_intersect((p1, p2): (Point, Point), (q1, q2): (Point, Point)) -> bool {
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

/// Angle of `v` in `[0, 2π)`.
pub fn polar_angle(v: Point) -> f64 {
    let th = v[1].atan2(v[0]);
    if th < 0.0 {
        th + 2.0 * PI
    } else {
        th
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn disk_normal_reconstruction(th in 0.0..TAU, frac in -0.95..0.95f64, r in 0.5..3.0f64) {
            let dom = DomainGeometry::new(DomainSpec::Disk { center: [0.3, -0.2], radius: r }).unwrap();
            let d = frac * dom.tubular_radius();
            let bp = dom.boundary_point(BoundaryParam::Angle(th));
            let nu = dom.outward_normal(&bp);
            let x = [bp.position[0] + d * nu[0], bp.position[1] + d * nu[1]];
            let (p, sd) = dom.project(x);
            let nu2 = dom.outward_normal(&p);
            let rec = [p.position[0] + sd * nu2[0], p.position[1] + sd * nu2[1]];
            let tol = 1e-10 * dom.diameter();
            prop_assert!(norm([rec[0] - x[0], rec[1] - x[1]]) <= tol);
            prop_assert!((sd - d).abs() <= tol);
            if sd.abs() > dom.eps_geo() {
                prop_assert_eq!(dom.contains(x), sd < 0.0);
            }
        }

        #[test]
        fn interval_involution(x in -0.45..1.45f64) {
            let dom = DomainGeometry::new(DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
            prop_assume!((dom.signed_distance([x, 0.0])).abs() < 0.5);
            let back = dom.reflect(dom.reflect([x, 0.0]).unwrap()).unwrap();
            prop_assert!((back[0] - x).abs() <= 1e-10);
        }
    }
}
