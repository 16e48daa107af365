//! Primitive closed sets with exact distance and nearest-point oracles.

use crate::{ExtReal, Vector};

use super::polytope::ConvexPolytope;

#[derive(Clone, Debug)]
pub enum Shape {
    Point(Vector),
    PointCloud(Vec<Vector>),
    Segment { p: Vector, q: Vector },
    Ball { c: Vector, radius: f64 },
    AxisBox { lo: Vector, hi: Vector },
    Polytope(ConvexPolytope),
    /// The closed set `ℝⁿ ∖ U(c, radius)`.
    BallComplement { c: Vector, radius: f64 },
}

fn segment_foot(p: &Vector, q: &Vector, x: &Vector) -> Vector {
    let d = q - p;
    let t = ((x - p).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    p + d * t
}

impl Shape {
    pub fn distance(&self, x: &Vector) -> f64 {
        match self {
            Shape::Point(c) => (x - c).norm(),
            Shape::PointCloud(pts) => pts.iter().map(|p| (x - p).norm()).fold(f64::INFINITY, f64::min),
            Shape::Segment { p, q } => (x - segment_foot(p, q, x)).norm(),
            Shape::Ball { c, radius } => ((x - c).norm() - radius).max(0.0),
            Shape::AxisBox { lo, hi } => (x - x.sup(lo).inf(hi)).norm(),
            Shape::Polytope(poly) => poly.distance(x),
            Shape::BallComplement { c, radius } => (radius - (x - c).norm()).max(0.0),
        }
    }

    /// Points of the shape at distance at most `distance(x) + tol` from `x`.
    ///
    /// Where the minimizer set is a continuum (the center of a ball
    /// complement) a finite witness set of 2n points is returned.
    pub fn nearest(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        match self {
            Shape::Point(c) => vec![c.clone()],
            Shape::PointCloud(pts) => {
                let d = self.distance(x);
                pts.iter().filter(|p| (x - *p).norm() <= d + tol).cloned().collect()
            }
            Shape::Segment { p, q } => vec![segment_foot(p, q, x)],
            Shape::Ball { c, radius } => {
                let r = (x - c).norm();
                if r <= *radius {
                    vec![x.clone()]
                } else {
                    vec![c + (x - c) * (radius / r)]
                }
            }
            Shape::AxisBox { lo, hi } => vec![x.sup(lo).inf(hi)],
            Shape::Polytope(poly) => vec![poly.nearest(x)],
            Shape::BallComplement { c, radius } => {
                let r = (x - c).norm();
                if r >= *radius {
                    vec![x.clone()]
                } else if r > tol {
                    vec![c + (x - c) * (radius / r)]
                } else {
                    let n = x.len();
                    (0..2 * n)
                        .map(|k| {
                            let mut e = Vector::zeros(n);
                            e[k / 2] = if k % 2 == 0 { *radius } else { -radius };
                            c + e
                        })
                        .collect()
                }
            }
        }
    }

    /// Bounding box of the part of the shape that matters for level sets.
    /// For a ball complement this is the box of the removed ball.
    pub fn bounds(&self) -> (Vector, Vector) {
        match self {
            Shape::Point(c) => (c.clone(), c.clone()),
            Shape::PointCloud(pts) => {
                let mut lo = pts[0].clone();
                let mut hi = pts[0].clone();
                for p in pts {
                    lo = lo.inf(p);
                    hi = hi.sup(p);
                }
                (lo, hi)
            }
            Shape::Segment { p, q } => (p.inf(q), p.sup(q)),
            Shape::Ball { c, radius } | Shape::BallComplement { c, radius } => {
                (c.add_scalar(-radius), c.add_scalar(*radius))
            }
            Shape::AxisBox { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Polytope(poly) => poly.bounds(),
        }
    }

    /// Reach of the shape on its own.
    pub fn reach(&self) -> ExtReal {
        match self {
            Shape::PointCloud(pts) if pts.len() > 1 => {
                let mut best = f64::INFINITY;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        best = best.min((p - q).norm());
                    }
                }
                ExtReal::Finite(best / 2.0)
            }
            Shape::BallComplement { radius, .. } => ExtReal::Finite(*radius),
            _ => ExtReal::Infinite,
        }
    }
}
