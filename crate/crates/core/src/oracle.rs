//! Brute-force and closed-form reference values.
//!
//! Nothing here calls into the estimators: the grid sweep and the ray scan
//! have their own loops over the distance oracle.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::scene::{Aabb, ClosedSet};
use crate::{Error, ExtReal, Result, Vector};

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    GridBruteforce { grid_res: usize },
    DenseScan,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReferenceValue {
    pub name: String,
    pub value: f64,
    pub source: Source,
}

/// Subdivisions per axis of a cell straddling the boundary.
const SUB: usize = 4;

/// Lebesgue measure of `{x ∈ bbox : δ_A(x) ≤ r}` by cell-center counting,
/// with cells that may straddle the boundary subdivided once. A subcell of
/// width w whose center sits at `δ_A − r = d` counts `clamp(1/2 − d/w)`
/// once r > w, where δ_A − r is a distance to the level set; below that it
/// counts 0 or 1.
pub fn parallel_volume<S: ClosedSet + ?Sized>(set: &S, bbox: &Aabb, r: f64, grid_res: usize) -> f64 {
    let n = set.dim();
    let ext = bbox.extent();
    let h = ext.max() / grid_res as f64;
    let counts: Vec<usize> = ext.iter().map(|e| ((e / h).ceil() as usize).max(1)).collect();
    let half_diag = 0.5 * h * (n as f64).sqrt();
    let subcells = SUB.pow(n as u32) as u64;
    let rows: usize = counts[1..].iter().product();
    let w = h / SUB as f64;
    let coverage = |d: f64| {
        if r > w {
            (0.5 - d / w).clamp(0.0, 1.0)
        } else if d <= 0.0 {
            1.0
        } else {
            0.0
        }
    };
    // rows are summed in index order, independent of scheduling
    let per_row: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|row| {
            let mut rest = vec![0usize; n];
            let mut k = row;
            for d in 1..n {
                rest[d] = k % counts[d];
                k /= counts[d];
            }
            let mut total = 0.0;
            let mut c = Vector::zeros(n);
            for i in 0..counts[0] {
                rest[0] = i;
                for d in 0..n {
                    c[d] = bbox.lo[d] + h * (rest[d] as f64 + 0.5);
                }
                let dist = set.delta(&c);
                if dist - r > half_diag {
                    continue;
                }
                if r - dist >= half_diag {
                    total += subcells as f64;
                    continue;
                }
                for s in 0..subcells as usize {
                    let mut p = c.clone();
                    let mut t = s;
                    for d in 0..n {
                        let j = t % SUB;
                        t /= SUB;
                        p[d] += h * ((j as f64 + 0.5) / SUB as f64 - 0.5);
                    }
                    total += coverage(set.delta(&p) - r);
                }
            }
            total
        })
        .collect();
    let count: f64 = per_row.iter().sum();
    count * h.powi(n as i32) / subcells as f64
}

/// `sup {s ≤ s_max : δ_A(a + s u) = s}` by a linear scan refined by
/// bisection at the first violation; +∞ when no violation is seen.
pub fn dense_scan_reach<S: ClosedSet + ?Sized>(set: &S, a: &Vector, u: &Vector, s_max: f64, steps: usize) -> ExtReal {
    let ok = |s: f64| set.delta(&(a + u * s)) >= s - 1e-12 * (1.0 + s);
    let mut prev = 0.0;
    for k in 1..=steps {
        let s = s_max * k as f64 / steps as f64;
        if !ok(s) {
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return ExtReal::Finite(lo);
        }
        prev = s;
    }
    ExtReal::Infinite
}

/// Shapes with closed-form geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceShape {
    Disc { radius: f64 },
    Square { side: f64 },
    Segment { length: f64 },
    Point,
    Ball { radius: f64 },
    Box { sides: [f64; 3] },
    Sphere { radius: f64 },
    /// Values refer to the outer equator.
    Torus { big: f64, small: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    /// Lebesgue measure of the set.
    Volume,
    /// H^{n−1} of the boundary, or of the surface itself.
    Perimeter,
    /// H^{n−1} of the unit normal bundle.
    BundleLength,
    PrincipalCurvatures,
    /// Support measure μ_m of the whole bundle.
    Mu(usize),
}

fn closed(name: String, value: f64) -> ReferenceValue {
    ReferenceValue { name, value, source: Source::ClosedForm }
}

/// Closed-form reference values. Principal curvatures come back as one
/// value per direction.
pub fn analytic_reference(shape: ReferenceShape, quantity: Quantity) -> Result<Vec<ReferenceValue>> {
    use Quantity::*;
    use ReferenceShape::*;
    let name = format!("{shape:?}/{quantity:?}");
    let unsupported = || Err(Error::Unsupported(name.clone()));
    let one = |v: f64| Ok(vec![closed(name.clone(), v)]);
    match (shape, quantity) {
        (Disc { radius }, Volume) => one(PI * radius * radius),
        (Disc { radius }, Perimeter) => one(2.0 * PI * radius),
        // the curve a ↦ (a, a/R) over the circle
        (Disc { radius }, BundleLength) => one(2.0 * PI * (radius * radius + 1.0).sqrt()),
        (Disc { radius }, PrincipalCurvatures) => one(1.0 / radius),
        (Disc { radius }, Mu(1)) => one(PI * radius),
        (Square { side }, Volume) => one(side * side),
        (Square { side }, Perimeter) => one(4.0 * side),
        (Square { side }, BundleLength) => one(4.0 * side + 2.0 * PI),
        (Square { .. }, PrincipalCurvatures) => one(0.0),
        (Square { side }, Mu(1)) => one(2.0 * side),
        (Segment { .. }, Volume) => one(0.0),
        (Segment { length }, BundleLength) => one(2.0 * length + 2.0 * PI),
        (Segment { length }, Mu(1)) => one(length),
        (Point, Volume) => one(0.0),
        (Point, BundleLength) => one(2.0 * PI),
        (Point, Mu(1)) => one(0.0),
        (Disc { .. } | Square { .. } | Segment { .. } | Point, Mu(0)) => one(1.0),
        (Ball { radius }, Volume) => one(4.0 / 3.0 * PI * radius.powi(3)),
        (Ball { radius } | Sphere { radius }, Perimeter) => one(4.0 * PI * radius * radius),
        (Ball { radius }, BundleLength) => one(4.0 * PI * (radius * radius + 1.0)),
        (Ball { radius } | Sphere { radius }, PrincipalCurvatures) => {
            Ok(vec![closed(name.clone(), 1.0 / radius), closed(name.clone(), 1.0 / radius)])
        }
        (Ball { radius }, Mu(2)) => one(2.0 * PI * radius * radius),
        (Ball { radius }, Mu(1)) => one(4.0 * radius),
        (Ball { .. } | Box { .. }, Mu(0)) => one(1.0),
        (Box { sides: [a, b, c] }, Volume) => one(a * b * c),
        (Box { sides: [a, b, c] }, Perimeter) => one(2.0 * (a * b + b * c + c * a)),
        // faces, quarter-cylinders over edges, octants over vertices
        (Box { sides: [a, b, c] }, BundleLength) => one(2.0 * (a * b + b * c + c * a) + 2.0 * PI * (a + b + c) + 4.0 * PI),
        (Box { sides: [a, b, c] }, Mu(2)) => one(a * b + b * c + c * a),
        (Box { sides: [a, b, c] }, Mu(1)) => one(a + b + c),
        (Torus { big, small }, Perimeter) => one(4.0 * PI * PI * big * small),
        (Torus { big, small }, PrincipalCurvatures) => {
            Ok(vec![closed(name.clone(), 1.0 / (big + small)), closed(name.clone(), 1.0 / small)])
        }
        _ => unsupported(),
    }
}

/// Reference value from the grid sweep, tagged with its resolution.
pub fn grid_reference<S: ClosedSet + ?Sized>(set: &S, bbox: &Aabb, r: f64, grid_res: usize) -> ReferenceValue {
    ReferenceValue {
        name: format!("parallel_volume(r = {r})"),
        value: parallel_volume(set, bbox, r, grid_res),
        source: Source::GridBruteforce { grid_res },
    }
}
