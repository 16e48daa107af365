//! Closed sets as unions of exact-oracle primitives.

mod faces;
mod polytope;
mod shape;

use serde::{Deserialize, Serialize};

use crate::{Error, ExtReal, Result, Vector};

pub use faces::{FaceCurvature, FaceSample, FaceSampling};
pub use polytope::{ConvexPolytope, Halfspace};
pub use shape::Shape;

/// A closed subset of ℝⁿ with an exact distance oracle.
pub trait ClosedSet: Sync {
    fn dim(&self) -> usize;

    /// Euclidean distance δ_A(x).
    fn delta(&self, x: &Vector) -> f64;

    /// Points a ∈ A with |x − a| ≤ δ_A(x) + tol, deduplicated at resolution
    /// `tol`.
    fn nearest_set(&self, x: &Vector, tol: f64) -> Vec<Vector>;
}

/// Greedy deduplication of points closer than `tol`.
pub fn dedup_points(points: Vec<Vector>, tol: f64) -> Vec<Vector> {
    let mut kept: Vec<Vector> = Vec::with_capacity(points.len());
    for p in points {
        if !kept.iter().any(|k| (k - &p).norm() <= tol) {
            kept.push(p);
        }
    }
    kept
}

/// Nearest point projection ξ_A(x).
pub fn xi<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tol: f64) -> Result<Vector> {
    let mut pts = set.nearest_set(x, tol);
    match pts.len() {
        1 => Ok(pts.pop().expect("one element")),
        count => Err(Error::NotInDomain { count }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Point {
        c: Vec<f64>,
    },
    PointCloud {
        points: Vec<Vec<f64>>,
    },
    Segment {
        p: Vec<f64>,
        q: Vec<f64>,
    },
    Ball {
        c: Vec<f64>,
        #[serde(rename = "R")]
        radius: f64,
    },
    AxisBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    ConvexPolytope {
        halfspaces: Vec<HalfspaceSpec>,
    },
    BallComplement {
        c: Vec<f64>,
        #[serde(rename = "R")]
        radius: f64,
    },
}

fn default_margin() -> f64 {
    2.0
}

/// The on-disk scene description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub dim: usize,
    pub shapes: Vec<ShapeSpec>,
    #[serde(default = "default_margin")]
    pub bbox_margin: f64,
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Vector,
    pub hi: Vector,
}

impl Aabb {
    pub fn extent(&self) -> Vector {
        &self.hi - &self.lo
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }
}

/// A validated, immutable union of primitives.
#[derive(Clone, Debug)]
pub struct Scene {
    dim: usize,
    shapes: Vec<Shape>,
    spec: SceneSpec,
    bbox: Aabb,
    core: Aabb,
}

fn vector(dim: usize, xs: &[f64], what: &str) -> Result<Vector> {
    if xs.len() != dim {
        return Err(Error::InvalidScene(format!("{what} has {} coordinates, expected {dim}", xs.len())));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidScene(format!("{what} has non-finite coordinates")));
    }
    Ok(Vector::from_column_slice(xs))
}

fn positive_radius(r: f64) -> Result<f64> {
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(Error::InvalidScene(format!("radius must be positive, got {r}")))
    }
}

impl ShapeSpec {
    fn build(&self, dim: usize) -> Result<Shape> {
        Ok(match self {
            ShapeSpec::Point { c } => Shape::Point(vector(dim, c, "point")?),
            ShapeSpec::PointCloud { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidScene("point cloud is empty".into()));
                }
                Shape::PointCloud(points.iter().map(|p| vector(dim, p, "point cloud entry")).collect::<Result<_>>()?)
            }
            ShapeSpec::Segment { p, q } => {
                let (p, q) = (vector(dim, p, "segment end")?, vector(dim, q, "segment end")?);
                if (&p - &q).norm() == 0.0 {
                    return Err(Error::InvalidScene("segment has coincident ends".into()));
                }
                Shape::Segment { p, q }
            }
            ShapeSpec::Ball { c, radius } => {
                Shape::Ball { c: vector(dim, c, "ball center")?, radius: positive_radius(*radius)? }
            }
            ShapeSpec::AxisBox { lo, hi } => {
                let (lo, hi) = (vector(dim, lo, "box corner")?, vector(dim, hi, "box corner")?);
                if (0..dim).any(|i| lo[i] >= hi[i]) {
                    return Err(Error::InvalidScene("box needs lo < hi componentwise".into()));
                }
                Shape::AxisBox { lo, hi }
            }
            ShapeSpec::ConvexPolytope { halfspaces } => {
                let hs = halfspaces
                    .iter()
                    .map(|h| Ok(Halfspace { normal: vector(dim, &h.normal, "halfspace normal")?, offset: h.offset }))
                    .collect::<Result<Vec<_>>>()?;
                Shape::Polytope(ConvexPolytope::new(dim, hs)?)
            }
            ShapeSpec::BallComplement { c, radius } => Shape::BallComplement {
                c: vector(dim, c, "ball complement center")?,
                radius: positive_radius(*radius)?,
            },
        })
    }
}

impl Scene {
    pub fn from_spec(spec: SceneSpec) -> Result<Self> {
        if spec.dim != 2 && spec.dim != 3 {
            return Err(Error::InvalidScene(format!("dim must be 2 or 3, got {}", spec.dim)));
        }
        if spec.shapes.is_empty() {
            return Err(Error::EmptyScene);
        }
        if !(spec.bbox_margin.is_finite() && spec.bbox_margin > 0.0) {
            return Err(Error::InvalidScene("bbox_margin must be positive".into()));
        }
        let shapes = spec.shapes.iter().map(|s| s.build(spec.dim)).collect::<Result<Vec<_>>>()?;
        let (mut lo, mut hi) = shapes[0].bounds();
        for s in &shapes[1..] {
            let (l, h) = s.bounds();
            lo = lo.inf(&l);
            hi = hi.sup(&h);
        }
        let core = Aabb { lo: lo.clone(), hi: hi.clone() };
        let bbox = Aabb { lo: lo.add_scalar(-spec.bbox_margin), hi: hi.add_scalar(spec.bbox_margin) };
        Ok(Scene { dim: spec.dim, shapes, spec, bbox, core })
    }

    pub fn new(dim: usize, shapes: Vec<ShapeSpec>) -> Result<Self> {
        Self::from_spec(SceneSpec { dim, shapes, bbox_margin: default_margin() })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(text).map_err(|e| {
            Error::InvalidScene(format!("{} at line {} column {}", e, e.line(), e.column()))
        })?;
        Self::from_spec(spec)
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    /// Box containing every shape plus the margin.
    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    /// Box containing every shape, without margin.
    pub fn core_box(&self) -> &Aabb {
        &self.core
    }

    pub fn diameter(&self) -> f64 {
        self.core.diameter().max(1e-3 * self.bbox.diameter())
    }

    /// Reach of the scene when it is known in closed form (single shape).
    pub fn known_reach(&self) -> Option<ExtReal> {
        match self.shapes.as_slice() {
            [only] => Some(only.reach()),
            _ => None,
        }
    }

    /// Quadrature nodes on the faces of every shape.
    pub fn faces(&self, cfg: FaceSampling) -> Vec<FaceSample> {
        let mut out = Vec::new();
        for (i, s) in self.shapes.iter().enumerate() {
            faces::shape_faces(s, i, self.dim, cfg, &mut out);
        }
        out
    }

    /// Epigraph of a primitive of the Cantor function, approximated at the
    /// given depth by its supporting lines over the gaps, and capped to a
    /// bounded polygon.
    pub fn cantor_epigraph(depth: u32) -> Result<Self> {
        let mut lines: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        // gaps of the middle-thirds construction up to `depth`, with the
        // constant value of the Cantor function on each gap
        let mut intervals = vec![(0.0f64, 1.0f64)];
        let mut gaps: Vec<(f64, f64)> = Vec::new();
        for _ in 0..depth {
            let mut next = Vec::new();
            for (a, b) in intervals {
                let third = (b - a) / 3.0;
                gaps.push((a + third, a + 2.0 * third));
                next.push((a, a + third));
                next.push((a + 2.0 * third, b));
            }
            intervals = next;
        }
        for (a, b) in gaps {
            let mid = 0.5 * (a + b);
            lines.push((mid, cantor_function(mid, 60)));
        }
        lines.push((1.5, 1.0));
        let mut halfspaces = Vec::new();
        for (x0, slope) in lines {
            let g0 = cantor_primitive(x0, 60);
            let norm = (1.0 + slope * slope).sqrt();
            halfspaces.push(HalfspaceSpec {
                normal: vec![slope / norm, -1.0 / norm],
                offset: (slope * x0 - g0) / norm,
            });
        }
        halfspaces.push(HalfspaceSpec { normal: vec![-1.0, 0.0], offset: 0.5 });
        halfspaces.push(HalfspaceSpec { normal: vec![0.0, 1.0], offset: 1.0 });
        Scene::from_spec(SceneSpec {
            dim: 2,
            shapes: vec![ShapeSpec::ConvexPolytope { halfspaces }],
            bbox_margin: 1.0,
        })
    }
}

/// Middle-thirds Cantor function.
pub fn cantor_function(x: f64, depth: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if depth == 0 {
        return x;
    }
    if x < 1.0 / 3.0 {
        0.5 * cantor_function(3.0 * x, depth - 1)
    } else if x <= 2.0 / 3.0 {
        0.5
    } else {
        0.5 + 0.5 * cantor_function(3.0 * x - 2.0, depth - 1)
    }
}

/// `∫₀ˣ` of the Cantor function, from its self-similarity.
pub fn cantor_primitive(x: f64, depth: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 0.5 + (x - 1.0);
    }
    if depth == 0 {
        return 0.5 * x * x;
    }
    if x < 1.0 / 3.0 {
        cantor_primitive(3.0 * x, depth - 1) / 6.0
    } else if x <= 2.0 / 3.0 {
        1.0 / 12.0 + 0.5 * (x - 1.0 / 3.0)
    } else {
        0.25 + 0.5 * (x - 2.0 / 3.0) + cantor_primitive(3.0 * x - 2.0, depth - 1) / 6.0
    }
}

impl ClosedSet for Scene {
    fn dim(&self) -> usize {
        self.dim
    }

    fn delta(&self, x: &Vector) -> f64 {
        self.shapes.iter().map(|s| s.distance(x)).fold(f64::INFINITY, f64::min)
    }

    fn nearest_set(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        let dists: Vec<f64> = self.shapes.iter().map(|s| s.distance(x)).collect();
        let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
        let mut cands = Vec::new();
        for (s, d) in self.shapes.iter().zip(&dists) {
            if *d <= best + tol {
                cands.extend(s.nearest(x, tol).into_iter().filter(|a| (x - a).norm() <= best + tol));
            }
        }
        dedup_points(cands, tol)
    }
}
