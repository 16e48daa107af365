//! Bounded convex polytopes given by halfspaces `{y : normal·y ≤ offset}`.
//!
//! With n ≤ 3 every face is reached by enumerating subsets of at most n
//! supporting hyperplanes, which gives the exact nearest point and an
//! explicit face lattice.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::{Error, Result, Vector};

const FEAS_EPS: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    fn excess(&self, y: &Vector) -> f64 {
        self.normal.dot(y) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct ConvexPolytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vector>,
    scale: f64,
}

impl ConvexPolytope {
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::InvalidScene("convex polytope needs halfspaces".into()));
        }
        for h in &halfspaces {
            if h.normal.len() != dim {
                return Err(Error::InvalidScene("halfspace normal has wrong dimension".into()));
            }
            if ((h.normal.norm()) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidScene(format!(
                    "halfspace normal must be a unit vector (norm {})",
                    h.normal.norm()
                )));
            }
            if !h.offset.is_finite() {
                return Err(Error::InvalidScene("halfspace offset must be finite".into()));
            }
        }
        let mut poly = ConvexPolytope { dim, halfspaces, vertices: Vec::new(), scale: 1.0 };
        if poly.has_recession_direction() {
            return Err(Error::InvalidScene("convex polytope is unbounded".into()));
        }
        let vertices = poly.enumerate_vertices();
        if vertices.is_empty() {
            return Err(Error::InvalidScene("convex polytope is empty".into()));
        }
        poly.scale = vertices.iter().map(|v| v.amax()).fold(1.0, f64::max);
        poly.vertices = vertices;
        Ok(poly)
    }

    pub fn from_box(lo: &Vector, hi: &Vector) -> Result<Self> {
        let dim = lo.len();
        let mut hs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut n = Vector::zeros(dim);
            n[i] = -1.0;
            hs.push(Halfspace { normal: n.clone(), offset: -lo[i] });
            n[i] = 1.0;
            hs.push(Halfspace { normal: n, offset: hi[i] });
        }
        Self::new(dim, hs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    fn eps(&self) -> f64 {
        FEAS_EPS * self.scale
    }

    fn contains(&self, y: &Vector) -> bool {
        let eps = self.eps();
        self.halfspaces.iter().all(|h| h.excess(y) <= eps)
    }

    /// The recession cone is nontrivial iff some extreme ray candidate
    /// satisfies every constraint with `normal·d ≤ 0`.
    fn has_recession_direction(&self) -> bool {
        let normals: Vec<&Vector> = self.halfspaces.iter().map(|h| &h.normal).collect();
        let mut candidates: Vec<Vector> = Vec::new();
        match self.dim {
            2 => {
                for n in &normals {
                    let p = Vector::from_column_slice(&[-n[1], n[0]]);
                    candidates.push(-&p);
                    candidates.push(p);
                }
            }
            _ => {
                for (i, a) in normals.iter().enumerate() {
                    for b in normals.iter().skip(i + 1) {
                        let c = Vector3::new(a[0], a[1], a[2]).cross(&Vector3::new(b[0], b[1], b[2]));
                        if c.norm() > 1e-9 {
                            let c = Vector::from_column_slice(c.as_slice()) / c.norm();
                            candidates.push(-&c);
                            candidates.push(c);
                        }
                    }
                }
            }
        }
        // normals that do not span the space leave a whole subspace free
        let rank = {
            let m = crate::linalg::columns(&normals.iter().map(|n| (*n).clone()).collect::<Vec<_>>(), self.dim);
            crate::linalg::svd_triplets(&(&m * m.transpose())).iter().filter(|t| t.0 > 1e-12).count()
        };
        if rank < self.dim {
            return true;
        }
        candidates.iter().any(|d| normals.iter().all(|n| n.dot(d) <= 1e-12))
    }

    /// Point of the affine subspace cut out by the hyperplanes `idx` that is
    /// closest to `x`, or `None` when the hyperplanes are dependent.
    fn project_onto_flat(&self, x: &Vector, idx: &[usize]) -> Option<Vector> {
        let hs = &self.halfspaces;
        match idx.len() {
            1 => {
                let h = &hs[idx[0]];
                Some(x - &h.normal * h.excess(x))
            }
            2 => {
                let (a, b) = (&hs[idx[0]], &hs[idx[1]]);
                let g = Matrix2::new(1.0, a.normal.dot(&b.normal), a.normal.dot(&b.normal), 1.0);
                if g.determinant().abs() < 1e-12 {
                    return None;
                }
                let rhs = Vector2::new(a.excess(x), b.excess(x));
                let lam = g.lu().solve(&rhs)?;
                Some(x - &a.normal * lam[0] - &b.normal * lam[1])
            }
            3 => {
                let rows: Vec<&Halfspace> = idx.iter().map(|&i| &hs[i]).collect();
                let m = Matrix3::from_fn(|r, c| rows[r].normal[c]);
                if m.determinant().abs() < 1e-12 {
                    return None;
                }
                let rhs = Vector3::new(rows[0].offset, rows[1].offset, rows[2].offset);
                let y = m.lu().solve(&rhs)?;
                Some(Vector::from_column_slice(y.as_slice()))
            }
            _ => None,
        }
    }

    fn subsets(&self, size: usize) -> Vec<Vec<usize>> {
        let f = self.halfspaces.len();
        let mut out = Vec::new();
        match size {
            1 => (0..f).for_each(|i| out.push(vec![i])),
            2 => {
                for i in 0..f {
                    for j in i + 1..f {
                        out.push(vec![i, j]);
                    }
                }
            }
            3 => {
                for i in 0..f {
                    for j in i + 1..f {
                        for k in j + 1..f {
                            out.push(vec![i, j, k]);
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn enumerate_vertices(&self) -> Vec<Vector> {
        let mut verts: Vec<Vector> = Vec::new();
        let origin = Vector::zeros(self.dim);
        for idx in self.subsets(self.dim) {
            if let Some(y) = self.project_onto_flat(&origin, &idx) {
                let eps = FEAS_EPS * y.amax().max(1.0);
                if self.halfspaces.iter().all(|h| h.excess(&y) <= eps)
                    && !verts.iter().any(|v| (v - &y).norm() <= 1e-9 * y.amax().max(1.0))
                {
                    verts.push(y);
                }
            }
        }
        verts
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        (x - self.nearest(x)).norm()
    }

    /// Exact nearest point: the closest feasible projection onto the affine
    /// hull of some face.
    pub fn nearest(&self, x: &Vector) -> Vector {
        if self.contains(x) {
            return x.clone();
        }
        let mut best: Option<(f64, Vector)> = None;
        for size in 1..=self.dim {
            for idx in self.subsets(size) {
                if let Some(y) = self.project_onto_flat(x, &idx) {
                    if self.contains(&y) {
                        let d = (x - &y).norm_squared();
                        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                            best = Some((d, y));
                        }
                    }
                }
            }
        }
        best.map(|(_, y)| y).unwrap_or_else(|| {
            // every bounded polytope has a vertex; fall back to the closest one
            self.vertices
                .iter()
                .min_by(|a, b| (x - *a).norm_squared().total_cmp(&(x - *b).norm_squared()))
                .cloned()
                .expect("validated polytope has vertices")
        })
    }

    pub fn bounds(&self) -> (Vector, Vector) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    fn on_plane(&self, i: usize, v: &Vector) -> bool {
        self.halfspaces[i].excess(v).abs() <= 1e-9 * v.amax().max(1.0)
    }

    /// Facets as lists of vertices; in 3D ordered counter-clockwise about
    /// the outward normal.
    pub fn facets(&self) -> Vec<(usize, Vec<Vector>)> {
        let mut out = Vec::new();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.halfspaces.len() {
            let mut ids: Vec<usize> =
                (0..self.vertices.len()).filter(|&k| self.on_plane(i, &self.vertices[k])).collect();
            if ids.len() < self.dim {
                continue;
            }
            ids.sort_unstable();
            if seen.contains(&ids) {
                continue;
            }
            seen.push(ids.clone());
            let mut pts: Vec<Vector> = ids.iter().map(|&k| self.vertices[k].clone()).collect();
            if self.dim == 3 {
                let n = &self.halfspaces[i].normal;
                let centroid = pts.iter().fold(Vector::zeros(3), |acc, p| acc + p) / pts.len() as f64;
                let basis = crate::linalg::perp_basis(n);
                let e3 = Vector3::new(basis[0][0], basis[0][1], basis[0][2])
                    .cross(&Vector3::new(basis[1][0], basis[1][1], basis[1][2]));
                let flip = e3.dot(&Vector3::new(n[0], n[1], n[2])) < 0.0;
                pts.sort_by(|p, q| {
                    let ang = |v: &Vector| {
                        let d = v - &centroid;
                        let t = d.dot(&basis[1]).atan2(d.dot(&basis[0]));
                        if flip {
                            -t
                        } else {
                            t
                        }
                    };
                    ang(p).total_cmp(&ang(q))
                });
            } else if pts.len() > 2 {
                pts = farthest_pair(&pts);
            }
            out.push((i, pts));
        }
        out
    }

    /// Edges of a 3D polytope as vertex pairs.
    pub fn edges(&self) -> Vec<(Vector, Vector)> {
        let mut out: Vec<(Vector, Vector)> = Vec::new();
        if self.dim != 3 {
            return out;
        }
        let f = self.halfspaces.len();
        for i in 0..f {
            for j in i + 1..f {
                let shared: Vec<Vector> = self
                    .vertices
                    .iter()
                    .filter(|v| self.on_plane(i, v) && self.on_plane(j, v))
                    .cloned()
                    .collect();
                if shared.len() < 2 {
                    continue;
                }
                let pair = farthest_pair(&shared);
                let dup = out.iter().any(|(p, q)| {
                    ((p - &pair[0]).norm() < 1e-9 && (q - &pair[1]).norm() < 1e-9)
                        || ((p - &pair[1]).norm() < 1e-9 && (q - &pair[0]).norm() < 1e-9)
                });
                if !dup {
                    out.push((pair[0].clone(), pair[1].clone()));
                }
            }
        }
        out
    }
}

fn farthest_pair(pts: &[Vector]) -> Vec<Vector> {
    let mut best = (0usize, 0usize, -1.0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (&pts[i] - &pts[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    vec![pts[best.0].clone(), pts[best.1].clone()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn triangle() -> ConvexPolytope {
        let s = 0.5f64.sqrt();
        ConvexPolytope::new(
            2,
            vec![
                Halfspace { normal: v(&[0.0, -1.0]), offset: 0.0 },
                Halfspace { normal: v(&[-1.0, 0.0]), offset: 0.0 },
                Halfspace { normal: v(&[s, s]), offset: s },
            ],
        )
        .unwrap()
    }

    #[test]
    fn triangle_vertices_and_nearest() {
        let t = triangle();
        assert_eq!(t.vertices().len(), 3);
        assert!((t.nearest(&v(&[-1.0, -1.0])) - v(&[0.0, 0.0])).norm() < 1e-12);
        assert!((t.nearest(&v(&[1.0, 1.0])) - v(&[0.5, 0.5])).norm() < 1e-12);
        assert!((t.nearest(&v(&[0.5, -2.0])) - v(&[0.5, 0.0])).norm() < 1e-12);
        assert_eq!(t.distance(&v(&[0.1, 0.1])), 0.0);
    }

    #[test]
    fn rejects_unbounded_and_empty() {
        let half = vec![Halfspace { normal: v(&[0.0, 1.0]), offset: 0.0 }];
        assert!(ConvexPolytope::new(2, half).is_err());
        let wedge = vec![
            Halfspace { normal: v(&[0.0, 1.0]), offset: 0.0 },
            Halfspace { normal: v(&[-1.0, 0.0]), offset: 0.0 },
        ];
        assert!(ConvexPolytope::new(2, wedge).is_err());
        let empty = vec![
            Halfspace { normal: v(&[1.0, 0.0]), offset: -1.0 },
            Halfspace { normal: v(&[-1.0, 0.0]), offset: -1.0 },
            Halfspace { normal: v(&[0.0, 1.0]), offset: 1.0 },
            Halfspace { normal: v(&[0.0, -1.0]), offset: 1.0 },
        ];
        assert!(ConvexPolytope::new(2, empty).is_err());
        let not_unit = vec![Halfspace { normal: v(&[2.0, 0.0]), offset: 1.0 }];
        assert!(ConvexPolytope::new(2, not_unit).is_err());
    }

    #[test]
    fn cube_face_lattice() {
        let cube = ConvexPolytope::from_box(&v(&[0.0, 0.0, 0.0]), &v(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(cube.vertices().len(), 8);
        assert_eq!(cube.facets().len(), 6);
        assert!(cube.facets().iter().all(|(_, f)| f.len() == 4));
        assert_eq!(cube.edges().len(), 12);
        let corner = cube.nearest(&v(&[2.0, 2.0, 2.0]));
        assert!((corner - v(&[1.0, 1.0, 1.0])).norm() < 1e-12);
        let edge = cube.nearest(&v(&[0.5, 2.0, 2.0]));
        assert!((edge - v(&[0.5, 1.0, 1.0])).norm() < 1e-12);
    }
}
