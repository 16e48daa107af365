//! Exact parametrizations of the faces of each primitive.
//!
//! A face of dimension m is sampled at interior quadrature nodes carrying
//! H^m weights, together with an orthonormal basis of its tangent and
//! normal spaces and its curvature. These samples drive the stratified
//! support-measure route, which never touches the finite-difference
//! machinery.

use std::f64::consts::{PI, TAU};

use crate::linalg::orthonormal_complement;
use crate::Vector;

use super::polytope::ConvexPolytope;
use super::shape::Shape;

#[derive(Clone, Debug, PartialEq)]
pub enum FaceCurvature {
    Flat,
    /// Part of the sphere `∂B(center, radius)`.
    Sphere { center: Vector, radius: f64 },
}

#[derive(Clone, Debug)]
pub struct FaceSample {
    pub z: Vector,
    /// H^m measure represented by this node.
    pub weight: f64,
    /// Face dimension m.
    pub dim: usize,
    pub tangent: Vec<Vector>,
    pub normal: Vec<Vector>,
    pub curvature: FaceCurvature,
    pub shape: usize,
}

impl FaceSample {
    /// Principal curvatures of the face at `z` in the normal direction `v`,
    /// i.e. the eigenvalues of `−b(z)·v`.
    pub fn principal_curvatures(&self, v: &Vector) -> Vec<f64> {
        match &self.curvature {
            FaceCurvature::Flat => vec![0.0; self.dim],
            FaceCurvature::Sphere { center, radius } => {
                let outward = (&self.z - center) / *radius;
                vec![v.dot(&outward) / radius; self.dim]
            }
        }
    }
}

/// Density of quadrature nodes.
#[derive(Clone, Copy, Debug)]
pub struct FaceSampling {
    /// Nodes per unit length along each face direction.
    pub per_unit: f64,
}

impl Default for FaceSampling {
    fn default() -> Self {
        FaceSampling { per_unit: 200.0 }
    }
}

fn count(len: f64, per_unit: f64, min: usize) -> usize {
    ((len * per_unit).ceil() as usize).max(min)
}

struct Builder<'a> {
    out: &'a mut Vec<FaceSample>,
    shape: usize,
    n: usize,
    cfg: FaceSampling,
}

impl Builder<'_> {
    fn vertex(&mut self, z: &Vector) {
        self.out.push(FaceSample {
            z: z.clone(),
            weight: 1.0,
            dim: 0,
            tangent: Vec::new(),
            normal: orthonormal_complement(&[], self.n),
            curvature: FaceCurvature::Flat,
            shape: self.shape,
        });
    }

    fn segment(&mut self, p: &Vector, q: &Vector) {
        let len = (q - p).norm();
        let k = count(len, self.cfg.per_unit, 8);
        let t = (q - p) / len;
        let normal = orthonormal_complement(std::slice::from_ref(&t), self.n);
        for i in 0..k {
            let s = (i as f64 + 0.5) / k as f64;
            self.out.push(FaceSample {
                z: p + (q - p) * s,
                weight: len / k as f64,
                dim: 1,
                tangent: vec![t.clone()],
                normal: normal.clone(),
                curvature: FaceCurvature::Flat,
                shape: self.shape,
            });
        }
    }

    /// Planar triangle in ℝ³, split into k² congruent pieces.
    fn triangle(&mut self, a: &Vector, b: &Vector, c: &Vector) {
        let e1 = b - a;
        let e2 = c - a;
        let cross = nalgebra::Vector3::new(e1[0], e1[1], e1[2]).cross(&nalgebra::Vector3::new(e2[0], e2[1], e2[2]));
        let area = cross.norm() / 2.0;
        if area <= 1e-15 {
            return;
        }
        let nrm = Vector::from_column_slice((cross / cross.norm()).as_slice());
        let tangent = orthonormal_complement(std::slice::from_ref(&nrm), 3);
        let longest = e1.norm().max(e2.norm()).max((c - b).norm());
        let k = count(longest, self.cfg.per_unit, 2);
        let w = area / (k * k) as f64;
        let node = |i: f64, j: f64| a + &e1 * (i / k as f64) + &e2 * (j / k as f64);
        for i in 0..k {
            for j in 0..k - i {
                let (fi, fj) = (i as f64, j as f64);
                // upward piece
                let z = (node(fi, fj) + node(fi + 1.0, fj) + node(fi, fj + 1.0)) / 3.0;
                self.push_flat(z, w, &tangent, &nrm);
                if i + j + 1 < k {
                    let z = (node(fi + 1.0, fj) + node(fi, fj + 1.0) + node(fi + 1.0, fj + 1.0)) / 3.0;
                    self.push_flat(z, w, &tangent, &nrm);
                }
            }
        }
    }

    fn push_flat(&mut self, z: Vector, weight: f64, tangent: &[Vector], normal: &Vector) {
        self.out.push(FaceSample {
            z,
            weight,
            dim: 2,
            tangent: tangent.to_vec(),
            normal: vec![normal.clone()],
            curvature: FaceCurvature::Flat,
            shape: self.shape,
        });
    }

    fn sphere(&mut self, c: &Vector, radius: f64) {
        let curvature = FaceCurvature::Sphere { center: c.clone(), radius };
        if self.n == 2 {
            let k = count(TAU * radius, self.cfg.per_unit, 64);
            for i in 0..k {
                let t = TAU * (i as f64 + 0.5) / k as f64;
                let dir = Vector::from_column_slice(&[t.cos(), t.sin()]);
                let tan = Vector::from_column_slice(&[-t.sin(), t.cos()]);
                self.out.push(FaceSample {
                    z: c + &dir * radius,
                    weight: TAU * radius / k as f64,
                    dim: 1,
                    tangent: vec![tan],
                    normal: vec![dir],
                    curvature: curvature.clone(),
                    shape: self.shape,
                });
            }
        } else {
            // equal-area bands in z, uniform in longitude
            let kz = count(PI * radius, self.cfg.per_unit, 16);
            let kphi = count(TAU * radius, self.cfg.per_unit, 32);
            let w = 4.0 * PI * radius * radius / (kz * kphi) as f64;
            for i in 0..kz {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / kz as f64;
                let rho = (1.0 - z * z).sqrt();
                for j in 0..kphi {
                    let phi = TAU * (j as f64 + 0.5) / kphi as f64;
                    let dir = Vector::from_column_slice(&[rho * phi.cos(), rho * phi.sin(), z]);
                    let tangent = orthonormal_complement(std::slice::from_ref(&dir), 3);
                    self.out.push(FaceSample {
                        z: c + &dir * radius,
                        weight: w,
                        dim: 2,
                        tangent,
                        normal: vec![dir],
                        curvature: curvature.clone(),
                        shape: self.shape,
                    });
                }
            }
        }
    }

    fn polytope(&mut self, poly: &ConvexPolytope) {
        for v in poly.vertices() {
            self.vertex(v);
        }
        if self.n == 2 {
            for (_, f) in poly.facets() {
                self.segment(&f[0], &f[1]);
            }
        } else {
            for (p, q) in poly.edges() {
                self.segment(&p, &q);
            }
            for (_, f) in poly.facets() {
                for k in 1..f.len() - 1 {
                    self.triangle(&f[0], &f[k], &f[k + 1]);
                }
            }
        }
    }
}

/// Face samples of one shape.
pub fn shape_faces(shape: &Shape, index: usize, n: usize, cfg: FaceSampling, out: &mut Vec<FaceSample>) {
    let mut b = Builder { out, shape: index, n, cfg };
    match shape {
        Shape::Point(c) => b.vertex(c),
        Shape::PointCloud(pts) => pts.iter().for_each(|p| b.vertex(p)),
        Shape::Segment { p, q } => {
            b.vertex(p);
            b.vertex(q);
            b.segment(p, q);
        }
        Shape::Ball { c, radius } | Shape::BallComplement { c, radius } => b.sphere(c, *radius),
        Shape::AxisBox { lo, hi } => {
            let poly = ConvexPolytope::from_box(lo, hi).expect("validated box");
            b.polytope(&poly);
        }
        Shape::Polytope(poly) => b.polytope(poly),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn total(faces: &[FaceSample], dim: usize) -> f64 {
        faces.iter().filter(|f| f.dim == dim).map(|f| f.weight).sum()
    }

    #[test]
    fn square_faces_measure() {
        let mut out = Vec::new();
        let sq = Shape::AxisBox { lo: v(&[0.0, 0.0]), hi: v(&[1.0, 1.0]) };
        shape_faces(&sq, 0, 2, FaceSampling::default(), &mut out);
        assert_eq!(out.iter().filter(|f| f.dim == 0).count(), 4);
        assert!((total(&out, 1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cube_and_sphere_faces_measure() {
        let mut out = Vec::new();
        let cube = Shape::AxisBox { lo: v(&[0.0, 0.0, 0.0]), hi: v(&[1.0, 2.0, 3.0]) };
        shape_faces(&cube, 0, 3, FaceSampling { per_unit: 10.0 }, &mut out);
        assert!((total(&out, 2) - 22.0).abs() < 1e-9);
        assert!((total(&out, 1) - 24.0).abs() < 1e-9);
        let mut out = Vec::new();
        let ball = Shape::Ball { c: v(&[0.0, 0.0, 0.0]), radius: 2.0 };
        shape_faces(&ball, 0, 3, FaceSampling { per_unit: 10.0 }, &mut out);
        assert!((total(&out, 2) - 16.0 * PI).abs() < 1e-9);
        let s = &out[0];
        let k = s.principal_curvatures(&s.normal[0]);
        assert!((k[0] - 0.5).abs() < 1e-12 && (k[1] - 0.5).abs() < 1e-12);
    }
}
