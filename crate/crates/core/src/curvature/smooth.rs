//! Smooth parametric curves and surfaces with analytic second fundamental
//! forms, used to check the agreement of Q_A with the classical form.

use serde::Serialize;

use crate::linalg::{columns, frobenius, max_principal_angle, perp_basis};
use crate::scene::{dedup_points, ClosedSet};
use crate::{Error, ExtReal, Matrix, Result, Tolerances, Vector};

use super::curvature_at;

/// A closed embedded manifold M with analytic tangent spaces and second
/// fundamental form b_M.
pub trait SmoothManifold: ClosedSet {
    /// Orthonormal basis of Tan(M, a).
    fn tangent_basis(&self, a: &Vector) -> Result<Vec<Vector>>;

    /// Matrix of `b_M(a)(τ_i, τ_j)·u` in the basis from `tangent_basis`.
    fn second_form(&self, a: &Vector, u: &Vector) -> Result<Matrix>;
}

fn on_manifold<S: ClosedSet + ?Sized>(set: &S, a: &Vector) -> Result<()> {
    let distance = set.delta(a);
    if distance > 1e-9 {
        Err(Error::NotOnManifold { distance })
    } else {
        Ok(())
    }
}

fn axis(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// Round sphere `∂B(c, R)` in ℝⁿ; a circle when n = 2.
#[derive(Clone, Debug)]
pub struct RoundSphere {
    pub c: Vector,
    pub radius: f64,
}

impl ClosedSet for RoundSphere {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn delta(&self, x: &Vector) -> f64 {
        ((x - &self.c).norm() - self.radius).abs()
    }

    fn nearest_set(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        let d = x - &self.c;
        let norm = d.norm();
        if norm <= tol {
            let n = self.dim();
            return (0..2 * n)
                .map(|i| &self.c + axis(n, i / 2) * if i % 2 == 0 { self.radius } else { -self.radius })
                .collect();
        }
        vec![&self.c + d * (self.radius / norm)]
    }
}

impl SmoothManifold for RoundSphere {
    fn tangent_basis(&self, a: &Vector) -> Result<Vec<Vector>> {
        on_manifold(self, a)?;
        Ok(perp_basis(&((a - &self.c) / self.radius)))
    }

    fn second_form(&self, a: &Vector, u: &Vector) -> Result<Matrix> {
        let m = self.tangent_basis(a)?.len();
        let outward = (a - &self.c) / self.radius;
        Ok(Matrix::identity(m, m) * (-outward.dot(u) / self.radius))
    }
}

/// Axis-aligned ellipse `(p cos t, q sin t)` about the origin of ℝ².
#[derive(Clone, Debug)]
pub struct Ellipse {
    pub p: f64,
    pub q: f64,
}

impl Ellipse {
    const SAMPLES: usize = 4096;

    fn point(&self, t: f64) -> Vector {
        Vector::from_column_slice(&[self.p * t.cos(), self.q * t.sin()])
    }

    fn velocity(&self, t: f64) -> Vector {
        Vector::from_column_slice(&[-self.p * t.sin(), self.q * t.cos()])
    }

    fn parameter(&self, a: &Vector) -> f64 {
        (a[1] / self.q).atan2(a[0] / self.p)
    }

    /// Newton on the stationarity condition, started from a sampled local
    /// minimum and kept inside its sampling cell.
    fn refine(&self, x: &Vector, t0: f64) -> f64 {
        let cell = std::f64::consts::TAU / Self::SAMPLES as f64;
        let mut t = t0;
        for _ in 0..100 {
            let e = self.point(t);
            let de = self.velocity(t);
            let r = x - &e;
            let g = -r.dot(&de);
            let h = de.dot(&de) + r.dot(&e);
            let step = if h > 0.0 { (g / h).clamp(-cell, cell) } else { -g.signum() * cell * 0.5 };
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        t
    }

    fn candidates(&self, x: &Vector) -> Vec<(f64, Vector)> {
        let n = Self::SAMPLES;
        let ts: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect();
        let d: Vec<f64> = ts.iter().map(|&t| (x - self.point(t)).norm_squared()).collect();
        let mut out = Vec::new();
        for i in 0..n {
            let (prev, next) = (d[(i + n - 1) % n], d[(i + 1) % n]);
            if d[i] <= prev && d[i] <= next {
                let t = self.refine(x, ts[i]);
                let a = self.point(t);
                out.push(((x - &a).norm(), a));
            }
        }
        out
    }
}

impl ClosedSet for Ellipse {
    fn dim(&self) -> usize {
        2
    }

    fn delta(&self, x: &Vector) -> f64 {
        self.candidates(x).into_iter().map(|c| c.0).fold(f64::INFINITY, f64::min)
    }

    fn nearest_set(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        let cands = self.candidates(x);
        let best = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        dedup_points(cands.into_iter().filter(|c| c.0 <= best + tol).map(|c| c.1).collect(), tol)
    }
}

impl SmoothManifold for Ellipse {
    fn tangent_basis(&self, a: &Vector) -> Result<Vec<Vector>> {
        on_manifold(self, a)?;
        Ok(vec![self.velocity(self.parameter(a)).normalize()])
    }

    fn second_form(&self, a: &Vector, u: &Vector) -> Result<Matrix> {
        on_manifold(self, a)?;
        let t = self.parameter(a);
        let de = self.velocity(t);
        let tau = de.normalize();
        let acc = -self.point(t);
        let b = (&acc - &tau * acc.dot(&tau)) / de.norm_squared();
        Ok(Matrix::from_element(1, 1, b.dot(u)))
    }
}

/// Torus of revolution about the z axis with major radius `big` and tube
/// radius `small`.
#[derive(Clone, Debug)]
pub struct Torus {
    pub big: f64,
    pub small: f64,
}

impl Torus {
    /// Radial unit vector, tube angle (cos θ, sin θ) and |w| for x.
    fn frame(&self, x: &Vector) -> Option<(Vector, f64, f64, f64)> {
        let rxy = x[0].hypot(x[1]);
        if rxy == 0.0 {
            return None;
        }
        let e = Vector::from_column_slice(&[x[0] / rxy, x[1] / rxy, 0.0]);
        let (w0, w1) = (rxy - self.big, x[2]);
        let norm = w0.hypot(w1);
        if norm == 0.0 {
            return None;
        }
        Some((e, w0 / norm, w1 / norm, norm))
    }

    fn surface_point(&self, e: &Vector, cos: f64, sin: f64) -> Vector {
        let mut a = e * (self.big + self.small * cos);
        a[2] = self.small * sin;
        a
    }
}

impl ClosedSet for Torus {
    fn dim(&self) -> usize {
        3
    }

    fn delta(&self, x: &Vector) -> f64 {
        let rxy = x[0].hypot(x[1]);
        ((rxy - self.big).hypot(x[2]) - self.small).abs()
    }

    fn nearest_set(&self, x: &Vector, tol: f64) -> Vec<Vector> {
        match self.frame(x) {
            Some((e, cos, sin, norm)) if x[0].hypot(x[1]) > tol && norm > tol => {
                vec![self.surface_point(&e, cos, sin)]
            }
            _ => {
                // on the axis or on the core circle the minimizers form a circle
                let mut out = Vec::new();
                for k in 0..4 {
                    let phi = std::f64::consts::FRAC_PI_2 * k as f64;
                    let e = Vector::from_column_slice(&[phi.cos(), phi.sin(), 0.0]);
                    for (c, s) in [(1.0, 0.0), (-1.0, 0.0)] {
                        let a = self.surface_point(&e, c, s);
                        out.push(a);
                    }
                }
                let best = out.iter().map(|a| (x - a).norm()).fold(f64::INFINITY, f64::min);
                dedup_points(out.into_iter().filter(|a| (x - a).norm() <= best + tol).collect(), tol)
            }
        }
    }
}

impl SmoothManifold for Torus {
    fn tangent_basis(&self, a: &Vector) -> Result<Vec<Vector>> {
        on_manifold(self, a)?;
        let (e, cos, sin, _) = self.frame(a).ok_or(Error::NotOnManifold { distance: f64::NAN })?;
        let e_phi = Vector::from_column_slice(&[-e[1], e[0], 0.0]);
        let e_theta = &e * (-sin) + axis(3, 2) * cos;
        Ok(vec![e_phi, e_theta])
    }

    fn second_form(&self, a: &Vector, u: &Vector) -> Result<Matrix> {
        on_manifold(self, a)?;
        let (e, cos, sin, _) = self.frame(a).ok_or(Error::NotOnManifold { distance: f64::NAN })?;
        let outward = &e * cos + axis(3, 2) * sin;
        let s = outward.dot(u);
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = -cos / (self.big + self.small * cos) * s;
        m[(1, 1)] = -s / self.small;
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothComparison {
    pub kappa: Vec<ExtReal>,
    pub m: usize,
    /// ‖Q_A(a, u) + b_M(a)·u‖_F, both as forms on the ambient space.
    pub q_residual: f64,
    /// Largest principal angle between T_A(a, u) and Tan(M, a).
    pub angle: f64,
}

/// Compares the numerical second fundamental form with the analytic one.
pub fn compare_with_smooth<M: SmoothManifold + ?Sized>(
    manifold: &M,
    a: &Vector,
    u: &Vector,
    r_eval: f64,
    tols: &Tolerances,
) -> Result<SmoothComparison> {
    let tangent = manifold.tangent_basis(a)?;
    let b = manifold.second_form(a, u)?;
    let data = curvature_at(manifold, a, u, r_eval, tols)?;
    let t = columns(&tangent, a.len());
    let b_ambient = &t * b * t.transpose();
    Ok(SmoothComparison {
        q_residual: frobenius(&(data.q_ambient() + b_ambient)),
        angle: max_principal_angle(&data.t_basis, &tangent),
        kappa: data.kappa,
        m: data.m,
    })
}
