//! Principal curvatures, tangent spaces, the second fundamental form and
//! the symmetric functions H_j.

pub mod smooth;

use serde::Serialize;

use crate::differential::{self, DiffFrame};
use crate::linalg::{frobenius, max_principal_angle, svd_triplets, sym_eigen, symmetrize};
use crate::projection::reach_function;
use crate::scene::ClosedSet;
use crate::{Error, ExtReal, Matrix, Result, Tolerances, Vector};

pub use smooth::{compare_with_smooth, SmoothComparison, SmoothManifold};

/// κ = χ/(1 − rχ), infinite when the denominator vanishes.
pub fn kappa_from_chi(chi: f64, r: f64, sing_tol: f64) -> ExtReal {
    let denom = 1.0 - r * chi;
    if denom.abs() <= sing_tol {
        ExtReal::Infinite
    } else {
        ExtReal::Finite(chi / denom)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    #[serde(skip)]
    pub a: Vector,
    #[serde(skip)]
    pub u: Vector,
    pub r_eval: f64,
    /// Ascending; finite entries first, then ∞.
    pub kappa: Vec<ExtReal>,
    /// Orthonormal basis of T_A(a, u).
    #[serde(skip)]
    pub t_basis: Vec<Vector>,
    /// Q_A(a, u) in `t_basis`, symmetrized.
    #[serde(skip)]
    pub q: Matrix,
    /// ‖Q − Qᵀ‖_F before symmetrization.
    pub q_asymmetry: f64,
    pub m: usize,
}

impl CurvatureData {
    /// Smallest value of Q(τ, τ) over unit τ ∈ T_A(a, u).
    pub fn q_min(&self) -> Option<f64> {
        sym_eigen(&self.q).0.first().copied()
    }

    /// Q as a bilinear form on the ambient space, zero off T_A(a, u).
    pub fn q_ambient(&self) -> Matrix {
        let n = self.a.len();
        let t = crate::linalg::columns(&self.t_basis, n);
        &t * &self.q * t.transpose()
    }
}

/// Curvature data read off a differential frame at `x = a + δu`.
pub fn curvature_from_frame(frame: &DiffFrame, tols: &Tolerances) -> CurvatureData {
    let n = frame.x.len();
    let triplets = svd_triplets(&frame.dxi);
    let sigma_max = triplets.first().map(|t| t.0).unwrap_or(0.0);
    let threshold = (tols.rank * sigma_max).max(tols.rank_floor);
    let kept: Vec<&(f64, Vector, Vector)> = triplets.iter().filter(|t| t.0 >= threshold).take(n - 1).collect();
    let m = kept.len();
    let t_basis: Vec<Vector> = kept.iter().map(|t| t.1.clone()).collect();
    // v_j = V_j/σ_j solves Dξ(v_j) = τ_j on the row space
    let preimages: Vec<Vector> = kept.iter().map(|t| &t.2 / t.0).collect();
    let mut q = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            q[(i, j)] = t_basis[i].dot(&(&frame.dnu * &preimages[j]));
        }
    }
    let q_asymmetry = frobenius(&(&q - q.transpose()));
    let q = symmetrize(&q);
    let (values, _) = sym_eigen(&q);
    let mut kappa: Vec<ExtReal> = values.into_iter().map(ExtReal::Finite).collect();
    kappa.resize(n - 1, ExtReal::Infinite);
    CurvatureData {
        a: frame.a.clone(),
        u: frame.u.clone(),
        r_eval: frame.delta,
        kappa,
        t_basis,
        q,
        q_asymmetry,
        m,
    }
}

/// Principal curvatures of A at (a, u), read at `x = a + r_eval·u`.
pub fn curvature_at<S: ClosedSet + ?Sized>(
    set: &S,
    a: &Vector,
    u: &Vector,
    r_eval: f64,
    tols: &Tolerances,
) -> Result<CurvatureData> {
    let reach = reach_function(set, a, u, tols)?;
    if reach <= ExtReal::Finite(r_eval) {
        return Err(Error::NotInBundle { r_eval, reach: reach.to_f64() });
    }
    let frame = differential::frame(set, &(a + u * r_eval), tols)?;
    Ok(curvature_from_frame(&frame, tols))
}

/// H_j of the principal curvatures, with the limit convention for infinite
/// entries: `(1+κ²)^{-1/2} → 0` and `κ(1+κ²)^{-1/2} → 1`.
pub fn symmetric_function(kappa: &[ExtReal], j: usize) -> Result<f64> {
    let len = kappa.len();
    if j > len {
        return Err(Error::InvalidIndex { index: j, max: len });
    }
    let infinite: u32 = kappa.iter().enumerate().filter(|(_, k)| k.is_infinite()).map(|(i, _)| 1 << i).sum();
    let base: f64 = kappa.iter().filter_map(|k| k.finite()).map(|k| 1.0 / (1.0 + k * k).sqrt()).product();
    let mut total = 0.0;
    for subset in 0u32..(1 << len) {
        if subset.count_ones() as usize != j || subset & infinite != infinite {
            continue;
        }
        let chosen: f64 = (0..len)
            .filter(|i| subset & (1 << i) != 0 && infinite & (1 << i) == 0)
            .map(|i| kappa[i].to_f64())
            .product();
        total += chosen;
    }
    Ok(base * total)
}

/// ∏ over finite κ of `(1+κ²)^{-1/2}`, the coarea weight of a stratum.
pub fn finite_product(kappa: &[ExtReal]) -> f64 {
    kappa.iter().filter_map(|k| k.finite()).map(|k| 1.0 / (1.0 + k * k).sqrt()).product()
}

/// Largest principal angle between T_A(a, u) and a reference tangent space.
pub fn tangent_angle(data: &CurvatureData, reference: &[Vector]) -> f64 {
    max_principal_angle(&data.t_basis, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Scene, ShapeSpec};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn f(x: f64) -> ExtReal {
        ExtReal::Finite(x)
    }

    #[test]
    fn kappa_transform() {
        let k = kappa_from_chi(1.0 / 1.5, 0.5, 1e-5).finite().unwrap();
        assert!((k - 1.0).abs() < 1e-14);
        assert_eq!(kappa_from_chi(0.0, 0.5, 1e-5), f(0.0));
        assert_eq!(kappa_from_chi(2.0, 0.5, 1e-5), ExtReal::Infinite);
    }

    #[test]
    fn symmetric_functions() {
        assert_eq!(symmetric_function(&[f(0.0)], 0).unwrap(), 1.0);
        assert_eq!(symmetric_function(&[f(0.0)], 1).unwrap(), 0.0);
        assert!((symmetric_function(&[f(1.0)], 1).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(symmetric_function(&[ExtReal::Infinite], 1).unwrap(), 1.0);
        assert_eq!(symmetric_function(&[ExtReal::Infinite], 0).unwrap(), 0.0);
        assert!(matches!(symmetric_function(&[f(1.0)], 2), Err(Error::InvalidIndex { .. })));
        // n = 3: elementary symmetric sums against the expanded products
        let (k1, k2) = (0.5f64, 2.0f64);
        let w = 1.0 / ((1.0 + k1 * k1) * (1.0 + k2 * k2)).sqrt();
        let ks = [f(k1), f(k2)];
        assert!((symmetric_function(&ks, 1).unwrap() - w * (k1 + k2)).abs() < 1e-15);
        assert!((symmetric_function(&ks, 2).unwrap() - w * k1 * k2).abs() < 1e-15);
        let mixed = [f(k1), ExtReal::Infinite];
        let w1 = 1.0 / (1.0 + k1 * k1).sqrt();
        assert_eq!(symmetric_function(&mixed, 0).unwrap(), 0.0);
        assert!((symmetric_function(&mixed, 1).unwrap() - w1).abs() < 1e-15);
        assert!((symmetric_function(&mixed, 2).unwrap() - w1 * k1).abs() < 1e-15);
        // the limit convention agrees with a large finite curvature
        let big = [f(k1), f(1e9)];
        assert!((symmetric_function(&big, 2).unwrap() - w1 * k1).abs() < 1e-8);
    }

    #[test]
    fn disc_and_concave_boundary() {
        let t = Tolerances::default();
        let disc = Scene::new(2, vec![ShapeSpec::Ball { c: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
        let c = curvature_at(&disc, &v(&[1.0, 0.0]), &v(&[1.0, 0.0]), 0.5, &t).unwrap();
        assert_eq!(c.m, 1);
        assert!((c.kappa[0].to_f64() - 1.0).abs() < 1e-4);
        assert!((c.q[(0, 0)] - 1.0).abs() < 1e-4);
        assert!(c.t_basis[0].dot(&c.u).abs() < 1e-10);

        let comp = Scene::new(2, vec![ShapeSpec::BallComplement { c: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
        let c = curvature_at(&comp, &v(&[1.0, 0.0]), &v(&[-1.0, 0.0]), 0.25, &t).unwrap();
        assert!((c.kappa[0].to_f64() + 1.0).abs() < 1e-4);
        assert!(c.q_min().unwrap() >= -1.0 - 1e-4);
        assert!(matches!(
            curvature_at(&comp, &v(&[1.0, 0.0]), &v(&[-1.0, 0.0]), 1.5, &t),
            Err(Error::NotInBundle { .. })
        ));
    }

    #[test]
    fn flat_and_corner() {
        let t = Tolerances::default();
        let bx = Scene::new(2, vec![ShapeSpec::AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }]).unwrap();
        let c = curvature_at(&bx, &v(&[0.5, 1.0]), &v(&[0.0, 1.0]), 0.3, &t).unwrap();
        assert_eq!(c.m, 1);
        assert!(c.kappa[0].to_f64().abs() < 1e-6);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let c = curvature_at(&bx, &v(&[1.0, 1.0]), &v(&[d, d]), 0.3, &t).unwrap();
        assert_eq!((c.m, c.kappa.clone()), (0, vec![ExtReal::Infinite]));
    }

    #[test]
    fn r_independence_on_the_disc() {
        let t = Tolerances::default();
        let disc = Scene::new(2, vec![ShapeSpec::Ball { c: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
        let (a, u) = (v(&[0.6, 0.8]), v(&[0.6, 0.8]));
        for r in [0.2, 0.5, 0.9] {
            let c = curvature_at(&disc, &a, &u, r, &t).unwrap();
            assert!((c.kappa[0].to_f64() - 1.0).abs() < 1e-3);
        }
    }
}
