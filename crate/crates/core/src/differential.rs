//! Finite-difference differentials of ξ_A and ν_A at regular points.

use serde::Serialize;

use crate::linalg::{frobenius, perp_basis, perp_projector, sym_eigen, symmetrize};
use crate::projection::{self, ProjectedPoint};
use crate::scene::{xi, ClosedSet};
use crate::{Error, ExtReal, Matrix, Result, Tolerances, Vector};

/// Differentials of the projection and of the spherical image map at x.
#[derive(Clone, Debug)]
pub struct DiffFrame {
    pub x: Vector,
    pub a: Vector,
    pub u: Vector,
    pub delta: f64,
    pub rho: ExtReal,
    pub dxi: Matrix,
    /// Dν assembled from `δ⁻¹(T♮ − Dξ)`.
    pub dnu: Matrix,
    /// Dν differenced directly; kept for the residual only.
    pub dnu_direct: Matrix,
    /// Eigenvalues of Dν restricted to u⊥, ascending.
    pub chi: Vec<f64>,
    /// Unit eigenvectors matching `chi`, all orthogonal to u.
    pub chi_vectors: Vec<Vector>,
    pub sym_residual: f64,
    pub identity_residual: f64,
    pub step: f64,
}

impl DiffFrame {
    pub fn projected(&self) -> ProjectedPoint {
        ProjectedPoint {
            x: self.x.clone(),
            a: self.a.clone(),
            u: self.u.clone(),
            delta: self.delta,
            rho: Some(self.rho),
        }
    }

    /// ρ capped at `lambda_cap`.
    pub fn lambda(&self, tols: &Tolerances) -> f64 {
        self.rho.min_finite(tols.lambda_cap)
    }

    /// Indices of χ within `10·tol` of `1/δ`, where κ is about to blow up.
    pub fn near_singular(&self, tols: &Tolerances) -> Vec<usize> {
        let inv = 1.0 / self.delta;
        (0..self.chi.len()).filter(|&i| (self.chi[i] - inv).abs() <= 10.0 * tols.diff * inv.max(1.0)).collect()
    }
}

/// Differential frame at x with the default step factor.
pub fn frame<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tols: &Tolerances) -> Result<DiffFrame> {
    jacobians(set, x, tols.step_factor, tols)
}

fn nu_at<S: ClosedSet + ?Sized>(set: &S, y: &Vector, tols: &Tolerances) -> Result<(Vector, Vector)> {
    let a = xi(set, y, tols.nearest).map_err(|_| Error::StencilOutsideDomain)?;
    let d = y - &a;
    let norm = d.norm();
    if norm == 0.0 {
        return Err(Error::StencilOutsideDomain);
    }
    Ok((a, d / norm))
}

/// Central-difference differentials at a regular point x.
pub fn jacobians<S: ClosedSet + ?Sized>(
    set: &S,
    x: &Vector,
    step_factor: f64,
    tols: &Tolerances,
) -> Result<DiffFrame> {
    if !(step_factor > 0.0 && step_factor < 0.5) {
        return Err(Error::InvalidConfig(format!("step_factor must lie in (0, 0.5), got {step_factor}")));
    }
    let n = set.dim();
    let p = projection::psi(set, x, tols).map_err(|e| Error::NotRegular(e.to_string()))?;
    if p.delta <= tols.nearest {
        return Err(Error::NotRegular("point lies on the set".into()));
    }
    let rho = projection::rho_of(set, &p, tols);
    let excess = match rho {
        ExtReal::Infinite => f64::INFINITY,
        ExtReal::Finite(r) => r - 1.0,
    };
    if excess <= tols.diff {
        return Err(Error::NotRegular(format!("rho = {rho} is not above 1")));
    }
    let step = step_factor * p.delta * excess.min(1.0);

    // ρ should not drop on the stencil; smooth variation is first order in
    // the step, so the allowed drop scales with it
    let rho_floor = rho.min_finite(tols.lambda_cap);
    let drop = tols.diff.max(100.0 * step / p.delta);

    let mut dxi = Matrix::zeros(n, n);
    let mut dnu_direct = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = step;
        let plus = &p.x + &e;
        let minus = &p.x - &e;
        let (a_p, nu_p) = nu_at(set, &plus, tols)?;
        let (a_m, nu_m) = nu_at(set, &minus, tols)?;
        for (y, a) in [(&plus, &a_p), (&minus, &a_m)] {
            let d = (y - a).norm();
            let q = ProjectedPoint { x: y.clone(), a: a.clone(), u: (y - a) / d, delta: d, rho: None };
            let r = projection::rho_of(set, &q, tols).min_finite(tols.lambda_cap);
            if r < rho_floor * (1.0 - drop) {
                return Err(Error::NotRegular(format!("rho drops from {rho_floor} to {r} on the stencil")));
            }
        }
        dxi.set_column(j, &((a_p - a_m) / (2.0 * step)));
        dnu_direct.set_column(j, &((nu_p - nu_m) / (2.0 * step)));
    }

    let dnu = (perp_projector(&p.u) - &dxi) / p.delta;
    let identity_residual = frobenius(&(&dnu_direct - &dnu));

    let basis = perp_basis(&p.u);
    let b = crate::linalg::columns(&basis, n);
    let m = b.transpose() * &dnu * &b;
    let sym_residual = frobenius(&(&m - m.transpose()));
    if sym_residual > tols.diff * frobenius(&m).max(1.0) {
        return Err(Error::NotRegular(format!("differential is not symmetric (residual {sym_residual:e})")));
    }
    let (chi, local) = sym_eigen(&symmetrize(&m));
    let chi_vectors = local.iter().map(|c| &b * c).collect();

    Ok(DiffFrame {
        x: p.x,
        a: p.a,
        u: p.u,
        delta: p.delta,
        rho,
        dxi,
        dnu,
        dnu_direct,
        chi,
        chi_vectors,
        sym_residual,
        identity_residual,
        step,
    })
}

/// Residuals of the identities satisfied by the differentials.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityDiagnostics {
    /// ‖Dξᵀ u‖.
    pub xi_transpose_u: f64,
    /// ‖Dξ u‖.
    pub xi_u: f64,
    pub sym_residual: f64,
    pub identity_residual: f64,
    /// ‖Dψ(x) − Dψ(h_t x)·Dh_t(x)‖_F, when a dilation factor was given.
    pub chain_rule: Option<f64>,
    /// Eigenvalues of the symmetric part of Dξ, ascending.
    pub dxi_eigenvalues: Vec<f64>,
    /// λ(λ − 1)⁻¹ with λ = min(ρ, cap).
    pub dxi_eigen_bound: f64,
    /// Whether every χ lies in `[−((λ−1)δ)⁻¹, δ⁻¹]` up to tolerance.
    pub chi_in_range: bool,
}

fn stacked(f: &DiffFrame) -> Matrix {
    let n = f.x.len();
    let mut m = Matrix::zeros(2 * n, n);
    m.view_mut((0, 0), (n, n)).copy_from(&f.dxi);
    m.view_mut((n, 0), (n, n)).copy_from(&f.dnu);
    m
}

/// Evaluates the residual diagnostics of a frame. With `t`, the chain rule
/// through the dilation `h_t` is checked as well, which needs a second frame
/// at `h_t(x)`.
pub fn check_differential_identities<S: ClosedSet + ?Sized>(
    set: &S,
    frame: &DiffFrame,
    t: Option<f64>,
    tols: &Tolerances,
) -> Result<IdentityDiagnostics> {
    let n = frame.x.len();
    let chain_rule = match t {
        None => None,
        Some(t) => {
            let y = &frame.a + (&frame.x - &frame.a) * t;
            let step_factor = frame.step / (frame.delta * t);
            let other = jacobians(set, &y, step_factor.min(0.49), tols)?;
            let dh = &frame.dxi + (Matrix::identity(n, n) - &frame.dxi) * t;
            Some(frobenius(&(stacked(frame) - stacked(&other) * dh)))
        }
    };
    let (dxi_eigenvalues, _) = sym_eigen(&symmetrize(&frame.dxi));
    let lambda = frame.lambda(tols);
    let dxi_eigen_bound = if lambda.is_finite() && lambda < tols.lambda_cap { lambda / (lambda - 1.0) } else { 1.0 };
    let lo = if lambda >= tols.lambda_cap { 0.0 } else { -1.0 / ((lambda - 1.0) * frame.delta) };
    let hi = 1.0 / frame.delta;
    let slack = 1e-6 * hi.max(1.0);
    let chi_in_range = frame.chi.iter().all(|&c| c >= lo - slack && c <= hi + slack);
    Ok(IdentityDiagnostics {
        xi_transpose_u: (frame.dxi.transpose() * &frame.u).norm(),
        xi_u: (&frame.dxi * &frame.u).norm(),
        sym_residual: frame.sym_residual,
        identity_residual: frame.identity_residual,
        chain_rule,
        dxi_eigenvalues,
        dxi_eigen_bound,
        chi_in_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Scene, ShapeSpec};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn scene(shape: ShapeSpec) -> Scene {
        Scene::new(2, vec![shape]).unwrap()
    }

    #[test]
    fn disc_chi_matches_radial_gradient() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::Ball { c: vec![0.0, 0.0], radius: 1.0 });
        let f = frame(&s, &v(&[1.5, 0.0]), &t).unwrap();
        assert_eq!(f.chi.len(), 1);
        assert!((f.chi[0] - 1.0 / 1.5).abs() < 1e-6, "{:?}", f.chi);
        // ν(x) = x/|x| has differential (I − ννᵀ)/|x|
        let exact = perp_projector(&v(&[1.0, 0.0])) / 1.5;
        assert!(frobenius(&(&f.dnu - exact)) < 1e-6);
        let d = check_differential_identities(&s, &frame(&s, &v(&[2.0, 0.0]), &t).unwrap(), Some(0.5), &t).unwrap();
        assert!(d.xi_transpose_u < 1e-6 && d.xi_u < 1e-6);
        assert!(d.identity_residual < 1e-6 && d.sym_residual < 1e-6);
        assert!(d.chain_rule.unwrap() < 1e-6, "{d:?}");
        assert!(d.chi_in_range);
    }

    #[test]
    fn flat_face() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::AxisBox { lo: vec![-1.0, -1.0], hi: vec![1.0, 0.0] });
        let f = frame(&s, &v(&[0.0, 0.5]), &t).unwrap();
        assert!(f.chi[0].abs() < 1e-8);
        assert!((f.dxi.column(0) - v(&[1.0, 0.0])).norm() < 1e-8);
        assert!(frobenius(&f.dnu) < 1e-8);
        let d = check_differential_identities(&s, &f, Some(0.5), &t).unwrap();
        assert!(d.xi_transpose_u < 1e-8 && d.identity_residual < 1e-8 && d.chain_rule.unwrap() < 1e-8);
    }

    #[test]
    fn point_scene() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::Point { c: vec![0.0, 0.0] });
        let f = frame(&s, &v(&[0.5, 0.0]), &t).unwrap();
        assert!(frobenius(&f.dxi) < 1e-12);
        assert!((f.chi[0] - 2.0).abs() < 1e-6);
        // Dξ = 0, so Dh_t = t·I and Dν(x) = t·Dν(h_t x)
        let d = check_differential_identities(&s, &f, Some(2.0), &t).unwrap();
        assert!(d.chain_rule.unwrap() < 1e-6);
    }

    #[test]
    fn concave_side_bounds() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::BallComplement { c: vec![0.0, 0.0], radius: 1.0 });
        let f = frame(&s, &v(&[0.0, 0.75]), &t).unwrap();
        // ν = −x/|x| on the inside, eigenvalue −1/|x|
        assert!((f.chi[0] + 1.0 / 0.75).abs() < 1e-6);
        let d = check_differential_identities(&s, &f, Some(1.5), &t).unwrap();
        assert!(d.chi_in_range);
        let top = d.dxi_eigenvalues.last().copied().unwrap();
        assert!(top <= d.dxi_eigen_bound + 1e-6 && d.dxi_eigenvalues[0] >= -1e-6);
    }

    #[test]
    fn step_halving_converges() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::Ball { c: vec![0.0, 0.0], radius: 1.0 });
        let x = v(&[1.1, 0.7]);
        let exact = 1.0 / x.norm();
        let e1 = (jacobians(&s, &x, 0.2, &t).unwrap().chi[0] - exact).abs();
        let e2 = (jacobians(&s, &x, 0.1, &t).unwrap().chi[0] - exact).abs();
        assert!(e1 > 0.0 && (e1 / e2).log2() >= 1.5, "{e1} {e2}");
    }

    #[test]
    fn two_minimizers_are_not_regular() {
        let t = Tolerances::default();
        let s = scene(ShapeSpec::PointCloud { points: vec![vec![-1.0, 0.0], vec![1.0, 0.0]] });
        assert!(matches!(frame(&s, &v(&[0.0, 1.0]), &t), Err(Error::NotRegular(_))));
        assert!(frame(&s, &v(&[1e-9, 1.0]), &t).is_err());
    }
}
