//! The spherical image map, ρ(A, ·), the reach function and dilations.

use crate::scene::{xi, ClosedSet};
use crate::{differential, Error, ExtReal, Result, Tolerances, Vector};

/// A point off A together with ψ_A(x) = (ξ_A(x), ν_A(x)).
#[derive(Clone, Debug)]
pub struct ProjectedPoint {
    pub x: Vector,
    pub a: Vector,
    pub u: Vector,
    pub delta: f64,
    /// ρ(A, x), when it has been evaluated.
    pub rho: Option<ExtReal>,
}

/// ψ_A(x) with ρ left unset.
pub fn psi<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tols: &Tolerances) -> Result<ProjectedPoint> {
    let a = xi(set, x, tols.nearest)?;
    let diff = x - &a;
    let delta = diff.norm();
    if delta == 0.0 {
        return Err(Error::NotInDomain { count: 0 });
    }
    Ok(ProjectedPoint { x: x.clone(), u: diff / delta, a, delta, rho: None })
}

fn ray_holds<S: ClosedSet + ?Sized>(set: &S, a: &Vector, u: &Vector, s: f64, slack: f64) -> bool {
    set.delta(&(a + u * s)) >= s - slack * (1.0 + s)
}

/// `sup {s ∈ [lo, hi] : δ_A(a + s u) = s}` by bisection, given that the
/// predicate holds at `lo`. Returns +∞ when it still holds at `hi`.
fn ray_sup<S: ClosedSet + ?Sized>(set: &S, a: &Vector, u: &Vector, lo: f64, hi: f64, slack: f64) -> ExtReal {
    if ray_holds(set, a, u, hi, slack) {
        return ExtReal::Infinite;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..64 {
        if hi - lo <= slack * lo.max(1e-3) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ray_holds(set, a, u, mid, slack) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ExtReal::Finite(lo)
}

/// ρ(A, x) for a projected point, searching t ∈ [1, t_max].
pub fn rho_of<S: ClosedSet + ?Sized>(set: &S, p: &ProjectedPoint, tols: &Tolerances) -> ExtReal {
    match ray_sup(set, &p.a, &p.u, p.delta, tols.t_max * p.delta, tols.slack) {
        ExtReal::Finite(s) => ExtReal::Finite((s / p.delta).max(1.0)),
        ExtReal::Infinite => ExtReal::Infinite,
    }
}

/// ρ(A, x) = sup{t : δ_A(ξ_A(x) + t(x − ξ_A(x))) = t δ_A(x)}.
pub fn rho<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tols: &Tolerances) -> Result<ExtReal> {
    let p = psi(set, x, tols)?;
    Ok(rho_of(set, &p, tols))
}

/// ψ_A(x) with ρ evaluated.
pub fn project<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tols: &Tolerances) -> Result<ProjectedPoint> {
    let mut p = psi(set, x, tols)?;
    p.rho = Some(rho_of(set, &p, tols));
    Ok(p)
}

/// The reach function sup{s : δ_A(a + s u) = s}; zero when (a, u) is not in
/// the normal bundle.
pub fn reach_function<S: ClosedSet + ?Sized>(
    set: &S,
    a: &Vector,
    u: &Vector,
    tols: &Tolerances,
) -> Result<ExtReal> {
    let distance = set.delta(a);
    if distance > tols.nearest {
        return Err(Error::NotOnSet { distance });
    }
    Ok(match ray_sup(set, a, u, 0.0, tols.s_max, tols.slack) {
        ExtReal::Finite(s) if s <= 1e3 * tols.slack => ExtReal::Finite(0.0),
        other => other,
    })
}

#[derive(Clone, Debug)]
pub struct Dilation {
    pub point: Vector,
    /// Set when t ≥ ρ(A, x), where the dilation leaves the fibre of ξ_A.
    pub beyond_rho: bool,
}

/// h_t(x) = ξ_A(x) + t(x − ξ_A(x)).
pub fn dilate<S: ClosedSet + ?Sized>(set: &S, x: &Vector, t: f64, tols: &Tolerances) -> Result<Dilation> {
    if !(t > 0.0) {
        return Err(Error::InvalidConfig(format!("dilation factor must be positive, got {t}")));
    }
    let p = psi(set, x, tols)?;
    let beyond_rho = ExtReal::Finite(t) >= rho_of(set, &p, tols);
    Ok(Dilation { point: &p.a + (x - &p.a) * t, beyond_rho })
}

/// Numerical regularity test: x ∈ U(A), ρ(A, x) > 1, the finite-difference
/// differential exists with small asymmetry and ρ does not drop on the
/// stencil. The projected point is returned whenever ψ_A(x) exists.
pub fn is_regular<S: ClosedSet + ?Sized>(set: &S, x: &Vector, tols: &Tolerances) -> (bool, Option<ProjectedPoint>) {
    match differential::frame(set, x, tols) {
        Ok(f) => (true, Some(f.projected())),
        Err(_) => (false, project(set, x, tols).ok()),
    }
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

    fn disc() -> Scene {
        scene(ShapeSpec::Ball { c: vec![0.0, 0.0], radius: 1.0 })
    }

    fn complement() -> Scene {
        scene(ShapeSpec::BallComplement { c: vec![0.0, 0.0], radius: 1.0 })
    }

    fn two_points() -> Scene {
        scene(ShapeSpec::PointCloud { points: vec![vec![-1.0, 0.0], vec![1.0, 0.0]] })
    }

    /// Dense scan of δ(a + s u) − s, independent of the bisection.
    fn scan_sup(set: &Scene, a: &Vector, u: &Vector, s_max: f64) -> f64 {
        let steps = 200_000;
        let mut last = 0.0;
        for k in 1..=steps {
            let s = s_max * k as f64 / steps as f64;
            if set.delta(&(a + u * s)) < s - 1e-12 {
                return last;
            }
            last = s;
        }
        f64::INFINITY
    }

    #[test]
    fn psi_examples() {
        let t = Tolerances::default();
        let p = psi(&disc(), &v(&[2.0, 0.0]), &t).unwrap();
        assert_eq!((p.a, p.u, p.delta), (v(&[1.0, 0.0]), v(&[1.0, 0.0]), 1.0));
        let p = psi(&scene(ShapeSpec::Point { c: vec![0.0, 0.0] }), &v(&[0.0, 0.7]), &t).unwrap();
        assert_eq!((p.a, p.u), (v(&[0.0, 0.0]), v(&[0.0, 1.0])));
        assert!((p.delta - 0.7).abs() < 1e-15);
        let p = psi(&complement(), &v(&[0.5, 0.0]), &t).unwrap();
        assert_eq!((p.a, p.u, p.delta), (v(&[1.0, 0.0]), v(&[-1.0, 0.0]), 0.5));
    }

    #[test]
    fn rho_examples() {
        let t = Tolerances::default();
        assert_eq!(rho(&disc(), &v(&[2.0, 0.0]), &t).unwrap(), ExtReal::Infinite);
        // oracle: dense scan along the ray from (1,0) toward the center
        let scanned = scan_sup(&complement(), &v(&[1.0, 0.0]), &v(&[-1.0, 0.0]), 3.0) / 0.5;
        let r = rho(&complement(), &v(&[0.5, 0.0]), &t).unwrap().finite().unwrap();
        assert!((scanned - 2.0).abs() < 1e-4);
        assert!((r - 2.0).abs() < 1e-8, "{r}");
        let scanned = scan_sup(&two_points(), &v(&[-1.0, 0.0]), &v(&[1.0, 0.0]), 3.0) / 0.5;
        let r = rho(&two_points(), &v(&[-0.5, 0.0]), &t).unwrap().finite().unwrap();
        assert!((scanned - 2.0).abs() < 1e-4);
        assert!((r - 2.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn reach_function_examples() {
        let t = Tolerances::default();
        let d = disc();
        assert_eq!(reach_function(&d, &v(&[1.0, 0.0]), &v(&[1.0, 0.0]), &t).unwrap(), ExtReal::Infinite);
        let r = reach_function(&complement(), &v(&[1.0, 0.0]), &v(&[-1.0, 0.0]), &t).unwrap();
        assert!((r.finite().unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(reach_function(&d, &v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &t).unwrap(), ExtReal::Finite(0.0));
        assert!(matches!(
            reach_function(&d, &v(&[2.0, 0.0]), &v(&[1.0, 0.0]), &t),
            Err(Error::NotOnSet { .. })
        ));
    }

    #[test]
    fn dilate_examples() {
        let t = Tolerances::default();
        let d = dilate(&disc(), &v(&[2.0, 0.0]), 0.5, &t).unwrap();
        assert_eq!(d.point, v(&[1.5, 0.0]));
        assert!(!d.beyond_rho);
        let x = v(&[0.3, -1.7]);
        assert!((dilate(&disc(), &x, 1.0, &t).unwrap().point - &x).norm() < 1e-15);
        let p = scene(ShapeSpec::Point { c: vec![0.0, 0.0] });
        assert_eq!(dilate(&p, &v(&[0.0, 2.0]), 2.0, &t).unwrap().point, v(&[0.0, 4.0]));
        assert!(dilate(&complement(), &v(&[0.5, 0.0]), 3.0, &t).unwrap().beyond_rho);
    }

    #[test]
    fn regularity_examples() {
        let t = Tolerances::default();
        assert!(is_regular(&disc(), &v(&[2.0, 0.0]), &t).0);
        let (ok, p) = is_regular(&two_points(), &v(&[0.0, 1.0]), &t);
        assert!(!ok && p.is_none());
        // brute-force: (-1, 0) is the unique nearest point of (-0.5, 0.4)
        let x = v(&[-0.5, 0.4]);
        let d: Vec<f64> = [v(&[-1.0, 0.0]), v(&[1.0, 0.0])].iter().map(|q| (&x - q).norm()).collect();
        assert!(d[0] < d[1]);
        let (ok, p) = is_regular(&two_points(), &x, &t);
        assert!(ok);
        let p = p.unwrap();
        assert_eq!(p.a, v(&[-1.0, 0.0]));
        assert!(p.rho.unwrap() > ExtReal::Finite(1.0));
    }
}
