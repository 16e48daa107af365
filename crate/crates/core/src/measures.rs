//! Support measures μ_m by three independent routes: the bundle integral of
//! the symmetric functions, the stratified fibre representation, and the
//! Steiner polynomial of the parallel volume.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{integrate_bundle, BundlePoint, BundleRun};
use crate::curvature::{finite_product, symmetric_function};
use crate::oracle::parallel_volume;
use crate::rng::{circle_directions, fibonacci_sphere};
use crate::scene::{ClosedSet, FaceSample, FaceSampling, Scene};
use crate::{Error, ExtReal, Matrix, Result, Vector};

/// Volume of the unit ball in ℝᵏ.
pub fn alpha(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 / 3.0 * PI,
        _ => unreachable!("ambient dimension is at most 3"),
    }
}

fn normalizer(n: usize, m: usize) -> f64 {
    1.0 / ((n - m) as f64 * alpha(n - m))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Global,
    Stratified,
    Steiner,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MeasureEstimate {
    pub m: usize,
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    pub uncaptured: f64,
    /// `stratum_empty`, or `kappa_infinite_limit` when infinite curvatures
    /// contribute through the limit convention of H_j.
    pub flag: Option<String>,
}

/// Predicate on (a, u), evaluated on bundle or fibre points.
pub type Selector<'a> = &'a (dyn Fn(&Vector, &Vector) -> bool + Sync);

/// The selector T = everything.
pub fn all(_: &Vector, _: &Vector) -> bool {
    true
}

fn check_m(n: usize, m: usize) -> Result<()> {
    if m >= n {
        Err(Error::InvalidIndex { index: m, max: n - 1 })
    } else {
        Ok(())
    }
}

/// μ_m(T) = ((n−m)α(n−m))⁻¹ ∫_T H_{n−m−1} dH^{n−1} over the sampled bundle.
pub fn mu_global(run: &BundleRun, n: usize, m: usize, select: Selector) -> Result<MeasureEstimate> {
    check_m(n, m)?;
    let j = n - m - 1;
    let est = integrate_bundle(&run.points, |p| {
        if select(&p.a(), &p.u()) {
            symmetric_function(&p.kappa, j).expect("index checked")
        } else {
            0.0
        }
    });
    let c = normalizer(n, m);
    // the value leans on the limit convention for infinite curvatures
    let limit = run.points.iter().any(|p| {
        p.kappa.iter().any(|k| k.is_infinite())
            && select(&p.a(), &p.u())
            && symmetric_function(&p.kappa, j).is_ok_and(|h| h != 0.0)
    });
    Ok(MeasureEstimate {
        m,
        value: c * est.value,
        stderr: c * est.stderr,
        method: Method::Global,
        uncaptured: c * run.uncaptured,
        flag: limit.then(|| "kappa_infinite_limit".to_string()),
    })
}

/// Direction sets for the fibres N(A, z) inside the normal space of a face.
#[derive(Clone, Debug, Serialize)]
pub struct FibreConfig {
    pub faces_per_unit: f64,
    pub circle_dirs: usize,
    pub sphere_dirs: usize,
    /// Probe radius as a fraction of the scene diameter.
    pub probe: f64,
}

impl FibreConfig {
    fn halved(&self) -> Self {
        FibreConfig {
            faces_per_unit: 0.5 * self.faces_per_unit,
            circle_dirs: self.circle_dirs / 2,
            sphere_dirs: self.sphere_dirs / 2,
            probe: self.probe,
        }
    }
}

impl Default for FibreConfig {
    fn default() -> Self {
        FibreConfig { faces_per_unit: 200.0, circle_dirs: 2048, sphere_dirs: 8192, probe: 1e-4 }
    }
}

/// Unit normals v of the face normal space at z with `δ_A(z + s v) = s`,
/// each with its share of the fibre measure.
fn fibre(scene: &Scene, face: &FaceSample, cfg: &FibreConfig, s: f64) -> Vec<(Vector, f64)> {
    let nrm = &face.normal;
    let cands: Vec<(Vector, f64)> = match nrm.len() {
        1 => vec![(nrm[0].clone(), 1.0), (-&nrm[0], 1.0)],
        2 => {
            let dv = std::f64::consts::TAU / cfg.circle_dirs as f64;
            circle_directions(cfg.circle_dirs, 0.5 * dv)
                .into_iter()
                .map(|[c, d]| (&nrm[0] * c + &nrm[1] * d, dv))
                .collect()
        }
        3 => {
            let dv = 4.0 * PI / cfg.sphere_dirs as f64;
            fibonacci_sphere(cfg.sphere_dirs)
                .into_iter()
                .map(|[x, y, z]| (&nrm[0] * x + &nrm[1] * y + &nrm[2] * z, dv))
                .collect()
        }
        _ => Vec::new(),
    };
    cands.into_iter().filter(|(v, _)| scene.delta(&(&face.z + v * s)) >= s * (1.0 - 1e-9)).collect()
}

fn elementary(values: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for &x in values {
        for j in (1..e.len()).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e.get(k).copied().unwrap_or(0.0)
}

/// Per face sample: (weight, contribution), via `per_face`.
fn face_sums<F>(scene: &Scene, cfg: &FibreConfig, per_face: F) -> Vec<(f64, f64)>
where
    F: Fn(&FaceSample, &[(Vector, f64)]) -> Option<f64> + Sync,
{
    let faces = scene.faces(FaceSampling { per_unit: cfg.faces_per_unit });
    let s = cfg.probe * scene.diameter();
    faces
        .par_iter()
        .filter_map(|f| {
            let fib = fibre(scene, f, cfg, s);
            per_face(f, &fib).map(|c| (f.weight, f.weight * c))
        })
        .collect()
}

/// μ_m(T) from the stratified representation. Faces of dimension j ≥ m
/// contribute `∫_{A^(j)} ∫_{N(A,z)} e_{j−m}(κ(z, v)) 1_T dH^{n−j−1} dH^j`,
/// whose j = m term is the fibre-measure formula; the j > m terms carry
/// the curvature of the higher strata. The quadrature is deterministic, so
/// the reported error is the change when both resolutions are halved.
pub fn mu_stratified(scene: &Scene, m: usize, select: Selector, cfg: &FibreConfig) -> Result<MeasureEstimate> {
    let n = scene.dim();
    check_m(n, m)?;
    let c = normalizer(n, m);
    let value = |cfg: &FibreConfig| -> f64 {
        let items = face_sums(scene, cfg, |f, fib| {
            if f.dim < m || fib.is_empty() {
                return None;
            }
            let sum: f64 = fib
                .iter()
                .filter(|(v, _)| select(&f.z, v))
                .map(|(v, dv)| dv * elementary(&f.principal_curvatures(v), f.dim - m))
                .sum();
            Some(sum)
        });
        c * items.iter().map(|x| x.1).sum::<f64>()
    };
    let fine = value(cfg);
    let coarse = value(&cfg.halved());
    let faces = scene.faces(FaceSampling { per_unit: cfg.faces_per_unit });
    let s = cfg.probe * scene.diameter();
    let empty = !faces.iter().any(|f| f.dim == m && !fibre(scene, f, cfg, s).is_empty());
    Ok(MeasureEstimate {
        m,
        value: fine,
        stderr: (fine - coarse).abs(),
        method: Method::Stratified,
        uncaptured: 0.0,
        flag: empty.then(|| "stratum_empty".to_string()),
    })
}

/// μ_m from a least-squares fit of `Leb(δ ≤ r) − Leb(A)` by
/// `Σ_k c_k r^k`, k = 1..n, with `c_{n−m} = α(n−m) μ_m`. Leb(A) is taken
/// from the same grid.
pub fn steiner_fit(scene: &Scene, radii: &[f64], grid_res: usize) -> Result<Vec<MeasureEstimate>> {
    let n = scene.dim();
    if radii.len() < n + 1 {
        return Err(Error::InvalidConfig(format!("steiner fit needs at least {} radii", n + 1)));
    }
    let reach = scene
        .known_reach()
        .ok_or_else(|| Error::Unsupported("Steiner fit needs a scene of known positive reach".into()))?;
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {r}")));
        }
        if ExtReal::Finite(r) >= reach {
            return Err(Error::ReachTooSmall { radius: r, reach: reach.to_f64() });
        }
        if r >= scene.spec().bbox_margin {
            return Err(Error::InvalidConfig(format!("radius {r} exceeds the box margin")));
        }
    }
    let base = parallel_volume(scene, scene.bbox(), 0.0, grid_res);
    let vols: Vec<f64> = radii.iter().map(|&r| parallel_volume(scene, scene.bbox(), r, grid_res) - base).collect();
    let x = Matrix::from_fn(radii.len(), n, |i, k| radii[i].powi(k as i32 + 1));
    let y = Vector::from_column_slice(&vols);
    let xtx = x.transpose() * &x;
    let inv = xtx.clone().try_inverse().ok_or_else(|| Error::InvalidConfig("degenerate radii".into()))?;
    let coef = &inv * x.transpose() * &y;
    let resid = &y - &x * &coef;
    let dof = radii.len() - n;
    let sigma2 = if dof > 0 { resid.norm_squared() / dof as f64 } else { 0.0 };
    Ok((0..n)
        .map(|m| {
            let k = n - m;
            let a = alpha(k);
            MeasureEstimate {
                m,
                value: coef[k - 1] / a,
                stderr: (sigma2 * inv[(k - 1, k - 1)]).sqrt() / a,
                method: Method::Steiner,
                uncaptured: 0.0,
                flag: None,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CoareaResult {
    pub m: usize,
    pub lhs: f64,
    /// Jackknife standard error of `lhs`.
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the area formula on the stratum A^(m): the bundle integral
/// of `f ∏(1+κ²)^{-1/2}` (finite κ only) over N(A)|A^(m), against the
/// integral over the exact parametrization of A^(m) of the fibre integrals
/// of f. Bundle points must carry strata.
pub fn coarea_check<F>(scene: &Scene, points: &[BundlePoint], m: usize, f: F, cfg: &FibreConfig) -> CoareaResult
where
    F: Fn(&Vector, &Vector) -> f64 + Sync,
{
    let lhs = integrate_bundle(points, |p| {
        if p.stratum == Some(m) {
            f(&p.a(), &p.u()) * finite_product(&p.kappa)
        } else {
            0.0
        }
    });
    let items = face_sums(scene, cfg, |face, fib| {
        (face.dim == m).then(|| fib.iter().map(|(v, dv)| dv * f(&face.z, v)).sum())
    });
    let rhs: f64 = items.iter().map(|x| x.1).sum();
    let gap = (lhs.value - rhs).abs() / lhs.value.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    CoareaResult { m, lhs: lhs.value, lhs_stderr: lhs.stderr, rhs, gap }
}

/// Weight fraction, among bundle points accepted by `filter`, of points
/// with κ_m = ∞ (m counted from 1).
pub fn infinite_curvature_census<F>(points: &[BundlePoint], m: usize, filter: F) -> f64
where
    F: Fn(&BundlePoint) -> bool,
{
    let (mut hit, mut total) = (0.0, 0.0);
    for p in points.iter().filter(|p| filter(p)) {
        total += p.weight;
        if m >= 1 && p.kappa.get(m - 1).is_some_and(|k| k.is_infinite()) {
            hit += p.weight;
        }
    }
    if total > 0.0 {
        hit / total
    } else {
        0.0
    }
}
