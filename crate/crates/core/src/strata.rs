//! Classification of base points by the dimension of Dis(A, a).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::BundlePoint;
use crate::linalg::svd_triplets;
use crate::rng::directions;
use crate::scene::ClosedSet;
use crate::{Error, Matrix, Result, Tolerances, Vector};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StratumLabel {
    pub a: Vec<f64>,
    pub m: usize,
    pub dis_dim: usize,
    pub confidence: f64,
}

/// Probe radius and direction count.
#[derive(Clone, Debug, Serialize)]
pub struct StrataConfig {
    pub s_probe: f64,
    pub n_dirs: usize,
    pub seed: u64,
}

impl StrataConfig {
    /// Defaults: s_probe = 10⁻³ × diameter, 256 directions in the plane and
    /// 2048 in space.
    pub fn new(dim: usize, diameter: f64, seed: u64) -> Self {
        StrataConfig { s_probe: 1e-3 * diameter, n_dirs: if dim == 2 { 256 } else { 2048 }, seed }
    }

    /// Relative shortfall tolerated by the probe: a direction one lattice
    /// spacing away from a normal still passes.
    fn acceptance(&self, dim: usize) -> f64 {
        let spacing = if dim == 2 {
            std::f64::consts::TAU / self.n_dirs as f64
        } else {
            (4.0 * std::f64::consts::PI / self.n_dirs as f64).sqrt()
        };
        0.5 * spacing * spacing
    }
}

/// Centered singular values of the probe points, in units of s_probe, at
/// which a direction of Dis(A, a) is counted.
const RANK_THRESHOLD: f64 = 0.15;
/// Values in this band are ambiguous and resolve to the larger cone.
const AMBIGUOUS: (f64, f64) = (0.1, 0.2);

/// Stratum of a point of A from the affine dimension of `{0} ∪ s·D`, where
/// D is the set of probe directions u with `δ_A(a + s u) ≈ s`.
pub fn classify_stratum<S: ClosedSet + ?Sized>(
    set: &S,
    a: &Vector,
    cfg: &StrataConfig,
    index: u64,
    tols: &Tolerances,
) -> Result<StratumLabel> {
    let distance = set.delta(a);
    if distance > tols.nearest {
        return Err(Error::NotOnSet { distance });
    }
    let n = set.dim();
    let s = cfg.s_probe;
    let eps = cfg.acceptance(n);
    let mut pts: Vec<Vector> = vec![Vector::zeros(n)];
    for u in directions(n, cfg.n_dirs, cfg.seed, index) {
        if set.delta(&(a + &u * s)) >= s * (1.0 - eps) {
            pts.push(u * s);
        }
    }
    let count = pts.len();
    let mean = pts.iter().fold(Vector::zeros(n), |acc, p| acc + p) / count as f64;
    let mut m = Matrix::zeros(count, n);
    for (i, p) in pts.iter().enumerate() {
        m.set_row(i, &(p - &mean).transpose());
    }
    let scale = s * (count as f64).sqrt();
    let sigmas: Vec<f64> = svd_triplets(&m).iter().map(|t| t.0 / scale).collect();
    let dis_dim = sigmas.iter().filter(|&&x| x > AMBIGUOUS.0).count();
    let confidence = sigmas
        .iter()
        .map(|&x| ((x - RANK_THRESHOLD).abs() / RANK_THRESHOLD).min(1.0))
        .fold(1.0, f64::min);
    let confidence = if sigmas.iter().any(|&x| x > AMBIGUOUS.0 && x < AMBIGUOUS.1) { confidence.min(0.5) } else { confidence };
    Ok(StratumLabel { a: a.iter().copied().collect(), m: n - dis_dim, dis_dim, confidence })
}

fn key(a: &[f64], scale: f64) -> Vec<i64> {
    a.iter().map(|x| (x / scale).round() as i64).collect()
}

/// Sets the stratum of every bundle point. Base points that coincide up to
/// `1e-9 × s_probe` share one classification. A point of the bundle always
/// has a normal, so a probe that finds none is read as the top stratum.
pub fn assign_strata<S: ClosedSet + ?Sized>(
    set: &S,
    points: &mut [BundlePoint],
    cfg: &StrataConfig,
    tols: &Tolerances,
) -> Result<()> {
    let n = set.dim();
    let q = 1e-9 * cfg.s_probe;
    let mut order: Vec<Vec<i64>> = Vec::new();
    let mut slot: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let k = key(&p.a, q);
        if !slot.contains_key(&k) {
            slot.insert(k.clone(), order.len());
            order.push(k);
            reps.push(i);
        }
    }
    let labels: Vec<Result<StratumLabel>> = reps
        .par_iter()
        .enumerate()
        .map(|(j, &i)| classify_stratum(set, &points[i].a(), cfg, j as u64, tols))
        .collect();
    let labels = labels.into_iter().collect::<Result<Vec<_>>>()?;
    for p in points.iter_mut() {
        let m = labels[slot[&key(&p.a, q)]].m;
        p.stratum = Some(m.min(n - 1));
    }
    Ok(())
}

/// Bundle points whose base lies in A^(m). Points are classified first when
/// needed.
pub fn restrict_bundle<S: ClosedSet + ?Sized>(
    set: &S,
    points: &mut [BundlePoint],
    m: usize,
    cfg: &StrataConfig,
    tols: &Tolerances,
) -> Result<Vec<BundlePoint>> {
    if points.iter().any(|p| p.stratum.is_none()) {
        assign_strata(set, points, cfg, tols)?;
    }
    Ok(points.iter().filter(|p| p.stratum == Some(m)).cloned().collect())
}
