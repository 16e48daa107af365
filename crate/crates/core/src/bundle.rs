//! Weighted samples of the unit normal bundle N(A).
//!
//! The level set S(A, r) is extracted from the exact distance on a regular
//! (rotated) grid, each cell's piece is lifted by ψ_A, and its weight is the piece's
//! length or area times the Jacobian of ψ_A restricted to S(A, r).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::curvature_from_frame;
use crate::differential;
use crate::projection::psi;
use crate::scene::{Aabb, ClosedSet, Scene};
use crate::{Error, ExtReal, Matrix, Result, Tolerances, Vector};

/// One grid cell's share of S(A, r).
#[derive(Clone, Debug)]
pub struct LevelSample {
    /// Length- or area-weighted centroid of the cell's facets.
    pub point: Vector,
    pub area: f64,
    /// Row-major cell index, the key for deterministic ordering.
    pub cell: usize,
    /// Jackknife block of the cell.
    pub block: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BundlePoint {
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub reach: ExtReal,
    pub r_src: f64,
    pub weight: f64,
    pub chi: Vec<f64>,
    pub kappa: Vec<ExtReal>,
    /// dim T_A(a, u).
    pub tangent_dim: usize,
    /// Smallest eigenvalue of Q_A(a, u), when T_A(a, u) is nontrivial.
    pub q_min: Option<f64>,
    pub q_asymmetry: f64,
    pub stratum: Option<usize>,
    pub cell: usize,
    pub block: usize,
}

impl BundlePoint {
    pub fn a(&self) -> Vector {
        Vector::from_column_slice(&self.a)
    }

    pub fn u(&self) -> Vector {
        Vector::from_column_slice(&self.u)
    }
}

/// Grid over the scene's box with cubic cells.
/// A cubic lattice of spacing `h` in a fixed generic orientation, covering
/// `bbox`. Flat pieces of polytopes never line up with its cells, so
/// per-cell sampling errors along their edges average out instead of
/// accumulating.
#[derive(Clone, Debug)]
struct Grid {
    lo: Vector,
    h: f64,
    counts: Vec<usize>,
    rot: Matrix,
}

/// Orientation of the sampling lattice: a rotation by 0.3 rad, about
/// (1, 2, 3) in three dimensions.
fn lattice_rotation(n: usize) -> Matrix {
    let t = 0.3f64;
    let (s, c) = t.sin_cos();
    match n {
        2 => Matrix::from_row_slice(2, 2, &[c, -s, s, c]),
        3 => {
            let k = Vector::from_vec(vec![1.0, 2.0, 3.0]).normalize();
            let kx = Matrix::from_row_slice(3, 3, &[0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0]);
            Matrix::identity(3, 3) + &kx * s + &kx * &kx * (1.0 - c)
        }
        _ => Matrix::identity(n, n),
    }
}

impl Grid {
    fn new(bbox: &Aabb, grid_res: usize) -> Self {
        let n = bbox.lo.len();
        let h = bbox.extent().max() / grid_res as f64;
        let rot = lattice_rotation(n);
        // bounding box of the rotated bbox corners in lattice coordinates
        let mut lo = Vector::from_element(n, f64::INFINITY);
        let mut hi = Vector::from_element(n, f64::NEG_INFINITY);
        for b in 0..1usize << n {
            let corner = Vector::from_iterator(
                n,
                (0..n).map(|d| if b >> d & 1 == 1 { bbox.hi[d] } else { bbox.lo[d] }),
            );
            let q = rot.tr_mul(&corner);
            lo = lo.inf(&q);
            hi = hi.sup(&q);
        }
        let counts = (&hi - &lo).iter().map(|e| ((e / h).ceil() as usize).max(1)).collect();
        Grid { lo, h, counts, rot }
    }

    fn vertex_count(&self) -> usize {
        self.counts.iter().map(|c| c + 1).product()
    }

    fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    fn vertex_index(&self, idx: &[usize]) -> usize {
        let mut k = 0;
        for d in (0..idx.len()).rev() {
            k = k * (self.counts[d] + 1) + idx[d];
        }
        k
    }

    fn vertex_coords(&self, mut k: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|c| {
                let i = k % (c + 1);
                k /= c + 1;
                i
            })
            .collect()
    }

    fn cell_coords(&self, mut k: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|c| {
                let i = k % c;
                k /= c;
                i
            })
            .collect()
    }

    fn position(&self, idx: &[usize]) -> Vector {
        let q = Vector::from_iterator(idx.len(), idx.iter().enumerate().map(|(d, &i)| self.lo[d] + self.h * i as f64));
        &self.rot * q
    }
}

/// Zero of `δ_A − r` on the segment from `inside` (value ≤ 0) to `outside`.
fn crossing<S: ClosedSet + ?Sized>(set: &S, r: f64, inside: &Vector, outside: &Vector) -> Vector {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        let p = inside + (outside - inside) * mid;
        if set.delta(&p) - r > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    inside + (outside - inside) * (0.5 * (lo + hi))
}

fn edge_point<S: ClosedSet + ?Sized>(set: &S, r: f64, p: &[Vector], f: &[f64], i: usize, j: usize) -> Vector {
    if f[i] > 0.0 {
        crossing(set, r, &p[j], &p[i])
    } else {
        crossing(set, r, &p[i], &p[j])
    }
}

fn square_cell<S: ClosedSet + ?Sized>(set: &S, r: f64, p: &[Vector], f: &[f64]) -> Vec<(Vector, Vector)> {
    // corners in cyclic order; edge k joins corner k and corner k+1
    let pos: Vec<bool> = f.iter().map(|&v| v > 0.0).collect();
    let edges: Vec<usize> = (0..4).filter(|&k| pos[k] != pos[(k + 1) % 4]).collect();
    let pt = |k: usize| edge_point(set, r, p, f, k, (k + 1) % 4);
    match edges.len() {
        2 => vec![(pt(edges[0]), pt(edges[1]))],
        4 => {
            let centre = p.iter().fold(Vector::zeros(2), |acc, q| acc + q) / 4.0;
            let centre_pos = set.delta(&centre) - r > 0.0;
            // the centre joins corners 0 and 2 when it shares their sign,
            // so the curve cuts off corners 1 and 3
            if centre_pos == pos[0] {
                vec![(pt(0), pt(1)), (pt(2), pt(3))]
            } else {
                vec![(pt(3), pt(0)), (pt(1), pt(2))]
            }
        }
        _ => Vec::new(),
    }
}

const KUHN: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn cube_cell<S: ClosedSet + ?Sized>(set: &S, r: f64, p: &[Vector], f: &[f64]) -> Vec<[Vector; 3]> {
    let mut tris = Vec::new();
    for perm in KUHN {
        let v1 = 1 << perm[0];
        let v2 = v1 | (1 << perm[1]);
        let tet = [0usize, v1, v2, 7];
        let (pos, neg): (Vec<usize>, Vec<usize>) = tet.iter().partition(|&&v| f[v] > 0.0);
        let e = |i: usize, j: usize| edge_point(set, r, p, f, i, j);
        match (pos.len(), neg.len()) {
            (1, 3) | (3, 1) => {
                let (lone, rest) = if pos.len() == 1 { (pos[0], &neg) } else { (neg[0], &pos) };
                tris.push([e(lone, rest[0]), e(lone, rest[1]), e(lone, rest[2])]);
            }
            (2, 2) => {
                let (i, j, k, l) = (pos[0], pos[1], neg[0], neg[1]);
                let (ik, il, jl, jk) = (e(i, k), e(i, l), e(j, l), e(j, k));
                tris.push([ik.clone(), il, jl.clone()]);
                tris.push([ik, jl, jk]);
            }
            _ => {}
        }
    }
    tris
}

/// Polygonal approximation of S(A, r) = {δ_A = r} inside `bbox`, one
/// sample per crossed grid cell.
pub fn sample_level_set<S: ClosedSet + ?Sized>(
    set: &S,
    bbox: &Aabb,
    r: f64,
    grid_res: usize,
) -> Result<Vec<LevelSample>> {
    let n = set.dim();
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("level must be positive, got {r}")));
    }
    let grid = Grid::new(bbox, grid_res);
    if grid.cell_count() > 1_000_000_000 {
        return Err(Error::InvalidConfig("grid exceeds 10^9 cells".into()));
    }
    let values: Vec<f64> = (0..grid.vertex_count())
        .into_par_iter()
        .map(|k| set.delta(&grid.position(&grid.vertex_coords(k))) - r)
        .collect();
    let corners: Vec<Vec<usize>> = match n {
        // cyclic order for marching squares
        2 => vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1]],
        // bit order x, y, z for the Kuhn split
        _ => (0..8).map(|b| vec![b & 1, (b >> 1) & 1, (b >> 2) & 1]).collect(),
    };
    let samples: Vec<LevelSample> = (0..grid.cell_count())
        .into_par_iter()
        .filter_map(|cell| {
            let base = grid.cell_coords(cell);
            let idx: Vec<Vec<usize>> =
                corners.iter().map(|c| base.iter().zip(c).map(|(b, o)| b + o).collect()).collect();
            let f: Vec<f64> = idx.iter().map(|i| values[grid.vertex_index(i)]).collect();
            if f.iter().all(|&v| v > 0.0) || f.iter().all(|&v| v <= 0.0) {
                return None;
            }
            let p: Vec<Vector> = idx.iter().map(|i| grid.position(i)).collect();
            let mut area = 0.0;
            let mut moment = Vector::zeros(n);
            if n == 2 {
                for (s, t) in square_cell(set, r, &p, &f) {
                    let len = (&t - &s).norm();
                    area += len;
                    moment += (s + t) * (0.5 * len);
                }
            } else {
                for [x, y, z] in cube_cell(set, r, &p, &f) {
                    let ar = 0.5 * (&y - &x).cross(&(&z - &x)).norm();
                    area += ar;
                    moment += (x + y + z) * (ar / 3.0);
                }
            }
            let point = moment / area;
            let inside = (0..n).all(|d| point[d] >= bbox.lo[d] && point[d] <= bbox.hi[d]);
            (area > 0.0 && inside).then(|| LevelSample { point, area, cell, block: block_of(&base) })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyLevelSet { r });
    }
    Ok(samples)
}

/// ∏ ((1 − rχ_i)² + χ_i²)^{1/2}, the area factor of ψ_A on S(A, r).
pub fn psi_jacobian(chi: &[f64], r: f64) -> f64 {
    chi.iter().map(|&c| ((1.0 - r * c).powi(2) + c * c).sqrt()).product()
}

#[derive(Clone, Debug, Default)]
pub struct Lifted {
    pub points: Vec<BundlePoint>,
    /// Level-set area of samples that were not regular.
    pub dropped_area: f64,
    pub dropped: usize,
}

/// Lifts level-set samples to the normal bundle. Each sample is moved
/// along its normal ray onto S(A, r) before the differential is taken.
pub fn lift_to_bundle<S: ClosedSet + ?Sized>(
    set: &S,
    samples: &[LevelSample],
    r: f64,
    tols: &Tolerances,
) -> Lifted {
    let lifted: Vec<std::result::Result<BundlePoint, f64>> = samples
        .par_iter()
        .map(|s| {
            let p = psi(set, &s.point, tols).map_err(|_| s.area)?;
            let x = &p.a + &p.u * r;
            let frame = differential::frame(set, &x, tols).map_err(|_| s.area)?;
            if (&frame.a - &p.a).norm() > 1e-6 * r.max(1.0) {
                return Err(s.area);
            }
            let curv = curvature_from_frame(&frame, tols);
            Ok(BundlePoint {
                a: frame.a.iter().copied().collect(),
                u: frame.u.iter().copied().collect(),
                reach: frame.rho.scale(frame.delta),
                r_src: r,
                weight: s.area * psi_jacobian(&frame.chi, frame.delta),
                q_min: curv.q_min(),
                q_asymmetry: curv.q_asymmetry,
                chi: frame.chi,
                kappa: curv.kappa,
                tangent_dim: curv.m,
                stratum: None,
                cell: s.cell,
                block: s.block,
            })
        })
        .collect();
    let mut out = Lifted::default();
    for item in lifted {
        match item {
            Ok(p) => out.points.push(p),
            Err(area) => {
                out.dropped_area += area;
                out.dropped += 1;
            }
        }
    }
    out
}

/// A weighted sum with its standard error.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Number of blocks for the jackknife.
pub const BLOCKS: usize = 16;

/// Block of a cell: `(i + 3j + 7k) mod 16` runs through every residue
/// along each grid axis, so a flat piece of the level set aligned with the
/// grid is shared by all blocks.
fn block_of(cell: &[usize]) -> usize {
    let w = [1, 3, 7];
    cell.iter().zip(w).map(|(i, w)| i * w).sum::<usize>() % BLOCKS
}

/// `Σ f·weight` with a delete-one-block jackknife of the ratio
/// `Σ f·w / Σ w`. Each block is a sub-lattice of cells spread over the
/// whole level set, hence a coarser quadrature of the same integral. The total weight is treated as
/// exact and only the variation of f contributes to the error.
pub fn integrate_bundle<F>(points: &[BundlePoint], f: F) -> Estimate
where
    F: Fn(&BundlePoint) -> f64 + Sync,
{
    let fw: Vec<(f64, f64)> = points.par_iter().map(|p| (f(p) * p.weight, p.weight)).collect();
    let total_f: f64 = fw.iter().map(|x| x.0).sum();
    let total_w: f64 = fw.iter().map(|x| x.1).sum();
    let mut bf = [0.0; BLOCKS];
    let mut bw = [0.0; BLOCKS];
    for (p, &(x, w)) in points.iter().zip(&fw) {
        bf[p.block] += x;
        bw[p.block] += w;
    }
    let thetas: Vec<f64> = (0..BLOCKS)
        .filter(|&b| bw[b] > 0.0 && total_w - bw[b] > 0.0)
        .map(|b| total_w * (total_f - bf[b]) / (total_w - bw[b]))
        .collect();
    if thetas.len() < 2 {
        return Estimate { value: total_f, stderr: 0.0 };
    }
    let k = thetas.len() as f64;
    let mean = thetas.iter().sum::<f64>() / k;
    let var = (k - 1.0) / k * thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
    Estimate { value: total_f, stderr: var.sqrt() }
}

/// Sampling parameters for the bundle of a scene.
#[derive(Clone, Debug, Serialize)]
pub struct BundleConfig {
    pub grid_res: usize,
    /// Top level r₀; defaults to a quarter of the box margin.
    pub r0: Option<f64>,
    /// Largest k in the dyadic schedule r₀·2^{−k} for sets of unknown reach.
    pub max_level: u32,
}

impl BundleConfig {
    pub fn for_dim(dim: usize) -> Self {
        BundleConfig { grid_res: if dim == 2 { 512 } else { 96 }, r0: None, max_level: 4 }
    }
}

/// All bundle samples of a scene, with the bookkeeping of the levels used.
#[derive(Clone, Debug, Serialize)]
pub struct BundleRun {
    #[serde(skip)]
    pub points: Vec<BundlePoint>,
    pub levels: Vec<f64>,
    /// Weight of the finest shell, an indicator of bundle mass whose reach
    /// is below every level used.
    pub uncaptured: f64,
    pub dropped_area: f64,
    pub dropped: usize,
}

impl BundleRun {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

/// Samples N(A) for a scene. Sets with known reach use one level at most
/// half the reach. Otherwise level r_k collects the points with reach in
/// (r_k, r_{k−1}], which partitions the bundle up to reach r_K.
pub fn sample_bundle(scene: &Scene, cfg: &BundleConfig, tols: &Tolerances) -> Result<BundleRun> {
    let r0 = cfg.r0.unwrap_or(0.25 * scene.spec().bbox_margin);
    if let Some(reach) = scene.known_reach() {
        let r = reach.scale(0.5).to_f64().min(r0);
        let samples = sample_level_set(scene, scene.bbox(), r, cfg.grid_res)?;
        let lifted = lift_to_bundle(scene, &samples, r, tols);
        return Ok(BundleRun {
            points: lifted.points,
            levels: vec![r],
            uncaptured: 0.0,
            dropped_area: lifted.dropped_area,
            dropped: lifted.dropped,
        });
    }
    let mut run = BundleRun { points: Vec::new(), levels: Vec::new(), uncaptured: 0.0, dropped_area: 0.0, dropped: 0 };
    for k in 0..=cfg.max_level {
        let r = r0 * 0.5f64.powi(k as i32);
        let samples = match sample_level_set(scene, scene.bbox(), r, cfg.grid_res) {
            Ok(s) => s,
            Err(Error::EmptyLevelSet { .. }) => continue,
            Err(e) => return Err(e),
        };
        let lifted = lift_to_bundle(scene, &samples, r, tols);
        // keep reach ∈ (2r, 4r]: the ridge of S(A, r), where reach is close
        // to r, is left to the next, finer level
        let upper = ExtReal::Finite(4.0 * r);
        let shell: Vec<BundlePoint> = lifted
            .points
            .into_iter()
            .filter(|p| p.reach > ExtReal::Finite(2.0 * r) && (k == 0 || p.reach <= upper))
            .collect();
        if k == cfg.max_level {
            run.uncaptured = shell.iter().map(|p| p.weight).sum();
        }
        run.dropped_area += lifted.dropped_area;
        run.dropped += lifted.dropped;
        run.levels.push(r);
        run.points.extend(shell);
    }
    if run.points.is_empty() {
        return Err(Error::EmptyLevelSet { r: r0 });
    }
    Ok(run)
}

/// Fixed-width scientific notation used by every CSV table.
pub fn csv_float(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes the bundle table as CSV with a header row.
pub fn write_csv<W: Write>(out: &mut W, dim: usize, points: &[BundlePoint]) -> std::io::Result<()> {
    let axes = ["x", "y", "z"];
    let mut head: Vec<String> = Vec::new();
    head.extend(axes[..dim].iter().map(|a| format!("a_{a}")));
    head.extend(axes[..dim].iter().map(|a| format!("u_{a}")));
    head.extend(["reach".into(), "r_src".into(), "weight".into()]);
    head.extend((1..dim).map(|i| format!("chi_{i}")));
    head.push("stratum".into());
    writeln!(out, "{}", head.join(","))?;
    for p in points {
        let mut row: Vec<String> = p.a.iter().chain(&p.u).map(|&x| csv_float(x)).collect();
        row.push(match p.reach {
            ExtReal::Finite(x) => csv_float(x),
            ExtReal::Infinite => "inf".into(),
        });
        row.push(csv_float(p.r_src));
        row.push(csv_float(p.weight));
        row.extend(p.chi.iter().map(|&c| csv_float(c)));
        row.push(p.stratum.map(|s| s.to_string()).unwrap_or_default());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
