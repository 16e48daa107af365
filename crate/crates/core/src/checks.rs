//! The invariant suite behind the `checks` command.

use rand::Rng;
use serde::Serialize;

use crate::bundle::{sample_bundle, BundleConfig, BundleRun};
use crate::differential::{check_differential_identities, frame};
use crate::measures::{all, coarea_check, mu_global, mu_stratified, steiner_fit, FibreConfig, MeasureEstimate};
use crate::projection::reach_function;
use crate::rng::item_rng;
use crate::scene::{ClosedSet, Scene};
use crate::strata::{assign_strata, StrataConfig};
use crate::{ExtReal, Result, Tolerances, Vector};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

fn uniform_in_box<R: Rng>(scene: &Scene, rng: &mut R) -> Vector {
    let b = scene.bbox();
    Vector::from_fn(scene.dim(), |i, _| b.lo[i] + rng.gen::<f64>() * (b.hi[i] - b.lo[i]))
}

/// Worst-case residuals of the differential identities over seeded regular
/// points with δ_A in `[d_min, d_max]`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentitySurvey {
    pub points: usize,
    pub attempts: usize,
    pub max_xi_transpose_u: f64,
    pub max_identity: f64,
    pub max_chain_rule: f64,
    /// Largest excursion of a Dξ eigenvalue outside `[0, λ/(λ−1)]`.
    pub max_eigen_excess: f64,
    /// Fraction of points with asymmetry at most 1e−4.
    pub symmetric_fraction: f64,
    /// Largest mismatch between the reach function and δ·ρ.
    pub max_reach_mismatch: f64,
}

pub fn identity_survey(
    scene: &Scene,
    count: usize,
    (d_min, d_max): (f64, f64),
    t: f64,
    seed: u64,
    tols: &Tolerances,
) -> IdentitySurvey {
    let mut rng = item_rng(seed, 0x1de);
    let mut s = IdentitySurvey::default();
    let mut symmetric = 0usize;
    while s.points < count && s.attempts < 200 * count {
        s.attempts += 1;
        let x = uniform_in_box(scene, &mut rng);
        let d = scene.delta(&x);
        if d < d_min || d > d_max {
            continue;
        }
        let Ok(f) = frame(scene, &x, tols) else { continue };
        let Ok(diag) = check_differential_identities(scene, &f, Some(t), tols) else { continue };
        s.points += 1;
        s.max_xi_transpose_u = s.max_xi_transpose_u.max(diag.xi_transpose_u);
        s.max_identity = s.max_identity.max(diag.identity_residual);
        s.max_chain_rule = s.max_chain_rule.max(diag.chain_rule.unwrap_or(0.0));
        let lo = diag.dxi_eigenvalues.first().copied().unwrap_or(0.0);
        let hi = diag.dxi_eigenvalues.last().copied().unwrap_or(0.0);
        s.max_eigen_excess = s.max_eigen_excess.max(-lo).max(hi - diag.dxi_eigen_bound);
        if diag.sym_residual <= 1e-4 {
            symmetric += 1;
        }
        if let Ok(reach) = reach_function(scene, &f.a, &f.u, tols) {
            let expect = f.rho.scale(f.delta);
            let gap = match (reach, expect) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() / b.max(1.0),
                (ExtReal::Infinite, ExtReal::Infinite) => 0.0,
                _ => f64::INFINITY,
            };
            s.max_reach_mismatch = s.max_reach_mismatch.max(gap);
        }
    }
    s.symmetric_fraction = if s.points > 0 { symmetric as f64 / s.points as f64 } else { 0.0 };
    s
}

/// Parameters of the invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct CheckConfig {
    pub bundle: BundleConfig,
    pub steiner_grid: usize,
    pub survey_points: usize,
    pub seed: u64,
}

impl CheckConfig {
    pub fn for_dim(dim: usize, seed: u64) -> Self {
        let bundle = BundleConfig::for_dim(dim);
        let steiner_grid = if dim == 2 { 2 * bundle.grid_res } else { bundle.grid_res * 4 / 3 };
        CheckConfig { bundle, steiner_grid, survey_points: 200, seed }
    }
}

/// Default Steiner radii: five equally spaced values below half the reach
/// and half the box margin.
pub fn default_radii(scene: &Scene) -> Option<Vec<f64>> {
    let reach = scene.known_reach()?;
    let top = reach.scale(0.5).to_f64().min(0.5 * scene.spec().bbox_margin);
    Some((1..=5).map(|k| top * k as f64 / 5.0).collect())
}

/// Whether two estimates agree within 3 combined standard errors plus 2%
/// of the larger magnitude (with a small absolute floor).
pub fn agree(a: &MeasureEstimate, b: &MeasureEstimate) -> (f64, f64) {
    let gap = (a.value - b.value).abs();
    let allowed = 3.0 * a.stderr.hypot(b.stderr) + 0.02 * a.value.abs().max(b.value.abs()).max(0.05);
    (gap, allowed)
}

/// Three support-measure estimates for every m; the Steiner route only
/// when the scene has known positive reach.
pub fn three_way(
    scene: &Scene,
    run: &BundleRun,
    steiner_grid: usize,
    radii: Option<&[f64]>,
) -> Result<Vec<Vec<MeasureEstimate>>> {
    let n = scene.dim();
    let steiner = match radii.map(|r| r.to_vec()).or_else(|| default_radii(scene)) {
        Some(r) => Some(steiner_fit(scene, &r, steiner_grid)?),
        None => None,
    };
    let fibres = FibreConfig::default();
    (0..n)
        .map(|m| {
            let mut row = vec![mu_global(run, n, m, &all)?, mu_stratified(scene, m, &all, &fibres)?];
            if let Some(s) = &steiner {
                row.push(s[m].clone());
            }
            Ok(row)
        })
        .collect()
}

/// Runs the full invariant suite.
pub fn run_checks(scene: &Scene, cfg: &CheckConfig, tols: &Tolerances) -> Result<Vec<Check>> {
    let n = scene.dim();
    let mut out = Vec::new();

    let mut rng = item_rng(cfg.seed, 0x11b);
    let mut lip: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (x, y) = (uniform_in_box(scene, &mut rng), uniform_in_box(scene, &mut rng));
        lip = lip.max((scene.delta(&x) - scene.delta(&y)).abs() - (&x - &y).norm());
    }
    out.push(Check::at_most("delta_lipschitz_excess", lip, 1e-12));

    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x = uniform_in_box(scene, &mut rng);
        let d = scene.delta(&x);
        for a in scene.nearest_set(&x, tols.nearest) {
            worst = worst.max(scene.delta(&a)).max((&x - &a).norm() - d - tols.nearest);
        }
    }
    out.push(Check::at_most("nearest_set_excess", worst, tols.nearest));

    let margin = scene.spec().bbox_margin;
    let s = identity_survey(scene, cfg.survey_points, (0.05 * margin.min(1.0), margin), 0.5, cfg.seed, tols);
    out.push(Check::at_least("identity_survey_points", s.points as f64, (cfg.survey_points / 2) as f64));
    out.push(Check::at_most("dxi_transpose_u", s.max_xi_transpose_u, 1e-5));
    out.push(Check::at_most("dnu_identity_residual", s.max_identity, 1e-5));
    out.push(Check::at_most("chain_rule_residual", s.max_chain_rule, 1e-4));
    out.push(Check::at_most("dxi_eigen_excess", s.max_eigen_excess, 1e-6));
    out.push(Check::at_least("symmetric_fraction", s.symmetric_fraction, 0.99));
    out.push(Check::at_most("reach_vs_rho_mismatch", s.max_reach_mismatch, 1e-6));

    let mut run = sample_bundle(scene, &cfg.bundle, tols)?;
    assign_strata(scene, &mut run.points, &StrataConfig::new(n, scene.diameter(), cfg.seed), tols)?;
    let total = run.total_weight();
    let by_weight = |pred: &dyn Fn(&crate::bundle::BundlePoint) -> bool| -> f64 {
        run.points.iter().filter(|p| pred(p)).map(|p| p.weight).sum::<f64>()
    };
    let q_bound = run
        .points
        .iter()
        .filter_map(|p| p.q_min.map(|q| q + 1.0 / p.reach.to_f64()))
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least("q_lower_bound", if q_bound.is_finite() { q_bound } else { 0.0 }, -1e-4));
    out.push(Check::at_least("q_symmetric_fraction", by_weight(&|p| p.q_asymmetry <= 1e-4) / total, 0.99));
    out.push(Check::at_least(
        "strata_partition",
        by_weight(&|p| p.stratum.is_some_and(|m| m < n)) / total,
        1.0 - 1e-12,
    ));
    for m in 0..n - 1 {
        let on = by_weight(&|p| p.stratum == Some(m));
        if on > 0.0 {
            let hit = by_weight(&|p| p.stratum == Some(m) && p.kappa[m].is_infinite());
            out.push(Check::at_least(format!("infinite_pattern_m{m}"), hit / on, 0.99));
        }
    }
    out.push(Check::at_least(
        "tangent_dim_within_stratum",
        by_weight(&|p| p.stratum.is_some_and(|m| p.tangent_dim <= m)) / total,
        0.99,
    ));

    let rows = three_way(scene, &run, cfg.steiner_grid, None)?;
    for (m, row) in rows.iter().enumerate() {
        for other in &row[1..] {
            let (gap, allowed) = agree(&row[0], other);
            out.push(Check::at_most(format!("mu{m}_global_vs_{:?}", other.method).to_lowercase(), gap, allowed));
        }
    }
    let fibres = FibreConfig::default();
    for m in 0..n {
        let c = coarea_check(scene, &run.points, m, |_, _| 1.0, &fibres);
        if c.lhs.max(c.rhs) > 1e-3 * total {
            let scale = c.lhs.abs().max(c.rhs.abs());
            out.push(Check::at_most(format!("coarea_gap_m{m}"), c.gap, 0.02 + 3.0 * c.lhs_stderr / scale));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ShapeSpec;

    #[test]
    fn square_passes() {
        let sq = Scene::new(2, vec![ShapeSpec::AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }]).unwrap();
        let mut cfg = CheckConfig::for_dim(2, 5);
        cfg.bundle.grid_res = 256;
        cfg.steiner_grid = 512;
        cfg.survey_points = 50;
        let checks = run_checks(&sq, &cfg, &Tolerances::default()).unwrap();
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(checks.len() > 15);
    }
}
