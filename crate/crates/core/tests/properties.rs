use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use curvmeas::curvature::symmetric_function;
use curvmeas::projection::{dilate, psi};
use curvmeas::scene::{ClosedSet, Scene, ShapeSpec};
use curvmeas::{ExtReal, Tolerances, Vector};

fn mixed_scene() -> Scene {
    Scene::new(
        2,
        vec![
            ShapeSpec::AxisBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
            ShapeSpec::Ball { c: vec![3.0, 0.5], radius: 0.7 },
            ShapeSpec::Segment { p: vec![-2.0, -1.0], q: vec![-1.0, 2.0] },
        ],
    )
    .unwrap()
}

fn point() -> impl Strategy<Value = Vector> {
    (-4.0..5.0f64, -3.0..4.0f64).prop_map(|(x, y)| Vector::from_vec(vec![x, y]))
}

/// Coefficients of ∏(1 + κ_i s), expanded one factor at a time.
fn expand(kappa: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &k in kappa {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] += ci * k;
        }
        c = next;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn distance_is_one_lipschitz(x in point(), y in point()) {
        let s = mixed_scene();
        let gap = (s.delta(&x) - s.delta(&y)).abs();
        prop_assert!(gap <= (&x - &y).norm() + 1e-12);
    }

    #[test]
    fn projection_realises_the_distance(x in point()) {
        let s = mixed_scene();
        let tols = Tolerances::default();
        if let Ok(p) = psi(&s, &x, &tols) {
            assert_abs_diff_eq!((&x - &p.a).norm(), s.delta(&x), epsilon = 1e-9);
            assert_abs_diff_eq!(s.delta(&p.a), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.u.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dilation_scales_distance_below_rho(x in point(), t in 0.1..0.95f64) {
        let s = mixed_scene();
        let tols = Tolerances::default();
        let Ok(p) = psi(&s, &x, &tols) else { return Ok(()) };
        let d = dilate(&s, &x, t, &tols).unwrap();
        // t < 1 ≤ ρ, so the dilated point stays in the fibre of ξ
        prop_assert!(!d.beyond_rho);
        assert_abs_diff_eq!(s.delta(&d.point), t * p.delta, epsilon = 1e-9);
        let q = psi(&s, &d.point, &tols).unwrap();
        assert_abs_diff_eq!((&q.a - &p.a).norm(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn finite_symmetric_functions_match_expansion(kappa in prop::collection::vec(-5.0..5.0f64, 1..4)) {
        let scale: f64 = kappa.iter().map(|k| 1.0 / (1.0 + k * k).sqrt()).product();
        let coeffs: Vec<f64> = expand(&kappa).iter().map(|c| c * scale).collect();
        let ext: Vec<ExtReal> = kappa.iter().map(|&k| ExtReal::Finite(k)).collect();
        for (j, c) in coeffs.iter().enumerate() {
            let h = symmetric_function(&ext, j).unwrap();
            assert_abs_diff_eq!(h, *c, epsilon = 1e-9 * (1.0 + c.abs()));
        }
    }
}

#[test]
fn infinite_entries_keep_only_subsets_that_contain_them() {
    let kappa = [ExtReal::Finite(2.0), ExtReal::Infinite];
    let w = 1.0 / 5.0f64.sqrt();
    // H_0 vanishes, H_1 keeps the subset {∞}, H_2 the full set
    assert_eq!(symmetric_function(&kappa, 0).unwrap(), 0.0);
    assert_abs_diff_eq!(symmetric_function(&kappa, 1).unwrap(), w, epsilon = 1e-15);
    assert_abs_diff_eq!(symmetric_function(&kappa, 2).unwrap(), 2.0 * w, epsilon = 1e-15);
}
