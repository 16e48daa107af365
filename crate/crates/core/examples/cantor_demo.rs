//! Convex epigraph of a primitive of the Cantor function, at increasing
//! staircase depth. Prints how the 0-th support measure of the part above
//! (0, 1) spreads over more and more corners as the depth grows.
//!
//! Run with `cargo run --release --example cantor_demo`.

use curvmeas::bundle::{sample_bundle, BundleConfig};
use curvmeas::measures::{mu_global, mu_stratified, FibreConfig};
use curvmeas::scene::Scene;
use curvmeas::Tolerances;

fn main() -> curvmeas::Result<()> {
    let tols = Tolerances::default();
    let inside = |a: &curvmeas::Vector, _: &curvmeas::Vector| a[0] > 1e-9 && a[0] < 1.0 - 1e-9;
    println!("depth  corners  mu0(0<x<1) global  stratified  mu1 total");
    for depth in 1..=6 {
        let scene = Scene::cantor_epigraph(depth)?;
        let run = sample_bundle(&scene, &BundleConfig { grid_res: 768, ..BundleConfig::for_dim(2) }, &tols)?;
        let g = mu_global(&run, 2, 0, &inside)?;
        let s = mu_stratified(&scene, 0, &inside, &FibreConfig::default())?;
        let total = mu_global(&run, 2, 1, &curvmeas::measures::all)?;
        let corners = scene.faces(Default::default()).iter().filter(|f| f.dim == 0).count();
        println!(
            "{depth:>5}  {corners:>7}  {:>10.5} ± {:.0e}  {:>10.5}  {:>9.5}",
            g.value, g.stderr, s.value, total.value
        );
    }
    Ok(())
}
