//! Command-line front end: configuration, orchestration and reports.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bundle::{csv_float, lift_to_bundle, sample_bundle, sample_level_set, write_csv, BundleConfig};
use crate::checks::{agree, run_checks, three_way, CheckConfig};
use crate::measures::{coarea_check, steiner_fit, FibreConfig, MeasureEstimate};
use crate::scene::{ClosedSet, Scene, SceneSpec};
use crate::strata::{assign_strata, classify_stratum, StrataConfig};
use crate::{Error, ExtReal, Result, Tolerances};

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code when a validation check fails.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for an unreadable scene or a bad configuration.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Principal curvatures at bundle points of one level set (CSV).
    Curvature,
    /// Weighted normal bundle samples (CSV).
    Bundle,
    /// Support measures by all three routes (JSON).
    Measures,
    /// Support measures from the Steiner polynomial (JSON).
    Steiner,
    /// Strata of the bundle base points (CSV).
    Strata,
    /// Both sides of the area formula per stratum (JSON).
    Coarea,
    /// Full invariant suite (JSON).
    Checks,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Normal bundles, curvatures and support measures of closed sets.
#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "curvmeas", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Scene JSON file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Grid cells along the longest side of the scene box.
    #[arg(long)]
    pub grid_res: Option<usize>,
    /// Level-set radius.
    #[arg(long)]
    pub r: Option<f64>,
    /// Radii for the Steiner fit.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Support measure index.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

struct Context {
    scene: Scene,
    tols: Tolerances,
    hash: String,
    scene_name: String,
}

impl Context {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(&cfg.scene)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", cfg.scene.display())))?;
        let scene = Scene::from_json(&text)?;
        let mut tols = Tolerances::default();
        for (k, v) in &cfg.tol {
            tols.set(k, *v)?;
        }
        if let Some(m) = cfg.m {
            if m >= scene.dim() {
                return Err(Error::InvalidIndex { index: m, max: scene.dim() - 1 });
            }
        }
        if cfg.grid_res == Some(0) {
            return Err(Error::InvalidConfig("grid resolution must be positive".into()));
        }
        #[derive(Serialize)]
        struct Hashed<'a> {
            run: &'a RunConfig,
            scene: &'a SceneSpec,
            tols: &'a Tolerances,
        }
        let bytes = serde_json::to_vec(&Hashed { run: cfg, scene: scene.spec(), tols: &tols })
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let digest = Sha256::digest(&bytes);
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        let scene_name = cfg.scene.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Context { scene, tols, hash, scene_name })
    }

    fn bundle_config(&self, cfg: &RunConfig) -> BundleConfig {
        let mut b = BundleConfig::for_dim(self.scene.dim());
        if let Some(g) = cfg.grid_res {
            b.grid_res = g;
        }
        b.r0 = cfg.r;
        b
    }

    fn check_config(&self, cfg: &RunConfig) -> CheckConfig {
        let mut c = CheckConfig::for_dim(self.scene.dim(), cfg.seed);
        c.bundle = self.bundle_config(cfg);
        c.steiner_grid = if self.scene.dim() == 2 { 2 * c.bundle.grid_res } else { c.bundle.grid_res * 4 / 3 };
        c
    }
}

/// One line of the measures report.
#[derive(Serialize)]
struct MeasureRecord<'a> {
    scene: &'a str,
    m: usize,
    method: crate::measures::Method,
    value: f64,
    stderr: f64,
    uncaptured: f64,
    flag: &'a Option<String>,
    config_hash: &'a str,
    seed: u64,
}

fn records<'a>(ctx: &'a Context, cfg: &RunConfig, ests: &'a [MeasureEstimate]) -> Vec<MeasureRecord<'a>> {
    ests.iter()
        .map(|e| MeasureRecord {
            scene: &ctx.scene_name,
            m: e.m,
            method: e.method,
            value: e.value,
            stderr: e.stderr,
            uncaptured: e.uncaptured,
            flag: &e.flag,
            config_hash: &ctx.hash,
            seed: cfg.seed,
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Report text and whether every validation passed.
pub struct Outcome {
    pub report: String,
    pub passed: bool,
}

fn select_m(cfg: &RunConfig, n: usize) -> Vec<usize> {
    match cfg.m {
        Some(m) => vec![m],
        None => (0..n).collect(),
    }
}

/// Executes one command.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = Context::new(cfg)?;
    let scene = &ctx.scene;
    let n = scene.dim();
    let tols = &ctx.tols;
    let strata_cfg = StrataConfig::new(n, scene.diameter(), cfg.seed);
    let mut passed = true;
    let report = match cfg.command {
        Command::Curvature => {
            let bcfg = ctx.bundle_config(cfg);
            let r = cfg.r.unwrap_or(0.25 * scene.spec().bbox_margin);
            let samples = sample_level_set(scene, scene.bbox(), r, bcfg.grid_res)?;
            let lifted = lift_to_bundle(scene, &samples, r, tols);
            let axes = ["x", "y", "z"];
            let mut head: Vec<String> = Vec::new();
            head.extend(axes[..n].iter().map(|a| format!("a_{a}")));
            head.extend(axes[..n].iter().map(|a| format!("u_{a}")));
            head.extend(["r_eval".into(), "m".into()]);
            head.extend((1..n).map(|i| format!("kappa_{i}")));
            head.extend(["q_min".into(), "q_asymmetry".into()]);
            let mut out = head.join(",") + "\n";
            for p in &lifted.points {
                let mut row: Vec<String> = p.a.iter().chain(&p.u).map(|&x| csv_float(x)).collect();
                row.push(csv_float(p.r_src));
                row.push(p.tangent_dim.to_string());
                row.extend(p.kappa.iter().map(|k| match k {
                    ExtReal::Finite(x) => csv_float(*x),
                    ExtReal::Infinite => "inf".into(),
                }));
                row.push(p.q_min.map(csv_float).unwrap_or_default());
                row.push(csv_float(p.q_asymmetry));
                out += &(row.join(",") + "\n");
            }
            out
        }
        Command::Bundle => {
            let mut run = sample_bundle(scene, &ctx.bundle_config(cfg), tols)?;
            assign_strata(scene, &mut run.points, &strata_cfg, tols)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, n, &run.points).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Command::Measures => {
            let ccfg = ctx.check_config(cfg);
            let run = sample_bundle(scene, &ccfg.bundle, tols)?;
            let rows = three_way(scene, &run, ccfg.steiner_grid, cfg.radii.as_deref())?;
            let mut ests = Vec::new();
            for m in select_m(cfg, n) {
                for other in &rows[m][1..] {
                    let (gap, allowed) = agree(&rows[m][0], other);
                    passed &= gap <= allowed;
                }
                ests.extend(rows[m].iter().cloned());
            }
            to_json(&records(&ctx, cfg, &ests))
        }
        Command::Steiner => {
            let radii = match &cfg.radii {
                Some(r) => r.clone(),
                None => crate::checks::default_radii(scene)
                    .ok_or_else(|| Error::Unsupported("Steiner fit needs a scene of known positive reach".into()))?,
            };
            let ests: Vec<MeasureEstimate> = steiner_fit(scene, &radii, ctx.check_config(cfg).steiner_grid)?
                .into_iter()
                .filter(|e| cfg.m.is_none_or(|m| m == e.m))
                .collect();
            to_json(&records(&ctx, cfg, &ests))
        }
        Command::Strata => {
            let run = sample_bundle(scene, &ctx.bundle_config(cfg), tols)?;
            let mut bases: Vec<Vec<f64>> = run.points.iter().map(|p| p.a.clone()).collect();
            bases.dedup();
            let axes = ["x", "y", "z"];
            let mut head: Vec<String> = axes[..n].iter().map(|a| format!("a_{a}")).collect();
            head.extend(["m".into(), "dis_dim".into(), "confidence".into()]);
            let mut out = head.join(",") + "\n";
            for (i, a) in bases.iter().enumerate() {
                let l = classify_stratum(scene, &nalgebra::DVector::from_column_slice(a), &strata_cfg, i as u64, tols)?;
                let mut row: Vec<String> = a.iter().map(|&x| csv_float(x)).collect();
                row.extend([l.m.to_string(), l.dis_dim.to_string(), csv_float(l.confidence)]);
                out += &(row.join(",") + "\n");
            }
            out
        }
        Command::Coarea => {
            let mut run = sample_bundle(scene, &ctx.bundle_config(cfg), tols)?;
            assign_strata(scene, &mut run.points, &strata_cfg, tols)?;
            let results: Vec<_> = select_m(cfg, n)
                .into_iter()
                .map(|m| coarea_check(scene, &run.points, m, |_, _| 1.0, &FibreConfig::default()))
                .collect();
            let total = run.total_weight();
            passed = results.iter().all(|c| c.lhs.max(c.rhs) <= 1e-3 * total || c.gap <= 0.02);
            to_json(&results)
        }
        Command::Checks => {
            let checks = run_checks(scene, &ctx.check_config(cfg), tols)?;
            passed = checks.iter().all(|c| c.pass);
            #[derive(Serialize)]
            struct Report<'a> {
                scene: &'a str,
                config_hash: &'a str,
                seed: u64,
                passed: bool,
                checks: &'a [crate::checks::Check],
            }
            to_json(&Report { scene: &ctx.scene_name, config_hash: &ctx.hash, seed: cfg.seed, passed, checks: &checks })
        }
    };
    Ok(Outcome { report, passed })
}

/// Parses arguments, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = std::env::var("CURVMEAS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("curvmeas: {e}");
            return EXIT_CONFIG;
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.report),
        None => std::io::stdout().write_all(outcome.report.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("curvmeas: {e}");
        return EXIT_CONFIG;
    }
    if outcome.passed {
        EXIT_OK
    } else {
        eprintln!("curvmeas: validation failed");
        EXIT_VALIDATION
    }
}
