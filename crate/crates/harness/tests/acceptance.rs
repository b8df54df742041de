//! End-to-end acceptance checks. Every check prints one `PASS`/`FAIL` line.
//!
//! A `FAIL` is tolerated only when it matches a known deviation listed in
//! `KNOWN_DEVIATIONS`, together with the condition the observed failure must
//! satisfy. Anything else, including a known deviation that starts passing
//! or fails differently, fails the test.

use std::f64::consts::TAU;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use varifold_core::estimators::{covariance_matrix, projector_truncate, EstimatorConfig};
use varifold_core::geometry::flat_plane_quadrature;
use varifold_core::kernels::{
    normalization_eta, normalization_eta_quadrature, normalization_phi, normalization_phi_quadrature,
};
use varifold_core::metrics::{bl_distance, bl_distance_localized, lp_oracle, Ball, FlatMetricProblem};
use varifold_core::sampling::stream_rng;
use varifold_core::{DiscreteMeasure, KernelKind, KernelProfile, ShapeModel, SymMatrix};
use varifold_harness::experiments::run;
use varifold_harness::{emit_results, ExperimentConfig, ExperimentKind, OutputPaths, RateResult};

const N_GRID: [usize; 7] = [250, 500, 1000, 2000, 4000, 8000, 16000];

struct Outcome {
    criterion: u32,
    pass: bool,
    detail: String,
}

/// Criteria whose target is not reached, with the shape the observed
/// failure is expected to have.
const KNOWN_DEVIATIONS: &[(u32, &str)] = &[
    (7, "β decays faster than N^{-1/3}: slope below the band, medians monotone"),
    (8, "β decays faster than N^{-1/3}: slope below the band, mass within 2%"),
];

fn check(outcome: Outcome, deviation_holds: impl FnOnce() -> bool) {
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {}: {}", outcome.criterion, outcome.detail);
    let known = KNOWN_DEVIATIONS.iter().find(|(c, _)| *c == outcome.criterion);
    match (outcome.pass, known) {
        (true, None) => {}
        (true, Some((_, why))) => panic!("criterion {} now passes; drop the known deviation ({why})", outcome.criterion),
        (false, None) => panic!("criterion {} failed: {}", outcome.criterion, outcome.detail),
        (false, Some((_, why))) => {
            assert!(deviation_holds(), "criterion {} failed unexpectedly: {}", outcome.criterion, outcome.detail);
            println!("     known deviation: {why}");
        }
    }
}

fn within(slope: Option<f64>, target: f64, tol: f64) -> bool {
    slope.is_some_and(|s| (s - target).abs() <= tol)
}

fn fmt_slope(r: &RateResult) -> String {
    match (r.slope, r.slope_ci) {
        (Some(s), Some((lo, hi))) => format!("slope {s:.3} [{lo:.3}, {hi:.3}]"),
        (Some(s), None) => format!("slope {s:.3}"),
        _ => "slope undefined".into(),
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn experiment(kind: ExperimentKind, shape: &str) -> RateResult {
    let cfg = ExperimentConfig { shape: shape.into(), n_grid: N_GRID.to_vec(), ..Default::default() };
    run(kind, &cfg).unwrap()
}

fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.5..1.5);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

fn random_measure<R: Rng>(rng: &mut R, n: usize, spread: f64) -> DiscreteMeasure {
    let pts = (0..2 * n).map(|_| rng.random_range(-spread..spread)).collect();
    let w = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    DiscreteMeasure::new(2, pts, w).unwrap()
}

#[test]
fn criterion_01_flat_plane_identity() {
    let start = Instant::now();
    let mut rng = stream_rng(1, 0);
    let r = 0.1;
    let mut worst: f64 = 0.0;
    for (d, n) in [(1, 2), (2, 3)] {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let plane = projector_truncate(&random_symmetric(&mut rng, n), d).unwrap();
        let quad = flat_plane_quadrature(d, &x, &plane, r, r / 500.0).unwrap();
        let cfg = EstimatorConfig::triangular(d, r, r, 0.5).unwrap();
        let sigma = covariance_matrix(&quad, &x, r, &cfg);
        worst = worst.max(sigma.sub(&plane).op_norm());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        Outcome { criterion: 1, pass: worst <= 2e-3, detail: format!("max ‖Σ_r − Π‖ = {worst:.2e} in {secs:.1}s") },
        || false,
    );
}

#[test]
fn criterion_02_normalization_constants() {
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        let eta = KernelProfile::triangular(KernelKind::Density);
        let phi = KernelProfile::triangular(KernelKind::Covariance);
        let pairs = [
            (normalization_eta(&eta, d).unwrap(), normalization_eta_quadrature(&eta, d).unwrap()),
            (normalization_phi(&phi, d).unwrap(), normalization_phi_quadrature(&phi, d).unwrap()),
        ];
        for (closed, quad) in pairs {
            worst = worst.max(((closed - quad) / closed).abs());
        }
    }
    check(Outcome { criterion: 2, pass: worst <= 1e-10, detail: format!("max relative error {worst:.1e}") }, || false);
}

#[test]
fn criterion_03_truncation_optimality() {
    let mut rng = stream_rng(3, 0);
    let mut violations = 0;
    for k in 0..100 {
        let n = 2 + k % 3;
        let d = 1 + k % (n - 1);
        let sigma = random_symmetric(&mut rng, n);
        let best = sigma.sub(&projector_truncate(&sigma, d).unwrap()).op_norm();
        for _ in 0..100 {
            let other = projector_truncate(&random_symmetric(&mut rng, n), d).unwrap();
            if best > sigma.sub(&other).op_norm() + 1e-12 {
                violations += 1;
            }
        }
    }
    check(Outcome { criterion: 3, pass: violations == 0, detail: format!("{violations} violations in 10000 pairs") }, || {
        false
    });
}

#[test]
fn criterion_04_flow_matches_lp() {
    let mut rng = stream_rng(4, 0);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let spread = [0.3, 1.0, 5.0][k % 3];
        let na = rng.random_range(1..=6);
        let nb = rng.random_range(1..=6);
        let a = random_measure(&mut rng, na, spread);
        let b = random_measure(&mut rng, nb, spread);
        let mut p = FlatMetricProblem::measures(a, b).unwrap();
        let (flow, lp) = if k % 2 == 0 {
            (bl_distance(&p).unwrap(), lp_oracle(&p, false).unwrap())
        } else {
            let c = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            p = p.with_ball(Ball::new(c, rng.random_range(0.2..3.0)).unwrap()).unwrap();
            (bl_distance_localized(&p).unwrap(), lp_oracle(&p, true).unwrap())
        };
        worst = worst.max((flow - lp).abs());
    }
    check(Outcome { criterion: 4, pass: worst <= 1e-6, detail: format!("max |flow − LP| = {worst:.1e} over 200") }, || {
        false
    });
}

#[test]
fn criterion_05_metric_axioms() {
    let mut rng = stream_rng(5, 0);
    let mut failures = Vec::new();
    for k in 0..500 {
        let spread = if k % 2 == 0 { 0.5 } else { 3.0 };
        let ms: Vec<DiscreteMeasure> = (0..3)
            .map(|_| {
                let n = rng.random_range(1..=5);
                random_measure(&mut rng, n, spread)
            })
            .collect();
        let beta = |a: &DiscreteMeasure, b: &DiscreteMeasure| {
            bl_distance(&FlatMetricProblem::measures(a.clone(), b.clone()).unwrap()).unwrap()
        };
        let (ab, bc, ac) = (beta(&ms[0], &ms[1]), beta(&ms[1], &ms[2]), beta(&ms[0], &ms[2]));
        if ac > ab + bc + 1e-9 {
            failures.push(format!("triangle {k}"));
        }
        if (ab - beta(&ms[1], &ms[0])).abs() > 1e-9 || beta(&ms[0], &ms[0]).abs() > 1e-9 || ab < 0.0 {
            failures.push(format!("symmetry/identity {k}"));
        }
        let ball = Ball::new(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(0.1..2.0))
            .unwrap();
        let local =
            bl_distance_localized(&FlatMetricProblem::measures(ms[0].clone(), ms[1].clone()).unwrap().with_ball(ball).unwrap())
                .unwrap();
        if local > ab + 1e-9 {
            failures.push(format!("β_B > β {k}"));
        }
    }
    check(
        Outcome {
            criterion: 5,
            pass: failures.is_empty(),
            detail: format!("{} violations over 500 instances {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
        },
        || false,
    );
}

#[test]
fn criterion_06_fluctuation_exponent() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        delta: Some(0.2),
        n_grid: vec![500, 1000, 2000, 4000, 8000, 16000, 32000],
        trials: 400,
        ..Default::default()
    };
    let r = run(ExperimentKind::Fluct, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        Outcome {
            criterion: 6,
            pass: within(r.slope, -0.5, 0.1),
            detail: format!("sd(θ) {}, target −0.5 ± 0.1, {secs:.0}s", fmt_slope(&r)),
        },
        || false,
    );
}

#[test]
fn criterion_07_main_rate() {
    let start = Instant::now();
    let r = experiment(ExperimentKind::Rate, "circle");
    let secs = start.elapsed().as_secs_f64();
    let monotone = strictly_decreasing(&r.medians());
    let target = -1.0 / 3.0;
    check(
        Outcome {
            criterion: 7,
            pass: within(r.slope, target, 0.15) && monotone,
            detail: format!(
                "mean β {}, target −1/3 ± 0.15, medians monotone: {monotone}, {secs:.0}s",
                fmt_slope(&r)
            ),
        },
        || monotone && r.slope.is_some_and(|s| s < target - 0.15),
    );
}

#[test]
fn criterion_08_measure_rate() {
    let start = Instant::now();
    let r = experiment(ExperimentKind::Measure, "circle");
    let secs = start.elapsed().as_secs_f64();
    let mass = r.grid.last().and_then(|g| g.aux_median).unwrap();
    let mass_ok = ((mass - TAU) / TAU).abs() <= 0.02;
    let target = -1.0 / 3.0;
    check(
        Outcome {
            criterion: 8,
            pass: within(r.slope, target, 0.15) && mass_ok,
            detail: format!(
                "mean β {}, target −1/3 ± 0.15, median mass at N=16000 {mass:.4} (2π = {TAU:.4}), {secs:.0}s",
                fmt_slope(&r)
            ),
        },
        || mass_ok && r.slope.is_some_and(|s| s < target - 0.15),
    );
}

#[test]
fn criterion_09_tangent_rate() {
    let start = Instant::now();
    let circle = experiment(ExperimentKind::Tangent, "circle");
    let sphere = experiment(ExperimentKind::Tangent, "sphere");
    let secs = start.elapsed().as_secs_f64();
    check(
        Outcome {
            criterion: 9,
            pass: within(circle.slope, -1.0 / 3.0, 0.15) && within(sphere.slope, -0.25, 0.15),
            detail: format!(
                "circle {} (target −1/3 ± 0.15), sphere {} (target −1/4 ± 0.15), {secs:.0}s",
                fmt_slope(&circle),
                fmt_slope(&sphere)
            ),
        },
        || false,
    );
}

#[test]
fn criterion_10_singular_set_robustness() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for shape in ["square_boundary", "cross_segments"] {
        let rate = experiment(ExperimentKind::Rate, shape);
        let tangent = experiment(ExperimentKind::Tangent, shape);
        let decreasing = strictly_decreasing(&rate.medians());
        let slope_ok = within(tangent.slope, -1.0 / 3.0, 0.2);
        let dominated = tangent.grid.iter().all(|g| g.aux_mean.is_some_and(|u| u > g.mean));
        pass &= decreasing && slope_ok && dominated;
        details.push(format!(
            "{shape}: β medians decreasing {decreasing}, restricted tangent {}, unrestricted > restricted {dominated}",
            fmt_slope(&tangent)
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    check(Outcome { criterion: 10, pass, detail: format!("{}; {secs:.0}s", details.join("; ")) }, || false);
}

#[test]
fn criterion_11_offset_measure_scaling() {
    let shape = ShapeModel::from_names("square_boundary", "uniform").unwrap();
    let quad = shape.quadrature_varifold(1e-4).unwrap();
    let rho = [0.01, 0.02, 0.04, 0.08, 0.16];
    let mass: Vec<f64> = rho
        .iter()
        .map(|&r| (0..quad.len()).filter(|&i| shape.singular_distance(quad.point(i)) < r).map(|i| quad.weights()[i]).sum())
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = rho.iter().zip(&mass).map(|(r, m)| (r.ln(), m.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / 5.0, ly.iter().sum::<f64>() / 5.0);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    check(
        Outcome { criterion: 11, pass: (slope - 1.0).abs() <= 0.1, detail: format!("offset mass slope {slope:.4}") },
        || false,
    );
}

#[test]
fn criterion_12_determinism() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_determinism");
    let cfg = ExperimentConfig { n_grid: vec![250, 500], trials: 4, seed: 12, ..Default::default() };
    let mut identical = true;
    for kind in [ExperimentKind::Rate, ExperimentKind::Tangent] {
        let mut bytes = Vec::new();
        for (i, threads) in [1, 3].into_iter().enumerate() {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let result = pool.install(|| run(kind, &cfg)).unwrap();
            let paths = OutputPaths::in_dir(&dir, &format!("{kind:?}_{i}"));
            emit_results(&result, &paths).unwrap();
            bytes.push(fs::read(&paths.trials_csv).unwrap());
        }
        identical &= bytes[0] == bytes[1] && !bytes[0].is_empty();
    }
    check(
        Outcome { criterion: 12, pass: identical, detail: format!("trial CSVs byte-identical across runs: {identical}") },
        || false,
    );
}
