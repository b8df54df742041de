use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use varifold_harness::experiments::run;
use varifold_harness::output::summary_json;
use varifold_harness::stats::log_log_slope;
use varifold_harness::{emit_results, ExperimentConfig, ExperimentKind, OutputPaths, Variant};

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn small(kind_seed: u64) -> ExperimentConfig {
    ExperimentConfig { n_grid: vec![200, 400], trials: 3, seed: kind_seed, ..Default::default() }
}

#[test]
fn summary_round_trips_its_config() {
    let cfg = ExperimentConfig { variant: Variant::V, ..small(4) };
    let result = run(ExperimentKind::Rate, &cfg).unwrap();
    let paths = OutputPaths::in_dir(&tmp("round_trip"), "rate");
    emit_results(&result, &paths).unwrap();
    assert_eq!(ExperimentConfig::load(&paths.summary_json).unwrap(), cfg);

    let rows = fs::read_to_string(&paths.trials_csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + cfg.trials * cfg.n_grid.len());
    assert!(rows.starts_with("n,trial,stream,delta,value,aux"));
}

#[test]
fn summary_without_timestamp_is_reproducible() {
    let cfg = small(9);
    let a = summary_json(&run(ExperimentKind::Measure, &cfg).unwrap(), false).unwrap();
    let b = summary_json(&run(ExperimentKind::Measure, &cfg).unwrap(), false).unwrap();
    assert_eq!(a, b);
    assert!(!a.contains("generated_at") && !a.contains("\"records\""));
}

#[test]
fn single_size_has_no_slope() {
    let cfg = ExperimentConfig { n_grid: vec![300], trials: 2, ..Default::default() };
    let r = run(ExperimentKind::Tangent, &cfg).unwrap();
    assert_eq!(r.grid.len(), 1);
    assert!(r.slope.is_none() && r.slope_ci.is_none());
}

#[test]
fn seeds_change_the_trials() {
    let a = run(ExperimentKind::Rate, &small(1)).unwrap();
    let b = run(ExperimentKind::Rate, &small(2)).unwrap();
    assert_ne!(a.records[0].value, b.records[0].value);
}

#[test]
fn fluct_delta_grid_fits_against_delta() {
    let cfg = ExperimentConfig {
        n_grid: vec![2000],
        trials: 30,
        delta_grid: Some(vec![0.1, 0.2, 0.4]),
        ..Default::default()
    };
    let r = run(ExperimentKind::Fluct, &cfg).unwrap();
    assert_eq!(r.slope_axis, "delta");
    assert_eq!(r.grid.len(), 3);
    // sd ~ (N δ)^{-1/2}
    assert!((r.slope.unwrap() + 0.5).abs() < 0.3, "{:?}", r.slope);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        ExperimentConfig { shape: "torus".into(), ..small(1) },
        ExperimentConfig { ball: Some("0,0".into()), ..small(1) },
        ExperimentConfig { ball: Some("0,0,0,1".into()), ..small(1) },
        ExperimentConfig { h: Some(1.0), ..small(1) },
    ] {
        assert!(run(ExperimentKind::Rate, &cfg).is_err(), "{cfg:?}");
    }
}

proptest! {
    #[test]
    fn slope_recovers_power_laws(c in 0.01f64..100.0, p in -2.0f64..2.0, n in 2usize..8) {
        let x: Vec<f64> = (0..n).map(|k| 250.0 * 2f64.powi(k as i32)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        prop_assert!((log_log_slope(&x, &y).unwrap() - p).abs() < 1e-9);
    }
}
