//! Library-level runs through the file layer.

use proptest::prelude::*;

use invasion::io::{execute_run, list_snapshots, load_run_config, read_field_csv, read_table, RunManifest};
use invasion::params::{parse_config_str, InitKind, Params, Preset, RightBoundary};
use invasion::stepper::{run, Model};
use invasion::ReproductionMethod;

fn tiny() -> Params {
    Params {
        x_max: 80.0,
        theta_max: 1.0 + 2.0 / 3.0 * 14.0,
        t_end: 3.0,
        output_times: vec![1.0, 2.0],
        diagnostic_dt: 0.5,
        ..Params::default()
    }
}

#[test]
fn identical_manifests_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = RunManifest::new(tiny(), InitKind::Gaussian, ReproductionMethod::Fast, a.path());
    let mb = RunManifest::new(tiny(), InitKind::Gaussian, ReproductionMethod::Fast, b.path());
    assert_eq!(ma.hash, mb.hash);
    execute_run(&ma, false).unwrap();
    execute_run(&mb, false).unwrap();
    for name in ["front.csv", "rho.csv", "fit.json", "f_t3.csv", "config.txt"] {
        assert_eq!(
            std::fs::read(ma.path(name)).unwrap(),
            std::fs::read(mb.path(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn files_agree_with_in_memory_run() {
    let root = tempfile::tempdir().unwrap();
    let m = RunManifest::new(tiny(), InitKind::Dirac, ReproductionMethod::Fast, root.path());
    let summary = execute_run(&m, false).unwrap();
    assert_eq!(summary.snapshot_times, vec![1.0, 2.0, 3.0]);

    let (params, init) = load_run_config(&m.dir).unwrap();
    assert_eq!((params, init), (tiny(), InitKind::Dirac));

    let model = Model::new(tiny(), ReproductionMethod::Fast).unwrap();
    let out = run(&model, InitKind::Dirac).unwrap();
    let snaps = list_snapshots(&m.dir).unwrap();
    assert_eq!(snaps.len(), out.snapshots.len());
    for ((t, path), snap) in snaps.iter().zip(&out.snapshots) {
        assert!((t - snap.time).abs() < 1e-9);
        let (xs, thetas, values) = read_field_csv(path).unwrap();
        assert_eq!(xs, model.grid().xs);
        assert_eq!(thetas, model.grid().thetas);
        assert_eq!(values, snap.field.values);
    }
    let front = read_table(&m.path("front.csv")).unwrap();
    let xs = front.column("X_num").unwrap();
    let want: Vec<f64> = out.records.iter().map(|r| r.x_num).collect();
    assert_eq!(xs, want);
}

#[test]
fn brute_and_fast_runs_agree() {
    let fast = run(&Model::new(tiny(), ReproductionMethod::Fast).unwrap(), InitKind::Gaussian).unwrap();
    let brute = run(&Model::new(tiny(), ReproductionMethod::BruteForce).unwrap(), InitKind::Gaussian).unwrap();
    let scale = brute.final_state.field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in fast.final_state.field.values.iter().zip(&brute.final_state.field.values) {
        assert!((a - b).abs() <= 1e-10 * scale);
    }
}

#[test]
fn every_preset_survives_the_config_round_trip() {
    for preset in Preset::ALL {
        let (p, init) = preset.build();
        let text = p.to_config_string(init);
        assert_eq!(parse_config_str(&text, "round-trip", Preset::Paper.build()).unwrap(), (p, init));
    }
}

proptest! {
    #[test]
    fn config_round_trip(
        r in 0.01..10.0f64,
        lambda2 in 0.01..4.0f64,
        dt in 1e-4..0.03f64,
        t_end in 0.0..500.0f64,
        times in proptest::collection::btree_set(0u32..50_000, 0..5),
        neumann in any::<bool>(),
        dirac in any::<bool>(),
    ) {
        let p = Params {
            r,
            lambda2,
            dt,
            t_end,
            output_times: times.into_iter().map(|t| f64::from(t) / 100.0).collect(),
            right_boundary: if neumann { RightBoundary::Neumann } else { RightBoundary::Dirichlet },
            ..Params::default()
        };
        let init = if dirac { InitKind::Dirac } else { InitKind::Gaussian };
        let back = parse_config_str(&p.to_config_string(init), "round-trip", Preset::Paper.build()).unwrap();
        prop_assert_eq!(back, (p, init));
    }
}
