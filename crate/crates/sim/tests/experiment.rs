use safety_inspector::output::{
    read_csv, CurveRow, ReplicationRow, SweepRow, TestingTimeRow, TraceRow,
};
use safety_inspector::{
    run_experiment, sweep, AlgorithmSpec, ArmLaw, ExperimentSpec, Grid, SimError,
};

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        arms: 25,
        replications: 5,
        horizon: 20_000,
        checkpoints: 50,
        ..ExperimentSpec::transient_desk()
    }
}

#[test]
fn single_test_demo_discards_every_arm_once() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        output: Some(tmp.path().to_owned()),
        ..ExperimentSpec::single_test_demo()
    };
    let results = run_experiment(&spec).unwrap();
    let rep = &results.points[0].replications[0];
    assert!(rep.exhausted);
    assert!(rep.arms.iter().all(|a| a.discarded_at.is_some()));

    let rows: Vec<TraceRow> = read_csv(&tmp.path().join("trace.csv")).unwrap();
    let log_a = (1.0f64 / 0.05).ln();
    for arm in 0..3 {
        let arm_rows: Vec<&TraceRow> = rows.iter().filter(|r| r.arm == arm).collect();
        let crossings: Vec<usize> = arm_rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.log_lik.unwrap() >= log_a)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(crossings, vec![arm_rows.len() - 1], "arm {arm}");
        assert_eq!(arm_rows.last().unwrap().discarded, 1);
        assert_eq!(
            arm_rows.iter().map(|r| u32::from(r.discarded)).sum::<u32>(),
            1
        );
        assert!(arm_rows.windows(2).all(|w| w[1].pull == w[0].pull + 1));
    }
}

#[test]
fn csv_round_trip_reproduces_aggregates() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        output: Some(tmp.path().to_owned()),
        ..small_spec()
    };
    let results = run_experiment(&spec).unwrap();

    let reps: Vec<ReplicationRow> = read_csv(&tmp.path().join("replications.csv")).unwrap();
    let arms: Vec<TestingTimeRow> = read_csv(&tmp.path().join("testing_times.csv")).unwrap();
    let sweep_rows: Vec<SweepRow> = read_csv(&tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(reps.len(), results.points.len() * spec.replications);
    assert_eq!(arms.len(), reps.len() * spec.arms);

    for (p, row) in results.points.iter().zip(&sweep_rows) {
        let mine: Vec<&ReplicationRow> = reps.iter().filter(|r| r.alpha == p.alpha).collect();
        let nh: Vec<f64> = mine.iter().map(|r| r.nhandicap_inf).collect();
        let nh_mean = nh.iter().sum::<f64>() / nh.len() as f64;
        assert_eq!(nh_mean, p.nhandicap_inf.mean);
        assert_eq!(row.nhandicap_inf, p.nhandicap_inf.mean);

        let times: Vec<u64> = arms
            .iter()
            .filter(|a| a.alpha == p.alpha && a.class == "unsafe")
            .filter_map(|a| a.discarded_at)
            .collect();
        assert_eq!(times, p.testing_times);
        let mean = times.iter().map(|&t| t as f64).sum::<f64>() / times.len() as f64;
        assert_eq!(Some(mean), p.testing_time_mean);
        assert_eq!(row.testing_time_mean, p.testing_time_mean);
    }
}

#[test]
fn flawless_inspector_has_zero_handicap_on_safe_arms() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        arms: 10,
        arm_law: ArmLaw::Explicit(vec![1.0; 10]),
        algorithm: AlgorithmSpec::Flawless,
        mu: None,
        epsilon: None,
        alpha: None,
        horizon: 1_000,
        output: Some(tmp.path().to_owned()),
        ..small_spec()
    };
    run_experiment(&spec).unwrap();
    let rows: Vec<CurveRow> = read_csv(&tmp.path().join("handicap_curve.csv")).unwrap();
    assert!(!rows.is_empty());
    assert!(rows
        .iter()
        .all(|r| r.mean == Some(0.0) && r.alpha.is_none()));
    let rho: Vec<CurveRow> = read_csv(&tmp.path().join("rho_curve.csv")).unwrap();
    assert!(rho.iter().all(|r| r.mean == Some(1.0)));
}

#[test]
fn zero_replications_is_a_config_error() {
    let spec = ExperimentSpec {
        replications: 0,
        ..small_spec()
    };
    let err = run_experiment(&spec).unwrap_err();
    assert!(matches!(err, SimError::Config(_)), "{err}");
    assert!(err.is_config());
}

#[test]
fn invalid_grid_point_is_a_config_error() {
    let spec = ExperimentSpec {
        mu: Some(Grid::from(0.99)),
        epsilon: Some(Grid::from(vec![0.005, 0.02])),
        ..small_spec()
    };
    assert!(run_experiment(&spec).unwrap_err().is_config());
}

#[test]
fn single_point_sweep_matches_experiment() {
    let spec = ExperimentSpec {
        alpha: Some(Grid::from(0.1)),
        ..small_spec()
    };
    let a = sweep(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.points, b.points);
    let flawless = ExperimentSpec {
        algorithm: AlgorithmSpec::Flawless,
        ..spec
    };
    assert!(sweep(&flawless).unwrap_err().is_config());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = small_spec();
    let one = run_experiment(&ExperimentSpec {
        workers: Some(1),
        ..spec.clone()
    })
    .unwrap();
    let four = run_experiment(&ExperimentSpec {
        workers: Some(4),
        ..spec
    })
    .unwrap();
    assert_eq!(one.points, four.points);
}

#[test]
fn grid_points_share_arm_draws_within_a_replication() {
    let results = run_experiment(&small_spec()).unwrap();
    let means = |i: usize, r: usize| -> Vec<f64> {
        results.points[i].replications[r]
            .arms
            .iter()
            .map(|a| a.mean)
            .collect()
    };
    for r in 0..small_spec().replications {
        for i in 1..results.points.len() {
            assert_eq!(means(0, r), means(i, r));
        }
    }
    assert_ne!(means(0, 0), means(0, 1));
}

#[test]
fn curves_respect_replication_envelope() {
    let results = run_experiment(&small_spec()).unwrap();
    for p in &results.points {
        for (i, s) in p.nhandicap.iter().enumerate() {
            assert!(s.min <= s.mean && s.mean <= s.max);
            let values: Vec<f64> = p
                .replications
                .iter()
                .map(|r| r.curve[i].handicap as f64 / 25.0)
                .collect();
            assert_eq!(s.min, values.iter().cloned().fold(f64::INFINITY, f64::min));
            if i > 0 {
                assert!(s.mean >= p.nhandicap[i - 1].mean);
            }
        }
        for w in p.rho.windows(2) {
            assert!(w[1].unwrap().mean <= w[0].unwrap().mean);
        }
    }
}

#[test]
fn safe_arms_keep_safety_ratio_above_one_minus_alpha() {
    let spec = ExperimentSpec {
        arms: 40,
        arm_law: ArmLaw::Uniform { lo: 0.95, hi: 1.0 },
        alpha: Some(Grid::from(0.1)),
        replications: 40,
        horizon: 50_000,
        master_seed: 11,
        ..ExperimentSpec::transient_desk()
    };
    let results = run_experiment(&spec).unwrap();
    let rho = results.points[0].rho_inf.unwrap();
    assert!(rho.mean >= 0.9 - 3.0 * rho.stderr, "{rho:?}");
}

#[test]
fn config_file_parses_and_rejects_unknown_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("spec.json");
    std::fs::write(
        &path,
        r#"{"arms": 4, "arm_law": {"explicit": [0.8, 0.85, 0.95, 1.0]},
            "mu": 0.9, "epsilon": 0.05, "alpha": [0.05, 0.1],
            "replications": 2, "horizon": 500, "master_seed": 3,
            "algorithm": {"filtered": {"policy": "greedy"}}}"#,
    )
    .unwrap();
    let spec = ExperimentSpec::load(&path).unwrap();
    assert_eq!(spec.grid_points().unwrap().len(), 2);
    assert_eq!(run_experiment(&spec).unwrap().points.len(), 2);

    std::fs::write(&path, r#"{"arms": 4, "colour": "red"}"#).unwrap();
    assert!(matches!(
        ExperimentSpec::load(&path),
        Err(SimError::ConfigParse { .. })
    ));
    assert!(matches!(
        ExperimentSpec::load(&tmp.path().join("missing.json")),
        Err(SimError::ConfigRead { .. })
    ));
}
